//! Dense active-set solver for strictly convex quadratic programs
//!
//! ```text
//!     minimize    ½ xᵀ H x
//!     subject to  Aeq x  = beq
//!                 Aineq x ⪯ bineq
//! ```
//!
//! with H symmetric positive definite. The allocation pipeline guarantees a
//! nonempty feasible set by clipping the commanded moment first; when called
//! with inconsistent data the solver reports infeasibility instead.
//!
//! The method is a primal active set: start from a feasible point, treat a
//! working set of inequalities as equalities, solve the resulting KKT system
//! for a step, and either move until a new constraint blocks or drop a
//! working constraint with a negative multiplier. A feasible start comes
//! from the equality-constrained minimizer when that already satisfies the
//! inequalities, and otherwise from a single-slack phase-1 problem solved by
//! the same loop.

use nalgebra::{DMatrix, DVector};

use crate::error::QpError;

/// Tuning knobs for [`qp_solve_with`].
#[derive(Debug, Clone)]
pub struct QpOptions {
    /// Iteration cap; defaults to `10 (n + q)` when `None`.
    pub max_iterations: Option<usize>,
    /// Feasibility tolerance, scaled internally by the constraint magnitudes.
    pub feasibility_tol: f64,
    /// Working set to seed the solve with (indices into `Aineq` rows).
    pub warm_start: Vec<usize>,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            max_iterations: None,
            feasibility_tol: 1e-9,
            warm_start: Vec::new(),
        }
    }
}

/// Solve outcome metadata.
#[derive(Debug, Clone)]
pub struct QpDiagnostics {
    /// Inequality rows active at the solution.
    pub active_set: Vec<usize>,
    /// Active-set iterations spent (phases combined).
    pub iterations: usize,
    /// Max of stationarity, primal-feasibility, and complementarity residuals.
    pub kkt_residual: f64,
    /// Multipliers of the equality rows.
    pub eq_multipliers: DVector<f64>,
    /// Multipliers of all inequality rows (zero off the active set).
    pub ineq_multipliers: DVector<f64>,
    /// Whether a phase-1 subproblem was needed to find a feasible start.
    pub phase1_used: bool,
}

/// Solve with default options.
pub fn qp_solve(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    aineq: &DMatrix<f64>,
    bineq: &DVector<f64>,
) -> Result<(DVector<f64>, QpDiagnostics), QpError> {
    qp_solve_with(h, aeq, beq, aineq, bineq, &QpOptions::default())
}

pub fn qp_solve_with(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    aineq: &DMatrix<f64>,
    bineq: &DVector<f64>,
    opts: &QpOptions,
) -> Result<(DVector<f64>, QpDiagnostics), QpError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(QpError::Dimension(format!(
            "Hessian must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if aeq.nrows() != beq.len() || (aeq.nrows() > 0 && aeq.ncols() != n) {
        return Err(QpError::Dimension("equality block shape".into()));
    }
    if aineq.nrows() != bineq.len() || (aineq.nrows() > 0 && aineq.ncols() != n) {
        return Err(QpError::Dimension("inequality block shape".into()));
    }
    if h.clone().cholesky().is_none() {
        return Err(QpError::NotPositiveDefinite);
    }

    let q = aineq.nrows();
    let max_iterations = opts.max_iterations.unwrap_or(10 * (n + q).max(1));
    let feas_scale = 1.0 + bineq.amax_or_zero();
    let feas_tol = opts.feasibility_tol * feas_scale;

    // Equality-constrained minimizer.
    let x_eq = equality_minimizer(h, aeq, beq)?;
    let eq_residual = residual_inf(aeq, beq, &x_eq);
    if eq_residual > 1e-7 * (1.0 + beq.amax_or_zero()) {
        return Err(QpError::InfeasibleEqualities {
            residual: eq_residual,
        });
    }

    let mut phase1_used = false;
    let mut x0 = x_eq;
    let mut w0: Vec<usize> = Vec::new();

    // Warm start: solve the EQP for the suggested working set; accept when
    // the result is primal feasible.
    if !opts.warm_start.is_empty() {
        let mut warm: Vec<usize> = opts.warm_start.iter().copied().filter(|&i| i < q).collect();
        warm.sort_unstable();
        warm.dedup();
        if let Some(x_w) = eqp_point(h, aeq, beq, aineq, bineq, &warm) {
            if max_violation(aineq, bineq, &x_w) <= feas_tol
                && residual_inf(aeq, beq, &x_w) <= 1e-7 * (1.0 + beq.amax_or_zero())
            {
                x0 = x_w;
                w0 = warm;
            }
        }
    }

    if w0.is_empty() && max_violation(aineq, bineq, &x0) > feas_tol {
        let (x1, w1) = phase1(h, aeq, beq, aineq, bineq, feas_tol, max_iterations)?;
        x0 = x1;
        w0 = w1;
        phase1_used = true;
    }

    let (x, active, iterations) =
        active_set_loop(h, aeq, beq, aineq, bineq, x0, w0, feas_tol, max_iterations)?;

    // Multipliers at the solution, from the final KKT system.
    let (eq_mult, act_mult) = multipliers(h, aeq, aineq, &active, &x);
    let mut ineq_multipliers = DVector::zeros(q);
    for (&i, &m) in active.iter().zip(act_mult.iter()) {
        ineq_multipliers[i] = m;
    }

    let kkt_residual = kkt_residual(h, aeq, beq, aineq, bineq, &x, &eq_mult, &ineq_multipliers);

    Ok((
        x,
        QpDiagnostics {
            active_set: active,
            iterations,
            kkt_residual,
            eq_multipliers: eq_mult,
            ineq_multipliers,
            phase1_used,
        },
    ))
}

trait AmaxOrZero {
    fn amax_or_zero(&self) -> f64;
}

impl AmaxOrZero for DVector<f64> {
    fn amax_or_zero(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.amax()
        }
    }
}

fn residual_inf(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    (a * x - b).amax()
}

fn max_violation(aineq: &DMatrix<f64>, bineq: &DVector<f64>, x: &DVector<f64>) -> f64 {
    if aineq.nrows() == 0 {
        return 0.0;
    }
    (aineq * x - bineq).max()
}

/// argmin ½xᵀHx s.t. Aeq x = beq via the bordered KKT system. Falls back to
/// an SVD least-squares solve when the equality rows are dependent.
fn equality_minimizer(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
) -> Result<DVector<f64>, QpError> {
    let n = h.nrows();
    let p = aeq.nrows();
    if p == 0 {
        return Ok(DVector::zeros(n));
    }
    let mut kkt = DMatrix::zeros(n + p, n + p);
    kkt.view_mut((0, 0), (n, n)).copy_from(h);
    kkt.view_mut((n, 0), (p, n)).copy_from(aeq);
    kkt.view_mut((0, n), (n, p)).copy_from(&aeq.transpose());
    let mut rhs = DVector::zeros(n + p);
    rhs.rows_mut(n, p).copy_from(beq);

    let solution = kkt
        .clone()
        .full_piv_lu()
        .solve(&rhs)
        .or_else(|| kkt.svd(true, true).solve(&rhs, 1e-12).ok())
        .ok_or(QpError::InfeasibleEqualities { residual: f64::NAN })?;
    Ok(solution.rows(0, n).into_owned())
}

/// Solve the EQP that treats `working` as equalities; returns the point.
fn eqp_point(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    aineq: &DMatrix<f64>,
    bineq: &DVector<f64>,
    working: &[usize],
) -> Option<DVector<f64>> {
    let n = h.nrows();
    let p = aeq.nrows();
    let w = working.len();
    let rows = p + w;
    let mut c = DMatrix::zeros(rows, n);
    let mut b = DVector::zeros(rows);
    if p > 0 {
        c.view_mut((0, 0), (p, n)).copy_from(aeq);
        b.rows_mut(0, p).copy_from(beq);
    }
    for (k, &i) in working.iter().enumerate() {
        c.row_mut(p + k).copy_from(&aineq.row(i));
        b[p + k] = bineq[i];
    }
    let mut kkt = DMatrix::zeros(n + rows, n + rows);
    kkt.view_mut((0, 0), (n, n)).copy_from(h);
    kkt.view_mut((n, 0), (rows, n)).copy_from(&c);
    kkt.view_mut((0, n), (n, rows)).copy_from(&c.transpose());
    let mut rhs = DVector::zeros(n + rows);
    rhs.rows_mut(n, rows).copy_from(&b);
    let sol = kkt.full_piv_lu().solve(&rhs)?;
    Some(sol.rows(0, n).into_owned())
}

/// Multipliers for the final stationarity system `Hx + Aeqᵀν + A_Wᵀμ = 0`,
/// solved in the least-squares sense over (ν, μ).
fn multipliers(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    aineq: &DMatrix<f64>,
    active: &[usize],
    x: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let n = h.nrows();
    let p = aeq.nrows();
    let w = active.len();
    let g = h * x;
    if p + w == 0 {
        return (DVector::zeros(0), DVector::zeros(0));
    }
    let mut ct = DMatrix::zeros(n, p + w);
    if p > 0 {
        ct.view_mut((0, 0), (n, p)).copy_from(&aeq.transpose());
    }
    for (k, &i) in active.iter().enumerate() {
        ct.column_mut(p + k).copy_from(&aineq.row(i).transpose());
    }
    let lambda = ct
        .clone()
        .svd(true, true)
        .solve(&(-&g), 1e-12)
        .unwrap_or_else(|_| DVector::zeros(p + w));
    (
        lambda.rows(0, p).into_owned(),
        lambda.rows(p, w).into_owned(),
    )
}

#[allow(clippy::too_many_arguments)]
fn kkt_residual(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    aineq: &DMatrix<f64>,
    bineq: &DVector<f64>,
    x: &DVector<f64>,
    eq_mult: &DVector<f64>,
    ineq_mult: &DVector<f64>,
) -> f64 {
    let mut grad = h * x;
    if aeq.nrows() > 0 {
        grad += aeq.transpose() * eq_mult;
    }
    if aineq.nrows() > 0 {
        grad += aineq.transpose() * ineq_mult;
    }
    let stationarity = grad.amax_or_zero();
    let primal_eq = residual_inf(aeq, beq, x);
    let primal_in = max_violation(aineq, bineq, x).max(0.0);
    let complementarity = if aineq.nrows() == 0 {
        0.0
    } else {
        let slack = aineq * x - bineq;
        ineq_mult
            .iter()
            .zip(slack.iter())
            .map(|(m, s)| (m * s).abs())
            .fold(0.0, f64::max)
    };
    stationarity
        .max(primal_eq)
        .max(primal_in)
        .max(complementarity)
}

/// Single-slack phase 1: minimize ½δ‖x‖² + ½s² subject to the equalities and
/// `Aineq x − s·1 ⪯ bineq`, starting from the equality minimizer with `s`
/// above the worst violation.
///
/// The δ regularizer keeps the augmented Hessian positive definite but also
/// leaves a residual slack of order δ at the optimum, so the raw phase-1
/// point is not feasible to working precision. Instead its active set
/// identifies the blocking constraints: snapping exactly onto those rows
/// (an equality-only solve) recovers a feasible point. If the snap misses,
/// δ shrinks and the search repeats.
fn phase1(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    aineq: &DMatrix<f64>,
    bineq: &DVector<f64>,
    feas_tol: f64,
    max_iterations: usize,
) -> Result<(DVector<f64>, Vec<usize>), QpError> {
    let n = h.nrows();
    let p = aeq.nrows();
    let q = aineq.nrows();

    let mut aeq_aug = DMatrix::zeros(p, n + 1);
    if p > 0 {
        aeq_aug.view_mut((0, 0), (p, n)).copy_from(aeq);
    }
    let mut ain_aug = DMatrix::zeros(q, n + 1);
    ain_aug.view_mut((0, 0), (q, n)).copy_from(aineq);
    for i in 0..q {
        ain_aug[(i, n)] = -1.0;
    }

    let x_eq = equality_minimizer(h, aeq, beq)?;
    let viol = max_violation(aineq, bineq, &x_eq);
    let mut start = DVector::zeros(n + 1);
    start.rows_mut(0, n).copy_from(&x_eq);
    start[n] = viol.max(0.0) + 1.0;

    let eq_ok = |x: &DVector<f64>| residual_inf(aeq, beq, x) <= 1e-7 * (1.0 + beq.amax_or_zero());

    let mut delta = 1e-4 * (1.0 + h.diagonal().amax_or_zero());
    let mut best_violation = f64::INFINITY;
    for _attempt in 0..3 {
        let mut h_aug = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            h_aug[(i, i)] = delta;
        }
        h_aug[(n, n)] = 1.0;

        let (z, active, _) = active_set_loop(
            &h_aug,
            &aeq_aug,
            beq,
            &ain_aug,
            bineq,
            start.clone(),
            Vec::new(),
            feas_tol,
            max_iterations,
        )?;
        let x1 = z.rows(0, n).into_owned();

        // Snap exactly onto the identified active face.
        if !active.is_empty() {
            if let Some(x2) = eqp_point(h, aeq, beq, aineq, bineq, &active) {
                if max_violation(aineq, bineq, &x2) <= feas_tol && eq_ok(&x2) {
                    return Ok((x2, active));
                }
            }
        }
        let raw_violation = max_violation(aineq, bineq, &x1);
        if raw_violation <= feas_tol {
            return Ok((x1, Vec::new()));
        }
        best_violation = best_violation.min(raw_violation);
        start = z;
        delta *= 1e-3;
    }
    Err(QpError::Infeasible {
        violation: best_violation,
    })
}

/// Core primal active-set iteration. `x0` must be feasible; `w0` must index
/// constraints active at `x0`.
#[allow(clippy::too_many_arguments)]
fn active_set_loop(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    aineq: &DMatrix<f64>,
    bineq: &DVector<f64>,
    x0: DVector<f64>,
    w0: Vec<usize>,
    feas_tol: f64,
    max_iterations: usize,
) -> Result<(DVector<f64>, Vec<usize>, usize), QpError> {
    let n = h.nrows();
    let p = aeq.nrows();
    let q = aineq.nrows();
    let mut x = x0;
    let mut working = w0;

    let step_tol = 1e-11;
    let dual_tol = 1e-10 * (1.0 + (h * &x).amax_or_zero());

    for iteration in 1..=max_iterations {
        // KKT step for the current working set.
        let rows = p + working.len();
        let mut c = DMatrix::zeros(rows, n);
        let mut r = DVector::zeros(rows);
        if p > 0 {
            c.view_mut((0, 0), (p, n)).copy_from(aeq);
            r.rows_mut(0, p).copy_from(&(beq - aeq * &x));
        }
        for (k, &i) in working.iter().enumerate() {
            c.row_mut(p + k).copy_from(&aineq.row(i));
            r[p + k] = bineq[i] - aineq.row(i).dot(&x.transpose());
        }

        let mut kkt = DMatrix::zeros(n + rows, n + rows);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        if rows > 0 {
            kkt.view_mut((n, 0), (rows, n)).copy_from(&c);
            kkt.view_mut((0, n), (n, rows)).copy_from(&c.transpose());
        }
        let mut rhs = DVector::zeros(n + rows);
        rhs.rows_mut(0, n).copy_from(&(-(h * &x)));
        if rows > 0 {
            rhs.rows_mut(n, rows).copy_from(&r);
        }

        let sol = kkt
            .clone()
            .full_piv_lu()
            .solve(&rhs)
            .or_else(|| kkt.svd(true, true).solve(&rhs, 1e-12).ok())
            .ok_or_else(|| QpError::Stalled {
                iterations: iteration,
                last: x.clone(),
            })?;
        let step = sol.rows(0, n).into_owned();
        let lambda = sol.rows(n, rows).into_owned();

        let scale = 1.0 + x.amax_or_zero();
        if step.amax_or_zero() <= step_tol * scale {
            // Stationary on the working set; check multiplier signs.
            let (drop_k, worst) = working
                .iter()
                .enumerate()
                .map(|(k, _)| (k, lambda[p + k]))
                .fold((usize::MAX, -dual_tol), |acc, (k, m)| {
                    if m < acc.1 {
                        (k, m)
                    } else {
                        acc
                    }
                });
            if drop_k == usize::MAX {
                let _ = worst;
                return Ok((x, working, iteration));
            }
            working.remove(drop_k);
            continue;
        }

        // Ratio test against constraints outside the working set.
        let mut alpha = 1.0f64;
        let mut blocking: Option<usize> = None;
        for i in 0..q {
            if working.contains(&i) {
                continue;
            }
            let d = aineq.row(i).dot(&step.transpose());
            let row_scale = aineq.row(i).amax().max(1.0) * step.amax_or_zero().max(1.0);
            if d > 1e-13 * row_scale {
                let gap = bineq[i] - aineq.row(i).dot(&x.transpose());
                let a = (gap.max(-feas_tol) / d).max(0.0);
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }

        x += &step * alpha;
        if let Some(i) = blocking {
            working.push(i);
            working.sort_unstable();
        }
    }

    Err(QpError::Stalled {
        iterations: max_iterations,
        last: x,
    })
}

#[cfg(test)]
mod tests;
