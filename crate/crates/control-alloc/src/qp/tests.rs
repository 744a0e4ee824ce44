use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::QpError;

/// Brute-force oracle: enumerate every subset of inequality rows as a
/// candidate active set, solve the corresponding KKT system, and keep the
/// best primal-and-dual feasible point. Independent of the solver path.
pub(crate) fn enumeration_oracle(
    h: &DMatrix<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    aineq: &DMatrix<f64>,
    bineq: &DVector<f64>,
) -> Option<(DVector<f64>, f64)> {
    let n = h.nrows();
    let p = aeq.nrows();
    let q = aineq.nrows();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0..(1u32 << q) {
        let subset: Vec<usize> = (0..q).filter(|i| mask >> i & 1 == 1).collect();
        let rows = p + subset.len();
        let mut c = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        if p > 0 {
            c.view_mut((0, 0), (p, n)).copy_from(aeq);
            b.rows_mut(0, p).copy_from(beq);
        }
        for (k, &i) in subset.iter().enumerate() {
            c.row_mut(p + k).copy_from(&aineq.row(i));
            b[p + k] = bineq[i];
        }
        let mut kkt = DMatrix::zeros(n + rows, n + rows);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        if rows > 0 {
            kkt.view_mut((n, 0), (rows, n)).copy_from(&c);
            kkt.view_mut((0, n), (n, rows)).copy_from(&c.transpose());
        }
        let mut rhs = DVector::zeros(n + rows);
        rhs.rows_mut(n, rows).copy_from(&b);
        let Some(sol) = kkt.full_piv_lu().solve(&rhs) else {
            continue;
        };
        let x = sol.rows(0, n).into_owned();
        let mult = sol.rows(n, rows).into_owned();

        // Primal feasibility over all constraints.
        if p > 0 && (aeq * &x - beq).amax() > 1e-7 {
            continue;
        }
        if q > 0 && (aineq * &x - bineq).max() > 1e-7 {
            continue;
        }
        // Dual feasibility on the subset.
        if subset.iter().enumerate().any(|(k, _)| mult[p + k] < -1e-7) {
            continue;
        }
        let objective = 0.5 * (&x.transpose() * h * &x)[(0, 0)];
        if best.as_ref().map_or(true, |(_, f)| objective < *f) {
            best = Some((x, objective));
        }
    }
    best
}

fn objective(h: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    0.5 * (&x.transpose() * h * x)[(0, 0)]
}

#[test]
fn min_norm_point_without_inequalities() {
    let h = DMatrix::identity(2, 2);
    let aeq = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let beq = DVector::from_element(1, 1.0);
    let (x, diag) = qp_solve(&h, &aeq, &beq, &DMatrix::zeros(0, 2), &DVector::zeros(0)).unwrap();
    assert_relative_eq!(x[0], 0.5, epsilon = 1e-12);
    assert_relative_eq!(x[1], 0.5, epsilon = 1e-12);
    assert!(diag.active_set.is_empty());
    assert!(diag.kkt_residual <= 1e-8 * 2.0);
}

/// Hand-derived KKT: equality multiplier -0.7, bound multiplier 0.4.
#[test]
fn bound_shifts_min_norm_point() {
    let h = DMatrix::identity(2, 2);
    let aeq = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let beq = DVector::from_element(1, 1.0);
    let aineq = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let bineq = DVector::from_element(1, 0.3);
    let (x, diag) = qp_solve(&h, &aeq, &beq, &aineq, &bineq).unwrap();
    assert_relative_eq!(x[0], 0.3, epsilon = 1e-9);
    assert_relative_eq!(x[1], 0.7, epsilon = 1e-9);
    assert_eq!(diag.active_set, vec![0]);
    assert_relative_eq!(diag.eq_multipliers[0], -0.7, epsilon = 1e-8);
    assert_relative_eq!(diag.ineq_multipliers[0], 0.4, epsilon = 1e-8);
    assert!(diag.kkt_residual <= 1e-8 * 2.0);
}

#[test]
fn origin_optimal_when_unconstrained_by_signs() {
    let h = DMatrix::identity(3, 3);
    let aineq = DMatrix::identity(3, 3);
    let bineq = DVector::from_element(3, 2.0);
    let (x, diag) = qp_solve(
        &h,
        &DMatrix::zeros(0, 3),
        &DVector::zeros(0),
        &aineq,
        &bineq,
    )
    .unwrap();
    assert!(x.amax() <= 1e-12);
    assert!(diag.active_set.is_empty());
}

#[test]
fn indefinite_hessian_rejected() {
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let err = qp_solve(
        &h,
        &DMatrix::zeros(0, 2),
        &DVector::zeros(0),
        &DMatrix::zeros(0, 2),
        &DVector::zeros(0),
    )
    .unwrap_err();
    assert!(matches!(err, QpError::NotPositiveDefinite));
}

#[test]
fn inconsistent_equalities_rejected() {
    let h = DMatrix::identity(2, 2);
    let aeq = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
    let beq = DVector::from_column_slice(&[0.0, 1.0]);
    let err = qp_solve(&h, &aeq, &beq, &DMatrix::zeros(0, 2), &DVector::zeros(0)).unwrap_err();
    assert!(matches!(err, QpError::InfeasibleEqualities { .. }));
}

#[test]
fn infeasible_inequalities_detected() {
    // x >= 1 and x <= 0 cannot hold together.
    let h = DMatrix::identity(1, 1);
    let aineq = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
    let bineq = DVector::from_column_slice(&[0.0, -1.0]);
    let err = qp_solve(
        &h,
        &DMatrix::zeros(0, 1),
        &DVector::zeros(0),
        &aineq,
        &bineq,
    )
    .unwrap_err();
    assert!(matches!(err, QpError::Infeasible { .. }));
}

#[test]
fn phase1_runs_when_min_norm_start_violates() {
    // Equality x0 + x1 = 2 with x0 <= 0.2: the equality minimizer (1, 1)
    // violates the bound, so a phase-1 restart is required.
    let h = DMatrix::identity(2, 2);
    let aeq = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let beq = DVector::from_element(1, 2.0);
    let aineq = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let bineq = DVector::from_element(1, 0.2);
    let (x, diag) = qp_solve(&h, &aeq, &beq, &aineq, &bineq).unwrap();
    assert!(diag.phase1_used);
    assert_relative_eq!(x[0], 0.2, epsilon = 1e-8);
    assert_relative_eq!(x[1], 1.8, epsilon = 1e-8);
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Random instances with a guaranteed-feasible construction: pick a witness
/// point, then set every inequality offset at or above its value there.
pub(crate) fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    q: usize,
) -> (
    DMatrix<f64>,
    DMatrix<f64>,
    DVector<f64>,
    DMatrix<f64>,
    DVector<f64>,
) {
    let h = random_spd(rng, n);
    let witness = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let aeq = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let beq = &aeq * &witness;
    let aineq = DMatrix::from_fn(q, n, |_, _| rng.random_range(-1.0..1.0));
    let slack = DVector::from_fn(q, |_, _| rng.random_range(0.0..1.5));
    let bineq = &aineq * &witness + slack;
    (h, aeq, beq, aineq, bineq)
}

#[test]
fn matches_enumeration_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tight = 0usize;
    for trial in 0..400 {
        let n = rng.random_range(1..=5);
        let p = rng.random_range(0..=2.min(n - 1));
        let q = rng.random_range(1..=6);
        let (h, aeq, beq, aineq, bineq) = random_instance(&mut rng, n, p, q);
        let (x, diag) = qp_solve(&h, &aeq, &beq, &aineq, &bineq)
            .unwrap_or_else(|e| panic!("trial {trial} failed: {e}"));
        let (_, oracle_obj) =
            enumeration_oracle(&h, &aeq, &beq, &aineq, &bineq).expect("feasible by construction");
        let diff = (objective(&h, &x) - oracle_obj).abs();
        assert!(
            diff <= 1e-8,
            "trial {trial}: objective gap {diff:.3e} (active {:?})",
            diag.active_set
        );
        assert!(
            diag.kkt_residual <= 1e-8 * (1.0 + beq.amax_or_zero()),
            "trial {trial}: kkt residual {:.3e}",
            diag.kkt_residual
        );
        for &i in &diag.active_set {
            assert!(diag.ineq_multipliers[i] >= -1e-8);
        }
        if !diag.active_set.is_empty() {
            tight += 1;
        }
    }
    // The mix must actually exercise the active-set machinery.
    assert!(tight > 100, "only {tight} constrained trials");
}

#[test]
fn warm_start_reproduces_cold_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (h, aeq, beq, aineq, bineq) = random_instance(&mut rng, 4, 1, 5);
        let (x_cold, diag) = qp_solve(&h, &aeq, &beq, &aineq, &bineq).unwrap();
        let opts = QpOptions {
            warm_start: diag.active_set.clone(),
            ..QpOptions::default()
        };
        let (x_warm, warm_diag) = qp_solve_with(&h, &aeq, &beq, &aineq, &bineq, &opts).unwrap();
        assert!((x_warm - &x_cold).amax() <= 1e-8);
        assert!(warm_diag.iterations <= diag.iterations);
    }
}
