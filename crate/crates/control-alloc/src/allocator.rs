//! Moment allocation: build the attainable moment set, clip infeasible
//! commands onto its boundary along their own direction, and solve the
//! resulting always-feasible quadratic program.
//!
//! Three modes differ in which limits shape the attainable set:
//!
//! * [`AllocMode::PositionOnly`] — position limits only.
//! * [`AllocMode::RatePaper`] — intersection of the position-limit image and
//!   the rate-limit image mapped through `A⁻¹`. The intersection of the two
//!   images can slightly overestimate the jointly attainable set, because a
//!   moment may be reachable by one `u` for positions and a different `u`
//!   for rates.
//! * [`AllocMode::RateExact`] — for diagonal `A`, intersect the limits in
//!   actuator space first (`U ∩ A⁻¹U̇` is itself a box) and image that box;
//!   every moment in this set is jointly feasible by construction.

use std::fmt;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::AllocError;
use crate::polytope::{convex_hull_3d, intersect, map_vertices, BoxLimits, PolytopeH, PolytopeV};
use crate::qp::{qp_solve_with, QpOptions};

/// Which constraint family the attainable moment set is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocMode {
    PositionOnly,
    RatePaper,
    RateExact,
}

impl AllocMode {
    pub fn uses_rates(&self) -> bool {
        !matches!(self, AllocMode::PositionOnly)
    }

    /// Preferred rate-aware mode for a model: exact when the dynamic matrix
    /// is diagonal, the two-hull intersection otherwise.
    pub fn default_rate_mode(model: &AircraftModel) -> AllocMode {
        if model.has_diagonal_dynamics() {
            AllocMode::RateExact
        } else {
            AllocMode::RatePaper
        }
    }
}

impl fmt::Display for AllocMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocMode::PositionOnly => "position_only",
            AllocMode::RatePaper => "rate_paper",
            AllocMode::RateExact => "rate_exact",
        })
    }
}

/// Effectiveness map, actuator limits, and the imposed first-order dynamics
/// `u̇ = A u` of one vehicle configuration.
#[derive(Debug, Clone)]
pub struct AircraftModel {
    /// 3×m effectiveness matrix (moment coefficients per deg).
    b: DMatrix<f64>,
    position_limits: BoxLimits,
    rate_limits: BoxLimits,
    /// m×m invertible dynamic matrix (1/s).
    dynamics: DMatrix<f64>,
    /// Position weighting; `None` means identity.
    weighting: Option<DMatrix<f64>>,
}

impl AircraftModel {
    pub fn new(
        b: DMatrix<f64>,
        position_limits: BoxLimits,
        rate_limits: BoxLimits,
        dynamics: DMatrix<f64>,
    ) -> Result<Self, AllocError> {
        let m = b.ncols();
        if b.nrows() != 3 {
            return Err(AllocError::Dimension(format!(
                "effectiveness matrix must have 3 rows, got {}",
                b.nrows()
            )));
        }
        if position_limits.dim() != m || rate_limits.dim() != m {
            return Err(AllocError::Dimension(format!(
                "limit dimensions ({}, {}) do not match {m} actuators",
                position_limits.dim(),
                rate_limits.dim()
            )));
        }
        if dynamics.nrows() != m || dynamics.ncols() != m {
            return Err(AllocError::Dimension(format!(
                "dynamic matrix must be {m}x{m}, got {}x{}",
                dynamics.nrows(),
                dynamics.ncols()
            )));
        }
        let svd = b.clone().svd(false, false);
        let sigma_max = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * sigma_max)
            .count();
        if rank != 3 {
            return Err(AllocError::RankDeficientEffectiveness { rank });
        }
        if !dynamics.clone().full_piv_lu().is_invertible() {
            return Err(AllocError::SingularDynamics);
        }
        Ok(AircraftModel {
            b,
            position_limits,
            rate_limits,
            dynamics,
            weighting: None,
        })
    }

    /// Replace the identity position weighting with a custom SPD matrix.
    pub fn with_weighting(mut self, r: DMatrix<f64>) -> Result<Self, AllocError> {
        let m = self.actuator_count();
        if r.nrows() != m || r.ncols() != m {
            return Err(AllocError::BadWeighting);
        }
        let symmetric = (&r - r.transpose()).amax() <= 1e-10 * (1.0 + r.amax());
        if !symmetric || r.clone().cholesky().is_none() {
            return Err(AllocError::BadWeighting);
        }
        self.weighting = Some(r);
        Ok(self)
    }

    pub fn effectiveness(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn position_limits(&self) -> &BoxLimits {
        &self.position_limits
    }

    pub fn rate_limits(&self) -> &BoxLimits {
        &self.rate_limits
    }

    pub fn dynamics(&self) -> &DMatrix<f64> {
        &self.dynamics
    }

    pub fn actuator_count(&self) -> usize {
        self.b.ncols()
    }

    pub fn weighting(&self) -> DMatrix<f64> {
        self.weighting
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.actuator_count(), self.actuator_count()))
    }

    pub fn has_diagonal_dynamics(&self) -> bool {
        let a = &self.dynamics;
        let scale = a.diagonal().amax();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if i != j && a[(i, j)].abs() > 1e-14 * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Box of actuator positions satisfying position limits and, through the
    /// diagonal dynamics, rate limits: `max(l_j, min(ṙ/a)) ≤ u_j ≤ min(u_j, max(ṙ/a))`.
    pub fn effective_rate_box(&self) -> Result<BoxLimits, AllocError> {
        if !self.has_diagonal_dynamics() {
            return Err(AllocError::ExactModeNeedsDiagonalA);
        }
        let m = self.actuator_count();
        let mut lo = DVector::zeros(m);
        let mut hi = DVector::zeros(m);
        for j in 0..m {
            let a = self.dynamics[(j, j)];
            let r0 = self.rate_limits.lower()[j] / a;
            let r1 = self.rate_limits.upper()[j] / a;
            lo[j] = self.position_limits.lower()[j].max(r0.min(r1));
            hi[j] = self.position_limits.upper()[j].min(r0.max(r1));
            if !(lo[j] < hi[j]) {
                return Err(AllocError::BadLimits {
                    index: j,
                    lower: lo[j],
                    upper: hi[j],
                });
            }
        }
        Ok(BoxLimits::new(lo, hi).expect("checked above"))
    }
}

/// Build the attainable moment set for a model and mode, returned in both
/// vertex and half-space form.
pub fn build_ams(
    model: &AircraftModel,
    mode: AllocMode,
) -> Result<(PolytopeV, PolytopeH), AllocError> {
    build_ams_with_tolerance(model, mode, None)
}

/// As [`build_ams`] with an explicit membership tolerance, given relative
/// to the hull circumradius (`None` for the default).
pub fn build_ams_with_tolerance(
    model: &AircraftModel,
    mode: AllocMode,
    tolerance_rel: Option<f64>,
) -> Result<(PolytopeV, PolytopeH), AllocError> {
    let hull = match mode {
        AllocMode::PositionOnly => image_hull(model, model.position_limits())?,
        AllocMode::RateExact => {
            let shrunk = model.effective_rate_box()?;
            image_hull(model, &shrunk)?
        }
        AllocMode::RatePaper => {
            let position_hull = image_hull(model, model.position_limits())?;
            let rate_hull = rate_image_hull(model)?;
            intersect(&position_hull, &rate_hull)?
        }
    };
    let halfspace = match tolerance_rel {
        Some(rel) => hull.to_halfspace_with_tolerance(rel * hull.circumradius())?,
        None => hull.to_halfspace()?,
    };
    Ok((hull, halfspace))
}

fn image_hull(model: &AircraftModel, limits: &BoxLimits) -> Result<PolytopeV, AllocError> {
    let corners = limits.enumerate_vertices()?;
    let points = map_vertices(&corners, &model.b)?;
    Ok(convex_hull_3d(&points)?)
}

/// Hull of the moments reachable by rate-limited inputs alone: the image of
/// the rate box through `B A⁻¹`.
pub fn rate_image_hull(model: &AircraftModel) -> Result<PolytopeV, AllocError> {
    let inv = model
        .dynamics
        .clone()
        .try_inverse()
        .ok_or(AllocError::SingularDynamics)?;
    let map = &model.b * inv;
    let corners = model.rate_limits.enumerate_vertices()?;
    let points = map_vertices(&corners, &map)?;
    Ok(convex_hull_3d(&points)?)
}

/// Outcome of clipping a commanded moment to the attainable set boundary.
#[derive(Debug, Clone)]
pub struct ClipResult {
    /// Feasible moment handed to the QP; equals `scale * tau_cmd`.
    pub tau: Vector3<f64>,
    /// Scale factor in `(0, 1]`.
    pub scale: f64,
    pub was_clipped: bool,
    /// Boundary candidates that satisfied every half-space (empty when the
    /// command was already attainable).
    pub candidates: Vec<Vector3<f64>>,
    /// Per-row scaling vector `1 ⊘ (N τ_cmd)` (empty when not clipped).
    pub scaling_vector: DVector<f64>,
}

/// Scale an unattainable commanded moment back to the attainable-set
/// boundary without changing its direction.
///
/// Rows facing away from the command (`N_i τ_cmd ≤ 0`) cannot produce a
/// boundary point along the positive ray and are skipped. Among candidates
/// that satisfy every inequality, the one closest to the command wins, with
/// ties going to the lowest facet index.
pub fn clip_to_ams(tau_cmd: &Vector3<f64>, h: &PolytopeH) -> Result<ClipResult, AllocError> {
    if !tau_cmd.iter().all(|c| c.is_finite()) {
        return Err(AllocError::Dimension("non-finite command".into()));
    }
    if h.contains(tau_cmd) {
        return Ok(ClipResult {
            tau: *tau_cmd,
            scale: 1.0,
            was_clipped: false,
            candidates: Vec::new(),
            scaling_vector: DVector::zeros(0),
        });
    }

    let products = h.products(tau_cmd);
    let scaling_vector = DVector::from_fn(products.len(), |i, _| 1.0 / products[i]);

    let mut best: Option<(f64, f64)> = None; // (distance, scale)
    let mut candidates = Vec::new();
    let tie_tol = h.tolerance() * tau_cmd.norm().max(1.0);
    for (i, &p) in products.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let scale = scaling_vector[i];
        let zeta = tau_cmd * scale;
        if !h.contains(&zeta) {
            continue;
        }
        candidates.push(zeta);
        let distance = (tau_cmd - zeta).norm();
        if best.map_or(true, |(d, _)| distance < d - tie_tol) {
            best = Some((distance, scale));
        }
    }
    let Some((_, scale)) = best else {
        return Err(AllocError::EmptyCandidateSet {
            tau: [tau_cmd.x, tau_cmd.y, tau_cmd.z],
        });
    };
    Ok(ClipResult {
        tau: tau_cmd * scale,
        scale,
        was_clipped: true,
        candidates,
        scaling_vector,
    })
}

/// Identifier of one inequality in the allocation QP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintId {
    PositionUpper(usize),
    PositionLower(usize),
    RateUpper(usize),
    RateLower(usize),
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::PositionUpper(j) => write!(f, "pos_upper[{j}]"),
            ConstraintId::PositionLower(j) => write!(f, "pos_lower[{j}]"),
            ConstraintId::RateUpper(j) => write!(f, "rate_upper[{j}]"),
            ConstraintId::RateLower(j) => write!(f, "rate_lower[{j}]"),
        }
    }
}

/// Allocation outcome: control inputs, implied rates, achieved moment, and
/// solver diagnostics.
#[derive(Debug, Clone)]
pub struct AllocationResult {
    /// Control inputs (deg).
    pub u: DVector<f64>,
    /// Implied rates `A u` (deg/s); present in rate modes only.
    pub u_dot: Option<DVector<f64>>,
    /// Achieved moment `B u`.
    pub tau_achieved: Vector3<f64>,
    /// Inequalities active at the solution.
    pub active_set: Vec<ConstraintId>,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// How the command was made feasible.
    pub clip: ClipResult,
}

/// One-shot allocation. `precomputed` reuses an AMS built earlier for the
/// same model and mode (the caller guarantees the match).
pub fn allocate(
    model: &AircraftModel,
    tau_cmd: &Vector3<f64>,
    mode: AllocMode,
    precomputed: Option<&(PolytopeV, PolytopeH)>,
) -> Result<AllocationResult, AllocError> {
    match precomputed {
        Some(geometry) => allocate_inner(model, tau_cmd, mode, geometry, &mut Vec::new()),
        None => {
            let geometry = build_ams(model, mode)?;
            allocate_inner(model, tau_cmd, mode, &geometry, &mut Vec::new())
        }
    }
}

fn allocate_inner(
    model: &AircraftModel,
    tau_cmd: &Vector3<f64>,
    mode: AllocMode,
    geometry: &(PolytopeV, PolytopeH),
    warm: &mut Vec<usize>,
) -> Result<AllocationResult, AllocError> {
    let m = model.actuator_count();
    let clip = clip_to_ams(tau_cmd, &geometry.1)?;

    // Reduced Hessian: position weighting plus, in rate modes, the rate
    // penalty AᵀA from substituting u̇ = A u into the stacked objective.
    let mut hessian = model.weighting();
    if mode.uses_rates() {
        hessian += model.dynamics.transpose() * &model.dynamics;
    }

    let beq = DVector::from_column_slice(clip.tau.as_slice());

    let (aineq, bineq, ids) = inequality_system(model, mode);
    let opts = QpOptions {
        warm_start: std::mem::take(warm),
        ..QpOptions::default()
    };
    let (u, diag) = qp_solve_with(&hessian, &model.b, &beq, &aineq, &bineq, &opts)?;
    *warm = diag.active_set.clone();

    debug_assert_eq!(u.len(), m);
    let tau_vec = &model.b * &u;
    let u_dot = mode.uses_rates().then(|| &model.dynamics * &u);
    Ok(AllocationResult {
        tau_achieved: Vector3::new(tau_vec[0], tau_vec[1], tau_vec[2]),
        u,
        u_dot,
        active_set: diag.active_set.iter().map(|&i| ids[i]).collect(),
        iterations: diag.iterations,
        kkt_residual: diag.kkt_residual,
        clip,
    })
}

fn inequality_system(
    model: &AircraftModel,
    mode: AllocMode,
) -> (DMatrix<f64>, DVector<f64>, Vec<ConstraintId>) {
    let m = model.actuator_count();
    let rate = mode.uses_rates();
    let rows = if rate { 4 * m } else { 2 * m };
    let mut aineq = DMatrix::zeros(rows, m);
    let mut bineq = DVector::zeros(rows);
    let mut ids = Vec::with_capacity(rows);
    for j in 0..m {
        aineq[(j, j)] = 1.0;
        bineq[j] = model.position_limits.upper()[j];
        ids.push(ConstraintId::PositionUpper(j));
    }
    for j in 0..m {
        aineq[(m + j, j)] = -1.0;
        bineq[m + j] = -model.position_limits.lower()[j];
        ids.push(ConstraintId::PositionLower(j));
    }
    if rate {
        for j in 0..m {
            aineq
                .view_mut((2 * m + j, 0), (1, m))
                .copy_from(&model.dynamics.row(j));
            bineq[2 * m + j] = model.rate_limits.upper()[j];
        }
        for j in 0..m {
            aineq
                .view_mut((3 * m + j, 0), (1, m))
                .copy_from(&(-model.dynamics.row(j)));
            bineq[3 * m + j] = -model.rate_limits.lower()[j];
        }
        for j in 0..m {
            ids.push(ConstraintId::RateUpper(j));
        }
        for j in 0..m {
            ids.push(ConstraintId::RateLower(j));
        }
    }
    (aineq, bineq, ids)
}

/// Sequential allocation over a maneuver: owns the cached geometry and the
/// warm-start state. One session serves one command stream; independent
/// sessions may run in parallel.
pub struct AllocSession {
    model: AircraftModel,
    mode: AllocMode,
    tolerance_rel: Option<f64>,
    geometry: Option<(PolytopeV, PolytopeH)>,
    warm: Vec<usize>,
}

impl AllocSession {
    pub fn new(model: AircraftModel, mode: AllocMode) -> Self {
        AllocSession {
            model,
            mode,
            tolerance_rel: None,
            geometry: None,
            warm: Vec::new(),
        }
    }

    /// Override the membership tolerance (relative to the hull
    /// circumradius) used when this session builds geometry.
    pub fn with_tolerance_rel(mut self, tolerance_rel: f64) -> Self {
        self.tolerance_rel = Some(tolerance_rel);
        self
    }

    pub fn model(&self) -> &AircraftModel {
        &self.model
    }

    pub fn mode(&self) -> AllocMode {
        self.mode
    }

    /// Build and cache the attainable set once; subsequent
    /// [`allocate`](Self::allocate) calls reuse it.
    pub fn precompute(&mut self) -> Result<&(PolytopeV, PolytopeH), AllocError> {
        if self.geometry.is_none() {
            self.geometry = Some(build_ams_with_tolerance(
                &self.model,
                self.mode,
                self.tolerance_rel,
            )?);
        }
        Ok(self.geometry.as_ref().expect("just built"))
    }

    /// Allocate one command, warm-starting the QP from the previous call's
    /// active set. Without [`precompute`](Self::precompute) the geometry is
    /// rebuilt every call.
    pub fn allocate(&mut self, tau_cmd: &Vector3<f64>) -> Result<AllocationResult, AllocError> {
        match &self.geometry {
            Some(geometry) => {
                allocate_inner(&self.model, tau_cmd, self.mode, geometry, &mut self.warm)
            }
            None => {
                let geometry =
                    build_ams_with_tolerance(&self.model, self.mode, self.tolerance_rel)?;
                allocate_inner(&self.model, tau_cmd, self.mode, &geometry, &mut self.warm)
            }
        }
    }
}
