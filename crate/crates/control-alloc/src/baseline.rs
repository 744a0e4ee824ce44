//! Comparison allocators: the plain pseudo-inverse and an exact
//! redistributed pseudo-inverse (ERPI) that freezes saturated actuators and
//! rescales the command so the achieved moment keeps its direction.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::allocator::AircraftModel;
use crate::error::AllocError;

/// Minimum-norm solution `u = Bᵀ(BBᵀ)⁻¹ τ` of `B u = τ`. Ignores every
/// limit; `B` must have full row rank.
pub fn pseudo_inverse_allocate(
    b: &DMatrix<f64>,
    tau: &DVector<f64>,
) -> Result<DVector<f64>, AllocError> {
    if b.nrows() != tau.len() {
        return Err(AllocError::Dimension(format!(
            "moment dimension {} does not match {} effectiveness rows",
            tau.len(),
            b.nrows()
        )));
    }
    // LU pivots of the Gram matrix stay formally nonzero even for exactly
    // rank-deficient systems; gate on the singular-value spectrum instead.
    let svd = b.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if rank < b.nrows() {
        return Err(AllocError::RankDeficientEffectiveness { rank });
    }
    let gram = b * b.transpose();
    let y = gram
        .full_piv_lu()
        .solve(tau)
        .ok_or(AllocError::RankDeficientEffectiveness { rank })?;
    Ok(b.transpose() * y)
}

/// Outcome of the redistributed pseudo-inverse.
#[derive(Debug, Clone)]
pub struct BaselineResult {
    /// Control inputs (deg), always within the position limits.
    pub u: DVector<f64>,
    /// Actuators frozen at a bound, ascending.
    pub saturated: Vec<usize>,
    /// Fraction of the commanded moment achieved: `B u = scale · τ_cmd`.
    pub scale_applied: f64,
    /// The free subsystem lost row rank before the full demand was met; `u`
    /// holds the best achieved scaled moment.
    pub rank_lost: bool,
}

/// Exact redistributed pseudo-inverse allocation.
///
/// The achieved moment grows along the commanded direction: starting from
/// rest, the free actuators move along the minimum-norm direction of the
/// reduced system until one reaches a bound; that actuator freezes there,
/// its column leaves the system, and the remaining actuators continue. The
/// walk stops at the full demand, at the attainable boundary, or when the
/// reduced system can no longer span moment space.
///
/// Every intermediate configuration is feasible and achieves `s · τ_cmd`
/// exactly, so direction preservation holds at any stopping point. Each
/// iteration freezes one actuator, bounding the work by `m` recursions.
///
/// Requires rest (`u = 0`) to be feasible, i.e. limits straddling zero —
/// the same condition that puts the origin inside the attainable set.
pub fn erpi_allocate(
    model: &AircraftModel,
    tau_cmd: &Vector3<f64>,
) -> Result<BaselineResult, AllocError> {
    let b = model.effectiveness();
    let m = model.actuator_count();
    let lower = model.position_limits().lower();
    let upper = model.position_limits().upper();
    let tau = DVector::from_column_slice(tau_cmd.as_slice());

    let mut u = DVector::zeros(m);
    let mut free: Vec<usize> = (0..m).collect();
    let mut saturated: Vec<usize> = Vec::new();
    let mut scale = 0.0f64;
    let mut rank_lost = false;

    if tau_cmd.norm() == 0.0 {
        return Ok(BaselineResult {
            u,
            saturated,
            scale_applied: 1.0,
            rank_lost: false,
        });
    }

    for _level in 0..=m {
        if scale >= 1.0 {
            break;
        }
        // Minimum-norm direction of the free subsystem toward τ_cmd.
        let b_free = b.select_columns(free.iter());
        let direction = match pseudo_inverse_allocate(&b_free, &tau) {
            Ok(d) => d,
            Err(AllocError::RankDeficientEffectiveness { .. }) => {
                rank_lost = true;
                break;
            }
            Err(e) => return Err(e),
        };

        // Walk until the demand is met or a free actuator hits a bound.
        let mut step = 1.0 - scale;
        let mut blocker: Option<usize> = None;
        let dir_scale = direction.amax().max(f64::MIN_POSITIVE);
        for (k, &j) in free.iter().enumerate() {
            let d = direction[k];
            if d.abs() <= 1e-13 * dir_scale {
                continue;
            }
            let target = if d > 0.0 { upper[j] } else { lower[j] };
            let room = ((target - u[j]) / d).max(0.0);
            if room < step {
                step = room;
                blocker = Some(k);
            }
        }

        for (k, &j) in free.iter().enumerate() {
            u[j] += step * direction[k];
        }
        scale += step;

        match blocker {
            None => {
                // Full remaining step taken: the demand is met exactly.
                scale = 1.0;
                break;
            }
            Some(k) => {
                let j = free[k];
                // Pin exactly on the bound the walk ran into.
                u[j] = if direction[k] > 0.0 {
                    upper[j]
                } else {
                    lower[j]
                };
                free.remove(k);
                saturated.push(j);
            }
        }
        if free.is_empty() {
            rank_lost = true;
            break;
        }
    }

    saturated.sort_unstable();
    Ok(BaselineResult {
        u,
        saturated,
        scale_applied: scale,
        rank_lost,
    })
}
