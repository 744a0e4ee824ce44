//! Maneuver replay through the allocator and the saturating actuator bank:
//! allocate each commanded moment, drive the actuators with the result, and
//! record what the hardware actually realizes.

use std::time::Instant;

use nalgebra::{DVector, Vector3};

use crate::actuator::{ActuatorBank, ActuatorParams};
use crate::allocator::{AircraftModel, AllocMode, AllocSession};
use crate::error::SimError;
use crate::maneuver::{validate_monotonic, ManeuverSample};

/// Replay configuration.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Actuator integration step (s).
    pub dt: f64,
    /// Build the attainable-set geometry once instead of per solve.
    pub precompute: bool,
    /// Membership tolerance override, relative to the hull circumradius.
    pub tolerance_rel: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dt: 1e-3,
            precompute: true,
            tolerance_rel: None,
        }
    }
}

/// Record of one maneuver sample: the command, the allocated inputs, and
/// the actuator response over the following interval.
#[derive(Debug, Clone)]
pub struct SimSample {
    pub t: f64,
    pub tau_cmd: Vector3<f64>,
    /// Allocator output fed to the actuators (deg).
    pub u_cmd: DVector<f64>,
    /// Actuator positions at the end of the interval (deg).
    pub u_act: DVector<f64>,
    /// Moment realized by the actuators, `B u_act`.
    pub tau_realized: Vector3<f64>,
    pub clip_scale: f64,
    pub was_clipped: bool,
    /// Wall-clock time of the allocation solve (s). Excluded from
    /// determinism comparisons.
    pub solve_seconds: f64,
    /// Position-clamp engagements during the interval.
    pub clamp_events: usize,
    /// Worst unclamped excursion past a position stop (deg).
    pub max_clamp_excess: f64,
}

/// Full replay output.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub mode: AllocMode,
    pub dt: f64,
    pub samples: Vec<SimSample>,
}

impl TimeSeries {
    /// Total variation of the allocator output, summed over actuators:
    /// `Σ_j Σ_k |u_j[k+1] − u_j[k]|`. Smoother command streams score lower.
    pub fn command_total_variation(&self) -> f64 {
        let mut tv = 0.0;
        for pair in self.samples.windows(2) {
            tv += (&pair[1].u_cmd - &pair[0].u_cmd).abs().sum();
        }
        tv
    }

    pub fn clamp_event_count(&self) -> usize {
        self.samples.iter().map(|s| s.clamp_events).sum()
    }

    /// Worst unclamped excursion past any position stop (deg).
    pub fn max_position_violation(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.max_clamp_excess)
            .fold(0.0, f64::max)
    }

    pub fn mean_solve_seconds(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.solve_seconds).sum::<f64>() / self.samples.len() as f64
    }
}

/// Replay a maneuver: per sample, allocate the commanded moment, feed the
/// result to the actuator bank, and integrate at fixed `dt` until the next
/// sample time. Saturation is recorded, never fatal; allocation errors
/// propagate.
pub fn run_experiment(
    model: &AircraftModel,
    actuators: &[ActuatorParams],
    maneuver: &[ManeuverSample],
    mode: AllocMode,
    opts: &SimOptions,
) -> Result<TimeSeries, SimError> {
    validate_monotonic(maneuver)?;
    let m = model.actuator_count();
    if actuators.len() != m {
        return Err(SimError::ActuatorCountMismatch {
            actuators: actuators.len(),
            inputs: m,
        });
    }

    let mut session = AllocSession::new(model.clone(), mode);
    if let Some(rel) = opts.tolerance_rel {
        session = session.with_tolerance_rel(rel);
    }
    if opts.precompute {
        session.precompute()?;
    }
    // The replay starts from trimmed flight: the bank begins at the first
    // sample's allocation instead of slewing there from zero.
    let trim = session.allocate(&maneuver[0].tau_cmd)?;
    let mut bank = ActuatorBank::trimmed(actuators.to_vec(), trim.u.as_slice());
    let mut samples = Vec::with_capacity(maneuver.len());

    for (k, cmd) in maneuver.iter().enumerate() {
        let started = Instant::now();
        let allocation = session.allocate(&cmd.tau_cmd)?;
        let solve_seconds = started.elapsed().as_secs_f64();

        // Hold the allocated command until the next sample (or one nominal
        // interval after the last sample).
        let horizon = match maneuver.get(k + 1) {
            Some(next) => next.t - cmd.t,
            None if maneuver.len() > 1 => cmd.t - maneuver[k - 1].t,
            None => opts.dt,
        };
        let commands = allocation.u.as_slice().to_vec();
        let mut clamp_events = 0usize;
        let mut max_clamp_excess = 0.0f64;
        let mut remaining = horizon;
        while remaining > 1e-12 {
            let step = opts.dt.min(remaining);
            for ev in bank.step(&commands, step)? {
                if ev.position_clamped {
                    clamp_events += 1;
                    max_clamp_excess = max_clamp_excess.max(ev.position_excess);
                }
            }
            remaining -= step;
        }

        let u_act = DVector::from_vec(bank.positions());
        let realized = model.effectiveness() * &u_act;
        samples.push(SimSample {
            t: cmd.t,
            tau_cmd: cmd.tau_cmd,
            u_cmd: allocation.u,
            u_act,
            tau_realized: Vector3::new(realized[0], realized[1], realized[2]),
            clip_scale: allocation.clip.scale,
            was_clipped: allocation.clip.was_clipped,
            solve_seconds,
            clamp_events,
            max_clamp_excess,
        });
    }

    Ok(TimeSeries {
        mode,
        dt: opts.dt,
        samples,
    })
}

#[cfg(test)]
mod tests;
