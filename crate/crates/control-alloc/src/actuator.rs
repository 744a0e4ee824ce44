//! Second-order actuator dynamics with position and rate saturation.
//!
//! Each channel follows `ẍ = ω₀²(c − x) − 2ζω₀ ẋ` toward its command `c`,
//! integrated with fixed-step RK4 and then clamped: velocity to the rate
//! limit, position to its limits with the velocity zeroed when the position
//! clamp engages in the pushing direction (anti-windup).

use crate::error::SimError;

/// Physical parameters of one actuator channel.
#[derive(Debug, Clone, Copy)]
pub struct ActuatorParams {
    /// Natural frequency (rad/s).
    pub omega0: f64,
    /// Damping ratio.
    pub zeta: f64,
    /// Position limits (deg).
    pub position_limits: (f64, f64),
    /// Symmetric rate limit (deg/s).
    pub rate_limit: f64,
}

impl ActuatorParams {
    pub fn new(omega0: f64, zeta: f64, position_limits: (f64, f64), rate_limit: f64) -> Self {
        assert!(
            omega0 > 0.0 && zeta > 0.0,
            "second-order parameters must be positive"
        );
        ActuatorParams {
            omega0,
            zeta,
            position_limits,
            rate_limit,
        }
    }

    /// Same dynamics with the saturations pushed out of reach, for studying
    /// the linear regime.
    pub fn unsaturated(omega0: f64, zeta: f64) -> Self {
        Self::new(omega0, zeta, (-1e12, 1e12), 1e15)
    }

    /// Largest admissible integration step, one tenth of the natural period
    /// scale.
    pub fn max_step(&self) -> f64 {
        1.0 / (10.0 * self.omega0)
    }
}

/// Position and velocity of one channel (deg, deg/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorState {
    pub position: f64,
    pub velocity: f64,
}

/// What the saturation logic did during one step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepEvents {
    /// Velocity clamp engaged.
    pub rate_clamped: bool,
    /// Position clamp engaged (the drive pushed into a stop).
    pub position_clamped: bool,
    /// How far past the stop the unclamped position went (deg, >= 0).
    pub position_excess: f64,
}

/// Advance one channel by `dt` toward `command`, then saturate.
pub fn actuator_step(
    state: &ActuatorState,
    params: &ActuatorParams,
    command: f64,
    dt: f64,
) -> Result<ActuatorState, SimError> {
    step_with_events(state, params, command, dt).map(|(s, _)| s)
}

/// As [`actuator_step`], also reporting which clamps engaged.
pub fn step_with_events(
    state: &ActuatorState,
    params: &ActuatorParams,
    command: f64,
    dt: f64,
) -> Result<(ActuatorState, StepEvents), SimError> {
    if !(dt > 0.0) || dt > params.max_step() {
        return Err(SimError::StepTooLarge {
            dt,
            omega0: params.omega0,
            max_dt: params.max_step(),
        });
    }

    // RK4 on (x, v) with v̇ = ω₀²(c − x) − 2ζω₀ v. The position derivative
    // is the rate-saturated velocity, so a rate-limited channel cannot move
    // faster than its limit even inside a step; in the linear regime the
    // saturation never engages and plain fourth-order accuracy remains.
    let r = params.rate_limit;
    let slew = |v: f64| v.clamp(-r, r);
    let accel = |x: f64, v: f64| {
        params.omega0 * params.omega0 * (command - x) - 2.0 * params.zeta * params.omega0 * v
    };
    let (x0, v0) = (state.position, state.velocity);
    let (k1x, k1v) = (slew(v0), accel(x0, v0));
    let (k2x, k2v) = (
        slew(v0 + 0.5 * dt * k1v),
        accel(x0 + 0.5 * dt * k1x, v0 + 0.5 * dt * k1v),
    );
    let (k3x, k3v) = (
        slew(v0 + 0.5 * dt * k2v),
        accel(x0 + 0.5 * dt * k2x, v0 + 0.5 * dt * k2v),
    );
    let (k4x, k4v) = (slew(v0 + dt * k3v), accel(x0 + dt * k3x, v0 + dt * k3v));
    let mut x = x0 + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    let mut v = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

    let mut events = StepEvents::default();

    if v.abs() > params.rate_limit {
        v = v.clamp(-params.rate_limit, params.rate_limit);
        events.rate_clamped = true;
    }

    let (lo, hi) = params.position_limits;
    if x > hi {
        events.position_clamped = true;
        events.position_excess = x - hi;
        x = hi;
        if v > 0.0 {
            v = 0.0;
        }
    } else if x < lo {
        events.position_clamped = true;
        events.position_excess = lo - x;
        x = lo;
        if v < 0.0 {
            v = 0.0;
        }
    }

    Ok((
        ActuatorState {
            position: x,
            velocity: v,
        },
        events,
    ))
}

/// A bank of independent channels driven in lockstep.
#[derive(Debug, Clone)]
pub struct ActuatorBank {
    params: Vec<ActuatorParams>,
    states: Vec<ActuatorState>,
}

impl ActuatorBank {
    /// All channels start at rest at zero deflection.
    pub fn new(params: Vec<ActuatorParams>) -> Self {
        let states = vec![ActuatorState::default(); params.len()];
        ActuatorBank { params, states }
    }

    /// Channels start at rest at the given deflections.
    pub fn trimmed(params: Vec<ActuatorParams>, positions: &[f64]) -> Self {
        assert_eq!(params.len(), positions.len());
        let states = positions
            .iter()
            .map(|&position| ActuatorState {
                position,
                velocity: 0.0,
            })
            .collect();
        ActuatorBank { params, states }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn states(&self) -> &[ActuatorState] {
        &self.states
    }

    pub fn positions(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.position).collect()
    }

    /// Step every channel once; returns the union of clamp events.
    pub fn step(&mut self, commands: &[f64], dt: f64) -> Result<Vec<StepEvents>, SimError> {
        if commands.len() != self.params.len() {
            return Err(SimError::ActuatorCountMismatch {
                actuators: self.params.len(),
                inputs: commands.len(),
            });
        }
        let mut events = Vec::with_capacity(self.params.len());
        for ((state, params), &command) in self
            .states
            .iter_mut()
            .zip(&self.params)
            .zip(commands.iter())
        {
            let (next, ev) = step_with_events(state, params, command, dt)?;
            *state = next;
            events.push(ev);
        }
        Ok(events)
    }
}
