//! Built-in F-18 case-study dataset: seven control surfaces (left/right
//! tail stabilizers, flaps, ailerons, and the rudder) mapped to roll, pitch,
//! and yaw moment coefficients.

use nalgebra::DMatrix;

use crate::actuator::ActuatorParams;
use crate::allocator::AircraftModel;
use crate::polytope::BoxLimits;

/// Actuator column order used throughout the dataset.
pub const SURFACE_NAMES: [&str; 7] = [
    "tail_l", "tail_r", "flap_l", "flap_r", "ail_l", "ail_r", "rudder",
];

/// Moment coefficients per degree of deflection, columns in
/// [`SURFACE_NAMES`] order, rows (roll, pitch, yaw).
pub fn effectiveness() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        7,
        &[
            23.8, -23.8, 123.0, -123.0, 41.8, -41.8, 3.6, //
            -698.0, -698.0, 99.4, 99.4, -55.2, -55.2, 0.0, //
            -30.9, 30.9, 0.0, 0.0, -17.4, 17.4, -56.2,
        ],
    ) * 1e-5
}

/// Surface deflection limits (deg).
pub fn position_limits() -> BoxLimits {
    BoxLimits::from_slices(
        &[-24.0, -24.0, -8.0, -8.0, -25.0, -25.0, -30.0],
        &[10.5, 10.5, 45.0, 45.0, 42.0, 42.0, 30.0],
    )
    .expect("static limits are ordered")
}

/// Surface rate limits (deg/s), symmetric.
pub fn rate_limits() -> BoxLimits {
    BoxLimits::from_slices(
        &[-40.0, -40.0, -18.0, -18.0, -100.0, -100.0, -82.0],
        &[40.0, 40.0, 18.0, 18.0, 100.0, 100.0, 82.0],
    )
    .expect("static limits are ordered")
}

/// Imposed first-order dynamics `u̇ = A u`: `diag(-2)` sized to the seven
/// actuators (one diagonal entry per actuator).
pub fn dynamics() -> DMatrix<f64> {
    DMatrix::from_diagonal_element(7, 7, -2.0)
}

/// The complete allocation model.
pub fn model() -> AircraftModel {
    AircraftModel::new(
        effectiveness(),
        position_limits(),
        rate_limits(),
        dynamics(),
    )
    .expect("static dataset is well formed")
}

/// Second-order servo parameters per surface: tail stabilizers
/// (ω₀ = 30.74 rad/s, ζ = 0.509), flaps (35.0, 0.71), ailerons (75.0, 0.59),
/// rudder (72.1, 0.69), with the position and rate limits above.
pub fn actuators() -> Vec<ActuatorParams> {
    let omega0 = [30.74, 30.74, 35.0, 35.0, 75.0, 75.0, 72.1];
    let zeta = [0.509, 0.509, 0.71, 0.71, 0.59, 0.59, 0.69];
    let pos = position_limits();
    let rate = rate_limits();
    (0..7)
        .map(|j| {
            ActuatorParams::new(
                omega0[j],
                zeta[j],
                (pos.lower()[j], pos.upper()[j]),
                rate.upper()[j],
            )
        })
        .collect()
}
