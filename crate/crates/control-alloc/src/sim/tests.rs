use nalgebra::Vector3;

use super::*;
use crate::f18;
use crate::maneuver::{synth_maneuver, ManeuverSample};

fn constant_maneuver(tau: Vector3<f64>, duration: f64, rate: f64) -> Vec<ManeuverSample> {
    let count = (duration * rate) as usize;
    (0..=count)
        .map(|k| ManeuverSample {
            t: k as f64 / rate,
            tau_cmd: tau,
        })
        .collect()
}

#[test]
fn constant_attainable_command_settles() {
    let model = f18::model();
    let maneuver = constant_maneuver(Vector3::new(0.0, 0.05, 0.0), 3.0, 100.0);
    let series = run_experiment(
        &model,
        &f18::actuators(),
        &maneuver,
        AllocMode::PositionOnly,
        &SimOptions::default(),
    )
    .unwrap();
    let last = series.samples.last().unwrap();
    assert!(!last.was_clipped);
    // Steady state: the realized moment converges to the command.
    let err = (last.tau_realized - last.tau_cmd).amax();
    assert!(err <= 1e-6, "steady-state error {err:.3e}");
    // And the actuators match the allocator output.
    assert!((&last.u_act - &last.u_cmd).amax() <= 1e-6);
}

#[test]
fn replay_is_deterministic_apart_from_timing() {
    let model = f18::model();
    let maneuver = synth_maneuver(1.0, 50.0);
    let opts = SimOptions::default();
    let a = run_experiment(
        &model,
        &f18::actuators(),
        &maneuver,
        AllocMode::RateExact,
        &opts,
    )
    .unwrap();
    let b = run_experiment(
        &model,
        &f18::actuators(),
        &maneuver,
        AllocMode::RateExact,
        &opts,
    )
    .unwrap();
    assert_eq!(a.samples.len(), b.samples.len());
    for (x, y) in a.samples.iter().zip(b.samples.iter()) {
        assert_eq!(x.u_cmd, y.u_cmd);
        assert_eq!(x.u_act, y.u_act);
        assert_eq!(x.tau_realized, y.tau_realized);
        assert_eq!(x.clip_scale, y.clip_scale);
        assert_eq!(x.clamp_events, y.clamp_events);
    }
}

#[test]
fn mismatched_actuator_bank_rejected() {
    let model = f18::model();
    let maneuver = constant_maneuver(Vector3::zeros(), 0.1, 100.0);
    let err = run_experiment(
        &model,
        &f18::actuators()[..5],
        &maneuver,
        AllocMode::PositionOnly,
        &SimOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, SimError::ActuatorCountMismatch { .. }));
}

#[test]
fn empty_maneuver_rejected() {
    let err = run_experiment(
        &f18::model(),
        &f18::actuators(),
        &[],
        AllocMode::PositionOnly,
        &SimOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, SimError::EmptyManeuver));
}

/// The aggressive roll reversal overshoots at least one surface against a
/// stop under position-only allocation, while the rate-aware allocation
/// keeps every recorded position within limits and commands a smoother
/// stream.
#[test]
fn rate_mode_prevents_clamp_events_and_smooths_commands() {
    let model = f18::model();
    let maneuver = synth_maneuver(5.0, 100.0);
    let opts = SimOptions::default();
    let position_only = run_experiment(
        &model,
        &f18::actuators(),
        &maneuver,
        AllocMode::PositionOnly,
        &opts,
    )
    .unwrap();
    let rate_exact = run_experiment(
        &model,
        &f18::actuators(),
        &maneuver,
        AllocMode::RateExact,
        &opts,
    )
    .unwrap();

    assert!(
        position_only.max_position_violation() > 1e-6,
        "position-only replay should overshoot into a stop"
    );
    let limits = model.position_limits();
    let mut recorded = 0.0f64;
    for s in &rate_exact.samples {
        for j in 0..model.actuator_count() {
            recorded = recorded
                .max(s.u_act[j] - limits.upper()[j])
                .max(limits.lower()[j] - s.u_act[j]);
        }
    }
    assert!(
        recorded <= 1e-6,
        "rate-aware positions must stay within limits (worst {recorded:.3e})"
    );
    assert!(
        rate_exact.command_total_variation() < position_only.command_total_variation(),
        "rate-aware commands must be smoother: {} vs {}",
        rate_exact.command_total_variation(),
        position_only.command_total_variation()
    );
}

/// The rate-aware command stream is realizable: the actuators track it
/// within a few percent of each surface's travel.
#[test]
fn rate_mode_tracks_within_five_percent_of_range() {
    let model = f18::model();
    let maneuver = synth_maneuver(5.0, 100.0);
    let series = run_experiment(
        &model,
        &f18::actuators(),
        &maneuver,
        AllocMode::RateExact,
        &SimOptions::default(),
    )
    .unwrap();
    let limits = model.position_limits();
    for j in 0..model.actuator_count() {
        let range = limits.upper()[j] - limits.lower()[j];
        let worst = series
            .samples
            .iter()
            .map(|s| (s.u_act[j] - s.u_cmd[j]).abs())
            .fold(0.0, f64::max);
        assert!(
            worst <= 0.05 * range,
            "channel {j}: tracking error {worst:.3} deg over range {range:.1}"
        );
    }
}

/// Geometry values and sessions are plain data: shareable and sendable.
#[test]
fn simulation_types_are_send_and_sync() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<crate::polytope::PolytopeV>();
    assert_send_sync::<crate::polytope::PolytopeH>();
    assert_send_sync::<crate::allocator::AircraftModel>();
    assert_send_sync::<crate::allocator::AllocSession>();
    assert_send_sync::<TimeSeries>();
}

/// Independent replays on separate threads reproduce the sequential result.
#[test]
fn parallel_replays_match_sequential() {
    let model = f18::model();
    let maneuver = synth_maneuver(0.5, 50.0);
    let opts = SimOptions::default();
    let sequential = run_experiment(
        &model,
        &f18::actuators(),
        &maneuver,
        AllocMode::RateExact,
        &opts,
    )
    .unwrap();

    let handles: Vec<_> = (0..2)
        .map(|_| {
            let model = model.clone();
            let maneuver = maneuver.clone();
            let opts = opts.clone();
            std::thread::spawn(move || {
                run_experiment(
                    &model,
                    &f18::actuators(),
                    &maneuver,
                    AllocMode::RateExact,
                    &opts,
                )
                .unwrap()
            })
        })
        .collect();
    for handle in handles {
        let parallel = handle.join().unwrap();
        for (a, b) in sequential.samples.iter().zip(parallel.samples.iter()) {
            assert_eq!(a.u_cmd, b.u_cmd);
            assert_eq!(a.u_act, b.u_act);
        }
    }
}
