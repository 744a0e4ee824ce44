//! Commanded-moment time series: a deterministic synthetic maneuver and the
//! CSV interchange format (`t,cl,cm,cn`, seconds and dimensionless moment
//! coefficients).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::SimError;

/// One commanded-moment sample: roll, pitch, yaw coefficients at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverSample {
    /// Time (s).
    pub t: f64,
    /// Commanded moment coefficients `(c_l, c_m, c_n)`.
    pub tau_cmd: Vector3<f64>,
}

/// Shape constants of the synthetic maneuver, kept in one place.
///
/// The trajectory models a hard roll reversal flown out of a steady left
/// turn: trimmed pitch with a mid-maneuver load relaxation, an aggressive
/// right-roll pulse peaking at t = 2 s, and a yaw trim that flips sign as
/// the turn direction changes. The roll peak is sized ~1.3× past the
/// position-only attainable boundary along its commanded direction, so the
/// clipping path is guaranteed to engage.
///
/// The roll knots pace the pulse through the allocator's sensitive band
/// (roughly `c_l` in `[0, 0.062]`, where the optimizer re-routes roll from
/// the flaps onto the ailerons and rudder): traversal there is slowed so
/// the rate-aware command stream stays within what the servos can track,
/// while the position-only stream still over-drives its actuators.
pub mod shape {
    /// Pitch trim of the initial steady turn.
    pub const PITCH_TRIM: f64 = -0.06;
    /// Fraction of the pitch trim remaining at the bottom of the load
    /// relaxation (3 g against the 5 g trim).
    pub const PITCH_DIP_RATIO: f64 = 0.6;
    /// Pitch relaxation window (s).
    pub const DIP_START: f64 = 1.0;
    pub const DIP_END: f64 = 4.0;

    /// Yaw trim magnitude; positive in the left turn, negated after the
    /// reversal.
    pub const YAW_TRIM: f64 = 0.004;
    /// Yaw sign transition window (s).
    pub const YAW_SWITCH_START: f64 = 0.5;
    pub const YAW_SWITCH_END: f64 = 4.5;

    /// Roll pulse peak, reached at t = 2 s.
    pub const ROLL_PEAK: f64 = 0.1234;
    /// Roll pulse profile knots `(t, c_l)`, interpolated by a monotone
    /// cubic; zero outside `(0.5, 3.5)`.
    pub const ROLL_KNOTS: [(f64, f64); 11] = [
        (0.50, 0.0),
        (1.04, 0.020),
        (1.22, 0.025),
        (1.40, 0.040),
        (1.86, 0.062),
        (2.00, ROLL_PEAK),
        (2.14, 0.062),
        (2.60, 0.040),
        (2.78, 0.025),
        (2.96, 0.020),
        (3.50, 0.0),
    ];
}

/// Quintic smoothstep on `[0, 1]`.
fn smooth(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    p * p * p * (p * (p * 6.0 - 15.0) + 10.0)
}

/// Monotone cubic (Fritsch-Carlson) interpolation through `(t, value)`
/// knots: C¹, clamped to the knot range, no overshoot between knots.
fn monotone_cubic(t: f64, knots: &[(f64, f64)]) -> f64 {
    let n = knots.len();
    if t <= knots[0].0 {
        return knots[0].1;
    }
    if t >= knots[n - 1].0 {
        return knots[n - 1].1;
    }
    let h: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let secant: Vec<f64> = knots
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1].1 - w[0].1) / h)
        .collect();
    let mut slope = vec![0.0f64; n];
    for i in 1..n - 1 {
        if secant[i - 1] * secant[i] > 0.0 {
            let (h1, h2) = (h[i - 1], h[i]);
            let w1 = 2.0 * h2 + h1;
            let w2 = h2 + 2.0 * h1;
            slope[i] = (w1 + w2) / (w1 / secant[i - 1] + w2 / secant[i]);
        }
    }
    for i in 0..n - 1 {
        if t <= knots[i + 1].0 {
            let p = (t - knots[i].0) / h[i];
            let (p2, p3) = (p * p, p * p * p);
            let h00 = 2.0 * p3 - 3.0 * p2 + 1.0;
            let h10 = p3 - 2.0 * p2 + p;
            let h01 = -2.0 * p3 + 3.0 * p2;
            let h11 = p3 - p2;
            return h00 * knots[i].1
                + h10 * h[i] * slope[i]
                + h01 * knots[i + 1].1
                + h11 * h[i] * slope[i + 1];
        }
    }
    knots[n - 1].1
}

/// Commanded moment of the synthetic maneuver at time `t`.
pub fn synth_command(t: f64) -> Vector3<f64> {
    use shape::*;

    let roll = monotone_cubic(t, &ROLL_KNOTS);

    let dip = smooth((t - DIP_START) / (DIP_END - DIP_START));
    // Raised-cosine hump: zero at both window edges, 1 at the center.
    let hump = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * dip).cos());
    let pitch = PITCH_TRIM * (1.0 - (1.0 - PITCH_DIP_RATIO) * hump);

    let yaw = YAW_TRIM
        * (1.0 - 2.0 * smooth((t - YAW_SWITCH_START) / (YAW_SWITCH_END - YAW_SWITCH_START)));

    Vector3::new(roll, pitch, yaw)
}

/// Sample the synthetic maneuver at a fixed rate over `[0, duration]`,
/// endpoints included.
pub fn synth_maneuver(duration: f64, rate_hz: f64) -> Vec<ManeuverSample> {
    assert!(duration > 0.0 && rate_hz > 0.0);
    let count = (duration * rate_hz).round() as usize;
    (0..=count)
        .map(|k| {
            let t = k as f64 / rate_hz;
            ManeuverSample {
                t,
                tau_cmd: synth_command(t),
            }
        })
        .collect()
}

/// Serialize samples in the `t,cl,cm,cn` format with shortest round-trip
/// float formatting.
pub fn maneuver_to_csv(samples: &[ManeuverSample]) -> String {
    let mut out = String::from("t,cl,cm,cn\n");
    for s in samples {
        writeln!(
            out,
            "{},{},{},{}",
            s.t, s.tau_cmd.x, s.tau_cmd.y, s.tau_cmd.z
        )
        .expect("string write");
    }
    out
}

/// Parse the `t,cl,cm,cn` format, validating monotonic time.
pub fn maneuver_from_csv(text: &str) -> Result<Vec<ManeuverSample>, io::Error> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().trim();
    if header != "t,cl,cm,cn" {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("expected header 't,cl,cm,cn', got '{header}'"),
        ));
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!(
                    "line {}: expected 4 fields, got {}",
                    lineno + 2,
                    fields.len()
                ),
            ));
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: {e}", lineno + 2),
                )
            })
        };
        samples.push(ManeuverSample {
            t: parse(fields[0])?,
            tau_cmd: Vector3::new(parse(fields[1])?, parse(fields[2])?, parse(fields[3])?),
        });
    }
    validate_monotonic(&samples)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    Ok(samples)
}

/// Check strictly increasing sample times.
pub fn validate_monotonic(samples: &[ManeuverSample]) -> Result<(), SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptyManeuver);
    }
    for (i, pair) in samples.windows(2).enumerate() {
        if !(pair[1].t > pair[0].t) {
            return Err(SimError::NonMonotonicTime { index: i + 1 });
        }
    }
    Ok(())
}

pub fn write_maneuver_csv(path: &Path, samples: &[ManeuverSample]) -> io::Result<()> {
    fs::write(path, maneuver_to_csv(samples))
}

pub fn read_maneuver_csv(path: &Path) -> io::Result<Vec<ManeuverSample>> {
    maneuver_from_csv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{build_ams, AllocMode};
    use crate::f18;

    #[test]
    fn starts_with_pure_turn_trim() {
        let first = synth_command(0.0);
        assert_eq!(first.x, 0.0);
        assert!(first.y < 0.0);
        assert_eq!(first.y, shape::PITCH_TRIM);
        assert_eq!(first.z, shape::YAW_TRIM);
    }

    #[test]
    fn ends_mirrored_with_opposite_yaw() {
        let first = synth_command(0.0);
        let last = synth_command(5.0);
        assert_eq!(last.x, 0.0);
        assert_eq!(last.y, first.y);
        assert_eq!(last.z, -first.z);
    }

    #[test]
    fn roll_peak_exits_position_only_ams() {
        let (_, h) = build_ams(&f18::model(), AllocMode::PositionOnly).unwrap();
        let at_peak = synth_command(2.0);
        assert!(at_peak.x > 0.0);
        assert!(!h.contains(&at_peak), "roll peak must clip: {at_peak:?}");
        assert_eq!(at_peak.x, shape::ROLL_PEAK);
    }

    #[test]
    fn pitch_dips_to_three_fifths_of_trim() {
        let mid = synth_command(2.5);
        approx::assert_relative_eq!(
            mid.y,
            shape::PITCH_TRIM * shape::PITCH_DIP_RATIO,
            max_relative = 1e-12
        );
    }

    #[test]
    fn sampling_is_deterministic_and_monotonic() {
        let a = synth_maneuver(5.0, 100.0);
        let b = synth_maneuver(5.0, 100.0);
        assert_eq!(a.len(), 501);
        assert_eq!(a, b);
        validate_monotonic(&a).unwrap();
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let samples = synth_maneuver(1.0, 37.0);
        let text = maneuver_to_csv(&samples);
        let back = maneuver_from_csv(&text).unwrap();
        assert_eq!(samples, back);
    }

    #[test]
    fn csv_rejects_bad_header_and_shuffled_time() {
        assert!(maneuver_from_csv("time,cl,cm,cn\n0,0,0,0\n").is_err());
        assert!(maneuver_from_csv("t,cl,cm,cn\n1,0,0,0\n0.5,0,0,0\n").is_err());
        assert!(maneuver_from_csv("t,cl,cm,cn\n").is_err());
    }
}
