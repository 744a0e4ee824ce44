//! Plain-text interchange formats: an OFF-like polytope format for golden
//! files and plotting, and the key-value model file.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so a
//! written file parses back to bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::actuator::ActuatorParams;
use crate::allocator::AircraftModel;
use crate::error::AllocError;
use crate::polytope::{BoxLimits, PolytopeV};

/// Serialize a polytope: header, counts, vertex lines, facet index lines.
pub fn polytope_to_off(p: &PolytopeV) -> String {
    let mut out = String::from("OFF\n");
    writeln!(
        out,
        "{} {} {}",
        p.vertex_count(),
        p.facet_count(),
        p.edge_count()
    )
    .expect("string write");
    for v in p.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z).expect("string write");
    }
    for f in p.facets() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).expect("string write");
    }
    out
}

/// Parse the OFF-like format back into raw vertices and facets.
pub fn polytope_from_off(text: &str) -> io::Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>)> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if header.trim() != "OFF" {
        return Err(bad(format!("expected OFF header, got '{header}'")));
    }
    let counts = lines.next().ok_or_else(|| bad("missing counts".into()))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|w| w.parse().map_err(|e| bad(format!("count: {e}"))))
        .collect::<io::Result<_>>()?;
    if counts.len() != 3 {
        return Err(bad("counts line needs three fields".into()));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines
            .next()
            .ok_or_else(|| bad("missing vertex line".into()))?;
        let xyz: Vec<f64> = line
            .split_whitespace()
            .map(|w| w.parse().map_err(|e| bad(format!("vertex: {e}"))))
            .collect::<io::Result<_>>()?;
        if xyz.len() != 3 {
            return Err(bad("vertex line needs three coordinates".into()));
        }
        vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = lines
            .next()
            .ok_or_else(|| bad("missing facet line".into()))?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|w| w.parse().map_err(|e| bad(format!("facet: {e}"))))
            .collect::<io::Result<_>>()?;
        if ids.len() != 4 || ids[0] != 3 {
            return Err(bad("facet line must read '3 i j k'".into()));
        }
        if ids[1..].iter().any(|&i| i >= nv) {
            return Err(bad("facet index out of range".into()));
        }
        facets.push([ids[1], ids[2], ids[3]]);
    }
    Ok((vertices, facets))
}

pub fn write_off(path: &Path, p: &PolytopeV) -> io::Result<()> {
    fs::write(path, polytope_to_off(p))
}

/// A parsed model file: the allocation model plus the servo parameters.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: AircraftModel,
    pub actuators: Vec<ActuatorParams>,
}

/// Parse the key-value model format. Keys hold either a scalar or a
/// bracketed array; `#` starts a comment. Required keys: the effectiveness
/// rows `b.roll`, `b.pitch`, `b.yaw`; `position_lower/upper`;
/// `rate_lower/upper`; `a_diag` (or rows `a_row_1..a_row_m`); and the servo
/// arrays `omega0`, `zeta`.
pub fn model_from_text(text: &str) -> io::Result<ModelFile> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);

    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {lineno}: expected 'key = value'")))?;
        let key = key.trim().to_string();
        let value = value.trim();
        let numbers: Vec<f64> =
            if let Some(inner) = value.strip_prefix('[').and_then(|v| v.strip_suffix(']')) {
                inner
                    .split(',')
                    .map(str::trim)
                    .filter(|w| !w.is_empty())
                    .map(|w| {
                        w.parse()
                            .map_err(|e| bad(format!("line {lineno}: '{w}': {e}")))
                    })
                    .collect::<io::Result<_>>()?
            } else {
                vec![value
                    .parse()
                    .map_err(|e| bad(format!("line {lineno}: '{value}': {e}")))?]
            };
        entries.push((key, numbers));
    }

    let take = |key: &str| -> io::Result<Vec<f64>> {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| bad(format!("missing key '{key}'")))
    };

    let roll = take("b.roll")?;
    let pitch = take("b.pitch")?;
    let yaw = take("b.yaw")?;
    let m = roll.len();
    if pitch.len() != m || yaw.len() != m || m == 0 {
        return Err(bad(
            "b.roll, b.pitch, b.yaw must share a nonzero length".into()
        ));
    }
    let mut b = DMatrix::zeros(3, m);
    for j in 0..m {
        b[(0, j)] = roll[j];
        b[(1, j)] = pitch[j];
        b[(2, j)] = yaw[j];
    }

    let vector = |key: &str| -> io::Result<DVector<f64>> {
        let v = take(key)?;
        if v.len() != m {
            return Err(bad(format!("'{key}' needs {m} entries, got {}", v.len())));
        }
        Ok(DVector::from_vec(v))
    };

    let position = BoxLimits::new(vector("position_lower")?, vector("position_upper")?)
        .map_err(|e| bad(format!("position limits: {e}")))?;
    let rates = BoxLimits::new(vector("rate_lower")?, vector("rate_upper")?)
        .map_err(|e| bad(format!("rate limits: {e}")))?;

    let dynamics = if entries.iter().any(|(k, _)| k == "a_diag") {
        DMatrix::from_diagonal(&vector("a_diag")?)
    } else {
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            let row = take(&format!("a_row_{}", i + 1))?;
            if row.len() != m {
                return Err(bad(format!("a_row_{} needs {m} entries", i + 1)));
            }
            for j in 0..m {
                a[(i, j)] = row[j];
            }
        }
        a
    };

    let omega0 = vector("omega0")?;
    let zeta = vector("zeta")?;
    let actuators = (0..m)
        .map(|j| {
            ActuatorParams::new(
                omega0[j],
                zeta[j],
                (position.lower()[j], position.upper()[j]),
                rates.upper()[j],
            )
        })
        .collect();

    let model = AircraftModel::new(b, position, rates, dynamics)
        .map_err(|e: AllocError| bad(format!("model: {e}")))?;
    Ok(ModelFile { model, actuators })
}

/// Serialize a model (and its servo parameters) in the key-value format.
pub fn model_to_text(file: &ModelFile) -> String {
    let model = &file.model;
    let m = model.actuator_count();
    let fmt_row = |row: Vec<f64>| -> String {
        let parts: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        format!("[{}]", parts.join(", "))
    };
    let b = model.effectiveness();
    let mut out = String::new();
    writeln!(out, "# control allocation model ({m} actuators)").unwrap();
    for (name, r) in [("b.roll", 0), ("b.pitch", 1), ("b.yaw", 2)] {
        writeln!(
            out,
            "{name} = {}",
            fmt_row((0..m).map(|j| b[(r, j)]).collect())
        )
        .unwrap();
    }
    writeln!(
        out,
        "position_lower = {}",
        fmt_row(model.position_limits().lower().iter().copied().collect())
    )
    .unwrap();
    writeln!(
        out,
        "position_upper = {}",
        fmt_row(model.position_limits().upper().iter().copied().collect())
    )
    .unwrap();
    writeln!(
        out,
        "rate_lower = {}",
        fmt_row(model.rate_limits().lower().iter().copied().collect())
    )
    .unwrap();
    writeln!(
        out,
        "rate_upper = {}",
        fmt_row(model.rate_limits().upper().iter().copied().collect())
    )
    .unwrap();
    let a = model.dynamics();
    let diagonal = model.has_diagonal_dynamics();
    if diagonal {
        writeln!(
            out,
            "a_diag = {}",
            fmt_row(a.diagonal().iter().copied().collect())
        )
        .unwrap();
    } else {
        for i in 0..m {
            writeln!(
                out,
                "a_row_{} = {}",
                i + 1,
                fmt_row((0..m).map(|j| a[(i, j)]).collect())
            )
            .unwrap();
        }
    }
    writeln!(
        out,
        "omega0 = {}",
        fmt_row(file.actuators.iter().map(|p| p.omega0).collect())
    )
    .unwrap();
    writeln!(
        out,
        "zeta = {}",
        fmt_row(file.actuators.iter().map(|p| p.zeta).collect())
    )
    .unwrap();
    out
}

pub fn read_model(path: &Path) -> io::Result<ModelFile> {
    model_from_text(&fs::read_to_string(path)?)
}

pub fn write_model(path: &Path, file: &ModelFile) -> io::Result<()> {
    fs::write(path, model_to_text(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f18;
    use crate::polytope::convex_hull_3d;

    fn cube() -> PolytopeV {
        let mut pts = Vec::new();
        for &x in &[-1.0, 1.0] {
            for &y in &[-1.0, 1.0] {
                for &z in &[-1.0, 1.0] {
                    pts.push(Vector3::new(x, y, z));
                }
            }
        }
        convex_hull_3d(&pts).unwrap()
    }

    #[test]
    fn off_roundtrip_is_bit_exact() {
        let hull = cube();
        let text = polytope_to_off(&hull);
        let (vertices, facets) = polytope_from_off(&text).unwrap();
        assert_eq!(vertices.as_slice(), hull.vertices());
        assert_eq!(facets.as_slice(), hull.facets());
        // Counts line carries V, F, E.
        let counts = text.lines().nth(1).unwrap();
        assert_eq!(counts, "8 12 18");
    }

    #[test]
    fn off_rejects_malformed_input() {
        assert!(polytope_from_off("").is_err());
        assert!(polytope_from_off("NOT_OFF\n1 0 0\n0 0 0\n").is_err());
        assert!(polytope_from_off("OFF\n1 1 0\n0 0 0\n3 0 0 5\n").is_err());
    }

    #[test]
    fn model_file_roundtrip_preserves_f18() {
        let original = ModelFile {
            model: f18::model(),
            actuators: f18::actuators(),
        };
        let text = model_to_text(&original);
        let parsed = model_from_text(&text).unwrap();
        assert_eq!(parsed.model.effectiveness(), original.model.effectiveness());
        assert_eq!(
            parsed.model.position_limits(),
            original.model.position_limits()
        );
        assert_eq!(parsed.model.dynamics(), original.model.dynamics());
        assert_eq!(parsed.actuators.len(), 7);
        assert_eq!(parsed.actuators[0].omega0, 30.74);
        assert_eq!(parsed.actuators[6].zeta, 0.69);
    }

    #[test]
    fn model_file_errors_name_the_problem() {
        let err = model_from_text("b.roll = [1, 2]\n").unwrap_err();
        assert!(err.to_string().contains("b.pitch"));
        let err = model_from_text("garbage line\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn model_file_supports_full_dynamic_matrix() {
        let text = "\
b.roll = [1, 0, 0, 0]
b.pitch = [0, 1, 0, 0]
b.yaw = [0, 0, 1, 0]
position_lower = [-1, -1, -1, -1]
position_upper = [1, 1, 1, 1]
rate_lower = [-5, -5, -5, -5]
rate_upper = [5, 5, 5, 5]
a_row_1 = [-2, 0.1, 0, 0]
a_row_2 = [0, -2, 0, 0]
a_row_3 = [0, 0, -2, 0]
a_row_4 = [0, 0, 0, -2]
omega0 = [30, 30, 30, 30]
zeta = [0.7, 0.7, 0.7, 0.7]
";
        let parsed = model_from_text(text).unwrap();
        assert!(!parsed.model.has_diagonal_dynamics());
        assert_eq!(parsed.model.dynamics()[(0, 1)], 0.1);
    }
}
