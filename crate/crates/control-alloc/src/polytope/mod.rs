//! Convex geometry of attainable moment sets.
//!
//! An over-actuated vehicle's actuator limits form an axis-aligned box in
//! actuator space ([`BoxLimits`]). Its image under the effectiveness matrix
//! is a convex polytope in moment space, held here either by its vertices
//! and triangular facets ([`PolytopeV`]) or by normalized half-space rows
//! ([`PolytopeH`], `N τ ⪯ 1`). The half-space form is what command clipping
//! and membership tests consume.
//!
//! Everything in this module is a pure function of its inputs; the types are
//! plain data, safe to share across threads.

mod quickhull;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::GeometryError;

pub use quickhull::hull_epsilon;

/// Default cap on the number of actuators for vertex enumeration
/// (`2^16` corners).
pub const DEFAULT_VERTEX_CAP: usize = 16;

/// Default membership tolerance, relative to the hull circumradius.
pub const DEFAULT_TOLERANCE_REL: f64 = 1e-9;

/// Per-actuator lower and upper bounds (positions in deg, or rates in deg/s).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxLimits {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxLimits {
    /// Build box limits, requiring `lower[j] < upper[j]` for every actuator.
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(GeometryError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for j in 0..lower.len() {
            if !(lower[j] < upper[j]) {
                return Err(GeometryError::HullConstruction(format!(
                    "bounds out of order at actuator {j}: {} >= {}",
                    lower[j], upper[j]
                )));
            }
        }
        Ok(BoxLimits { lower, upper })
    }

    /// Convenience constructor from slices.
    pub fn from_slices(lower: &[f64], upper: &[f64]) -> Result<Self, GeometryError> {
        Self::new(
            DVector::from_column_slice(lower),
            DVector::from_column_slice(upper),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    /// Componentwise membership with an absolute tolerance.
    pub fn holds(&self, u: &DVector<f64>, tol: f64) -> bool {
        u.len() == self.dim()
            && (0..self.dim()).all(|j| u[j] >= self.lower[j] - tol && u[j] <= self.upper[j] + tol)
    }

    /// All `2^m` corners of the box in binary-counter order: bit `j` of the
    /// counter selects `upper[j]`, so the first corner is all-lower and the
    /// last is all-upper. Uses [`DEFAULT_VERTEX_CAP`].
    pub fn enumerate_vertices(&self) -> Result<Vec<DVector<f64>>, GeometryError> {
        self.enumerate_vertices_capped(DEFAULT_VERTEX_CAP)
    }

    /// As [`enumerate_vertices`](Self::enumerate_vertices) with an explicit
    /// cap on the actuator count.
    pub fn enumerate_vertices_capped(
        &self,
        cap: usize,
    ) -> Result<Vec<DVector<f64>>, GeometryError> {
        let m = self.dim();
        if m > cap {
            return Err(GeometryError::VertexExplosion { actuators: m, cap });
        }
        let count = 1usize << m;
        let mut corners = Vec::with_capacity(count);
        for code in 0..count {
            let mut v = DVector::zeros(m);
            for j in 0..m {
                v[j] = if (code >> j) & 1 == 1 {
                    self.upper[j]
                } else {
                    self.lower[j]
                };
            }
            corners.push(v);
        }
        Ok(corners)
    }
}

/// Map actuator-space vertices through a `3×m` operator, preserving order.
pub fn map_vertices(
    vertices: &[DVector<f64>],
    operator: &DMatrix<f64>,
) -> Result<Vec<Vector3<f64>>, GeometryError> {
    if operator.nrows() != 3 {
        return Err(GeometryError::DimensionMismatch {
            expected: 3,
            got: operator.nrows(),
        });
    }
    let mut out = Vec::with_capacity(vertices.len());
    for v in vertices {
        if v.len() != operator.ncols() {
            return Err(GeometryError::DimensionMismatch {
                expected: operator.ncols(),
                got: v.len(),
            });
        }
        let image = operator * v;
        out.push(Vector3::new(image[0], image[1], image[2]));
    }
    Ok(out)
}

/// Vertex-and-facet representation of a bounded 3-D convex polytope.
///
/// Facets are outward-oriented triangles; coplanar triangles are kept as-is
/// rather than merged, so flat quadrilateral faces of the underlying set
/// appear as triangle pairs.
#[derive(Debug, Clone)]
pub struct PolytopeV {
    vertices: Vec<Vector3<f64>>,
    facets: Vec<[usize; 3]>,
}

/// Convex hull of a 3-D point set via quickhull.
///
/// Needs at least four points spanning three dimensions; rank-deficient
/// input is rejected with the detected affine rank.
pub fn convex_hull_3d(points: &[Vector3<f64>]) -> Result<PolytopeV, GeometryError> {
    let raw = quickhull::quickhull(points)?;
    Ok(PolytopeV {
        vertices: raw.vertices,
        facets: raw.facets,
    })
}

impl PolytopeV {
    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Number of distinct undirected edges in the facet mesh.
    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(self.facets.len() * 3);
        for f in &self.facets {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// `V − E + F`; equals 2 for a closed 2-manifold.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.facet_count() as i64
    }

    /// Per-axis `(min, max)` over the vertices.
    pub fn extents(&self) -> [(f64, f64); 3] {
        let mut out = [(f64::INFINITY, f64::NEG_INFINITY); 3];
        for v in &self.vertices {
            for axis in 0..3 {
                out[axis].0 = out[axis].0.min(v[axis]);
                out[axis].1 = out[axis].1.max(v[axis]);
            }
        }
        out
    }

    /// Largest vertex distance from the origin.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Signed volume via the divergence theorem over outward facets.
    pub fn volume(&self) -> f64 {
        let mut six_v = 0.0;
        for f in &self.facets {
            let (a, b, c) = (
                self.vertices[f[0]],
                self.vertices[f[1]],
                self.vertices[f[2]],
            );
            six_v += a.dot(&b.cross(&c));
        }
        six_v / 6.0
    }

    /// Half-space form `N τ ⪯ 1` with the default tolerance
    /// ([`DEFAULT_TOLERANCE_REL`] of the circumradius).
    pub fn to_halfspace(&self) -> Result<PolytopeH, GeometryError> {
        self.to_halfspace_with_tolerance(DEFAULT_TOLERANCE_REL * self.circumradius())
    }

    /// Half-space form with an explicit geometric tolerance (same length
    /// units as the vertices).
    ///
    /// Each facet plane `n·τ = d` becomes the row `n/d`, which requires the
    /// origin strictly inside (`d > 0` for every facet). One row per
    /// triangle; rows of coplanar triangles are redundant duplicates and are
    /// kept, which is harmless for membership and clipping.
    pub fn to_halfspace_with_tolerance(&self, tolerance: f64) -> Result<PolytopeH, GeometryError> {
        let mut rows = Vec::with_capacity(self.facets.len());
        let interior_slack = hull_epsilon(&self.vertices);
        for f in &self.facets {
            let a = self.vertices[f[0]];
            let n = (self.vertices[f[1]] - a).cross(&(self.vertices[f[2]] - a));
            let len = n.norm();
            if !(len > 0.0) {
                return Err(GeometryError::HullConstruction(
                    "zero-area facet in half-space conversion".into(),
                ));
            }
            let unit = n / len;
            let d = unit.dot(&a);
            if d <= interior_slack {
                return Err(GeometryError::OriginNotInterior { offset: d });
            }
            rows.push(unit / d);
        }
        Ok(PolytopeH::from_rows(rows, tolerance))
    }
}

/// Half-space representation of a bounded 3-D convex polytope with the
/// origin strictly interior: the rows `N_i` encode membership as
/// `N_i · τ ≤ 1`.
#[derive(Debug, Clone)]
pub struct PolytopeH {
    rows: Vec<Vector3<f64>>,
    row_norms: Vec<f64>,
    tolerance: f64,
}

impl PolytopeH {
    fn from_rows(rows: Vec<Vector3<f64>>, tolerance: f64) -> Self {
        let row_norms = rows.iter().map(|r| r.norm()).collect();
        PolytopeH {
            rows,
            row_norms,
            tolerance,
        }
    }

    /// Normalized facet rows (`N_i · τ = 1` on the facet plane).
    pub fn rows(&self) -> &[Vector3<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Geometric membership tolerance (length units).
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Rows stacked into a `k×3` matrix.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), 3, |i, j| self.rows[i][j])
    }

    /// The products `N τ` for all rows.
    pub fn products(&self, tau: &Vector3<f64>) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(tau)).collect()
    }

    /// Largest row product `max_i N_i · τ`; 1 on the boundary.
    pub fn max_product(&self, tau: &Vector3<f64>) -> f64 {
        self.rows
            .iter()
            .map(|r| r.dot(tau))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership: `N τ ⪯ 1` rowwise, slackened by the geometric tolerance.
    pub fn contains(&self, tau: &Vector3<f64>) -> bool {
        self.rows
            .iter()
            .zip(&self.row_norms)
            .all(|(r, nrm)| r.dot(tau) <= 1.0 + self.tolerance * nrm)
    }

    /// Recover the vertex set by the dual-point construction: the rows are
    /// the polar dual's points, each facet of the dual hull maps back to a
    /// primal vertex.
    pub fn recover_vertices(&self) -> Result<Vec<Vector3<f64>>, GeometryError> {
        recover_vertices_from_rows(&self.rows)
    }
}

fn recover_vertices_from_rows(rows: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>, GeometryError> {
    let dual = convex_hull_3d(rows)?;
    let mut verts: Vec<Vector3<f64>> = Vec::new();
    for f in dual.facets() {
        let a = dual.vertices()[f[0]];
        let w = (dual.vertices()[f[1]] - a).cross(&(dual.vertices()[f[2]] - a));
        let b = w.dot(&a);
        // Outward dual facet: offset must be positive when the polytope is
        // bounded (the rows positively span 3-space).
        if !(b > 0.0) {
            return Err(GeometryError::HullConstruction(
                "dual facet with non-positive offset: half-space system unbounded".into(),
            ));
        }
        verts.push(w / b);
    }
    // Coplanar dual triangles reproduce the same primal vertex; merge them.
    let scale = verts.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = (scale * 1e-9).max(f64::MIN_POSITIVE);
    let mut unique: Vec<Vector3<f64>> = Vec::with_capacity(verts.len());
    for v in verts {
        if unique.iter().all(|u| (u - v).norm() > tol) {
            unique.push(v);
        }
    }
    Ok(unique)
}

/// Intersection of two origin-interior hulls: pool both half-space systems,
/// recover the vertices of the joint system by the dual construction, and
/// re-hull them.
pub fn intersect(a: &PolytopeV, b: &PolytopeV) -> Result<PolytopeV, GeometryError> {
    let ha = a.to_halfspace()?;
    let hb = b.to_halfspace()?;
    let mut rows = ha.rows.clone();
    rows.extend_from_slice(&hb.rows);
    let verts = recover_vertices_from_rows(&rows)?;
    convex_hull_3d(&verts).map_err(|e| match e {
        GeometryError::DegenerateHull { rank } => GeometryError::DegenerateIntersection { rank },
        other => other,
    })
}

#[cfg(test)]
mod tests;
