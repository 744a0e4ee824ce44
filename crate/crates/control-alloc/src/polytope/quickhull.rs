//! Quickhull in three dimensions.
//!
//! Tolerances are relative to the input bounding box rather than exact
//! arithmetic; see [`hull_epsilon`]. The output keeps coplanar triangles
//! unmerged, so a flat quadrilateral facet of the true hull shows up as two
//! triangles sharing a plane.

use nalgebra::Vector3;

use crate::error::GeometryError;

/// Relative tolerance for visibility tests, scaled by the bounding box.
const REL_EPS: f64 = 1e-12;

/// Safety factor on the final containment validation: points discarded as
/// coplanar against an intermediate face can drift a few epsilons outside
/// the final triangulation.
const VALIDATE_SLACK: f64 = 100.0;

/// Hard cap on refinement iterations, as a multiple of the point count.
const MAX_ITER_FACTOR: usize = 16;

pub(crate) struct RawHull {
    /// Hull vertices; always a subset of the (deduplicated) input points.
    pub vertices: Vec<Vector3<f64>>,
    /// Outward-oriented triangles indexing into `vertices`.
    pub facets: Vec<[usize; 3]>,
}

/// Visibility epsilon for a point cloud: `REL_EPS` times the sum of the
/// bounding-box extents.
pub fn hull_epsilon(points: &[Vector3<f64>]) -> f64 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = hi - lo;
    let span = extent.x + extent.y + extent.z;
    (span * REL_EPS).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
struct Face {
    pts: [usize; 3],
    /// Unit outward normal.
    normal: Vector3<f64>,
    /// Plane offset: `normal . x = offset` on the face.
    offset: f64,
    /// Neighbor face across edge `(pts[i], pts[(i+1)%3])`.
    neighbors: [usize; 3],
    /// Conflict list: points strictly outside this face, with distances.
    outside: Vec<(usize, f64)>,
    alive: bool,
}

impl Face {
    fn new(points: &[Vector3<f64>], pts: [usize; 3]) -> Result<Self, GeometryError> {
        let a = points[pts[0]];
        let raw = (points[pts[1]] - a).cross(&(points[pts[2]] - a));
        let len = raw.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(GeometryError::HullConstruction(format!(
                "degenerate face through points {:?}",
                pts
            )));
        }
        let normal = raw / len;
        Ok(Face {
            pts,
            normal,
            offset: normal.dot(&a),
            neighbors: [usize::MAX; 3],
            outside: Vec::new(),
            alive: true,
        })
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }

    fn flip(&mut self) {
        self.pts.swap(1, 2);
        // Edge order changes from (01,12,20) to (02,21,10): neighbor of new
        // edge i is the old neighbor of edge 2-i.
        self.neighbors.swap(0, 2);
        self.normal = -self.normal;
        self.offset = -self.offset;
    }
}

/// Deduplicate coincident points (within `eps`), keeping first occurrences.
/// Larger clouds go through a sort-window pass instead of the quadratic scan;
/// stragglers that slip through do not affect hull correctness, they are
/// discarded as interior once their twin becomes a vertex.
fn dedup(points: &[Vector3<f64>], eps: f64) -> Vec<Vector3<f64>> {
    if points.len() <= 4096 {
        let mut kept: Vec<Vector3<f64>> = Vec::with_capacity(points.len());
        for p in points {
            if kept.iter().all(|q| (p - q).norm() > eps) {
                kept.push(*p);
            }
        }
        return kept;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i], points[j]);
        (a.x, a.y, a.z)
            .partial_cmp(&(b.x, b.y, b.z))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut drop = vec![false; points.len()];
    for (rank, &i) in order.iter().enumerate() {
        if drop[i] {
            continue;
        }
        for &j in order[rank + 1..].iter() {
            if points[j].x - points[i].x > eps {
                break;
            }
            if (points[i] - points[j]).norm() <= eps {
                drop[j] = true;
            }
        }
    }
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop[*i])
        .map(|(_, p)| *p)
        .collect()
}

/// Affine rank of a point set, for degenerate-input diagnostics.
fn affine_rank(points: &[Vector3<f64>], eps: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let origin = points[0];
    let mut basis: Vec<Vector3<f64>> = Vec::new();
    for p in &points[1..] {
        let mut v = p - origin;
        for b in &basis {
            v -= b * v.dot(b);
        }
        if v.norm() > eps {
            basis.push(v.normalize());
            if basis.len() == 3 {
                break;
            }
        }
    }
    basis.len()
}

/// Choose four affinely independent seed points, maximizing spread.
fn seed_tetrahedron(points: &[Vector3<f64>], eps: f64) -> Result<[usize; 4], GeometryError> {
    // Farthest pair among axis extremes.
    let mut extremes: Vec<usize> = Vec::with_capacity(6);
    for axis in 0..3 {
        let mut lo = 0;
        let mut hi = 0;
        for (i, p) in points.iter().enumerate() {
            if p[axis] < points[lo][axis] {
                lo = i;
            }
            if p[axis] > points[hi][axis] {
                hi = i;
            }
        }
        extremes.push(lo);
        extremes.push(hi);
    }
    let (mut i0, mut i1, mut best) = (0, 0, -1.0);
    for (a, &pa) in extremes.iter().enumerate() {
        for &pb in &extremes[a + 1..] {
            let d = (points[pa] - points[pb]).norm_squared();
            if d > best {
                best = d;
                i0 = pa;
                i1 = pb;
            }
        }
    }
    if best.sqrt() <= eps {
        return Err(GeometryError::DegenerateHull { rank: 0 });
    }

    // Farthest point from the line i0-i1.
    let dir = (points[i1] - points[i0]).normalize();
    let (mut i2, mut best) = (usize::MAX, eps);
    for (i, p) in points.iter().enumerate() {
        let rel = p - points[i0];
        let d = (rel - dir * rel.dot(&dir)).norm();
        if d > best {
            best = d;
            i2 = i;
        }
    }
    if i2 == usize::MAX {
        return Err(GeometryError::DegenerateHull { rank: 1 });
    }

    // Farthest point from the plane i0-i1-i2.
    let normal = (points[i1] - points[i0])
        .cross(&(points[i2] - points[i0]))
        .normalize();
    let d0 = normal.dot(&points[i0]);
    let (mut i3, mut best) = (usize::MAX, eps);
    for (i, p) in points.iter().enumerate() {
        let d = (normal.dot(p) - d0).abs();
        if d > best {
            best = d;
            i3 = i;
        }
    }
    if i3 == usize::MAX {
        return Err(GeometryError::DegenerateHull { rank: 2 });
    }

    Ok([i0, i1, i2, i3])
}

/// Compute the convex hull of `input`. At least four points spanning three
/// dimensions are required.
pub(crate) fn quickhull(input: &[Vector3<f64>]) -> Result<RawHull, GeometryError> {
    let eps = hull_epsilon(input);
    let points = dedup(input, eps);
    if points.len() < 4 {
        return Err(GeometryError::DegenerateHull {
            rank: affine_rank(&points, eps),
        });
    }
    let seed = seed_tetrahedron(&points, eps)?;

    // Initial tetrahedron: the four faces of the seed simplex, each oriented
    // away from the remaining seed vertex.
    let mut faces: Vec<Face> = Vec::new();
    for skip in 0..4 {
        let kept: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| seed[k]).collect();
        let mut face = Face::new(&points, [kept[0], kept[1], kept[2]])?;
        if face.distance(&points[seed[skip]]) > 0.0 {
            face.flip();
        }
        faces.push(face);
    }
    for i in 0..4 {
        let mut slot = 0;
        for j in 0..4 {
            if i != j {
                faces[i].neighbors[slot] = j;
                slot += 1;
            }
        }
    }
    // The initial neighbor slots are unordered; repair them to match edges.
    relink_neighbors(&mut faces, &[0, 1, 2, 3])?;

    // Initial conflict lists.
    let in_seed = |i: usize| seed.contains(&i);
    for (i, p) in points.iter().enumerate() {
        if in_seed(i) {
            continue;
        }
        assign_point(&mut faces, &[0, 1, 2, 3], i, p, eps);
    }

    let max_iter = MAX_ITER_FACTOR * points.len().max(4);
    for _ in 0..max_iter {
        // Globally farthest conflict point.
        let mut eye: Option<(usize, usize, f64)> = None; // (face, point, dist)
        for (fi, face) in faces.iter().enumerate() {
            if !face.alive {
                continue;
            }
            for &(pi, d) in &face.outside {
                if eye.map_or(true, |(_, _, bd)| d > bd) {
                    eye = Some((fi, pi, d));
                }
            }
        }
        let Some((start_face, eye_idx, _)) = eye else {
            return finish(points, faces, eps);
        };
        let eye_point = points[eye_idx];

        // Flood-fill the faces visible from the eye point.
        let mut visible = vec![start_face];
        let mut seen = vec![false; faces.len()];
        seen[start_face] = true;
        let mut stack = vec![start_face];
        while let Some(fi) = stack.pop() {
            for &ni in &faces[fi].neighbors {
                if ni == usize::MAX || seen[ni] || !faces[ni].alive {
                    continue;
                }
                seen[ni] = true;
                if faces[ni].distance(&eye_point) > eps {
                    visible.push(ni);
                    stack.push(ni);
                }
            }
        }

        // Horizon: edges between a visible face and a surviving neighbor.
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new(); // (a, b, outside_face)
        for &fi in &visible {
            for e in 0..3 {
                let ni = faces[fi].neighbors[e];
                if ni == usize::MAX {
                    return Err(GeometryError::HullConstruction("unlinked face edge".into()));
                }
                if !visible.contains(&ni) {
                    let a = faces[fi].pts[e];
                    let b = faces[fi].pts[(e + 1) % 3];
                    horizon.push((a, b, ni));
                }
            }
        }
        if horizon.len() < 3 {
            return Err(GeometryError::HullConstruction(format!(
                "horizon of length {} from eye point {eye_idx}",
                horizon.len()
            )));
        }

        // Gather orphaned conflict points before killing the visible faces.
        let mut orphans: Vec<usize> = Vec::new();
        for &fi in &visible {
            for &(pi, _) in &faces[fi].outside {
                if pi != eye_idx && !orphans.contains(&pi) {
                    orphans.push(pi);
                }
            }
            faces[fi].alive = false;
            faces[fi].outside.clear();
        }

        // Cone of new faces from the eye point over the horizon.
        let inner = interior_point(&points, &faces);
        let mut new_faces: Vec<usize> = Vec::new();
        for &(a, b, outer) in &horizon {
            let mut face = Face::new(&points, [eye_idx, a, b])?;
            // Orientation follows from the horizon edge order, but guard
            // against rounding on near-degenerate cones.
            if face.distance(&inner) > 0.0 {
                face.flip();
            }
            face.neighbors[1] = outer; // edge (a, b)
            let id = faces.len();
            // Point the surviving neighbor back at the new face.
            let outer_face = &mut faces[outer];
            for e in 0..3 {
                let oa = outer_face.pts[e];
                let ob = outer_face.pts[(e + 1) % 3];
                if (oa == b && ob == a) || (oa == a && ob == b) {
                    outer_face.neighbors[e] = id;
                }
            }
            faces.push(face);
            new_faces.push(id);
        }
        relink_cone(&mut faces, &new_faces)?;

        // Redistribute orphans across the new faces.
        for pi in orphans {
            assign_point(&mut faces, &new_faces, pi, &points[pi], eps);
        }
    }

    Err(GeometryError::HullConstruction(format!(
        "no convergence after {max_iter} iterations"
    )))
}

/// Average of current live-face vertices; strictly interior for a convex
/// arrangement, used only as an orientation tie-breaker.
fn interior_point(points: &[Vector3<f64>], faces: &[Face]) -> Vector3<f64> {
    let mut sum = Vector3::zeros();
    let mut n = 0.0f64;
    for face in faces.iter().filter(|f| f.alive) {
        for &pi in &face.pts {
            sum += points[pi];
            n += 1.0;
        }
    }
    sum / n.max(1.0)
}

/// Assign a point to whichever candidate face it is farthest outside of.
fn assign_point(faces: &mut [Face], candidates: &[usize], pi: usize, p: &Vector3<f64>, eps: f64) {
    let mut best: Option<(usize, f64)> = None;
    for &fi in candidates {
        if !faces[fi].alive {
            continue;
        }
        let d = faces[fi].distance(p);
        if d > eps && best.map_or(true, |(_, bd)| d > bd) {
            best = Some((fi, d));
        }
    }
    if let Some((fi, d)) = best {
        faces[fi].outside.push((pi, d));
    }
}

/// Link mutual neighbors among the freshly created cone faces. Each cone
/// face has its outer edge already wired; the two eye edges pair up with
/// sibling cone faces.
fn relink_cone(faces: &mut [Face], new_faces: &[usize]) -> Result<(), GeometryError> {
    relink_neighbors(faces, new_faces)
}

fn relink_neighbors(faces: &mut [Face], ids: &[usize]) -> Result<(), GeometryError> {
    for &i in ids {
        for ei in 0..3 {
            let a = faces[i].pts[ei];
            let b = faces[i].pts[(ei + 1) % 3];
            // Find a partner among the same id set sharing the reversed edge.
            let mut found = faces[i].neighbors[ei];
            for &j in ids {
                if i == j {
                    continue;
                }
                for ej in 0..3 {
                    let ja = faces[j].pts[ej];
                    let jb = faces[j].pts[(ej + 1) % 3];
                    if ja == b && jb == a {
                        found = j;
                    }
                }
            }
            if found == usize::MAX {
                return Err(GeometryError::HullConstruction(format!(
                    "open edge ({a}, {b}) in face {i}"
                )));
            }
            faces[i].neighbors[ei] = found;
        }
    }
    Ok(())
}

/// Compact live faces into the output representation and validate it.
fn finish(points: Vec<Vector3<f64>>, faces: Vec<Face>, eps: f64) -> Result<RawHull, GeometryError> {
    let mut used: Vec<usize> = Vec::new();
    for face in faces.iter().filter(|f| f.alive) {
        for &pi in &face.pts {
            if !used.contains(&pi) {
                used.push(pi);
            }
        }
    }
    used.sort_unstable();
    let remap = |pi: usize| used.binary_search(&pi).expect("hull vertex present");

    let vertices: Vec<Vector3<f64>> = used.iter().map(|&i| points[i]).collect();
    let mut facets: Vec<[usize; 3]> = Vec::new();
    let centroid: Vector3<f64> = vertices.iter().sum::<Vector3<f64>>() / vertices.len() as f64;
    for face in faces.iter().filter(|f| f.alive) {
        let mut tri = [remap(face.pts[0]), remap(face.pts[1]), remap(face.pts[2])];
        // Enforce outward orientation against the vertex centroid.
        let a = vertices[tri[0]];
        let n = (vertices[tri[1]] - a).cross(&(vertices[tri[2]] - a));
        if n.dot(&(centroid - a)) > 0.0 {
            tri.swap(1, 2);
        }
        facets.push(tri);
    }

    // Containment: every input point inside every facet plane.
    let slack = VALIDATE_SLACK * eps;
    for facet in &facets {
        let a = vertices[facet[0]];
        let n = (vertices[facet[1]] - a).cross(&(vertices[facet[2]] - a));
        let len = n.norm();
        if !(len > 0.0) {
            return Err(GeometryError::HullConstruction(
                "zero-area output facet".into(),
            ));
        }
        let n = n / len;
        let d = n.dot(&a);
        for p in &points {
            if n.dot(p) - d > slack {
                return Err(GeometryError::HullConstruction(format!(
                    "point escapes hull by {:.3e}",
                    n.dot(p) - d
                )));
            }
        }
    }

    Ok(RawHull { vertices, facets })
}
