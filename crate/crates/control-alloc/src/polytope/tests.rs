use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;

use super::*;
use crate::error::GeometryError;

/// Independent oracle: for the image of a box under a linear map, the
/// coordinatewise extent along axis `k` is the sum of per-actuator best
/// corners, `Σ_j max/min(T_kj·l_j, T_kj·u_j)`.
pub(crate) fn corner_sum_extents(t: &DMatrix<f64>, limits: &BoxLimits) -> [(f64, f64); 3] {
    let mut out = [(0.0, 0.0); 3];
    for axis in 0..3 {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for j in 0..limits.dim() {
            let a = t[(axis, j)] * limits.lower()[j];
            let b = t[(axis, j)] * limits.upper()[j];
            lo += a.min(b);
            hi += a.max(b);
        }
        out[axis] = (lo, hi);
    }
    out
}

pub(crate) fn f18_effectiveness() -> DMatrix<f64> {
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

pub(crate) fn f18_position_limits() -> BoxLimits {
    BoxLimits::from_slices(
        &[-24.0, -24.0, -8.0, -8.0, -25.0, -25.0, -30.0],
        &[10.5, 10.5, 45.0, 45.0, 42.0, 42.0, 30.0],
    )
    .unwrap()
}

fn unit_cube_points() -> Vec<Vector3<f64>> {
    let mut pts = Vec::new();
    for &x in &[-1.0, 1.0] {
        for &y in &[-1.0, 1.0] {
            for &z in &[-1.0, 1.0] {
                pts.push(Vector3::new(x, y, z));
            }
        }
    }
    pts
}

fn set_close(a: &[Vector3<f64>], b: &[Vector3<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| b.iter().any(|q| (p - q).norm() <= tol))
        && b.iter().all(|q| a.iter().any(|p| (p - q).norm() <= tol))
}

#[test]
fn corners_of_square_in_counter_order() {
    let limits = BoxLimits::from_slices(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let corners = limits.enumerate_vertices().unwrap();
    let expect = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]];
    assert_eq!(corners.len(), 4);
    for (c, e) in corners.iter().zip(expect.iter()) {
        assert_eq!(c.as_slice(), e.as_slice());
    }
}

#[test]
fn corners_of_interval() {
    let limits = BoxLimits::from_slices(&[0.0], &[2.0]).unwrap();
    let corners = limits.enumerate_vertices().unwrap();
    assert_eq!(corners.len(), 2);
    assert_eq!(corners[0][0], 0.0);
    assert_eq!(corners[1][0], 2.0);
}

#[test]
fn f18_has_128_corners_including_all_upper() {
    let corners = f18_position_limits().enumerate_vertices().unwrap();
    assert_eq!(corners.len(), 128);
    let all_upper = DVector::from_column_slice(&[10.5, 10.5, 45.0, 45.0, 42.0, 42.0, 30.0]);
    assert!(corners.iter().any(|c| c == &all_upper));
    // Binary-counter order puts the all-upper corner last.
    assert_eq!(corners[127], all_upper);
}

#[test]
fn corner_cap_is_enforced() {
    let limits = BoxLimits::from_slices(&[-1.0; 5], &[1.0; 5]).unwrap();
    let err = limits.enumerate_vertices_capped(4).unwrap_err();
    assert!(matches!(
        err,
        GeometryError::VertexExplosion {
            actuators: 5,
            cap: 4
        }
    ));
    assert!(err.to_string().contains('5') && err.to_string().contains('4'));
}

#[test]
fn reversed_bounds_rejected() {
    assert!(BoxLimits::from_slices(&[1.0, 0.0], &[0.5, 1.0]).is_err());
    assert!(BoxLimits::from_slices(&[], &[]).is_err());
}

#[test]
fn map_through_projection_keeps_first_coords() {
    let limits = BoxLimits::from_slices(&[-1.0; 4], &[1.0; 4]).unwrap();
    let corners = limits.enumerate_vertices().unwrap();
    let mut t = DMatrix::zeros(3, 4);
    t[(0, 0)] = 1.0;
    t[(1, 1)] = 1.0;
    t[(2, 2)] = 1.0;
    let mapped = map_vertices(&corners, &t).unwrap();
    for (c, m) in corners.iter().zip(mapped.iter()) {
        assert_eq!(m.x, c[0]);
        assert_eq!(m.y, c[1]);
        assert_eq!(m.z, c[2]);
    }
}

#[test]
fn map_through_zero_collapses_to_origin() {
    let limits = BoxLimits::from_slices(&[-1.0, -2.0], &[1.0, 2.0]).unwrap();
    let corners = limits.enumerate_vertices().unwrap();
    let mapped = map_vertices(&corners, &DMatrix::zeros(3, 2)).unwrap();
    assert!(mapped.iter().all(|m| m.norm() == 0.0));
}

#[test]
fn map_dimension_mismatch_rejected() {
    let corners = vec![DVector::from_column_slice(&[1.0, 2.0])];
    assert!(map_vertices(&corners, &DMatrix::zeros(3, 3)).is_err());
    assert!(map_vertices(&corners, &DMatrix::zeros(2, 2)).is_err());
}

/// The mapped F-18 corner cloud must reach exactly the corner-sum extents.
#[test]
fn f18_image_extents_match_corner_sum_oracle() {
    let b = f18_effectiveness();
    let limits = f18_position_limits();
    let oracle = corner_sum_extents(&b, &limits);
    // Frozen from the oracle: max pitch extent is 0.45210 exactly.
    assert_relative_eq!(oracle[1].1, 0.4521, max_relative = 1e-12);

    let mapped = map_vertices(&limits.enumerate_vertices().unwrap(), &b).unwrap();
    for axis in 0..3 {
        let lo = mapped.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = mapped
            .iter()
            .map(|p| p[axis])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(lo, oracle[axis].0, epsilon = 1e-12);
        assert_relative_eq!(hi, oracle[axis].1, epsilon = 1e-12);
    }
}

#[test]
fn cube_hull_discards_interior_point() {
    let mut pts = unit_cube_points();
    pts.push(Vector3::zeros());
    let hull = convex_hull_3d(&pts).unwrap();
    assert_eq!(hull.vertex_count(), 8);
    assert_eq!(hull.facet_count(), 12);
    assert_eq!(hull.edge_count(), 18);
    assert_eq!(hull.euler_characteristic(), 2);
    assert_relative_eq!(hull.volume(), 8.0, max_relative = 1e-12);
}

#[test]
fn coplanar_points_rejected_with_rank() {
    let pts = vec![
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(1.0, 1.0, 0.0),
    ];
    match convex_hull_3d(&pts).unwrap_err() {
        GeometryError::DegenerateHull { rank } => assert_eq!(rank, 2),
        other => panic!("expected degenerate hull, got {other}"),
    }
}

#[test]
fn collinear_and_coincident_ranks() {
    let line: Vec<_> = (0..6)
        .map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.0))
        .collect();
    match convex_hull_3d(&line).unwrap_err() {
        GeometryError::DegenerateHull { rank } => assert_eq!(rank, 1),
        other => panic!("unexpected {other}"),
    }
    let same = vec![Vector3::new(1.0, 1.0, 1.0); 5];
    match convex_hull_3d(&same).unwrap_err() {
        GeometryError::DegenerateHull { rank } => assert_eq!(rank, 0),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn f18_hull_reaches_oracle_extents() {
    let b = f18_effectiveness();
    let limits = f18_position_limits();
    let mapped = map_vertices(&limits.enumerate_vertices().unwrap(), &b).unwrap();
    let hull = convex_hull_3d(&mapped).unwrap();
    let oracle = corner_sum_extents(&b, &limits);
    let extents = hull.extents();
    for axis in 0..3 {
        assert_relative_eq!(extents[axis].0, oracle[axis].0, epsilon = 1e-12);
        assert_relative_eq!(extents[axis].1, oracle[axis].1, epsilon = 1e-12);
    }
    assert_eq!(hull.euler_characteristic(), 2);

    // Every mapped point lies inside the half-space form.
    let h = hull.to_halfspace().unwrap();
    assert!(mapped.iter().all(|p| h.contains(p)));
}

#[test]
fn cube_halfspace_rows_are_axis_aligned() {
    let hull = convex_hull_3d(&unit_cube_points()).unwrap();
    let h = hull.to_halfspace().unwrap();
    // Triangulated cube: 12 rows, each ±e_k.
    assert_eq!(h.len(), 12);
    for row in h.rows() {
        let abs = row.map(f64::abs);
        let max = abs.max();
        assert_relative_eq!(max, 1.0, epsilon = 1e-12);
        assert_relative_eq!(abs.x + abs.y + abs.z, 1.0, epsilon = 1e-12);
    }
    // Every vertex attains max row product 1.
    for v in hull.vertices() {
        assert_relative_eq!(h.max_product(v), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn simplex_facet_row_normalized_by_offset() {
    // Tetrahedron with the facet plane x + y + z = 3.
    let pts = vec![
        Vector3::new(3.0, 0.0, 0.0),
        Vector3::new(0.0, 3.0, 0.0),
        Vector3::new(0.0, 0.0, 3.0),
        Vector3::new(-1.0, -1.0, -1.0),
    ];
    let h = convex_hull_3d(&pts).unwrap().to_halfspace().unwrap();
    let expect = Vector3::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
    assert!(
        h.rows().iter().any(|r| (r - expect).norm() < 1e-12),
        "missing normalized row (1/3, 1/3, 1/3): {:?}",
        h.rows()
    );
}

#[test]
fn shifted_polytope_origin_not_interior() {
    let pts: Vec<_> = unit_cube_points()
        .into_iter()
        .map(|p| p + Vector3::new(5.0, 0.0, 0.0))
        .collect();
    let hull = convex_hull_3d(&pts).unwrap();
    assert!(matches!(
        hull.to_halfspace(),
        Err(GeometryError::OriginNotInterior { .. })
    ));
}

#[test]
fn contains_interior_boundary_exterior() {
    let h = convex_hull_3d(&unit_cube_points())
        .unwrap()
        .to_halfspace()
        .unwrap();
    assert!(h.contains(&Vector3::zeros()));
    assert!(h.contains(&Vector3::new(1.0, 0.0, 0.0)));
    assert!(!h.contains(&Vector3::new(2.0, 0.0, 0.0)));
}

#[test]
fn halfspace_roundtrip_recovers_cube_vertices() {
    let hull = convex_hull_3d(&unit_cube_points()).unwrap();
    let recovered = hull.to_halfspace().unwrap().recover_vertices().unwrap();
    assert!(set_close(&recovered, hull.vertices(), 1e-9));
}

#[test]
fn halfspace_roundtrip_recovers_f18_vertices() {
    let b = f18_effectiveness();
    let mapped = map_vertices(&f18_position_limits().enumerate_vertices().unwrap(), &b).unwrap();
    let hull = convex_hull_3d(&mapped).unwrap();
    let recovered = hull.to_halfspace().unwrap().recover_vertices().unwrap();
    assert!(
        set_close(
            &recovered,
            hull.vertices(),
            1e-9 * hull.circumradius().max(1.0)
        ),
        "recovered {} vertices, hull has {}",
        recovered.len(),
        hull.vertex_count()
    );
}

#[test]
fn nested_cubes_intersect_to_inner() {
    let outer = convex_hull_3d(&unit_cube_points()).unwrap();
    let inner_pts: Vec<_> = unit_cube_points().into_iter().map(|p| p * 0.5).collect();
    let inner = convex_hull_3d(&inner_pts).unwrap();
    let cap = intersect(&outer, &inner).unwrap();
    assert!(set_close(cap.vertices(), inner.vertices(), 1e-9));
}

#[test]
fn disjoint_translates_fail_to_intersect() {
    let a = convex_hull_3d(&unit_cube_points()).unwrap();
    let moved: Vec<_> = unit_cube_points()
        .into_iter()
        .map(|p| p + Vector3::new(10.0, 0.0, 0.0))
        .collect();
    let b = convex_hull_3d(&moved).unwrap();
    assert!(intersect(&a, &b).is_err());
}

/// Monte-Carlo volume oracle for the rotated-cube intersection.
#[test]
fn rotated_cube_intersection_volume_matches_monte_carlo() {
    use rand::{Rng, SeedableRng};

    let a = convex_hull_3d(&unit_cube_points()).unwrap();
    let angle = std::f64::consts::FRAC_PI_4;
    let (c, s) = (angle.cos(), angle.sin());
    let rotated: Vec<_> = unit_cube_points()
        .into_iter()
        .map(|p| Vector3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z))
        .collect();
    let b = convex_hull_3d(&rotated).unwrap();

    let cap = intersect(&a, &b).unwrap();
    let vol = cap.volume();
    assert!(vol < a.volume() && vol < b.volume());

    let ha = a.to_halfspace().unwrap();
    let hb = b.to_halfspace().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let n = 1_000_000usize;
    let mut hits = 0usize;
    for _ in 0..n {
        let p = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if ha.contains(&p) && hb.contains(&p) {
            hits += 1;
        }
    }
    let mc = 8.0 * hits as f64 / n as f64;
    assert_relative_eq!(vol, mc, max_relative = 0.01);
    // Closed form for this construction: a square prism cut to a regular
    // octagonal cross-section, volume 16·(√2 − 1).
    assert_relative_eq!(vol, 16.0 * (2.0f64.sqrt() - 1.0), max_relative = 1e-9);
}

#[test]
fn intersection_with_superset_is_identity() {
    let b = f18_effectiveness();
    let limits = f18_position_limits();
    let hull =
        convex_hull_3d(&map_vertices(&limits.enumerate_vertices().unwrap(), &b).unwrap()).unwrap();
    let huge: Vec<_> = unit_cube_points().into_iter().map(|p| p * 10.0).collect();
    let superset = convex_hull_3d(&huge).unwrap();
    let cap = intersect(&hull, &superset).unwrap();
    assert!(set_close(
        cap.vertices(),
        hull.vertices(),
        1e-9 * hull.circumradius()
    ));
}

fn small_box_strategy(m: usize) -> impl Strategy<Value = BoxLimits> {
    (
        proptest::collection::vec(-10.0f64..-0.1, m),
        proptest::collection::vec(0.1f64..10.0, m),
    )
        .prop_map(|(lo, hi)| BoxLimits::from_slices(&lo, &hi).unwrap())
}

fn matrix_strategy(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0f64..2.0, 3 * m)
        .prop_map(move |v| DMatrix::from_row_slice(3, m, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Image convexity: every mapped corner and random convex combinations
    /// of mapped corners pass membership on the hull's half-space form.
    #[test]
    fn mapped_box_image_is_convex(
        limits in small_box_strategy(5),
        t in matrix_strategy(5),
        mix in proptest::collection::vec(0.0f64..1.0, 8),
    ) {
        let corners = limits.enumerate_vertices().unwrap();
        let mapped = map_vertices(&corners, &t).unwrap();
        let Ok(hull) = convex_hull_3d(&mapped) else {
            // Rank-deficient random map; nothing to check.
            return Ok(());
        };
        let h = match hull.to_halfspace() {
            Ok(h) => h,
            // Origin on the image boundary is possible for degenerate T.
            Err(_) => return Ok(()),
        };
        for p in &mapped {
            prop_assert!(h.contains(p));
        }
        let total: f64 = mix.iter().sum::<f64>().max(1e-9);
        let mut combo = Vector3::zeros();
        for (w, p) in mix.iter().zip(mapped.iter()) {
            combo += p * (w / total);
        }
        prop_assert!(h.contains(&combo));
    }

    /// Shrinking the box never enlarges the hull.
    #[test]
    fn shrunk_box_stays_inside(
        limits in small_box_strategy(4),
        t in matrix_strategy(4),
        shrink in 0.1f64..0.9,
    ) {
        let corners = limits.enumerate_vertices().unwrap();
        let Ok(hull) = convex_hull_3d(&map_vertices(&corners, &t).unwrap()) else {
            return Ok(());
        };
        let Ok(h) = hull.to_halfspace() else { return Ok(()); };

        let small = BoxLimits::new(limits.lower() * shrink, limits.upper() * shrink).unwrap();
        let small_pts = map_vertices(&small.enumerate_vertices().unwrap(), &t).unwrap();
        let Ok(small_hull) = convex_hull_3d(&small_pts) else {
            return Ok(());
        };
        for v in small_hull.vertices() {
            prop_assert!(h.contains(v));
        }
    }

    /// Round-trip: half-space conversion followed by dual vertex recovery
    /// reproduces the vertex set.
    #[test]
    fn halfspace_roundtrip_on_random_zonotopes(
        limits in small_box_strategy(4),
        t in matrix_strategy(4),
    ) {
        let corners = limits.enumerate_vertices().unwrap();
        let Ok(hull) = convex_hull_3d(&map_vertices(&corners, &t).unwrap()) else {
            return Ok(());
        };
        let Ok(h) = hull.to_halfspace() else { return Ok(()); };
        let recovered = h.recover_vertices().unwrap();
        prop_assert!(set_close(
            &recovered,
            hull.vertices(),
            1e-7 * hull.circumradius().max(1e-6)
        ));
    }

    /// Euler relation for every produced hull.
    #[test]
    fn euler_relation_holds(
        limits in small_box_strategy(5),
        t in matrix_strategy(5),
    ) {
        let corners = limits.enumerate_vertices().unwrap();
        if let Ok(hull) = convex_hull_3d(&map_vertices(&corners, &t).unwrap()) {
            prop_assert_eq!(hull.euler_characteristic(), 2);
        }
    }

    /// Intersection commutes up to vertex-set equality.
    #[test]
    fn intersection_commutes(
        la in small_box_strategy(4),
        lb in small_box_strategy(4),
        ta in matrix_strategy(4),
        tb in matrix_strategy(4),
    ) {
        let pa = map_vertices(&la.enumerate_vertices().unwrap(), &ta).unwrap();
        let pb = map_vertices(&lb.enumerate_vertices().unwrap(), &tb).unwrap();
        let (Ok(a), Ok(b)) = (convex_hull_3d(&pa), convex_hull_3d(&pb)) else {
            return Ok(());
        };
        let (Ok(ab), Ok(ba)) = (intersect(&a, &b), intersect(&b, &a)) else {
            return Ok(());
        };
        let scale = ab.circumradius().max(1e-6);
        prop_assert!(set_close(ab.vertices(), ba.vertices(), 1e-7 * scale));
    }
}
