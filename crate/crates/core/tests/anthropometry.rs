//! Measurements and their gradients against geometric and numerical oracles.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shapekit::anthropometry::{
    circumference, measure, measure_gradients, measure_mesh, plane_section, weight, MeasureConfig, DEFAULT_DENSITY,
};
use shapekit::body_model::{BodyModel, ShapeVector};
use shapekit::fixture::{default_fixture, sample_beta};
use shapekit::mesh::{primitives, Point, TriangleMesh};
use shapekit_oracles as oracle;

fn fixture() -> BodyModel {
    default_fixture().unwrap()
}

#[test]
fn icosphere_volume_within_half_percent() {
    let w = weight(&primitives::icosphere(0.5, 4), DEFAULT_DENSITY).unwrap();
    let exact = DEFAULT_DENSITY * 4.0 / 3.0 * std::f64::consts::PI * 0.125;
    assert!(w < exact && (exact - w) / exact < 0.005, "{w} vs {exact}");
}

#[test]
fn taller_raises_height_by_basis_displacement() {
    let model = fixture();
    let lm = *model.landmarks();
    let cfg = MeasureConfig::default();
    let h0 = measure(&model, &ShapeVector::zeros(4), &cfg).unwrap().height;
    let h1 = measure(&model, &ShapeVector::unit(4, 0), &cfg).unwrap().height;
    let b = model.num_betas();
    let dy = model.vertex_jacobian(lm.head_top as usize)[b] - model.vertex_jacobian(lm.left_heel as usize)[b];
    assert!((h1 - h0 - dy).abs() < 1e-12);
}

#[test]
fn heavier_adds_weight_not_height() {
    let model = fixture();
    let cfg = MeasureConfig::default();
    let m0 = measure(&model, &ShapeVector::zeros(4), &cfg).unwrap();
    let m1 = measure(&model, &ShapeVector::unit(4, 1), &cfg).unwrap();
    assert!(m1.weight > m0.weight);
    assert!((m1.height - m0.height).abs() < 1e-9);
}

#[test]
fn height_gradient_is_landmark_jacobian_difference() {
    let model = fixture();
    let g = measure_gradients(&model, &ShapeVector(vec![0.2, 0.1, -0.3, 0.5]), &MeasureConfig::default()).unwrap();
    let lm = *model.landmarks();
    let b = model.num_betas();
    let jh = model.vertex_jacobian(lm.head_top as usize);
    let jf = model.vertex_jacobian(lm.left_heel as usize);
    for k in 0..b {
        assert_eq!(g.height[k], jh[b + k] - jf[b + k]);
    }
}

#[test]
fn gradients_match_central_differences() {
    let model = fixture();
    let cfg = MeasureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut flagged) = (0, 0);
    for _ in 0..24 {
        let beta = sample_beta(&mut rng, 4);
        let g = measure_gradients(&model, &ShapeVector(beta.clone()), &cfg).unwrap();
        if g.is_non_smooth() {
            flagged += 1;
            continue;
        }
        for (field, analytic) in g.rows().iter().enumerate() {
            let fd = oracle::central_gradient(
                |b| measure(&model, &ShapeVector(b.to_vec()), &cfg).unwrap().to_array()[field],
                &beta,
                1e-5,
            );
            let err = oracle::relative_error(analytic, &fd);
            assert!(err < 1e-5, "field {field}: {err} {analytic:?} {fd:?}");
        }
        checked += 1;
    }
    assert!(checked >= 20 && (flagged as f64) < 0.1 * 24.0, "{checked} checked, {flagged} flagged");
}

#[test]
fn hull_is_not_longer_than_the_section_loop() {
    // the convex hull of a closed loop never exceeds the loop's length,
    // and is at least the perimeter of any convex polygon on its vertices
    let model = fixture();
    let mesh = model.shaped_mesh(&ShapeVector(vec![0.0, 1.5, -1.0, 2.0])).unwrap();
    for l in [model.landmarks().chest, model.landmarks().waist, model.landmarks().hip] {
        let s = plane_section(&mesh, mesh.vertices()[l as usize].y).unwrap();
        let hull = s.hull_perimeter(&mesh);
        // the loop: section points sorted by angle around their centroid
        let pts: Vec<[f64; 2]> = s.points.iter().map(|p| [p.position.x, p.position.z]).collect();
        let c = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        let c = [c[0] / pts.len() as f64, c[1] / pts.len() as f64];
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| (a[1] - c[1]).atan2(a[0] - c[0]).total_cmp(&(b[1] - c[1]).atan2(b[0] - c[0])));
        assert!(hull <= oracle::polygon_perimeter(&sorted) + 1e-12);
        let hull_pts: Vec<[f64; 2]> = s.hull.iter().map(|&i| pts[i]).collect();
        let every_other: Vec<[f64; 2]> = hull_pts.iter().step_by(2).copied().collect();
        assert!(hull >= oracle::polygon_perimeter(&every_other));
    }
}

#[test]
fn section_points_lie_on_the_plane() {
    let model = fixture();
    let mesh = model.shaped_mesh(&ShapeVector(vec![0.3, 0.3, 0.3, 0.3])).unwrap();
    let h = mesh.vertices()[model.landmarks().waist as usize].y;
    let s = plane_section(&mesh, h).unwrap();
    for i in 0..s.points.len() {
        let d = (s.reconstruct(&mesh, i).y - h).abs();
        assert!(d < 1e-9, "{d:e} {:?}", s.points[i]);
    }
    // the hull edges form one closed cycle
    let edges = s.hull_edges();
    for (k, e) in edges.iter().enumerate() {
        assert_eq!(e.1, edges[(k + 1) % edges.len()].0);
    }
}

fn permuted(mesh: &TriangleMesh, seed: u64) -> TriangleMesh {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.num_vertices();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(&mut rng);
    let mut verts = vec![Point::zeros(); n];
    for (old, &new) in perm.iter().enumerate() {
        verts[new as usize] = mesh.vertices()[old];
    }
    let mut tris: Vec<[u32; 3]> = mesh.triangles().iter().map(|t| t.map(|i| perm[i as usize])).collect();
    tris.shuffle(&mut rng);
    TriangleMesh::new(verts, tris).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_leaves_measurements_unchanged(
        beta in prop::collection::vec(-1.5..1.5f64, 4),
        dx in -5.0..5.0f64, dy in -5.0..5.0f64, dz in -5.0..5.0f64,
    ) {
        let model = fixture();
        let cfg = MeasureConfig::default();
        let mesh = model.shaped_mesh(&ShapeVector(beta)).unwrap();
        let a = measure_mesh(&mesh, model.landmarks(), &cfg).unwrap().to_array();
        let b = measure_mesh(&mesh.translated(Point::new(dx, dy, dz)), model.landmarks(), &cfg).unwrap().to_array();
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() < 1e-9 * x.max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn scaling_scales_measurements(beta in prop::collection::vec(-1.5..1.5f64, 4), s in 0.5..1.5f64) {
        let model = fixture();
        let cfg = MeasureConfig { max_circumference: 10.0, ..MeasureConfig::default() };
        let mesh = model.shaped_mesh(&ShapeVector(beta)).unwrap();
        let a = measure_mesh(&mesh, model.landmarks(), &cfg).unwrap().to_array();
        let b = measure_mesh(&mesh.scaled(s), model.landmarks(), &cfg).unwrap().to_array();
        let factors = [s, s * s * s, s, s, s];
        for i in 0..5 {
            prop_assert!((b[i] - a[i] * factors[i]).abs() < 1e-9 * b[i], "{i}: {} {}", b[i], a[i] * factors[i]);
        }
    }

    #[test]
    fn weight_ignores_ordering(beta in prop::collection::vec(-1.5..1.5f64, 4), seed in any::<u64>()) {
        let model = fixture();
        let mesh = model.shaped_mesh(&ShapeVector(beta)).unwrap();
        let a = weight(&mesh, DEFAULT_DENSITY).unwrap();
        let b = weight(&permuted(&mesh, seed), DEFAULT_DENSITY).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a);
    }
}

#[test]
fn cube_landmark_circumference() {
    let cube = primitives::cube_with_rings(&[0.25, 0.5, 0.75]);
    assert!((circumference(&cube, 8, false).unwrap() - 4.0).abs() < 1e-9);
}
