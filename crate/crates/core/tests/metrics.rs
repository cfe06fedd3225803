//! Surface sampling, P2P20K, transfer and the remaining metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapekit::anthropometry::MeasurementSet;
use shapekit::body_model::ShapeVector;
use shapekit::eval_metrics::{
    build_point_regressor, closest_point_on_triangle, measurement_mae, p2p20k, s2a_accuracy,
    transfer_point_regressor, v2v, PointRegressor, TriangleBvh, DEFAULT_POINTS,
};
use shapekit::fixture::{capsule_person, default_fixture, FixtureConfig};
use shapekit::mesh::primitives::icosphere;
use shapekit::mesh::{Point, TriangleMesh};
use shapekit_oracles as oracle;

fn arr(p: &Point) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn oracle_triangles(mesh: &TriangleMesh) -> (Vec<[f64; 3]>, Vec<[u32; 3]>) {
    (mesh.vertices().iter().map(arr).collect(), mesh.triangles().to_vec())
}

#[test]
fn two_triangles_split_samples_by_area() {
    // two disjoint triangles of equal area
    let mesh = TriangleMesh::new(
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(5.0, 0.0, 0.0),
            Point::new(6.0, 0.0, 0.0),
            Point::new(5.0, 0.0, 1.0),
        ],
        vec![[0, 1, 2], [3, 4, 5]],
    )
    .unwrap();
    let reg = build_point_regressor(&mesh, 60_000, 7).unwrap();
    let first = reg.indices.iter().filter(|i| i[0] == 0).count() as f64;
    // binomial(60000, 1/2) has sd ≈ 122
    assert!((first - 30_000.0).abs() < 300.0, "{first}");
}

#[test]
fn fixture_samples_pass_area_chi_square() {
    let model = default_fixture().unwrap();
    let mesh = model.template();
    let reg = build_point_regressor(mesh, DEFAULT_POINTS, 0).unwrap();

    // group consecutive triangles into bins of roughly equal area
    let total: f64 = (0..mesh.num_triangles()).map(|t| mesh.triangle_area(t)).sum();
    let bins = 40;
    let mut bin_of = vec![0usize; mesh.num_triangles()];
    let mut bin_area = vec![0.0; bins];
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let a = mesh.triangle_area(t);
        let b = (((acc + 0.5 * a) / total) * bins as f64).floor().min((bins - 1) as f64) as usize;
        bin_of[t] = b;
        bin_area[b] += a;
        acc += a;
    }
    let tri_index: std::collections::HashMap<[u32; 3], usize> =
        mesh.triangles().iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut observed = vec![0.0; bins];
    for idx in &reg.indices {
        observed[bin_of[tri_index[idx]]] += 1.0;
    }
    let expected: Vec<f64> = bin_area.iter().map(|a| a / total * DEFAULT_POINTS as f64).collect();
    let p = oracle::chi_square_p_value(&observed, &expected);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn sampled_points_lie_in_their_triangles() {
    let model = default_fixture().unwrap();
    let reg = build_point_regressor(model.template(), 2000, 5).unwrap();
    let verts = model.template().vertices();
    let pts = reg.apply(verts).unwrap();
    for ((idx, w), p) in reg.indices.iter().zip(&reg.weights).zip(&pts) {
        assert!(w.iter().all(|&x| x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let tri = [idx[0], idx[1], idx[2]].map(|i| arr(&verts[i as usize]));
        let q = oracle::closest_point_on_triangle(arr(p), tri);
        assert!(oracle::dist(q, arr(p)) < 1e-12);
    }
}

#[test]
fn regressor_build_is_bit_reproducible() {
    let model = default_fixture().unwrap();
    let a = build_point_regressor(model.template(), DEFAULT_POINTS, 42).unwrap();
    let b = build_point_regressor(model.template(), DEFAULT_POINTS, 42).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
    let c = build_point_regressor(model.template(), DEFAULT_POINTS, 43).unwrap();
    assert_ne!(a.to_bytes(), c.to_bytes());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reg.bin");
    a.save(&path).unwrap();
    assert_eq!(PointRegressor::load(&path).unwrap(), a);
}

#[test]
fn identical_meshes_have_zero_error() {
    let model = default_fixture().unwrap();
    let reg = build_point_regressor(model.template(), DEFAULT_POINTS, 1).unwrap();
    let v = model.shaped_vertices(&ShapeVector(vec![0.3, -0.2, 0.5, 0.1])).unwrap();
    assert_eq!(p2p20k(&reg, &v, &reg, &v).unwrap(), 0.0);
    assert_eq!(v2v(&v, &v).unwrap(), 0.0);
}

#[test]
fn translations_are_removed() {
    let model = default_fixture().unwrap();
    let reg = build_point_regressor(model.template(), DEFAULT_POINTS, 1).unwrap();
    let v = model.template().vertices().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let t = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let moved: Vec<Point> = v.iter().map(|p| p + t).collect();
        let e = p2p20k(&reg, &v, &reg, &moved).unwrap();
        assert!(e < 1e-9, "{e} mm");
        assert!(v2v(&v, &moved).unwrap() < 1e-9);
    }
}

#[test]
fn radial_millimeter_field_reads_one_millimeter() {
    let sphere = icosphere(0.5, 4);
    let reg = build_point_regressor(&sphere, DEFAULT_POINTS, 3).unwrap();
    let v = sphere.vertices().to_vec();
    let moved: Vec<Point> = v.iter().map(|p| p + p.normalize() * 1e-3).collect();
    let e = p2p20k(&reg, &v, &reg, &moved).unwrap();
    assert!((e - 1.0).abs() < 0.01, "{e} mm");
    assert!((v2v(&v, &moved).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn transfer_to_same_template_is_identity() {
    let model = default_fixture().unwrap();
    let mesh = model.template();
    let reg = build_point_regressor(mesh, 5000, 9).unwrap();
    let rep = transfer_point_regressor(mesh, mesh, &reg).unwrap();
    assert!(rep.max_distance < 1e-12);
    let a = reg.apply(mesh.vertices()).unwrap();
    let b = rep.regressor.apply(mesh.vertices()).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).norm() < 1e-12);
    }
}

#[test]
fn transfer_to_subdivided_template_is_exact() {
    let model = default_fixture().unwrap();
    let mesh = model.template();
    let fine = mesh.subdivided();
    let reg = build_point_regressor(mesh, 5000, 9).unwrap();
    let rep = transfer_point_regressor(mesh, &fine, &reg).unwrap();
    assert!(rep.max_distance < 1e-9, "{}", rep.max_distance);
    let a = reg.apply(mesh.vertices()).unwrap();
    let b = rep.regressor.apply(fine.vertices()).unwrap();
    assert!(p2p20k(&reg, mesh.vertices(), &rep.regressor, fine.vertices()).unwrap() < 1e-9);
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).norm() < 1e-9);
    }
}

#[test]
fn transfer_to_coarser_template_stays_within_an_edge() {
    let model = default_fixture().unwrap();
    let coarse = capsule_person(&FixtureConfig { rings: 20, segments: 24, ..FixtureConfig::default() }).unwrap();
    let reg = build_point_regressor(model.template(), 5000, 9).unwrap();
    let rep = transfer_point_regressor(model.template(), coarse.template(), &reg).unwrap();
    assert!(rep.mean_distance < coarse.template().mean_edge_length(), "{}", rep.mean_distance);
}

#[test]
fn bvh_matches_brute_force() {
    let model = default_fixture().unwrap();
    let mesh = model.template();
    let (ov, ot) = oracle_triangles(mesh);
    let bvh = TriangleBvh::new(mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let p = Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.2..1.9), rng.random_range(-0.4..0.4));
        let (t, q, bary, d) = bvh.closest(p).unwrap();
        let brute = oracle::brute_force_distance(arr(&p), &ov, &ot);
        assert!((d - brute).abs() < 1e-12, "{d} vs {brute}");
        assert!(((q - p).norm() - d).abs() < 1e-12);
        let [a, b, c] = mesh.triangle_points(t);
        let r = a * bary[0] + b * bary[1] + c * bary[2];
        assert!((r - q).norm() < 1e-12);
    }
}

#[test]
fn closest_point_agrees_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut rp = || Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    for _ in 0..2000 {
        let (a, b, c, p) = (rp(), rp(), rp(), rp());
        let (q, _) = closest_point_on_triangle(p, a, b, c);
        let o = oracle::closest_point_on_triangle(arr(&p), [arr(&a), arr(&b), arr(&c)]);
        assert!(oracle::dist(arr(&q), o) < 1e-9);
    }
}

#[test]
fn measurement_mae_reports_mm_and_kg() {
    let gt = MeasurementSet { height: 1.7, weight: 60.0, chest_circ: 0.9, waist_circ: 0.7, hip_circ: 0.95 };
    let pred = MeasurementSet { height: 1.71, weight: 58.0, chest_circ: 0.88, waist_circ: 0.7, hip_circ: 0.96 };
    let mae = measurement_mae(&[pred, gt], &[gt, gt]).unwrap();
    assert!((mae.height_mm - 5.0).abs() < 1e-9);
    assert!((mae.weight_kg - 1.0).abs() < 1e-12);
    assert!((mae.chest_mm - 10.0).abs() < 1e-9);
    assert_eq!(mae.waist_mm, 0.0);
    assert!((mae.hip_mm - 5.0).abs() < 1e-9);
}

#[test]
fn random_guessing_scores_one_in_five() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rows = 2000;
    let gt: Vec<Vec<f64>> = (0..rows).map(|_| (0..15).map(|_| rng.random_range(1..=5) as f64).collect()).collect();
    let pred: Vec<Vec<f64>> = (0..rows).map(|_| (0..15).map(|_| rng.random_range(0.5..5.5)).collect()).collect();
    let acc = s2a_accuracy(&pred, &gt).unwrap();
    assert!((acc.overall - 0.2).abs() < 0.03, "{}", acc.overall);
}
