//! The fixture's frozen measurement table against independent oracles.

use shapekit::anthropometry::{measure, MeasureConfig, DEFAULT_DENSITY};
use shapekit::body_model::{BodyModel, ShapeVector};
use shapekit::fixture::{default_fixture, reference_measurements, FixtureConfig, REFERENCE_MEASUREMENTS};
use shapekit_oracles as oracle;

fn arrays(model: &BodyModel) -> (Vec<[f64; 3]>, Vec<[u32; 3]>) {
    let t = model.template();
    (
        t.vertices().iter().map(|p| [p.x, p.y, p.z]).collect(),
        t.triangles().to_vec(),
    )
}

/// Exact volume of the ring sweep: every band between consecutive rings is a
/// prismatoid, each end cap a pyramid over a planar ring.
fn prismatoid_volume(vertices: &[[f64; 3]], rings: usize, segments: usize) -> f64 {
    let ring = |k: usize| -> Vec<[f64; 2]> {
        (0..segments)
            .map(|j| {
                let v = vertices[k * segments + j];
                [v[0], v[2]]
            })
            .collect()
    };
    let y = |k: usize| vertices[k * segments][1];
    let heel = vertices[rings * segments];
    let head = vertices[rings * segments + 1];
    // the ring polygons run with increasing angle in the (x, z) plane
    let area = |pts: &[[f64; 2]]| oracle::polygon_area(pts).abs();

    let mut volume = area(&ring(0)) * (y(0) - heel[1]) / 3.0;
    volume += area(&ring(rings - 1)) * (head[1] - y(rings - 1)) / 3.0;
    for k in 0..rings - 1 {
        let (lo, hi) = (&vertices[k * segments..], &vertices[(k + 1) * segments..]);
        // lateral edges of the band: lo_j–hi_j and lo_j–hi_{j+1}
        let mut mid = Vec::with_capacity(2 * segments);
        for j in 0..segments {
            let j1 = (j + 1) % segments;
            mid.push([(lo[j][0] + hi[j][0]) / 2.0, (lo[j][2] + hi[j][2]) / 2.0]);
            mid.push([(lo[j][0] + hi[j1][0]) / 2.0, (lo[j][2] + hi[j1][2]) / 2.0]);
        }
        let h = y(k + 1) - y(k);
        volume += h / 6.0 * (area(&ring(k)) + 4.0 * area(&mid) + area(&ring(k + 1)));
    }
    volume
}

fn landmark_perimeter(model: &BodyModel, landmark: u32) -> f64 {
    let (v, t) = arrays(model);
    let h = v[landmark as usize][1];
    oracle::support_perimeter(&oracle::slice_points(&v, &t, h), 4096)
}

#[test]
fn frozen_table_matches_metadata() {
    let model = default_fixture().unwrap();
    assert_eq!(reference_measurements(&model), Some(REFERENCE_MEASUREMENTS));
}

#[test]
fn weight_matches_prismatoid_and_voxel_oracles() {
    let model = default_fixture().unwrap();
    let cfg = FixtureConfig::default();
    let (v, t) = arrays(&model);
    let exact = prismatoid_volume(&v, cfg.rings, cfg.segments);
    let voxel = oracle::voxel_volume(&v, &t, 256);
    assert!((voxel - exact).abs() / exact < 0.01);
    let w = REFERENCE_MEASUREMENTS.weight;
    assert!((w - DEFAULT_DENSITY * exact).abs() / w < 1e-12, "{w} vs {}", DEFAULT_DENSITY * exact);
}

#[test]
fn circumferences_match_support_oracle() {
    let model = default_fixture().unwrap();
    let lm = *model.landmarks();
    let got = [
        REFERENCE_MEASUREMENTS.chest_circ,
        REFERENCE_MEASUREMENTS.waist_circ,
        REFERENCE_MEASUREMENTS.hip_circ,
    ];
    for (name, (l, g)) in ["chest", "waist", "hip"].iter().zip([lm.chest, lm.waist, lm.hip].into_iter().zip(got)) {
        let o = landmark_perimeter(&model, l);
        assert!((o - g).abs() < 1e-6, "{name}: frozen {g} oracle {o}");
    }
}

#[test]
fn height_is_head_minus_heel() {
    let model = default_fixture().unwrap();
    let (v, _) = arrays(&model);
    let lm = model.landmarks();
    let h = v[lm.head_top as usize][1] - v[lm.left_heel as usize][1];
    assert_eq!(REFERENCE_MEASUREMENTS.height, h);
}

#[test]
fn measure_at_zero_reproduces_table() {
    let model = default_fixture().unwrap();
    let m = measure(&model, &ShapeVector::zeros(model.num_betas()), &MeasureConfig::default()).unwrap();
    let want = REFERENCE_MEASUREMENTS;
    assert_eq!(m.height, want.height);
    assert!((m.weight - want.weight).abs() / want.weight < 1e-12);
    assert!((m.chest_circ - want.chest_circ).abs() < 1e-9);
    assert!((m.waist_circ - want.waist_circ).abs() < 1e-9);
    assert!((m.hip_circ - want.hip_circ).abs() < 1e-9);
}

#[test]
fn committed_archive_is_the_generated_fixture() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/capsule_person");
    let loaded = BodyModel::load(&path).unwrap();
    assert_eq!(loaded.landmarks().iter().count(), 5);
    assert_eq!(loaded, default_fixture().unwrap());
}
