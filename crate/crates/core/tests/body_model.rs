//! Loading, shaping and Jacobians of linear blend-shape models.

use proptest::prelude::*;
use shapekit::body_model::{BodyModel, Gender, LandmarkSet, ShapeVector};
use shapekit::fixture::default_fixture;
use shapekit::mesh::primitives;
use shapekit::Error;
use shapekit_oracles as oracle;

fn cube_model() -> BodyModel {
    // the ringed cube has vertices at the three landmark heights
    let ringed = primitives::cube_with_rings(&[0.25, 0.5, 0.75]);
    let lm = LandmarkSet { head_top: 16, left_heel: 0, chest: 12, waist: 8, hip: 4 };
    BodyModel::new(ringed.clone(), vec![0.0; ringed.num_vertices() * 3], 1, Gender::Neutral, lm).unwrap()
}

#[test]
fn zero_basis_cube_archive_loads() {
    let dir = tempfile::tempdir().unwrap();
    let model = cube_model();
    model.save(dir.path()).unwrap();
    let back = BodyModel::load(dir.path()).unwrap();
    assert_eq!(back.num_betas(), 1);
    assert_eq!(back, model);
    assert_eq!(back.shaped_mesh_jacobian(&[0, 5]).unwrap(), vec![0.0; 6]);
}

#[test]
fn basis_with_wrong_vertex_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    cube_model().save(dir.path()).unwrap();
    // drop one vertex worth of basis and patch the manifest shape to match
    let basis = std::fs::read(dir.path().join("shape_basis.bin")).unwrap();
    std::fs::write(dir.path().join("shape_basis.bin"), &basis[..basis.len() - 12]).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    let shape = &mut json["buffers"]["shape_basis"]["shape"];
    shape[0] = serde_json::json!(shape[0].as_u64().unwrap() - 1);
    std::fs::write(dir.path().join("manifest.json"), json.to_string()).unwrap();
    let err = BodyModel::load(dir.path()).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
}

#[test]
fn resaving_reproduces_buffers_bit_exactly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    default_fixture().unwrap().save(a.path()).unwrap();
    BodyModel::load(a.path()).unwrap().save(b.path()).unwrap();
    for f in ["template.bin", "triangles.bin", "shape_basis.bin", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unit_beta_adds_basis_column() {
    let model = default_fixture().unwrap();
    let b = model.num_betas();
    for k in 0..b {
        let v = model.shaped_vertices(&ShapeVector::unit(b, k)).unwrap();
        for (i, (p, t)) in v.iter().zip(model.template().vertices()).enumerate() {
            let j = model.vertex_jacobian(i);
            for c in 0..3 {
                assert_eq!(p[c], t[c] + j[c * b + k]);
            }
        }
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let model = default_fixture().unwrap();
    let b = model.num_betas();
    let beta = vec![0.4, -1.1, 0.7, 0.2];
    let subset: Vec<usize> = (0..model.num_vertices()).step_by(37).collect();
    let jac = model.shaped_mesh_jacobian(&subset).unwrap();
    let mut worst: f64 = 0.0;
    for (s, &v) in subset.iter().enumerate() {
        for c in 0..3 {
            let fd = oracle::central_gradient(
                |x| model.shaped_vertices(&ShapeVector(x.to_vec())).unwrap()[v][c],
                &beta,
                1e-6,
            );
            for k in 0..b {
                worst = worst.max((fd[k] - jac[(s * 3 + c) * b + k]).abs());
            }
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn invalid_subset_index() {
    let model = default_fixture().unwrap();
    assert!(matches!(
        model.shaped_mesh_jacobian(&[model.num_vertices()]),
        Err(Error::IndexOutOfRange { .. })
    ));
}

fn beta4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shaping_is_linear(b1 in beta4(), b2 in beta4(), a in -3.0..3.0f64, c in -3.0..3.0f64) {
        let model = default_fixture().unwrap();
        let t = model.template().vertices();
        let combo: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| a * x + c * y).collect();
        let m = model.shaped_vertices(&ShapeVector(combo)).unwrap();
        let m1 = model.shaped_vertices(&ShapeVector(b1)).unwrap();
        let m2 = model.shaped_vertices(&ShapeVector(b2)).unwrap();
        for i in 0..t.len() {
            let lhs = m[i] - t[i];
            let rhs = (m1[i] - t[i]) * a + (m2[i] - t[i]) * c;
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }
    }
}
