//! Linear blend-shape body models in canonical T-pose.
//!
//! `mesh(β) = template + Σ_b β_b · basis_b`. Only shape blend shapes are
//! applied; pose or expression buffers present in an archive are accepted and
//! ignored. The archive layout is documented in `docs/format.md`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};

pub const MANIFEST_FORMAT: &str = "shapekit-body-model";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Neutral,
}

impl std::fmt::Display for Gender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Neutral => "neutral",
        })
    }
}

impl std::str::FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" | "f" => Ok(Gender::Female),
            "male" | "m" => Ok(Gender::Male),
            "neutral" | "n" => Ok(Gender::Neutral),
            other => Err(Error::InvalidArgument(format!("unknown gender {other:?}"))),
        }
    }
}

/// Vertex indices used by the anthropometric measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub head_top: u32,
    pub left_heel: u32,
    pub chest: u32,
    pub waist: u32,
    pub hip: u32,
}

impl LandmarkSet {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, u32)> {
        [
            ("head_top", self.head_top),
            ("left_heel", self.left_heel),
            ("chest", self.chest),
            ("waist", self.waist),
            ("hip", self.hip),
        ]
        .into_iter()
    }

    /// Checks index range and the chest > waist > hip height ordering.
    pub fn validate(&self, mesh: &TriangleMesh) -> Result<()> {
        let n = mesh.num_vertices();
        for (name, idx) in self.iter() {
            if idx as usize >= n {
                return Err(Error::IndexOutOfRange {
                    field: format!("landmarks.{name}"),
                    index: idx as usize,
                    len: n,
                });
            }
        }
        let y = |i: u32| mesh.vertices()[i as usize].y;
        if !(y(self.chest) > y(self.waist) && y(self.waist) > y(self.hip)) {
            return Err(Error::format(
                "landmarks",
                format!(
                    "expected chest.y > waist.y > hip.y, got {} / {} / {}",
                    y(self.chest),
                    y(self.waist),
                    y(self.hip)
                ),
            ));
        }
        Ok(())
    }
}

/// PCA shape coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeVector(pub Vec<f64>);

impl ShapeVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn unit(len: usize, axis: usize) -> Self {
        let mut v = vec![0.0; len];
        v[axis] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ShapeVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    template: TriangleMesh,
    /// Flat `[vertex, coord, beta]` layout, meters per unit β.
    shape_basis: Vec<f64>,
    num_betas: usize,
    gender: Gender,
    landmarks: LandmarkSet,
    metadata: serde_json::Value,
}

impl BodyModel {
    pub fn new(
        template: TriangleMesh,
        shape_basis: Vec<f64>,
        num_betas: usize,
        gender: Gender,
        landmarks: LandmarkSet,
    ) -> Result<Self> {
        if num_betas == 0 {
            return Err(Error::format("num_betas", "must be at least 1"));
        }
        let expected = template.num_vertices() * 3 * num_betas;
        if shape_basis.len() != expected {
            return Err(Error::dims("shape_basis", expected, shape_basis.len()));
        }
        landmarks.validate(&template)?;
        Ok(Self {
            template,
            shape_basis,
            num_betas,
            gender,
            landmarks,
            metadata: serde_json::Value::Null,
        })
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = metadata;
        self
    }

    /// Rounds template and basis to `f32`, the archive storage precision, so an
    /// in-memory model equals its saved-and-reloaded self.
    pub fn quantized_f32(self) -> Self {
        let q = |x: f64| x as f32 as f64;
        let vertices = self
            .template
            .vertices()
            .iter()
            .map(|v| Point::new(q(v.x), q(v.y), q(v.z)))
            .collect();
        Self {
            template: self.template.with_vertices(vertices).expect("same count"),
            shape_basis: self.shape_basis.iter().map(|&x| q(x)).collect(),
            ..self
        }
    }

    pub fn template(&self) -> &TriangleMesh {
        &self.template
    }

    pub fn num_betas(&self) -> usize {
        self.num_betas
    }

    pub fn num_vertices(&self) -> usize {
        self.template.num_vertices()
    }

    pub fn gender(&self) -> Gender {
        self.gender
    }

    pub fn landmarks(&self) -> &LandmarkSet {
        &self.landmarks
    }

    pub fn metadata(&self) -> &serde_json::Value {
        &self.metadata
    }

    pub fn shape_basis(&self) -> &[f64] {
        &self.shape_basis
    }

    /// The constant 3 x B Jacobian of one vertex, row-major `[coord][beta]`.
    pub fn vertex_jacobian(&self, vertex: usize) -> &[f64] {
        let stride = 3 * self.num_betas;
        &self.shape_basis[vertex * stride..(vertex + 1) * stride]
    }

    fn check_beta(&self, beta: &ShapeVector) -> Result<()> {
        if beta.len() != self.num_betas {
            return Err(Error::dims("beta", self.num_betas, beta.len()));
        }
        Ok(())
    }

    /// Displaced vertex positions for `beta`.
    pub fn shaped_vertices(&self, beta: &ShapeVector) -> Result<Vec<Point>> {
        self.check_beta(beta)?;
        let b = self.num_betas;
        Ok(self
            .template
            .vertices()
            .iter()
            .enumerate()
            .map(|(v, t)| {
                let jac = self.vertex_jacobian(v);
                let mut d = [0.0; 3];
                for (c, dc) in d.iter_mut().enumerate() {
                    *dc = jac[c * b..(c + 1) * b]
                        .iter()
                        .zip(&beta.0)
                        .map(|(a, x)| a * x)
                        .sum();
                }
                t + Point::new(d[0], d[1], d[2])
            })
            .collect())
    }

    pub fn shaped_mesh(&self, beta: &ShapeVector) -> Result<TriangleMesh> {
        self.template.with_vertices(self.shaped_vertices(beta)?)
    }

    /// `∂vertices/∂β` restricted to `subset`, as `[|subset|][3][B]` flattened.
    pub fn shaped_mesh_jacobian(&self, subset: &[usize]) -> Result<Vec<f64>> {
        let n = self.num_vertices();
        let mut out = Vec::with_capacity(subset.len() * 3 * self.num_betas);
        for (k, &v) in subset.iter().enumerate() {
            if v >= n {
                return Err(Error::IndexOutOfRange {
                    field: format!("vertex_subset[{k}]"),
                    index: v,
                    len: n,
                });
            }
            out.extend_from_slice(self.vertex_jacobian(v));
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let source: Box<dyn ArchiveSource> = if path.is_dir() {
            Box::new(DirSource(path.to_path_buf()))
        } else {
            Box::new(ZipSource::open(path)?)
        };
        load_from(source.as_ref())
    }

    /// Writes the archive as a directory.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let n = self.num_vertices();
        let f = self.template.num_triangles();
        let b = self.num_betas;
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            gender: self.gender,
            up_axis: "y".into(),
            num_vertices: n,
            num_triangles: f,
            num_betas: b,
            landmarks: RawLandmarks {
                head_top: Some(self.landmarks.head_top),
                left_heel: Some(self.landmarks.left_heel),
                chest: Some(self.landmarks.chest),
                waist: Some(self.landmarks.waist),
                hip: Some(self.landmarks.hip),
            },
            buffers: Buffers {
                template: BufferDesc::new("template.bin", "f32", vec![n, 3]),
                triangles: BufferDesc::new("triangles.bin", "u32", vec![f, 3]),
                shape_basis: BufferDesc::new("shape_basis.bin", "f32", vec![n, 3, b]),
                extra: BTreeMap::new(),
            },
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_file(&dir.join("manifest.json"), json.as_bytes())?;

        let template: Vec<u8> = self
            .template
            .vertices()
            .iter()
            .flat_map(|v| [v.x, v.y, v.z])
            .flat_map(|x| (x as f32).to_le_bytes())
            .collect();
        write_file(&dir.join("template.bin"), &template)?;
        let tris: Vec<u8> = self
            .template
            .triangles()
            .iter()
            .flatten()
            .flat_map(|i| i.to_le_bytes())
            .collect();
        write_file(&dir.join("triangles.bin"), &tris)?;
        let basis: Vec<u8> = self
            .shape_basis
            .iter()
            .flat_map(|&x| (x as f32).to_le_bytes())
            .collect();
        write_file(&dir.join("shape_basis.bin"), &basis)?;
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    gender: Gender,
    up_axis: String,
    num_vertices: usize,
    num_triangles: usize,
    num_betas: usize,
    landmarks: RawLandmarks,
    buffers: Buffers,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    metadata: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawLandmarks {
    head_top: Option<u32>,
    left_heel: Option<u32>,
    chest: Option<u32>,
    waist: Option<u32>,
    hip: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Buffers {
    template: BufferDesc,
    triangles: BufferDesc,
    shape_basis: BufferDesc,
    /// Pose / expression blend shapes and anything else: accepted, not applied.
    #[serde(flatten)]
    extra: BTreeMap<String, BufferDesc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BufferDesc {
    file: String,
    dtype: String,
    shape: Vec<usize>,
}

impl BufferDesc {
    fn new(file: &str, dtype: &str, shape: Vec<usize>) -> Self {
        Self {
            file: file.into(),
            dtype: dtype.into(),
            shape,
        }
    }
}

trait ArchiveSource {
    fn read(&self, name: &str) -> Result<Vec<u8>>;
}

struct DirSource(std::path::PathBuf);

impl ArchiveSource for DirSource {
    fn read(&self, name: &str) -> Result<Vec<u8>> {
        let p = self.0.join(name);
        fs::read(&p).map_err(|e| Error::io(p, e))
    }
}

struct ZipSource {
    path: std::path::PathBuf,
    archive: std::cell::RefCell<zip::ZipArchive<fs::File>>,
}

impl ZipSource {
    fn open(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let archive = zip::ZipArchive::new(file)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        Ok(Self {
            path: path.to_path_buf(),
            archive: std::cell::RefCell::new(archive),
        })
    }
}

impl ArchiveSource for ZipSource {
    fn read(&self, name: &str) -> Result<Vec<u8>> {
        let mut archive = self.archive.borrow_mut();
        // entries may sit at the root or under a single top-level folder
        let entry = (0..archive.len()).find(|&i| {
            archive
                .name_for_index(i)
                .map(|n| n == name || n.ends_with(&format!("/{name}")))
                .unwrap_or(false)
        });
        let idx = entry.ok_or_else(|| {
            Error::format(
                format!("{}:{name}", self.path.display()),
                "entry not found in zip",
            )
        })?;
        let mut file = archive
            .by_index(idx)
            .map_err(|e| Error::format(name.to_string(), e.to_string()))?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)
            .map_err(|e| Error::io(self.path.join(name), e))?;
        Ok(buf)
    }
}

fn load_from(source: &dyn ArchiveSource) -> Result<BodyModel> {
    let raw = source.read("manifest.json")?;
    let manifest: Manifest = serde_json::from_slice(&raw)
        .map_err(|e| Error::format("manifest", e.to_string()))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(Error::format(
            "manifest.format",
            format!("expected {MANIFEST_FORMAT:?}, got {:?}", manifest.format),
        ));
    }
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::format(
            "manifest.version",
            format!("unsupported version {}", manifest.version),
        ));
    }
    if !manifest.up_axis.eq_ignore_ascii_case("y") {
        return Err(Error::format(
            "manifest.up_axis",
            format!("only a Y-up canonical pose is supported, got {:?}", manifest.up_axis),
        ));
    }
    let n = manifest.num_vertices;
    let f = manifest.num_triangles;
    let b = manifest.num_betas;
    if b == 0 {
        return Err(Error::format("manifest.num_betas", "must be at least 1"));
    }

    let bufs = &manifest.buffers;
    check_desc(&bufs.template, "manifest.buffers.template", "f32", &[n, 3])?;
    check_desc(&bufs.triangles, "manifest.buffers.triangles", "u32", &[f, 3])?;
    check_desc(&bufs.shape_basis, "manifest.buffers.shape_basis", "f32", &[n, 3, b])?;

    let template = read_f32(source, &bufs.template, "manifest.buffers.template", n * 3)?;
    let tris = read_u32(source, &bufs.triangles, "manifest.buffers.triangles", f * 3)?;
    let basis = read_f32(source, &bufs.shape_basis, "manifest.buffers.shape_basis", n * 3 * b)?;

    let vertices = template
        .chunks_exact(3)
        .map(|c| Point::new(c[0], c[1], c[2]))
        .collect();
    let triangles = tris
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    let mesh = TriangleMesh::new(vertices, triangles)?;

    let lm = &manifest.landmarks;
    let need = |v: Option<u32>, name: &str| {
        v.ok_or_else(|| Error::format(format!("manifest.landmarks.{name}"), "missing landmark"))
    };
    let landmarks = LandmarkSet {
        head_top: need(lm.head_top, "head_top")?,
        left_heel: need(lm.left_heel, "left_heel")?,
        chest: need(lm.chest, "chest")?,
        waist: need(lm.waist, "waist")?,
        hip: need(lm.hip, "hip")?,
    };
    landmarks.validate(&mesh).map_err(|e| match e {
        Error::IndexOutOfRange { field, index, len } => Error::IndexOutOfRange {
            field: format!("manifest.{field}"),
            index,
            len,
        },
        Error::Format { field, message } => Error::Format {
            field: format!("manifest.{field}"),
            message,
        },
        other => other,
    })?;
    Ok(BodyModel::new(mesh, basis, b, manifest.gender, landmarks)?.with_metadata(manifest.metadata))
}

fn check_desc(desc: &BufferDesc, field: &str, dtype: &str, shape: &[usize]) -> Result<()> {
    if desc.dtype != dtype {
        return Err(Error::format(
            format!("{field}.dtype"),
            format!("expected {dtype}, got {}", desc.dtype),
        ));
    }
    if desc.shape.len() != shape.len() {
        return Err(Error::dims(format!("{field}.shape"), shape.len(), desc.shape.len()));
    }
    for (k, (&want, &got)) in shape.iter().zip(&desc.shape).enumerate() {
        if want != got {
            return Err(Error::dims(format!("{field}.shape[{k}]"), want, got));
        }
    }
    Ok(())
}

fn read_f32(source: &dyn ArchiveSource, desc: &BufferDesc, field: &str, count: usize) -> Result<Vec<f64>> {
    let bytes = source.read(&desc.file)?;
    if bytes.len() != count * 4 {
        return Err(Error::dims(format!("{field} bytes"), count * 4, bytes.len()));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn read_u32(source: &dyn ArchiveSource, desc: &BufferDesc, field: &str, count: usize) -> Result<Vec<u32>> {
    let bytes = source.read(&desc.file)?;
    if bytes.len() != count * 4 {
        return Err(Error::dims(format!("{field} bytes"), count * 4, bytes.len()));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn cube_model(b: usize) -> BodyModel {
        let mesh = primitives::cube_with_rings(&[0.25, 0.5, 0.75]);
        let n = mesh.num_vertices();
        BodyModel::new(
            mesh,
            vec![0.0; n * 3 * b],
            b,
            Gender::Neutral,
            LandmarkSet {
                head_top: 16,
                left_heel: 0,
                chest: 12,
                waist: 8,
                hip: 4,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_beta_gives_template() {
        let m = cube_model(2);
        let shaped = m.shaped_mesh(&ShapeVector::zeros(2)).unwrap();
        assert_eq!(shaped.vertices(), m.template().vertices());
    }

    #[test]
    fn beta_length_is_checked() {
        let m = cube_model(2);
        let err = m.shaped_mesh(&ShapeVector::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, actual: 3, .. }));
    }

    #[test]
    fn zero_basis_has_zero_jacobian() {
        let m = cube_model(1);
        let j = m.shaped_mesh_jacobian(&[0, 5, 19]).unwrap();
        assert_eq!(j.len(), 9);
        assert!(j.iter().all(|&x| x == 0.0));
        assert!(m.shaped_mesh_jacobian(&[20]).is_err());
    }

    #[test]
    fn landmark_order_is_enforced() {
        let mesh = primitives::cube_with_rings(&[0.25, 0.5, 0.75]);
        let n = mesh.num_vertices();
        let err = BodyModel::new(
            mesh,
            vec![0.0; n * 3],
            1,
            Gender::Female,
            LandmarkSet {
                head_top: 16,
                left_heel: 0,
                chest: 4,
                waist: 8,
                hip: 12,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = cube_model(1);
        m.save(dir.path()).unwrap();
        let back = BodyModel::load(dir.path()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn missing_landmark_names_field() {
        let dir = tempfile::tempdir().unwrap();
        cube_model(1).save(dir.path()).unwrap();
        let p = dir.path().join("manifest.json");
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&p).unwrap()).unwrap();
        v["landmarks"].as_object_mut().unwrap().remove("waist");
        fs::write(&p, serde_json::to_vec(&v).unwrap()).unwrap();
        let err = BodyModel::load(dir.path()).unwrap_err();
        match err {
            Error::Format { field, .. } => assert_eq!(field, "manifest.landmarks.waist"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_up_axis_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        cube_model(1).save(dir.path()).unwrap();
        let p = dir.path().join("manifest.json");
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&p).unwrap()).unwrap();
        v["up_axis"] = "z".into();
        fs::write(&p, serde_json::to_vec(&v).unwrap()).unwrap();
        let err = BodyModel::load(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Format { ref field, .. } if field == "manifest.up_axis"));
    }
}
