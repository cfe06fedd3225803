//! Virtual measurements: height, weight, and chest / waist / hip circumferences
//! of a T-posed body mesh, plus their analytic gradients with respect to β.
//!
//! Circumferences follow the convex-hull construction: a horizontal plane
//! (normal +Y) through a landmark vertex is intersected with every mesh edge,
//! each intersection point is stored with its triangle and barycentric
//! coordinates, and the circumference is the perimeter of the 2D convex hull
//! (in x/z) of those points, measured between the barycentrically
//! reconstructed 3D positions.
//!
//! Vertices lying exactly on a plane are classified as if raised by
//! [`PLANE_EPSILON`], so every edge either crosses the plane or does not.
//! Interpolation uses the true coordinates, which puts the crossing of an
//! edge ending on the plane exactly at that vertex.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::body_model::{BodyModel, LandmarkSet, ShapeVector};
use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};

/// Average human body density, kg/m³.
pub const DEFAULT_DENSITY: f64 = 985.0;
/// Symbolic lift applied to vertices that lie exactly on a section plane (m).
pub const PLANE_EPSILON: f64 = 1e-9;
/// Step used to probe for hull-combinatorics changes around a β.
pub const NON_SMOOTH_PROBE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub density: f64,
    /// Sanity bound on every circumference (m).
    pub max_circumference: f64,
    /// Restrict each hull to the intersection loop that contains the landmark.
    pub torso_only: bool,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            density: DEFAULT_DENSITY,
            max_circumference: 4.0,
            torso_only: false,
        }
    }
}

/// Height (m), weight (kg) and circumferences (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub height: f64,
    pub weight: f64,
    pub chest_circ: f64,
    pub waist_circ: f64,
    pub hip_circ: f64,
}

impl MeasurementSet {
    pub const FIELDS: [&'static str; 5] = ["height", "weight", "chest", "waist", "hip"];

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.height,
            self.weight,
            self.chest_circ,
            self.waist_circ,
            self.hip_circ,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            height: a[0],
            weight: a[1],
            chest_circ: a[2],
            waist_circ: a[3],
            hip_circ: a[4],
        }
    }
}

/// One plane/edge intersection with the edge it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub position: Point,
    /// Triangle the point was first found in.
    pub triangle: u32,
    /// Weights on that triangle's three corners.
    pub barycentric: [f64; 3],
    /// Crossing edge, as ordered mesh vertex indices `(below, above)`.
    pub edge: (u32, u32),
    /// Interpolation parameter along `edge` from `below` to `above`.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSection {
    pub plane_height: f64,
    pub points: Vec<SectionPoint>,
    /// Pairs of point indices that lie on the same triangle.
    pub segments: Vec<(usize, usize)>,
    /// Hull vertices in counter-clockwise (x, z) order, starting at the smallest index.
    pub hull: Vec<usize>,
}

impl PlaneSection {
    pub fn hull_edges(&self) -> Vec<(usize, usize)> {
        let n = self.hull.len();
        if n < 2 {
            return Vec::new();
        }
        (0..n).map(|k| (self.hull[k], self.hull[(k + 1) % n])).collect()
    }

    /// Reconstructs point `i` from its triangle and barycentric coordinates.
    pub fn reconstruct(&self, mesh: &TriangleMesh, i: usize) -> Point {
        let p = &self.points[i];
        let tri = mesh.triangle_points(p.triangle as usize);
        tri[0] * p.barycentric[0] + tri[1] * p.barycentric[1] + tri[2] * p.barycentric[2]
    }

    /// Sum of hull edge lengths between reconstructed points.
    pub fn hull_perimeter(&self, mesh: &TriangleMesh) -> f64 {
        self.hull_edges()
            .into_iter()
            .map(|(i, j)| (self.reconstruct(mesh, i) - self.reconstruct(mesh, j)).norm())
            .sum()
    }

    /// Combinatorial signature: crossing edges and the hull cycle.
    fn signature(&self) -> (Vec<(u32, u32)>, Vec<usize>) {
        (self.points.iter().map(|p| p.edge).collect(), self.hull.clone())
    }

    /// Keeps only the intersection loop (connected via `segments`) that is
    /// attached to `vertex`, or the one closest to it in x/z.
    pub fn restricted_to_component(&self, mesh: &TriangleMesh, vertex: u32) -> PlaneSection {
        let n = self.points.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for &(a, b) in &self.segments {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let anchor = self
            .points
            .iter()
            .position(|p| p.edge.0 == vertex || p.edge.1 == vertex)
            .unwrap_or_else(|| {
                let v = mesh.vertices()[vertex as usize];
                let d = |p: &SectionPoint| (p.position.x - v.x).powi(2) + (p.position.z - v.z).powi(2);
                (0..n)
                    .min_by(|&a, &b| d(&self.points[a]).total_cmp(&d(&self.points[b])))
                    .unwrap_or(0)
            });
        let root = find(&mut parent, anchor);
        let mut remap = vec![usize::MAX; n];
        let mut points = Vec::new();
        for i in 0..n {
            if find(&mut parent, i) == root {
                remap[i] = points.len();
                points.push(self.points[i]);
            }
        }
        let segments = self
            .segments
            .iter()
            .filter(|&&(a, _)| remap[a] != usize::MAX)
            .map(|&(a, b)| (remap[a], remap[b]))
            .collect();
        let hull = convex_hull_xz(&points);
        PlaneSection {
            plane_height: self.plane_height,
            points,
            segments,
            hull,
        }
    }
}

#[inline]
fn lifted_y(y: f64, plane: f64) -> f64 {
    if y == plane {
        y + PLANE_EPSILON
    } else {
        y
    }
}

/// Intersects the mesh with the plane `y = plane_height`.
pub fn plane_section(mesh: &TriangleMesh, plane_height: f64) -> Result<PlaneSection> {
    let verts = mesh.vertices();
    let above: Vec<bool> = verts
        .iter()
        .map(|v| lifted_y(v.y, plane_height) > plane_height)
        .collect();
    let mut index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut points: Vec<SectionPoint> = Vec::new();
    let mut segments = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut found: [usize; 2] = [0; 2];
        let mut count = 0;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if above[a as usize] == above[b as usize] {
                continue;
            }
            let (lo, hi, lo_corner, hi_corner) = if above[b as usize] {
                (a, b, k, (k + 1) % 3)
            } else {
                (b, a, (k + 1) % 3, k)
            };
            let idx = *index.entry((lo, hi)).or_insert_with(|| {
                let pl = verts[lo as usize];
                let ph = verts[hi as usize];
                let s = (plane_height - pl.y) / (ph.y - pl.y);
                let mut bary = [0.0; 3];
                bary[lo_corner] = 1.0 - s;
                bary[hi_corner] = s;
                points.push(SectionPoint {
                    position: pl * (1.0 - s) + ph * s,
                    triangle: t as u32,
                    barycentric: bary,
                    edge: (lo, hi),
                    t: s,
                });
                points.len() - 1
            });
            if count < 2 {
                found[count] = idx;
            }
            count += 1;
        }
        if count == 2 {
            segments.push((found[0], found[1]));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyIntersection {
            height: plane_height,
        });
    }
    let hull = convex_hull_xz(&points);
    Ok(PlaneSection {
        plane_height,
        points,
        segments,
        hull,
    })
}

/// Andrew's monotone chain over (x, z). Collinear and duplicate points are dropped.
fn convex_hull_xz(points: &[SectionPoint]) -> Vec<usize> {
    let n = points.len();
    if n < 3 {
        return (0..n).collect();
    }
    let xz = |i: usize| (points[i].position.x, points[i].position.z);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (xz(a), xz(b));
        pa.0.total_cmp(&pb.0)
            .then(pa.1.total_cmp(&pb.1))
            .then(a.cmp(&b))
    });
    let cross = |o: usize, a: usize, b: usize| {
        let (o, a, b) = (xz(o), xz(a), xz(b));
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * n);
    for &i in &order {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() == 2 && xz(hull[0]) == xz(hull[1]) {
        hull.pop();
    }
    if let Some(start) = hull.iter().enumerate().min_by_key(|(_, &v)| v).map(|(k, _)| k) {
        hull.rotate_left(start);
    }
    hull
}

pub fn height(mesh: &TriangleMesh, landmarks: &LandmarkSet) -> f64 {
    let v = mesh.vertices();
    (v[landmarks.head_top as usize].y - v[landmarks.left_heel as usize].y).abs()
}

/// Signed volume by the divergence theorem (tetrahedra against the origin).
pub fn signed_volume(mesh: &TriangleMesh) -> f64 {
    mesh.triangles()
        .iter()
        .map(|&[a, b, c]| {
            let v = mesh.vertices();
            v[a as usize].dot(&v[b as usize].cross(&v[c as usize]))
        })
        .sum::<f64>()
        / 6.0
}

/// Enclosed volume of a closed, consistently wound mesh (m³).
pub fn volume(mesh: &TriangleMesh) -> Result<f64> {
    let topo = mesh.topology();
    if !topo.closed {
        let (a, b) = topo.offending_edge.unwrap_or((0, 0));
        return Err(Error::OpenMesh(a, b));
    }
    if !topo.consistently_oriented {
        return Err(Error::InconsistentWinding(
            "adjacent triangles disagree on edge direction".into(),
        ));
    }
    let v = signed_volume(mesh);
    if v.abs() < 1e-12 {
        return Err(Error::InconsistentWinding(format!(
            "near-zero signed volume {v:e}"
        )));
    }
    Ok(v.abs())
}

pub fn weight(mesh: &TriangleMesh, density: f64) -> Result<f64> {
    Ok(density * volume(mesh)?)
}

pub fn circumference(mesh: &TriangleMesh, landmark: u32, torso_only: bool) -> Result<f64> {
    Ok(landmark_section(mesh, landmark, torso_only)?.hull_perimeter(mesh))
}

pub fn landmark_section(mesh: &TriangleMesh, landmark: u32, torso_only: bool) -> Result<PlaneSection> {
    let n = mesh.num_vertices();
    if landmark as usize >= n {
        return Err(Error::IndexOutOfRange {
            field: "landmark".into(),
            index: landmark as usize,
            len: n,
        });
    }
    let section = plane_section(mesh, mesh.vertices()[landmark as usize].y)?;
    Ok(if torso_only {
        section.restricted_to_component(mesh, landmark)
    } else {
        section
    })
}

/// All five measurements of an already shaped mesh.
pub fn measure_mesh(mesh: &TriangleMesh, landmarks: &LandmarkSet, config: &MeasureConfig) -> Result<MeasurementSet> {
    landmarks.validate(mesh)?;
    let set = MeasurementSet {
        height: height(mesh, landmarks),
        weight: weight(mesh, config.density)?,
        chest_circ: circumference(mesh, landmarks.chest, config.torso_only)?,
        waist_circ: circumference(mesh, landmarks.waist, config.torso_only)?,
        hip_circ: circumference(mesh, landmarks.hip, config.torso_only)?,
    };
    check_ranges(&set, config)?;
    Ok(set)
}

fn check_ranges(set: &MeasurementSet, config: &MeasureConfig) -> Result<()> {
    for (name, value) in MeasurementSet::FIELDS.iter().zip(set.to_array()) {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::MeasurementOutOfRange { name, value });
        }
    }
    for (name, value) in [
        ("chest", set.chest_circ),
        ("waist", set.waist_circ),
        ("hip", set.hip_circ),
    ] {
        // the bound itself is allowed (a unit cube measures exactly 4 m)
        if value > config.max_circumference * (1.0 + 1e-9) {
            return Err(Error::MeasurementOutOfRange { name, value });
        }
    }
    Ok(())
}

pub fn measure(model: &BodyModel, beta: &ShapeVector, config: &MeasureConfig) -> Result<MeasurementSet> {
    let mesh = model.shaped_mesh(beta)?;
    measure_mesh(&mesh, model.landmarks(), config)
}

/// Measurements with their gradients with respect to β.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGradients {
    pub values: MeasurementSet,
    pub height: Vec<f64>,
    pub weight: Vec<f64>,
    pub chest: Vec<f64>,
    pub waist: Vec<f64>,
    pub hip: Vec<f64>,
    /// Hull or crossing-edge combinatorics change within ±[`NON_SMOOTH_PROBE`]
    /// of β for the chest, waist and hip sections respectively.
    pub non_smooth: [bool; 3],
}

impl MeasurementGradients {
    pub fn is_non_smooth(&self) -> bool {
        self.non_smooth.iter().any(|&f| f)
    }

    pub fn rows(&self) -> [&[f64]; 5] {
        [&self.height, &self.weight, &self.chest, &self.waist, &self.hip]
    }
}

/// Accumulates `Σ_v g_v · J_v` into a β-gradient.
fn pull_back(model: &BodyModel, per_vertex: impl IntoIterator<Item = (usize, Point)>) -> Vec<f64> {
    let b = model.num_betas();
    let mut out = vec![0.0; b];
    for (v, g) in per_vertex {
        let jac = model.vertex_jacobian(v);
        for c in 0..3 {
            if g[c] == 0.0 {
                continue;
            }
            for (o, j) in out.iter_mut().zip(&jac[c * b..(c + 1) * b]) {
                *o += g[c] * j;
            }
        }
    }
    out
}

fn circumference_gradient(
    model: &BodyModel,
    mesh: &TriangleMesh,
    section: &PlaneSection,
    landmark: u32,
) -> Vec<f64> {
    let verts = mesh.vertices();
    let mut per_vertex: HashMap<usize, Point> = HashMap::new();
    let mut landmark_dy = 0.0;
    for (i, j) in section.hull_edges() {
        let pi = section.points[i].position;
        let pj = section.points[j].position;
        let d = pi - pj;
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let u = d / len;
        for (point, sign) in [(&section.points[i], 1.0), (&section.points[j], -1.0)] {
            // p = (1 - t) a + t b, t = (h - y_a) / (y_b - y_a), h = landmark height
            let (a, b) = (point.edge.0 as usize, point.edge.1 as usize);
            let t = point.t;
            let span = verts[b].y - verts[a].y;
            let ab = verts[b] - verts[a];
            let g = u * sign;
            let g_ab = g.dot(&ab);
            let ga = g * (1.0 - t) + Point::new(0.0, g_ab * (t - 1.0) / span, 0.0);
            let gb = g * t + Point::new(0.0, -g_ab * t / span, 0.0);
            *per_vertex.entry(a).or_insert_with(Point::zeros) += ga;
            *per_vertex.entry(b).or_insert_with(Point::zeros) += gb;
            landmark_dy += g_ab / span;
        }
    }
    *per_vertex
        .entry(landmark as usize)
        .or_insert_with(Point::zeros) += Point::new(0.0, landmark_dy, 0.0);
    let mut entries: Vec<_> = per_vertex.into_iter().collect();
    entries.sort_by_key(|(v, _)| *v);
    pull_back(model, entries)
}

fn weight_gradient(model: &BodyModel, mesh: &TriangleMesh, density: f64, signed: f64) -> Vec<f64> {
    let v = mesh.vertices();
    let mut per_vertex = vec![Point::zeros(); v.len()];
    for &[a, b, c] in mesh.triangles() {
        let (pa, pb, pc) = (v[a as usize], v[b as usize], v[c as usize]);
        per_vertex[a as usize] += pb.cross(&pc);
        per_vertex[b as usize] += pc.cross(&pa);
        per_vertex[c as usize] += pa.cross(&pb);
    }
    let scale = density * signed.signum() / 6.0;
    pull_back(
        model,
        per_vertex.into_iter().enumerate().map(|(i, g)| (i, g * scale)),
    )
}

/// Analytic gradients of all five measurements.
///
/// Circumference gradients hold the crossing edges and hull membership fixed
/// and differentiate the intersection points, including their slide along
/// each edge as the plane height follows the landmark.
pub fn measure_gradients(
    model: &BodyModel,
    beta: &ShapeVector,
    config: &MeasureConfig,
) -> Result<MeasurementGradients> {
    let mesh = model.shaped_mesh(beta)?;
    let lm = *model.landmarks();
    let values = measure_mesh(&mesh, &lm, config)?;

    let b = model.num_betas();
    let v = mesh.vertices();
    let dy = v[lm.head_top as usize].y - v[lm.left_heel as usize].y;
    let s = if dy >= 0.0 { 1.0 } else { -1.0 };
    let jh = model.vertex_jacobian(lm.head_top as usize);
    let jf = model.vertex_jacobian(lm.left_heel as usize);
    let height_grad: Vec<f64> = (0..b).map(|k| s * (jh[b + k] - jf[b + k])).collect();

    let weight_grad = weight_gradient(model, &mesh, config.density, signed_volume(&mesh));

    let circ_landmarks = [lm.chest, lm.waist, lm.hip];
    let mut sections = Vec::with_capacity(3);
    let mut circ_grads = Vec::with_capacity(3);
    for &l in &circ_landmarks {
        let section = landmark_section(&mesh, l, config.torso_only)?;
        circ_grads.push(circumference_gradient(model, &mesh, &section, l));
        sections.push(section.signature());
    }

    let mut non_smooth = [false; 3];
    'probe: for k in 0..b {
        for sign in [-1.0, 1.0] {
            let mut probe = beta.clone();
            probe.0[k] += sign * NON_SMOOTH_PROBE;
            let pm = model.shaped_mesh(&probe)?;
            for (c, &l) in circ_landmarks.iter().enumerate() {
                if non_smooth[c] {
                    continue;
                }
                let sig = match landmark_section(&pm, l, config.torso_only) {
                    Ok(s) => s.signature(),
                    Err(_) => {
                        non_smooth[c] = true;
                        continue;
                    }
                };
                if sig != sections[c] {
                    non_smooth[c] = true;
                }
            }
            if non_smooth.iter().all(|&f| f) {
                break 'probe;
            }
        }
    }

    let mut circ = circ_grads.into_iter();
    Ok(MeasurementGradients {
        values,
        height: height_grad,
        weight: weight_grad,
        chest: circ.next().unwrap(),
        waist: circ.next().unwrap(),
        hip: circ.next().unwrap(),
        non_smooth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::Gender;
    use crate::mesh::primitives;

    #[test]
    fn unit_cube_weighs_density() {
        let w = weight(&primitives::unit_cube(), DEFAULT_DENSITY).unwrap();
        assert!((w - 985.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_cube_still_weighs_density() {
        let w = weight(&primitives::unit_cube().flipped(), DEFAULT_DENSITY).unwrap();
        assert!((w - 985.0).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_reports_edge() {
        let cube = primitives::unit_cube();
        let tris = cube.triangles()[1..].to_vec();
        let open = TriangleMesh::new(cube.vertices().to_vec(), tris).unwrap();
        assert!(matches!(weight(&open, 985.0), Err(Error::OpenMesh(..))));
    }

    #[test]
    fn inconsistent_winding_is_an_error() {
        let cube = primitives::unit_cube();
        let mut tris = cube.triangles().to_vec();
        tris[3].swap(1, 2);
        let bad = TriangleMesh::new(cube.vertices().to_vec(), tris).unwrap();
        assert!(matches!(weight(&bad, 985.0), Err(Error::InconsistentWinding(_))));
    }

    #[test]
    fn cube_mid_section_is_unit_square() {
        let s = plane_section(&primitives::unit_cube(), 0.5).unwrap();
        assert_eq!(s.points.len(), 8);
        assert_eq!(s.hull.len(), 4);
        assert_eq!(s.hull_edges().len(), 4);
        for p in &s.points {
            assert!((p.position.y - 0.5).abs() < 1e-9);
        }
        let cube = primitives::unit_cube();
        assert!((s.hull_perimeter(&cube) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn plane_missing_mesh_is_an_error() {
        let err = plane_section(&primitives::unit_cube(), 2.0).unwrap_err();
        assert!(matches!(err, Error::EmptyIntersection { .. }));
    }

    #[test]
    fn plane_through_vertex_ring_is_perturbed() {
        let cube = primitives::cube_with_rings(&[0.25, 0.5, 0.75]);
        // vertex 8 lies on the y = 0.5 ring
        let c = circumference(&cube, 8, false).unwrap();
        assert!((c - 4.0).abs() < 1e-8, "{c}");
        let s = plane_section(&cube, 0.5).unwrap();
        for i in 0..s.points.len() {
            assert!((s.reconstruct(&cube, i).y - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn prism_perimeter_is_analytic() {
        let (n, r) = (64usize, 0.15);
        let prism = primitives::prism(n, r, &[0.0, 0.5, 1.0]);
        let c = circumference(&prism, 64, false).unwrap();
        let expected = 2.0 * n as f64 * r * (std::f64::consts::PI / n as f64).sin();
        assert!((c - expected).abs() < 1e-9);
        assert!((expected - 0.942099).abs() < 1e-6);
        // points on the diagonal edges lie on the polygon's sides
        let s = plane_section(&prism, 0.5 + 1e-3).unwrap();
        assert!(s.hull.len() >= 64);
        assert!((s.hull_perimeter(&prism) - expected).abs() < 1e-9);
    }

    #[test]
    fn torso_only_picks_the_landmark_loop() {
        let a = primitives::prism(16, 0.1, &[0.0, 0.5, 1.0]);
        let b = primitives::prism(16, 0.05, &[0.0, 0.5, 1.0]).translated(Point::new(0.5, 0.0, 0.0));
        let offset = a.num_vertices() as u32;
        let mut verts = a.vertices().to_vec();
        verts.extend_from_slice(b.vertices());
        let mut tris = a.triangles().to_vec();
        tris.extend(b.triangles().iter().map(|t| t.map(|i| i + offset)));
        let both = TriangleMesh::new(verts, tris).unwrap();

        let alone = circumference(&a, 16, false).unwrap();
        let torso = circumference(&both, 16, true).unwrap();
        let all = circumference(&both, 16, false).unwrap();
        assert!((torso - alone).abs() < 1e-12);
        assert!(all > torso + 0.5);
    }

    #[test]
    fn cube_model_measures_unit_values() {
        let mesh = primitives::cube_with_rings(&[0.25, 0.5, 0.75]);
        let n = mesh.num_vertices();
        let model = BodyModel::new(
            mesh,
            vec![0.0; n * 3],
            1,
            Gender::Neutral,
            LandmarkSet {
                head_top: 16,
                left_heel: 0,
                chest: 12,
                waist: 8,
                hip: 4,
            },
        )
        .unwrap();
        let m = measure(&model, &ShapeVector::zeros(1), &MeasureConfig::default()).unwrap();
        let expected = [1.0, 985.0, 4.0, 4.0, 4.0];
        for (got, want) in m.to_array().iter().zip(expected) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        let g = measure_gradients(&model, &ShapeVector::zeros(1), &MeasureConfig::default()).unwrap();
        for row in g.rows() {
            assert!(row.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn oversized_circumference_is_rejected() {
        let cfg = MeasureConfig {
            max_circumference: 3.0,
            ..MeasureConfig::default()
        };
        let cube = primitives::cube_with_rings(&[0.25, 0.5, 0.75]);
        let lm = LandmarkSet {
            head_top: 16,
            left_heel: 0,
            chest: 12,
            waist: 8,
            hip: 4,
        };
        assert!(matches!(
            measure_mesh(&cube, &lm, &cfg),
            Err(Error::MeasurementOutOfRange { .. })
        ));
    }
}
