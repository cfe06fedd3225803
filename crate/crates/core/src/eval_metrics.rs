//! Shape-error metrics: point-to-point error over area-uniform surface samples
//! (P2P20K), vertex-to-vertex error, measurement MAE and attribute
//! classification accuracy.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anthropometry::MeasurementSet;
use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};
use crate::rng::CounterRng;

pub const DEFAULT_POINTS: usize = 20_000;

/// Hex SHA-256 over the vertex count and triangle indices (little-endian).
pub fn topology_hash(mesh: &TriangleMesh) -> String {
    let mut h = Sha256::new();
    h.update((mesh.num_vertices() as u64).to_le_bytes());
    for t in mesh.triangles() {
        for i in t {
            h.update(i.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Sparse `[P × N]` matrix with one barycentric row per surface point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRegressor {
    pub indices: Vec<[u32; 3]>,
    pub weights: Vec<[f64; 3]>,
    pub num_vertices: usize,
    pub topology: String,
}

impl PointRegressor {
    pub fn num_points(&self) -> usize {
        self.indices.len()
    }

    pub fn apply(&self, vertices: &[Point]) -> Result<Vec<Point>> {
        if vertices.len() != self.num_vertices {
            return Err(Error::dims("vertices", self.num_vertices, vertices.len()));
        }
        Ok(self
            .indices
            .iter()
            .zip(&self.weights)
            .map(|(idx, w)| {
                vertices[idx[0] as usize] * w[0]
                    + vertices[idx[1] as usize] * w[1]
                    + vertices[idx[2] as usize] * w[2]
            })
            .collect())
    }

    const MAGIC: &'static [u8; 8] = b"SKPREG01";

    /// Little-endian binary layout: magic, P (u64), N (u64), topology (64 hex
    /// bytes), then P rows of three u32 indices and three f64 weights.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(88 + self.num_points() * 36);
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&(self.num_points() as u64).to_le_bytes());
        out.extend_from_slice(&(self.num_vertices as u64).to_le_bytes());
        let mut topo = [b'0'; 64];
        for (d, s) in topo.iter_mut().zip(self.topology.bytes()) {
            *d = s;
        }
        out.extend_from_slice(&topo);
        for (idx, w) in self.indices.iter().zip(&self.weights) {
            for i in idx {
                out.extend_from_slice(&i.to_le_bytes());
            }
            for x in w {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 88 || &bytes[..8] != Self::MAGIC {
            return Err(Error::format("point regressor", "bad header"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
        let p = u64_at(8);
        let n = u64_at(16);
        let topology = String::from_utf8_lossy(&bytes[24..88]).into_owned();
        if bytes.len() != 88 + p * 36 {
            return Err(Error::dims("point regressor bytes", 88 + p * 36, bytes.len()));
        }
        let mut indices = Vec::with_capacity(p);
        let mut weights = Vec::with_capacity(p);
        for row in bytes[88..].chunks_exact(36) {
            let idx: [u32; 3] = std::array::from_fn(|k| u32::from_le_bytes(row[4 * k..4 * k + 4].try_into().unwrap()));
            if let Some(&bad) = idx.iter().find(|&&i| i as usize >= n) {
                return Err(Error::IndexOutOfRange {
                    field: "point regressor".into(),
                    index: bad as usize,
                    len: n,
                });
            }
            let w: [f64; 3] = std::array::from_fn(|k| f64::from_le_bytes(row[12 + 8 * k..20 + 8 * k].try_into().unwrap()));
            indices.push(idx);
            weights.push(w);
        }
        Ok(Self {
            indices,
            weights,
            num_vertices: n,
            topology,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Samples `points` positions area-uniformly on `template`.
///
/// Point `i` draws three uniforms at counters `3i`, `3i + 1`, `3i + 2`: the
/// first picks a triangle by inverting the cumulative area table, the other two
/// give barycentrics `(1 − √u₁, √u₁(1 − u₂), √u₁·u₂)`.
pub fn build_point_regressor(template: &TriangleMesh, points: usize, seed: u64) -> Result<PointRegressor> {
    if template.num_triangles() == 0 {
        return Err(Error::InvalidArgument("template has no triangles".into()));
    }
    let mut cdf = Vec::with_capacity(template.num_triangles());
    let mut total = 0.0;
    for t in 0..template.num_triangles() {
        total += template.triangle_area(t);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("template has zero surface area".into()));
    }
    let rng = CounterRng::new(seed);
    let last = cdf.len() - 1;
    let mut indices = Vec::with_capacity(points);
    let mut weights = Vec::with_capacity(points);
    for i in 0..points as u64 {
        let target = rng.uniform(3 * i) * total;
        let t = cdf.partition_point(|&c| c <= target).min(last);
        let s = rng.uniform(3 * i + 1).sqrt();
        let u2 = rng.uniform(3 * i + 2);
        indices.push(template.triangles()[t]);
        weights.push([1.0 - s, s * (1.0 - u2), s * u2]);
    }
    Ok(PointRegressor {
        indices,
        weights,
        num_vertices: template.num_vertices(),
        topology: topology_hash(template),
    })
}

/// Closest point on triangle `abc` to `p`, with its barycentric coordinates.
pub fn closest_point_on_triangle(p: Point, a: Point, b: Point, c: Point) -> (Point, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Point,
    hi: Point,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            lo: Point::repeat(f64::INFINITY),
            hi: Point::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn distance_squared(&self, p: &Point) -> f64 {
        let mut d = 0.0;
        for c in 0..3 {
            let e = (self.lo[c] - p[c]).max(0.0).max(p[c] - self.hi[c]);
            d += e * e;
        }
        d
    }
}

enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Bounding-volume hierarchy over a mesh's triangles for closest-point queries.
pub struct TriangleBvh<'a> {
    mesh: &'a TriangleMesh,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

const LEAF_SIZE: usize = 4;

impl<'a> TriangleBvh<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        let centroids: Vec<Point> = (0..mesh.num_triangles())
            .map(|t| {
                let [a, b, c] = mesh.triangle_points(t);
                (a + b + c) / 3.0
            })
            .collect();
        let mut bvh = Self {
            mesh,
            order: (0..mesh.num_triangles()).collect(),
            nodes: Vec::new(),
        };
        if !bvh.order.is_empty() {
            bvh.build(0, bvh.order.len(), &centroids);
        }
        bvh
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[Point]) -> usize {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &t in &self.order[start..end] {
            for p in self.mesh.triangle_points(t) {
                bounds.grow(&p);
            }
            cbounds.grow(&centroids[t]);
        }
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        let extent = cbounds.hi - cbounds.lo;
        let axis = extent.imax();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.build(start, mid, centroids);
        let right = self.build(mid, end, centroids);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    /// Nearest surface point: (triangle, point, barycentric, distance).
    pub fn closest(&self, p: Point) -> Option<(usize, Point, [f64; 3], f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, Point, [f64; 3], f64)> = None;
        let mut best_d2 = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if self.nodes[n].bounds().distance_squared(&p) > best_d2 {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let [a, b, c] = self.mesh.triangle_points(t);
                        let (q, bary) = closest_point_on_triangle(p, a, b, c);
                        let d2 = (q - p).norm_squared();
                        // ties go to the lowest triangle index for determinism
                        let better = match best {
                            None => true,
                            Some((bt, ..)) => d2 < best_d2 || (d2 == best_d2 && t < bt),
                        };
                        if better {
                            best_d2 = d2;
                            best = Some((t, q, bary, d2));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_squared(&p);
                    let dr = self.nodes[*right].bounds().distance_squared(&p);
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best.map(|(t, q, b, d2)| (t, q, b, d2.sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub regressor: PointRegressor,
    /// Mean distance from each source point to its projection, in meters.
    pub mean_distance: f64,
    pub max_distance: f64,
}

/// Re-expresses a regressor's points on another (pre-aligned) topology by
/// projecting each point to the closest point of the target surface.
pub fn transfer_point_regressor(
    source_template: &TriangleMesh,
    target_template: &TriangleMesh,
    source: &PointRegressor,
) -> Result<TransferReport> {
    let points = source.apply(source_template.vertices())?;
    let bvh = TriangleBvh::new(target_template);
    let mut indices = Vec::with_capacity(points.len());
    let mut weights = Vec::with_capacity(points.len());
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for p in &points {
        let (t, _, bary, d) = bvh
            .closest(*p)
            .ok_or_else(|| Error::InvalidArgument("target template has no triangles".into()))?;
        indices.push(target_template.triangles()[t]);
        weights.push(bary);
        sum += d;
        max = max.max(d);
    }
    Ok(TransferReport {
        regressor: PointRegressor {
            indices,
            weights,
            num_vertices: target_template.num_vertices(),
            topology: topology_hash(target_template),
        },
        mean_distance: if points.is_empty() { 0.0 } else { sum / points.len() as f64 },
        max_distance: max,
    })
}

fn mean(points: &[Point]) -> Point {
    points.iter().fold(Point::zeros(), |a, p| a + p) / points.len() as f64
}

/// Mean of `‖p₁ᵢ + t − p₂ᵢ‖` in millimeters with `t = mean(P₂) − mean(P₁)`.
fn translation_corrected_mean(p1: &[Point], p2: &[Point]) -> f64 {
    if p1.is_empty() {
        return 0.0;
    }
    let t = mean(p2) - mean(p1);
    let sum: f64 = p1.iter().zip(p2).map(|(a, b)| (a + t - b).norm()).sum();
    1000.0 * sum / p1.len() as f64
}

/// Point-to-point error over regressed surface points, in millimeters.
pub fn p2p20k(reg1: &PointRegressor, verts1: &[Point], reg2: &PointRegressor, verts2: &[Point]) -> Result<f64> {
    if reg1.num_points() != reg2.num_points() {
        return Err(Error::dims("regressor points", reg1.num_points(), reg2.num_points()));
    }
    let p1 = reg1.apply(verts1)?;
    let p2 = reg2.apply(verts2)?;
    Ok(translation_corrected_mean(&p1, &p2))
}

/// Vertex-to-vertex error after translation correction, in millimeters.
pub fn v2v(verts1: &[Point], verts2: &[Point]) -> Result<f64> {
    if verts1.len() != verts2.len() {
        return Err(Error::dims("vertices", verts1.len(), verts2.len()));
    }
    Ok(translation_corrected_mean(verts1, verts2))
}

/// Per-field mean absolute error: lengths in millimeters, weight in kilograms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementMae {
    pub height_mm: f64,
    pub weight_kg: f64,
    pub chest_mm: f64,
    pub waist_mm: f64,
    pub hip_mm: f64,
}

pub fn measurement_mae(pred: &[MeasurementSet], gt: &[MeasurementSet]) -> Result<MeasurementMae> {
    if pred.len() != gt.len() {
        return Err(Error::dims("measurement lists", gt.len(), pred.len()));
    }
    if pred.is_empty() {
        return Ok(MeasurementMae::default());
    }
    let mut acc = [0.0; 5];
    for (p, g) in pred.iter().zip(gt) {
        for (a, (x, y)) in acc.iter_mut().zip(p.to_array().into_iter().zip(g.to_array())) {
            *a += (x - y).abs();
        }
    }
    let n = pred.len() as f64;
    Ok(MeasurementMae {
        height_mm: 1000.0 * acc[0] / n,
        weight_kg: acc[1] / n,
        chest_mm: 1000.0 * acc[2] / n,
        waist_mm: 1000.0 * acc[3] / n,
        hip_mm: 1000.0 * acc[4] / n,
    })
}

/// Likert class of a score: round half up, then clamp to 1..=5.
pub fn likert_class(score: f64) -> u8 {
    (score + 0.5).floor().clamp(1.0, 5.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeAccuracy {
    /// Fraction of subjects whose predicted class matches.
    pub accuracy: f64,
    /// Mean and population standard deviation of `|pred − gt|`.
    pub mae: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2aAccuracy {
    pub overall: f64,
    pub per_attribute: Vec<AttributeAccuracy>,
}

/// Classification accuracy of predicted attribute scores. Rows are subjects.
pub fn s2a_accuracy(pred: &[Vec<f64>], gt: &[Vec<f64>]) -> Result<S2aAccuracy> {
    if pred.len() != gt.len() {
        return Err(Error::dims("score rows", gt.len(), pred.len()));
    }
    let a = gt.first().map_or(0, Vec::len);
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        if p.len() != a || g.len() != a {
            return Err(Error::dims(format!("score row {i}"), a, p.len().min(g.len())));
        }
    }
    let n = pred.len();
    let mut hits = vec![0usize; a];
    let mut abs_err = vec![Vec::with_capacity(n); a];
    for (p, g) in pred.iter().zip(gt) {
        for j in 0..a {
            if likert_class(p[j]) == likert_class(g[j]) {
                hits[j] += 1;
            }
            abs_err[j].push((p[j] - g[j]).abs());
        }
    }
    let per_attribute: Vec<AttributeAccuracy> = (0..a)
        .map(|j| {
            let e = &abs_err[j];
            let m = if n == 0 { 0.0 } else { e.iter().sum::<f64>() / n as f64 };
            let var = if n == 0 { 0.0 } else { e.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64 };
            AttributeAccuracy {
                accuracy: if n == 0 { 0.0 } else { hits[j] as f64 / n as f64 },
                mae: m,
                sd: var.sqrt(),
            }
        })
        .collect();
    let total = n * a;
    let overall = if total == 0 {
        0.0
    } else {
        hits.iter().sum::<usize>() as f64 / total as f64
    };
    Ok(S2aAccuracy { overall, per_attribute })
}

/// Aggregate error report for one or more mesh pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShapeErrorReport {
    pub p2p20k_mm: f64,
    pub v2v_mm: Option<f64>,
    pub mae: Option<MeasurementMae>,
}
