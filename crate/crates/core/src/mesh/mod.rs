//! Indexed triangle meshes.
//!
//! Vertices are stored in meters, Y up. A mesh is validated on construction:
//! every index must be in range and no triangle may repeat a vertex. Closedness
//! and orientation consistency are recorded as flags, since open meshes are
//! legal inputs for everything except volume.

pub mod io;
pub mod primitives;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[u32; 3]>,
    topology: Topology,
}

/// Edge-manifold summary computed during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    /// Every undirected edge is shared by exactly two triangles.
    pub closed: bool,
    /// No directed edge appears twice, i.e. adjacent triangles agree on winding.
    pub consistently_oriented: bool,
    /// First boundary (or non-manifold) edge, if any.
    pub offending_edge: Option<(u32, u32)>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= n {
                    return Err(Error::IndexOutOfRange {
                        field: format!("triangles[{t}]"),
                        index: i as usize,
                        len: n,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle { triangle: t });
            }
        }
        let topology = analyze_topology(&triangles);
        Ok(Self {
            vertices,
            triangles,
            topology,
        })
    }

    /// Replaces vertex positions while keeping the (already validated) connectivity.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::dims("vertices", self.vertices.len(), vertices.len()));
        }
        Ok(Self {
            vertices,
            triangles: self.triangles.clone(),
            topology: self.topology,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_closed(&self) -> bool {
        self.topology.closed
    }

    pub fn is_consistently_oriented(&self) -> bool {
        self.topology.consistently_oriented
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn translated(&self, offset: Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            triangles: self.triangles.clone(),
            topology: self.topology,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v * factor).collect(),
            triangles: self.triangles.clone(),
            topology: self.topology,
        }
    }

    /// Reverses the winding of every triangle.
    pub fn flipped(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            topology: self.topology,
        }
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (a, b) in self.unique_edges() {
            total += (self.vertices[a as usize] - self.vertices[b as usize]).norm();
            count += 1;
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    /// Undirected edges, each reported once as `(min, max)`, sorted.
    pub fn unique_edges(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// One-to-four midpoint subdivision. Edge midpoints are shared, so a closed
    /// input stays closed and the surface is geometrically unchanged.
    pub fn subdivided(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Point>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = 0.5 * (vertices[a as usize] + vertices[b as usize]);
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let topology = analyze_topology(&triangles);
        Self {
            vertices,
            triangles,
            topology,
        }
    }
}

fn analyze_topology(triangles: &[[u32; 3]]) -> Topology {
    // directed edge -> occurrence count
    let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(triangles.len() * 3);
    for &[a, b, c] in triangles {
        for e in [(a, b), (b, c), (c, a)] {
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    let mut closed = true;
    let mut consistent = true;
    let mut offending: Option<(u32, u32)> = None;
    let mut keys: Vec<_> = directed.keys().copied().collect();
    keys.sort_unstable();
    for (a, b) in keys {
        let fwd = directed[&(a, b)];
        let rev = directed.get(&(b, a)).copied().unwrap_or(0);
        if fwd > 1 {
            consistent = false;
        }
        if fwd + rev != 2 {
            closed = false;
            if offending.is_none() {
                offending = Some((a.min(b), a.max(b)));
            }
        }
    }
    Topology {
        closed,
        consistently_oriented: consistent,
        offending_edge: offending,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_index() {
        let v = vec![Point::zeros(); 3];
        let err = TriangleMesh::new(v, vec![[0, 1, 3]]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 3, .. }));
    }

    #[test]
    fn rejects_degenerate_triangle() {
        let v = vec![Point::zeros(); 3];
        let err = TriangleMesh::new(v, vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangle { triangle: 0 }));
    }

    #[test]
    fn single_triangle_is_open() {
        let v = vec![Point::zeros(), Point::x(), Point::y()];
        let m = TriangleMesh::new(v, vec![[0, 1, 2]]).unwrap();
        assert!(!m.is_closed());
        assert!(m.is_consistently_oriented());
        assert_eq!(m.topology().offending_edge, Some((0, 1)));
    }

    #[test]
    fn cube_is_closed_and_oriented() {
        let cube = primitives::unit_cube();
        assert!(cube.is_closed());
        assert!(cube.is_consistently_oriented());
    }

    #[test]
    fn one_flipped_face_breaks_orientation() {
        let cube = primitives::unit_cube();
        let mut tris = cube.triangles().to_vec();
        tris[0] = [tris[0][0], tris[0][2], tris[0][1]];
        let m = TriangleMesh::new(cube.vertices().to_vec(), tris).unwrap();
        assert!(!m.is_consistently_oriented());
    }

    #[test]
    fn subdivision_keeps_closedness() {
        let s = primitives::icosphere(1.0, 1).subdivided();
        assert!(s.is_closed());
        assert!(s.is_consistently_oriented());
        assert_eq!(s.num_triangles(), 20 * 16);
    }
}
