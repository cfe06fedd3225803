//! Closed convex test shapes with outward winding.

use std::f64::consts::PI;

use super::{Point, TriangleMesh};

/// Flips every triangle whose normal points toward `center`. Only valid for
/// star-shaped meshes around `center`, which covers everything built here.
fn orient_outward(vertices: &[Point], triangles: &mut [[u32; 3]], center: Point) {
    for tri in triangles.iter_mut() {
        let [a, b, c] = tri.map(|i| vertices[i as usize]);
        let n = (b - a).cross(&(c - a));
        let centroid = (a + b + c) / 3.0;
        if n.dot(&(centroid - center)) < 0.0 {
            tri.swap(1, 2);
        }
    }
}

fn build(vertices: Vec<Point>, mut triangles: Vec<[u32; 3]>, center: Point) -> TriangleMesh {
    orient_outward(&vertices, &mut triangles, center);
    TriangleMesh::new(vertices, triangles).expect("primitive construction is valid")
}

/// Axis-aligned unit cube `[0,1]^3`: 8 vertices, 12 triangles.
pub fn unit_cube() -> TriangleMesh {
    cube_with_rings(&[])
}

/// Unit cube whose vertical edges carry extra vertex rings at the given heights
/// (each strictly inside `(0, 1)`, ascending).
pub fn cube_with_rings(levels: &[f64]) -> TriangleMesh {
    let mut heights = vec![0.0];
    heights.extend_from_slice(levels);
    heights.push(1.0);
    let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    let mut vertices = Vec::new();
    for &y in &heights {
        for &(x, z) in &corners {
            vertices.push(Point::new(x, y, z));
        }
    }
    let mut triangles = Vec::new();
    for k in 0..heights.len() - 1 {
        let lo = (4 * k) as u32;
        let hi = lo + 4;
        for j in 0..4u32 {
            let j1 = (j + 1) % 4;
            triangles.push([lo + j, lo + j1, hi + j1]);
            triangles.push([lo + j, hi + j1, hi + j]);
        }
    }
    let top = (4 * (heights.len() - 1)) as u32;
    triangles.push([0, 1, 2]);
    triangles.push([0, 2, 3]);
    triangles.push([top, top + 1, top + 2]);
    triangles.push([top, top + 2, top + 3]);
    build(vertices, triangles, Point::new(0.5, 0.5, 0.5))
}

/// Regular `sides`-gon prism of circumradius `radius`, with one vertex ring at
/// each of `heights` (ascending, at least two) and fan-triangulated caps.
pub fn prism(sides: usize, radius: f64, heights: &[f64]) -> TriangleMesh {
    assert!(sides >= 3 && heights.len() >= 2);
    let n = sides as u32;
    let mut vertices = Vec::with_capacity(sides * heights.len() + 2);
    for &y in heights {
        for j in 0..sides {
            let theta = 2.0 * PI * j as f64 / sides as f64;
            vertices.push(Point::new(radius * theta.cos(), y, radius * theta.sin()));
        }
    }
    let bottom_center = vertices.len() as u32;
    vertices.push(Point::new(0.0, heights[0], 0.0));
    let top_center = vertices.len() as u32;
    vertices.push(Point::new(0.0, heights[heights.len() - 1], 0.0));

    let mut triangles = Vec::new();
    for k in 0..heights.len() as u32 - 1 {
        let lo = k * n;
        let hi = lo + n;
        for j in 0..n {
            let j1 = (j + 1) % n;
            triangles.push([lo + j, lo + j1, hi + j1]);
            triangles.push([lo + j, hi + j1, hi + j]);
        }
    }
    let top_ring = (heights.len() as u32 - 1) * n;
    for j in 0..n {
        let j1 = (j + 1) % n;
        triangles.push([bottom_center, j1, j]);
        triangles.push([top_center, top_ring + j, top_ring + j1]);
    }
    let mid = 0.5 * (heights[0] + heights[heights.len() - 1]);
    build(vertices, triangles, Point::new(0.0, mid, 0.0))
}

/// Icosphere centered at the origin; `subdivisions` rounds of 1-to-4 splitting
/// with re-projection onto the sphere.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let vertices: Vec<Point> = raw
        .iter()
        .map(|&(x, y, z)| Point::new(x, y, z).normalize() * radius)
        .collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut mesh = build(vertices, triangles, Point::zeros());
    for _ in 0..subdivisions {
        let s = mesh.subdivided();
        let projected = s
            .vertices()
            .iter()
            .map(|v| v.normalize() * radius)
            .collect();
        mesh = s.with_vertices(projected).expect("same vertex count");
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prism_is_closed() {
        let p = prism(64, 0.15, &[0.0, 0.5, 1.0]);
        assert!(p.is_closed());
        assert!(p.is_consistently_oriented());
        assert_eq!(p.num_vertices(), 64 * 3 + 2);
    }

    #[test]
    fn ringed_cube_is_closed() {
        let c = cube_with_rings(&[0.25, 0.5, 0.75]);
        assert!(c.is_closed());
        assert_eq!(c.num_vertices(), 20);
    }

    #[test]
    fn icosphere_counts() {
        let s = icosphere(0.5, 2);
        assert_eq!(s.num_triangles(), 20 * 16);
        assert_eq!(s.num_vertices(), 162);
        for v in s.vertices() {
            assert!((v.norm() - 0.5).abs() < 1e-15);
        }
    }
}
