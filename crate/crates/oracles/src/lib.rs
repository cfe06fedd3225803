//! Reference computations for the shapekit test suites.
//!
//! Nothing here calls into shapekit: every routine works on plain arrays and
//! uses a different algorithm from the production code it checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn lerp(a: V3, b: V3, t: f64) -> V3 {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

pub fn dist(a: V3, b: V3) -> f64 {
    dot(sub(a, b), sub(a, b)).sqrt()
}

/// Volume by counting voxel centers inside the surface on an `n³` grid over
/// the bounding box. Inside/outside comes from the parity of vertical ray
/// crossings per (x, z) column.
pub fn voxel_volume(vertices: &[V3], triangles: &[[u32; 3]], n: usize) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in vertices {
        for c in 0..3 {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    let step = [
        (hi[0] - lo[0]) / n as f64,
        (hi[1] - lo[1]) / n as f64,
        (hi[2] - lo[2]) / n as f64,
    ];
    let center = |c: usize, i: usize| lo[c] + (i as f64 + 0.5) * step[c];

    // bucket triangles by the columns their xz bounding box covers
    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); n * n];
    for (t, tri) in triangles.iter().enumerate() {
        let p = tri.map(|i| vertices[i as usize]);
        let range = |c: usize| {
            let mn = p.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
            let mx = p.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
            let a = (((mn - lo[c]) / step[c] - 0.5).ceil().max(0.0)) as usize;
            let b = (((mx - lo[c]) / step[c] - 0.5).floor().min(n as f64 - 1.0)) as isize;
            (a, b)
        };
        let (x0, x1) = range(0);
        let (z0, z1) = range(2);
        if x1 < 0 || z1 < 0 {
            continue;
        }
        for i in x0..=x1 as usize {
            for k in z0..=z1 as usize {
                columns[i * n + k].push(t as u32);
            }
        }
    }

    let mut inside = 0usize;
    let mut hits = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let (x, z) = (center(0, i), center(2, k));
            hits.clear();
            for &t in &columns[i * n + k] {
                let p = triangles[t as usize].map(|j| vertices[j as usize]);
                if let Some(y) = vertical_hit(p, x, z) {
                    hits.push(y);
                }
            }
            hits.sort_by(f64::total_cmp);
            // a column through a shared edge meets both triangles at one height
            hits.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            for pair in hits.chunks_exact(2) {
                let a = ((pair[0] - lo[1]) / step[1] - 0.5).ceil().max(0.0) as usize;
                let b = ((pair[1] - lo[1]) / step[1] - 0.5).floor();
                if b >= a as f64 {
                    inside += (b as usize).min(n - 1) + 1 - a;
                }
            }
        }
    }
    inside as f64 * step[0] * step[1] * step[2]
}

/// y where the vertical line through (x, z) meets the triangle, if it does.
fn vertical_hit(p: [V3; 3], x: f64, z: f64) -> Option<f64> {
    let (ax, az) = (p[0][0], p[0][2]);
    let (bx, bz) = (p[1][0], p[1][2]);
    let (cx, cz) = (p[2][0], p[2][2]);
    let det = (bx - ax) * (cz - az) - (cx - ax) * (bz - az);
    if det.abs() < 1e-300 {
        return None;
    }
    let u = ((x - ax) * (cz - az) - (cx - ax) * (z - az)) / det;
    let v = ((bx - ax) * (z - az) - (x - ax) * (bz - az)) / det;
    if u < 0.0 || v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(p[0][1] + u * (p[1][1] - p[0][1]) + v * (p[2][1] - p[0][1]))
}

/// Points where the plane `y = h` cuts triangle edges, as (x, z).
/// A vertex at exactly `h` counts as above the plane.
pub fn slice_points(vertices: &[V3], triangles: &[[u32; 3]], h: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for tri in triangles {
        for e in 0..3 {
            let a = vertices[tri[e] as usize];
            let b = vertices[tri[(e + 1) % 3] as usize];
            let (a_up, b_up) = (a[1] >= h, b[1] >= h);
            if a_up != b_up {
                let t = (h - a[1]) / (b[1] - a[1]);
                let p = lerp(a, b, t);
                out.push([p[0], p[2]]);
            }
        }
    }
    out
}

/// Perimeter of the convex hull of `points`, found by probing the support
/// function in `directions` evenly spaced directions and joining the distinct
/// support points in angular order.
pub fn support_perimeter(points: &[[f64; 2]], directions: usize) -> f64 {
    let mut support: Vec<usize> = Vec::with_capacity(directions);
    for k in 0..directions {
        let th = 2.0 * std::f64::consts::PI * k as f64 / directions as f64;
        let (c, s) = (th.cos(), th.sin());
        let best = (0..points.len())
            .max_by(|&i, &j| {
                let di = points[i][0] * c + points[i][1] * s;
                let dj = points[j][0] * c + points[j][1] * s;
                di.total_cmp(&dj)
            })
            .expect("non-empty point set");
        if support.last() != Some(&best) {
            support.push(best);
        }
    }
    while support.len() > 1 && support.first() == support.last() {
        support.pop();
    }
    let n = support.len();
    (0..n)
        .map(|i| {
            let a = points[support[i]];
            let b = points[support[(i + 1) % n]];
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        })
        .sum()
}

/// Central differences of a scalar function.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + step;
            let fp = f(&p);
            p[i] = x[i] - step;
            let fm = f(&p);
            p[i] = x[i];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// `max_i |a_i − b_i| / max(1, max_i |b_i|)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Closest point on a triangle, by minimizing over the interior projection,
/// the three edges and the three corners independently.
pub fn closest_point_on_triangle(p: V3, tri: [V3; 3]) -> V3 {
    let mut best = tri[0];
    let mut best_d = dist(p, tri[0]);
    let mut consider = |q: V3| {
        let d = dist(p, q);
        if d < best_d {
            best_d = d;
            best = q;
        }
    };
    for &c in &tri {
        consider(c);
    }
    for e in 0..3 {
        let (a, b) = (tri[e], tri[(e + 1) % 3]);
        let ab = sub(b, a);
        let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
        consider(lerp(a, b, t));
    }
    // interior: solve the 2x2 normal equations for the plane projection
    let (e0, e1) = (sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let r = sub(p, tri[0]);
    let (a, b, c) = (dot(e0, e0), dot(e0, e1), dot(e1, e1));
    let (d, e) = (dot(r, e0), dot(r, e1));
    let det = a * c - b * b;
    if det > 0.0 {
        let u = (c * d - b * e) / det;
        let v = (a * e - b * d) / det;
        if u >= 0.0 && v >= 0.0 && u + v <= 1.0 {
            consider([
                tri[0][0] + u * e0[0] + v * e1[0],
                tri[0][1] + u * e0[1] + v * e1[1],
                tri[0][2] + u * e0[2] + v * e1[2],
            ]);
        }
    }
    best
}

/// Distance from `p` to the nearest point of a triangle soup, by exhaustive search.
pub fn brute_force_distance(p: V3, vertices: &[V3], triangles: &[[u32; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| dist(p, closest_point_on_triangle(p, t.map(|i| vertices[i as usize]))))
        .fold(f64::INFINITY, f64::min)
}

/// Pearson χ² goodness-of-fit p-value (degrees of freedom = bins − 1).
pub fn chi_square_p_value(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
}

/// Perimeter of a closed polygon given as (x, z) points in order.
pub fn polygon_perimeter(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        })
        .sum()
}

/// Signed shoelace area of a closed (x, z) polygon.
pub fn polygon_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// One subject of a synthetic embedding source.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticIdentity {
    pub id: String,
    pub female: bool,
    pub images: Vec<Vec<f32>>,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Images of one identity: `normalize(c + s·u)` for fresh random unit `u`.
/// With `s² = 1 / cosine − 1` two images agree to about `cosine`.
fn identity_images(rng: &mut ChaCha8Rng, center: &[f64], count: usize, cosine: f64) -> Vec<Vec<f32>> {
    let s = (1.0 / cosine - 1.0).sqrt();
    (0..count)
        .map(|_| {
            let u = random_unit(rng, center.len());
            let e: Vec<f64> = center.iter().zip(&u).map(|(c, x)| c + s * x).collect();
            let n = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            e.iter().map(|x| (x / n) as f32).collect()
        })
        .collect()
}

/// Two embedding sources sharing `duplicates` identities, each with its own
/// `distractors`. Returns the two sources and the true `(a, b)` id pairs.
pub fn two_site_benchmark(
    seed: u64,
    dim: usize,
    duplicates: usize,
    distractors: usize,
    cosine: f64,
) -> (Vec<SyntheticIdentity>, Vec<SyntheticIdentity>, Vec<(String, String)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut truth = Vec::new();
    for i in 0..duplicates {
        let c = random_unit(&mut rng, dim);
        let female = i % 2 == 0;
        let (na, nb) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let (ia, ib) = (format!("a_dup{i:03}"), format!("b_dup{i:03}"));
        a.push(SyntheticIdentity { id: ia.clone(), female, images: identity_images(&mut rng, &c, na, cosine) });
        b.push(SyntheticIdentity { id: ib.clone(), female, images: identity_images(&mut rng, &c, nb, cosine) });
        truth.push((ia, ib));
    }
    for (prefix, site) in [("a", &mut a), ("b", &mut b)] {
        for i in 0..distractors {
            let c = random_unit(&mut rng, dim);
            let n = rng.random_range(1..=5);
            site.push(SyntheticIdentity {
                id: format!("{prefix}_other{i:03}"),
                female: i % 2 == 1,
                images: identity_images(&mut rng, &c, n, cosine),
            });
        }
    }
    (a, b, truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> (Vec<V3>, Vec<[u32; 3]>) {
        let v = (0..8)
            .map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
            .collect();
        let t = vec![
            [0, 2, 1], [1, 2, 3], [4, 5, 6], [5, 7, 6],
            [0, 1, 4], [1, 5, 4], [2, 6, 3], [3, 6, 7],
            [0, 4, 2], [2, 4, 6], [1, 3, 5], [3, 7, 5],
        ];
        (v, t)
    }

    #[test]
    fn voxel_cube_is_full() {
        let (v, t) = cube();
        assert!((voxel_volume(&v, &t, 32) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_support_perimeter() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        assert!((support_perimeter(&pts, 4096) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn closest_point_cases() {
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(closest_point_on_triangle([0.2, 0.2, 1.0], tri), [0.2, 0.2, 0.0]);
        assert_eq!(closest_point_on_triangle([-1.0, -1.0, 0.0], tri), [0.0, 0.0, 0.0]);
        let q = closest_point_on_triangle([1.0, 1.0, 0.0], tri);
        assert!(dist(q, [0.5, 0.5, 0.0]) < 1e-15);
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = central_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, 1.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn benchmark_cosine_is_calibrated() {
        let (a, _, _) = two_site_benchmark(1, 512, 20, 0, 0.8);
        let mut sum = 0.0;
        let mut n = 0;
        for s in &a {
            for i in 0..s.images.len() {
                for j in 0..i {
                    sum += s.images[i].iter().zip(&s.images[j]).map(|(x, y)| (x * y) as f64).sum::<f64>();
                    n += 1;
                }
            }
        }
        assert!((sum / n as f64 - 0.8).abs() < 0.02);
    }
}
