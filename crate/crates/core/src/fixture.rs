//! Procedural "capsule-person" body model and a synthetic rated population.
//!
//! The mesh is a closed genus-0 sweep: `rings` horizontal vertex rings between
//! a heel pole (y = 0) and a head pole (y = height), each ring an ellipse (with
//! a two-leg pinch below the crotch) whose half-widths follow a piecewise-linear
//! body profile. Every ring is planar for every β, because the only basis
//! direction with a vertical component depends on ring height alone.
//!
//! Basis directions, in order: taller, heavier, broader chest, wider hips.
//! Only "taller" moves vertices vertically, so the others are height-neutral.
//!
//! Landmarks sit on the front (+z) vertex of the ring nearest to the nominal
//! chest (0.72 H), waist (0.62 H) and hip (0.52 H) heights.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::anthropometry::{measure, MeasureConfig, MeasurementSet};
use crate::body_model::{BodyModel, Gender, LandmarkSet, ShapeVector};
use crate::error::Result;
use crate::mesh::{Point, TriangleMesh};
use crate::shape_mappers::{aggregate_ratings, RatingMatrix};

pub const FIXTURE_BETAS: usize = 4;
pub const BASIS_NAMES: [&str; FIXTURE_BETAS] = ["taller", "heavier", "broader_chest", "wider_hips"];

/// Fifteen attributes rated for female subjects.
pub const FEMALE_ATTRIBUTES: [&str; 15] = [
    "short",
    "big",
    "tall",
    "muscular",
    "long neck",
    "long legs",
    "long torso",
    "short arms",
    "broad shoulders",
    "pear shaped",
    "petite",
    "slim waist",
    "large breasts",
    "skinny legs",
    "feminine",
];

/// Fifteen attributes rated for male subjects.
pub const MALE_ATTRIBUTES: [&str; 15] = [
    "short",
    "big",
    "tall",
    "muscular",
    "long neck",
    "long legs",
    "long torso",
    "short arms",
    "broad shoulders",
    "skinny arms",
    "average",
    "rectangular",
    "delicate build",
    "soft body",
    "masculine",
];

/// Measurements of the default fixture at β = 0, frozen from independent
/// oracles: exact prismatoid volume for weight, extreme-point sampling of
/// each section for circumferences (see `tests/fixture_oracles.rs`).
pub const REFERENCE_MEASUREMENTS: MeasurementSet = MeasurementSet {
    height: 1.7000000476837158,
    weight: 51.435549948689705,
    chest_circ: 0.8627443311004318,
    waist_circ: 0.7503774262220886,
    hip_circ: 0.913811282849295,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub height: f64,
    /// Number of vertex rings between the two poles.
    pub rings: usize,
    /// Vertices per ring; must be a multiple of 4.
    pub segments: usize,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            height: 1.70,
            rings: 40,
            segments: 48,
        }
    }
}

// (fraction of height, half-width x, half-depth z)
const PROFILE: [(f64, f64, f64); 14] = [
    (0.00, 0.06, 0.05),
    (0.03, 0.11, 0.08),
    (0.25, 0.12, 0.07),
    (0.45, 0.17, 0.09),
    (0.52, 0.18, 0.11),
    (0.62, 0.14, 0.09),
    (0.72, 0.16, 0.11),
    (0.80, 0.20, 0.08),
    (0.83, 0.07, 0.06),
    (0.86, 0.06, 0.06),
    (0.90, 0.085, 0.10),
    (0.94, 0.08, 0.10),
    (0.98, 0.05, 0.06),
    (1.00, 0.00, 0.00),
];

// how much "heavier" inflates each part of the body
const HEAVIER_PROFILE: [(f64, f64); 7] = [
    (0.00, 0.2),
    (0.10, 0.6),
    (0.40, 1.0),
    (0.75, 1.0),
    (0.83, 0.4),
    (0.90, 0.2),
    (1.00, 0.2),
];

fn interp(table: &[(f64, f64)], f: f64) -> f64 {
    if f <= table[0].0 {
        return table[0].1;
    }
    for w in table.windows(2) {
        let ((f0, v0), (f1, v1)) = (w[0], w[1]);
        if f <= f1 {
            return v0 + (v1 - v0) * (f - f0) / (f1 - f0);
        }
    }
    table[table.len() - 1].1
}

fn profile(f: f64) -> (f64, f64) {
    let a: Vec<(f64, f64)> = PROFILE.iter().map(|&(f, a, _)| (f, a)).collect();
    let b: Vec<(f64, f64)> = PROFILE.iter().map(|&(f, _, b)| (f, b)).collect();
    (interp(&a, f), interp(&b, f))
}

/// Depth pinch between the legs: 0 above the crotch, up to 0.45 at the ankles.
fn leg_pinch(f: f64) -> f64 {
    interp(&[(0.0, 0.45), (0.40, 0.45), (0.47, 0.0), (1.0, 0.0)], f)
}

fn bump(f: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((f - center) / width).powi(2)).exp()
}

/// Displacement of a template vertex at height fraction `f` and position `p`
/// along each basis direction.
fn basis_displacements(f: f64, p: Point) -> [Point; FIXTURE_BETAS] {
    let heavy = interp(&HEAVIER_PROFILE, f);
    let chest = bump(f, 0.72, 0.05);
    let hips = bump(f, 0.52, 0.05);
    [
        Point::new(0.0, 0.04 * f, 0.0),
        Point::new(0.10 * heavy * p.x, 0.0, 0.14 * heavy * p.z),
        Point::new(0.12 * chest * p.x, 0.0, 0.10 * chest * p.z),
        Point::new(0.14 * hips * p.x, 0.0, 0.06 * hips * p.z),
    ]
}

/// Ring index nearest to a nominal height fraction.
fn nearest_ring(rings: usize, f: f64) -> usize {
    let k = (f * (rings + 1) as f64).round() as usize;
    k.clamp(1, rings) - 1
}

/// Builds the capsule-person model (quantized to the archive's f32 precision).
pub fn capsule_person(config: &FixtureConfig) -> Result<BodyModel> {
    assert!(config.segments >= 4 && config.segments.is_multiple_of(4));
    assert!(config.rings >= 8);
    let (r, s) = (config.rings, config.segments);
    let h = config.height;

    let mut vertices = Vec::with_capacity(r * s + 2);
    let mut fractions = Vec::with_capacity(r * s + 2);
    for k in 0..r {
        let f = (k + 1) as f64 / (r + 1) as f64;
        let (a, b) = profile(f);
        let pinch = leg_pinch(f);
        for j in 0..s {
            let theta = 2.0 * PI * j as f64 / s as f64;
            let (c, sn) = (theta.cos(), theta.sin());
            let depth = b * sn * (1.0 - pinch + pinch * c * c);
            vertices.push(Point::new(a * c, f * h, depth));
            fractions.push(f);
        }
    }
    let heel = vertices.len() as u32;
    vertices.push(Point::new(0.0, 0.0, 0.0));
    fractions.push(0.0);
    let head = vertices.len() as u32;
    vertices.push(Point::new(0.0, h, 0.0));
    fractions.push(1.0);

    let mut triangles = Vec::with_capacity(2 * s * r);
    let (r32, s32) = (r as u32, s as u32);
    for k in 0..r32 - 1 {
        let lo = k * s32;
        let hi = lo + s32;
        for j in 0..s32 {
            let j1 = (j + 1) % s32;
            // outward winding for a ring traversed with increasing theta
            triangles.push([lo + j, hi + j1, lo + j1]);
            triangles.push([lo + j, hi + j, hi + j1]);
        }
    }
    let top = (r32 - 1) * s32;
    for j in 0..s32 {
        let j1 = (j + 1) % s32;
        triangles.push([heel, j, j1]);
        triangles.push([head, top + j1, top + j]);
    }
    let template = TriangleMesh::new(vertices, triangles)?;

    let mut basis = vec![0.0; template.num_vertices() * 3 * FIXTURE_BETAS];
    for (v, (p, &f)) in template.vertices().iter().zip(&fractions).enumerate() {
        let d = basis_displacements(f, *p);
        for (b, dir) in d.iter().enumerate() {
            for c in 0..3 {
                basis[(v * 3 + c) * FIXTURE_BETAS + b] = dir[c];
            }
        }
    }

    let front = (s / 4) as u32;
    let ring_vertex = |f: f64| nearest_ring(r, f) as u32 * s32 + front;
    let landmarks = LandmarkSet {
        head_top: head,
        left_heel: heel,
        chest: ring_vertex(0.72),
        waist: ring_vertex(0.62),
        hip: ring_vertex(0.52),
    };
    let model = BodyModel::new(template, basis, FIXTURE_BETAS, Gender::Female, landmarks)?;
    Ok(model.quantized_f32())
}

/// The default fixture with its metadata table attached.
pub fn default_fixture() -> Result<BodyModel> {
    let config = FixtureConfig::default();
    let model = capsule_person(&config)?;
    let metadata = serde_json::json!({
        "name": "capsule-person",
        "generator": config,
        "basis": BASIS_NAMES,
        "reference_measurements": REFERENCE_MEASUREMENTS,
    });
    Ok(model.with_metadata(metadata))
}

/// Reads the `reference_measurements` table from a model's metadata.
pub fn reference_measurements(model: &BodyModel) -> Option<MeasurementSet> {
    serde_json::from_value(model.metadata().get("reference_measurements")?.clone()).ok()
}

pub fn attribute_names(gender: Gender) -> Vec<String> {
    let names: &[&str] = match gender {
        Gender::Male => &MALE_ATTRIBUTES,
        _ => &FEMALE_ATTRIBUTES,
    };
    names.iter().map(|s| s.to_string()).collect()
}

/// Latent attribute loadings on (taller, heavier, broader chest, wider hips).
fn loadings(name: &str) -> [f64; FIXTURE_BETAS] {
    match name {
        "short" => [-1.1, 0.0, 0.0, 0.0],
        "big" => [0.3, 0.9, 0.2, 0.2],
        "tall" => [1.1, 0.0, 0.0, 0.0],
        "muscular" => [0.1, 0.3, 0.5, 0.0],
        "long neck" => [0.4, -0.2, 0.0, 0.0],
        "long legs" => [0.7, -0.1, 0.0, 0.0],
        "long torso" => [0.4, 0.0, 0.1, 0.0],
        "short arms" => [-0.5, 0.0, 0.0, 0.0],
        "broad shoulders" => [0.1, 0.2, 0.8, 0.0],
        "pear shaped" => [0.0, 0.2, -0.4, 0.9],
        "petite" => [-0.8, -0.6, 0.0, 0.0],
        "slim waist" => [0.0, -0.9, 0.1, 0.2],
        "large breasts" => [0.0, 0.3, 0.8, 0.0],
        "skinny legs" => [0.0, -0.7, 0.0, -0.3],
        "feminine" => [-0.1, 0.0, 0.3, 0.5],
        "skinny arms" => [0.0, -0.8, -0.2, 0.0],
        "average" => [0.0, 0.0, 0.0, 0.0],
        "rectangular" => [0.0, 0.4, 0.0, -0.5],
        "delicate build" => [-0.3, -0.7, -0.2, 0.0],
        "soft body" => [0.0, 0.8, -0.2, 0.2],
        "masculine" => [0.2, 0.2, 0.6, -0.4],
        _ => [0.0; FIXTURE_BETAS],
    }
}

/// One synthetic subject of the fixture population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub subject_id: String,
    pub gender: Gender,
    pub beta: Vec<f64>,
    pub measurements: MeasurementSet,
    /// Mean rating per attribute.
    pub attributes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub attribute_names: Vec<String>,
    pub ratings: RatingMatrix,
    pub records: Vec<PopulationRecord>,
}

pub const POPULATION_RATERS: usize = 15;

/// Samples `count` subjects with β ~ N(0, 0.8²) clipped to ±2, measures them,
/// and simulates `POPULATION_RATERS` Likert ratings per attribute.
pub fn synthetic_population(model: &BodyModel, count: usize, seed: u64) -> Result<Population> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta_dist = Normal::<f64>::new(0.0, 0.8).expect("valid sigma");
    let rater_noise = Normal::<f64>::new(0.0, 0.6).expect("valid sigma");
    let names = attribute_names(model.gender());
    let a = names.len();
    let k = POPULATION_RATERS;
    let b = model.num_betas();
    let config = MeasureConfig::default();

    let mut scores = Vec::with_capacity(count * a * k);
    let mut betas = Vec::with_capacity(count);
    let mut measurements = Vec::with_capacity(count);
    for _ in 0..count {
        let beta: Vec<f64> = (0..b)
            .map(|_| beta_dist.sample(&mut rng).clamp(-2.0, 2.0))
            .collect();
        let m = measure(model, &ShapeVector(beta.clone()), &config)?;
        for name in &names {
            let w = loadings(name);
            let latent = 3.0
                + w.iter()
                    .zip(&beta)
                    .map(|(wi, bi)| wi * bi)
                    .sum::<f64>();
            for _ in 0..k {
                let noisy = latent + rater_noise.sample(&mut rng);
                scores.push(noisy.round().clamp(1.0, 5.0) as u8);
            }
        }
        betas.push(beta);
        measurements.push(m);
    }
    let ratings = RatingMatrix::new(scores, count, a, k, names.clone(), model.gender())?;
    let means = aggregate_ratings(&ratings);
    let width = (count as f64).log10().floor() as usize + 1;
    let records = (0..count)
        .map(|i| PopulationRecord {
            subject_id: format!("s{:0width$}", i, width = width),
            gender: model.gender(),
            beta: betas[i].clone(),
            measurements: measurements[i],
            attributes: means.row(i).to_vec(),
        })
        .collect();
    Ok(Population {
        attribute_names: names,
        ratings,
        records,
    })
}

/// Draws a single fixture β with the population's distribution.
pub fn sample_beta(rng: &mut impl Rng, b: usize) -> Vec<f64> {
    let dist = Normal::<f64>::new(0.0, 0.8).expect("valid sigma");
    (0..b).map(|_| dist.sample(rng).clamp(-2.0, 2.0)).collect()
}
