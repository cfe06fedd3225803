//! Polynomial regressors between attribute ratings, body measurements and
//! shape coefficients (A2S, S2A and the measurement-conditioned variants).
//!
//! A mapper expands its raw input into all monomials of total degree ≤ d and
//! applies a linear map fitted by least squares. Monomial order is a frozen
//! contract: constant, then each input, then `x_i·x_j` for `i ≤ j` in
//! lexicographic order.
//!
//! Raw inputs are physical: height in meters, weight in kilograms. The mapper
//! converts height to centimeters and weight to its cube root before
//! expansion, so data files never hold transformed values.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::body_model::Gender;
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;
pub const LIKERT_MIN: f64 = 1.0;
pub const LIKERT_MAX: f64 = 5.0;

/// Raw Likert scores `[subject][attribute][rater]`, each in 1..=5.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    scores: Vec<u8>,
    subjects: usize,
    attributes: usize,
    raters: usize,
    pub attribute_names: Vec<String>,
    pub gender: Gender,
}

impl RatingMatrix {
    pub fn new(
        scores: Vec<u8>,
        subjects: usize,
        attributes: usize,
        raters: usize,
        attribute_names: Vec<String>,
        gender: Gender,
    ) -> Result<Self> {
        if attributes == 0 || raters == 0 {
            return Err(Error::InvalidArgument(
                "rating matrix needs at least one attribute and one rater".into(),
            ));
        }
        if scores.len() != subjects * attributes * raters {
            return Err(Error::dims("scores", subjects * attributes * raters, scores.len()));
        }
        if attribute_names.len() != attributes {
            return Err(Error::dims("attribute_names", attributes, attribute_names.len()));
        }
        if let Some(pos) = scores.iter().position(|s| !(1..=5).contains(s)) {
            return Err(Error::format(
                format!("scores[{pos}]"),
                format!("Likert score {} outside 1..=5", scores[pos]),
            ));
        }
        Ok(Self {
            scores,
            subjects,
            attributes,
            raters,
            attribute_names,
            gender,
        })
    }

    pub fn subjects(&self) -> usize {
        self.subjects
    }

    pub fn attributes(&self) -> usize {
        self.attributes
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn get(&self, subject: usize, attribute: usize, rater: usize) -> u8 {
        self.scores[(subject * self.attributes + attribute) * self.raters + rater]
    }
}

/// Per-subject mean rating of each attribute, `[subject][attribute]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeScores {
    means: Vec<f64>,
    attributes: usize,
}

impl AttributeScores {
    pub fn new(means: Vec<f64>, attributes: usize) -> Result<Self> {
        if attributes == 0 || !means.len().is_multiple_of(attributes) {
            return Err(Error::dims("attribute means", attributes, means.len()));
        }
        if let Some(pos) = means
            .iter()
            .position(|m| !(LIKERT_MIN..=LIKERT_MAX).contains(m))
        {
            return Err(Error::format(
                format!("means[{pos}]"),
                format!("score {} outside [1, 5]", means[pos]),
            ));
        }
        Ok(Self { means, attributes })
    }

    pub fn subjects(&self) -> usize {
        self.means.len() / self.attributes
    }

    pub fn attributes(&self) -> usize {
        self.attributes
    }

    pub fn row(&self, subject: usize) -> &[f64] {
        &self.means[subject * self.attributes..(subject + 1) * self.attributes]
    }
}

/// Mean of the K ratings for every (subject, attribute).
pub fn aggregate_ratings(ratings: &RatingMatrix) -> AttributeScores {
    let k = ratings.raters as f64;
    let means = ratings
        .scores
        .chunks_exact(ratings.raters)
        .map(|c| c.iter().map(|&s| s as f64).sum::<f64>() / k)
        .collect();
    AttributeScores {
        means,
        attributes: ratings.attributes,
    }
}

/// One block of raw input columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    /// Mean attribute ratings, one column per attribute.
    Attributes { count: usize },
    /// Shape coefficients.
    Betas { count: usize },
    /// Height in meters; expanded as centimeters.
    Height,
    /// Weight in kilograms; expanded as its cube root.
    Weight,
    Chest,
    Waist,
    Hip,
    /// Untransformed columns.
    Passthrough { name: String, count: usize },
}

impl Channel {
    pub fn width(&self) -> usize {
        match self {
            Channel::Attributes { count }
            | Channel::Betas { count }
            | Channel::Passthrough { count, .. } => *count,
            _ => 1,
        }
    }

    fn transform(&self, x: f64) -> f64 {
        match self {
            Channel::Height => x * 100.0,
            Channel::Weight => x.cbrt(),
            _ => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Betas,
    AttributeScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub channels: Vec<Channel>,
    pub degree: usize,
}

impl FeatureSpec {
    pub fn new(channels: Vec<Channel>, degree: usize) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidArgument("feature spec needs a channel".into()));
        }
        if !(1..=2).contains(&degree) {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree must be 1 or 2, got {degree}"
            )));
        }
        Ok(Self { channels, degree })
    }

    pub fn input_dim(&self) -> usize {
        self.channels.iter().map(Channel::width).sum()
    }

    pub fn num_features(&self) -> usize {
        num_poly_features(self.input_dim(), self.degree)
    }

    /// Applies the per-channel unit transforms.
    pub fn transform(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.input_dim() {
            return Err(Error::dims("raw input", self.input_dim(), raw.len()));
        }
        let mut out = Vec::with_capacity(raw.len());
        let mut pos = 0;
        for ch in &self.channels {
            for &x in &raw[pos..pos + ch.width()] {
                out.push(ch.transform(x));
            }
            pos += ch.width();
        }
        Ok(out)
    }

    pub fn features(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(poly_features(&self.transform(raw)?, self.degree))
    }
}

/// `C(m + d, d)`: number of monomials of total degree ≤ d in m variables.
pub fn num_poly_features(inputs: usize, degree: usize) -> usize {
    let mut c = 1usize;
    for k in 1..=degree {
        c = c * (inputs + k) / k;
    }
    c
}

/// Monomials of total degree ≤ `degree` (1 or 2) in contract order.
pub fn poly_features(raw: &[f64], degree: usize) -> Vec<f64> {
    let m = raw.len();
    let mut out = Vec::with_capacity(num_poly_features(m, degree.min(2)));
    out.push(1.0);
    out.extend_from_slice(raw);
    if degree >= 2 {
        for i in 0..m {
            for j in i..m {
                out.push(raw[i] * raw[j]);
            }
        }
    }
    out
}

/// Jacobian of [`poly_features`] with respect to the raw input,
/// `[feature][input]` row-major.
pub fn poly_features_jacobian(raw: &[f64], degree: usize) -> Vec<f64> {
    let m = raw.len();
    let nf = num_poly_features(m, degree);
    let mut jac = vec![0.0; nf * m];
    for i in 0..m {
        jac[(1 + i) * m + i] = 1.0;
    }
    if degree >= 2 {
        let mut row = 1 + m;
        for i in 0..m {
            for j in i..m {
                jac[row * m + i] += raw[j];
                jac[row * m + j] += raw[i];
                row += 1;
            }
        }
    }
    jac
}

/// Named regressor variants. Letters before the `2` list the input blocks:
/// A = attributes, H = height, W = weight, C = chest/waist/hip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    A2S,
    S2A,
    H2S,
    HW2S,
    C2S,
    HC2S,
    HWC2S,
    AH2S,
    AHW2S,
    AC2S,
    AHC2S,
    AHWC2S,
}

impl Variant {
    pub const ALL: [Variant; 12] = [
        Variant::A2S,
        Variant::S2A,
        Variant::H2S,
        Variant::HW2S,
        Variant::C2S,
        Variant::HC2S,
        Variant::HWC2S,
        Variant::AH2S,
        Variant::AHW2S,
        Variant::AC2S,
        Variant::AHC2S,
        Variant::AHWC2S,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::A2S => "A2S",
            Variant::S2A => "S2A",
            Variant::H2S => "H2S",
            Variant::HW2S => "HW2S",
            Variant::C2S => "C2S",
            Variant::HC2S => "HC2S",
            Variant::HWC2S => "HWC2S",
            Variant::AH2S => "AH2S",
            Variant::AHW2S => "AHW2S",
            Variant::AC2S => "AC2S",
            Variant::AHC2S => "AHC2S",
            Variant::AHWC2S => "AHWC2S",
        }
    }

    pub fn output(self) -> OutputKind {
        match self {
            Variant::S2A => OutputKind::AttributeScores,
            _ => OutputKind::Betas,
        }
    }

    fn letters(self) -> &'static str {
        self.name().split('2').next().unwrap_or("")
    }

    pub fn uses_attributes(self) -> bool {
        self.letters().contains('A')
    }

    pub fn uses_height(self) -> bool {
        self.letters().contains('H')
    }

    pub fn uses_weight(self) -> bool {
        self.letters().contains('W')
    }

    pub fn uses_circumferences(self) -> bool {
        self.letters().contains('C')
    }

    /// The same variant with the attribute block removed (`None` for A2S / S2A).
    pub fn without_attributes(self) -> Option<Variant> {
        match self {
            Variant::AH2S => Some(Variant::H2S),
            Variant::AHW2S => Some(Variant::HW2S),
            Variant::AC2S => Some(Variant::C2S),
            Variant::AHC2S => Some(Variant::HC2S),
            Variant::AHWC2S => Some(Variant::HWC2S),
            _ => None,
        }
    }

    /// Input channels, in order: attributes, height, weight, chest, waist, hip.
    pub fn channels(self, num_attributes: usize, num_betas: usize) -> Vec<Channel> {
        if self == Variant::S2A {
            return vec![Channel::Betas { count: num_betas }];
        }
        let mut ch = Vec::new();
        if self.uses_attributes() {
            ch.push(Channel::Attributes {
                count: num_attributes,
            });
        }
        if self.uses_height() {
            ch.push(Channel::Height);
        }
        if self.uses_weight() {
            ch.push(Channel::Weight);
        }
        if self.uses_circumferences() {
            ch.extend([Channel::Chest, Channel::Waist, Channel::Hip]);
        }
        ch
    }

    pub fn spec(self, num_attributes: usize, num_betas: usize, degree: usize) -> Result<FeatureSpec> {
        FeatureSpec::new(self.channels(num_attributes, num_betas), degree)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mapper variant {s:?}")))
    }
}

/// A fitted polynomial regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMapper {
    pub spec: FeatureSpec,
    /// `[feature][output]`.
    pub weights: DMatrix<f64>,
    pub output_kind: OutputKind,
    pub gender: Gender,
    pub variant: Option<Variant>,
    pub attribute_names: Vec<String>,
}

impl PolyMapper {
    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn zeros(spec: FeatureSpec, output_dim: usize, output_kind: OutputKind, gender: Gender) -> Self {
        let nf = spec.num_features();
        Self {
            spec,
            weights: DMatrix::zeros(nf, output_dim),
            output_kind,
            gender,
            variant: None,
            attribute_names: Vec::new(),
        }
    }

    /// `φ(transform(raw))ᵀ W`.
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let phi = self.spec.features(raw)?;
        Ok((0..self.output_dim())
            .map(|o| {
                phi.iter()
                    .enumerate()
                    .map(|(f, x)| x * self.weights[(f, o)])
                    .sum()
            })
            .collect())
    }

    /// Output and its Jacobian `[output][input]` with respect to the raw input.
    pub fn apply_with_jacobian(&self, raw: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let x = self.spec.transform(raw)?;
        let m = x.len();
        let phi = poly_features(&x, self.spec.degree);
        let dphi = poly_features_jacobian(&x, self.spec.degree);
        // chain through the per-channel transforms
        let mut dx = Vec::with_capacity(m);
        for ch in &self.spec.channels {
            let d = match ch {
                Channel::Height => 100.0,
                _ => 1.0,
            };
            for _ in 0..ch.width() {
                dx.push(d);
            }
        }
        let mut pos = 0;
        for ch in &self.spec.channels {
            if let Channel::Weight = ch {
                let w = raw[pos];
                dx[pos] = 1.0 / (3.0 * w.cbrt().powi(2));
            }
            pos += ch.width();
        }
        let out_dim = self.output_dim();
        let mut y = vec![0.0; out_dim];
        let mut jac = vec![0.0; out_dim * m];
        for o in 0..out_dim {
            for (f, p) in phi.iter().enumerate() {
                let w = self.weights[(f, o)];
                if w == 0.0 {
                    continue;
                }
                y[o] += p * w;
                for i in 0..m {
                    jac[o * m + i] += w * dphi[f * m + i] * dx[i];
                }
            }
        }
        Ok((y, jac))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = MapperManifest {
            format: MAPPER_FORMAT.into(),
            version: 1,
            variant: self.variant.map(|v| v.name().to_string()),
            gender: self.gender,
            spec: self.spec.clone(),
            output_kind: self.output_kind,
            input_dim: self.input_dim(),
            output_dim: self.output_dim(),
            num_features: self.spec.num_features(),
            attribute_names: self.attribute_names.clone(),
            weights: WeightsDesc {
                file: "weights.bin".into(),
                dtype: "f64".into(),
                shape: [self.spec.num_features(), self.output_dim()],
                order: "row_major".into(),
            },
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let p = dir.join("mapper.json");
        fs::write(&p, json).map_err(|e| Error::io(p, e))?;
        let mut bytes = Vec::with_capacity(self.weights.len() * 8);
        for f in 0..self.weights.nrows() {
            for o in 0..self.weights.ncols() {
                bytes.extend_from_slice(&self.weights[(f, o)].to_le_bytes());
            }
        }
        let p = dir.join("weights.bin");
        fs::write(&p, bytes).map_err(|e| Error::io(p, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join("mapper.json");
        let raw = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let m: MapperManifest =
            serde_json::from_slice(&raw).map_err(|e| Error::format("mapper", e.to_string()))?;
        if m.format != MAPPER_FORMAT {
            return Err(Error::format("mapper.format", format!("unexpected {:?}", m.format)));
        }
        let spec = FeatureSpec::new(m.spec.channels, m.spec.degree)?;
        let nf = spec.num_features();
        if m.num_features != nf || m.weights.shape[0] != nf {
            return Err(Error::dims("mapper.num_features", nf, m.num_features));
        }
        if m.input_dim != spec.input_dim() {
            return Err(Error::dims("mapper.input_dim", spec.input_dim(), m.input_dim));
        }
        if m.weights.shape[1] != m.output_dim {
            return Err(Error::dims("mapper.weights.shape[1]", m.output_dim, m.weights.shape[1]));
        }
        let wp = dir.join(&m.weights.file);
        let bytes = fs::read(&wp).map_err(|e| Error::io(&wp, e))?;
        if bytes.len() != nf * m.output_dim * 8 {
            return Err(Error::dims("mapper weights bytes", nf * m.output_dim * 8, bytes.len()));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let weights = DMatrix::from_row_slice(nf, m.output_dim, &values);
        let variant = match m.variant {
            Some(v) => Some(v.parse()?),
            None => None,
        };
        Ok(Self {
            spec,
            weights,
            output_kind: m.output_kind,
            gender: m.gender,
            variant,
            attribute_names: m.attribute_names,
        })
    }
}

const MAPPER_FORMAT: &str = "shapekit-poly-mapper";

#[derive(Debug, Serialize, Deserialize)]
struct MapperManifest {
    format: String,
    version: u32,
    variant: Option<String>,
    gender: Gender,
    spec: FeatureSpec,
    output_kind: OutputKind,
    input_dim: usize,
    output_dim: usize,
    num_features: usize,
    attribute_names: Vec<String>,
    weights: WeightsDesc,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightsDesc {
    file: String,
    dtype: String,
    shape: [usize; 2],
    order: String,
}

/// Result of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub mapper: PolyMapper,
    /// `‖φ(X)W − Y‖²_F` on the training rows.
    pub residual: f64,
}

/// Fits `W = argmin ‖φ(X)W − Y‖²_F + ridge·‖W‖²_F`.
///
/// `ridge = 0` solves by Householder QR and fails on a rank-deficient design;
/// `ridge > 0` solves the regularized normal equations by Cholesky.
pub fn fit_mapper(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    spec: FeatureSpec,
    ridge: f64,
    output_kind: OutputKind,
    gender: Gender,
) -> Result<FitReport> {
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge must be ≥ 0, got {ridge}")));
    }
    if inputs.len() != targets.len() {
        return Err(Error::dims("targets", inputs.len(), targets.len()));
    }
    let n = inputs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no training rows".into()));
    }
    let out_dim = targets[0].len();
    let nf = spec.num_features();
    let mut phi = DMatrix::zeros(n, nf);
    let mut y = DMatrix::zeros(n, out_dim);
    for (i, (x, t)) in inputs.iter().zip(targets).enumerate() {
        let f = spec.features(x)?;
        for (j, v) in f.into_iter().enumerate() {
            phi[(i, j)] = v;
        }
        if t.len() != out_dim {
            return Err(Error::dims(format!("targets[{i}]"), out_dim, t.len()));
        }
        for (j, &v) in t.iter().enumerate() {
            y[(i, j)] = v;
        }
    }

    let weights = if ridge == 0.0 {
        if n < nf {
            return Err(Error::RankDeficient { rows: n, cols: nf });
        }
        let qr = phi.clone().qr();
        let r = qr.r();
        let max_diag = (0..nf).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if max_diag == 0.0 || (0..nf).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag) {
            return Err(Error::RankDeficient { rows: n, cols: nf });
        }
        let qty = qr.q().transpose() * &y;
        r.solve_upper_triangular(&qty)
            .ok_or(Error::RankDeficient { rows: n, cols: nf })?
    } else {
        let mut gram = phi.transpose() * &phi;
        for i in 0..nf {
            gram[(i, i)] += ridge;
        }
        let rhs = phi.transpose() * &y;
        gram.cholesky()
            .ok_or(Error::RankDeficient { rows: n, cols: nf })?
            .solve(&rhs)
    };
    let residual = (&phi * &weights - &y).norm_squared();
    Ok(FitReport {
        mapper: PolyMapper {
            spec,
            weights,
            output_kind,
            gender,
            variant: None,
            attribute_names: Vec::new(),
        },
        residual,
    })
}

/// Gender-keyed fit of a named variant from subject rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub gender: Gender,
    pub attributes: Vec<f64>,
    pub beta: Vec<f64>,
    pub height: Option<f64>,
    pub weight: Option<f64>,
    pub chest: Option<f64>,
    pub waist: Option<f64>,
    pub hip: Option<f64>,
}

impl TrainingRow {
    /// Raw input vector in the channel order of `spec`, or `None` if a required
    /// value is missing.
    pub fn raw_input(&self, spec: &FeatureSpec) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(spec.input_dim());
        for ch in &spec.channels {
            match ch {
                Channel::Attributes { count } => {
                    if self.attributes.len() != *count {
                        return None;
                    }
                    out.extend_from_slice(&self.attributes);
                }
                Channel::Betas { count } => {
                    if self.beta.len() != *count {
                        return None;
                    }
                    out.extend_from_slice(&self.beta);
                }
                Channel::Height => out.push(self.height?),
                Channel::Weight => out.push(self.weight?),
                Channel::Chest => out.push(self.chest?),
                Channel::Waist => out.push(self.waist?),
                Channel::Hip => out.push(self.hip?),
                Channel::Passthrough { .. } => return None,
            }
        }
        Some(out)
    }
}

/// Fits `variant` on the rows of one gender. Rows missing a required input are skipped.
pub fn fit_variant(
    variant: Variant,
    rows: &[TrainingRow],
    gender: Gender,
    attribute_names: &[String],
    degree: usize,
    ridge: f64,
) -> Result<FitReport> {
    let rows: Vec<&TrainingRow> = rows.iter().filter(|r| r.gender == gender).collect();
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument(format!("no training rows for gender {gender}")))?;
    let spec = variant.spec(attribute_names.len(), first.beta.len(), degree)?;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for r in rows {
        let Some(x) = r.raw_input(&spec) else { continue };
        inputs.push(x);
        targets.push(match variant.output() {
            OutputKind::Betas => r.beta.clone(),
            OutputKind::AttributeScores => r.attributes.clone(),
        });
    }
    let mut report = fit_mapper(&inputs, &targets, spec, ridge, variant.output(), gender)?;
    report.mapper.variant = Some(variant);
    report.mapper.attribute_names = attribute_names.to_vec();
    Ok(report)
}

/// S2A prediction for one β, clamped to the Likert range.
#[derive(Debug, Clone, PartialEq)]
pub struct S2aPrediction {
    pub scores: Vec<f64>,
    /// Per attribute: the raw prediction fell outside [1, 5].
    pub clamped: Vec<bool>,
}

pub fn s2a(mapper: &PolyMapper, beta: &[f64]) -> Result<S2aPrediction> {
    if mapper.output_kind != OutputKind::AttributeScores {
        return Err(Error::InvalidArgument("mapper does not predict attribute scores".into()));
    }
    if !matches!(mapper.spec.channels.as_slice(), [Channel::Betas { .. }]) {
        return Err(Error::InvalidArgument("S2A mapper must take betas as its only input".into()));
    }
    let raw = mapper.apply(beta)?;
    let clamped = raw
        .iter()
        .map(|&s| !(LIKERT_MIN..=LIKERT_MAX).contains(&s))
        .collect();
    let scores = raw.iter().map(|&s| s.clamp(LIKERT_MIN, LIKERT_MAX)).collect();
    Ok(S2aPrediction { scores, clamped })
}
