//! Attribute, height and circumference losses as functions of β, and an
//! inverse fitter that minimizes them.
//!
//! ```text
//! L(β) = λ_attr ‖A − S2A(β)‖² + λ_height (H − H(β))²
//!      + λ_circ Σ_{c,w,h} (C_i − C_i(β))² + λ_reg ‖β‖²
//! ```
//!
//! The attribute term sums over attributes and uses the unclamped S2A output,
//! so it stays differentiable where a prediction leaves [1, 5].

use serde::{Deserialize, Serialize};

use crate::anthropometry::{measure_gradients, MeasureConfig, MeasurementSet};
use crate::body_model::{BodyModel, ShapeVector};
use crate::error::{Error, Result};
use crate::shape_mappers::{OutputKind, PolyMapper, Variant};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub attr: f64,
    pub height: f64,
    pub circ: f64,
    pub reg: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            attr: 1.0,
            height: 1.0,
            circ: 1.0,
            reg: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitTargets {
    pub attributes: Option<Vec<f64>>,
    pub height: Option<f64>,
    pub chest: Option<f64>,
    pub waist: Option<f64>,
    pub hip: Option<f64>,
    pub weights: LossWeights,
}

impl FitTargets {
    /// Height and all three circumferences of a measurement set.
    pub fn from_measurements(m: &MeasurementSet) -> Self {
        Self {
            height: Some(m.height),
            chest: Some(m.chest_circ),
            waist: Some(m.waist_circ),
            hip: Some(m.hip_circ),
            ..Self::default()
        }
    }

    fn circumferences(&self) -> [Option<f64>; 3] {
        [self.chest, self.waist, self.hip]
    }

    fn needs_measurements(&self) -> bool {
        self.height.is_some() || self.circumferences().iter().any(Option::is_some)
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        for (name, v) in [("attr", w.attr), ("height", w.height), ("circ", w.circ), ("reg", w.reg)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("loss weight {name} must be ≥ 0, got {v}")));
            }
        }
        if self.attributes.is_none() && !self.needs_measurements() {
            return Err(Error::InvalidArgument("fit targets are empty".into()));
        }
        Ok(())
    }

    /// The A*2S variant whose inputs are exactly the available targets.
    pub fn init_variant(&self) -> Option<Variant> {
        let a = self.attributes.is_some();
        let h = self.height.is_some();
        let c = self.circumferences().iter().all(Option::is_some);
        match (a, h, c) {
            (true, false, false) => Some(Variant::A2S),
            (true, true, false) => Some(Variant::AH2S),
            (true, false, true) => Some(Variant::AC2S),
            (true, true, true) => Some(Variant::AHC2S),
            (false, true, false) => Some(Variant::H2S),
            (false, false, true) => Some(Variant::C2S),
            (false, true, true) => Some(Variant::HC2S),
            (false, false, false) => None,
        }
    }

    /// Raw mapper input for `variant` built from these targets.
    pub fn mapper_input(&self, variant: Variant) -> Option<Vec<f64>> {
        let mut x = Vec::new();
        if variant.uses_attributes() {
            x.extend_from_slice(self.attributes.as_ref()?);
        }
        if variant.uses_height() {
            x.push(self.height?);
        }
        if variant.uses_weight() {
            return None;
        }
        if variant.uses_circumferences() {
            x.extend([self.chest?, self.waist?, self.hip?]);
        }
        Some(x)
    }
}

/// Weighted loss terms; they sum to the total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub attr: f64,
    pub height: f64,
    pub circ: f64,
    pub reg: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.attr + self.height + self.circ + self.reg
    }
}

/// Loss with the weighted residual vector `r` (so that `total = ‖r‖²`) and its
/// Jacobian with respect to β.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEvaluation {
    pub total: f64,
    pub terms: LossTerms,
    pub gradient: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `[residual][beta]` row-major.
    pub jacobian: Vec<f64>,
    pub measurements: Option<MeasurementSet>,
    pub non_smooth: bool,
}

fn check_s2a(s2a: Option<&PolyMapper>, targets: &FitTargets, b: usize) -> Result<()> {
    match (s2a, &targets.attributes) {
        (Some(m), Some(a)) => {
            if m.output_kind != OutputKind::AttributeScores {
                return Err(Error::InvalidArgument("attribute loss needs an S2A mapper".into()));
            }
            if m.input_dim() != b {
                return Err(Error::dims("s2a input", b, m.input_dim()));
            }
            if m.output_dim() != a.len() {
                return Err(Error::dims("attribute targets", m.output_dim(), a.len()));
            }
            Ok(())
        }
        (None, Some(_)) => Err(Error::InvalidArgument(
            "attribute targets given without an S2A mapper".into(),
        )),
        _ => Ok(()),
    }
}

/// Evaluates the loss, its per-term breakdown and its gradient at `beta`.
pub fn shape_loss(
    model: &BodyModel,
    s2a: Option<&PolyMapper>,
    beta: &ShapeVector,
    targets: &FitTargets,
    config: &MeasureConfig,
) -> Result<LossEvaluation> {
    targets.validate()?;
    let b = model.num_betas();
    if beta.len() != b {
        return Err(Error::dims("beta", b, beta.len()));
    }
    check_s2a(s2a, targets, b)?;
    let w = targets.weights;
    let mut residuals = Vec::new();
    let mut jacobian = Vec::new();
    let mut terms = LossTerms::default();
    let mut push = |r: f64, row: &[f64], scale: f64| -> f64 {
        residuals.push(scale * r);
        jacobian.extend(row.iter().map(|g| scale * g));
        (scale * r).powi(2)
    };

    if let (Some(m), Some(a)) = (s2a, &targets.attributes) {
        let (pred, jac) = m.apply_with_jacobian(beta.as_slice())?;
        let s = w.attr.sqrt();
        for (k, (p, t)) in pred.iter().zip(a).enumerate() {
            terms.attr += push(p - t, &jac[k * b..(k + 1) * b], s);
        }
    }

    let mut measurements = None;
    let mut non_smooth = false;
    if targets.needs_measurements() {
        let g = measure_gradients(model, beta, config)?;
        if let Some(h) = targets.height {
            terms.height += push(g.values.height - h, &g.height, w.height.sqrt());
        }
        let values = [g.values.chest_circ, g.values.waist_circ, g.values.hip_circ];
        let grads = [&g.chest, &g.waist, &g.hip];
        for (i, t) in targets.circumferences().iter().enumerate() {
            if let Some(t) = t {
                terms.circ += push(values[i] - t, grads[i], w.circ.sqrt());
                non_smooth |= g.non_smooth[i];
            }
        }
        measurements = Some(g.values);
    }

    if w.reg > 0.0 {
        let s = w.reg.sqrt();
        let mut row = vec![0.0; b];
        for k in 0..b {
            row[k] = 1.0;
            terms.reg += push(beta.0[k], &row, s);
            row[k] = 0.0;
        }
    }

    let n = residuals.len();
    let mut gradient = vec![0.0; b];
    for i in 0..n {
        for k in 0..b {
            gradient[k] += 2.0 * residuals[i] * jacobian[i * b + k];
        }
    }
    Ok(LossEvaluation {
        total: terms.total(),
        terms,
        gradient,
        residuals,
        jacobian,
        measurements,
        non_smooth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Damped Gauss-Newton (Levenberg-Marquardt) steps with backtracking.
    GaussNewton,
    /// Steepest descent with backtracking.
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Stop once an accepted step lowers the loss by less than this.
    pub tolerance: f64,
    pub method: Method,
    /// Reject steps that raise the loss and retry with half the step.
    pub backtracking: bool,
    pub max_halvings: usize,
    /// Initial damping for Gauss-Newton.
    pub damping: f64,
    /// Initial step for gradient descent.
    pub step: f64,
    pub measure: MeasureConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tolerance: 1e-10,
            method: Method::GaussNewton,
            backtracking: true,
            max_halvings: 50,
            damping: 1e-3,
            step: 1.0,
            measure: MeasureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    /// No step along the search direction lowers the loss.
    NoDescent,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: ShapeVector,
    pub loss: f64,
    pub terms: LossTerms,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub non_smooth_encounters: usize,
    /// Loss at the start and after every accepted step.
    pub trace: Vec<f64>,
    pub measurements: Option<MeasurementSet>,
    pub initialized_from: Option<Variant>,
}

/// Mappers available to the fitter.
#[derive(Debug, Clone, Default)]
pub struct FitMappers {
    pub s2a: Option<PolyMapper>,
    /// Candidate initializers; the one matching [`FitTargets::init_variant`] is used.
    pub a2s: Vec<PolyMapper>,
}

fn initial_beta(model: &BodyModel, mappers: &FitMappers, targets: &FitTargets) -> Result<(ShapeVector, Option<Variant>)> {
    let b = model.num_betas();
    if let Some(v) = targets.init_variant() {
        if let Some(m) = mappers.a2s.iter().find(|m| m.variant == Some(v)) {
            if let Some(x) = targets.mapper_input(v) {
                let beta = m.apply(&x)?;
                if beta.len() != b {
                    return Err(Error::dims("initializer output", b, beta.len()));
                }
                if beta.iter().all(|x| x.is_finite()) {
                    return Ok((ShapeVector(beta), Some(v)));
                }
            }
        }
    }
    Ok((ShapeVector::zeros(b), None))
}

/// Loss at a trial point; geometric failures (for example a landmark plane
/// that no longer cuts the mesh) count as an infinite loss.
fn trial(
    model: &BodyModel,
    s2a: Option<&PolyMapper>,
    beta: &ShapeVector,
    targets: &FitTargets,
    config: &MeasureConfig,
) -> Result<Option<LossEvaluation>> {
    match shape_loss(model, s2a, beta, targets, config) {
        Ok(e) if e.total.is_finite() => Ok(Some(e)),
        Ok(_) => Ok(None),
        Err(Error::EmptyIntersection { .. })
        | Err(Error::MeasurementOutOfRange { .. })
        | Err(Error::InconsistentWinding(_)) => Ok(None),
        Err(Error::Format { field, .. }) if field == "landmarks" => Ok(None),
        Err(e) => Err(e),
    }
}

fn gauss_newton_direction(e: &LossEvaluation, b: usize, damping: f64) -> Vec<f64> {
    let n = e.residuals.len();
    let j = DMatrix::from_row_slice(n, b, &e.jacobian);
    let r = DVector::from_column_slice(&e.residuals);
    let mut h = j.transpose() * &j;
    let scale = (0..b).map(|k| h[(k, k)]).fold(0.0, f64::max).max(1e-12);
    for k in 0..b {
        h[(k, k)] += damping * scale;
    }
    let rhs = -(j.transpose() * r);
    match h.clone().cholesky() {
        Some(c) => c.solve(&rhs).iter().copied().collect(),
        None => rhs.iter().map(|g| g / scale).collect(),
    }
}

/// Minimizes the loss over β.
pub fn fit_shape(
    model: &BodyModel,
    mappers: &FitMappers,
    targets: &FitTargets,
    config: &FitConfig,
) -> Result<FitResult> {
    targets.validate()?;
    let s2a = mappers.s2a.as_ref();
    let (beta, initialized_from) = initial_beta(model, mappers, targets)?;
    if initialized_from.is_some() && trial(model, s2a, &beta, targets, &config.measure)?.is_none() {
        // the initializer landed somewhere unmeasurable; start from the mean shape
        let zeros = ShapeVector::zeros(model.num_betas());
        return fit_from(model, s2a, zeros, None, targets, config);
    }
    fit_from(model, s2a, beta, initialized_from, targets, config)
}

fn fit_from(
    model: &BodyModel,
    s2a: Option<&PolyMapper>,
    mut beta: ShapeVector,
    initialized_from: Option<Variant>,
    targets: &FitTargets,
    config: &FitConfig,
) -> Result<FitResult> {
    let b = model.num_betas();
    let mut current = shape_loss(model, s2a, &beta, targets, &config.measure)?;
    let mut trace = vec![current.total];
    if !current.total.is_finite() {
        return Err(Error::Diverged { iteration: 0, trace });
    }
    let mut damping = config.damping;
    let mut step = config.step;
    let mut non_smooth_encounters = 0;
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < config.max_iters {
        iterations += 1;
        if current.non_smooth {
            non_smooth_encounters += 1;
        }
        let direction = match config.method {
            Method::GaussNewton => gauss_newton_direction(&current, b, damping),
            Method::GradientDescent => current.gradient.iter().map(|g| -g).collect(),
        };
        if direction.iter().any(|d| !d.is_finite()) {
            trace.push(f64::NAN);
            return Err(Error::Diverged { iteration: iterations, trace });
        }
        let mut alpha = match config.method {
            Method::GaussNewton => 1.0,
            Method::GradientDescent => step,
        };
        if current.non_smooth {
            alpha *= 0.5;
        }

        let mut accepted = None;
        for halving in 0..=config.max_halvings {
            let candidate = ShapeVector(
                beta.0
                    .iter()
                    .zip(&direction)
                    .map(|(x, d)| x + alpha * d)
                    .collect(),
            );
            match trial(model, s2a, &candidate, targets, &config.measure)? {
                Some(e) if !config.backtracking || e.total <= current.total => {
                    accepted = Some((candidate, e, halving));
                    break;
                }
                None if !config.backtracking => {
                    trace.push(f64::NAN);
                    return Err(Error::Diverged { iteration: iterations, trace });
                }
                _ => alpha *= 0.5,
            }
        }

        let Some((candidate, eval, halvings)) = accepted else {
            stop_reason = StopReason::NoDescent;
            break;
        };
        if !eval.total.is_finite() {
            trace.push(eval.total);
            return Err(Error::Diverged { iteration: iterations, trace });
        }
        match config.method {
            Method::GaussNewton => {
                damping = if halvings == 0 {
                    (damping / 3.0).max(1e-12)
                } else {
                    (damping * 2.0).min(1e6)
                }
            }
            Method::GradientDescent => {
                step = if halvings == 0 { alpha * 2.0 } else { alpha };
            }
        }
        let decrease = current.total - eval.total;
        beta = candidate;
        current = eval;
        trace.push(current.total);
        if decrease.abs() < config.tolerance {
            stop_reason = StopReason::Tolerance;
            break;
        }
    }

    Ok(FitResult {
        beta,
        loss: current.total,
        terms: current.terms,
        iterations,
        converged: stop_reason != StopReason::MaxIterations,
        stop_reason,
        non_smooth_encounters,
        trace,
        measurements: current.measurements,
        initialized_from,
    })
}
