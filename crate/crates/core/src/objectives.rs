//! Reference values for the adversarial, perceptual and feature-matching
//! objectives, computed from caller-supplied discriminator probabilities and
//! feature maps. Nothing here runs a network or takes gradients.

use thiserror::Error;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("{0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("feature stacks differ: {0}")]
    ShapeMismatch(String),
    #[error("loss weight {name} = {value} must be finite and non-negative")]
    InvalidWeight { name: &'static str, value: f64 },
}

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Discriminator outputs for real-labeled and fake-labeled inputs, clamped on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBatch {
    real: Vec<f64>,
    fake: Vec<f64>,
}

impl ScoreBatch {
    pub fn new(real: Vec<f64>, fake: Vec<f64>) -> Result<Self, ObjectiveError> {
        for (name, v) in [("real scores", &real), ("fake scores", &fake)] {
            if v.is_empty() {
                return Err(ObjectiveError::Empty(name));
            }
            if !v.iter().all(|p| p.is_finite()) {
                return Err(ObjectiveError::NonFinite(name));
            }
        }
        Ok(Self {
            real: real.into_iter().map(clamp_probability).collect(),
            fake: fake.into_iter().map(clamp_probability).collect(),
        })
    }

    pub fn real(&self) -> &[f64] {
        &self.real
    }

    pub fn fake(&self) -> &[f64] {
        &self.fake
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

/// `mean(log D(real)) + mean(log(1 - D(fake)))`, natural log. Used for both
/// the label-conditioned and the blended-pair discriminators.
pub fn gan_objective(scores: &ScoreBatch) -> f64 {
    mean(scores.real.iter().map(|p| p.ln())) + mean(scores.fake.iter().map(|p| (1.0 - p).ln()))
}

/// Flattened feature maps, one vector per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    layers: Vec<Vec<f64>>,
}

impl FeatureStack {
    pub fn new(layers: Vec<Vec<f64>>) -> Result<Self, ObjectiveError> {
        if layers.is_empty() {
            return Err(ObjectiveError::Empty("feature stack"));
        }
        if layers.iter().any(|l| l.is_empty()) {
            return Err(ObjectiveError::Empty("feature layer"));
        }
        if !layers.iter().flatten().all(|v| v.is_finite()) {
            return Err(ObjectiveError::NonFinite("feature stack"));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn element_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }
}

fn check_matching(a: &FeatureStack, b: &FeatureStack) -> Result<(), ObjectiveError> {
    if a.element_counts() != b.element_counts() {
        return Err(ObjectiveError::ShapeMismatch(format!(
            "{:?} vs {:?} elements per layer",
            a.element_counts(),
            b.element_counts()
        )));
    }
    Ok(())
}

fn layer_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Sum over layers of the L1 distance between corresponding elements.
pub fn perceptual_l1(a: &FeatureStack, b: &FeatureStack) -> Result<f64, ObjectiveError> {
    check_matching(a, b)?;
    Ok(a.layers.iter().zip(&b.layers).map(|(x, y)| layer_l1(x, y)).sum())
}

/// `Σ_i (1 / N_i) ||real_i - fake_i||_1` for one discriminator scale.
pub fn feature_matching(real: &FeatureStack, fake: &FeatureStack) -> Result<f64, ObjectiveError> {
    check_matching(real, fake)?;
    Ok(real
        .layers
        .iter()
        .zip(&fake.layers)
        .map(|(x, y)| layer_l1(x, y) / x.len() as f64)
        .sum())
}

/// Sums per-scale values (e.g. one feature-matching value per discriminator
/// scale).
pub fn multi_scale_sum(per_scale: &[f64]) -> f64 {
    per_scale.iter().sum()
}

/// Feature matching summed over discriminator scales.
pub fn feature_matching_multiscale(real: &[FeatureStack], fake: &[FeatureStack]) -> Result<f64, ObjectiveError> {
    if real.len() != fake.len() {
        return Err(ObjectiveError::ShapeMismatch(format!("{} vs {} scales", real.len(), fake.len())));
    }
    let per_scale = real
        .iter()
        .zip(fake)
        .map(|(r, f)| feature_matching(r, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(multi_scale_sum(&per_scale))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_p: f64,
    pub lambda_fm: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_p: 5.0,
            lambda_fm: 10.0,
        }
    }
}

impl LossWeights {
    pub fn new(lambda_p: f64, lambda_fm: f64) -> Result<Self, ObjectiveError> {
        for (name, value) in [("lambda_p", lambda_p), ("lambda_fm", lambda_fm)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ObjectiveError::InvalidWeight { name, value });
            }
        }
        Ok(Self { lambda_p, lambda_fm })
    }
}

/// Terms of the motion-transfer objective: one adversarial and one
/// feature-matching term per domain discriminator, plus the perceptual term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MtTerms {
    pub gan_s: f64,
    pub gan_t: f64,
    pub perceptual: f64,
    pub fm_s: f64,
    pub fm_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeTerms {
    pub gan: f64,
    pub perceptual: f64,
    pub fm: f64,
}

pub fn mt_full_objective(t: &MtTerms, w: &LossWeights) -> f64 {
    t.gan_s + t.gan_t + w.lambda_p * t.perceptual + w.lambda_fm * (t.fm_s + t.fm_t)
}

pub fn de_full_objective(t: &DeTerms, w: &LossWeights) -> f64 {
    t.gan + w.lambda_p * t.perceptual + w.lambda_fm * t.fm
}
