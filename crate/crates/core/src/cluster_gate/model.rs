//! Softmax-linear gating network trained with the KL divergence to
//! normalized expert success rates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target distribution over experts for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertScoreRecord {
    pub object_id: String,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
}

impl ExpertScoreRecord {
    pub fn new(object_id: impl Into<String>, p: Vec<f64>) -> Result<Self> {
        let r = Self {
            object_id: object_id.into(),
            p,
        };
        r.validate()?;
        Ok(r)
    }

    /// Normalizes raw success rates; all-zero rates give a uniform target.
    pub fn from_success_rates(object_id: impl Into<String>, rates: &[f64]) -> Result<Self> {
        if rates.is_empty() || rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::config("rates", "success rates must lie in [0, 1]"));
        }
        let total: f64 = rates.iter().sum();
        let p = if total > 0.0 {
            rates.iter().map(|r| r / total).collect()
        } else {
            vec![1.0 / rates.len() as f64; rates.len()]
        };
        Self::new(object_id, p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(format!("{}.P", self.object_id), "entries must be finite and non-negative"));
        }
        let s: f64 = self.p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("{}.P", self.object_id), format!("sums to {s}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingModel {
    /// D×k weights applied to standardized features.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// Per-feature mean and scale used to standardize inputs.
    pub feature_mean: DVector<f64>,
    pub feature_scale: DVector<f64>,
    /// Mean KL divergence before training and after every epoch.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GatingConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

pub fn softmax(logits: &DVector<f64>) -> DVector<f64> {
    let m = logits.max();
    let e = logits.map(|z| (z - m).exp());
    let s = e.sum();
    e / s
}

fn log_softmax(logits: &DVector<f64>) -> DVector<f64> {
    let m = logits.max();
    let lse = m + logits.map(|z| (z - m).exp()).sum().ln();
    logits.map(|z| z - lse)
}

/// D_KL(p ‖ q) with q given by its logits; 0·ln 0 counts as 0.
pub fn kl_from_logits(p: &[f64], logits: &DVector<f64>) -> f64 {
    let lq = log_softmax(logits);
    p.iter()
        .zip(lq.iter())
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, lqi)| pi * (pi.ln() - lqi))
        .sum()
}

/// D_KL(p ‖ q) for two probability vectors.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl GatingModel {
    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_experts(&self) -> usize {
        self.weights.ncols()
    }

    fn standardize(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .enumerate()
                .map(|(j, v)| (v - self.feature_mean[j]) / self.feature_scale[j]),
        )
    }

    pub fn logits(&self, x: &[f64]) -> DVector<f64> {
        assert_eq!(x.len(), self.n_features(), "feature dimension");
        self.weights.transpose() * self.standardize(x) + &self.bias
    }

    pub fn predict(&self, x: &[f64]) -> DVector<f64> {
        softmax(&self.logits(x))
    }

    /// Expert with the highest predicted score.
    pub fn select(&self, x: &[f64]) -> usize {
        argmax(self.predict(x).as_slice())
    }

    /// Mean KL divergence from targets to predictions.
    pub fn loss(&self, features: &[Vec<f64>], targets: &[ExpertScoreRecord]) -> f64 {
        features
            .iter()
            .zip(targets)
            .map(|(x, r)| kl_from_logits(&r.p, &self.logits(x)))
            .sum::<f64>()
            / features.len() as f64
    }
}

/// Full-batch gradient descent on the mean KL divergence.
///
/// Fails with `NonFinite` when the loss stops being finite or grows past
/// a thousand times its starting value.
pub fn gating_train(
    features: &[Vec<f64>],
    targets: &[ExpertScoreRecord],
    config: &GatingConfig,
) -> Result<GatingModel> {
    if features.is_empty() || features.len() != targets.len() {
        return Err(Error::config(
            "records",
            format!("{} feature rows for {} targets", features.len(), targets.len()),
        ));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::config("gating.learning_rate", "must be positive"));
    }
    let d = features[0].len();
    let k = targets[0].p.len();
    for (i, (x, r)) in features.iter().zip(targets).enumerate() {
        if x.len() != d {
            return Err(Error::config(format!("features[{i}]"), "inconsistent feature dimension"));
        }
        if r.p.len() != k {
            return Err(Error::config(format!("records[{i}].P"), "inconsistent expert count"));
        }
        r.validate()?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("features[{i}]")));
        }
    }
    let n = features.len() as f64;
    let mean = DVector::from_fn(d, |j, _| features.iter().map(|x| x[j]).sum::<f64>() / n);
    let scale = DVector::from_fn(d, |j, _| {
        let var = features.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
        if var.sqrt() > 1e-12 {
            var.sqrt()
        } else {
            1.0
        }
    });

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GatingModel {
        weights: DMatrix::from_fn(d, k, |_, _| rng.random_range(-0.01..0.01)),
        bias: DVector::zeros(k),
        feature_mean: mean,
        feature_scale: scale,
        loss_history: Vec::with_capacity(config.epochs + 1),
    };
    let z: Vec<DVector<f64>> = features.iter().map(|x| model.standardize(x)).collect();

    let loss_of = |m: &GatingModel| -> Result<f64> {
        let l = z
            .iter()
            .zip(targets)
            .map(|(zi, r)| kl_from_logits(&r.p, &(m.weights.transpose() * zi + &m.bias)))
            .sum::<f64>()
            / n;
        if l.is_finite() {
            Ok(l)
        } else {
            Err(Error::NonFinite("gating loss diverged; lower the learning rate".into()))
        }
    };
    let initial = loss_of(&model)?;
    let ceiling = 1e3 * (initial + 1.0);
    model.loss_history.push(initial);

    for _ in 0..config.epochs {
        let mut gw = DMatrix::zeros(d, k);
        let mut gb = DVector::zeros(k);
        for (zi, r) in z.iter().zip(targets) {
            let q = softmax(&(model.weights.transpose() * zi + &model.bias));
            let delta = q - DVector::from_column_slice(&r.p);
            gw += zi * delta.transpose();
            gb += delta;
        }
        model.weights -= config.learning_rate / n * gw;
        model.bias -= config.learning_rate / n * gb;
        let l = loss_of(&model)?;
        if l > ceiling {
            return Err(Error::NonFinite(format!("gating loss diverged to {l:e}; lower the learning rate")));
        }
        model.loss_history.push(l);
    }
    Ok(model)
}
