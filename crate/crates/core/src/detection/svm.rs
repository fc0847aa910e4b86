//! Linear soft-margin SVM trained by deterministic full-batch subgradient
//! descent on `1/2 |w|^2 + C * sum(max(0, 1 - y (w.z + b)))`.
//!
//! Each iteration moves a fixed length `initial_step / sqrt(t)` along the
//! normalized subgradient. Training stops as soon as the hinge loss is zero;
//! otherwise the iterate with the lowest objective is kept.

use serde::{Deserialize, Serialize};

use super::{DetectorModel, FeatureVector, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Hinge-loss weight C.
    pub c: f64,
    pub max_iterations: usize,
    /// Step length at iteration t is `initial_step / sqrt(t)`.
    pub initial_step: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iterations: 100_000,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmSummary {
    pub config: SvmConfig,
    pub samples: usize,
    pub iterations: usize,
    pub objective: f64,
    pub hinge_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub w: [f64; 2],
    pub b: f64,
    pub summary: SvmSummary,
}

fn objective(z: &[[f64; 2]], y: &[f64], w: [f64; 2], b: f64, c: f64) -> (f64, f64) {
    let hinge: f64 = z
        .iter()
        .zip(y)
        .map(|(x, &y)| (1.0 - y * (w[0] * x[0] + w[1] * x[1] + b)).max(0.0))
        .sum();
    (0.5 * (w[0] * w[0] + w[1] * w[1]) + c * hinge, hinge)
}

/// Trains on already-standardized features. `labels[i]` is true for tumor.
pub fn train_svm_standardized(z: &[[f64; 2]], labels: &[bool], cfg: &SvmConfig) -> Result<LinearSvm> {
    if z.len() != labels.len() || z.is_empty() {
        return Err(Error::InvalidArgument(
            "features and labels must be non-empty and aligned".into(),
        ));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }
    if !(cfg.c > 0.0) || cfg.max_iterations == 0 || !(cfg.initial_step > 0.0) {
        return Err(Error::InvalidArgument("invalid SVM configuration".into()));
    }
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let n = z.len() as f64;
    let lambda = 1.0 / (cfg.c * n);

    let mut w = [0.0f64; 2];
    let mut b = 0.0f64;
    let (mut best_obj, mut best_hinge) = objective(z, &y, w, b, cfg.c);
    let mut best = (w, b);
    let mut iterations = 0;
    for t in 1..=cfg.max_iterations {
        iterations = t;
        let mut gw = [lambda * w[0], lambda * w[1]];
        let mut gb = 0.0;
        let mut violated = false;
        for (x, &yi) in z.iter().zip(&y) {
            if yi * (w[0] * x[0] + w[1] * x[1] + b) < 1.0 {
                violated = true;
                gw[0] -= yi * x[0] / n;
                gw[1] -= yi * x[1] / n;
                gb -= yi / n;
            }
        }
        if !violated {
            // zero hinge loss at the current iterate
            let (obj, hinge) = objective(z, &y, w, b, cfg.c);
            best = (w, b);
            best_obj = obj;
            best_hinge = hinge;
            break;
        }
        let norm = (gw[0] * gw[0] + gw[1] * gw[1] + gb * gb).sqrt();
        if norm == 0.0 {
            break;
        }
        let eta = cfg.initial_step / ((t as f64).sqrt() * norm);
        w[0] -= eta * gw[0];
        w[1] -= eta * gw[1];
        b -= eta * gb;
        let (obj, hinge) = objective(z, &y, w, b, cfg.c);
        if obj < best_obj {
            best_obj = obj;
            best_hinge = hinge;
            best = (w, b);
        }
    }
    Ok(LinearSvm {
        w: best.0,
        b: best.1,
        summary: SvmSummary {
            config: cfg.clone(),
            samples: z.len(),
            iterations,
            objective: best_obj,
            hinge_loss: best_hinge,
        },
    })
}

/// Fits the standardizer on `features`, then the SVM on the standardized set.
pub fn train_svm(features: &[FeatureVector], labels: &[bool], cfg: &SvmConfig) -> Result<DetectorModel> {
    if !labels.is_empty() && (labels.iter().all(|&l| l) || labels.iter().all(|&l| !l)) {
        return Err(Error::SingleClass);
    }
    let standardizer = Standardizer::fit(features)?;
    let z: Vec<[f64; 2]> = features.iter().map(|f| standardizer.apply(f)).collect();
    let svm = train_svm_standardized(&z, labels, cfg)?;
    let mut model = DetectorModel::new(standardizer, svm.w[0], svm.w[1], svm.b)?;
    model.training = Some(svm.summary);
    Ok(model)
}
