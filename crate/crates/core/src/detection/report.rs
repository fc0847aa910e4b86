use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DetectorModel, FeatureVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDecision {
    pub sample_id: usize,
    pub label: bool,
    pub predicted: bool,
    pub decision_value: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub samples: usize,
    pub accuracy: f64,
    pub true_positive: usize,
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub decisions: Vec<SampleDecision>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One CSV row per sample.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for d in &self.decisions {
            w.serialize(d)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Scores `model` on labeled feature vectors. `ids` name the samples in the report.
pub fn evaluate(
    model: &DetectorModel,
    ids: &[usize],
    features: &[FeatureVector],
    labels: &[bool],
) -> Result<EvaluationReport> {
    if features.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    if features.len() != labels.len() || ids.len() != labels.len() {
        return Err(Error::InvalidArgument(
            "ids, features and labels must be aligned".into(),
        ));
    }
    let mut report = EvaluationReport {
        samples: features.len(),
        accuracy: 0.0,
        true_positive: 0,
        true_negative: 0,
        false_positive: 0,
        false_negative: 0,
        decisions: Vec::with_capacity(features.len()),
    };
    for ((&id, f), &label) in ids.iter().zip(features).zip(labels) {
        let value = model.decision_value(f);
        let predicted = DetectorModel::classify_value(value).is_tumor();
        match (label, predicted) {
            (true, true) => report.true_positive += 1,
            (false, false) => report.true_negative += 1,
            (false, true) => report.false_positive += 1,
            (true, false) => report.false_negative += 1,
        }
        report.decisions.push(SampleDecision {
            sample_id: id,
            label,
            predicted,
            decision_value: value,
            mu: f.mu,
            sigma: f.sigma,
        });
    }
    report.accuracy = (report.true_positive + report.true_negative) as f64 / features.len() as f64;
    Ok(report)
}

/// Seeded stratified split. Each class is shuffled and its first
/// `round(train_fraction * n_class)` members go to training. Both index lists
/// come back sorted.
pub fn stratified_split(labels: &[bool], train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let k = (train_fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}
