//! Tumor detection from deformation statistics.
//!
//! A press is summarized by the mean and population standard deviation of
//! its in-disc depths. Both features are standardized with training-set
//! statistics and fed to a linear SVM; a positive decision value means tumor.

mod report;
mod svm;

use serde::{Deserialize, Serialize};

pub use report::{evaluate, stratified_split, EvaluationReport, SampleDecision};
pub use svm::{train_svm, train_svm_standardized, LinearSvm, SvmConfig, SvmSummary};

use crate::calibration::DepthReader;
use crate::deformation::DeformationMap;
use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::par;
use crate::phantom::PhantomSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Mean in-disc depth, mm.
    pub mu: f64,
    /// Population standard deviation of in-disc depth, mm.
    pub sigma: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 2] {
        [self.mu, self.sigma]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mu: self.mu * factor,
            sigma: self.sigma * factor,
        }
    }
}

pub fn extract_features(map: &DeformationMap) -> Result<FeatureVector> {
    let (mut n, mut sum) = (0usize, 0f64);
    for d in map.masked_depths() {
        n += 1;
        sum += f64::from(d);
    }
    if n == 0 {
        return Err(Error::Empty("deformation mask"));
    }
    let mu = sum / n as f64;
    let var = map.masked_depths().map(|d| (f64::from(d) - mu).powi(2)).sum::<f64>() / n as f64;
    let fv = FeatureVector { mu, sigma: var.sqrt() };
    if !(fv.mu.is_finite() && fv.sigma.is_finite()) {
        return Err(Error::InvalidMap("non-finite depth statistics".into()));
    }
    Ok(fv)
}

/// Per-feature affine map to zero mean and unit (population) variance.
/// Reconstructs every sample with `reader` and extracts its features.
pub fn sample_features<R: DepthReader>(
    reader: &R,
    samples: &[PhantomSample],
    geom: &SensorGeometry,
) -> Result<Vec<FeatureVector>> {
    par::map_slice(samples, |s| {
        let map = reader.read(&s.reference, &s.contact, geom)?;
        extract_features(&map)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: [f64; 2],
    pub stds: [f64; 2],
}

impl Standardizer {
    pub const IDENTITY: Standardizer = Standardizer {
        means: [0.0, 0.0],
        stds: [1.0, 1.0],
    };

    pub fn fit(features: &[FeatureVector]) -> Result<Self> {
        if features.len() < 2 {
            return Err(Error::InvalidArgument("standardizer needs at least two samples".into()));
        }
        let n = features.len() as f64;
        let mut means = [0.0; 2];
        let mut stds = [0.0; 2];
        for (j, name) in ["mu", "sigma"].into_iter().enumerate() {
            let mean = features.iter().map(|f| f.as_array()[j]).sum::<f64>() / n;
            let var = features.iter().map(|f| (f.as_array()[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if !(std > 1e-300) || !std.is_finite() {
                return Err(Error::ZeroVariance(name));
            }
            means[j] = mean;
            stds[j] = std;
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, f: &FeatureVector) -> [f64; 2] {
        let x = f.as_array();
        [
            (x[0] - self.means[0]) / self.stds[0],
            (x[1] - self.means[1]) / self.stds[1],
        ]
    }
}

pub const LABEL_CONVENTION: &str = "decision_value > 0 => tumor";

/// Linear decision function over standardized `(mu, sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub standardizer: Standardizer,
    pub w_mu: f64,
    pub w_sigma: f64,
    pub bias: f64,
    pub label_convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<SvmSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Tumor,
    NoTumor,
}

impl Label {
    pub fn from_bool(tumor: bool) -> Self {
        if tumor {
            Label::Tumor
        } else {
            Label::NoTumor
        }
    }

    pub fn is_tumor(self) -> bool {
        self == Label::Tumor
    }
}

impl DetectorModel {
    pub fn new(standardizer: Standardizer, w_mu: f64, w_sigma: f64, bias: f64) -> Result<Self> {
        if w_mu == 0.0 && w_sigma == 0.0 {
            return Err(Error::InvalidModel("weight vector is zero".into()));
        }
        if standardizer.stds.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidModel("standardizer stds must be positive".into()));
        }
        Ok(Self {
            standardizer,
            w_mu,
            w_sigma,
            bias,
            label_convention: LABEL_CONVENTION.into(),
            training: None,
        })
    }

    pub fn decision_value_standardized(&self, z: [f64; 2]) -> f64 {
        self.w_mu * z[0] + self.w_sigma * z[1] + self.bias
    }

    pub fn decision_value(&self, f: &FeatureVector) -> f64 {
        self.decision_value_standardized(self.standardizer.apply(f))
    }

    /// Tumor iff the decision value is strictly positive.
    pub fn classify_value(value: f64) -> Label {
        Label::from_bool(value > 0.0)
    }

    pub fn classify(&self, f: &FeatureVector) -> Label {
        Self::classify_value(self.decision_value(f))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        let checked = Self::new(m.standardizer, m.w_mu, m.w_sigma, m.bias)?;
        if m.label_convention != LABEL_CONVENTION {
            return Err(Error::InvalidModel(format!(
                "unsupported label convention {:?}",
                m.label_convention
            )));
        }
        Ok(Self {
            training: m.training,
            ..checked
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SensorGeometry;

    fn geom() -> SensorGeometry {
        SensorGeometry {
            width: 20,
            height: 20,
            sense_radius_mm: 0.5,
            mm_per_px: 0.05,
        }
    }

    #[test]
    fn uniform_map_features() {
        let g = geom();
        let map = DeformationMap::from_geometry(&g, vec![0.3; g.len()]).unwrap();
        let f = extract_features(&map).unwrap();
        assert!((f.mu - 0.3).abs() < 1e-7);
        assert_eq!(f.sigma, 0.0);
    }

    #[test]
    fn two_point_features() {
        let depths = vec![0.2, 0.4, 0.2, 0.4, 9.0, 9.0];
        let mask = vec![true, true, true, true, false, false];
        let map = DeformationMap::new(3, 2, depths, mask).unwrap();
        let f = extract_features(&map).unwrap();
        assert!((f.mu - 0.3).abs() < 1e-7);
        assert!((f.sigma - 0.1).abs() < 1e-7);
        let empty = DeformationMap::new(1, 1, vec![0.0], vec![false]).unwrap();
        assert!(matches!(extract_features(&empty), Err(Error::Empty(_))));
    }

    #[test]
    fn standardizer_examples() {
        let fv = |x: f64| FeatureVector { mu: x, sigma: 2.0 * x };
        let s = Standardizer::fit(&[fv(1.0), fv(3.0)]).unwrap();
        assert_eq!(s.means, [2.0, 4.0]);
        assert_eq!(s.stds, [1.0, 2.0]);
        assert_eq!(s.apply(&fv(1.0)), [-1.0, -1.0]);
        assert_eq!(s.apply(&fv(3.0)), [1.0, 1.0]);
        assert_eq!(s.apply(&fv(2.0)), [0.0, 0.0]);
        assert!(Standardizer::fit(&[fv(1.0)]).is_err());
        let flat = [
            FeatureVector { mu: 1.0, sigma: 0.0 },
            FeatureVector { mu: 2.0, sigma: 0.0 },
        ];
        assert!(matches!(Standardizer::fit(&flat), Err(Error::ZeroVariance("sigma"))));
    }

    #[test]
    fn standardized_training_set_moments() {
        let feats: Vec<FeatureVector> = (0..57)
            .map(|i| FeatureVector {
                mu: 0.3 + 0.001 * f64::from(i * 7 % 13),
                sigma: 0.01 + 0.002 * f64::from(i % 5),
            })
            .collect();
        let s = Standardizer::fit(&feats).unwrap();
        for j in 0..2 {
            let z: Vec<f64> = feats.iter().map(|f| s.apply(f)[j]).collect();
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
            assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_boundary_arithmetic() {
        let m = DetectorModel::new(Standardizer::IDENTITY, 0.33, 4.80, 4.53).unwrap();
        assert_eq!(m.decision_value_standardized([0.0, 0.0]), 4.53);
        let v = m.decision_value_standardized([-1.0, -1.0]);
        assert!((v + 0.60).abs() < 1e-12);
        assert_eq!(DetectorModel::classify_value(v), Label::NoTumor);
        assert_eq!(DetectorModel::classify_value(4.53), Label::Tumor);
        assert_eq!(DetectorModel::classify_value(0.0), Label::NoTumor);
        // a point exactly on the boundary
        let on = FeatureVector {
            mu: 0.0,
            sigma: -4.53 / 4.80,
        };
        let edge = DetectorModel::new(Standardizer::IDENTITY, 0.0, 4.80, 4.53).unwrap();
        assert_eq!(
            edge.classify(&FeatureVector { sigma: on.sigma, ..on }),
            Label::from_bool(edge.decision_value(&on) > 0.0)
        );
        assert!(DetectorModel::new(Standardizer::IDENTITY, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn exact_zero_is_no_tumor() {
        let m = DetectorModel::new(Standardizer::IDENTITY, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(m.decision_value_standardized([0.5, -0.5]), 0.0);
        assert_eq!(m.classify(&FeatureVector { mu: 0.5, sigma: -0.5 }), Label::NoTumor);
    }

    #[test]
    fn json_round_trip() {
        let m = DetectorModel::new(
            Standardizer {
                means: [0.3, 0.01],
                stds: [0.02, 0.005],
            },
            0.1,
            2.0,
            -0.5,
        )
        .unwrap();
        let back = DetectorModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = m.to_json().unwrap().replace("> 0", "< 0");
        assert!(DetectorModel::from_json(&bad).is_err());
    }
}
