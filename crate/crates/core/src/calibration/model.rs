//! Calibration model container and its JSON file format.
//!
//! Weights are stored as base64 of little-endian `f32` arrays so that a
//! save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Mlp};
use super::{TrainConfig, FEATURES, LAYER_SIZES};
use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;

pub const MODEL_FORMAT: &str = "photac-calibration";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub config: TrainConfig,
    pub rows: usize,
    /// Mean training loss of every epoch, mm^2.
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationModel {
    mlp: Mlp<f32>,
    input_shift: [f32; FEATURES],
    input_scale: [f32; FEATURES],
    geometry: SensorGeometry,
    d_max_mm: f64,
    training: TrainingSummary,
}

impl CalibrationModel {
    pub fn from_parts(
        mlp: Mlp<f32>,
        input_shift: [f32; FEATURES],
        input_scale: [f32; FEATURES],
        geometry: SensorGeometry,
        d_max_mm: f64,
        training: TrainingSummary,
    ) -> Result<Self> {
        if mlp.sizes() != LAYER_SIZES {
            return Err(Error::InvalidModel(format!(
                "layer sizes {:?}, expected {LAYER_SIZES:?}",
                mlp.sizes()
            )));
        }
        if !mlp.is_finite() {
            return Err(Error::InvalidModel("non-finite weights".into()));
        }
        if input_scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) || input_shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidModel("invalid input normalization".into()));
        }
        Ok(Self {
            mlp,
            input_shift,
            input_scale,
            geometry,
            d_max_mm,
            training,
        })
    }

    pub fn mlp(&self) -> &Mlp<f32> {
        &self.mlp
    }

    pub fn geometry(&self) -> &SensorGeometry {
        &self.geometry
    }

    pub fn d_max_mm(&self) -> f64 {
        self.d_max_mm
    }

    pub fn training(&self) -> &TrainingSummary {
        &self.training
    }

    pub fn input_shift(&self) -> [f32; FEATURES] {
        self.input_shift
    }

    pub fn input_scale(&self) -> [f32; FEATURES] {
        self.input_scale
    }

    #[inline]
    pub fn standardize(&self, features: &[f32; FEATURES]) -> [f32; FEATURES] {
        std::array::from_fn(|j| (features[j] - self.input_shift[j]) / self.input_scale[j])
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            layer_sizes: self.mlp.sizes(),
            activation: "tanh".into(),
            input_shift: self.input_shift.to_vec(),
            input_scale: self.input_scale.to_vec(),
            geometry: self.geometry,
            d_max_mm: self.d_max_mm,
            layers: self
                .mlp
                .layers
                .iter()
                .map(|l| LayerBlob {
                    weights: encode_f32(l.weights.iter().copied()),
                    bias: encode_f32(l.bias.iter().copied()),
                })
                .collect(),
            training: self.training.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::InvalidModel(format!("unknown format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::InvalidModel(format!("unsupported version {}", file.version)));
        }
        if file.activation != "tanh" || file.layer_sizes != LAYER_SIZES {
            return Err(Error::InvalidModel("unexpected architecture".into()));
        }
        if file.layers.len() != LAYER_SIZES.len() - 1 {
            return Err(Error::InvalidModel("wrong number of layers".into()));
        }
        let layers = file
            .layers
            .iter()
            .zip(LAYER_SIZES.windows(2))
            .map(|(blob, io)| {
                let w = decode_f32(&blob.weights, io[0] * io[1])?;
                let b = decode_f32(&blob.bias, io[1])?;
                Ok(Dense {
                    weights: Array2::from_shape_vec((io[0], io[1]), w)
                        .map_err(|e| Error::InvalidModel(e.to_string()))?,
                    bias: Array1::from(b),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let shift: [f32; FEATURES] = file
            .input_shift
            .try_into()
            .map_err(|_| Error::InvalidModel("input_shift needs 5 entries".into()))?;
        let scale: [f32; FEATURES] = file
            .input_scale
            .try_into()
            .map_err(|_| Error::InvalidModel("input_scale needs 5 entries".into()))?;
        Self::from_parts(
            Mlp { layers },
            shift,
            scale,
            file.geometry,
            file.d_max_mm,
            file.training,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    activation: String,
    input_shift: Vec<f32>,
    input_scale: Vec<f32>,
    geometry: SensorGeometry,
    d_max_mm: f64,
    layers: Vec<LayerBlob>,
    training: TrainingSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerBlob {
    weights: String,
    bias: String,
}

fn encode_f32(values: impl Iterator<Item = f32>) -> String {
    let bytes: Vec<u8> = values.flat_map(f32::to_le_bytes).collect();
    B64.encode(bytes)
}

fn decode_f32(text: &str, expected: usize) -> Result<Vec<f32>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::InvalidModel(format!("bad weight blob: {e}")))?;
    if bytes.len() != 4 * expected {
        return Err(Error::InvalidModel(format!(
            "weight blob holds {} bytes, expected {}",
            bytes.len(),
            4 * expected
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
