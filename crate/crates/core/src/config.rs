//! Simulator constants, loadable from a single JSON document.
//!
//! `configs/reference_sim.json` at the repository root holds the reference
//! values; [`SimConfig::default`] returns the same numbers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::SensorGeometry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembraneParams {
    /// Seed of the fixed per-membrane patterns (baseline color, glare speckle).
    pub pattern_seed: u64,
    pub base_hue_deg: f64,
    pub base_saturation: f64,
    pub base_value: f64,
    /// Peak amplitudes of the smooth baseline nonuniformity.
    pub hue_variation_deg: f64,
    pub saturation_variation: f64,
    pub value_variation: f64,
    /// Color response per mm of indentation.
    pub gain_hue_deg_per_mm: f64,
    pub gain_saturation_per_mm: f64,
    pub gain_value_per_mm: f64,
    /// Additive Gaussian noise std, 8-bit channel units.
    pub sensor_noise_std: f64,
    /// Relative amplitude of the multiplicative glare speckle.
    pub speckle_amplitude: f64,
    /// Membrane foundation modulus, N/mm^3.
    pub membrane_stiffness: f64,
    /// Largest representable indentation, mm.
    pub d_max_mm: f64,
}

impl Default for MembraneParams {
    fn default() -> Self {
        Self {
            pattern_seed: 0x7ac7_11e5,
            base_hue_deg: 2.0,
            base_saturation: 0.82,
            base_value: 0.78,
            hue_variation_deg: 4.0,
            saturation_variation: 0.05,
            value_variation: 0.06,
            gain_hue_deg_per_mm: 60.0,
            gain_saturation_per_mm: -0.30,
            gain_value_per_mm: 0.20,
            sensor_noise_std: 0.38,
            speckle_amplitude: 0.02,
            membrane_stiffness: 0.85,
            d_max_mm: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TissueParams {
    /// Healthy tissue foundation modulus k_t, N/mm^3.
    pub tissue_stiffness: f64,
    /// Extra modulus directly above a tumor, k_b - k_t, N/mm^3.
    pub tumor_stiffness_boost: f64,
    /// Attenuation length of the tumor signature with burial depth, mm.
    pub depth_decay_mm: f64,
}

impl Default for TissueParams {
    fn default() -> Self {
        Self {
            tissue_stiffness: 0.02,
            tumor_stiffness_boost: 0.06,
            depth_decay_mm: 3.0,
        }
    }
}

/// Indenter tip profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tip {
    /// Flat-ended cylinder of the given radius.
    Flat,
    /// Sphere of the given radius.
    Sphere,
}

/// Rigid indenter pressed directly onto the membrane (bench tests).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndenterParams {
    pub tip: Tip,
    pub radius_mm: f64,
    /// Membrane modulus seen by a local indenter, N/mm^3.
    pub contact_stiffness: f64,
    /// Peak depth deficit of the unloading branch, mm (viscoelastic lag).
    pub unloading_lag_mm: f64,
}

impl Default for IndenterParams {
    fn default() -> Self {
        Self {
            tip: Tip::Flat,
            radius_mm: 0.345,
            contact_stiffness: 0.5924,
            unloading_lag_mm: 0.19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizationParams {
    /// Force grid step of the sensitivity sweep, N.
    pub sensitivity_step_n: f64,
    /// Last force of the sensitivity sweep, N.
    pub sensitivity_max_n: f64,
    /// Number of grid points in the hysteresis sweeps.
    pub hysteresis_points: usize,
    /// Last force of the hysteresis sweeps, N.
    pub hysteresis_max_n: f64,
    /// Repeated trials for repeatability and hysteresis.
    pub trials: usize,
    /// Ground-truth depth steps for repeatability, up to d_M.
    pub repeatability_steps: usize,
    /// Null readings used to estimate the noise floor.
    pub null_readings: usize,
}

impl Default for CharacterizationParams {
    fn default() -> Self {
        Self {
            sensitivity_step_n: 0.0006,
            sensitivity_max_n: 0.13,
            hysteresis_points: 23,
            hysteresis_max_n: 0.11,
            trials: 5,
            repeatability_steps: 10,
            null_readings: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub geometry: SensorGeometry,
    pub membrane: MembraneParams,
    pub tissue: TissueParams,
    pub indenter: IndenterParams,
    pub characterization: CharacterizationParams,
}

impl SimConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
