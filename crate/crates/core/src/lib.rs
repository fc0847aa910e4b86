//! Software stack for a photonic-membrane vision-based tactile sensor.
//!
//! The crate simulates the sensor and a tissue phantom, computes tactile
//! imprints, learns a per-pixel color-to-depth calibration, measures sensor
//! characteristics and trains a linear tumor detector on deformation
//! statistics.
//!
//! Per-pixel and per-sample work runs on rayon when the `parallel` feature is
//! enabled (the default). Results never depend on the number of threads.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod characterization;
pub mod config;
pub mod deformation;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod image;
pub mod imprint;
pub mod noise;
pub mod par;
pub mod phantom;
pub mod ppm;

pub use calibration::{CalibrationModel, TrainConfig};
pub use config::SimConfig;
pub use deformation::DeformationMap;
pub use detection::{DetectorModel, FeatureVector};
pub use error::{Error, Result};
pub use geometry::SensorGeometry;
pub use image::{HsvImage, RgbImage};
pub use imprint::{ColorDeltaField, ImprintParams};
pub use phantom::{MembraneModel, PhantomConfig};

/// Standard gravity, used to convert grams-force to newtons.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Converts a mass in grams to the weight force in newtons.
pub fn grams_to_newtons(grams: f64) -> f64 {
    grams * STANDARD_GRAVITY / 1000.0
}
