//! Differencing of raw readings: the augmented tactile imprint and the
//! per-pixel HSV change used as calibration input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::image::{hue_delta, quantize, rgb_to_hsv_pixel, RgbImage};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprintParams {
    /// Amplification of the contact-minus-reference difference.
    pub alpha: f64,
    /// Offset that maps a zero difference to mid-gray.
    pub beta: f64,
}

impl Default for ImprintParams {
    fn default() -> Self {
        Self {
            alpha: 5.0,
            beta: 127.5,
        }
    }
}

impl ImprintParams {
    pub fn new(alpha: f64) -> Result<Self> {
        let p = Self {
            alpha,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// `clip(alpha * (contact - reference) + beta, 0, 255)` per channel, rounded half up.
pub fn augmented_imprint(reference: &RgbImage, contact: &RgbImage, params: &ImprintParams) -> Result<RgbImage> {
    reference.ensure_same_dims(contact)?;
    params.validate()?;
    let (a, b) = (params.alpha, params.beta);
    let pixels = par::map_range(reference.pixels().len(), |i| {
        let n = reference.pixels()[i];
        let w = contact.pixels()[i];
        std::array::from_fn(|c| {
            let diff = f64::from(w[c]) - f64::from(n[c]);
            quantize((a * diff + b).clamp(0.0, 255.0))
        })
    });
    RgbImage::new(reference.width(), reference.height(), pixels)
}

/// Per-pixel `(dH, dS, dV)` between a reference and a contact reading.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorDeltaField {
    width: usize,
    height: usize,
    deltas: Vec<[f64; 3]>,
}

impl ColorDeltaField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn deltas(&self) -> &[[f64; 3]] {
        &self.deltas
    }

    /// Normalized pixel coordinates `(col / (w - 1), row / (h - 1))`.
    pub fn coords(&self, i: usize) -> (f64, f64) {
        let geom = SensorGeometry {
            width: self.width,
            height: self.height,
            sense_radius_mm: 1.0,
            mm_per_px: 1.0,
        };
        geom.normalized(i % self.width, i / self.width)
    }

    /// Calibration input `(dH, dS, dV, u, v)` of pixel `i`.
    pub fn features(&self, i: usize) -> [f64; 5] {
        let [dh, ds, dv] = self.deltas[i];
        let (u, v) = self.coords(i);
        [dh, ds, dv, u, v]
    }
}

pub fn color_delta(reference: &RgbImage, contact: &RgbImage) -> Result<ColorDeltaField> {
    reference.ensure_same_dims(contact)?;
    let deltas = par::map_range(reference.pixels().len(), |i| {
        let n = rgb_to_hsv_pixel(reference.pixels()[i]);
        let w = rgb_to_hsv_pixel(contact.pixels()[i]);
        [hue_delta(w.h, n.h), w.s - n.s, w.v - n.v]
    });
    Ok(ColorDeltaField {
        width: reference.width(),
        height: reference.height(),
        deltas,
    })
}
