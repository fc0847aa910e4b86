use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Camera grid and the circular sensing region on it.
///
/// Pixel `(col, row)` sits at `((col - cx) * scale, (row - cy) * scale)` mm
/// from the optical axis, with `cx = (width - 1) / 2` and `cy = (height - 1) / 2`,
/// so the grid is symmetric under a 180 degree rotation about the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub width: usize,
    pub height: usize,
    /// Radius of the sensing disc, mm.
    pub sense_radius_mm: f64,
    /// Edge length of one pixel on the membrane, mm.
    pub mm_per_px: f64,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            sense_radius_mm: 3.5,
            mm_per_px: 0.05,
        }
    }
}

impl SensorGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("geometry must be non-empty".into()));
        }
        if !(self.sense_radius_mm > 0.0) || !(self.mm_per_px > 0.0) {
            return Err(Error::InvalidArgument(
                "sensing radius and pixel scale must be positive".into(),
            ));
        }
        let radius_px = self.sense_radius_mm / self.mm_per_px;
        if 2.0 * radius_px > self.width.min(self.height) as f64 {
            return Err(Error::InvalidArgument(format!(
                "sensing disc of {radius_px} px radius does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center_px(&self) -> (f64, f64) {
        ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0)
    }

    /// Membrane coordinates of a pixel center, mm.
    #[inline]
    pub fn pixel_mm(&self, col: usize, row: usize) -> (f64, f64) {
        let (cx, cy) = self.center_px();
        ((col as f64 - cx) * self.mm_per_px, (row as f64 - cy) * self.mm_per_px)
    }

    /// Membrane coordinates of the pixel with linear index `i`.
    #[inline]
    pub fn index_mm(&self, i: usize) -> (f64, f64) {
        self.pixel_mm(i % self.width, i / self.width)
    }

    #[inline]
    pub fn in_disc(&self, col: usize, row: usize) -> bool {
        let (x, y) = self.pixel_mm(col, row);
        x * x + y * y <= self.sense_radius_mm * self.sense_radius_mm
    }

    /// Row-major sensing-disc mask.
    pub fn mask(&self) -> Vec<bool> {
        (0..self.len())
            .map(|i| self.in_disc(i % self.width, i / self.width))
            .collect()
    }

    pub fn disc_pixel_count(&self) -> usize {
        self.mask().iter().filter(|&&m| m).count()
    }

    pub fn pixel_area_mm2(&self) -> f64 {
        self.mm_per_px * self.mm_per_px
    }

    /// Sensing area by pixel-center quadrature, mm^2.
    pub fn disc_area_mm2(&self) -> f64 {
        self.disc_pixel_count() as f64 * self.pixel_area_mm2()
    }

    /// Normalized coordinates `(u, v)` in `[0, 1]` used as calibration features.
    #[inline]
    pub fn normalized(&self, col: usize, row: usize) -> (f64, f64) {
        let u = if self.width > 1 {
            col as f64 / (self.width - 1) as f64
        } else {
            0.0
        };
        let v = if self.height > 1 {
            row as f64 / (self.height - 1) as f64
        } else {
            0.0
        };
        (u, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_disc_is_valid_and_symmetric() {
        let g = SensorGeometry::default();
        g.validate().unwrap();
        let mask = g.mask();
        let n = g.len();
        for i in 0..n {
            assert_eq!(mask[i], mask[n - 1 - i]);
        }
        let count = g.disc_pixel_count();
        let expected = std::f64::consts::PI * 70.0 * 70.0;
        assert!((count as f64 - expected).abs() / expected < 0.01, "{count}");
    }

    #[test]
    fn rejects_disc_that_does_not_fit() {
        let g = SensorGeometry {
            sense_radius_mm: 7.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
        let g = SensorGeometry {
            mm_per_px: 0.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn normalized_corners() {
        let g = SensorGeometry::default();
        assert_eq!(g.normalized(0, 0), (0.0, 0.0));
        assert_eq!(g.normalized(319, 239), (1.0, 1.0));
    }
}
