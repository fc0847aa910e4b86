//! Pixel grids and RGB/HSV conversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// 8-bit RGB image, row-major, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    /// Flat `R,G,B,R,G,B,...` view of the pixel data.
    pub fn as_bytes(&self) -> &[u8] {
        self.pixels.as_flattened()
    }

    pub fn get(&self, col: usize, row: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, rgb: [u8; 3]) {
        self.pixels[row * self.width + col] = rgb;
    }

    pub fn mirror_horizontal(&self) -> Self {
        let mut out = self.clone();
        for row in 0..self.height {
            out.pixels[row * self.width..(row + 1) * self.width].reverse();
        }
        out
    }

    pub(crate) fn ensure_same_dims(&self, other: &RgbImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// One HSV sample: hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl Hsv {
    pub const fn new(h: f64, s: f64, v: f64) -> Self {
        Self { h, s, v }
    }

    /// Wraps hue into `[0, 360)` and clamps saturation and value to `[0, 1]`.
    pub fn clamped(self) -> Self {
        let mut h = self.h.rem_euclid(360.0);
        if h >= 360.0 {
            h = 0.0;
        }
        Self {
            h,
            s: self.s.clamp(0.0, 1.0),
            v: self.v.clamp(0.0, 1.0),
        }
    }

    fn in_range(&self) -> bool {
        (0.0..360.0).contains(&self.h) && (0.0..=1.0).contains(&self.s) && (0.0..=1.0).contains(&self.v)
    }
}

/// Real-valued HSV image.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    width: usize,
    height: usize,
    pixels: Vec<Hsv>,
}

impl HsvImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Hsv>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "{width}x{height} HSV image with {} pixels",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !p.in_range()) {
            return Err(Error::InvalidArgument(format!(
                "HSV pixel {i} out of range: {:?}",
                pixels[i]
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Hsv] {
        &self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> Hsv {
        self.pixels[row * self.width + col]
    }
}

/// Rounds half up and saturates to the 8-bit range.
#[inline]
pub fn quantize(x: f64) -> u8 {
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Hexcone RGB to HSV. Achromatic pixels get hue 0.
pub fn rgb_to_hsv_pixel(rgb: [u8; 3]) -> Hsv {
    let r = f64::from(rgb[0]) / 255.0;
    let g = f64::from(rgb[1]) / 255.0;
    let b = f64::from(rgb[2]) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        let h = 60.0 * ((g - b) / delta);
        if h < 0.0 {
            h + 360.0
        } else {
            h
        }
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h >= 360.0 { h - 360.0 } else { h };
    Hsv { h, s, v: max }
}

/// HSV to real-valued RGB on the 0..=255 scale, before quantization.
pub fn hsv_to_rgb_real(p: Hsv) -> [f64; 3] {
    let c = p.v * p.s;
    let hp = p.h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = p.v - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

pub fn hsv_to_rgb_pixel(p: Hsv) -> [u8; 3] {
    hsv_to_rgb_real(p).map(quantize)
}

pub fn rgb_to_hsv(img: &RgbImage) -> HsvImage {
    let pixels = par::map_slice(img.pixels(), |&p| rgb_to_hsv_pixel(p));
    HsvImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

pub fn hsv_to_rgb(img: &HsvImage) -> RgbImage {
    let pixels = par::map_slice(img.pixels(), |&p| hsv_to_rgb_pixel(p));
    RgbImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Minimal signed hue difference `after - before` in `(-180, 180]`.
/// Antipodal hues give `+180`.
pub fn hue_delta(h_after: f64, h_before: f64) -> f64 {
    let d = (h_after - h_before).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}
