//! Deformation maps and the DMAP container.
//!
//! DMAP layout, all integers little-endian:
//!
//! ```text
//! "DMAP" | version u8 = 1 | width u32 | height u32 | depths f32 * (w*h) | mask u8 * (w*h)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;

pub const DMAP_MAGIC: &[u8; 4] = b"DMAP";
pub const DMAP_VERSION: u8 = 1;
const DMAP_HEADER_LEN: usize = 4 + 1 + 4 + 4;

/// Membrane indentation depths in mm plus the sensing-disc mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationMap {
    width: usize,
    height: usize,
    depths: Vec<f32>,
    mask: Vec<bool>,
}

impl DeformationMap {
    pub fn new(width: usize, height: usize, depths: Vec<f32>, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("map must be non-empty".into()));
        }
        let n = width * height;
        if depths.len() != n || mask.len() != n {
            return Err(Error::SizeMismatch(format!(
                "{width}x{height} map with {} depths and {} mask entries",
                depths.len(),
                mask.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depths,
            mask,
        })
    }

    /// Builds a map on `geom`, zeroing depths outside the sensing disc.
    pub fn from_geometry(geom: &SensorGeometry, mut depths: Vec<f32>) -> Result<Self> {
        let mask = geom.mask();
        if depths.len() != mask.len() {
            return Err(Error::SizeMismatch(format!(
                "geometry has {} pixels, got {} depths",
                mask.len(),
                depths.len()
            )));
        }
        for (d, &m) in depths.iter_mut().zip(&mask) {
            if !m {
                *d = 0.0;
            }
        }
        Self::new(geom.width, geom.height, depths, mask)
    }

    pub fn zeros(geom: &SensorGeometry) -> Self {
        Self {
            width: geom.width,
            height: geom.height,
            depths: vec![0.0; geom.len()],
            mask: geom.mask(),
        }
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

    pub fn depths(&self) -> &[f32] {
        &self.depths
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.depths[row * self.width + col]
    }

    /// Depths of the pixels inside the mask, in row-major order.
    pub fn masked_depths(&self) -> impl Iterator<Item = f32> + '_ {
        self.depths.iter().zip(&self.mask).filter_map(|(&d, &m)| m.then_some(d))
    }

    /// Column and row of the deepest masked pixel (first one on ties).
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, f32)> = None;
        for (i, (&d, &m)) in self.depths.iter().zip(&self.mask).enumerate() {
            if m && best.is_none_or(|(_, b)| d > b) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| (i % self.width, i / self.width))
    }

    pub fn max_depth(&self) -> Option<f32> {
        self.masked_depths().reduce(f32::max)
    }

    pub fn mirror_horizontal(&self) -> Self {
        let mut out = self.clone();
        for row in 0..self.height {
            let r = row * self.width..(row + 1) * self.width;
            out.depths[r.clone()].reverse();
            out.mask[r].reverse();
        }
        out
    }

    /// Checks `0 <= depth` everywhere and `depth <= d_max` inside the mask.
    pub fn validate(&self, d_max: f64) -> Result<()> {
        for (i, (&d, &m)) in self.depths.iter().zip(&self.mask).enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidMap(format!("pixel {i} has depth {d}")));
            }
            if m && f64::from(d) > d_max {
                return Err(Error::InvalidMap(format!(
                    "pixel {i} depth {d} exceeds maximum {d_max}"
                )));
            }
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate), and also requires the mask to be the
    /// sensing disc of `geom`.
    pub fn validate_on(&self, geom: &SensorGeometry, d_max: f64) -> Result<()> {
        if self.dims() != geom.dims() {
            return Err(Error::dims(self.dims(), geom.dims()));
        }
        if self.mask != geom.mask() {
            return Err(Error::InvalidMap("mask is not the sensing disc".into()));
        }
        self.validate(d_max)
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.depths.len();
        let mut out = Vec::with_capacity(DMAP_HEADER_LEN + 5 * n);
        out.extend_from_slice(DMAP_MAGIC);
        out.push(DMAP_VERSION);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for d in &self.depths {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend(self.mask.iter().map(|&m| u8::from(m)));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != DMAP_MAGIC {
            return Err(Error::BadMagic);
        }
        let version = *bytes
            .get(4)
            .ok_or_else(|| Error::SizeMismatch("missing version".into()))?;
        if version != DMAP_VERSION {
            return Err(Error::VersionMismatch(version));
        }
        let header = bytes
            .get(5..DMAP_HEADER_LEN)
            .ok_or_else(|| Error::SizeMismatch("truncated header".into()))?;
        let width = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(header[4..].try_into().unwrap()) as usize;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::SizeMismatch("dimensions overflow".into()))?;
        let depth_end = DMAP_HEADER_LEN + 4 * n;
        let depth_bytes = bytes.get(DMAP_HEADER_LEN..depth_end).ok_or(Error::TruncatedDepths)?;
        let mask_bytes = bytes.get(depth_end..depth_end + n).ok_or(Error::TruncatedMask)?;
        if bytes.len() != depth_end + n {
            return Err(Error::SizeMismatch(format!(
                "{} trailing bytes",
                bytes.len() - depth_end - n
            )));
        }
        let depths = depth_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mask = mask_bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidMap(format!("mask byte {other}"))),
            })
            .collect::<Result<_>>()?;
        Self::new(width, height, depths, mask)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}
