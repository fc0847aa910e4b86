use crate::config::MembraneParams;
use crate::deformation::DeformationMap;
use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::image::{hsv_to_rgb_real, quantize, Hsv, HsvImage, RgbImage};
use crate::noise::{self, Stream};
use crate::par;

/// Color response of the photonic membrane.
///
/// A reading is `baseline + gain * depth` in HSV, converted to RGB, scaled by
/// a fixed glare speckle pattern and perturbed by per-capture sensor noise.
#[derive(Debug, Clone)]
pub struct MembraneModel {
    geometry: SensorGeometry,
    baseline: HsvImage,
    speckle: Vec<f64>,
    pub gain_hue: f64,
    pub gain_saturation: f64,
    pub gain_value: f64,
    pub sensor_noise_std: f64,
    pub speckle_amplitude: f64,
    pub membrane_stiffness: f64,
    pub d_max_mm: f64,
}

/// Smooth field in `[-1, 1]` built from three long-wavelength cosines.
fn smooth_field(seed: u64, channel: u64, geom: &SensorGeometry) -> Vec<f64> {
    let param = |k: u64| noise::uniform(seed, Stream::Baseline as u64, channel * 64 + k);
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|w| {
            let wavelength = 6.0 + 8.0 * param(3 * w);
            let angle = std::f64::consts::TAU * param(3 * w + 1);
            let phase = std::f64::consts::TAU * param(3 * w + 2);
            let k = std::f64::consts::TAU / wavelength;
            (k * angle.cos(), k * angle.sin(), phase)
        })
        .collect();
    par::map_range(geom.len(), |i| {
        let (x, y) = geom.index_mm(i);
        waves
            .iter()
            .map(|&(kx, ky, ph)| (kx * x + ky * y + ph).cos())
            .sum::<f64>()
            / 3.0
    })
}

impl MembraneModel {
    pub fn new(params: &MembraneParams, geom: &SensorGeometry) -> Result<Self> {
        geom.validate()?;
        if !(params.membrane_stiffness > 0.0 && params.d_max_mm > 0.0) {
            return Err(Error::InvalidArgument(
                "membrane stiffness and maximum depth must be positive".into(),
            ));
        }
        if params.sensor_noise_std < 0.0 || params.speckle_amplitude < 0.0 {
            return Err(Error::InvalidArgument("noise amplitudes must be non-negative".into()));
        }
        let seed = params.pattern_seed;
        let fh = smooth_field(seed, 0, geom);
        let fs = smooth_field(seed, 1, geom);
        let fv = smooth_field(seed, 2, geom);
        let pixels = (0..geom.len())
            .map(|i| {
                Hsv::new(
                    params.base_hue_deg + params.hue_variation_deg * fh[i],
                    params.base_saturation + params.saturation_variation * fs[i],
                    params.base_value + params.value_variation * fv[i],
                )
                .clamped()
            })
            .collect();
        let speckle = par::map_range(geom.len(), |i| noise::gaussian(seed, Stream::Speckle as u64, i as u64));
        let model = Self {
            geometry: *geom,
            baseline: HsvImage::new(geom.width, geom.height, pixels)?,
            speckle,
            gain_hue: params.gain_hue_deg_per_mm,
            gain_saturation: params.gain_saturation_per_mm,
            gain_value: params.gain_value_per_mm,
            sensor_noise_std: params.sensor_noise_std,
            speckle_amplitude: params.speckle_amplitude,
            membrane_stiffness: params.membrane_stiffness,
            d_max_mm: params.d_max_mm,
        };
        model.check_gain_range()?;
        Ok(model)
    }

    /// Saturation and value must stay inside `[0, 1]` up to `d_max`.
    fn check_gain_range(&self) -> Result<()> {
        for p in self.baseline.pixels() {
            let s = p.s + self.gain_saturation * self.d_max_mm;
            let v = p.v + self.gain_value * self.d_max_mm;
            if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "gains drive color out of range at d_max (s={s:.3}, v={v:.3})"
                )));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> &SensorGeometry {
        &self.geometry
    }

    pub fn baseline(&self) -> &HsvImage {
        &self.baseline
    }

    pub fn without_noise(&self) -> Self {
        Self {
            sensor_noise_std: 0.0,
            speckle_amplitude: 0.0,
            ..self.clone()
        }
    }

    pub fn with_noise_std(&self, std: f64) -> Self {
        Self {
            sensor_noise_std: std,
            ..self.clone()
        }
    }

    #[inline]
    fn color_at(&self, i: usize, depth: f64) -> Hsv {
        let b = self.baseline.pixels()[i];
        Hsv::new(
            b.h + self.gain_hue * depth,
            b.s + self.gain_saturation * depth,
            b.v + self.gain_value * depth,
        )
        .clamped()
    }
}

fn check_dims(dmap: &DeformationMap, model: &MembraneModel) -> Result<()> {
    if dmap.dims() != model.baseline.dims() {
        return Err(Error::dims(dmap.dims(), model.baseline.dims()));
    }
    Ok(())
}

/// Noise-free membrane color for a deformation.
pub fn render_hsv(dmap: &DeformationMap, model: &MembraneModel) -> Result<HsvImage> {
    check_dims(dmap, model)?;
    let depths = dmap.depths();
    let pixels = par::map_range(depths.len(), |i| model.color_at(i, f64::from(depths[i])));
    HsvImage::new(dmap.width(), dmap.height(), pixels)
}

/// Camera reading of the membrane under `dmap`. Noise is a pure function of
/// `seed` and the pixel index.
pub fn render_reading(dmap: &DeformationMap, model: &MembraneModel, seed: u64) -> Result<RgbImage> {
    check_dims(dmap, model)?;
    let depths = dmap.depths();
    let pixels = par::map_range(depths.len(), |i| {
        let rgb = hsv_to_rgb_real(model.color_at(i, f64::from(depths[i])));
        let speckle = 1.0 + model.speckle_amplitude * model.speckle[i];
        let mut out = [0u8; 3];
        for c in 0..3 {
            let n = noise::gaussian(seed, Stream::SensorNoise as u64, (3 * i + c) as u64);
            out[c] = quantize(rgb[c] * speckle + model.sensor_noise_std * n);
        }
        out
    });
    RgbImage::new(dmap.width(), dmap.height(), pixels)
}
