//! Forward simulator standing in for the sensor hardware.
//!
//! The sensor face is a rigid flat punch pressed into a phantom modeled as a
//! Winkler foundation whose modulus is raised above an embedded tumor. The
//! resulting contact pressure indents the membrane, which the renderer turns
//! into a camera reading.

mod dataset;
mod membrane;

use serde::{Deserialize, Serialize};

pub use dataset::{
    generate_phantom_dataset, load_dataset_dir, write_dataset_dir, DatasetHeader, DatasetSpec, ManifestRow,
    PhantomSample, PlanSpec, RandomPressSpec, SamplePlan,
};
pub use membrane::{render_hsv, render_reading, MembraneModel};

use crate::config::TissueParams;
use crate::deformation::DeformationMap;
use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::{grams_to_newtons, par};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomConfig {
    pub tumor_present: bool,
    /// Diameter of the embedded ball, mm.
    pub ball_diameter_mm: f64,
    /// Depth of the ball below the phantom surface, mm.
    pub burial_depth_mm: f64,
    /// Tumor center relative to the sensor axis, mm.
    #[serde(default)]
    pub lateral_offset_mm: [f64; 2],
    /// Foundation modulus of healthy tissue, N/mm^3.
    pub tissue_stiffness: f64,
    /// Extra modulus above the tumor, N/mm^3.
    pub tumor_stiffness_boost: f64,
    /// Attenuation length with burial depth, mm.
    #[serde(default = "default_depth_decay")]
    pub depth_decay_mm: f64,
    pub applied_mass_g: f64,
}

fn default_depth_decay() -> f64 {
    3.0
}

impl PhantomConfig {
    pub fn tumor(tissue: &TissueParams, diameter_mm: f64, burial_mm: f64, mass_g: f64) -> Self {
        Self {
            tumor_present: true,
            ball_diameter_mm: diameter_mm,
            burial_depth_mm: burial_mm,
            lateral_offset_mm: [0.0, 0.0],
            tissue_stiffness: tissue.tissue_stiffness,
            tumor_stiffness_boost: tissue.tumor_stiffness_boost,
            depth_decay_mm: tissue.depth_decay_mm,
            applied_mass_g: mass_g,
        }
    }

    pub fn healthy(tissue: &TissueParams, mass_g: f64) -> Self {
        Self {
            tumor_present: false,
            ball_diameter_mm: 0.0,
            burial_depth_mm: 0.0,
            ..Self::tumor(tissue, 0.0, 0.0, mass_g)
        }
    }

    pub fn without_tumor(&self) -> Self {
        Self {
            tumor_present: false,
            ..self.clone()
        }
    }

    pub fn force_n(&self) -> f64 {
        grams_to_newtons(self.applied_mass_g)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.applied_mass_g) {
            return Err(Error::InvalidArgument("applied mass must be positive".into()));
        }
        if !positive(self.tissue_stiffness) || !positive(self.depth_decay_mm) {
            return Err(Error::InvalidArgument(
                "tissue stiffness and decay length must be positive".into(),
            ));
        }
        if self.tumor_present {
            if !positive(self.tumor_stiffness_boost) {
                return Err(Error::InvalidArgument("tumor stiffness boost must be positive".into()));
            }
            if !(2.0..=10.0).contains(&self.ball_diameter_mm) {
                return Err(Error::InvalidArgument(format!(
                    "ball diameter {} mm outside [2, 10]",
                    self.ball_diameter_mm
                )));
            }
            if !(1.0..=7.0).contains(&self.burial_depth_mm) {
                return Err(Error::InvalidArgument(format!(
                    "burial depth {} mm outside [1, 7]",
                    self.burial_depth_mm
                )));
            }
        }
        Ok(())
    }
}

/// Foundation modulus at every pixel, N/mm^3, row-major.
///
/// `k = k_t + boost * exp(-r^2 / (2 s^2)) * exp(-burial / decay)` with
/// `s = d / (2 sqrt 2)` and `r` the lateral distance to the tumor center.
pub fn stiffness_field(cfg: &PhantomConfig, geom: &SensorGeometry) -> Vec<f64> {
    if !cfg.tumor_present {
        return vec![cfg.tissue_stiffness; geom.len()];
    }
    let s = cfg.ball_diameter_mm / (2.0 * std::f64::consts::SQRT_2);
    let amplitude = cfg.tumor_stiffness_boost * (-cfg.burial_depth_mm / cfg.depth_decay_mm).exp();
    let [ox, oy] = cfg.lateral_offset_mm;
    par::map_range(geom.len(), |i| {
        let (x, y) = geom.index_mm(i);
        let r2 = (x - ox).powi(2) + (y - oy).powi(2);
        cfg.tissue_stiffness + amplitude * (-r2 / (2.0 * s * s)).exp()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSolution {
    /// Contact pressure, N/mm^2; zero outside the sensing disc.
    pub pressure: Vec<f64>,
    /// Uniform indentation of the foundation by the sensor face, mm.
    pub rigid_displacement_mm: f64,
    pub deformation: DeformationMap,
}

impl ContactSolution {
    /// Pixel-center quadrature of the pressure over the sensing disc, N.
    pub fn total_force(&self, geom: &SensorGeometry) -> f64 {
        self.pressure.iter().sum::<f64>() * geom.pixel_area_mm2()
    }
}

/// Rigid flat punch on a Winkler foundation.
pub fn contact_solve(cfg: &PhantomConfig, geom: &SensorGeometry, model: &MembraneModel) -> Result<ContactSolution> {
    cfg.validate()?;
    if model.geometry().dims() != geom.dims() {
        return Err(Error::dims(model.geometry().dims(), geom.dims()));
    }
    let mask = geom.mask();
    let k = stiffness_field(cfg, geom);
    let integral: f64 = k.iter().zip(&mask).filter_map(|(&k, &m)| m.then_some(k)).sum::<f64>() * geom.pixel_area_mm2();
    if !(integral.is_finite() && integral > 0.0) {
        return Err(Error::DegenerateFoundation(integral));
    }
    let delta0 = cfg.force_n() / integral;
    if !delta0.is_finite() {
        return Err(Error::DegenerateFoundation(integral));
    }
    let pressure: Vec<f64> = k
        .iter()
        .zip(&mask)
        .map(|(&k, &m)| if m { k * delta0 } else { 0.0 })
        .collect();
    let km = model.membrane_stiffness;
    let d_max = model.d_max_mm;
    let depths = pressure.iter().map(|&p| (p / km).clamp(0.0, d_max) as f32).collect();
    Ok(ContactSolution {
        pressure,
        rigid_displacement_mm: delta0,
        deformation: DeformationMap::new(geom.width, geom.height, depths, mask)?,
    })
}

/// Spherical-cap indentation of a rigid sphere pressed `press_depth_mm` into
/// the membrane at the sensor center.
pub fn sphere_press_truth(press_depth_mm: f64, sphere_radius_mm: f64, geom: &SensorGeometry) -> Result<DeformationMap> {
    sphere_press_truth_at(press_depth_mm, sphere_radius_mm, [0.0, 0.0], geom)
}

/// [`sphere_press_truth`] with the press centered at `center_mm`.
pub fn sphere_press_truth_at(
    press_depth_mm: f64,
    sphere_radius_mm: f64,
    center_mm: [f64; 2],
    geom: &SensorGeometry,
) -> Result<DeformationMap> {
    let depths = sphere_cap_depths(press_depth_mm, sphere_radius_mm, center_mm, geom)?
        .into_iter()
        .map(|d| d as f32)
        .collect();
    DeformationMap::from_geometry(geom, depths)
}

pub(crate) fn sphere_cap_depths(
    delta: f64,
    radius: f64,
    [cx, cy]: [f64; 2],
    geom: &SensorGeometry,
) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta <= radius) {
        return Err(Error::InvalidArgument(format!(
            "press depth {delta} mm must lie in (0, {radius}]"
        )));
    }
    Ok((0..geom.len())
        .map(|i| {
            let (x, y) = geom.index_mm(i);
            cap_depth(delta, radius, (x - cx).hypot(y - cy))
        })
        .collect())
}

/// Depth of a spherical cap of height `delta` at lateral distance `r`.
#[inline]
pub fn cap_depth(delta: f64, radius: f64, r: f64) -> f64 {
    if r >= radius {
        return 0.0;
    }
    (delta - radius + (radius * radius - r * r).sqrt()).max(0.0)
}
