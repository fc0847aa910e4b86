//! Labeled phantom press datasets.
//!
//! On disk a dataset is a directory:
//!
//! ```text
//! dataset.json              spec, tissue constants and seed
//! manifest.csv              one row per sample
//! samples/NNNN_ref.ppm      reading before contact
//! samples/NNNN_contact.ppm  reading under load
//! samples/NNNN_truth.dmap   simulated membrane deformation
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{contact_solve, render_reading, MembraneModel, PhantomConfig};
use crate::config::TissueParams;
use crate::deformation::DeformationMap;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::noise::{self, derive_seed};
use crate::{par, ppm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub diameters_mm: Vec<f64>,
    pub burial_depths_mm: Vec<f64>,
    pub presses_per_tumor: usize,
    pub tumor_mass_g: f64,
    pub negative_masses_g: Vec<f64>,
    pub presses_per_negative_mass: usize,
    /// Tumor centers are drawn uniformly from a disc of this radius, mm.
    pub max_lateral_offset_mm: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            diameters_mm: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            burial_depths_mm: (1..=7).map(f64::from).collect(),
            presses_per_tumor: 4,
            tumor_mass_g: 1000.0,
            negative_masses_g: vec![1000.0, 1100.0, 1200.0, 1300.0],
            presses_per_negative_mass: 35,
            max_lateral_offset_mm: 0.0,
        }
    }
}

/// Everything needed to render one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub id: usize,
    pub phantom: PhantomConfig,
    pub seed: u64,
}

impl SamplePlan {
    pub fn label(&self) -> bool {
        self.phantom.tumor_present
    }

    fn reference_seed(&self) -> u64 {
        derive_seed(self.seed, 1, 0)
    }

    fn contact_seed(&self) -> u64 {
        derive_seed(self.seed, 2, 0)
    }

    pub fn render(&self, model: &MembraneModel) -> Result<PhantomSample> {
        let geom = model.geometry();
        let solution = contact_solve(&self.phantom, geom, model)?;
        let reference = render_reading(&DeformationMap::zeros(geom), model, self.reference_seed())?;
        let contact = render_reading(&solution.deformation, model, self.contact_seed())?;
        Ok(PhantomSample {
            plan: self.clone(),
            reference,
            contact,
            truth: solution.deformation,
        })
    }

    pub fn manifest_row(&self) -> ManifestRow {
        ManifestRow {
            sample_id: self.id,
            label: u8::from(self.label()),
            ball_diameter_mm: self.phantom.ball_diameter_mm,
            burial_depth_mm: self.phantom.burial_depth_mm,
            applied_mass_g: self.phantom.applied_mass_g,
            offset_x_mm: self.phantom.lateral_offset_mm[0],
            offset_y_mm: self.phantom.lateral_offset_mm[1],
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhantomSample {
    pub plan: SamplePlan,
    pub reference: RgbImage,
    pub contact: RgbImage,
    pub truth: DeformationMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub sample_id: usize,
    /// 1 = tumor, 0 = healthy.
    pub label: u8,
    pub ball_diameter_mm: f64,
    pub burial_depth_mm: f64,
    pub applied_mass_g: f64,
    pub offset_x_mm: f64,
    pub offset_y_mm: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.diameters_mm.is_empty() || self.burial_depths_mm.is_empty() {
            return Err(Error::InvalidArgument(
                "dataset needs tumor diameters and depths".into(),
            ));
        }
        if self.max_lateral_offset_mm < 0.0 {
            return Err(Error::InvalidArgument("lateral offset must be non-negative".into()));
        }
        Ok(())
    }

    pub fn positive_count(&self) -> usize {
        self.diameters_mm.len() * self.burial_depths_mm.len() * self.presses_per_tumor
    }

    pub fn negative_count(&self) -> usize {
        self.negative_masses_g.len() * self.presses_per_negative_mass
    }

    /// Positives first (diameter-major, then depth, then press), then negatives.
    pub fn plan(&self, tissue: &TissueParams, seed: u64) -> Result<Vec<SamplePlan>> {
        self.validate()?;
        let mut plans = Vec::with_capacity(self.positive_count() + self.negative_count());
        for &d in &self.diameters_mm {
            for &burial in &self.burial_depths_mm {
                for _ in 0..self.presses_per_tumor {
                    let id = plans.len();
                    let sample_seed = derive_seed(seed, 0, id as u64);
                    let mut phantom = PhantomConfig::tumor(tissue, d, burial, self.tumor_mass_g);
                    phantom.lateral_offset_mm = self.draw_offset(sample_seed);
                    phantom.validate()?;
                    plans.push(SamplePlan {
                        id,
                        phantom,
                        seed: sample_seed,
                    });
                }
            }
        }
        for &mass in &self.negative_masses_g {
            for _ in 0..self.presses_per_negative_mass {
                let id = plans.len();
                let phantom = PhantomConfig::healthy(tissue, mass);
                phantom.validate()?;
                plans.push(SamplePlan {
                    id,
                    phantom,
                    seed: derive_seed(seed, 0, id as u64),
                });
            }
        }
        Ok(plans)
    }

    fn draw_offset(&self, sample_seed: u64) -> [f64; 2] {
        if self.max_lateral_offset_mm == 0.0 {
            return [0.0, 0.0];
        }
        let r = self.max_lateral_offset_mm * noise::uniform(sample_seed, 10, 0).sqrt();
        let t = std::f64::consts::TAU * noise::uniform(sample_seed, 10, 1);
        [r * t.cos(), r * t.sin()]
    }
}

/// Randomized presses for out-of-distribution checks: each sample is a tumor
/// with probability 1/2, with diameter, burial depth, mass and lateral offset
/// drawn uniformly from the dataset ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomPressSpec {
    pub samples: usize,
    pub diameter_range_mm: [f64; 2],
    pub burial_range_mm: [f64; 2],
    pub mass_range_g: [f64; 2],
    pub max_lateral_offset_mm: f64,
}

impl Default for RandomPressSpec {
    fn default() -> Self {
        Self {
            samples: 50,
            diameter_range_mm: [2.0, 10.0],
            burial_range_mm: [1.0, 7.0],
            mass_range_g: [1000.0, 1300.0],
            max_lateral_offset_mm: 1.5,
        }
    }
}

impl RandomPressSpec {
    pub fn plan(&self, tissue: &TissueParams, seed: u64) -> Result<Vec<SamplePlan>> {
        let lerp = |r: [f64; 2], u: f64| r[0] + (r[1] - r[0]) * u;
        (0..self.samples)
            .map(|id| {
                let s = derive_seed(seed, 3, id as u64);
                let u = |k: u64| noise::uniform(s, 11, k);
                let mass = lerp(self.mass_range_g, u(0));
                let phantom = if u(1) < 0.5 {
                    let mut p = PhantomConfig::tumor(
                        tissue,
                        lerp(self.diameter_range_mm, u(2)),
                        lerp(self.burial_range_mm, u(3)),
                        mass,
                    );
                    let r = self.max_lateral_offset_mm * u(4).sqrt();
                    let t = std::f64::consts::TAU * u(5);
                    p.lateral_offset_mm = [r * t.cos(), r * t.sin()];
                    p
                } else {
                    PhantomConfig::healthy(tissue, mass)
                };
                phantom.validate()?;
                Ok(SamplePlan { id, phantom, seed: s })
            })
            .collect()
    }
}

pub fn generate_phantom_dataset(
    spec: &DatasetSpec,
    tissue: &TissueParams,
    model: &MembraneModel,
    seed: u64,
) -> Result<Vec<PhantomSample>> {
    let plans = spec.plan(tissue, seed)?;
    par::map_slice(&plans, |p| p.render(model)).into_iter().collect()
}

/// Either sampling scheme, as stored in `dataset.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum PlanSpec {
    Grid(DatasetSpec),
    Random(RandomPressSpec),
}

impl PlanSpec {
    pub fn plan(&self, tissue: &TissueParams, seed: u64) -> Result<Vec<SamplePlan>> {
        match self {
            PlanSpec::Grid(s) => s.plan(tissue, seed),
            PlanSpec::Random(s) => s.plan(tissue, seed),
        }
    }
}

impl From<DatasetSpec> for PlanSpec {
    fn from(s: DatasetSpec) -> Self {
        PlanSpec::Grid(s)
    }
}

impl From<RandomPressSpec> for PlanSpec {
    fn from(s: RandomPressSpec) -> Self {
        PlanSpec::Random(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub spec: PlanSpec,
    pub tissue: TissueParams,
    pub seed: u64,
}

fn sample_paths(dir: &Path, id: usize) -> [PathBuf; 3] {
    let base = dir.join("samples");
    [
        base.join(format!("{id:04}_ref.ppm")),
        base.join(format!("{id:04}_contact.ppm")),
        base.join(format!("{id:04}_truth.dmap")),
    ]
}

/// Renders and writes a dataset; returns the manifest rows.
pub fn write_dataset_dir(
    dir: &Path,
    spec: &PlanSpec,
    tissue: &TissueParams,
    model: &MembraneModel,
    seed: u64,
) -> Result<Vec<ManifestRow>> {
    let plans = spec.plan(tissue, seed)?;
    fs::create_dir_all(dir.join("samples"))?;
    let header = DatasetHeader {
        spec: spec.clone(),
        tissue: tissue.clone(),
        seed,
    };
    fs::write(dir.join("dataset.json"), serde_json::to_string_pretty(&header)? + "\n")?;
    par::map_slice(&plans, |plan| -> Result<()> {
        let sample = plan.render(model)?;
        let [r, c, t] = sample_paths(dir, plan.id);
        ppm::save(r, &sample.reference)?;
        ppm::save(c, &sample.contact)?;
        sample.truth.save(t)
    })
    .into_iter()
    .collect::<Result<()>>()?;
    let rows: Vec<ManifestRow> = plans.iter().map(SamplePlan::manifest_row).collect();
    let mut writer = csv::Writer::from_path(dir.join("manifest.csv"))?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(rows)
}

/// Reads a dataset written by [`write_dataset_dir`].
pub fn load_dataset_dir(dir: &Path) -> Result<Vec<PhantomSample>> {
    let header: DatasetHeader = serde_json::from_str(&fs::read_to_string(dir.join("dataset.json"))?)?;
    let mut reader = csv::Reader::from_path(dir.join("manifest.csv"))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ManifestRow>, _>>()?;
    par::map_slice(&rows, |row| {
        let [r, c, t] = sample_paths(dir, row.sample_id);
        let mut phantom = if row.label == 1 {
            PhantomConfig::tumor(
                &header.tissue,
                row.ball_diameter_mm,
                row.burial_depth_mm,
                row.applied_mass_g,
            )
        } else {
            PhantomConfig::healthy(&header.tissue, row.applied_mass_g)
        };
        phantom.lateral_offset_mm = [row.offset_x_mm, row.offset_y_mm];
        Ok(PhantomSample {
            plan: SamplePlan {
                id: row.sample_id,
                phantom,
                seed: row.seed,
            },
            reference: ppm::load(r)?,
            contact: ppm::load(c)?,
            truth: DeformationMap::load(t)?,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;

    #[test]
    fn random_plan_is_mixed_and_bounded() {
        let cfg = SimConfig::default();
        let spec = RandomPressSpec::default();
        let plans = spec.plan(&cfg.tissue, 3).unwrap();
        assert_eq!(plans.len(), 50);
        let pos = plans.iter().filter(|p| p.label()).count();
        assert!(pos > 10 && pos < 40, "{pos}");
        for p in &plans {
            let [x, y] = p.phantom.lateral_offset_mm;
            assert!(x.hypot(y) <= spec.max_lateral_offset_mm);
            assert!((1000.0..=1300.0).contains(&p.phantom.applied_mass_g));
        }
        assert_eq!(plans, spec.plan(&cfg.tissue, 3).unwrap());
        assert_ne!(plans, spec.plan(&cfg.tissue, 4).unwrap());
    }

    #[test]
    fn plan_spec_json_round_trip() {
        for spec in [
            PlanSpec::from(DatasetSpec::default()),
            PlanSpec::from(RandomPressSpec::default()),
        ] {
            let text = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<PlanSpec>(&text).unwrap(), spec);
        }
    }

    #[test]
    fn default_plan_is_balanced() {
        let cfg = SimConfig::default();
        let plans = DatasetSpec::default().plan(&cfg.tissue, 7).unwrap();
        let pos = plans.iter().filter(|p| p.label()).count();
        assert_eq!(pos, 140);
        assert_eq!(plans.len() - pos, 140);
        assert!(plans
            .iter()
            .filter(|p| p.label())
            .all(|p| p.phantom.applied_mass_g == 1000.0));
        let mut masses: Vec<f64> = plans
            .iter()
            .filter(|p| !p.label())
            .map(|p| p.phantom.applied_mass_g)
            .collect();
        masses.dedup();
        assert_eq!(masses, vec![1000.0, 1100.0, 1200.0, 1300.0]);
        assert_eq!(plans, DatasetSpec::default().plan(&cfg.tissue, 7).unwrap());
    }

    #[test]
    fn offsets_stay_in_disc() {
        let cfg = SimConfig::default();
        let spec = DatasetSpec {
            max_lateral_offset_mm: 1.5,
            ..Default::default()
        };
        for p in spec.plan(&cfg.tissue, 3).unwrap().iter().filter(|p| p.label()) {
            let [x, y] = p.phantom.lateral_offset_mm;
            assert!(x.hypot(y) <= 1.5);
        }
    }

    #[test]
    fn directory_round_trip_is_deterministic() {
        let cfg = SimConfig::default();
        let geom = crate::SensorGeometry {
            width: 80,
            height: 80,
            sense_radius_mm: 1.5,
            mm_per_px: 0.05,
        };
        let model = MembraneModel::new(&cfg.membrane, &geom).unwrap();
        let spec = DatasetSpec {
            diameters_mm: vec![4.0],
            burial_depths_mm: vec![2.0],
            presses_per_tumor: 2,
            negative_masses_g: vec![1000.0],
            presses_per_negative_mass: 2,
            ..Default::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let stored = PlanSpec::from(spec.clone());
        write_dataset_dir(a.path(), &stored, &cfg.tissue, &model, 5).unwrap();
        write_dataset_dir(b.path(), &stored, &cfg.tissue, &model, 5).unwrap();
        for name in [
            "dataset.json",
            "manifest.csv",
            "samples/0000_ref.ppm",
            "samples/0003_truth.dmap",
        ] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap()
            );
        }
        let loaded = load_dataset_dir(a.path()).unwrap();
        let fresh = generate_phantom_dataset(&spec, &cfg.tissue, &model, 5).unwrap();
        assert_eq!(loaded.len(), 4);
        for (l, f) in loaded.iter().zip(&fresh) {
            assert_eq!(l.plan, f.plan);
            assert_eq!(l.contact, f.contact);
            assert_eq!(l.truth, f.truth);
        }
    }
}
