//! Sensor metrology: sensitivity sweep, repeatability, hysteresis and the
//! null-difference noise statistic.
//!
//! Bench presses use a rigid spherical indenter on the membrane's own
//! Winkler foundation, so the indentation field is a spherical cap clamped
//! at `D_max` and the applied force is `k * sum(depth) * pixel_area`.

use serde::{Deserialize, Serialize};

pub use crate::calibration::DepthReader;
use crate::config::SimConfig;
pub use crate::config::Tip;
use crate::deformation::DeformationMap;
use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::image::{hue_delta, rgb_to_hsv_pixel, RgbImage};
use crate::noise::derive_seed;
use crate::par;
use crate::phantom::{render_reading, sphere_cap_depths, MembraneModel};

/// Depth from the hue shift alone, inverting a known linear hue gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HueInversion {
    pub gain_hue: f64,
    pub d_max_mm: f64,
}

impl HueInversion {
    pub fn for_membrane(model: &MembraneModel) -> Self {
        Self {
            gain_hue: model.gain_hue,
            d_max_mm: model.d_max_mm,
        }
    }
}

impl DepthReader for HueInversion {
    fn read(&self, reference: &RgbImage, contact: &RgbImage, geom: &SensorGeometry) -> Result<DeformationMap> {
        reference.ensure_same_dims(contact)?;
        if reference.dims() != geom.dims() {
            return Err(Error::dims(reference.dims(), geom.dims()));
        }
        let depths = reference
            .pixels()
            .iter()
            .zip(contact.pixels())
            .map(|(&a, &b)| {
                let dh = hue_delta(rgb_to_hsv_pixel(b).h, rgb_to_hsv_pixel(a).h);
                (dh / self.gain_hue).clamp(0.0, self.d_max_mm) as f32
            })
            .collect();
        DeformationMap::from_geometry(geom, depths)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Loading,
    Unloading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub force_n: f64,
    /// Largest reconstructed in-disc depth, mm.
    pub max_depth_mm: f64,
    /// Mean reconstructed in-disc depth, mm.
    pub mean_depth_mm: f64,
    /// Whether any simulated pixel sat at the depth clamp.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSweep {
    pub direction: Direction,
    pub points: Vec<SweepPoint>,
}

impl ForceSweep {
    pub fn new(direction: Direction, points: Vec<SweepPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("force sweep"));
        }
        let ordered = points.windows(2).all(|w| match direction {
            Direction::Loading => w[1].force_n > w[0].force_n,
            Direction::Unloading => w[1].force_n < w[0].force_n,
        });
        if !ordered {
            return Err(Error::InvalidArgument(format!(
                "{direction:?} sweep forces must be strictly monotone"
            )));
        }
        Ok(Self { direction, points })
    }

    /// Convenience constructor from (force, max depth) pairs.
    pub fn from_pairs(direction: Direction, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            direction,
            pairs
                .iter()
                .map(|&(force_n, d)| SweepPoint {
                    force_n,
                    max_depth_mm: d,
                    mean_depth_mm: d,
                    clamped: false,
                })
                .collect(),
        )
    }

    pub fn forces(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.force_n).collect()
    }

    /// Points in increasing force order.
    fn ascending(&self) -> Vec<SweepPoint> {
        let mut pts = self.points.clone();
        if self.direction == Direction::Unloading {
            pts.reverse();
        }
        pts
    }

    /// Pointwise mean of several sweeps over the same force grid.
    pub fn mean(sweeps: &[ForceSweep]) -> Result<ForceSweep> {
        let first = sweeps.first().ok_or(Error::Empty("sweep list"))?;
        for s in sweeps {
            if s.direction != first.direction || s.forces() != first.forces() {
                return Err(Error::GridMismatch);
            }
        }
        let k = sweeps.len() as f64;
        let points = (0..first.points.len())
            .map(|i| SweepPoint {
                force_n: first.points[i].force_n,
                max_depth_mm: sweeps.iter().map(|s| s.points[i].max_depth_mm).sum::<f64>() / k,
                mean_depth_mm: sweeps.iter().map(|s| s.points[i].mean_depth_mm).sum::<f64>() / k,
                clamped: sweeps.iter().any(|s| s.points[i].clamped),
            })
            .collect();
        ForceSweep::new(first.direction, points)
    }

    /// Centered moving average of width 3 over the depth columns. End
    /// points average the two samples available.
    pub fn smoothed(&self) -> ForceSweep {
        let max: Vec<f64> = self.points.iter().map(|p| p.max_depth_mm).collect();
        let mean: Vec<f64> = self.points.iter().map(|p| p.mean_depth_mm).collect();
        let (max, mean) = (moving_average3(&max), moving_average3(&mean));
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| SweepPoint {
                max_depth_mm: max[i],
                mean_depth_mm: mean[i],
                ..*p
            })
            .collect();
        ForceSweep {
            direction: self.direction,
            points,
        }
    }
}

pub fn moving_average3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Repeated measurements at a shared ground-truth step schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    /// Ground-truth depths, mm.
    pub steps_mm: Vec<f64>,
    /// Full-scale depth d_M, mm.
    pub full_scale_mm: f64,
    /// `trials[t][s]` is the depth measured in trial `t` at step `s`.
    pub trials: Vec<Vec<f64>>,
}

impl TrialSet {
    pub fn new(steps_mm: Vec<f64>, full_scale_mm: f64, trials: Vec<Vec<f64>>) -> Result<Self> {
        if trials.len() < 2 {
            return Err(Error::InvalidArgument("a trial set needs at least two trials".into()));
        }
        if !(full_scale_mm > 0.0) {
            return Err(Error::InvalidArgument("full scale must be positive".into()));
        }
        if trials.iter().any(|t| t.len() != steps_mm.len()) {
            return Err(Error::ScheduleMismatch);
        }
        Ok(Self {
            steps_mm,
            full_scale_mm,
            trials,
        })
    }
}

/// Worst per-step spread across trials as a percentage of full scale.
pub fn repeatability(trials: &TrialSet) -> Result<f64> {
    if trials.trials.iter().any(|t| t.len() != trials.steps_mm.len()) {
        return Err(Error::ScheduleMismatch);
    }
    let spread = (0..trials.steps_mm.len())
        .map(|s| {
            let (lo, hi) = trials
                .trials
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                    (lo.min(t[s]), hi.max(t[s]))
                });
            hi - lo
        })
        .fold(0.0, f64::max);
    Ok(spread * 100.0 / trials.full_scale_mm)
}

/// Worst loading/unloading gap in max depth as a percentage of `d_m`.
/// Curves are compared as given; smooth them first if needed.
pub fn hysteresis(loading: &ForceSweep, unloading: &ForceSweep, d_m: f64) -> Result<f64> {
    if !(d_m > 0.0) {
        return Err(Error::InvalidArgument("full scale must be positive".into()));
    }
    let (l, u) = (loading.ascending(), unloading.ascending());
    if l.len() != u.len() || l.iter().zip(&u).any(|(a, b)| a.force_n != b.force_n) {
        return Err(Error::GridMismatch);
    }
    let gap = l
        .iter()
        .zip(&u)
        .map(|(a, b)| (a.max_depth_mm - b.max_depth_mm).abs())
        .fold(0.0, f64::max);
    Ok(gap * 100.0 / d_m)
}

/// Population standard deviation of all channel differences over in-disc pixels.
pub fn null_difference_stat(before: &RgbImage, after: &RgbImage, geom: &SensorGeometry) -> Result<f64> {
    before.ensure_same_dims(after)?;
    if before.dims() != geom.dims() {
        return Err(Error::dims(before.dims(), geom.dims()));
    }
    let mask = geom.mask();
    let diffs: Vec<f64> = before
        .pixels()
        .iter()
        .zip(after.pixels())
        .zip(&mask)
        .filter(|(_, &m)| m)
        .flat_map(|((a, b), _)| (0..3).map(move |c| f64::from(b[c]) - f64::from(a[c])))
        .collect();
    Ok(population_std(&diffs))
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Rigid indenter pressed at the sensor center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indenter {
    pub tip: Tip,
    pub radius_mm: f64,
    /// Foundation modulus, N/mm^3.
    pub stiffness: f64,
}

impl Indenter {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        let ind = Self {
            tip: cfg.indenter.tip,
            radius_mm: cfg.indenter.radius_mm,
            stiffness: cfg.indenter.contact_stiffness,
        };
        if !(ind.radius_mm > 0.0 && ind.stiffness > 0.0) {
            return Err(Error::InvalidArgument(
                "indenter radius and contact stiffness must be positive".into(),
            ));
        }
        Ok(ind)
    }

    /// Clamped indentation field for a rigid displacement `delta`.
    pub fn field(&self, delta: f64, geom: &SensorGeometry, d_max: f64) -> Result<Vec<f64>> {
        if delta <= 0.0 {
            return Ok(vec![0.0; geom.len()]);
        }
        let mut d = match self.tip {
            Tip::Sphere => sphere_cap_depths(delta.min(self.radius_mm), self.radius_mm, [0.0, 0.0], geom)?,
            Tip::Flat => (0..geom.len())
                .map(|i| {
                    let (x, y) = geom.index_mm(i);
                    if x.hypot(y) <= self.radius_mm {
                        delta
                    } else {
                        0.0
                    }
                })
                .collect(),
        };
        for (v, inside) in d.iter_mut().zip(geom.mask()) {
            *v = if inside { v.min(d_max) } else { 0.0 };
        }
        Ok(d)
    }

    pub fn force_at(&self, delta: f64, geom: &SensorGeometry, d_max: f64) -> Result<f64> {
        let sum: f64 = self.field(delta, geom, d_max)?.iter().sum();
        Ok(self.stiffness * sum * geom.pixel_area_mm2())
    }

    /// Displacement at which the membrane bottoms out under the tip.
    fn travel(&self, d_max: f64) -> f64 {
        match self.tip {
            Tip::Sphere => self.radius_mm,
            Tip::Flat => d_max,
        }
    }

    /// Rigid displacement that carries `force_n`, by bisection. Forces
    /// beyond the membrane's capacity return the full travel; the backing
    /// takes the excess.
    pub fn displacement_for(&self, force_n: f64, geom: &SensorGeometry, d_max: f64) -> Result<f64> {
        if !(force_n >= 0.0 && force_n.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "force {force_n} N must be finite and >= 0"
            )));
        }
        if force_n == 0.0 {
            return Ok(0.0);
        }
        let top = self.travel(d_max);
        if self.force_at(top, geom, d_max)? <= force_n {
            return Ok(top);
        }
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.force_at(mid, geom, d_max)? < force_n {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// Truth map of one press plus whether any pixel hit the clamp.
fn press_map(ind: &Indenter, delta: f64, geom: &SensorGeometry, d_max: f64) -> Result<(DeformationMap, bool)> {
    let field = ind.field(delta, geom, d_max)?;
    let clamped = field.iter().any(|&d| d >= d_max);
    let map = DeformationMap::from_geometry(geom, field.into_iter().map(|d| d as f32).collect())?;
    Ok((map, clamped))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Reading {
    max_depth_mm: f64,
    mean_depth_mm: f64,
}

fn read_press<R: DepthReader>(
    reader: &R,
    membrane: &MembraneModel,
    truth: &DeformationMap,
    seed: u64,
) -> Result<Reading> {
    let geom = membrane.geometry();
    let reference = render_reading(&DeformationMap::zeros(geom), membrane, derive_seed(seed, 1, 0))?;
    let contact = render_reading(truth, membrane, derive_seed(seed, 2, 0))?;
    let map = reader.read(&reference, &contact, geom)?;
    let depths: Vec<f64> = map.masked_depths().map(f64::from).collect();
    if depths.is_empty() {
        return Err(Error::Empty("deformation mask"));
    }
    Ok(Reading {
        max_depth_mm: depths.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_depth_mm: depths.iter().sum::<f64>() / depths.len() as f64,
    })
}

/// Noise floor and null-difference statistic from `n` unloaded readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullStats {
    /// Standard deviation of reconstructed depth over all null readings, mm.
    pub noise_floor_mm: f64,
    /// Channel-difference standard deviation, 8-bit units.
    pub null_std: f64,
}

pub fn null_stats<R: DepthReader>(reader: &R, membrane: &MembraneModel, n: usize, seed: u64) -> Result<NullStats> {
    if n == 0 {
        return Err(Error::Empty("null readings"));
    }
    let geom = membrane.geometry();
    let zeros = DeformationMap::zeros(geom);
    let per = par::map_range(n, |i| -> Result<(Vec<f64>, Vec<f64>)> {
        let s = derive_seed(seed, 0x0a11, i as u64);
        let before = render_reading(&zeros, membrane, derive_seed(s, 1, 0))?;
        let after = render_reading(&zeros, membrane, derive_seed(s, 2, 0))?;
        let map = reader.read(&before, &after, geom)?;
        let mask = geom.mask();
        let diffs = before
            .pixels()
            .iter()
            .zip(after.pixels())
            .zip(&mask)
            .filter(|(_, &m)| m)
            .flat_map(|((a, b), _)| (0..3).map(move |c| f64::from(b[c]) - f64::from(a[c])))
            .collect();
        Ok((map.masked_depths().map(f64::from).collect(), diffs))
    });
    let (mut depths, mut diffs) = (Vec::new(), Vec::new());
    for r in per {
        let (d, c) = r?;
        depths.extend(d);
        diffs.extend(c);
    }
    Ok(NullStats {
        noise_floor_mm: population_std(&depths),
        null_std: population_std(&diffs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityProfile {
    pub threshold_n: Option<f64>,
    pub resolution_n: Option<f64>,
    pub saturation_n: Option<f64>,
    pub sweep: ForceSweep,
}

/// Loading sweep over `forces` and the sensitivity figures derived from it.
///
/// The threshold is the least force whose mean reconstructed depth exceeds
/// `3 * noise_floor_mm`. The resolution is the smallest force step between
/// adjacent points whose max-depth difference exceeds the noise floor. The
/// saturation is the least force at which the simulated depth hits `D_max`.
pub fn sensitivity_profile<R: DepthReader>(
    reader: &R,
    membrane: &MembraneModel,
    indenter: &Indenter,
    forces: &[f64],
    noise_floor_mm: f64,
    seed: u64,
) -> Result<SensitivityProfile> {
    if forces.len() < 3 {
        return Err(Error::InvalidArgument(
            "a sensitivity sweep needs at least 3 forces".into(),
        ));
    }
    let geom = membrane.geometry();
    let d_max = membrane.d_max_mm;
    let points = par::map_slice(forces, |&f| -> Result<SweepPoint> {
        let delta = indenter.displacement_for(f, geom, d_max)?;
        let (truth, clamped) = press_map(indenter, delta, geom, d_max)?;
        let bits = f.to_bits();
        let r = read_press(reader, membrane, &truth, derive_seed(seed, 0x5e45, bits))?;
        Ok(SweepPoint {
            force_n: f,
            max_depth_mm: r.max_depth_mm,
            mean_depth_mm: r.mean_depth_mm,
            clamped,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let sweep = ForceSweep::new(Direction::Loading, points)?;
    let threshold_n = sweep
        .points
        .iter()
        .find(|p| p.mean_depth_mm > 3.0 * noise_floor_mm)
        .map(|p| p.force_n);
    let resolution_n = sweep
        .points
        .windows(2)
        .filter(|w| (w[1].max_depth_mm - w[0].max_depth_mm).abs() > noise_floor_mm)
        .map(|w| w[1].force_n - w[0].force_n)
        .reduce(f64::min);
    let saturation_n = sweep.points.iter().find(|p| p.clamped).map(|p| p.force_n);
    Ok(SensitivityProfile {
        threshold_n,
        resolution_n,
        saturation_n,
        sweep,
    })
}

/// Extra unloading depth at fraction `x` of the peak force.
pub fn unloading_lag(lag_mm: f64, x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    4.0 * lag_mm * x * (1.0 - x)
}

/// `trials` loading and unloading sweeps over `forces` (ascending). The
/// unloading branch is pressed deeper by [`unloading_lag`].
pub fn hysteresis_sweeps<R: DepthReader>(
    reader: &R,
    membrane: &MembraneModel,
    indenter: &Indenter,
    forces: &[f64],
    lag_mm: f64,
    trials: usize,
    seed: u64,
) -> Result<(Vec<ForceSweep>, Vec<ForceSweep>)> {
    let n = forces.len();
    if n == 0 {
        return Err(Error::Empty("force grid"));
    }
    let geom = membrane.geometry();
    let d_max = membrane.d_max_mm;
    let f_peak = forces[n - 1];
    // job j: trial j / (2n), branch (j / n) % 2, point j % n
    let readings = par::map_range(trials * 2 * n, |j| -> Result<SweepPoint> {
        let (t, branch, i) = (j / (2 * n), (j / n) % 2, j % n);
        let f = if branch == 0 { forces[i] } else { forces[n - 1 - i] };
        let mut delta = indenter.displacement_for(f, geom, d_max)?;
        if branch == 1 && f_peak > 0.0 {
            delta += unloading_lag(lag_mm, f / f_peak);
        }
        let (truth, clamped) = press_map(indenter, delta, geom, d_max)?;
        let r = read_press(reader, membrane, &truth, derive_seed(seed, 0x4157 + t as u64, j as u64))?;
        Ok(SweepPoint {
            force_n: f,
            max_depth_mm: r.max_depth_mm,
            mean_depth_mm: r.mean_depth_mm,
            clamped,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut loading = Vec::with_capacity(trials);
    let mut unloading = Vec::with_capacity(trials);
    for t in 0..trials {
        let base = t * 2 * n;
        loading.push(ForceSweep::new(Direction::Loading, readings[base..base + n].to_vec())?);
        unloading.push(ForceSweep::new(
            Direction::Unloading,
            readings[base + n..base + 2 * n].to_vec(),
        )?);
    }
    Ok((loading, unloading))
}

/// Repeated presses to `steps` evenly spaced depths up to `full_scale_mm`.
pub fn repeatability_trials<R: DepthReader>(
    reader: &R,
    membrane: &MembraneModel,
    indenter: &Indenter,
    steps: usize,
    full_scale_mm: f64,
    trials: usize,
    seed: u64,
) -> Result<TrialSet> {
    if steps == 0 {
        return Err(Error::Empty("step schedule"));
    }
    let geom = membrane.geometry();
    let d_max = membrane.d_max_mm;
    let schedule: Vec<f64> = (1..=steps).map(|s| full_scale_mm * s as f64 / steps as f64).collect();
    let readings = par::map_range(trials * steps, |j| -> Result<f64> {
        let (t, s) = (j / steps, j % steps);
        let (truth, _) = press_map(indenter, schedule[s], geom, d_max)?;
        let r = read_press(reader, membrane, &truth, derive_seed(seed, 0x7e9 + t as u64, s as u64))?;
        Ok(r.max_depth_mm)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let measured = readings.chunks(steps).map(<[f64]>::to_vec).collect();
    TrialSet::new(schedule, full_scale_mm, measured)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationSummary {
    #[serde(rename = "threshold_N")]
    pub threshold_n: Option<f64>,
    #[serde(rename = "resolution_N")]
    pub resolution_n: Option<f64>,
    #[serde(rename = "saturation_N")]
    pub saturation_n: Option<f64>,
    pub r_pct: f64,
    pub h_pct: f64,
    pub null_std: f64,
    pub noise_floor_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub summary: CharacterizationSummary,
    pub sensitivity: ForceSweep,
    /// Smoothed trial means.
    pub loading: ForceSweep,
    pub unloading: ForceSweep,
    pub repeatability: TrialSet,
}

#[derive(Debug, Serialize)]
struct CsvRow {
    section: &'static str,
    index: usize,
    trial: Option<usize>,
    force_n: Option<f64>,
    truth_depth_mm: Option<f64>,
    max_depth_mm: f64,
    mean_depth_mm: Option<f64>,
}

impl CharacterizationReport {
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)? + "\n")
    }

    /// One row per sweep point or repeatability measurement.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let sweeps = [
            ("sensitivity", &self.sensitivity),
            ("loading", &self.loading),
            ("unloading", &self.unloading),
        ];
        for (section, sweep) in sweeps {
            for (index, p) in sweep.points.iter().enumerate() {
                w.serialize(CsvRow {
                    section,
                    index,
                    trial: None,
                    force_n: Some(p.force_n),
                    truth_depth_mm: None,
                    max_depth_mm: p.max_depth_mm,
                    mean_depth_mm: Some(p.mean_depth_mm),
                })?;
            }
        }
        for (t, trial) in self.repeatability.trials.iter().enumerate() {
            for (index, (&d, &truth)) in trial.iter().zip(&self.repeatability.steps_mm).enumerate() {
                w.serialize(CsvRow {
                    section: "repeatability",
                    index,
                    trial: Some(t),
                    force_n: None,
                    truth_depth_mm: Some(truth),
                    max_depth_mm: d,
                    mean_depth_mm: None,
                })?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Evenly spaced grid `step, 2*step, ...` up to and including `max`.
pub fn force_grid(step: f64, max: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// Full characterization run as configured in `cfg.characterization`.
pub fn characterize<R: DepthReader>(reader: &R, cfg: &SimConfig, seed: u64) -> Result<CharacterizationReport> {
    let membrane = MembraneModel::new(&cfg.membrane, &cfg.geometry)?;
    let indenter = Indenter::from_config(cfg)?;
    let cp = &cfg.characterization;
    if cp.trials < 2 {
        return Err(Error::InvalidArgument(
            "characterization needs at least two trials".into(),
        ));
    }
    let d_m = membrane.d_max_mm;

    let null = null_stats(reader, &membrane, cp.null_readings, derive_seed(seed, 1, 0))?;
    let forces = force_grid(cp.sensitivity_step_n, cp.sensitivity_max_n);
    let profile = sensitivity_profile(
        reader,
        &membrane,
        &indenter,
        &forces,
        null.noise_floor_mm,
        derive_seed(seed, 2, 0),
    )?;

    let h_forces = force_grid(cp.hysteresis_max_n / cp.hysteresis_points as f64, cp.hysteresis_max_n);
    let (load, unload) = hysteresis_sweeps(
        reader,
        &membrane,
        &indenter,
        &h_forces,
        cfg.indenter.unloading_lag_mm,
        cp.trials,
        derive_seed(seed, 3, 0),
    )?;
    let loading = ForceSweep::mean(&load)?.smoothed();
    let unloading = ForceSweep::mean(&unload)?.smoothed();
    let h_pct = hysteresis(&loading, &unloading, d_m)?;

    let trials = repeatability_trials(
        reader,
        &membrane,
        &indenter,
        cp.repeatability_steps,
        d_m,
        cp.trials,
        derive_seed(seed, 4, 0),
    )?;
    let r_pct = repeatability(&trials)?;

    Ok(CharacterizationReport {
        summary: CharacterizationSummary {
            threshold_n: profile.threshold_n,
            resolution_n: profile.resolution_n,
            saturation_n: profile.saturation_n,
            r_pct,
            h_pct,
            null_std: null.null_std,
            noise_floor_mm: null.noise_floor_mm,
        },
        sensitivity: profile.sweep,
        loading,
        unloading,
        repeatability: trials,
    })
}
