//! Learned inverse model from per-pixel color change to indentation depth.
//!
//! The network maps `(dH, dS, dV, u, v)` to depth in mm through three tanh
//! hidden layers of 32 units. Inputs are standardized with training-set
//! statistics that travel with the model.

mod mlp;
mod model;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use mlp::{Adam, Dense, Gradients, Mlp, Real};
pub use model::{CalibrationModel, TrainingSummary, MODEL_FORMAT, MODEL_VERSION};

use crate::deformation::DeformationMap;
use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::image::RgbImage;
use crate::imprint::color_delta;
use crate::noise::{self, derive_seed};
use crate::par;
use crate::phantom::{render_reading, sphere_press_truth_at, MembraneModel};

pub const LAYER_SIZES: [usize; 5] = [5, 32, 32, 32, 1];
pub const FEATURES: usize = 5;

/// Rows per gradient work unit. Fixed so results do not depend on threads.
const GRAD_CHUNK: usize = 512;
const PREDICT_CHUNK: usize = 4096;
const SHUFFLE_STREAM: u64 = 0x5f;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            epochs: 50,
            batch_size: 4096,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-pixel training rows: features `(dH, dS, dV, u, v)` and depth targets.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibRows {
    pub geometry: SensorGeometry,
    pub d_max_mm: f64,
    pub features: Vec<[f32; FEATURES]>,
    pub targets: Vec<f32>,
}

impl CalibRows {
    pub fn new(geometry: SensorGeometry, d_max_mm: f64) -> Self {
        Self {
            geometry,
            d_max_mm,
            features: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, features: [f64; FEATURES], target: f64) {
        self.features.push(features.map(|x| x as f32));
        self.targets.push(target as f32);
    }

    /// Appends in-disc rows of one capture.
    pub fn push_capture(&mut self, reference: &RgbImage, contact: &RgbImage, truth: &DeformationMap) -> Result<()> {
        let delta = color_delta(reference, contact)?;
        if truth.dims() != (delta.width(), delta.height()) {
            return Err(Error::dims(truth.dims(), (delta.width(), delta.height())));
        }
        for (i, (&d, &m)) in truth.depths().iter().zip(truth.mask()).enumerate() {
            if m {
                self.push(delta.features(i), f64::from(d));
            }
        }
        Ok(())
    }

    /// The rows plus copies with the horizontal coordinate flipped.
    pub fn mirror_augmented(&self) -> Self {
        let mut out = self.clone();
        out.features.extend(self.features.iter().map(|f| {
            let mut g = *f;
            g[3] = 1.0 - g[3];
            g
        }));
        out.targets.extend_from_slice(&self.targets);
        out
    }
}

/// One simulated sphere press used for calibration.
#[derive(Debug, Clone)]
pub struct Capture {
    pub press_depth_mm: f64,
    pub center_mm: [f64; 2],
    pub reference: RgbImage,
    pub contact: RgbImage,
    pub truth: DeformationMap,
}

/// Simulates capture `index` of a calibration session: a sphere pressed to a
/// depth uniform in `(0, min(d_max, radius)]` at a point uniform in the
/// sensing disc.
pub fn simulate_capture(index: usize, sphere_radius_mm: f64, model: &MembraneModel, seed: u64) -> Result<Capture> {
    let geom = model.geometry();
    let s = derive_seed(seed, 0xca1, index as u64);
    let max_depth = model.d_max_mm.min(sphere_radius_mm);
    let press_depth_mm = max_depth * (1.0 - noise::uniform(s, 0, 0));
    let r = geom.sense_radius_mm * noise::uniform(s, 0, 1).sqrt();
    let t = std::f64::consts::TAU * noise::uniform(s, 0, 2);
    let center_mm = [r * t.cos(), r * t.sin()];
    let truth = sphere_press_truth_at(press_depth_mm, sphere_radius_mm, center_mm, geom)?;
    let reference = render_reading(&DeformationMap::zeros(geom), model, derive_seed(s, 1, 0))?;
    let contact = render_reading(&truth, model, derive_seed(s, 2, 0))?;
    Ok(Capture {
        press_depth_mm,
        center_mm,
        reference,
        contact,
        truth,
    })
}

/// Training rows from `n_captures` simulated sphere presses.
pub fn build_calib_dataset(
    n_captures: usize,
    sphere_radius_mm: f64,
    model: &MembraneModel,
    seed: u64,
) -> Result<CalibRows> {
    if n_captures == 0 {
        return Err(Error::InvalidArgument("need at least one capture".into()));
    }
    let captures = par::map_range(n_captures, |i| simulate_capture(i, sphere_radius_mm, model, seed));
    let mut rows = CalibRows::new(*model.geometry(), model.d_max_mm);
    for capture in captures {
        let c = capture?;
        rows.push_capture(&c.reference, &c.contact, &c.truth)?;
    }
    Ok(rows)
}

fn standardizer(rows: &CalibRows) -> ([f32; FEATURES], [f32; FEATURES]) {
    let n = rows.len() as f64;
    let mut shift = [0f32; FEATURES];
    let mut scale = [1f32; FEATURES];
    for j in 0..FEATURES {
        let mean = rows.features.iter().map(|f| f64::from(f[j])).sum::<f64>() / n;
        let var = rows
            .features
            .iter()
            .map(|f| (f64::from(f[j]) - mean).powi(2))
            .sum::<f64>()
            / n;
        shift[j] = mean as f32;
        let std = var.sqrt();
        scale[j] = if std > 1e-12 { std as f32 } else { 1.0 };
    }
    (shift, scale)
}

/// Gradient of the batch MSE, summed over fixed-size chunks in chunk order.
fn batch_gradients(mlp: &Mlp<f32>, x: &Array2<f32>, y: &[f32]) -> (f32, Gradients<f32>) {
    let n = y.len();
    let denom = n as f32;
    let chunks = n.div_ceil(GRAD_CHUNK);
    let parts = par::map_range(chunks, |c| {
        let lo = c * GRAD_CHUNK;
        let hi = (lo + GRAD_CHUNK).min(n);
        mlp.squared_error_gradients(x.slice(ndarray::s![lo..hi, ..]), &y[lo..hi], denom)
    });
    let mut iter = parts.into_iter();
    let (mut loss, mut grads) = iter.next().expect("non-empty batch");
    for (l, g) in iter {
        loss += l;
        grads.add_assign(&g);
    }
    (loss, grads)
}

/// Fits the calibration network by minibatch Adam on the mean squared error.
pub fn train_mlp(rows: &CalibRows, cfg: &TrainConfig) -> Result<CalibrationModel> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(Error::Empty("calibration rows"));
    }
    if rows.features.iter().flatten().any(|x| !x.is_finite()) || rows.targets.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "calibration rows contain non-finite values".into(),
        ));
    }
    let (shift, scale) = standardizer(rows);
    let n = rows.len();
    let x_all = Array2::from_shape_fn((n, FEATURES), |(i, j)| (rows.features[i][j] - shift[j]) / scale[j]);

    let mut mlp = Mlp::<f32>::glorot(&LAYER_SIZES, cfg.seed);
    // linear head starts at zero, so the untrained network predicts 0 mm
    if let Some(head) = mlp.layers.last_mut() {
        head.weights.fill(0.0);
    }
    let mut adam = Adam::new(&mlp, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SHUFFLE_STREAM, 0));
    let mut order: Vec<usize> = (0..n).collect();
    let batch = cfg.batch_size.min(n);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut xb = Array2::<f32>::zeros((batch, FEATURES));
    let mut yb = vec![0f32; batch];

    for epoch in 0..cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut total = 0f64;
        for (step, idx) in order.chunks(batch).enumerate() {
            let b = idx.len();
            if xb.nrows() != b {
                xb = Array2::zeros((b, FEATURES));
                yb.resize(b, 0.0);
            }
            for (r, &i) in idx.iter().enumerate() {
                xb.row_mut(r).assign(&x_all.row(i));
                yb[r] = rows.targets[i];
            }
            let (loss, grads) = batch_gradients(&mlp, &xb, &yb[..b]);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    loss: f64::from(loss),
                });
            }
            adam.step(&mut mlp, &grads);
            total += f64::from(loss) * b as f64;
        }
        epoch_losses.push(total / n as f64);
    }
    if !mlp.is_finite() {
        return Err(Error::InvalidModel("training produced non-finite weights".into()));
    }
    CalibrationModel::from_parts(
        mlp,
        shift,
        scale,
        rows.geometry,
        rows.d_max_mm,
        TrainingSummary {
            config: cfg.clone(),
            rows: n,
            epoch_losses,
        },
    )
}

/// Raw network output for one feature vector, mm. Not clamped.
pub fn mlp_forward(model: &CalibrationModel, features: [f64; FEATURES]) -> f64 {
    let x = model.standardize(&features.map(|v| v as f32));
    let x = Array2::from_shape_vec((1, FEATURES), x.to_vec()).unwrap();
    f64::from(model.mlp().forward(x.view())[(0, 0)])
}

/// Network outputs for many feature rows, evaluated in fixed-size chunks.
pub fn predict_rows(model: &CalibrationModel, features: &[[f32; FEATURES]]) -> Vec<f32> {
    let n = features.len();
    let chunks = n.div_ceil(PREDICT_CHUNK);
    par::map_range(chunks, |c| {
        let lo = c * PREDICT_CHUNK;
        let hi = (lo + PREDICT_CHUNK).min(n);
        let x = Array2::from_shape_fn((hi - lo, FEATURES), |(r, j)| model.standardize(&features[lo + r])[j]);
        model.mlp().forward(x.view()).column(0).to_vec()
    })
    .concat()
}

/// Deformation map from a reference and a contact reading.
pub fn reconstruct(
    model: &CalibrationModel,
    reference: &RgbImage,
    contact: &RgbImage,
    geom: &SensorGeometry,
) -> Result<DeformationMap> {
    if reference.dims() != geom.dims() {
        return Err(Error::dims(reference.dims(), geom.dims()));
    }
    let delta = color_delta(reference, contact)?;
    let mask = geom.mask();
    let inside: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let features: Vec<[f32; FEATURES]> = inside.iter().map(|&i| delta.features(i).map(|v| v as f32)).collect();
    let raw = predict_rows(model, &features);
    let d_max = model.d_max_mm() as f32;
    let mut depths = vec![0f32; mask.len()];
    for (&i, &d) in inside.iter().zip(&raw) {
        depths[i] = d.clamp(0.0, d_max);
    }
    DeformationMap::new(geom.width, geom.height, depths, mask)
}

/// Turns a reference/contact reading pair into a deformation map.
pub trait DepthReader: Sync {
    fn read(&self, reference: &RgbImage, contact: &RgbImage, geom: &SensorGeometry) -> Result<DeformationMap>;
}

impl DepthReader for CalibrationModel {
    fn read(&self, reference: &RgbImage, contact: &RgbImage, geom: &SensorGeometry) -> Result<DeformationMap> {
        reconstruct(self, reference, contact, geom)
    }
}
