#![allow(dead_code)]

use ndarray::Array2;
use photac_core::calibration::{Mlp, LAYER_SIZES};
use photac_core::{DeformationMap, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative error with an absolute floor of 1e-6: below it, differencing
/// roundoff (about 1e-11 at the step used) dominates any real discrepancy.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst relative error between analytic and central-difference gradients,
/// over all parameters and inputs of `pairs` random `(network, input)` draws.
pub fn worst_gradient_error(pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for p in 0..pairs {
        let mut mlp = Mlp::<f64>::glorot(&LAYER_SIZES, seed ^ (p as u64).wrapping_mul(0x9e37));
        for l in &mut mlp.layers {
            l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        let x: Vec<f64> = (0..LAYER_SIZES[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = [rng.random_range(-1.0..1.0)];
        let xv = Array2::from_shape_vec((1, x.len()), x.clone()).unwrap();

        let (_, grads) = mlp.squared_error_gradients(xv.view(), &y, 1.0);
        let analytic = grads.flatten();
        for (i, &g) in analytic.iter().enumerate() {
            let w = mlp.param(i);
            mlp.set_param(i, w + h);
            let up = mlp.mse(xv.view(), &y);
            mlp.set_param(i, w - h);
            let down = mlp.mse(xv.view(), &y);
            mlp.set_param(i, w);
            worst = worst.max(rel_err(g, (up - down) / (2.0 * h)));
        }

        let dx = mlp.input_gradient(&x);
        for j in 0..x.len() {
            let eval = |v: f64| {
                let mut xs = x.clone();
                xs[j] = v;
                mlp.forward(Array2::from_shape_vec((1, xs.len()), xs).unwrap().view())[(0, 0)]
            };
            let fd = (eval(x[j] + h) - eval(x[j] - h)) / (2.0 * h);
            worst = worst.max(rel_err(dx[j], fd));
        }
    }
    worst
}

/// Integer-only imprint: for integer `alpha`, `alpha * d + 127.5` always ends
/// in .5, so rounding half up is `alpha * d + 128`.
pub fn imprint_oracle(reference: &RgbImage, contact: &RgbImage, alpha: i32) -> Vec<[u8; 3]> {
    reference
        .pixels()
        .iter()
        .zip(contact.pixels())
        .map(|(n, w)| std::array::from_fn(|c| (alpha * (i32::from(w[c]) - i32::from(n[c])) + 128).clamp(0, 255) as u8))
        .collect()
}

pub fn random_image(rng: &mut impl Rng, width: usize, height: usize) -> RgbImage {
    let pixels = (0..width * height).map(|_| rng.random::<[u8; 3]>()).collect();
    RgbImage::new(width, height, pixels).unwrap()
}

/// Root-mean-square difference over the pixels inside the sensing disc.
pub fn disc_rmse(a: &DeformationMap, b: &DeformationMap) -> f64 {
    let (sum, n) = a
        .masked_depths()
        .zip(b.masked_depths())
        .fold((0.0, 0usize), |(s, n), (x, y)| (s + f64::from(x - y).powi(2), n + 1));
    (sum / n as f64).sqrt()
}
