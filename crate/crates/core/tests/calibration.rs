mod common;

use photac_core::calibration::{
    build_calib_dataset, mlp_forward, reconstruct, simulate_capture, train_mlp, CalibRows, LAYER_SIZES,
};
use photac_core::{CalibrationModel, MembraneModel, SensorGeometry, SimConfig, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_geom() -> SensorGeometry {
    SensorGeometry {
        width: 64,
        height: 48,
        sense_radius_mm: 2.2,
        mm_per_px: 0.1,
    }
}

/// Rows whose depth is exactly `0.002 * dH`, with dH spanning the hue range
/// the default membrane produces between zero and full indentation.
fn linear_rows(n: usize, seed: u64) -> CalibRows {
    let cfg = SimConfig::default();
    let max_dh = cfg.membrane.gain_hue_deg_per_mm * cfg.membrane.d_max_mm;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = CalibRows::new(cfg.geometry, cfg.membrane.d_max_mm);
    for _ in 0..n {
        let dh = rng.random_range(0.0..max_dh);
        let ds = rng.random_range(-0.02..0.02);
        let dv = rng.random_range(-0.02..0.02);
        rows.push([dh, ds, dv, rng.random(), rng.random()], 0.002 * dh);
    }
    rows
}

#[test]
fn full_session_row_count_comes_from_the_mask() {
    let cfg = SimConfig::default();
    let membrane = MembraneModel::new(&cfg.membrane, &cfg.geometry).unwrap();
    let rows = build_calib_dataset(30, 3.0, &membrane, 0).unwrap();
    assert_eq!(rows.len(), 30 * cfg.geometry.disc_pixel_count());
    let approx = 30.0 * std::f64::consts::PI * 70.0 * 70.0;
    assert!((rows.len() as f64 / approx - 1.0).abs() < 0.01, "{}", rows.len());
}

#[test]
fn linear_ground_truth_is_learned() {
    let model = train_mlp(&linear_rows(60_000, 1), &TrainConfig::default()).unwrap();
    assert_eq!(model.mlp().sizes(), LAYER_SIZES.to_vec());
    let held_out = linear_rows(5_000, 2);
    let mse = held_out
        .features
        .iter()
        .zip(&held_out.targets)
        .map(|(f, &t)| (mlp_forward(&model, f.map(f64::from)) - f64::from(t)).powi(2))
        .sum::<f64>()
        / held_out.len() as f64;
    assert!(mse.sqrt() < 0.01, "held-out rmse {}", mse.sqrt());
}

#[test]
fn equal_seeds_give_identical_model_files() {
    let rows = linear_rows(3_000, 3);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 256,
        seed: 9,
        ..Default::default()
    };
    let a = train_mlp(&rows, &cfg).unwrap().to_json().unwrap();
    let b = train_mlp(&rows, &cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let c = train_mlp(&rows, &TrainConfig { seed: 10, ..cfg })
        .unwrap()
        .to_json()
        .unwrap();
    assert_ne!(a, c);
    assert_eq!(CalibrationModel::from_json(&a).unwrap().to_json().unwrap(), a);
}

#[test]
fn mirrored_readings_give_mirrored_maps() {
    let cfg = SimConfig::default();
    let geom = small_geom();
    let membrane = MembraneModel::new(&cfg.membrane, &geom).unwrap();
    let rows = build_calib_dataset(40, 3.0, &membrane, 4).unwrap().mirror_augmented();
    let train = TrainConfig {
        epochs: 60,
        batch_size: 1024,
        ..Default::default()
    };
    let model = train_mlp(&rows, &train).unwrap();

    let mut worst = 0.0f64;
    for i in 0..4 {
        let c = simulate_capture(500 + i, 3.0, &membrane, 8).unwrap();
        let direct = reconstruct(&model, &c.reference, &c.contact, &geom).unwrap();
        let mirrored = reconstruct(
            &model,
            &c.reference.mirror_horizontal(),
            &c.contact.mirror_horizontal(),
            &geom,
        )
        .unwrap();
        worst = worst.max(common::disc_rmse(&mirrored, &direct.mirror_horizontal()));
    }
    assert!(worst < 0.01, "mirror mismatch {worst}");
}
