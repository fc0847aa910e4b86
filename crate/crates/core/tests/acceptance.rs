//! Acceptance suite: runs every criterion at its stated tolerance and budget
//! and prints one line per criterion. Exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use photac_core::calibration::{build_calib_dataset, reconstruct, simulate_capture, train_mlp, LAYER_SIZES};
use photac_core::characterization::{characterize, hysteresis, repeatability, Direction, ForceSweep, TrialSet};
use photac_core::detection::{evaluate, sample_features, stratified_split, train_svm, Label, Standardizer, SvmConfig};
use photac_core::imprint::augmented_imprint;
use photac_core::phantom::{
    contact_solve, generate_phantom_dataset, sphere_press_truth, write_dataset_dir, DatasetSpec, PhantomConfig,
    PlanSpec, RandomPressSpec, SamplePlan,
};
use photac_core::{
    ppm, CalibrationModel, DetectorModel, ImprintParams, MembraneModel, RgbImage, SensorGeometry, SimConfig,
    TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, label: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let over = budget.is_some_and(|b| took > b);
        let (pass, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(d) => (false, d),
        };
        let budget = budget
            .map(|b| format!(" / {:.0} s", b.as_secs_f64()))
            .unwrap_or_default();
        println!(
            "{} {label}: {detail} [{:.1} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
        if !pass {
            self.failures += 1;
        }
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn criterion_imprint() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for alpha in [1, 5, 10] {
        let params = ImprintParams::new(f64::from(alpha)).unwrap();
        for i in 0..200 {
            let (w, h) = (1 + i % 17, 1 + (i * 7) % 13);
            let a = common::random_image(&mut rng, w, h);
            let b = common::random_image(&mut rng, w, h);
            let out = augmented_imprint(&a, &b, &params).map_err(|e| e.to_string())?;
            if out.pixels() != common::imprint_oracle(&a, &b, alpha).as_slice() {
                return Err(format!("mismatch at alpha {alpha}, pair {i}"));
            }
            cases += 1;
        }
    }
    let p5 = ImprintParams::new(5.0).unwrap();
    let px = |r: [u8; 3], c: [u8; 3]| {
        let r = RgbImage::filled(1, 1, r).unwrap();
        let c = RgbImage::filled(1, 1, c).unwrap();
        augmented_imprint(&r, &c, &p5).unwrap().pixels()[0]
    };
    let tagged = [
        px([90, 90, 90], [90, 90, 90]) == [128; 3],
        px([100, 0, 0], [130, 0, 0])[0] == 255,
        px([100, 0, 0], [60, 0, 0])[0] == 0,
    ];
    ensure(
        tagged.iter().all(|&t| t),
        format!("{cases} random pairs bit-exact, tagged examples {tagged:?}"),
    )
}

fn criterion_formulas() -> Check {
    let r = repeatability(&TrialSet::new(vec![0.5], 0.5, vec![vec![0.0], vec![0.11]]).unwrap()).unwrap();
    let l = ForceSweep::from_pairs(Direction::Loading, &[(0.01, 0.0), (0.02, 0.0)]).unwrap();
    let u = ForceSweep::from_pairs(Direction::Unloading, &[(0.02, 0.0), (0.01, 0.19)]).unwrap();
    let h = hysteresis(&l, &u, 0.5).unwrap();
    let same = TrialSet::new(vec![0.1, 0.3], 0.5, vec![vec![0.1, 0.3]; 3]).unwrap();
    let r0 = repeatability(&same).unwrap();
    let h0 = hysteresis(&l, &l, 0.5).unwrap();
    ensure(
        r == 22.0 && h == 38.0 && r0 == 0.0 && h0 == 0.0,
        format!("r {r}%, h {h}%, identity r {r0}% h {h0}%"),
    )
}

fn criterion_calibration(cfg: &SimConfig, membrane: &MembraneModel) -> (Check, Option<CalibrationModel>) {
    let rows = match build_calib_dataset(30, 3.0, membrane, 0) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let model = match train_mlp(&rows, &TrainConfig::default()) {
        Ok(m) => m,
        Err(e) => return (Err(e.to_string()), None),
    };
    if model.mlp().sizes() != LAYER_SIZES {
        return (Err(format!("layer sizes {:?}", model.mlp().sizes())), None);
    }
    let mut worst = 0.0f64;
    for i in 0..10 {
        let c = simulate_capture(i, 3.0, membrane, 0x4e1d).unwrap();
        let rec = reconstruct(&model, &c.reference, &c.contact, &cfg.geometry).unwrap();
        worst = worst.max(common::disc_rmse(&rec, &c.truth));
    }
    let check = ensure(
        worst <= 0.025,
        format!("{} rows, worst held-out RMSE {worst:.4} mm (limit 0.025)", rows.len()),
    );
    (check, Some(model))
}

/// Reconstruction examples beyond the criterion: a centered 0.3 mm press and
/// the location of a tumor's peak.
fn reconstruction_examples(cfg: &SimConfig, membrane: &MembraneModel, model: &CalibrationModel) -> Check {
    let geom = &cfg.geometry;
    let truth = sphere_press_truth(0.3, 3.0, geom).unwrap();
    let zero = photac_core::DeformationMap::zeros(geom);
    let reference = photac_core::phantom::render_reading(&zero, membrane, 31).unwrap();
    let contact = photac_core::phantom::render_reading(&truth, membrane, 32).unwrap();
    let rmse = common::disc_rmse(&reconstruct(model, &reference, &contact, geom).unwrap(), &truth);

    let mut phantom = PhantomConfig::tumor(&cfg.tissue, 4.0, 1.0, 300.0);
    phantom.lateral_offset_mm = [1.2, -0.8];
    let solved = contact_solve(&phantom, geom, membrane).unwrap();
    let sample = SamplePlan {
        id: 0,
        phantom: phantom.clone(),
        seed: 33,
    }
    .render(membrane)
    .unwrap();
    let rec = reconstruct(model, &sample.reference, &sample.contact, geom).unwrap();
    let (col, row) = rec.argmax().unwrap();
    let (cx, cy) = geom.center_px();
    let tc = cx + phantom.lateral_offset_mm[0] / geom.mm_per_px;
    let tr = cy + phantom.lateral_offset_mm[1] / geom.mm_per_px;
    let dist = (col as f64 - tc).hypot(row as f64 - tr);
    let unclamped = f64::from(solved.deformation.max_depth().unwrap()) < cfg.membrane.d_max_mm;
    ensure(
        rmse <= 0.025 && dist <= 5.0 && unclamped,
        format!("centered 0.3 mm press RMSE {rmse:.4} mm; tumor argmax {dist:.1} px from projection"),
    )
}

fn criterion_gradients() -> Check {
    let worst = common::worst_gradient_error(100, 4);
    ensure(
        worst < 1e-4,
        format!("100 pairs, worst relative error {worst:.2e} (limit 1e-4)"),
    )
}

fn criterion_detection(
    cfg: &SimConfig,
    membrane: &MembraneModel,
    model: &CalibrationModel,
) -> (Check, Option<DetectorModel>) {
    let samples = generate_phantom_dataset(&DatasetSpec::default(), &cfg.tissue, membrane, 7).unwrap();
    let labels: Vec<bool> = samples.iter().map(|s| s.plan.label()).collect();
    let positives = labels.iter().filter(|&&l| l).count();
    let feats = sample_features(model, &samples, &cfg.geometry).unwrap();
    let (train, test) = stratified_split(&labels, 0.8, 7);
    let pick = |ids: &[usize]| -> (Vec<_>, Vec<bool>) {
        (
            ids.iter().map(|&i| feats[i]).collect(),
            ids.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (ft, lt) = pick(&train);
    let (fe, le) = pick(&test);
    let det = match train_svm(&ft, &lt, &SvmConfig::default()) {
        Ok(d) => d,
        Err(e) => return (Err(e.to_string()), None),
    };
    let tr = evaluate(&det, &train, &ft, &lt).unwrap();
    let te = evaluate(&det, &test, &fe, &le).unwrap();
    let check = ensure(
        positives == 140
            && samples.len() == 280
            && tr.accuracy == 1.0
            && te.accuracy == 1.0
            && det.w_sigma.abs() > det.w_mu.abs(),
        format!(
            "{positives}+{} samples, {}/{} split, train {:.3} test {:.3}, w_mu {:.3} w_sigma {:.3} b {:.3}",
            samples.len() - positives,
            train.len(),
            test.len(),
            tr.accuracy,
            te.accuracy,
            det.w_mu,
            det.w_sigma,
            det.bias
        ),
    );
    (check, Some(det))
}

fn criterion_decision() -> Check {
    let m = DetectorModel::new(Standardizer::IDENTITY, 0.33, 4.80, 4.53).unwrap();
    let low = m.decision_value_standardized([-1.0, -1.0]);
    let mid = m.decision_value_standardized([0.0, 0.0]);
    ensure(
        (low + 0.60).abs() < 1e-12
            && DetectorModel::classify_value(low) == Label::NoTumor
            && mid == 4.53
            && DetectorModel::classify_value(mid) == Label::Tumor,
        format!("z=(-1,-1) -> {low:.2} no-tumor, z=(0,0) -> {mid:.2} tumor"),
    )
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| format!("{v:.4}"))
}

fn criterion_characterization(cfg: &SimConfig, model: &CalibrationModel) -> Check {
    let s = characterize(model, cfg, 0).map_err(|e| e.to_string())?.summary;
    let within = |v: Option<f64>, target: f64| v.is_some_and(|v| (v - target).abs() <= 0.1 * target);
    ensure(
        within(s.threshold_n, 0.02) && within(s.saturation_n, 0.11) && (s.h_pct - 38.0).abs() <= 5.0,
        format!(
            "threshold {} N, saturation {} N, h {:.1}%, r {:.1}%, null std {:.3}",
            show(s.threshold_n),
            show(s.saturation_n),
            s.h_pct,
            s.r_pct,
            s.null_std
        ),
    )
}

fn criterion_proxy(cfg: &SimConfig, membrane: &MembraneModel, model: &CalibrationModel, det: &DetectorModel) -> Check {
    let spec = RandomPressSpec::default();
    let plans = spec.plan(&cfg.tissue, 8).unwrap();
    let samples: Vec<_> = plans.iter().map(|p| p.render(membrane).unwrap()).collect();
    let feats = sample_features(model, &samples, &cfg.geometry).unwrap();
    let labels: Vec<bool> = plans.iter().map(SamplePlan::label).collect();
    let ids: Vec<usize> = (0..plans.len()).collect();
    let report = evaluate(det, &ids, &feats, &labels).unwrap();
    let positives = labels.iter().filter(|&&l| l).count();
    let offset = plans
        .iter()
        .filter(|p| p.label())
        .map(|p| p.phantom.lateral_offset_mm[0].hypot(p.phantom.lateral_offset_mm[1]))
        .fold(0.0, f64::max);
    ensure(
        plans.len() == 50 && positives > 0 && positives < 50 && report.accuracy == 1.0,
        format!(
            "{} presses ({positives} tumor), max offset {offset:.2} mm, accuracy {:.3}",
            plans.len(),
            report.accuracy
        ),
    )
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((name, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Every artifact of a small end-to-end run, as named byte strings.
fn pipeline_artifacts(seed: u64) -> Vec<(String, Vec<u8>)> {
    let mut cfg = SimConfig {
        geometry: SensorGeometry {
            width: 80,
            height: 76,
            sense_radius_mm: 3.5,
            mm_per_px: 0.1,
        },
        ..Default::default()
    };
    let ch = &mut cfg.characterization;
    ch.sensitivity_step_n = 0.01;
    ch.hysteresis_points = 6;
    ch.trials = 2;
    ch.repeatability_steps = 3;
    let membrane = MembraneModel::new(&cfg.membrane, &cfg.geometry).unwrap();
    let mut out = Vec::new();

    let rows = build_calib_dataset(6, 3.0, &membrane, seed).unwrap();
    let train = TrainConfig {
        epochs: 3,
        batch_size: 512,
        seed,
        ..Default::default()
    };
    let model = train_mlp(&rows, &train).unwrap();
    out.push(("model.json".into(), model.to_json().unwrap().into_bytes()));

    let phantom = PhantomConfig::tumor(&cfg.tissue, 6.0, 2.0, 1000.0);
    let sample = SamplePlan { id: 0, phantom, seed }.render(&membrane).unwrap();
    let imprint = augmented_imprint(&sample.reference, &sample.contact, &ImprintParams::default()).unwrap();
    let rec = reconstruct(&model, &sample.reference, &sample.contact, &cfg.geometry).unwrap();
    out.push(("reference.ppm".into(), ppm::encode(&sample.reference)));
    out.push(("contact.ppm".into(), ppm::encode(&sample.contact)));
    out.push(("imprint.ppm".into(), ppm::encode(&imprint)));
    out.push(("truth.dmap".into(), sample.truth.encode()));
    out.push(("reconstruction.dmap".into(), rec.encode()));

    let spec = PlanSpec::Grid(DatasetSpec {
        diameters_mm: vec![6.0, 10.0],
        burial_depths_mm: vec![1.0, 2.0],
        presses_per_tumor: 2,
        negative_masses_g: vec![1000.0, 1300.0],
        presses_per_negative_mass: 4,
        ..Default::default()
    });
    let dir = tempfile::tempdir().unwrap();
    write_dataset_dir(dir.path(), &spec, &cfg.tissue, &membrane, seed).unwrap();
    let samples = photac_core::phantom::load_dataset_dir(dir.path()).unwrap();
    out.extend(
        read_tree(dir.path())
            .into_iter()
            .map(|(n, b)| (format!("dataset/{n}"), b)),
    );

    let feats = sample_features(&model, &samples, &cfg.geometry).unwrap();
    let labels: Vec<bool> = samples.iter().map(|s| s.plan.label()).collect();
    let det = train_svm(&feats, &labels, &SvmConfig::default()).unwrap();
    let ids: Vec<usize> = (0..labels.len()).collect();
    let report = evaluate(&det, &ids, &feats, &labels).unwrap();
    out.push(("detector.json".into(), det.to_json().unwrap().into_bytes()));
    out.push(("report.json".into(), report.to_json().unwrap().into_bytes()));
    out.push(("report.csv".into(), report.to_csv().unwrap()));

    let ch = characterize(&model, &cfg, seed).unwrap();
    out.push(("summary.json".into(), ch.summary_json().unwrap().into_bytes()));
    out.push(("characterization.csv".into(), ch.to_csv().unwrap()));
    out
}

fn criterion_determinism() -> Check {
    let a = pipeline_artifacts(5);
    #[cfg(feature = "parallel")]
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| pipeline_artifacts(5));
    #[cfg(not(feature = "parallel"))]
    let b = pipeline_artifacts(5);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let bytes: usize = a.iter().map(|(_, b)| b.len()).sum();
    ensure(
        a.len() == b.len() && differing.is_empty(),
        format!(
            "{} artifacts ({bytes} bytes) identical across reruns{}; differing: {differing:?}",
            a.len(),
            if cfg!(feature = "parallel") {
                " with 1 and 3 worker threads"
            } else {
                ""
            }
        ),
    )
}

fn main() {
    let cfg = SimConfig::default();
    let membrane = MembraneModel::new(&cfg.membrane, &cfg.geometry).unwrap();
    let mut suite = Suite { failures: 0 };
    println!(
        "acceptance suite ({} build)",
        if cfg!(feature = "parallel") {
            "parallel"
        } else {
            "sequential"
        }
    );

    suite.run("1 imprint arithmetic", secs(1), criterion_imprint);
    suite.run("2 repeatability/hysteresis formulas", secs(1), criterion_formulas);

    let mut model = None;
    suite.run("3 calibration quality", secs(300), || {
        let (check, m) = criterion_calibration(&cfg, &membrane);
        model = m;
        check
    });
    suite.run("4 gradient check", secs(30), criterion_gradients);

    let mut detector = None;
    suite.run("5 detection accuracy", secs(600), || {
        let model = model.as_ref().ok_or("no calibration model")?;
        let (check, d) = criterion_detection(&cfg, &membrane, model);
        detector = d;
        check
    });
    suite.run("6 decision arithmetic", None, criterion_decision);
    suite.run("7 characterization consistency", secs(120), || {
        criterion_characterization(&cfg, model.as_ref().ok_or("no calibration model")?)
    });
    suite.run("8 simulated ex-vivo proxy", secs(120), || {
        let model = model.as_ref().ok_or("no calibration model")?;
        let det = detector.as_ref().ok_or("no detector")?;
        criterion_proxy(&cfg, &membrane, model, det)
    });
    suite.run("9 determinism", None, criterion_determinism);
    suite.run("extra: reconstruction examples", None, || {
        reconstruction_examples(&cfg, &membrane, model.as_ref().ok_or("no calibration model")?)
    });

    if suite.failures > 0 {
        println!("{} failing", suite.failures);
        std::process::exit(1);
    }
    println!("all criteria pass");
}
