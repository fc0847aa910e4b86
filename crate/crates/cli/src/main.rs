//! `photac`: simulated vision-based tactile sensing from the command line.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 when inputs fail to
//! load or validate. Every command that writes files also writes a run
//! manifest next to its primary output.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use photac_core::calibration::{build_calib_dataset, reconstruct, train_mlp, TrainConfig};
use photac_core::characterization::characterize;
use photac_core::detection::{
    evaluate, extract_features, sample_features, stratified_split, train_svm, Label, SvmConfig,
};
use photac_core::imprint::augmented_imprint;
use photac_core::phantom::{load_dataset_dir, write_dataset_dir, DatasetSpec, PlanSpec, RandomPressSpec, SamplePlan};
use photac_core::{
    ppm, CalibrationModel, DeformationMap, DetectorModel, Error, ImprintParams, MembraneModel, PhantomConfig, Result,
    SimConfig,
};

use manifest::ManifestBuilder;

#[derive(Parser)]
#[command(name = "photac", version, about = "Simulated vision-based tactile sensing pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one phantom press: reference and contact readings plus the truth map.
    Phantom(PhantomArgs),
    /// Amplified, offset and clipped difference of two readings.
    Imprint(ImprintArgs),
    /// Train the depth calibration network on simulated sphere presses.
    Calibrate(CalibrateArgs),
    /// Reconstruct a deformation map from a reading pair.
    Reconstruct(ReconstructArgs),
    /// Generate a labeled phantom dataset directory.
    Dataset(DatasetArgs),
    /// Train the linear tumor detector on a dataset.
    TrainDetector(TrainDetectorArgs),
    /// Classify one deformation map; prints JSON on stdout.
    Detect(DetectArgs),
    /// Score a detector on a dataset.
    Evaluate(EvaluateArgs),
    /// Sensitivity, repeatability and hysteresis of the simulated sensor.
    Characterize(CharacterizeArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Simulator configuration (JSON); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self, m: &mut ManifestBuilder) -> Result<SimConfig> {
        match &self.config {
            Some(p) => {
                m.input(p);
                SimConfig::load(p)
            }
            None => Ok(SimConfig::default()),
        }
    }
}

#[derive(Args)]
struct PhantomArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Tumor diameter, mm. Omit for a healthy phantom.
    #[arg(long)]
    diameter: Option<f64>,
    /// Tumor burial depth, mm.
    #[arg(long, default_value_t = 3.0)]
    burial: f64,
    /// Applied mass, g.
    #[arg(long, default_value_t = 1000.0)]
    mass: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    offset_x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    offset_y: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImprintArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    contact: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    alpha: f64,
    #[arg(long, default_value_t = 127.5)]
    beta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value_t = 30)]
    captures: usize,
    /// Calibration sphere radius, mm.
    #[arg(long, default_value_t = 3.0)]
    sphere_radius: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 4096)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Calibration model (JSON).
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    contact: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// `default` (grid of tumor sizes and depths), `random` (mixed random
    /// presses with lateral offsets) or a JSON spec file.
    #[arg(long, default_value = "default")]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainDetectorArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Calibration model used to reconstruct each sample.
    #[arg(long)]
    model: PathBuf,
    /// Fraction of each class used for training.
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    detector: PathBuf,
    #[arg(long)]
    map: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    detector: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Report path (JSON); a CSV with per-sample decisions is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CharacterizeArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for summary.json and characterization.csv.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Phantom(a) => phantom(a),
        Command::Imprint(a) => imprint(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Dataset(a) => dataset(a),
        Command::TrainDetector(a) => train_detector(a),
        Command::Detect(a) => detect(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Characterize(a) => characterize_cmd(a),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn phantom(a: PhantomArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("phantom");
    let cfg = a.config.load(&mut m)?;
    let mut phantom = match a.diameter {
        Some(d) => PhantomConfig::tumor(&cfg.tissue, d, a.burial, a.mass),
        None => PhantomConfig::healthy(&cfg.tissue, a.mass),
    };
    phantom.lateral_offset_mm = [a.offset_x, a.offset_y];
    phantom.validate()?;
    let membrane = MembraneModel::new(&cfg.membrane, &cfg.geometry)?;
    let sample = SamplePlan {
        id: 0,
        phantom,
        seed: a.seed,
    }
    .render(&membrane)?;

    fs::create_dir_all(&a.out)?;
    let paths = [
        a.out.join("reference.ppm"),
        a.out.join("contact.ppm"),
        a.out.join("truth.dmap"),
        a.out.join("phantom.json"),
    ];
    ppm::save(&paths[0], &sample.reference)?;
    ppm::save(&paths[1], &sample.contact)?;
    sample.truth.save(&paths[2])?;
    write_json(&paths[3], &sample.plan.phantom)?;
    for p in &paths {
        m.output(p);
    }
    m.seed(a.seed).config(&cfg);
    m.finish(&a.out)?;
    println!(
        "peak depth {:.4} mm, force {:.3} N",
        sample.truth.max_depth().unwrap_or(0.0),
        sample.plan.phantom.force_n()
    );
    Ok(())
}

fn imprint(a: ImprintArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("imprint");
    let params = ImprintParams {
        alpha: a.alpha,
        beta: a.beta,
    };
    params.validate()?;
    let reference = ppm::load(&a.reference)?;
    let contact = ppm::load(&a.contact)?;
    let out = augmented_imprint(&reference, &contact, &params)?;
    ppm::save(&a.out, &out)?;
    m.input(&a.reference).input(&a.contact).output(&a.out).config(params);
    m.finish(&a.out)?;
    Ok(())
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("calibrate");
    let cfg = a.config.load(&mut m)?;
    let train = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
    };
    train.validate()?;
    let membrane = MembraneModel::new(&cfg.membrane, &cfg.geometry)?;
    let rows = build_calib_dataset(a.captures, a.sphere_radius, &membrane, a.seed)?;
    let model = train_mlp(&rows, &train)?;
    model.save(&a.out)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        sim: &'a SimConfig,
        captures: usize,
        sphere_radius_mm: f64,
        train: &'a TrainConfig,
    }
    m.seed(a.seed).output(&a.out).config(Resolved {
        sim: &cfg,
        captures: a.captures,
        sphere_radius_mm: a.sphere_radius,
        train: &train,
    });
    m.finish(&a.out)?;
    let losses = &model.training().epoch_losses;
    println!("rows      {}", rows.len());
    println!("epochs    {}", losses.len());
    println!("final MSE {:.3e} mm^2", losses.last().copied().unwrap_or(f64::NAN));
    Ok(())
}

fn reconstruct_cmd(a: ReconstructArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("reconstruct");
    let model = CalibrationModel::load(&a.model)?;
    let reference = ppm::load(&a.reference)?;
    let contact = ppm::load(&a.contact)?;
    let map = reconstruct(&model, &reference, &contact, model.geometry())?;
    map.save(&a.out)?;
    m.input(&a.model).input(&a.reference).input(&a.contact).output(&a.out);
    m.finish(&a.out)?;
    Ok(())
}

fn dataset(a: DatasetArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("dataset");
    let cfg = a.config.load(&mut m)?;
    let spec: PlanSpec = match a.spec.as_str() {
        "default" => DatasetSpec::default().into(),
        "random" => RandomPressSpec::default().into(),
        path => {
            m.input(Path::new(path));
            serde_json::from_str(&fs::read_to_string(path)?)?
        }
    };
    let membrane = MembraneModel::new(&cfg.membrane, &cfg.geometry)?;
    let rows = write_dataset_dir(&a.out, &spec, &cfg.tissue, &membrane, a.seed)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        sim: &'a SimConfig,
        spec: &'a PlanSpec,
    }
    m.seed(a.seed)
        .output(&a.out)
        .config(Resolved { sim: &cfg, spec: &spec });
    m.finish(&a.out)?;
    let pos = rows.iter().filter(|r| r.label == 1).count();
    println!("samples {} (tumor {}, healthy {})", rows.len(), pos, rows.len() - pos);
    Ok(())
}

fn train_detector(a: TrainDetectorArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("train-detector");
    if !(a.train_fraction > 0.0 && a.train_fraction < 1.0) {
        return Err(Error::InvalidArgument("train fraction must lie in (0, 1)".into()));
    }
    let model = CalibrationModel::load(&a.model)?;
    let samples = load_dataset_dir(&a.dataset)?;
    let features = sample_features(&model, &samples, model.geometry())?;
    let labels: Vec<bool> = samples.iter().map(|s| s.plan.label()).collect();
    let ids: Vec<usize> = samples.iter().map(|s| s.plan.id).collect();
    let (train, test) = stratified_split(&labels, a.train_fraction, a.seed);
    let pick = |idx: &[usize]| {
        (
            idx.iter().map(|&i| ids[i]).collect::<Vec<_>>(),
            idx.iter().map(|&i| features[i]).collect::<Vec<_>>(),
            idx.iter().map(|&i| labels[i]).collect::<Vec<_>>(),
        )
    };
    let (train_ids, train_f, train_l) = pick(&train);
    let (test_ids, test_f, test_l) = pick(&test);
    let svm = SvmConfig {
        c: a.c,
        ..Default::default()
    };
    let detector = train_svm(&train_f, &train_l, &svm)?;
    detector.save(&a.out)?;
    let train_report = evaluate(&detector, &train_ids, &train_f, &train_l)?;
    let test_report = if test.is_empty() {
        None
    } else {
        Some(evaluate(&detector, &test_ids, &test_f, &test_l)?)
    };
    let report_path = with_suffix(&a.out, "report.json");
    write_json(
        &report_path,
        &serde_json::json!({ "train": train_report, "test": test_report }),
    )?;
    m.seed(a.seed)
        .input(&a.dataset)
        .input(&a.model)
        .output(&a.out)
        .output(&report_path)
        .config(serde_json::json!({ "train_fraction": a.train_fraction, "svm": svm }));
    m.finish(&a.out)?;
    println!("w_mu     {:+.4}", detector.w_mu);
    println!("w_sigma  {:+.4}", detector.w_sigma);
    println!("bias     {:+.4}", detector.bias);
    println!(
        "train    {:.2}% of {}",
        100.0 * train_report.accuracy,
        train_report.samples
    );
    if let Some(r) = &test_report {
        println!("test     {:.2}% of {}", 100.0 * r.accuracy, r.samples);
    }
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let detector = DetectorModel::load(&a.detector)?;
    let map = DeformationMap::load(&a.map)?;
    let f = extract_features(&map)?;
    let value = detector.decision_value(&f);
    let label: Label = DetectorModel::classify_value(value);
    let out = serde_json::json!({
        "label": label,
        "decision_value": value,
        "mu": f.mu,
        "sigma": f.sigma,
    });
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("evaluate");
    let detector = DetectorModel::load(&a.detector)?;
    let model = CalibrationModel::load(&a.model)?;
    let samples = load_dataset_dir(&a.dataset)?;
    let features = sample_features(&model, &samples, model.geometry())?;
    let labels: Vec<bool> = samples.iter().map(|s| s.plan.label()).collect();
    let ids: Vec<usize> = samples.iter().map(|s| s.plan.id).collect();
    let report = evaluate(&detector, &ids, &features, &labels)?;
    fs::write(&a.out, report.to_json()?)?;
    let csv_path = a.out.with_extension("csv");
    fs::write(&csv_path, report.to_csv()?)?;
    m.input(&a.detector)
        .input(&a.model)
        .input(&a.dataset)
        .output(&a.out)
        .output(&csv_path);
    m.finish(&a.out)?;
    println!("accuracy {:.2}% of {}", 100.0 * report.accuracy, report.samples);
    println!("            tumor  healthy");
    println!("pred tumor  {:5}  {:7}", report.true_positive, report.false_positive);
    println!("pred health {:5}  {:7}", report.false_negative, report.true_negative);
    Ok(())
}

fn characterize_cmd(a: CharacterizeArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("characterize");
    let cfg = a.config.load(&mut m)?;
    let model = CalibrationModel::load(&a.model)?;
    if model.geometry() != &cfg.geometry {
        return Err(Error::InvalidArgument(
            "calibration model geometry differs from the simulator config".into(),
        ));
    }
    let report = characterize(&model, &cfg, a.seed)?;
    fs::create_dir_all(&a.out)?;
    let summary = a.out.join("summary.json");
    let csv = a.out.join("characterization.csv");
    fs::write(&summary, report.summary_json()?)?;
    fs::write(&csv, report.to_csv()?)?;
    m.seed(a.seed)
        .input(&a.model)
        .output(&summary)
        .output(&csv)
        .config(&cfg);
    m.finish(&a.out)?;
    let s = &report.summary;
    let opt = |v: Option<f64>| v.map_or("none".to_owned(), |v| format!("{v:.4} N"));
    println!("threshold   {}", opt(s.threshold_n));
    println!("resolution  {}", opt(s.resolution_n));
    println!("saturation  {}", opt(s.saturation_n));
    println!("r           {:.2} %", s.r_pct);
    println!("h           {:.2} %", s.h_pct);
    println!("null std    {:.3}", s.null_std);
    Ok(())
}

/// `det.json` -> `det.<suffix>`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
