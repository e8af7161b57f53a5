//! In-process commands: simulate, run, uci, extract.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use adf_core::covariance::{
    describe, image_format_for, load_image, load_manifest, train_classifier, BorderPolicy, ClassifierSpec,
    REGION_FEATURE_LEN,
};
use adf_core::eval::{load_uci, run_comparison, run_uci, write_report, FeedbackPolicy, ReportFormat, UciConfig};
use adf_core::fusion::{Algorithm, FusionConfig, Solver};
use adf_core::stream::{generate_stream, load_stream, reference, write_stream, FusionEvent, StreamConfig, StreamFormat};
use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;

use crate::invalid;

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes to `path`, or stdout for `-`.
fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
        }
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn reference_config(name: &str) -> anyhow::Result<StreamConfig> {
    reference::by_name(name).ok_or_else(|| invalid(format!("unknown reference stream '{name}' (drift, regime-switch)")))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Stream configuration file (JSON).
    #[arg(long, conflicts_with = "reference", required_unless_present = "reference")]
    config: Option<PathBuf>,
    /// Built-in stream: `drift` or `regime-switch`.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    length: Option<u64>,
    /// Output file, `-` for stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// jsonl or csv; defaults from the output extension.
    #[arg(long)]
    format: Option<StreamFormat>,
}

pub fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = match (&args.config, &args.reference) {
        (Some(path), _) => read_json::<StreamConfig>(path)?,
        (None, Some(name)) => reference_config(name)?,
        (None, None) => unreachable!("clap requires one"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(length) = args.length {
        cfg.length = length;
    }
    let events = generate_stream(&cfg)?;
    let format = args.format.unwrap_or_else(|| StreamFormat::from_path(&args.out));
    let mut buf = Vec::new();
    write_stream(&mut buf, &events, format)?;
    emit(Some(&args.out), &buf)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Event stream (JSONL or CSV).
    #[arg(long, conflicts_with = "reference", required_unless_present = "reference")]
    stream: Option<PathBuf>,
    /// Generate a built-in stream instead of reading one.
    #[arg(long)]
    reference: Option<String>,
    /// Seed for `--reference` streams.
    #[arg(long, requires = "reference")]
    seed: Option<u64>,
    /// Fusion configuration file (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "eadf,pocs,ulp,fixed")]
    algorithms: Vec<Algorithm>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// root or grid
    #[arg(long)]
    solver: Option<Solver>,
    /// Stop oracle feedback after this many events.
    #[arg(long)]
    freeze_after: Option<u64>,
    /// Report file, `-` for stdout.
    #[arg(long, default_value = "-")]
    report: PathBuf,
    /// json or csv; defaults from the report extension.
    #[arg(long)]
    format: Option<ReportFormat>,
}

fn load_events(stream: Option<&Path>, reference: Option<&str>, seed: Option<u64>) -> anyhow::Result<Vec<FusionEvent>> {
    match (stream, reference) {
        (Some(_), _) if seed.is_some() => Err(invalid("--seed only applies to --reference streams")),
        (Some(path), _) => Ok(load_stream(path, StreamFormat::from_path(path))
            .with_context(|| format!("loading {}", path.display()))?),
        (None, Some(name)) => {
            let mut cfg = reference_config(name)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            Ok(generate_stream(&cfg)?)
        }
        (None, None) => unreachable!("clap requires one"),
    }
}

pub fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg: FusionConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => FusionConfig::default(),
    };
    if let Some(mu) = args.mu {
        cfg.mu = mu;
    }
    if let Some(c) = args.c {
        cfg.c = c;
    }
    if let Some(solver) = args.solver {
        cfg.solver = solver;
    }
    cfg.validate()?;
    let algorithms: Vec<Algorithm> = args.algorithms.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let policy = args.freeze_after.map_or(FeedbackPolicy::Always, FeedbackPolicy::TrainThenFreeze);
    let events = load_events(args.stream.as_deref(), args.reference.as_deref(), args.seed)?;
    let metrics = run_comparison(&events, &algorithms, &cfg, policy)?;
    let format = args.format.unwrap_or_else(|| ReportFormat::from_path(&args.report));
    let mut buf = Vec::new();
    write_report(&mut buf, &metrics, format)?;
    emit(Some(&args.report), &buf)
}

#[derive(Debug, Args)]
pub struct UciArgs {
    /// ionosphere.data (34 features and a g/b class per row).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "eadf")]
    fusion: Algorithm,
    /// Classifier and fusion settings (JSON); `--fusion` overrides the algorithm.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    report: PathBuf,
}

pub fn uci(args: UciArgs) -> anyhow::Result<()> {
    let mut cfg: UciConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => UciConfig::default(),
    };
    cfg.fusion.algorithm = args.fusion;
    cfg.fusion.validate()?;
    let data = load_uci(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    let report = run_uci(&data, &cfg)?;
    for c in &report.classifiers {
        eprintln!("{:>10}  test {:6.2}%", c.name, 100.0 * c.test_accuracy);
    }
    eprintln!("{:>10}  test {:6.2}%", format!("fused/{}", report.algorithm.name()), 100.0 * report.fused_test_accuracy);
    let mut buf = serde_json::to_vec_pretty(&report)?;
    buf.push(b'\n');
    emit(Some(&args.report), &buf)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Border {
    Interior,
    Replicate,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// CSV with `path,label` rows; relative paths are taken from its directory.
    #[arg(long)]
    manifest: PathBuf,
    /// Feature table (CSV), `-` for stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "interior")]
    border: Border,
    /// Also train a classifier: `knn:<k>`, `ncc`, `logistic`, or a JSON spec file.
    #[arg(long, requires = "model")]
    train: Option<String>,
    /// Where to save the trained classifier.
    #[arg(long, requires = "train")]
    model: Option<PathBuf>,
}

fn classifier_spec(s: &str) -> anyhow::Result<ClassifierSpec> {
    match s {
        "ncc" => Ok(ClassifierSpec::ncc()),
        "logistic" => Ok(ClassifierSpec::logistic()),
        _ => match s.strip_prefix("knn:") {
            Some(k) => {
                let k = k.parse().map_err(|_| invalid(format!("bad k in '{s}'")))?;
                Ok(ClassifierSpec::knn(k))
            }
            None if Path::new(s).is_file() => read_json(Path::new(s)),
            None => Err(invalid(format!("unknown classifier '{s}'"))),
        },
    }
}

pub fn extract(args: ExtractArgs) -> anyhow::Result<()> {
    let policy = match args.border {
        Border::Interior => BorderPolicy::InteriorOnly,
        Border::Replicate => BorderPolicy::ReplicateEdge,
    };
    let spec = args.train.as_deref().map(classifier_spec).transpose()?;
    let entries = load_manifest(&args.manifest)?;
    let mut features = Vec::with_capacity(entries.len());
    for entry in &entries {
        let region = load_image(&entry.path, image_format_for(&entry.path))
            .with_context(|| format!("reading {}", entry.path.display()))?;
        let f = describe(&region, policy).with_context(|| format!("describing {}", entry.path.display()))?;
        features.push(f.as_slice().to_vec());
    }

    let mut table = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["path".to_string(), "label".to_string()];
    header.extend((1..=REGION_FEATURE_LEN).map(|i| format!("f{i}")));
    table.write_record(&header)?;
    for (entry, f) in entries.iter().zip(&features) {
        let mut row = vec![entry.path.display().to_string(), entry.label.to_string()];
        row.extend(f.iter().map(|v| v.to_string()));
        table.write_record(&row)?;
    }
    emit(Some(&args.out), &table.into_inner()?)?;

    if let (Some(spec), Some(model_path)) = (spec, &args.model) {
        let labels: Vec<_> = entries.iter().map(|e| e.label).collect();
        let model = train_classifier(&spec, &features, &labels)?;
        let correct = features
            .iter()
            .zip(&labels)
            .map(|(x, y)| model.classify(x).map(|p| p == *y))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|ok| *ok)
            .count();
        eprintln!("{}: training accuracy {}/{}", spec.name(), correct, labels.len());
        model.save(model_path)?;
    }
    Ok(())
}
