use std::path::{Path, PathBuf};

use log::info;
use mdf_core::data::{load_ucr_file, synthesize_twopatterns, write_ucr, LabelTable, SynthConfig};
use mdf_core::error::read_file;
use mdf_core::explain::{explain, ClassScore, Explanation, TieRule};
use mdf_core::fcn::{
    fit, AnyArtifact, Precision, TrainConfig, TrainedArtifact, STRIDE_CANDIDATES,
};
use mdf_core::io::{write_pgm, write_ppm, write_records, write_significance, MdfRecord};
use mdf_core::mdf::{encode, MinMax, TimeSeries};
use mdf_core::nn::gradcheck::run_suite;
use mdf_core::nn::Real;
use mdf_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::args::{EncodeArgs, EvalArgs, ExplainArgs, GradcheckArgs, SynthArgs, TrainArgs};
use crate::manifest::{to_json, Fingerprint, RunManifest};

pub const OUT_DIR_ENV: &str = "MDF_OUT_DIR";

/// Strides used when neither `--strides` nor `--cv` nor a config file picks them.
pub const DEFAULT_STRIDES: [usize; 3] = [2, 2, 2];

/// Why a subcommand stopped.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// A check ran to completion and reported failure.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Check(msg) => f.write_str(msg),
        }
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

fn out_dir(flag: Option<PathBuf>, sub: &str) -> Result<PathBuf> {
    match flag {
        Some(p) => Ok(p),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(|d| PathBuf::from(d).join(sub))
            .ok_or_else(|| Error::InvalidArgument(format!("--out not given and {OUT_DIR_ENV} is unset"))),
    }
}

pub fn encode_cmd(args: EncodeArgs) -> CmdResult {
    let split = load_ucr_file(&args.input)?;
    let out = out_dir(args.out, "encode")?;
    std::fs::create_dir_all(&out)?;
    let series: Vec<TimeSeries> = if args.normalize {
        let bounds = MinMax::fit(&split.series)?;
        split.series.iter().map(|s| bounds.apply(s)).collect::<Result<_>>()?
    } else {
        split.series.clone()
    };
    let records = series
        .iter()
        .map(|ts| {
            Ok(MdfRecord {
                label: ts.label,
                image: encode(&ts.values, args.n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let geometry = records[0].image.geometry;
    let mut artifacts = vec!["records.mdf".to_string()];
    write_records(&out.join("records.mdf"), &geometry, &records)?;
    if args.channel_images {
        std::fs::create_dir_all(out.join("images"))?;
        for (i, r) in records.iter().enumerate() {
            for ch in 1..=geometry.channels() {
                let name = format!("images/series_{:04}_ch{ch}.pgm", i + 1);
                write_pgm(&out.join(&name), r.image.channel(ch), geometry.cols(), geometry.rows())?;
                artifacts.push(name);
            }
        }
    }
    RunManifest {
        command: "encode".into(),
        config: json!({ "n": args.n, "normalize": args.normalize, "channel_images": args.channel_images }),
        datasets: vec![Fingerprint::of("input", &args.input)?],
        artifacts,
        metrics: json!({
            "series": records.len(),
            "channels": geometry.channels(),
            "rows": geometry.rows(),
            "cols": geometry.cols(),
        }),
    }
    .write(&out)?;
    println!(
        "encoded {} series into {}x{}x{} images under {}",
        records.len(),
        geometry.channels(),
        geometry.rows(),
        geometry.cols(),
        out.display()
    );
    Ok(())
}

/// Config file values overridden by flags.
pub fn resolve_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_slice(&read_file(path)?).map_err(|e| Error::Format {
            path: path.clone(),
            msg: e.to_string(),
        })?,
        None => TrainConfig {
            stride_candidates: vec![DEFAULT_STRIDES],
            ..TrainConfig::default()
        },
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(f) = args.filters {
        cfg.filters = f;
    }
    if args.cv {
        cfg.stride_candidates = STRIDE_CANDIDATES.to_vec();
    }
    if let Some(s) = args.strides {
        cfg.stride_candidates = vec![s];
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if args.cv_epochs.is_some() {
        cfg.cv_epochs = args.cv_epochs;
    }
    if let Some(b) = args.batch {
        cfg.batch_size = b;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = &args.precision {
        cfg.precision = p.parse()?;
    }
    Ok(cfg)
}

fn train_with<R: Real>(
    series: &[TimeSeries],
    table: &LabelTable,
    cfg: &TrainConfig,
    out: &Path,
) -> Result<serde_json::Value> {
    let mut artifact = fit::<R>(series, table.len(), cfg)?;
    artifact.meta.class_labels = table.labels.clone();
    artifact.save(out)?;
    let train_error = artifact.evaluate(series)?;
    Ok(json!({
        "strides": artifact.meta.strides,
        "train_error": train_error,
        "best_epoch": artifact.meta.best_epoch,
        "final_loss": artifact.meta.loss_history.last(),
        "cv": artifact.meta.cv,
    }))
}

pub fn train_cmd(args: TrainArgs) -> CmdResult {
    let cfg = resolve_config(&args)?;
    let split = load_ucr_file(&args.train)?;
    let out = out_dir(args.out.clone(), "train")?;
    std::fs::create_dir_all(&out)?;
    info!(
        "training on {} series, {} classes, strides {:?}",
        split.series.len(),
        split.table.len(),
        cfg.stride_candidates
    );
    let metrics = match cfg.precision {
        Precision::F32 => train_with::<f32>(&split.series, &split.table, &cfg, &out)?,
        Precision::F64 => train_with::<f64>(&split.series, &split.table, &cfg, &out)?,
    };
    RunManifest {
        command: "train".into(),
        config: serde_json::to_value(&cfg).map_err(Error::from)?,
        datasets: vec![Fingerprint::of("train", &args.train)?],
        artifacts: vec!["checkpoint.json".into(), "artifact.json".into()],
        metrics: metrics.clone(),
    }
    .write(&out)?;
    println!(
        "trained with strides {}; training error {}; model in {}",
        metrics["strides"],
        metrics["train_error"],
        out.display()
    );
    Ok(())
}

/// Labels of `path` mapped through the model's class table.
fn labeled_split(artifact: &AnyArtifact, path: &Path) -> Result<Vec<TimeSeries>> {
    let split = load_ucr_file(path)?;
    let labels = &artifact.meta().class_labels;
    if labels.is_empty() {
        return Ok(split.series);
    }
    split.relabel(&LabelTable::from_labels(labels)?)
}

#[derive(Serialize)]
struct Metrics {
    error_rate: f64,
    instances: usize,
    correct: usize,
    /// Rows are true classes, columns predicted classes.
    confusion: Vec<Vec<usize>>,
    strides: [usize; 3],
    test: Fingerprint,
}

pub fn eval_cmd(args: EvalArgs) -> CmdResult {
    let artifact = AnyArtifact::load(&args.model)?;
    let series = labeled_split(&artifact, &args.test)?;
    let predicted = artifact.predict(&series)?;
    let classes = artifact.meta().classes;
    let mut confusion = vec![vec![0; classes]; classes];
    for (ts, &p) in series.iter().zip(&predicted) {
        let truth = ts.label.expect("loaded series are labeled");
        if truth >= classes {
            return Err(Error::InvalidClass { class: truth, classes }.into());
        }
        confusion[truth][p] += 1;
    }
    let correct = (0..classes).map(|c| confusion[c][c]).sum::<usize>();
    let metrics = Metrics {
        error_rate: 1.0 - correct as f64 / series.len() as f64,
        instances: series.len(),
        correct,
        confusion,
        strides: artifact.meta().strides,
        test: Fingerprint::of("test", &args.test)?,
    };
    let out = args.out.unwrap_or_else(|| args.model.join("metrics.json"));
    std::fs::write(&out, to_json(&metrics)?)?;
    println!("error rate: {}", metrics.error_rate);
    Ok(())
}

#[derive(Serialize)]
struct SeriesReport {
    series: usize,
    predicted_class_index: usize,
    logits: Vec<f64>,
    alpha: Vec<f64>,
    top_patterns: Vec<String>,
    files: Vec<String>,
}

fn explain_with<R: Real>(
    artifact: &TrainedArtifact<R>,
    series: &[(usize, TimeSeries)],
    class: usize,
    score: ClassScore,
    rule: TieRule,
    out: &Path,
) -> Result<Vec<SeriesReport>> {
    let mut reports = Vec::new();
    for (row, ts) in series {
        let ex: Explanation = explain(artifact, ts, class, score, rule)?;
        let stem = format!("series_{row:04}");
        let coarse = &ex.cam.map;
        let sym = &ex.symmetrized;
        let files = vec![
            format!("{stem}_coarse.pgm"),
            format!("{stem}_coarse.ppm"),
            format!("{stem}_symmetrized.pgm"),
            format!("{stem}_symmetrized.ppm"),
            format!("{stem}_significance.csv"),
        ];
        write_pgm(&out.join(&files[0]), &coarse.data, coarse.cols, coarse.rows)?;
        write_ppm(&out.join(&files[1]), &coarse.data, coarse.cols, coarse.rows)?;
        write_pgm(&out.join(&files[2]), &sym.data, sym.cols(), sym.rows())?;
        write_ppm(&out.join(&files[3]), &sym.data, sym.cols(), sym.rows())?;
        write_significance(&out.join(&files[4]), &ex.significance)?;
        let predicted = ex
            .cam
            .logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        reports.push(SeriesReport {
            series: *row,
            predicted_class_index: predicted + 1,
            logits: ex.cam.logits.clone(),
            alpha: ex.cam.alpha.clone(),
            top_patterns: ex.significance.top(2).iter().map(|s| s.to_string()).collect(),
            files,
        });
    }
    Ok(reports)
}

pub fn explain_cmd(args: ExplainArgs) -> CmdResult {
    let artifact = AnyArtifact::load(&args.model)?;
    let meta = artifact.meta().clone();
    if args.class_index == 0 || args.class_index > meta.classes {
        return Err(Error::InvalidArgument(format!(
            "--class-index must be in 1..={}, got {}",
            meta.classes, args.class_index
        ))
        .into());
    }
    let class = args.class_index - 1;
    let score: ClassScore = args.score.parse()?;
    let rule = TieRule::new(args.tie_tolerance)?;
    let split = load_ucr_file(&args.input)?;
    let rows: Vec<(usize, TimeSeries)> = match args.series {
        Some(r) if r == 0 || r > split.series.len() => {
            return Err(Error::OutOfRange(format!(
                "--series {r} outside 1..={}",
                split.series.len()
            ))
            .into())
        }
        Some(r) => vec![(r, split.series[r - 1].clone())],
        None => split.series.iter().cloned().enumerate().map(|(i, s)| (i + 1, s)).collect(),
    };
    let out = out_dir(args.out.clone(), "explain")?;
    std::fs::create_dir_all(&out)?;
    let reports = match &artifact {
        AnyArtifact::F32(a) => explain_with(a, &rows, class, score, rule, &out)?,
        AnyArtifact::F64(a) => explain_with(a, &rows, class, score, rule, &out)?,
    };
    let artifacts = reports.iter().flat_map(|r| r.files.clone()).collect();
    RunManifest {
        command: "explain".into(),
        config: json!({
            "class_index": args.class_index,
            "class_label": meta.class_labels.get(class),
            "score": score,
            "tie_tolerance": rule.tolerance,
            "upsampling": "bilinear-align-corners",
            "n": meta.n,
            "strides": meta.strides,
        }),
        datasets: vec![Fingerprint::of("input", &args.input)?],
        artifacts,
        metrics: serde_json::to_value(&reports).map_err(Error::from)?,
    }
    .write(&out)?;
    for r in &reports {
        println!("series {}: top patterns {}", r.series, r.top_patterns.join(", "));
    }
    Ok(())
}

pub fn gradcheck_cmd(args: GradcheckArgs) -> CmdResult {
    let checks = run_suite(args.seed..args.seed + args.count)?;
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed() { "ok" } else { "FAIL" };
        if !c.passed() {
            failed += 1;
        }
        println!(
            "{status:4} {:<12} seed {:<3} {:<28} {:>6} entries  max rel err {:.3e}",
            c.layer, c.seed, c.shape, c.entries, c.max_rel_error
        );
    }
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} of {} gradient checks failed", checks.len())));
    }
    println!("all {} gradient checks passed", checks.len());
    Ok(())
}

pub fn synth_cmd(args: SynthArgs) -> CmdResult {
    let cfg = SynthConfig {
        classes: args.classes,
        per_class: args.count,
        len: args.length,
        sigma: args.sigma,
        seed: args.seed,
    };
    let series = synthesize_twopatterns(&cfg)?;
    let out = match args.out {
        Some(p) => p,
        None => out_dir(None, "")?.join("synth.tsv"),
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_ucr(&out, &series, None)?;
    println!("wrote {} series to {}", series.len(), out.display());
    Ok(())
}
