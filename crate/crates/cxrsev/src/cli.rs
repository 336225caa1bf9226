//! Command-line front end. Exit status: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use cxrsev_core::agreement::{fleiss_kappa, ratings_from_labels};
use cxrsev_core::data::{aggregate_labels, cohort_summary, Aggregation, FeatureTable, GroundTruth, Target};
use cxrsev_core::eval::{run_repeated_eval, scatter_points, EvalConfig, EvalRun, DEFAULT_RATIO, DEFAULT_REPS};
use cxrsev_core::linalg::Matrix;
use cxrsev_core::regress::{design_matrix, FeatureSet, RegressionModel};
use cxrsev_core::saliency::{compose_saliency, gaussian_blur_5x5, render_gray, GradientRaster, DEFAULT_SIGMA};
use cxrsev_core::tsne::{join_embedding, tsne, TsneParams, TsneResult};
use cxrsev_core::Task;

use crate::error::{write_file, Error};
use crate::features::read_features;
use crate::labels::read_labels;
use crate::manifest::{digest_file, Manifest};
use crate::model::{model_to_string, read_model, write_model};
use crate::pgm::write_pgm;
use crate::report::{
    cohort_text, embedding_csv, emit_table, kappa_line, repetitions_csv, scatter_csv, TableFormat, TableRow,
    SKIPPED_NO_INTERMEDIATE,
};
use crate::xgrd::{decode_xgrd, load_gradient_raster, raster_path};

/// Seed used when none is given, so default runs are reproducible.
pub const DEFAULT_SEED: u64 = 2020;

#[derive(Debug, Parser)]
#[command(name = "cxrsev", version, about = "Severity probes on frozen chest X-ray features", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check feature, label and gradient files against their schemas.
    Validate(ValidateArgs),
    /// Image, patient, sex and age counts for a feature file.
    Cohort(CohortArgs),
    /// Fit one probe on every labeled image and save it.
    Fit(FitArgs),
    /// Repeated patient-grouped evaluation; prints a metrics table.
    Evaluate(EvaluateArgs),
    /// Fleiss' kappa of the rater totals.
    Kappa(KappaArgs),
    /// 2-D t-SNE of the four pneumonia-related outputs.
    Tsne(TsneArgs),
    /// Compose, blur and render a saliency map for one image.
    Saliency(SaliencyArgs),
    /// Run the whole study into a dated output directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[group(id = "inputs", required = true, multiple = true)]
struct ValidateArgs {
    #[arg(long, group = "inputs")]
    features: Option<PathBuf>,
    #[arg(long, group = "inputs")]
    labels: Option<PathBuf>,
    /// Directory of `<image_id>.<task>.xgrd` rasters.
    #[arg(long, group = "inputs")]
    grads_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CohortArgs {
    #[arg(long)]
    features: PathBuf,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long, value_parser = feature_set_parser())]
    feature_set: FeatureSet,
    #[arg(long, value_parser = target_parser())]
    target: Target,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    probe: ProbeArgs,
    /// How rater totals are combined into one target per image.
    #[arg(long, default_value = "mean", value_parser = aggregation_parser())]
    aggregation: Aggregation,
    /// Model file to write; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Omit to evaluate every feature set.
    #[arg(long, value_parser = feature_set_parser())]
    feature_set: Option<FeatureSet>,
    /// Omit to evaluate both scales.
    #[arg(long, value_parser = target_parser())]
    target: Option<Target>,
    #[arg(long, default_value_t = DEFAULT_REPS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_RATIO, value_parser = parse_ratio)]
    ratio: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "mean", value_parser = aggregation_parser())]
    aggregation: Aggregation,
    #[arg(long, default_value = "markdown", value_parser = format_parser())]
    format: TableFormat,
    /// Write every repetition's metrics here.
    #[arg(long)]
    dump_reps: Option<PathBuf>,
    /// Write truth-vs-prediction rows for repetition 0's test images.
    #[arg(long, requires_all = ["feature_set", "target"])]
    scatter: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KappaArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "both", value_parser = ["extent", "opacity", "both"])]
    scale: String,
}

#[derive(Debug, Args)]
struct TsneFlags {
    #[arg(long, default_value_t = 30.0, value_parser = parse_positive)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    iters: u64,
    #[arg(long, default_value_t = 200.0, value_parser = parse_positive)]
    learning_rate: f64,
}

#[derive(Debug, Args)]
struct TsneArgs {
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    tsne: TsneFlags,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Extent model whose predictions are joined to the coordinates.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Embedding file to write; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SaliencyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    grads_dir: PathBuf,
    #[arg(long)]
    image_id: String,
    #[arg(long, default_value_t = DEFAULT_SIGMA, value_parser = parse_positive)]
    sigma: f64,
    /// Take absolute values after composing, before blurring.
    #[arg(long)]
    abs: bool,
    /// Graymap (P5) to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Parent directory; results go to `<out>/<date>/`.
    #[arg(long)]
    out: PathBuf,
    /// Date for the output directory name (YYYY-MM-DD); today when omitted.
    #[arg(long, value_parser = parse_date)]
    date: Option<String>,
    #[arg(long, default_value_t = DEFAULT_REPS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_RATIO, value_parser = parse_ratio)]
    ratio: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "mean", value_parser = aggregation_parser())]
    aggregation: Aggregation,
    #[command(flatten)]
    tsne: TsneFlags,
}

fn feature_set_parser() -> impl TypedValueParser<Value = FeatureSet> {
    PossibleValuesParser::new(FeatureSet::ALL.map(FeatureSet::as_str))
        .map(|s| s.parse().expect("listed value"))
}

fn target_parser() -> impl TypedValueParser<Value = Target> {
    PossibleValuesParser::new(["extent", "opacity"]).map(|s| s.parse().expect("listed value"))
}

fn aggregation_parser() -> impl TypedValueParser<Value = Aggregation> {
    PossibleValuesParser::new(["mean", "median"]).map(|s| s.parse().expect("listed value"))
}

fn format_parser() -> impl TypedValueParser<Value = TableFormat> {
    PossibleValuesParser::new(["markdown", "csv"]).map(|s| match s.as_str() {
        "csv" => TableFormat::Csv,
        _ => TableFormat::Markdown,
    })
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err("must be a number strictly between 0 and 1".into()),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err("must be a positive number".into()),
    }
}

fn parse_date(s: &str) -> Result<String, String> {
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.format("%Y-%m-%d").to_string())
        .map_err(|_| "expected YYYY-MM-DD".into())
}

/// A data error; usage errors never get past argument parsing.
enum Failure {
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<cxrsev_core::Error> for Failure {
    fn from(e: cxrsev_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => validate(a, out, err),
        Command::Cohort(a) => cohort(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Kappa(a) => kappa(a, out),
        Command::Tsne(a) => tsne_cmd(a, out, err),
        Command::Saliency(a) => saliency(a, err),
        Command::Report(a) => report(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_file(p, text.as_bytes())?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("standard output: {e}")))?,
    }
    Ok(())
}

fn validate(a: ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut text = String::new();
    let table = match &a.features {
        Some(p) => {
            let t = read_features(p)?;
            let s = cohort_summary(&t);
            text.push_str(&format!(
                "features: {} images, {} patients, intermediate block {}\n",
                s.n_images,
                s.n_patients,
                if t.has_intermediate() { "present" } else { "absent" }
            ));
            Some(t)
        }
        None => None,
    };
    if let Some(p) = &a.labels {
        let labels = read_labels(p)?;
        let by_image = labels.by_image();
        text.push_str(&format!("labels: {} ratings over {} images\n", labels.len(), by_image.len()));
        if let Some(t) = &table {
            let missing: Vec<&str> = by_image.iter().map(|(id, _)| *id).filter(|id| t.get(id).is_none()).collect();
            if !missing.is_empty() {
                let _ = writeln!(
                    err,
                    "warning: {} labeled images have no feature row (first: `{}`)",
                    missing.len(),
                    missing[0]
                );
            }
        }
    }
    if let Some(dir) = &a.grads_dir {
        let n = validate_grads_dir(dir)?;
        text.push_str(&format!("gradients: {n} rasters\n"));
    }
    emit(out, None, &text)?;
    Ok(0)
}

fn validate_grads_dir(dir: &Path) -> Result<usize, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "xgrd"))
        .collect();
    names.sort();
    for p in &names {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let task_ok = stem.rsplit_once('.').is_some_and(|(_, t)| t.parse::<Task>().is_ok());
        if !task_ok {
            return Err(Failure::Data(format!(
                "{}: expected a name of the form <image_id>.<task>.xgrd",
                p.display()
            )));
        }
        decode_xgrd(&crate::error::read_file(p)?, &p.display().to_string())?;
    }
    Ok(names.len())
}

fn cohort(a: CohortArgs, out: &mut dyn Write) -> CmdResult {
    let t = read_features(&a.features)?;
    emit(out, None, &cohort_text(&cohort_summary(&t)))?;
    Ok(0)
}

fn load_truth(labels: &Path, aggregation: Aggregation) -> Result<Vec<GroundTruth>, Failure> {
    Ok(aggregate_labels(&read_labels(labels)?, aggregation)?)
}

/// Fits on every labeled image.
fn fit_all(table: &FeatureTable, truth: &[GroundTruth], fs: FeatureSet, target: Target) -> Result<RegressionModel, Failure> {
    let ids: Vec<&str> = truth.iter().map(|g| g.image_id.as_str()).collect();
    let x = design_matrix(table, fs, &ids)?;
    let y: Vec<f64> = truth.iter().map(|g| g.value(target)).collect();
    Ok(RegressionModel::fit(fs, target, &x, &y)?)
}

fn fit(a: FitArgs, out: &mut dyn Write) -> CmdResult {
    let table = read_features(&a.features)?;
    let truth = load_truth(&a.labels, a.aggregation)?;
    let model = fit_all(&table, &truth, a.probe.feature_set, a.probe.target)?;
    match &a.out {
        Some(p) => write_model(p, &model)?,
        None => emit(out, None, &model_to_string(&model))?,
    }
    Ok(0)
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> CmdResult {
    let table = read_features(&a.features)?;
    let truth = load_truth(&a.labels, a.aggregation)?;
    let config = EvalConfig {
        n_reps: a.reps as usize,
        ratio: a.ratio,
        seed: a.seed,
    };
    let sets: Vec<FeatureSet> = a.feature_set.map_or(FeatureSet::ALL.to_vec(), |f| vec![f]);
    let targets: Vec<Target> = a.target.map_or(Target::ALL.to_vec(), |t| vec![t]);

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &target in &targets {
        for &fs in &sets {
            if fs == FeatureSet::Intermediate1024 && !table.has_intermediate() && a.feature_set.is_none() {
                rows.push(TableRow::Skipped {
                    target,
                    feature_set: fs,
                    reason: SKIPPED_NO_INTERMEDIATE.into(),
                });
                continue;
            }
            let run = run_repeated_eval(&table, &truth, fs, target, config)?;
            rows.push(TableRow::Done(run.summary.clone()));
            runs.push(run);
        }
    }
    if let Some(p) = &a.dump_reps {
        write_file(p, repetitions_csv(&runs.iter().collect::<Vec<_>>())?.as_bytes())?;
    }
    if let (Some(p), Some(run)) = (&a.scatter, runs.first()) {
        let points = scatter_points(&truth, &run.repetitions[0].predictions(), run.summary.target)?;
        write_file(p, scatter_csv(&points)?.as_bytes())?;
    }
    emit(out, None, &emit_table(&rows, a.format)?)?;
    Ok(0)
}

fn kappa(a: KappaArgs, out: &mut dyn Write) -> CmdResult {
    let labels = read_labels(&a.labels)?;
    let scales: Vec<Target> = match a.scale.as_str() {
        "extent" => vec![Target::Extent],
        "opacity" => vec![Target::Opacity],
        _ => Target::ALL.to_vec(),
    };
    let mut text = String::new();
    for scale in scales {
        let m = ratings_from_labels(&labels, scale)?;
        let k = fleiss_kappa(&m).map_err(|e| Failure::Data(format!("{}: {e}", scale.as_str())))?;
        text.push_str(&kappa_line(scale, k, &m));
        text.push('\n');
    }
    emit(out, None, &text)?;
    Ok(0)
}

fn tsne_params(flags: &TsneFlags, seed: u64) -> TsneParams {
    TsneParams {
        perplexity: flags.perplexity,
        n_iter: flags.iters as usize,
        learning_rate: flags.learning_rate,
        seed,
        ..TsneParams::default()
    }
}

/// Embeds every image by its four pneumonia-related outputs.
fn embed(table: &FeatureTable, params: &TsneParams) -> Result<(Vec<String>, TsneResult), Failure> {
    let ids: Vec<String> = table.rows().iter().map(|r| r.record.image_id.clone()).collect();
    let x: Matrix = design_matrix(table, FeatureSet::Pneumonia4, &ids)?;
    Ok((ids, tsne(&x, params)?))
}

fn predict_all(table: &FeatureTable, model: &RegressionModel) -> Result<BTreeMap<String, f64>, Failure> {
    let ids: Vec<String> = table.rows().iter().map(|r| r.record.image_id.clone()).collect();
    let preds = model.predict(&design_matrix(table, model.feature_set, &ids)?)?;
    Ok(ids.into_iter().zip(preds).collect())
}

fn tsne_cmd(a: TsneArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let table = read_features(&a.features)?;
    let predictions = match &a.model {
        Some(p) => {
            let model = read_model(p)?;
            if model.target != Target::Extent {
                return Err(Failure::Data(format!(
                    "{}: the embedding joins predicted extent, but this model predicts {}",
                    p.display(),
                    model.target
                )));
            }
            Some(predict_all(&table, &model)?)
        }
        None => None,
    };
    let (ids, result) = embed(&table, &tsne_params(&a.tsne, a.seed))?;
    let _ = writeln!(err, "kl: {:.6} after exaggeration, {:.6} final", result.kl_start, result.kl_final);
    let rows = join_embedding(&table, &ids, &result.coords, predictions.as_ref())?;
    emit(out, a.out.as_deref(), &embedding_csv(&rows, predictions.is_some())?)?;
    Ok(0)
}

fn load_rasters(dir: &Path, image_id: &str, model: &RegressionModel) -> Result<BTreeMap<Task, GradientRaster>, Failure> {
    let mut grads = BTreeMap::new();
    let tasks: Vec<Task> = if model.feature_set == FeatureSet::None {
        // Any raster of the image fixes the output shape.
        Task::ALL.iter().copied().filter(|&t| raster_path(dir, image_id, t).exists()).take(1).collect()
    } else {
        model.feature_set.tasks().to_vec()
    };
    for task in tasks {
        let path = raster_path(dir, image_id, task);
        if !path.exists() {
            return Err(Failure::Data(format!("missing gradient raster {}", path.display())));
        }
        grads.insert(task, load_gradient_raster(&path, image_id, task)?);
    }
    if grads.is_empty() {
        return Err(Failure::Data(format!(
            "no gradient rasters for image `{image_id}` in {}",
            dir.display()
        )));
    }
    Ok(grads)
}

fn saliency(a: SaliencyArgs, err: &mut dyn Write) -> CmdResult {
    let model = read_model(&a.model)?;
    if model.feature_set == FeatureSet::Intermediate1024 {
        return Err(Failure::Data(
            "saliency composes output gradients; an intermediate1024 model has none".into(),
        ));
    }
    let grads = load_rasters(&a.grads_dir, &a.image_id, &model)?;
    let mut map = compose_saliency(&model, &grads)?;
    if a.abs {
        map = map.abs();
    }
    let img = render_gray(&gaussian_blur_5x5(&map, a.sigma)?)?;
    if img.degenerate {
        let _ = writeln!(err, "warning: saliency map for `{}` is constant; rendered as mid-gray 128", a.image_id);
    }
    write_pgm(&a.out, &img)?;
    Ok(0)
}

fn report(a: ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let date = a
        .date
        .clone()
        .unwrap_or_else(|| chrono::Local::now().date_naive().format("%Y-%m-%d").to_string());
    let table = read_features(&a.features)?;
    let labels = read_labels(&a.labels)?;
    let truth = aggregate_labels(&labels, a.aggregation)?;
    let dir = a.out.join(&date);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let mut manifest = Manifest::new("report", &date);
    manifest.inputs.push(digest_file("features", &a.features)?);
    manifest.inputs.push(digest_file("labels", &a.labels)?);
    let params = tsne_params(&a.tsne, a.seed);
    manifest.param("seed", a.seed);
    manifest.param("reps", a.reps);
    manifest.param("ratio", a.ratio);
    manifest.param("aggregation", a.aggregation.as_str());
    manifest.param("tsne_perplexity", params.perplexity);
    manifest.param("tsne_iters", params.n_iter as u64);
    manifest.param("tsne_learning_rate", params.learning_rate);
    manifest.param("tsne_seed", params.seed);

    let put = |manifest: &mut Manifest, name: &str, text: &str| -> Result<(), Failure> {
        write_file(&dir.join(name), text.as_bytes())?;
        manifest.outputs.push(name.to_string());
        Ok(())
    };

    put(&mut manifest, "cohort.txt", &cohort_text(&cohort_summary(&table)))?;

    let config = EvalConfig {
        n_reps: a.reps as usize,
        ratio: a.ratio,
        seed: a.seed,
    };
    let mut rows = Vec::new();
    let mut runs: Vec<EvalRun> = Vec::new();
    for target in Target::ALL {
        for fs in FeatureSet::ALL {
            if fs == FeatureSet::Intermediate1024 && !table.has_intermediate() {
                rows.push(TableRow::Skipped {
                    target,
                    feature_set: fs,
                    reason: SKIPPED_NO_INTERMEDIATE.into(),
                });
                continue;
            }
            match run_repeated_eval(&table, &truth, fs, target, config) {
                Ok(run) => {
                    rows.push(TableRow::Done(run.summary.clone()));
                    runs.push(run);
                }
                Err(e) => {
                    manifest.fail(&format!("evaluate {target} {fs}"), &e);
                    rows.push(TableRow::Skipped {
                        target,
                        feature_set: fs,
                        reason: format!("failed: {e}"),
                    });
                }
            }
        }
    }
    put(&mut manifest, "table.md", &emit_table(&rows, TableFormat::Markdown)?)?;
    put(&mut manifest, "table.csv", &emit_table(&rows, TableFormat::Csv)?)?;
    put(&mut manifest, "repetitions.csv", &repetitions_csv(&runs.iter().collect::<Vec<_>>())?)?;

    for (target, name) in [(Target::Extent, "scatter.csv"), (Target::Opacity, "scatter_opacity.csv")] {
        let run = runs
            .iter()
            .find(|r| r.summary.target == target && r.summary.feature_set == FeatureSet::Opacity1);
        if let Some(run) = run {
            match scatter_points(&truth, &run.repetitions[0].predictions(), target) {
                Ok(points) => put(&mut manifest, name, &scatter_csv(&points)?)?,
                Err(e) => manifest.fail(name, &e),
            }
        }
    }

    let mut kappa_txt = String::new();
    for scale in Target::ALL {
        match ratings_from_labels(&labels, scale).and_then(|m| fleiss_kappa(&m).map(|k| kappa_line(scale, k, &m))) {
            Ok(line) => kappa_txt.push_str(&line),
            Err(e) => {
                manifest.fail(&format!("kappa {scale}"), &e);
                kappa_txt.push_str(&format!("{}: undefined ({e})", scale.as_str()));
            }
        }
        kappa_txt.push('\n');
    }
    put(&mut manifest, "kappa.txt", &kappa_txt)?;

    let extent_model = match fit_all(&table, &truth, FeatureSet::Opacity1, Target::Extent) {
        Ok(m) => {
            put(&mut manifest, "model_extent.txt", &model_to_string(&m))?;
            Some(m)
        }
        Err(Failure::Data(e)) => {
            manifest.fail("fit extent", &e);
            None
        }
    };
    let predictions = match &extent_model {
        Some(m) => predict_all(&table, m).ok(),
        None => None,
    };
    match embed(&table, &params) {
        Ok((ids, result)) => {
            let rows = join_embedding(&table, &ids, &result.coords, predictions.as_ref())?;
            put(&mut manifest, "embedding.csv", &embedding_csv(&rows, predictions.is_some())?)?;
            manifest.param("tsne_kl_final", result.kl_final);
        }
        Err(Failure::Data(e)) => manifest.fail("tsne", &e),
    }

    manifest.outputs.push("manifest.json".into());
    write_file(&dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    let _ = writeln!(out, "{}", dir.display());
    if manifest.failures.is_empty() {
        Ok(0)
    } else {
        for (step, e) in &manifest.failures {
            let _ = writeln!(err, "error: {step}: {e}");
        }
        Ok(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    fn status(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("cxrsev").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(status(&[]).0, 1);
        assert_eq!(status(&["frobnicate"]).0, 1);
        assert_eq!(status(&["kappa"]).0, 1);
        assert_eq!(status(&["kappa", "--labels", "x", "--bogus"]).0, 1);
        assert_eq!(status(&["evaluate", "--features", "f", "--labels", "l", "--ratio", "1.5"]).0, 1);
        assert_eq!(status(&["evaluate", "--features", "f", "--labels", "l", "--reps", "0"]).0, 1);
        assert_eq!(status(&["evaluate", "--features", "f", "--labels", "l", "--feature-set", "opacity2"]).0, 1);
        assert_eq!(status(&["evaluate", "--features", "f", "--labels", "l", "--scatter", "s.csv"]).0, 1);
        assert_eq!(status(&["report", "--features", "f", "--labels", "l", "--out", "o", "--date", "May 1"]).0, 1);
        assert_eq!(status(&["validate"]).0, 1);
    }

    #[test]
    fn help_and_version_exit_zero() {
        let (code, out, _) = status(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("evaluate"));
        assert_eq!(status(&["--version"]).0, 0);
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let (code, _, err) = status(&["cohort", "--features", "/nonexistent/features.csv"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/features.csv"), "{err}");
    }
}
