//! `chronoline` command-line tool.

mod output;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chronoline::metrics::{self, read_predictions, ranking_scores, EvalReport, TaiConfig};
use chronoline::synthetic::{anchors_to_set, generate, CurveKind, SyntheticSpec};
use chronoline::timeline::{self, InferenceMethod, TimelineConfig, TimelineSpace};
use chronoline::{
    load_embeddings, load_projection_1d, probe_batch, store, to_anchor_set, Projector,
    TimeAnchorSet,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{write_atomic, write_json, write_jsonl};

const THREADS_VAR: &str = "CHRONOLINE_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, source: io::Error },
    Core(chronoline::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) if e.is_io() => 3,
            CliError::Core(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<chronoline::Error> for CliError {
    fn from(e: chronoline::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "chronoline", version, about = "Date embeddings by probing and by timelines fitted through time anchors")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate anchors and queries on a known synthetic manifold.
    GenSynthetic(GenArgs),
    /// Predict years by raw dot product against the time anchors.
    Probe(ProbeArgs),
    /// Project anchors and queries with cosine KPCA and write CSV coordinates.
    Project(ProjectArgs),
    /// Fit a Bézier timeline through the time anchors.
    Fit(FitArgs),
    /// Predict years with a fitted timeline model.
    Predict(PredictArgs),
    /// Score predictions against labelled queries.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct InputOpts {
    /// Keep vectors as read instead of scaling them to unit length.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args, Debug)]
struct YearRange {
    /// First year of the anchor range.
    #[arg(long, default_value_t = 1700, allow_negative_numbers = true)]
    ymin: i32,
    /// Last year of the anchor range.
    #[arg(long, default_value_t = 2024, allow_negative_numbers = true)]
    ymax: i32,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Shape of the generating curve.
    #[arg(long, default_value = "helix", value_parser = parse_kind)]
    kind: CurveKind,
    /// Ambient dimension.
    #[arg(long, default_value_t = 512)]
    dim: usize,
    /// Standard deviation of the query noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Queries generated per year.
    #[arg(long, default_value_t = 1)]
    per_year: usize,
    /// Random seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    years: YearRange,
    #[arg(long)]
    anchors_out: PathBuf,
    #[arg(long)]
    queries_out: PathBuf,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[arg(long)]
    anchors: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[command(flatten)]
    years: YearRange,
    /// Number of ranked years kept per query.
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    input: InputOpts,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    anchors: PathBuf,
    /// Queries to project; when omitted only the anchors are written.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[command(flatten)]
    years: YearRange,
    /// Number of KPCA components.
    #[arg(long, default_value_t = 3)]
    dims: usize,
    /// Also write one row per anchor, with id `T<year>` and label `anchor`.
    #[arg(long)]
    include_anchors: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    input: InputOpts,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SpaceArg {
    Ambient,
    Kpca,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Nn,
    Interp,
}

impl From<MethodArg> for InferenceMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Nn => InferenceMethod::Nn,
            MethodArg::Interp => InferenceMethod::Interp,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    anchors: PathBuf,
    #[command(flatten)]
    years: YearRange,
    /// Space the curve is fitted in.
    #[arg(long, value_enum, default_value_t = SpaceArg::Kpca)]
    space: SpaceArg,
    /// KPCA components (ignored for the ambient space).
    #[arg(long, default_value_t = chronoline::kpca::DEFAULT_DIMS)]
    dims: usize,
    /// Bézier control points taken from the sorted anchors.
    #[arg(long, default_value_t = timeline::DEFAULT_CONTROL_POINTS)]
    control_points: usize,
    /// Points sampled along the curve for closest-point search.
    #[arg(long, default_value_t = timeline::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long)]
    model_out: PathBuf,
    #[command(flatten)]
    input: InputOpts,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Nearest anchor year, or linear interpolation between neighbouring anchors.
    #[arg(long, value_enum, default_value_t = MethodArg::Interp)]
    inference: MethodArg,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    input: InputOpts,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Predictions as JSON Lines with `id` and `y_pred`.
    #[arg(long)]
    pred: PathBuf,
    /// Labelled queries as embedding JSON Lines.
    #[arg(long)]
    truth: PathBuf,
    /// TAI thresholds T(ymin),I(ymin),T(ymax),I(ymax) in years.
    #[arg(long, default_value = "20,50,5,15", value_parser = parse_tai)]
    tai: [f64; 4],
    #[command(flatten)]
    years: YearRange,
    /// Score the chronological order of a fitted model's anchors.
    #[arg(long, conflicts_with = "projection")]
    model: Option<PathBuf>,
    /// Score the chronological order of a `year,value` CSV projection.
    #[arg(long)]
    projection: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_kind(s: &str) -> Result<CurveKind, String> {
    s.parse().map_err(|e: chronoline::Error| e.to_string())
}

fn parse_tai(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated values, got {}", v.len()))
}

fn anchors_from(path: &Path, years: &YearRange, normalize: bool) -> Result<TimeAnchorSet, CliError> {
    let set = load_embeddings(path, normalize)?;
    Ok(to_anchor_set(&set, years.ymin, years.ymax)?)
}

fn gen_synthetic(a: GenArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        dim: a.dim,
        y_min: a.years.ymin,
        y_max: a.years.ymax,
        curve: a.kind,
        noise_sigma: a.sigma,
        queries_per_year: a.per_year,
        seed: a.seed,
    };
    let data = generate(&spec)?;
    let anchors = anchors_to_set(&data.anchors);
    write_atomic(&a.anchors_out, |w| store::write_embeddings(w, &anchors))?;
    write_atomic(&a.queries_out, |w| store::write_embeddings(w, &data.queries))?;
    log::info!(
        "wrote {} anchors and {} queries ({spec:?})",
        anchors.len(),
        data.queries.len()
    );
    Ok(())
}

fn probe_cmd(a: ProbeArgs) -> Result<(), CliError> {
    let normalize = !a.input.no_normalize;
    let anchors = anchors_from(&a.anchors, &a.years, normalize)?;
    let queries = load_embeddings(&a.queries, normalize)?;
    let results = probe_batch(&queries, &anchors, a.top_k)?;
    write_jsonl(&a.out, &results)
}

fn project_cmd(a: ProjectArgs) -> Result<(), CliError> {
    let normalize = !a.input.no_normalize;
    let anchors = anchors_from(&a.anchors, &a.years, normalize)?;
    let projector = Projector::fit(&anchors, a.dims)?;
    let s = projector.s_dim();
    let mut rows: Vec<(String, Option<i32>, Option<String>, Vec<f64>)> = Vec::new();
    if a.include_anchors {
        for ((year, _), coords) in anchors.iter().zip(projector.training_projections()) {
            rows.push((format!("T{year}"), Some(year), Some("anchor".into()), coords));
        }
    }
    if let Some(path) = &a.queries {
        let queries = load_embeddings(path, normalize)?;
        let coords = projector.project_all(&queries)?;
        for (r, c) in queries.records().iter().zip(coords) {
            rows.push((r.id.clone(), r.year, r.label.clone(), c));
        }
    }
    write_atomic(&a.out, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string(), "year".into(), "label".into()];
        header.extend((1..=s).map(|k| format!("c{k}")));
        out.write_record(&header)?;
        for (id, year, label, coords) in &rows {
            let mut rec = vec![
                id.clone(),
                year.map(|y| y.to_string()).unwrap_or_default(),
                label.clone().unwrap_or_default(),
            ];
            rec.extend(coords.iter().map(|c| c.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()
    })
}

fn fit_cmd(a: FitArgs) -> Result<(), CliError> {
    let anchors = anchors_from(&a.anchors, &a.years, !a.input.no_normalize)?;
    let space = match a.space {
        SpaceArg::Ambient => TimelineSpace::Ambient,
        SpaceArg::Kpca => TimelineSpace::Kpca(Box::new(Projector::fit(&anchors, a.dims)?)),
    };
    let config = TimelineConfig {
        control_points: a.control_points,
        samples: a.samples,
    };
    let model = timeline::fit_timeline(&anchors, space, config)?;
    write_atomic(&a.model_out, |w| timeline::write_model(w, &model))?;
    log::info!(
        "fitted {:?} timeline: {} anchors, {} control points, {} samples, curve dim {}",
        a.space,
        anchors.len(),
        model.curve().control_points().len(),
        model.curve().n_samples(),
        model.curve().dim()
    );
    Ok(())
}

fn predict_cmd(a: PredictArgs) -> Result<(), CliError> {
    let model = timeline::load_model(&a.model)?;
    let queries = load_embeddings(&a.queries, !a.input.no_normalize)?;
    let preds = model.predict_batch(&queries, a.inference.into())?;
    write_jsonl(&a.out, &preds)
}

#[derive(Serialize)]
struct EvalParams {
    pred: PathBuf,
    truth: PathBuf,
    tai: TaiConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking_model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking_projection: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalOutput {
    params: EvalParams,
    #[serde(flatten)]
    report: EvalReport,
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<(), CliError> {
    let [t_at_ymin, i_at_ymin, t_at_ymax, i_at_ymax] = a.tai;
    let cfg = TaiConfig {
        t_at_ymin,
        i_at_ymin,
        t_at_ymax,
        i_at_ymax,
        y_min: a.years.ymin,
        y_max: a.years.ymax,
    };
    let file = File::open(&a.pred).map_err(|source| CliError::Io {
        path: a.pred.clone(),
        source,
    })?;
    let preds = read_predictions(BufReader::new(file))?;
    let truths = load_embeddings(&a.truth, false)?;
    let mut report = metrics::evaluate(&preds, &truths, &cfg)?;
    if let Some(path) = &a.model {
        let model = timeline::load_model(path)?;
        let years: Vec<i32> = model.years().collect();
        report.ranking = Some(ranking_scores(&years, model.anchor_params())?);
    } else if let Some(path) = &a.projection {
        let proj = load_projection_1d(path)?;
        let years: Vec<i32> = proj.years().collect();
        report.ranking = Some(ranking_scores(&years, proj.values())?);
    }
    let out = EvalOutput {
        params: EvalParams {
            pred: a.pred,
            truth: a.truth,
            tai: cfg,
            ranking_model: a.model,
            ranking_projection: a.projection,
        },
        report,
    };
    write_json(&a.out, &out)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Probe(a) => probe_cmd(a),
        Command::Project(a) => project_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("CHRONOLINE_LOG")
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
