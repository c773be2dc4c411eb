use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use time2cluster::eval::{evaluate, robustness_sweep, sensitivity_sweep, KsRule};
use time2cluster::profile::DEFAULT_MEMORY_CAP;
use time2cluster::synthgen::{scenario, ScenarioName};
use time2cluster::window::{variable_window_with, MovingDistCurve, WindowFinder};
use time2cluster::{
    elbow_sweep, expand_labels, Error as CoreError, KMeansConfig, Method, RngSeed, Time2Cluster,
    TimeSeries, WindowEstimate,
};
use time2cluster_cli::report::{parse_bytes, read_labels, write_csv, write_json, write_labels};
use time2cluster_cli::{ingest_csv, project_2d, CliError, ColumnSelector, Result, RunConfig};

#[derive(Parser)]
#[command(name = "t2c", version, about = "Subsequence time-series clustering")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Memory cap for the correlation matrix, in bytes (K, M, G suffixes allowed).
    #[arg(long, global = true, value_parser = parse_mem_cap)]
    mem_cap: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Correlation matrix construction.
    #[arg(long, global = true, default_value = "fast")]
    method: Method,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster every subsequence and label every timepoint.
    Cluster(ClusterArgs),
    /// Estimate the window size from the moving-average deviation curve.
    Window(WindowArgs),
    /// Score a labels.csv against ground truth.
    Eval(EvalArgs),
    /// Inertia for a range of K.
    Elbow(ElbowArgs),
    /// Macro-F1 across window sizes.
    Sensitivity(SensitivityArgs),
    /// Macro-F1 under spike contamination.
    Robustness(RobustnessArgs),
    /// Write a labelled synthetic scenario to CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with one observation per row.
    #[arg(long, short)]
    input: PathBuf,
    /// Value column, by header name or 0-based index.
    #[arg(long)]
    column: Option<ColumnSelector>,
    /// Ground-truth label column.
    #[arg(long)]
    label_column: Option<ColumnSelector>,
    /// Keep every stride-th point before processing.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args)]
struct KMeansArgs {
    /// Number of clusters.
    #[arg(long, short, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Subsequence length (default: estimated by the window finder).
    #[arg(long, short)]
    m: Option<usize>,
    /// Kernel size, the number of subsequences per bag (default: m).
    #[arg(long)]
    ks: Option<usize>,
    #[command(flatten)]
    kmeans: KMeansArgs,
    /// Also write the 2-D projection of the augmented matrix rows.
    #[arg(long)]
    pca: bool,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct WindowArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Smallest window tried.
    #[arg(long, default_value_t = time2cluster::window::DEFAULT_START)]
    start: usize,
    /// Largest window tried (default: grows until enough valleys appear).
    #[arg(long)]
    max_window: Option<usize>,
    /// Estimate separately over consecutive batches.
    #[arg(long)]
    variable: bool,
    #[arg(long, default_value_t = time2cluster::window::DEFAULT_BATCH_LENGTH)]
    batch: usize,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// labels.csv written by `cluster`.
    #[arg(long)]
    labels: PathBuf,
    /// CSV holding the true label of every original timepoint.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value = "label")]
    truth_column: ColumnSelector,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ElbowArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, short)]
    m: usize,
    #[arg(long)]
    ks: Option<usize>,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated window sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    m_values: Vec<usize>,
    /// `same`, `scaled:<factor>` or `fixed:<ks>`.
    #[arg(long, default_value = "same", value_parser = parse_ks_rule)]
    ks_rule: KsRule,
    #[command(flatten)]
    kmeans: KMeansArgs,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RobustnessArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, short)]
    m: usize,
    #[arg(long)]
    ks: Option<usize>,
    #[command(flatten)]
    kmeans: KMeansArgs,
    /// Comma-separated spike fractions.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.0025,0.005,0.0075,0.01"
    )]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    /// Spike height in standard deviations.
    #[arg(long, default_value_t = time2cluster::eval::DEFAULT_SPIKE_MAGNITUDE)]
    magnitude: f64,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// walkrun, walkrunplay, stairs, tilt or noisetail.
    scenario: ScenarioName,
    /// Output CSV (default: <scenario>.csv).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_mem_cap(s: &str) -> Result<u64> {
    parse_bytes(s)
}

fn parse_ks_rule(s: &str) -> Result<KsRule> {
    let bad = || {
        CliError::invalid(format!(
            "bad ks rule '{s}', expected same, scaled:<f> or fixed:<n>"
        ))
    };
    match s.split_once(':') {
        None if s == "same" => Ok(KsRule::SameAsWindow),
        Some(("scaled", f)) => f
            .parse::<f64>()
            .ok()
            .filter(|f| f.is_finite() && *f > 0.0)
            .map(KsRule::Scaled)
            .ok_or_else(bad),
        Some(("fixed", n)) => n
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(KsRule::Fixed)
            .ok_or_else(bad),
        _ => Err(bad()),
    }
}

struct Globals {
    seed: RngSeed,
    mem_cap: u64,
    threads: Option<usize>,
    method: Method,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = Globals {
        seed: RngSeed(cli.seed),
        mem_cap: cli.mem_cap.unwrap_or(DEFAULT_MEMORY_CAP),
        threads: cli.threads,
        method: cli.method,
    };
    match run(cli.command, &globals) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command, g: &Globals) -> Result<()> {
    if let Some(threads) = g.threads {
        if threads == 0 {
            return Err(CliError::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Resource(format!("cannot start thread pool: {e}")))?;
    }
    match command {
        Command::Cluster(args) => cluster(args, g),
        Command::Window(args) => window(args),
        Command::Eval(args) => eval(args),
        Command::Elbow(args) => elbow(args, g),
        Command::Sensitivity(args) => sensitivity(args, g),
        Command::Robustness(args) => robustness(args, g),
        Command::Synth(args) => synth(args, g),
    }
}

struct Loaded {
    series: TimeSeries,
    labels: Option<Vec<usize>>,
}

fn load(args: &InputArgs) -> Result<Loaded> {
    if args.stride == 0 {
        return Err(CliError::invalid("--stride must be at least 1"));
    }
    let data = ingest_csv(
        &args.input,
        args.column.as_ref(),
        args.label_column.as_ref(),
    )?;
    let series = data.series.downsample(args.stride)?;
    let labels = data
        .labels
        .map(|l| l.labels.into_iter().step_by(args.stride).collect());
    Ok(Loaded { series, labels })
}

fn require_labels(loaded: &Loaded) -> Result<&[usize]> {
    loaded
        .labels
        .as_deref()
        .ok_or_else(|| CliError::invalid("this command needs ground truth; pass --label-column"))
}

fn out_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    Ok(dir)
}

fn check_window(m: usize, n: usize) -> Result<()> {
    if m < 2 || m > n {
        return Err(CliError::invalid(format!(
            "subsequence length m = {m} must satisfy 2 <= m <= n = {n}"
        )));
    }
    Ok(())
}

fn kmeans_config(args: &KMeansArgs, seed: RngSeed) -> KMeansConfig {
    KMeansConfig::new(args.k)
        .with_seed(seed)
        .with_restarts(args.restarts)
        .with_max_iters(args.max_iters)
}

#[derive(Serialize)]
struct Timings {
    ingest_ms: f64,
    window_ms: f64,
    correlation_ms: f64,
    augment_ms: f64,
    kmeans_ms: f64,
    confidence_ms: f64,
    expand_ms: f64,
    pca_ms: f64,
    total_ms: f64,
}

#[derive(Serialize)]
struct WindowSummary {
    window: f64,
    confidence: f64,
    valleys: Vec<usize>,
}

#[derive(Serialize)]
struct PcaSummary {
    variances: [f64; 2],
    iterations: [usize; 2],
    residuals: [f64; 2],
}

#[derive(Serialize)]
struct ClusterReport {
    config: RunConfig,
    n: usize,
    subsequences: usize,
    inertia: f64,
    iterations: usize,
    restart_inertias: Vec<f64>,
    cluster_sizes: Vec<usize>,
    empty_repairs: usize,
    non_monotone_steps: usize,
    mean_confidence: f64,
    window_estimate: Option<WindowSummary>,
    pca: Option<PcaSummary>,
    metrics: Option<time2cluster::MetricsReport>,
    timings: Timings,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn cluster(args: ClusterArgs, g: &Globals) -> Result<()> {
    let started = Instant::now();
    let loaded = load(&args.input)?;
    let ts = &loaded.series;
    let ingest_ms = ms(started);

    let clock = Instant::now();
    let (m, estimate) = match args.m {
        Some(m) => (m, None),
        None => {
            let est = WindowFinder::default().find(ts).map_err(|e| match e {
                CoreError::NoPeriodicity { .. } => {
                    CliError::invalid(format!("{e}; pass the subsequence length with --m"))
                }
                other => other.into(),
            })?;
            ((est.window.round() as usize).max(2), Some(est))
        }
    };
    let window_ms = ms(clock);
    let config = RunConfig {
        input: args.input.input.clone(),
        value_column: args.input.column.clone(),
        label_column: args.input.label_column.clone(),
        m,
        m_source: if estimate.is_some() {
            "window-finder"
        } else {
            "given"
        }
        .to_string(),
        ks: args.ks.unwrap_or(m),
        k: args.kmeans.k,
        seed: g.seed,
        stride: args.input.stride,
        out_dir: args.out.clone(),
        mem_cap: g.mem_cap,
        method: g.method,
        threads: g.threads,
        restarts: args.kmeans.restarts,
        max_iters: args.kmeans.max_iters,
        pca: args.pca,
    };
    config.validate()?;
    check_window(m, ts.len())?;
    let dir = out_dir(&args.out)?;

    let pipeline = Time2Cluster::new(m, config.ks, kmeans_config(&args.kmeans, g.seed))
        .with_method(g.method)
        .with_memory_cap(g.mem_cap);
    let run = pipeline.run(ts)?;
    let result = &run.result;

    let clock = Instant::now();
    let expanded = expand_labels(&result.labels, &result.confidence, ts.len(), m)?;
    let expand_ms = ms(clock);
    write_labels(
        &dir.join("labels.csv"),
        &result.labels,
        &expanded,
        config.stride,
    )?;

    let clock = Instant::now();
    let pca = if args.pca {
        let proj = project_2d(&run.augmented)?;
        write_csv(
            &dir.join("pca.csv"),
            proj.coords.iter().enumerate().map(|(i, c)| PcaRow {
                index: i * config.stride,
                subseq_label: result.labels[i],
                pc1: c[0],
                pc2: c[1],
            }),
        )?;
        Some(PcaSummary {
            variances: proj.variances,
            iterations: proj.iterations,
            residuals: proj.residuals,
        })
    } else {
        None
    };
    let pca_ms = ms(clock);

    let metrics = loaded
        .labels
        .as_deref()
        .map(|truth| evaluate(truth, &expanded.labels))
        .transpose()?;
    let t = run.timings;
    let report = ClusterReport {
        n: ts.len(),
        subsequences: result.labels.len(),
        inertia: result.inertia,
        iterations: result.iterations_run,
        restart_inertias: result.diagnostics.restart_inertias.clone(),
        cluster_sizes: result.cluster_sizes(),
        empty_repairs: result.diagnostics.empty_repairs,
        non_monotone_steps: result.diagnostics.non_monotone_steps,
        mean_confidence: result.confidence.iter().sum::<f64>() / result.confidence.len() as f64,
        window_estimate: estimate.map(|e: WindowEstimate| WindowSummary {
            window: e.window,
            confidence: e.confidence,
            valleys: e.curve.valley_windows(),
        }),
        pca,
        metrics,
        timings: Timings {
            ingest_ms,
            window_ms,
            correlation_ms: t.correlation_ms,
            augment_ms: t.augment_ms,
            kmeans_ms: t.kmeans_ms,
            confidence_ms: t.confidence_ms,
            expand_ms,
            pca_ms,
            total_ms: ms(started),
        },
        config,
    };
    write_json(&dir.join("report.json"), &report)
}

#[derive(Serialize)]
struct PcaRow {
    index: usize,
    subseq_label: usize,
    pc1: f64,
    pc2: f64,
}

#[derive(Serialize)]
struct CurveRow {
    batch_start: usize,
    w: usize,
    score: f64,
    local_minimum: bool,
    valley: bool,
    depth: Option<f64>,
}

fn curve_rows(batch_start: usize, curve: &MovingDistCurve) -> Vec<CurveRow> {
    curve
        .w_values
        .iter()
        .zip(&curve.scores)
        .enumerate()
        .map(|(i, (&w, &score))| {
            let minimum = curve.local_minima.iter().position(|&j| j == i);
            CurveRow {
                batch_start,
                w,
                score,
                local_minimum: minimum.is_some(),
                valley: curve.valleys.contains(&i),
                depth: minimum.map(|p| curve.depths[p]),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct WindowReport {
    n: usize,
    stride: usize,
    window: Option<f64>,
    confidence: Option<f64>,
    residuals: Vec<f64>,
    valleys: Vec<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BatchReport {
    start: usize,
    end: usize,
    window: Option<f64>,
    confidence: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct VariableReport {
    n: usize,
    stride: usize,
    batch_length: usize,
    batches: Vec<BatchReport>,
}

fn window(args: WindowArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let ts = &loaded.series;
    let dir = out_dir(&args.out)?;
    let finder = WindowFinder {
        start: args.start,
        max_window: args.max_window,
        ..WindowFinder::default()
    };
    let stride = args.input.stride;
    if args.variable {
        let meta = variable_window_with(ts, args.batch, finder)?;
        let mut rows = Vec::new();
        for b in &meta.batches {
            if let Some(e) = &b.estimate {
                rows.extend(curve_rows(b.start, &e.curve));
            }
        }
        write_csv(&dir.join("movingdist.csv"), rows)?;
        let report = VariableReport {
            n: ts.len(),
            stride,
            batch_length: meta.batch_length,
            batches: meta
                .batches
                .iter()
                .map(|b| BatchReport {
                    start: b.start,
                    end: b.end,
                    window: b.estimate.as_ref().map(|e| e.window),
                    confidence: b.estimate.as_ref().map(|e| e.confidence),
                    error: b.error.clone(),
                })
                .collect(),
        };
        return write_json(&dir.join("window.json"), &report);
    }
    let report = match finder.find(ts) {
        Ok(est) => {
            write_csv(&dir.join("movingdist.csv"), curve_rows(0, &est.curve))?;
            WindowReport {
                n: ts.len(),
                stride,
                window: Some(est.window),
                confidence: Some(est.confidence),
                valleys: est.curve.valley_windows(),
                residuals: est.residuals,
                error: None,
            }
        }
        Err(CoreError::NoPeriodicity {
            found,
            max_window,
            curve,
        }) => {
            write_csv(&dir.join("movingdist.csv"), curve_rows(0, &curve))?;
            let msg = CoreError::NoPeriodicity {
                found,
                max_window,
                curve,
            }
            .to_string();
            eprintln!("warning: {msg}");
            WindowReport {
                n: ts.len(),
                stride,
                window: None,
                confidence: None,
                residuals: Vec::new(),
                valleys: Vec::new(),
                error: Some(msg),
            }
        }
        Err(e) => return Err(e.into()),
    };
    write_json(&dir.join("window.json"), &report)
}

#[derive(Serialize)]
struct EvalReport {
    labels: PathBuf,
    truth: PathBuf,
    points: usize,
    #[serde(flatten)]
    metrics: time2cluster::MetricsReport,
}

fn eval(args: EvalArgs) -> Result<()> {
    let pred = read_labels(&args.labels)?;
    let truth = ingest_csv(
        &args.truth,
        Some(&args.truth_column),
        Some(&args.truth_column),
    )?
    .labels
    .expect("label column requested");
    let mut t = Vec::with_capacity(pred.len());
    let mut p = Vec::with_capacity(pred.len());
    for &(index, label) in &pred {
        let Some(&true_label) = truth.labels.get(index) else {
            return Err(CliError::invalid(format!(
                "labels refer to index {index} but the truth has {} rows",
                truth.len()
            )));
        };
        t.push(true_label);
        p.push(label);
    }
    let report = EvalReport {
        labels: args.labels,
        truth: args.truth,
        points: t.len(),
        metrics: evaluate(&t, &p)?,
    };
    write_json(&out_dir(&args.out)?.join("metrics.json"), &report)
}

#[derive(Serialize)]
struct ElbowRow {
    k: usize,
    inertia: f64,
}

fn elbow(args: ElbowArgs, g: &Globals) -> Result<()> {
    let loaded = load(&args.input)?;
    check_window(args.m, loaded.series.len())?;
    if args.k_min == 0 || args.k_min > args.k_max {
        return Err(CliError::invalid("need 1 <= --k-min <= --k-max"));
    }
    let ks: Vec<usize> = (args.k_min..=args.k_max).collect();
    let cfg = KMeansConfig::new(1)
        .with_seed(g.seed)
        .with_restarts(args.restarts);
    let curve = time2cluster_elbow(
        &loaded.series,
        args.m,
        args.ks.unwrap_or(args.m),
        &ks,
        &cfg,
        g,
    )?;
    if !curve.non_monotone.is_empty() {
        eprintln!("warning: inertia rises at K = {:?}", curve.non_monotone);
    }
    let rows = curve
        .k_values
        .iter()
        .zip(&curve.inertias)
        .map(|(&k, &inertia)| ElbowRow { k, inertia });
    write_csv(&out_dir(&args.out)?.join("elbow.csv"), rows)
}

fn time2cluster_elbow(
    ts: &TimeSeries,
    m: usize,
    ks: usize,
    k_values: &[usize],
    cfg: &KMeansConfig,
    g: &Globals,
) -> Result<time2cluster::ElbowCurve> {
    if g.method == Method::Fast && g.mem_cap == DEFAULT_MEMORY_CAP {
        return Ok(elbow_sweep(ts, m, ks, k_values, cfg)?);
    }
    let pipeline = Time2Cluster::new(m, ks, *cfg)
        .with_method(g.method)
        .with_memory_cap(g.mem_cap);
    let (aug, _) = pipeline.augmented(ts)?;
    Ok(time2cluster::cluster::elbow_sweep_augmented(
        &aug, k_values, cfg,
    )?)
}

fn sensitivity(args: SensitivityArgs, g: &Globals) -> Result<()> {
    let loaded = load(&args.input)?;
    let truth = require_labels(&loaded)?;
    for &m in &args.m_values {
        check_window(m, loaded.series.len())?;
    }
    let template = Time2Cluster::new(2, 1, kmeans_config(&args.kmeans, g.seed))
        .with_method(g.method)
        .with_memory_cap(g.mem_cap);
    let rows = sensitivity_sweep(
        &loaded.series,
        truth,
        &args.m_values,
        args.ks_rule,
        &template,
    )?;
    write_csv(&out_dir(&args.out)?.join("sensitivity.csv"), rows)
}

fn robustness(args: RobustnessArgs, g: &Globals) -> Result<()> {
    let loaded = load(&args.input)?;
    let truth = require_labels(&loaded)?;
    check_window(args.m, loaded.series.len())?;
    let pipeline = Time2Cluster::new(
        args.m,
        args.ks.unwrap_or(args.m),
        kmeans_config(&args.kmeans, g.seed),
    )
    .with_method(g.method)
    .with_memory_cap(g.mem_cap);
    let rows = robustness_sweep(
        &loaded.series,
        truth,
        &pipeline,
        &args.fractions,
        args.repeats,
        args.magnitude,
        g.seed,
    )?;
    write_csv(&out_dir(&args.out)?.join("robustness.csv"), rows)
}

#[derive(Serialize)]
struct SynthRow {
    index: usize,
    value: f64,
    label: usize,
}

fn synth(args: SynthArgs, g: &Globals) -> Result<()> {
    let sc = scenario(args.scenario, g.seed)?;
    let path = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", args.scenario)));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    let rows = sc
        .series
        .values()
        .iter()
        .zip(&sc.truth.labels)
        .enumerate()
        .map(|(index, (&value, &label))| SynthRow {
            index,
            value,
            label,
        });
    write_csv(&path, rows)?;
    println!(
        "{}: {} points, suggested m = {}, ks = {}, k = {}",
        sc.name,
        sc.series.len(),
        sc.m,
        sc.ks,
        sc.k
    );
    Ok(())
}
