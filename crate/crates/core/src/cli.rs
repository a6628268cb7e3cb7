//! Batch front end: `run`, `ablate`, `grid` and `synth`.
//!
//! A run is described by one JSON file:
//!
//! ```json
//! {
//!   "data": { "manifest": "data/manifest.json" },
//!   "solver": { "c": 3, "alpha": 1.0, "beta": 1.0, "seed": 0 },
//!   "output_dir": "out",
//!   "dump_consensus_graph": false
//! }
//! ```
//!
//! `data` may instead hold `{ "synth": { "n": 300, "c": 3, "dims": [4, 4, 4],
//! "noise": 0.1, "seed": 0 } }`. Relative paths resolve against the config
//! file's directory. When `solver.c` is omitted it is taken from the number
//! of ground-truth classes.
//!
//! Outputs in `output_dir`: `labels.csv` (one id per line), `report.json`
//! (see [`RunReport`]), `consensus_graph.csv` when requested, and
//! `grid.json` for grid mode.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_blobs, load_views, write_label_file, write_views, BlobSpec, ClusterLabels, MultiViewDataset};
use crate::error::Error;
use crate::graphs::ComponentCount;
use crate::metrics::{evaluate, Scores};
use crate::solver::{fit, SolverConfig, SolverState, StageTimings, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Version of the `report.json` layout.
pub const REPORT_SCHEMA: u32 = 1;

/// Regularization grid for `alpha` and `beta`.
pub const PARAM_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
/// Anchor counts tried besides `c`.
pub const ANCHOR_GRID: [usize; 3] = [50, 100, 200];

#[derive(Debug, Parser)]
#[command(name = "udbgl", version, about = "Multi-view clustering on fused anchor graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit once and write labels and a report.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep alpha, beta and the anchor count; keep the best-NMI cell.
    Grid {
        #[arg(long)]
        config: PathBuf,
        /// Tune on a random subset of this many samples when n is larger.
        #[arg(long)]
        subsample: Option<usize>,
    },
    /// Fit one of the ablation variants.
    Ablate {
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic Gaussian-blob dataset with a manifest.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c: usize,
        #[arg(long, default_value_t = 3)]
        views: usize,
        #[arg(long)]
        out: PathBuf,
        /// Feature dimension of every view.
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Manifest(PathBuf),
    Synth(BlobSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dump_consensus_graph: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("udbgl_out")
}

/// Failure of a CLI command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(Error),
    #[error("solver failed: {0}")]
    Solver(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) => EXIT_INVALID,
            Self::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::RankUnreachable { .. }
            | Error::QpNotConverged { .. }
            | Error::RowQp { .. }
            | Error::ComponentMismatch { .. }
            | Error::NotPsd { .. }
            | Error::NotSymmetric { .. } => Self::Solver(e),
            other => Self::Invalid(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A config file with its dataset loaded and paths resolved.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub config: RunConfig,
    pub dataset: MultiViewDataset<f64>,
    pub output_dir: PathBuf,
}

pub fn load_run(config_path: &Path) -> CliResult<LoadedRun> {
    let text = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", config_path.display())))?;
    let mut config: RunConfig = serde_json::from_value(raw.clone())
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", config_path.display())))?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let dataset = match &config.data {
        DataSource::Manifest(p) => load_views(&base.join(p))?,
        DataSource::Synth(spec) => generate_blobs(spec)?.dataset,
    };
    if raw.pointer("/solver/c").is_none() {
        config.solver.c = dataset
            .n_classes()
            .ok_or_else(|| Error::InvalidConfig("solver.c is required when the data has no labels".into()))?;
    }
    config.solver.validate(dataset.n_samples())?;
    config.solver.m = Some(config.solver.anchors());
    config.solver.k = Some(config.solver.neighbours());
    let output_dir = base.join(&config.output_dir);
    Ok(LoadedRun { config, dataset, output_dir })
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub n: usize,
    pub views: usize,
    pub dims: Vec<usize>,
    pub has_labels: bool,
}

/// Contents of `report.json`. Every metric lies in `[0, 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: SolverConfig,
    pub data: DataSummary,
    pub labels_path: PathBuf,
    pub consensus_graph_path: Option<PathBuf>,
    /// Present when ground truth is available.
    pub metrics: Option<Scores>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub components: ComponentCount,
    pub delta: Vec<f64>,
    pub gamma: f64,
    pub timings: StageTimings,
    pub iteration_seconds: Vec<f64>,
    pub total_seconds: f64,
}

/// One cell of the grid sweep.
#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub metrics: Option<Scores>,
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub tuned_on: usize,
    pub rows: Vec<GridRow>,
    pub best: Option<GridRow>,
    /// Rerun of the best cell on the full data.
    pub report: Option<RunReport>,
}

fn truth_of(ds: &MultiViewDataset<f64>) -> Option<ClusterLabels> {
    ds.labels().map(|l| ClusterLabels::from_assignments(l.to_vec()))
}

struct Fitted {
    labels: ClusterLabels,
    state: SolverState<f64>,
    metrics: Option<Scores>,
    seconds: f64,
}

fn fit_and_score(ds: &MultiViewDataset<f64>, cfg: &SolverConfig) -> CliResult<Fitted> {
    let clock = Instant::now();
    let (labels, state) = fit(ds, cfg)?;
    let seconds = clock.elapsed().as_secs_f64();
    let metrics = truth_of(ds).map(|t| evaluate(&labels, &t)).transpose()?;
    Ok(Fitted { labels, state, metrics, seconds })
}

fn write_outputs(command: &'static str, run: &LoadedRun, cfg: &SolverConfig, fitted: &Fitted) -> CliResult<RunReport> {
    let dir = &run.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let labels_path = dir.join("labels.csv");
    write_label_file(&labels_path, fitted.labels.assignments())?;
    let consensus_graph_path = if run.config.dump_consensus_graph {
        let path = dir.join("consensus_graph.csv");
        fitted.state.p.write_csv(&path)?;
        Some(path)
    } else {
        None
    };
    let st = &fitted.state;
    let report = RunReport {
        schema_version: REPORT_SCHEMA,
        command,
        config: cfg.clone(),
        data: DataSummary {
            n: run.dataset.n_samples(),
            views: run.dataset.n_views(),
            dims: run.dataset.dims(),
            has_labels: run.dataset.labels().is_some(),
        },
        labels_path,
        consensus_graph_path,
        metrics: fitted.metrics,
        objective_trace: st.objective_trace.clone(),
        iterations: st.iterations,
        converged: st.converged,
        components: st.p.components(),
        delta: st.delta.clone(),
        gamma: st.gamma,
        timings: st.timings.clone(),
        iteration_seconds: st.iteration_seconds.clone(),
        total_seconds: fitted.seconds,
    };
    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// `run` and `ablate`: one fit with the configured (or overridden) variant.
pub fn run(config_path: &Path, variant: Option<Variant>) -> CliResult<RunReport> {
    let loaded = load_run(config_path)?;
    let mut cfg = loaded.config.solver.clone();
    let command = match variant {
        Some(v) => {
            cfg.variant = v;
            "ablate"
        }
        None => "run",
    };
    let fitted = fit_and_score(&loaded.dataset, &cfg)?;
    write_outputs(command, &loaded, &cfg, &fitted)
}

/// Anchor counts of the grid for `c` clusters and `n` samples.
pub fn anchor_grid(c: usize, n: usize) -> Vec<usize> {
    let mut ms = vec![c];
    ms.extend(ANCHOR_GRID.iter().copied().filter(|&m| m > c && m <= n));
    ms
}

/// Every cell is an independent fit with the base config's seed, so cell
/// results do not depend on evaluation order.
pub fn grid_search(ds: &MultiViewDataset<f64>, base: &SolverConfig) -> CliResult<Vec<GridRow>> {
    if ds.labels().is_none() {
        return Err(Error::InvalidConfig("grid mode needs ground-truth labels".into()).into());
    }
    let mut rows = Vec::new();
    for &m in &anchor_grid(base.c, ds.n_samples()) {
        for &alpha in &PARAM_GRID {
            for &beta in &PARAM_GRID {
                let cfg = SolverConfig { alpha, beta, m: Some(m), k: None, ..base.clone() };
                let clock = Instant::now();
                let row = match fit_and_score(ds, &cfg) {
                    Ok(f) => GridRow { alpha, beta, m, metrics: f.metrics, error: None, seconds: f.seconds },
                    Err(CliError::Solver(e)) => GridRow {
                        alpha,
                        beta,
                        m,
                        metrics: None,
                        error: Some(e.to_string()),
                        seconds: clock.elapsed().as_secs_f64(),
                    },
                    Err(e) => return Err(e),
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Highest NMI; ties keep the earliest cell.
pub fn best_row(rows: &[GridRow]) -> Option<&GridRow> {
    rows.iter().filter(|r| r.metrics.is_some()).fold(None, |best: Option<&GridRow>, r| match best {
        Some(b) if b.metrics.unwrap().nmi >= r.metrics.unwrap().nmi => Some(b),
        _ => Some(r),
    })
}

pub fn grid(config_path: &Path, subsample: Option<usize>) -> CliResult<GridReport> {
    let loaded = load_run(config_path)?;
    let base = loaded.config.solver.clone();
    let n = loaded.dataset.n_samples();
    let tuning = match subsample {
        Some(0) => return Err(Error::InvalidConfig("subsample must be positive".into()).into()),
        Some(s) if s < n => {
            let mut rng = ChaCha8Rng::seed_from_u64(base.seed);
            let mut idx = sample(&mut rng, n, s).into_vec();
            idx.sort_unstable();
            loaded.dataset.select(&idx)?
        }
        _ => loaded.dataset.clone(),
    };
    let rows = grid_search(&tuning, &base)?;
    let best = best_row(&rows).cloned();
    let report = match &best {
        Some(b) => {
            let cfg = SolverConfig { alpha: b.alpha, beta: b.beta, m: Some(b.m), k: None, ..base };
            let fitted = fit_and_score(&loaded.dataset, &cfg)?;
            Some(write_outputs("grid", &loaded, &cfg, &fitted)?)
        }
        None => None,
    };
    let out = GridReport { tuned_on: tuning.n_samples(), rows, best, report };
    fs::create_dir_all(&loaded.output_dir).map_err(|e| Error::io(&loaded.output_dir, e))?;
    let path = loaded.output_dir.join("grid.json");
    fs::write(&path, serde_json::to_string_pretty(&out).expect("grid serializes")).map_err(|e| Error::io(&path, e))?;
    Ok(out)
}

pub fn synth(n: usize, c: usize, views: usize, dim: usize, noise: f64, seed: u64, out: &Path) -> CliResult<PathBuf> {
    let spec = BlobSpec::new(n, c, vec![dim; views], noise, seed);
    let blobs = generate_blobs::<f64>(&spec)?;
    Ok(write_views(&blobs.dataset, out)?)
}

/// Caps rayon's worker count from `UDBGL_THREADS`. Invalid values are ignored.
pub fn configure_threads() {
    if let Some(n) = std::env::var("UDBGL_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            // fails only if the pool was already built, which is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn summarize(report: &RunReport) -> String {
    let mut line = format!(
        "{} components, {} iterations ({}), labels at {}",
        report.components.full,
        report.iterations,
        if report.converged { "converged" } else { "iteration limit" },
        report.labels_path.display()
    );
    if let Some(s) = report.metrics {
        line.push_str(&format!("; nmi {:.4} acc {:.4} purity {:.4}", s.nmi, s.acc, s.purity));
    }
    line
}

/// Executes a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    configure_threads();
    let result = match cli.command {
        Command::Run { config } => run(&config, None).map(|r| println!("{}", summarize(&r))),
        Command::Ablate { variant, config } => run(&config, Some(variant)).map(|r| println!("{}", summarize(&r))),
        Command::Grid { config, subsample } => grid(&config, subsample).map(|g| {
            let failed = g.rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} cells on {} samples, {failed} failed", g.rows.len(), g.tuned_on);
            match (&g.best, &g.report) {
                (Some(b), Some(r)) => {
                    let s = b.metrics.expect("best row has metrics");
                    println!("best: alpha {} beta {} m {} nmi {:.4}", b.alpha, b.beta, b.m, s.nmi);
                    println!("{}", summarize(r));
                }
                _ => println!("no cell succeeded"),
            }
        }),
        Command::Synth { n, c, views, out, dim, noise, seed } => {
            synth(n, c, views, dim, noise, seed, &out).map(|p| println!("{}", p.display()))
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
