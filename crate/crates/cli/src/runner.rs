//! Executes a resolved config and writes its output files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use mac_consensus::analysis::{summarize, RunSummary};
use mac_consensus::{monte_carlo, protocol, MonteCarloReport, MonteCarloStats, Termination};
use serde::Serialize;

use crate::config::ScenarioConfig;

pub const MONTE_CARLO_RUNS_CSV: &str = "montecarlo_runs.csv";
pub const MONTE_CARLO_SUMMARY: &str = "montecarlo_summary.toml";

#[derive(Debug)]
pub enum RunError {
    Core(mac_consensus::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<mac_consensus::Error> for RunError {
    fn from(e: mac_consensus::Error) -> Self {
        RunError::Core(e)
    }
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    result: &'a RunSummary,
    config: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct MonteCarloDocument<'a> {
    montecarlo: MonteCarloInfo,
    stats: &'a MonteCarloStats,
    config: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct MonteCarloInfo {
    runs: usize,
    /// Run `r` uses channel seed `derive_seed(base_seed, r)`.
    base_seed: u64,
}

/// Result of one scenario plus the files written for it.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub summary: RunSummary,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

impl ScenarioOutcome {
    pub fn exit_code(&self) -> u8 {
        exit_code(self.summary.termination == Termination::Converged)
    }
}

#[derive(Debug)]
pub struct MonteCarloOutcome {
    pub report: MonteCarloReport,
    pub runs_path: PathBuf,
    pub summary_path: PathBuf,
}

impl MonteCarloOutcome {
    pub fn exit_code(&self) -> u8 {
        exit_code(self.report.stats.non_converged == 0)
    }
}

/// 0 when everything converged, 2 otherwise.
fn exit_code(converged: bool) -> u8 {
    if converged {
        0
    } else {
        2
    }
}

pub fn render_summary(cfg: &ScenarioConfig, summary: &RunSummary) -> String {
    toml::to_string(&SummaryDocument { result: summary, config: cfg }).expect("summary serializes")
}

pub fn render_montecarlo_summary(cfg: &ScenarioConfig, stats: &MonteCarloStats) -> String {
    let doc =
        MonteCarloDocument { montecarlo: MonteCarloInfo { runs: stats.runs, base_seed: cfg.seed }, stats, config: cfg };
    toml::to_string(&doc).expect("summary serializes")
}

/// One run of `cfg`; writes the trace CSV and the summary into `out_dir`.
/// Nothing is written unless the run itself succeeds.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome, RunError> {
    let s = cfg.scenario()?;
    let trace = protocol::run(&s.graph, &s.channel, &s.protocol, &s.x0, &s.options)?;
    let summary = summarize(&trace, &s.graph, &s.channel, &s.protocol)?;
    let trace_path = out_dir.join(&cfg.output.trace);
    let summary_path = out_dir.join(&cfg.output.summary);
    write(&trace_path, &trace.to_csv())?;
    write(&summary_path, &render_summary(cfg, &summary))?;
    Ok(ScenarioOutcome { summary, trace_path, summary_path })
}

/// `runs` independent channel realizations of `cfg` with seeds derived from
/// `cfg.seed`; the initial state is the same for every run.
pub fn run_montecarlo(cfg: &ScenarioConfig, runs: usize, out_dir: &Path) -> Result<MonteCarloOutcome, RunError> {
    let s = cfg.scenario()?;
    let report = monte_carlo(&s, runs, cfg.seed)?;
    let runs_path = out_dir.join(MONTE_CARLO_RUNS_CSV);
    let summary_path = out_dir.join(MONTE_CARLO_SUMMARY);
    write(&runs_path, &report.samples_csv())?;
    write(&summary_path, &render_montecarlo_summary(cfg, &report.stats))?;
    Ok(MonteCarloOutcome { report, runs_path, summary_path })
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    let io = |source| RunError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}
