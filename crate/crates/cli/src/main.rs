use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use mac_consensus_cli::presets::{preset, PRESETS};
use mac_consensus_cli::{parse_config_with_seed, run_montecarlo, run_scenario};

/// Average consensus over a simulated wireless multiple-access channel.
///
/// Exit status: 0 converged, 2 step limit reached (or diverged), 1 usage or
/// config error.
#[derive(Parser, Debug)]
#[command(name = "mac-consensus", version, group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
struct Cli {
    /// Scenario config (TOML). A summary file written by an earlier run works too.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in scenario; see --help for the list.
    #[arg(long, value_name = "NAME", long_help = preset_help())]
    preset: Option<String>,
    /// Replace the base seed; channel and initial-state seeds are re-derived from it.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo mode: this many independent channel realizations (at least 2).
    #[arg(long, value_name = "N")]
    runs: Option<usize>,
    /// Directory for output files.
    #[arg(long, value_name = "PATH", default_value = ".")]
    out_dir: PathBuf,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn preset_help() -> String {
    let mut s = String::from("Built-in scenario:");
    for (name, desc) in PRESETS {
        s.push_str(&format!("\n  {name:<26} {desc}"));
    }
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, String> {
    let text = match (&cli.config, &cli.preset) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        (None, Some(name)) => preset(name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            format!("unknown preset {name:?}; available: {}", names.join(", "))
        })?,
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    let cfg = parse_config_with_seed(&text, cli.seed).map_err(|e| e.to_string())?;

    match cli.runs {
        Some(runs) => {
            if runs < 2 {
                return Err(format!("--runs must be at least 2, got {runs}"));
            }
            let out = run_montecarlo(&cfg, runs, &cli.out_dir).map_err(|e| e.to_string())?;
            if !cli.quiet {
                let s = &out.report.stats;
                println!(
                    "{} runs, {} converged: mean x* = {:.12}, std = {:.6e}, mean steps = {:.1} (mean x(0) = {:.12})",
                    s.runs, s.converged, s.mean, s.std_dev, s.mean_steps, s.initial_mean
                );
                println!("wrote {} and {}", out.runs_path.display(), out.summary_path.display());
            }
            Ok(out.exit_code())
        }
        None => {
            let out = run_scenario(&cfg, &cli.out_dir).map_err(|e| e.to_string())?;
            if !cli.quiet {
                let s = &out.summary;
                print!("{}: {:?} after {} steps, x* = {:.12}", s.variant, s.termination, s.steps, s.consensus_value);
                if let Some(p) = s.predicted_value {
                    print!(" (predicted {p:.12})");
                }
                println!();
                println!("wrote {} and {}", out.trace_path.display(), out.summary_path.display());
            }
            Ok(out.exit_code())
        }
    }
}
