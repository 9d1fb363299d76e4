//! Repeated runs of one scenario over independent channel draws.
//!
//! Run `r` uses channel seed `derive_seed(base_seed, r)` and nothing else
//! varies, so every run is reproducible on its own. Samples are collected
//! in run order and reduced with compensated summation, which makes the
//! statistics identical for the sequential and parallel drivers.

use serde::{Deserialize, Serialize};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelModel;
use crate::error::{invalid, Result};
use crate::graph::WeightedDigraph;
use crate::protocol::{run, ProtocolConfig, RunOptions, Termination};

/// Everything needed to execute one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: WeightedDigraph,
    pub channel: ChannelModel,
    pub protocol: ProtocolConfig,
    pub x0: Vec<f64>,
    pub options: RunOptions,
}

impl Scenario {
    /// Same scenario with a different channel seed.
    pub fn with_channel_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.channel.seed = seed;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSample {
    pub run: usize,
    pub channel_seed: u64,
    pub consensus_value: f64,
    pub steps: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloStats {
    pub runs: usize,
    pub converged: usize,
    pub non_converged: usize,
    /// Statistics of x* over converged runs.
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_dev: f64,
    pub standard_error: f64,
    pub mean_steps: f64,
    /// Mean of x(0), the plain average the network would ideally reach.
    pub initial_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub samples: Vec<RunSample>,
    pub stats: MonteCarloStats,
}

impl MonteCarloReport {
    /// CSV `run,channel_seed,x_star,steps,termination`.
    pub fn samples_csv(&self) -> String {
        let mut s = String::from("run,channel_seed,x_star,steps,termination\n");
        for r in &self.samples {
            let term = match r.termination {
                Termination::Converged => "converged",
                Termination::MaxSteps => "max-steps",
                Termination::Diverged => "diverged",
            };
            s.push_str(&format!("{},{},{:.16e},{},{term}\n", r.run, r.channel_seed, r.consensus_value, r.steps));
        }
        s
    }
}

/// Channel seed of run `run`: the first word of ChaCha stream `run` keyed
/// by `base_seed`.
pub fn derive_seed(base_seed: u64, run: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run as u64);
    rng.next_u64()
}

fn one_run(scenario: &Scenario, base_seed: u64, r: usize) -> Result<RunSample> {
    let seed = derive_seed(base_seed, r);
    let mut channel = scenario.channel;
    channel.seed = seed;
    let trace = run(&scenario.graph, &channel, &scenario.protocol, &scenario.x0, &scenario.options)?;
    Ok(RunSample {
        run: r,
        channel_seed: seed,
        consensus_value: trace.consensus_value(),
        steps: trace.steps(),
        termination: trace.termination,
    })
}

fn check_runs(runs: usize) -> Result<()> {
    if runs < 2 {
        return Err(invalid(format!("Monte Carlo needs at least 2 runs, got {runs}")));
    }
    Ok(())
}

/// Runs one after another on the calling thread.
pub fn monte_carlo_sequential(scenario: &Scenario, runs: usize, base_seed: u64) -> Result<MonteCarloReport> {
    check_runs(runs)?;
    let samples = (0..runs).map(|r| one_run(scenario, base_seed, r)).collect::<Result<Vec<_>>>()?;
    Ok(report(scenario, samples))
}

/// Runs spread over the rayon pool.
#[cfg(feature = "parallel")]
pub fn monte_carlo_parallel(scenario: &Scenario, runs: usize, base_seed: u64) -> Result<MonteCarloReport> {
    use rayon::prelude::*;

    check_runs(runs)?;
    let samples = (0..runs).into_par_iter().map(|r| one_run(scenario, base_seed, r)).collect::<Result<Vec<_>>>()?;
    Ok(report(scenario, samples))
}

/// Parallel when the `parallel` feature is enabled, sequential otherwise.
pub fn monte_carlo(scenario: &Scenario, runs: usize, base_seed: u64) -> Result<MonteCarloReport> {
    #[cfg(feature = "parallel")]
    {
        monte_carlo_parallel(scenario, runs, base_seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        monte_carlo_sequential(scenario, runs, base_seed)
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn report(scenario: &Scenario, samples: Vec<RunSample>) -> MonteCarloReport {
    let values: Vec<f64> =
        samples.iter().filter(|s| s.termination == Termination::Converged).map(|s| s.consensus_value).collect();
    let converged = values.len();
    let mean = if converged > 0 { compensated_sum(values.iter().copied()) / converged as f64 } else { f64::NAN };
    let std_dev = if converged > 1 {
        (compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (converged - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    let stats = MonteCarloStats {
        runs: samples.len(),
        converged,
        non_converged: samples.len() - converged,
        mean,
        std_dev,
        standard_error: std_dev / (converged as f64).sqrt(),
        mean_steps: compensated_sum(samples.iter().map(|s| s.steps as f64)) / samples.len() as f64,
        initial_mean: compensated_sum(scenario.x0.iter().copied()) / scenario.x0.len() as f64,
    };
    MonteCarloReport { samples, stats }
}
