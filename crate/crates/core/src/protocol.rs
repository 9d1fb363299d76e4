//! Consensus update laws and the run loop.
//!
//! Three variants share one driver:
//!
//! * **superposition**: each agent transmits its state and the constant 1
//!   on two orthogonal channel uses; the receiver mixes its own state with
//!   the ratio of the two superposed signals,
//!   `x_i ← (1−σ_i) x_i + σ_i Y_i / Y′_i`. The ratio is a convex combination
//!   of the neighbours' states whatever the (positive) channel gains are,
//!   so the update is row-stochastic.
//! * **classical**: the Laplacian protocol `x ← (I − εL) x` with exact,
//!   channel-free weights.
//! * **naive**: a single superposed signal averaged with the own state,
//!   `x_i ← (x_i + Y_i) / (|N_i| + 1)`. Only row-stochastic when every gain
//!   is 1.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelRealization};
use crate::error::{invalid, Error, Result};
use crate::graph::WeightedDigraph;
use crate::linalg::{perron_matrix, DenseMatrix};
use crate::{spread, tolerance};

/// How the mixing weights σ_i are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaPolicy {
    /// Constant per-agent weights.
    Fixed(Vec<f64>),
    /// `σ_i = ε Σ_j h_ij(k)`, recomputed from the current coefficients.
    /// Needs channel knowledge the agents do not have; it exists to relate
    /// the protocol to the Perron matrix of the channel-weighted graph.
    ChannelAware { eps: f64 },
}

impl SigmaPolicy {
    pub fn uniform(n: usize, sigma: f64) -> Self {
        SigmaPolicy::Fixed(vec![sigma; n])
    }

    fn resolve(&self, r: &ChannelRealization<'_>) -> Result<Vec<f64>> {
        match self {
            SigmaPolicy::Fixed(s) => {
                validate_sigma(s, r.n())?;
                Ok(s.clone())
            }
            SigmaPolicy::ChannelAware { eps } => channel_aware_sigma(r, *eps),
        }
    }
}

/// Which update law to iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ProtocolConfig {
    Superposition { sigma: SigmaPolicy },
    Classical { eps: f64 },
    Naive,
}

impl ProtocolConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolConfig::Superposition { .. } => "superposition",
            ProtocolConfig::Classical { .. } => "classical",
            ProtocolConfig::Naive => "naive",
        }
    }

    /// Whether every step is a row-stochastic update.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, ProtocolConfig::Naive)
    }
}

/// State vector at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub k: usize,
    pub x: Vec<f64>,
}

impl NetworkState {
    /// `n` initial states drawn i.i.d. uniform on `[lo, hi)` from `seed`.
    pub fn uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("initial-state range needs lo < hi, got ({lo}, {hi})")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n).map(|_| rng.random_range(lo..hi)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxSteps,
    /// A state entry overflowed to a non-finite value.
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Stop once `max(x) − min(x) < tol`.
    pub tol: f64,
    pub max_steps: usize,
    /// Keep the one-step matrix of every step in the trace.
    pub record_matrices: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { tol: tolerance::CONSENSUS_SPREAD, max_steps: tolerance::MAX_STEPS, record_matrices: false }
    }
}

/// Full state history of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub states: Vec<NetworkState>,
    /// `matrices[k]` maps `states[k]` to `states[k + 1]`, when recorded.
    pub matrices: Option<Vec<DenseMatrix>>,
    pub termination: Termination,
}

impl Trace {
    pub fn initial(&self) -> &[f64] {
        &self.states[0].x
    }

    pub fn last(&self) -> &[f64] {
        &self.states.last().expect("trace holds x(0)").x
    }

    /// Number of updates performed.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Mean of the final state; the agreement value once converged.
    pub fn consensus_value(&self) -> f64 {
        let x = self.last();
        x.iter().sum::<f64>() / x.len() as f64
    }

    pub fn spreads(&self) -> Vec<f64> {
        self.states.iter().map(|s| spread(&s.x)).collect()
    }

    /// CSV with header `step,agent,x`, one row per agent per step; agents
    /// are 1-based and values carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,agent,x\n");
        for st in &self.states {
            for (i, v) in st.x.iter().enumerate() {
                writeln!(s, "{},{},{v:.16e}", st.k, i + 1).unwrap();
            }
        }
        s
    }
}

pub fn validate_sigma(sigma: &[f64], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: sigma.len() });
    }
    match sigma.iter().position(|&s| !(s > 0.0 && s < 1.0)) {
        None => Ok(()),
        Some(i) => Err(invalid(format!("sigma[{i}] = {} must lie in (0, 1)", sigma[i]))),
    }
}

fn check_receivers(g: &WeightedDigraph) -> Result<()> {
    match g.first_isolated_receiver() {
        Some(node) => Err(Error::EmptyNeighborhood { node }),
        None => Ok(()),
    }
}

/// One superposition update `x_i ← (1−σ_i) x_i + σ_i Y_i / Y′_i`.
pub fn step_superposition(x: &[f64], r: &ChannelRealization<'_>, sigma: &[f64]) -> Result<Vec<f64>> {
    validate_sigma(sigma, r.n())?;
    let mut out = vec![0.0; r.n()];
    superposition_into(x, r, sigma, &mut out)?;
    Ok(out)
}

fn superposition_into(x: &[f64], r: &ChannelRealization<'_>, sigma: &[f64], out: &mut [f64]) -> Result<()> {
    for (i, o) in out.iter_mut().enumerate() {
        let (y, yp) = r.superpose(x, i)?;
        *o = (1.0 - sigma[i]) * x[i] + sigma[i] * (y / yp);
    }
    Ok(())
}

/// The one-step matrix of the superposition protocol: `1 − σ_i` on the
/// diagonal and `σ_i h_ij / Σ_l h_il` on each arc `(j, i)`.
pub fn effective_matrix(r: &ChannelRealization<'_>, sigma: &[f64]) -> Result<DenseMatrix> {
    validate_sigma(sigma, r.n())?;
    check_receivers(r.graph())?;
    let n = r.n();
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let total = r.gain_sum(i);
        d[(i, i)] = 1.0 - sigma[i];
        for (j, h) in r.incoming(i) {
            d[(i, j)] = sigma[i] * h / total;
        }
    }
    Ok(d)
}

/// `σ_i = ε Σ_{j∈N_i} h_ij`; every value must land in (0, 1).
pub fn channel_aware_sigma(r: &ChannelRealization<'_>, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("channel-aware step size must be positive, got {eps}")));
    }
    let sigma: Vec<f64> = (0..r.n()).map(|i| eps * r.gain_sum(i)).collect();
    validate_sigma(&sigma, r.n()).map_err(|e| invalid(format!("channel-aware sigma at step {}: {e}", r.step())))?;
    Ok(sigma)
}

/// One Laplacian update `x ← (I − εL) x`.
pub fn step_classical(x: &[f64], g: &WeightedDigraph, eps: f64) -> Result<Vec<f64>> {
    perron_matrix(g, eps)?.mul_vec(x)
}

/// The naive one-step matrix: `1/(|N_i|+1)` on the diagonal and
/// `h_ij/(|N_i|+1)` on arcs.
pub fn naive_matrix(r: &ChannelRealization<'_>) -> DenseMatrix {
    let n = r.n();
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let scale = 1.0 / (r.graph().in_degree(i) + 1) as f64;
        d[(i, i)] = scale;
        for (j, h) in r.incoming(i) {
            d[(i, j)] = h * scale;
        }
    }
    d
}

/// One naive update `x_i ← (x_i + Y_i) / (|N_i| + 1)`.
pub fn step_naive(x: &[f64], r: &ChannelRealization<'_>) -> Result<Vec<f64>> {
    if x.len() != r.n() {
        return Err(Error::DimensionMismatch { expected: r.n(), actual: x.len() });
    }
    Ok((0..r.n())
        .map(|i| {
            let y: f64 = r.incoming(i).map(|(j, h)| h * x[j]).sum();
            (x[i] + y) / (r.graph().in_degree(i) + 1) as f64
        })
        .collect())
}

/// Iterates `protocol` from `x0` until the spread drops below `opts.tol`,
/// `opts.max_steps` updates have been made, or the state overflows.
/// Precondition violations are errors; failing to converge is not.
pub fn run(
    graph: &WeightedDigraph,
    channel: &ChannelModel,
    protocol: &ProtocolConfig,
    x0: &[f64],
    opts: &RunOptions,
) -> Result<Trace> {
    let n = graph.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: x0.len() });
    }
    if !(opts.tol > 0.0) {
        return Err(invalid(format!("spread tolerance must be positive, got {}", opts.tol)));
    }
    channel.law.validate()?;
    let perron = match protocol {
        ProtocolConfig::Superposition { sigma } => {
            check_receivers(graph)?;
            if let SigmaPolicy::Fixed(s) = sigma {
                validate_sigma(s, n)?;
            }
            None
        }
        ProtocolConfig::Classical { eps } => Some(perron_matrix(graph, *eps)?),
        ProtocolConfig::Naive => None,
    };

    let mut states = vec![NetworkState { k: 0, x: x0.to_vec() }];
    let mut matrices = opts.record_matrices.then(Vec::new);
    let mut realization = channel.sample(graph, 0);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut k = 0;
    let termination = loop {
        if x.iter().any(|v| !v.is_finite()) {
            break Termination::Diverged;
        }
        if spread(&x) < opts.tol {
            break Termination::Converged;
        }
        if k == opts.max_steps {
            break Termination::MaxSteps;
        }
        if let Some(p) = &perron {
            next = p.mul_vec(&x)?;
            if let Some(ms) = matrices.as_mut() {
                ms.push(p.clone());
            }
        } else {
            channel.resample(&mut realization, k as u64);
            match protocol {
                ProtocolConfig::Superposition { sigma } => {
                    let s = sigma.resolve(&realization)?;
                    superposition_into(&x, &realization, &s, &mut next)?;
                    if let Some(ms) = matrices.as_mut() {
                        ms.push(effective_matrix(&realization, &s)?);
                    }
                }
                ProtocolConfig::Naive => {
                    next = step_naive(&x, &realization)?;
                    if let Some(ms) = matrices.as_mut() {
                        ms.push(naive_matrix(&realization));
                    }
                }
                ProtocolConfig::Classical { .. } => unreachable!("handled by the Perron branch"),
            }
        }
        std::mem::swap(&mut x, &mut next);
        k += 1;
        states.push(NetworkState { k, x: x.clone() });
    };
    Ok(Trace { states, matrices, termination })
}
