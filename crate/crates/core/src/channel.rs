//! Channel coefficient models and multiple-access superposition.
//!
//! Coefficient `h_ij(k)` is the gain from transmitter `j` to receiver `i`
//! at step `k`. It exists only on arcs `(j, i)` and is strictly positive.
//! Receiver noise is not modelled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::WeightedDigraph;

/// Distribution of a single coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelLaw {
    /// Uniform on the half-open interval `(lo, hi]`, so draws are positive
    /// even when `lo = 0`.
    Uniform { lo: f64, hi: f64 },
    /// Degenerate law; `value = 1` is the ideal channel.
    Constant { value: f64 },
}

impl ChannelLaw {
    pub fn ideal() -> Self {
        ChannelLaw::Constant { value: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
                    return Err(invalid(format!("uniform channel law needs 0 <= lo < hi, got ({lo}, {hi})")));
                }
            }
            ChannelLaw::Constant { value } => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(invalid(format!("constant channel gain must be positive, got {value}")));
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            // random::<f64>() is in [0, 1), so hi − (hi − lo)u lies in (lo, hi].
            ChannelLaw::Uniform { lo, hi } => hi - (hi - lo) * rng.random::<f64>(),
            ChannelLaw::Constant { value } => value,
        }
    }
}

/// Whether coefficients are redrawn every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// One draw, reused at every step.
    TimeInvariant,
    /// Fresh independent draws at each step.
    Iid,
}

/// Stochastic channel: law, time behaviour and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub law: ChannelLaw,
    pub mode: ChannelMode,
    pub seed: u64,
}

impl ChannelModel {
    pub fn new(law: ChannelLaw, mode: ChannelMode, seed: u64) -> Result<Self> {
        law.validate()?;
        Ok(Self { law, mode, seed })
    }

    /// h ≡ 1.
    pub fn ideal() -> Self {
        Self { law: ChannelLaw::ideal(), mode: ChannelMode::TimeInvariant, seed: 0 }
    }

    /// Coefficients at step `k`.
    ///
    /// Each step reads its own ChaCha stream (stream 0 for every step in
    /// time-invariant mode), filled in canonical arc order, so any step can
    /// be reproduced without replaying the ones before it.
    pub fn sample<'g>(&self, graph: &'g WeightedDigraph, k: u64) -> ChannelRealization<'g> {
        let mut coefficients = Vec::with_capacity(graph.arc_count());
        self.sample_into(graph, k, &mut coefficients);
        ChannelRealization { graph, step: k, coefficients }
    }

    /// Like [`sample`](Self::sample) but reuses a realization's storage.
    pub fn resample<'g>(&self, r: &mut ChannelRealization<'g>, k: u64) {
        let graph = r.graph;
        self.sample_into(graph, k, &mut r.coefficients);
        r.step = k;
    }

    fn sample_into(&self, graph: &WeightedDigraph, k: u64, out: &mut Vec<f64>) {
        out.clear();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(match self.mode {
            ChannelMode::TimeInvariant => 0,
            ChannelMode::Iid => k,
        });
        out.extend((0..graph.arc_count()).map(|_| self.law.draw(&mut rng)));
    }
}

/// Channel coefficients at one step, indexed by the graph's canonical arc
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<'g> {
    graph: &'g WeightedDigraph,
    step: u64,
    coefficients: Vec<f64>,
}

impl<'g> ChannelRealization<'g> {
    /// Realization from explicit coefficients in canonical arc order.
    pub fn from_coefficients(graph: &'g WeightedDigraph, step: u64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != graph.arc_count() {
            return Err(Error::DimensionMismatch { expected: graph.arc_count(), actual: coefficients.len() });
        }
        if let Some(h) = coefficients.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(invalid(format!("channel coefficient {h} is not positive")));
        }
        Ok(Self { graph, step, coefficients })
    }

    /// Realization with `h_ij = f(j, i)` on every arc.
    pub fn from_fn(graph: &'g WeightedDigraph, step: u64, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let coefficients = graph.arcs().iter().map(|a| f(a.from, a.to)).collect();
        Self::from_coefficients(graph, step, coefficients)
    }

    pub fn graph(&self) -> &'g WeightedDigraph {
        self.graph
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Coefficients in canonical arc order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `h_ij`, or `None` when `(j, i)` is not an arc.
    pub fn get(&self, j: usize, i: usize) -> Option<f64> {
        self.graph.arc_index(j, i).map(|k| self.coefficients[k])
    }

    /// `(j, h_ij)` for each in-neighbour `j` of `i`.
    pub fn incoming(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.graph.in_arc_range(i);
        self.graph.in_arcs(i).iter().zip(&self.coefficients[range]).map(|(a, &h)| (a.from, h))
    }

    /// Y′_i = Σ_{j∈N_i} h_ij.
    pub fn gain_sum(&self, i: usize) -> f64 {
        self.coefficients[self.graph.in_arc_range(i)].iter().sum()
    }

    /// What receiver `i` hears when its neighbours transmit `x` on one
    /// channel use and the constant 1 on the other:
    /// `(Y_i, Y′_i) = (Σ h_ij x_j, Σ h_ij)`.
    pub fn superpose(&self, x: &[f64], i: usize) -> Result<(f64, f64)> {
        self.graph.check_node(i)?;
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: x.len() });
        }
        if self.graph.in_degree(i) == 0 {
            return Err(Error::EmptyNeighborhood { node: i });
        }
        Ok(self.incoming(i).fold((0.0, 0.0), |(y, yp), (j, h)| (y + h * x[j], yp + h)))
    }
}
