//! Average consensus for multi-agent systems that communicate over a
//! wireless multiple-access channel.
//!
//! Agents broadcast simultaneously; each receiver observes the
//! channel-weighted sum of its neighbours' states together with the sum of
//! the channel gains, and moves toward their ratio. The crate provides the
//! topology and matrix machinery, channel models, the update laws, and the
//! analysis used to predict and measure where and how fast the network
//! agrees.

// Index loops read closer to the matrix algebra; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod montecarlo;
pub mod protocol;
pub mod tolerance;

pub use channel::{ChannelLaw, ChannelMode, ChannelModel, ChannelRealization};
pub use error::{Error, Result};
pub use graph::WeightedDigraph;
pub use linalg::{DenseMatrix, EigenPair};
pub use montecarlo::{monte_carlo, MonteCarloReport, MonteCarloStats, Scenario};
pub use protocol::{NetworkState, ProtocolConfig, RunOptions, SigmaPolicy, Termination, Trace};

/// max(x) − min(x); zero for an empty slice, NaN if any entry is NaN.
pub fn spread(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    if x.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}
