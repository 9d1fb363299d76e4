//! Consensus-value prediction, channel-disturbance decomposition and
//! convergence-rate measurement.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMode, ChannelModel, ChannelRealization};
use crate::error::{invalid, Error, Result};
use crate::graph::WeightedDigraph;
use crate::linalg::{dominant_left_eigenvector, perron_matrix, second_eigenvalue_modulus, DenseMatrix};
use crate::protocol::{effective_matrix, validate_sigma, ProtocolConfig, SigmaPolicy, Termination, Trace};
use crate::tolerance;

/// Agreement value `w′x(0)` of a time-invariant row-stochastic primitive
/// update, where `w` is its left Perron vector.
pub fn predicted_consensus(d: &DenseMatrix, x0: &[f64]) -> Result<f64> {
    let pair = dominant_left_eigenvector(d, tolerance::EIGEN, tolerance::EIGEN_MAX_ITER)?;
    if x0.len() != pair.left_vector.len() {
        return Err(Error::DimensionMismatch { expected: pair.left_vector.len(), actual: x0.len() });
    }
    Ok(crate::linalg::dot(&pair.left_vector, x0))
}

/// Prediction for a fixed channel realization and common σ.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub weights: Vec<f64>,
    /// Residual of the σ-free fixed-point equation for the weights.
    pub fixed_point_residual: f64,
}

/// `max_i | w_i − Σ_{j : i ∈ N_j} w_j h_ji / Σ_{l ∈ N_j} h_jl |`.
///
/// The equation contains no σ, which is why the agreement value of the
/// time-invariant protocol does not depend on the common σ.
pub fn fixed_point_residual(w: &[f64], r: &ChannelRealization<'_>) -> Result<f64> {
    let n = r.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: w.len() });
    }
    let mut rhs = vec![0.0; n];
    for j in 0..n {
        let total = r.gain_sum(j);
        if total == 0.0 {
            return Err(Error::EmptyNeighborhood { node: j });
        }
        for (i, h) in r.incoming(j) {
            rhs[i] += w[j] * h / total;
        }
    }
    Ok(w.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Predicts the agreement value of the superposition protocol under a
/// time-invariant realization with common `sigma`, and checks the weights
/// against the σ-free fixed-point equation.
pub fn predict_time_invariant(r: &ChannelRealization<'_>, sigma: f64, x0: &[f64]) -> Result<Prediction> {
    let d = effective_matrix(r, &vec![sigma; r.n()])?;
    let pair = dominant_left_eigenvector(&d, tolerance::EIGEN, tolerance::EIGEN_MAX_ITER)?;
    if x0.len() != r.n() {
        return Err(Error::DimensionMismatch { expected: r.n(), actual: x0.len() });
    }
    let residual = fixed_point_residual(&pair.left_vector, r)?;
    if residual > tolerance::FIXED_POINT {
        return Err(invalid(format!("consensus weights violate the fixed-point equation (residual {residual:e})")));
    }
    Ok(Prediction {
        value: crate::linalg::dot(&pair.left_vector, x0),
        weights: pair.left_vector,
        fixed_point_residual: residual,
    })
}

/// Channel disturbance terms stacked row-major, position `i·n + j`:
/// `ν_ij = x_j (|N_i| h_ij − Σ_l h_il) / Σ_l h_il` on arcs, 0 elsewhere.
pub fn nu_vector(r: &ChannelRealization<'_>, x: &[f64]) -> Result<Vec<f64>> {
    let n = r.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
    }
    let mut nu = vec![0.0; n * n];
    for i in 0..n {
        let deg = r.graph().in_degree(i) as f64;
        let total = r.gain_sum(i);
        for (j, h) in r.incoming(i) {
            nu[i * n + j] = x[j] * (deg * h - total) / total;
        }
    }
    Ok(nu)
}

/// Split of the superposition update into an ideal equal-weight part and
/// a channel disturbance: `x(k+1) = D_A x(k) + D_B ν(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceDecomposition {
    /// n×n; `1 − σ` on the diagonal, `σ/|N_i|` on arcs.
    pub d_a: DenseMatrix,
    /// n×n²; row `i` carries `σ/|N_i|` at columns `i·n + j` for arcs `(j, i)`.
    pub d_b: DenseMatrix,
}

pub fn decomposition_matrices(g: &WeightedDigraph, sigma: f64) -> Result<DisturbanceDecomposition> {
    validate_sigma(&[sigma], 1)?;
    if let Some(node) = g.first_isolated_receiver() {
        return Err(Error::EmptyNeighborhood { node });
    }
    let n = g.n();
    let mut d_a = DenseMatrix::zeros(n, n);
    let mut d_b = DenseMatrix::zeros(n, n * n);
    for i in 0..n {
        let share = sigma / g.in_degree(i) as f64;
        d_a[(i, i)] = 1.0 - sigma;
        for arc in g.in_arcs(i) {
            d_a[(i, arc.from)] = share;
            d_b[(i, i * n + arc.from)] = share;
        }
    }
    Ok(DisturbanceDecomposition { d_a, d_b })
}

/// Column weights of the disturbance in the complete-graph final value:
/// 0 at the self-pair positions `h(n+1)` (0-based) of the row-major
/// stacking, 1 elsewhere, so that `1′D_B = σ/(n−1) ξ′`.
pub fn xi_vector(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("xi needs n >= 2"));
    }
    Ok((0..n * n).map(|p| if p % (n + 1) == 0 { 0.0 } else { 1.0 }).collect())
}

/// ‖D x − (D_A x + D_B ν)‖_∞ for the superposition matrix `D` of `r` with
/// common `sigma`.
pub fn verify_decomposition(r: &ChannelRealization<'_>, x: &[f64], sigma: f64) -> Result<f64> {
    let d = effective_matrix(r, &vec![sigma; r.n()])?;
    let parts = decomposition_matrices(r.graph(), sigma)?;
    let direct = d.mul_vec(x)?;
    let ideal = parts.d_a.mul_vec(x)?;
    let disturbance = parts.d_b.mul_vec(&nu_vector(r, x)?)?;
    Ok(direct.iter().zip(ideal.iter().zip(&disturbance)).map(|(a, (b, c))| (a - (b + c)).abs()).fold(0.0, f64::max))
}

/// Least-squares slope of `ln spread(x(k))` against `k`.
///
/// The fit uses the steps before the spread first drops below the trace's
/// convergence point, minus the first and last 10% of them. Returns the
/// slope; `slope.exp()` is the per-step contraction factor.
pub fn measure_rate(trace: &Trace) -> Result<f64> {
    let spreads = trace.spreads();
    let pre = match trace.termination {
        // The last state is the first one under tolerance.
        Termination::Converged => spreads.len() - 1,
        _ => spreads.len(),
    };
    if pre < 10 {
        return Err(Error::RateFit(format!("only {pre} steps before convergence, need at least 10")));
    }
    let cut = pre / 10;
    let window = cut..pre - cut;
    let points: Vec<(f64, f64)> = window.map(|k| (k as f64, spreads[k])).collect();
    if let Some(&(k, s)) = points.iter().find(|(_, s)| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::RateFit(format!("spread {s} at step {k} cannot be log-fitted")));
    }
    let m = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(k, s) in &points {
        sxy += (k - mean_k) * (s.ln() - mean_y);
        sxx += (k - mean_k).powi(2);
    }
    Ok(sxy / sxx)
}

/// Machine-readable outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: String,
    pub termination: Termination,
    pub steps: usize,
    /// Mean of the final state.
    pub consensus_value: f64,
    /// `w′x(0)` for time-invariant stochastic updates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point_residual: Option<f64>,
    pub spread_initial: f64,
    pub spread_final: f64,
    pub initial_min: f64,
    pub initial_max: f64,
    pub initial_mean: f64,
    /// Whether every state stayed inside `[min x(0), max x(0)]`.
    pub hull_respected: bool,
    /// `exp` of the fitted log-spread slope.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_measured: Option<f64>,
    /// |λ_{n−1}| of the one-step matrix, time-invariant updates only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_predicted: Option<f64>,
}

/// Summarizes a trace produced by [`crate::protocol::run`] with the same
/// graph, channel and protocol.
pub fn summarize(
    trace: &Trace,
    graph: &WeightedDigraph,
    channel: &ChannelModel,
    protocol: &ProtocolConfig,
) -> Result<RunSummary> {
    let x0 = trace.initial();
    let (lo, hi) = x0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let hull_respected = trace.states.iter().all(|s| s.x.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));

    // One-step matrix when it does not change over time.
    let fixed_matrix = match protocol {
        ProtocolConfig::Classical { eps } => Some(perron_matrix(graph, *eps)?),
        ProtocolConfig::Superposition { sigma } if channel.mode == ChannelMode::TimeInvariant => {
            let r = channel.sample(graph, 0);
            let s = match sigma {
                SigmaPolicy::Fixed(s) => s.clone(),
                SigmaPolicy::ChannelAware { eps } => crate::protocol::channel_aware_sigma(&r, *eps)?,
            };
            Some(effective_matrix(&r, &s)?)
        }
        _ => None,
    };
    let primitive = match &fixed_matrix {
        Some(d) => crate::linalg::is_primitive(d)?,
        None => false,
    };
    let (predicted_value, rate_predicted) = match &fixed_matrix {
        Some(d) if primitive => (Some(predicted_consensus(d, x0)?), Some(second_eigenvalue_modulus(d)?)),
        _ => (None, None),
    };
    let fixed_point_residual = match protocol {
        ProtocolConfig::Superposition { sigma: SigmaPolicy::Fixed(s) } if primitive && s.iter().all(|&v| v == s[0]) => {
            let d = fixed_matrix.as_ref().expect("primitive implies a fixed matrix");
            let pair = dominant_left_eigenvector(d, tolerance::EIGEN, tolerance::EIGEN_MAX_ITER)?;
            Some(fixed_point_residual(&pair.left_vector, &channel.sample(graph, 0))?)
        }
        _ => None,
    };

    Ok(RunSummary {
        variant: protocol.name().to_string(),
        termination: trace.termination,
        steps: trace.steps(),
        consensus_value: trace.consensus_value(),
        predicted_value,
        fixed_point_residual,
        spread_initial: hi - lo,
        spread_final: crate::spread(trace.last()),
        initial_min: lo,
        initial_max: hi,
        initial_mean: x0.iter().sum::<f64>() / x0.len() as f64,
        hull_respected,
        rate_measured: measure_rate(trace).ok().map(f64::exp),
        rate_predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelLaw;
    use crate::protocol::{run, RunOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn uniform(mode: ChannelMode, seed: u64) -> ChannelModel {
        ChannelModel::new(ChannelLaw::Uniform { lo: 0.0, hi: 10.0 }, mode, seed).unwrap()
    }

    #[test]
    fn predicted_consensus_examples() {
        // w = (1/3, 2/3) from w1 = 0.5 w1 + 0.25 w2 with w1 + w2 = 1.
        let v = predicted_consensus(&m(&[&[0.5, 0.5], &[0.25, 0.75]]), &[0.0, 3.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);

        let g = WeightedDigraph::complete(4, 1.0).unwrap();
        let r = ChannelModel::ideal().sample(&g, 0);
        let x0 = [1.0, 2.0, 3.0, 10.0];
        for sigma in [0.1, 0.5, 0.9] {
            let p = predict_time_invariant(&r, sigma, &x0).unwrap();
            assert!((p.value - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prediction_is_sigma_free() {
        let g = WeightedDigraph::balanced5();
        let r = uniform(ChannelMode::TimeInvariant, 12).sample(&g, 0);
        let x0 = [0.5, 1.5, 3.0, 4.5, 6.0];
        let a = predict_time_invariant(&r, 0.2, &x0).unwrap();
        let b = predict_time_invariant(&r, 0.5, &x0).unwrap();
        let c = predict_time_invariant(&r, 0.7, &x0).unwrap();
        assert!((a.value - b.value).abs() <= 1e-8);
        let wdiff = a.weights.iter().zip(&c.weights).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(wdiff <= 1e-9);
        assert!(a.fixed_point_residual <= 1e-10);
    }

    #[test]
    fn nu_vanishes_for_row_constant_gains() {
        let g = WeightedDigraph::complete(3, 1.0).unwrap();
        let r = ChannelRealization::from_fn(&g, 0, |_, i| 1.0 + i as f64).unwrap();
        assert!(nu_vector(&r, &[1.0, -2.0, 7.0]).unwrap().iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn nu_is_zero_off_arcs() {
        let g = WeightedDigraph::balanced5();
        let r = uniform(ChannelMode::Iid, 2).sample(&g, 0);
        let nu = nu_vector(&r, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if g.arc_index(j, i).is_none() {
                    assert_eq!(nu[i * 5 + j], 0.0);
                }
            }
        }
    }

    #[test]
    fn nu_has_zero_mean_per_arc() {
        let g = WeightedDigraph::balanced5();
        let x = [0.3, 2.0, -1.0, 4.0, 6.0];
        let channel = uniform(ChannelMode::Iid, 21);
        let draws = 10_000;
        let (mut sum, mut sq) = (vec![0.0; 25], vec![0.0; 25]);
        for k in 0..draws {
            for (p, v) in nu_vector(&channel.sample(&g, k), &x).unwrap().into_iter().enumerate() {
                sum[p] += v;
                sq[p] += v * v;
            }
        }
        let nd = draws as f64;
        for arc in g.arcs() {
            let p = arc.to * 5 + arc.from;
            let mean = sum[p] / nd;
            let se = ((sq[p] / nd - mean * mean) * nd / (nd - 1.0) / nd).sqrt();
            assert!(mean.abs() <= 4.0 * se, "arc ({}, {}): mean {mean}, se {se}", arc.from, arc.to);
        }
    }

    #[test]
    fn decomposition_examples() {
        let two = WeightedDigraph::complete(2, 1.0).unwrap();
        let s = 0.3;
        let d = decomposition_matrices(&two, s).unwrap();
        assert_eq!(d.d_a.data(), &[1.0 - s, s, s, 1.0 - s]);
        assert_eq!(d.d_b.data(), &[0.0, s, 0.0, 0.0, 0.0, 0.0, s, 0.0]);

        let three = WeightedDigraph::complete(3, 1.0).unwrap();
        let d = decomposition_matrices(&three, 0.6).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.4 } else { 0.3 };
                assert!((d.d_a[(i, j)] - expected).abs() < 1e-15);
                let b = d.d_b[(i, i * 3 + j)];
                assert!((b - if i == j { 0.0 } else { 0.3 }).abs() < 1e-15);
            }
        }
        assert!(decomposition_matrices(&three, 1.0).is_err());
    }

    #[test]
    fn decomposition_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let n = rng.random_range(2..9);
            let g = WeightedDigraph::random_strongly_connected(n, 0.4, (1.0, 2.0), &mut rng).unwrap();
            let d = decomposition_matrices(&g, rng.random_range(0.05..0.95)).unwrap();
            assert!(d.d_a.row_sums().iter().all(|s| (s - 1.0).abs() <= 1e-15));
        }
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi_vector(2).unwrap(), vec![0.0, 1.0, 1.0, 0.0]);
        let xi = xi_vector(3).unwrap();
        let zeros: Vec<usize> = (0..9).filter(|&p| xi[p] == 0.0).map(|p| p + 1).collect();
        assert_eq!(zeros, vec![1, 5, 9]);
        assert!(xi_vector(1).is_err());
    }

    #[test]
    fn decomposition_identity_examples() {
        let g = WeightedDigraph::complete(3, 1.0).unwrap();
        let ideal = ChannelModel::ideal().sample(&g, 0);
        let x = [0.3, 2.0, 5.9];
        assert_eq!(verify_decomposition(&ideal, &x, 0.4).unwrap(), 0.0);
        assert!(nu_vector(&ideal, &x).unwrap().iter().all(|&v| v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = uniform(ChannelMode::Iid, 5).sample(&g, 0);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        assert!(verify_decomposition(&r, &x, 0.5).unwrap() <= 1e-12);
    }

    #[test]
    fn rate_on_synthetic_two_node_run() {
        // (I − 0.25 L) on the unit 2-cycle has second eigenvalue 0.5.
        let g = WeightedDigraph::complete(2, 1.0).unwrap();
        let trace = run(
            &g,
            &ChannelModel::ideal(),
            &ProtocolConfig::Classical { eps: 0.25 },
            &[0.0, 1.0],
            &RunOptions::default(),
        )
        .unwrap();
        let rate = measure_rate(&trace).unwrap().exp();
        assert!((0.45..=0.55).contains(&rate), "rate {rate}");
    }

    #[test]
    fn rate_rejects_degenerate_traces() {
        let g = WeightedDigraph::complete(2, 1.0).unwrap();
        let proto = ProtocolConfig::Classical { eps: 0.25 };
        let flat = run(&g, &ChannelModel::ideal(), &proto, &[1.0, 1.0], &RunOptions::default()).unwrap();
        assert!(matches!(measure_rate(&flat), Err(Error::RateFit(_))));
        let short = RunOptions { max_steps: 5, ..RunOptions::default() };
        let trace = run(&g, &ChannelModel::ideal(), &proto, &[0.0, 1.0], &short).unwrap();
        assert!(measure_rate(&trace).is_err());
    }

    #[test]
    fn summary_of_time_invariant_run() {
        let g = WeightedDigraph::balanced5();
        let channel = uniform(ChannelMode::TimeInvariant, 3);
        let proto = ProtocolConfig::Superposition { sigma: SigmaPolicy::uniform(5, 0.5) };
        let x0 = [0.2, 1.0, 4.4, 5.0, 3.3];
        let trace = run(&g, &channel, &proto, &x0, &RunOptions::default()).unwrap();
        let s = summarize(&trace, &g, &channel, &proto).unwrap();
        assert_eq!(s.termination, Termination::Converged);
        assert!((s.consensus_value - s.predicted_value.unwrap()).abs() <= 1e-6);
        assert!(s.fixed_point_residual.unwrap() <= 1e-10);
        assert!(s.hull_respected);
        assert!((0.2..=5.0).contains(&s.consensus_value));
        let measured = s.rate_measured.unwrap();
        let predicted = s.rate_predicted.unwrap();
        assert!((measured.ln() - predicted.ln()).abs() <= 0.1 * predicted.ln().abs());
    }
}
