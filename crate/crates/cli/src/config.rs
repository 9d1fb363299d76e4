//! Scenario documents: TOML in, fully resolved [`ScenarioConfig`] out.
//!
//! Every optional field is filled in during resolution and the resolved
//! config serializes back to a document `parse_config` accepts, so a summary
//! (which embeds it under `[config]`) is itself a valid input.

use std::f64::consts::TAU;
use std::fmt;

use mac_consensus::montecarlo::{derive_seed, Scenario};
use mac_consensus::{
    ChannelLaw, ChannelMode, ChannelModel, NetworkState, ProtocolConfig, RunOptions, SigmaPolicy, WeightedDigraph,
};
use serde::{Deserialize, Serialize};

/// All problems found in one document, reported together.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl ConfigError {
    fn one(msg: impl Into<String>) -> Self {
        Self { problems: vec![msg.into()] }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid scenario config ({} problem{}):",
            self.problems.len(),
            if self.problems.len() == 1 { "" } else { "s" }
        )?;
        for p in &self.problems {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TopologySpec {
    Complete {
        n: usize,
        #[serde(default = "one")]
        weight: f64,
    },
    /// Undirected cycle (both directions of every edge).
    Ring {
        n: usize,
        #[serde(default = "one")]
        weight: f64,
    },
    DirectedCycle {
        n: usize,
        #[serde(default = "one")]
        weight: f64,
    },
    /// 5-cycle plus pentagram, unit weights: balanced and strongly connected.
    Balanced5,
    /// Explicit 1-based arcs `[j, i, w]`: `j` transmits to `i` with weight `w`.
    Custom { n: usize, arcs: Vec<(usize, usize, f64)> },
}

impl TopologySpec {
    pub fn build(&self) -> mac_consensus::Result<WeightedDigraph> {
        match self {
            TopologySpec::Complete { n, weight } => WeightedDigraph::complete(*n, *weight),
            TopologySpec::Ring { n, weight } => WeightedDigraph::ring(*n, *weight),
            TopologySpec::DirectedCycle { n, weight } => WeightedDigraph::directed_cycle(*n, *weight),
            TopologySpec::Balanced5 => Ok(WeightedDigraph::balanced5()),
            TopologySpec::Custom { n, arcs } => WeightedDigraph::from_one_based(*n, arcs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub law: ChannelLaw,
    pub mode: ChannelMode,
    /// Defaults to a seed derived from the top-level `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Superposition,
    Classical,
    Naive,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Superposition => "superposition",
            Variant::Classical => "classical",
            Variant::Naive => "naive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaPolicyKind {
    Fixed,
    ChannelAware,
}

/// A common σ or one value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaValue {
    Common(f64),
    PerAgent(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_policy: Option<SigmaPolicyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaValue>,
    /// Classical step size, or the channel-aware gain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialStateSpec {
    Uniform {
        #[serde(default)]
        lo: f64,
        #[serde(default = "tau")]
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit {
        values: Vec<f64>,
    },
}

fn tau() -> f64 {
    TAU
}

impl Default for InitialStateSpec {
    fn default() -> Self {
        InitialStateSpec::Uniform { lo: 0.0, hi: TAU, seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunControls {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_tol() -> f64 {
    RunOptions::default().tol
}

fn default_max_steps() -> usize {
    RunOptions::default().max_steps
}

impl Default for RunControls {
    fn default() -> Self {
        Self { tol: default_tol(), max_steps: default_max_steps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_summary() -> String {
    "summary.toml".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Self { trace: default_trace(), summary: default_summary() }
    }
}

/// A scenario document. After [`parse_config`] every `Option` is `Some`
/// where it applies and the whole thing has been validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Base seed: default channel and initial-state seeds derive from it, and
    /// so do the per-run channel seeds in Monte Carlo mode.
    #[serde(default)]
    pub seed: u64,
    pub topology: TopologySpec,
    pub channel: ChannelSpec,
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub initial_state: InitialStateSpec,
    #[serde(default)]
    pub run: RunControls,
    #[serde(default)]
    pub output: Outputs,
}

/// TOML integers are signed, so every seed that is written back into a
/// document must fit in 63 bits.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Initial-state seed derived from the base seed. Stream `u64::MAX` is never
/// used for a Monte Carlo run.
pub fn initial_state_seed(seed: u64) -> u64 {
    derive_seed(seed, usize::MAX) >> 1
}

/// Channel seed derived from the base seed.
pub fn channel_seed(seed: u64) -> u64 {
    derive_seed(seed, 0) >> 1
}

/// Parses and validates a scenario document. A summary file is accepted
/// too: its `[config]` table is used.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config_with_seed(text, None)
}

/// Like [`parse_config`]; `seed` replaces the base seed and discards any
/// explicit channel or initial-state seed so both are re-derived from it.
pub fn parse_config_with_seed(text: &str, seed: Option<u64>) -> Result<ScenarioConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::one(format!("parse error: {e}")))?;
    let table = match table.get("config") {
        Some(toml::Value::Table(inner)) => inner.clone(),
        _ => table,
    };
    let mut cfg: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::one(format!("{e}")))?;
    if let Some(s) = seed {
        if s > MAX_SEED {
            return Err(ConfigError::one(format!(
                "seed: must be at most {MAX_SEED} (TOML integers are signed), got {s}"
            )));
        }
        cfg.seed = s;
        cfg.channel.seed = None;
        if let InitialStateSpec::Uniform { seed, .. } = &mut cfg.initial_state {
            *seed = None;
        }
    }
    resolve(cfg)
}

fn resolve(mut cfg: ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    cfg.channel.seed.get_or_insert(channel_seed(cfg.seed));
    if let InitialStateSpec::Uniform { seed, .. } = &mut cfg.initial_state {
        seed.get_or_insert(initial_state_seed(cfg.seed));
    }
    if cfg.protocol.variant == Variant::Superposition {
        cfg.protocol.sigma_policy.get_or_insert(SigmaPolicyKind::Fixed);
    }

    let mut problems = Vec::new();
    let graph = match cfg.topology.build() {
        Ok(g) => Some(g),
        Err(e) => {
            problems.push(format!("topology: {e}"));
            None
        }
    };
    if let Err(e) = cfg.channel.law.validate() {
        problems.push(format!("channel.law: {e}"));
    }
    if let Some(g) = &graph {
        check_protocol(&mut cfg, g, &mut problems);
        check_initial_state(&cfg.initial_state, g.n(), &mut problems);
    }
    if !(cfg.run.tol > 0.0 && cfg.run.tol.is_finite()) {
        problems.push(format!("run.tol: spread tolerance must be positive and finite, got {}", cfg.run.tol));
    }
    if cfg.run.max_steps == 0 {
        problems.push("run.max_steps: must be at least 1".into());
    }
    if cfg.output.trace.is_empty() || cfg.output.summary.is_empty() {
        problems.push("output: file names must not be empty".into());
    } else if cfg.output.trace == cfg.output.summary {
        problems.push(format!("output: trace and summary both point at {:?}", cfg.output.trace));
    }

    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { problems })
    }
}

fn check_protocol(cfg: &mut ScenarioConfig, g: &WeightedDigraph, problems: &mut Vec<String>) {
    let p = &mut cfg.protocol;
    let n = g.n();
    if p.variant != Variant::Naive && !g.is_strongly_connected() {
        problems.push(format!("topology: the {} variant requires a strongly connected graph", p.variant.name()));
    }
    match p.variant {
        Variant::Superposition => match p.sigma_policy {
            Some(SigmaPolicyKind::ChannelAware) => {
                if p.sigma.is_some() {
                    problems.push("protocol.sigma: not used with sigma_policy = \"channel-aware\"; set eps".into());
                }
                let h_max = match cfg.channel.law {
                    ChannelLaw::Uniform { hi, .. } => hi,
                    ChannelLaw::Constant { value } => value,
                };
                let deg = (0..n).map(|i| g.in_degree(i)).max().unwrap_or(0) as f64;
                match p.eps {
                    None => problems.push("protocol.eps: required with sigma_policy = \"channel-aware\"".into()),
                    Some(e) if !(e > 0.0 && e * deg * h_max < 1.0) => problems.push(format!(
                        "protocol.eps: channel-aware sigma = eps * sum h must stay in (0, 1); need 0 < eps < {}, got {e}",
                        1.0 / (deg * h_max)
                    )),
                    _ => {}
                }
            }
            _ => {
                if p.eps.is_some() {
                    problems
                        .push("protocol.eps: only used by the classical variant or the channel-aware policy".into());
                }
                match &p.sigma {
                    None => problems.push("protocol.sigma: required for the superposition variant".into()),
                    Some(SigmaValue::Common(s)) => check_sigma(*s, "protocol.sigma", problems),
                    Some(SigmaValue::PerAgent(v)) => {
                        if v.len() != n {
                            problems.push(format!("protocol.sigma: expected {n} values, got {}", v.len()));
                        }
                        for (i, s) in v.iter().enumerate() {
                            check_sigma(*s, &format!("protocol.sigma[{}]", i + 1), problems);
                        }
                    }
                }
            }
        },
        Variant::Classical => {
            if p.sigma.is_some() || p.sigma_policy.is_some() {
                problems.push("protocol.sigma: not used by the classical variant".into());
            }
            match g.epsilon_bound() {
                Err(e) => problems.push(format!("topology: {e}")),
                Ok(delta) => match *p.eps.get_or_insert(delta / 2.0) {
                    e if !(e > 0.0) => problems.push(format!("protocol.eps: must be positive, got {e}")),
                    e if e >= delta => problems.push(format!(
                        "protocol.eps: must be below the maximum-in-degree bound Delta = {delta}, got {e}"
                    )),
                    _ => {}
                },
            }
        }
        Variant::Naive => {
            if p.sigma.is_some() || p.sigma_policy.is_some() || p.eps.is_some() {
                problems.push("protocol: the naive variant takes no sigma or eps".into());
            }
        }
    }
}

fn check_sigma(s: f64, field: &str, problems: &mut Vec<String>) {
    if !(s > 0.0 && s < 1.0) {
        problems.push(format!("{field}: sigma must lie in the open interval (0, 1), got {s}"));
    }
}

fn check_initial_state(spec: &InitialStateSpec, n: usize, problems: &mut Vec<String>) {
    match spec {
        InitialStateSpec::Uniform { lo, hi, .. } => {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                problems.push(format!("initial_state: uniform law needs finite lo < hi, got ({lo}, {hi})"));
            }
        }
        InitialStateSpec::Explicit { values } => {
            if values.len() != n {
                problems.push(format!("initial_state.values: expected {n} values, got {}", values.len()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                problems.push("initial_state.values: all values must be finite".into());
            }
        }
    }
}

impl ScenarioConfig {
    /// Core objects for a config returned by [`parse_config`].
    pub fn scenario(&self) -> mac_consensus::Result<Scenario> {
        let graph = self.topology.build()?;
        let n = graph.n();
        let channel = ChannelModel::new(
            self.channel.law,
            self.channel.mode,
            self.channel.seed.unwrap_or_else(|| channel_seed(self.seed)),
        )?;
        let protocol = match self.protocol.variant {
            Variant::Superposition => match (self.protocol.sigma_policy, &self.protocol.sigma) {
                (Some(SigmaPolicyKind::ChannelAware), _) => ProtocolConfig::Superposition {
                    sigma: SigmaPolicy::ChannelAware { eps: self.protocol.eps.unwrap_or(f64::NAN) },
                },
                (_, Some(SigmaValue::Common(s))) => {
                    ProtocolConfig::Superposition { sigma: SigmaPolicy::uniform(n, *s) }
                }
                (_, Some(SigmaValue::PerAgent(v))) => {
                    ProtocolConfig::Superposition { sigma: SigmaPolicy::Fixed(v.clone()) }
                }
                (_, None) => ProtocolConfig::Superposition { sigma: SigmaPolicy::Fixed(Vec::new()) },
            },
            Variant::Classical => ProtocolConfig::Classical { eps: self.protocol.eps.unwrap_or(f64::NAN) },
            Variant::Naive => ProtocolConfig::Naive,
        };
        let x0 = match &self.initial_state {
            InitialStateSpec::Uniform { lo, hi, seed } => {
                NetworkState::uniform(n, *lo, *hi, seed.unwrap_or_else(|| initial_state_seed(self.seed)))?
            }
            InitialStateSpec::Explicit { values } => values.clone(),
        };
        let options = RunOptions { tol: self.run.tol, max_steps: self.run.max_steps, record_matrices: false };
        Ok(Scenario { graph, channel, protocol, x0, options })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 42
        [topology]
        kind = "complete"
        n = 5
        [channel]
        law = { kind = "uniform", lo = 0.0, hi = 10.0 }
        mode = "iid"
        [protocol]
        variant = "superposition"
        sigma = 0.5
    "#;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.run.tol, 1e-9);
        assert_eq!(cfg.run.max_steps, 10_000);
        assert_eq!(cfg.channel.seed, Some(channel_seed(42)));
        assert_eq!(
            cfg.initial_state,
            InitialStateSpec::Uniform { lo: 0.0, hi: TAU, seed: Some(initial_state_seed(42)) }
        );
        assert_eq!(cfg.protocol.sigma_policy, Some(SigmaPolicyKind::Fixed));
        assert_eq!(cfg.output, Outputs::default());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(channel_seed(42), initial_state_seed(42));
    }

    #[test]
    fn sigma_out_of_range_is_named() {
        let err = parse_config(&MINIMAL.replace("sigma = 0.5", "sigma = 1.2")).unwrap_err();
        assert_eq!(err.problems.len(), 1);
        assert!(err.problems[0].contains("(0, 1)"), "{err}");
    }

    #[test]
    fn problems_are_aggregated() {
        let text = MINIMAL.replace("sigma = 0.5", "sigma = [0.5, 0.0]").replace("hi = 10.0", "hi = -1.0");
        let err = parse_config(&text).unwrap_err();
        // wrong length, sigma[2] = 0, bad channel law
        assert_eq!(err.problems.len(), 3, "{err}");
    }

    #[test]
    fn chain_is_rejected_for_consensus_variants() {
        let chain = r#"
            [topology]
            kind = "custom"
            n = 3
            arcs = [[1, 2, 1.0], [2, 3, 1.0]]
            [channel]
            law = { kind = "constant", value = 1.0 }
            mode = "time-invariant"
            [protocol]
            variant = "superposition"
            sigma = 0.5
        "#;
        let err = parse_config(chain).unwrap_err();
        assert!(err.problems.iter().any(|p| p.contains("strongly connected")), "{err}");
        let naive = chain.replace("variant = \"superposition\"\n            sigma = 0.5", "variant = \"naive\"");
        assert!(parse_config(&naive).is_ok());
    }

    #[test]
    fn classical_eps_defaults_and_bound() {
        let text = MINIMAL.replace("variant = \"superposition\"\n        sigma = 0.5", "variant = \"classical\"");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.protocol.eps, Some(0.125));
        let err =
            parse_config(&text.replace("variant = \"classical\"", "variant = \"classical\"\neps = 0.25")).unwrap_err();
        assert!(err.problems[0].contains("Delta"), "{err}");
    }

    #[test]
    fn channel_aware_eps_is_bounded() {
        let text = MINIMAL.replace("sigma = 0.5", "sigma_policy = \"channel-aware\"\neps = 0.0249");
        assert!(parse_config(&text).is_ok());
        // complete n = 5 with h <= 10: the bound is 1 / (4 * 10)
        assert!(parse_config(&text.replace("0.0249", "0.025")).is_err());
    }

    #[test]
    fn unknown_fields_and_syntax_errors_are_reported() {
        let err = parse_config(&MINIMAL.replace("sigma = 0.5", "sigma = 0.5\nsigam = 0.2")).unwrap_err();
        assert!(err.to_string().contains("sigam"), "{err}");
        let err = parse_config("seed = ").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn seed_override_rederives_seeds() {
        let text = MINIMAL.replace("mode = \"iid\"", "mode = \"iid\"\nseed = 7");
        let cfg = parse_config_with_seed(&text, Some(9)).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.channel.seed, Some(channel_seed(9)));
        assert_eq!(parse_config(&text).unwrap().channel.seed, Some(7));
        assert!(parse_config_with_seed(&text, Some(u64::MAX)).is_err());
    }

    #[test]
    fn summary_document_is_accepted() {
        let cfg = parse_config(MINIMAL).unwrap();
        #[derive(Serialize)]
        struct Doc<'a> {
            result: toml::Table,
            config: &'a ScenarioConfig,
        }
        let doc = toml::to_string(&Doc { result: toml::Table::new(), config: &cfg }).unwrap();
        assert_eq!(parse_config(&doc).unwrap(), cfg);
    }

    #[test]
    fn scenario_builds_core_objects() {
        let s = parse_config(MINIMAL).unwrap().scenario().unwrap();
        assert_eq!(s.graph.n(), 5);
        assert_eq!(s.x0.len(), 5);
        assert!(s.x0.iter().all(|&v| (0.0..TAU).contains(&v)));
    }
}
