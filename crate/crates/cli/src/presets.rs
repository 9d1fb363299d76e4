//! Built-in scenarios. Each one is an ordinary config document, so
//! `--preset` and `--config` go through the same parser.
//!
//! The `ti-`/`tv-` presets use the 5-node `balanced5` digraph (a 5-cycle plus
//! the pentagram chords) as a small balanced, strongly connected example
//! network, except `tv-complete-n30-sigma08`. The `mc-` presets are meant
//! for `--runs`.

const TI_BALANCED5: &str = r#"
seed = 1

[topology]
kind = "balanced5"

[channel]
law = { kind = "uniform", lo = 0.0, hi = 10.0 }
mode = "time-invariant"

[protocol]
variant = "superposition"
sigma = SIGMA
"#;

const TV_BALANCED5: &str = r#"
seed = 1

[topology]
kind = "balanced5"

[channel]
law = { kind = "uniform", lo = 0.0, hi = 10.0 }
mode = "iid"

[protocol]
variant = "superposition"
sigma = SIGMA
"#;

const TV_COMPLETE: &str = r#"
seed = 1

[topology]
kind = "complete"
n = NODES

[channel]
law = { kind = "uniform", lo = 0.0, hi = 10.0 }
mode = "iid"

[protocol]
variant = "superposition"
sigma = SIGMA
"#;

/// `(name, description)` of every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("ti-sigma02", "balanced5, time-invariant U(0,10] channel, sigma = 0.2"),
    ("ti-sigma05", "balanced5, time-invariant U(0,10] channel, sigma = 0.5 (same channel draw as ti-sigma02)"),
    ("tv-sigma05", "balanced5, i.i.d. U(0,10] channel, sigma = 0.5"),
    ("tv-complete-n30-sigma08", "complete n = 30, i.i.d. U(0,10] channel, sigma = 0.8"),
    ("mc-complete-n10-sigma02", "complete n = 10, i.i.d. channel, sigma = 0.2; use with --runs"),
    ("mc-complete-n10-sigma08", "complete n = 10, i.i.d. channel, sigma = 0.8; use with --runs"),
    ("mc-complete-n5-sigma08", "complete n = 5, i.i.d. channel, sigma = 0.8; use with --runs"),
    ("mc-complete-n30-sigma08", "complete n = 30, i.i.d. channel, sigma = 0.8; use with --runs"),
];

/// Config document of a named preset.
pub fn preset(name: &str) -> Option<String> {
    let doc = match name {
        "ti-sigma02" => TI_BALANCED5.replace("SIGMA", "0.2"),
        "ti-sigma05" => TI_BALANCED5.replace("SIGMA", "0.5"),
        "tv-sigma05" => TV_BALANCED5.replace("SIGMA", "0.5"),
        "tv-complete-n30-sigma08" => TV_COMPLETE.replace("NODES", "30").replace("SIGMA", "0.8"),
        "mc-complete-n10-sigma02" => TV_COMPLETE.replace("NODES", "10").replace("SIGMA", "0.2"),
        "mc-complete-n10-sigma08" => TV_COMPLETE.replace("NODES", "10").replace("SIGMA", "0.8"),
        "mc-complete-n5-sigma08" => TV_COMPLETE.replace("NODES", "5").replace("SIGMA", "0.8"),
        "mc-complete-n30-sigma08" => TV_COMPLETE.replace("NODES", "30").replace("SIGMA", "0.8"),
        _ => return None,
    };
    Some(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_parses() {
        for (name, _) in PRESETS {
            let doc = preset(name).unwrap();
            parse_config(&doc).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn time_invariant_presets_share_the_channel_draw() {
        let a = parse_config(&preset("ti-sigma02").unwrap()).unwrap();
        let b = parse_config(&preset("ti-sigma05").unwrap()).unwrap();
        assert_eq!(a.channel, b.channel);
        assert_eq!(a.initial_state, b.initial_state);
    }
}
