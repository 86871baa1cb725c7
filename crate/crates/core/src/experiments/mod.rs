//! Experiment drivers: the convergence studies on `G_n` and on random
//! networks, the verification suites, and SVG charts of their CSV output.
//!
//! Every driver is a pure function of an [`ExperimentSpec`]. Replication
//! seeds are derived from `spec.seed` with [`derive_seed`], so re-running a
//! spec reproduces its CSV byte for byte.

mod chart;
mod config;
mod fig4;
mod fig5;
pub mod verify;

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use chart::{emit_chart, ChartKind};
pub use config::{apply_config, load_spec, parse_spec};
pub use fig4::{run_fig4, Fig4Metric, Fig4Row};
pub use fig5::{run_fig5, Fig5Row};
pub use verify::{run_verify, verify_instance, SuiteOutcome, VerifyReport};

use crate::dynamics::RNG_NAME;
pub use crate::dynamics::derive_seed;
use crate::network::{ConstraintRule, NetworkError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid experiment spec: {0}")]
    Invalid(String),
    #[error("chart input: {0}")]
    Chart(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Fig4Counterexample,
    Fig5RandomSweep,
    VerifySuite,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Fig4Counterexample => "fig4_counterexample",
            ExperimentKind::Fig5RandomSweep => "fig5_random_sweep",
            ExperimentKind::VerifySuite => "verify_suite",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig4" | "fig4_counterexample" => Some(ExperimentKind::Fig4Counterexample),
            "fig5" | "fig5_random_sweep" => Some(ExperimentKind::Fig5RandomSweep),
            "verify" | "verify_suite" => Some(ExperimentKind::VerifySuite),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Network sizes for the `G_n` study.
    pub n_values: Vec<usize>,
    /// `(leaders, followers)` pairs for the random sweep.
    pub pairs: Vec<(usize, usize)>,
    pub rho: f64,
    pub eps: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub q_matched: Option<f64>,
    pub constraint: ConstraintRule,
    /// Networks drawn per parameter point.
    pub networks: usize,
    /// Runs per network.
    pub runs: usize,
    pub seed: u64,
    /// Per-run cap on rounds.
    pub max_rounds: u64,
    /// Wall-clock budget for the whole experiment; points not started when
    /// it runs out are skipped and reported as truncated.
    pub time_budget_secs: Option<f64>,
    /// Restricts the verification suites to these names.
    pub suites: Vec<String>,
    pub out: Option<PathBuf>,
    pub chart: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn fig4() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Fig4Counterexample,
            n_values: (4..=16).step_by(2).collect(),
            pairs: Vec::new(),
            rho: 0.0,
            eps: vec![0.1],
            p: 1.0,
            q: 1.0,
            q_matched: None,
            constraint: ConstraintRule::Fixed(1),
            networks: 1,
            runs: 20,
            seed: 1,
            max_rounds: 100_000_000,
            time_budget_secs: None,
            suites: Vec::new(),
            out: None,
            chart: None,
        }
    }

    pub fn fig5() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Fig5RandomSweep,
            n_values: Vec::new(),
            pairs: vec![(100, 200), (100, 300), (150, 450), (200, 600)],
            rho: 0.04,
            eps: (1..=9).rev().map(|k| k as f64 / 10.0).collect(),
            constraint: ConstraintRule::CappedRatio,
            networks: 20,
            max_rounds: 10_000_000,
            ..Self::fig4()
        }
    }

    pub fn verify() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::VerifySuite,
            n_values: Vec::new(),
            eps: Vec::new(),
            ..Self::fig4()
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Fig4Counterexample => Self::fig4(),
            ExperimentKind::Fig5RandomSweep => Self::fig5(),
            ExperimentKind::VerifySuite => Self::verify(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Invalid(m));
        if self.networks == 0 || self.runs == 0 {
            return bad("networks and runs must be at least 1".into());
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return bad(format!("eps {e} outside (0, 1)"));
        }
        for (name, v) in [("p", Some(self.p)), ("q", Some(self.q)), ("q_matched", self.q_matched)] {
            if let Some(v) = v {
                if !(v > 0.0 && v <= 1.0) {
                    return bad(format!("{name} = {v} outside (0, 1]"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho = {} outside [0, 1]", self.rho));
        }
        match self.kind {
            ExperimentKind::Fig4Counterexample => {
                if self.n_values.is_empty() || self.n_values.contains(&0) {
                    return bad("fig4 needs a non-empty list of positive n".into());
                }
            }
            ExperimentKind::Fig5RandomSweep => {
                if self.pairs.is_empty() || self.eps.is_empty() {
                    return bad("fig5 needs (n, m) pairs and an eps list".into());
                }
                if let Some(&(n, m)) = self.pairs.iter().find(|&&(n, m)| n == 0 || m == 0) {
                    return bad(format!("pair {n}x{m} has an empty side"));
                }
            }
            ExperimentKind::VerifySuite => {
                if let Some(s) = self.suites.iter().find(|s| !verify::SUITE_NAMES.contains(&s.as_str())) {
                    return bad(format!("unknown suite `{s}`"));
                }
            }
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; also the input of [`spec_hash`].
    pub fn to_config_string(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind.as_str());
        if !self.n_values.is_empty() {
            let ns: Vec<_> = self.n_values.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "n = {}", ns.join(", "));
        }
        if !self.pairs.is_empty() {
            let ps: Vec<_> = self.pairs.iter().map(|(n, m)| format!("{n}x{m}")).collect();
            let _ = writeln!(s, "pairs = {}", ps.join(", "));
        }
        let _ = writeln!(s, "rho = {}", self.rho);
        if !self.eps.is_empty() {
            let _ = writeln!(s, "eps = {}", join(&self.eps));
        }
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "q = {}", self.q);
        if let Some(qm) = self.q_matched {
            let _ = writeln!(s, "q_matched = {qm}");
        }
        let rule = match self.constraint {
            ConstraintRule::Fixed(c) => format!("fixed:{c}"),
            ConstraintRule::CappedRatio => "capped".into(),
        };
        let _ = writeln!(s, "constraint = {rule}");
        let _ = writeln!(s, "networks = {}", self.networks);
        let _ = writeln!(s, "runs = {}", self.runs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "max_rounds = {}", self.max_rounds);
        if let Some(b) = self.time_budget_secs {
            let _ = writeln!(s, "time_budget_secs = {b}");
        }
        if !self.suites.is_empty() {
            let _ = writeln!(s, "suites = {}", self.suites.join(", "));
        }
        s
    }
}

/// SHA-256 of the canonical spec rendering, as lowercase hex. Output paths
/// are not part of the rendering.
pub fn spec_hash(spec: &ExperimentSpec) -> String {
    let digest = Sha256::digest(spec.to_config_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Trailing metadata comments shared by every CSV output.
fn metadata_footer(spec: &ExperimentSpec, notes: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# kind={} spec_sha256={} seed={} rng={}",
        spec.kind.as_str(),
        spec_hash(spec),
        spec.seed,
        RNG_NAME
    );
    let _ = writeln!(s, "# p={} q={} max_rounds={}", spec.p, spec.q, spec.max_rounds);
    for note in notes {
        let _ = writeln!(s, "# {note}");
    }
    s
}

fn sim_config(spec: &ExperimentSpec, seed: u64) -> crate::dynamics::SimConfig {
    crate::dynamics::SimConfig {
        p: spec.p,
        q: spec.q,
        q_matched: spec.q_matched,
        seed,
        max_rounds: spec.max_rounds,
        stop_rule: crate::dynamics::StopRule::Stable,
        record: crate::dynamics::RecordMode::Changes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in [
            ExperimentKind::Fig4Counterexample,
            ExperimentKind::Fig5RandomSweep,
            ExperimentKind::VerifySuite,
        ] {
            ExperimentSpec::default_for(kind).validate().unwrap();
        }
    }

    #[test]
    fn validation_failures() {
        let mut s = ExperimentSpec::fig5();
        s.eps.push(1.0);
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::fig4();
        s.runs = 0;
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::verify();
        s.suites = vec!["nope".into()];
        assert!(s.validate().is_err());
    }

    #[test]
    fn hash_tracks_parameters_not_paths() {
        let a = ExperimentSpec::fig4();
        let mut b = a.clone();
        b.out = Some("x.csv".into());
        assert_eq!(spec_hash(&a), spec_hash(&b));
        b.seed = 2;
        assert_ne!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a).len(), 64);
    }
}
