//! Convergence times on `G_n` from the empty matching.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{derive_seed, metadata_footer, sim_config, ExperimentError, ExperimentKind, ExperimentSpec};
use crate::dynamics::{run, tau, StopReason};
use crate::matching::empty_matching;
use crate::network::gen_counterexample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fig4Metric {
    /// `tau(eps)`: first round with deficit below `eps * n`.
    Approx(f64),
    Stable,
    /// First round with no unmatched follower.
    FollowersMatched,
}

impl fmt::Display for Fig4Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fig4Metric::Approx(eps) => write!(f, "approx_{}", ((1.0 - eps) * 1e6).round() / 1e6),
            Fig4Metric::Stable => write!(f, "stable"),
            Fig4Metric::FollowersMatched => write!(f, "followers_matched"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Row {
    pub n: usize,
    pub metric: Fig4Metric,
    /// Mean over the runs that reached the target; `None` if none did.
    pub mean_rounds: Option<f64>,
    pub replications: usize,
    /// Runs that hit `max_rounds` first.
    pub truncated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Output {
    pub rows: Vec<Fig4Row>,
    /// Sizes skipped because the time budget ran out.
    pub skipped: Vec<usize>,
    pub csv: String,
}

/// Seed of run `r` at size `n`.
pub(crate) fn fig4_seed(base: u64, n: usize, r: usize) -> u64 {
    derive_seed(derive_seed(base, n as u64), r as u64)
}

pub fn run_fig4(spec: &ExperimentSpec) -> Result<Fig4Output, ExperimentError> {
    if spec.kind != ExperimentKind::Fig4Counterexample {
        return Err(ExperimentError::Invalid("run_fig4 needs a fig4 spec".into()));
    }
    spec.validate()?;
    let started = Instant::now();
    let mut metrics: Vec<Fig4Metric> = spec.eps.iter().map(|&e| Fig4Metric::Approx(e)).collect();
    metrics.push(Fig4Metric::Stable);
    metrics.push(Fig4Metric::FollowersMatched);

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &n in &spec.n_values {
        if spec
            .time_budget_secs
            .is_some_and(|b| started.elapsed().as_secs_f64() > b)
        {
            skipped.push(n);
            continue;
        }
        let net = Arc::new(gen_counterexample(n)?);
        let start = empty_matching(&net);
        let per_run: Vec<Vec<Option<u64>>> = (0..spec.runs)
            .into_par_iter()
            .map(|r| {
                let traj = run(&start, &sim_config(spec, fig4_seed(spec.seed, n, r)));
                metrics
                    .iter()
                    .map(|metric| match metric {
                        Fig4Metric::Approx(eps) => tau(&traj, *eps),
                        Fig4Metric::Stable => {
                            (traj.stop_reason == StopReason::RuleSatisfied).then_some(traj.rounds_elapsed)
                        }
                        Fig4Metric::FollowersMatched => traj.first_round(|rec| rec.matched_followers == n),
                    })
                    .collect()
            })
            .collect();
        for (k, &metric) in metrics.iter().enumerate() {
            let hits: Vec<u64> = per_run.iter().filter_map(|v| v[k]).collect();
            rows.push(Fig4Row {
                n,
                metric,
                mean_rounds: (!hits.is_empty())
                    .then(|| hits.iter().map(|&x| x as f64).sum::<f64>() / hits.len() as f64),
                replications: hits.len(),
                truncated: spec.runs - hits.len(),
            });
        }
    }
    let csv = render(spec, &rows, &skipped)?;
    Ok(Fig4Output { rows, skipped, csv })
}

fn render(spec: &ExperimentSpec, rows: &[Fig4Row], skipped: &[usize]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "metric", "mean_rounds", "replications"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.metric.to_string(),
            r.mean_rounds.map(|m| format!("{m:.3}")).unwrap_or_default(),
            r.replications.to_string(),
        ])?;
    }
    let mut csv = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8");
    let mut notes: Vec<String> = rows
        .iter()
        .filter(|r| r.truncated > 0)
        .map(|r| {
            format!(
                "truncated n={} metric={} runs={} cap={}",
                r.n, r.metric, r.truncated, spec.max_rounds
            )
        })
        .collect();
    if !skipped.is_empty() {
        let list: Vec<_> = skipped.iter().map(|n| n.to_string()).collect();
        notes.push(format!("truncated time_budget skipped_n={}", list.join(",")));
    }
    notes.push(format!("runs_per_n={} start=empty", spec.runs));
    csv.push_str(&metadata_footer(spec, &notes));
    Ok(csv)
}
