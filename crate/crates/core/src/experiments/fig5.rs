//! Time to reach `(1 - eps)`-approximate best matchings on random networks.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{derive_seed, metadata_footer, sim_config, ExperimentError, ExperimentKind, ExperimentSpec};
use crate::dynamics::{run_until, tau_relative};
use crate::matching::empty_matching;
use crate::network::gen_random;
use crate::oracle::best_matching;

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Row {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub mean_rounds: Option<f64>,
    pub replications: usize,
    pub truncated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Output {
    pub rows: Vec<Fig5Row>,
    pub skipped: Vec<(usize, usize)>,
    pub csv: String,
}

pub(crate) fn network_seed(base: u64, pair: usize, k: usize) -> u64 {
    derive_seed(derive_seed(base, pair as u64), k as u64)
}

pub(crate) fn run_seed(network_seed: u64, r: usize) -> u64 {
    derive_seed(network_seed ^ 0x5eed_0f00_d00d_f00d, r as u64)
}

pub fn run_fig5(spec: &ExperimentSpec) -> Result<Fig5Output, ExperimentError> {
    if spec.kind != ExperimentKind::Fig5RandomSweep {
        return Err(ExperimentError::Invalid("run_fig5 needs a fig5 spec".into()));
    }
    spec.validate()?;
    let started = Instant::now();
    let finest = spec.eps.iter().copied().fold(f64::INFINITY, f64::min);

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (pi, &(n, m)) in spec.pairs.iter().enumerate() {
        if spec
            .time_budget_secs
            .is_some_and(|b| started.elapsed().as_secs_f64() > b)
        {
            skipped.push((n, m));
            continue;
        }
        // taus[network][run][eps]
        let taus: Vec<Vec<Vec<Option<u64>>>> = (0..spec.networks)
            .into_par_iter()
            .map(|k| -> Result<_, ExperimentError> {
                let seed = network_seed(spec.seed, pi, k);
                let net = Arc::new(gen_random(n, m, spec.rho, seed, spec.constraint)?);
                let d_star = best_matching(&net).d_star;
                let budget = finest * m as f64;
                let start = empty_matching(&net);
                Ok((0..spec.runs)
                    .into_par_iter()
                    .map(|r| {
                        let cfg = sim_config(spec, run_seed(seed, r));
                        let traj = run_until(&start, &cfg, |mm| {
                            ((mm.total_deficit() - d_star) as f64) < budget
                        });
                        spec.eps.iter().map(|&e| tau_relative(&traj, e, d_star)).collect()
                    })
                    .collect())
            })
            .collect::<Result<_, _>>()?;
        for (ei, &eps) in spec.eps.iter().enumerate() {
            let hits: Vec<u64> = taus.iter().flatten().filter_map(|v| v[ei]).collect();
            let total = spec.networks * spec.runs;
            rows.push(Fig5Row {
                n,
                m,
                eps,
                mean_rounds: (!hits.is_empty())
                    .then(|| hits.iter().map(|&x| x as f64).sum::<f64>() / hits.len() as f64),
                replications: hits.len(),
                truncated: total - hits.len(),
            });
        }
    }
    let csv = render(spec, &rows, &skipped)?;
    Ok(Fig5Output { rows, skipped, csv })
}

fn render(spec: &ExperimentSpec, rows: &[Fig5Row], skipped: &[(usize, usize)]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "m", "eps", "mean_rounds", "replications"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.eps.to_string(),
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
                "truncated n={} m={} eps={} runs={} cap={}",
                r.n, r.m, r.eps, r.truncated, spec.max_rounds
            )
        })
        .collect();
    if !skipped.is_empty() {
        let list: Vec<_> = skipped.iter().map(|(n, m)| format!("{n}x{m}")).collect();
        notes.push(format!("truncated time_budget skipped_pairs={}", list.join(",")));
    }
    notes.push(format!(
        "rho={} networks={} runs_per_network={} start=empty target=d-d*<eps*m",
        spec.rho, spec.networks, spec.runs
    ));
    csv.push_str(&metadata_footer(spec, &notes));
    Ok(csv)
}
