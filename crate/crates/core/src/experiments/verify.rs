//! Property suites with machine-readable outcomes.
//!
//! Each suite is a deterministic function of its seed and reports a one-line
//! summary. [`run_verify`] runs the selection named in the spec (all suites
//! by default) and collects the outcomes, with seeds, into a report.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, run_fig5, ExperimentError, ExperimentKind, ExperimentSpec};
use crate::counterexample::{
    build_tree, check_deficit_one_structure, count_all, count_by_height, height, index_set,
    matching_from_index_set, omega, omega_inverse, reachable_set, rounds_to_pre_stable,
    transition_distribution, walk_hitting_times, worst_index_set, IndexSet,
};
use crate::dynamics::{run, sim_rng, step, theorem1_bound, RecordMode, SimConfig, StopReason, StopRule, RNG_NAME};
use crate::matching::{
    approx_status, empty_matching, max_follower_disjoint_dd_paths, shortest_dd_path, Matching,
};
use crate::network::{
    gen_bounded_planted, gen_counterexample, gen_random, BipartiteNetwork, ConstraintRule, FollowerId, LeaderId,
};
use crate::oracle::{best_matching, brute_force_d_star, enumerate_matchings, for_each_matching, EnumerationLimits};
use crate::stats::{binomial_sigma, ks_statistic, median};

/// Suite names in their default running order.
pub const SUITE_NAMES: &[&str] = &[
    "oracle_exactness",
    "counterexample_structure",
    "deficit_monotonicity",
    "short_paths",
    "disjoint_paths",
    "approximation_bound",
    "exponential_trend",
    "index_transitions",
    "height_counts",
    "tree_equivalence",
    "random_sweep_shape",
    "index_set_bijection",
    "tree_bijection",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: bool,
    pub seed: u64,
    pub elapsed_ms: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub seed: u64,
    pub rng: String,
    pub suites: Vec<SuiteOutcome>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Seed handed to the suite at `index` of [`SUITE_NAMES`].
pub fn suite_seed(base: u64, name: &str) -> u64 {
    let index = SUITE_NAMES.iter().position(|&s| s == name).unwrap_or(usize::MAX);
    derive_seed(base, index as u64)
}

/// Runs one suite by name, or `None` for an unknown name.
pub fn run_suite(name: &str, seed: u64) -> Option<SuiteOutcome> {
    let suite: fn(u64) -> (bool, String) = match name {
        "oracle_exactness" => oracle_exactness,
        "counterexample_structure" => counterexample_structure,
        "deficit_monotonicity" => deficit_monotonicity,
        "short_paths" => short_paths,
        "disjoint_paths" => disjoint_paths,
        "approximation_bound" => approximation_bound,
        "exponential_trend" => exponential_trend,
        "index_transitions" => index_transitions,
        "height_counts" => height_counts,
        "tree_equivalence" => tree_equivalence,
        "random_sweep_shape" => random_sweep_shape,
        "index_set_bijection" => index_set_bijection,
        "tree_bijection" => tree_bijection,
        _ => return None,
    };
    let started = Instant::now();
    let (passed, detail) = suite(seed);
    Some(SuiteOutcome {
        name: name.to_string(),
        passed,
        seed,
        elapsed_ms: started.elapsed().as_millis() as u64,
        detail,
    })
}

pub fn run_verify(spec: &ExperimentSpec) -> Result<VerifyReport, ExperimentError> {
    if spec.kind != ExperimentKind::VerifySuite {
        return Err(ExperimentError::Invalid("run_verify needs a verify spec".into()));
    }
    spec.validate()?;
    let names: Vec<&str> = if spec.suites.is_empty() {
        SUITE_NAMES.to_vec()
    } else {
        spec.suites.iter().map(String::as_str).collect()
    };
    let suites: Vec<SuiteOutcome> = names
        .iter()
        .map(|name| run_suite(name, suite_seed(spec.seed, name)).expect("names validated"))
        .collect();
    Ok(VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        seed: spec.seed,
        rng: RNG_NAME.to_string(),
        suites,
    })
}

/// Checks a user-supplied network, and optionally a matching on it.
pub fn verify_instance(net: &Arc<BipartiteNetwork>, matching: Option<&Matching>, eps: f64) -> SuiteOutcome {
    let started = Instant::now();
    let best = best_matching(net);
    let mut problems = Vec::new();
    let mut facts = vec![
        format!("d*={}", best.d_star),
        format!("stable_exists={}", best.stable_exists),
    ];
    if let Err(e) = best.witness.check_invariants() {
        problems.push(format!("oracle witness: {e}"));
    }
    if let Some(m) = matching {
        if let Err(e) = m.check_invariants() {
            problems.push(format!("matching: {e}"));
        }
        let d = m.total_deficit();
        facts.push(format!("d={d}"));
        facts.push(format!("status={:?}", approx_status(m, eps, best.d_star)));
        if d < best.d_star {
            problems.push(format!("deficit {d} below d* {}", best.d_star));
        }
        match shortest_dd_path(m) {
            Some(p) => facts.push(format!("shortest_path_len={}", p.len())),
            None => {
                facts.push("shortest_path_len=none".into());
                if d > best.d_star {
                    problems.push("no deficit-decreasing path although d > d*".into());
                }
            }
        }
        if best.stable_exists && d > 0 {
            let f = m.network().num_followers();
            let k = f / d;
            let sp = shortest_dd_path(m).map_or(usize::MAX, |p| p.len());
            if sp > 2 * k - 1 {
                problems.push(format!("shortest path {sp} longer than {}", 2 * k - 1));
            }
            match max_follower_disjoint_dd_paths(m, &best.witness) {
                Ok(dp) => {
                    facts.push(format!("disjoint_paths={}", dp.count));
                    if dp.count < d {
                        problems.push(format!("only {} disjoint paths for deficit {d}", dp.count));
                    }
                }
                Err(e) => problems.push(e.to_string()),
            }
        }
    }
    let passed = problems.is_empty();
    let mut detail = facts.join(" ");
    if !passed {
        detail.push_str("; ");
        detail.push_str(&problems.join("; "));
    }
    SuiteOutcome {
        name: "instance".into(),
        passed,
        seed: 0,
        elapsed_ms: started.elapsed().as_millis() as u64,
        detail,
    }
}

fn shared_net(net: BipartiteNetwork) -> Arc<BipartiteNetwork> {
    Arc::new(net)
}

fn g(n: usize) -> Arc<BipartiteNetwork> {
    shared_net(gen_counterexample(n).expect("n >= 1"))
}

fn first_few(v: &[String]) -> String {
    v.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
}

fn oracle_exactness(seed: u64) -> (bool, String) {
    let mut rng = sim_rng(seed);
    let specs: Vec<(usize, usize, f64, u64, ConstraintRule)> = (0..200)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(1..=6);
            let rho = [0.2, 0.35, 0.5, 0.75, 1.0][rng.gen_range(0..5)];
            let rule = if m >= n && rng.gen_bool(0.3) {
                ConstraintRule::CappedRatio
            } else {
                ConstraintRule::Fixed(rng.gen_range(1..=3))
            };
            (n, m, rho, rng.gen(), rule)
        })
        .collect();
    let results: Vec<(bool, Option<String>)> = specs
        .par_iter()
        .map(|&(n, m, rho, s, rule)| {
            let net = gen_random(n, m, rho, s, rule)
                .or_else(|_| gen_random(n, m, rho, s, ConstraintRule::Fixed(1)))
                .expect("fixed constraints always generate");
            let net = shared_net(net);
            let best = best_matching(&net);
            let brute = brute_force_d_star(&net, EnumerationLimits::default()).expect("tiny network");
            let ok = best.d_star == brute
                && best.witness.total_deficit() == best.d_star
                && best.witness.check_invariants().is_ok();
            let msg = (!ok).then(|| format!("n={n} m={m} rho={rho} seed={s}: flow {} brute {brute}", best.d_star));
            (best.stable_exists, msg)
        })
        .collect();
    let bad: Vec<String> = results.iter().filter_map(|r| r.1.clone()).collect();
    let stable = results.iter().filter(|r| r.0).count();
    (
        bad.is_empty(),
        format!(
            "200 networks (n,m <= 6), {stable} stable-admitting, {} mismatches {}",
            bad.len(),
            first_few(&bad)
        ),
    )
}

fn counterexample_structure(_seed: u64) -> (bool, String) {
    let mut bad = Vec::new();
    for n in 1..=8 {
        let net = g(n);
        let best = best_matching(&net);
        let stable = enumerate_matchings(&net, EnumerationLimits::default(), |m| m.is_stable()).expect("small");
        let diagonal = Matching::from_pairs(
            net.clone(),
            (1..=n as u32).map(|i| (LeaderId(i), FollowerId(i))),
        )
        .expect("diagonal is a matching");
        if best.d_star != 0 || stable != [diagonal] {
            bad.push(format!("n={n}: d*={} stable matchings={}", best.d_star, stable.len()));
        }
    }
    (
        bad.is_empty(),
        format!("n=1..8: d*=0 with the diagonal as unique stable matching; {}", if bad.is_empty() { "ok".into() } else { first_few(&bad) }),
    )
}

fn deficit_monotonicity(seed: u64) -> (bool, String) {
    let results: Vec<(u64, Vec<String>)> = (0..60u64)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, k);
            let mut rng = sim_rng(s);
            let n = rng.gen_range(2..=12);
            let m = rng.gen_range(2..=20);
            let rho = rng.gen_range(0.1..=0.9);
            let rule = ConstraintRule::Fixed(rng.gen_range(1..=3));
            let net = shared_net(gen_random(n, m, rho, s, rule).expect("fixed constraints"));
            let p = rng.gen_range(0.05..=1.0);
            let q = rng.gen_range(0.05..=1.0);
            let mut cfg = SimConfig::new(p, q, s).expect("valid probabilities");
            if rng.gen_bool(0.3) {
                cfg = cfg.with_q_matched(rng.gen_range(0.05..=1.0)).expect("valid");
            }
            let mut sim = sim_rng(s);
            let mut mm = empty_matching(&net);
            let mut bad = Vec::new();
            let rounds = 250u64;
            for t in 0..rounds {
                let before = mm.total_deficit();
                step(&mut mm, &cfg, &mut sim);
                if mm.total_deficit() > before {
                    bad.push(format!("instance {k} round {t}: {before} -> {}", mm.total_deficit()));
                }
                if let Err(e) = mm.check_invariants() {
                    bad.push(format!("instance {k} round {t}: {e}"));
                }
            }
            (rounds, bad)
        })
        .collect();
    let rounds: u64 = results.iter().map(|r| r.0).sum();
    let bad: Vec<String> = results.into_iter().flat_map(|r| r.1).collect();
    (
        bad.is_empty(),
        format!("{rounds} rounds over 60 instances, {} violations {}", bad.len(), first_few(&bad)),
    )
}

/// `(a, b)` stands for `eps = a / b`.
const EPS_GRID: [(usize, usize); 10] = [(1, 5), (1, 4), (1, 3), (2, 5), (1, 2), (3, 5), (2, 3), (3, 4), (4, 5), (1, 1)];

#[derive(Debug, Clone, Default)]
struct PathStats {
    networks: usize,
    exhaustive: usize,
    matchings: usize,
    short_checks: usize,
    short_bad: Vec<String>,
    disjoint_checks: usize,
    disjoint_bad: Vec<String>,
}

impl PathStats {
    fn merge(mut self, other: PathStats) -> PathStats {
        self.networks += other.networks;
        self.exhaustive += other.exhaustive;
        self.matchings += other.matchings;
        self.short_checks += other.short_checks;
        self.short_bad.extend(other.short_bad);
        self.disjoint_checks += other.disjoint_checks;
        self.disjoint_bad.extend(other.disjoint_bad);
        self
    }
}

/// One representative of every isomorphism class of stable-admitting
/// networks with `n, m <= 5`. Both checked properties are invariant under
/// relabelling leaders and followers, so this covers every such network.
/// A stable matching needs `sum c_l <= m` and `1 <= c_l <= |N_l|`, which also
/// rules out `n > m`.
fn path_family() -> Vec<Arc<BipartiteNetwork>> {
    let mut nets = Vec::new();
    for m in 1..=5usize {
        let perms = permutations(m);
        // leader type = (neighbour mask, constraint)
        let types: Vec<(u32, usize)> = (1u32..(1 << m))
            .flat_map(|mask| (1..=mask.count_ones() as usize).map(move |c| (mask, c)))
            .collect();
        for n in 1..=m {
            let mut pick = vec![0usize; n];
            loop {
                let team: Vec<(u32, usize)> = pick.iter().map(|&i| types[i]).collect();
                if team.iter().map(|t| t.1).sum::<usize>() <= m && is_canonical(&team, &perms) {
                    let edges: Vec<(LeaderId, FollowerId)> = team
                        .iter()
                        .enumerate()
                        .flat_map(|(l, &(mask, _))| {
                            (0..m)
                                .filter(move |f| mask & (1 << f) != 0)
                                .map(move |f| (LeaderId::from_index(l), FollowerId::from_index(f)))
                        })
                        .collect();
                    let caps = team.iter().map(|t| t.1).collect();
                    let net = shared_net(BipartiteNetwork::from_parts(n, m, &edges, caps).expect("valid shape"));
                    if best_matching(&net).stable_exists {
                        nets.push(net);
                    }
                }
                // next non-decreasing index sequence
                let mut i = n;
                while i > 0 && pick[i - 1] == types.len() - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                pick[i - 1] += 1;
                let v = pick[i - 1];
                pick[i..].iter_mut().for_each(|x| *x = v);
            }
        }
    }
    nets
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for k in 0..m {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..=k).map(move |pos| {
                    let mut q = p.clone();
                    q.insert(pos, k);
                    q
                })
            })
            .collect();
    }
    out
}

/// `team` is sorted; it is canonical if no follower relabelling gives a
/// lexicographically smaller sorted team.
fn is_canonical(team: &[(u32, usize)], perms: &[Vec<usize>]) -> bool {
    let mut image = team.to_vec();
    perms.iter().all(|perm| {
        for (slot, &(mask, c)) in image.iter_mut().zip(team) {
            let mut moved = 0u32;
            for (f, &to) in perm.iter().enumerate() {
                if mask & (1 << f) != 0 {
                    moved |= 1 << to;
                }
            }
            *slot = (moved, c);
        }
        image.sort_unstable();
        image.as_slice() >= team
    })
}

fn check_network(net: &Arc<BipartiteNetwork>) -> PathStats {
    let mut st = PathStats {
        networks: 1,
        ..Default::default()
    };
    let stables = enumerate_matchings(net, EnumerationLimits::default(), |m| m.is_stable()).expect("small");
    let mut refs: Vec<Matching> = if stables.len() <= 3 {
        stables.clone()
    } else {
        vec![
            stables[0].clone(),
            stables[stables.len() / 2].clone(),
            stables[stables.len() - 1].clone(),
        ]
    };
    let witness = best_matching(net).witness;
    if !refs.contains(&witness) {
        refs.push(witness);
    }
    let m = net.num_followers();
    for_each_matching(net, EnumerationLimits::default(), |mm| {
        st.matchings += 1;
        let d = mm.total_deficit();
        if d == 0 {
            return;
        }
        let applicable: Vec<usize> = EPS_GRID
            .iter()
            .filter(|&&(a, b)| d * b >= a * m)
            .map(|&(a, b)| 2 * (b / a) - 1)
            .collect();
        let shortest = shortest_dd_path(mm).map(|p| p.len());
        for &bound in &applicable {
            st.short_checks += 1;
            if shortest.is_none_or(|len| len > bound) {
                st.short_bad.push(format!("{:?} shortest {shortest:?} > {bound}", mm.pairs().collect::<Vec<_>>()));
            }
        }
        for stable in &refs {
            st.disjoint_checks += 1;
            let dp = match max_follower_disjoint_dd_paths(mm, stable) {
                Ok(dp) => dp,
                Err(e) => {
                    st.disjoint_bad.push(e.to_string());
                    continue;
                }
            };
            let deficits: Vec<usize> = net.leaders().map(|l| mm.leader_deficit(l)).collect();
            let mut used = vec![false; m];
            let mut fine = dp.count >= d && dp.count == dp.paths.len() && dp.starts_per_leader(net.num_leaders()) == deficits;
            for p in &dp.paths {
                fine &= p.validate_within(mm, stable).is_ok();
                for f in &p.followers {
                    fine &= !std::mem::replace(&mut used[f.index()], true);
                }
            }
            if !fine {
                st.disjoint_bad.push(format!(
                    "{:?} vs {:?}: {} paths for deficit {d}",
                    mm.pairs().collect::<Vec<_>>(),
                    stable.pairs().collect::<Vec<_>>(),
                    dp.count
                ));
            }
            // The short path also exists inside M + N.
            let inside = dp.paths.iter().map(|p| p.len()).min();
            for &bound in &applicable {
                st.short_checks += 1;
                if inside.is_none_or(|len| len > bound) {
                    st.short_bad.push(format!("{:?}: no path of length <= {bound} in M+N", mm.pairs().collect::<Vec<_>>()));
                }
            }
        }
    })
    .expect("small network");
    st
}

fn path_stats() -> PathStats {
    static CACHE: OnceLock<PathStats> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            let nets = path_family();
            let classes = nets.len();
            PathStats {
                exhaustive: classes,
                ..nets.par_iter().map(check_network).reduce(PathStats::default, PathStats::merge)
            }
        })
        .clone()
}

/// Shares the family of [`disjoint_paths`]. The family is fixed, so the seed
/// is unused.
fn short_paths(_seed: u64) -> (bool, String) {
    let st = path_stats();
    (
        st.short_bad.is_empty(),
        format!(
            "{} network classes (all with n, m <= 5), {} matchings, {} length checks over eps in 1/5..1, {} violations {}",
            st.networks,
            st.matchings,
            st.short_checks,
            st.short_bad.len(),
            first_few(&st.short_bad)
        ),
    )
}

fn disjoint_paths(_seed: u64) -> (bool, String) {
    let st = path_stats();
    (
        st.disjoint_bad.is_empty(),
        format!(
            "{} network classes (all with n, m <= 5), {} (matching, stable) pairs, {} violations {}",
            st.exhaustive,
            st.disjoint_checks,
            st.disjoint_bad.len(),
            first_few(&st.disjoint_bad)
        ),
    )
}

fn approximation_bound(seed: u64) -> (bool, String) {
    let (n, m, delta, eps) = (20, 40, 4, 0.5);
    let results: Vec<(bool, u64, f64)> = (0..10u64)
        .into_par_iter()
        .flat_map_iter(|k| {
            let net = shared_net(gen_bounded_planted(n, m, delta, derive_seed(seed, k)).expect("valid"));
            let d_star = best_matching(&net).d_star;
            let bound = theorem1_bound(m, net.max_leader_degree(), 1.0, 1.0, eps).expect("valid").rounds;
            let start = empty_matching(&net);
            (0..10u64)
                .map(|r| {
                    let cfg = SimConfig::new(1.0, 1.0, derive_seed(seed ^ 0xa5a5, k * 10 + r))
                        .expect("valid")
                        .with_stop(StopRule::DeficitBelow(eps * m as f64 + d_star as f64))
                        .with_max_rounds(bound.ceil() as u64)
                        .with_record(RecordMode::Changes);
                    let t = run(&start, &cfg);
                    (t.stop_reason == StopReason::RuleSatisfied, t.rounds_elapsed, bound)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let hits = results.iter().filter(|r| r.0).count();
    let slowest = results.iter().map(|r| r.1).max().unwrap_or(0);
    let bound = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    (
        hits >= 99,
        format!(
            "{hits}/100 runs reached d < {eps}m within the bound ({bound:.0} rounds); slowest {slowest} rounds, margin {:.0}x",
            bound / slowest.max(1) as f64
        ),
    )
}

fn rounds_to_stable(n: usize, seed: u64, runs: usize) -> Vec<Option<u64>> {
    let net = g(n);
    let start = matching_from_index_set(&worst_index_set(n), &net).expect("valid");
    (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let cfg = SimConfig::new(1.0, 1.0, derive_seed(derive_seed(seed, n as u64), r))
                .expect("valid")
                .with_max_rounds(100_000_000)
                .with_record(RecordMode::Changes);
            let t = run(&start, &cfg);
            (t.stop_reason == StopReason::RuleSatisfied).then_some(t.rounds_elapsed)
        })
        .collect()
}

fn exponential_trend(seed: u64) -> (bool, String) {
    let sizes = [8usize, 10, 12, 14, 16];
    let mut medians = Vec::new();
    let mut truncated = 0;
    for &n in &sizes {
        let samples = rounds_to_stable(n, seed, 50);
        truncated += samples.iter().filter(|s| s.is_none()).count();
        let done: Vec<u64> = samples.into_iter().flatten().collect();
        medians.push(median(&done).unwrap_or(f64::NAN));
    }
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    // least-squares slope of log10(median) against n
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.log10()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let passed = truncated == 0 && ratios.iter().all(|&r| r >= 1.5) && slope > 0.0;
    let meds: Vec<String> = sizes.iter().zip(&medians).map(|(n, m)| format!("n={n}:{m}")).collect();
    let rs: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    (
        passed,
        format!(
            "medians {} ratios [{}] log10 slope {slope:.3}/n, {truncated} truncated",
            meds.join(" "),
            rs.join(", ")
        ),
    )
}

fn index_transitions(seed: u64) -> (bool, String) {
    let net = g(6);
    let states: [&[usize]; 5] = [&[2, 4, 6], &[3, 5, 6], &[2, 3, 4, 5, 6], &[4, 6], &[1, 3, 6]];
    let trials = 10_000u64;
    let mut bad = Vec::new();
    let mut checked = 0;
    for (si, idx) in states.iter().enumerate() {
        let set = IndexSet::new(6, idx.iter().copied()).expect("valid");
        let start = matching_from_index_set(&set, &net).expect("valid");
        let expected = transition_distribution(&set, 1.0, 1.0).expect("unit parameters");
        let cfg = SimConfig::new(1.0, 1.0, 0).expect("valid");
        let mut rng = sim_rng(derive_seed(seed, si as u64));
        let mut counts: HashMap<IndexSet, u64> = HashMap::new();
        for _ in 0..trials {
            let mut mm = start.clone();
            step(&mut mm, &cfg, &mut rng);
            let next = index_set(&mm).map_err(|e| e.to_string());
            match next {
                Ok(s) => *counts.entry(s).or_default() += 1,
                Err(e) => bad.push(format!("{set}: {e}")),
            }
        }
        for (succ, &prob) in &expected {
            checked += 1;
            let got = counts.get(succ).copied().unwrap_or(0) as f64;
            let want = prob * trials as f64;
            let sigma = binomial_sigma(trials, prob);
            if (got - want).abs() > 3.0 * sigma.max(1e-9) {
                bad.push(format!("{set} -> {succ}: {got} vs {want:.0} +- {:.1}", 3.0 * sigma));
            }
        }
        if let Some(stray) = counts.keys().find(|k| !expected.contains_key(k)) {
            bad.push(format!("{set} -> {stray} outside the support"));
        }
    }
    (
        bad.is_empty(),
        format!("5 states on G_6, {trials} rounds each, {checked} successor frequencies; {} off {}", bad.len(), first_few(&bad)),
    )
}

fn height_counts(_seed: u64) -> (bool, String) {
    let results: Vec<(usize, Vec<String>)> = (1..=12usize)
        .into_par_iter()
        .map(|n| {
            let net = g(n);
            let mut by_height = vec![0u128; n];
            let limits = EnumerationLimits {
                max_deficit: Some(1),
                ..Default::default()
            };
            for_each_matching(&net, limits, |mm| {
                if mm.total_deficit() == 1 {
                    by_height[height(mm).expect("deficit one")] += 1;
                }
            })
            .expect("bounded");
            let mut bad = Vec::new();
            for (j, &c) in by_height.iter().enumerate() {
                let want = count_by_height(n, j).expect("in range");
                if c != want {
                    bad.push(format!("n={n} j={j}: {c} vs {want}"));
                }
            }
            let total: u128 = by_height.iter().sum();
            if total != count_all(n).expect("in range") {
                bad.push(format!("n={n}: total {total}"));
            }
            (n, bad)
        })
        .collect();
    let bad: Vec<String> = results.into_iter().flat_map(|r| r.1).collect();
    (
        bad.is_empty(),
        format!("n=1..12, every height: {} mismatches {}", bad.len(), first_few(&bad)),
    )
}

fn tree_equivalence(seed: u64) -> (bool, String) {
    let n = 8;
    let net = g(n);
    let origin = worst_index_set(n);
    let start = matching_from_index_set(&origin, &net).expect("valid");
    let tree = build_tree(origin.height()).expect("h >= 1");
    let node = omega(&tree, &origin, &origin).expect("origin is reachable");
    let runs = 10_000u64;
    let dyn_seed = derive_seed(seed, 1);
    let dynamics: Vec<u64> = (0..runs)
        .into_par_iter()
        .map(|r| {
            rounds_to_pre_stable(&start, derive_seed(dyn_seed, r), 100_000_000)
                .expect("valid start")
                .expect("reached")
        })
        .collect();
    let walks = walk_hitting_times(&tree, node, derive_seed(seed, 2), runs as usize).expect("valid start");
    let ks = ks_statistic(&dynamics, &walks).expect("non-empty");
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    (
        ks < 0.03,
        format!(
            "G_8 from h=7, {runs} runs vs {runs} walks on T*_7: KS {ks:.4}, means {:.1} / {:.1}",
            mean(&dynamics),
            mean(&walks)
        ),
    )
}

/// 5 x 5 replications leave the two m/n = 3 curves within noise of each
/// other, so this uses 20 x 20.
fn random_sweep_shape(seed: u64) -> (bool, String) {
    let spec = ExperimentSpec {
        eps: vec![0.9, 0.7, 0.5],
        networks: 20,
        runs: 20,
        seed,
        ..ExperimentSpec::fig5()
    };
    let out = match run_fig5(&spec) {
        Ok(o) => o,
        Err(e) => return (false, e.to_string()),
    };
    let k = spec.eps.len();
    let mean = |pair: usize, e: usize| out.rows[pair * k + e].mean_rounds.unwrap_or(f64::INFINITY);
    let mut bad = Vec::new();
    for (pi, &(n, m)) in spec.pairs.iter().enumerate() {
        for e in 1..k {
            if mean(pi, e) < mean(pi, e - 1) {
                bad.push(format!("({n},{m}) eps {} < eps {}", spec.eps[e], spec.eps[e - 1]));
            }
        }
    }
    for e in 0..k {
        for pi in 1..spec.pairs.len() {
            if mean(pi, e) < mean(pi - 1, e) {
                bad.push(format!("eps {}: {:?} faster than {:?}", spec.eps[e], spec.pairs[pi], spec.pairs[pi - 1]));
            }
        }
    }
    let table: Vec<String> = spec
        .pairs
        .iter()
        .enumerate()
        .map(|(pi, (n, m))| {
            let ms: Vec<String> = (0..k).map(|e| format!("{:.2}", mean(pi, e))).collect();
            format!("{n}x{m}:[{}]", ms.join(","))
        })
        .collect();
    let truncated: usize = out.rows.iter().map(|r| r.truncated).sum();
    (
        bad.is_empty() && truncated == 0,
        format!(
            "{}x{} replications, means at eps 0.9/0.7/0.5 {}; {truncated} truncated; {}",
            spec.networks,
            spec.runs,
            table.join(" "),
            if bad.is_empty() { "shape ok".into() } else { first_few(&bad) }
        ),
    )
}

fn index_set_bijection(_seed: u64) -> (bool, String) {
    let results: Vec<Vec<String>> = (1..=10usize)
        .into_par_iter()
        .map(|n| {
            let net = g(n);
            let mut bad = Vec::new();
            let mut seen = 0usize;
            let limits = EnumerationLimits {
                max_deficit: Some(1),
                ..Default::default()
            };
            for_each_matching(&net, limits, |mm| {
                if mm.total_deficit() > 1 {
                    return;
                }
                seen += 1;
                let back = index_set(mm).and_then(|s| matching_from_index_set(&s, &net));
                if back.as_ref() != Ok(mm) {
                    bad.push(format!("n={n}: round trip failed"));
                }
                if mm.total_deficit() == 1 {
                    if let Err(e) = check_deficit_one_structure(mm) {
                        bad.push(format!("n={n}: {e}"));
                    }
                }
            })
            .expect("bounded");
            if seen != 1 << n {
                bad.push(format!("n={n}: {seen} matchings with deficit <= 1"));
            }
            bad
        })
        .collect();
    let bad: Vec<String> = results.into_iter().flatten().collect();
    (
        bad.is_empty(),
        format!("n=1..10, all deficit <= 1 matchings: {} problems {}", bad.len(), first_few(&bad)),
    )
}

fn tree_bijection(_seed: u64) -> (bool, String) {
    let mut bad = Vec::new();
    for h in 1..=10usize {
        let origin = IndexSet::new(h + 1, [h, h + 1]).expect("valid");
        let tree = build_tree(h).expect("h >= 1");
        let states = reachable_set(&origin).expect("height >= 1");
        let nodes: Vec<usize> = states.iter().filter_map(|s| omega(&tree, &origin, s).ok()).collect();
        let mut distinct = nodes.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if nodes.len() != states.len() || distinct.len() != tree.len() {
            bad.push(format!("h={h}: {} states onto {} of {} nodes", states.len(), distinct.len(), tree.len()));
            continue;
        }
        for (s, &v) in states.iter().zip(&nodes) {
            if omega_inverse(&tree, &origin, v).as_ref() != Ok(s) {
                bad.push(format!("h={h}: inverse fails at {s}"));
            }
        }
        if h <= 7 {
            for (s, &a) in states.iter().zip(&nodes).skip(1) {
                let succ = transition_distribution(s, 1.0, 1.0).expect("unit parameters");
                for (t, &b) in states.iter().zip(&nodes) {
                    if succ.contains_key(t) != tree.adjacent(a, b) {
                        bad.push(format!("h={h}: {s} -> {t} disagrees with the tree"));
                    }
                }
            }
        }
    }
    (
        bad.is_empty(),
        format!("h=1..10 bijection, adjacency for h<=7: {} problems {}", bad.len(), first_few(&bad)),
    )
}
