//! The two-stage round protocol.
//!
//! Every round, each leader below `min(c_l, |N_l|)` sends with probability
//! `p` one request, preferring unmatched neighbors. Then each follower keeps
//! each incoming request with probability `q`, and joins one surviving
//! requester uniformly at random. Both stages read the matching as it was
//! at the start of the round; the follower moves are committed together.
//!
//! Random draws happen in a fixed order so that a run is a pure function of
//! the network, the initial matching and the seed:
//!
//! 1. leaders in ascending id order: one activation draw for every leader
//!    that is eligible to recruit, then one target draw if it activated;
//! 2. followers in ascending id order: one survival draw per request in
//!    ascending requester order, then one pick among survivors if any.
//!
//! The generator is [`ChaCha8Rng`] seeded with `seed_from_u64`; activation
//! and survival use `gen::<f64>() < prob`, picks use `gen_range(0..len)`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matching::Matching;
use crate::network::{FollowerId, LeaderId};

pub type SimRng = ChaCha8Rng;

/// Name of the generator, written into run metadata.
pub const RNG_NAME: &str = "chacha8";

pub fn sim_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of the `index`-th replication under `base` (one splitmix64 step).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("{name} must lie in (0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("eps must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop at the first round whose starting deficit is strictly below the
    /// threshold.
    DeficitBelow(f64),
    Stable,
    /// Run exactly `max_rounds` rounds.
    FixedRounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordMode {
    EveryRound,
    /// Only round 0, rounds where the record changes, and the last round.
    /// Enough to answer every first-passage query exactly.
    Changes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub p: f64,
    pub q: f64,
    /// Acceptance probability for followers that are already matched.
    /// Defaults to `q`.
    pub q_matched: Option<f64>,
    pub seed: u64,
    pub max_rounds: u64,
    pub stop_rule: StopRule,
    pub record: RecordMode,
}

impl SimConfig {
    pub fn new(p: f64, q: f64, seed: u64) -> Result<Self, DynamicsError> {
        let cfg = SimConfig {
            p,
            q,
            q_matched: None,
            seed,
            max_rounds: 1_000_000,
            stop_rule: StopRule::Stable,
            record: RecordMode::EveryRound,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        check_probability("p", self.p)?;
        check_probability("q", self.q)?;
        if let Some(qm) = self.q_matched {
            check_probability("q_matched", qm)?;
        }
        Ok(())
    }

    pub fn with_stop(mut self, rule: StopRule) -> Self {
        self.stop_rule = rule;
        self
    }

    pub fn with_max_rounds(mut self, rounds: u64) -> Self {
        self.max_rounds = rounds;
        self
    }

    pub fn with_record(mut self, mode: RecordMode) -> Self {
        self.record = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_q_matched(mut self, q_matched: f64) -> Result<Self, DynamicsError> {
        check_probability("q_matched", q_matched)?;
        self.q_matched = Some(q_matched);
        Ok(self)
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), DynamicsError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(DynamicsError::Probability { name, value })
    }
}

/// State at the beginning of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub deficit: usize,
    pub poor_leaders: usize,
    pub matched_followers: usize,
}

impl RoundRecord {
    fn observe(round: u64, m: &Matching) -> Self {
        RoundRecord {
            round,
            deficit: m.total_deficit(),
            poor_leaders: m.poor_leader_count(),
            matched_followers: m.matched_followers(),
        }
    }

    fn same_state(&self, other: &RoundRecord) -> bool {
        (self.deficit, self.poor_leaders, self.matched_followers)
            == (other.deficit, other.poor_leaders, other.matched_followers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    RuleSatisfied,
    MaxRounds,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::RuleSatisfied => "rule_satisfied",
            StopReason::MaxRounds => "max_rounds",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<RoundRecord>,
    pub final_matching: Matching,
    /// Rounds executed; the final matching is `M(rounds_elapsed)`.
    pub rounds_elapsed: u64,
    pub stop_reason: StopReason,
    pub seed: u64,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,deficit,poor_leaders,matched_followers\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.round, r.deficit, r.poor_leaders, r.matched_followers
            );
        }
        let _ = writeln!(
            out,
            "# stop_reason={} rounds={} seed={} rng={}",
            self.stop_reason.as_str(),
            self.rounds_elapsed,
            self.seed,
            RNG_NAME
        );
        out
    }

    /// First recorded round satisfying `pred`.
    pub fn first_round(&self, mut pred: impl FnMut(&RoundRecord) -> bool) -> Option<u64> {
        self.records.iter().find(|r| pred(r)).map(|r| r.round)
    }
}

/// Requests sent in one round, grouped by target follower. Each list is in
/// ascending leader order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRequests {
    per_follower: Vec<Vec<u32>>,
}

impl RoundRequests {
    pub fn new(num_followers: usize) -> Self {
        RoundRequests {
            per_follower: vec![Vec::new(); num_followers],
        }
    }

    /// Adds a request. Requests must be added in ascending leader order.
    pub fn push(&mut self, leader: LeaderId, follower: FollowerId) {
        self.per_follower[follower.index()].push(leader.index() as u32);
    }

    pub fn to(&self, follower: FollowerId) -> impl ExactSizeIterator<Item = LeaderId> + '_ {
        self.per_follower[follower.index()]
            .iter()
            .map(|&l| LeaderId::from_index(l as usize))
    }

    pub fn len(&self) -> usize {
        self.per_follower.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.per_follower.iter().all(Vec::is_empty)
    }

    /// All `(leader, follower)` requests, ordered by follower.
    pub fn iter(&self) -> impl Iterator<Item = (LeaderId, FollowerId)> + '_ {
        self.per_follower.iter().enumerate().flat_map(|(f, ls)| {
            ls.iter()
                .map(move |&l| (LeaderId::from_index(l as usize), FollowerId::from_index(f)))
        })
    }
}

#[inline]
fn coin(rng: &mut impl Rng, prob: f64) -> bool {
    rng.gen::<f64>() < prob
}

/// Leader stage against the snapshot `matching`.
pub fn leader_stage(matching: &Matching, p: f64, rng: &mut impl Rng) -> RoundRequests {
    let net = matching.network();
    let mut requests = RoundRequests::new(net.num_followers());
    let mut unmatched = Vec::new();
    let mut others = Vec::new();
    for l in 0..net.num_leaders() {
        let adj = net.leader_adj_raw(l);
        let team = matching.team_raw(l).len();
        if team >= net.capacities()[l].min(adj.len()) || !coin(rng, p) {
            continue;
        }
        unmatched.clear();
        unmatched.extend(adj.iter().copied().filter(|&f| matching.owner_raw(f as usize).is_none()));
        let target = if !unmatched.is_empty() {
            unmatched[rng.gen_range(0..unmatched.len())]
        } else {
            others.clear();
            others.extend(
                adj.iter()
                    .copied()
                    .filter(|&f| matching.owner_raw(f as usize) != Some(l as u32)),
            );
            others[rng.gen_range(0..others.len())]
        };
        requests.per_follower[target as usize].push(l as u32);
    }
    requests
}

/// Follower decisions as `(follower, new leader)` pairs, 0-based.
fn follower_moves(
    matching: &Matching,
    requests: &RoundRequests,
    q: f64,
    q_matched: f64,
    rng: &mut impl Rng,
) -> Vec<(usize, usize)> {
    let mut moves = Vec::new();
    let mut alive = Vec::new();
    for (f, incoming) in requests.per_follower.iter().enumerate() {
        if incoming.is_empty() {
            continue;
        }
        let keep = if matching.owner_raw(f).is_some() { q_matched } else { q };
        alive.clear();
        alive.extend(incoming.iter().copied().filter(|_| coin(rng, keep)));
        if !alive.is_empty() {
            let chosen = alive[rng.gen_range(0..alive.len())];
            moves.push((f, chosen as usize));
        }
    }
    moves
}

/// Follower stage: returns the matching at the start of the next round.
pub fn follower_stage(
    matching: &Matching,
    requests: &RoundRequests,
    q: f64,
    q_matched: Option<f64>,
    rng: &mut impl Rng,
) -> Matching {
    let moves = follower_moves(matching, requests, q, q_matched.unwrap_or(q), rng);
    let mut next = matching.clone();
    for (f, l) in moves {
        next.assign(f, Some(l));
    }
    next
}

/// One full round applied in place.
pub fn step(matching: &mut Matching, config: &SimConfig, rng: &mut impl Rng) {
    let requests = leader_stage(matching, config.p, rng);
    if requests.is_empty() {
        return;
    }
    let moves = follower_moves(
        matching,
        &requests,
        config.q,
        config.q_matched.unwrap_or(config.q),
        rng,
    );
    for (f, l) in moves {
        matching.assign(f, Some(l));
    }
}

/// Runs the protocol until `config.stop_rule` holds at the start of a round,
/// or `config.max_rounds` rounds have been executed.
pub fn run(initial: &Matching, config: &SimConfig) -> Trajectory {
    let rule = config.stop_rule;
    run_until(initial, config, move |m| match rule {
        StopRule::DeficitBelow(threshold) => (m.total_deficit() as f64) < threshold,
        StopRule::Stable => m.is_stable(),
        StopRule::FixedRounds => false,
    })
}

/// Like [`run`] with a custom stopping predicate evaluated on `M(t)` at the
/// start of every round.
///
/// Panics if the total deficit ever increases between rounds.
pub fn run_until(
    initial: &Matching,
    config: &SimConfig,
    mut stop: impl FnMut(&Matching) -> bool,
) -> Trajectory {
    let mut rng = sim_rng(config.seed);
    let mut current = initial.clone();
    let mut records: Vec<RoundRecord> = Vec::new();
    let mut round = 0u64;
    let mut last = RoundRecord::observe(0, &current);
    let reason = loop {
        let rec = RoundRecord::observe(round, &current);
        assert!(
            rec.deficit <= last.deficit,
            "deficit increased from {} to {} at round {round}",
            last.deficit,
            rec.deficit
        );
        let keep = match config.record {
            RecordMode::EveryRound => true,
            RecordMode::Changes => round == 0 || !rec.same_state(&last),
        };
        if keep {
            records.push(rec);
        }
        last = rec;
        if stop(&current) {
            break StopReason::RuleSatisfied;
        }
        if round >= config.max_rounds {
            break StopReason::MaxRounds;
        }
        step(&mut current, config, &mut rng);
        round += 1;
    };
    if records.last().map(|r| r.round) != Some(round) {
        records.push(last);
    }
    Trajectory {
        records,
        final_matching: current,
        rounds_elapsed: round,
        stop_reason: reason,
        seed: config.seed,
    }
}

/// `tau(x)`: first round whose starting deficit is strictly below `x * m`.
pub fn tau(trajectory: &Trajectory, x: f64) -> Option<u64> {
    tau_relative(trajectory, x, 0)
}

/// First round with `d(M(t)) - d_star < x * m`.
pub fn tau_relative(trajectory: &Trajectory, x: f64, d_star: usize) -> Option<u64> {
    let budget = x * trajectory.final_matching.network().num_followers() as f64;
    trajectory.first_round(|r| (r.deficit.saturating_sub(d_star) as f64) < budget)
}

/// Round bound `c * floor(1/eps) * (Delta/(p q))^floor(1/eps) * m` and the
/// probability `1 - exp(-c m eps^2 / 2)` with which it holds, for the
/// smallest admissible `c = 1 + 1/(m (1 - eps))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Bound {
    pub c: f64,
    pub phase_len: u64,
    pub rounds: f64,
    pub probability: f64,
}

pub fn theorem1_bound(
    m: usize,
    max_degree: usize,
    p: f64,
    q: f64,
    eps: f64,
) -> Result<Theorem1Bound, DynamicsError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DynamicsError::Epsilon(eps));
    }
    if m == 0 {
        return Err(DynamicsError::Zero("m"));
    }
    if max_degree == 0 {
        return Err(DynamicsError::Zero("max degree"));
    }
    check_probability("p", p)?;
    check_probability("q", q)?;
    let mf = m as f64;
    let c = 1.0 + 1.0 / (mf * (1.0 - eps));
    let k = (1.0 / eps).floor();
    let rounds = c * k * (max_degree as f64 / (p * q)).powf(k) * mf;
    let probability = 1.0 - (-c * mf * eps * eps / 2.0).exp();
    Ok(Theorem1Bound {
        c,
        phase_len: k as u64,
        rounds,
        probability,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::matching::{empty_matching, shortest_dd_path};
    use crate::network::{gen_counterexample, gen_random, BipartiteNetwork, ConstraintRule};
    use crate::oracle::best_matching;

    fn g(n: usize) -> Arc<BipartiteNetwork> {
        Arc::new(gen_counterexample(n).unwrap())
    }

    fn diag(net: &Arc<BipartiteNetwork>, skip: &[u32]) -> Matching {
        let n = net.num_leaders() as u32;
        Matching::from_pairs(
            net.clone(),
            (1..=n)
                .filter(|i| !skip.contains(i))
                .map(|i| (LeaderId(i), FollowerId(i))),
        )
        .unwrap()
    }

    fn m_prime(net: &Arc<BipartiteNetwork>) -> Matching {
        let n = net.num_leaders() as u32;
        Matching::from_pairs(net.clone(), (2..=n).map(|i| (LeaderId(i), FollowerId(i - 1)))).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0, 0).is_err());
        assert!(SimConfig::new(1.0, 1.5, 0).is_err());
        assert!(SimConfig::new(0.5, 0.5, 0).unwrap().with_q_matched(0.0).is_err());
        assert!(SimConfig::new(1.0, 1.0, 0).is_ok());
    }

    #[test]
    fn stable_matching_sends_nothing() {
        let g6 = g(6);
        let star = diag(&g6, &[]);
        let mut rng = sim_rng(1);
        for p in [0.1, 0.5, 1.0] {
            for _ in 0..100 {
                assert!(leader_stage(&star, p, &mut rng).is_empty());
            }
        }
    }

    #[test]
    fn m_prime_sends_one_request_to_f1() {
        let g6 = g(6);
        let mp = m_prime(&g6);
        let mut rng = sim_rng(2);
        for _ in 0..50 {
            let req = leader_stage(&mp, 1.0, &mut rng);
            assert_eq!(req.iter().collect::<Vec<_>>(), vec![(LeaderId(1), FollowerId(1))]);
        }
    }

    #[test]
    fn leaders_prefer_unmatched() {
        // l1 neighbors f1 (matched to l2) and f2 (unmatched).
        let net = Arc::new(
            BipartiteNetwork::from_parts(
                2,
                2,
                &[
                    (LeaderId(1), FollowerId(1)),
                    (LeaderId(1), FollowerId(2)),
                    (LeaderId(2), FollowerId(1)),
                ],
                vec![1, 1],
            )
            .unwrap(),
        );
        let m = Matching::from_pairs(net, [(LeaderId(2), FollowerId(1))]).unwrap();
        let mut rng = sim_rng(3);
        for _ in 0..200 {
            let req = leader_stage(&m, 1.0, &mut rng);
            assert_eq!(req.iter().collect::<Vec<_>>(), vec![(LeaderId(1), FollowerId(2))]);
        }
    }

    #[test]
    fn saturated_leader_stays_quiet() {
        // c = 3 but only two neighbors, both already in the team.
        let net = Arc::new(
            BipartiteNetwork::from_parts(
                1,
                2,
                &[(LeaderId(1), FollowerId(1)), (LeaderId(1), FollowerId(2))],
                vec![3],
            )
            .unwrap(),
        );
        let m = Matching::from_pairs(net, [(LeaderId(1), FollowerId(1)), (LeaderId(1), FollowerId(2))])
            .unwrap();
        assert!(leader_stage(&m, 1.0, &mut sim_rng(0)).is_empty());
    }

    #[test]
    fn follower_stage_basics() {
        let g3 = g(3);
        let empty = empty_matching(&g3);
        let none = RoundRequests::new(3);
        assert_eq!(follower_stage(&empty, &none, 1.0, None, &mut sim_rng(0)), empty);

        let mut one = RoundRequests::new(3);
        one.push(LeaderId(2), FollowerId(2));
        let next = follower_stage(&empty, &one, 1.0, None, &mut sim_rng(0));
        assert_eq!(next.pairs().collect::<Vec<_>>(), vec![(LeaderId(2), FollowerId(2))]);
    }

    #[test]
    fn contested_follower_splits_evenly() {
        let g3 = g(3);
        let empty = empty_matching(&g3);
        let mut req = RoundRequests::new(3);
        req.push(LeaderId(2), FollowerId(1));
        req.push(LeaderId(3), FollowerId(1));
        let trials = 10_000;
        let mut rng = sim_rng(42);
        let joined_l2 = (0..trials)
            .filter(|_| {
                follower_stage(&empty, &req, 1.0, None, &mut rng).leader_of(FollowerId(1))
                    == Some(LeaderId(2))
            })
            .count();
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!((joined_l2 as f64 - trials as f64 / 2.0).abs() < 3.0 * sigma, "{joined_l2}");
    }

    #[test]
    fn rejection_probability_per_request() {
        // One request with q = 0.3: accepted about 30% of the time.
        let g2 = g(2);
        let empty = empty_matching(&g2);
        let mut req = RoundRequests::new(2);
        req.push(LeaderId(1), FollowerId(1));
        let trials = 10_000;
        let mut rng = sim_rng(5);
        let hits = (0..trials)
            .filter(|_| follower_stage(&empty, &req, 0.3, None, &mut rng).matched_followers() == 1)
            .count();
        let sigma = (trials as f64 * 0.3 * 0.7).sqrt();
        assert!((hits as f64 - 3000.0).abs() < 3.0 * sigma);
        // A matched follower uses q_matched instead.
        let held = Matching::from_pairs(g2.clone(), [(LeaderId(2), FollowerId(1))]).unwrap();
        let mut req = RoundRequests::new(2);
        req.push(LeaderId(1), FollowerId(1));
        let mut rng = sim_rng(6);
        assert!((0..500).all(|_| follower_stage(&held, &req, 1.0, Some(1e-12), &mut rng) == held));
    }

    #[test]
    fn initial_stable_stops_immediately() {
        let g5 = g(5);
        let cfg = SimConfig::new(1.0, 1.0, 0).unwrap();
        let traj = run(&diag(&g5, &[]), &cfg);
        assert_eq!(traj.rounds_elapsed, 0);
        assert_eq!(traj.stop_reason, StopReason::RuleSatisfied);
        assert_eq!(traj.records.len(), 1);
    }

    #[test]
    fn height_zero_matchings_finish_in_one_round() {
        for n in 1..=8 {
            let net = g(n);
            for k in 1..=n as u32 {
                let traj = run(&diag(&net, &[k]), &SimConfig::new(1.0, 1.0, k as u64).unwrap());
                assert_eq!(traj.rounds_elapsed, 1, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn m_prime_reaches_the_diagonal() {
        let g6 = g(6);
        for seed in 0..20 {
            let traj = run(&m_prime(&g6), &SimConfig::new(1.0, 1.0, seed).unwrap());
            assert_eq!(traj.stop_reason, StopReason::RuleSatisfied);
            assert_eq!(traj.final_matching, diag(&g6, &[]));
            assert!(traj.records.iter().all(|r| r.deficit <= 1 && r.poor_leaders <= 1));
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let net = Arc::new(gen_random(12, 20, 0.3, 9, ConstraintRule::Fixed(2)).unwrap());
        let cfg = SimConfig::new(0.7, 0.6, 1234)
            .unwrap()
            .with_stop(StopRule::FixedRounds)
            .with_max_rounds(200);
        let a = run(&empty_matching(&net), &cfg);
        let b = run(&empty_matching(&net), &cfg);
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let c = run(&empty_matching(&net), &cfg.with_seed(1235));
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn change_mode_agrees_on_first_passage() {
        let net = Arc::new(gen_random(10, 25, 0.25, 4, ConstraintRule::CappedRatio).unwrap());
        let cfg = SimConfig::new(0.8, 0.9, 77)
            .unwrap()
            .with_stop(StopRule::FixedRounds)
            .with_max_rounds(300);
        let full = run(&empty_matching(&net), &cfg);
        let sparse = run(&empty_matching(&net), &cfg.with_record(RecordMode::Changes));
        assert_eq!(full.final_matching, sparse.final_matching);
        assert!(sparse.records.len() <= full.records.len());
        for x in [0.05, 0.1, 0.3, 0.5, 0.9, 1.0] {
            assert_eq!(tau(&full, x), tau(&sparse, x));
        }
    }

    #[test]
    fn capacity_and_monotonicity_every_round() {
        for seed in 0..30u64 {
            let net = Arc::new(gen_random(6, 9, 0.5, seed, ConstraintRule::Fixed(1 + seed as usize % 3)).unwrap());
            let cfg = SimConfig::new(0.5 + (seed % 5) as f64 * 0.1, 0.4 + (seed % 3) as f64 * 0.3, seed).unwrap();
            let mut rng = sim_rng(seed);
            let mut m = empty_matching(&net);
            let mut last = m.total_deficit();
            for _ in 0..100 {
                let req = leader_stage(&m, cfg.p, &mut rng);
                let mut leaders: Vec<_> = req.iter().map(|(l, _)| l).collect();
                let count = leaders.len();
                leaders.sort();
                leaders.dedup();
                assert_eq!(leaders.len(), count, "one request per leader");
                m = follower_stage(&m, &req, cfg.q, None, &mut rng);
                m.check_invariants().unwrap();
                assert!(m.total_deficit() <= last);
                last = m.total_deficit();
            }
        }
    }

    #[test]
    fn self_stabilizing() {
        let net = Arc::new(gen_random(5, 12, 0.6, 3, ConstraintRule::Fixed(2)).unwrap());
        let best = best_matching(&net);
        assert!(best.stable_exists);
        let mut rng = sim_rng(8);
        let mut m = best.witness.clone();
        for _ in 0..200 {
            let req = leader_stage(&m, 1.0, &mut rng);
            assert!(req.is_empty());
            m = follower_stage(&m, &req, 1.0, None, &mut rng);
        }
        assert_eq!(m, best.witness);
    }

    #[test]
    fn tau_examples() {
        let g4 = g(4);
        let cfg = SimConfig::new(1.0, 1.0, 0).unwrap();
        let traj = run(&m_prime(&g4), &cfg);
        // d = 1 < 0.5 * 4 at round 0.
        assert_eq!(tau(&traj, 0.5), Some(0));
        let stuck = run(
            &m_prime(&g4),
            &cfg.with_stop(StopRule::FixedRounds).with_max_rounds(0),
        );
        assert_eq!(tau(&stuck, 0.25), None);
        // Empty start on G_4: d = 4 = m, so tau(1) is the first drop.
        let traj = run(&empty_matching(&g4), &cfg);
        let first_drop = traj.records.iter().find(|r| r.deficit < 4).unwrap().round;
        assert_eq!(tau(&traj, 1.0), Some(first_drop));
        // Sum of constraints below m: tau(1) = 0.
        let net = Arc::new(gen_random(2, 5, 1.0, 0, ConstraintRule::Fixed(2)).unwrap());
        let traj = run(&empty_matching(&net), &cfg);
        assert_eq!(tau(&traj, 1.0), Some(0));
    }

    #[test]
    fn theorem1_examples() {
        let b = theorem1_bound(10, 2, 1.0, 1.0, 0.5).unwrap();
        assert!((b.c - 1.2).abs() < 1e-12);
        assert_eq!(b.phase_len, 2);
        assert!((b.rounds - 96.0).abs() < 1e-9);
        assert!((b.probability - (1.0 - (-1.5f64).exp())).abs() < 1e-12);

        let b = theorem1_bound(10, 3, 0.5, 0.8, 0.75).unwrap();
        assert_eq!(b.phase_len, 1);
        assert!((b.rounds - b.c * 3.0 / 0.4 * 10.0).abs() < 1e-9);

        let pq = theorem1_bound(40, 4, 0.3, 0.7, 0.2).unwrap();
        let qp = theorem1_bound(40, 4, 0.7, 0.3, 0.2).unwrap();
        assert_eq!(pq.rounds, qp.rounds);

        assert!(theorem1_bound(10, 2, 1.0, 1.0, 1.0).is_err());
        assert!(theorem1_bound(10, 2, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let g3 = g(3);
        let traj = run(&empty_matching(&g3), &SimConfig::new(1.0, 1.0, 17).unwrap());
        let csv = traj.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "round,deficit,poor_leaders,matched_followers");
        assert_eq!(lines[1], "0,3,3,0");
        assert!(lines.last().unwrap().starts_with("# stop_reason=rule_satisfied"));
        assert!(lines.last().unwrap().contains("seed=17"));
        assert_eq!(lines.len(), traj.records.len() + 2);
    }

    /// From a matching with `d = eps' m`, the deficit drops within
    /// `floor(1/eps')` rounds with probability at least `(pq/Delta)^floor(1/eps')`.
    #[test]
    fn deficit_drop_probability_lower_bound() {
        let cases: Vec<(Arc<BipartiteNetwork>, Matching, f64, f64)> = vec![
            (g(4), m_prime(&g(4)), 1.0, 1.0),
            (g(3), m_prime(&g(3)), 0.8, 0.9),
            (g(5), diag(&g(5), &[2, 4]), 0.6, 0.7),
        ];
        for (net, start, p, q) in cases {
            let start = Matching::from_pairs(net.clone(), start.pairs()).unwrap();
            assert!(shortest_dd_path(&start).is_some());
            let m = net.num_followers() as f64;
            let d0 = start.total_deficit();
            let eps = d0 as f64 / m;
            let window = (1.0 / eps).floor() as u64;
            let bound = (p * q / net.max_leader_degree() as f64).powi(window as i32);
            let trials = 10_000u64;
            let hits = (0..trials)
                .filter(|&seed| {
                    let cfg = SimConfig::new(p, q, seed)
                        .unwrap()
                        .with_stop(StopRule::DeficitBelow(d0 as f64))
                        .with_max_rounds(window);
                    run(&start, &cfg).stop_reason == StopReason::RuleSatisfied
                })
                .count();
            let freq = hits as f64 / trials as f64;
            let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
            assert!(freq >= bound - 3.0 * sigma, "freq {freq} bound {bound}");
        }
    }
}
