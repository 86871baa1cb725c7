//! Exact best matchings by maximum flow, and a brute-force enumerator for
//! tiny networks.

use std::sync::Arc;

use thiserror::Error;

use crate::flow::FlowNetwork;
use crate::matching::Matching;
use crate::network::BipartiteNetwork;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration visited more than {0} matchings")]
    LimitExceeded(usize),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Smallest deficit over all matchings, `d*`.
    pub d_star: usize,
    pub witness: Matching,
    pub stable_exists: bool,
}

/// Best matching via source -> leader (`c_l`) -> follower (1) -> sink (1).
pub fn best_matching(net: &Arc<BipartiteNetwork>) -> OracleResult {
    let (n, m) = (net.num_leaders(), net.num_followers());
    let source = n + m;
    let sink = source + 1;
    let mut flow = FlowNetwork::new(sink + 1);
    for l in 0..n {
        flow.add_arc(source, l, net.capacities()[l] as u64);
    }
    let mut pair_arcs = Vec::with_capacity(net.num_edges());
    for l in 0..n {
        for &f in net.leader_adj_raw(l) {
            pair_arcs.push((l, f as usize, flow.add_arc(l, n + f as usize, 1)));
        }
    }
    for f in 0..m {
        flow.add_arc(n + f, sink, 1);
    }
    let value = flow.max_flow(source, sink) as usize;

    let mut witness = Matching::empty(Arc::clone(net));
    for (l, f, arc) in pair_arcs {
        if flow.flow(arc) == 1 {
            witness.assign(f, Some(l));
        }
    }
    let d_star = net.total_constraint() - value;
    debug_assert_eq!(witness.total_deficit(), d_star);
    OracleResult {
        d_star,
        witness,
        stable_exists: d_star == 0,
    }
}

pub fn stable_exists(net: &Arc<BipartiteNetwork>) -> bool {
    best_matching(net).stable_exists
}

/// Bounds for [`enumerate_matchings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Maximum number of complete matchings visited before giving up.
    pub max_visited: usize,
    /// When set, branches that cannot end with deficit at most this value
    /// are pruned. Matchings above the cap are never visited.
    pub max_deficit: Option<usize>,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits {
            max_visited: 10_000_000,
            max_deficit: None,
        }
    }
}

/// Calls `visit` on every matching of `net` (each follower assigned to one
/// neighbor or to nobody, teams capped at `c_l`). Returns how many were
/// visited.
pub fn for_each_matching(
    net: &Arc<BipartiteNetwork>,
    limits: EnumerationLimits,
    mut visit: impl FnMut(&Matching),
) -> Result<usize, OracleError> {
    let mut current = Matching::empty(Arc::clone(net));
    let mut visited = 0;
    descend(net, &limits, 0, &mut current, &mut visited, &mut visit)?;
    Ok(visited)
}

fn descend(
    net: &BipartiteNetwork,
    limits: &EnumerationLimits,
    follower: usize,
    current: &mut Matching,
    visited: &mut usize,
    visit: &mut impl FnMut(&Matching),
) -> Result<(), OracleError> {
    if let Some(cap) = limits.max_deficit {
        let remaining = net.num_followers() - follower;
        if current.total_deficit() > cap + remaining {
            return Ok(());
        }
    }
    if follower == net.num_followers() {
        *visited += 1;
        if *visited > limits.max_visited {
            return Err(OracleError::LimitExceeded(limits.max_visited));
        }
        visit(current);
        return Ok(());
    }
    descend(net, limits, follower + 1, current, visited, visit)?;
    for &l in net.follower_adj_raw(follower) {
        let l = l as usize;
        if current.team_raw(l).len() < net.capacities()[l] {
            current.assign(follower, Some(l));
            descend(net, limits, follower + 1, current, visited, visit)?;
            current.assign(follower, None);
        }
    }
    Ok(())
}

/// Every matching satisfying `predicate`.
pub fn enumerate_matchings(
    net: &Arc<BipartiteNetwork>,
    limits: EnumerationLimits,
    mut predicate: impl FnMut(&Matching) -> bool,
) -> Result<Vec<Matching>, OracleError> {
    let mut out = Vec::new();
    for_each_matching(net, limits, |m| {
        if predicate(m) {
            out.push(m.clone());
        }
    })?;
    Ok(out)
}

/// Smallest deficit found by exhaustive enumeration.
pub fn brute_force_d_star(
    net: &Arc<BipartiteNetwork>,
    limits: EnumerationLimits,
) -> Result<usize, OracleError> {
    let mut best = usize::MAX;
    for_each_matching(net, limits, |m| best = best.min(m.total_deficit()))?;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gen_counterexample, gen_random, ConstraintRule, FollowerId, LeaderId};

    fn g(n: usize) -> Arc<BipartiteNetwork> {
        Arc::new(gen_counterexample(n).unwrap())
    }

    #[test]
    fn counterexample_is_stable_with_diagonal_witness() {
        for n in 1..=10 {
            let res = best_matching(&g(n));
            assert_eq!(res.d_star, 0);
            assert!(res.stable_exists);
            let expected: Vec<_> = (1..=n as u32).map(|i| (LeaderId(i), FollowerId(i))).collect();
            assert_eq!(res.witness.pairs().collect::<Vec<_>>(), expected);
        }
    }

    #[test]
    fn two_leaders_one_follower() {
        let net = Arc::new(
            BipartiteNetwork::from_parts(
                2,
                1,
                &[(LeaderId(1), FollowerId(1)), (LeaderId(2), FollowerId(1))],
                vec![1, 1],
            )
            .unwrap(),
        );
        assert_eq!(best_matching(&net).d_star, 1);
        assert!(!stable_exists(&net));
    }

    #[test]
    fn capacity_above_degree() {
        let net = Arc::new(
            BipartiteNetwork::from_parts(1, 2, &[(LeaderId(1), FollowerId(1))], vec![2]).unwrap(),
        );
        assert!(!stable_exists(&net));
    }

    #[test]
    fn complete_network_with_room() {
        let net = Arc::new(gen_random(3, 7, 1.0, 0, ConstraintRule::Fixed(2)).unwrap());
        assert!(stable_exists(&net));
    }

    #[test]
    fn enumeration_counts_on_counterexample() {
        let g3 = g(3);
        let deficit_one =
            enumerate_matchings(&g3, EnumerationLimits::default(), |m| m.total_deficit() == 1).unwrap();
        assert_eq!(deficit_one.len(), 7);
        let g2 = g(2);
        let stable =
            enumerate_matchings(&g2, EnumerationLimits::default(), |m| m.total_deficit() == 0).unwrap();
        assert_eq!(stable.len(), 1);
        assert!(enumerate_matchings(&g3, EnumerationLimits::default(), |_| false)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn pruned_enumeration_agrees_with_full() {
        let g5 = g(5);
        let full =
            enumerate_matchings(&g5, EnumerationLimits::default(), |m| m.total_deficit() <= 1).unwrap();
        let pruned = enumerate_matchings(
            &g5,
            EnumerationLimits {
                max_deficit: Some(1),
                ..Default::default()
            },
            |m| m.total_deficit() <= 1,
        )
        .unwrap();
        assert_eq!(full, pruned);
    }

    #[test]
    fn limit_is_enforced() {
        let g6 = g(6);
        let err = for_each_matching(
            &g6,
            EnumerationLimits {
                max_visited: 10,
                max_deficit: None,
            },
            |_| {},
        )
        .unwrap_err();
        assert_eq!(err, OracleError::LimitExceeded(10));
    }

    #[test]
    fn staircase_has_bell_many_matchings() {
        // Partial matchings of G_n are rook placements on a staircase board,
        // counted by the Bell numbers B(n+1).
        let bell = [1usize, 1, 2, 5, 15, 52, 203, 877];
        for n in 1..=6 {
            let visited = for_each_matching(&g(n), EnumerationLimits::default(), |_| {}).unwrap();
            assert_eq!(visited, bell[n + 1]);
        }
    }

    #[test]
    fn monotone_in_edges() {
        for seed in 0..60u64 {
            let base = gen_random(4, 5, 0.4, seed, ConstraintRule::Fixed(2)).unwrap();
            let d = best_matching(&Arc::new(base.clone())).d_star;
            let mut edges: Vec<_> = base.edges().collect();
            // add one missing edge
            if let Some(extra) = base
                .leaders()
                .flat_map(|l| base.followers().map(move |f| (l, f)))
                .find(|&(l, f)| !base.has_edge(l, f))
            {
                edges.push(extra);
                let more =
                    BipartiteNetwork::from_parts(4, 5, &edges, base.capacities().to_vec()).unwrap();
                assert!(best_matching(&Arc::new(more)).d_star <= d);
                edges.pop();
            }
            if !edges.is_empty() {
                edges.remove(seed as usize % edges.len());
                let fewer =
                    BipartiteNetwork::from_parts(4, 5, &edges, base.capacities().to_vec()).unwrap();
                assert!(best_matching(&Arc::new(fewer)).d_star >= d);
            }
        }
    }
}
