use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::{Matching, MatchingError};
use crate::flow::{ArcId, FlowNetwork};
use crate::network::{FollowerId, LeaderId};

/// An alternating path `l_0, f_1, l_1, ..., f_k` that starts at a poor
/// leader, uses matched edges `(l_i, f_i)` for `1 <= i < k`, and ends at an
/// unmatched follower.
///
/// `leaders[i]` is `l_i` and `followers[i]` is `f_{i+1}`, so both vectors
/// have length `k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DdPath {
    pub leaders: Vec<LeaderId>,
    pub followers: Vec<FollowerId>,
}

impl DdPath {
    /// Number of edges, `2k - 1`.
    pub fn len(&self) -> usize {
        2 * self.leaders.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.leaders.is_empty()
    }

    pub fn start(&self) -> LeaderId {
        self.leaders[0]
    }

    pub fn end(&self) -> FollowerId {
        *self.followers.last().expect("path has at least one follower")
    }

    /// Edges of the path in order, alternating non-matching and matching.
    pub fn edges(&self) -> Vec<(LeaderId, FollowerId)> {
        let mut out = Vec::with_capacity(self.len());
        for (i, &f) in self.followers.iter().enumerate() {
            out.push((self.leaders[i], f));
            if i + 1 < self.leaders.len() {
                out.push((self.leaders[i + 1], f));
            }
        }
        out
    }

    /// Checks every defining property relative to `matching`.
    pub fn validate(&self, matching: &Matching) -> Result<(), MatchingError> {
        let bad = |msg: String| Err(MatchingError::InvalidPath(msg));
        let net = matching.network();
        let k = self.leaders.len();
        if k == 0 || self.followers.len() != k {
            return bad(format!(
                "{} leaders and {} followers",
                self.leaders.len(),
                self.followers.len()
            ));
        }
        for &l in &self.leaders {
            if l.0 == 0 || l.index() >= net.num_leaders() {
                return bad(format!("leader {} out of range", l.0));
            }
        }
        for &f in &self.followers {
            if f.0 == 0 || f.index() >= net.num_followers() {
                return bad(format!("follower {} out of range", f.0));
            }
        }
        let mut ls = self.leaders.clone();
        ls.sort();
        ls.dedup();
        let mut fs = self.followers.clone();
        fs.sort();
        fs.dedup();
        if ls.len() != k || fs.len() != k {
            return bad("path repeats a node".into());
        }
        if matching.leader_deficit(self.leaders[0]) == 0 {
            return bad(format!("{} is not poor", self.leaders[0]));
        }
        for i in 0..k {
            let (l, f) = (self.leaders[i], self.followers[i]);
            if !net.has_edge(l, f) {
                return bad(format!("({l}, {f}) is not an edge"));
            }
            if matching.contains(l, f) {
                return bad(format!("({l}, {f}) should be unmatched"));
            }
            if i + 1 < k && !matching.contains(self.leaders[i + 1], f) {
                return bad(format!("({}, {f}) should be matched", self.leaders[i + 1]));
            }
        }
        if matching.leader_of(self.end()).is_some() {
            return bad(format!("{} is matched", self.end()));
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate), and additionally every edge lies in
    /// `matching ⊕ other`.
    pub fn validate_within(&self, matching: &Matching, other: &Matching) -> Result<(), MatchingError> {
        self.validate(matching)?;
        for i in 0..self.leaders.len() {
            let (l, f) = (self.leaders[i], self.followers[i]);
            if !other.contains(l, f) {
                return Err(MatchingError::InvalidPath(format!(
                    "({l}, {f}) is in neither matching"
                )));
            }
            if i + 1 < self.leaders.len() && other.contains(self.leaders[i + 1], f) {
                return Err(MatchingError::InvalidPath(format!(
                    "({}, {f}) is in both matchings",
                    self.leaders[i + 1]
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DdPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (&l, &fo)) in self.leaders.iter().zip(&self.followers).enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l},{fo}")?;
        }
        Ok(())
    }
}

/// A shortest deficit-decreasing path over all poor leaders, or `None`.
///
/// Ties are broken towards the lexicographically smallest node sequence.
pub fn shortest_dd_path(matching: &Matching) -> Option<DdPath> {
    let net = matching.network();
    let n = net.num_leaders();
    // steps[l] = fewest non-matching edges on an alternating path from l to
    // an unmatched follower.
    let mut steps = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for f in 0..net.num_followers() {
        if matching.owner_raw(f).is_none() {
            for &l in net.follower_adj_raw(f) {
                if steps[l as usize] == usize::MAX {
                    steps[l as usize] = 1;
                    queue.push_back(l as usize);
                }
            }
        }
    }
    while let Some(l) = queue.pop_front() {
        for &f in matching.team_raw(l) {
            for &other in net.follower_adj_raw(f as usize) {
                let other = other as usize;
                if other != l && steps[other] == usize::MAX {
                    steps[other] = steps[l] + 1;
                    queue.push_back(other);
                }
            }
        }
    }

    let start = (0..n)
        .filter(|&l| matching.team_raw(l).len() < net.capacities()[l] && steps[l] != usize::MAX)
        .min_by_key(|&l| (steps[l], l))?;

    let mut leaders = vec![LeaderId::from_index(start)];
    let mut followers = Vec::new();
    let mut cur = start;
    loop {
        let remaining = steps[cur];
        let adj = net.leader_adj_raw(cur);
        if remaining == 1 {
            let f = adj
                .iter()
                .copied()
                .find(|&f| matching.owner_raw(f as usize).is_none())
                .expect("distance 1 implies an unmatched neighbor");
            followers.push(FollowerId::from_index(f as usize));
            break;
        }
        let (f, next) = adj
            .iter()
            .find_map(|&f| match matching.owner_raw(f as usize) {
                Some(o) if o as usize != cur && steps[o as usize] == remaining - 1 => {
                    Some((f, o as usize))
                }
                _ => None,
            })
            .expect("distance labels are consistent");
        followers.push(FollowerId::from_index(f as usize));
        leaders.push(LeaderId::from_index(next));
        cur = next;
    }
    Some(DdPath { leaders, followers })
}

/// Flips every edge of `path`: the poor leader gains one follower and every
/// inner leader swaps one follower for another.
pub fn solve_dd_path(matching: &Matching, path: &DdPath) -> Result<Matching, MatchingError> {
    path.validate(matching)?;
    let mut next = matching.clone();
    for (l, f) in path.leaders.iter().zip(&path.followers) {
        next.assign(f.index(), Some(l.index()));
    }
    Ok(next)
}

/// A largest family of follower-disjoint deficit-decreasing paths inside
/// `M ⊕ N`, with at most `d_l(M)` paths starting at each leader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointPaths {
    pub count: usize,
    pub paths: Vec<DdPath>,
}

impl DisjointPaths {
    /// Number of paths starting at each leader, indexed from zero.
    pub fn starts_per_leader(&self, num_leaders: usize) -> Vec<usize> {
        let mut starts = vec![0; num_leaders];
        for p in &self.paths {
            starts[p.start().index()] += 1;
        }
        starts
    }
}

/// Computes the family by maximum flow: the source feeds each poor leader
/// `d_l(M)` units, leaders reach followers along `N \ M`, followers return to
/// their `M`-partner along `M \ N`, unmatched followers drain to the sink, and
/// every follower carries at most one unit.
pub fn max_follower_disjoint_dd_paths(
    matching: &Matching,
    stable: &Matching,
) -> Result<DisjointPaths, MatchingError> {
    if !matching.same_network(stable) {
        return Err(MatchingError::NetworkMismatch);
    }
    if !stable.is_stable() {
        return Err(MatchingError::NotStable(stable.total_deficit()));
    }
    let net = matching.network();
    let (n, m) = (net.num_leaders(), net.num_followers());
    let source = 0;
    let leader = |l: usize| 1 + l;
    let f_in = |f: usize| 1 + n + f;
    let f_out = |f: usize| 1 + n + m + f;
    let sink = 1 + n + 2 * m;

    let mut flow = FlowNetwork::new(sink + 1);
    let mut arcs: Vec<ArcId> = Vec::new();
    for l in 0..n {
        let d = matching.leader_deficit(LeaderId::from_index(l));
        if d > 0 {
            arcs.push(flow.add_arc(source, leader(l), d as u64));
        }
        for &f in net.leader_adj_raw(l) {
            let (lid, fid) = (LeaderId::from_index(l), FollowerId::from_index(f as usize));
            if stable.contains(lid, fid) && !matching.contains(lid, fid) {
                arcs.push(flow.add_arc(leader(l), f_in(f as usize), 1));
            }
        }
    }
    for f in 0..m {
        let fid = FollowerId::from_index(f);
        arcs.push(flow.add_arc(f_in(f), f_out(f), 1));
        match matching.leader_of(fid) {
            None => arcs.push(flow.add_arc(f_out(f), sink, 1)),
            Some(owner) if !stable.contains(owner, fid) => {
                arcs.push(flow.add_arc(f_out(f), leader(owner.index()), 1));
            }
            Some(_) => {}
        }
    }
    let value = flow.max_flow(source, sink) as usize;

    // Decompose the integral flow into source-sink walks, cutting any cycle
    // through a revisited leader.
    let mut out_units: Vec<Vec<(usize, u64)>> = vec![Vec::new(); sink + 1];
    for &arc in &arcs {
        let units = flow.flow(arc);
        if units > 0 {
            out_units[flow.tail(arc)].push((flow.head(arc), units));
        }
    }
    let mut paths = Vec::with_capacity(value);
    for _ in 0..value {
        let mut walk = vec![source];
        let mut position: HashMap<usize, usize> = HashMap::from([(source, 0)]);
        let mut at = source;
        while at != sink {
            let slot = out_units[at]
                .iter_mut()
                .find(|(_, u)| *u > 0)
                .expect("flow conservation");
            slot.1 -= 1;
            let next = slot.0;
            if let Some(&pos) = position.get(&next) {
                for dropped in walk.drain(pos + 1..) {
                    position.remove(&dropped);
                }
            } else {
                position.insert(next, walk.len());
                walk.push(next);
            }
            at = next;
        }
        let leaders = walk
            .iter()
            .filter(|&&v| (1..=n).contains(&v))
            .map(|&v| LeaderId::from_index(v - 1))
            .collect();
        let followers = walk
            .iter()
            .filter(|&&v| (1 + n..1 + n + m).contains(&v))
            .map(|&v| FollowerId::from_index(v - 1 - n))
            .collect();
        paths.push(DdPath { leaders, followers });
    }
    Ok(DisjointPaths {
        count: value,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::matching::tests::{g, m_prime, m_star, pairs};
    use crate::matching::{empty_matching, symmetric_difference};
    use crate::network::BipartiteNetwork;

    #[test]
    fn unique_path_of_m_prime() {
        let g6 = g(6);
        let path = shortest_dd_path(&m_prime(&g6)).unwrap();
        assert_eq!(path.len(), 11);
        assert_eq!(path.leaders, (1..=6).map(LeaderId).collect::<Vec<_>>());
        assert_eq!(path.followers, (1..=6).map(FollowerId).collect::<Vec<_>>());
        assert_eq!(path.to_string(), "l1,f1,l2,f2,l3,f3,l4,f4,l5,f5,l6,f6");
        let diff = symmetric_difference(&m_prime(&g6), &m_star(&g6)).unwrap();
        assert_eq!(diff, path.edges().into_iter().collect());
    }

    #[test]
    fn no_path_when_stable() {
        let g6 = g(6);
        assert!(shortest_dd_path(&m_star(&g6)).is_none());
    }

    #[test]
    fn no_path_when_blocked() {
        // Two leaders, one follower: the poor leader can only displace.
        let net = Arc::new(
            BipartiteNetwork::from_parts(
                2,
                1,
                &pairs(&[(1, 1), (2, 1)]),
                vec![1, 1],
            )
            .unwrap(),
        );
        let m = Matching::from_pairs(net, pairs(&[(2, 1)])).unwrap();
        assert!(shortest_dd_path(&m).is_none());
    }

    #[test]
    fn single_edge_path() {
        let g3 = g(3);
        let m = Matching::from_pairs(g3, pairs(&[(1, 1), (2, 2)])).unwrap();
        let path = shortest_dd_path(&m).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!((path.start(), path.end()), (LeaderId(3), FollowerId(3)));
        let solved = solve_dd_path(&m, &path).unwrap();
        assert!(solved.is_stable());
        assert_eq!(solved.pairs().count(), 3);
    }

    #[test]
    fn lexicographic_tie_break() {
        // l1 and l2 both poor, f1 and f2 both unmatched; all length 1.
        let net = Arc::new(
            BipartiteNetwork::from_parts(2, 2, &pairs(&[(1, 2), (1, 1), (2, 1), (2, 2)]), vec![1, 1])
                .unwrap(),
        );
        let p = shortest_dd_path(&empty_matching(&net)).unwrap();
        assert_eq!((p.start(), p.end()), (LeaderId(1), FollowerId(1)));
    }

    #[test]
    fn figure_two_style_path() {
        // l0 poor (c=2, one follower), l1 and l2 stable, f3 unmatched.
        // Leaders 1..3 stand for l0..l2, followers 1..3 for f1..f3, follower 4
        // is l0's existing team member.
        let net = Arc::new(
            BipartiteNetwork::from_parts(
                3,
                4,
                &pairs(&[(1, 1), (1, 4), (2, 1), (2, 2), (3, 2), (3, 3)]),
                vec![2, 1, 1],
            )
            .unwrap(),
        );
        let m = Matching::from_pairs(net, pairs(&[(1, 4), (2, 1), (3, 2)])).unwrap();
        let path = shortest_dd_path(&m).unwrap();
        assert_eq!(path.len(), 5);
        let solved = solve_dd_path(&m, &path).unwrap();
        assert_eq!(solved.total_deficit(), m.total_deficit() - 1);
        assert_eq!(solved.team_size(LeaderId(2)), 1);
        assert_eq!(solved.team_size(LeaderId(3)), 1);
        assert_eq!(solved.team_size(LeaderId(1)), 2);
        assert_eq!(solved.leader_of(FollowerId(4)), Some(LeaderId(1)));
    }

    #[test]
    fn solving_m_prime_gives_the_stable_matching() {
        let g6 = g(6);
        let mp = m_prime(&g6);
        let path = shortest_dd_path(&mp).unwrap();
        assert_eq!(solve_dd_path(&mp, &path).unwrap(), m_star(&g6));
    }

    #[test]
    fn invalid_paths_rejected() {
        let g6 = g(6);
        let mp = m_prime(&g6);
        let not_poor = DdPath {
            leaders: vec![LeaderId(2)],
            followers: vec![FollowerId(2)],
        };
        assert!(solve_dd_path(&mp, &not_poor).is_err());
        let ends_matched = DdPath {
            leaders: vec![LeaderId(1)],
            followers: vec![FollowerId(1)],
        };
        assert!(solve_dd_path(&mp, &ends_matched).is_err());
        let empty = DdPath {
            leaders: vec![],
            followers: vec![],
        };
        assert!(empty.validate(&mp).is_err());
    }

    #[test]
    fn disjoint_paths_examples() {
        let g6 = g(6);
        let star = m_star(&g6);
        assert_eq!(max_follower_disjoint_dd_paths(&star, &star).unwrap().count, 0);
        let mp = m_prime(&g6);
        let fam = max_follower_disjoint_dd_paths(&mp, &star).unwrap();
        assert_eq!(fam.count, 1);
        fam.paths[0].validate_within(&mp, &star).unwrap();
        assert!(matches!(
            max_follower_disjoint_dd_paths(&star, &mp),
            Err(MatchingError::NotStable(1))
        ));
    }

    #[test]
    fn disjoint_paths_from_empty() {
        let g6 = g(6);
        let star = m_star(&g6);
        let fam = max_follower_disjoint_dd_paths(&empty_matching(&g6), &star).unwrap();
        assert_eq!(fam.count, 6);
        assert!(fam.paths.iter().all(|p| p.len() == 1));
    }
}
