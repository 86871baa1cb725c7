//! Bipartite leader/follower networks.
//!
//! A [`BipartiteNetwork`] is immutable once built. Ids are 1-based on the
//! public surface; internally every table is indexed from zero.

mod generate;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use generate::{gen_bounded_planted, gen_counterexample, gen_random, ConstraintRule};
pub use io::{load_network, parse_network, save_network, write_network, ParseError};
pub(crate) use io::tokenized_lines;

/// A leader, numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeaderId(pub u32);

/// A follower, numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FollowerId(pub u32);

impl LeaderId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        LeaderId(index as u32 + 1)
    }
}

impl FollowerId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        FollowerId(index as u32 + 1)
    }
}

impl fmt::Display for LeaderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

impl fmt::Display for FollowerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("network needs at least one leader and one follower (got {leaders} leaders, {followers} followers)")]
    Empty { leaders: usize, followers: usize },
    #[error("leader {0} out of range")]
    LeaderOutOfRange(u32),
    #[error("follower {0} out of range")]
    FollowerOutOfRange(u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(LeaderId, FollowerId),
    #[error("missing constraint for leader {0}")]
    MissingConstraint(LeaderId),
    #[error("constraint of leader {0} must be at least 1")]
    ZeroConstraint(LeaderId),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("could not draw a network without isolated leaders after {0} attempts")]
    IsolatedLeaders(usize),
}

/// Leaders `L` with constraints `c_l >= 1`, followers `F`, and the edge set
/// between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteNetwork {
    capacities: Vec<usize>,
    leader_adj: Vec<Vec<u32>>,
    follower_adj: Vec<Vec<u32>>,
    num_edges: usize,
}

impl BipartiteNetwork {
    /// Validates and builds a network. `constraints` must name every leader.
    pub fn build(
        num_leaders: usize,
        num_followers: usize,
        edges: &[(LeaderId, FollowerId)],
        constraints: &BTreeMap<LeaderId, usize>,
    ) -> Result<Self, NetworkError> {
        let mut caps = Vec::with_capacity(num_leaders);
        for i in 0..num_leaders {
            let leader = LeaderId::from_index(i);
            match constraints.get(&leader) {
                None => return Err(NetworkError::MissingConstraint(leader)),
                Some(&c) => caps.push(c),
            }
        }
        if let Some(&bad) = constraints
            .keys()
            .find(|l| l.0 == 0 || l.index() >= num_leaders)
        {
            return Err(NetworkError::LeaderOutOfRange(bad.0));
        }
        Self::from_parts(num_leaders, num_followers, edges, caps)
    }

    /// Like [`build`](Self::build) but with constraints given positionally.
    pub fn from_parts(
        num_leaders: usize,
        num_followers: usize,
        edges: &[(LeaderId, FollowerId)],
        capacities: Vec<usize>,
    ) -> Result<Self, NetworkError> {
        if num_leaders == 0 || num_followers == 0 {
            return Err(NetworkError::Empty {
                leaders: num_leaders,
                followers: num_followers,
            });
        }
        if capacities.len() != num_leaders {
            let missing = LeaderId::from_index(capacities.len().min(num_leaders));
            return Err(NetworkError::MissingConstraint(missing));
        }
        if let Some(i) = capacities.iter().position(|&c| c == 0) {
            return Err(NetworkError::ZeroConstraint(LeaderId::from_index(i)));
        }

        let mut leader_adj = vec![Vec::new(); num_leaders];
        let mut follower_adj = vec![Vec::new(); num_followers];
        for &(l, f) in edges {
            if l.0 == 0 || l.index() >= num_leaders {
                return Err(NetworkError::LeaderOutOfRange(l.0));
            }
            if f.0 == 0 || f.index() >= num_followers {
                return Err(NetworkError::FollowerOutOfRange(f.0));
            }
            leader_adj[l.index()].push(f.index() as u32);
            follower_adj[f.index()].push(l.index() as u32);
        }
        for (i, adj) in leader_adj.iter_mut().enumerate() {
            adj.sort_unstable();
            if let Some(w) = adj.windows(2).find(|w| w[0] == w[1]) {
                return Err(NetworkError::DuplicateEdge(
                    LeaderId::from_index(i),
                    FollowerId::from_index(w[0] as usize),
                ));
            }
        }
        for adj in follower_adj.iter_mut() {
            adj.sort_unstable();
        }

        Ok(BipartiteNetwork {
            capacities,
            leader_adj,
            follower_adj,
            num_edges: edges.len(),
        })
    }

    pub fn num_leaders(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_followers(&self) -> usize {
        self.follower_adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn leaders(&self) -> impl Iterator<Item = LeaderId> + '_ {
        (0..self.num_leaders()).map(LeaderId::from_index)
    }

    pub fn followers(&self) -> impl Iterator<Item = FollowerId> + '_ {
        (0..self.num_followers()).map(FollowerId::from_index)
    }

    pub fn constraint(&self, leader: LeaderId) -> usize {
        self.capacities[leader.index()]
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn total_constraint(&self) -> usize {
        self.capacities.iter().sum()
    }

    /// `N_l`, as ascending follower ids.
    pub fn neighbors(&self, leader: LeaderId) -> impl ExactSizeIterator<Item = FollowerId> + '_ {
        self.leader_adj[leader.index()]
            .iter()
            .map(|&f| FollowerId::from_index(f as usize))
    }

    /// Leaders adjacent to `follower`, ascending.
    pub fn follower_neighbors(
        &self,
        follower: FollowerId,
    ) -> impl ExactSizeIterator<Item = LeaderId> + '_ {
        self.follower_adj[follower.index()]
            .iter()
            .map(|&l| LeaderId::from_index(l as usize))
    }

    pub fn degree(&self, leader: LeaderId) -> usize {
        self.leader_adj[leader.index()].len()
    }

    pub fn has_edge(&self, leader: LeaderId, follower: FollowerId) -> bool {
        leader.0 >= 1
            && follower.0 >= 1
            && leader.index() < self.num_leaders()
            && self.leader_adj[leader.index()]
                .binary_search(&(follower.index() as u32))
                .is_ok()
    }

    /// `Delta = max_l |N_l|`.
    pub fn max_leader_degree(&self) -> usize {
        self.leader_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// All edges, ordered by leader then follower.
    pub fn edges(&self) -> impl Iterator<Item = (LeaderId, FollowerId)> + '_ {
        self.leader_adj.iter().enumerate().flat_map(|(l, adj)| {
            adj.iter()
                .map(move |&f| (LeaderId::from_index(l), FollowerId::from_index(f as usize)))
        })
    }

    pub(crate) fn leader_adj_raw(&self, leader: usize) -> &[u32] {
        &self.leader_adj[leader]
    }

    pub(crate) fn follower_adj_raw(&self, follower: usize) -> &[u32] {
        &self.follower_adj[follower]
    }

    /// True when this is the triangular network `G_n` with unit constraints.
    pub fn is_counterexample_shape(&self) -> bool {
        let n = self.num_leaders();
        n == self.num_followers()
            && self.capacities.iter().all(|&c| c == 1)
            && self
                .leader_adj
                .iter()
                .enumerate()
                .all(|(i, adj)| adj.len() == i + 1 && adj.iter().enumerate().all(|(j, &f)| f as usize == j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps(c: &[usize]) -> BTreeMap<LeaderId, usize> {
        c.iter()
            .enumerate()
            .map(|(i, &c)| (LeaderId::from_index(i), c))
            .collect()
    }

    #[test]
    fn smallest_network() {
        let net =
            BipartiteNetwork::build(1, 1, &[(LeaderId(1), FollowerId(1))], &caps(&[1])).unwrap();
        assert_eq!(net.max_leader_degree(), 1);
        assert_eq!(net.num_edges(), 1);
    }

    #[test]
    fn two_leaders_share_a_follower() {
        let net = BipartiteNetwork::build(
            2,
            1,
            &[(LeaderId(1), FollowerId(1)), (LeaderId(2), FollowerId(1))],
            &caps(&[1, 1]),
        )
        .unwrap();
        assert_eq!(net.max_leader_degree(), 1);
        assert_eq!(
            net.follower_neighbors(FollowerId(1)).collect::<Vec<_>>(),
            vec![LeaderId(1), LeaderId(2)]
        );
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = BipartiteNetwork::build(
            1,
            1,
            &[(LeaderId(1), FollowerId(1)), (LeaderId(1), FollowerId(1))],
            &caps(&[1]),
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::DuplicateEdge(LeaderId(1), FollowerId(1)));
    }

    #[test]
    fn rejects_bad_ids_and_constraints() {
        let e = [(LeaderId(3), FollowerId(1))];
        assert_eq!(
            BipartiteNetwork::build(2, 1, &e, &caps(&[1, 1])).unwrap_err(),
            NetworkError::LeaderOutOfRange(3)
        );
        let e = [(LeaderId(1), FollowerId(0))];
        assert_eq!(
            BipartiteNetwork::build(2, 1, &e, &caps(&[1, 1])).unwrap_err(),
            NetworkError::FollowerOutOfRange(0)
        );
        assert_eq!(
            BipartiteNetwork::build(2, 1, &[], &caps(&[1])).unwrap_err(),
            NetworkError::MissingConstraint(LeaderId(2))
        );
        assert_eq!(
            BipartiteNetwork::build(2, 1, &[], &caps(&[1, 0])).unwrap_err(),
            NetworkError::ZeroConstraint(LeaderId(2))
        );
        let mut extra = caps(&[1, 1]);
        extra.insert(LeaderId(5), 1);
        assert_eq!(
            BipartiteNetwork::build(2, 1, &[], &extra).unwrap_err(),
            NetworkError::LeaderOutOfRange(5)
        );
    }

    #[test]
    fn adjacency_and_reverse_index_agree() {
        let net = gen_random(7, 9, 0.4, 3, ConstraintRule::Fixed(2)).unwrap();
        let forward: Vec<_> = net.edges().collect();
        let mut backward: Vec<_> = net
            .followers()
            .flat_map(|f| net.follower_neighbors(f).map(move |l| (l, f)))
            .collect();
        backward.sort();
        assert_eq!(forward, backward);
        assert_eq!(forward.len(), net.num_edges());
    }
}
