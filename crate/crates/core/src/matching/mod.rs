//! Matchings, deficits and deficit-decreasing paths.

mod format;
mod paths;

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::network::{BipartiteNetwork, FollowerId, LeaderId};

pub use format::{load_matching, parse_matching, save_matching, write_matching};
pub use paths::{
    max_follower_disjoint_dd_paths, shortest_dd_path, solve_dd_path, DdPath, DisjointPaths,
};

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("({0}, {1}) is not an edge of the network")]
    NotAnEdge(LeaderId, FollowerId),
    #[error("follower {0} is matched more than once")]
    FollowerTaken(FollowerId),
    #[error("leader {0} would exceed its constraint")]
    OverCapacity(LeaderId),
    #[error("leader {0} out of range")]
    LeaderOutOfRange(u32),
    #[error("follower {0} out of range")]
    FollowerOutOfRange(u32),
    #[error("matchings belong to different networks")]
    NetworkMismatch,
    #[error("invalid deficit-decreasing path: {0}")]
    InvalidPath(String),
    #[error("reference matching is not stable (deficit {0})")]
    NotStable(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// An assignment of followers to leaders. Each follower belongs to at most
/// one team, every pair is a network edge, and no team exceeds its leader's
/// constraint.
///
/// Matchings are values: the algorithms in this crate return new matchings
/// rather than editing their inputs.
#[derive(Debug, Clone)]
pub struct Matching {
    net: Arc<BipartiteNetwork>,
    owner: Vec<Option<u32>>,
    teams: Vec<Vec<u32>>,
}

impl PartialEq for Matching {
    fn eq(&self, other: &Self) -> bool {
        self.same_network(other) && self.owner == other.owner
    }
}

impl Eq for Matching {}

/// Per-leader deficits `d_l(M) = c_l - |T_l(M)|` and their total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeficitReport {
    pub per_leader: Vec<usize>,
    pub total: usize,
    pub poor_leaders: Vec<LeaderId>,
    pub unmatched_followers: Vec<FollowerId>,
}

impl DeficitReport {
    pub fn leader(&self, leader: LeaderId) -> usize {
        self.per_leader[leader.index()]
    }
}

/// Quality class of a matching, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxStatus {
    Stable,
    /// `d(M) < eps * m` on a network whose best deficit is 0.
    ApproxStable,
    /// `d(M) - d* < eps * m`.
    ApproxBest,
    Neither,
}

impl Matching {
    pub fn empty(net: Arc<BipartiteNetwork>) -> Self {
        let owner = vec![None; net.num_followers()];
        let teams = vec![Vec::new(); net.num_leaders()];
        Matching { net, owner, teams }
    }

    pub fn from_pairs(
        net: Arc<BipartiteNetwork>,
        pairs: impl IntoIterator<Item = (LeaderId, FollowerId)>,
    ) -> Result<Self, MatchingError> {
        let mut m = Matching::empty(net);
        for (l, f) in pairs {
            if l.0 == 0 || l.index() >= m.net.num_leaders() {
                return Err(MatchingError::LeaderOutOfRange(l.0));
            }
            if f.0 == 0 || f.index() >= m.net.num_followers() {
                return Err(MatchingError::FollowerOutOfRange(f.0));
            }
            if !m.net.has_edge(l, f) {
                return Err(MatchingError::NotAnEdge(l, f));
            }
            if m.owner[f.index()].is_some() {
                return Err(MatchingError::FollowerTaken(f));
            }
            if m.teams[l.index()].len() >= m.net.constraint(l) {
                return Err(MatchingError::OverCapacity(l));
            }
            m.assign(f.index(), Some(l.index()));
        }
        Ok(m)
    }

    pub fn network(&self) -> &Arc<BipartiteNetwork> {
        &self.net
    }

    pub fn same_network(&self, other: &Matching) -> bool {
        Arc::ptr_eq(&self.net, &other.net) || *self.net == *other.net
    }

    pub fn leader_of(&self, follower: FollowerId) -> Option<LeaderId> {
        self.owner[follower.index()].map(|l| LeaderId::from_index(l as usize))
    }

    pub fn team(&self, leader: LeaderId) -> impl ExactSizeIterator<Item = FollowerId> + '_ {
        self.teams[leader.index()]
            .iter()
            .map(|&f| FollowerId::from_index(f as usize))
    }

    pub fn team_size(&self, leader: LeaderId) -> usize {
        self.teams[leader.index()].len()
    }

    pub fn contains(&self, leader: LeaderId, follower: FollowerId) -> bool {
        self.owner[follower.index()] == Some(leader.index() as u32)
    }

    /// Matched pairs ordered by leader, then follower.
    pub fn pairs(&self) -> impl Iterator<Item = (LeaderId, FollowerId)> + '_ {
        self.teams.iter().enumerate().flat_map(|(l, team)| {
            team.iter()
                .map(move |&f| (LeaderId::from_index(l), FollowerId::from_index(f as usize)))
        })
    }

    pub fn matched_followers(&self) -> usize {
        self.owner.iter().filter(|o| o.is_some()).count()
    }

    pub fn leader_deficit(&self, leader: LeaderId) -> usize {
        self.net.constraint(leader) - self.team_size(leader)
    }

    pub fn total_deficit(&self) -> usize {
        self.net.total_constraint() - self.matched_followers()
    }

    pub fn poor_leader_count(&self) -> usize {
        self.teams
            .iter()
            .zip(self.net.capacities())
            .filter(|(t, &c)| t.len() < c)
            .count()
    }

    pub fn is_stable(&self) -> bool {
        self.total_deficit() == 0
    }

    pub fn deficit(&self) -> DeficitReport {
        let per_leader: Vec<usize> = self
            .net
            .leaders()
            .map(|l| self.leader_deficit(l))
            .collect();
        let poor_leaders = per_leader
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(i, _)| LeaderId::from_index(i))
            .collect();
        let unmatched_followers = self
            .owner
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_none())
            .map(|(i, _)| FollowerId::from_index(i))
            .collect();
        DeficitReport {
            total: per_leader.iter().sum(),
            per_leader,
            poor_leaders,
            unmatched_followers,
        }
    }

    /// Checks every structural invariant from scratch, recomputing teams
    /// from the follower assignment.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut rebuilt = vec![Vec::new(); self.net.num_leaders()];
        for (f, owner) in self.owner.iter().enumerate() {
            if let Some(l) = *owner {
                let (lid, fid) = (LeaderId::from_index(l as usize), FollowerId::from_index(f));
                if !self.net.has_edge(lid, fid) {
                    return Err(format!("({lid}, {fid}) is not an edge"));
                }
                rebuilt[l as usize].push(f as u32);
            }
        }
        if rebuilt != self.teams {
            return Err("team view disagrees with assignment".into());
        }
        for l in self.net.leaders() {
            if self.team_size(l) > self.net.constraint(l) {
                return Err(format!("leader {l} over capacity"));
            }
        }
        Ok(())
    }

    /// Moves follower `f` (0-based) to `leader` (0-based), or unmatches it.
    pub(crate) fn assign(&mut self, f: usize, leader: Option<usize>) {
        if let Some(old) = self.owner[f] {
            let team = &mut self.teams[old as usize];
            if let Ok(pos) = team.binary_search(&(f as u32)) {
                team.remove(pos);
            }
        }
        self.owner[f] = leader.map(|l| l as u32);
        if let Some(l) = leader {
            let team = &mut self.teams[l];
            let pos = team.binary_search(&(f as u32)).unwrap_or_else(|p| p);
            team.insert(pos, f as u32);
        }
    }

    pub(crate) fn owner_raw(&self, f: usize) -> Option<u32> {
        self.owner[f]
    }

    pub(crate) fn team_raw(&self, l: usize) -> &[u32] {
        &self.teams[l]
    }
}

pub fn empty_matching(net: &Arc<BipartiteNetwork>) -> Matching {
    Matching::empty(Arc::clone(net))
}

pub fn deficit(matching: &Matching) -> DeficitReport {
    matching.deficit()
}

/// `M ⊕ N`: the edges in exactly one of the two matchings.
pub fn symmetric_difference(
    a: &Matching,
    b: &Matching,
) -> Result<BTreeSet<(LeaderId, FollowerId)>, MatchingError> {
    if !a.same_network(b) {
        return Err(MatchingError::NetworkMismatch);
    }
    let left: BTreeSet<_> = a.pairs().collect();
    let right: BTreeSet<_> = b.pairs().collect();
    Ok(left.symmetric_difference(&right).copied().collect())
}

/// Classifies `matching` with the strict inequalities `d(M) < eps*m` and
/// `d(M) - d* < eps*m`.
pub fn approx_status(matching: &Matching, eps: f64, d_star: usize) -> ApproxStatus {
    let d = matching.total_deficit();
    let budget = eps * matching.network().num_followers() as f64;
    if d == 0 {
        ApproxStatus::Stable
    } else if d_star == 0 && (d as f64) < budget {
        ApproxStatus::ApproxStable
    } else if ((d - d_star.min(d)) as f64) < budget {
        ApproxStatus::ApproxBest
    } else {
        ApproxStatus::Neither
    }
}
