//! Deficit-one matchings of the triangular network `G_n`.
//!
//! On `G_n` (leader `l_i` adjacent to `f_1..f_i`, every `c = 1`) a matching
//! with deficit at most one is determined by the set of indexes `j` whose
//! horizontal edge `(l_j, f_j)` is missing. Under `p = q = 1` the protocol
//! moves between these sets like a random walk on the labelled tree
//! [`LabeledTree`], which is what makes the stable matching hard to reach.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{derive_seed, run_until, sim_rng, SimConfig, StopReason};
use crate::matching::Matching;
use crate::network::{BipartiteNetwork, FollowerId, LeaderId};

/// Largest `n` accepted by the counting functions (results fit in `u128`).
pub const MAX_COUNT_N: usize = 120;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CounterexampleError {
    #[error("matching is not on a triangular network with unit constraints")]
    NotCounterexample,
    #[error("matching has deficit {0}; only deficit 0 or 1 has an index set")]
    DeficitTooLarge(usize),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("index set has {0} elements; at least two are needed for a tree")]
    NoHeight(usize),
    #[error("{0} is not reachable from the origin state")]
    NotReachable(IndexSet),
    #[error("transition probabilities are only known for p = q = 1 (got p = {p}, q = {q})")]
    UnsupportedParameters { p: f64, q: f64 },
    #[error("tree size must be at least 1")]
    EmptyTree,
    #[error("walk must start away from the root")]
    StartAtRoot,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
}

type Result<T> = std::result::Result<T, CounterexampleError>;

/// Sorted distinct indexes in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexSet {
    n: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(CounterexampleError::InvalidIndexSet(format!("{} repeated", w[0])));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > n) {
            return Err(CounterexampleError::InvalidIndexSet(format!("{bad} outside 1..={n}")));
        }
        Ok(IndexSet { n, indices })
    }

    pub fn empty(n: usize) -> Self {
        IndexSet { n, indices: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn lowest(&self) -> Option<usize> {
        self.indices.first().copied()
    }

    pub fn highest(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Second-largest index, or 0 when there are fewer than two.
    pub fn height(&self) -> usize {
        match self.indices.len() {
            0 | 1 => 0,
            k => self.indices[k - 2],
        }
    }

    fn with(&self, i: usize) -> Self {
        let mut indices = self.indices.clone();
        let at = indices.binary_search(&i).unwrap_err();
        indices.insert(at, i);
        IndexSet { n: self.n, indices }
    }

    fn without_min(&self) -> Self {
        IndexSet {
            n: self.n,
            indices: self.indices[1..].to_vec(),
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Index set of a matching of `G_n` with deficit 0 or 1.
pub fn index_set(matching: &Matching) -> Result<IndexSet> {
    let net = matching.network();
    if !net.is_counterexample_shape() {
        return Err(CounterexampleError::NotCounterexample);
    }
    let d = matching.total_deficit();
    if d > 1 {
        return Err(CounterexampleError::DeficitTooLarge(d));
    }
    let n = net.num_leaders();
    let set = IndexSet {
        n,
        indices: (1..=n as u32)
            .filter(|&j| !matching.contains(LeaderId(j), FollowerId(j)))
            .map(|j| j as usize)
            .collect(),
    };
    debug_assert_eq!(matching_from_index_set(&set, net).ok().as_ref(), Some(matching));
    Ok(set)
}

/// Rebuilds the matching: chain edges `(l_{i_{k+1}}, f_{i_k})` plus every
/// horizontal edge outside the set.
pub fn matching_from_index_set(set: &IndexSet, net: &Arc<BipartiteNetwork>) -> Result<Matching> {
    if !net.is_counterexample_shape() || net.num_leaders() != set.n {
        return Err(CounterexampleError::NotCounterexample);
    }
    let chain = set
        .indices
        .windows(2)
        .map(|w| (LeaderId(w[1] as u32), FollowerId(w[0] as u32)));
    let horizontal = (1..=set.n)
        .filter(|&k| !set.contains(k))
        .map(|k| (LeaderId(k as u32), FollowerId(k as u32)));
    Matching::from_pairs(Arc::clone(net), chain.chain(horizontal))
        .map_err(|e| CounterexampleError::InvalidIndexSet(e.to_string()))
}

pub fn height(matching: &Matching) -> Result<usize> {
    index_set(matching).map(|s| s.height())
}

/// `{1..n}`: leader `l_{i+1}` holds `f_i`, `l_1` is poor, `f_n` is free.
pub fn worst_index_set(n: usize) -> IndexSet {
    IndexSet {
        n,
        indices: (1..=n).collect(),
    }
}

/// The state one step before stability: only the largest index remains.
pub fn pre_stable(set: &IndexSet) -> Result<IndexSet> {
    match set.highest() {
        Some(top) => Ok(IndexSet {
            n: set.n,
            indices: vec![top],
        }),
        None => Err(CounterexampleError::NoHeight(0)),
    }
}

/// Structural check for a deficit-one matching of `G_n`: the poor leader is
/// `l_{min I}`, the free follower is `f_{max I}`, horizontal edges are used
/// outside the set and consecutive set elements are chained.
pub fn check_deficit_one_structure(matching: &Matching) -> std::result::Result<(), String> {
    let set = index_set(matching).map_err(|e| e.to_string())?;
    let (lo, hi) = match (set.lowest(), set.highest()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err("stable matching has no structure to check".into()),
    };
    let net = matching.network();
    let poor: Vec<_> = net
        .leaders()
        .filter(|&l| matching.leader_deficit(l) > 0)
        .collect();
    if poor != [LeaderId(lo as u32)] {
        return Err(format!("poor leaders {poor:?}, expected l{lo}"));
    }
    let free: Vec<_> = net
        .followers()
        .filter(|&f| matching.leader_of(f).is_none())
        .collect();
    if free != [FollowerId(hi as u32)] {
        return Err(format!("free followers {free:?}, expected f{hi}"));
    }
    for k in (1..lo).chain(hi + 1..=set.n) {
        if !matching.contains(LeaderId(k as u32), FollowerId(k as u32)) {
            return Err(format!("horizontal edge {k} missing outside the set"));
        }
    }
    for w in set.indices.windows(2) {
        if !matching.contains(LeaderId(w[1] as u32), FollowerId(w[0] as u32)) {
            return Err(format!("chain edge (l{}, f{}) missing", w[1], w[0]));
        }
    }
    Ok(())
}

/// States the dynamics can visit from `origin` before reaching stability:
/// the pre-stable state and every `A + {h, i_K}` with `A` a subset of
/// `1..h`. Ordered with the pre-stable state first.
pub fn reachable_set(origin: &IndexSet) -> Result<Vec<IndexSet>> {
    if origin.len() < 2 {
        return Err(CounterexampleError::NoHeight(origin.len()));
    }
    let h = origin.height();
    let top = origin.highest().unwrap();
    let mut out = vec![pre_stable(origin)?];
    for mask in 0u64..(1u64 << (h - 1)) {
        let mut indices: Vec<usize> = (1..h).filter(|&a| mask & (1 << (a - 1)) != 0).collect();
        indices.push(h);
        indices.push(top);
        out.push(IndexSet { n: origin.n, indices });
    }
    Ok(out)
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub label: usize,
    pub parent: Option<NodeId>,
    /// Ordered by label. Below the root the child labelled `k` sits at
    /// position `k - 1`.
    pub children: Vec<NodeId>,
    pub depth: usize,
}

/// `T*_m`: a root labelled `m + 1` whose single child is the root of `T_m`,
/// where a node labelled `i` has children labelled `1..i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTree {
    m: usize,
    nodes: Vec<TreeNode>,
}

pub fn build_tree(m: usize) -> Result<LabeledTree> {
    if m == 0 {
        return Err(CounterexampleError::EmptyTree);
    }
    if m > 30 {
        return Err(CounterexampleError::OutOfRange(format!("tree size m = {m} exceeds 30")));
    }
    let mut nodes = Vec::with_capacity((1usize << (m - 1)) + 1);
    nodes.push(TreeNode {
        label: m + 1,
        parent: None,
        children: Vec::new(),
        depth: 0,
    });
    grow(&mut nodes, 0, m);
    Ok(LabeledTree { m, nodes })
}

fn grow(nodes: &mut Vec<TreeNode>, parent: NodeId, label: usize) {
    let id = nodes.len();
    let depth = nodes[parent].depth + 1;
    nodes.push(TreeNode {
        label,
        parent: Some(parent),
        children: Vec::new(),
        depth,
    });
    nodes[parent].children.push(id);
    for child in 1..label {
        grow(nodes, id, child);
    }
}

impl LabeledTree {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = (NodeId, &TreeNode)> {
        self.nodes.iter().enumerate()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        let n = &self.nodes[id];
        n.children.len() + usize::from(n.parent.is_some())
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.nodes[a].parent == Some(b) || self.nodes[b].parent == Some(a)
    }

    /// Follows child labels from the root. The empty path is the root.
    pub fn find(&self, labels: &[usize]) -> Option<NodeId> {
        let mut at = self.root();
        for &label in labels {
            let children = &self.nodes[at].children;
            let slot = if at == self.root() { 0 } else { label.checked_sub(1)? };
            at = *children.get(slot)?;
            if self.nodes[at].label != label {
                return None;
            }
        }
        Some(at)
    }

    /// Labels from the root's child down to `id`.
    pub fn path_labels(&self, id: NodeId) -> Vec<usize> {
        let mut labels = Vec::with_capacity(self.nodes[id].depth);
        let mut at = id;
        while let Some(parent) = self.nodes[at].parent {
            labels.push(self.nodes[at].label);
            at = parent;
        }
        labels.reverse();
        labels
    }

    /// Deepest node: the chain `m, m-1, .., 1`.
    pub fn deepest(&self) -> NodeId {
        let labels: Vec<usize> = (1..=self.m).rev().collect();
        self.find(&labels).expect("descending chain exists")
    }
}

fn check_tree_fits(tree: &LabeledTree, origin: &IndexSet) -> Result<()> {
    if origin.len() < 2 {
        return Err(CounterexampleError::NoHeight(origin.len()));
    }
    if tree.m != origin.height() {
        return Err(CounterexampleError::OutOfRange(format!(
            "tree has m = {} but the origin has height {}",
            tree.m,
            origin.height()
        )));
    }
    Ok(())
}

/// Node of `T*_{h(origin)}` corresponding to a state reachable from `origin`.
pub fn omega(tree: &LabeledTree, origin: &IndexSet, reached: &IndexSet) -> Result<NodeId> {
    check_tree_fits(tree, origin)?;
    let top = origin.highest().unwrap();
    let h = origin.height();
    if reached.n != origin.n {
        return Err(CounterexampleError::NotReachable(reached.clone()));
    }
    if reached.indices == [top] {
        return Ok(tree.root());
    }
    let k = reached.len();
    if k < 2 || reached.indices[k - 1] != top || reached.indices[k - 2] != h {
        return Err(CounterexampleError::NotReachable(reached.clone()));
    }
    let mut path = Vec::with_capacity(k - 1);
    path.push(h);
    path.extend(reached.indices[..k - 2].iter().rev());
    tree.find(&path)
        .ok_or_else(|| CounterexampleError::NotReachable(reached.clone()))
}

/// Inverse of [`omega`].
pub fn omega_inverse(tree: &LabeledTree, origin: &IndexSet, node: NodeId) -> Result<IndexSet> {
    check_tree_fits(tree, origin)?;
    let mut indices = tree.path_labels(node);
    if indices.is_empty() {
        return pre_stable(origin);
    }
    indices.reverse();
    indices.push(origin.highest().unwrap());
    Ok(IndexSet { n: origin.n, indices })
}

/// One-round successor distribution of the index set under `p = q = 1`.
///
/// With `a = min I` and `|I| > 1`: each of `I + {k}` for `k < a` and
/// `I - {a}` has probability `1/a`. A singleton moves to the empty set,
/// which is absorbing.
pub fn transition_distribution(set: &IndexSet, p: f64, q: f64) -> Result<BTreeMap<IndexSet, f64>> {
    if p != 1.0 || q != 1.0 {
        return Err(CounterexampleError::UnsupportedParameters { p, q });
    }
    let mut out = BTreeMap::new();
    match set.len() {
        0 => {
            out.insert(set.clone(), 1.0);
        }
        1 => {
            out.insert(IndexSet::empty(set.n), 1.0);
        }
        _ => {
            let a = set.lowest().unwrap();
            let w = 1.0 / a as f64;
            out.insert(set.without_min(), w);
            for k in 1..a {
                out.insert(set.with(k), w);
            }
        }
    }
    Ok(out)
}

/// Steps of a uniform random walk from `start` until it first visits the
/// root.
pub fn walk_hitting_time(tree: &LabeledTree, start: NodeId, seed: u64) -> Result<u64> {
    if start == tree.root() {
        return Err(CounterexampleError::StartAtRoot);
    }
    if start >= tree.len() {
        return Err(CounterexampleError::OutOfRange(format!("node {start}")));
    }
    let mut rng = sim_rng(seed);
    let mut at = start;
    let mut steps = 0u64;
    while at != tree.root() {
        let node = &tree.nodes[at];
        let pick = rng.gen_range(0..=node.children.len());
        at = if pick == node.children.len() {
            node.parent.unwrap()
        } else {
            node.children[pick]
        };
        steps += 1;
    }
    Ok(steps)
}

/// `count` independent walks, the `i`-th seeded with `derive_seed(seed, i)`.
pub fn walk_hitting_times(tree: &LabeledTree, start: NodeId, seed: u64, count: usize) -> Result<Vec<u64>> {
    (0..count)
        .into_par_iter()
        .map(|i| walk_hitting_time(tree, start, derive_seed(seed, i as u64)))
        .collect()
}

/// Rounds of the `p = q = 1` protocol from `start` until the pre-stable
/// state is reached, or `None` if `max_rounds` pass first.
pub fn rounds_to_pre_stable(start: &Matching, seed: u64, max_rounds: u64) -> Result<Option<u64>> {
    let set = index_set(start)?;
    let target = matching_from_index_set(&pre_stable(&set)?, start.network())?;
    let cfg = SimConfig::new(1.0, 1.0, seed)
        .expect("unit probabilities are valid")
        .with_max_rounds(max_rounds)
        .with_record(crate::dynamics::RecordMode::Changes);
    let traj = run_until(start, &cfg, |m| *m == target);
    Ok(match traj.stop_reason {
        StopReason::RuleSatisfied => Some(traj.rounds_elapsed),
        StopReason::MaxRounds => None,
    })
}

fn check_count_args(n: usize) -> Result<()> {
    if n == 0 || n > MAX_COUNT_N {
        return Err(CounterexampleError::OutOfRange(format!("n = {n} outside 1..={MAX_COUNT_N}")));
    }
    Ok(())
}

/// Deficit-one matchings of `G_n` with height `j`: `n` for `j = 0`,
/// otherwise `(n - j) 2^(j-1)`.
pub fn count_by_height(n: usize, j: usize) -> Result<u128> {
    check_count_args(n)?;
    if j >= n {
        return Err(CounterexampleError::OutOfRange(format!("height {j} >= n = {n}")));
    }
    Ok(if j == 0 {
        n as u128
    } else {
        (n - j) as u128 * (1u128 << (j - 1))
    })
}

/// All deficit-one matchings of `G_n`: `2^n - 1`.
pub fn count_all(n: usize) -> Result<u128> {
    check_count_args(n)?;
    Ok((1u128 << n) - 1)
}

/// Share of deficit-one matchings with height below `ceil(gamma n)`.
pub fn low_height_fraction(n: usize, gamma: f64) -> Result<f64> {
    check_count_args(n)?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CounterexampleError::OutOfRange(format!("gamma = {gamma}")));
    }
    let cut = ((gamma * n as f64).ceil() as usize).min(n);
    let mut low = 0u128;
    for j in 0..cut {
        low += count_by_height(n, j)?;
    }
    Ok(low as f64 / count_all(n)? as f64)
}
