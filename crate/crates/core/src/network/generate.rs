use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BipartiteNetwork, FollowerId, LeaderId, NetworkError};

/// How `gen_random` assigns leader constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRule {
    /// Every leader gets the same constraint. Isolated leaders are kept.
    Fixed(usize),
    /// `c_l = min(floor(m / n), |N_l|)`; draws with isolated leaders are
    /// rejected and redrawn.
    CappedRatio,
}

const MAX_REDRAWS: usize = 64;

/// The triangular network `G_n`: leader `i` is adjacent to followers
/// `1..=i`, and every constraint is 1.
pub fn gen_counterexample(n: usize) -> Result<BipartiteNetwork, NetworkError> {
    if n == 0 {
        return Err(NetworkError::InvalidParameter("G_n needs n >= 1".into()));
    }
    let edges: Vec<_> = (1..=n as u32)
        .flat_map(|i| (1..=i).map(move |j| (LeaderId(i), FollowerId(j))))
        .collect();
    BipartiteNetwork::from_parts(n, n, &edges, vec![1; n])
}

/// Seeded `G(n, m, rho)`: each leader/follower pair is an edge independently
/// with probability `rho`. Pairs are visited leader-major, one uniform draw
/// per pair.
pub fn gen_random(
    n: usize,
    m: usize,
    rho: f64,
    seed: u64,
    rule: ConstraintRule,
) -> Result<BipartiteNetwork, NetworkError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(NetworkError::InvalidProbability(rho));
    }
    if n == 0 || m == 0 {
        return Err(NetworkError::Empty {
            leaders: n,
            followers: m,
        });
    }
    let ratio = m / n;
    match rule {
        ConstraintRule::Fixed(0) => {
            return Err(NetworkError::InvalidParameter("fixed constraint must be >= 1".into()))
        }
        ConstraintRule::CappedRatio if ratio == 0 => {
            return Err(NetworkError::InvalidParameter(
                "capped_ratio needs at least as many followers as leaders".into(),
            ))
        }
        _ => {}
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REDRAWS {
        let mut edges = Vec::new();
        let mut degree = vec![0usize; n];
        for l in 0..n {
            for f in 0..m {
                if rng.gen::<f64>() < rho {
                    edges.push((LeaderId::from_index(l), FollowerId::from_index(f)));
                    degree[l] += 1;
                }
            }
        }
        let caps = match rule {
            ConstraintRule::Fixed(c) => vec![c; n],
            ConstraintRule::CappedRatio => {
                if degree.contains(&0) {
                    continue;
                }
                degree.iter().map(|&d| ratio.min(d)).collect()
            }
        };
        return BipartiteNetwork::from_parts(n, m, &edges, caps);
    }
    Err(NetworkError::IsolatedLeaders(MAX_REDRAWS))
}

/// A random network that is guaranteed to admit a stable matching and has
/// every leader degree equal to `max_degree`.
///
/// Followers are shuffled and dealt out as a planted stable matching
/// (constraints differ by at most one across leaders); each leader then gets
/// uniformly chosen extra neighbors until it reaches `max_degree`.
pub fn gen_bounded_planted(
    n: usize,
    m: usize,
    max_degree: usize,
    seed: u64,
) -> Result<BipartiteNetwork, NetworkError> {
    if n == 0 || m < n {
        return Err(NetworkError::InvalidParameter(format!(
            "planted network needs 1 <= n <= m (got n={n}, m={m})"
        )));
    }
    let top = m.div_ceil(n);
    if max_degree < top || max_degree > m {
        return Err(NetworkError::InvalidParameter(format!(
            "max_degree {max_degree} must lie in [{top}, {m}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let caps: Vec<usize> = (0..n).map(|l| m / n + usize::from(l < m % n)).collect();
    let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut next = 0;
    for &c in &caps {
        adj.push(order[next..next + c].to_vec());
        next += c;
    }
    for list in adj.iter_mut() {
        while list.len() < max_degree {
            let f = rng.gen_range(0..m);
            if !list.contains(&f) {
                list.push(f);
            }
        }
    }
    let edges: Vec<_> = adj
        .iter()
        .enumerate()
        .flat_map(|(l, list)| {
            list.iter()
                .map(move |&f| (LeaderId::from_index(l), FollowerId::from_index(f)))
        })
        .collect();
    BipartiteNetwork::from_parts(n, m, &edges, caps)
}
