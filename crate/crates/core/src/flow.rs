//! Dinic's maximum flow on integer capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: i64,
    flow: i64,
    rev: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    graph: Vec<Vec<Arc>>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

/// Handle to a forward arc, for reading its flow after `max_flow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ArcId {
    node: usize,
    slot: usize,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            graph: vec![Vec::new(); nodes],
            level: vec![-1; nodes],
            iter: vec![0; nodes],
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: u64) -> ArcId {
        let slot = self.graph[from].len();
        let rev = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc {
            to,
            cap: cap as i64,
            flow: 0,
            rev,
        });
        self.graph[to].push(Arc {
            to: from,
            cap: 0,
            flow: 0,
            rev: slot,
        });
        ArcId { node: from, slot }
    }

    pub fn flow(&self, id: ArcId) -> u64 {
        self.graph[id.node][id.slot].flow as u64
    }

    pub fn tail(&self, id: ArcId) -> usize {
        id.node
    }

    pub fn head(&self, id: ArcId) -> usize {
        self.graph[id.node][id.slot].to
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for a in &self.graph[v] {
                if a.cap > a.flow && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        self.level[sink] >= 0
    }

    fn dfs(&mut self, v: usize, sink: usize, pushed: i64) -> i64 {
        if v == sink {
            return pushed;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let Arc { to, cap, flow, rev } = self.graph[v][i];
            if cap > flow && self.level[to] == self.level[v] + 1 {
                let got = self.dfs(to, sink, pushed.min(cap - flow));
                if got > 0 {
                    self.graph[v][i].flow += got;
                    self.graph[to][rev].flow -= got;
                    return got;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> u64 {
        let mut total = 0;
        while self.bfs(source, sink) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(source, sink, i64::MAX);
                if f == 0 {
                    break;
                }
                total += f as u64;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_instance() {
        let mut g = FlowNetwork::new(6);
        g.add_arc(0, 1, 10);
        g.add_arc(0, 2, 10);
        g.add_arc(1, 3, 4);
        g.add_arc(1, 4, 8);
        g.add_arc(2, 4, 9);
        g.add_arc(3, 5, 10);
        g.add_arc(4, 3, 6);
        g.add_arc(4, 5, 10);
        assert_eq!(g.max_flow(0, 5), 19);
    }

    #[test]
    fn disconnected() {
        let mut g = FlowNetwork::new(4);
        g.add_arc(0, 1, 10);
        g.add_arc(2, 3, 5);
        assert_eq!(g.max_flow(0, 3), 0);
    }

    #[test]
    fn needs_reverse_residual() {
        // Greedy 0-1-2-3 blocks both units unless flow on 1-2 is cancelled.
        let mut g = FlowNetwork::new(4);
        g.add_arc(0, 1, 1);
        g.add_arc(0, 2, 1);
        let mid = g.add_arc(1, 2, 1);
        g.add_arc(1, 3, 1);
        g.add_arc(2, 3, 1);
        assert_eq!(g.max_flow(0, 3), 2);
        assert!(g.flow(mid) <= 1);
        assert_eq!(g.head(mid), 2);
    }
}
