//! Exhaustive solvers used as ground truth on small instances.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::arborescence::{Arborescence, BalanceResult, Edge};
use crate::base::dreyfus_wagner;
use crate::error::{Error, Result};
use crate::metric::{Instance, Metric, PointId};
use crate::reconnect::{pick_port, PortChoice};

/// Host graphs with at most this many edges are enumerated exhaustively.
pub const EDGE_BUDGET: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub optimum: f64,
    pub edges: Vec<(PointId, PointId)>,
    pub steiner_length: f64,
    pub enumerated: u64,
}

struct Host {
    edges: Vec<(usize, usize, f64)>,
    n: usize,
    required: Vec<usize>,
}

fn host(inst: &Instance) -> Result<Host> {
    let Metric::Graph(g) = inst.metric() else {
        return Err(Error::Unsupported(format!(
            "the exhaustive oracle needs a graph metric, got {}",
            inst.metric().kind()
        )));
    };
    let edges: Vec<_> = g
        .edges()
        .iter()
        .filter(|&&(u, v, _)| u != v)
        .map(|&(u, v, _)| (u, v, inst.dist(u, v)))
        .collect();
    if edges.len() > EDGE_BUDGET {
        return Err(Error::Unsupported(format!(
            "{} host edges exceed the enumeration budget of {EDGE_BUDGET}",
            edges.len()
        )));
    }
    let mut required = vec![inst.root()];
    required.extend_from_slice(inst.terminals());
    Ok(Host {
        edges,
        n: g.num_vertices(),
        required,
    })
}

/// Scratch space for evaluating one edge subset.
struct Evaluator<'a> {
    host: &'a Host,
    inst: &'a Instance,
    parent: Vec<usize>,
    adj: Vec<Vec<(usize, f64)>>,
    dist: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(host: &'a Host, inst: &'a Instance) -> Self {
        Self {
            host,
            inst,
            parent: vec![0; host.n],
            adj: vec![Vec::new(); host.n],
            dist: vec![f64::INFINITY; host.n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns (length, objective) if the subset is a tree spanning the required points.
    fn evaluate(&mut self, mask: u32) -> Option<(f64, f64)> {
        for i in 0..self.host.n {
            self.parent[i] = i;
        }
        let mut length = 0.0;
        for (i, &(u, v, len)) in self.host.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let (ru, rv) = (self.find(u), self.find(v));
                if ru == rv {
                    return None;
                }
                self.parent[ru] = rv;
                length += len;
            }
        }
        let root = self.find(self.host.required[0]);
        for k in 1..self.host.required.len() {
            if self.find(self.host.required[k]) != root {
                return None;
            }
        }
        for a in &mut self.adj {
            a.clear();
        }
        for (i, &(u, v, len)) in self.host.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                self.adj[u].push((v, len));
                self.adj[v].push((u, len));
            }
        }
        self.dist.fill(f64::INFINITY);
        let r = self.inst.root();
        self.dist[r] = 0.0;
        let mut queue = VecDeque::from([r]);
        while let Some(u) = queue.pop_front() {
            for k in 0..self.adj[u].len() {
                let (v, len) = self.adj[u][k];
                if self.dist[v] == f64::INFINITY {
                    self.dist[v] = self.dist[u] + len;
                    queue.push_back(v);
                }
            }
        }
        let delay: f64 = self
            .inst
            .terminals()
            .iter()
            .zip(self.inst.weights())
            .map(|(&t, &w)| w * self.dist[t])
            .sum();
        Some((length, length + delay))
    }
}

fn to_edges(host: &Host, mask: u32) -> Vec<(PointId, PointId)> {
    (0..host.edges.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (host.edges[i].0, host.edges[i].1))
        .collect()
}

/// Minimum objective over all trees in the host graph, by enumerating edge subsets in
/// increasing bitmask order.
pub fn exact_cost_distance(inst: &Instance) -> Result<OracleResult> {
    let host = host(inst)?;
    let mut ev = Evaluator::new(&host, inst);
    let mut best = (f64::INFINITY, 0u32);
    let mut steiner = f64::INFINITY;
    let total = 1u32 << host.edges.len();
    for mask in 1..total {
        if let Some((len, obj)) = ev.evaluate(mask) {
            steiner = steiner.min(len);
            if obj < best.0 {
                best = (obj, mask);
            }
        }
    }
    if best.0 == f64::INFINITY {
        return Err(Error::InvalidInstance("no tree in the host graph spans all terminals".into()));
    }
    Ok(OracleResult {
        optimum: best.0,
        edges: to_edges(&host, best.1),
        steiner_length: steiner,
        enumerated: u64::from(total - 1),
    })
}

/// Same optimum as [`exact_cost_distance`], enumerating subsets by increasing size.
pub fn exact_cost_distance_by_size(inst: &Instance) -> Result<f64> {
    let host = host(inst)?;
    let m = host.edges.len() as u32;
    let mut ev = Evaluator::new(&host, inst);
    let mut best = f64::INFINITY;
    for size in 1..=m {
        // Gosper's hack: all m-bit masks with `size` bits set.
        let mut mask: u32 = (1 << size) - 1;
        while mask < 1 << m {
            if let Some((_, obj)) = ev.evaluate(mask) {
                best = best.min(obj);
            }
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            mask = (((r ^ mask) >> 2) / c) | r;
        }
    }
    Ok(best)
}

/// Exact minimum Steiner tree length: edge enumeration within the budget, Dreyfus–Wagner
/// otherwise.
pub fn exact_steiner_length(inst: &Instance) -> Result<f64> {
    if let Ok(h) = host(inst) {
        let mut ev = Evaluator::new(&h, inst);
        let best = (1..1u32 << h.edges.len())
            .filter_map(|mask| ev.evaluate(mask).map(|(len, _)| len))
            .fold(f64::INFINITY, f64::min);
        return Ok(best);
    }
    dreyfus_wagner(inst).map(|(_, opt)| opt)
}

/// Port choice by evaluating every terminal's attach cost from scratch.
pub fn brute_force_port(a: &Arborescence) -> Result<PortChoice> {
    let n = a.len();
    let mut adj = vec![Vec::new(); n];
    for e in a.edges() {
        let len = a.edge_len(e);
        adj[e.parent].push((e.child, len));
        adj[e.child].push((e.parent, len));
    }
    let c = a.connection_cost();
    let w: f64 = a.total_weight();
    let mut cost = vec![f64::INFINITY; n];
    for t in a.terminals() {
        let mut dist = vec![f64::INFINITY; n];
        dist[t] = 0.0;
        let mut stack = vec![t];
        while let Some(u) = stack.pop() {
            for &(v, len) in &adj[u] {
                if dist[v] == f64::INFINITY {
                    dist[v] = dist[u] + len;
                    stack.push(v);
                }
            }
        }
        let served: f64 = a.nodes().iter().zip(&dist).map(|(node, d)| node.weight * d).sum();
        cost[t] = a.node(t).root_dist * (1.0 + w) + c + served;
    }
    pick_port(a, &cost)
}

/// Balance by recomputing both side weights of every edge from scratch.
pub fn brute_force_balance(a: &Arborescence) -> Result<BalanceResult> {
    let total = a.total_weight();
    let mut best: Option<BalanceResult> = None;
    for y in a.post_order() {
        let Some(x) = a.node(y).parent() else { continue };
        let mut sub = 0.0;
        let mut stack = vec![y];
        while let Some(v) = stack.pop() {
            sub += a.node(v).weight;
            stack.extend_from_slice(a.node(v).children());
        }
        let omega = sub * (total - sub);
        if best.is_none_or(|b| omega > b.omega) {
            best = Some(BalanceResult {
                edge: Edge { parent: x, child: y },
                sub_weight: sub,
                omega,
            });
        }
    }
    best.ok_or(Error::EdgelessTree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arborescence::NodeKind;

    #[test]
    fn single_terminal_uses_shortest_path() {
        let m = Metric::graph(3, vec![(0, 1, 5.0), (0, 2, 1.0), (2, 1, 1.0)]).unwrap();
        let inst = Instance::new(m, 0, vec![1], vec![3.0]).unwrap();
        let r = exact_cost_distance(&inst).unwrap();
        assert_eq!(r.optimum, 4.0 * 2.0);
        assert_eq!(r.steiner_length, 2.0);
        assert_eq!(exact_cost_distance_by_size(&inst).unwrap(), r.optimum);
    }

    #[test]
    fn zero_weights_give_steiner_length() {
        let m = Metric::graph(5, vec![(0, 4, 1.0), (1, 4, 1.0), (2, 4, 1.0), (3, 4, 1.0), (1, 2, 1.5), (2, 3, 1.5)])
            .unwrap();
        let inst = Instance::new(m, 0, vec![1, 2, 3], vec![0.0; 3]).unwrap();
        let r = exact_cost_distance(&inst).unwrap();
        assert_eq!(r.optimum, 4.0);
        assert_eq!(exact_steiner_length(&inst).unwrap(), 4.0);
    }

    #[test]
    fn budget_and_backend_limits() {
        let n = EDGE_BUDGET + 2;
        let edges = (1..n).map(|v| (0, v, 1.0)).collect();
        let inst = Instance::new(Metric::graph(n, edges).unwrap(), 0, vec![1], vec![1.0]).unwrap();
        assert!(matches!(exact_cost_distance(&inst), Err(Error::Unsupported(_))));
        assert_eq!(exact_steiner_length(&inst).unwrap(), 1.0);
        let plane = Instance::new(Metric::PlaneL2(vec![[0.0, 0.0], [1.0, 0.0]]), 0, vec![1], vec![1.0]).unwrap();
        assert!(exact_cost_distance(&plane).is_err());
        assert!(exact_steiner_length(&plane).is_err());
    }

    #[test]
    fn brute_force_port_on_a_path() {
        let m = Metric::PlaneL1(vec![[0.0, 0.0], [4.0, 0.0], [5.0, 0.0], [6.0, 0.0]]);
        let inst = Instance::new(m, 0, vec![1, 2, 3], vec![1.0, 1.0, 1.0]).unwrap();
        let mut a = Arborescence::rooted_at(&inst, 2, NodeKind::Steiner);
        a.add_node(&inst, 0, 1, NodeKind::Terminal);
        let s = a.add_node(&inst, 0, 2, NodeKind::Steiner);
        a.add_node(&inst, s, 2, NodeKind::Terminal);
        a.add_node(&inst, s, 3, NodeKind::Terminal);
        let p = brute_force_port(&a).unwrap();
        // Port at point 1: 4 + 2 + (0 + 1 + 2) + 3 * 4.
        assert_eq!((p.point, p.cost), (1, 4.0 + 2.0 + 3.0 + 12.0));
    }
}
