//! Rooted arborescences with the subtree aggregates used throughout the algorithm.
//!
//! Nodes carry their position (a metric point id), their kind, their delay weight and
//! their distance to the instance root, so aggregates can be evaluated without the
//! instance at hand. Edge lengths are stored on the child.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Instance, PointId};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Root,
    Terminal,
    Steiner,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub point: PointId,
    pub kind: NodeKind,
    /// w(v) for terminals, 0 otherwise.
    pub weight: f64,
    /// c(r, p(v)) with r the instance root.
    pub root_dist: f64,
    parent: Option<NodeId>,
    parent_len: f64,
    children: Vec<NodeId>,
}

impl Node {
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    /// Length of the edge entering this node (0 at the root).
    pub fn parent_len(&self) -> f64 {
        self.parent_len
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == NodeKind::Terminal
    }
}

/// Directed edge (parent, child), identified by its child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub parent: NodeId,
    pub child: NodeId,
}

/// Per-node subtree weights W_v plus the tree-level C_A, D_A and W_A.
#[derive(Debug, Clone)]
pub struct Aggregates {
    pub subtree_weight: Vec<f64>,
    pub connection_cost: f64,
    pub min_delay: f64,
    pub total_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceResult {
    pub edge: Edge,
    /// W_{A_y} for the edge (x, y).
    pub sub_weight: f64,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct Arborescence {
    nodes: Vec<Node>,
    root: NodeId,
}

impl Arborescence {
    /// A single-node arborescence.
    pub fn with_root(point: PointId, kind: NodeKind, weight: f64, root_dist: f64) -> Self {
        Self {
            nodes: vec![Node {
                point,
                kind,
                weight,
                root_dist,
                parent: None,
                parent_len: 0.0,
                children: Vec::new(),
            }],
            root: 0,
        }
    }

    /// Single-node arborescence whose weight and root distance come from the instance.
    pub fn rooted_at(inst: &Instance, point: PointId, kind: NodeKind) -> Self {
        let weight = if kind == NodeKind::Terminal { inst.weight(point) } else { 0.0 };
        Self::with_root(point, kind, weight, inst.dist(inst.root(), point))
    }

    /// Appends a child below `parent` with an explicit edge length.
    pub fn add_child(
        &mut self,
        parent: NodeId,
        point: PointId,
        kind: NodeKind,
        weight: f64,
        root_dist: f64,
        len: f64,
    ) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            point,
            kind,
            weight,
            root_dist,
            parent: Some(parent),
            parent_len: len,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Appends a child whose weight, root distance and edge length are derived from the metric.
    pub fn add_node(&mut self, inst: &Instance, parent: NodeId, point: PointId, kind: NodeKind) -> NodeId {
        let weight = if kind == NodeKind::Terminal { inst.weight(point) } else { 0.0 };
        let len = inst.dist(self.nodes[parent].point, point);
        self.add_child(parent, point, kind, weight, inst.dist(inst.root(), point), len)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(child, n)| n.parent.map(|parent| Edge { parent, child }))
    }

    pub fn edge_len(&self, e: Edge) -> f64 {
        self.nodes[e.child].parent_len
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        e.child < self.nodes.len() && self.nodes[e.child].parent == Some(e.parent)
    }

    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].is_terminal())
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals().count()
    }

    pub fn num_positive_terminals(&self) -> usize {
        self.terminals().filter(|&v| self.nodes[v].weight > 0.0).count()
    }

    /// Deterministic post-order; children are visited in increasing id order.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
                continue;
            }
            stack.push((v, true));
            let mut kids = self.nodes[v].children.clone();
            kids.sort_unstable();
            for &c in kids.iter().rev() {
                stack.push((c, false));
            }
        }
        order
    }

    /// Parents before children.
    pub fn top_down(&self) -> Vec<NodeId> {
        let mut order = self.post_order();
        order.reverse();
        order
    }

    /// Path length from the arborescence root to every node.
    pub fn depths(&self) -> Vec<f64> {
        let mut depth = vec![0.0; self.nodes.len()];
        for v in self.top_down() {
            if let Some(p) = self.nodes[v].parent {
                depth[v] = depth[p] + self.nodes[v].parent_len;
            }
        }
        depth
    }

    /// One bottom-up pass computing W_v for every node and C_A, D_A, W_A.
    pub fn aggregates(&self) -> Aggregates {
        let mut w = vec![0.0; self.nodes.len()];
        let mut c = 0.0;
        let mut d = 0.0;
        for v in self.post_order() {
            let node = &self.nodes[v];
            w[v] += node.weight;
            if node.is_terminal() {
                d += node.weight * node.root_dist;
            }
            c += node.parent_len;
            if let Some(p) = node.parent {
                w[p] += w[v];
            }
        }
        Aggregates {
            total_weight: w[self.root],
            subtree_weight: w,
            connection_cost: c,
            min_delay: d,
        }
    }

    pub fn connection_cost(&self) -> f64 {
        self.nodes.iter().map(|n| n.parent_len).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// D_A: weighted direct root distances of the terminals in A.
    pub fn min_delay(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.is_terminal())
            .map(|n| n.weight * n.root_dist)
            .sum()
    }

    /// Weighted path lengths measured from this arborescence's own root.
    pub fn internal_delay(&self) -> f64 {
        let depth = self.depths();
        self.nodes.iter().zip(&depth).map(|(n, d)| n.weight * d).sum()
    }

    /// An edge (x, y) maximising W_{A_y} (W_A - W_{A_y}); the first one in post-order wins ties.
    pub fn balance_edge(&self) -> Result<BalanceResult> {
        let agg = self.aggregates();
        self.balance_edge_with(&agg)
    }

    pub fn balance_edge_with(&self, agg: &Aggregates) -> Result<BalanceResult> {
        let total = agg.total_weight;
        let mut best: Option<BalanceResult> = None;
        for y in self.post_order() {
            let Some(x) = self.nodes[y].parent else { continue };
            let wy = agg.subtree_weight[y];
            let omega = wy * (total - wy);
            if best.is_none_or(|b| omega > b.omega) {
                best = Some(BalanceResult {
                    edge: Edge { parent: x, child: y },
                    sub_weight: wy,
                    omega,
                });
            }
        }
        best.ok_or(Error::EdgelessTree)
    }

    /// Copies the subtree below `top`, skipping every node `v` with `skip(v)` together with
    /// its descendants. Node order is preserved, so relative ids keep their ordering.
    pub fn extract<F: Fn(NodeId) -> bool>(&self, top: NodeId, skip: F) -> (Arborescence, Vec<NodeId>) {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut keep = Vec::new();
        let mut stack = vec![top];
        while let Some(v) = stack.pop() {
            keep.push(v);
            for &c in &self.nodes[v].children {
                if !skip(c) {
                    stack.push(c);
                }
            }
        }
        keep.sort_unstable();
        let mut nodes = Vec::with_capacity(keep.len());
        for (i, &v) in keep.iter().enumerate() {
            map[v] = i;
        }
        for &v in &keep {
            let old = &self.nodes[v];
            let parent = if v == top { None } else { old.parent.map(|p| map[p]) };
            nodes.push(Node {
                point: old.point,
                kind: old.kind,
                weight: old.weight,
                root_dist: old.root_dist,
                parent,
                parent_len: if parent.is_some() { old.parent_len } else { 0.0 },
                children: old
                    .children
                    .iter()
                    .filter(|&&c| map[c] != usize::MAX)
                    .map(|&c| map[c])
                    .collect(),
            });
        }
        (
            Arborescence {
                nodes,
                root: map[top],
            },
            keep,
        )
    }

    /// Removes the edge (x, y): returns (A - A_y, A_y).
    pub fn split_at(&self, e: Edge) -> Result<(Arborescence, Arborescence)> {
        if !self.contains_edge(e) {
            return Err(Error::UnknownEdge(e.child));
        }
        let (minus, _) = self.extract(self.root, |v| v == e.child);
        let (sub, _) = self.extract(e.child, |_| false);
        Ok((minus, sub))
    }

    /// Repeatedly deletes Steiner leaves. The root is never removed.
    pub fn prune_steiner_leaves(&self) -> Arborescence {
        let mut alive = vec![true; self.nodes.len()];
        let mut live_children: Vec<usize> = self.nodes.iter().map(|n| n.children.len()).collect();
        for v in self.post_order() {
            let n = &self.nodes[v];
            if v != self.root && n.kind == NodeKind::Steiner && live_children[v] == 0 {
                alive[v] = false;
                if let Some(p) = n.parent {
                    live_children[p] -= 1;
                }
            }
        }
        self.extract(self.root, |v| !alive[v]).0
    }

    /// Checks single root, acyclic parent links, and child lists consistent with parents.
    pub fn validate(&self) -> Result<()> {
        if self.root >= self.nodes.len() || self.nodes[self.root].parent.is_some() {
            return Err(Error::Structure("root missing or has a parent".into()));
        }
        for (v, n) in self.nodes.iter().enumerate() {
            match n.parent {
                None if v != self.root => {
                    return Err(Error::Structure(format!("node {v} has no parent")))
                }
                Some(p) if p >= self.nodes.len() || !self.nodes[p].children.contains(&v) => {
                    return Err(Error::Structure(format!("parent link of node {v} is dangling")))
                }
                _ => {}
            }
            if n.children.iter().any(|&c| self.nodes.get(c).and_then(|c| c.parent) != Some(v)) {
                return Err(Error::Structure(format!("child list of node {v} is inconsistent")));
            }
        }
        if self.post_order().len() != self.nodes.len() {
            return Err(Error::Structure("parent links contain a cycle".into()));
        }
        Ok(())
    }

    /// Checks that every stored edge length equals the metric distance of its endpoints.
    pub fn validate_lengths(&self, inst: &Instance) -> Result<()> {
        let tol = inst.tolerance();
        for e in self.edges() {
            let expect = inst.dist(self.nodes[e.parent].point, self.nodes[e.child].point);
            if (expect - self.edge_len(e)).abs() > tol {
                return Err(Error::Structure(format!(
                    "edge ({}, {}) stores length {} but the metric gives {expect}",
                    e.parent,
                    e.child,
                    self.edge_len(e)
                )));
            }
        }
        Ok(())
    }
}
