//! Undirected Steiner trees over metric points and evaluation of the cost-distance objective.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arborescence::{Arborescence, NodeKind};
use crate::error::{Error, Result};
use crate::metric::{Instance, PointId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub point: PointId,
    pub kind: NodeKind,
}

/// A Steiner tree: several nodes may share a position (co-located Steiner copies).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SteinerTree {
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalPath {
    pub terminal: PointId,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub connection_cost: f64,
    pub delay_cost: f64,
    pub total: f64,
    pub root_paths: Vec<TerminalPath>,
}

impl SteinerTree {
    pub fn from_arborescence(a: &Arborescence) -> Self {
        Self {
            nodes: a
                .nodes()
                .iter()
                .map(|n| TreeNode { point: n.point, kind: n.kind })
                .collect(),
            edges: a.edges().map(|e| (e.parent, e.child)).collect(),
        }
    }

    pub fn length(&self, inst: &Instance) -> f64 {
        self.edges
            .iter()
            .map(|&(u, v)| inst.dist(self.nodes[u].point, self.nodes[v].point))
            .sum()
    }

    fn adjacency(&self) -> Result<Vec<Vec<usize>>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in &self.edges {
            if u >= self.nodes.len() || v >= self.nodes.len() {
                return Err(Error::Structure(format!("edge ({u}, {v}) references a missing node")));
            }
            if u == v {
                return Err(Error::Structure(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(adj)
    }

    /// Index of the node placed at the instance root.
    pub fn root_node(&self, inst: &Instance) -> Result<usize> {
        let mut roots = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Root);
        match (roots.next(), roots.next()) {
            (Some((i, n)), None) if n.point == inst.root() => Ok(i),
            (Some(_), None) => Err(Error::Structure("root node is not at the instance root".into())),
            (None, _) => Err(Error::Structure("tree has no root node".into())),
            _ => Err(Error::Structure("tree has more than one root node".into())),
        }
    }

    /// Checks that the tree is connected, acyclic, and contains the root and every terminal
    /// exactly once.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let root = self.root_node(inst)?;
        let adj = self.adjacency()?;
        let mut seen = vec![false; inst.metric().num_points()];
        for n in &self.nodes {
            if !inst.metric().contains(n.point) {
                return Err(Error::UnknownPoint(n.point));
            }
            if n.kind == NodeKind::Terminal {
                if !inst.is_terminal(n.point) {
                    return Err(Error::Structure(format!("point {} is not a terminal", n.point)));
                }
                if std::mem::replace(&mut seen[n.point], true) {
                    return Err(Error::Structure(format!("terminal {} appears twice", n.point)));
                }
            }
        }
        if let Some(t) = inst.terminals().iter().find(|&&t| !seen[t]) {
            return Err(Error::Structure(format!("terminal {t} is not spanned")));
        }
        let reached = bfs(&adj, root).iter().filter(|p| p.is_some()).count();
        if reached != self.nodes.len() {
            return Err(Error::Structure("tree is disconnected".into()));
        }
        if self.edges.len() + 1 != self.nodes.len() {
            return Err(Error::Structure(format!(
                "{} edges on {} nodes cannot form a tree",
                self.edges.len(),
                self.nodes.len()
            )));
        }
        Ok(())
    }

    /// The objective: total length plus weighted root path lengths.
    pub fn objective(&self, inst: &Instance) -> Result<Objective> {
        self.validate(inst)?;
        let root = self.root_node(inst)?;
        let adj = self.adjacency()?;
        let parent = bfs(&adj, root);
        let mut order: Vec<usize> = Vec::with_capacity(self.nodes.len());
        let mut queue = VecDeque::from([root]);
        let mut visited = vec![false; self.nodes.len()];
        visited[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let mut depth = vec![0.0; self.nodes.len()];
        for &v in &order[1..] {
            let p = parent[v].expect("reached");
            depth[v] = depth[p] + inst.dist(self.nodes[p].point, self.nodes[v].point);
        }
        let connection_cost = self.length(inst);
        let mut delay_cost = 0.0;
        let mut root_paths = Vec::with_capacity(inst.num_terminals());
        for (i, n) in self.nodes.iter().enumerate() {
            if n.kind == NodeKind::Terminal {
                delay_cost += inst.weight(n.point) * depth[i];
                root_paths.push(TerminalPath { terminal: n.point, length: depth[i] });
            }
        }
        root_paths.sort_by_key(|p| p.terminal);
        Ok(Objective {
            connection_cost,
            delay_cost,
            total: connection_cost + delay_cost,
            root_paths,
        })
    }

    /// Repeatedly deletes Steiner nodes of degree at most one and renumbers the rest.
    pub fn prune_steiner_leaves(&self) -> Self {
        let n = self.nodes.len();
        let mut degree = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            degree[u] += 1;
            degree[v] += 1;
            adj[u].push(v);
            adj[v].push(u);
        }
        let removable = |i: usize, d: usize| self.nodes[i].kind == NodeKind::Steiner && d <= 1;
        let mut alive = vec![true; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| removable(i, degree[i])).collect();
        while let Some(u) = stack.pop() {
            if !alive[u] {
                continue;
            }
            alive[u] = false;
            for &v in &adj[u] {
                if alive[v] {
                    degree[v] -= 1;
                    if removable(v, degree[v]) {
                        stack.push(v);
                    }
                }
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut nodes = Vec::new();
        for i in (0..n).filter(|&i| alive[i]) {
            map[i] = nodes.len();
            nodes.push(self.nodes[i].clone());
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| alive[u] && alive[v])
            .map(|&(u, v)| (map[u], map[v]))
            .collect();
        Self { nodes, edges }
    }

    /// Graphviz rendering for visual inspection.
    pub fn to_dot(&self, inst: &Instance) -> String {
        let mut out = String::from("graph steiner {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let (shape, label) = match n.kind {
                NodeKind::Root => ("box", format!("r:{}", n.point)),
                NodeKind::Terminal => ("circle", format!("{} (w={})", n.point, inst.weight(n.point))),
                NodeKind::Steiner => ("point", String::new()),
            };
            let pos = inst
                .metric()
                .position(n.point)
                .map(|p| format!(", pos=\"{},{}!\"", p[0], p[1]))
                .unwrap_or_default();
            let _ = writeln!(out, "  n{i} [shape={shape}, label=\"{label}\"{pos}];");
        }
        for &(u, v) in &self.edges {
            let len = inst.dist(self.nodes[u].point, self.nodes[v].point);
            let _ = writeln!(out, "  n{u} -- n{v} [label=\"{len}\"];");
        }
        out.push_str("}\n");
        out
    }
}

fn bfs(adj: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let mut parent = vec![None; adj.len()];
    parent[root] = Some(root);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if parent[v].is_none() {
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    parent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;

    fn line_instance() -> Instance {
        let m = Metric::PlaneL1(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]);
        Instance::new(m, 0, vec![1, 2, 3], vec![1.0, 2.0, 0.5]).unwrap()
    }

    fn line_tree() -> SteinerTree {
        let node = |point, kind| TreeNode { point, kind };
        SteinerTree {
            nodes: vec![
                node(0, NodeKind::Root),
                node(1, NodeKind::Terminal),
                node(2, NodeKind::Terminal),
                node(3, NodeKind::Terminal),
            ],
            edges: vec![(0, 1), (1, 2), (1, 3)],
        }
    }

    #[test]
    fn objective_of_a_small_tree() {
        let inst = line_instance();
        let obj = line_tree().objective(&inst).unwrap();
        assert_eq!(obj.connection_cost, 3.0);
        assert_eq!(obj.delay_cost, 1.0 + 2.0 * 2.0 + 0.5 * 2.0);
        assert_eq!(obj.total, 9.0);
        assert_eq!(obj.root_paths[1], TerminalPath { terminal: 2, length: 2.0 });
    }

    #[test]
    fn structural_errors() {
        let inst = line_instance();
        let mut t = line_tree();
        t.edges.pop();
        assert!(matches!(t.objective(&inst), Err(Error::Structure(_))));

        let mut cyc = line_tree();
        cyc.edges[2] = (2, 0);
        cyc.edges.push((0, 3));
        assert!(matches!(cyc.objective(&inst), Err(Error::Structure(_))));

        let mut dup = line_tree();
        dup.nodes[3].point = 2;
        assert!(matches!(dup.validate(&inst), Err(Error::Structure(_))));
    }

    #[test]
    fn dot_mentions_every_edge() {
        let inst = line_instance();
        let dot = line_tree().to_dot(&inst);
        assert_eq!(dot.matches(" -- ").count(), 3);
    }
}
