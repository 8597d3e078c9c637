//! Initial minimum-length Steiner trees and their conversion into binary arborescences.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::arborescence::{Arborescence, NodeId, NodeKind};
use crate::error::{Error, Result};
use crate::metric::{Instance, Metric, PointId};

/// Dreyfus–Wagner runs on at most this many required points (terminals plus root).
pub const EXACT_POINT_LIMIT: usize = 16;

/// An undirected tree over metric points spanning the root and all terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseTree {
    pub edges: Vec<(PointId, PointId)>,
    pub length: f64,
    /// Worst-case length ratio of the producing algorithm, when known.
    pub beta_guarantee: Option<f64>,
}

/// JSON layout of an external tree file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    edges: Vec<(PointId, PointId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

impl BaseTree {
    /// Builds a tree from point edges, measuring its length in the instance metric.
    pub fn from_edges(inst: &Instance, edges: Vec<(PointId, PointId)>, beta: Option<f64>) -> Result<Self> {
        for &(u, v) in &edges {
            inst.distance(u, v)?;
        }
        let length = edges.iter().map(|&(u, v)| inst.dist(u, v)).sum();
        let tree = Self { edges, length, beta_guarantee: beta };
        tree.validate(inst)?;
        Ok(tree)
    }

    pub fn from_json(inst: &Instance, bytes: &[u8]) -> Result<Self> {
        let file: TreeFile = serde_json::from_slice(bytes)?;
        if let Some(b) = file.beta {
            if !(b >= 1.0) {
                return Err(Error::Schema(format!("beta {b} must be at least 1")));
            }
        }
        Self::from_edges(inst, file.edges, file.beta)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TreeFile {
            edges: self.edges.clone(),
            beta: self.beta_guarantee,
        })
        .expect("tree serializes")
    }

    /// Checks that the edges form a tree containing the root and every terminal.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let mut points: BTreeSet<PointId> = BTreeSet::new();
        points.insert(inst.root());
        for &(u, v) in &self.edges {
            if u == v {
                return Err(Error::Structure(format!("self-loop at point {u}")));
            }
            points.insert(u);
            points.insert(v);
        }
        if let Some(t) = inst.terminals().iter().find(|t| !points.contains(t)) {
            return Err(Error::Structure(format!("base tree does not span terminal {t}")));
        }
        if self.edges.len() + 1 != points.len() {
            return Err(Error::Structure(format!(
                "{} edges on {} points is not a tree",
                self.edges.len(),
                points.len()
            )));
        }
        let mut uf = UnionFind::new(points.iter().copied());
        for &(u, v) in &self.edges {
            if !uf.union(u, v) {
                return Err(Error::Structure(format!("edge ({u}, {v}) closes a cycle")));
            }
        }
        Ok(())
    }
}

/// Union–find over arbitrary point ids.
pub(crate) struct UnionFind {
    index: HashMap<PointId, usize>,
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(points: impl IntoIterator<Item = PointId>) -> Self {
        let index: HashMap<_, _> = points.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
        let parent = (0..index.len()).collect();
        Self { index, parent }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: PointId, b: PointId) -> bool {
        let (ra, rb) = (self.find(self.index[&a]), self.find(self.index[&b]));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Minimum spanning tree of the metric closure on the root and the terminals (Prim).
pub fn mst_base(inst: &Instance) -> BaseTree {
    let mut pts = Vec::with_capacity(inst.num_terminals() + 1);
    pts.push(inst.root());
    pts.extend_from_slice(inst.terminals());
    let n = pts.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![0usize; n];
    best[0] = 0.0;
    let mut edges = Vec::with_capacity(n - 1);
    let mut length = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("a vertex remains");
        in_tree[u] = true;
        if u != 0 {
            edges.push((pts[link[u]], pts[u]));
            length += best[u];
        }
        for v in 0..n {
            if !in_tree[v] {
                let d = inst.dist(pts[u], pts[v]);
                if d < best[v] {
                    best[v] = d;
                    link[v] = u;
                }
            }
        }
    }
    BaseTree {
        edges,
        length,
        beta_guarantee: Some(2.0),
    }
}

/// Exact minimum Steiner tree on a finite metric by the Dreyfus–Wagner recursion.
pub fn exact_base(inst: &Instance) -> Result<BaseTree> {
    let (edges, _) = dreyfus_wagner(inst)?;
    let tree = BaseTree::from_edges(inst, edges, Some(1.0))?;
    Ok(tree)
}

/// Returns tree edges and the optimal length computed by the recursion.
pub(crate) fn dreyfus_wagner(inst: &Instance) -> Result<(Vec<(PointId, PointId)>, f64)> {
    let metric = inst.metric();
    match metric {
        Metric::Graph(_) | Metric::Matrix { .. } => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "exact Steiner trees need a finite metric, got {}",
                metric.kind()
            )))
        }
    }
    let terms = inst.terminals();
    let k = terms.len();
    if k + 1 > EXACT_POINT_LIMIT {
        return Err(Error::Unsupported(format!(
            "{} required points exceed the exact limit of {EXACT_POINT_LIMIT}",
            k + 1
        )));
    }
    let nv = metric.num_points();
    let full = (1usize << k) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * nv];
    let mut from = vec![u32::MAX; (full + 1) * nv];
    let mut split = vec![0u32; (full + 1) * nv];
    let mut merged = vec![f64::INFINITY; nv];
    let mut merged_at = vec![0u32; nv];

    for (i, &t) in terms.iter().enumerate() {
        let s = 1 << i;
        for v in 0..nv {
            dp[s * nv + v] = metric.dist(t, v);
        }
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        merged.fill(f64::INFINITY);
        // Proper submasks containing the lowest bit: low | sub for every proper submask sub of rest.
        let mut sub = (rest.wrapping_sub(1)) & rest;
        loop {
            let s1 = low | sub;
            let s2 = s ^ s1;
            let (a, b) = (&dp[s1 * nv..(s1 + 1) * nv], &dp[s2 * nv..(s2 + 1) * nv]);
            for v in 0..nv {
                let c = a[v] + b[v];
                if c < merged[v] {
                    merged[v] = c;
                    merged_at[v] = s1 as u32;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        for v in 0..nv {
            let mut best = f64::INFINITY;
            let mut arg = v;
            for (u, &m) in merged.iter().enumerate() {
                let c = m + metric.dist(u, v);
                if c < best {
                    best = c;
                    arg = u;
                }
            }
            dp[s * nv + v] = best;
            from[s * nv + v] = arg as u32;
        }
        split[s * nv..(s + 1) * nv].copy_from_slice(&merged_at);
    }

    let root = inst.root();
    let optimum = dp[full * nv + root];
    let mut raw = Vec::new();
    let mut stack = vec![(full, root)];
    while let Some((s, v)) = stack.pop() {
        if s.count_ones() == 1 {
            let t = terms[s.trailing_zeros() as usize];
            if t != v {
                raw.push((t, v));
            }
            continue;
        }
        let u = from[s * nv + v] as usize;
        if u != v {
            raw.push((u, v));
        }
        let s1 = split[s * nv + u] as usize;
        stack.push((s1, u));
        stack.push((s ^ s1, u));
    }
    Ok((clean_tree(inst, raw), optimum))
}

/// Turns an edge multiset into a tree: drops duplicates and cycle-closing edges, then prunes
/// non-required leaves. Never increases length.
pub(crate) fn clean_tree(inst: &Instance, raw: Vec<(PointId, PointId)>) -> Vec<(PointId, PointId)> {
    let mut sorted: Vec<(PointId, PointId)> = raw
        .into_iter()
        .filter(|(u, v)| u != v)
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    sorted.sort_by(|a, b| inst.dist(a.0, a.1).total_cmp(&inst.dist(b.0, b.1)).then(a.cmp(b)));
    sorted.dedup();
    let points: BTreeSet<PointId> = sorted
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .chain(std::iter::once(inst.root()))
        .collect();
    let mut uf = UnionFind::new(points.iter().copied());
    let mut edges: Vec<_> = sorted.into_iter().filter(|&(u, v)| uf.union(u, v)).collect();
    loop {
        let mut degree: BTreeMap<PointId, usize> = BTreeMap::new();
        for &(u, v) in &edges {
            *degree.entry(u).or_default() += 1;
            *degree.entry(v).or_default() += 1;
        }
        let before = edges.len();
        edges.retain(|&(u, v)| {
            let removable = |p: PointId| degree[&p] == 1 && p != inst.root() && !inst.is_terminal(p);
            !(removable(u) || removable(v))
        });
        if edges.len() == before {
            return edges;
        }
    }
}

/// Orients `tree` away from the root and enforces the degree constraints: terminals become
/// leaves, non-root Steiner vertices get exactly two children, and Steiner vertices of degree
/// one are contracted. Co-located copies are joined by zero-length edges.
pub fn to_binary_arborescence(tree: &BaseTree, inst: &Instance) -> Result<Arborescence> {
    tree.validate(inst)?;
    let root = inst.root();
    let mut adj: BTreeMap<PointId, Vec<PointId>> = BTreeMap::new();
    for &(u, v) in &tree.edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    // BFS orientation; children sorted by point id.
    let mut children: HashMap<PointId, Vec<PointId>> = HashMap::new();
    let mut order = vec![root];
    let mut seen: BTreeSet<PointId> = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let mut kids: Vec<PointId> = adj
            .get(&u)
            .map(|n| n.iter().copied().filter(|v| !seen.contains(v)).collect())
            .unwrap_or_default();
        kids.sort_unstable();
        for &v in &kids {
            seen.insert(v);
            order.push(v);
            queue.push_back(v);
        }
        children.insert(u, kids);
    }

    let kind_of = |p: PointId| {
        if p == root {
            NodeKind::Root
        } else if inst.is_terminal(p) {
            NodeKind::Terminal
        } else {
            NodeKind::Steiner
        }
    };

    // Bottom-up: effective children after contracting Steiner vertices of out-degree < 2.
    let mut effective: HashMap<PointId, Vec<PointId>> = HashMap::new();
    let mut resolved: HashMap<PointId, Option<PointId>> = HashMap::new();
    for &v in order.iter().rev() {
        let eff: Vec<PointId> = children[&v].iter().filter_map(|c| resolved[c]).collect();
        let rep = match (kind_of(v), eff.len()) {
            (NodeKind::Steiner, 0) => None,
            (NodeKind::Steiner, 1) => Some(eff[0]),
            _ => Some(v),
        };
        resolved.insert(v, rep);
        effective.insert(v, eff);
    }

    enum Item {
        Vertex(PointId),
        Leaf(PointId),
    }
    let mut arb = Arborescence::rooted_at(inst, root, NodeKind::Root);
    let mut stack: Vec<(Item, NodeId)> = effective[&root]
        .iter()
        .rev()
        .map(|&c| (Item::Vertex(c), arb.root()))
        .collect();
    while let Some((item, parent)) = stack.pop() {
        let v = match item {
            Item::Leaf(t) => {
                arb.add_node(inst, parent, t, NodeKind::Terminal);
                continue;
            }
            Item::Vertex(v) => v,
        };
        let kind = kind_of(v);
        let mut items: Vec<Item> = Vec::new();
        if kind == NodeKind::Terminal {
            items.push(Item::Leaf(v));
        }
        items.extend(effective[&v].iter().map(|&c| Item::Vertex(c)));
        if items.len() == 1 {
            // A terminal without children.
            arb.add_node(inst, parent, v, NodeKind::Terminal);
            continue;
        }
        // Chain of co-located Steiner copies, each with exactly two children.
        let mut at = arb.add_node(inst, parent, v, NodeKind::Steiner);
        let m = items.len();
        let mut pending = Vec::with_capacity(m);
        for (i, it) in items.into_iter().enumerate() {
            pending.push((it, at));
            if i + 2 < m {
                at = arb.add_node(inst, at, v, NodeKind::Steiner);
            }
        }
        for entry in pending.into_iter().rev() {
            stack.push(entry);
        }
    }
    Ok(arb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_graph() -> Instance {
        // Center 0 is the root, leaves 1..=4.
        let m = Metric::graph(5, vec![(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0), (0, 4, 4.0)]).unwrap();
        Instance::new(m, 0, vec![1, 2, 3, 4], vec![1.0; 4]).unwrap()
    }

    fn check_degrees(a: &Arborescence) {
        a.validate().unwrap();
        for v in 0..a.len() {
            let n = a.node(v);
            match n.kind {
                NodeKind::Terminal => assert!(n.children().is_empty()),
                NodeKind::Steiner => assert_eq!(n.children().len(), 2),
                NodeKind::Root => {}
            }
        }
    }

    #[test]
    fn mst_of_single_terminal() {
        let m = Metric::PlaneL2(vec![[0.0, 0.0], [3.0, 4.0]]);
        let inst = Instance::new(m, 0, vec![1], vec![1.0]).unwrap();
        let t = mst_base(&inst);
        assert_eq!(t.edges, vec![(0, 1)]);
        assert_eq!(t.length, 5.0);
        assert_eq!(t.beta_guarantee, Some(2.0));
    }

    #[test]
    fn mst_on_collinear_points_is_optimal() {
        let m = Metric::PlaneL1(vec![[0.0, 0.0], [2.0, 0.0], [-1.0, 0.0], [5.0, 0.0]]);
        let inst = Instance::new(m, 0, vec![1, 2, 3], vec![1.0; 3]).unwrap();
        assert_eq!(mst_base(&inst).length, 6.0);
    }

    #[test]
    fn exact_base_on_star() {
        let inst = star_graph();
        let t = exact_base(&inst).unwrap();
        assert_eq!(t.length, 10.0);
        assert_eq!(t.beta_guarantee, Some(1.0));
    }

    #[test]
    fn exact_base_uses_steiner_vertices() {
        // Terminals 1, 2, 3 around a Steiner hub 4; root 0 attached to 1.
        let m = Metric::graph(
            5,
            vec![(0, 1, 1.0), (1, 4, 1.0), (2, 4, 1.0), (3, 4, 1.0), (1, 2, 1.9), (2, 3, 1.9), (1, 3, 1.9)],
        )
        .unwrap();
        let inst = Instance::new(m, 0, vec![1, 2, 3], vec![1.0; 3]).unwrap();
        let (edges, opt) = dreyfus_wagner(&inst).unwrap();
        assert!((opt - 4.0).abs() < 1e-12);
        let t = BaseTree::from_edges(&inst, edges, Some(1.0)).unwrap();
        assert!((t.length - 4.0).abs() < 1e-12);
        assert!(mst_base(&inst).length > t.length);
    }

    #[test]
    fn exact_base_rejects_planes_and_large_sets() {
        let m = Metric::PlaneL1(vec![[0.0, 0.0], [1.0, 1.0]]);
        let inst = Instance::new(m, 0, vec![1], vec![1.0]).unwrap();
        assert!(matches!(exact_base(&inst), Err(Error::Unsupported(_))));

        let n = EXACT_POINT_LIMIT + 1;
        let edges = (1..n).map(|v| (0, v, 1.0)).collect();
        let inst = Instance::new(Metric::graph(n, edges).unwrap(), 0, (1..n).collect(), vec![1.0; n - 1]).unwrap();
        assert!(matches!(exact_base(&inst), Err(Error::Unsupported(_))));
    }

    #[test]
    fn binary_star_keeps_length() {
        let inst = star_graph();
        let t = mst_base(&inst);
        let a = to_binary_arborescence(&t, &inst).unwrap();
        check_degrees(&a);
        assert_eq!(a.connection_cost(), t.length);
        assert_eq!(a.node(a.root()).children().len(), 4);
    }

    #[test]
    fn star_centered_at_terminal_gets_copies() {
        // Terminal 1 sits at the center of a star with four terminal leaves; root hangs off it.
        let m = Metric::PlaneL1(vec![
            [0.0, -1.0],
            [0.0, 0.0],
            [1.0, 0.0],
            [-1.0, 0.0],
            [0.0, 1.0],
            [2.0, 2.0],
        ]);
        let inst = Instance::new(m, 0, vec![1, 2, 3, 4, 5], vec![1.0; 5]).unwrap();
        let t = BaseTree::from_edges(&inst, vec![(0, 1), (1, 2), (1, 3), (1, 4), (1, 5)], None).unwrap();
        let a = to_binary_arborescence(&t, &inst).unwrap();
        check_degrees(&a);
        assert_eq!(a.connection_cost(), t.length);
        // Four subtrees hanging at point 1 (the leaf copy and three of the others) need
        // chain copies: five items at one position give four Steiner copies.
        let copies = (0..a.len())
            .filter(|&v| a.node(v).kind == NodeKind::Steiner && a.node(v).point == 1)
            .count();
        assert_eq!(copies, 4);
        a.validate_lengths(&inst).unwrap();
    }

    #[test]
    fn degree_two_steiner_vertices_are_contracted() {
        let m = Metric::PlaneL1(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [2.0, 1.0]]);
        let inst = Instance::new(m, 0, vec![3], vec![1.0]).unwrap();
        let t = BaseTree::from_edges(&inst, vec![(0, 1), (1, 2), (2, 3)], None).unwrap();
        let a = to_binary_arborescence(&t, &inst).unwrap();
        check_degrees(&a);
        assert_eq!(a.len(), 2);
        assert!(a.connection_cost() <= t.length);
    }

    #[test]
    fn external_tree_json() {
        let inst = star_graph();
        let t = BaseTree::from_json(&inst, br#"{"edges": [[0,1],[0,2],[0,3],[0,4]], "beta": 1.0}"#).unwrap();
        assert_eq!(t.length, 10.0);
        let back = BaseTree::from_json(&inst, t.to_json().as_bytes()).unwrap();
        assert_eq!(back, t);
        assert!(BaseTree::from_json(&inst, br#"{"edges": [[0,1],[0,2],[0,3]]}"#).is_err());
        assert!(BaseTree::from_json(&inst, br#"{"edges": [[0,1],[1,0],[0,2],[0,3],[0,4]]}"#).is_err());
    }
}
