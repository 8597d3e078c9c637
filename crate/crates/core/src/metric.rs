//! Metric spaces and problem instances.
//!
//! An [`Instance`] is a metric space together with a root, a set of terminals and their
//! delay weights. Points are addressed by integer ids into the backend's point table.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = usize;

/// Host graphs up to this many vertices use Floyd–Warshall, larger ones run Dijkstra per source.
pub const FLOYD_WARSHALL_LIMIT: usize = 512;

const TRIANGLE_RTOL: f64 = 1e-12;
const PLANE_TRIANGLE_SAMPLES: usize = 2000;

/// Shortest-path metric of a weighted undirected host graph.
#[derive(Debug, Clone)]
pub struct GraphMetric {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    dist: Vec<f64>,
}

impl GraphMetric {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(u, v, len) in &edges {
            if u >= n || v >= n {
                return Err(Error::Schema(format!(
                    "edge [{u}, {v}] references a vertex outside 0..{n}"
                )));
            }
            if !len.is_finite() || len < 0.0 {
                return Err(Error::NonMetric(format!(
                    "edge [{u}, {v}] has invalid length {len}"
                )));
            }
        }
        let dist = if n <= FLOYD_WARSHALL_LIMIT {
            floyd_warshall(n, &edges)
        } else {
            dijkstra_all(n, &edges)
        };
        Ok(Self { n, edges, dist })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n + b]
    }
}

fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n * n];
    for v in 0..n {
        d[v * n + v] = 0.0;
    }
    for &(u, v, len) in edges {
        if len < d[u * n + v] {
            d[u * n + v] = len;
            d[v * n + u] = len;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let cand = dik + d[k * n + j];
                if cand < d[i * n + j] {
                    d[i * n + j] = cand;
                }
            }
        }
    }
    d
}

#[derive(PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over an adjacency list with nonnegative lengths.
pub(crate) fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry(0.0, source));
    while let Some(HeapEntry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, len) in &adj[u] {
            let cand = d + len;
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = Some(u);
                heap.push(HeapEntry(cand, v));
            }
        }
    }
    (dist, pred)
}

fn dijkstra_all(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, len) in edges {
        adj[u].push((v, len));
        adj[v].push((u, len));
    }
    let mut d = Vec::with_capacity(n * n);
    for s in 0..n {
        d.extend(dijkstra(&adj, s).0);
    }
    d
}

/// A metric space backend.
#[derive(Debug, Clone)]
pub enum Metric {
    Graph(GraphMetric),
    PlaneL1(Vec<[f64; 2]>),
    PlaneL2(Vec<[f64; 2]>),
    Matrix { n: usize, dist: Vec<f64> },
}

impl Metric {
    pub fn graph(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        Ok(Metric::Graph(GraphMetric::new(n, edges)?))
    }

    pub fn matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Schema(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            dist.extend_from_slice(row);
        }
        Ok(Metric::Matrix { n, dist })
    }

    pub fn num_points(&self) -> usize {
        match self {
            Metric::Graph(g) => g.n,
            Metric::PlaneL1(p) | Metric::PlaneL2(p) => p.len(),
            Metric::Matrix { n, .. } => *n,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Metric::Graph(_) => "graph",
            Metric::PlaneL1(_) => "l1",
            Metric::PlaneL2(_) => "l2",
            Metric::Matrix { .. } => "matrix",
        }
    }

    pub fn contains(&self, p: PointId) -> bool {
        p < self.num_points()
    }

    /// Distance between two points, checking that both ids exist.
    pub fn distance(&self, a: PointId, b: PointId) -> Result<f64> {
        for p in [a, b] {
            if !self.contains(p) {
                return Err(Error::UnknownPoint(p));
            }
        }
        Ok(self.dist(a, b))
    }

    /// Unchecked distance; panics on an unknown id.
    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        match self {
            Metric::Graph(g) => g.dist(a, b),
            Metric::PlaneL1(p) => (p[a][0] - p[b][0]).abs() + (p[a][1] - p[b][1]).abs(),
            Metric::PlaneL2(p) => (p[a][0] - p[b][0]).hypot(p[a][1] - p[b][1]),
            Metric::Matrix { n, dist } => dist[a * n + b],
        }
    }

    /// Coordinates of a point for plane backends.
    pub fn position(&self, p: PointId) -> Option<[f64; 2]> {
        match self {
            Metric::PlaneL1(pts) | Metric::PlaneL2(pts) => pts.get(p).copied(),
            _ => None,
        }
    }

    /// Adds a Steiner point at arbitrary coordinates. Only plane backends support this;
    /// graph backends may only place Steiner vertices at existing vertices.
    pub fn add_point(&mut self, at: [f64; 2]) -> Result<PointId> {
        if !(at[0].is_finite() && at[1].is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {at:?}")));
        }
        match self {
            Metric::PlaneL1(p) | Metric::PlaneL2(p) => {
                p.push(at);
                Ok(p.len() - 1)
            }
            _ => Err(Error::Unsupported(format!(
                "{} metric cannot host new points",
                self.kind()
            ))),
        }
    }

    /// Checks identity, symmetry, nonnegativity and the triangle inequality. Exhaustive for
    /// finite backends, sampled for the planes.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_points();
        match self {
            Metric::PlaneL1(pts) | Metric::PlaneL2(pts) => {
                if let Some(p) = pts.iter().find(|p| !(p[0].is_finite() && p[1].is_finite())) {
                    return Err(Error::NonMetric(format!("non-finite coordinates {p:?}")));
                }
                if n >= 3 {
                    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
                    for _ in 0..PLANE_TRIANGLE_SAMPLES {
                        let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                        self.check_triangle(a, b, c)?;
                    }
                }
                Ok(())
            }
            Metric::Graph(_) | Metric::Matrix { .. } => {
                for a in 0..n {
                    let daa = self.dist(a, a);
                    if daa != 0.0 {
                        return Err(Error::NonMetric(format!("d({a},{a}) = {daa} is not zero")));
                    }
                    for b in 0..n {
                        let dab = self.dist(a, b);
                        if dab.is_nan() || dab < 0.0 {
                            return Err(Error::NonMetric(format!("d({a},{b}) = {dab} is negative")));
                        }
                        if dab != self.dist(b, a) {
                            return Err(Error::NonMetric(format!(
                                "d({a},{b}) = {dab} differs from d({b},{a}) = {}",
                                self.dist(b, a)
                            )));
                        }
                    }
                }
                if let Metric::Matrix { .. } = self {
                    for a in 0..n {
                        for b in 0..n {
                            for c in 0..n {
                                self.check_triangle(a, b, c)?;
                            }
                        }
                    }
                }
                // Shortest-path distances satisfy the triangle inequality by construction;
                // only unreachable pairs need attention, which the instance check handles.
                Ok(())
            }
        }
    }

    fn check_triangle(&self, a: PointId, b: PointId, c: PointId) -> Result<()> {
        let (ab, bc, ac) = (self.dist(a, b), self.dist(b, c), self.dist(a, c));
        let slack = TRIANGLE_RTOL * (ab + bc).max(ac);
        if ac > ab + bc + slack {
            return Err(Error::NonMetric(format!(
                "triangle inequality violated: d({a},{c}) = {ac} > d({a},{b}) + d({b},{c}) = {}",
                ab + bc
            )));
        }
        Ok(())
    }
}

/// An instance of the uniform cost-distance Steiner tree problem.
#[derive(Debug, Clone)]
pub struct Instance {
    metric: Metric,
    root: PointId,
    terminals: Vec<PointId>,
    weights: Vec<f64>,
    index: HashMap<PointId, usize>,
    diameter: f64,
}

impl Instance {
    pub fn new(metric: Metric, root: PointId, terminals: Vec<PointId>, weights: Vec<f64>) -> Result<Self> {
        if terminals.is_empty() {
            return Err(Error::NoTerminals);
        }
        if terminals.len() != weights.len() {
            return Err(Error::Schema(format!(
                "{} terminals but {} weights",
                terminals.len(),
                weights.len()
            )));
        }
        if !metric.contains(root) {
            return Err(Error::UnknownPoint(root));
        }
        let mut index = HashMap::with_capacity(terminals.len());
        for (i, (&t, &w)) in terminals.iter().zip(&weights).enumerate() {
            if !metric.contains(t) {
                return Err(Error::UnknownPoint(t));
            }
            if t == root {
                return Err(Error::InvalidInstance(format!("root {root} is listed as a terminal")));
            }
            if index.insert(t, i).is_some() {
                return Err(Error::InvalidInstance(format!("terminal {t} listed twice")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidInstance(format!("weight of terminal {t} is not finite")));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { terminal: t, weight: w });
            }
        }
        metric.validate()?;

        let mut required = Vec::with_capacity(terminals.len() + 1);
        required.push(root);
        required.extend_from_slice(&terminals);
        let mut diameter: f64 = 0.0;
        for (i, &a) in required.iter().enumerate() {
            for &b in &required[i + 1..] {
                let d = metric.dist(a, b);
                if !d.is_finite() {
                    return Err(Error::InvalidInstance(format!(
                        "points {a} and {b} are not connected"
                    )));
                }
                diameter = diameter.max(d);
            }
        }
        Ok(Self {
            metric,
            root,
            terminals,
            weights,
            index,
            diameter,
        })
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn root(&self) -> PointId {
        self.root
    }

    pub fn terminals(&self) -> &[PointId] {
        &self.terminals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn is_terminal(&self, p: PointId) -> bool {
        self.index.contains_key(&p)
    }

    /// Delay weight of `p`; zero for non-terminals.
    pub fn weight(&self, p: PointId) -> f64 {
        self.index.get(&p).map_or(0.0, |&i| self.weights[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.metric.dist(a, b)
    }

    pub fn distance(&self, a: PointId, b: PointId) -> Result<f64> {
        self.metric.distance(a, b)
    }

    /// Largest distance between any two of root and terminals.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Absolute tolerance for case comparisons: 1e-9 scaled by the diameter.
    pub fn tolerance(&self) -> f64 {
        if self.diameter > 0.0 {
            1e-9 * self.diameter
        } else {
            1e-9
        }
    }

    /// Minimum possible delay cost of a terminal subset: sum of w(t) * c(r, t).
    pub fn min_delay_cost(&self, subset: &[PointId]) -> Result<f64> {
        subset.iter().try_fold(0.0, |acc, &t| {
            let i = *self.index.get(&t).ok_or_else(|| {
                if self.metric.contains(t) {
                    Error::InvalidArgument(format!("point {t} is not a terminal"))
                } else {
                    Error::UnknownPoint(t)
                }
            })?;
            Ok(acc + self.weights[i] * self.dist(self.root, t))
        })
    }

    /// D_T for the full terminal set.
    pub fn total_min_delay_cost(&self) -> f64 {
        self.terminals
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * self.dist(self.root, t))
            .sum()
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: InstanceFile = serde_json::from_slice(bytes)?;
        file.into_instance()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from_instance(self)).expect("instance serializes")
    }
}

/// Alias kept for the file-loading entry point.
pub fn load_instance(bytes: &[u8]) -> Result<Instance> {
    Instance::from_json(bytes)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MetricFile {
    Graph {
        vertices: Vec<usize>,
        edges: Vec<(usize, usize, f64)>,
    },
    L1 {
        points: Vec<[f64; 2]>,
    },
    L2 {
        points: Vec<[f64; 2]>,
    },
    Matrix {
        matrix: Vec<Vec<f64>>,
    },
}

/// On-disk JSON layout of an instance.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    metric: MetricFile,
    root: PointId,
    terminals: Vec<PointId>,
    weights: BTreeMap<PointId, f64>,
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        let metric = match self.metric {
            MetricFile::Graph { vertices, edges } => {
                if vertices.iter().enumerate().any(|(i, &v)| i != v) {
                    return Err(Error::Schema("graph vertices must be listed as 0..n-1".into()));
                }
                Metric::graph(vertices.len(), edges)?
            }
            MetricFile::L1 { points } => Metric::PlaneL1(points),
            MetricFile::L2 { points } => Metric::PlaneL2(points),
            MetricFile::Matrix { matrix } => Metric::matrix(matrix)?,
        };
        let mut weights = Vec::with_capacity(self.terminals.len());
        for t in &self.terminals {
            match self.weights.get(t) {
                Some(&w) => weights.push(w),
                None => return Err(Error::Schema(format!("no weight given for terminal {t}"))),
            }
        }
        if let Some(extra) = self.weights.keys().find(|k| !self.terminals.contains(k)) {
            return Err(Error::Schema(format!("weight given for non-terminal {extra}")));
        }
        Instance::new(metric, self.root, self.terminals, weights)
    }

    fn from_instance(inst: &Instance) -> Self {
        let metric = match &inst.metric {
            Metric::Graph(g) => MetricFile::Graph {
                vertices: (0..g.n).collect(),
                edges: g.edges.clone(),
            },
            Metric::PlaneL1(p) => MetricFile::L1 { points: p.clone() },
            Metric::PlaneL2(p) => MetricFile::L2 { points: p.clone() },
            Metric::Matrix { n, dist } => MetricFile::Matrix {
                matrix: dist.chunks(*n).map(<[f64]>::to_vec).collect(),
            },
        };
        Self {
            metric,
            root: inst.root,
            terminals: inst.terminals.clone(),
            weights: inst.terminals.iter().copied().zip(inst.weights.iter().copied()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> Metric {
        Metric::graph(4, vec![(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 10.0)]).unwrap()
    }

    #[test]
    fn graph_distances_are_shortest_paths() {
        let m = path_graph();
        assert_eq!(m.dist(0, 3), 3.5);
        assert_eq!(m.dist(3, 0), 3.5);
        assert_eq!(m.dist(1, 1), 0.0);
        m.validate().unwrap();
    }

    #[test]
    fn dijkstra_matches_floyd_warshall() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.gen_range(0..v), v, rng.gen_range(0.0..5.0)));
        }
        for _ in 0..60 {
            edges.push((rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0.0..5.0)));
        }
        let fw = floyd_warshall(n, &edges);
        let dj = dijkstra_all(n, &edges);
        for (a, b) in fw.iter().zip(&dj) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_distances() {
        let l1 = Metric::PlaneL1(vec![[0.0, 0.0], [5.0, 0.0], [3.0, 4.0]]);
        assert_eq!(l1.dist(0, 1), 5.0);
        assert_eq!(l1.dist(0, 2), 7.0);
        let l2 = Metric::PlaneL2(vec![[0.0, 0.0], [3.0, 4.0]]);
        assert_eq!(l2.dist(0, 1), 5.0);
        assert_eq!(l2.dist(1, 1), 0.0);
    }

    #[test]
    fn unknown_point_is_an_input_error() {
        let m = path_graph();
        assert!(matches!(m.distance(0, 9), Err(Error::UnknownPoint(9))));
    }

    #[test]
    fn only_planes_accept_new_points() {
        let mut plane = Metric::PlaneL1(vec![[0.0, 0.0]]);
        assert_eq!(plane.add_point([1.0, 2.0]).unwrap(), 1);
        assert_eq!(plane.dist(0, 1), 3.0);
        let mut g = path_graph();
        assert!(matches!(g.add_point([0.0, 0.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let m = Metric::matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(m.validate(), Err(Error::NonMetric(_))));
    }

    #[test]
    fn matrix_violating_triangle_inequality_is_rejected() {
        let m = Metric::matrix(vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ])
        .unwrap();
        assert!(matches!(m.validate(), Err(Error::NonMetric(_))));
    }

    #[test]
    fn instance_validation() {
        let m = path_graph();
        assert!(matches!(Instance::new(m.clone(), 0, vec![], vec![]), Err(Error::NoTerminals)));
        assert!(matches!(
            Instance::new(m.clone(), 0, vec![0], vec![1.0]),
            Err(Error::InvalidInstance(_))
        ));
        assert!(matches!(
            Instance::new(m.clone(), 0, vec![2], vec![-1.0]),
            Err(Error::NegativeWeight { terminal: 2, .. })
        ));
        assert!(matches!(
            Instance::new(m.clone(), 0, vec![7], vec![1.0]),
            Err(Error::UnknownPoint(7))
        ));
        let disconnected = Metric::graph(3, vec![(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            Instance::new(disconnected, 0, vec![2], vec![1.0]),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn min_delay_cost_sums_weighted_root_distances() {
        let inst = Instance::new(path_graph(), 0, vec![1, 2, 3], vec![1.0, 0.5, 2.0]).unwrap();
        assert_eq!(inst.min_delay_cost(&[]).unwrap(), 0.0);
        assert_eq!(inst.min_delay_cost(&[1]).unwrap(), 1.0);
        assert_eq!(inst.min_delay_cost(&[1, 2, 3]).unwrap(), 1.0 + 1.5 + 7.0);
        assert_eq!(inst.total_min_delay_cost(), 9.5);
        assert!(inst.min_delay_cost(&[0]).is_err());
        assert_eq!(inst.diameter(), 3.5);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let inst = Instance::new(path_graph(), 0, vec![1, 3], vec![1.0, 0.25]).unwrap();
        let text = inst.to_json();
        let back = Instance::from_json(text.as_bytes()).unwrap();
        assert_eq!(back.terminals(), inst.terminals());
        assert_eq!(back.weights(), inst.weights());
        assert_eq!(back.dist(0, 3), 3.5);

        let bad = br#"{"metric":{"kind":"l1","points":[[0,0],[1,1]]},"root":0,"terminals":[1],"weights":{}}"#;
        assert!(matches!(Instance::from_json(bad), Err(Error::Schema(_))));
        let neg = br#"{"metric":{"kind":"l1","points":[[0,0],[1,1]]},"root":0,"terminals":[1],"weights":{"1":-2}}"#;
        assert!(matches!(Instance::from_json(neg), Err(Error::NegativeWeight { .. })));
        let asym = br#"{"metric":{"kind":"matrix","matrix":[[0,1],[2,0]]},"root":0,"terminals":[1],"weights":{"1":1}}"#;
        assert!(matches!(Instance::from_json(asym), Err(Error::NonMetric(_))));
        let empty = br#"{"metric":{"kind":"l2","points":[[0,0]]},"root":0,"terminals":[],"weights":{}}"#;
        assert!(matches!(Instance::from_json(empty), Err(Error::NoTerminals)));
        assert!(matches!(Instance::from_json(b"{"), Err(Error::Parse(_))));
    }
}
