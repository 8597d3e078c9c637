//! Worst-case instance families and seeded random instances.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arborescence::{Arborescence, NodeKind};
use crate::base::BaseTree;
use crate::error::{Error, Result};
use crate::metric::{Instance, Metric, PointId};

/// An instance together with a cost-distance optimal tree and a minimum-length tree on
/// which the unimproved algorithm performs badly.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub instance: Instance,
    pub optimal: BaseTree,
    pub adversarial: BaseTree,
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    Ok(())
}

/// Point id of a_i in the gadget graph (1-based i); b_{i,1} and b_{i,2} follow it.
pub fn gadget_a(i: usize) -> PointId {
    3 * (i - 1) + 1
}

/// k four-cliques {r, a_i, b_{i,1}, b_{i,2}} sharing r, with a chain a_1 - a_2 - ... - a_k.
pub fn gen_graph_family(k: usize, beta: f64) -> Result<WorstCase> {
    check_k(k)?;
    if !(1.0..=2.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must lie in [1, 2]")));
    }
    let n = 1 + 3 * k;
    let mut edges = Vec::with_capacity(6 * k + k - 1);
    for i in 1..=k {
        let (a, b1, b2) = (gadget_a(i), gadget_a(i) + 1, gadget_a(i) + 2);
        edges.extend([(0, a, 1.0), (0, b1, 1.0), (0, b2, 1.0)]);
        edges.extend([(a, b1, 0.0), (a, b2, 0.0), (b1, b2, 0.0)]);
        if i < k {
            edges.push((a, gadget_a(i + 1), beta));
        }
    }
    let kf = k as f64;
    let wb = (kf / 2.0 + 1.0) / (1.0 + (kf - 1.0) * beta);
    let terminals: Vec<PointId> = (1..n).collect();
    let weights = terminals
        .iter()
        .map(|&t| {
            let i = (t - 1) / 3 + 1;
            if t != gadget_a(i) {
                wb
            } else if i == 1 || i == k {
                1.0 / beta
            } else {
                0.0
            }
        })
        .collect();
    let instance = Instance::new(Metric::graph(n, edges)?, 0, terminals, weights)?;

    let stubs = (1..=k).flat_map(|i| {
        let a = gadget_a(i);
        [(a, a + 2), (a + 1, a + 2)]
    });
    let optimal: Vec<_> = (1..=k).map(|i| (0, gadget_a(i))).chain(stubs.clone()).collect();
    let adversarial: Vec<_> = std::iter::once((0, gadget_a(1)))
        .chain((1..k).map(|i| (gadget_a(i), gadget_a(i + 1))))
        .chain(stubs)
        .collect();
    Ok(WorstCase {
        optimal: BaseTree::from_edges(&instance, optimal, Some(1.0))?,
        adversarial: BaseTree::from_edges(&instance, adversarial, Some(beta))?,
        instance,
    })
}

/// Point id of v_i (1-based) in the Manhattan family.
pub fn ring_v(i: usize) -> PointId {
    i
}

/// Point id of the stub terminal w_i (1-based, i ≤ 8).
pub fn stub_w(k: usize, i: usize) -> PointId {
    4 * k - 1 + i
}

/// Terminals on the boundary of a k×k square in the L1 plane plus eight stub terminals.
pub fn gen_manhattan_family(k: usize) -> Result<WorstCase> {
    check_k(k)?;
    let kf = k as f64;
    let eps = 1.0 / kf;
    let mut pts = vec![[0.0, 0.0]];
    for i in 1..4 * k {
        let fi = i as f64;
        pts.push(if i <= k {
            [fi, 0.0]
        } else if i <= 2 * k {
            [kf, fi - kf]
        } else if i <= 3 * k {
            [3.0 * kf - fi, kf]
        } else {
            [0.0, 4.0 * kf - fi]
        });
    }
    for i in 1..=8 {
        let fi = i as f64;
        pts.push(match i {
            1 | 2 => [kf - 1.0, -fi * eps],
            3 | 4 => [kf, -fi * eps],
            5 | 6 => [-(fi - 4.0) * eps, kf - 1.0],
            _ => [-(fi - 4.0) * eps, kf],
        });
    }
    let terminals: Vec<PointId> = (1..pts.len()).collect();
    let weights = terminals
        .iter()
        .map(|&t| {
            if t == ring_v(1) || t == ring_v(4 * k - 1) {
                1.0
            } else if t >= stub_w(k, 1) {
                0.5 + eps
            } else {
                0.0
            }
        })
        .collect();
    let instance = Instance::new(Metric::PlaneL1(pts), 0, terminals, weights)?;

    let w = |i| stub_w(k, i);
    let mut path: Vec<(PointId, PointId)> = (1..2 * k - 1).map(|i| (ring_v(i), ring_v(i + 1))).collect();
    path.extend((2 * k..4 * k - 1).map(|i| (ring_v(i), ring_v(i + 1))));
    path.push((ring_v(4 * k - 1), 0));
    path.extend([
        (ring_v(k - 1), w(1)),
        (w(1), w(2)),
        (ring_v(k), w(3)),
        (w(3), w(4)),
        (ring_v(3 * k + 1), w(5)),
        (w(5), w(6)),
        (ring_v(3 * k), w(7)),
        (w(7), w(8)),
    ]);
    let mut optimal = path.clone();
    optimal.push((0, ring_v(1)));
    let mut adversarial = path;
    adversarial.push((ring_v(2 * k - 1), ring_v(2 * k)));
    Ok(WorstCase {
        optimal: BaseTree::from_edges(&instance, optimal, Some(1.0))?,
        adversarial: BaseTree::from_edges(&instance, adversarial, Some(1.0))?,
        instance,
    })
}

/// A plane instance re-embedded as a graph on its Hanan grid.
#[derive(Debug, Clone)]
pub struct HananGrid {
    pub instance: Instance,
    /// Grid vertex of every original point.
    pub vertex_of: Vec<PointId>,
}

impl HananGrid {
    /// Maps a tree over the original points onto grid vertices.
    pub fn map_tree(&self, tree: &BaseTree) -> Result<BaseTree> {
        let edges = tree
            .edges
            .iter()
            .map(|&(u, v)| (self.vertex_of[u], self.vertex_of[v]))
            .collect();
        BaseTree::from_edges(&self.instance, edges, tree.beta_guarantee)
    }
}

/// Grid graph spanned by all x and y coordinates of an L1 instance. Shortest paths on it
/// equal L1 distances, and it contains a rectilinear Steiner minimal tree.
pub fn hanan_grid(inst: &Instance) -> Result<HananGrid> {
    let Metric::PlaneL1(pts) = inst.metric() else {
        return Err(Error::Unsupported(format!(
            "Hanan grids need an l1 instance, got {}",
            inst.metric().kind()
        )));
    };
    let coords = |axis: usize| {
        let mut v: Vec<f64> = pts.iter().map(|p| p[axis]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (xs, ys) = (coords(0), coords(1));
    let index = |vals: &[f64], c: f64| vals.binary_search_by(|v| v.total_cmp(&c)).expect("coordinate present");
    let id = |i: usize, j: usize| i * ys.len() + j;
    let mut edges = Vec::new();
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            if i + 1 < xs.len() {
                edges.push((id(i, j), id(i + 1, j), xs[i + 1] - xs[i]));
            }
            if j + 1 < ys.len() {
                edges.push((id(i, j), id(i, j + 1), ys[j + 1] - ys[j]));
            }
        }
    }
    let vertex_of: Vec<PointId> = pts.iter().map(|p| id(index(&xs, p[0]), index(&ys, p[1]))).collect();
    let metric = Metric::graph(xs.len() * ys.len(), edges)?;
    let terminals = inst.terminals().iter().map(|&t| vertex_of[t]).collect();
    let instance = Instance::new(metric, vertex_of[inst.root()], terminals, inst.weights().to_vec())?;
    Ok(HananGrid { instance, vertex_of })
}

/// Metric backend of a random instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Backend {
    /// Random spanning tree plus extra edges over root, terminals and `steiner` extra vertices.
    Graph { steiner: usize, extra_edges: usize },
    L1,
    L2,
    /// Euclidean distances of random points, stored as a matrix.
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDist {
    Uniform { max: f64 },
    ZeroInflated { max: f64, zero_prob: f64 },
    Zero,
}

impl WeightDist {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            WeightDist::Uniform { max } => rng.gen_range(0.0..=max),
            WeightDist::ZeroInflated { max, zero_prob } => {
                if rng.gen_bool(zero_prob) {
                    0.0
                } else {
                    rng.gen_range(0.0..=max)
                }
            }
            WeightDist::Zero => 0.0,
        }
    }
}

/// Reproducible random instance; the root is always point 0.
pub fn gen_random(seed: u64, n_terminals: usize, backend: Backend, weights: WeightDist, span: f64) -> Result<Instance> {
    if n_terminals == 0 {
        return Err(Error::NoTerminals);
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidArgument(format!("span {span} must be positive")));
    }
    if let WeightDist::Uniform { max } | WeightDist::ZeroInflated { max, .. } = weights {
        if !(max >= 0.0 && max.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight bound {max} must be nonnegative")));
        }
    }
    if let WeightDist::ZeroInflated { zero_prob, .. } = weights {
        if !(0.0..=1.0).contains(&zero_prob) {
            return Err(Error::InvalidArgument(format!("probability {zero_prob} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = |n: usize, rng: &mut ChaCha8Rng| -> Vec<[f64; 2]> {
        (0..n).map(|_| [rng.gen_range(0.0..span), rng.gen_range(0.0..span)]).collect()
    };
    let (metric, terminals) = match backend {
        Backend::Graph { steiner, extra_edges } => {
            let n = 1 + n_terminals + steiner;
            let mut edges = BTreeMap::new();
            for v in 1..n {
                let u = rng.gen_range(0..v);
                edges.insert((u, v), rng.gen_range(0.0..span));
            }
            for _ in 0..extra_edges {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u != v {
                    edges.insert((u.min(v), u.max(v)), rng.gen_range(0.0..span));
                }
            }
            let edges = edges.into_iter().map(|((u, v), len)| (u, v, len)).collect();
            let mut terminals: Vec<PointId> = sample(&mut rng, n - 1, n_terminals).into_iter().map(|i| i + 1).collect();
            terminals.sort_unstable();
            (Metric::graph(n, edges)?, terminals)
        }
        Backend::L1 => (Metric::PlaneL1(points(n_terminals + 1, &mut rng)), (1..=n_terminals).collect()),
        Backend::L2 => (Metric::PlaneL2(points(n_terminals + 1, &mut rng)), (1..=n_terminals).collect()),
        Backend::Matrix => {
            let p = points(n_terminals + 1, &mut rng);
            let plane = Metric::PlaneL2(p);
            let n = n_terminals + 1;
            let rows = (0..n).map(|i| (0..n).map(|j| plane.dist(i, j)).collect()).collect();
            (Metric::matrix(rows)?, (1..=n_terminals).collect())
        }
    };
    let w = (0..n_terminals).map(|_| weights.draw(&mut rng)).collect();
    Instance::new(metric, 0, terminals, w)
}

/// Random arborescence over a random L2 instance: every terminal appears once, parents are
/// drawn uniformly among earlier nodes, and Steiner copies of terminal positions are mixed in.
pub fn gen_random_arborescence(seed: u64, n_terminals: usize, weights: WeightDist) -> Result<(Instance, Arborescence)> {
    let inst = gen_random(seed, n_terminals, Backend::L2, weights, 10.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut a = Arborescence::rooted_at(&inst, inst.terminals()[0], NodeKind::Terminal);
    for &t in &inst.terminals()[1..] {
        if rng.gen_bool(0.3) {
            let parent = rng.gen_range(0..a.len());
            let at = inst.terminals()[rng.gen_range(0..inst.num_terminals())];
            a.add_node(&inst, parent, at, NodeKind::Steiner);
        }
        let parent = rng.gen_range(0..a.len());
        a.add_node(&inst, parent, t, NodeKind::Terminal);
    }
    Ok((inst, a))
}
