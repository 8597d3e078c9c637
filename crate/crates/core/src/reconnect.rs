//! Threshold cutting of the initial arborescence and reconnection of the resulting pieces.

use serde::{Deserialize, Serialize};

use crate::arborescence::{Aggregates, Arborescence, Edge, NodeId};
use crate::error::{Error, Result};
use crate::metric::{Instance, PointId};

/// Result of cutting: the pruned component containing the root plus every cut-off component.
#[derive(Debug, Clone)]
pub struct Branching {
    pub root_component: Arborescence,
    pub components: Vec<Arborescence>,
}

/// Removes the edge above every node whose accumulated (not yet cut) subtree weight exceeds `mu`.
pub fn threshold_cut(a0: &Arborescence, mu: f64) -> Result<Branching> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {mu}")));
    }
    let order = a0.post_order();
    let mut acc = vec![0.0; a0.len()];
    let mut cut = vec![false; a0.len()];
    let mut cut_order = Vec::new();
    for &v in &order {
        let node = a0.node(v);
        acc[v] += node.weight;
        if v == a0.root() {
            continue;
        }
        if acc[v] > mu {
            cut[v] = true;
            cut_order.push(v);
        } else if let Some(p) = node.parent() {
            acc[p] += acc[v];
        }
    }
    let components = cut_order
        .iter()
        .map(|&y| a0.extract(y, |v| v != y && cut[v]).0)
        .collect();
    let root_component = a0.extract(a0.root(), |v| cut[v]).0.prune_steiner_leaves();
    Ok(Branching {
        root_component,
        components,
    })
}

/// A port terminal and the cost of serving the whole arborescence through it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortChoice {
    pub port: NodeId,
    pub point: PointId,
    pub cost: f64,
}

/// Picks the terminal among `costs` with minimal cost; near-ties go to the smallest node id.
pub(crate) fn pick_port(a: &Arborescence, costs: &[f64]) -> Result<PortChoice> {
    let min = a
        .terminals()
        .map(|t| costs[t])
        .fold(f64::INFINITY, f64::min);
    if min == f64::INFINITY {
        return Err(Error::NoTerminals);
    }
    let limit = min + 1e-9 * min.abs().max(1.0);
    let port = a
        .terminals()
        .filter(|&t| costs[t] <= limit)
        .min()
        .expect("minimum is attained");
    Ok(PortChoice {
        port,
        point: a.node(port).point,
        cost: costs[port],
    })
}

/// Best port in linear time: the cost at the root is evaluated directly, then pushed down
/// every edge with a constant-time update.
pub fn best_port(a: &Arborescence) -> Result<PortChoice> {
    let agg = a.aggregates();
    best_port_with(a, &agg)
}

fn best_port_with(a: &Arborescence, agg: &Aggregates) -> Result<PortChoice> {
    let w = agg.total_weight;
    let c = agg.connection_cost;
    let depth = a.depths();
    let root = a.node(a.root());
    let mut cost = vec![0.0; a.len()];
    cost[a.root()] = root.root_dist * (1.0 + w)
        + c
        + a.nodes().iter().zip(&depth).map(|(n, d)| n.weight * d).sum::<f64>();
    for y in a.top_down() {
        let Some(x) = a.node(y).parent() else { continue };
        let (nx, ny) = (a.node(x), a.node(y));
        let delta = (nx.root_dist - ny.root_dist) * (1.0 + w)
            + ny.parent_len() * (2.0 * agg.subtree_weight[y] - w);
        cost[y] = cost[x] - delta;
    }
    pick_port(a, &cost)
}

/// Which reconnection rule is applied to cut-off components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Lemma1,
    Split2,
    Split3,
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    SingleTerminal,
    SinglePositive,
    KeepWhole,
    Split2,
    Split3SinglePositiveX,
    Case21,
    Case22,
    Case23,
    RootKeep,
    RootReconnect,
}

/// Audit record of how one component was reconnected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconnectDecision {
    pub component: usize,
    pub strategy: Strategy,
    pub case: CaseTag,
    pub split_edges: Vec<(PointId, PointId)>,
    pub w_total: f64,
    pub connection_cost: f64,
    pub min_delay: f64,
    pub omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_x1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_x2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_prime: Option<f64>,
    pub bound: f64,
    pub cost: f64,
}

impl ReconnectDecision {
    fn new(strategy: Strategy, case: CaseTag, agg: &Aggregates, omega: f64) -> Self {
        Self {
            component: 0,
            strategy,
            case,
            split_edges: Vec::new(),
            w_total: agg.total_weight,
            connection_cost: agg.connection_cost,
            min_delay: agg.min_delay,
            omega,
            w_x: None,
            w_y: None,
            w_x1: None,
            w_x2: None,
            omega_x: None,
            alpha: None,
            alpha_prime: None,
            bound: 0.0,
            cost: 0.0,
        }
    }
}

/// A part attached to the root by a direct edge to its port.
#[derive(Debug, Clone)]
pub struct Piece {
    pub tree: Arborescence,
    pub port: PortChoice,
}

/// Reconnection of one cut-off component.
#[derive(Debug, Clone)]
pub struct Connection {
    pub pieces: Vec<Piece>,
    pub bound: f64,
    pub cost: f64,
    pub decision: ReconnectDecision,
}

/// Attaches `a` through its best port. A lone terminal is attached by itself and any
/// remaining Steiner nodes are dropped.
fn attach(a: &Arborescence) -> Result<Piece> {
    let mut terms = a.terminals();
    let (first, second) = (terms.next(), terms.next());
    match (first, second) {
        (None, _) => Err(Error::NoTerminals),
        (Some(t), None) => {
            let n = a.node(t);
            let tree = Arborescence::with_root(n.point, n.kind, n.weight, n.root_dist);
            let cost = n.root_dist * (1.0 + n.weight);
            Ok(Piece {
                tree,
                port: PortChoice {
                    port: 0,
                    point: n.point,
                    cost,
                },
            })
        }
        _ => Ok(Piece {
            port: best_port(a)?,
            tree: a.clone(),
        }),
    }
}

/// Upper bound on the cost of attaching `a` through its best port.
pub fn lemma1_bound(agg: &Aggregates, omega: f64, num_terminals: usize) -> f64 {
    let (w, c, d) = (agg.total_weight, agg.connection_cost, agg.min_delay);
    if w <= 0.0 {
        return f64::INFINITY;
    }
    let single = (1.0 + w / 2.0) * c + (1.0 + 1.0 / w) * d;
    if num_terminals >= 2 {
        single.min((1.0 + 2.0 * omega / w) * c + (1.0 + 1.0 / w) * d)
    } else {
        single
    }
}

fn omega_of(a: &Arborescence, agg: &Aggregates) -> f64 {
    a.balance_edge_with(agg).map_or(0.0, |b| b.omega)
}

/// Connects the component whole through its best port.
pub fn connect_lemma1(a: &Arborescence) -> Result<Connection> {
    let agg = a.aggregates();
    let omega = omega_of(a, &agg);
    let n = a.num_terminals();
    let piece = attach(a)?;
    let case = if n == 1 { CaseTag::SingleTerminal } else { CaseTag::KeepWhole };
    let mut decision = ReconnectDecision::new(Strategy::Lemma1, case, &agg, omega);
    decision.bound = lemma1_bound(&agg, omega, n);
    Ok(finish(vec![piece], decision.bound, decision))
}

fn finish(pieces: Vec<Piece>, bound: f64, mut decision: ReconnectDecision) -> Connection {
    let cost = pieces.iter().map(|p| p.port.cost).sum();
    decision.bound = bound;
    decision.cost = cost;
    Connection {
        pieces,
        bound,
        cost,
        decision,
    }
}

/// Splits at `e` and orders the halves so that the heavier comes first (ties: larger length).
fn split_heavier_first(a: &Arborescence, e: Edge) -> Result<(Arborescence, Arborescence)> {
    let (minus, sub) = a.split_at(e)?;
    let key = |t: &Arborescence| (t.total_weight(), t.connection_cost());
    let (km, ks) = (key(&minus), key(&sub));
    if km.0 > ks.0 || (km.0 == ks.0 && km.1 >= ks.1) {
        Ok((minus, sub))
    } else {
        Ok((sub, minus))
    }
}

fn edge_points(a: &Arborescence, e: Edge) -> (PointId, PointId) {
    (a.node(e.parent).point, a.node(e.child).point)
}

fn uniform_bound(coef: f64, mu: f64, agg: &Aggregates) -> f64 {
    (1.0 + coef * mu) * agg.connection_cost + (1.0 + 1.0 / mu) * agg.min_delay
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("threshold must be positive and finite, got {mu}")))
    }
}

/// Keeps the component whole or splits it once at its balance edge.
pub fn connect_split2(a: &Arborescence, inst: &Instance, mu: f64) -> Result<Connection> {
    check_mu(mu)?;
    let agg = a.aggregates();
    let bound = uniform_bound(2.0 / 3.0, mu, &agg);
    let (w, c, d) = (agg.total_weight, agg.connection_cost, agg.min_delay);
    if a.num_terminals() == 1 {
        let decision = ReconnectDecision::new(Strategy::Split2, CaseTag::SingleTerminal, &agg, 0.0);
        return Ok(finish(vec![attach(a)?], bound, decision));
    }
    let bal = a.balance_edge_with(&agg)?;
    let keep = w <= 0.0
        || 2.0 * bal.omega / w * c + d / w <= 2.0 / 3.0 * mu * c + d / mu + inst.tolerance();
    if keep {
        let decision = ReconnectDecision::new(Strategy::Split2, CaseTag::KeepWhole, &agg, bal.omega);
        return Ok(finish(vec![attach(a)?], bound, decision));
    }
    let (ax, ay) = split_heavier_first(a, bal.edge)?;
    let mut decision = ReconnectDecision::new(Strategy::Split2, CaseTag::Split2, &agg, bal.omega);
    decision.split_edges.push(edge_points(a, bal.edge));
    decision.w_x = Some(ax.total_weight());
    decision.w_y = Some(ay.total_weight());
    Ok(finish(vec![attach(&ax)?, attach(&ay)?], bound, decision))
}

/// Keeps the component whole or splits it into two or three parts.
pub fn connect_split3(a: &Arborescence, inst: &Instance, mu: f64, b: f64) -> Result<Connection> {
    check_mu(mu)?;
    if !(b >= 0.5) {
        return Err(Error::Config(format!("coefficient b = {b} is below 1/2")));
    }
    let tol = inst.tolerance();
    let agg = a.aggregates();
    let bound = uniform_bound(b, mu, &agg);
    let (w, c, d) = (agg.total_weight, agg.connection_cost, agg.min_delay);
    if a.num_terminals() == 1 {
        let decision = ReconnectDecision::new(Strategy::Split3, CaseTag::SingleTerminal, &agg, 0.0);
        return Ok(finish(vec![attach(a)?], bound, decision));
    }
    let bal = a.balance_edge_with(&agg)?;
    if a.num_positive_terminals() <= 1 {
        let decision = ReconnectDecision::new(Strategy::Split3, CaseTag::SinglePositive, &agg, bal.omega);
        return Ok(finish(vec![attach(a)?], bound, decision));
    }
    if 2.0 * bal.omega / w * c + d / w <= b * mu * c + d / mu + tol {
        let decision = ReconnectDecision::new(Strategy::Split3, CaseTag::KeepWhole, &agg, bal.omega);
        return Ok(finish(vec![attach(a)?], bound, decision));
    }
    let (ax, ay) = split_heavier_first(a, bal.edge)?;
    let (wx, wy) = (ax.total_weight(), ay.total_weight());
    let mut decision = ReconnectDecision::new(Strategy::Split3, CaseTag::Split3SinglePositiveX, &agg, bal.omega);
    decision.split_edges.push(edge_points(a, bal.edge));
    decision.w_x = Some(wx);
    decision.w_y = Some(wy);
    if ax.num_positive_terminals() <= 1 {
        return Ok(finish(vec![attach(&ax)?, attach(&ay)?], bound, decision));
    }

    let agx = ax.aggregates();
    let balx = ax.balance_edge_with(&agx)?;
    let (ax1, ax2) = split_heavier_first(&ax, balx.edge)?;
    let (wx1, wx2) = (ax1.total_weight(), ax2.total_weight());
    let (cx, dx) = (agx.connection_cost, agx.min_delay);
    let spread = wx2 * (3.0 * wx2 - wx1) / 2.0;
    decision.w_x1 = Some(wx1);
    decision.w_x2 = Some(wx2);
    decision.omega_x = Some(balx.omega);
    decision.alpha = Some((1.0 / wy - 1.0 / wx) * spread);
    decision.alpha_prime = Some((1.0 / wx2 - 1.0 / wy) * spread);

    let pieces = if wx1 >= 3.0 * wx2 {
        decision.case = CaseTag::Case21;
        vec![attach(&ax)?, attach(&ay)?]
    } else if (2.0 * balx.omega / wx - wx1 / 2.0) * cx < (1.0 / wx2 - 1.0 / wx) * dx - tol {
        decision.case = CaseTag::Case22;
        vec![attach(&ax)?, attach(&ay)?]
    } else {
        decision.case = CaseTag::Case23;
        decision.split_edges.push(edge_points(&ax, balx.edge));
        vec![attach(&ax1)?, attach(&ax2)?, attach(&ay)?]
    };
    Ok(finish(pieces, bound, decision))
}

/// The root component after reconnection: the part still hanging at the root plus
/// re-attached subtrees.
#[derive(Debug, Clone)]
pub struct RootConnection {
    pub kept: Arborescence,
    pub pieces: Vec<Piece>,
    pub bound: f64,
    pub cost: f64,
    pub decisions: Vec<ReconnectDecision>,
}

fn kept_cost(kept: &Arborescence) -> f64 {
    kept.connection_cost() + kept.internal_delay()
}

/// Leaves the root component unchanged.
pub fn keep_root(ar: &Arborescence, mu: f64) -> Result<RootConnection> {
    check_mu(mu)?;
    let agg = ar.aggregates();
    let bound = uniform_bound(1.0, mu, &agg);
    let cost = kept_cost(ar);
    let mut decision = ReconnectDecision::new(Strategy::Root, CaseTag::RootKeep, &agg, 0.0);
    decision.bound = bound;
    decision.cost = cost;
    Ok(RootConnection {
        kept: ar.clone(),
        pieces: Vec::new(),
        bound,
        cost,
        decisions: vec![decision],
    })
}

/// Detaches every root subtree whose weighted depth is too large and reconnects it through
/// its own port.
pub fn improve_root(ar: &Arborescence, inst: &Instance, mu: f64) -> Result<RootConnection> {
    check_mu(mu)?;
    let tol = inst.tolerance();
    let agg = ar.aggregates();
    let bound = uniform_bound(0.5, mu, &agg);
    let mut detached = Vec::new();
    let mut pieces = Vec::new();
    let mut decisions = Vec::new();
    let mut kids = ar.node(ar.root()).children().to_vec();
    kids.sort_unstable();
    for x in kids {
        let (ax, _) = ar.extract(x, |_| false);
        let ag = ax.aggregates();
        let len = ag.connection_cost + ar.node(x).parent_len();
        let keep = ag.total_weight * len <= mu / 2.0 * len + ag.min_delay / mu + tol;
        let case = if keep { CaseTag::RootKeep } else { CaseTag::RootReconnect };
        let mut decision = ReconnectDecision::new(Strategy::Root, case, &ag, omega_of(&ax, &ag));
        decision.split_edges.push((ar.node(ar.root()).point, ar.node(x).point));
        decision.bound = uniform_bound(0.5, mu, &ag) + (1.0 + mu / 2.0) * ar.node(x).parent_len();
        if keep {
            let depth_cost: f64 = {
                let depth = ax.depths();
                ax.nodes()
                    .iter()
                    .zip(&depth)
                    .map(|(n, dp)| n.weight * (dp + ar.node(x).parent_len()))
                    .sum()
            };
            decision.cost = len + depth_cost;
        } else {
            let piece = attach(&ax)?;
            decision.cost = piece.port.cost;
            pieces.push(piece);
            detached.push(x);
        }
        decisions.push(decision);
    }
    let kept = ar.extract(ar.root(), |v| detached.contains(&v)).0;
    let cost = kept_cost(&kept) + pieces.iter().map(|p| p.port.cost).sum::<f64>();
    Ok(RootConnection {
        kept,
        pieces,
        bound,
        cost,
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arborescence::NodeKind;
    use crate::metric::Metric;

    /// Six terminals on a path, all pairwise distances 1 (root is a seventh point).
    fn unit_path() -> (Instance, Arborescence) {
        let n = 7;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let m = Metric::matrix(rows).unwrap();
        let inst = Instance::new(m, 6, (0..6).collect(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        // t5 -> t4 -> ... -> t0
        let mut a = Arborescence::rooted_at(&inst, 5, NodeKind::Terminal);
        let mut at = a.root();
        for p in (0..5).rev() {
            at = a.add_node(&inst, at, p, NodeKind::Terminal);
        }
        (inst, a)
    }

    #[test]
    fn ring_example_costs() {
        let (inst, a) = unit_path();
        let whole = connect_lemma1(&a).unwrap();
        assert_eq!(whole.cost, 13.0);
        let split = connect_split2(&a, &inst, 1.0).unwrap();
        assert_eq!(split.decision.case, CaseTag::Split2);
        assert_eq!(split.cost, 8.0);
        assert!(split.cost <= split.bound);
    }

    #[test]
    fn single_terminal_port() {
        let m = Metric::PlaneL1(vec![[0.0, 0.0], [1.0, 0.0]]);
        let inst = Instance::new(m, 0, vec![1], vec![4.0]).unwrap();
        let a = Arborescence::rooted_at(&inst, 1, NodeKind::Terminal);
        let p = best_port(&a).unwrap();
        assert_eq!((p.port, p.cost), (0, 5.0));
        let c = connect_split2(&a, &inst, 2.0).unwrap();
        assert_eq!(c.cost, 5.0);
        assert!(c.cost <= (1.0 + 1.0 / 2.0) * 4.0);
    }

    #[test]
    fn cut_rejects_bad_threshold() {
        let (_, a) = unit_path();
        assert!(threshold_cut(&a, 0.0).is_err());
        assert!(threshold_cut(&a, -1.0).is_err());
    }

    #[test]
    fn high_threshold_cuts_nothing() {
        let (_, a) = unit_path();
        let br = threshold_cut(&a, 10.0).unwrap();
        assert!(br.components.is_empty());
        assert_eq!(br.root_component.len(), a.len());
    }

    #[test]
    fn split3_rejects_small_b() {
        let (inst, a) = unit_path();
        assert!(matches!(connect_split3(&a, &inst, 1.0, 0.4), Err(Error::Config(_))));
    }

    #[test]
    fn improve_root_rewires_heavy_far_terminal() {
        // A weighted terminal close to the root but reached through a long detour.
        let m = Metric::PlaneL1(vec![[0.0, 0.0], [5.0, 0.0], [1.0, 0.0]]);
        let inst = Instance::new(m, 0, vec![1, 2], vec![0.0, 1.0]).unwrap();
        let mut ar = Arborescence::rooted_at(&inst, 0, NodeKind::Root);
        let s = ar.add_node(&inst, 0, 1, NodeKind::Steiner);
        ar.add_node(&inst, s, 1, NodeKind::Terminal);
        ar.add_node(&inst, s, 2, NodeKind::Terminal);
        let keep = keep_root(&ar, 1.0).unwrap();
        let better = improve_root(&ar, &inst, 1.0).unwrap();
        assert_eq!(keep.cost, 18.0);
        assert_eq!(better.decisions[0].case, CaseTag::RootReconnect);
        assert_eq!(better.cost, 6.0);
        assert!(better.cost <= better.bound);
    }
}
