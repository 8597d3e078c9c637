//! End-to-end solver: base tree, threshold choice, cutting, reconnection and certificate.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::best_b;
use crate::arborescence::Arborescence;
use crate::base::{exact_base, mst_base, to_binary_arborescence, BaseTree};
use crate::error::{Error, Result};
use crate::metric::{dijkstra, Instance};
use crate::reconnect::{
    connect_lemma1, connect_split2, connect_split3, improve_root, keep_root, threshold_cut, Piece,
    ReconnectDecision,
};
use crate::solution::{Objective, SteinerTree};

/// Threshold used for cutting, or the degenerate case that replaces cutting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mu {
    Finite(f64),
    /// Zero base length: every terminal sits at the root and the base tree is returned as is.
    Infinite,
    /// Zero minimum delay: the base tree is rewired into a shortest-path arborescence.
    DelayFree,
}

impl Mu {
    pub fn value(self) -> Option<f64> {
        match self {
            Mu::Finite(m) => Some(m),
            _ => None,
        }
    }
}

impl std::fmt::Display for Mu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mu::Finite(m) => write!(f, "{m}"),
            Mu::Infinite => f.write_str("inf"),
            Mu::DelayFree => f.write_str("delay-free"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMethod {
    #[default]
    Mst2,
    Exact,
    External(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reconnect {
    Lemma1,
    Split2,
    #[default]
    Split3,
}

impl Reconnect {
    /// Coefficient proven for this rule.
    pub fn nominal_b(self) -> f64 {
        match self {
            Reconnect::Lemma1 => 1.0,
            Reconnect::Split2 => 2.0 / 3.0,
            Reconnect::Split3 => best_b(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Reconnect::Lemma1 => "lemma1",
            Reconnect::Split2 => "split2",
            Reconnect::Split3 => "split3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootMode {
    Keep,
    #[default]
    Improve,
}

impl RootMode {
    pub fn b(self) -> f64 {
        match self {
            RootMode::Keep => 1.0,
            RootMode::Improve => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RootMode::Keep => "keep",
            RootMode::Improve => "improve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuPolicy {
    /// sqrt(D / (bC)) with the coefficient the run is certified under.
    #[default]
    Auto,
    /// sqrt(D / C).
    Baseline,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub base: BaseMethod,
    pub reconnect: Reconnect,
    pub root_mode: RootMode,
    /// Overrides the coefficient of the reconnection rule.
    pub b: Option<f64>,
    pub mu_policy: MuPolicy,
}

impl StrategyConfig {
    pub fn new(base: BaseMethod, reconnect: Reconnect, root_mode: RootMode) -> Self {
        Self {
            base,
            reconnect,
            root_mode,
            b: None,
            mu_policy: MuPolicy::Auto,
        }
    }

    pub fn with_mu_policy(mut self, policy: MuPolicy) -> Self {
        self.mu_policy = policy;
        self
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.b {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("b must be positive, got {b}")));
            }
            if self.reconnect == Reconnect::Split3 && b < 0.5 {
                return Err(Error::Config(format!("split3 needs b >= 1/2, got {b}")));
            }
        }
        if let MuPolicy::Fixed(m) = self.mu_policy {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Config(format!("fixed threshold must be positive, got {m}")));
            }
        }
        Ok(())
    }

    /// Coefficient of the reconnection rule actually run.
    pub fn strategy_b(&self) -> f64 {
        match self.reconnect {
            Reconnect::Split3 => self.b.unwrap_or_else(best_b),
            r => self.b.unwrap_or_else(|| r.nominal_b()),
        }
    }

    /// Coefficient under which the whole run is certified.
    pub fn certified_b(&self) -> f64 {
        let rule = match self.reconnect {
            Reconnect::Split3 => self.strategy_b(),
            r => r.nominal_b(),
        };
        rule.max(self.root_mode.b())
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.reconnect.name(), self.root_mode.name())
    }
}

/// sqrt(D / (bC)) with the degenerate cases mapped to sentinels. C = 0 takes precedence.
pub fn choose_mu(c: f64, d: f64, b: f64) -> Result<Mu> {
    if !(c >= 0.0 && d >= 0.0) {
        return Err(Error::InvalidArgument(format!("C = {c} and D = {d} must be nonnegative")));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    Ok(if c == 0.0 {
        Mu::Infinite
    } else if d == 0.0 {
        Mu::DelayFree
    } else {
        Mu::Finite((d / (b * c)).sqrt())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCertificate {
    /// Length of the binarized base arborescence.
    pub c: f64,
    pub d: f64,
    pub base_length: f64,
    pub mu: Mu,
    pub b: f64,
    pub beta: Option<f64>,
    pub proven_bound: f64,
    /// C + D + 2 sqrt(bCD); only claimed when the threshold was chosen for this b.
    pub sqrt_bound: Option<f64>,
    pub actual_cost: f64,
    pub lower_bound: f64,
    pub lower_bound_exact: Option<f64>,
    pub component_bound_sum: f64,
}

impl CostCertificate {
    /// Recomputes the bound from C, D, mu and b.
    pub fn bound_formula(&self) -> f64 {
        match self.mu {
            Mu::Finite(m) => (1.0 + self.b * m) * self.c + (1.0 + 1.0 / m) * self.d,
            Mu::Infinite => self.c + self.d,
            Mu::DelayFree => self.c,
        }
    }

    /// Best known lower bound on the optimum.
    pub fn best_lower_bound(&self) -> f64 {
        self.lower_bound_exact.unwrap_or(self.lower_bound)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub tree: SteinerTree,
    pub objective: Objective,
    pub certificate: CostCertificate,
    pub decisions: Vec<ReconnectDecision>,
}

pub const CSV_HEADER: &str = "instance,strategy,C,D,mu,bound,cost,lower_bound,ratio";

impl Solution {
    /// One JSON record per reconnection decision.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.decisions {
            out.push_str(&serde_json::to_string(d).expect("decision serializes"));
            out.push('\n');
        }
        out
    }

    /// Row matching [`CSV_HEADER`].
    pub fn csv_row(&self, instance: &str, strategy: &str) -> String {
        let c = &self.certificate;
        let lb = c.best_lower_bound();
        let ratio = if lb > 0.0 { c.actual_cost / lb } else { 1.0 };
        let mut row = String::new();
        let _ = write!(
            row,
            "{instance},{strategy},{},{},{},{},{},{},{}",
            c.c, c.d, c.mu, c.proven_bound, c.actual_cost, lb, ratio
        );
        row
    }
}

/// Builds the base tree requested by `config`.
pub fn build_base(inst: &Instance, method: &BaseMethod) -> Result<BaseTree> {
    match method {
        BaseMethod::Mst2 => Ok(mst_base(inst)),
        BaseMethod::Exact => exact_base(inst),
        BaseMethod::External(path) => BaseTree::from_json(inst, &std::fs::read(path)?),
    }
}

pub fn solve(inst: &Instance, config: &StrategyConfig) -> Result<Solution> {
    let base = build_base(inst, &config.base)?;
    solve_with_base(inst, &base, config)
}

/// Runs everything after base-tree construction.
pub fn solve_with_base(inst: &Instance, base: &BaseTree, config: &StrategyConfig) -> Result<Solution> {
    config.validate()?;
    let a0 = to_binary_arborescence(base, inst)?;
    let c = a0.connection_cost();
    let d = inst.total_min_delay_cost();
    let mu = match config.mu_policy {
        MuPolicy::Auto => choose_mu(c, d, config.certified_b())?,
        MuPolicy::Baseline => choose_mu(c, d, 1.0)?,
        MuPolicy::Fixed(m) => match choose_mu(c, d, 1.0)? {
            Mu::Finite(_) => Mu::Finite(m),
            sentinel => sentinel,
        },
    };
    let b = config.certified_b();
    let (tree, component_bound_sum, decisions) = match mu {
        Mu::Infinite => (SteinerTree::from_arborescence(&a0), c + d, Vec::new()),
        Mu::DelayFree => (shortest_path_rewire(&a0), c, Vec::new()),
        Mu::Finite(m) => reconnect_all(inst, &a0, m, config)?,
    };
    let objective = tree.objective(inst)?;
    let lower_bound = match base.beta_guarantee {
        Some(beta) => base.length / beta + d,
        None => d,
    };
    let mut certificate = CostCertificate {
        c,
        d,
        base_length: base.length,
        mu,
        b,
        beta: base.beta_guarantee,
        proven_bound: 0.0,
        sqrt_bound: None,
        actual_cost: objective.total,
        lower_bound,
        lower_bound_exact: None,
        component_bound_sum,
    };
    certificate.proven_bound = certificate.bound_formula();
    if let (MuPolicy::Auto, Mu::Finite(_)) = (config.mu_policy, mu) {
        certificate.sqrt_bound = Some(c + d + 2.0 * (b * c * d).sqrt());
    }
    Ok(Solution {
        tree,
        objective,
        certificate,
        decisions,
    })
}

fn reconnect_all(
    inst: &Instance,
    a0: &Arborescence,
    mu: f64,
    config: &StrategyConfig,
) -> Result<(SteinerTree, f64, Vec<ReconnectDecision>)> {
    let branching = threshold_cut(a0, mu)?;
    let root = match config.root_mode {
        RootMode::Keep => keep_root(&branching.root_component, mu)?,
        RootMode::Improve => improve_root(&branching.root_component, inst, mu)?,
    };
    let mut bound_sum = root.bound;
    let mut decisions = root.decisions;
    let mut pieces = root.pieces;
    for (i, comp) in branching.components.iter().enumerate() {
        let mut conn = match config.reconnect {
            Reconnect::Lemma1 => connect_lemma1(comp)?,
            Reconnect::Split2 => connect_split2(comp, inst, mu)?,
            Reconnect::Split3 => connect_split3(comp, inst, mu, config.strategy_b())?,
        };
        conn.decision.component = i + 1;
        bound_sum += conn.bound;
        decisions.push(conn.decision);
        pieces.append(&mut conn.pieces);
    }
    Ok((merge(&root.kept, &pieces), bound_sum, decisions))
}

/// Hangs every piece below the root by an edge to its port.
fn merge(kept: &Arborescence, pieces: &[Piece]) -> SteinerTree {
    let mut tree = SteinerTree::from_arborescence(kept);
    let root = kept.root();
    for piece in pieces {
        let part = SteinerTree::from_arborescence(&piece.tree);
        let offset = tree.nodes.len();
        tree.nodes.extend(part.nodes);
        tree.edges.extend(part.edges.iter().map(|&(u, v)| (u + offset, v + offset)));
        tree.edges.push((root, piece.port.port + offset));
    }
    tree.prune_steiner_leaves()
}

/// Adds zero-length root edges to co-located terminals and keeps a shortest-path tree.
fn shortest_path_rewire(a0: &Arborescence) -> SteinerTree {
    let mut adj = vec![Vec::new(); a0.len()];
    for e in a0.edges() {
        let len = a0.edge_len(e);
        adj[e.parent].push((e.child, len));
        adj[e.child].push((e.parent, len));
    }
    let root = a0.root();
    for t in a0.terminals() {
        if a0.node(t).root_dist == 0.0 && a0.node(t).parent() != Some(root) {
            adj[root].push((t, 0.0));
            adj[t].push((root, 0.0));
        }
    }
    let (_, pred) = dijkstra(&adj, root);
    let mut tree = SteinerTree::from_arborescence(a0);
    tree.edges = pred
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|p| (p, v)))
        .collect();
    tree.prune_steiner_leaves()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub failures: Vec<String>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Re-derives the tree objective and the bound and checks the certificate against both.
pub fn verify_certificate(solution: &Solution, inst: &Instance) -> CertificateReport {
    let mut failures = Vec::new();
    let cert = &solution.certificate;
    match solution.tree.objective(inst) {
        Err(e) => failures.push(e.to_string()),
        Ok(obj) => {
            if !close(obj.total, cert.actual_cost) || !close(obj.total, solution.objective.total) {
                failures.push(format!(
                    "objective mismatch: tree gives {}, certificate says {}",
                    obj.total, cert.actual_cost
                ));
            }
        }
    }
    let bound = cert.bound_formula();
    if !close(bound, cert.proven_bound) {
        failures.push(format!("bound mismatch: recomputed {bound}, certificate says {}", cert.proven_bound));
    }
    let slack = |x: f64| x * (1.0 + 1e-9) + inst.tolerance();
    if cert.actual_cost > slack(bound) {
        failures.push(format!("cost {} exceeds bound {bound}", cert.actual_cost));
    }
    if cert.component_bound_sum > slack(bound) {
        failures.push(format!(
            "component bounds sum to {}, above bound {bound}",
            cert.component_bound_sum
        ));
    }
    if let Some(sb) = cert.sqrt_bound {
        if cert.actual_cost > slack(sb) {
            failures.push(format!("cost {} exceeds C + D + 2 sqrt(bCD) = {sb}", cert.actual_cost));
        }
    }
    CertificateReport {
        passed: failures.is_empty(),
        failures,
    }
}
