//! Approximation algorithms for the uniform cost-distance Steiner tree problem.
//!
//! Given a metric, a root, and weighted terminals, the goal is a tree minimizing its total
//! length plus the weighted sum of root-to-terminal path lengths. The solver starts from a
//! short Steiner tree, cuts it into weight-bounded components, and reconnects each component
//! to the root through a well-chosen port.

// Negated comparisons deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod arborescence;
pub mod base;
pub mod error;
pub mod generators;
pub mod metric;
pub mod oracle;
pub mod pipeline;
pub mod reconnect;
pub mod solution;

pub use arborescence::{Arborescence, Edge, NodeId, NodeKind};
pub use base::{exact_base, mst_base, to_binary_arborescence, BaseTree};
pub use error::{Error, Result};
pub use metric::{load_instance, Instance, Metric, PointId};
pub use solution::{Objective, SteinerTree};
pub use pipeline::{
    choose_mu, solve, solve_with_base, verify_certificate, BaseMethod, CostCertificate, Mu, MuPolicy,
    Reconnect, RootMode, Solution, StrategyConfig,
};
