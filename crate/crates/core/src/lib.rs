#![no_std]
//! Contextual causal Bayesian optimisation over mixed policy scopes.
//!
//! The crate is `no_std` with `alloc`: graphs, scopes, structural causal
//! models, Gaussian-process surrogates, acquisition, the scope bandit and the
//! optimiser loops. File IO and the command line live in the `cocabo` crate.

extern crate alloc;

pub mod acquisition;
pub mod bandit;
pub mod engine;
pub mod fixtures;
pub mod gp;
pub mod graph;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod scm;
pub mod scope;

pub use graph::{parse_graph, CausalGraph, GraphError, VarKind, Variable};
pub use scope::{MixedPolicyScope, ScopeError, ScopeOrigin, ScopePair, ScopeSet};

/// Direction of optimisation for a benchmark target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Maximise,
    Minimise,
}

impl Objective {
    /// Multiplier turning the target into a quantity to maximise.
    pub fn sign(self) -> f64 {
        match self {
            Objective::Maximise => 1.0,
            Objective::Minimise => -1.0,
        }
    }
}
