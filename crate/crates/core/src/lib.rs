//! Incremental belief maintenance for interval probabilistic logic.
//!
//! The crate is layered:
//!
//! * [`interval`] holds the value types: interval probabilities, atoms,
//!   literals and clauses.
//! * [`engine`] is the belief-maintenance engine. It stores clauses in
//!   tables keyed by atom set, propagates interval bounds with two local
//!   constraints, records a support for every bound, explains bounds and
//!   retracts assumptions.
//! * [`network`] builds belief networks with partially specified
//!   conditionals on top of the engine.
//! * [`oracle`] computes exact answers (LP entailment, joint enumeration)
//!   for testing the engine.
//! * [`model`] is the text model format, the session script runner and the
//!   snapshot exporters used by the `ibn` command line tool.

pub mod engine;
pub mod interval;
pub mod model;
pub mod network;
pub mod oracle;

pub use engine::{Engine, EngineError};
pub use interval::{AtomId, Clause, IntervalProb, Literal};
pub use network::{Network, NetworkError, StateId, VarId};

/// Tolerance for comparisons between probabilities.
pub const EPS_CMP: f64 = 1e-9;

/// Bound changes smaller than this neither enqueue work nor fire consumers.
pub const EPS_PROP: f64 = 1e-12;
