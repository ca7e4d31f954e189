//! Frog-model simulation engine and verification toolkit.
//!
//! Frogs sleep on the vertices of a rooted graph. One active frog starts at
//! the root; whenever an active frog lands on a sleeping pile, the pile
//! wakes and its frogs start their own walks on the next step.

// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod graph;
pub mod init_config;
pub mod moments;
pub mod operator_a;
pub mod orders;
pub mod paths;
pub mod statistics;
pub mod stream;

pub use engine::{
    run, run_explicit, run_explicit_shuffled, ExplicitModel, FrogModelSpec, Limits, SimOutcome,
    Simulation,
};
pub use error::{CapKind, Error, Result};
pub use graph::{ExplicitGraph, Graph, GraphKind, VertexId, VertexLabel};
pub use init_config::{ConfigRule, Pmf};
pub use orders::{OrderKind, OrderReport, OrderVerdict};
pub use paths::{FrogKey, PathTable, WalkerKind};
pub use statistics::{StatisticFamily, StatisticKind};
