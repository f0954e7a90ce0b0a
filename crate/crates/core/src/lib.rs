//! Any-part Bayesian network structure learning from discrete data.

pub mod apsl;
pub mod bnio;
pub mod commands;
pub mod citest;
pub mod dataset;
pub mod dsep;
pub mod eval;
pub mod graph;
pub mod localdiscovery;

pub use citest::{CiResult, CiStats, CiTest, G2Test, Phase, TestConfig};
pub use dataset::{Dataset, VarId};
pub use dsep::DsepOracle;
pub use graph::{Edge, EdgeKind, Pdag};
