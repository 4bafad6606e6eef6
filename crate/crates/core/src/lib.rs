//! Min-cost flow on graphs of bounded treewidth with a robust interior point
//! method over a separator-tree nested dissection, plus a flow-based
//! tree-decomposition approximation.

pub mod bench;
pub mod config;
pub mod error;
pub mod formats;
pub mod gen;
pub mod graph;
pub mod mincost;
pub mod nested_dissection;
pub mod oracle;
pub mod ripm;
pub mod septree;
pub mod solution;
pub mod tw_approx;

pub use error::{Error, Result};
