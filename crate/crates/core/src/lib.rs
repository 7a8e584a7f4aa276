//! Federated rule-list classification.
//!
//! Clients mine class association rules from their local partitions, build
//! CBA classifiers and ship only the rule lists to a server, which merges
//! them with the duCBA procedure. Client data can be perturbed with k-ary
//! randomized response before training to study the privacy/utility
//! trade-off.

pub mod cba;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod ducba;
pub mod error;
pub mod fedsim;
pub mod metrics;
pub mod mining;
pub mod privacy;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
