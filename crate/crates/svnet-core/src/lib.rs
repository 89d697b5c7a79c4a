//! Identification of clusters of synchronously trading investors.
//!
//! The crate turns daily per-investor trading volumes into categorical
//! states (buying / selling / buying-and-selling), validates pairwise state
//! co-occurrences against a hypergeometric null with Bonferroni or FDR
//! correction, assembles the surviving links into a multi-link network,
//! detects clusters by minimizing the two-level map equation, and
//! characterizes clusters by attribute enrichment. A synthetic generator
//! with planted groups makes the whole pipeline verifiable end to end.
//!
//! Numeric kernels (hypergeometric tails, entropies, the map equation, NMI)
//! are generic over the scalar type via [`num::Real`]; the pipeline itself
//! runs on `f64` through the [`Prob`], [`Bits`] and [`Weight`] aliases.

pub mod community;
pub mod enrichment;
pub mod error;
pub mod market_data;
pub mod num;
pub mod pipeline;
pub mod report;
pub mod state_encoding;
pub mod stats;
pub mod svn;
pub mod synth;
pub mod validation;

pub use error::{Error, Result};

/// Scalar used for probabilities throughout the concrete pipeline.
pub type Prob = f64;
/// Scalar used for codelengths (bits per step).
pub type Bits = f64;
/// Scalar used for edge weights of the clustering graph.
pub type Weight = f64;
