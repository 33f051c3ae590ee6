//! Conflict-free, purely semantic identifiers for embedding collections.
//!
//! The crate trains centroid-based indexes (residual k-means stacks and
//! fixed-depth hierarchical k-means trees), retrieves nearest-centroid
//! candidates from them, and assigns every embedding a unique multi-level
//! token sequence without appending a non-semantic disambiguation token.
//!
//! Four assignment strategies share one used-id registry:
//!
//! - [`assign::Strategy::Greedy`]: nearest centroid at every level, conflicts kept.
//! - [`assign::Strategy::Suffix`]: greedy prefix plus an occurrence counter.
//! - [`assign::Strategy::Ecm`]: exhaustive scoring of all top-k token combinations.
//! - [`assign::Strategy::Rrs`]: depth-first search with branch-local residuals.

pub mod alloc;
pub mod assign;
pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod quantizer;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    capacity_check, CandidateSet, Candidates, Capacity, Codebook, CodebookStack, EmbeddingSet,
    SemanticId, SuffixedId, UsedIdRegistry,
};
