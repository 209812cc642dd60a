//! Structure-aware bug-fix corpus toolkit.
//!
//! The pipeline turns bug-fix commits into training pairs for explanation
//! models and scores generated explanations:
//!
//! * [`syntax`] parses a Python subset (or portable tree documents) into
//!   line-annotated trees;
//! * [`diffing`] finds changed lines and hunks between file versions;
//! * [`sbt`] extracts the changed nodes and serializes them with
//!   structure-based traversal (diffSBT);
//! * [`ingest`] reads commits from git repositories or NDJSON dumps;
//! * [`corpus`] filters noisy commits, splits datasets and writes them out;
//! * [`retrieval`] is a nearest-neighbour explanation baseline;
//! * [`metrics`] implements BLEU-4, exact match and embedding similarity.

pub mod config;
pub mod corpus;
pub mod diffing;
pub mod ingest;
pub mod metrics;
pub mod retrieval;
pub mod sbt;
pub mod syntax;

pub use diffing::{CommitRecord, DiffResult, FileChange, LineSet};
pub use sbt::{DiffSbtSequence, EncoderConfig};
pub use syntax::TreeNode;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/sbt.md")]
    mod sbt {}
    #[doc = include_str!("../../../book/src/diffing.md")]
    mod diffing {}
    #[doc = include_str!("../../../book/src/diffsbt.md")]
    mod diffsbt {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
