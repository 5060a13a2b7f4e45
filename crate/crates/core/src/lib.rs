//! Sense and synset vectors derived from pre-trained word vectors and the
//! WordNet semantic network.
//!
//! The pipeline runs in stages:
//!
//! 1. [`wordnet`] parses the WordNet database files and [`graph`] turns the
//!    synsets into an undirected semantic graph.
//! 2. [`ppr`] computes Personalized PageRank distributions over that graph and
//!    [`bias`] turns each distribution into an ordered list of sense-biasing
//!    words for a synset.
//! 3. [`deconf`] places every word sense near its lemma vector and its biasing
//!    words using a closed-form weighted average, and derives synset vectors as
//!    normalized centroids.
//! 4. [`eval`] scores the resulting space on word-similarity benchmarks.

pub mod bias;
pub mod deconf;
mod error;
pub mod eval;
pub mod graph;
pub mod numfmt;
pub mod ppr;
pub mod vectors;
pub mod wordnet;

pub use bias::{BiasEntry, BiasList};
pub use deconf::{DeconfConfig, SenseKey, SenseSpace};
pub use error::{Error, Result};
pub use eval::{EvalReport, SimilarityPair, Strategy};
pub use graph::{RelationFilter, SemanticGraph};
pub use ppr::{PprConfig, PprVector, Transition};
pub use vectors::{LookupPolicy, VectorStore};
pub use wordnet::{Pos, Synset, SynsetId, WordNet};

/// Runs `f` on a dedicated rayon pool with `threads` workers, or on the global
/// pool when `threads` is zero.
pub fn with_threads<T, F>(threads: usize, f: F) -> T
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
