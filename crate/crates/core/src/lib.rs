//! Seed query set expansion over search session logs.
//!
//! The pipeline turns a handful of seed queries into a large positive set
//! and a large negative set of queries:
//!
//! 1. [`corpus`] parses sessions and counts query/ngram co-occurrence.
//! 2. [`graph`] turns counts into a thresholded bipartite query/ngram graph.
//! 3. [`phase1`] expands seeds to diagnostic ngrams and then to
//!    head-and-torso queries (the intermediate set).
//! 4. [`phase2`] scores every query by how often its sessions are dense in
//!    intermediate queries and splits positives from negatives.
//!
//! [`explain`] traces scores back through the graph, [`hybrid`] keeps the
//! table of training queries a textual scorer gets wrong, and [`synthgen`]
//! generates planted-topic corpora for end-to-end checks.

use std::fmt;

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod explain;
pub mod graph;
pub mod hybrid;
pub mod phase1;
pub mod phase2;
pub mod pipeline;
pub mod synthgen;
pub mod tsv;

pub use config::PipelineConfig;
pub use corpus::{
    cooccurring_ngrams, count_statistics, normalize_query, parse_sessions, query_ngrams,
    CooccurrenceCounts, Ngram, ParseReport, Query, Session, SessionBounds, SessionCorpus,
};
pub use error::{Error, Result};
pub use graph::{association_strength, build_graph, BipartiteGraph};
pub use phase1::{Phase1Params, WeightedSet};
pub use phase2::{ExpansionResult, QueryScore};

/// Which side of the bipartite graph an item lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Query,
    Ngram,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Query => Side::Ngram,
            Side::Ngram => Side::Query,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Query => "query",
            Side::Ngram => "ngram",
        })
    }
}
