//! End-to-end expansion: sessions and seeds in, positive and negative query
//! sets out.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::config::PipelineConfig;
use crate::corpus::{count_statistics, parse_sessions, ParseReport, Query, SessionCorpus};
use crate::error::{Error, Result};
use crate::graph::{build_graph, BipartiteGraph};
use crate::phase1::{expand_to_intermediate, select_diagnostic_ngrams, WeightedSet};
use crate::phase2::{save_scores, score_all_queries, threshold_split, ExpansionResult, QueryScore};
use crate::tsv;

pub const GRAPH_FILE: &str = "graph.tsv";
pub const DIAGNOSTIC_FILE: &str = "diagnostic_ngrams.tsv";
pub const INTERMEDIATE_FILE: &str = "intermediate.tsv";
pub const POSITIVES_FILE: &str = "positives.tsv";
pub const NEGATIVES_FILE: &str = "negatives.tsv";

/// Reads a sessions file, failing when the share of malformed lines
/// exceeds the configured limit.
pub fn load_sessions(path: &Path, config: &PipelineConfig) -> Result<(SessionCorpus, ParseReport)> {
    let bounds = config.session_bounds();
    bounds.validate()?;
    let reader = tsv::open(path)?;
    let (corpus, report) = parse_sessions(reader, bounds).map_err(|e| Error::io(path, e))?;
    if report.lines > 0
        && report.malformed as f64 > config.max_malformed_fraction * report.lines as f64
    {
        return Err(Error::TooManyMalformed {
            path: path.to_owned(),
            malformed: report.malformed,
            total: report.lines,
        });
    }
    Ok((corpus, report))
}

pub fn corpus_graph(corpus: &SessionCorpus, config: &PipelineConfig) -> BipartiteGraph {
    let counts = count_statistics(corpus);
    build_graph(&counts, config.t_w, config.min_sessions)
}

/// Phase 1A followed by Phase 1B.
pub fn run_phase1(
    graph: &BipartiteGraph,
    seeds: &WeightedSet,
    config: &PipelineConfig,
) -> Result<(WeightedSet, WeightedSet)> {
    let params = config.phase1();
    let diagnostic = select_diagnostic_ngrams(graph, seeds, &params)?;
    let intermediate = expand_to_intermediate(graph, &diagnostic, &params)?;
    Ok((diagnostic, intermediate))
}

pub fn run_phase2(
    corpus: &SessionCorpus,
    intermediate: &WeightedSet,
    config: &PipelineConfig,
) -> Result<(BTreeMap<Query, QueryScore>, ExpansionResult)> {
    config.smoothing.validate()?;
    let members: HashSet<&str> = intermediate.iter().map(|(q, _)| q).collect();
    let scores = score_all_queries(corpus, &members, &config.smoothing);
    let result = threshold_split(&scores, config.split())?;
    Ok((scores, result))
}

#[derive(Debug, Clone)]
pub struct Expansion {
    pub graph: BipartiteGraph,
    /// Seeds that are not query nodes of the graph.
    pub dropped_seeds: Vec<String>,
    pub diagnostic: WeightedSet,
    pub intermediate: WeightedSet,
    pub scores: BTreeMap<Query, QueryScore>,
    pub result: ExpansionResult,
}

pub fn expand(
    corpus: &SessionCorpus,
    seeds: &WeightedSet,
    config: &PipelineConfig,
) -> Result<Expansion> {
    config.validate()?;
    let graph = corpus_graph(corpus, config);
    let (kept, dropped_seeds) = seeds.restrict_to(&graph);
    if kept.is_empty() {
        return Err(if seeds.is_empty() {
            Error::EmptySeeds
        } else {
            Error::NoSeedsInGraph {
                count: seeds.len(),
                side: seeds.side(),
            }
        });
    }
    let (diagnostic, intermediate) = run_phase1(&graph, &kept, config)?;
    let (scores, result) = run_phase2(corpus, &intermediate, config)?;
    Ok(Expansion {
        graph,
        dropped_seeds,
        diagnostic,
        intermediate,
        scores,
        result,
    })
}

impl Expansion {
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.graph.save(&dir.join(GRAPH_FILE))?;
        self.diagnostic.save(&dir.join(DIAGNOSTIC_FILE))?;
        self.intermediate.save(&dir.join(INTERMEDIATE_FILE))?;
        save_scores(&self.result.positives, &dir.join(POSITIVES_FILE))?;
        save_scores(&self.result.negatives, &dir.join(NEGATIVES_FILE))
    }
}
