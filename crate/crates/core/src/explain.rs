//! Traces from an expanded item back to the reference set that scored it.
//!
//! For a query the reference set is the diagnostic ngrams; for an ngram it
//! is the seed queries. Each link carries the edge weight and the amount
//! it adds to the candidate's uncorrected score, so the sum of the
//! contributions always equals `u_σ` for the subject.

use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::phase1::{explain_candidate, Phase1Params, WeightedSet};
use crate::tsv;
use crate::Side;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLink {
    pub item: String,
    pub edge_weight: f64,
    /// `w(ref) * a(ref, subject)` for links among the σ strongest, else 0.
    pub contribution: f64,
    pub contributing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationTrace {
    pub subject: String,
    pub side: Side,
    /// Neighbors of the subject that are in the reference set, largest
    /// contribution first.
    pub links: Vec<TraceLink>,
    /// All graph neighbors of the subject.
    pub total_neighbors: usize,
    /// Neighbors inside the reference set.
    pub reference_neighbors: usize,
    /// The subject's final score against the reference set, zero if it has
    /// no reference neighbors.
    pub score: f64,
}

impl ExplanationTrace {
    pub fn contribution_sum(&self) -> f64 {
        self.links.iter().map(|l| l.contribution).sum()
    }

    /// Header line with totals, then `item<TAB>edge_weight<TAB>contribution`.
    pub fn write_tsv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(
            w,
            "#explain\t{}={}\tneighbors={}\tin_reference={}\tcontributing={}\tscore={}",
            self.side,
            self.subject,
            self.total_neighbors,
            self.reference_neighbors,
            self.links.iter().filter(|l| l.contributing).count(),
            tsv::format_sig9(self.score),
        )?;
        for link in &self.links {
            writeln!(
                w,
                "{}\t{}\t{}",
                link.item,
                tsv::format_sig9(link.edge_weight),
                tsv::format_sig9(link.contribution)
            )?;
        }
        Ok(())
    }
}

fn explain(
    graph: &BipartiteGraph,
    reference: &WeightedSet,
    subject: &str,
    params: &Phase1Params,
) -> Result<ExplanationTrace> {
    let side = reference.side().opposite();
    let total_neighbors = graph
        .degree(side, subject)
        .ok_or_else(|| Error::NotInGraph {
            side,
            item: subject.to_owned(),
        })?;

    // An empty or fully absent reference set still has a well defined,
    // empty trace.
    let in_graph = reference
        .iter()
        .any(|(r, _)| graph.contains(reference.side(), r));
    let breakdown = if in_graph {
        explain_candidate(graph, reference, params, subject)?
    } else {
        params.validate()?;
        None
    };

    let (mut links, score) = match breakdown {
        Some(b) => (
            b.seed_links
                .into_iter()
                .map(|l| TraceLink {
                    contribution: if l.contributing {
                        l.seed_weight * l.edge_weight
                    } else {
                        0.0
                    },
                    item: l.item,
                    edge_weight: l.edge_weight,
                    contributing: l.contributing,
                })
                .collect::<Vec<_>>(),
            b.score,
        ),
        None => (Vec::new(), 0.0),
    };
    links.sort_by(|a, b| {
        b.contribution
            .total_cmp(&a.contribution)
            .then(b.edge_weight.total_cmp(&a.edge_weight))
            .then_with(|| a.item.cmp(&b.item))
    });
    let score = if links.is_empty() { 0.0 } else { score };
    Ok(ExplanationTrace {
        subject: subject.to_owned(),
        side,
        reference_neighbors: links.len(),
        links,
        total_neighbors,
        score,
    })
}

/// Diagnostic ngrams adjacent to `query` and what each adds to the query's
/// intermediate score.
pub fn explain_query(
    graph: &BipartiteGraph,
    diagnostic: &WeightedSet,
    query: &str,
    params: &Phase1Params,
) -> Result<ExplanationTrace> {
    if diagnostic.side() != Side::Ngram {
        return Err(Error::Config(
            "query explanations need an ngram reference set".into(),
        ));
    }
    explain(graph, diagnostic, query, params)
}

/// Seeds adjacent to `ngram`, marking the σ strongest as contributing.
pub fn explain_ngram(
    graph: &BipartiteGraph,
    seeds: &WeightedSet,
    ngram: &str,
    params: &Phase1Params,
) -> Result<ExplanationTrace> {
    if seeds.side() != Side::Query {
        return Err(Error::Config(
            "ngram explanations need a query seed set".into(),
        ));
    }
    explain(graph, seeds, ngram, params)
}
