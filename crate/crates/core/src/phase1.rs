//! Seed expansion over the bipartite graph.
//!
//! The same scoring is applied twice. Phase 1A treats the seed queries as a
//! weighted set and scores the ngrams next to them; the best `top_k` become
//! the diagnostic ngrams. Phase 1B treats those ngrams, weighted by their
//! Phase 1A scores, as seeds and scores the queries next to them; queries
//! scoring above `t_i` form the intermediate set.
//!
//! For a candidate `n` with graph neighbors `N(n)` and seed neighbors
//! `S(n) = N(n) ∩ S`:
//!
//! ```text
//! S_σ(n) = the σ members of S(n) with the heaviest edges to n
//! r_σ(n) = |S_σ(n)| / min(|S|, σ)
//! p_σ(n) = |S(n)| / max(|N(n)|, σ)
//! u_σ(n) = Σ_{s ∈ S_σ(n)} w(s) a(s, n)
//! score  = u_σ(n) r_σ(n)^ρ p_σ(n)^τ
//! ```
//!
//! `σ` caps how many seeds can contribute, so a lopsided seed set cannot
//! swamp the result; `ρ` penalizes candidates tied to few seeds and `τ`
//! penalizes generic candidates with many non-seed neighbors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::normalize_query;
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Partition};
use crate::tsv;
use crate::Side;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase1Params {
    /// Seed support size.
    pub sigma: usize,
    /// Low recall penalty.
    pub rho: f64,
    /// Low precision penalty.
    pub tau: f64,
    /// Phase 1B output threshold (exclusive).
    pub t_i: f64,
    /// Number of diagnostic ngrams kept by Phase 1A.
    pub top_k: usize,
}

impl Default for Phase1Params {
    fn default() -> Self {
        Phase1Params {
            sigma: 50,
            rho: 3.0,
            tau: 0.5,
            t_i: 1e-4,
            top_k: 1000,
        }
    }
}

impl Phase1Params {
    pub fn validate(&self) -> Result<()> {
        if self.sigma < 1 {
            return Err(Error::Config("sigma must be at least 1".into()));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::Config(format!(
                "rho must be a non-negative number, got {}",
                self.rho
            )));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::Config(format!(
                "tau must be a non-negative number, got {}",
                self.tau
            )));
        }
        if !self.t_i.is_finite() {
            return Err(Error::Config(format!(
                "t_i must be finite, got {}",
                self.t_i
            )));
        }
        if self.top_k < 1 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Items from one side of the graph with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet {
    side: Side,
    items: BTreeMap<String, f64>,
}

impl WeightedSet {
    pub fn new(side: Side) -> WeightedSet {
        WeightedSet {
            side,
            items: BTreeMap::new(),
        }
    }

    /// Every item with weight 1.
    pub fn uniform<S: Into<String>>(side: Side, items: impl IntoIterator<Item = S>) -> WeightedSet {
        WeightedSet {
            side,
            items: items.into_iter().map(|s| (s.into(), 1.0)).collect(),
        }
    }

    pub fn from_weights<S: Into<String>>(
        side: Side,
        items: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<WeightedSet> {
        let mut set = WeightedSet::new(side);
        for (item, w) in items {
            set.insert(item, w)?;
        }
        Ok(set)
    }

    /// Inserts or replaces `item`. The weight must be finite and positive.
    pub fn insert(&mut self, item: impl Into<String>, weight: f64) -> Result<()> {
        let item = item.into();
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Config(format!(
                "weight of {item:?} must be positive, got {weight}"
            )));
        }
        self.items.insert(item, weight);
        Ok(())
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, item: &str) -> Option<f64> {
        self.items.get(item).copied()
    }

    pub fn contains(&self, item: &str) -> bool {
        self.items.contains_key(item)
    }

    /// Items in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.items.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Items sorted by weight descending, then text ascending.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = self.iter().collect();
        out.sort_by(|a, b| rank_order(a.1, a.0, b.1, b.0));
        out
    }

    /// Keeps the `k` best items by [`WeightedSet::ranked`] order.
    pub fn truncate(&mut self, k: usize) {
        if self.items.len() <= k {
            return;
        }
        let keep: BTreeSet<String> = self
            .ranked()
            .into_iter()
            .take(k)
            .map(|(s, _)| s.to_owned())
            .collect();
        self.items.retain(|k, _| keep.contains(k));
    }

    /// Splits off items that are not nodes on this set's side of `graph`.
    pub fn restrict_to(&self, graph: &BipartiteGraph) -> (WeightedSet, Vec<String>) {
        let mut kept = WeightedSet::new(self.side);
        let mut dropped = Vec::new();
        for (item, w) in self.iter() {
            if graph.contains(self.side, item) {
                kept.items.insert(item.to_owned(), w);
            } else {
                dropped.push(item.to_owned());
            }
        }
        (kept, dropped)
    }

    /// `item<TAB>score` rows in ranked order.
    pub fn write_tsv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        for (item, score) in self.ranked() {
            writeln!(w, "{item}\t{}", tsv::format_sig9(score))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| self.write_tsv(w))
    }

    /// Reads an `item<TAB>score` file as written by [`WeightedSet::save`].
    pub fn load(path: &Path, side: Side) -> Result<WeightedSet> {
        let mut set = WeightedSet::new(side);
        for (line_no, line) in tsv::read_lines(path)? {
            if line.is_empty() {
                continue;
            }
            let Some((item, score)) = line.split_once('\t') else {
                return Err(Error::format(path, line_no, "expected item<TAB>score"));
            };
            let score = tsv::parse_f64(score, path, line_no)?;
            set.insert(item, score)
                .map_err(|e| Error::format(path, line_no, e.to_string()))?;
        }
        Ok(set)
    }
}

/// Reads a seeds file: one query per line, optionally followed by a tab and
/// a positive weight (default 1). Queries are normalized; blank lines are
/// skipped.
pub fn load_seeds(path: &Path) -> Result<WeightedSet> {
    let mut set = WeightedSet::new(Side::Query);
    for (line_no, line) in tsv::read_lines(path)? {
        let (raw, weight) = match line.split_once('\t') {
            Some((raw, w)) => (raw, tsv::parse_f64(w, path, line_no)?),
            None => (line.as_str(), 1.0),
        };
        let Some(q) = normalize_query(raw) else {
            continue;
        };
        set.insert(q.into_string(), weight)
            .map_err(|e| Error::format(path, line_no, e.to_string()))?;
    }
    Ok(set)
}

fn rank_order(wa: f64, a: &str, wb: f64, b: &str) -> Ordering {
    wb.total_cmp(&wa).then_with(|| a.cmp(b))
}

/// A seed neighbor of a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedLink {
    pub item: String,
    /// Edge weight `a(s, n)`.
    pub edge_weight: f64,
    /// Seed weight `w(s)`.
    pub seed_weight: f64,
    /// Whether the link is one of the σ strongest.
    pub contributing: bool,
}

/// Every intermediate quantity behind one candidate's score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    /// `|N(n)|`.
    pub neighbors: usize,
    /// `S(n)`, strongest edge first, ties by item text.
    pub seed_links: Vec<SeedLink>,
    /// `|S|` counted over seeds present in the graph.
    pub seed_count: usize,
    pub recall: f64,
    pub precision: f64,
    pub uncorrected: f64,
    pub score: f64,
}

impl ScoreBreakdown {
    /// `|S_σ(n)|`.
    pub fn support(&self) -> usize {
        self.seed_links.iter().filter(|l| l.contributing).count()
    }
}

/// Seeds resolved against the graph.
struct ResolvedSeeds<'g> {
    seed_part: &'g Partition,
    cand_part: &'g Partition,
    weights: HashMap<u32, f64>,
}

impl<'g> ResolvedSeeds<'g> {
    fn new(graph: &'g BipartiteGraph, seeds: &WeightedSet) -> Result<ResolvedSeeds<'g>> {
        if seeds.is_empty() {
            return Err(Error::EmptySeeds);
        }
        let seed_part = graph.partition(seeds.side());
        let cand_part = graph.partition(seeds.side().opposite());
        let weights: HashMap<u32, f64> = seeds
            .iter()
            .filter_map(|(item, w)| seed_part.id(item).map(|id| (id, w)))
            .collect();
        if weights.is_empty() {
            return Err(Error::NoSeedsInGraph {
                count: seeds.len(),
                side: seeds.side(),
            });
        }
        Ok(ResolvedSeeds {
            seed_part,
            cand_part,
            weights,
        })
    }

    fn candidates(&self) -> BTreeSet<u32> {
        self.weights
            .keys()
            .flat_map(|&s| self.seed_part.adjacency[s as usize].iter().map(|&(c, _)| c))
            .collect()
    }

    /// (seed id, edge weight, seed weight) for the seed neighbors of
    /// `cand`, strongest edge first. Partition ids follow lexicographic
    /// order, so the id breaks ties by item text.
    fn seed_links(&self, cand: u32) -> Vec<(u32, f64, f64)> {
        let mut links: Vec<(u32, f64, f64)> = self.cand_part.adjacency[cand as usize]
            .iter()
            .filter_map(|&(s, a)| self.weights.get(&s).map(|&w| (s, a, w)))
            .collect();
        links.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        links
    }

    fn score(&self, cand: u32, params: &Phase1Params) -> f64 {
        let links = self.seed_links(cand);
        let neighbors = self.cand_part.adjacency[cand as usize].len();
        combine(&links, neighbors, self.weights.len(), params).3
    }

    fn breakdown(&self, cand: u32, params: &Phase1Params) -> ScoreBreakdown {
        let links = self.seed_links(cand);
        let neighbors = self.cand_part.adjacency[cand as usize].len();
        let (recall, precision, uncorrected, score) =
            combine(&links, neighbors, self.weights.len(), params);
        ScoreBreakdown {
            neighbors,
            seed_links: links
                .iter()
                .enumerate()
                .map(|(rank, &(s, edge_weight, seed_weight))| SeedLink {
                    item: self.seed_part.names[s as usize].clone(),
                    edge_weight,
                    seed_weight,
                    contributing: rank < params.sigma,
                })
                .collect(),
            seed_count: self.weights.len(),
            recall,
            precision,
            uncorrected,
            score,
        }
    }
}

/// Returns (r_σ, p_σ, u_σ, score) for sorted seed links.
fn combine(
    links: &[(u32, f64, f64)],
    neighbors: usize,
    seed_count: usize,
    params: &Phase1Params,
) -> (f64, f64, f64, f64) {
    let sigma = params.sigma;
    let support = &links[..links.len().min(sigma)];
    let recall = support.len() as f64 / seed_count.min(sigma) as f64;
    let precision = links.len() as f64 / neighbors.max(sigma) as f64;
    let uncorrected: f64 = support.iter().map(|&(_, a, w)| w * a).sum();
    let score = uncorrected * recall.powf(params.rho) * precision.powf(params.tau);
    (recall, precision, uncorrected, score)
}

/// Scores every item adjacent to at least one seed. The result lives on the
/// side opposite the seeds and holds the candidates with a positive score.
pub fn score_candidates(
    graph: &BipartiteGraph,
    seeds: &WeightedSet,
    params: &Phase1Params,
) -> Result<WeightedSet> {
    params.validate()?;
    let resolved = ResolvedSeeds::new(graph, seeds)?;
    let candidates: Vec<u32> = resolved.candidates().into_iter().collect();
    let scored: Vec<(u32, f64)> = candidates
        .par_iter()
        .map(|&c| (c, resolved.score(c, params)))
        .collect();

    let mut out = WeightedSet::new(seeds.side().opposite());
    for (c, score) in scored {
        if score > 0.0 && score.is_finite() {
            out.items
                .insert(resolved.cand_part.names[c as usize].clone(), score);
        }
    }
    Ok(out)
}

/// Full score breakdown for a single candidate, or `None` if `candidate`
/// is not a node on the side opposite the seeds.
pub fn explain_candidate(
    graph: &BipartiteGraph,
    seeds: &WeightedSet,
    params: &Phase1Params,
    candidate: &str,
) -> Result<Option<ScoreBreakdown>> {
    params.validate()?;
    let resolved = ResolvedSeeds::new(graph, seeds)?;
    Ok(resolved
        .cand_part
        .id(candidate)
        .map(|c| resolved.breakdown(c, params)))
}

/// Phase 1A: the `top_k` best ngrams for a query seed set.
///
/// Scores are rounded to file precision because they are the weights of
/// Phase 1B; a saved diagnostic set then reproduces it exactly.
pub fn select_diagnostic_ngrams(
    graph: &BipartiteGraph,
    seeds: &WeightedSet,
    params: &Phase1Params,
) -> Result<WeightedSet> {
    if seeds.side() != Side::Query {
        return Err(Error::Config(
            "diagnostic ngram selection needs query seeds".into(),
        ));
    }
    let mut scored = score_candidates(graph, seeds, params)?;
    scored.truncate(params.top_k);
    for s in scored.items.values_mut() {
        *s = tsv::round_sig9(*s);
    }
    Ok(scored)
}

/// Phase 1B: queries whose score against the diagnostic ngrams exceeds
/// `t_i`.
pub fn expand_to_intermediate(
    graph: &BipartiteGraph,
    diagnostic: &WeightedSet,
    params: &Phase1Params,
) -> Result<WeightedSet> {
    if diagnostic.side() != Side::Ngram {
        return Err(Error::Config(
            "intermediate expansion needs ngram seeds".into(),
        ));
    }
    let mut scored = score_candidates(graph, diagnostic, params)?;
    scored.items.retain(|_, s| *s > params.t_i);
    Ok(scored)
}
