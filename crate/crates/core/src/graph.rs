//! Association strength and the thresholded query/ngram bipartite graph.
//!
//! The association strength of query `q` and ngram `n` is
//!
//! ```text
//! w(q, n) = ln(c(q,n)^2 / (|q| |n|)) + ln(c(q,n) / |q|)
//! ```
//!
//! The first term is a PMI variant that does not depend on the corpus size.
//! The second rewards ngrams that are seen with `q` in a large share of its
//! sessions. An edge `(q, n)` is kept iff `w(q, n) > t_w`, and it is stored
//! with weight `w(q, n) - t_w`, so every stored weight is positive.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::CooccurrenceCounts;
use crate::error::{Error, Result};
use crate::tsv;
use crate::Side;

/// Default association threshold on the natural-log scale.
pub const DEFAULT_T_W: f64 = -18.0;
/// Default session floor for both graph endpoints.
pub const DEFAULT_MIN_SESSIONS: u64 = 100;

/// Association strength `w(q, n)` from raw counts.
///
/// `cooc` must be at least 1; a zero co-occurrence has no defined strength.
pub fn association_strength(cooc: u64, query_sessions: u64, ngram_sessions: u64) -> f64 {
    debug_assert!(cooc >= 1 && query_sessions >= 1 && ngram_sessions >= 1);
    let c = cooc as f64;
    let q = query_sessions as f64;
    let n = ngram_sessions as f64;
    (c * c / (q * n)).ln() + (c / q).ln()
}

/// One side of the graph: item names in lexicographic order, and for each
/// item its neighbors on the other side as `(id, edge weight)` sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Partition {
    pub(crate) names: Vec<String>,
    index: HashMap<String, u32>,
    pub(crate) adjacency: Vec<Vec<(u32, f64)>>,
}

impl Partition {
    fn from_names(names: Vec<String>) -> Partition {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let adjacency = vec![Vec::new(); names.len()];
        Partition {
            names,
            index,
            adjacency,
        }
    }

    pub(crate) fn id(&self, item: &str) -> Option<u32> {
        self.index.get(item).copied()
    }

    pub(crate) fn len(&self) -> usize {
        self.names.len()
    }
}

/// Weighted bipartite graph between queries and ngrams.
///
/// Immutable once built; both adjacency directions are stored and are exact
/// inverses of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    queries: Partition,
    ngrams: Partition,
    t_w: f64,
    min_sessions: u64,
}

/// Builds the graph from counts. A pair becomes an edge when both endpoints
/// were seen in at least `min_sessions` sessions and `w(q, n) > t_w`.
///
/// Weights are rounded to the precision of the graph file, so a graph
/// scores identically whether it is used directly or reloaded from disk.
pub fn build_graph(counts: &CooccurrenceCounts, t_w: f64, min_sessions: u64) -> BipartiteGraph {
    let edges: Vec<(&str, &str, f64)> = counts
        .pair_stats()
        .collect::<Vec<_>>()
        .into_par_iter()
        .filter(|&(_, qc, _, nc, _)| qc >= min_sessions && nc >= min_sessions)
        .filter_map(|(q, qc, n, nc, c)| {
            let w = association_strength(c, qc, nc);
            (w > t_w).then(|| (q.as_str(), n.as_str(), tsv::round_sig9(w - t_w)))
        })
        .collect();
    BipartiteGraph::assemble(edges, t_w, min_sessions)
}

impl BipartiteGraph {
    /// Builds a graph from explicit `(query, ngram, weight)` edges.
    ///
    /// Weights must be finite and positive, and no pair may repeat.
    pub fn from_edges<Q, N, I>(edges: I, t_w: f64, min_sessions: u64) -> Result<BipartiteGraph>
    where
        Q: AsRef<str>,
        N: AsRef<str>,
        I: IntoIterator<Item = (Q, N, f64)>,
    {
        let edges: Vec<(Q, N, f64)> = edges.into_iter().collect();
        for (q, n, w) in &edges {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::Config(format!(
                    "edge ({:?}, {:?}) has non-positive weight {w}",
                    q.as_ref(),
                    n.as_ref()
                )));
            }
        }
        let graph = BipartiteGraph::assemble(
            edges
                .iter()
                .map(|(q, n, w)| (q.as_ref(), n.as_ref(), *w))
                .collect(),
            t_w,
            min_sessions,
        );
        let stored: usize = graph.queries.adjacency.iter().map(Vec::len).sum();
        if stored != edges.len() {
            return Err(Error::Config("duplicate edge in edge list".to_owned()));
        }
        Ok(graph)
    }

    fn assemble(edges: Vec<(&str, &str, f64)>, t_w: f64, min_sessions: u64) -> BipartiteGraph {
        let mut query_names: Vec<String> = edges.iter().map(|e| e.0.to_owned()).collect();
        query_names.sort_unstable();
        query_names.dedup();
        let mut ngram_names: Vec<String> = edges.iter().map(|e| e.1.to_owned()).collect();
        ngram_names.sort_unstable();
        ngram_names.dedup();

        let mut queries = Partition::from_names(query_names);
        let mut ngrams = Partition::from_names(ngram_names);
        for (q, n, w) in edges {
            let qi = queries.index[q];
            let ni = ngrams.index[n];
            queries.adjacency[qi as usize].push((ni, w));
            ngrams.adjacency[ni as usize].push((qi, w));
        }
        for part in [&mut queries, &mut ngrams] {
            part.adjacency.par_iter_mut().for_each(|row| {
                row.sort_unstable_by_key(|&(id, _)| id);
                row.dedup_by_key(|&mut (id, _)| id);
            });
        }
        BipartiteGraph {
            queries,
            ngrams,
            t_w,
            min_sessions,
        }
    }

    pub fn t_w(&self) -> f64 {
        self.t_w
    }

    pub fn min_sessions(&self) -> u64 {
        self.min_sessions
    }

    pub(crate) fn partition(&self, side: Side) -> &Partition {
        match side {
            Side::Query => &self.queries,
            Side::Ngram => &self.ngrams,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.queries.adjacency.iter().map(Vec::len).sum()
    }

    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    pub fn ngram_count(&self) -> usize {
        self.ngrams.len()
    }

    pub fn contains(&self, side: Side, item: &str) -> bool {
        self.partition(side).id(item).is_some()
    }

    /// Items on `side`, in lexicographic order.
    pub fn items(&self, side: Side) -> impl Iterator<Item = &str> {
        self.partition(side).names.iter().map(String::as_str)
    }

    /// Edge weight `a(q, n)`, if the edge exists.
    pub fn weight(&self, query: &str, ngram: &str) -> Option<f64> {
        let qi = self.queries.id(query)?;
        let ni = self.ngrams.id(ngram)?;
        let row = &self.queries.adjacency[qi as usize];
        row.binary_search_by_key(&ni, |&(id, _)| id)
            .ok()
            .map(|pos| row[pos].1)
    }

    /// Neighbors of `item` (which lives on `side`) with edge weights, in
    /// lexicographic order of the neighbor. `None` if `item` is not a node.
    pub fn neighbors(&self, side: Side, item: &str) -> Option<impl Iterator<Item = (&str, f64)>> {
        let own = self.partition(side);
        let other = self.partition(side.opposite());
        let id = own.id(item)?;
        Some(
            own.adjacency[id as usize]
                .iter()
                .map(move |&(nid, w)| (other.names[nid as usize].as_str(), w)),
        )
    }

    pub fn degree(&self, side: Side, item: &str) -> Option<usize> {
        let own = self.partition(side);
        own.id(item).map(|id| own.adjacency[id as usize].len())
    }

    /// Every edge as `(query, ngram, weight)`, sorted by query then ngram.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.queries
            .adjacency
            .iter()
            .enumerate()
            .flat_map(move |(qi, row)| {
                let q = self.queries.names[qi].as_str();
                row.iter()
                    .map(move |&(ni, w)| (q, self.ngrams.names[ni as usize].as_str(), w))
            })
    }

    /// Writes the graph TSV: a `#graph` header carrying the build
    /// parameters, then one `query<TAB>ngram<TAB>weight` row per edge.
    pub fn write_tsv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(
            w,
            "#graph\tt_w={}\tmin_sessions={}",
            tsv::format_sig9(self.t_w),
            self.min_sessions
        )?;
        for (q, n, weight) in self.edges() {
            writeln!(w, "{q}\t{n}\t{}", tsv::format_sig9(weight))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| self.write_tsv(w))
    }

    pub fn load(path: &Path) -> Result<BipartiteGraph> {
        let lines = tsv::read_lines(path)?;
        let mut iter = lines.into_iter();
        let (_, header) = iter
            .next()
            .ok_or_else(|| Error::format(path, 1, "empty graph file"))?;
        let (t_w, min_sessions) = parse_header(&header, path)?;

        let mut edges = Vec::new();
        for (line_no, line) in iter {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [q, n, w] = fields[..] else {
                return Err(Error::format(
                    path,
                    line_no,
                    "expected query<TAB>ngram<TAB>weight",
                ));
            };
            let w = tsv::parse_f64(w, path, line_no)?;
            if w <= 0.0 {
                return Err(Error::format(path, line_no, "edge weight must be positive"));
            }
            edges.push((q.to_owned(), n.to_owned(), w));
        }
        BipartiteGraph::from_edges(edges, t_w, min_sessions).map_err(|e| match e {
            Error::Config(msg) => Error::format(path, 0, msg),
            other => other,
        })
    }
}

fn parse_header(header: &str, path: &Path) -> Result<(f64, u64)> {
    let bad = || {
        Error::format(
            path,
            1,
            "expected header #graph<TAB>t_w=<val><TAB>min_sessions=<val>",
        )
    };
    let fields: Vec<&str> = header.split('\t').collect();
    let ["#graph", t_w, min_sessions] = fields[..] else {
        return Err(bad());
    };
    let t_w = t_w.strip_prefix("t_w=").ok_or_else(bad)?;
    let min_sessions = min_sessions.strip_prefix("min_sessions=").ok_or_else(bad)?;
    Ok((
        tsv::parse_f64(t_w, path, 1)?,
        tsv::parse_u64(min_sessions, path, 1)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{count_statistics, parse_sessions, SessionBounds};
    use proptest::prelude::*;

    #[test]
    fn strength_examples() {
        let w = association_strength(10, 20, 100);
        let expected = (100.0f64 / 2000.0).ln() + (0.5f64).ln();
        assert!((w - expected).abs() < 1e-12);
        assert!((w - -3.688879).abs() < 1e-6);

        for k in [1, 7, 1000] {
            assert_eq!(association_strength(k, k, k), 0.0);
        }

        let diff = association_strength(50, 40, 500) - association_strength(10, 40, 100);
        assert!((diff - 2.0 * 5f64.ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn corpus_scale_invariance(c in 1u64..500, dq in 0u64..500, dn in 0u64..500, k in 1u64..1000) {
            let (q, n) = (c + dq, c + dn);
            let base = association_strength(c, q, n);
            let scaled = association_strength(c * k, q * k, n * k);
            prop_assert!((base - scaled).abs() < 1e-9);
        }

        #[test]
        fn monotone_in_cooc_and_ngram_count(c in 1u64..200, q in 200u64..400, n in 200u64..400) {
            prop_assert!(association_strength(c + 1, q, n) > association_strength(c, q, n));
            prop_assert!(association_strength(c, q, n + 1) < association_strength(c, q, n));
        }
    }

    fn tiny_graph(t_w: f64) -> BipartiteGraph {
        BipartiteGraph::from_edges(
            [("q1", "a", 2.0), ("q1", "b", 1.0), ("q2", "a", 0.5)],
            t_w,
            1,
        )
        .unwrap()
    }

    #[test]
    fn adjacency_is_symmetric() {
        let g = tiny_graph(-18.0);
        for (q, n, w) in g.edges() {
            assert!(g
                .neighbors(Side::Ngram, n)
                .unwrap()
                .any(|(x, xw)| x == q && xw == w));
            assert!(g.neighbors(Side::Query, q).unwrap().any(|(x, _)| x == n));
        }
        assert_eq!(g.degree(Side::Ngram, "a"), Some(2));
        assert_eq!(g.weight("q2", "b"), None);
        assert!(g.neighbors(Side::Query, "nope").is_none());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(BipartiteGraph::from_edges([("q", "n", 0.0)], -18.0, 1).is_err());
        assert!(BipartiteGraph::from_edges([("q", "n", 1.0), ("q", "n", 2.0)], -18.0, 1).is_err());
    }

    // Six sessions over two topics plus a shared query; small enough to
    // reason about by hand.
    const SESSIONS: &str = "\
a x\tb\tc\td\te
a x\tb\tc\td\tf
a\tb\tc\tg\th
p\tq\tr\ts\tt
p\tq\tr\ts\tu
p\tq\tr a\tv\tw
";

    fn counts() -> CooccurrenceCounts {
        count_statistics(
            &parse_sessions(SESSIONS.as_bytes(), SessionBounds::default())
                .unwrap()
                .0,
        )
    }

    #[test]
    fn threshold_is_strict_and_shifts_weights() {
        let counts = counts();
        // w("b", "c") with c=3, |b|=3, |c|=3 is exactly 0
        assert_eq!(association_strength(3, 3, 3), 0.0);
        let g = build_graph(&counts, -18.0, 1);
        assert_eq!(g.weight("b", "c"), Some(18.0));

        let g = build_graph(&counts, 0.0, 1);
        assert_eq!(g.weight("b", "c"), None);
        assert!(g.edges().all(|(_, _, w)| w > 0.0));
    }

    #[test]
    fn frequency_floor_applies_to_both_ends() {
        let counts = counts();
        // "a x" is in two sessions
        assert_eq!(counts.query_count("a x"), 2);
        let g = build_graph(&counts, -18.0, 3);
        assert!(!g.contains(Side::Query, "a x"));
        assert!(g.items(Side::Query).all(|q| counts.query_count(q) >= 3));
        assert!(g.items(Side::Ngram).all(|n| counts.ngram_count(n) >= 3));
        let g = build_graph(&counts, -18.0, 2);
        assert!(g.contains(Side::Query, "a x"));
    }

    #[test]
    fn edges_only_for_observed_pairs() {
        let counts = counts();
        let g = build_graph(&counts, -1e9, 1);
        assert_eq!(g.edge_count(), counts.pair_count());
    }

    #[test]
    fn tsv_round_trip() {
        let g = build_graph(&counts(), -18.0, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.tsv");
        g.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("#graph\tt_w=-18\tmin_sessions=1\n"));
        let back = BipartiteGraph::load(&path).unwrap();
        // weights are already at file precision, so nothing is lost
        assert_eq!(back, g);
        // persisting the reloaded graph is byte-identical
        let path2 = dir.path().join("graph2.tsv");
        back.save(&path2).unwrap();
        assert_eq!(text, std::fs::read_to_string(&path2).unwrap());
    }

    #[test]
    fn load_rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        std::fs::write(&path, "q\tn\t1.0\n").unwrap();
        assert!(matches!(
            BipartiteGraph::load(&path),
            Err(Error::Format { line: 1, .. })
        ));
    }
}
