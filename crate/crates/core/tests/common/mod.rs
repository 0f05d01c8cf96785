//! Independent reference implementations used by the integration suites.
//!
//! Nothing here calls into the library's counting or scoring paths; the
//! oracles re-derive every quantity from its set definition with plain
//! nested loops.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setexpand::{Query, Session, SessionCorpus};

pub fn oracle_ngrams(query: &str) -> BTreeSet<String> {
    let tokens: Vec<&str> = query.split(' ').collect();
    let mut out = BTreeSet::new();
    for i in 0..tokens.len() {
        out.insert(tokens[i].to_string());
        if i + 1 < tokens.len() {
            out.insert(format!("{} {}", tokens[i], tokens[i + 1]));
        }
    }
    out
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct OracleCounts {
    pub queries: BTreeMap<String, u64>,
    pub ngrams: BTreeMap<String, u64>,
    pub pairs: BTreeMap<(String, String), u64>,
}

/// `|q|`, `|n|` and `c(q, n)` by iterating every (session, query, ngram).
pub fn oracle_counts(sessions: &[Vec<String>]) -> OracleCounts {
    let mut out = OracleCounts::default();
    for raw in sessions {
        let session: BTreeSet<&String> = raw.iter().collect();
        let mut session_ngrams = BTreeSet::new();
        for q in &session {
            *out.queries.entry((*q).clone()).or_insert(0) += 1;
            session_ngrams.extend(oracle_ngrams(q));
        }
        for n in session_ngrams {
            *out.ngrams.entry(n).or_insert(0) += 1;
        }
        for q in &session {
            let own = oracle_ngrams(q);
            let mut seen = BTreeSet::new();
            for other in &session {
                if other == q {
                    continue;
                }
                for n in oracle_ngrams(other) {
                    if !own.contains(&n) {
                        seen.insert(n);
                    }
                }
            }
            for n in seen {
                *out.pairs.entry(((*q).clone(), n)).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Random corpus of at most `max_sessions` sessions with at most
/// `max_queries` queries each, drawn from `vocab` tokens.
pub fn random_sessions(
    rng: &mut ChaCha8Rng,
    max_sessions: usize,
    max_queries: usize,
    vocab: usize,
) -> Vec<Vec<String>> {
    let sessions = rng.random_range(0..=max_sessions);
    (0..sessions)
        .map(|_| {
            let n = rng.random_range(1..=max_queries);
            (0..n)
                .map(|_| {
                    let len = rng.random_range(1..=3);
                    (0..len)
                        .map(|_| format!("t{}", rng.random_range(0..vocab)))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect()
        })
        .collect()
}

pub fn to_corpus(sessions: &[Vec<String>]) -> SessionCorpus {
    SessionCorpus::new(
        sessions
            .iter()
            .map(|s| Session::new(s.iter().map(|q| Query::parse(q).unwrap())))
            .collect(),
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force candidate scores over an explicit edge list.
///
/// `seeds_on_query_side` selects which endpoint of each edge the seeds live
/// on. Returns every candidate adjacent to at least one present seed.
pub fn oracle_phase1(
    edges: &[(String, String, f64)],
    seeds: &BTreeMap<String, f64>,
    seeds_on_query_side: bool,
    sigma: usize,
    rho: f64,
    tau: f64,
) -> BTreeMap<String, f64> {
    let ends = |e: &(String, String, f64)| -> (String, String, f64) {
        if seeds_on_query_side {
            (e.0.clone(), e.1.clone(), e.2)
        } else {
            (e.1.clone(), e.0.clone(), e.2)
        }
    };
    let oriented: Vec<(String, String, f64)> = edges.iter().map(ends).collect();
    let present: BTreeSet<&String> = oriented
        .iter()
        .map(|(s, _, _)| s)
        .filter(|s| seeds.contains_key(*s))
        .collect();
    let seed_total = present.len();
    let candidates: BTreeSet<&String> = oriented
        .iter()
        .filter(|(s, _, _)| seeds.contains_key(s))
        .map(|(_, c, _)| c)
        .collect();

    let mut out = BTreeMap::new();
    for cand in candidates {
        let mut neighbors = 0usize;
        let mut links: Vec<(&String, f64, f64)> = Vec::new();
        for (s, c, a) in &oriented {
            if c != cand {
                continue;
            }
            neighbors += 1;
            if let Some(&w) = seeds.get(s) {
                links.push((s, *a, w));
            }
        }
        // heaviest edge first, ties by item text
        links.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(y.0)));
        let support: Vec<_> = links.iter().take(sigma).collect();
        let r = support.len() as f64 / seed_total.min(sigma) as f64;
        let p = links.len() as f64 / neighbors.max(sigma) as f64;
        let mut u = 0.0;
        for (_, a, w) in &support {
            u += w * a;
        }
        out.insert(cand.clone(), u * r.powf(rho) * p.powf(tau));
    }
    out
}

/// Random bipartite graph with at most `max_nodes` nodes in total.
pub fn random_edges(rng: &mut ChaCha8Rng, max_nodes: usize) -> Vec<(String, String, f64)> {
    let queries = rng.random_range(1..max_nodes);
    let ngrams = rng.random_range(1..=max_nodes - queries);
    let density: f64 = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for q in 0..queries {
        for n in 0..ngrams {
            if rng.random_bool(density) {
                // a few repeated weights exercise the tie-breaking rule
                let w = if rng.random_bool(0.2) {
                    1.5
                } else {
                    rng.random_range(0.01..20.0)
                };
                edges.push((format!("q{q:02}"), format!("n{n:02}"), w));
            }
        }
    }
    edges
}

/// `(t, u)` per query by scanning every session for every query.
pub fn oracle_phase2(
    sessions: &[Vec<String>],
    intermediate: &HashSet<String>,
) -> BTreeMap<String, (u64, u64)> {
    let sets: Vec<BTreeSet<&String>> = sessions.iter().map(|s| s.iter().collect()).collect();
    let all: BTreeSet<&String> = sets.iter().flatten().copied().collect();
    let mut out = BTreeMap::new();
    for q in all {
        let mut t = 0;
        let mut u = 0;
        for s in &sets {
            if !s.contains(q) {
                continue;
            }
            t += 1;
            let others = s
                .iter()
                .filter(|x| **x != q && intermediate.contains(**x))
                .count();
            if others >= 3 {
                u += 1;
            }
        }
        out.insert(q.clone(), (t, u));
    }
    out
}

/// Planted-topic corpus used by the end-to-end checks: 2000 sessions over
/// three topics, a 300-token vocabulary with 10% ambiguous tokens.
pub fn desk_spec() -> setexpand::synthgen::CorpusSpec {
    setexpand::synthgen::CorpusSpec::from_toml(
        r#"
        seed = 2024
        sessions_per_topic = 0
        total_sessions = 2000
        stickiness = 0.9
        queries_per_topic = 300
        zipf_exponent = 1.0
        ambiguous_query_rate = 0.25
        [generate]
        topics = 3
        vocabulary_size = 300
        ambiguous_fraction = 0.1
        "#,
    )
    .unwrap()
}

/// Settings scaled down for a corpus of a few thousand sessions.
pub fn desk_config() -> setexpand::PipelineConfig {
    setexpand::PipelineConfig {
        t_w: -4.0,
        min_sessions: 3,
        min_pos: 3,
        min_neg: 10,
        ..Default::default()
    }
}

/// The `k` most frequent queries of `topic`, most frequent first.
pub fn head_queries(
    corpus: &SessionCorpus,
    truth: &setexpand::synthgen::GroundTruth,
    topic: &str,
    k: usize,
) -> Vec<Query> {
    let mut freq: BTreeMap<&Query, usize> = BTreeMap::new();
    for s in corpus.sessions() {
        for q in s.queries() {
            *freq.entry(q).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&Query, usize)> = freq
        .into_iter()
        .filter(|(q, _)| truth[*q] == topic)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(q, _)| q.clone()).collect()
}
