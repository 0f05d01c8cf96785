mod common;

use std::collections::BTreeMap;

use setexpand::pipeline::{expand, Expansion};
use setexpand::synthgen::generate_corpus;
use setexpand::{Query, Side, WeightedSet};

use common::*;

fn run() -> (
    Expansion,
    setexpand::SessionCorpus,
    setexpand::synthgen::GroundTruth,
    Vec<String>,
) {
    let spec = desk_spec();
    let (corpus, truth) = generate_corpus(&spec).unwrap();
    let (topics, _) = spec.vocabulary().unwrap();
    let seeds = head_queries(&corpus, &truth, "topic0", 5);
    let seeds = WeightedSet::uniform(Side::Query, seeds.iter().map(Query::to_string));
    let out = expand(&corpus, &seeds, &desk_config()).unwrap();
    (out, corpus, truth, topics[0].vocabulary.clone())
}

#[test]
fn planted_topic_tops_the_diagnostic_ngrams() {
    let (out, _, _, vocabulary) = run();
    let top = out.diagnostic.ranked();
    assert!(top.len() >= 10);
    for (ngram, _) in &top[..10] {
        assert!(
            ngram.split(' ').all(|t| vocabulary.iter().any(|w| w == t)),
            "{ngram} is not planted-topic vocabulary"
        );
    }
}

#[test]
fn intermediate_set_covers_head_of_planted_topic() {
    let (out, corpus, truth, _) = run();
    let mut freq: BTreeMap<&Query, usize> = BTreeMap::new();
    for s in corpus.sessions() {
        for q in s.queries() {
            *freq.entry(q).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&Query, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    // head: the most frequent tenth of all queries
    let head: Vec<&Query> = ranked[..ranked.len() / 10]
        .iter()
        .map(|(q, _)| *q)
        .filter(|q| truth[*q] == "topic0")
        .collect();
    let covered = head
        .iter()
        .filter(|q| out.intermediate.contains(q.as_str()))
        .count();
    assert!(!head.is_empty());
    assert!(
        covered * 10 >= head.len() * 9,
        "{covered} of {} head queries in I",
        head.len()
    );
}

#[test]
fn explain_reconciles_with_saved_outputs() {
    let (out, _, _, _) = run();
    let dir = tempfile::tempdir().unwrap();
    out.save(dir.path()).unwrap();
    let graph = setexpand::BipartiteGraph::load(&dir.path().join("graph.tsv")).unwrap();
    assert_eq!(graph, out.graph);
    let diagnostic =
        WeightedSet::load(&dir.path().join("diagnostic_ngrams.tsv"), Side::Ngram).unwrap();
    assert_eq!(diagnostic, out.diagnostic);
    let params = desk_config().phase1();
    for (q, score) in out.intermediate.iter() {
        let trace = setexpand::explain::explain_query(&graph, &diagnostic, q, &params).unwrap();
        assert_eq!(trace.score, score, "{q}");
    }
}
