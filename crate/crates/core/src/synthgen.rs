//! Synthetic session corpora with planted topics.
//!
//! Each topic owns a vocabulary and an inventory of queries built from it.
//! A set of ambiguous tokens is shared by every topic, so the same token
//! shows up in queries of different topics (think "pot" in cooking and in
//! drug queries). Each session is assigned a topic; every query slot is
//! drawn from that topic's inventory with probability `stickiness` and from
//! a uniformly chosen topic otherwise. Inventory popularity follows a Zipf
//! law, which yields head, torso and tail queries.
//!
//! Specs are TOML files:
//!
//! ```toml
//! seed = 7
//! sessions_per_topic = 600
//! # total_sessions = 2000      # optional, split evenly across topics
//! stickiness = 0.9
//! queries_per_topic = 250
//! zipf_exponent = 1.0
//! ambiguous_query_rate = 0.25
//! session_length = { min = 5, max = 20 }
//! query_tokens = { min = 1, max = 3 }
//! ambiguous = ["pot", "weed"]
//!
//! [[topics]]
//! name = "cooking"
//! vocabulary = ["soup", "crock", "pasta", "recipes"]
//!
//! [[topics]]
//! name = "drugs"
//! vocabulary = ["smoke", "stoner", "brownies", "420"]
//! ```
//!
//! Instead of listing topics, a `[generate]` table makes pseudo-word
//! vocabularies:
//!
//! ```toml
//! [generate]
//! topics = 3
//! vocabulary_size = 300      # total, ambiguous tokens included
//! ambiguous_fraction = 0.1
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Query, Session, SessionCorpus};
use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicSpec {
    pub name: String,
    pub vocabulary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedVocabulary {
    pub topics: usize,
    pub vocabulary_size: usize,
    pub ambiguous_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub sessions_per_topic: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_sessions: Option<usize>,
    pub stickiness: f64,
    pub queries_per_topic: usize,
    #[serde(default = "default_zipf")]
    pub zipf_exponent: f64,
    #[serde(default)]
    pub ambiguous_query_rate: f64,
    #[serde(default = "default_session_length")]
    pub session_length: Range,
    #[serde(default = "default_query_tokens")]
    pub query_tokens: Range,
    #[serde(default)]
    pub ambiguous: Vec<String>,
    #[serde(default)]
    pub topics: Vec<TopicSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GeneratedVocabulary>,
}

fn default_zipf() -> f64 {
    1.0
}

fn default_session_length() -> Range {
    Range { min: 5, max: 20 }
}

fn default_query_tokens() -> Range {
    Range { min: 1, max: 3 }
}

/// Generated query -> name of the topic whose inventory it came from.
pub type GroundTruth = BTreeMap<Query, String>;

impl CorpusSpec {
    pub fn from_toml(text: &str) -> Result<CorpusSpec> {
        toml::from_str(text).map_err(|e| Error::Config(format!("corpus spec: {e}")))
    }

    pub fn load(path: &Path) -> Result<CorpusSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        if !(0.0..=1.0).contains(&self.stickiness) {
            return bad(format!("stickiness {} is outside [0, 1]", self.stickiness));
        }
        if !(0.0..=1.0).contains(&self.ambiguous_query_rate) {
            return bad(format!(
                "ambiguous_query_rate {} is outside [0, 1]",
                self.ambiguous_query_rate
            ));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent must be non-negative".into());
        }
        let Range { min, max } = self.session_length;
        if min == 0 || min > max {
            return bad(format!("session_length [{min}, {max}] is empty"));
        }
        let Range { min, max } = self.query_tokens;
        if min == 0 || min > max {
            return bad(format!("query_tokens [{min}, {max}] is empty"));
        }
        if self.session_length.max > self.queries_per_topic {
            return bad(format!(
                "sessions of up to {} distinct queries cannot be filled from {} queries per topic",
                self.session_length.max, self.queries_per_topic
            ));
        }
        if self.topics.is_empty() == self.generate.is_none() {
            return bad("give exactly one of [[topics]] or [generate]".into());
        }
        Ok(())
    }

    /// Topic vocabularies and ambiguous tokens exactly as
    /// [`generate_corpus`] will use them.
    pub fn vocabulary(&self) -> Result<(Vec<TopicSpec>, Vec<String>)> {
        self.validate()?;
        self.resolve_vocabulary(&mut ChaCha8Rng::seed_from_u64(self.seed))
    }

    fn resolve_vocabulary(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<TopicSpec>, Vec<String>)> {
        let Some(generate) = &self.generate else {
            for t in &self.topics {
                if t.vocabulary.is_empty() {
                    return Err(Error::InfeasibleSpec(format!(
                        "topic {:?} has no vocabulary",
                        t.name
                    )));
                }
            }
            return Ok((self.topics.clone(), self.ambiguous.clone()));
        };
        if generate.topics == 0 {
            return Err(Error::InfeasibleSpec(
                "at least one topic is required".into(),
            ));
        }
        if !(0.0..1.0).contains(&generate.ambiguous_fraction) {
            return Err(Error::InfeasibleSpec(
                "ambiguous_fraction must be in [0, 1)".into(),
            ));
        }
        let ambiguous_count =
            (generate.vocabulary_size as f64 * generate.ambiguous_fraction).round() as usize;
        let topical = generate.vocabulary_size - ambiguous_count;
        if topical < generate.topics {
            return Err(Error::InfeasibleSpec(
                "every topic needs at least one token".into(),
            ));
        }
        let mut words = pseudo_words(rng, generate.vocabulary_size);
        let mut ambiguous = words.split_off(topical);
        ambiguous.extend(self.ambiguous.iter().cloned());
        let topics = (0..generate.topics)
            .map(|t| TopicSpec {
                name: format!("topic{t}"),
                vocabulary: words
                    .iter()
                    .skip(t)
                    .step_by(generate.topics)
                    .cloned()
                    .collect(),
            })
            .collect();
        Ok((topics, ambiguous))
    }
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br",
    "ch", "dr", "gl", "kr", "pl", "sh", "st", "th", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "ee"];

fn pseudo_words(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn build_inventory(
    rng: &mut ChaCha8Rng,
    spec: &CorpusSpec,
    vocabulary: &[String],
    ambiguous: &[String],
    taken: &mut BTreeSet<String>,
) -> Option<Vec<Query>> {
    let mut inventory = Vec::with_capacity(spec.queries_per_topic);
    let max_len = spec.query_tokens.max.min(vocabulary.len());
    let min_len = spec.query_tokens.min.min(max_len);
    let mut attempts = 0;
    while inventory.len() < spec.queries_per_topic {
        attempts += 1;
        if attempts > spec.queries_per_topic * 100 + 1000 {
            return None;
        }
        let len = rng.random_range(min_len..=max_len);
        let mut tokens: Vec<&str> = vocabulary
            .choose_multiple(rng, len)
            .map(String::as_str)
            .collect();
        if len >= 2 && !ambiguous.is_empty() && rng.random_bool(spec.ambiguous_query_rate) {
            let slot = rng.random_range(0..len);
            tokens[slot] = &ambiguous[rng.random_range(0..ambiguous.len())];
        }
        let Some(query) = Query::parse(&tokens.join(" ")) else {
            continue;
        };
        if taken.insert(query.as_str().to_owned()) {
            inventory.push(query);
        }
    }
    Some(inventory)
}

/// Generates a corpus and the topic of every query it contains.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<(SessionCorpus, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (topics, ambiguous) = spec.resolve_vocabulary(&mut rng)?;
    if topics.is_empty() {
        return Err(Error::InfeasibleSpec(
            "at least one topic is required".into(),
        ));
    }

    let mut taken = BTreeSet::new();
    let mut inventories = Vec::with_capacity(topics.len());
    for t in &topics {
        let inv = build_inventory(&mut rng, spec, &t.vocabulary, &ambiguous, &mut taken)
            .ok_or_else(|| {
                Error::InfeasibleSpec(format!(
                    "topic {:?} cannot form {} distinct queries",
                    t.name, spec.queries_per_topic
                ))
            })?;
        inventories.push(inv);
    }
    let weights: Vec<f64> = (0..spec.queries_per_topic)
        .map(|rank| 1.0 / ((rank + 1) as f64).powf(spec.zipf_exponent))
        .collect();
    let popularity = WeightedIndex::new(&weights)
        .map_err(|e| Error::InfeasibleSpec(format!("query popularity: {e}")))?;

    let mut assignment = Vec::new();
    match spec.total_sessions {
        Some(total) => assignment.extend((0..total).map(|i| i % topics.len())),
        None => {
            for t in 0..topics.len() {
                assignment.extend(std::iter::repeat_n(t, spec.sessions_per_topic));
            }
        }
    }
    assignment.shuffle(&mut rng);

    let mut truth = GroundTruth::new();
    let mut sessions = Vec::with_capacity(assignment.len());
    for topic in assignment {
        let len = rng.random_range(spec.session_length.min..=spec.session_length.max);
        let mut picked: Vec<(usize, &Query)> = Vec::with_capacity(len);
        let mut attempts = 0;
        while picked.len() < len {
            attempts += 1;
            if attempts > len * 1000 {
                return Err(Error::InfeasibleSpec(
                    "cannot fill a session with distinct queries".into(),
                ));
            }
            let source = if rng.random_bool(spec.stickiness) {
                topic
            } else {
                rng.random_range(0..topics.len())
            };
            let q = &inventories[source][popularity.sample(&mut rng)];
            if !picked.iter().any(|(_, p)| *p == q) {
                picked.push((source, q));
            }
        }
        for &(source, q) in &picked {
            truth
                .entry(q.clone())
                .or_insert_with(|| topics[source].name.clone());
        }
        sessions.push(Session::new(picked.into_iter().map(|(_, q)| q.clone())));
    }
    Ok((SessionCorpus::new(sessions), truth))
}

/// One session per line, queries separated by tabs.
pub fn write_sessions(corpus: &SessionCorpus, w: &mut dyn Write) -> std::io::Result<()> {
    for s in corpus.sessions() {
        let line: Vec<&str> = s.queries().iter().map(Query::as_str).collect();
        writeln!(w, "{}", line.join("\t"))?;
    }
    Ok(())
}

/// `query<TAB>topic` rows sorted by query.
pub fn write_ground_truth(truth: &GroundTruth, w: &mut dyn Write) -> std::io::Result<()> {
    for (q, topic) in truth {
        writeln!(w, "{q}\t{topic}")?;
    }
    Ok(())
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let mut out = GroundTruth::new();
    for (line_no, line) in tsv::read_lines(path)? {
        if line.is_empty() {
            continue;
        }
        let Some((q, topic)) = line.split_once('\t') else {
            return Err(Error::format(path, line_no, "expected query<TAB>topic"));
        };
        let q = Query::parse(q).ok_or_else(|| Error::format(path, line_no, "empty query"))?;
        out.insert(q, topic.to_owned());
    }
    Ok(out)
}
