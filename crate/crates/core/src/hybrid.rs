//! Hybrid classification: a textual scorer backed by a table of training
//! queries where it disagrees with the behavioral labels.
//!
//! The textual scorer generalizes to unseen queries but stumbles on
//! non-compositional ones. For training queries the behavioral label is
//! trusted, and only the queries where the two disagree need to be stored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{query_ngrams, Query};
use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_score(score: f64) -> Label {
        if score >= 0.5 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Label, String> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// A model that rates query text alone.
///
/// `classify(q)` is positive exactly when `score(q) >= 0.5`.
pub trait TextualScorer {
    /// Probability-like score in `[0, 1]`.
    fn score(&self, query: &Query) -> f64;

    fn classify(&self, query: &Query) -> Label {
        Label::from_score(self.score(query))
    }
}

/// Multinomial naive Bayes over query unigrams and bigrams, with add-one
/// smoothing. Deterministic given its training sets.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesScorer {
    positive_docs: u64,
    negative_docs: u64,
    /// ngram -> (positive count, negative count)
    features: BTreeMap<String, (u64, u64)>,
    positive_total: u64,
    negative_total: u64,
}

const MODEL_HEADER: &str = "#setexpand-naive-bayes\tv1";

impl NaiveBayesScorer {
    fn from_parts(
        positive_docs: u64,
        negative_docs: u64,
        features: BTreeMap<String, (u64, u64)>,
    ) -> Self {
        let positive_total = features.values().map(|c| c.0).sum();
        let negative_total = features.values().map(|c| c.1).sum();
        NaiveBayesScorer {
            positive_docs,
            negative_docs,
            features,
            positive_total,
            negative_total,
        }
    }

    /// Log odds of the positive class. Ngrams never seen in training are
    /// ignored.
    pub fn log_odds(&self, query: &Query) -> f64 {
        let vocab = self.features.len() as f64;
        let pos_denom = (self.positive_total as f64 + vocab).ln();
        let neg_denom = (self.negative_total as f64 + vocab).ln();
        let mut odds = (self.positive_docs as f64).ln() - (self.negative_docs as f64).ln();
        for n in query_ngrams(query) {
            if let Some(&(p, q)) = self.features.get(n.as_str()) {
                odds += ((p + 1) as f64).ln() - pos_denom - ((q + 1) as f64).ln() + neg_denom;
            }
        }
        odds
    }

    pub fn vocabulary_size(&self) -> usize {
        self.features.len()
    }

    /// Versioned text format:
    ///
    /// ```text
    /// #setexpand-naive-bayes<TAB>v1
    /// classes<TAB><positive docs><TAB><negative docs>
    /// feature<TAB><ngram><TAB><positive count><TAB><negative count>
    /// ```
    pub fn write(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{MODEL_HEADER}")?;
        writeln!(w, "classes\t{}\t{}", self.positive_docs, self.negative_docs)?;
        for (n, (p, q)) in &self.features {
            writeln!(w, "feature\t{n}\t{p}\t{q}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| self.write(w))
    }

    pub fn load(path: &Path) -> Result<NaiveBayesScorer> {
        let lines = tsv::read_lines(path)?;
        let mut iter = lines.into_iter();
        match iter.next() {
            Some((_, h)) if h == MODEL_HEADER => {}
            _ => {
                return Err(Error::format(
                    path,
                    1,
                    format!("expected header {MODEL_HEADER:?}"),
                ))
            }
        }
        let mut classes = None;
        let mut features = BTreeMap::new();
        for (line_no, line) in iter {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                ["classes", p, n] => {
                    classes = Some((
                        tsv::parse_u64(p, path, line_no)?,
                        tsv::parse_u64(n, path, line_no)?,
                    ));
                }
                ["feature", ngram, p, n] => {
                    features.insert(
                        ngram.to_owned(),
                        (
                            tsv::parse_u64(p, path, line_no)?,
                            tsv::parse_u64(n, path, line_no)?,
                        ),
                    );
                }
                [""] => {}
                _ => return Err(Error::format(path, line_no, "unrecognized model line")),
            }
        }
        let (p, n) = classes.ok_or_else(|| Error::format(path, 0, "missing classes line"))?;
        if p == 0 || n == 0 {
            return Err(Error::format(path, 0, "model has an empty class"));
        }
        Ok(NaiveBayesScorer::from_parts(p, n, features))
    }
}

impl TextualScorer for NaiveBayesScorer {
    fn score(&self, query: &Query) -> f64 {
        1.0 / (1.0 + (-self.log_odds(query)).exp())
    }
}

/// Fits the baseline scorer on positive and negative queries.
pub fn train_baseline_scorer(
    positives: &BTreeSet<Query>,
    negatives: &BTreeSet<Query>,
) -> Result<NaiveBayesScorer> {
    if positives.is_empty() {
        return Err(Error::EmptyClass(Label::Positive));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyClass(Label::Negative));
    }
    if let Some(q) = positives.intersection(negatives).next() {
        return Err(Error::OverlappingClasses(q.to_string()));
    }
    let mut features: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for q in positives {
        for n in query_ngrams(q) {
            features.entry(n.into_string()).or_default().0 += 1;
        }
    }
    for q in negatives {
        for n in query_ngrams(q) {
            features.entry(n.into_string()).or_default().1 += 1;
        }
    }
    Ok(NaiveBayesScorer::from_parts(
        positives.len() as u64,
        negatives.len() as u64,
        features,
    ))
}

/// Training queries whose textual label differs from the behavioral one,
/// mapped to the behavioral label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DisagreementTable {
    overrides: BTreeMap<Query, Label>,
}

impl DisagreementTable {
    pub fn get(&self, query: &Query) -> Option<Label> {
        self.overrides.get(query).copied()
    }

    pub fn len(&self) -> usize {
        self.overrides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Query, Label)> {
        self.overrides.iter().map(|(q, l)| (q, *l))
    }

    /// `query<TAB>label` rows sorted by query.
    pub fn write_tsv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        for (q, label) in &self.overrides {
            writeln!(w, "{q}\t{label}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| self.write_tsv(w))
    }

    pub fn load(path: &Path) -> Result<DisagreementTable> {
        let mut overrides = BTreeMap::new();
        for (line_no, line) in tsv::read_lines(path)? {
            if line.is_empty() {
                continue;
            }
            let Some((q, label)) = line.split_once('\t') else {
                return Err(Error::format(path, line_no, "expected query<TAB>label"));
            };
            let query =
                Query::parse(q).ok_or_else(|| Error::format(path, line_no, "empty query"))?;
            let label = label
                .parse::<Label>()
                .map_err(|e| Error::format(path, line_no, e))?;
            overrides.insert(query, label);
        }
        Ok(DisagreementTable { overrides })
    }
}

pub fn build_disagreement_table<M: TextualScorer + ?Sized>(
    positives: &BTreeSet<Query>,
    negatives: &BTreeSet<Query>,
    scorer: &M,
) -> DisagreementTable {
    let mut overrides = BTreeMap::new();
    for (set, label) in [(positives, Label::Positive), (negatives, Label::Negative)] {
        for q in set {
            if scorer.classify(q) != label {
                overrides.insert(q.clone(), label);
            }
        }
    }
    DisagreementTable { overrides }
}

/// Table label if present, otherwise the scorer's label.
pub fn hybrid_classify<M: TextualScorer + ?Sized>(
    query: &Query,
    table: &DisagreementTable,
    scorer: &M,
) -> Label {
    table.get(query).unwrap_or_else(|| scorer.classify(query))
}
