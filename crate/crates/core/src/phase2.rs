//! Behavioral scoring of every corpus query against the intermediate set.
//!
//! A session is dense for query `q` when it holds at least three
//! intermediate queries other than `q`. With `t` sessions containing `q` and
//! `u` of them dense, the score is the smoothed fraction `(u + 1) / (t + 30)`.
//! Queries that score high enough and were seen often enough become
//! positives; queries that score low enough and were seen often enough become
//! negatives. Everything in between is left out of both.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Query, Session, SessionCorpus};
use crate::error::{Error, Result};
use crate::tsv;

/// Other intermediate queries a session must hold to be dense.
pub const DENSE_SESSION_OTHERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Smoothing {
    /// Added to the dense-session count.
    pub numerator: f64,
    /// Added to the session count.
    pub denominator: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            numerator: 1.0,
            denominator: 30.0,
        }
    }
}

impl Smoothing {
    pub fn validate(&self) -> Result<()> {
        if !(self.numerator.is_finite() && self.numerator >= 0.0) {
            return Err(Error::Config(
                "smoothing numerator must be non-negative".into(),
            ));
        }
        if !(self.denominator.is_finite() && self.denominator > 0.0) {
            return Err(Error::Config(
                "smoothing denominator must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, dense: u64, sessions: u64) -> f64 {
        (dense as f64 + self.numerator) / (sessions as f64 + self.denominator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryScore {
    /// Sessions containing the query (`t`).
    pub sessions: u64,
    /// Dense sessions containing the query (`u`).
    pub dense_sessions: u64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub t_p: f64,
    pub t_n: f64,
    pub min_pos_sessions: u64,
    pub min_neg_sessions: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            t_p: 0.1,
            t_n: 0.005,
            min_pos_sessions: 10,
            min_neg_sessions: 300,
        }
    }
}

impl SplitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_p.is_finite() && self.t_n.is_finite()) {
            return Err(Error::Config("t_p and t_n must be finite".into()));
        }
        if self.t_n >= self.t_p {
            return Err(Error::Config(format!(
                "t_n ({}) must be below t_p ({})",
                self.t_n, self.t_p
            )));
        }
        Ok(())
    }
}

/// Positive and negative query sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult {
    pub positives: BTreeMap<Query, QueryScore>,
    pub negatives: BTreeMap<Query, QueryScore>,
    pub params: SplitParams,
}

/// Number of queries of `session` that belong to `intermediate`.
pub fn session_hit_count<S>(session: &Session, intermediate: &HashSet<S>) -> usize
where
    S: std::borrow::Borrow<str> + Eq + std::hash::Hash,
{
    session
        .queries()
        .iter()
        .filter(|q| intermediate.contains(q.as_str()))
        .count()
}

/// Scores every distinct query in the corpus.
pub fn score_all_queries<S>(
    corpus: &SessionCorpus,
    intermediate: &HashSet<S>,
    smoothing: &Smoothing,
) -> BTreeMap<Query, QueryScore>
where
    S: std::borrow::Borrow<str> + Eq + std::hash::Hash + Sync,
{
    let tallies = corpus
        .sessions()
        .par_chunks(256)
        .map(|chunk| {
            let mut acc: HashMap<&Query, (u64, u64)> = HashMap::new();
            for session in chunk {
                let hits = session_hit_count(session, intermediate);
                for q in session.queries() {
                    let own = usize::from(intermediate.contains(q.as_str()));
                    let entry = acc.entry(q).or_insert((0, 0));
                    entry.0 += 1;
                    if hits >= DENSE_SESSION_OTHERS + own {
                        entry.1 += 1;
                    }
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (q, (t, u)) in b {
                let e = a.entry(q).or_insert((0, 0));
                e.0 += t;
                e.1 += u;
            }
            a
        });

    tallies
        .into_iter()
        .map(|(q, (t, u))| {
            (
                q.clone(),
                QueryScore {
                    sessions: t,
                    dense_sessions: u,
                    score: smoothing.apply(u, t),
                },
            )
        })
        .collect()
}

/// Splits scores into positives (`score >= t_p`, enough sessions) and
/// negatives (`score < t_n`, enough sessions).
pub fn threshold_split(
    scores: &BTreeMap<Query, QueryScore>,
    params: SplitParams,
) -> Result<ExpansionResult> {
    params.validate()?;
    let mut positives = BTreeMap::new();
    let mut negatives = BTreeMap::new();
    for (q, s) in scores {
        if s.score >= params.t_p && s.sessions >= params.min_pos_sessions {
            positives.insert(q.clone(), *s);
        } else if s.score < params.t_n && s.sessions >= params.min_neg_sessions {
            negatives.insert(q.clone(), *s);
        }
    }
    Ok(ExpansionResult {
        positives,
        negatives,
        params,
    })
}

/// `query<TAB>t<TAB>u<TAB>score`, score descending then query ascending.
pub fn write_scores(
    scores: &BTreeMap<Query, QueryScore>,
    w: &mut dyn Write,
) -> std::io::Result<()> {
    let mut rows: Vec<(&Query, &QueryScore)> = scores.iter().collect();
    rows.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then_with(|| a.0.cmp(b.0)));
    for (q, s) in rows {
        writeln!(
            w,
            "{q}\t{}\t{}\t{}",
            s.sessions,
            s.dense_sessions,
            tsv::format_sig9(s.score)
        )?;
    }
    Ok(())
}

pub fn save_scores(scores: &BTreeMap<Query, QueryScore>, path: &Path) -> Result<()> {
    tsv::write_file(path, |w| write_scores(scores, w))
}

/// Reads a positives or negatives file.
pub fn load_scores(path: &Path) -> Result<BTreeMap<Query, QueryScore>> {
    let mut out = BTreeMap::new();
    for (line_no, line) in tsv::read_lines(path)? {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [q, t, u, score] = fields[..] else {
            return Err(Error::format(
                path,
                line_no,
                "expected query<TAB>t<TAB>u<TAB>score",
            ));
        };
        let query = Query::parse(q).ok_or_else(|| Error::format(path, line_no, "empty query"))?;
        out.insert(
            query,
            QueryScore {
                sessions: tsv::parse_u64(t, path, line_no)?,
                dense_sessions: tsv::parse_u64(u, path, line_no)?,
                score: tsv::parse_f64(score, path, line_no)?,
            },
        );
    }
    Ok(out)
}
