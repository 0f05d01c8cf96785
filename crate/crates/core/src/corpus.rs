//! Session log parsing, query normalization, ngram extraction and
//! co-occurrence counting.
//!
//! A session is the set of distinct queries one user issued in a short
//! window. Only sessions whose distinct-query count falls inside the
//! configured bounds are kept. Counting works on those retained sessions:
//!
//! * `|q|`: sessions containing query `q`,
//! * `|n|`: sessions where some query has `n` as one of its ngrams,
//! * `c(q, n)`: sessions where `n` is an ngram of another query in the
//!   session but not an ngram of `q` itself.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A normalized search query: lowercased, whitespace runs collapsed to a
/// single space, trimmed, never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Query(String);

/// A unigram or space-joined bigram taken from a query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ngram(String);

macro_rules! string_newtype {
    ($ty:ident) => {
        impl $ty {
            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn into_string(self) -> String {
                self.0
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl AsRef<str> for $ty {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl Borrow<str> for $ty {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_newtype!(Query);
string_newtype!(Ngram);

impl Query {
    /// Normalizes `raw`, returning `None` when nothing is left.
    pub fn parse(raw: &str) -> Option<Query> {
        normalize_query(raw)
    }

    /// Space separated tokens of the query.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ')
    }
}

impl Ngram {
    /// Wraps an ngram string taken from a trusted source such as a graph
    /// file. No normalization is applied.
    pub fn new(text: impl Into<String>) -> Ngram {
        Ngram(text.into())
    }

    pub fn token_count(&self) -> usize {
        self.0.split(' ').count()
    }
}

pub fn normalize_query(raw: &str) -> Option<Query> {
    let mut out = String::with_capacity(raw.len());
    for token in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(token.chars().flat_map(char::to_lowercase));
    }
    if out.is_empty() {
        None
    } else {
        Some(Query(out))
    }
}

/// All unigrams and adjacent bigrams of `q`.
pub fn query_ngrams(q: &Query) -> BTreeSet<Ngram> {
    let tokens: Vec<&str> = q.tokens().collect();
    let mut out: BTreeSet<Ngram> = tokens.iter().map(|t| Ngram((*t).to_owned())).collect();
    for pair in tokens.windows(2) {
        out.insert(Ngram(format!("{} {}", pair[0], pair[1])));
    }
    out
}

/// Inclusive bounds on the number of distinct queries in a retained session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionBounds {
    pub min: usize,
    pub max: usize,
}

impl Default for SessionBounds {
    fn default() -> Self {
        SessionBounds { min: 5, max: 20 }
    }
}

impl SessionBounds {
    pub fn validate(&self) -> Result<()> {
        if self.min == 0 || self.min > self.max {
            return Err(Error::Config(format!(
                "session bounds must satisfy 1 <= min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, len: usize) -> bool {
        (self.min..=self.max).contains(&len)
    }
}

/// A set of distinct queries, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    queries: Vec<Query>,
}

impl Session {
    pub fn new(queries: impl IntoIterator<Item = Query>) -> Session {
        let mut queries: Vec<Query> = queries.into_iter().collect();
        queries.sort_unstable();
        queries.dedup();
        Session { queries }
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn contains(&self, q: &str) -> bool {
        self.queries.binary_search_by(|x| x.as_str().cmp(q)).is_ok()
    }
}

/// Retained sessions in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionCorpus {
    sessions: Vec<Session>,
}

impl SessionCorpus {
    pub fn new(sessions: Vec<Session>) -> SessionCorpus {
        SessionCorpus { sessions }
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }
}

/// Tally of what the parser dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub lines: usize,
    pub retained: usize,
    pub too_short: usize,
    pub too_long: usize,
    pub malformed: usize,
    pub empty_queries: usize,
}

impl ParseReport {
    pub fn discarded(&self) -> usize {
        self.too_short + self.too_long
    }
}

impl fmt::Display for ParseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lines={} retained={} discarded={} (short={} long={}) malformed={} empty_queries={}",
            self.lines,
            self.retained,
            self.discarded(),
            self.too_short,
            self.too_long,
            self.malformed,
            self.empty_queries
        )
    }
}

/// Parses one session per line with tab separated queries.
///
/// Lines that are not valid UTF-8 are skipped and counted as malformed.
/// Queries that normalize to nothing are dropped from their session.
pub fn parse_sessions<R: BufRead>(
    mut reader: R,
    bounds: SessionBounds,
) -> std::io::Result<(SessionCorpus, ParseReport)> {
    let mut report = ParseReport::default();
    let mut sessions = Vec::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        report.lines += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        let line = match std::str::from_utf8(&buf) {
            Ok(line) => line,
            Err(_) => {
                report.malformed += 1;
                continue;
            }
        };
        let mut queries = Vec::new();
        for raw in line.split('\t') {
            match normalize_query(raw) {
                Some(q) => queries.push(q),
                None => report.empty_queries += 1,
            }
        }
        let session = Session::new(queries);
        if session.len() < bounds.min {
            report.too_short += 1;
        } else if session.len() > bounds.max {
            report.too_long += 1;
        } else {
            sessions.push(session);
        }
    }
    report.retained = sessions.len();
    Ok((SessionCorpus::new(sessions), report))
}

/// Ngrams of the other queries in `session` that are not ngrams of `q`.
pub fn cooccurring_ngrams(q: &Query, session: &Session) -> Result<BTreeSet<Ngram>> {
    if !session.contains(q.as_str()) {
        return Err(Error::QueryNotInSession(q.to_string()));
    }
    let own = query_ngrams(q);
    let mut out = BTreeSet::new();
    for other in session.queries().iter().filter(|o| *o != q) {
        out.extend(query_ngrams(other).into_iter().filter(|n| !own.contains(n)));
    }
    Ok(out)
}

/// Session frequency tables for queries, ngrams, and query/ngram pairs.
///
/// Queries and ngrams are stored in lexicographic order and addressed by
/// their rank, so the layout is identical however the counting was sharded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceCounts {
    queries: Vec<Query>,
    query_sessions: Vec<u64>,
    ngrams: Vec<Ngram>,
    ngram_sessions: Vec<u64>,
    /// Per query id: (ngram id, c(q, n)) sorted by ngram id.
    pairs: Vec<Vec<(u32, u64)>>,
    total_sessions: u64,
}

// Sessions per rayon work unit. Counts are integers, so shard boundaries
// never change the result.
const SHARD_SESSIONS: usize = 256;

#[derive(Default)]
struct ShardCounts {
    query_sessions: HashMap<u32, u64>,
    ngram_sessions: HashMap<u32, u64>,
    pairs: HashMap<(u32, u32), u64>,
}

impl ShardCounts {
    fn merge(mut self, other: ShardCounts) -> ShardCounts {
        for (k, v) in other.query_sessions {
            *self.query_sessions.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.ngram_sessions {
            *self.ngram_sessions.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.pairs {
            *self.pairs.entry(k).or_insert(0) += v;
        }
        self
    }
}

/// Counts `|q|`, `|n|` and `c(q, n)` over every retained session.
///
/// Work is spread over the current rayon pool; per-shard tables are merged
/// by addition.
pub fn count_statistics(corpus: &SessionCorpus) -> CooccurrenceCounts {
    let sessions = corpus.sessions();

    let (query_vocab, ngram_vocab) = sessions
        .par_chunks(SHARD_SESSIONS)
        .map(|chunk| {
            let mut qs = BTreeSet::new();
            let mut ns = BTreeSet::new();
            for s in chunk {
                for q in s.queries() {
                    ns.extend(query_ngrams(q));
                    qs.insert(q.clone());
                }
            }
            (qs, ns)
        })
        .reduce(
            || (BTreeSet::new(), BTreeSet::new()),
            |(mut qa, mut na), (qb, nb)| {
                qa.extend(qb);
                na.extend(nb);
                (qa, na)
            },
        );
    let queries: Vec<Query> = query_vocab.into_iter().collect();
    let ngrams: Vec<Ngram> = ngram_vocab.into_iter().collect();
    let query_ids: HashMap<&str, u32> = queries
        .iter()
        .enumerate()
        .map(|(i, q)| (q.as_str(), i as u32))
        .collect();
    let ngram_ids: HashMap<&str, u32> = ngrams
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i as u32))
        .collect();

    let shard = sessions
        .par_chunks(SHARD_SESSIONS)
        .map(|chunk| {
            let mut acc = ShardCounts::default();
            for s in chunk {
                let per_query: Vec<(u32, Vec<u32>)> = s
                    .queries()
                    .iter()
                    .map(|q| {
                        let mut ids: Vec<u32> = query_ngrams(q)
                            .iter()
                            .map(|n| ngram_ids[n.as_str()])
                            .collect();
                        ids.sort_unstable();
                        (query_ids[q.as_str()], ids)
                    })
                    .collect();

                let mut session_ngrams: Vec<u32> = per_query
                    .iter()
                    .flat_map(|(_, ids)| ids.iter().copied())
                    .collect();
                session_ngrams.sort_unstable();
                session_ngrams.dedup();
                for &n in &session_ngrams {
                    *acc.ngram_sessions.entry(n).or_insert(0) += 1;
                }

                for (qi, (q, own)) in per_query.iter().enumerate() {
                    *acc.query_sessions.entry(*q).or_insert(0) += 1;
                    let mut others: Vec<u32> = per_query
                        .iter()
                        .enumerate()
                        .filter(|(oi, _)| *oi != qi)
                        .flat_map(|(_, (_, ids))| ids.iter().copied())
                        .filter(|n| own.binary_search(n).is_err())
                        .collect();
                    others.sort_unstable();
                    others.dedup();
                    for n in others {
                        *acc.pairs.entry((*q, n)).or_insert(0) += 1;
                    }
                }
            }
            acc
        })
        .reduce(ShardCounts::default, ShardCounts::merge);

    let mut query_sessions = vec![0; queries.len()];
    for (q, c) in shard.query_sessions {
        query_sessions[q as usize] = c;
    }
    let mut ngram_sessions = vec![0; ngrams.len()];
    for (n, c) in shard.ngram_sessions {
        ngram_sessions[n as usize] = c;
    }
    let mut pairs: Vec<Vec<(u32, u64)>> = vec![Vec::new(); queries.len()];
    for ((q, n), c) in shard.pairs {
        pairs[q as usize].push((n, c));
    }
    pairs.par_iter_mut().for_each(|row| row.sort_unstable());

    CooccurrenceCounts {
        queries,
        query_sessions,
        ngrams,
        ngram_sessions,
        pairs,
        total_sessions: sessions.len() as u64,
    }
}

impl CooccurrenceCounts {
    pub fn total_sessions(&self) -> u64 {
        self.total_sessions
    }

    /// `|q|`, zero for unseen queries.
    pub fn query_count(&self, q: &str) -> u64 {
        self.query_id(q).map_or(0, |i| self.query_sessions[i])
    }

    /// `|n|`, zero for unseen ngrams.
    pub fn ngram_count(&self, n: &str) -> u64 {
        self.ngram_id(n).map_or(0, |i| self.ngram_sessions[i])
    }

    /// `c(q, n)`, zero when the pair never co-occurred.
    pub fn cooccurrence(&self, q: &str, n: &str) -> u64 {
        let (Some(qi), Some(ni)) = (self.query_id(q), self.ngram_id(n)) else {
            return 0;
        };
        let row = &self.pairs[qi];
        row.binary_search_by_key(&(ni as u32), |&(id, _)| id)
            .map_or(0, |pos| row[pos].1)
    }

    /// Queries with their `|q|`, in lexicographic order.
    pub fn queries(&self) -> impl Iterator<Item = (&Query, u64)> {
        self.queries.iter().zip(self.query_sessions.iter().copied())
    }

    /// Ngrams with their `|n|`, in lexicographic order.
    pub fn ngrams(&self) -> impl Iterator<Item = (&Ngram, u64)> {
        self.ngrams.iter().zip(self.ngram_sessions.iter().copied())
    }

    /// Every observed `(q, n, c(q, n))`, ordered by query then ngram.
    pub fn pairs(&self) -> impl Iterator<Item = (&Query, &Ngram, u64)> {
        self.pairs.iter().enumerate().flat_map(move |(qi, row)| {
            let q = &self.queries[qi];
            row.iter()
                .map(move |&(ni, c)| (q, &self.ngrams[ni as usize], c))
        })
    }

    /// Observed pairs with the query and ngram session counts attached:
    /// `(q, |q|, n, |n|, c(q, n))`.
    pub(crate) fn pair_stats(&self) -> impl Iterator<Item = (&Query, u64, &Ngram, u64, u64)> {
        self.pairs.iter().enumerate().flat_map(move |(qi, row)| {
            let q = &self.queries[qi];
            let qc = self.query_sessions[qi];
            row.iter().map(move |&(ni, c)| {
                let ni = ni as usize;
                (q, qc, &self.ngrams[ni], self.ngram_sessions[ni], c)
            })
        })
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }

    fn query_id(&self, q: &str) -> Option<usize> {
        self.queries.binary_search_by(|x| x.as_str().cmp(q)).ok()
    }

    fn ngram_id(&self, n: &str) -> Option<usize> {
        self.ngrams.binary_search_by(|x| x.as_str().cmp(n)).ok()
    }
}
