//! Command line front end.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::corpus::{ParseReport, Query};
use crate::error::{Error, Result};
use crate::explain::{explain_ngram, explain_query};
use crate::graph::BipartiteGraph;
use crate::hybrid::{
    build_disagreement_table, hybrid_classify, train_baseline_scorer, DisagreementTable,
    NaiveBayesScorer,
};
use crate::phase1::{load_seeds, WeightedSet};
use crate::phase2::{load_scores, save_scores};
use crate::pipeline;
use crate::synthgen::{generate_corpus, write_ground_truth, write_sessions, CorpusSpec};
use crate::tsv;
use crate::Side;

#[derive(Debug, Parser)]
#[command(
    name = "setexpand",
    version,
    about = "Expand seed search queries into positive and negative query sets"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count co-occurrences in a sessions file and write the bipartite graph
    BuildGraph {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Expand seeds to diagnostic ngrams and intermediate queries
    Phase1 {
        #[arg(long)]
        graph: PathBuf,
        /// One query per line, optionally followed by <TAB>weight
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        out_diagnostic: PathBuf,
        #[arg(long)]
        out_intermediate: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score every query against the intermediate set and split P and N
    Phase2 {
        #[arg(long)]
        sessions: PathBuf,
        /// Intermediate set as written by phase1
        #[arg(long)]
        intermediate: PathBuf,
        #[arg(long)]
        out_positives: PathBuf,
        #[arg(long)]
        out_negatives: PathBuf,
        /// Also write the score of every corpus query
        #[arg(long)]
        out_scores: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the full pipeline, writing graph, F, I, P and N into a directory
    Expand {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Trace a query to diagnostic ngrams, or an ngram to seeds
    Explain {
        #[arg(long)]
        graph: PathBuf,
        /// Query to explain; needs --diagnostic
        #[arg(long, conflicts_with = "ngram", requires = "diagnostic")]
        query: Option<String>,
        /// Ngram to explain; needs --seeds
        #[arg(long, requires = "seeds")]
        ngram: Option<String>,
        /// Diagnostic ngrams file as written by phase1
        #[arg(long)]
        diagnostic: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate a synthetic corpus with planted topics
    GenCorpus {
        /// TOML corpus spec
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_sessions: PathBuf,
        /// query<TAB>topic ground truth
        #[arg(long)]
        out_truth: PathBuf,
    },
    /// Train the baseline textual scorer on P and N
    HybridTrain {
        #[arg(long)]
        positives: PathBuf,
        #[arg(long)]
        negatives: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the table of training queries the scorer gets wrong
    HybridDiff {
        #[arg(long)]
        positives: PathBuf,
        #[arg(long)]
        negatives: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label queries (one per line) with the table, falling back to the scorer
    HybridClassify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// Queries file; standard input when omitted
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Hyperparameter overrides. Defaults marked "published" reproduce the
/// original method's settings; the rest are local choices.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML file with hyperparameters; flags take precedence over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Association strength threshold, natural log scale [default: -18, published]
    #[arg(long, allow_hyphen_values = true)]
    t_w: Option<f64>,
    /// Session floor for graph queries and ngrams [default: 100, published]
    #[arg(long)]
    min_sessions: Option<u64>,
    /// Seed support size [default: 50, published]
    #[arg(long)]
    sigma: Option<usize>,
    /// Low recall penalty [default: 3.0, published]
    #[arg(long)]
    rho: Option<f64>,
    /// Low precision penalty [default: 0.5, published]
    #[arg(long)]
    tau: Option<f64>,
    /// Intermediate query threshold [default: 1e-4, published]
    #[arg(long)]
    t_i: Option<f64>,
    /// Number of diagnostic ngrams kept [default: 1000, published]
    #[arg(long)]
    top_k: Option<usize>,
    /// Positive score threshold, inclusive [default: 0.1, published]
    #[arg(long)]
    t_p: Option<f64>,
    /// Negative score threshold, exclusive [default: 0.005, published]
    #[arg(long)]
    t_n: Option<f64>,
    /// Session floor for positives [default: 10, published]
    #[arg(long)]
    min_pos: Option<u64>,
    /// Session floor for negatives [default: 300, published]
    #[arg(long)]
    min_neg: Option<u64>,
    /// Smoothing added to the dense-session count [default: 1, published]
    #[arg(long)]
    smoothing_numerator: Option<f64>,
    /// Smoothing added to the session count [default: 30, published]
    #[arg(long)]
    smoothing_denominator: Option<f64>,
    /// Fewest distinct queries in a retained session [default: 5, published]
    #[arg(long)]
    min_session_len: Option<usize>,
    /// Most distinct queries in a retained session [default: 20, published]
    #[arg(long)]
    max_session_len: Option<usize>,
    /// Largest tolerated share of malformed session lines [default: 0.01, local]
    #[arg(long)]
    max_malformed_fraction: Option<f64>,
    /// Worker threads; 0 uses every core. Results do not depend on it [default: 0, local]
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$($target).+ = v; })*
            };
        }
        apply!(
            t_w => t_w,
            min_sessions => min_sessions,
            sigma => sigma,
            rho => rho,
            tau => tau,
            t_i => t_i,
            top_k => top_k,
            t_p => t_p,
            t_n => t_n,
            min_pos => min_pos,
            min_neg => min_neg,
            smoothing_numerator => smoothing.numerator,
            smoothing_denominator => smoothing.denominator,
            min_session_len => session_bounds.min,
            max_session_len => session_bounds.max,
            max_malformed_fraction => max_malformed_fraction,
        );
        c.validate()?;
        Ok(c)
    }
}

/// Parses `argv` and runs the subcommand. Exit code 0 on success, 1 on
/// any error.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // the reader went away, e.g. `| head`
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn report_parse(path: &Path, report: &ParseReport) {
    eprintln!("{}: {report}", path.display());
}

fn report_dropped(dropped: &[String]) {
    if !dropped.is_empty() {
        eprintln!(
            "{} seed(s) not in the graph were dropped: {}",
            dropped.len(),
            dropped.join(", ")
        );
    }
}

fn load_query_set(path: &Path) -> Result<BTreeSet<Query>> {
    Ok(load_scores(path)?.into_keys().collect())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::BuildGraph {
            sessions,
            out,
            config,
        } => {
            let cfg = config.resolve()?;
            let graph = with_threads(config.threads, || -> Result<BipartiteGraph> {
                let (corpus, report) = pipeline::load_sessions(&sessions, &cfg)?;
                report_parse(&sessions, &report);
                Ok(pipeline::corpus_graph(&corpus, &cfg))
            })??;
            eprintln!(
                "graph: {} queries, {} ngrams, {} edges",
                graph.query_count(),
                graph.ngram_count(),
                graph.edge_count()
            );
            graph.save(&out)
        }
        Command::Phase1 {
            graph,
            seeds,
            out_diagnostic,
            out_intermediate,
            config,
        } => {
            let cfg = config.resolve()?;
            let seeds = load_seeds(&seeds)?;
            let graph = BipartiteGraph::load(&graph)?;
            let (kept, dropped) = seeds.restrict_to(&graph);
            report_dropped(&dropped);
            let (f, i) =
                with_threads(config.threads, || pipeline::run_phase1(&graph, &kept, &cfg))??;
            eprintln!(
                "diagnostic ngrams: {}, intermediate queries: {}",
                f.len(),
                i.len()
            );
            f.save(&out_diagnostic)?;
            i.save(&out_intermediate)
        }
        Command::Phase2 {
            sessions,
            intermediate,
            out_positives,
            out_negatives,
            out_scores,
            config,
        } => {
            let cfg = config.resolve()?;
            let intermediate = WeightedSet::load(&intermediate, Side::Query)?;
            let (scores, result) = with_threads(config.threads, || -> Result<_> {
                let (corpus, report) = pipeline::load_sessions(&sessions, &cfg)?;
                report_parse(&sessions, &report);
                pipeline::run_phase2(&corpus, &intermediate, &cfg)
            })??;
            eprintln!(
                "positives: {}, negatives: {}",
                result.positives.len(),
                result.negatives.len()
            );
            if let Some(path) = out_scores {
                save_scores(&scores, &path)?;
            }
            save_scores(&result.positives, &out_positives)?;
            save_scores(&result.negatives, &out_negatives)
        }
        Command::Expand {
            sessions,
            seeds,
            out_dir,
            config,
        } => {
            let cfg = config.resolve()?;
            let seeds = load_seeds(&seeds)?;
            let expansion = with_threads(config.threads, || -> Result<_> {
                let (corpus, report) = pipeline::load_sessions(&sessions, &cfg)?;
                report_parse(&sessions, &report);
                pipeline::expand(&corpus, &seeds, &cfg)
            })??;
            report_dropped(&expansion.dropped_seeds);
            eprintln!(
                "diagnostic ngrams: {}, intermediate: {}, positives: {}, negatives: {}",
                expansion.diagnostic.len(),
                expansion.intermediate.len(),
                expansion.result.positives.len(),
                expansion.result.negatives.len()
            );
            expansion.save(&out_dir)
        }
        Command::Explain {
            graph,
            query,
            ngram,
            diagnostic,
            seeds,
            config,
        } => {
            let cfg = config.resolve()?;
            let graph = BipartiteGraph::load(&graph)?;
            let trace = match (query, ngram, diagnostic, seeds) {
                (Some(q), None, Some(f), _) => {
                    let q = Query::parse(&q).ok_or_else(|| Error::Config("empty query".into()))?;
                    let f = WeightedSet::load(&f, Side::Ngram)?;
                    explain_query(&graph, &f, q.as_str(), &cfg.phase1())?
                }
                (None, Some(n), _, Some(s)) => {
                    let n = Query::parse(&n).ok_or_else(|| Error::Config("empty ngram".into()))?;
                    explain_ngram(&graph, &load_seeds(&s)?, n.as_str(), &cfg.phase1())?
                }
                _ => {
                    return Err(Error::Config(
                        "give --query with --diagnostic, or --ngram with --seeds".into(),
                    ))
                }
            };
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            trace
                .write_tsv(&mut out)
                .and_then(|()| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
        Command::GenCorpus {
            spec,
            out_sessions,
            out_truth,
        } => {
            let spec = CorpusSpec::load(&spec)?;
            let (corpus, truth) = generate_corpus(&spec)?;
            eprintln!(
                "sessions: {}, unique queries: {}",
                corpus.session_count(),
                truth.len()
            );
            tsv::write_file(&out_sessions, |w| write_sessions(&corpus, w))?;
            tsv::write_file(&out_truth, |w| write_ground_truth(&truth, w))
        }
        Command::HybridTrain {
            positives,
            negatives,
            out,
        } => {
            let p = load_query_set(&positives)?;
            let n = load_query_set(&negatives)?;
            let model = train_baseline_scorer(&p, &n)?;
            eprintln!("vocabulary: {} ngrams", model.vocabulary_size());
            model.save(&out)
        }
        Command::HybridDiff {
            positives,
            negatives,
            model,
            out,
        } => {
            let p = load_query_set(&positives)?;
            let n = load_query_set(&negatives)?;
            let model = NaiveBayesScorer::load(&model)?;
            let table = build_disagreement_table(&p, &n, &model);
            eprintln!(
                "disagreements: {} of {} training queries",
                table.len(),
                p.len() + n.len()
            );
            table.save(&out)
        }
        Command::HybridClassify {
            model,
            table,
            input,
        } => {
            let model = NaiveBayesScorer::load(&model)?;
            let table = DisagreementTable::load(&table)?;
            let lines: Vec<String> = match &input {
                Some(path) => tsv::read_lines(path)?.into_iter().map(|(_, l)| l).collect(),
                None => std::io::stdin()
                    .lock()
                    .lines()
                    .collect::<std::io::Result<_>>()
                    .map_err(|e| Error::io("<stdin>", e))?,
            };
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            for line in lines {
                let Some(q) = Query::parse(&line) else {
                    continue;
                };
                writeln!(out, "{q}\t{}", hybrid_classify(&q, &table, &model))
                    .map_err(|e| Error::io("<stdout>", e))?;
            }
            out.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}
