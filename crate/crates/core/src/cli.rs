//! Command-line front end: `ingest`, `index`, `query`, `bench`, `stats`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::engine::{answer_sk_query, Answer, BoundPolicy, EngineConfig, SeedPolicy, Strategy};
use crate::error::{Result, SkqError};
use crate::exec::Execution;
use crate::graph::{ingest_ntriples, load_store, save_store, RdfGraph, VertexKind};
use crate::query::SkQuery;
use crate::report;
use crate::star_index::{IndexBundle, IndexParams};

#[derive(Debug, Parser)]
#[command(name = "skq", version, about = "Top-k SPARQL-and-keyword search over RDF graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an N-Triples file into a binary graph store.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Build the star and keyword indexes for a store.
    Index(IndexArgs),
    /// Answer one query.
    Query(QueryArgs),
    /// Run every query in a directory under all strategies and cross-check.
    Bench(BenchArgs),
    /// Print graph and index statistics.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        index: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    /// Minimum support of stars with more than one label.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub minsup: Option<u64>,
    #[arg(long, value_parser = parse_gamma, default_value_t = IndexParams::DEFAULT_GAMMA_MAX)]
    pub gamma_max: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=16), default_value_t = IndexParams::DEFAULT_MAX_PATTERN_LEN as u64)]
    pub max_pattern_len: u64,
    /// Build on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long, value_parser = parse_alpha, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["indexed", "naive", "exhaustive"]), default_value = "indexed")]
    pub strategy: String,
    /// Seed keyword vertices at zero instead of their content cost.
    #[arg(long)]
    pub strict_seed_zero: bool,
    /// Use the published min-of-sums lower bounds.
    #[arg(long)]
    pub paper_lb: bool,
    /// Require distinct vertices for distinct query nodes.
    #[arg(long)]
    pub injective: bool,
}

impl EngineArgs {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            alpha: self.alpha,
            strategy: self.strategy.parse().expect("restricted by clap"),
            seed_policy: if self.strict_seed_zero {
                SeedPolicy::Zero
            } else {
                SeedPolicy::ContentCost
            },
            bound_policy: if self.paper_lb {
                BoundPolicy::Published
            } else {
                BoundPolicy::Componentwise
            },
            injective: self.injective,
            early_stop: true,
            k: self.k.map(|k| k as usize),
        }
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    /// File holding the query text.
    #[arg(long, conflicts_with = "text")]
    pub query_file: Option<PathBuf>,
    /// Inline query text.
    #[arg(required_unless_present = "query_file")]
    pub text: Option<String>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    /// Directory of query files, one query per file.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = 1)]
    pub repetitions: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, value_parser = parse_alpha, default_value_t = 1.0)]
    pub alpha: f64,
}

fn parse_gamma(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("gamma-max must be in (0, 1], got {v}"))
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("alpha must be a nonnegative number, got {v}"))
    }
}

/// Parses arguments and runs; returns the process exit code. Usage errors
/// are printed by clap and map to 2.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| SkqError::io("<stdout>", e);
    match command {
        Command::Ingest { input, store } => {
            let file = File::open(&input).map_err(|e| SkqError::io(&input, e))?;
            let graph = ingest_ntriples(BufReader::new(file))?;
            save_store(&graph, &store)?;
            writeln!(
                out,
                "{} vertices, {} edges, {} predicates",
                graph.num_vertices(),
                graph.num_edges(),
                graph.num_predicates()
            )
            .map_err(io)
        }
        Command::Index(args) => {
            let graph = load_store(&args.store)?;
            let mut params = IndexParams::for_graph(&graph);
            if let Some(m) = args.minsup {
                params.minsup = m as usize;
            }
            params.gamma_max = args.gamma_max;
            params.max_pattern_len = args.max_pattern_len as usize;
            let exec = if args.sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let started = Instant::now();
            let bundle = IndexBundle::build(&graph, params, exec);
            let seconds = started.elapsed().as_secs_f64();
            let bytes = bundle.save(&args.index)?;
            log::info!("index built with minsup={} gamma_max={}", params.minsup, params.gamma_max);
            writeln!(out, "index patterns={} bytes={bytes}", bundle.star.selected().len()).map_err(io)?;
            report::write_timing(out, seconds).map_err(io)
        }
        Command::Query(args) => {
            let graph = load_store(&args.store)?;
            let index = IndexBundle::load(&args.index, &graph)?;
            let text = match (&args.query_file, &args.text) {
                (Some(path), _) => fs::read_to_string(path).map_err(|e| SkqError::io(path, e))?,
                (None, Some(t)) => t.clone(),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let query = SkQuery::parse(&text)?;
            let started = Instant::now();
            let answer = answer_sk_query(&graph, &index, &query, &args.engine.config())?;
            let seconds = started.elapsed().as_secs_f64();
            report::write_answer(out, &graph, &answer).map_err(io)?;
            report::write_timing(out, seconds).map_err(io)
        }
        Command::Bench(args) => bench(&args, out),
        Command::Stats { store, index } => {
            let graph = load_store(&store)?;
            write_stats(out, &graph).map_err(io)?;
            if let Some(path) = index {
                let bundle = IndexBundle::load(&path, &graph)?;
                let p = bundle.star.params();
                let largest = bundle.star.selected().iter().map(|s| s.len()).max().unwrap_or(0);
                writeln!(
                    out,
                    "index patterns={} largest={largest} minsup={} gamma_max={} tokens={}",
                    bundle.star.selected().len(),
                    p.minsup,
                    p.gamma_max,
                    bundle.keywords.num_tokens()
                )
                .map_err(io)?;
            }
            Ok(())
        }
    }
}

fn write_stats(out: &mut dyn Write, graph: &RdfGraph) -> std::io::Result<()> {
    writeln!(
        out,
        "graph vertices={} edges={} predicates={} entities={} classes={} literals={}",
        graph.num_vertices(),
        graph.num_edges(),
        graph.num_predicates(),
        graph.count_kind(VertexKind::Entity),
        graph.count_kind(VertexKind::Class),
        graph.count_kind(VertexKind::Literal)
    )?;
    for p in graph.predicate_ids() {
        writeln!(out, "predicate name={} salience={:.6}", graph.predicate_name(p), graph.salience(p))?;
    }
    Ok(())
}

fn query_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| SkqError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(SkqError::InvalidQuery(format!("no query files in {}", dir.display())));
    }
    Ok(files)
}

fn format_costs(answer: &Answer) -> String {
    let costs: Vec<String> = answer.costs().iter().map(|c| format!("{c:.6}")).collect();
    format!("[{}]", costs.join(","))
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| SkqError::io("<stdout>", e);
    let graph = load_store(&args.store)?;
    let index = IndexBundle::load(&args.index, &graph)?;
    let files = query_files(&args.queries)?;
    for path in &files {
        let text = fs::read_to_string(path).map_err(|e| SkqError::io(path, e))?;
        let query = SkQuery::parse(&text)?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let mut reference: Option<(Strategy, Answer)> = None;
        for strategy in Strategy::ALL {
            let config = EngineConfig {
                alpha: args.alpha,
                k: args.k.map(|k| k as usize),
                ..EngineConfig::with_strategy(strategy)
            };
            let mut best = f64::INFINITY;
            let mut answer = None;
            for _ in 0..args.repetitions {
                let started = Instant::now();
                let a = answer_sk_query(&graph, &index, &query, &config)?;
                best = best.min(started.elapsed().as_secs_f64());
                answer = Some(a);
            }
            let answer = answer.expect("at least one repetition");
            let c = answer.counters;
            writeln!(
                out,
                "bench query={name} strategy={} k={} costs={} outcome={} pops={} relaxations={} matcher_calls={} matches={}",
                strategy.name(),
                config.k.unwrap_or(query.k),
                format_costs(&answer),
                answer.outcome.name(),
                c.pops,
                c.relaxations,
                c.matcher_calls,
                c.matches
            )
            .map_err(io)?;
            writeln!(out, "timing query={name} strategy={} seconds={best:.6}", strategy.name()).map_err(io)?;
            if let Some((first, ref_answer)) = &reference {
                if !same_results(ref_answer, &answer) {
                    return Err(SkqError::Invariant(format!(
                        "{name}: {} returned {} but {} returned {}",
                        strategy.name(),
                        format_costs(&answer),
                        first.name(),
                        format_costs(ref_answer)
                    )));
                }
            } else {
                reference = Some((strategy, answer));
            }
        }
    }
    writeln!(out, "bench queries={} agree=true", files.len()).map_err(io)
}

fn same_results(a: &Answer, b: &Answer) -> bool {
    a.results.len() == b.results.len()
        && a.results
            .iter()
            .zip(&b.results)
            .all(|(x, y)| (x.total - y.total).abs() <= 1e-9 && x.binding == y.binding)
}
