use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use kgrag_core::exec::{execute_program, to_natural_language};
use kgrag_core::kg::{load_kg, service::serve_kg};
use kgrag_core::kgql::{dialect_registry, format_program, parse_program_with};
use kgrag_core::llm::{token_counter_registry, ClientSet};
use kgrag_core::pipeline::{read_cases, read_results, run_batch, summarize, write_results, BatchConfig, PipelineDeps};
use kgrag_core::public_data::{ingest_file, load_index, write_index, Domain, IngestMapping};
use kgrag_core::registry::BackendOptions;
use kgrag_core::sft::{build_sft_dataset, read_examples, stats_path};
use kgrag_core::web::{
    embedder_registry, preselect_pages, rerank, reranker_registry, retrieve_children, split_page_chunks,
    RetrievalConfig, WebPage,
};

/// Knowledge-graph and web retrieval question answering.
#[derive(Debug, Parser)]
#[command(name = "kgrag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Backends {
    /// Embedder backend for child-chunk recall.
    #[arg(long, default_value = "hashed-tf")]
    embedder: String,
    /// Reranker backend for parents and page snippets.
    #[arg(long, default_value = "term-overlap")]
    reranker: String,
}

#[derive(Debug, clap::Args)]
struct RetrievalArgs {
    #[arg(long, default_value_t = 700)]
    parent_size: usize,
    #[arg(long, default_value_t = 200)]
    child_size: usize,
    #[arg(long, default_value_t = 50)]
    recall_k: usize,
    #[arg(long, default_value_t = 10)]
    rerank_k: usize,
}

impl RetrievalArgs {
    fn config(&self) -> Result<RetrievalConfig> {
        let cfg = RetrievalConfig {
            parent_chunk_size: self.parent_size,
            child_chunk_size: self.child_size,
            recall_k: self.recall_k,
            reranker_k: self.rerank_k,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a KGQL program and print its AST and canonical form.
    Parse {
        #[arg(long)]
        query: String,
        #[arg(long, default_value = "movie")]
        dialect: String,
    },
    /// Run a KGQL program against a knowledge-graph fixture.
    Exec {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Serve coarse lookups over HTTP (POST /coarse_get).
    ServeKg {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8000")]
        listen: String,
    },
    /// Rank parent chunks of a page set for a query.
    Retrieve {
        #[arg(long)]
        query: String,
        /// JSONL of {"page_id", "snippet", "html"}.
        #[arg(long)]
        pages: PathBuf,
        /// Preselect the top five pages by snippet first.
        #[arg(long)]
        preselect: bool,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        backends: Backends,
    },
    /// Turn a CSV/JSON dataset into an entity paragraph index.
    Ingest {
        #[arg(long)]
        domain: Domain,
        #[arg(long)]
        input: PathBuf,
        /// TOML column mapping.
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label training examples and write a fine-tuning dataset.
    GenSft {
        #[arg(long)]
        examples: PathBuf,
        /// Client config (TOML) for the judge.
        #[arg(long)]
        judge: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer a case file and print the summary.
    Answer {
        #[arg(long)]
        cases: PathBuf,
        /// Task for every case, overriding the case file.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        task: Option<u8>,
        /// Knowledge-graph fixture (tasks 2 and 3).
        #[arg(long)]
        kg: Option<PathBuf>,
        /// Client config (TOML) for generation.
        #[arg(long)]
        llm: PathBuf,
        /// Entity paragraph index for task 1; repeat for several domains.
        #[arg(long)]
        public_index: Vec<PathBuf>,
        /// Client config used to judge answers instead of exact match.
        #[arg(long)]
        judge: Option<PathBuf>,
        #[arg(long, default_value_t = 30.0)]
        deadline_secs: f64,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        /// Include per-case elapsed milliseconds in the results.
        #[arg(long)]
        record_timing: bool,
        #[arg(long, default_value_t = 75)]
        token_limit: usize,
        #[arg(long, default_value = "word-piece")]
        token_counter: String,
        /// Results JSONL.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        backends: Backends,
    },
    /// Summarize a results file.
    Eval {
        #[arg(long)]
        results: PathBuf,
    },
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_pages(path: &Path) -> Result<Vec<WebPage>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Parse { query, dialect } => {
            let dialect = dialect_registry().build_default(&dialect)?;
            match parse_program_with(&query, dialect.as_ref()) {
                Ok(program) => print_json(&json!({"ast": program, "canonical": format_program(&program)})),
                Err(e) => {
                    print_json(&json!({"error": e}))?;
                    std::process::exit(1)
                }
            }
        }
        Command::Exec { fixture, query } => {
            let db = load_kg(&fixture)?;
            let program = parse_program_with(&query, dialect_registry().build_default("movie")?.as_ref())?;
            let results = execute_program(&program, &db)?;
            let text = to_natural_language(&results, &program);
            print_json(&json!({"results": results, "text": text}))
        }
        Command::ServeKg { fixture, listen } => {
            let db = Arc::new(load_kg(&fixture)?);
            let handle = serve_kg(db, &listen)?;
            eprintln!("serving coarse lookups on {}", handle.url());
            handle.join();
            Ok(())
        }
        Command::Retrieve {
            query,
            pages,
            preselect,
            retrieval,
            backends,
        } => {
            let cfg = retrieval.config()?;
            let embedder = embedder_registry().build_default(&backends.embedder)?;
            let reranker = reranker_registry().build_default(&backends.reranker)?;
            let mut pages = read_pages(&pages)?;
            if preselect {
                pages = preselect_pages(&query, &pages, reranker.as_ref()).items;
            }
            let chunks: Vec<_> = pages
                .iter()
                .flat_map(|p| split_page_chunks(&p.page_id, &p.text(), &cfg))
                .collect();
            if chunks.is_empty() {
                return print_json(&json!({"parents": [], "degraded": false}));
            }
            let parents = retrieve_children(&query, &chunks, embedder.as_ref(), cfg.recall_k)?;
            let ranked = rerank(&query, &parents, reranker.as_ref(), cfg.reranker_k);
            print_json(&json!({"parents": ranked.items, "degraded": ranked.degraded}))
        }
        Command::Ingest {
            domain,
            input,
            mapping,
            out,
        } => {
            let mapping = IngestMapping::load(&mapping)?;
            let docs = ingest_file(domain, &input, &mapping)?;
            write_index(&out, &docs)?;
            print_json(&json!({"domain": domain, "docs": docs.len(), "out": out}))
        }
        Command::GenSft { examples, judge, out } => {
            let examples = read_examples(&examples)?;
            let judge = ClientSet::load(&judge)?;
            let stats = build_sft_dataset(&examples, &judge, &out)?;
            eprintln!("wrote {} and {}", out.display(), stats_path(&out).display());
            print_json(&stats)
        }
        Command::Answer {
            cases,
            task,
            kg,
            llm,
            public_index,
            judge,
            deadline_secs,
            parallelism,
            record_timing,
            token_limit,
            token_counter,
            out,
            retrieval,
            backends,
        } => {
            if !(deadline_secs >= 0.0 && deadline_secs.is_finite()) {
                bail!("--deadline-secs must be a non-negative number");
            }
            if token_limit == 0 {
                bail!("--token-limit must be positive");
            }
            let cases = read_cases(&cases, task)?;
            let mut deps = PipelineDeps::new(ClientSet::load(&llm)?);
            deps.embedder = embedder_registry().build(&backends.embedder, &BackendOptions::default())?;
            deps.reranker = reranker_registry().build_default(&backends.reranker)?;
            deps.counter = token_counter_registry().build_default(&token_counter)?;
            deps.retrieval = retrieval.config()?;
            deps.token_limit = token_limit;
            if let Some(kg) = kg {
                deps.kg = Some(Arc::new(load_kg(&kg)?));
            }
            for index in public_index {
                deps.public_index.extend(load_index(&index)?);
            }
            if let Some(judge) = judge {
                deps.judge = Some(ClientSet::load(&judge)?);
            }
            let config = BatchConfig {
                deadline: Duration::from_secs_f64(deadline_secs),
                parallelism: parallelism.max(1),
                record_timing,
                task_override: task,
            };
            let records = run_batch(&cases, &deps, &config)?;
            write_results(&out, &records)?;
            print_json(&summarize(&records))
        }
        Command::Eval { results } => print_json(&summarize(&read_results(&results)?)),
    }
}
