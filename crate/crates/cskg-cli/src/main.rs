//! `cskg`: one binary orchestrating the KG pipelines — ingestion and
//! curation, normalized-key dumps, pairwise coverage comparison, adversarial
//! splits, generation scoring, HIT sampling, vote aggregation, LM export
//! formats, and corpus statistics.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cskg", version, about = "Commonsense knowledge-graph toolkit")]
pub(crate) struct Cli {
    /// Directory overriding the shipped data files (relations.tsv,
    /// mapping.tsv, templates.tsv, stopwords.txt, lemmas.tsv, curation.tsv,
    /// cognates.tsv). Also reachable via the CSKG_DATA_DIR env var.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,

    /// Worker threads for parallel sections (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// TOML config file supplying defaults; flags always win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Top-level seed fanned out to per-module substreams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub(crate) struct MappingArgs {
    /// Relation mapping override (tabular text, see mapping.tsv).
    #[arg(long)]
    mapping: Option<PathBuf>,

    /// Multi-target matching mode: all-targets or primary-only.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Subcommand)]
pub(crate) enum Command {
    /// Parse a KG dump into canonical tuple JSONL, with filtering and
    /// optional curation.
    Ingest {
        /// conceptnet-edges | generic-jsonl | atomic-tsv
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Source KG id (defaults: conceptnet/atomic by format; required for
        /// generic-jsonl).
        #[arg(long)]
        kg: Option<String>,
        /// conceptnet | transomcs | atomic — paper-rule filter presets.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        english_only: bool,
        #[arg(long)]
        min_weight: Option<f64>,
        /// Keep records whose weight equals the threshold (confidence-style
        /// filters) instead of rejecting them (edge-weight-style).
        #[arg(long)]
        keep_equal_weight: bool,
        /// Comma-separated relation whitelist.
        #[arg(long)]
        whitelist: Option<String>,
        /// Comma-separated relation blacklist.
        #[arg(long)]
        blacklist: Option<String>,
        #[arg(long)]
        dedup: bool,
        /// Apply the curation pass (removal list, pattern rules, remapping).
        #[arg(long)]
        curate: bool,
        /// Curation rule file override.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Where to write the ingest report JSON (default: stderr summary).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        mapping: MappingArgs,
    },

    /// Dump the normalized-key stream of a corpus as JSONL.
    Normalize {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kg: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        mapping: MappingArgs,
    },

    /// Pairwise coverage precision/recall, or a full matrix with repeated
    /// --input NAME=FILE.
    Compare {
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        source_kg: Option<String>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        target_kg: Option<String>,
        /// NAME=FILE pairs for matrix mode (at least two).
        #[arg(long = "input")]
        inputs: Vec<String>,
        /// json | tsv
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        mapping: MappingArgs,
    },

    /// Head-disjoint train/dev/test split.
    Split {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kg: Option<String>,
        /// train,dev,test ratios summing to 1.
        #[arg(long)]
        ratios: Option<String>,
        /// Max tuples per dev/test head.
        #[arg(long)]
        cap: Option<u64>,
        #[arg(long)]
        min_confidence: Option<f64>,
        #[arg(long)]
        preserve_upstream: bool,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },

    /// Score generated tails (BLEU, ROUGE-L, METEOR, CIDEr).
    Score {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kg: Option<String>,
        #[arg(long)]
        per_relation: bool,
        /// json | tsv
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Sample tuples into same-relation HITs of five and render prompts.
    SampleHits {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kg: Option<String>,
        #[arg(short = 'n', long)]
        count: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Aggregate worker ratings into final labels, kappa, and accuracy
    /// breakdowns.
    AggregateVotes {
        #[arg(long)]
        ratings: Option<PathBuf>,
        #[arg(long)]
        hits: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Accuracy-breakdown TSV output (optional).
        #[arg(long)]
        breakdown: Option<PathBuf>,
        /// Baseline KG for significance flags.
        #[arg(long)]
        baseline: Option<String>,
        /// binarized | raw-likert
        #[arg(long)]
        kappa_mode: Option<String>,
        /// Ratings per tuple for the kappa matrix.
        #[arg(long)]
        raters: Option<usize>,
    },

    /// Export LM training lines (`HEAD RELATION [GEN] TAIL [SEP]`).
    ExportTraining {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kg: Option<String>,
        /// Restrict to one split tag (train/dev/test).
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Export zero-shot prefixes, or one few-shot priming block.
    ExportPrompts {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kg: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Few-shot mode: relation to prime.
        #[arg(long)]
        fewshot: Option<String>,
        /// Few-shot mode: query head for the final prefix line.
        #[arg(long)]
        query_head: Option<String>,
        /// Few-shot examples per block.
        #[arg(short = 'k', long)]
        k: Option<usize>,
    },

    /// Per-relation tuple counts with category rollups.
    Stats {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kg: Option<String>,
        /// json | tsv
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Run a configured sequence of stages from a TOML file.
    Pipeline {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // configuration/validation problems exit 2, runtime failures 1
            let config_error = err
                .downcast_ref::<cskg::Error>()
                .is_some_and(|e| matches!(e, cskg::Error::Config(_) | cskg::Error::Invalid { .. }))
                || err.downcast_ref::<config::ConfigError>().is_some();
            if config_error {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(dir) = &cli.data_dir {
        std::env::set_var(cskg::data::DATA_DIR_ENV, dir);
    }
    let file_config = config::load(cli.config.as_deref())?;
    if let Some(threads) = cli.threads.or(file_config.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }
    if let Some(dir) = file_config.data_dir.as_ref().filter(|_| cli.data_dir.is_none()) {
        std::env::set_var(cskg::data::DATA_DIR_ENV, dir);
    }
    let seed = cli.seed.or(file_config.seed).unwrap_or(0);

    let ctx = commands::Context {
        seed,
        file: file_config,
    };
    commands::dispatch(cli.command, ctx)
}
