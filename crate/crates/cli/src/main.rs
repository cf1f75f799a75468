use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use simprobe_core::corpus::{pair_count, write_corpus};
use simprobe_core::harness::run::{corpus_notes, load_fit_table, DISSIM_FILE};
use simprobe_core::harness::{compare_tables, run_experiment, EmbeddingCache, ExperimentConfig, RunOptions, BUILTIN_NAMES};
use simprobe_core::oracle::PRESETS;
use simprobe_core::similarity::DissimilarityMatrix;

#[derive(Parser)]
#[command(name = "simprobe", version, about = "Probe sentence encoders with templated corpora and pairwise regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an experiment's corpus as JSON lines.
    Generate {
        /// Built-in experiment name or path to a TOML config.
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed, fit, and write a run directory per encoder.
    Run {
        #[arg(long)]
        experiment: String,
        /// Comma-separated encoder ids; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        encoders: Vec<String>,
        /// Encoder server root, e.g. http://localhost:8080.
        #[arg(long, env = "SIMPROBE_ENDPOINT")]
        endpoint: Option<String>,
        /// Embedding cache file; defaults to <runs>/cache.jsonl.
        #[arg(long, env = "SIMPROBE_CACHE")]
        cache: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        /// Skip writing design.tsv.
        #[arg(long)]
        no_design: bool,
    },
    /// Show the fits of a run, optionally next to another run's.
    Report {
        /// Run directory or fit.tsv file.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Write a run's dissimilarity matrix as tab-separated text.
    ExportDissim {
        #[arg(long)]
        run: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in experiments and oracle presets.
    List,
    /// Print an experiment's configuration as TOML.
    ShowConfig {
        #[arg(long)]
        experiment: String,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_config(experiment: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::resolve(experiment)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { experiment, seed, out } => {
            let config = load_config(&experiment, seed)?;
            let corpus = config.corpus.generate(config.seed)?;
            write_corpus(output(out.as_deref())?, &corpus)?;
            eprintln!(
                "{}: {} sentences, {} pairs",
                config.name,
                corpus.len(),
                pair_count(corpus.len())
            );
            for note in corpus_notes(&config, &corpus) {
                eprintln!("note: {note}");
            }
        }
        Command::Run {
            experiment,
            encoders,
            endpoint,
            cache,
            runs,
            seed,
            batch_size,
            no_design,
        } => {
            let config = load_config(&experiment, seed)?;
            let cache_path = cache.unwrap_or_else(|| runs.join("cache.jsonl"));
            let cache = EmbeddingCache::open(&cache_path)
                .with_context(|| format!("opening cache {}", cache_path.display()))?;
            let opts = RunOptions {
                runs_dir: runs,
                endpoint,
                cache: Some(Arc::new(cache)),
                batch_size,
                write_design: !no_design,
            };
            let summary = run_experiment(&config, &encoders, &opts)?;
            println!(
                "{}: {} sentences, {} pairs",
                summary.experiment, summary.sentences, summary.pairs
            );
            for note in &summary.notes {
                println!("note: {note}");
            }
            for run in &summary.encoders {
                println!();
                println!("== {} ({})", run.encoder, run.dir.display());
                print!("{}", run.table.render_text());
            }
        }
        Command::Report { run, compare } => {
            let a = load_fit_table(&run)?;
            match compare {
                None => print!("{}", a.render_text()),
                Some(other) => {
                    let b = load_fit_table(&other)?;
                    let label = |t: &simprobe_core::regress::report::FitTable, fallback: &str| {
                        t.meta("experiment").unwrap_or(fallback).to_string()
                    };
                    let (la, lb) = (label(&a, "a"), label(&b, "b"));
                    let (la, lb) = if la == lb { ("a".to_string(), "b".to_string()) } else { (la, lb) };
                    for report in compare_tables(&a, &b)? {
                        print!("{}", report.render_text(&la, &lb));
                        println!();
                    }
                }
            }
        }
        Command::ExportDissim { run, out } => {
            let file = if run.is_dir() { run.join(DISSIM_FILE) } else { run };
            if !file.is_file() {
                bail!("{} not found", file.display());
            }
            let matrix = DissimilarityMatrix::read_binary(io::BufReader::new(File::open(&file)?))
                .with_context(|| format!("reading {}", file.display()))?;
            matrix.write_text(output(out.as_deref())?)?;
        }
        Command::List => {
            println!("experiments:");
            for name in BUILTIN_NAMES {
                println!("  {name}");
            }
            println!("oracle encoders:");
            for name in PRESETS {
                println!("  oracle:{name}");
            }
        }
        Command::ShowConfig { experiment } => {
            print!("{}", ExperimentConfig::resolve(&experiment)?.to_toml()?);
        }
    }
    Ok(())
}
