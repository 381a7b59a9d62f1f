//! `rawmuse`: tokenize MIDI, train and sample the structural-embedding
//! models, and score the results.

mod config;
mod data;
mod eval;
mod generate;
mod inputs;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "rawmuse", version, about)]
struct Cli {
    /// Required by train and generate.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with any of the sections model, train, generate, eval, augment.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (tokenize, augment) or directory (everything else).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for per-file work; defaults to one per core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a directory of MIDI files into a JSONL token corpus.
    Tokenize(CorpusArgs),
    /// Like tokenize, with every transposition and stretch variant.
    Augment(CorpusArgs),
    /// Train a model on a JSONL corpus and write a checkpoint.
    Train(TrainArgs),
    /// Continue prompts taken from the start of each piece.
    Generate(GenerateArgs),
    /// Score pieces: SI, CPVR, CPI and PNSR.
    Eval(EvalArgs),
    /// Fitness scape plots (PNG and CSV) per piece plus a compiled plot.
    Scape(InputArgs),
    /// Chord n-gram transition models from a corpus.
    NgramBuild(NgramArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Directory searched recursively for .mid/.midi files.
    dir: PathBuf,
    /// Omit the structural label streams from the records.
    #[arg(long)]
    no_labels: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// JSONL corpus from tokenize or augment.
    corpus: PathBuf,
    /// gpt2, gpt2-re or gpt2-se.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    /// Log the training loss every this many steps (0: never).
    #[arg(long, default_value_t = 100)]
    log_every: u64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Checkpoint written by train.
    checkpoint: PathBuf,
    /// MIDI directory or JSONL corpus whose pieces supply the prompts.
    prompts: PathBuf,
    /// Samples per prompt.
    #[arg(long)]
    samples: Option<usize>,
    /// Top-k support.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    horizon_ms: Option<u64>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Prompt lengths as powers of two, e.g. 4,6,8.
    #[arg(long, value_delimiter = ',')]
    prompt_exp: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// MIDI directory or JSONL corpus (generations.jsonl keeps prompt lengths).
    input: PathBuf,
    /// Directory with ngram_<n>.json from ngram-build; needed for cpvr.
    #[arg(long)]
    ngram: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = eval::DEFAULT_METRICS.map(String::from))]
    metrics: Vec<String>,
    /// Also write scape plots under <out>/scape.
    #[arg(long)]
    scape: bool,
    /// Chord window, 500 or 1000 ms.
    #[arg(long)]
    window_ms: Option<u64>,
    /// SI frame size in ms.
    #[arg(long)]
    frame_ms: Option<u64>,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// MIDI directory or JSONL corpus.
    input: PathBuf,
    #[arg(long)]
    frame_ms: Option<u64>,
}

#[derive(Debug, Args)]
struct NgramArgs {
    /// MIDI directory or JSONL corpus.
    input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    #[arg(long)]
    window_ms: Option<u64>,
}

fn required_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.with_context(|| format!("{command} needs --seed so that runs are reproducible"))
}

fn out_or(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Tokenize(a) => data::tokenize(&a.dir, &out_or(&cli.out, "corpus.jsonl"), !a.no_labels),
        Command::Augment(a) => data::augment(&a.dir, &out_or(&cli.out, "augmented.jsonl"), &cfg.augment, !a.no_labels),
        Command::Train(a) => {
            let seed = required_seed(cli.seed, "train")?;
            if let Some(v) = a.variant {
                cfg.model.variant = v;
            }
            if let Some(s) = a.steps {
                cfg.train.total_steps = s;
            }
            train::train(&a.corpus, &out_or(&cli.out, "run"), &cfg.model, &cfg.train, seed, a.log_every)
        }
        Command::Generate(a) => {
            let seed = required_seed(cli.seed, "generate")?;
            let p = &mut cfg.generate;
            p.samples = a.samples.unwrap_or(p.samples);
            p.generate.k = a.k.unwrap_or(p.generate.k);
            p.generate.horizon_ms = a.horizon_ms.unwrap_or(p.generate.horizon_ms);
            p.generate.temperature = a.temperature.unwrap_or(p.generate.temperature);
            if let Some(e) = a.prompt_exp {
                p.prompt_exponents = e;
            }
            generate::generate(&a.checkpoint, &a.prompts, &out_or(&cli.out, "samples"), p, seed)
        }
        Command::Eval(a) => {
            cfg.eval.chord_window_ms = a.window_ms.unwrap_or(cfg.eval.chord_window_ms);
            cfg.eval.si_frame_ms = a.frame_ms.unwrap_or(cfg.eval.si_frame_ms);
            let opts = eval::EvalOptions {
                metrics: &a.metrics,
                ngram_dir: a.ngram.as_deref(),
                scape: a.scape,
            };
            eval::eval(&a.input, &out_or(&cli.out, "eval"), &cfg.eval, &opts)
        }
        Command::Scape(a) => {
            cfg.eval.si_frame_ms = a.frame_ms.unwrap_or(cfg.eval.si_frame_ms);
            eval::scape(&a.input, &out_or(&cli.out, "scape"), &cfg.eval)
        }
        Command::NgramBuild(a) => {
            let orders = a.orders.unwrap_or_else(|| cfg.eval.ngram_orders.clone());
            let window = a.window_ms.unwrap_or(cfg.eval.chord_window_ms);
            data::ngram_build(&a.input, &out_or(&cli.out, "ngram"), &orders, window)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

