//! `laughtrack` command-line interface.
//!
//! Exit codes: 0 success, 1 input error, 2 invariant violation, 3 internal
//! error.

mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use laughtrack::config::PipelineConfig;

#[derive(Parser, Debug)]
#[command(name = "laughtrack", version, about = "Multimodal alignment and laughter analytics for stand-up recordings")]
struct Cli {
    /// Configuration file (`key = value` lines); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration entry, e.g. `--set gbdt.n_rounds=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a subtitle file into duration-targeted text blocks (JSON lines).
    ParseSubs(ParseSubsArgs),
    /// Merge laughter window scores into events (JSON lines).
    MergeLaughs(MergeLaughsArgs),
    /// Compute smoothed kinematic signals from pose frames (JSON lines).
    Kinematics(KinematicsArgs),
    /// Build one unified JSON per show from a raw corpus directory.
    Align(CorpusArgs),
    /// Topic-model diagnostics, coherence, model selection and outlier reduction.
    TopicEval(TopicEvalArgs),
    /// Topic-level laughter profiles, correlations and clustermap.
    Analyze(AnalyzeArgs),
    /// Laughter-onset prediction benchmark with feature-group ablation.
    OnsetBench(OnsetArgs),
    /// Run align, topic-eval, kinematics, analyze and onset-bench on a corpus.
    All(CorpusArgs),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct ParseSubsArgs {
    /// Subtitle file (.srt or .vtt).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    target_duration: Option<f64>,
    /// Extra filler words or phrases, one per line.
    #[arg(long)]
    filler_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MergeLaughsArgs {
    /// Window scores, one JSON object per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct KinematicsArgs {
    /// Pose frames, one JSON object per line.
    #[arg(long)]
    input: PathBuf,
    /// Shot frames used to keep only wide shots.
    #[arg(long)]
    shots: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Smoothing window in seconds.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Raw corpus directory (one subdirectory per show).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TopicEvalArgs {
    /// Directory of candidate models, one subdirectory per block size in
    /// seconds, each with assignments.jsonl, descriptors.json, documents.jsonl.
    #[arg(long, conflicts_with = "assignments")]
    candidates: Option<PathBuf>,
    /// Assignments of a single model.
    #[arg(long, requires = "descriptors")]
    assignments: Option<PathBuf>,
    #[arg(long)]
    descriptors: Option<PathBuf>,
    /// Text blocks with tokens used as coherence documents.
    #[arg(long)]
    documents: Option<PathBuf>,
    /// Score coherence on a seeded subsample of this many documents.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    centroid_threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Directory of unified show JSONs, or a raw corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated feature names.
    #[arg(long)]
    features: Option<String>,
}

#[derive(Args, Debug)]
struct OnsetArgs {
    /// Directory of unified show JSONs, or a raw corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// history, text, vision, text+vision or all (repeatable). `all` alone
    /// means the full feature set; without the flag every row is run.
    #[arg(long = "feature-set")]
    feature_sets: Vec<String>,
    /// gbdt or logistic.
    #[arg(long)]
    model: Option<String>,
    /// Also write anchors.csv with every anchor's features.
    #[arg(long)]
    dump_anchors: bool,
    /// Shuffle training and validation labels (chance-level control).
    #[arg(long)]
    permute_labels: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    shows: usize,
    /// Show length in seconds.
    #[arg(long, default_value_t = 2400.0)]
    duration: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    topics: usize,
    /// Write raw window scores instead of merged laughter events.
    #[arg(long)]
    windows: bool,
}

fn load_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| laughtrack::Error::InvalidInput(format!("--set expects KEY=VALUE, got {o:?}")))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn set_opt<T: ToString>(cfg: &mut PipelineConfig, key: &str, v: &Option<T>) -> anyhow::Result<()> {
    if let Some(v) = v {
        cfg.set(key, &v.to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = load_config(&cli)?;
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("starting worker pool")?;
    }
    let parallel = cli.jobs != 1;
    match &cli.command {
        Command::ParseSubs(a) => {
            set_opt(&mut cfg, "target_duration", &a.target_duration)?;
            if let Some(f) = &a.filler_file {
                cfg.filler_file = Some(f.clone());
            }
            cfg.validate()?;
            stages::parse_subs(&cfg, &a.input, &a.out)
        }
        Command::MergeLaughs(a) => {
            set_opt(&mut cfg, "laugh_threshold", &a.threshold)?;
            cfg.validate()?;
            stages::merge_laughs(&cfg, &a.input, &a.out)
        }
        Command::Kinematics(a) => {
            set_opt(&mut cfg, "smoothing_window", &a.window)?;
            cfg.validate()?;
            stages::kinematics(&cfg, &a.input, a.shots.as_deref(), &a.out)
        }
        Command::Align(a) => {
            corpus_flags(&mut cfg, a)?;
            stages::align(&cfg, parallel)
        }
        Command::TopicEval(a) => {
            set_opt(&mut cfg, "centroid_threshold", &a.centroid_threshold)?;
            cfg.validate()?;
            match (&a.candidates, &a.assignments, &a.descriptors) {
                (Some(dir), _, _) => stages::topic_candidates(dir, a.subsample, cfg.seed, &a.out),
                (None, Some(asg), Some(desc)) => {
                    stages::topic_single(&cfg, asg, desc, a.documents.as_deref(), a.subsample, &a.out)
                }
                _ => Err(laughtrack::Error::InvalidInput(
                    "topic-eval needs --candidates or --assignments with --descriptors".into(),
                )
                .into()),
            }
        }
        Command::Analyze(a) => {
            if let Some(c) = &a.corpus {
                cfg.corpus = Some(c.clone());
            }
            if let Some(o) = &a.out {
                cfg.out = Some(o.clone());
            }
            if let Some(f) = &a.features {
                cfg.set("analysis_features", f)?;
            }
            cfg.validate()?;
            stages::analyze(&cfg, parallel)
        }
        Command::OnsetBench(a) => {
            if let Some(c) = &a.corpus {
                cfg.corpus = Some(c.clone());
            }
            if let Some(o) = &a.out {
                cfg.out = Some(o.clone());
            }
            set_opt(&mut cfg, "delta", &a.delta)?;
            set_opt(&mut cfg, "step", &a.step)?;
            set_opt(&mut cfg, "history_window", &a.window)?;
            set_opt(&mut cfg, "seed", &a.seed)?;
            set_opt(&mut cfg, "model", &a.model)?;
            if !a.feature_sets.is_empty() {
                cfg.set("feature_sets", &a.feature_sets.join(","))?;
            }
            cfg.validate()?;
            stages::onset_bench(&cfg, parallel, a.dump_anchors, a.permute_labels)
        }
        Command::All(a) => {
            corpus_flags(&mut cfg, a)?;
            stages::all(&cfg, parallel)
        }
        Command::Synth(a) => stages::synth(a.shows, a.duration, a.seed, a.topics, a.windows, &a.out),
    }
}

fn corpus_flags(cfg: &mut PipelineConfig, a: &CorpusArgs) -> anyhow::Result<()> {
    if let Some(c) = &a.corpus {
        cfg.corpus = Some(c.clone());
    }
    if let Some(o) = &a.out {
        cfg.out = Some(o.clone());
    }
    set_opt(cfg, "seed", &a.seed)?;
    cfg.validate()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<laughtrack::Error>() {
        Some(laughtrack::Error::Invariant(_)) => 2,
        Some(_) => 1,
        None if err.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
