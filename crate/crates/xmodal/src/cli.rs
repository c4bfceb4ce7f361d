use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use xmodal_core::training::StageId;

use crate::commands;
use crate::error::{Failure, Result};

#[derive(Parser, Debug)]
#[command(
    name = "xmodal",
    version,
    about = "Speech-to-text-embedding adapter toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Corpus preparation.
    #[command(subcommand)]
    Prep(Prep),
    /// Synthetic data.
    #[command(subcommand)]
    Synth(Synth),
    /// Train one stage: stage1, stage2, stage3 or joint.
    Train {
        stage: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate embeddings and cut them at the EOS threshold.
    Infer(InferArgs),
    /// Scoring.
    #[command(subcommand)]
    Eval(Eval),
    /// Reference systems.
    #[command(subcommand)]
    Baseline(Baseline),
}

#[derive(Subcommand, Debug)]
pub enum Prep {
    /// Drop records whose ASR hypothesis is too far from the article body.
    Filter {
        #[arg(long)]
        manifest: PathBuf,
        /// JSON lines of {"id", "text"}.
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long, default_value_t = 0.45)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded train/dev/test split.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "0.8,0.1,0.1")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to the manifest's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum Synth {
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct InferArgs {
    /// One `[L, d_in]` feature file.
    #[arg(
        long,
        required_unless_present = "manifest",
        conflicts_with = "manifest"
    )]
    pub features: Option<PathBuf>,
    /// Every record of a manifest instead of a single file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub pi: Option<f64>,
    #[arg(long)]
    pub tmax: Option<usize>,
    /// Output file, or output directory with `--manifest`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Eval {
    Rouge {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// Score line-aligned documents and report mean ± 95% interval.
        #[arg(long)]
        multi: bool,
    },
    Wer {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        multi: bool,
    },
    Pwcca {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum Baseline {
    /// Centroid sentence selection under a word budget.
    Extractive {
        /// A text document, or a manifest with `--manifest`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        manifest: bool,
        #[arg(long, default_value_t = 24)]
        w_bar: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn stage_arg(s: &str) -> Result<StageId> {
    match s {
        "stage1" | "stage2" | "stage3" | "joint" => Ok(StageId::parse(s).expect("known name")),
        other => Err(Failure::config(format!(
            "unknown stage `{other}` (expected stage1, stage2, stage3 or joint)"
        ))),
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prep(Prep::Filter {
            manifest,
            hyp,
            threshold,
            out,
        }) => {
            commands::prep_filter(&manifest, &hyp, threshold, &out).map_err(|e| e.context("prep"))
        }
        Command::Prep(Prep::Split {
            manifest,
            ratios,
            seed,
            out_dir,
        }) => {
            let out_dir =
                out_dir.unwrap_or_else(|| manifest.parent().map(PathBuf::from).unwrap_or_default());
            commands::parse_ratios(&ratios)
                .and_then(|r| commands::prep_split(&manifest, r, seed, &out_dir))
                .map_err(|e| e.context("prep"))
        }
        Command::Synth(Synth::Gen { config, out }) => {
            commands::synth_gen(&config, &out).map_err(|e| e.context("synth"))
        }
        Command::Train { stage, config } => stage_arg(&stage)
            .and_then(|id| commands::train(id, &config))
            .map_err(|e| e.context("train")),
        Command::Infer(a) => match (&a.features, &a.manifest) {
            (Some(f), _) => commands::infer(f, &a.params, a.pi, a.tmax, &a.out),
            (None, Some(m)) => commands::infer_manifest(m, &a.params, a.pi, a.tmax, &a.out),
            (None, None) => Err(Failure::config("need --features or --manifest")),
        }
        .map_err(|e| e.context("infer")),
        Command::Eval(e) => {
            let text = match e {
                Eval::Rouge {
                    reference,
                    hyp,
                    multi,
                } => commands::eval_rouge(&reference, &hyp, multi),
                Eval::Wer {
                    reference,
                    hyp,
                    multi,
                } => commands::eval_wer(&reference, &hyp, multi),
                Eval::Pwcca { x, y } => commands::eval_pwcca(&x, &y),
            }
            .map_err(|e| e.context("eval"))?;
            println!("{}", text.trim_end());
            Ok(())
        }
        Command::Baseline(Baseline::Extractive {
            input,
            manifest,
            w_bar,
            out,
        }) => commands::baseline_extractive(&input, manifest, w_bar, out.as_deref())
            .map_err(|e| e.context("baseline")),
    }
}
