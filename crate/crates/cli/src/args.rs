//! Command-line surface. `WMARENA_SEED` overrides `--seed` everywhere.

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "wmarena", version, about = "Watermark interference arena")]
pub struct Cli {
    /// Worker threads for per-image stages (default: available cores).
    /// Results are independent of this value.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a watermark into a PNG.
    Embed {
        #[arg(long)]
        codec: String,
        /// 64-hex-character key seed.
        #[arg(long)]
        key: String,
        /// Payload bits ("0101..."); required for multi-bit codecs.
        #[arg(long)]
        message: Option<String>,
        #[arg(long)]
        strength: Option<f64>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Run a codec's detector on a PNG; prints the detection outcome as JSON.
    Detect {
        #[arg(long)]
        codec: String,
        #[arg(long)]
        key: String,
        /// Reference payload bits; enables bit-accuracy scoring.
        #[arg(long)]
        message: Option<String>,
        input: PathBuf,
    },
    /// Calibrate a detection threshold on a directory of unwatermarked PNGs.
    Calibrate {
        #[arg(long)]
        codec: String,
        #[arg(long)]
        negatives: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        fpr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the threshold JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a labeled 7-class corpus (six codecs + unwatermarked).
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        /// Images per class.
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the victim x attack interference matrix.
    Matrix {
        /// Directory of corpus PNGs; omit to use a synthetic corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Synthetic corpus size when --corpus is not given.
        #[arg(long, default_value_t = 200)]
        images: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Comma-separated codec ids or "all".
        #[arg(long, default_value = "all")]
        victims: String,
        /// "policy-set" (identity + re-watermarks), "all" (adds baselines),
        /// or comma-separated attack ids.
        #[arg(long, default_value = "all")]
        attacks: String,
        /// Synthetic calibration negatives when the corpus is too small.
        #[arg(long, default_value_t = 500)]
        negatives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        fpr: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive the attack policy from a stored matrix.
    Policy {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        budget: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate ownership forgery (attacker-side recovery).
    Forgery {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        images: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Synthetic calibration negatives when the corpus is too small.
        #[arg(long, default_value_t = 500)]
        negatives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        fpr: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the method-identification classifier on a labeled corpus.
    TrainClassifier {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        lr: f64,
        #[arg(long, default_value_t = 400)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-4)]
        l2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained classifier on a labeled corpus' test split.
    EvalClassifier {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the end-to-end attack pipeline.
    Pipeline {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        images: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Classifier model JSON (required in blackbox mode).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value = "blackbox")]
        mode: String,
        /// Re-watermark even when an image is classified as unwatermarked.
        #[arg(long, default_value_t = false)]
        paranoid: bool,
        /// Synthetic calibration negatives when the corpus is too small.
        #[arg(long, default_value_t = 500)]
        negatives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        fpr: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collate run artifacts into Markdown tables, box-plot CSV, and an SVG
    /// scatter of TPR vs NQD.
    Report {
        /// Directory holding matrix.json (and optionally policy.json,
        /// forgery.json, pipeline-*.json).
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// `WMARENA_SEED` wins over any `--seed` flag.
pub fn effective_seed(flag_seed: u64) -> u64 {
    std::env::var("WMARENA_SEED")
        .ok()
        .and_then(|v| v.parse::<u64>().ok())
        .unwrap_or(flag_seed)
}
