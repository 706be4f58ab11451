//! `fdc gen-constraints`: simulate a fuzzy-pairwise-constraint group
//! from a labeled data file.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use fdc_core::constraints_gen::{generate_constraints, Correctness, GroupSpec};

use crate::io;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Labeled data CSV (must have a `label` column).
    #[arg(long)]
    pub data: PathBuf,
    /// Pairs to draw, as a multiple of the sample count.
    #[arg(long)]
    pub fraction: f64,
    /// `correct`, `half`, or `opposite` relative to the labels.
    #[arg(long, default_value = "correct")]
    pub correctness: String,
    #[arg(long, default_value_t = 10)]
    pub knn: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output constraint CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_correctness(raw: &str) -> Result<Correctness> {
    match raw {
        "correct" => Ok(Correctness::AllCorrect),
        "half" => Ok(Correctness::HalfHalf),
        "opposite" => Ok(Correctness::AllOpposite),
        other => anyhow::bail!("unknown correctness {other:?} (expected correct|half|opposite)"),
    }
}

pub fn run(args: &GenArgs) -> Result<()> {
    let (data, labels) = io::read_dataset(&args.data)?;
    let labels = labels
        .with_context(|| format!("{}: constraint generation needs a `label` column", args.data.display()))?;
    let spec = GroupSpec {
        fraction: args.fraction,
        correctness: parse_correctness(&args.correctness)?,
        knn: args.knn,
        seed: args.seed,
    };
    let cons = generate_constraints(&data, &labels, &spec)?;
    io::write_constraints(&args.out, &cons)?;
    Ok(())
}
