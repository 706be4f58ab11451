//! `fdc eval`: score predicted memberships against hard labels or a
//! fuzzy ground-truth matrix and emit a metric report as JSON.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use fdc_core::metrics::{
    accuracy_pct, ari_pct, harden, lia_accuracy, mahd, nmi_pct, MetricReport,
};
use serde_json::json;

use crate::io;
use crate::record::SCHEMA_VERSION;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted memberships CSV (as written by `fdc fit`).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth as hard labels (CSV with a `label` column).
    #[arg(long)]
    pub truth_labels: Option<PathBuf>,
    /// Ground truth as a fuzzy membership matrix CSV.
    #[arg(long)]
    pub truth_memberships: Option<PathBuf>,
    /// Rank positions for the rank-accuracy vector (fuzzy truth only);
    /// defaults to the truth's column count.
    #[arg(long)]
    pub k_star: Option<usize>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let pred = io::read_memberships(&args.pred)?;
    let pred_labels = harden(&pred);

    let report = match (&args.truth_labels, &args.truth_memberships) {
        (Some(path), None) => {
            let truth = io::read_labels(path)?;
            if truth.len() != pred_labels.len() {
                bail!(
                    "prediction has {} rows but truth has {}",
                    pred_labels.len(),
                    truth.len()
                );
            }
            MetricReport {
                ari_pct: ari_pct(&pred_labels, &truth),
                nmi_pct: nmi_pct(&pred_labels, &truth),
                acc_pct: accuracy_pct(&pred_labels, &truth),
                mahd: None,
                lia_acc: Vec::new(),
            }
        }
        (None, Some(path)) => {
            let truth = io::read_memberships(path)?;
            let truth_labels = harden(&truth);
            let k_star = args.k_star.unwrap_or_else(|| truth.k().min(pred.k()));
            MetricReport {
                ari_pct: ari_pct(&pred_labels, &truth_labels),
                nmi_pct: nmi_pct(&pred_labels, &truth_labels),
                acc_pct: accuracy_pct(&pred_labels, &truth_labels),
                mahd: Some(mahd(&pred, &truth)?),
                lia_acc: lia_accuracy(&pred, &truth, k_star)?,
            }
        }
        _ => bail!("provide exactly one of --truth-labels or --truth-memberships"),
    };

    let payload = json!({
        "schema_version": SCHEMA_VERSION,
        "ari_pct": report.ari_pct,
        "nmi_pct": report.nmi_pct,
        "acc_pct": report.acc_pct,
        "mahd": report.mahd,
        "lia_acc": report.lia_acc,
    });
    let text = serde_json::to_string_pretty(&payload)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
