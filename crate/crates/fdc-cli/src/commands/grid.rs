//! `fdc grid`: sweep trade-off parameters (and kernel width) over a
//! grid, scoring each cell across restarts against the data labels.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use fdc_core::types::FdcConfig;
use serde_json::json;

use crate::commands::fit::parse_kernel;
use crate::io;
use crate::record::{mean_std, SCHEMA_VERSION};
use crate::runner::{run_restarts, KernelChoice};

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Labeled data CSV (grid selection needs ground truth).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long)]
    pub k: usize,
    /// Comma-separated alpha values.
    #[arg(long, default_value = "0")]
    pub alphas: String,
    /// Comma-separated beta values; default is 0,0.02,...,0.3.
    #[arg(long)]
    pub betas: Option<String>,
    #[arg(long, default_value = "none")]
    pub kernel: String,
    /// Comma-separated Gaussian widths; default 2^-10..2^5 when gaussian.
    #[arg(long)]
    pub mus: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_list(raw: &str, field: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad {field} value {v:?}"))
        })
        .collect()
}

/// The default trade-off grid: 0, 0.02, ..., 0.3.
pub fn default_betas() -> Vec<f64> {
    (0..=15).map(|i| i as f64 * 0.02).collect()
}

/// The default Gaussian width grid: 2^-10, ..., 2^5.
pub fn default_mus() -> Vec<f64> {
    (-10..=5).map(|e| (2.0f64).powi(e)).collect()
}

struct Cell {
    alpha: f64,
    beta: f64,
    mu: Option<f64>,
    ari_mean: f64,
    ari_std: f64,
    nmi_mean: f64,
    nmi_std: f64,
    acc_mean: f64,
    objective_mean: f64,
}

pub fn run(args: &GridArgs) -> Result<()> {
    let (data, labels) = io::read_dataset(&args.data)?;
    let labels =
        labels.with_context(|| format!("{}: grid search needs a `label` column", args.data.display()))?;
    let cons = match &args.constraints {
        Some(path) => io::read_constraints(path)?,
        None => fdc_core::types::ConstraintSet::empty(),
    };
    let alphas = parse_list(&args.alphas, "alpha")?;
    let betas = match &args.betas {
        Some(raw) => parse_list(raw, "beta")?,
        None => default_betas(),
    };
    let mus: Vec<Option<f64>> = match parse_kernel(&args.kernel, 1.0)? {
        KernelChoice::None => vec![None],
        KernelChoice::Gaussian { .. } => match &args.mus {
            Some(raw) => parse_list(raw, "mu")?.into_iter().map(Some).collect(),
            None => default_mus().into_iter().map(Some).collect(),
        },
    };

    let mut cells: Vec<Cell> = Vec::new();
    for &alpha in &alphas {
        for &beta in &betas {
            for &mu in &mus {
                let mut cfg = FdcConfig::new(args.k)
                    .with_alpha(alpha)
                    .with_beta(beta)
                    .with_seed(args.seed);
                cfg.outer_tol = args.tol;
                cfg.max_outer_iters = args.max_iters;
                let kernel = match mu {
                    None => KernelChoice::None,
                    Some(mu) => KernelChoice::Gaussian { mu },
                };
                let outcomes =
                    run_restarts(&data, &cons, &cfg, kernel, args.restarts, Some(&labels))?;
                let ari: Vec<f64> = outcomes
                    .iter()
                    .map(|o| o.record.metrics.as_ref().unwrap().ari_pct)
                    .collect();
                let nmi: Vec<f64> = outcomes
                    .iter()
                    .map(|o| o.record.metrics.as_ref().unwrap().nmi_pct)
                    .collect();
                let acc: Vec<f64> = outcomes
                    .iter()
                    .map(|o| o.record.metrics.as_ref().unwrap().acc_pct)
                    .collect();
                let obj: Vec<f64> = outcomes.iter().map(|o| o.record.objective).collect();
                let (ari_mean, ari_std) = mean_std(&ari);
                let (nmi_mean, nmi_std) = mean_std(&nmi);
                let (acc_mean, _) = mean_std(&acc);
                let (objective_mean, _) = mean_std(&obj);
                cells.push(Cell {
                    alpha,
                    beta,
                    mu,
                    ari_mean,
                    ari_std,
                    nmi_mean,
                    nmi_std,
                    acc_mean,
                    objective_mean,
                });
            }
        }
    }

    let best_by = |key: fn(&Cell) -> f64| -> usize {
        let mut best = 0;
        for (i, c) in cells.iter().enumerate() {
            if key(c) > key(&cells[best]) {
                best = i;
            }
        }
        best
    };
    let best_ari = best_by(|c| c.ari_mean);
    let best_nmi = best_by(|c| c.nmi_mean);

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;

    let mut table = String::from("alpha,beta,mu,ari_mean,ari_std,nmi_mean,nmi_std,acc_mean,objective_mean\n");
    for c in &cells {
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.alpha,
            c.beta,
            c.mu.map_or(String::from(""), |m| m.to_string()),
            c.ari_mean,
            c.ari_std,
            c.nmi_mean,
            c.nmi_std,
            c.acc_mean,
            c.objective_mean
        ));
    }
    fs::write(args.out_dir.join("grid.csv"), table)?;

    let cell_json = |c: &Cell| {
        json!({
            "alpha": c.alpha,
            "beta": c.beta,
            "mu": c.mu,
            "ari_mean": c.ari_mean,
            "ari_std": c.ari_std,
            "nmi_mean": c.nmi_mean,
            "nmi_std": c.nmi_std,
            "acc_mean": c.acc_mean,
            "objective_mean": c.objective_mean,
        })
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "grid",
        "restarts": args.restarts,
        "seed": args.seed,
        "cells": cells.iter().map(cell_json).collect::<Vec<_>>(),
        "best_by_ari": cell_json(&cells[best_ari]),
        "best_by_nmi": cell_json(&cells[best_nmi]),
    });
    fs::write(
        args.out_dir.join("grid.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    Ok(())
}
