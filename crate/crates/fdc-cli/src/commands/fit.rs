//! `fdc fit`: run the clustering model across restarts and emit the
//! best memberships, a deterministic run record, and optional traces.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use fdc_core::types::{ConstraintSet, FdcConfig};

use crate::io;
use crate::record::{mean_std, Aggregate, ConfigSnapshot, RunRecord, SCHEMA_VERSION};
use crate::runner::{best_restart_index, run_restarts, KernelChoice};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Data CSV (header row; optional trailing `label` column).
    #[arg(long)]
    pub data: PathBuf,
    /// Constraint CSV with header `p,q,s`.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Cluster-count upper bound.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Metric space: `none` (Euclidean) or `gaussian`.
    #[arg(long, default_value = "none")]
    pub kernel: String,
    /// Gaussian kernel width (used when --kernel gaussian).
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outer termination tolerance on membership change.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write per-restart objective traces (long-format CSV).
    #[arg(long, default_value_t = false)]
    pub emit_trace: bool,
}

pub fn parse_kernel(kernel: &str, mu: f64) -> Result<KernelChoice> {
    match kernel {
        "none" => Ok(KernelChoice::None),
        "gaussian" => Ok(KernelChoice::Gaussian { mu }),
        other => anyhow::bail!("unknown kernel {other:?} (expected `none` or `gaussian`)"),
    }
}

pub fn config_from(args: &FitArgs) -> FdcConfig {
    let mut cfg = FdcConfig::new(args.k)
        .with_alpha(args.alpha)
        .with_beta(args.beta)
        .with_seed(args.seed);
    cfg.outer_tol = args.tol;
    cfg.max_outer_iters = args.max_iters;
    cfg
}

pub fn run(args: &FitArgs) -> Result<()> {
    if args.restarts == 0 {
        anyhow::bail!("--restarts must be >= 1");
    }
    let (data, labels) = io::read_dataset(&args.data)?;
    let cons = match &args.constraints {
        Some(path) => io::read_constraints(path)?,
        None => ConstraintSet::empty(),
    };
    let kernel = parse_kernel(&args.kernel, args.mu)?;
    let cfg = config_from(args);

    let outcomes = run_restarts(&data, &cons, &cfg, kernel, args.restarts, labels.as_deref())?;
    let best = best_restart_index(&outcomes);

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    io::write_memberships(
        &args.out_dir.join("memberships.csv"),
        &outcomes[best].model.memberships,
    )?;

    let objectives: Vec<f64> = outcomes.iter().map(|o| o.record.objective).collect();
    let (objective_mean, objective_std) = mean_std(&objectives);
    let metric = |f: fn(&crate::record::MetricValues) -> f64| -> Option<(f64, f64)> {
        let vals: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.record.metrics.as_ref().map(f))
            .collect();
        (vals.len() == outcomes.len()).then(|| mean_std(&vals))
    };
    let ari = metric(|m| m.ari_pct);
    let nmi = metric(|m| m.nmi_pct);
    let acc = metric(|m| m.acc_pct);

    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        command: "fit".into(),
        config: ConfigSnapshot {
            data: args.data.display().to_string(),
            constraints: args.constraints.as_ref().map(|p| p.display().to_string()),
            k: args.k,
            alpha: args.alpha,
            beta: args.beta,
            gamma: 2.0,
            kernel: kernel.name().into(),
            mu: kernel.mu(),
            restarts: args.restarts,
            seed: args.seed,
            tol: args.tol,
            max_iters: args.max_iters,
        },
        restarts: outcomes.iter().map(|o| o.record.clone()).collect(),
        aggregate: Aggregate {
            best_restart: best,
            objective_mean,
            objective_std,
            ari_mean: ari.map(|v| v.0),
            ari_std: ari.map(|v| v.1),
            nmi_mean: nmi.map(|v| v.0),
            nmi_std: nmi.map(|v| v.1),
            acc_mean: acc.map(|v| v.0),
            acc_std: acc.map(|v| v.1),
        },
    };
    let json = serde_json::to_string_pretty(&record)?;
    fs::write(args.out_dir.join("run.json"), json + "\n")?;

    // Wall-clock timings live outside the deterministic record.
    let mut timings = String::from("restart,seconds\n");
    for o in &outcomes {
        timings.push_str(&format!("{},{:.6}\n", o.record.restart, o.seconds));
    }
    fs::write(args.out_dir.join("timings.csv"), timings)?;

    if args.emit_trace {
        let mut trace = String::from("restart,step,objective\n");
        for o in &outcomes {
            for (step, obj) in o.model.objective_trace.iter().enumerate() {
                trace.push_str(&format!("{},{},{}\n", o.record.restart, step, obj));
            }
        }
        fs::write(args.out_dir.join("trace.csv"), trace)?;
    }
    Ok(())
}
