//! Restart orchestration shared by `fit` and `grid`.

use std::time::Instant;

use anyhow::Result;
use fdc_core::kernel::{kernel_fit, KernelSpec};
use fdc_core::mem::{fit, FdcModel};
use fdc_core::metrics::{accuracy_pct, ari_pct, harden, nmi_pct};
use fdc_core::types::{ConstraintSet, Dataset, FdcConfig};

use crate::record::{MetricValues, RestartRecord, RouteStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    None,
    Gaussian { mu: f64 },
}

impl KernelChoice {
    pub fn name(&self) -> &'static str {
        match self {
            KernelChoice::None => "none",
            KernelChoice::Gaussian { .. } => "gaussian",
        }
    }

    pub fn mu(&self) -> Option<f64> {
        match self {
            KernelChoice::None => None,
            KernelChoice::Gaussian { mu } => Some(*mu),
        }
    }
}

pub struct RestartOutcome {
    pub model: FdcModel,
    pub record: RestartRecord,
    pub seconds: f64,
}

/// Runs `restarts` fits with seeds `base_seed + i`, scoring against the
/// labels when present. The best restart is the one with the lowest
/// final objective (ties to the lower index).
pub fn run_restarts(
    data: &Dataset,
    cons: &ConstraintSet,
    cfg_base: &FdcConfig,
    kernel: KernelChoice,
    restarts: usize,
    labels: Option<&[usize]>,
) -> Result<Vec<RestartOutcome>> {
    let mut out = Vec::with_capacity(restarts);
    for i in 0..restarts {
        let mut cfg = cfg_base.clone();
        cfg.seed = cfg_base.seed.wrapping_add(i as u64);
        let start = Instant::now();
        let model = match kernel {
            KernelChoice::None => fit(data, cons, &cfg)?,
            KernelChoice::Gaussian { mu } => {
                kernel_fit(data, cons, &cfg, KernelSpec::Gaussian { mu })?
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        let metrics = labels.map(|truth| {
            let pred = harden(&model.memberships);
            MetricValues {
                ari_pct: ari_pct(&pred, truth),
                nmi_pct: nmi_pct(&pred, truth),
                acc_pct: accuracy_pct(&pred, truth),
            }
        });
        let record = RestartRecord {
            restart: i,
            seed: cfg.seed,
            objective: model.objective_trace.last().copied().unwrap_or(f64::NAN),
            iterations: model.iterations,
            converged: model.converged,
            k_effective: model.k_effective,
            degenerate_collapse: model.degenerate_collapse,
            deleted_clusters: model.deleted_clusters.clone(),
            routes: RouteStats {
                psd_full: model.route_counts.psd_full,
                psd_reduced: model.route_counts.psd_reduced,
                vertex_exhaustive: model.route_counts.vertex_exhaustive,
                local_descent: model.route_counts.local_descent,
            },
            metrics,
        };
        out.push(RestartOutcome {
            model,
            record,
            seconds,
        });
    }
    Ok(out)
}

pub fn best_restart_index(outcomes: &[RestartOutcome]) -> usize {
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.record.objective < outcomes[best].record.objective {
            best = i;
        }
    }
    best
}
