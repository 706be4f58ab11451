//! Serializable run records. Everything in `run.json` is a pure
//! function of the flags and seed, so identical invocations reproduce
//! the file byte for byte; wall-clock timings go to a separate sidecar.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ConfigSnapshot {
    pub data: String,
    pub constraints: Option<String>,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kernel: String,
    pub mu: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteStats {
    pub psd_full: usize,
    pub psd_reduced: usize,
    pub vertex_exhaustive: usize,
    pub local_descent: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricValues {
    pub ari_pct: f64,
    pub nmi_pct: f64,
    pub acc_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub seed: u64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub k_effective: usize,
    pub degenerate_collapse: bool,
    pub deleted_clusters: Vec<(usize, usize)>,
    pub routes: RouteStats,
    pub metrics: Option<MetricValues>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub best_restart: usize,
    pub objective_mean: f64,
    pub objective_std: f64,
    pub ari_mean: Option<f64>,
    pub ari_std: Option<f64>,
    pub nmi_mean: Option<f64>,
    pub nmi_std: Option<f64>,
    pub acc_mean: Option<f64>,
    pub acc_std: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigSnapshot,
    pub restarts: Vec<RestartRecord>,
    pub aggregate: Aggregate,
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for n <= 1).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
