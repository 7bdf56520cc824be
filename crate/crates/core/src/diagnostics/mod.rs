//! Replicated experiments, uniformity reports and convergence studies.

mod experiment;
mod report;
mod studies;

pub use experiment::{run_experiment, ExperimentPlan, MaximaSample, Mode};
pub use report::{
    error_budget, histogram_counts, ks_statistic, uniformity_report, ErrorBudget, HistogramReport, KS_COEFFICIENT_1,
    KS_COEFFICIENT_5, REPORT_SCHEMA_VERSION,
};
pub use studies::{
    moment_bound_check, proposition_ratio_study, ratio_discrepancies, strong_order_study, tau_convergence_study,
    MomentCheck, MomentRow, MomentStatus, RatioRow, RatioStudy, StrongOrderConfig, StrongOrderRow, StrongOrderStudy,
    StudyConfig, TauRow, TauStudy,
};

use rayon::prelude::*;

use crate::error::Result;

/// Evaluates `f(0..count)` on a worker pool, returning results in index
/// order. `jobs = None` uses the global pool. On failure the error of the
/// lowest failing index is returned.
pub(crate) fn replicate<T, F>(jobs: Option<usize>, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || (0..count).into_par_iter().map(&f).collect::<Vec<_>>();
    let results = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| crate::Error::InvalidConfig(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    results.into_iter().collect()
}

pub(crate) fn mean_and_stdev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// points or any nonpositive value.
pub(crate) fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
