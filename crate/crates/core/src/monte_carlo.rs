//! Independent replications of a run and their aggregate statistics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::scalar::Scalar;
use crate::solver::{run_once, RunReport, SolverConfig};

/// Builds the objective for one run from `(run_index, run_seed)`.
pub type ObjectiveFactory<'a, T> = dyn Fn(usize, u64) -> Result<Box<dyn Objective<T>>> + Sync + 'a;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub median: f64,
    pub mean_successful: Option<f64>,
    pub median_successful: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub objective: String,
    pub run_count: usize,
    pub successes: usize,
    /// `successes / run_count`, or `None` when the objective has no success criterion.
    pub success_rate: Option<f64>,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub mean_n_avg: f64,
    pub base_seed: u64,
    pub config: SolverConfig,
}

/// Sorted-order mean and median, so the result does not depend on run order.
fn mean_median(mut xs: Vec<f64>) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) };
    Some((mean, median))
}

fn run_metrics(r: &RunReport) -> BTreeMap<String, f64> {
    let mut m = r.metrics.clone();
    if let Some(e) = &r.errors {
        m.insert("sup_norm_error".into(), e.sup_norm);
        m.insert("squared_error".into(), e.squared);
        m.insert("sign_symmetric_error".into(), e.sign_symmetric);
    }
    m.insert("iterations".into(), r.iterations as f64);
    m.insert("n_avg".into(), r.n_avg);
    m.insert("best_energy".into(), r.best_energy);
    m
}

/// Aggregates finished runs. Order of `runs` does not matter.
pub fn aggregate(runs: &[RunReport], cfg: &SolverConfig, base_seed: u64) -> Result<AggregateReport> {
    let Some(first) = runs.first() else {
        return Err(Error::invalid("n_runs", "must be at least 1"));
    };
    let successes = runs.iter().filter(|r| r.success == Some(true)).count();
    let graded = runs.iter().any(|r| r.success.is_some());
    let per_run: Vec<(bool, BTreeMap<String, f64>)> =
        runs.iter().map(|r| (r.success == Some(true), run_metrics(r))).collect();
    let names: std::collections::BTreeSet<&String> = per_run.iter().flat_map(|(_, m)| m.keys()).collect();
    let metrics = names
        .into_iter()
        .filter_map(|name| {
            let all: Vec<f64> = per_run.iter().filter_map(|(_, m)| m.get(name).copied()).collect();
            let ok: Vec<f64> = per_run.iter().filter(|(s, _)| *s).filter_map(|(_, m)| m.get(name).copied()).collect();
            let (mean, median) = mean_median(all)?;
            let succ = mean_median(ok);
            Some((
                name.clone(),
                MetricSummary {
                    mean,
                    median,
                    mean_successful: succ.map(|s| s.0),
                    median_successful: succ.map(|s| s.1),
                },
            ))
        })
        .collect();
    let (mean_n_avg, _) = mean_median(runs.iter().map(|r| r.n_avg).collect()).unwrap_or((0.0, 0.0));
    Ok(AggregateReport {
        objective: first.objective.clone(),
        run_count: runs.len(),
        successes,
        success_rate: graded.then(|| successes as f64 / runs.len() as f64),
        metrics,
        mean_n_avg,
        base_seed,
        config: cfg.clone(),
    })
}

/// Runs `n_runs` replications with seeds `base_seed + i` on the rayon pool and returns every
/// report in run order. The first failing run (by index) determines the error.
pub fn run_replications<T: Scalar>(
    factory: &ObjectiveFactory<'_, T>,
    cfg: &SolverConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<Vec<RunReport>> {
    if n_runs == 0 {
        return Err(Error::invalid("n_runs", "must be at least 1"));
    }
    cfg.validate()?;
    let results: Vec<Result<RunReport>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let obj = factory(i, seed)?;
            run_once(obj.as_ref(), cfg, seed)
        })
        .collect();
    results.into_iter().collect()
}

/// Monte Carlo replication followed by [`aggregate`].
pub fn run_monte_carlo<T: Scalar>(
    factory: &ObjectiveFactory<'_, T>,
    cfg: &SolverConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<AggregateReport> {
    let runs = run_replications(factory, cfg, n_runs, base_seed)?;
    aggregate(&runs, cfg, base_seed)
}
