//! Built-in benchmark suites.

use serde::Serialize;

use std::path::Path;

use crate::config::{InitKind, ObjectiveKind, Precision, RunConfig, SubspaceOracle, SubspaceRule};
use crate::error::{Error, Result};
use crate::monte_carlo::AggregateReport;
use crate::objectives::FrameKind;

pub const SUITE_NAMES: [&str; 6] =
    ["ackley-d3", "ackley-d20", "ackley-d20-fast", "phase-retrieval-d32", "subspace-p2", "subspace-p1"];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteCase {
    pub label: String,
    pub config: RunConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct Suite {
    pub name: String,
    pub description: String,
    pub cases: Vec<SuiteCase>,
    /// Choices made by this harness where the benchmark definition leaves a value open or is scaled down.
    pub deviations: Vec<String>,
}

fn case(label: &str, config: RunConfig) -> SuiteCase {
    SuiteCase { label: label.into(), config }
}

fn ackley_d20(fast: bool) -> RunConfig {
    RunConfig {
        dim: 20,
        particles: if fast { 400 } else { 200 },
        batch: Some(if fast { 150 } else { 100 }),
        dt: 0.05,
        sigma: 0.3,
        alpha: 5e4,
        iterations: 2000,
        runs: 50,
        init: InitKind::FullSphere,
        mu: if fast { 0.3 } else { 0.0 },
        n_min: 10,
        check_every: 10,
        ..Default::default()
    }
}

fn phase_retrieval(measurements: usize) -> RunConfig {
    RunConfig {
        objective: ObjectiveKind::PhaseRetrieval,
        dim: 32,
        measurements,
        frame: FrameKind::Gaussian,
        particles: 2000,
        dt: 0.1,
        sigma: 0.2,
        alpha: 2000.0,
        alpha_max: Some(1e15),
        iterations: 1000,
        runs: 25,
        init: InitKind::FullSphere,
        ..Default::default()
    }
}

fn subspace(p: f64) -> RunConfig {
    let robust = p < 2.0;
    RunConfig {
        objective: ObjectiveKind::Subspace,
        dim: 10,
        subspaces: 25,
        points_per_subspace: 100,
        cloud_noise: 0.01,
        outliers: if robust { 250 } else { 0 },
        p,
        delta: 1e-7,
        oracle: if robust { SubspaceOracle::CleanSvd } else { SubspaceOracle::Svd },
        success_rule: SubspaceRule::RelativeEnergy,
        success_tol: Some(1e-2),
        particles: 1000,
        dt: 0.25,
        sigma: 0.3,
        alpha: 2e15,
        iterations: 10_000,
        residual_eps: Some(1e-10),
        mu: if robust { 0.3 } else { 0.0 },
        n_min: 50,
        check_every: 10,
        runs: if robust { 50 } else { 100 },
        init: InitKind::FullSphere,
        ..Default::default()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub label: String,
    pub config: RunConfig,
    pub aggregate: AggregateReport,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub description: String,
    pub deviations: Vec<String>,
    pub cases: Vec<CaseResult>,
}

impl SuiteReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Runs every case of the suite. `seed` and `runs` override the built-in values when given.
pub fn run_suite(suite: &Suite, seed: Option<u64>, runs: Option<usize>) -> Result<SuiteReport> {
    let mut cases = Vec::with_capacity(suite.cases.len());
    for c in &suite.cases {
        let mut config = c.config.clone();
        config.seed = seed.unwrap_or(config.seed);
        config.runs = runs.unwrap_or(config.runs);
        config.validate()?;
        let start = std::time::Instant::now();
        let (_, aggregate) = match config.precision {
            Precision::F64 => config.execute::<f64>()?,
            Precision::F32 => config.execute::<f32>()?,
        };
        cases.push(CaseResult {
            label: c.label.clone(),
            config,
            aggregate,
            wall_time_secs: start.elapsed().as_secs_f64(),
        });
    }
    Ok(SuiteReport {
        name: suite.name.clone(),
        description: suite.description.clone(),
        deviations: suite.deviations.clone(),
        cases,
    })
}

pub fn suite(name: &str) -> Result<Suite> {
    let (description, cases, deviations): (&str, Vec<SuiteCase>, Vec<&str>) = match name {
        "ackley-d3" => (
            "Ackley on the sphere, d = 3, minimizer e3, 100 runs",
            vec![case(
                "N=50",
                RunConfig {
                    dim: 3,
                    particles: 50,
                    dt: 0.1,
                    sigma: 0.7,
                    alpha: 500.0,
                    iterations: 1000,
                    runs: 100,
                    init: InitKind::FullSphere,
                    ..Default::default()
                },
            )],
            vec!["iteration cap 1000 with consensus residual stop 1e-10"],
        ),
        "ackley-d20" => (
            "Ackley on the sphere, d = 20, N = 200, batch 100, T = 100",
            vec![case("N=200/M=100", ackley_d20(false))],
            vec!["constant alpha 5e4, no ramp"],
        ),
        "ackley-d20-fast" => (
            "Ackley on the sphere, d = 20, culling mu = 0.3, N0 = 400, batch 150, N_min = 10",
            vec![case("N0=400/M=150", ackley_d20(true))],
            vec!["variance check every 10 iterations", "constant alpha 5e4, no ramp"],
        ),
        "phase-retrieval-d32" => (
            "Noise-free phase retrieval, d = 32, Gaussian frames, M = 8d and M = d",
            vec![case("M=8d", phase_retrieval(256)), case("M=d", phase_retrieval(32))],
            vec!["N = 2000 particles instead of 10^4", "1000 iterations; alpha reaches 1e15 after 500"],
        ),
        "subspace-p2" => (
            "Subspace detection p = 2, d = 10, 25 nearly parallel lines x 100 points, noise 0.01",
            vec![case("N=1000", subspace(2.0))],
            vec!["sigma = 0.3"],
        ),
        "subspace-p1" => (
            "Robust subspace detection p = 1, d = 10, nearly parallel lines plus 250 outliers",
            vec![case("N0=1000", subspace(1.0))],
            vec![
                "250 uniform outliers added to the cloud",
                "reference direction is the SVD of the outlier-free cloud",
                "sigma = 0.3, culling mu = 0.3 with N_min = 50",
            ],
        ),
        other => return Err(Error::UnknownSuite(other.into())),
    };
    Ok(Suite {
        name: name.into(),
        description: description.into(),
        cases,
        deviations: deviations.into_iter().map(String::from).collect(),
    })
}
