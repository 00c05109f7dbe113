//! The KV-CBO run loop (plain and fast variants) and per-run reports.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::consensus::consensus_point;
use crate::ensemble::{Ensemble, Initialization};
use crate::error::{Error, Result};
use crate::integrators::{apply_step, consensus_for_step, BatchConfig, SchemeKind, StepConsensus, StepParams};
use crate::objectives::Objective;
use crate::scalar::{dist_sq, Scalar};
use crate::schedules::{
    cull_count, cull_ensemble, empirical_variance, update_alpha, update_sigma, AlphaRamp, AlphaSchedule,
    ConsensusHistory, CullingPolicy, SigmaDecay, SigmaSchedule, StopReason, StopRule,
};
use crate::sphere::RngStream;

/// Stream ids under a run seed. Particle `i` draws from stream `i`.
pub mod streams {
    pub const INIT: u64 = 1 << 40;
    pub const BATCH: u64 = 2 << 40;
    pub const CULL: u64 = 3 << 40;
    pub const OBJECTIVE: u64 = 4 << 40;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub sigma_decay: SigmaDecay,
    pub alpha: f64,
    pub alpha_ramp: AlphaRamp,
    pub n_particles: usize,
    pub batch: Option<BatchConfig>,
    pub culling: CullingPolicy,
    /// Iteration budget `n_T`, always enforced.
    pub n_iterations: usize,
    /// Extra stopping rules, combined any-of with the iteration budget.
    pub stop_rules: Vec<StopRule>,
    pub scheme: SchemeKind,
    pub init: Initialization,
    pub record_traces: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            lambda: 1.0,
            sigma: 0.7,
            sigma_decay: SigmaDecay::Constant,
            alpha: 500.0,
            alpha_ramp: AlphaRamp::Constant,
            n_particles: 50,
            batch: None,
            culling: CullingPolicy::default(),
            n_iterations: 1000,
            stop_rules: vec![StopRule::ConsensusResidual { eps: 1e-10 }],
            scheme: SchemeKind::EulerMaruyamaProjected,
            init: Initialization::FullSphere,
            record_traces: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        StepParams::new(self.dt, self.lambda, self.sigma, self.alpha)?;
        SigmaSchedule::new(self.sigma_decay, self.sigma)?;
        AlphaSchedule::new(self.alpha_ramp, self.alpha)?;
        self.culling.validate()?;
        if self.n_particles < 1 {
            return Err(Error::invalid("n_particles", "must be at least 1"));
        }
        if self.n_particles < self.culling.n_min {
            return Err(Error::invalid(
                "n_min",
                format!("must not exceed n_particles ({} > {})", self.culling.n_min, self.n_particles),
            ));
        }
        if let Some(b) = &self.batch {
            if b.size < 1 {
                return Err(Error::invalid("batch_size", "must be at least 1"));
            }
        }
        self.stop_rules.iter().try_for_each(StopRule::validate)
    }

    fn all_rules(&self) -> Vec<StopRule> {
        let mut r = vec![StopRule::MaxIterations { n_t: self.n_iterations }];
        r.extend(self.stop_rules.iter().copied());
        r
    }
}

/// Errors of the reported minimizer against a known one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// `‖v - v*‖_∞`.
    pub sup_norm: f64,
    /// `|v - v*|²`.
    pub squared: f64,
    /// `min(|v - v*|, |v + v*|)`.
    pub sign_symmetric: f64,
}

impl ErrorMetrics {
    /// For sign-symmetric objectives the sup-norm and squared errors are taken against the nearer of `±v*`.
    pub fn compute(v: &[f64], target: &[f64], sign_symmetric: bool) -> Self {
        let minus = v.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let plus = v.iter().zip(target).map(|(a, b)| (a + b) * (a + b)).sum::<f64>();
        let flip = sign_symmetric && plus < minus;
        let sup =
            v.iter().zip(target).map(|(a, b)| if flip { (a + b).abs() } else { (a - b).abs() }).fold(0.0, f64::max);
        Self { sup_norm: sup, squared: if flip { plus } else { minus }, sign_symmetric: minus.min(plus).sqrt() }
    }
}

/// Per-iteration diagnostics; entry `k` describes the state after step `k + 1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    pub variance: Vec<f64>,
    pub n_particles: Vec<usize>,
    pub best_energy: Vec<f64>,
    /// `|v_α - v*|` of the consensus point that drove each step, when `v*` is known.
    pub consensus_error: Option<Vec<f64>>,
}

impl Traces {
    pub fn len(&self) -> usize {
        self.variance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variance.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub objective: String,
    pub seed: u64,
    /// Full-ensemble consensus point of the final ensemble: the reported minimizer.
    pub final_consensus: Vec<f64>,
    pub best_particle: Vec<f64>,
    pub best_energy: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub success: Option<bool>,
    pub errors: Option<ErrorMetrics>,
    /// Objective-specific scores of the reported minimizer.
    pub metrics: BTreeMap<String, f64>,
    pub traces: Traces,
    /// Particle count averaged over executed steps (initial count when no step ran).
    pub n_avg: f64,
    pub final_alpha: f64,
    pub final_sigma: f64,
    pub wall_time_secs: f64,
}

impl RunReport {
    /// The report with the wall-time field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_secs: 0.0, ..self.clone() }
    }
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

/// Runs KV-CBO on `objective`, or the fast variant when `cfg.culling.mu > 0`.
pub fn run_once<T: Scalar>(objective: &dyn Objective<T>, cfg: &SolverConfig, seed: u64) -> Result<RunReport> {
    let start = Instant::now();
    cfg.validate()?;
    let d = objective.dimension();
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if let Some(v) = objective.known_minimizer() {
        if v.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: v.dim() });
        }
    }

    let mut init_rng = RngStream::new(seed, streams::INIT);
    let mut batch_rng = RngStream::new(seed, streams::BATCH);
    let mut cull_rng = RngStream::new(seed, streams::CULL);
    let mut ens = Ensemble::sample(cfg.n_particles, objective, cfg.init, &mut init_rng)?;
    let mut particle_rngs: Vec<RngStream> = (0..cfg.n_particles as u64).map(|i| RngStream::new(seed, i)).collect();

    let mut sigma = SigmaSchedule::new(cfg.sigma_decay, cfg.sigma)?;
    let mut alpha = AlphaSchedule::new(cfg.alpha_ramp, cfg.alpha)?;
    let rules = cfg.all_rules();
    let mut history = ConsensusHistory::for_rules(&rules);
    let target = objective.known_minimizer().map(|v| v.as_slice().to_vec());

    let mut traces = Traces { consensus_error: target.as_ref().map(|_| Vec::new()), ..Default::default() };
    let mut var_ref = empirical_variance(&ens).to_f64_lossy();
    let mut count_sum = 0usize;
    let mut iteration = 0usize;

    let stop_reason = loop {
        let a = T::of(alpha.current);
        let step_consensus = consensus_for_step(&ens, a, cfg.batch.as_ref(), &mut batch_rng)?;
        let monitor = match &step_consensus {
            StepConsensus::Shared(c) => c.clone(),
            StepConsensus::Partitioned { .. } => consensus_point(&ens, a)?,
        };
        history.push(&monitor.coords);
        if let Some(reason) = crate::schedules::should_stop(&ens, &monitor, &history, &rules, iteration) {
            break reason;
        }

        let params = StepParams { dt: cfg.dt, lambda: cfg.lambda, sigma: sigma.current, alpha: alpha.current };
        count_sum += ens.len();
        apply_step(&mut ens, objective, &params, cfg.scheme, &step_consensus, &mut particle_rngs)
            .map_err(|e| Error::SolverAbort { iteration, source: Box::new(e) })?;
        iteration += 1;
        sigma = update_sigma(sigma, iteration);
        alpha = update_alpha(alpha);

        let mut variance = None;
        if cfg.culling.is_active() && iteration.is_multiple_of(cfg.culling.check_every) {
            let var_next = empirical_variance(&ens).to_f64_lossy();
            let n_next = cull_count(ens.len(), var_ref, var_next, &cfg.culling);
            if n_next < ens.len() {
                let kept = cull_ensemble(&mut ens, n_next, &mut cull_rng)?;
                particle_rngs = kept.iter().map(|&i| particle_rngs[i].clone()).collect();
                var_ref = empirical_variance(&ens).to_f64_lossy();
            } else {
                var_ref = var_next;
            }
            variance = Some(var_ref);
        }

        if cfg.record_traces {
            traces.variance.push(variance.unwrap_or_else(|| empirical_variance(&ens).to_f64_lossy()));
            traces.n_particles.push(ens.len());
            traces.best_energy.push(ens.energies()[ens.best_index()].to_f64_lossy());
            if let (Some(t), Some(errs)) = (&target, traces.consensus_error.as_mut()) {
                errs.push(dist_sq(&monitor.coords, t).to_f64_lossy().sqrt());
            }
        }
    };

    let final_c = consensus_point(&ens, T::of(alpha.current))?;
    let best = ens.best_index();
    let assessment = objective.assess(&final_c.coords);
    let final_consensus = to_f64(&final_c.coords);
    let errors = objective
        .known_minimizer()
        .map(|v| ErrorMetrics::compute(&final_consensus, &v.to_f64(), objective.sign_symmetric()));
    let n_avg = if iteration == 0 { ens.len() as f64 } else { count_sum as f64 / iteration as f64 };

    Ok(RunReport {
        objective: objective.name().to_string(),
        seed,
        final_consensus,
        best_particle: ens.particles()[best].to_f64(),
        best_energy: ens.energies()[best].to_f64_lossy(),
        iterations: iteration,
        stop_reason,
        success: assessment.success,
        errors,
        metrics: assessment.metrics,
        traces,
        n_avg,
        final_alpha: alpha.current,
        final_sigma: sigma.current,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}
