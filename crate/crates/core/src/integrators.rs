//! Projected time steppers for the stochastic Kuramoto-Vicsek dynamics and the per-step ensemble update.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{consensus_over, consensus_point, disjoint_batches, sample_batch, ConsensusPoint};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::scalar::{dist_sq, dot, Scalar};
use crate::sphere::{gaussian_increment, RngStream, UnitVector};

/// Ensembles at least this large are stepped on the rayon pool.
pub const PARALLEL_THRESHOLD: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub dt: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl StepParams {
    pub fn new(dt: f64, lambda: f64, sigma: f64, alpha: f64) -> Result<Self> {
        let p = Self { dt, lambda, sigma, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and positive, got {}", self.dt)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid("lambda", format!("must be finite and positive, got {}", self.lambda)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and nonnegative, got {}", self.sigma)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid("alpha", format!("must be finite and nonnegative, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    #[serde(alias = "euler_maruyama")]
    EulerMaruyamaProjected,
    #[serde(alias = "semi_implicit")]
    SemiImplicitProjected,
}

/// The update `Ṽ` before renormalization, given the Brownian increment `db`.
pub fn raw_update<T: Scalar>(v: &[T], v_alpha: &[T], p: &StepParams, scheme: SchemeKind, db: &[T]) -> Vec<T> {
    let d = v.len();
    let (dt, lambda, sigma) = (T::of(p.dt), T::of(p.lambda), T::of(p.sigma));
    let gap_sq = dist_sq(v, v_alpha);
    let noise = sigma * gap_sq.sqrt();
    let va_dot = dot(v, v_alpha);
    let db_dot = dot(v, db);
    let ito = dt * sigma * sigma / T::of(2.0) * gap_sq * T::of((d - 1) as f64);
    let mut out: Vec<T> =
        (0..d).map(|k| v[k] + dt * lambda * (v_alpha[k] - va_dot * v[k]) + noise * (db[k] - db_dot * v[k])).collect();
    match scheme {
        SchemeKind::EulerMaruyamaProjected => out.iter_mut().zip(v).for_each(|(o, &vk)| *o -= ito * vk),
        SchemeKind::SemiImplicitProjected => {
            let denom = T::one() + ito;
            out.iter_mut().for_each(|o| *o /= denom);
        }
    }
    out
}

/// One step with a caller-supplied increment.
pub fn step_with_increment<T: Scalar>(
    v: &UnitVector<T>,
    v_alpha: &ConsensusPoint<T>,
    p: &StepParams,
    scheme: SchemeKind,
    db: &[T],
) -> Result<UnitVector<T>> {
    if v_alpha.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), actual: v_alpha.dim() });
    }
    if db.len() != v.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), actual: db.len() });
    }
    UnitVector::normalize(raw_update(v.as_slice(), v_alpha.as_slice(), p, scheme, db))
}

/// One step, drawing a single `N(0, dt I)` increment from `rng`.
pub fn step<T: Scalar>(
    v: &UnitVector<T>,
    v_alpha: &ConsensusPoint<T>,
    p: &StepParams,
    scheme: SchemeKind,
    rng: &mut RngStream,
) -> Result<UnitVector<T>> {
    let db = gaussian_increment::<T>(v.dim(), p.dt, rng)?;
    step_with_increment(v, v_alpha, p, scheme, &db)
}

pub fn step_euler_maruyama<T: Scalar>(
    v: &UnitVector<T>,
    v_alpha: &ConsensusPoint<T>,
    p: &StepParams,
    rng: &mut RngStream,
) -> Result<UnitVector<T>> {
    step(v, v_alpha, p, SchemeKind::EulerMaruyamaProjected, rng)
}

pub fn step_semi_implicit<T: Scalar>(
    v: &UnitVector<T>,
    v_alpha: &ConsensusPoint<T>,
    p: &StepParams,
    rng: &mut RngStream,
) -> Result<UnitVector<T>> {
    step(v, v_alpha, p, SchemeKind::SemiImplicitProjected, rng)
}

/// Mini-batch settings for the consensus point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub size: usize,
    /// Partition the ensemble into `⌊N/M⌋` batches, each driven by its own consensus point.
    #[serde(default)]
    pub disjoint: bool,
}

/// The consensus point(s) that drive one step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepConsensus<T> {
    Shared(ConsensusPoint<T>),
    /// One consensus point per batch, plus the batch index of every particle.
    Partitioned {
        points: Vec<ConsensusPoint<T>>,
        assignment: Vec<usize>,
    },
}

impl<T: Scalar> StepConsensus<T> {
    pub fn for_particle(&self, i: usize) -> &ConsensusPoint<T> {
        match self {
            StepConsensus::Shared(c) => c,
            StepConsensus::Partitioned { points, assignment } => &points[assignment[i]],
        }
    }
}

/// Computes the consensus for a step. `rng` is consumed only when a batch smaller than `N` is drawn.
pub fn consensus_for_step<T: Scalar>(
    ensemble: &Ensemble<T>,
    alpha: T,
    batch: Option<&BatchConfig>,
    rng: &mut RngStream,
) -> Result<StepConsensus<T>> {
    let n = ensemble.len();
    match batch {
        Some(b) if b.size == 0 => Err(Error::invalid("batch_size", "must be at least 1")),
        Some(b) if b.size < n && b.disjoint => {
            let batches = disjoint_batches(n, b.size, rng);
            let mut assignment = vec![0; n];
            let points = batches
                .iter()
                .enumerate()
                .map(|(k, idx)| {
                    idx.iter().for_each(|&i| assignment[i] = k);
                    consensus_over(ensemble, idx, alpha)
                })
                .collect::<Result<_>>()?;
            Ok(StepConsensus::Partitioned { points, assignment })
        }
        Some(b) if b.size < n => {
            let idx = sample_batch(n, b.size, rng);
            consensus_over(ensemble, &idx, alpha).map(StepConsensus::Shared)
        }
        _ => consensus_point(ensemble, alpha).map(StepConsensus::Shared),
    }
}

/// Moves every particle against its consensus point and refreshes the cached energies.
///
/// `streams[i]` is particle `i`'s noise source. A degenerate renormalization is reported for the
/// lowest failing index and leaves the ensemble untouched.
pub fn apply_step<T: Scalar>(
    ensemble: &mut Ensemble<T>,
    objective: &dyn Objective<T>,
    p: &StepParams,
    scheme: SchemeKind,
    consensus: &StepConsensus<T>,
    streams: &mut [RngStream],
) -> Result<()> {
    if streams.len() != ensemble.len() {
        return Err(Error::DimensionMismatch { expected: ensemble.len(), actual: streams.len() });
    }
    let one = |(i, (v, rng)): (usize, (&UnitVector<T>, &mut RngStream))| -> Result<(UnitVector<T>, T)> {
        let next = step(v, consensus.for_particle(i), p, scheme, rng).map_err(|e| match e {
            Error::DegenerateStep { norm, .. } => Error::DegenerateStep { particle: i, norm },
            other => other,
        })?;
        let e = objective.evaluate(next.as_slice());
        Ok((next, e))
    };
    let moved: Vec<Result<(UnitVector<T>, T)>> = if ensemble.len() >= PARALLEL_THRESHOLD {
        ensemble.particles.par_iter().zip(streams.par_iter_mut()).enumerate().map(one).collect()
    } else {
        ensemble.particles.iter().zip(streams.iter_mut()).enumerate().map(one).collect()
    };
    let moved: Vec<(UnitVector<T>, T)> = moved.into_iter().collect::<Result<_>>()?;
    for (k, (v, e)) in moved.into_iter().enumerate() {
        ensemble.particles[k] = v;
        ensemble.energies[k] = e;
    }
    Ok(())
}

/// One full step: consensus, then move every particle. Returns the consensus that was used.
pub fn advance_ensemble<T: Scalar>(
    ensemble: &mut Ensemble<T>,
    objective: &dyn Objective<T>,
    p: &StepParams,
    scheme: SchemeKind,
    batch: Option<&BatchConfig>,
    streams: &mut [RngStream],
    batch_rng: &mut RngStream,
) -> Result<StepConsensus<T>> {
    p.validate()?;
    let c = consensus_for_step(ensemble, T::of(p.alpha), batch, batch_rng)?;
    apply_step(ensemble, objective, p, scheme, &c, streams)?;
    Ok(c)
}
