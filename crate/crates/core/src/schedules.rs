//! Parameter schedules, variance-driven particle culling and stopping rules.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::consensus::{sample_batch, ConsensusPoint};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::scalar::{dist_sq, Scalar};
use crate::sphere::RngStream;

/// `(1/N) Σ_j |V_j - V̄|²` with `V̄` the coordinate-wise mean.
pub fn empirical_variance<T: Scalar>(ensemble: &Ensemble<T>) -> T {
    if ensemble.is_empty() {
        return T::zero();
    }
    let mean = ensemble.mean();
    let total: T = ensemble.particles().iter().map(|v| dist_sq(v.as_slice(), &mean)).sum();
    total / T::of(ensemble.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CullingPolicy {
    pub mu: f64,
    pub n_min: usize,
    pub check_every: usize,
}

impl Default for CullingPolicy {
    fn default() -> Self {
        Self { mu: 0.0, n_min: 1, check_every: 10 }
    }
}

impl CullingPolicy {
    pub fn new(mu: f64, n_min: usize, check_every: usize) -> Result<Self> {
        let p = Self { mu, n_min, check_every };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::invalid("mu", format!("must lie in [0, 1], got {}", self.mu)));
        }
        if self.n_min < 1 {
            return Err(Error::invalid("n_min", "must be at least 1"));
        }
        if self.check_every < 1 {
            return Err(Error::invalid("check_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.mu > 0.0
    }
}

/// `max(n_min, ⌊N (1 + μ (Σ̂ - Σ) / Σ)⌋)` when the variance dropped from `var_prev` to `var_next`;
/// `n_current` otherwise.
pub fn cull_count(n_current: usize, var_prev: f64, var_next: f64, policy: &CullingPolicy) -> usize {
    if !(var_prev > 0.0) {
        return policy.n_min.max(n_current);
    }
    if !(var_next < var_prev) {
        return n_current;
    }
    let factor = 1.0 + policy.mu * (var_next - var_prev) / var_prev;
    let target = (n_current as f64 * factor).floor().max(0.0) as usize;
    target.clamp(policy.n_min.min(n_current), n_current)
}

/// Keeps `target` particles chosen uniformly without replacement. Returns the surviving
/// (ascending) indices into the pre-cull ensemble.
pub fn cull_ensemble<T: Scalar>(ensemble: &mut Ensemble<T>, target: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    let n = ensemble.len();
    if target < 1 || target > n {
        return Err(Error::invalid("target", format!("must lie in [1, {n}], got {target}")));
    }
    if target == n {
        return Ok((0..n).collect());
    }
    let keep = sample_batch(n, target, rng);
    ensemble.retain_indices(&keep);
    Ok(keep)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaDecay {
    #[default]
    Constant,
    /// `σ ← σ / τ`.
    Geometric { tau: f64 },
    /// `σ ← σ / (σ₀ ln(n + 1))`, applied only once `σ₀ ln(n + 1) >= 1`.
    LogDecay { sigma0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSchedule {
    pub decay: SigmaDecay,
    pub current: f64,
}

impl SigmaSchedule {
    pub fn new(decay: SigmaDecay, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and nonnegative, got {sigma}")));
        }
        match decay {
            SigmaDecay::Geometric { tau } if !(tau > 1.0 && tau.is_finite()) => {
                return Err(Error::invalid("sigma_tau", format!("must be finite and greater than 1, got {tau}")));
            }
            SigmaDecay::LogDecay { sigma0 } if !(sigma0 > 0.0 && sigma0.is_finite()) => {
                return Err(Error::invalid("sigma_log0", format!("must be finite and positive, got {sigma0}")));
            }
            _ => {}
        }
        Ok(Self { decay, current: sigma })
    }
}

/// Advances `s` after step `iteration` (1-based).
pub fn update_sigma(s: SigmaSchedule, iteration: usize) -> SigmaSchedule {
    let current = match s.decay {
        SigmaDecay::Constant => s.current,
        SigmaDecay::Geometric { tau } => s.current / tau,
        SigmaDecay::LogDecay { sigma0 } => {
            let denom = sigma0 * ((iteration + 1) as f64).ln();
            if denom >= 1.0 {
                s.current / denom
            } else {
                s.current
            }
        }
    };
    SigmaSchedule { current, ..s }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaRamp {
    #[default]
    Constant,
    /// `α ← min(α · factor, alpha_max)`.
    Geometric { factor: f64, alpha_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub ramp: AlphaRamp,
    pub current: f64,
}

impl AlphaSchedule {
    pub fn new(ramp: AlphaRamp, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid("alpha", format!("must be finite and nonnegative, got {alpha}")));
        }
        let current = match ramp {
            AlphaRamp::Constant => alpha,
            AlphaRamp::Geometric { factor, alpha_max } => {
                if !(factor > 1.0 && factor.is_finite()) {
                    return Err(Error::invalid(
                        "alpha_factor",
                        format!("must be finite and greater than 1, got {factor}"),
                    ));
                }
                if !(alpha_max.is_finite() && alpha_max >= 0.0) {
                    return Err(Error::invalid(
                        "alpha_max",
                        format!("must be finite and nonnegative, got {alpha_max}"),
                    ));
                }
                alpha.min(alpha_max)
            }
        };
        Ok(Self { ramp, current })
    }

    /// Ramp that takes `alpha0` to `alpha_max` in about `n_steps` updates.
    pub fn ramp_over(alpha0: f64, alpha_max: f64, n_steps: usize) -> Result<Self> {
        Self::new(AlphaRamp::Geometric { factor: default_ramp_factor(alpha0, alpha_max, n_steps), alpha_max }, alpha0)
    }
}

/// `(α_max / α₀)^{1/n_steps}`, at least slightly above 1.
pub fn default_ramp_factor(alpha0: f64, alpha_max: f64, n_steps: usize) -> f64 {
    let f =
        if alpha0 > 0.0 && alpha_max > alpha0 { (alpha_max / alpha0).powf(1.0 / n_steps.max(1) as f64) } else { 1.0 };
    f.max(1.0 + 1e-12)
}

pub fn update_alpha(a: AlphaSchedule) -> AlphaSchedule {
    let current = match a.ramp {
        AlphaRamp::Constant => a.current,
        AlphaRamp::Geometric { factor, alpha_max } => (a.current * factor).min(alpha_max),
    };
    AlphaSchedule { current, ..a }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopRule {
    /// `(1/N) Σ_i |V_i - v_α| <= eps`.
    ConsensusResidual {
        eps: f64,
    },
    /// `|v_α(n) - v_α(n - lag - 1)| <= eps`.
    ConsensusDrift {
        eps: f64,
        lag: usize,
    },
    MaxIterations {
        n_t: usize,
    },
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StopRule::ConsensusResidual { eps } | StopRule::ConsensusDrift { eps, .. } if !(eps > 0.0) => {
                Err(Error::invalid("eps", format!("must be positive, got {eps}")))
            }
            _ => Ok(()),
        }
    }
}

/// `MaxIterations(n_t)` combined with `ConsensusResidual(1e-10)`.
pub fn default_stop_rules(n_t: usize) -> Vec<StopRule> {
    vec![StopRule::MaxIterations { n_t }, StopRule::ConsensusResidual { eps: 1e-10 }]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    ConsensusResidual,
    ConsensusDrift,
}

/// The most recent consensus points, newest last.
#[derive(Clone, Debug)]
pub struct ConsensusHistory<T> {
    buf: VecDeque<Vec<T>>,
    capacity: usize,
}

impl<T: Scalar> ConsensusHistory<T> {
    /// Sized for the largest drift lag in `rules` (`lag + 2` entries).
    pub fn for_rules(rules: &[StopRule]) -> Self {
        let capacity = rules
            .iter()
            .filter_map(|r| match r {
                StopRule::ConsensusDrift { lag, .. } => Some(lag + 2),
                _ => None,
            })
            .max()
            .unwrap_or(1);
        Self { buf: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, coords: &[T]) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(coords.to_vec());
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// `|latest - entry lag+1 steps earlier|`, if recorded.
    pub fn drift(&self, lag: usize) -> Option<T> {
        let n = self.buf.len();
        if n < lag + 2 {
            return None;
        }
        Some(dist_sq(&self.buf[n - 1], &self.buf[n - 2 - lag]).sqrt())
    }
}

/// `(1/N) Σ_i |V_i - v_α|`.
pub fn consensus_residual<T: Scalar>(ensemble: &Ensemble<T>, v_alpha: &ConsensusPoint<T>) -> T {
    let total: T = ensemble.particles().iter().map(|v| dist_sq(v.as_slice(), v_alpha.as_slice()).sqrt()).sum();
    total / T::of(ensemble.len() as f64)
}

/// First rule that fires, checked in the order MaxIterations, ConsensusResidual, ConsensusDrift.
/// `history` should already contain `v_alpha`.
pub fn should_stop<T: Scalar>(
    ensemble: &Ensemble<T>,
    v_alpha: &ConsensusPoint<T>,
    history: &ConsensusHistory<T>,
    rules: &[StopRule],
    iteration: usize,
) -> Option<StopReason> {
    let max_hit = rules.iter().any(|r| matches!(*r, StopRule::MaxIterations { n_t } if iteration >= n_t));
    if max_hit {
        return Some(StopReason::MaxIterations);
    }
    let mut residual = None;
    let residual_hit = rules.iter().any(|r| match *r {
        StopRule::ConsensusResidual { eps } => {
            let res = *residual.get_or_insert_with(|| consensus_residual(ensemble, v_alpha).to_f64_lossy());
            res <= eps
        }
        _ => false,
    });
    if residual_hit {
        return Some(StopReason::ConsensusResidual);
    }
    let drift_hit = rules.iter().any(|r| match *r {
        StopRule::ConsensusDrift { eps, lag } => history.drift(lag).is_some_and(|d| d.to_f64_lossy() <= eps),
        _ => false,
    });
    drift_hit.then_some(StopReason::ConsensusDrift)
}
