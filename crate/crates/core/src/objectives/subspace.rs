//! Robust one-dimensional subspace detection via the smoothed ℓp energy
//! `E_{p,δ}(v) = Σ_i (|x_i|² - <x_i, v>² + δ²)^{p/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{Assessment, Objective, PointCloud};
use crate::scalar::{dot, Scalar};
use crate::sphere::UnitVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceEnergyParams {
    pub p: f64,
    pub delta: f64,
}

impl Default for SubspaceEnergyParams {
    fn default() -> Self {
        Self { p: 2.0, delta: 1e-7 }
    }
}

impl SubspaceEnergyParams {
    pub fn new(p: f64, delta: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::invalid("p", format!("must lie in (0, 2], got {p}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid("delta", format!("must be nonnegative, got {delta}")));
        }
        Ok(Self { p, delta })
    }

    pub fn unsmoothed(self) -> Self {
        Self { delta: 0.0, ..self }
    }
}

#[inline]
fn residual_power<T: Scalar>(resid: T, delta_sq: T, half_p: T, p_is_two: bool, p_is_one: bool) -> T {
    let r = resid.max(T::zero()) + delta_sq;
    if p_is_two {
        r
    } else if p_is_one {
        r.sqrt()
    } else {
        r.powf(half_p)
    }
}

/// Evaluates `E_{p,δ}(v)` point by point. Residuals are clamped at zero before smoothing.
pub fn subspace_energy_eval<T: Scalar>(v: &[T], cloud: &PointCloud<T>, params: &SubspaceEnergyParams) -> T {
    let delta_sq = T::of(params.delta * params.delta);
    let half_p = T::of(params.p / 2.0);
    let (two, one) = (params.p == 2.0, params.p == 1.0);
    cloud
        .rows()
        .map(|x| {
            let s = dot(x, v);
            residual_power(dot(x, x) - s * s, delta_sq, half_p, two, one)
        })
        .sum()
}

/// How a subspace run is judged against its oracle direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "tol")]
pub enum SubspaceSuccess {
    /// `min(|v - v*|, |v + v*|) <= tol`.
    Distance(f64),
    /// `|E_{p,0}(v) - E_{p,0}(v*)| / min(E_{p,0}(v), E_{p,0}(v*)) <= tol`.
    RelativeEnergy(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceScore {
    pub distance: f64,
    pub energy: f64,
    pub oracle_energy: f64,
    pub relative_gap: f64,
}

/// Compares `v` with an oracle direction using unsmoothed (`δ = 0`) energies on `cloud`.
pub fn score_subspace_run<T: Scalar>(
    v: &[T],
    oracle: &[T],
    cloud: &PointCloud<T>,
    params: &SubspaceEnergyParams,
) -> SubspaceScore {
    let (mut minus, mut plus) = (0.0f64, 0.0f64);
    for (&a, &b) in v.iter().zip(oracle) {
        let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    let sharp = params.unsmoothed();
    let energy = subspace_energy_eval(v, cloud, &sharp).to_f64_lossy();
    let oracle_energy = subspace_energy_eval(oracle, cloud, &sharp).to_f64_lossy();
    let diff = (energy - oracle_energy).abs();
    let relative_gap = if diff == 0.0 { 0.0 } else { diff / energy.min(oracle_energy) };
    SubspaceScore { distance: minus.sqrt().min(plus.sqrt()), energy, oracle_energy, relative_gap }
}

/// `E_{p,δ}` on a fixed cloud, optionally paired with an oracle direction for scoring.
#[derive(Clone, Debug)]
pub struct SubspaceObjective<T> {
    cloud: PointCloud<T>,
    params: SubspaceEnergyParams,
    sq_norm_total: T,
    /// Row-major `d × d` Gram matrix `XᵀX`, used for `p = 2`.
    gram: Vec<T>,
    oracle: Option<UnitVector<T>>,
    pub success: SubspaceSuccess,
}

impl<T: Scalar> SubspaceObjective<T> {
    pub fn new(cloud: PointCloud<T>, params: SubspaceEnergyParams) -> Result<Self> {
        let params = SubspaceEnergyParams::new(params.p, params.delta)?;
        if cloud.dim() < 2 {
            return Err(Error::DimensionTooSmall(cloud.dim()));
        }
        let d = cloud.dim();
        let mut gram = vec![T::zero(); d * d];
        let mut sq_norm_total = T::zero();
        for x in cloud.rows() {
            sq_norm_total += dot(x, x);
            for i in 0..d {
                for j in 0..d {
                    gram[i * d + j] += x[i] * x[j];
                }
            }
        }
        Ok(Self { cloud, params, sq_norm_total, gram, oracle: None, success: SubspaceSuccess::Distance(0.01) })
    }

    pub fn with_oracle(mut self, oracle: UnitVector<T>, success: SubspaceSuccess) -> Result<Self> {
        if oracle.dim() != self.cloud.dim() {
            return Err(Error::DimensionMismatch { expected: self.cloud.dim(), actual: oracle.dim() });
        }
        self.oracle = Some(oracle);
        self.success = success;
        Ok(self)
    }

    pub fn cloud(&self) -> &PointCloud<T> {
        &self.cloud
    }

    pub fn params(&self) -> &SubspaceEnergyParams {
        &self.params
    }

    pub fn oracle(&self) -> Option<&UnitVector<T>> {
        self.oracle.as_ref()
    }

    /// `Σ|x|² - vᵀ XᵀX v + M δ²`, the `p = 2` energy in O(d²).
    fn quadratic_energy(&self, v: &[T]) -> T {
        let d = self.cloud.dim();
        let q: T = self.gram.chunks_exact(d).zip(v).map(|(row, &vi)| vi * dot(row, v)).sum();
        let m = T::of(self.cloud.len() as f64);
        (self.sq_norm_total - q).max(T::zero()) + m * T::of(self.params.delta * self.params.delta)
    }
}

impl<T: Scalar> Objective<T> for SubspaceObjective<T> {
    fn name(&self) -> &str {
        "subspace"
    }

    fn dimension(&self) -> usize {
        self.cloud.dim()
    }

    fn evaluate(&self, v: &[T]) -> T {
        if self.params.p == 2.0 {
            self.quadratic_energy(v)
        } else {
            subspace_energy_eval(v, &self.cloud, &self.params)
        }
    }

    fn known_minimizer(&self) -> Option<&UnitVector<T>> {
        self.oracle.as_ref()
    }

    fn sign_symmetric(&self) -> bool {
        true
    }

    fn assess(&self, v: &[T]) -> Assessment {
        let Some(oracle) = &self.oracle else {
            return Assessment::default();
        };
        let s = score_subspace_run(v, oracle.as_slice(), &self.cloud, &self.params);
        let ok = match self.success {
            SubspaceSuccess::Distance(tol) => s.distance <= tol,
            SubspaceSuccess::RelativeEnergy(tol) => s.relative_gap <= tol,
        };
        let mut a = Assessment { success: Some(ok), ..Default::default() };
        a.metrics.insert("sign_symmetric_distance".into(), s.distance);
        a.metrics.insert("energy".into(), s.energy);
        a.metrics.insert("oracle_energy".into(), s.oracle_energy);
        a.metrics.insert("relative_energy_gap".into(), s.relative_gap);
        a
    }
}
