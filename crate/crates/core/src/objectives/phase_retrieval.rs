//! Real phase retrieval lifted onto 𝕊^d by zero padding.
//!
//! From measurements `y_i = <z*, a_i>² + w_i` the problem is rescaled by
//! `R = sqrt(Σ y_i / A)` with `A` the optimal lower frame bound, so that the
//! unknown `z*` becomes the first `d` coordinates of a unit vector in ℝ^{d+1}.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{Assessment, Objective};
use crate::scalar::Scalar;
use crate::sphere::{sample_uniform_sphere, RngStream, UnitVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    /// Measurement vectors uniform on 𝕊^{d-1}.
    UniformSphere,
    /// Measurement vectors with i.i.d. N(0, 1) entries.
    Gaussian,
}

#[derive(Clone, Debug)]
pub struct PhaseRetrievalProblem<T> {
    d: usize,
    /// Row-major `M × d` measurement vectors `a_i`; the lifted `ã_i = [a_i, 0]`.
    frames: Vec<T>,
    raw_targets: Vec<T>,
    targets: Vec<T>,
    scale: T,
    frame_bound: f64,
    planted: Option<Vec<T>>,
    lifted_planted: Option<UnitVector<T>>,
    /// Recovery counts as success when `min(|z* - z̄|, |z* + z̄|)` is below this.
    pub success_threshold: f64,
}

impl<T: Scalar> PhaseRetrievalProblem<T> {
    /// Builds the lifted problem from measurement vectors and (possibly noisy) intensities.
    ///
    /// Negative intensities are clamped to zero.
    pub fn from_measurements(frames: &[Vec<f64>], y: &[f64], planted: Option<&[f64]>) -> Result<Self> {
        let m = frames.len();
        if m == 0 {
            return Err(Error::NotAFrame("no measurement vectors".into()));
        }
        if y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: y.len() });
        }
        let d = frames[0].len();
        if d < 1 {
            return Err(Error::DimensionTooSmall(d + 1));
        }
        if let Some(a) = frames.iter().find(|a| a.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: a.len() });
        }
        if let Some(z) = planted {
            if z.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: z.len() });
            }
        }
        if m < d {
            return Err(Error::NotAFrame(format!("{m} vectors cannot span dimension {d}")));
        }
        let a_lower = lower_frame_bound(frames)?;

        let y: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = y.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("measurements", "all intensities are zero"));
        }
        let r2 = total / a_lower;
        let r = r2.sqrt();

        let lifted_planted = match planted {
            Some(z) => {
                let zz: f64 = z.iter().map(|x| x * x).sum();
                let mut lifted: Vec<f64> = z.iter().map(|x| x / r).collect();
                lifted.push((r2 - zz).max(0.0).sqrt() / r);
                Some(UnitVector::normalize(lifted.into_iter().map(T::of).collect())?)
            }
            None => None,
        };

        Ok(Self {
            d,
            frames: frames.iter().flatten().map(|&x| T::of(x)).collect(),
            raw_targets: y.iter().map(|&x| T::of(x)).collect(),
            targets: y.iter().map(|&x| T::of(x / r2)).collect(),
            scale: T::of(r),
            frame_bound: a_lower,
            planted: planted.map(|z| z.iter().map(|&x| T::of(x)).collect()),
            lifted_planted,
            success_threshold: 0.05,
        })
    }

    /// Dimension of the unknown signal (the sphere lives in ℝ^{d+1}).
    pub fn signal_dim(&self) -> usize {
        self.d
    }

    pub fn measurements(&self) -> usize {
        self.targets.len()
    }

    /// Lifted measurement vector `ã_i = [a_i, 0]`.
    pub fn lifted_frame(&self, i: usize) -> Vec<T> {
        let mut a = self.frames[i * self.d..(i + 1) * self.d].to_vec();
        a.push(T::zero());
        a
    }

    /// Rescaled targets `ỹ_i = y_i / R²`.
    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn raw_targets(&self) -> &[T] {
        &self.raw_targets
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn frame_bound(&self) -> f64 {
        self.frame_bound
    }

    pub fn planted_signal(&self) -> Option<&[T]> {
        self.planted.as_deref()
    }

    /// `[z*, sqrt(R² - |z*|²)] / R`, when the planted signal is known.
    pub fn lifted_planted(&self) -> Option<&UnitVector<T>> {
        self.lifted_planted.as_ref()
    }

    /// Lifted empirical risk `Σ_i (<v, ã_i>² - ỹ_i)²`.
    pub fn eval(&self, v: &[T]) -> T {
        let d = self.d;
        let head = &v[..d];
        self.frames
            .chunks_exact(d)
            .zip(&self.targets)
            .map(|(a, &yt)| {
                let s = a.iter().zip(head).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
                let r = s * s - yt;
                r * r
            })
            .sum()
    }
}

/// Smallest eigenvalue of the frame operator `Σ a_i a_iᵀ`.
fn lower_frame_bound(frames: &[Vec<f64>]) -> Result<f64> {
    let d = frames[0].len();
    let mut s = DMatrix::<f64>::zeros(d, d);
    for a in frames {
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] += a[i] * a[j];
            }
        }
    }
    let eig = SymmetricEigen::new(s);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if !(min > 1e-12 * max.max(f64::MIN_POSITIVE)) {
        return Err(Error::NotAFrame(format!("frame operator is singular (λ_min = {min:e})")));
    }
    Ok(min)
}

/// Random instance: planted `z*` uniform in direction with magnitude in `[0.5, 1]`,
/// additive i.i.d. Gaussian noise of standard deviation `noise_level` on the intensities.
pub fn generate_phase_retrieval<T: Scalar>(
    d: usize,
    m: usize,
    frame_kind: FrameKind,
    noise_level: f64,
    rng: &mut RngStream,
) -> Result<PhaseRetrievalProblem<T>> {
    if m < 1 {
        return Err(Error::invalid("measurements", "need at least one measurement"));
    }
    if !(noise_level >= 0.0) {
        return Err(Error::invalid("noise_level", "must be nonnegative"));
    }
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let dir = sample_uniform_sphere::<f64>(d, rng)?;
    let mag = 0.5 + 0.5 * rng.uniform();
    let z: Vec<f64> = dir.as_slice().iter().map(|x| x * mag).collect();

    let frames: Vec<Vec<f64>> = (0..m)
        .map(|_| match frame_kind {
            FrameKind::UniformSphere => sample_uniform_sphere::<f64>(d, rng).map(UnitVector::into_inner),
            FrameKind::Gaussian => Ok((0..d).map(|_| rng.standard_normal()).collect()),
        })
        .collect::<Result<_>>()?;
    let y: Vec<f64> = frames
        .iter()
        .map(|a| {
            let s: f64 = a.iter().zip(&z).map(|(x, y)| x * y).sum();
            s * s + noise_level * rng.standard_normal()
        })
        .collect();
    PhaseRetrievalProblem::from_measurements(&frames, &y, Some(&z))
}

/// `R` times the first `d` coordinates of `v`: the signal estimate `z̄`.
pub fn recover_signal<T: Scalar>(v: &[T], prob: &PhaseRetrievalProblem<T>) -> Result<Vec<T>> {
    if v.len() != prob.d + 1 {
        return Err(Error::DimensionMismatch { expected: prob.d + 1, actual: v.len() });
    }
    Ok(v[..prob.d].iter().map(|&x| x * prob.scale).collect())
}

fn sign_symmetric_distance<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let (mut minus, mut plus) = (0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    minus.sqrt().min(plus.sqrt())
}

impl<T: Scalar> Objective<T> for PhaseRetrievalProblem<T> {
    fn name(&self) -> &str {
        "phase_retrieval"
    }

    fn dimension(&self) -> usize {
        self.d + 1
    }

    fn evaluate(&self, v: &[T]) -> T {
        self.eval(v)
    }

    fn known_minimizer(&self) -> Option<&UnitVector<T>> {
        self.lifted_planted.as_ref()
    }

    fn sign_symmetric(&self) -> bool {
        true
    }

    fn assess(&self, v: &[T]) -> Assessment {
        let Some(z) = &self.planted else {
            return Assessment::default();
        };
        let Ok(zbar) = recover_signal(v, self) else {
            return Assessment { success: Some(false), ..Default::default() };
        };
        let dist = sign_symmetric_distance(z, &zbar);
        let mut a = Assessment { success: Some(dist < self.success_threshold), ..Default::default() };
        a.metrics.insert("signal_distance".into(), dist);
        a
    }
}
