//! Geometry and randomness on the unit hypersphere 𝕊^{d-1} ⊂ ℝ^d.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm_sq, Scalar};

/// A direction in ℝ^d with Euclidean norm one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector<T>(Vec<T>);

impl<T: Scalar> UnitVector<T> {
    /// Wraps `coords`, checking `d >= 2` and `|coords| = 1` within [`Scalar::norm_tolerance`].
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall(coords.len()));
        }
        let n = norm_sq(&coords).sqrt();
        if (n - T::one()).abs() > T::norm_tolerance() || !n.is_finite() {
            return Err(Error::NotUnit { norm: n.to_f64_lossy() });
        }
        Ok(Self(coords))
    }

    /// Scales `coords` to unit length. Fails on norms below [`Scalar::degenerate_norm`].
    pub fn normalize(mut coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall(coords.len()));
        }
        let n = norm_sq(&coords).sqrt();
        if !(n >= T::degenerate_norm()) || !n.is_finite() {
            return Err(Error::DegenerateStep { particle: 0, norm: n.to_f64_lossy() });
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(Self(coords))
    }

    /// The `k`-th standard basis vector of ℝ^d.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        if k >= d {
            return Err(Error::AxisOutOfRange { axis: k, dim: d });
        }
        let mut c = vec![T::zero(); d];
        c[k] = T::one();
        Ok(Self(c))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|&x| -x).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|x| x.to_f64_lossy()).collect()
    }

    pub fn cast<U: Scalar>(&self) -> UnitVector<U> {
        UnitVector(self.0.iter().map(|x| U::of(x.to_f64_lossy())).collect())
    }
}

impl<T> AsRef<[T]> for UnitVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// Tangent projection `P(v) y = y - <v, y> v` for unit `v`.
pub fn project_tangent<T: Scalar>(v: &UnitVector<T>, y: &[T]) -> Result<Vec<T>> {
    if y.len() != v.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), actual: y.len() });
    }
    Ok(project_tangent_unchecked(v.as_slice(), y))
}

#[inline]
pub(crate) fn project_tangent_unchecked<T: Scalar>(v: &[T], y: &[T]) -> Vec<T> {
    let s = dot(v, y);
    v.iter().zip(y).map(|(&vk, &yk)| yk - s * vk).collect()
}

/// Seedable counter-based random stream.
///
/// A stream is identified by `(seed, stream_id)`; distinct ids give independent
/// sequences under the same seed. Output is bit-identical across platforms.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Uniform sample on 𝕊^{d-1} by normalizing a standard Gaussian vector.
pub fn sample_uniform_sphere<T: Scalar>(d: usize, rng: &mut RngStream) -> Result<UnitVector<T>> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    loop {
        let xi: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let n = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-12 {
            continue;
        }
        return Ok(UnitVector(xi.into_iter().map(|x| T::of(x / n)).collect()));
    }
}

/// Uniform sample on the half sphere `{v : v[axis] >= 0}`.
pub fn sample_uniform_halfsphere<T: Scalar>(d: usize, axis: usize, rng: &mut RngStream) -> Result<UnitVector<T>> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if axis >= d {
        return Err(Error::AxisOutOfRange { axis, dim: d });
    }
    let mut v = sample_uniform_sphere::<T>(d, rng)?;
    if v.0[axis] < T::zero() {
        v.0.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(v)
}

/// `d` i.i.d. draws from N(0, dt): a Brownian increment over a step of length `dt`.
pub fn gaussian_increment<T: Scalar>(d: usize, dt: f64, rng: &mut RngStream) -> Result<Vec<T>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", format!("must be positive and finite, got {dt}")));
    }
    let s = dt.sqrt();
    Ok((0..d).map(|_| T::of(s * rng.standard_normal())).collect())
}
