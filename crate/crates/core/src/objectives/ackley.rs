use crate::error::{Error, Result};
use crate::objectives::{Assessment, Objective};
use crate::scalar::Scalar;
use crate::sphere::UnitVector;

/// Ackley function restricted to the sphere, shifted so its global minimum sits at `shift`.
///
/// `E(v) = -A exp(-a sqrt(b²/d Σ (v_k - v*_k)²)) - exp(1/d Σ cos(2π b (v_k - v*_k))) + e + B`
#[derive(Clone, Debug)]
pub struct AckleySphere<T> {
    pub amplitude: T,
    pub decay: T,
    pub frequency: T,
    pub offset: T,
    shift: UnitVector<T>,
    /// Half-width of the ‖·‖∞ ball around the minimizer that counts as success.
    pub success_radius: f64,
}

impl<T: Scalar> AckleySphere<T> {
    /// Standard constants `A = 20, a = 0.2, b = 3, B = 20`.
    pub fn new(shift: UnitVector<T>) -> Self {
        Self {
            amplitude: T::of(20.0),
            decay: T::of(0.2),
            frequency: T::of(3.0),
            offset: T::of(20.0),
            shift,
            success_radius: 0.25,
        }
    }

    /// Minimum at the last basis vector `(0, …, 0, 1)`.
    pub fn north(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        Ok(Self::new(UnitVector::basis(d, d - 1)?))
    }

    /// Minimum at `(d^{-1/2}, …, d^{-1/2})`.
    pub fn diagonal(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        UnitVector::normalize(vec![T::one(); d]).map(Self::new)
    }

    pub fn shift(&self) -> &UnitVector<T> {
        &self.shift
    }
}

/// Evaluates the shifted Ackley function at `v`.
pub fn ackley_eval<T: Scalar>(v: &[T], params: &AckleySphere<T>) -> T {
    let d = T::of(v.len() as f64);
    let two_pi_b = T::TAU() * params.frequency;
    let mut sq = T::zero();
    let mut cos_sum = T::zero();
    for (&x, &s) in v.iter().zip(params.shift.as_slice()) {
        let diff = x - s;
        sq += diff * diff;
        cos_sum += (two_pi_b * diff).cos();
    }
    let radial = (params.frequency * params.frequency / d * sq).sqrt();
    -params.amplitude * (-params.decay * radial).exp() - (cos_sum / d).exp() + T::E() + params.offset
}

impl<T: Scalar> Objective<T> for AckleySphere<T> {
    fn name(&self) -> &str {
        "ackley"
    }

    fn dimension(&self) -> usize {
        self.shift.dim()
    }

    fn evaluate(&self, v: &[T]) -> T {
        ackley_eval(v, self)
    }

    fn known_minimizer(&self) -> Option<&UnitVector<T>> {
        Some(&self.shift)
    }

    fn assess(&self, v: &[T]) -> Assessment {
        let sup = v.iter().zip(self.shift.as_slice()).map(|(&a, &b)| (a - b).abs().to_f64_lossy()).fold(0.0, f64::max);
        let mut a = Assessment { success: Some(sup <= self.success_radius), ..Default::default() };
        a.metrics.insert("sup_norm_error".into(), sup);
        a
    }
}
