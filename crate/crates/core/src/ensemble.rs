//! Particle ensembles: the empirical measure with cached objective values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::scalar::Scalar;
use crate::sphere::{sample_uniform_halfsphere, sample_uniform_sphere, RngStream, UnitVector};

/// Initial particle law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Initialization {
    FullSphere,
    HalfSphere { axis: usize },
}

/// N particles on 𝕊^{d-1} together with their objective values.
///
/// `energies[i]` always equals the objective at `particles[i]`; every mutation
/// path inside the crate re-evaluates moved particles before returning.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble<T> {
    pub(crate) particles: Vec<UnitVector<T>>,
    pub(crate) energies: Vec<T>,
}

impl<T: Scalar> Ensemble<T> {
    /// Builds an ensemble and evaluates `objective` on every particle.
    pub fn evaluate(particles: Vec<UnitVector<T>>, objective: &dyn Objective<T>) -> Result<Self> {
        let energies = particles.iter().map(|p| objective.evaluate(p.as_slice())).collect();
        Self::with_energies(particles, energies)
    }

    /// Builds an ensemble from precomputed energies. The caller vouches that they
    /// match the objective in use.
    pub fn with_energies(particles: Vec<UnitVector<T>>, energies: Vec<T>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if energies.len() != particles.len() {
            return Err(Error::DimensionMismatch { expected: particles.len(), actual: energies.len() });
        }
        let d = particles[0].dim();
        if let Some(p) = particles.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: p.dim() });
        }
        Ok(Self { particles, energies })
    }

    /// Draws `n` i.i.d. particles from `init` and evaluates them.
    pub fn sample(n: usize, objective: &dyn Objective<T>, init: Initialization, rng: &mut RngStream) -> Result<Self> {
        let d = objective.dimension();
        let particles = (0..n)
            .map(|_| match init {
                Initialization::FullSphere => sample_uniform_sphere(d, rng),
                Initialization::HalfSphere { axis } => sample_uniform_halfsphere(d, axis, rng),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::evaluate(particles, objective)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    /// Always false for a constructed ensemble; present for API symmetry.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.particles[0].dim()
    }

    pub fn particles(&self) -> &[UnitVector<T>] {
        &self.particles
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Index of the lowest energy; ties go to the lowest index.
    pub fn best_index(&self) -> usize {
        best_of(self.energies.iter().copied().enumerate())
    }

    /// Coordinate-wise mean of the particles (not renormalized).
    pub fn mean(&self) -> Vec<T> {
        let n = T::of(self.len() as f64);
        let mut m = vec![T::zero(); self.dim()];
        for p in &self.particles {
            for (mk, &pk) in m.iter_mut().zip(p.as_slice()) {
                *mk += pk;
            }
        }
        m.iter_mut().for_each(|x| *x /= n);
        m
    }

    /// Keeps the particles at `indices` (must be strictly increasing), preserving order.
    pub(crate) fn retain_indices(&mut self, indices: &[usize]) {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let mut keep = indices.iter().peekable();
        let mut i = 0;
        self.particles.retain(|_| {
            let k = keep.peek().is_some_and(|&&j| j == i);
            if k {
                keep.next();
            }
            i += 1;
            k
        });
        let mut keep = indices.iter().peekable();
        let mut i = 0;
        self.energies.retain(|_| {
            let k = keep.peek().is_some_and(|&&j| j == i);
            if k {
                keep.next();
            }
            i += 1;
            k
        });
    }
}

/// Lowest-energy index over `(index, energy)` pairs; first occurrence wins ties.
/// NaN energies are never selected unless every energy is NaN.
pub(crate) fn best_of<T: Scalar>(it: impl Iterator<Item = (usize, T)>) -> usize {
    let mut best: Option<(usize, T)> = None;
    for (i, e) in it {
        match best {
            None => best = Some((i, e)),
            Some((_, b)) if e < b || (b.is_nan() && !e.is_nan()) => best = Some((i, e)),
            _ => {}
        }
    }
    best.map(|(i, _)| i).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::FnObjective;

    fn e(d: usize, k: usize) -> UnitVector<f64> {
        UnitVector::basis(d, k).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(Ensemble::<f64>::with_energies(vec![], vec![]), Err(Error::EmptyEnsemble)));
        assert!(Ensemble::with_energies(vec![e(2, 0)], vec![]).is_err());
        assert!(Ensemble::with_energies(vec![e(2, 0), e(3, 0)], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn best_index_ties_to_lowest() {
        let ens = Ensemble::with_energies(vec![e(2, 0), e(2, 1), e(2, 0)], vec![1.0, 0.5, 0.5]).unwrap();
        assert_eq!(ens.best_index(), 1);
    }

    #[test]
    fn retain_keeps_order_and_cache() {
        let obj = FnObjective::new("x0", 3, |v: &[f64]| v[0]);
        let mut rng = RngStream::new(3, 0);
        let ens = Ensemble::sample(10, &obj, Initialization::FullSphere, &mut rng).unwrap();
        let mut kept = ens.clone();
        kept.retain_indices(&[1, 4, 9]);
        assert_eq!(kept.len(), 3);
        assert_eq!(kept.particles()[1], ens.particles()[4]);
        for (p, &en) in kept.particles().iter().zip(kept.energies()) {
            assert_eq!(obj.evaluate(p.as_slice()), en);
        }
    }

    #[test]
    fn half_sphere_init_respected() {
        let obj = FnObjective::new("x0", 4, |v: &[f64]| v[0]);
        let mut rng = RngStream::new(8, 0);
        let ens = Ensemble::sample(200, &obj, Initialization::HalfSphere { axis: 3 }, &mut rng).unwrap();
        assert!(ens.particles().iter().all(|p| p.as_slice()[3] >= 0.0));
    }
}
