//! The weighted consensus point `v_α = Σ_j w_j V_j / Σ_j w_j`, `w_j = exp(-α (E_j - E*))`.

use serde::{Deserialize, Serialize};

use crate::ensemble::{best_of, Ensemble};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sphere::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusPoint<T> {
    /// Convex combination of unit vectors; generally not unit length.
    pub coords: Vec<T>,
    /// `Σ_j exp(-α (E_j - E*))`, at least 1.
    pub weight_mass: T,
    /// Ensemble index of the lowest-energy particle that contributed (lowest index on ties).
    pub argmin_index: usize,
}

impl<T: Scalar> ConsensusPoint<T> {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }
}

/// Consensus over the particles at `indices`. Sums run in the given order.
pub fn consensus_over<T: Scalar>(ensemble: &Ensemble<T>, indices: &[usize], alpha: T) -> Result<ConsensusPoint<T>> {
    if indices.is_empty() || ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(alpha >= T::zero()) {
        return Err(Error::invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    let energies = ensemble.energies();
    let argmin = best_of(indices.iter().map(|&i| (i, energies[i])));
    let e_min = energies[argmin];
    let mut coords = vec![T::zero(); ensemble.dim()];
    let mut mass = T::zero();
    for &j in indices {
        let gap = energies[j] - e_min;
        // The best particle gets weight exactly 1 even when α = ∞.
        let w = if gap <= T::zero() { T::one() } else { (-alpha * gap).exp() };
        if w == T::zero() {
            continue;
        }
        mass += w;
        for (c, &x) in coords.iter_mut().zip(ensemble.particles()[j].as_slice()) {
            *c += w * x;
        }
    }
    coords.iter_mut().for_each(|c| *c /= mass);
    Ok(ConsensusPoint { coords, weight_mass: mass, argmin_index: argmin })
}

/// Consensus over the whole ensemble.
pub fn consensus_point<T: Scalar>(ensemble: &Ensemble<T>, alpha: T) -> Result<ConsensusPoint<T>> {
    let all: Vec<usize> = (0..ensemble.len()).collect();
    consensus_over(ensemble, &all, alpha)
}

/// `m` distinct indices from `0..n`, uniformly at random, sorted ascending.
pub fn sample_batch(n: usize, m: usize, rng: &mut RngStream) -> Vec<usize> {
    let m = m.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let j = k + rng.below(n - k);
        idx.swap(k, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

/// Consensus over a fresh random subset of size `m`. Falls back to the full ensemble when `m >= N`.
pub fn consensus_point_batch<T: Scalar>(
    ensemble: &Ensemble<T>,
    alpha: T,
    m: usize,
    rng: &mut RngStream,
) -> Result<ConsensusPoint<T>> {
    consensus_point_batch_with_indices(ensemble, alpha, m, rng).map(|(c, _)| c)
}

/// As [`consensus_point_batch`], also returning the selected indices.
pub fn consensus_point_batch_with_indices<T: Scalar>(
    ensemble: &Ensemble<T>,
    alpha: T,
    m: usize,
    rng: &mut RngStream,
) -> Result<(ConsensusPoint<T>, Vec<usize>)> {
    if m < 1 {
        return Err(Error::invalid("batch_size", "must be at least 1"));
    }
    let n = ensemble.len();
    let idx = if m >= n { (0..n).collect() } else { sample_batch(n, m, rng) };
    consensus_over(ensemble, &idx, alpha).map(|c| (c, idx))
}

/// Random partition of `0..n` into `max(1, ⌊n/m⌋)` batches of size `m`; the remainder joins the last batch.
pub fn disjoint_batches(n: usize, m: usize, rng: &mut RngStream) -> Vec<Vec<usize>> {
    let m = m.max(1);
    if m >= n {
        return vec![(0..n).collect()];
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n.saturating_sub(1) {
        let j = k + rng.below(n - k);
        perm.swap(k, j);
    }
    let s = n / m;
    (0..s)
        .map(|b| {
            let end = if b + 1 == s { n } else { (b + 1) * m };
            let mut v = perm[b * m..end].to_vec();
            v.sort_unstable();
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{dist_sq, norm_sq};
    use crate::sphere::{sample_uniform_sphere, UnitVector};
    use proptest::prelude::*;

    fn pair(e: [f64; 2]) -> Ensemble<f64> {
        let p = vec![UnitVector::basis(2, 0).unwrap(), UnitVector::basis(2, 1).unwrap()];
        Ensemble::with_energies(p, e.to_vec()).unwrap()
    }

    fn random_ensemble(n: usize, d: usize, seed: u64, energy_scale: f64) -> Ensemble<f64> {
        let mut rng = RngStream::new(seed, 0);
        let p: Vec<_> = (0..n).map(|_| sample_uniform_sphere::<f64>(d, &mut rng).unwrap()).collect();
        let e = (0..n).map(|_| energy_scale * rng.uniform()).collect();
        Ensemble::with_energies(p, e).unwrap()
    }

    #[test]
    fn equal_weights_give_mean() {
        let c = consensus_point(&pair([3.0, 7.0]), 0.0).unwrap();
        assert_eq!(c.coords, vec![0.5, 0.5]);
        assert_eq!(c.weight_mass, 2.0);
        assert_eq!(c.argmin_index, 0);
    }

    #[test]
    fn huge_alpha_selects_argmin() {
        let c = consensus_point(&pair([0.0, 1.0]), 1e15).unwrap();
        assert!((c.coords[0] - 1.0).abs() < 1e-12 && c.coords[1].abs() < 1e-12);
        let c = consensus_point(&pair([0.0, 1.0]), f64::INFINITY).unwrap();
        assert_eq!(c.coords, vec![1.0, 0.0]);
    }

    #[test]
    fn shifted_softmax_by_hand() {
        let c = consensus_point(&pair([0.0, 1.0]), 3f64.ln()).unwrap();
        assert!((c.coords[0] - 0.75).abs() < 1e-15);
        assert!((c.coords[1] - 0.25).abs() < 1e-15);
        assert!((c.weight_mass - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(consensus_point(&pair([1.0, 1.0]), 10.0).unwrap().argmin_index, 0);
    }

    #[test]
    fn rejects_negative_alpha() {
        assert!(consensus_point(&pair([0.0, 1.0]), -1.0).is_err());
    }

    #[test]
    fn full_batch_is_full_consensus() {
        let ens = random_ensemble(30, 4, 1, 5.0);
        let full = consensus_point(&ens, 2.0).unwrap();
        let mut rng = RngStream::new(1, 1);
        assert_eq!(consensus_point_batch(&ens, 2.0, 30, &mut rng).unwrap(), full);
        assert_eq!(consensus_point_batch(&ens, 2.0, 100, &mut rng).unwrap(), full);
        assert!(consensus_point_batch(&ens, 2.0, 0, &mut rng).is_err());
    }

    #[test]
    fn singleton_batch_returns_its_particle() {
        let ens = random_ensemble(30, 4, 2, 5.0);
        let mut rng = RngStream::new(2, 1);
        let (c, idx) = consensus_point_batch_with_indices(&ens, 7.0, 1, &mut rng).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(c.weight_mass, 1.0);
        assert_eq!(c.coords, ens.particles()[idx[0]].as_slice());
    }

    #[test]
    fn batch_mean_recomputed_from_subset() {
        let ens = random_ensemble(100, 3, 3, 1.0);
        let mut rng = RngStream::new(3, 1);
        let (c, idx) = consensus_point_batch_with_indices(&ens, 0.0, 40, &mut rng).unwrap();
        assert_eq!(idx.len(), 40);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for k in 0..3 {
            let mean: f64 = idx.iter().map(|&i| ens.particles()[i].as_slice()[k]).sum::<f64>() / 40.0;
            assert!((c.coords[k] - mean).abs() < 1e-15);
        }
        let (_, again) = consensus_point_batch_with_indices(&ens, 0.0, 40, &mut rng).unwrap();
        assert_ne!(idx, again);
    }

    #[test]
    fn disjoint_partition_covers_every_index_once() {
        let mut rng = RngStream::new(4, 0);
        let b = disjoint_batches(23, 5, &mut rng);
        assert_eq!(b.len(), 4);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5, 5, 8]);
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert_eq!(disjoint_batches(4, 9, &mut rng), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn stable_for_extreme_alpha() {
        for (seed, alpha) in [(5, 1.0), (6, 1e3), (7, 1e15), (8, 1e300)] {
            let ens = random_ensemble(50, 5, seed, 1e6);
            let c = consensus_point(&ens, alpha).unwrap();
            assert!(c.coords.iter().all(|x| x.is_finite()));
            assert!(c.weight_mass >= 1.0 && c.weight_mass.is_finite());
        }
    }

    proptest! {
        #[test]
        fn shift_invariance(seed in 0u64..10_000, alpha in 0.0f64..50.0, shift in -1_000_000i64..1_000_000) {
            // Dyadic energies and shifts keep E + c exact, isolating the weighting from input rounding.
            let ens = random_ensemble(20, 4, seed, 1.0);
            let dyadic: Vec<f64> = ens.energies().iter().map(|e| (e * 1048576.0).round() / 1048576.0).collect();
            let c = shift as f64 / 1024.0;
            let base = Ensemble::with_energies(ens.particles().to_vec(), dyadic.clone()).unwrap();
            let shifted = Ensemble::with_energies(ens.particles().to_vec(), dyadic.iter().map(|e| e + c).collect()).unwrap();
            let a = consensus_point(&base, alpha).unwrap();
            let b = consensus_point(&shifted, alpha).unwrap();
            for (x, y) in a.coords.iter().zip(&b.coords) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn convexity(seed in 0u64..10_000, alpha in 0.0f64..1e4) {
            let ens = random_ensemble(15, 6, seed, 3.0);
            let c = consensus_point(&ens, alpha).unwrap();
            prop_assert!(norm_sq(&c.coords).sqrt() <= 1.0 + 1e-12);
            prop_assert!(c.weight_mass >= 1.0);
        }

        #[test]
        fn laplace_limit_picks_unique_minimum(seed in 0u64..10_000) {
            let ens = random_ensemble(25, 3, seed, 1.0);
            let c = consensus_point(&ens, 1e15).unwrap();
            let best = ens.best_index();
            prop_assert!(dist_sq(&c.coords, ens.particles()[best].as_slice()).sqrt() < 1e-12);
        }
    }

    /// `(1/N) Σ |V_j - v_α|² <= 4 C V̂` with `C = min(exp(α (max E - min E)), 1e15)` and
    /// `V̂ = (1/2N) Σ |V_j - V̄|²`.
    #[test]
    fn spread_around_consensus_is_bounded_by_variance() {
        let mut rng = RngStream::new(99, 0);
        for k in 0..100u64 {
            let n = 2 + rng.below(60);
            let d = 2 + rng.below(8);
            let alpha = [0.0, 0.5, 5.0, 50.0, 1e3][rng.below(5)];
            let ens = random_ensemble(n, d, 1000 + k, 1.0 + 10.0 * rng.uniform());
            let c = consensus_point(&ens, alpha).unwrap();
            let mean = ens.mean();
            let nf = n as f64;
            let spread: f64 = ens.particles().iter().map(|v| dist_sq(v.as_slice(), &c.coords)).sum::<f64>() / nf;
            let var_hat: f64 = ens.particles().iter().map(|v| dist_sq(v.as_slice(), &mean)).sum::<f64>() / (2.0 * nf);
            let (lo, hi) =
                ens.energies().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
            let c_bound = (alpha * (hi - lo)).exp().min(1e15);
            assert!(spread <= 4.0 * c_bound * var_hat + 1e-12, "case {k}: {spread} > 4 * {c_bound} * {var_hat}");
        }
    }
}
