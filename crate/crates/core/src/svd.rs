//! Dominant right-singular direction of a point cloud by power iteration on `XᵀX`.

use crate::error::{Error, Result};
use crate::objectives::PointCloud;
use crate::scalar::Scalar;
use crate::sphere::{sample_uniform_sphere, RngStream, UnitVector};

const START_SEED: u64 = 0x0005_eed0_f5bd;

/// Top eigenpair of a symmetric PSD matrix (row-major `d × d`), sign-normalized so that the first
/// non-negligible coordinate is positive.
pub fn power_iteration(gram: &[f64], d: usize, tol: f64, max_iter: usize) -> Result<(UnitVector<f64>, f64)> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if gram.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, actual: gram.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
    }
    let mut v = sample_uniform_sphere::<f64>(d, &mut RngStream::new(START_SEED, 0))?.into_inner();
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        let w: Vec<f64> = gram.chunks_exact(d).map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::invalid("cloud", "has no spread; every direction is dominant"));
        }
        let w: Vec<f64> = w.iter().map(|x| x / norm).collect();
        last_step = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        v = w;
        if last_step < tol {
            let gv: Vec<f64> = gram.chunks_exact(d).map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
            let eig = gv.iter().zip(&v).map(|(a, b)| a * b).sum();
            return Ok((sign_normalized(UnitVector::normalize(v)?), eig));
        }
    }
    Err(Error::NoConvergence { max_iter, last_step })
}

fn sign_normalized(v: UnitVector<f64>) -> UnitVector<f64> {
    let scale = v.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    match v.as_slice().iter().find(|x| x.abs() > 1e-12 * scale) {
        Some(&x) if x < 0.0 => v.neg(),
        _ => v,
    }
}

/// `XᵀX` for rows of length `d`.
pub fn gram_matrix<'a>(rows: impl Iterator<Item = &'a [f64]>, d: usize) -> Vec<f64> {
    let mut g = vec![0.0; d * d];
    for x in rows {
        for i in 0..d {
            for j in 0..d {
                g[i * d + j] += x[i] * x[j];
            }
        }
    }
    g
}

/// Dominant right-singular vector of the cloud matrix and the top eigenvalue of `XᵀX`.
pub fn svd_top_pair<T: Scalar>(cloud: &PointCloud<T>, tol: f64, max_iter: usize) -> Result<(UnitVector<T>, f64)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let d = cloud.dim();
    let rows: Vec<Vec<f64>> = cloud.rows().map(|r| r.iter().map(|x| x.to_f64_lossy()).collect()).collect();
    let g = gram_matrix(rows.iter().map(Vec::as_slice), d);
    let (v, eig) = power_iteration(&g, d, tol, max_iter)?;
    Ok((v.cast(), eig))
}

/// Dominant right-singular direction of the (centered) cloud, first nonzero coordinate positive.
pub fn svd_top_direction<T: Scalar>(cloud: &PointCloud<T>, tol: f64, max_iter: usize) -> Result<UnitVector<T>> {
    svd_top_pair(cloud, tol, max_iter).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{generate_subspace_cloud, CloudSpec};
    use nalgebra::{DMatrix, SymmetricEigen};

    fn random_rows(m: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = RngStream::new(seed, 0);
        (0..m).map(|_| (0..d).map(|_| rng.standard_normal()).collect()).collect()
    }

    #[test]
    fn diagonal_case() {
        let rows = [vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = gram_matrix(rows.iter().map(Vec::as_slice), 2);
        assert_eq!(g, vec![2.0, 0.0, 0.0, 1.0]);
        let (v, eig) = power_iteration(&g, 2, 1e-14, 10_000).unwrap();
        assert!((v.as_slice()[0] - 1.0).abs() < 1e-12 && v.as_slice()[1].abs() < 1e-12);
        assert!((eig - 2.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(power_iteration(&[0.0; 4], 2, 1e-10, 50).is_err());
        assert!(matches!(power_iteration(&[1.0], 1, 1e-10, 50), Err(Error::DimensionTooSmall(1))));
        // Top eigenvalues of equal magnitude and opposite sign: the iterate oscillates forever.
        let g = [1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.5];
        assert!(matches!(power_iteration(&g, 3, 1e-14, 200), Err(Error::NoConvergence { max_iter: 200, .. })));
    }

    #[test]
    fn top_eigenvalue_matches_dense_eigensolve() {
        for seed in 0..20 {
            let rows = random_rows(10, 5, seed);
            let cloud = PointCloud::<f64>::from_rows(&rows).unwrap();
            let (v, eig) = svd_top_pair(&cloud, 1e-13, 1_000_000).unwrap();
            let x = DMatrix::from_fn(10, 5, |i, j| cloud.point(i)[j]);
            let es = SymmetricEigen::new(x.transpose() * &x);
            let (k, &top) = es.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            assert!((eig - top).abs() <= 1e-8 * top, "seed {seed}: {eig} vs {top}");
            let u = es.eigenvectors.column(k);
            let dot: f64 = v.as_slice().iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            assert!(dot.abs() > 1.0 - 1e-9);
            assert!(v.as_slice()[0] > 0.0);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let rows = random_rows(30, 4, 77);
        let q = DMatrix::from_fn(4, 4, |i, j| rows[i][j] + rows[i + 4][j]).qr().q();
        let rotated: Vec<Vec<f64>> =
            rows.iter().map(|r| (0..4).map(|i| (0..4).map(|j| q[(i, j)] * r[j]).sum()).collect()).collect();
        let a = svd_top_direction(&PointCloud::<f64>::from_rows(&rows).unwrap(), 1e-13, 1_000_000).unwrap();
        let b = svd_top_direction(&PointCloud::<f64>::from_rows(&rotated).unwrap(), 1e-13, 1_000_000).unwrap();
        let qa: Vec<f64> = (0..4).map(|i| (0..4).map(|j| q[(i, j)] * a.as_slice()[j]).sum()).collect();
        let minus: f64 = qa.iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let plus: f64 = qa.iter().zip(b.as_slice()).map(|(x, y)| (x + y).powi(2)).sum::<f64>().sqrt();
        assert!(minus.min(plus) < 1e-9);
    }

    #[test]
    fn nearly_parallel_spectrum_has_a_dominant_direction() {
        let cloud = generate_subspace_cloud::<f64>(&CloudSpec::default(), &mut RngStream::new(12, 0)).unwrap();
        let x = DMatrix::from_fn(cloud.len(), cloud.dim(), |i, j| cloud.point(i)[j]);
        let mut s: Vec<f64> = x.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[0] / s[1] > 3.0, "{s:?}");
    }

    #[test]
    fn single_line_direction_recovered() {
        let spec = CloudSpec { n_subspaces: 1, noise: 0.0, ..Default::default() };
        let cloud = generate_subspace_cloud::<f64>(&spec, &mut RngStream::new(13, 0)).unwrap();
        let v = svd_top_direction(&cloud, 1e-13, 100_000).unwrap();
        let dot: f64 = v.as_slice().iter().zip(&cloud.directions[0]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() > 1.0 - 1e-12);
    }
}
