//! Point clouds for subspace detection: synthetic generators and CSV ingestion.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sphere::{project_tangent_unchecked, sample_uniform_sphere, RngStream, UnitVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrangement {
    /// Directions within a small angular radius of one common random direction.
    NearlyParallel,
    /// Directions i.i.d. uniform on the sphere.
    Random,
}

/// Parameters of a synthetic union-of-lines point cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub dim: usize,
    pub n_subspaces: usize,
    pub points_per_subspace: usize,
    /// Standard deviation of the isotropic Gaussian noise added to inliers.
    pub noise: f64,
    pub n_outliers: usize,
    pub arrangement: Arrangement,
    /// Angular radius (radians) of the cone holding nearly parallel directions.
    pub angular_radius: f64,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self {
            dim: 10,
            n_subspaces: 25,
            points_per_subspace: 100,
            noise: 0.01,
            n_outliers: 0,
            arrangement: Arrangement::NearlyParallel,
            angular_radius: 0.1,
        }
    }
}

/// `M` points in ℝ^d, stored row-major and centered to zero mean.
///
/// Generated clouds list inliers first (grouped by subspace), then outliers.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud<T> {
    d: usize,
    points: Vec<T>,
    pub inliers_per_subspace: Vec<usize>,
    pub n_outliers: usize,
    /// Line directions used to generate the cloud, if synthetic.
    pub directions: Vec<Vec<f64>>,
}

impl<T: Scalar> PointCloud<T> {
    /// Builds a centered cloud from rows. All rows must share one length `d >= 1`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyCloud);
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::EmptyCloud);
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: r.len() });
        }
        let mut mean = vec![0.0f64; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
        let points = rows.iter().flat_map(|r| r.iter().zip(&mean).map(|(x, m)| T::of(x - m))).collect();
        Ok(Self { d, points, inliers_per_subspace: vec![], n_outliers: 0, directions: vec![] })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.points.chunks_exact(self.d)
    }

    pub fn n_inliers(&self) -> usize {
        self.inliers_per_subspace.iter().sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (mk, x) in m.iter_mut().zip(r) {
                *mk += x.to_f64_lossy();
            }
        }
        m.iter_mut().for_each(|x| *x /= self.len() as f64);
        m
    }

    /// The inlier rows alone, re-centered. For non-synthetic clouds this is the whole cloud.
    pub fn without_outliers(&self) -> Result<Self> {
        let n = if self.inliers_per_subspace.is_empty() { self.len() } else { self.n_inliers() };
        let rows: Vec<Vec<f64>> = self.rows().take(n).map(|r| r.iter().map(|x| x.to_f64_lossy()).collect()).collect();
        let mut c = Self::from_rows(&rows)?;
        c.inliers_per_subspace = self.inliers_per_subspace.clone();
        c.directions = self.directions.clone();
        Ok(c)
    }
}

/// Samples lines `t u_k + N(0, noise² I)` with `t ~ U[-1, 1]`, adds outliers uniform in
/// the unit ball, then centers the cloud.
pub fn generate_subspace_cloud<T: Scalar>(spec: &CloudSpec, rng: &mut RngStream) -> Result<PointCloud<T>> {
    let d = spec.dim;
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if spec.n_subspaces * spec.points_per_subspace + spec.n_outliers == 0 {
        return Err(Error::EmptyCloud);
    }
    if !(spec.noise >= 0.0) || !(spec.angular_radius >= 0.0) {
        return Err(Error::invalid("cloud", "noise and angular radius must be nonnegative"));
    }

    let center = sample_uniform_sphere::<f64>(d, rng)?;
    let directions: Vec<Vec<f64>> = (0..spec.n_subspaces)
        .map(|_| match spec.arrangement {
            Arrangement::Random => sample_uniform_sphere::<f64>(d, rng).map(UnitVector::into_inner),
            Arrangement::NearlyParallel => {
                let theta = spec.angular_radius * rng.uniform();
                let w = loop {
                    let g: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                    let t = project_tangent_unchecked(center.as_slice(), &g);
                    if let Ok(u) = UnitVector::<f64>::normalize(t) {
                        break u;
                    }
                };
                let u: Vec<f64> = center
                    .as_slice()
                    .iter()
                    .zip(w.as_slice())
                    .map(|(c, w)| theta.cos() * c + theta.sin() * w)
                    .collect();
                UnitVector::normalize(u).map(UnitVector::into_inner)
            }
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(spec.n_subspaces * spec.points_per_subspace + spec.n_outliers);
    for u in &directions {
        for _ in 0..spec.points_per_subspace {
            let t = 2.0 * rng.uniform() - 1.0;
            rows.push(u.iter().map(|&uk| t * uk + spec.noise * rng.standard_normal()).collect::<Vec<f64>>());
        }
    }
    for _ in 0..spec.n_outliers {
        let dir = sample_uniform_sphere::<f64>(d, rng)?;
        let r = rng.uniform().powf(1.0 / d as f64);
        rows.push(dir.as_slice().iter().map(|x| r * x).collect());
    }

    let mut cloud = PointCloud::from_rows(&rows)?;
    cloud.inliers_per_subspace = vec![spec.points_per_subspace; spec.n_subspaces];
    cloud.n_outliers = spec.n_outliers;
    cloud.directions = directions;
    Ok(cloud)
}

/// Reads comma-separated rows of floats (no header). The result is centered.
pub fn load_point_cloud<T: Scalar>(path: impl AsRef<Path>) -> Result<PointCloud<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::fs::File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse { line: line + 1, reason: format!("not a number: `{f}`") })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: line + 1,
                    reason: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    PointCloud::from_rows(&rows)
}

/// Writes the cloud as comma-separated rows with shortest round-trip float formatting.
pub fn save_point_cloud<T: Scalar>(cloud: &PointCloud<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in cloud.rows() {
        let line: Vec<String> = r.iter().map(|x| format!("{}", x.to_f64_lossy())).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}
