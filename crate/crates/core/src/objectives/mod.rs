//! Cost functions on the sphere and the benchmark problem families.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::sphere::UnitVector;

mod ackley;
mod cloud;
mod phase_retrieval;
mod subspace;

pub use ackley::{ackley_eval, AckleySphere};
pub use cloud::{generate_subspace_cloud, load_point_cloud, save_point_cloud, Arrangement, CloudSpec, PointCloud};
pub use phase_retrieval::{generate_phase_retrieval, recover_signal, FrameKind, PhaseRetrievalProblem};
pub use subspace::{
    score_subspace_run, subspace_energy_eval, SubspaceEnergyParams, SubspaceObjective, SubspaceScore, SubspaceSuccess,
};

/// Objective-specific verdict on a candidate minimizer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    /// `None` when the objective has no success criterion.
    pub success: Option<bool>,
    pub metrics: BTreeMap<String, f64>,
}

/// A deterministic cost `E: 𝕊^{d-1} → ℝ`.
pub trait Objective<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    /// Ambient dimension `d`.
    fn dimension(&self) -> usize;

    /// Evaluates at a unit vector of length [`Objective::dimension`].
    fn evaluate(&self, v: &[T]) -> T;

    fn known_minimizer(&self) -> Option<&UnitVector<T>> {
        None
    }

    /// Whether `E(v) = E(-v)`; error metrics against the minimizer are then sign-symmetric.
    fn sign_symmetric(&self) -> bool {
        false
    }

    /// Applies the problem's own success rule to the reported minimizer.
    fn assess(&self, _v: &[T]) -> Assessment {
        Assessment::default()
    }
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    name: String,
    dim: usize,
    f: F,
}

impl<F> FnObjective<F> {
    pub fn new(name: impl Into<String>, dim: usize, f: F) -> Self {
        Self { name: name.into(), dim, f }
    }
}

impl<T: Scalar, F: Fn(&[T]) -> T + Send + Sync> Objective<T> for FnObjective<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, v: &[T]) -> T {
        (self.f)(v)
    }
}

impl<T: Scalar, O: Objective<T> + ?Sized> Objective<T> for Box<O> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn evaluate(&self, v: &[T]) -> T {
        (**self).evaluate(v)
    }

    fn known_minimizer(&self) -> Option<&UnitVector<T>> {
        (**self).known_minimizer()
    }

    fn sign_symmetric(&self) -> bool {
        (**self).sign_symmetric()
    }

    fn assess(&self, v: &[T]) -> Assessment {
        (**self).assess(v)
    }
}
