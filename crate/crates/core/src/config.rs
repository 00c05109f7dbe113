//! Flat JSON run configuration: one key per solver input, plus the problem description.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::Initialization;
use crate::error::{Error, Result};
use crate::integrators::{BatchConfig, SchemeKind};
use crate::monte_carlo::{aggregate, run_replications, AggregateReport, ObjectiveFactory};
use crate::objectives::{
    generate_phase_retrieval, generate_subspace_cloud, load_point_cloud, AckleySphere, Arrangement, CloudSpec,
    FrameKind, Objective, PointCloud, SubspaceEnergyParams, SubspaceObjective, SubspaceSuccess,
};
use crate::scalar::Scalar;
use crate::schedules::{default_ramp_factor, AlphaRamp, CullingPolicy, SigmaDecay, StopRule};
use crate::solver::{streams, RunReport, SolverConfig};
use crate::sphere::{RngStream, UnitVector};
use crate::svd::svd_top_direction;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    #[default]
    Ackley,
    PhaseRetrieval,
    Subspace,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckleyMinimizer {
    /// `(0, …, 0, 1)`.
    #[default]
    North,
    /// `(d^{-1/2}, …, d^{-1/2})`.
    Diagonal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaDecayKind {
    #[default]
    Constant,
    Geometric,
    Log,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    FullSphere,
    /// Half sphere `{v : v[init_axis] >= 0}`; the axis defaults to the last coordinate.
    #[default]
    HalfSphere,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceRule {
    #[default]
    Distance,
    RelativeEnergy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceOracle {
    /// Top singular direction of the cloud as optimized.
    #[default]
    Svd,
    /// Top singular direction of the cloud with its outliers removed.
    CleanSvd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

/// A complete run description. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub objective: ObjectiveKind,
    /// Sphere dimension for Ackley and subspace problems; signal dimension for phase retrieval.
    pub dim: usize,

    pub ackley_minimizer: AckleyMinimizer,

    pub measurements: usize,
    pub frame: FrameKind,
    pub measurement_noise: f64,
    pub recovery_tol: f64,

    pub cloud_file: Option<PathBuf>,
    pub subspaces: usize,
    pub points_per_subspace: usize,
    pub cloud_noise: f64,
    pub outliers: usize,
    pub arrangement: Arrangement,
    pub angular_radius: f64,
    pub p: f64,
    pub delta: f64,
    pub oracle: SubspaceOracle,
    pub success_rule: SubspaceRule,
    pub success_tol: Option<f64>,

    pub dt: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub sigma_decay: SigmaDecayKind,
    pub sigma_tau: f64,
    pub sigma_log0: f64,
    pub alpha: f64,
    /// Enables the geometric α ramp when set.
    pub alpha_max: Option<f64>,
    /// Ramp factor; defaults to reaching `alpha_max` in half the iteration budget.
    pub alpha_factor: Option<f64>,
    pub particles: usize,
    pub batch: Option<usize>,
    pub disjoint_batches: bool,
    pub mu: f64,
    pub n_min: usize,
    pub check_every: usize,
    pub iterations: usize,
    /// `None` disables the residual rule.
    pub residual_eps: Option<f64>,
    pub drift_eps: Option<f64>,
    pub drift_lag: usize,
    pub scheme: SchemeKind,
    pub init: InitKind,
    pub init_axis: Option<usize>,
    pub record_traces: bool,

    pub seed: u64,
    pub runs: usize,
    pub precision: Precision,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cloud = CloudSpec::default();
        Self {
            objective: ObjectiveKind::Ackley,
            dim: 3,
            ackley_minimizer: AckleyMinimizer::North,
            measurements: 256,
            frame: FrameKind::Gaussian,
            measurement_noise: 0.0,
            recovery_tol: 0.05,
            cloud_file: None,
            subspaces: cloud.n_subspaces,
            points_per_subspace: cloud.points_per_subspace,
            cloud_noise: cloud.noise,
            outliers: cloud.n_outliers,
            arrangement: cloud.arrangement,
            angular_radius: cloud.angular_radius,
            p: 2.0,
            delta: 1e-7,
            oracle: SubspaceOracle::Svd,
            success_rule: SubspaceRule::Distance,
            success_tol: None,
            dt: 0.1,
            lambda: 1.0,
            sigma: 0.7,
            sigma_decay: SigmaDecayKind::Constant,
            sigma_tau: 2.0,
            sigma_log0: 1.0,
            alpha: 500.0,
            alpha_max: None,
            alpha_factor: None,
            particles: 50,
            batch: None,
            disjoint_batches: false,
            mu: 0.0,
            n_min: 1,
            check_every: 10,
            iterations: 1000,
            residual_eps: Some(1e-10),
            drift_eps: None,
            drift_lag: 0,
            scheme: SchemeKind::EulerMaruyamaProjected,
            init: InitKind::HalfSphere,
            init_axis: None,
            record_traces: true,
            seed: 0,
            runs: 1,
            precision: Precision::F64,
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path.as_ref())?)?;
        if let (Some(file), Some(dir)) = (&cfg.cloud_file, path.as_ref().parent()) {
            if file.is_relative() {
                cfg.cloud_file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    /// Dimension of the sphere the particles live on.
    pub fn sphere_dim(&self) -> usize {
        match self.objective {
            ObjectiveKind::PhaseRetrieval => self.dim + 1,
            _ => self.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if self.runs < 1 {
            return Err(Error::Config("`runs` must be at least 1".into()));
        }
        if (self.objective != ObjectiveKind::Subspace || self.cloud_file.is_none()) && self.dim < 2 {
            return Err(Error::Config(format!("`dim` must be at least 2, got {}", self.dim)));
        }
        if self.objective == ObjectiveKind::Subspace {
            SubspaceEnergyParams::new(self.p, self.delta).map_err(cfg_err)?;
        }
        if let Some(axis) = self.init_axis {
            if self.cloud_file.is_none() && axis >= self.sphere_dim() {
                return Err(Error::Config(format!(
                    "`init_axis` {axis} out of range for dimension {}",
                    self.sphere_dim()
                )));
            }
        }
        self.solver_config_for_dim(self.sphere_dim().max(2)).and_then(|c| c.validate()).map_err(cfg_err)
    }

    /// Solver settings for particles on 𝕊^{d-1}.
    pub fn solver_config_for_dim(&self, d: usize) -> Result<SolverConfig> {
        let sigma_decay = match self.sigma_decay {
            SigmaDecayKind::Constant => SigmaDecay::Constant,
            SigmaDecayKind::Geometric => SigmaDecay::Geometric { tau: self.sigma_tau },
            SigmaDecayKind::Log => SigmaDecay::LogDecay { sigma0: self.sigma_log0 },
        };
        let alpha_ramp = match self.alpha_max {
            None => AlphaRamp::Constant,
            Some(alpha_max) => AlphaRamp::Geometric {
                factor: self
                    .alpha_factor
                    .unwrap_or_else(|| default_ramp_factor(self.alpha, alpha_max, self.iterations / 2)),
                alpha_max,
            },
        };
        let mut stop_rules = Vec::new();
        if let Some(eps) = self.residual_eps {
            stop_rules.push(StopRule::ConsensusResidual { eps });
        }
        if let Some(eps) = self.drift_eps {
            stop_rules.push(StopRule::ConsensusDrift { eps, lag: self.drift_lag });
        }
        let init = match self.init {
            InitKind::FullSphere => Initialization::FullSphere,
            InitKind::HalfSphere => Initialization::HalfSphere { axis: self.init_axis.unwrap_or(d - 1) },
        };
        Ok(SolverConfig {
            dt: self.dt,
            lambda: self.lambda,
            sigma: self.sigma,
            sigma_decay,
            alpha: self.alpha,
            alpha_ramp,
            n_particles: self.particles,
            batch: self.batch.map(|size| BatchConfig { size, disjoint: self.disjoint_batches }),
            culling: CullingPolicy { mu: self.mu, n_min: self.n_min, check_every: self.check_every },
            n_iterations: self.iterations,
            stop_rules,
            scheme: self.scheme,
            init,
            record_traces: self.record_traces,
        })
    }

    pub fn cloud_spec(&self) -> CloudSpec {
        CloudSpec {
            dim: self.dim,
            n_subspaces: self.subspaces,
            points_per_subspace: self.points_per_subspace,
            noise: self.cloud_noise,
            n_outliers: self.outliers,
            arrangement: self.arrangement,
            angular_radius: self.angular_radius,
        }
    }

    /// True when every run sees the same objective instance.
    pub fn objective_is_fixed(&self) -> bool {
        match self.objective {
            ObjectiveKind::Ackley => true,
            ObjectiveKind::Subspace => self.cloud_file.is_some(),
            ObjectiveKind::PhaseRetrieval => false,
        }
    }

    fn subspace_objective<T: Scalar>(&self, cloud: PointCloud<T>) -> Result<SubspaceObjective<T>> {
        let oracle_cloud = match self.oracle {
            SubspaceOracle::Svd => cloud.clone(),
            SubspaceOracle::CleanSvd => cloud.without_outliers()?,
        };
        let oracle: UnitVector<T> = svd_top_direction(&oracle_cloud, 1e-13, 1_000_000)?;
        let success = match self.success_rule {
            SubspaceRule::Distance => SubspaceSuccess::Distance(self.success_tol.unwrap_or(0.01)),
            SubspaceRule::RelativeEnergy => SubspaceSuccess::RelativeEnergy(self.success_tol.unwrap_or(1e-2)),
        };
        SubspaceObjective::new(cloud, SubspaceEnergyParams::new(self.p, self.delta)?)?.with_oracle(oracle, success)
    }

    /// Builds the objective for a run. Random instances draw from `run_seed`.
    pub fn build_objective<T: Scalar>(&self, run_seed: u64) -> Result<Box<dyn Objective<T>>> {
        let mut rng = RngStream::new(run_seed, streams::OBJECTIVE);
        Ok(match self.objective {
            ObjectiveKind::Ackley => Box::new(match self.ackley_minimizer {
                AckleyMinimizer::North => AckleySphere::<T>::north(self.dim)?,
                AckleyMinimizer::Diagonal => AckleySphere::<T>::diagonal(self.dim)?,
            }),
            ObjectiveKind::PhaseRetrieval => {
                let mut prob = generate_phase_retrieval::<T>(
                    self.dim,
                    self.measurements,
                    self.frame,
                    self.measurement_noise,
                    &mut rng,
                )?;
                prob.success_threshold = self.recovery_tol;
                Box::new(prob)
            }
            ObjectiveKind::Subspace => {
                let cloud = match &self.cloud_file {
                    Some(path) => load_point_cloud::<T>(path)?,
                    None => generate_subspace_cloud::<T>(&self.cloud_spec(), &mut rng)?,
                };
                Box::new(self.subspace_objective(cloud)?)
            }
        })
    }

    /// Runs `runs` replications from `seed` and aggregates them.
    pub fn execute<T: Scalar>(&self) -> Result<(Vec<RunReport>, AggregateReport)> {
        let factory = self.objective_factory::<T>()?;
        let dim = factory(0, self.seed)?.dimension();
        let solver = self.solver_config_for_dim(dim)?;
        let runs = run_replications(factory.as_ref(), &solver, self.runs, self.seed)?;
        let agg = aggregate(&runs, &solver, self.seed)?;
        Ok((runs, agg))
    }

    /// A factory for Monte Carlo runs. Fixed objectives are built once and shared.
    pub fn objective_factory<'a, T: Scalar>(&'a self) -> Result<Box<ObjectiveFactory<'a, T>>> {
        if self.objective_is_fixed() {
            let shared: std::sync::Arc<dyn Objective<T>> = self.build_objective::<T>(self.seed)?.into();
            Ok(Box::new(move |_, _| Ok(Box::new(SharedObjective(shared.clone())) as Box<dyn Objective<T>>)))
        } else {
            Ok(Box::new(move |_, seed| self.build_objective::<T>(seed)))
        }
    }
}

struct SharedObjective<T>(std::sync::Arc<dyn Objective<T>>);

impl<T: Scalar> Objective<T> for SharedObjective<T> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn evaluate(&self, v: &[T]) -> T {
        self.0.evaluate(v)
    }

    fn known_minimizer(&self) -> Option<&UnitVector<T>> {
        self.0.known_minimizer()
    }

    fn sign_symmetric(&self) -> bool {
        self.0.sign_symmetric()
    }

    fn assess(&self, v: &[T]) -> crate::objectives::Assessment {
        self.0.assess(v)
    }
}
