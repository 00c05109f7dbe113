//! Consensus-based optimization on the unit sphere.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod consensus;
pub mod ensemble;
pub mod error;
pub mod integrators;
pub mod monte_carlo;
pub mod objectives;
pub mod report;
pub mod scalar;
pub mod schedules;
pub mod solver;
pub mod sphere;
pub mod suites;
pub mod svd;

pub use config::RunConfig;
pub use consensus::{consensus_point, consensus_point_batch, ConsensusPoint};
pub use ensemble::{Ensemble, Initialization};
pub use error::{Error, Result};
pub use integrators::{SchemeKind, StepParams};
pub use monte_carlo::{run_monte_carlo, AggregateReport};
pub use objectives::Objective;
pub use report::{emit_report, Report, ReportFormat};
pub use scalar::Scalar;
pub use schedules::StopReason;
pub use solver::{run_once, RunReport, SolverConfig};
pub use sphere::UnitVector;
pub use svd::svd_top_direction;

pub type UnitVector64 = UnitVector<f64>;
pub type UnitVector32 = UnitVector<f32>;
pub type Ensemble64 = Ensemble<f64>;
pub type Ensemble32 = Ensemble<f32>;
pub type ConsensusPoint64 = ConsensusPoint<f64>;
pub type ConsensusPoint32 = ConsensusPoint<f32>;
