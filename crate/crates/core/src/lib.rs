//! Exact entropy solutions of the one-dimensional pressureless damped
//! Euler-Poisson system with atomic initial data, an event-driven sticky
//! particle oracle, the drift limit, and validation checks.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! bottom of this file fix `f64`.

pub mod cluster;
pub mod drift;
pub mod eps;
pub mod error;
pub mod instances;
pub mod measure;
pub mod oracle;
pub mod potentials;
pub mod relax;
pub mod scalar;
pub mod tolerance;
pub mod validate;

pub use cluster::Cluster;
pub use drift::{DriftSample, DriftSolution};
pub use eps::{AuxiliaryFields, Branch, EntropySolution, ShockCurve, ShockSample, Snapshot, SolutionSample};
pub use error::{Error, Result};
pub use measure::{Atom, AtomicMeasure, InitialData, MergeWarning};
pub use oracle::{simulate_drift, simulate_ep, ClusterState, CollisionEvent, Trajectory};
pub use potentials::{Dynamics, MinimizerResult, PotentialCoefficients};
pub use relax::{convergence_study, RelaxationReport, RelaxationRow};
pub use scalar::Scalar;
pub use tolerance::Tolerances;
pub use validate::{Bump, LayerComparison, ResidualReport};

pub type Measure = AtomicMeasure<f64>;
pub type Data = InitialData<f64>;
pub type Solution = EntropySolution<f64>;
pub type Drift = DriftSolution<f64>;
pub type Weights = PotentialCoefficients<f64>;
pub type Tol = Tolerances<f64>;
pub type Run = Trajectory<f64>;
