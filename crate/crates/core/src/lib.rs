//! Exact expected returns for small measured-walk reinforcement-learning
//! models, with a brute-force trajectory oracle, policy optimisation and
//! complexity benchmarks.

pub mod analytic;
pub mod bench;
pub mod combinatorics;
pub mod error;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod sum;

pub use analytic::{AnalyticEvaluator, ReturnValue};
pub use combinatorics::{
    enumerate_classes, multiplicity, reconstruct_counts, ClassParams, TrajectoryClass,
    TransitionCounts,
};
pub use error::{Error, Result};
pub use model::{build_transition_matrices, ModelKind, ModelSpec, PolicyPoint, TransitionMatrices};
pub use optimize::{maximise, Objective, OptimConfig, OptimResult};
pub use oracle::{oracle_enumerate, oracle_return, OracleConfig, OracleEvaluator};
