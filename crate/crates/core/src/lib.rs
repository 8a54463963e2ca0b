//! Simulation and analysis of a qubit collision model in which the system
//! couples to a thermal bath through a persistent memory qubit.
//!
//! The crate reconstructs the system's dynamical maps by process tomography
//! and evaluates Kirkwood-Dirac quasiprobability and divisibility witnesses
//! of non-Markovianity collision by collision.

pub mod engine;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod tomography;
pub mod witnesses;

pub use engine::{run_trajectory, EngineError, RunConfig, Trajectory};
pub use model::{CouplingParams, ModelError, SmInteractionKind, SpinParams, ThermalSpec};
pub use numerics::{ComplexMatrix, NumericsError};
pub use pipeline::{analyze, Analysis, AnalysisError, AnalysisOptions, Summary};
pub use tomography::{AffineBlochMap, TomographyError};
pub use witnesses::{WitnessRecord, TOL_POS};
