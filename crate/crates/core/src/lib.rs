//! Simulation of a pulsed free-electron beam interacting with a bound qubit.
//!
//! The beam couples to the qubit through the total electron number `N̂`:
//! the scatter `S = exp(−iφ(e^{iα}σ + e^{−iα}σ†)N̂)` rotates the qubit by an
//! angle proportional to `n` in each number sector. From that one fact come
//! three protocols:
//!
//! - discriminating number statistics from a single-axis readout,
//! - recovering `p(n)` from its characteristic function `Σ p(n)e^{−2iφn}`,
//! - projecting the beam onto a number state by repeated post-selection.
//!
//! Every numerical type is generic over the scalar [`Real`] (`f32` or
//! `f64`); the aliases below fix the scalar for the common cases.

pub mod couplings;
pub mod distributions;
pub mod error;
pub mod linalg;
pub mod protocols;
pub mod quantum;
pub mod scalar;

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type PhysicalConstantsF64 = couplings::PhysicalConstants<f64>;
pub type FreeSpaceGeometryF64 = couplings::FreeSpaceGeometry<f64>;
pub type CavityParamsF64 = couplings::CavityParams<f64>;
pub type RegimeReportF64 = couplings::RegimeReport<f64>;

pub type NumberDistributionF64 = distributions::NumberDistribution<f64>;
pub type NumberDistributionF32 = distributions::NumberDistribution<f32>;

pub type CMatrixF64 = linalg::CMatrix<f64>;
pub type QubitStateF64 = quantum::QubitState<f64>;
pub type ElectronDensityMatrixF64 = quantum::ElectronDensityMatrix<f64>;
pub type ElectronDensityMatrixF32 = quantum::ElectronDensityMatrix<f32>;
pub type JointStateF64 = quantum::JointState<f64>;
pub type JointStateF32 = quantum::JointState<f32>;
pub type ScatterParamsF64 = quantum::ScatterParams<f64>;

pub type PhiGridF64 = protocols::PhiGrid<f64>;
pub type ProtocolScheduleF64 = protocols::ProtocolSchedule<f64>;
pub type ProjectionTrajectoryF64 = protocols::ProjectionTrajectory<f64>;
