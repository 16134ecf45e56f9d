//! DFT-based channel estimation for holographic MIMO uniform linear arrays.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense Hermitian kernels and the unitary DFT.
//! - [`channel`]: array geometry, Laplacian local scattering, Toeplitz
//!   covariance, path loss and channel/pilot sampling.
//! - [`estimators`]: MMSE, LS, LoS, ISO and the circulant/DFT estimator as
//!   precomputed linear operators.
//! - [`covariance`]: sample, shrinkage and Toeplitz-averaged covariance
//!   estimates from pilot snapshots.
//! - [`metrics`]: closed-form and Monte-Carlo NMSE, box-plot statistics.
//! - [`harness`]: declarative experiment runner, CSV output and plot data.

pub mod channel;
pub mod covariance;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod rng;

pub use channel::{
    ScatteringProfile, ScenarioParams, SpatialCovariance, UePlacement, UeSector, UlaGeometry,
};
pub use covariance::{CovarianceEstimate, CovarianceMethod, SnapshotBatch};
pub use error::{Error, Result};
pub use estimators::{CostClass, EstimatorKind, EstimatorOperator};
pub use linalg::{CVector, ComplexMatrix, HermitianEvd};
pub use metrics::{BoxStats, NmseeRecord};
