//! Two-stage (outer/inner) downlink beamforming for FDD massive MIMO.
//!
//! Users are clustered from the overlap of their spatial covariances, each
//! group gets a statistics-based outer precoder, and a graph scheduler picks
//! which users to serve together using deterministic-equivalent SINR. The
//! [`hardness`] module builds scheduling instances from CNF formulas and
//! checks them exhaustively.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.
//!
//! ```
//! use jsdm::channel::{one_ring_covariance, AntennaArray, UserProfile};
//! use jsdm::similarity::dol;
//!
//! let array = AntennaArray::<f64>::half_wavelength_ula(32).unwrap();
//! let a = UserProfile::new(0, 0.0, 5f64.to_radians()).unwrap();
//! let b = UserProfile::new(1, 3f64.to_radians(), 5f64.to_radians()).unwrap();
//! let ra = one_ring_covariance(&array, &a, 512).unwrap();
//! let rb = one_ring_covariance(&array, &b, 512).unwrap();
//! let s = dol(&ra, &rb).unwrap();
//! assert!(s > 0.0 && s < 1.0);
//! ```

pub mod channel;
pub mod clustering;
pub mod error;
pub mod hardness;
pub mod linalg;
pub mod precoding;
pub mod scalar;
pub mod scheduler;
pub mod similarity;
pub mod sinr;
pub mod system;

pub use error::{Error, Result};
pub use precoding::Approach;
pub use scalar::{CMatrix, CVector, Real};
pub use sinr::InterferenceSum;

pub type AntennaArray = channel::AntennaArray<f64>;
pub type UserProfile = channel::UserProfile<f64>;
pub type CovarianceMatrix = channel::CovarianceMatrix<f64>;
pub type SimilarityMatrix = similarity::SimilarityMatrix<f64>;
pub type GroupCentroid = precoding::GroupCentroid<f64>;
pub type OuterPrecoderSet = precoding::OuterPrecoderSet<f64>;
pub type FixedPointSolution = sinr::FixedPointSolution<f64>;
pub type RateReport = sinr::RateReport<f64>;
pub type System = system::System<f64>;
pub type InterferenceGraph = scheduler::InterferenceGraph<f64>;
