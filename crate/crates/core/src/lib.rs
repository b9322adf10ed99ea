//! Compressed-sensing estimation and tracking of temporally correlated
//! millimeter-wave MIMO channels.
//!
//! The crate is layered bottom-up:
//!
//! * [`numerics`]: dense complex linear algebra, sparse vectors, `J0`.
//! * [`channel`]: the geometric multipath channel with Jakes-correlated gains and
//!   drifting angles.
//! * [`sensing`]: training beams, angle dictionaries and noisy measurements.
//! * [`solvers`]: CoSaMP and warm-started iterative hard thresholding.
//! * [`estimators`]: the full-dictionary baseline and the two reduced-dictionary
//!   block trackers.
//! * [`eval`]: MSE and rate metrics, Monte Carlo orchestration and complexity
//!   accounting.

pub mod channel;
pub mod estimators;
pub mod eval;
pub mod numerics;
pub mod rng;
pub mod sensing;
pub mod solvers;
