//! Joint max-SINR distributed beamforming and relay selection for two-hop
//! amplify-and-forward relay networks.
//!
//! - [`linalg`]: dense complex kernels and the whitened dominant-eigenpair solver.
//! - [`channel`]: Rayleigh fading with path loss and log-normal shadowing.
//! - [`beamformer`]: covariance construction and the closed-form weight solver.
//! - [`selection`]: random, exhaustive and greedy relay selection.
//! - [`simulator`]: Monte Carlo SINR and BER experiments.
//! - [`cli`]: configuration, experiment driver and output files.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamformer;
pub mod channel;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod selection;
pub mod simulator;

pub use beamformer::{
    build_e, estimated_covariances, evaluate_sinr, exact_covariances, msinr_solve,
    BeamformingSolution, CovarianceModel, CovarianceSet, CsiMode, RelayNoise, SelectionMask,
};
pub use channel::{
    draw_channels, path_loss, shadowing_draw, ChannelRealization, NetworkConfig, SourcePowers,
};
pub use error::{Error, Result};
pub use rng::RandomStream;
pub use selection::{rgsrs, resrs, rrrs, Algorithm, IterationRecord, SelectionResult};
pub use simulator::{ExperimentCurve, ExperimentKind, ExperimentSpec};
