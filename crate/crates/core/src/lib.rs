//! Latent network inference from multiply reported social ties.
//!
//! Reports `X_ijm` (reporter `m` says `i -> j`) are modelled as Poisson with
//! mean `θ_m λ_{Y_ij} + η X_jim`, where `Y` is the latent network, `θ_m` the
//! reporter's reliability and `η` a mutuality effect. The posterior is
//! approximated by coordinate-ascent variational inference.

pub mod error;
pub mod eval;
pub mod hyper;
pub mod model;
pub mod network;
pub mod special;
pub mod synth;
pub mod tensor;
pub mod vi;

pub use error::{Error, Result};
pub use hyper::{validate_hyperparams, HyperParams, Priors, DEFAULT_K};
pub use model::{
    AuxiliaryResponsibilities, Exposure, FitResult, GroundTruth, ImplicitRho, RhoTable,
    VariationalState,
};
pub use network::Network;
pub use tensor::{build_report_tensor, Report, ReportRecord, ReportTensor, ReporterMask};
pub use vi::{fit, point_estimate, threshold_heuristic, two_step_fit, FitConfig};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
