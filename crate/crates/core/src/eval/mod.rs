//! Baselines, network statistics and recovery metrics.

mod baselines;
mod metrics;
mod reporters;
mod summary;

pub use baselines::{intersection_baseline, union_baseline};
pub use metrics::{eta_recovery_report, f1_score, mse_theta, wasserstein_1d, EtaRecovery, F1Score};
pub use reporters::{repeat_nomination_rate, tie_confirmation_summary, TieConfirmation};
pub use summary::{
    network_summary, network_summary_with, reciprocity, transitivity, NetworkSummary,
    TransitivityMode,
};
