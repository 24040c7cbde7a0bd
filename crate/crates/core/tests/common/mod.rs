#![allow(dead_code)]

pub mod oracle;

use multirep::synth::{
    generate_ground_truth, generate_reports, planted_reciprocity_target, Scenario, SynthConfig,
};
use multirep::{GroundTruth, HyperParams, ReportTensor, ReporterMask};

/// Priors for the synthetic recovery experiments: ties are rare a priori,
/// level 0 starts at a low report rate and level 1 at a high one, and θ is
/// centred at 0.1 so that λ₁ carries most of the rate scale.
pub fn experiment_priors() -> HyperParams {
    HyperParams {
        alpha: vec![10.0],
        beta: vec![100.0],
        a: vec![1.0, 1.0],
        b: vec![10.0, 0.1],
        c: 1.0,
        d: 1.0,
        prior: vec![0.9, 0.1],
        prior_overrides: Vec::new(),
    }
}

/// Planted truth and self-reported data for one benchmark draw.
pub fn benchmark(
    scenario: Scenario,
    eta: f64,
    theta_ratio: f64,
    seed: u64,
    reciprocity: Option<f64>,
) -> (GroundTruth, ReportTensor) {
    let cfg = SynthConfig {
        seed,
        eta_planted: eta,
        theta_ratio,
        ..SynthConfig::for_scenario(scenario)
    };
    let truth = match reciprocity {
        Some(target) => planted_reciprocity_target(&cfg, target).unwrap().truth,
        None => generate_ground_truth(&cfg).unwrap(),
    };
    let mask = ReporterMask::self_dyads(cfg.n_reporters);
    let x = generate_reports(&truth, &mask, seed + 1000).unwrap();
    (truth, x)
}
