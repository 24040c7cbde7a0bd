//! Coordinate-ascent variational inference for the reliability model.

mod problem;
mod updates;

use serde::{Deserialize, Serialize};

pub use problem::Problem;
pub use updates::{
    compute_elbo, init_state, sweep, update_eta, update_lambda, update_responsibilities,
    update_rho, update_theta,
};

use crate::error::{Error, Result};
use crate::hyper::{validate_hyperparams, HyperParams, Priors, DEFAULT_K};
use crate::model::{FitResult, VariationalState};
use crate::network::Network;
use crate::tensor::ReportTensor;

/// Convergence and initialization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop once |ΔELBO| / |ELBO| falls below this.
    pub elbo_rel_tol: f64,
    pub elbo_check_every: usize,
    pub init_offset_scale: f64,
    /// Relative ELBO drop tolerated before a step is flagged.
    pub monotonicity_tol: f64,
    pub n_levels: usize,
    /// Use rayon for the dense pair reductions.
    pub parallel: bool,
    /// Fixed point-estimate threshold; `None` uses [`threshold_heuristic`].
    pub threshold: Option<f64>,
    pub compute_point_network: bool,
    /// Multiplier `s` on the first-step θ means in [`two_step_fit`].
    pub refine_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iterations: 500,
            elbo_rel_tol: 1e-5,
            elbo_check_every: 1,
            init_offset_scale: 0.1,
            monotonicity_tol: 1e-3,
            n_levels: DEFAULT_K,
            parallel: false,
            threshold: None,
            compute_point_network: true,
            refine_scale: 1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.elbo_check_every == 0 {
            return bad("elbo_check_every must be at least 1");
        }
        for (name, v) in [
            ("elbo_rel_tol", self.elbo_rel_tol),
            ("init_offset_scale", self.init_offset_scale),
            ("monotonicity_tol", self.monotonicity_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if !(self.refine_scale > 0.0 && self.refine_scale.is_finite()) {
            return bad("refine_scale must be positive");
        }
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidProbability {
                    name: "threshold",
                    value: t,
                });
            }
        }
        Ok(())
    }
}

/// Validates `h` against the tensor and runs [`fit_with_priors`].
pub fn fit(tensor: &ReportTensor, h: &HyperParams, config: &FitConfig) -> Result<FitResult> {
    let priors = validate_hyperparams(h, config.n_levels, tensor.n_nodes(), tensor.n_reporters())?;
    fit_with_priors(tensor, &priors, config)
}

pub fn fit_with_priors(
    tensor: &ReportTensor,
    priors: &Priors,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    let problem = Problem::new(tensor, priors)?.with_parallel(config.parallel);
    fit_problem(&problem, config)
}

fn elbo_at(problem: &Problem<'_>, state: &VariationalState, iteration: usize) -> Result<f64> {
    compute_elbo(problem, state).map_err(|e| match e {
        Error::NonFiniteElbo { reason, .. } => Error::NonFiniteElbo { iteration, reason },
        other => other,
    })
}

pub fn fit_problem(problem: &Problem<'_>, config: &FitConfig) -> Result<FitResult> {
    let mut state = init_state(problem, config);
    let mut trace = vec![elbo_at(problem, &state, 0)?];
    let mut trace_at = vec![0];
    let mut violations = Vec::new();
    let mut converged = false;
    let mut n_iterations = 0;

    for it in 1..=config.max_iterations {
        sweep(problem, &mut state);
        n_iterations = it;
        if it % config.elbo_check_every != 0 && it != config.max_iterations {
            continue;
        }
        let elbo = elbo_at(problem, &state, it)?;
        let prev = *trace.last().expect("trace starts non-empty");
        if elbo < prev - config.monotonicity_tol * prev.abs() {
            log::debug!("ELBO decreased at iteration {it}: {prev} -> {elbo}");
            violations.push(it);
        }
        trace.push(elbo);
        trace_at.push(it);
        if ((elbo - prev) / elbo).abs() < config.elbo_rel_tol {
            converged = true;
            break;
        }
    }
    if !violations.is_empty() {
        log::warn!(
            "ELBO decreased beyond tolerance at {} of {} checked iterations (first: {})",
            violations.len(),
            trace.len() - 1,
            violations[0]
        );
    }
    if !converged {
        log::warn!("no convergence after {n_iterations} iterations");
    }

    relabel_levels(&mut state);
    let eta_est = state.eta_mean();
    if eta_est >= 1.0 {
        log::warn!(
            "estimated mutuality {eta_est} is at least 1; the generative marginal is undefined"
        );
    }
    let theta_est = state.theta_means();
    let (point_network, threshold) = if config.compute_point_network && state.n_levels() == 2 {
        let t = config
            .threshold
            .unwrap_or_else(|| threshold_heuristic(eta_est));
        (
            Some(point_estimate(&state, problem.n_nodes(), eta_est, Some(t))?),
            Some(t),
        )
    } else {
        (None, None)
    };

    Ok(FitResult {
        state,
        elbo_trace: trace,
        elbo_iterations: trace_at,
        n_iterations,
        converged,
        eta_est,
        theta_est,
        point_network,
        threshold,
        monotonicity_violations: violations,
        first_step: None,
    })
}

/// Reorders levels so that λ means ascend; level 1 then reads as "tie".
fn relabel_levels(state: &mut VariationalState) {
    let means = state.lambda_means();
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&x, &y| means[x].total_cmp(&means[y]));
    if order.iter().enumerate().all(|(k, &o)| k == o) {
        return;
    }
    state.phi_shape = order.iter().map(|&o| state.phi_shape[o]).collect();
    state.phi_rate = order.iter().map(|&o| state.phi_rate[o]).collect();
    state.rho.permute_levels(&order);
}

/// Fits once with `h`, then again with α_m = s · θ̂_m · β_m.
pub fn two_step_fit(
    tensor: &ReportTensor,
    h: &HyperParams,
    config: &FitConfig,
) -> Result<FitResult> {
    let priors = validate_hyperparams(h, config.n_levels, tensor.n_nodes(), tensor.n_reporters())?;
    let first = fit_with_priors(tensor, &priors, config)?;
    let alpha = first
        .theta_est
        .iter()
        .zip(&priors.beta)
        .map(|(t, b)| config.refine_scale * t * b)
        .collect();
    let refined = priors.with_alpha(alpha)?;
    let mut second = fit_with_priors(tensor, &refined, config)?;
    second.first_step = Some(Box::new(first));
    Ok(second)
}

/// 0.54 η̂ − 0.01, clamped to [0.05, 0.75].
pub fn threshold_heuristic(eta_est: f64) -> f64 {
    (0.54 * eta_est - 0.01).clamp(0.05, 0.75)
}

/// Ŷ_ij = 1 iff ρ_ij,1 ≥ t, with `t` from the heuristic unless given.
pub fn point_estimate(
    state: &VariationalState,
    n_nodes: usize,
    eta_est: f64,
    threshold: Option<f64>,
) -> Result<Network> {
    if state.n_levels() != 2 {
        return Err(Error::UnsupportedK(state.n_levels()));
    }
    let t = threshold.unwrap_or_else(|| threshold_heuristic(eta_est));
    let rho = &state.rho;
    let mut edges = Vec::new();
    let mut row = [0.0; 2];
    let n = n_nodes as u32;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            rho.row_into(i, j, &mut row);
            if row[1] >= t {
                edges.push((i, j));
            }
        }
    }
    Network::from_edges(n_nodes, edges)
}
