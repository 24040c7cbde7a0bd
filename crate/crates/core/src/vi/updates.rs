//! Coordinate-ascent updates and the evidence lower bound.
//!
//! Every sum over eligible `(i, j, m)` is split into the sparse positive
//! part (stored entries) and the contribution of dyads without reports,
//! which is evaluated through the closed-form implicit ρ and corrected for
//! dyads that carry stored rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{Layout, Problem};
use super::FitConfig;
use crate::error::{Error, Result};
use crate::model::{AuxiliaryResponsibilities, ImplicitRho, RhoTable, VariationalState};
use crate::special::{digamma, gamma_expected_log, ln_gamma, softmax_in_place};

impl Problem<'_> {
    /// Whether the implicit pair reductions already visited stored dyad `d`.
    fn implicit_covers(&self, d: usize) -> bool {
        match &self.layout {
            Layout::SelfDyads { has_reporter, .. } => {
                let (i, j) = self.dyads[d];
                has_reporter[i as usize] || has_reporter[j as usize]
            }
            Layout::FullRoster { .. } => true,
            Layout::Custom { .. } => false,
        }
    }

    /// `sum_d [f(rho_d) - covered(d) f(rho0_d)]` over stored dyads, plus the
    /// implicit reduction of `f`. `f` gets `(row, exposure, acc)`.
    fn dyad_sum(
        &self,
        rho: &RhoTable,
        current_exposure: &[f64],
        exposure_model: &crate::model::Exposure,
        width: usize,
        f: impl Fn(&[f64], f64, &mut [f64]) + Sync,
    ) -> Vec<f64> {
        let basis = rho.implicit();
        let mut total = self.implicit_pair_sum(basis, width, |i, j, rho0, acc| {
            f(rho0, exposure_model.of(i, j), acc)
        });
        let k = self.n_levels;
        let mut rho0 = vec![0.0; k];
        let mut plus = vec![0.0; width];
        let mut minus = vec![0.0; width];
        for (d, &(i, j)) in self.dyads.iter().enumerate() {
            let s = current_exposure[d];
            f(rho.explicit_row(d), s, &mut plus);
            if self.implicit_covers(d) {
                basis.row_into(i, j, &mut rho0);
                f(&rho0, s, &mut minus);
            }
        }
        for ((t, p), m) in total.iter_mut().zip(&plus).zip(&minus) {
            *t += p - m;
        }
        total
    }
}

/// Initial state: every Gamma parameter is its prior times `1 + u`,
/// `u ~ U[0, init_offset_scale)`, λ levels ordered by mean, stored ρ rows
/// perturbed the same way and renormalized. Implicit rows start at the
/// shared prior.
pub fn init_state(problem: &Problem<'_>, config: &FitConfig) -> VariationalState {
    let priors = problem.priors;
    let k = problem.n_levels;
    let scale = config.init_offset_scale;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut jitter = |x: f64| -> f64 {
        if scale > 0.0 {
            x * (1.0 + rng.random::<f64>() * scale)
        } else {
            x
        }
    };

    let gamma_shape: Vec<f64> = priors.alpha.iter().map(|&a| jitter(a)).collect();
    let gamma_rate: Vec<f64> = priors.beta.iter().map(|&b| jitter(b)).collect();
    let mut phi_shape: Vec<f64> = priors.a.iter().map(|&a| jitter(a)).collect();
    let mut phi_rate: Vec<f64> = priors.b.iter().map(|&b| jitter(b)).collect();
    let nu_shape = jitter(priors.c);
    let nu_rate = jitter(priors.d);

    // Break label symmetry: level k+1 must have the larger prior mean.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| (phi_shape[x] / phi_rate[x]).total_cmp(&(phi_shape[y] / phi_rate[y])));
    phi_shape = order.iter().map(|&o| phi_shape[o]).collect();
    phi_rate = order.iter().map(|&o| phi_rate[o]).collect();

    let mut rows = Vec::with_capacity(problem.dyads.len() * k);
    for &(i, j) in &problem.dyads {
        let start = rows.len();
        rows.extend(priors.prior_row(i, j).iter().map(|&p| jitter(p)));
        let sum: f64 = rows[start..].iter().sum();
        rows[start..].iter_mut().for_each(|p| *p /= sum);
    }
    let rho = RhoTable::new(
        problem.dyads.clone(),
        rows,
        ImplicitRho::from_prior(priors.prior.clone()),
    )
    .expect("row count matches dyads");

    VariationalState {
        gamma_shape,
        gamma_rate,
        phi_shape,
        phi_rate,
        nu_shape,
        nu_rate,
        rho,
    }
}

/// ẑ¹ ∝ exp{E log θ_m + E log λ_k}, ẑ² ∝ X_jim exp{E log η}, normalized per
/// `(i, j, m, k)`.
pub fn update_responsibilities(
    problem: &Problem<'_>,
    state: &VariationalState,
) -> AuxiliaryResponsibilities {
    let k = problem.n_levels;
    let entries = problem.tensor.entries();
    let elog_theta: Vec<f64> = state
        .gamma_shape
        .iter()
        .zip(&state.gamma_rate)
        .map(|(&s, &r)| gamma_expected_log(s, r))
        .collect();
    let elog_lambda: Vec<f64> = state
        .phi_shape
        .iter()
        .zip(&state.phi_rate)
        .map(|(&s, &r)| gamma_expected_log(s, r))
        .collect();
    let elog_eta = gamma_expected_log(state.nu_shape, state.nu_rate);

    let mut zhat1 = vec![1.0; entries.len() * k];
    let mut zhat2 = vec![0.0; entries.len() * k];
    let mut underflows = 0;
    for (e, r) in entries.iter().enumerate() {
        let rev = problem.reverse[e];
        if rev == 0 {
            continue;
        }
        let log_u2 = (rev as f64).ln() + elog_eta;
        for level in 0..k {
            let log_u1 = elog_theta[r.reporter as usize] + elog_lambda[level];
            let idx = e * k + level;
            if log_u1 == f64::NEG_INFINITY && log_u2 == f64::NEG_INFINITY {
                underflows += 1;
                continue;
            }
            let diff = log_u2 - log_u1;
            let (z1, z2) = if diff > 0.0 {
                let t = (-diff).exp();
                (t / (1.0 + t), 1.0 / (1.0 + t))
            } else {
                let t = diff.exp();
                (1.0 / (1.0 + t), t / (1.0 + t))
            };
            zhat1[idx] = z1;
            zhat2[idx] = z2;
        }
    }
    if underflows > 0 {
        log::warn!("{underflows} responsibility keys underflowed; set to z1 = 1");
    }
    AuxiliaryResponsibilities {
        n_levels: k,
        zhat1,
        zhat2,
        underflows,
    }
}

/// Σ_k ρ_k X ẑ¹_k for one entry.
#[inline]
fn weighted_z(row: &[f64], z: &[f64], x: f64) -> f64 {
    x * row.iter().zip(z).map(|(r, z)| r * z).sum::<f64>()
}

/// New (γ^shape, γ^rate).
pub fn update_theta(
    problem: &Problem<'_>,
    state: &VariationalState,
    zhat: &AuxiliaryResponsibilities,
) -> (Vec<f64>, Vec<f64>) {
    let priors = problem.priors;
    let rho = &state.rho;
    let mut shape = priors.alpha.clone();
    for (e, r) in problem.tensor.entries().iter().enumerate() {
        let row = rho.explicit_row(problem.entry_dyad[e] as usize);
        shape[r.reporter as usize] += weighted_z(row, zhat.z1(e), r.count as f64);
    }

    let lambda = state.lambda_means();
    let expected_rate = |row: &[f64]| row.iter().zip(&lambda).map(|(p, l)| p * l).sum::<f64>();
    let mut rate = priors.beta.clone();
    let basis = rho.implicit();
    let mut rho0 = vec![0.0; problem.n_levels];
    match &problem.layout {
        Layout::SelfDyads {
            reporter_node,
            has_reporter,
            ..
        } => {
            let mut per_node = problem.implicit_node_sums(basis, expected_rate);
            for (d, &(i, j)) in problem.dyads.iter().enumerate() {
                basis.row_into(i, j, &mut rho0);
                let delta = expected_rate(rho.explicit_row(d)) - expected_rate(&rho0);
                for v in [i, j] {
                    if has_reporter[v as usize] {
                        per_node[v as usize] += delta;
                    }
                }
            }
            for (m, &v) in reporter_node.iter().enumerate() {
                rate[m] += per_node[v as usize];
            }
        }
        Layout::FullRoster { .. } => {
            let mut total =
                problem.implicit_pair_sum(basis, 1, |_, _, r0, acc| acc[0] += expected_rate(r0))[0];
            for (d, &(i, j)) in problem.dyads.iter().enumerate() {
                basis.row_into(i, j, &mut rho0);
                total += expected_rate(rho.explicit_row(d)) - expected_rate(&rho0);
            }
            rate.iter_mut().for_each(|r| *r += total);
        }
        Layout::Custom { offsets, reporters } => {
            for d in 0..problem.dyads.len() {
                let g = expected_rate(rho.explicit_row(d));
                for &m in &reporters[offsets[d]..offsets[d + 1]] {
                    rate[m as usize] += g;
                }
            }
        }
    }
    (shape, rate)
}

/// New (φ^shape, φ^rate), using the θ posterior in `state`.
pub fn update_lambda(
    problem: &Problem<'_>,
    state: &VariationalState,
    zhat: &AuxiliaryResponsibilities,
) -> (Vec<f64>, Vec<f64>) {
    let k = problem.n_levels;
    let priors = problem.priors;
    let rho = &state.rho;
    let mut shape = priors.a.clone();
    for (e, r) in problem.tensor.entries().iter().enumerate() {
        let row = rho.explicit_row(problem.entry_dyad[e] as usize);
        let z = zhat.z1(e);
        let x = r.count as f64;
        for level in 0..k {
            shape[level] += x * row[level] * z[level];
        }
    }

    let theta = state.theta_means();
    let exposure = problem.exposure(&theta);
    let stored = problem.stored_exposures(&theta, &exposure);
    let rate_sums = problem.dyad_sum(rho, &stored, &exposure, k, |row, s, acc| {
        for (a, p) in acc.iter_mut().zip(row) {
            *a += p * s;
        }
    });
    let rate = priors
        .b
        .iter()
        .zip(&rate_sums)
        .map(|(b, s)| b + s)
        .collect();
    (shape, rate)
}

/// New ρ table: stored rows from their log-scores, implicit rows from the
/// current θ and λ means.
pub fn update_rho(
    problem: &Problem<'_>,
    state: &VariationalState,
    zhat: &AuxiliaryResponsibilities,
) -> RhoTable {
    let k = problem.n_levels;
    let theta = state.theta_means();
    let lambda = state.lambda_means();
    let elog_lambda: Vec<f64> = state
        .phi_shape
        .iter()
        .zip(&state.phi_rate)
        .map(|(&s, &r)| gamma_expected_log(s, r))
        .collect();
    let basis = problem.implicit_basis(&theta, &lambda);
    let stored = problem.stored_exposures(&theta, &basis.exposure);
    let entries = problem.tensor.entries();

    let mut table = state.rho.clone();
    let rows = table.explicit_rows_mut();
    for (d, &(i, j)) in problem.dyads.iter().enumerate() {
        let row = &mut rows[d * k..(d + 1) * k];
        let prior = problem.priors.prior_row(i, j);
        for level in 0..k {
            row[level] = prior[level].ln() - lambda[level] * stored[d];
        }
        let (lo, hi) = problem.dyad_entries[d];
        for e in lo as usize..hi as usize {
            let x = entries[e].count as f64;
            let z = zhat.z1(e);
            for level in 0..k {
                row[level] += x * z[level] * elog_lambda[level];
            }
        }
        softmax_in_place(row);
    }
    table.set_implicit(basis);
    table
}

/// New (ν^shape, ν^rate).
pub fn update_eta(
    problem: &Problem<'_>,
    state: &VariationalState,
    zhat: &AuxiliaryResponsibilities,
) -> (f64, f64) {
    let mut shape = problem.priors.c;
    for (e, r) in problem.tensor.entries().iter().enumerate() {
        if problem.reverse[e] == 0 {
            continue;
        }
        let row = state.rho.explicit_row(problem.entry_dyad[e] as usize);
        shape += weighted_z(row, zhat.z2(e), r.count as f64);
    }
    (shape, problem.nu_rate_target())
}

/// E_q[log prior] - E_q[log q] for one Gamma factor, constants dropped.
fn gamma_factor(prior_shape: f64, prior_rate: f64, shape: f64, rate: f64) -> f64 {
    digamma(shape) * (prior_shape - shape) + ln_gamma(shape) - prior_shape * rate.ln()
        + shape * (1.0 - prior_rate / rate)
}

/// ELBO up to additive constants, with E log(θλ + ηX) split as
/// E log(θλ) + E log(ηX); the second part only where the reverse report is
/// positive.
pub fn compute_elbo(problem: &Problem<'_>, state: &VariationalState) -> Result<f64> {
    state.check().map_err(|e| Error::NonFiniteElbo {
        iteration: 0,
        reason: e.to_string(),
    })?;
    let priors = problem.priors;
    let k = problem.n_levels;
    let elog_theta: Vec<f64> = state
        .gamma_shape
        .iter()
        .zip(&state.gamma_rate)
        .map(|(&s, &r)| gamma_expected_log(s, r))
        .collect();
    let elog_lambda: Vec<f64> = state
        .phi_shape
        .iter()
        .zip(&state.phi_rate)
        .map(|(&s, &r)| gamma_expected_log(s, r))
        .collect();
    let elog_eta = gamma_expected_log(state.nu_shape, state.nu_rate);
    let theta = state.theta_means();
    let lambda = state.lambda_means();
    let rho = &state.rho;

    let mut data = 0.0;
    for (e, r) in problem.tensor.entries().iter().enumerate() {
        let row = rho.explicit_row(problem.entry_dyad[e] as usize);
        let rev = problem.reverse[e];
        let mutual = if rev > 0 {
            elog_eta + (rev as f64).ln()
        } else {
            0.0
        };
        let base = elog_theta[r.reporter as usize] + mutual;
        let x = r.count as f64;
        for level in 0..k {
            data += row[level] * x * (base + elog_lambda[level]);
        }
    }

    let exposure = problem.exposure(&theta);
    let stored = problem.stored_exposures(&theta, &exposure);
    let shared_prior = priors.prior.clone();
    // Stored rows use their own prior; implicit rows use the shared one.
    let dyad_terms = {
        let basis = rho.implicit();
        let term = |row: &[f64], prior: &[f64], s: f64, acc: &mut [f64]| {
            for level in 0..k {
                let p = row[level];
                acc[0] += p * lambda[level] * s;
                if p > 0.0 {
                    acc[1] += p * (prior[level].ln() - p.ln());
                }
            }
        };
        let mut total = problem.implicit_pair_sum(basis, 2, |i, j, r0, acc| {
            term(r0, &shared_prior, exposure.of(i, j), acc)
        });
        let mut rho0 = vec![0.0; k];
        let mut plus = [0.0; 2];
        let mut minus = [0.0; 2];
        for (d, &(i, j)) in problem.dyads.iter().enumerate() {
            term(
                rho.explicit_row(d),
                priors.prior_row(i, j),
                stored[d],
                &mut plus,
            );
            if problem.implicit_covers(d) {
                basis.row_into(i, j, &mut rho0);
                term(&rho0, &shared_prior, stored[d], &mut minus);
            }
        }
        total[0] += plus[0] - minus[0];
        total[1] += plus[1] - minus[1];
        total
    };

    let mut elbo = data - dyad_terms[0] - state.eta_mean() * problem.reverse_mass + dyad_terms[1];
    elbo += gamma_factor(priors.c, priors.d, state.nu_shape, state.nu_rate);
    for level in 0..k {
        elbo += gamma_factor(
            priors.a[level],
            priors.b[level],
            state.phi_shape[level],
            state.phi_rate[level],
        );
    }
    for m in 0..state.n_reporters() {
        elbo += gamma_factor(
            priors.alpha[m],
            priors.beta[m],
            state.gamma_shape[m],
            state.gamma_rate[m],
        );
    }
    if !elbo.is_finite() {
        return Err(Error::NonFiniteElbo {
            iteration: 0,
            reason: format!("value {elbo}"),
        });
    }
    Ok(elbo)
}

/// One full sweep in the fixed order ẑ, θ, λ, ρ, η.
pub fn sweep(problem: &Problem<'_>, state: &mut VariationalState) -> AuxiliaryResponsibilities {
    let zhat = update_responsibilities(problem, state);
    let (gs, gr) = update_theta(problem, state, &zhat);
    state.gamma_shape = gs;
    state.gamma_rate = gr;
    let (ps, pr) = update_lambda(problem, state, &zhat);
    state.phi_shape = ps;
    state.phi_rate = pr;
    state.rho = update_rho(problem, state, &zhat);
    let (ns, nr) = update_eta(problem, state, &zhat);
    state.nu_shape = ns;
    state.nu_rate = nr;
    zhat
}
