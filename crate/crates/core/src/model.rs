//! Variational posterior, auxiliary responsibilities, ground truth and fit
//! results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;

/// Total reporter exposure Σ_m R_ijm E[θ_m] for dyads without stored rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Exposure {
    /// No implicit dyads carry any exposure.
    Zero,
    /// Every ordered pair has the same exposure.
    Uniform(f64),
    /// Exposure of `(i, j)` is `per_node[i] + per_node[j]`.
    PerNode(Vec<f64>),
}

impl Exposure {
    #[inline]
    pub fn of(&self, i: u32, j: u32) -> f64 {
        match self {
            Exposure::Zero => 0.0,
            Exposure::Uniform(s) => *s,
            Exposure::PerNode(t) => t[i as usize] + t[j as usize],
        }
    }
}

/// Closed-form ρ for dyads without positive reports: the row depends on the
/// dyad only through its exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitRho {
    /// Shared prior p.
    pub prior: Vec<f64>,
    /// E[λ_k] at the time of the last ρ update; all zeros before the first.
    pub lambda_mean: Vec<f64>,
    pub exposure: Exposure,
}

impl ImplicitRho {
    pub fn from_prior(prior: Vec<f64>) -> Self {
        let k = prior.len();
        Self {
            prior,
            lambda_mean: vec![0.0; k],
            exposure: Exposure::Zero,
        }
    }

    /// Row for a given exposure. Zero exposure returns the prior exactly.
    #[inline]
    pub fn row_for(&self, exposure: f64, out: &mut [f64]) {
        if exposure == 0.0 {
            out.copy_from_slice(&self.prior);
            return;
        }
        for ((o, &p), &l) in out.iter_mut().zip(&self.prior).zip(&self.lambda_mean) {
            *o = p.ln() - l * exposure;
        }
        crate::special::softmax_in_place(out);
    }

    pub fn row_into(&self, i: u32, j: u32, out: &mut [f64]) {
        self.row_for(self.exposure.of(i, j), out)
    }
}

/// Categorical q(Y_ij): explicit rows for dyads carrying data (or their own
/// prior), closed form for the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoTable {
    n_levels: usize,
    dyads: Vec<(u32, u32)>,
    rows: Vec<f64>,
    implicit: ImplicitRho,
}

impl RhoTable {
    pub fn new(dyads: Vec<(u32, u32)>, rows: Vec<f64>, implicit: ImplicitRho) -> Result<Self> {
        let n_levels = implicit.prior.len();
        if rows.len() != dyads.len() * n_levels {
            return Err(Error::DimensionMismatch {
                what: "rho rows",
                expected: dyads.len() * n_levels,
                actual: rows.len(),
            });
        }
        Ok(Self {
            n_levels,
            dyads,
            rows,
            implicit,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    /// Dyads with stored rows, sorted.
    pub fn dyads(&self) -> &[(u32, u32)] {
        &self.dyads
    }

    pub fn explicit_row(&self, idx: usize) -> &[f64] {
        &self.rows[idx * self.n_levels..(idx + 1) * self.n_levels]
    }

    pub fn explicit_rows(&self) -> &[f64] {
        &self.rows
    }

    pub(crate) fn explicit_rows_mut(&mut self) -> &mut [f64] {
        &mut self.rows
    }

    pub fn implicit(&self) -> &ImplicitRho {
        &self.implicit
    }

    pub(crate) fn set_implicit(&mut self, implicit: ImplicitRho) {
        self.implicit = implicit;
    }

    pub fn explicit_index(&self, i: u32, j: u32) -> Option<usize> {
        self.dyads.binary_search(&(i, j)).ok()
    }

    /// ρ_ij for any dyad.
    pub fn row(&self, i: u32, j: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.n_levels];
        self.row_into(i, j, &mut out);
        out
    }

    pub fn row_into(&self, i: u32, j: u32, out: &mut [f64]) {
        match self.explicit_index(i, j) {
            Some(idx) => out.copy_from_slice(self.explicit_row(idx)),
            None => self.implicit.row_into(i, j, out),
        }
    }

    /// Swaps level labels according to `order` (new level `k` is old level
    /// `order[k]`).
    pub(crate) fn permute_levels(&mut self, order: &[usize]) {
        let k = self.n_levels;
        let mut buf = vec![0.0; k];
        for row in self.rows.chunks_mut(k) {
            for (dst, &src) in buf.iter_mut().zip(order) {
                *dst = row[src];
            }
            row.copy_from_slice(&buf);
        }
        let imp = &mut self.implicit;
        imp.prior = order.iter().map(|&s| imp.prior[s]).collect();
        imp.lambda_mean = order.iter().map(|&s| imp.lambda_mean[s]).collect();
    }
}

/// Mean-field Gamma/categorical posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub gamma_shape: Vec<f64>,
    pub gamma_rate: Vec<f64>,
    pub phi_shape: Vec<f64>,
    pub phi_rate: Vec<f64>,
    pub nu_shape: f64,
    pub nu_rate: f64,
    pub rho: RhoTable,
}

impl VariationalState {
    pub fn n_reporters(&self) -> usize {
        self.gamma_shape.len()
    }

    pub fn n_levels(&self) -> usize {
        self.phi_shape.len()
    }

    pub fn theta_means(&self) -> Vec<f64> {
        self.gamma_shape
            .iter()
            .zip(&self.gamma_rate)
            .map(|(s, r)| s / r)
            .collect()
    }

    pub fn lambda_means(&self) -> Vec<f64> {
        self.phi_shape
            .iter()
            .zip(&self.phi_rate)
            .map(|(s, r)| s / r)
            .collect()
    }

    pub fn eta_mean(&self) -> f64 {
        self.nu_shape / self.nu_rate
    }

    /// Checks positivity of every Gamma parameter and row-stochasticity of
    /// the stored ρ rows.
    pub fn check(&self) -> Result<()> {
        let groups: [(&'static str, &[f64]); 4] = [
            ("gamma_shape", &self.gamma_shape),
            ("gamma_rate", &self.gamma_rate),
            ("phi_shape", &self.phi_shape),
            ("phi_rate", &self.phi_rate),
        ];
        for (name, values) in groups {
            if let Some(index) = values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::NonPositiveParameter {
                    name,
                    index,
                    value: values[index],
                });
            }
        }
        for (name, v) in [("nu_shape", self.nu_shape), ("nu_rate", self.nu_rate)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveParameter {
                    name,
                    index: 0,
                    value: v,
                });
            }
        }
        for (idx, row) in self.rho.explicit_rows().chunks(self.n_levels()).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::SimplexViolation {
                    dyad: Some(self.rho.dyads()[idx]),
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Normalized responsibilities of the Poisson split X_ijm = z¹ + z², stored
/// per `(entry, level)` on the tensor's positive entries in tensor order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryResponsibilities {
    pub n_levels: usize,
    /// ẑ¹ at `entry * n_levels + k`.
    pub zhat1: Vec<f64>,
    /// ẑ², same layout; zero wherever the reverse report is zero.
    pub zhat2: Vec<f64>,
    /// Number of keys where both unnormalized weights underflowed.
    pub underflows: usize,
}

impl AuxiliaryResponsibilities {
    pub fn z1(&self, entry: usize) -> &[f64] {
        &self.zhat1[entry * self.n_levels..(entry + 1) * self.n_levels]
    }

    pub fn z2(&self, entry: usize) -> &[f64] {
        &self.zhat2[entry * self.n_levels..(entry + 1) * self.n_levels]
    }
}

/// Planted parameters of a synthetic benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Binary latent network; level 1 means "tie present".
    pub y: Network,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eta: f64,
    pub communities: Option<Vec<u32>>,
    /// Reporters whose reports are the rounded conditional mean rather
    /// than Poisson draws.
    #[serde(default)]
    pub deterministic: Vec<bool>,
}

impl GroundTruth {
    pub fn check(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::InvalidProbability {
                name: "eta",
                value: self.eta,
            });
        }
        if !self.deterministic.is_empty() && self.deterministic.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                what: "deterministic reporter flags",
                expected: self.theta.len(),
                actual: self.deterministic.len(),
            });
        }
        if self.lambda.len() != 2 {
            return Err(Error::DimensionMismatch {
                what: "lambda",
                expected: 2,
                actual: self.lambda.len(),
            });
        }
        Ok(())
    }

    /// λ_{Y_ij}.
    #[inline]
    pub fn rate_level(&self, i: u32, j: u32) -> f64 {
        self.lambda[self.y.contains(i, j) as usize]
    }
}

/// Output of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub state: VariationalState,
    pub elbo_trace: Vec<f64>,
    /// Iteration at which each trace value was taken; 0 is the initial state.
    pub elbo_iterations: Vec<usize>,
    pub n_iterations: usize,
    pub converged: bool,
    /// ν^shape / ν^rate.
    pub eta_est: f64,
    pub theta_est: Vec<f64>,
    pub point_network: Option<Network>,
    /// Threshold applied to build `point_network`.
    pub threshold: Option<f64>,
    /// Steps whose ELBO dropped by more than the monotonicity tolerance.
    pub monotonicity_violations: Vec<usize>,
    /// First-stage fit of a two-step refinement.
    pub first_step: Option<Box<FitResult>>,
}
