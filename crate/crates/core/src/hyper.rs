//! Prior hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of latent tie levels used unless stated otherwise.
pub const DEFAULT_K: usize = 2;

const SIMPLEX_TOL: f64 = 1e-9;

/// User-facing hyperparameters. Per-entity vectors of length one are
/// broadcast; an empty `prior` means uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// Gamma shape of θ_m, per reporter.
    pub alpha: Vec<f64>,
    /// Gamma rate of θ_m, per reporter.
    pub beta: Vec<f64>,
    /// Gamma shape of λ_k, per level.
    pub a: Vec<f64>,
    /// Gamma rate of λ_k, per level.
    pub b: Vec<f64>,
    /// Gamma shape of η.
    pub c: f64,
    /// Gamma rate of η.
    pub d: f64,
    /// Shared categorical prior over levels.
    pub prior: Vec<f64>,
    /// Dyad-specific categorical priors.
    pub prior_overrides: Vec<((u32, u32), Vec<f64>)>,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: vec![1.0],
            beta: vec![1.0],
            a: vec![1.0],
            b: vec![1.0],
            c: 1.0,
            d: 1.0,
            prior: Vec::new(),
            prior_overrides: Vec::new(),
        }
    }
}

/// Hyperparameters after validation, with every vector at full length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub n_levels: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub d: f64,
    pub prior: Vec<f64>,
    /// Sorted by dyad.
    pub prior_overrides: Vec<((u32, u32), Vec<f64>)>,
}

impl Priors {
    pub fn n_reporters(&self) -> usize {
        self.alpha.len()
    }

    /// p_ij.
    pub fn prior_row(&self, i: u32, j: u32) -> &[f64] {
        self.override_row(i, j).unwrap_or(&self.prior)
    }

    pub fn override_row(&self, i: u32, j: u32) -> Option<&[f64]> {
        self.prior_overrides
            .binary_search_by(|(d, _)| d.cmp(&(i, j)))
            .ok()
            .map(|idx| self.prior_overrides[idx].1.as_slice())
    }

    pub fn has_overrides(&self) -> bool {
        !self.prior_overrides.is_empty()
    }

    /// Same priors with per-reporter θ shapes replaced.
    pub fn with_alpha(&self, alpha: Vec<f64>) -> Result<Self> {
        let h = HyperParams {
            alpha,
            beta: self.beta.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c,
            d: self.d,
            prior: self.prior.clone(),
            prior_overrides: self.prior_overrides.clone(),
        };
        validate_hyperparams(&h, self.n_levels, usize::MAX, self.n_reporters())
    }
}

fn broadcast(name: &'static str, values: &[f64], len: usize) -> Result<Vec<f64>> {
    let full = match values.len() {
        1 => vec![values[0]; len],
        n if n == len => values.to_vec(),
        n => {
            return Err(Error::DimensionMismatch {
                what: name,
                expected: len,
                actual: n,
            })
        }
    };
    positive(name, &full)?;
    Ok(full)
}

fn positive(name: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(index) => Err(Error::NonPositiveParameter {
            name,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn check_simplex(row: &[f64], k: usize, dyad: Option<(u32, u32)>) -> Result<()> {
    if row.len() != k {
        return Err(Error::DimensionMismatch {
            what: "level prior",
            expected: k,
            actual: row.len(),
        });
    }
    positive("p", row)?;
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::SimplexViolation { dyad, sum });
    }
    Ok(())
}

/// Checks positivity and simplex constraints and broadcasts shared values
/// to `n_reporters` / `n_levels`. Dyad overrides are range-checked against
/// `n_nodes`.
pub fn validate_hyperparams(
    h: &HyperParams,
    n_levels: usize,
    n_nodes: usize,
    n_reporters: usize,
) -> Result<Priors> {
    if n_levels < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least two levels, got {n_levels}"
        )));
    }
    let alpha = broadcast("alpha", &h.alpha, n_reporters)?;
    let beta = broadcast("beta", &h.beta, n_reporters)?;
    let a = broadcast("a", &h.a, n_levels)?;
    let b = broadcast("b", &h.b, n_levels)?;
    positive("c", &[h.c])?;
    positive("d", &[h.d])?;
    let prior = if h.prior.is_empty() {
        vec![1.0 / n_levels as f64; n_levels]
    } else {
        check_simplex(&h.prior, n_levels, None)?;
        h.prior.clone()
    };
    let mut prior_overrides = h.prior_overrides.clone();
    for (at, ((i, j), row)) in prior_overrides.iter().enumerate() {
        if *i as usize >= n_nodes || *j as usize >= n_nodes {
            return Err(Error::IndexOutOfRange {
                at,
                what: "prior override dyad",
                value: (*i).max(*j) as u64,
                limit: n_nodes as u64,
            });
        }
        if i == j {
            return Err(Error::SelfLoop { at, node: *i });
        }
        check_simplex(row, n_levels, Some((*i, *j)))?;
    }
    prior_overrides.sort_by_key(|x| x.0);
    prior_overrides.dedup_by(|x, y| x.0 == y.0);
    Ok(Priors {
        n_levels,
        alpha,
        beta,
        a,
        b,
        c: h.c,
        d: h.d,
        prior,
        prior_overrides,
    })
}
