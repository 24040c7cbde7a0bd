use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Edge-level precision, recall and their harmonic mean. Empty estimates
/// have precision 0; F1 is 0 whenever P + R = 0.
pub fn f1_score(estimate: &Network, truth: &Network) -> Result<F1Score> {
    if estimate.n_nodes() != truth.n_nodes() {
        return Err(Error::ShapeMismatch(estimate.n_nodes(), truth.n_nodes()));
    }
    let hits = estimate
        .edges()
        .iter()
        .filter(|&&(i, j)| truth.contains(i, j))
        .count() as f64;
    let ratio = |den: usize| if den == 0 { 0.0 } else { hits / den as f64 };
    let precision = ratio(estimate.n_edges());
    let recall = ratio(truth.n_edges());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(F1Score {
        precision,
        recall,
        f1,
    })
}

pub fn mse_theta(theta_est: &[f64], theta_true: &[f64]) -> Result<f64> {
    if theta_est.len() != theta_true.len() {
        return Err(Error::LengthMismatch(theta_est.len(), theta_true.len()));
    }
    if theta_est.is_empty() {
        return Err(Error::EmptySample);
    }
    let sse: f64 = theta_est
        .iter()
        .zip(theta_true)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(sse / theta_est.len() as f64)
}

/// Order-1 Wasserstein distance between two empirical distributions:
/// ∫ |F_a(x) − F_b(x)| dx over the merged support.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let sorted = |s: &[f64]| {
        let mut v = s.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<f64> = a.iter().chain(&b).copied().collect();
    all.sort_by(f64::total_cmp);
    let (mut ia, mut ib) = (0, 0);
    let mut total = 0.0;
    for w in all.windows(2) {
        let x = w[0];
        while ia < a.len() && a[ia] <= x {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= x {
            ib += 1;
        }
        let gap = w[1] - x;
        if gap > 0.0 {
            total += (ia as f64 / na - ib as f64 / nb).abs() * gap;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRecovery {
    pub correlation: f64,
    /// Least-squares fit estimated ≈ slope · planted + intercept.
    pub slope: f64,
    pub intercept: f64,
    /// `(planted, estimated, estimated - planted)`.
    pub pairs: Vec<(f64, f64, f64)>,
}

/// Pearson correlation and a linear fit of estimated on planted mutuality.
/// Needs at least three pairs; correlation is NaN if either side is constant.
pub fn eta_recovery_report(planted: &[f64], estimated: &[f64]) -> Result<EtaRecovery> {
    if planted.len() != estimated.len() {
        return Err(Error::LengthMismatch(planted.len(), estimated.len()));
    }
    if planted.len() < 3 {
        return Err(Error::LengthMismatch(planted.len(), 3));
    }
    let n = planted.len() as f64;
    let mx = planted.iter().sum::<f64>() / n;
    let my = estimated.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in planted.iter().zip(estimated) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let correlation = sxy / (sxx * syy).sqrt();
    let slope = sxy / sxx;
    Ok(EtaRecovery {
        correlation,
        slope,
        intercept: my - slope * mx,
        pairs: planted
            .iter()
            .zip(estimated)
            .map(|(&x, &y)| (x, y, y - x))
            .collect(),
    })
}
