use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::GroundTruth;
use crate::tensor::{build_report_tensor, ReportRecord, ReportTensor, ReporterMask};

/// Mean of the marginal of X_ijm implied by the conditional pair
/// X_ijm | X_jim ~ Pois(θλ_ij + η X_jim) and its mirror.
pub fn marginal_mean(theta: f64, lambda_ij: f64, lambda_ji: f64, eta: f64) -> f64 {
    theta * (lambda_ij + eta * lambda_ji) / (1.0 - eta * eta)
}

fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng) as u64
}

/// Reporters eligible for each direction of unordered dyads, as a list of
/// `(i, j, m)` with `i < j`, sorted.
fn eligible_triples(
    mask: &ReporterMask,
    n_nodes: usize,
    pairs: &[(u32, u32)],
) -> Vec<(u32, u32, u32)> {
    match mask {
        ReporterMask::SelfDyads { reporter_nodes } => {
            let mut by_node: Vec<Vec<u32>> = vec![Vec::new(); n_nodes];
            for (m, &v) in reporter_nodes.iter().enumerate() {
                by_node[v as usize].push(m as u32);
            }
            let mut out = Vec::new();
            let mut buf = Vec::new();
            for &(i, j) in pairs {
                buf.clear();
                buf.extend_from_slice(&by_node[i as usize]);
                buf.extend_from_slice(&by_node[j as usize]);
                buf.sort_unstable();
                buf.dedup();
                out.extend(buf.iter().map(|&m| (i, j, m)));
            }
            out
        }
        ReporterMask::FullRoster { n_reporters } => pairs
            .iter()
            .flat_map(|&(i, j)| (0..*n_reporters as u32).map(move |m| (i, j, m)))
            .collect(),
        ReporterMask::Custom { entries, .. } => {
            let wanted: std::collections::BTreeSet<(u32, u32)> = pairs.iter().copied().collect();
            let mut out: Vec<_> = entries
                .iter()
                .map(|&(i, j, m)| (i.min(j), i.max(j), m))
                .filter(|&(i, j, _)| wanted.contains(&(i, j)))
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

/// Two-step sampler: per unordered dyad and eligible reporter, a coin flip
/// picks the first direction, drawn from its marginal; the second is drawn
/// from its conditional given the first. Deterministic reporters use the
/// rounded means in the same order. Only mask-eligible directions are kept.
///
/// With λ₀ = 0 dyads with no tie in either direction produce no reports
/// and are skipped without consuming randomness.
pub fn generate_reports(gt: &GroundTruth, mask: &ReporterMask, seed: u64) -> Result<ReportTensor> {
    gt.check()?;
    let n = gt.y.n_nodes();
    mask.validate(n)?;
    if mask.n_reporters() != gt.theta.len() {
        return Err(Error::DimensionMismatch {
            what: "reporters in mask",
            expected: gt.theta.len(),
            actual: mask.n_reporters(),
        });
    }
    let pairs: Vec<(u32, u32)> = if gt.lambda[0] == 0.0 {
        let mut p: Vec<_> =
            gt.y.edges()
                .iter()
                .map(|&(i, j)| (i.min(j), i.max(j)))
                .collect();
        p.sort_unstable();
        p.dedup();
        p
    } else {
        let n = n as u32;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    };

    let eta = gt.eta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for (i, j, m) in eligible_triples(mask, n, &pairs) {
        let (first, second) = if rng.random::<bool>() { (i, j) } else { (j, i) };
        let theta = gt.theta[m as usize];
        let l_first = gt.rate_level(first, second);
        let l_second = gt.rate_level(second, first);
        let mu_first = marginal_mean(theta, l_first, l_second, eta);
        let fixed = gt.deterministic.get(m as usize).copied().unwrap_or(false);
        let x_first = if fixed {
            mu_first.round() as u64
        } else {
            poisson(&mut rng, mu_first)
        };
        let mu_second = theta * l_second + eta * x_first as f64;
        let x_second = if fixed {
            mu_second.round() as u64
        } else {
            poisson(&mut rng, mu_second)
        };
        for (a, b, x) in [(first, second, x_first), (second, first, x_second)] {
            if x > 0 && mask.contains(a, b, m) {
                records.push(ReportRecord::new(a.into(), b.into(), m.into(), x));
            }
        }
    }
    build_report_tensor(records, n, mask.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Network;

    fn truth(y: Network, theta: Vec<f64>, lambda: [f64; 2], eta: f64, fixed: bool) -> GroundTruth {
        let m = theta.len();
        GroundTruth {
            y,
            theta,
            lambda: lambda.to_vec(),
            eta,
            communities: None,
            deterministic: vec![fixed; m],
        }
    }

    #[test]
    fn deterministic_reliable_reporters_copy_y() {
        let y = Network::from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 1)]).unwrap();
        let gt = truth(y.clone(), vec![1.0; 4], [0.0, 1.0], 0.0, true);
        let x = generate_reports(&gt, &ReporterMask::self_dyads(4), 9).unwrap();
        for r in x.entries() {
            assert!(y.contains(r.ego, r.alter));
            assert_eq!(r.count, 1);
        }
        // Each edge is seen by both of its endpoints.
        assert_eq!(x.nnz(), 2 * y.n_edges());
    }

    #[test]
    fn empty_dyad_with_zero_base_rate_is_silent() {
        let y = Network::from_edges(3, [(0, 1)]).unwrap();
        let gt = truth(y, vec![1.0; 3], [0.0, 1.0], 0.5, false);
        let x = generate_reports(&gt, &ReporterMask::self_dyads(3), 1).unwrap();
        assert!(x
            .entries()
            .iter()
            .all(|r| (r.ego.min(r.alter), r.ego.max(r.alter)) == (0, 1)));
    }

    #[test]
    fn support_respects_mask() {
        let y = Network::complete(5);
        let gt = truth(y, vec![2.0; 3], [0.5, 1.0], 0.3, false);
        let mask = ReporterMask::SelfDyads {
            reporter_nodes: vec![0, 2, 4],
        };
        let x = generate_reports(&gt, &mask, 4).unwrap();
        assert!(x.nnz() > 0);
        assert!(x
            .entries()
            .iter()
            .all(|r| mask.contains(r.ego, r.alter, r.reporter)));
    }

    #[test]
    fn marginal_mean_closed_form() {
        assert_eq!(marginal_mean(2.0, 1.0, 0.0, 0.0), 2.0);
        assert!((marginal_mean(1.0, 1.0, 1.0, 0.5) - 2.0).abs() < 1e-15);
    }
}
