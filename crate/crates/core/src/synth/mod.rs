//! Synthetic benchmarks: planted block-model networks and mutuality-aware
//! reports drawn from them.

mod reciprocity;
mod reports;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

pub use reciprocity::{planted_reciprocity_target, reciprocity_bounds, PlantedTruth};
pub use reports::{generate_reports, marginal_mean};

use crate::error::{Error, Result};
use crate::model::GroundTruth;
use crate::network::Network;

/// How reporter reliabilities are planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// A fraction of reporters with θ = `theta_over`, the rest reliable.
    OverReporters,
    /// A fraction of reporters with θ = `theta_under`, the rest reliable.
    UnderReporters,
    /// θ ~ Gamma(`theta_gamma_shape`, `theta_gamma_rate`).
    GammaTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeCorrection {
    Off,
    /// Node propensities from truncated power laws `x^-exponent` on [1, 50].
    PowerLaw {
        in_exponent: f64,
        out_exponent: f64,
    },
}

impl DegreeCorrection {
    pub fn standard() -> Self {
        DegreeCorrection::PowerLaw {
            in_exponent: 2.0,
            out_exponent: 2.5,
        }
    }
}

/// Upper end of the propensity support.
const PROPENSITY_MAX: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub n_reporters: usize,
    pub n_communities: usize,
    pub avg_degree: f64,
    pub p_out_ratio: f64,
    pub degree_correction: DegreeCorrection,
    pub scenario: Scenario,
    pub theta_ratio: f64,
    pub theta_over: f64,
    pub theta_under: f64,
    pub theta_gamma_shape: f64,
    pub theta_gamma_rate: f64,
    pub lambda0: f64,
    pub lambda_diff: f64,
    pub eta_planted: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::for_scenario(Scenario::GammaTheta)
    }
}

impl SynthConfig {
    /// Standard settings of each benchmark: block model with λ = (0.01, 1)
    /// for the fixed-reliability scenarios, degree-corrected for the Gamma
    /// one.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let degree_correction = match scenario {
            Scenario::GammaTheta => DegreeCorrection::standard(),
            _ => DegreeCorrection::Off,
        };
        Self {
            n_nodes: 100,
            n_reporters: 100,
            n_communities: 2,
            avg_degree: 10.0,
            p_out_ratio: 0.1,
            degree_correction,
            scenario,
            theta_ratio: 0.0,
            theta_over: 50.0,
            theta_under: 0.5,
            theta_gamma_shape: 2.0,
            theta_gamma_rate: 2.0,
            lambda0: 0.01,
            lambda_diff: if scenario == Scenario::GammaTheta {
                1.0
            } else {
                0.99
            },
            eta_planted: 0.0,
            seed: 0,
        }
    }

    pub fn p_in(&self) -> f64 {
        self.avg_degree * self.n_communities as f64 / self.n_nodes as f64
    }

    pub fn p_out(&self) -> f64 {
        self.p_out_ratio * self.p_in()
    }

    /// Number of unreliable reporters in the fixed-reliability scenarios.
    pub fn n_unreliable(&self) -> usize {
        (self.theta_ratio * self.n_reporters as f64 + 1e-9).floor() as usize
    }

    pub fn lambda(&self) -> [f64; 2] {
        [self.lambda0, self.lambda0 + self.lambda_diff]
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_nodes < 2 {
            return cfg(format!("need at least two nodes, got {}", self.n_nodes));
        }
        if self.n_reporters > self.n_nodes {
            return cfg(format!(
                "{} reporters but only {} nodes; reporter m is node m",
                self.n_reporters, self.n_nodes
            ));
        }
        if self.n_communities == 0 || self.n_communities > self.n_nodes {
            return cfg(format!("invalid community count {}", self.n_communities));
        }
        let p_in = self.p_in();
        if !(p_in > 0.0 && p_in <= 1.0) {
            return Err(Error::InvalidProbability {
                name: "p_in",
                value: p_in,
            });
        }
        if !(0.0..=1.0).contains(&self.p_out_ratio) {
            return Err(Error::InvalidProbability {
                name: "p_out_ratio",
                value: self.p_out_ratio,
            });
        }
        if !(0.0..=0.5).contains(&self.theta_ratio) {
            return cfg(format!("theta_ratio {} outside [0, 0.5]", self.theta_ratio));
        }
        if !(0.0..1.0).contains(&self.eta_planted) {
            return Err(Error::InvalidProbability {
                name: "eta_planted",
                value: self.eta_planted,
            });
        }
        if !(self.lambda0 >= 0.0 && self.lambda_diff > 0.0) {
            return cfg(format!(
                "lambda0 {} must be >= 0 and lambda_diff {} > 0",
                self.lambda0, self.lambda_diff
            ));
        }
        for (name, v) in [
            ("theta_over", self.theta_over),
            ("theta_under", self.theta_under),
            ("theta_gamma_shape", self.theta_gamma_shape),
            ("theta_gamma_rate", self.theta_gamma_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveParameter {
                    name,
                    index: 0,
                    value: v,
                });
            }
        }
        if let DegreeCorrection::PowerLaw {
            in_exponent,
            out_exponent,
        } = self.degree_correction
        {
            if !(in_exponent > 1.0 && out_exponent > 1.0) {
                return cfg("power-law exponents must exceed 1".into());
            }
        }
        Ok(())
    }

    /// Community of node `v`: contiguous blocks of (near) equal size.
    pub fn community_of(&self, v: usize) -> u32 {
        (v * self.n_communities / self.n_nodes) as u32
    }

    pub fn block_probability(&self, i: usize, j: usize) -> f64 {
        if self.community_of(i) == self.community_of(j) {
            self.p_in()
        } else {
            self.p_out()
        }
    }
}

/// Inverse-CDF draw from density ∝ x^-exponent on [1, max].
fn truncated_power_law(rng: &mut impl Rng, exponent: f64, max: f64) -> f64 {
    let u: f64 = rng.random();
    let e = 1.0 - exponent;
    (1.0 - u * (1.0 - max.powf(e))).powf(1.0 / e)
}

fn normalized_propensities(rng: &mut impl Rng, n: usize, exponent: f64) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n)
        .map(|_| truncated_power_law(rng, exponent, PROPENSITY_MAX))
        .collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v /= mean);
    x
}

/// Out- and in-propensities, all ones without degree correction.
pub(crate) fn propensities(cfg: &SynthConfig, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    match cfg.degree_correction {
        DegreeCorrection::Off => (vec![1.0; cfg.n_nodes], vec![1.0; cfg.n_nodes]),
        DegreeCorrection::PowerLaw {
            in_exponent,
            out_exponent,
        } => {
            let out = normalized_propensities(rng, cfg.n_nodes, out_exponent);
            let inn = normalized_propensities(rng, cfg.n_nodes, in_exponent);
            (out, inn)
        }
    }
}

/// Draws Y from the (degree-corrected) block model, then θ, λ and η for the
/// configured scenario.
pub fn generate_ground_truth(cfg: &SynthConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (out_prop, in_prop) = propensities(cfg, &mut rng);
    let n = cfg.n_nodes;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let p = (cfg.block_probability(i, j) * out_prop[i] * in_prop[j]).min(1.0);
            if rng.random::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let y = Network::from_edges(n, edges)?;

    let m = cfg.n_reporters;
    let (theta, deterministic) = match cfg.scenario {
        Scenario::GammaTheta => {
            let gamma = Gamma::new(cfg.theta_gamma_shape, 1.0 / cfg.theta_gamma_rate)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let theta = (0..m).map(|_| gamma.sample(&mut rng)).collect();
            (theta, vec![false; m])
        }
        Scenario::OverReporters | Scenario::UnderReporters => {
            let value = if cfg.scenario == Scenario::OverReporters {
                cfg.theta_over
            } else {
                cfg.theta_under
            };
            let mut theta = vec![1.0; m];
            let mut deterministic = vec![true; m];
            for idx in rand::seq::index::sample(&mut rng, m, cfg.n_unreliable()) {
                theta[idx] = value;
                deterministic[idx] = false;
            }
            (theta, deterministic)
        }
    };

    let truth = GroundTruth {
        y,
        theta,
        lambda: cfg.lambda().to_vec(),
        eta: cfg.eta_planted,
        communities: Some((0..n).map(|v| cfg.community_of(v)).collect()),
        deterministic,
    };
    truth.check()?;
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_full_block_is_complete() {
        let cfg = SynthConfig {
            n_nodes: 10,
            n_reporters: 10,
            n_communities: 1,
            avg_degree: 10.0,
            degree_correction: DegreeCorrection::Off,
            ..SynthConfig::default()
        };
        assert_eq!(cfg.p_in(), 1.0);
        let gt = generate_ground_truth(&cfg).unwrap();
        assert_eq!(gt.y, Network::complete(10));
    }

    #[test]
    fn over_reporter_count_is_exact() {
        let cfg = SynthConfig {
            theta_ratio: 0.2,
            ..SynthConfig::for_scenario(Scenario::OverReporters)
        };
        let gt = generate_ground_truth(&cfg).unwrap();
        assert_eq!(gt.theta.iter().filter(|&&t| t == 50.0).count(), 20);
        assert_eq!(gt.theta.iter().filter(|&&t| t == 1.0).count(), 80);
        assert_eq!(gt.deterministic.iter().filter(|&&d| d).count(), 80);
    }

    #[test]
    fn dense_p_in_rejected() {
        let cfg = SynthConfig {
            n_nodes: 10,
            n_reporters: 10,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate_ground_truth(&cfg),
            Err(Error::InvalidProbability { name: "p_in", .. })
        ));
    }

    #[test]
    fn propensities_have_unit_mean_and_bounded_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = normalized_propensities(&mut rng, 1000, 2.5);
        let mean = x.iter().sum::<f64>() / 1000.0;
        assert!((mean - 1.0).abs() < 1e-12);
        for _ in 0..1000 {
            let v = truncated_power_law(&mut rng, 2.0, PROPENSITY_MAX);
            assert!((1.0..=PROPENSITY_MAX).contains(&v));
        }
    }
    #[test]
    fn degree_corrected_edge_count_matches_its_probabilities() {
        // Y given the propensities is a sum of independent Bernoullis, so the
        // pooled edge count over seeds has the summed p as mean.
        let (mut mean, mut var, mut got) = (0.0, 0.0, 0.0);
        for seed in 0..20 {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::for_scenario(Scenario::GammaTheta)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (out, inn) = propensities(&cfg, &mut rng);
            for i in 0..cfg.n_nodes {
                for j in (0..cfg.n_nodes).filter(|&j| j != i) {
                    let p = (cfg.block_probability(i, j) * out[i] * inn[j]).min(1.0);
                    mean += p;
                    var += p * (1.0 - p);
                }
            }
            got += generate_ground_truth(&cfg).unwrap().y.n_edges() as f64;
        }
        assert!(
            (got - mean).abs() < 4.0 * var.sqrt(),
            "{got} vs {mean} ± {}",
            var.sqrt()
        );
    }
}
