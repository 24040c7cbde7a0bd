use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{generate_ground_truth, SynthConfig};
use crate::error::{Error, Result};
use crate::model::GroundTruth;
use crate::network::Network;

/// Accepted distance between planted and target reciprocity.
pub const RECIPROCITY_TOL: f64 = 0.02;

/// Stream offset so the adjustment does not reuse the generator's draws.
const ADJUST_STREAM: u64 = 0x5eed_0fa2_93c1_d7b4;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    pub truth: GroundTruth,
    pub achieved: f64,
    /// Reciprocity of the block-model draw before adjustment.
    pub initial: f64,
}

/// Range of reciprocity reachable with `n_edges` edges on `n_nodes` nodes.
pub fn reciprocity_bounds(n_nodes: usize, n_edges: usize) -> (f64, f64) {
    if n_edges == 0 {
        return (0.0, 0.0);
    }
    let e = n_edges as f64;
    let dyads = (n_nodes * n_nodes.saturating_sub(1) / 2) as f64;
    let min = 2.0 * (e - dyads).max(0.0) / e;
    let max = 2.0 * (n_edges / 2) as f64 / e;
    (min, max)
}

struct Edges {
    set: BTreeSet<(u32, u32)>,
}

impl Edges {
    fn mutual_edges(&self) -> usize {
        self.set
            .iter()
            .filter(|&&(i, j)| self.set.contains(&(j, i)))
            .count()
    }

    fn reciprocity(&self) -> f64 {
        if self.set.is_empty() {
            0.0
        } else {
            self.mutual_edges() as f64 / self.set.len() as f64
        }
    }

    fn unreciprocated(&self) -> Vec<(u32, u32)> {
        self.set
            .iter()
            .copied()
            .filter(|&(i, j)| !self.set.contains(&(j, i)))
            .collect()
    }

    fn mutual_pairs(&self) -> Vec<(u32, u32)> {
        self.set
            .iter()
            .copied()
            .filter(|&(i, j)| i < j && self.set.contains(&(j, i)))
            .collect()
    }
}

/// Draws a block-model network and moves it to the target reciprocity with
/// edge-count-preserving moves: an unreciprocated edge is turned into the
/// reverse of another unreciprocated edge (up), or one direction of a mutual
/// pair is moved to an empty dyad sampled by its block-model weight (down).
/// A target of 1 symmetrizes the draw instead.
pub fn planted_reciprocity_target(cfg: &SynthConfig, target: f64) -> Result<PlantedTruth> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidProbability {
            name: "reciprocity target",
            value: target,
        });
    }
    let mut truth = generate_ground_truth(cfg)?;
    let n = cfg.n_nodes;
    let mut edges = Edges {
        set: truth.y.edges().iter().copied().collect(),
    };
    let initial = edges.reciprocity();

    if target == 1.0 {
        truth.y = truth.y.union(&truth.y.transpose())?;
        let achieved = if truth.y.n_edges() > 0 { 1.0 } else { 0.0 };
        return Ok(PlantedTruth {
            truth,
            achieved,
            initial,
        });
    }

    let n_edges = edges.set.len();
    let (min, max) = reciprocity_bounds(n, n_edges);
    if target < min - RECIPROCITY_TOL || target > max + RECIPROCITY_TOL {
        return Err(Error::TargetUnreachable {
            target,
            achieved: initial,
            min,
            max,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ADJUST_STREAM);
    let step = 2.0 / n_edges as f64;
    // Moves change reciprocity by ±step; stop within half a step.
    let max_moves = 4 * n_edges + 16;
    let mut r = initial;
    for _ in 0..max_moves {
        if (r - target).abs() <= 0.5 * step + 1e-12 {
            break;
        }
        let moved = if r < target {
            move_up(&mut edges, &mut rng)
        } else {
            move_down(&mut edges, cfg, &mut rng)
        };
        if !moved {
            break;
        }
        r = edges.reciprocity();
    }
    if (r - target).abs() > RECIPROCITY_TOL {
        return Err(Error::TargetUnreachable {
            target,
            achieved: r,
            min,
            max,
        });
    }
    truth.y = Network::from_edges(n, edges.set.iter().copied())?;
    Ok(PlantedTruth {
        truth,
        achieved: r,
        initial,
    })
}

fn move_up(edges: &mut Edges, rng: &mut impl Rng) -> bool {
    let open = edges.unreciprocated();
    if open.len() < 2 {
        return false;
    }
    let a = rng.random_range(0..open.len());
    let mut b = rng.random_range(0..open.len() - 1);
    if b >= a {
        b += 1;
    }
    let (ri, rj) = open[a];
    let (ci, cj) = open[b];
    edges.set.remove(&(ri, rj));
    edges.set.insert((cj, ci));
    true
}

fn move_down(edges: &mut Edges, cfg: &SynthConfig, rng: &mut impl Rng) -> bool {
    let pairs = edges.mutual_pairs();
    if pairs.is_empty() {
        return false;
    }
    let n = cfg.n_nodes as u32;
    let p_max = cfg.p_in().max(cfg.p_out());
    // Rejection-sample an empty dyad with acceptance ∝ its block probability.
    let mut target = None;
    for _ in 0..100_000 {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || edges.set.contains(&(u, v)) || edges.set.contains(&(v, u)) {
            continue;
        }
        if rng.random::<f64>() * p_max <= cfg.block_probability(u as usize, v as usize) {
            target = Some((u, v));
            break;
        }
    }
    let Some(new_edge) = target else {
        return false;
    };
    let (i, j) = pairs[rng.random_range(0..pairs.len())];
    let drop = if rng.random::<bool>() { (i, j) } else { (j, i) };
    edges.set.remove(&drop);
    edges.set.insert(new_edge);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::Scenario;

    #[test]
    fn bounds() {
        assert_eq!(reciprocity_bounds(3, 6), (1.0, 1.0));
        assert_eq!(reciprocity_bounds(10, 0), (0.0, 0.0));
        let (lo, hi) = reciprocity_bounds(100, 1001);
        assert_eq!(lo, 0.0);
        assert!((hi - 1000.0 / 1001.0).abs() < 1e-15);
    }

    #[test]
    fn hits_target() {
        for seed in 0..5 {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::for_scenario(Scenario::GammaTheta)
            };
            let p = planted_reciprocity_target(&cfg, 0.2).unwrap();
            let e = p.truth.y.edges();
            let mutual = e.iter().filter(|&&(i, j)| p.truth.y.contains(j, i)).count();
            let r = mutual as f64 / e.len() as f64;
            assert!((r - 0.2).abs() <= RECIPROCITY_TOL, "seed {seed}: {r}");
            assert_eq!(r, p.achieved);
        }
    }

    #[test]
    fn target_one_symmetrizes() {
        let p = planted_reciprocity_target(&SynthConfig::default(), 1.0).unwrap();
        assert_eq!(p.truth.y, p.truth.y.transpose());
    }

    #[test]
    fn zero_target_on_complete_graph_unreachable() {
        let cfg = SynthConfig {
            n_nodes: 6,
            n_reporters: 6,
            n_communities: 1,
            avg_degree: 6.0,
            degree_correction: crate::synth::DegreeCorrection::Off,
            ..SynthConfig::default()
        };
        assert!(matches!(
            planted_reciprocity_target(&cfg, 0.0),
            Err(Error::TargetUnreachable { .. })
        ));
    }
}
