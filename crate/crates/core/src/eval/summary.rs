use serde::{Deserialize, Serialize};

use crate::network::Network;

/// Which triangle-closure convention transitivity uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitivityMode {
    /// Global clustering of the undirected skeleton.
    #[default]
    Undirected,
    /// Closed ordered two-paths i→j→k with i→k, over all ordered two-paths.
    Directed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub n_nodes: usize,
    pub n_edges: usize,
    /// Edges per node.
    pub mean_degree: f64,
    /// Population std over nodes of (out + in) / 2.
    pub mean_degree_std: f64,
    pub transitivity: f64,
    pub reciprocity: f64,
    pub density: f64,
}

pub fn network_summary(net: &Network) -> NetworkSummary {
    network_summary_with(net, TransitivityMode::default())
}

pub fn network_summary_with(net: &Network, mode: TransitivityMode) -> NetworkSummary {
    let n = net.n_nodes();
    let e = net.n_edges();
    let mut degree = vec![0.0f64; n];
    for &(i, j) in net.edges() {
        degree[i as usize] += 0.5;
        degree[j as usize] += 0.5;
    }
    let (mean_degree, mean_degree_std) = if n == 0 {
        (0.0, 0.0)
    } else {
        let mean = e as f64 / n as f64;
        let var = degree.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
        (mean, var.sqrt())
    };
    let density = if n < 2 {
        0.0
    } else {
        e as f64 / (n as f64 * (n as f64 - 1.0))
    };
    NetworkSummary {
        n_nodes: n,
        n_edges: e,
        mean_degree,
        mean_degree_std,
        transitivity: transitivity(net, mode),
        reciprocity: reciprocity(net),
        density,
    }
}

/// Fraction of edges whose reverse is also present; 0 for empty networks.
pub fn reciprocity(net: &Network) -> f64 {
    if net.n_edges() == 0 {
        return 0.0;
    }
    let mutual = net
        .edges()
        .iter()
        .filter(|&&(i, j)| net.contains(j, i))
        .count();
    mutual as f64 / net.n_edges() as f64
}

pub fn transitivity(net: &Network, mode: TransitivityMode) -> f64 {
    let (closed, total) = match mode {
        TransitivityMode::Undirected => {
            let und = net.union(&net.transpose()).expect("same shape");
            let mut closed = 0u64;
            let mut total = 0u64;
            for v in 0..und.n_nodes() as u32 {
                let nb = und.successors(v);
                let d = nb.len() as u64;
                total += d * d.saturating_sub(1) / 2;
                for (a, &(_, x)) in nb.iter().enumerate() {
                    for &(_, y) in &nb[a + 1..] {
                        if und.contains(x, y) {
                            closed += 1;
                        }
                    }
                }
            }
            (closed, total)
        }
        TransitivityMode::Directed => {
            let mut closed = 0u64;
            let mut total = 0u64;
            for &(i, j) in net.edges() {
                for &(_, k) in net.successors(j) {
                    if k == i {
                        continue;
                    }
                    total += 1;
                    if net.contains(i, k) {
                        closed += 1;
                    }
                }
            }
            (closed, total)
        }
    };
    if total == 0 {
        0.0
    } else {
        closed as f64 / total as f64
    }
}
