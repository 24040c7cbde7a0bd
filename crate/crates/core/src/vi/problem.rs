//! Indexed view of a report tensor used by the variational updates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hyper::Priors;
use crate::model::{Exposure, ImplicitRho};
use crate::tensor::{ReportTensor, ReporterMask};

/// How dyads without stored rows relate to reporters.
#[derive(Debug, Clone)]
pub(crate) enum Layout {
    SelfDyads {
        reporter_node: Vec<u32>,
        has_reporter: Vec<bool>,
        reporter_nodes: Vec<u32>,
    },
    FullRoster {
        n_pairs: f64,
    },
    /// Every eligible dyad has a stored row.
    Custom {
        /// CSR over stored dyads: eligible reporters.
        offsets: Vec<usize>,
        reporters: Vec<u32>,
    },
}

/// Report tensor plus priors, with the indexes the updates need.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub(crate) tensor: &'a ReportTensor,
    pub(crate) priors: &'a Priors,
    pub(crate) n_levels: usize,
    /// X_jim for each stored entry.
    pub(crate) reverse: Vec<u32>,
    /// Stored-dyad index of each entry.
    pub(crate) entry_dyad: Vec<u32>,
    pub(crate) dyads: Vec<(u32, u32)>,
    /// Entry range of each stored dyad.
    pub(crate) dyad_entries: Vec<(u32, u32)>,
    pub(crate) layout: Layout,
    /// Σ R_ijm X_jim.
    pub(crate) reverse_mass: f64,
    pub(crate) parallel: bool,
}

impl<'a> Problem<'a> {
    pub fn new(tensor: &'a ReportTensor, priors: &'a Priors) -> Result<Self> {
        let n_nodes = tensor.n_nodes();
        let n_reporters = tensor.n_reporters();
        if priors.n_reporters() != n_reporters {
            return Err(Error::DimensionMismatch {
                what: "reporter priors",
                expected: n_reporters,
                actual: priors.n_reporters(),
            });
        }
        if let Some(((i, j), _)) = priors
            .prior_overrides
            .iter()
            .find(|((i, j), _)| *i as usize >= n_nodes || *j as usize >= n_nodes)
        {
            return Err(Error::IndexOutOfRange {
                at: 0,
                what: "prior override dyad",
                value: (*i).max(*j) as u64,
                limit: n_nodes as u64,
            });
        }
        let entries = tensor.entries();
        let mask = tensor.mask();

        let reverse: Vec<u32> = entries
            .iter()
            .map(|r| tensor.get(r.alter, r.ego, r.reporter))
            .collect();
        let reverse_mass: f64 = entries
            .iter()
            .filter(|r| mask.contains(r.alter, r.ego, r.reporter))
            .map(|r| r.count as f64)
            .sum();

        let mut dyads: Vec<(u32, u32)> = entries.iter().map(|r| (r.ego, r.alter)).collect();
        dyads.extend(priors.prior_overrides.iter().map(|(d, _)| *d));
        if let ReporterMask::Custom { entries: cells, .. } = mask {
            dyads.extend(cells.iter().map(|&(i, j, _)| (i, j)));
        }
        dyads.sort_unstable();
        dyads.dedup();

        let mut entry_dyad = Vec::with_capacity(entries.len());
        let mut dyad_entries = vec![(0u32, 0u32); dyads.len()];
        let mut cursor = 0usize;
        for (e, r) in entries.iter().enumerate() {
            while dyads[cursor] != (r.ego, r.alter) {
                cursor += 1;
            }
            if entry_dyad.last() != Some(&(cursor as u32)) {
                dyad_entries[cursor].0 = e as u32;
            }
            dyad_entries[cursor].1 = e as u32 + 1;
            entry_dyad.push(cursor as u32);
        }

        let layout = match mask {
            ReporterMask::SelfDyads { reporter_nodes } => {
                let mut has_reporter = vec![false; n_nodes];
                for &v in reporter_nodes {
                    has_reporter[v as usize] = true;
                }
                let nodes = (0..n_nodes as u32)
                    .filter(|&v| has_reporter[v as usize])
                    .collect();
                Layout::SelfDyads {
                    reporter_node: reporter_nodes.clone(),
                    has_reporter,
                    reporter_nodes: nodes,
                }
            }
            ReporterMask::FullRoster { .. } => Layout::FullRoster {
                n_pairs: n_nodes as f64 * (n_nodes as f64 - 1.0),
            },
            ReporterMask::Custom { entries: cells, .. } => {
                let mut offsets = vec![0usize; dyads.len() + 1];
                for &(i, j, _) in cells {
                    let d = dyads.binary_search(&(i, j)).expect("cell dyads are stored");
                    offsets[d + 1] += 1;
                }
                for d in 0..dyads.len() {
                    offsets[d + 1] += offsets[d];
                }
                let reporters = cells.iter().map(|&(_, _, m)| m).collect();
                Layout::Custom { offsets, reporters }
            }
        };

        Ok(Self {
            tensor,
            priors,
            n_levels: priors.n_levels,
            reverse,
            entry_dyad,
            dyads,
            dyad_entries,
            layout,
            reverse_mass,
            parallel: false,
        })
    }

    /// Opt into rayon for the dense pair reductions. Results stay
    /// bit-identical because per-row partials are combined in row order.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn tensor(&self) -> &ReportTensor {
        self.tensor
    }

    pub fn priors(&self) -> &Priors {
        self.priors
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn n_nodes(&self) -> usize {
        self.tensor.n_nodes()
    }

    pub fn n_reporters(&self) -> usize {
        self.tensor.n_reporters()
    }

    /// Dyads that receive stored ρ rows.
    pub fn stored_dyads(&self) -> &[(u32, u32)] {
        &self.dyads
    }

    /// d + Σ R_ijm X_jim; constant over iterations.
    pub fn nu_rate_target(&self) -> f64 {
        self.priors.d + self.reverse_mass
    }

    /// Exposure model for dyads without stored rows, given E[θ].
    pub(crate) fn exposure(&self, theta_mean: &[f64]) -> Exposure {
        match &self.layout {
            Layout::SelfDyads { reporter_node, .. } => {
                let mut per_node = vec![0.0; self.n_nodes()];
                for (m, &v) in reporter_node.iter().enumerate() {
                    per_node[v as usize] += theta_mean[m];
                }
                Exposure::PerNode(per_node)
            }
            Layout::FullRoster { .. } => Exposure::Uniform(theta_mean.iter().sum()),
            Layout::Custom { .. } => Exposure::Zero,
        }
    }

    /// Σ_m R_ijm E[θ_m] for every stored dyad.
    pub(crate) fn stored_exposures(&self, theta_mean: &[f64], exposure: &Exposure) -> Vec<f64> {
        match &self.layout {
            Layout::Custom { offsets, reporters } => (0..self.dyads.len())
                .map(|d| {
                    reporters[offsets[d]..offsets[d + 1]]
                        .iter()
                        .map(|&m| theta_mean[m as usize])
                        .sum()
                })
                .collect(),
            _ => self.dyads.iter().map(|&(i, j)| exposure.of(i, j)).collect(),
        }
    }

    /// Implicit basis built from the current posterior means.
    pub(crate) fn implicit_basis(&self, theta_mean: &[f64], lambda_mean: &[f64]) -> ImplicitRho {
        ImplicitRho {
            prior: self.priors.prior.clone(),
            lambda_mean: lambda_mean.to_vec(),
            exposure: self.exposure(theta_mean),
        }
    }

    fn map_rows<T: Send>(&self, rows: &[u32], f: impl Fn(u32) -> T + Sync) -> Vec<T> {
        if self.parallel {
            rows.par_iter().map(|&i| f(i)).collect()
        } else {
            rows.iter().map(|&i| f(i)).collect()
        }
    }

    /// Sum of `body` over every eligible ordered pair that has no stored row
    /// treated as implicit, i.e. over all eligible pairs evaluated with the
    /// implicit ρ. Callers correct for stored dyads themselves. `body`
    /// receives `(i, j, rho0, acc)`.
    pub(crate) fn implicit_pair_sum(
        &self,
        basis: &ImplicitRho,
        width: usize,
        body: impl Fn(u32, u32, &[f64], &mut [f64]) + Sync,
    ) -> Vec<f64> {
        let k = self.n_levels;
        let mut total = vec![0.0; width];
        match &self.layout {
            Layout::SelfDyads {
                has_reporter,
                reporter_nodes,
                ..
            } => {
                let n = self.n_nodes() as u32;
                let all: Vec<u32> = (0..n).collect();
                let partials = self.map_rows(&all, |i| {
                    let mut acc = vec![0.0; width];
                    let mut rho0 = vec![0.0; k];
                    let mut visit = |j: u32| {
                        basis.row_into(i, j, &mut rho0);
                        body(i, j, &rho0, &mut acc);
                    };
                    if has_reporter[i as usize] {
                        (0..n).filter(|&j| j != i).for_each(&mut visit);
                    } else {
                        reporter_nodes.iter().copied().for_each(&mut visit);
                    }
                    acc
                });
                for p in partials {
                    total.iter_mut().zip(&p).for_each(|(t, v)| *t += v);
                }
            }
            Layout::FullRoster { n_pairs } => {
                if self.n_nodes() >= 2 {
                    // Every implicit pair looks identical; evaluate one and scale.
                    let mut rho0 = vec![0.0; k];
                    basis.row_into(0, 1, &mut rho0);
                    body(0, 1, &rho0, &mut total);
                    total.iter_mut().for_each(|t| *t *= n_pairs);
                }
            }
            Layout::Custom { .. } => {}
        }
        total
    }

    /// Σ over `j ≠ v` of `f(v, j) + f(j, v)` with implicit rows, for each
    /// reporter node `v` (self-dyad layout only). Returned per node.
    pub(crate) fn implicit_node_sums(
        &self,
        basis: &ImplicitRho,
        f: impl Fn(&[f64]) -> f64 + Sync,
    ) -> Vec<f64> {
        let Layout::SelfDyads { reporter_nodes, .. } = &self.layout else {
            return Vec::new();
        };
        let k = self.n_levels;
        let n = self.n_nodes() as u32;
        let sums = self.map_rows(reporter_nodes, |v| {
            let mut rho0 = vec![0.0; k];
            let mut acc = 0.0;
            // Shared prior and symmetric exposure: (v, j) and (j, v) share a row.
            for j in (0..n).filter(|&j| j != v) {
                basis.row_into(v, j, &mut rho0);
                acc += 2.0 * f(&rho0);
            }
            acc
        });
        let mut per_node = vec![0.0; self.n_nodes()];
        for (&v, s) in reporter_nodes.iter().zip(sums) {
            per_node[v as usize] = s;
        }
        per_node
    }
}
