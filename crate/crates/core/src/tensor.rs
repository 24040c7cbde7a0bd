//! Sparse report tensor and reporter eligibility masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which `(ego, alter, reporter)` triples the survey design allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReporterMask {
    /// Reporter `m` only reports ties touching her own node,
    /// `reporter_nodes[m]`.
    SelfDyads { reporter_nodes: Vec<u32> },
    /// Every reporter may report on every ordered pair of distinct nodes.
    FullRoster { n_reporters: usize },
    /// Exactly the listed triples, sorted and deduplicated.
    Custom {
        n_reporters: usize,
        entries: Vec<(u32, u32, u32)>,
    },
}

impl ReporterMask {
    /// Self-dyad mask where reporter `m` is node `m`.
    pub fn self_dyads(n_reporters: usize) -> Self {
        ReporterMask::SelfDyads {
            reporter_nodes: (0..n_reporters as u32).collect(),
        }
    }

    pub fn custom(n_reporters: usize, entries: impl IntoIterator<Item = (u32, u32, u32)>) -> Self {
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.sort_unstable();
        entries.dedup();
        ReporterMask::Custom {
            n_reporters,
            entries,
        }
    }

    pub fn n_reporters(&self) -> usize {
        match self {
            ReporterMask::SelfDyads { reporter_nodes } => reporter_nodes.len(),
            ReporterMask::FullRoster { n_reporters } => *n_reporters,
            ReporterMask::Custom { n_reporters, .. } => *n_reporters,
        }
    }

    /// R_ijm.
    pub fn contains(&self, i: u32, j: u32, m: u32) -> bool {
        if i == j || m as usize >= self.n_reporters() {
            return false;
        }
        match self {
            ReporterMask::SelfDyads { reporter_nodes } => {
                let v = reporter_nodes[m as usize];
                v == i || v == j
            }
            ReporterMask::FullRoster { .. } => true,
            ReporterMask::Custom { entries, .. } => entries.binary_search(&(i, j, m)).is_ok(),
        }
    }

    /// Checks the mask against a node count.
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        match self {
            ReporterMask::SelfDyads { reporter_nodes } => {
                if let Some(&v) = reporter_nodes.iter().find(|&&v| v as usize >= n_nodes) {
                    return Err(Error::InvalidMask(format!(
                        "reporter node {v} outside {n_nodes} nodes"
                    )));
                }
            }
            ReporterMask::FullRoster { .. } => {}
            ReporterMask::Custom {
                n_reporters,
                entries,
            } => {
                for &(i, j, m) in entries {
                    if i as usize >= n_nodes || j as usize >= n_nodes || m as usize >= *n_reporters
                    {
                        return Err(Error::InvalidMask(format!(
                            "entry ({i},{j},{m}) out of range"
                        )));
                    }
                    if i == j {
                        return Err(Error::InvalidMask(format!("self-loop entry ({i},{i},{m})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Node attached to each reporter, when the design defines one.
    pub fn reporter_node(&self, m: u32) -> Option<u32> {
        match self {
            ReporterMask::SelfDyads { reporter_nodes } => reporter_nodes.get(m as usize).copied(),
            _ => None,
        }
    }
}

/// One stored report X_ijm > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Report {
    pub ego: u32,
    pub alter: u32,
    pub reporter: u32,
    pub count: u32,
}

impl Report {
    #[inline]
    pub fn key(&self) -> (u32, u32, u32) {
        (self.ego, self.alter, self.reporter)
    }
}

/// Input record for tensor construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportRecord {
    pub ego: u64,
    pub alter: u64,
    pub reporter: u64,
    pub weight: u64,
}

impl ReportRecord {
    pub fn new(ego: u64, alter: u64, reporter: u64, weight: u64) -> Self {
        Self {
            ego,
            alter,
            reporter,
            weight,
        }
    }
}

/// Sparse N x N x M tensor of reports; absent keys are zero.
///
/// Entries are kept sorted by `(ego, alter, reporter)`, which fixes the
/// reduction order of everything downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTensor {
    n_nodes: usize,
    mask: ReporterMask,
    entries: Vec<Report>,
}

impl ReportTensor {
    pub fn empty(n_nodes: usize, mask: ReporterMask) -> Result<Self> {
        build_report_tensor(std::iter::empty(), n_nodes, mask)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_reporters(&self) -> usize {
        self.mask.n_reporters()
    }

    pub fn mask(&self) -> &ReporterMask {
        &self.mask
    }

    pub fn entries(&self) -> &[Report] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// X_ijm.
    pub fn get(&self, ego: u32, alter: u32, reporter: u32) -> u32 {
        self.entries
            .binary_search_by(|r| r.key().cmp(&(ego, alter, reporter)))
            .map(|idx| self.entries[idx].count)
            .unwrap_or(0)
    }

    /// Total of all stored counts.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|r| r.count as u64).sum()
    }

    /// Tensor with node indices permuted: node `v` becomes `perm[v]`.
    /// Reporter indices are unchanged; self-dyad reporter nodes follow the
    /// permutation.
    pub fn relabel_nodes(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.n_nodes {
            return Err(Error::DimensionMismatch {
                what: "node permutation",
                expected: self.n_nodes,
                actual: perm.len(),
            });
        }
        let mask = match &self.mask {
            ReporterMask::SelfDyads { reporter_nodes } => ReporterMask::SelfDyads {
                reporter_nodes: reporter_nodes.iter().map(|&v| perm[v as usize]).collect(),
            },
            ReporterMask::FullRoster { n_reporters } => ReporterMask::FullRoster {
                n_reporters: *n_reporters,
            },
            ReporterMask::Custom {
                n_reporters,
                entries,
            } => ReporterMask::custom(
                *n_reporters,
                entries
                    .iter()
                    .map(|&(i, j, m)| (perm[i as usize], perm[j as usize], m)),
            ),
        };
        let records = self.entries.iter().map(|r| {
            ReportRecord::new(
                perm[r.ego as usize] as u64,
                perm[r.alter as usize] as u64,
                r.reporter as u64,
                r.count as u64,
            )
        });
        build_report_tensor(records, self.n_nodes, mask)
    }
}

/// Builds a tensor from raw records: duplicates are summed, zero weights
/// dropped, and out-of-mask records rejected.
pub fn build_report_tensor(
    records: impl IntoIterator<Item = ReportRecord>,
    n_nodes: usize,
    mask: ReporterMask,
) -> Result<ReportTensor> {
    mask.validate(n_nodes)?;
    let n_reporters = mask.n_reporters();
    let mut raw: Vec<(u32, u32, u32, u64)> = Vec::new();
    for (at, rec) in records.into_iter().enumerate() {
        let check = |value: u64, limit: usize, what: &'static str| -> Result<u32> {
            if value >= limit as u64 {
                Err(Error::IndexOutOfRange {
                    at,
                    what,
                    value,
                    limit: limit as u64,
                })
            } else {
                Ok(value as u32)
            }
        };
        let ego = check(rec.ego, n_nodes, "ego")?;
        let alter = check(rec.alter, n_nodes, "alter")?;
        let reporter = check(rec.reporter, n_reporters, "reporter")?;
        if ego == alter {
            return Err(Error::SelfLoop { at, node: ego });
        }
        if !mask.contains(ego, alter, reporter) {
            return Err(Error::MaskViolation {
                at,
                ego,
                alter,
                reporter,
            });
        }
        if rec.weight > 0 {
            raw.push((ego, alter, reporter, rec.weight));
        }
    }
    raw.sort_unstable_by_key(|&(i, j, m, _)| (i, j, m));
    let mut entries: Vec<Report> = Vec::with_capacity(raw.len());
    for (i, j, m, w) in raw {
        let at = entries.len();
        match entries.last_mut() {
            Some(last) if last.key() == (i, j, m) => {
                let total = last.count as u64 + w;
                last.count =
                    u32::try_from(total).map_err(|_| Error::CountOverflow { at, value: total })?;
            }
            _ => {
                let count = u32::try_from(w).map_err(|_| Error::CountOverflow {
                    at: entries.len(),
                    value: w,
                })?;
                entries.push(Report {
                    ego: i,
                    alter: j,
                    reporter: m,
                    count,
                });
            }
        }
    }
    Ok(ReportTensor {
        n_nodes,
        mask,
        entries,
    })
}
