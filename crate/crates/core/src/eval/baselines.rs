use crate::network::Network;
use crate::tensor::{ReportTensor, ReporterMask};

/// Tie present if any eligible reporter reported it.
pub fn union_baseline(x: &ReportTensor) -> Network {
    let edges = x.entries().iter().map(|r| (r.ego, r.alter));
    Network::from_edges(x.n_nodes(), edges).expect("tensor entries are valid edges")
}

/// Tie present if the dyad has at least one eligible reporter and all of
/// them reported it.
pub fn intersection_baseline(x: &ReportTensor) -> Network {
    let eligible = EligibleCounts::new(x.mask(), x.n_nodes());
    let mut edges = Vec::new();
    let entries = x.entries();
    let mut start = 0;
    while start < entries.len() {
        let key = (entries[start].ego, entries[start].alter);
        let mut end = start;
        while end < entries.len() && (entries[end].ego, entries[end].alter) == key {
            end += 1;
        }
        if end - start == eligible.count(key.0, key.1) {
            edges.push(key);
        }
        start = end;
    }
    Network::from_edges(x.n_nodes(), edges).expect("tensor entries are valid edges")
}

/// Number of eligible reporters of a dyad.
pub(crate) struct EligibleCounts<'a> {
    mask: &'a ReporterMask,
    per_node: Vec<usize>,
}

impl<'a> EligibleCounts<'a> {
    pub(crate) fn new(mask: &'a ReporterMask, n_nodes: usize) -> Self {
        let mut per_node = vec![0; n_nodes];
        if let ReporterMask::SelfDyads { reporter_nodes } = mask {
            for &v in reporter_nodes {
                per_node[v as usize] += 1;
            }
        }
        Self { mask, per_node }
    }

    pub(crate) fn count(&self, i: u32, j: u32) -> usize {
        if i == j {
            return 0;
        }
        match self.mask {
            ReporterMask::SelfDyads { .. } => self.per_node[i as usize] + self.per_node[j as usize],
            ReporterMask::FullRoster { n_reporters } => *n_reporters,
            ReporterMask::Custom { entries, .. } => {
                let lo = entries.partition_point(|&(a, b, _)| (a, b) < (i, j));
                let hi = entries.partition_point(|&(a, b, _)| (a, b) <= (i, j));
                hi - lo
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{build_report_tensor, ReportRecord};

    fn tensor(records: &[(u64, u64, u64)]) -> ReportTensor {
        let recs = records
            .iter()
            .map(|&(i, j, m)| ReportRecord::new(i, j, m, 1));
        build_report_tensor(recs, 3, ReporterMask::self_dyads(3)).unwrap()
    }

    #[test]
    fn union_and_intersection() {
        // 0->1 reported by both endpoints, 1->2 only by node 1.
        let x = tensor(&[(0, 1, 0), (0, 1, 1), (1, 2, 1)]);
        assert_eq!(union_baseline(&x).edges(), &[(0, 1), (1, 2)]);
        assert_eq!(intersection_baseline(&x).edges(), &[(0, 1)]);
        assert_eq!(union_baseline(&tensor(&[])).n_edges(), 0);
    }

    #[test]
    fn dyad_without_reporters_absent() {
        let mask = ReporterMask::SelfDyads {
            reporter_nodes: vec![0],
        };
        let x = ReportTensor::empty(3, mask).unwrap();
        let counts = EligibleCounts::new(x.mask(), 3);
        assert_eq!(counts.count(1, 2), 0);
        assert_eq!(intersection_baseline(&x).n_edges(), 0);
    }
}
