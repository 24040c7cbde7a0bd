//! Per-reporter diagnostics for double-sampled designs, where reporter `m`
//! sits at node `v` and answers both "gives to" (v→j) and "gets from" (j→v).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ReportTensor;

fn reporter_node(x: &ReportTensor, m: u32) -> Result<u32> {
    x.mask().reporter_node(m).ok_or_else(|| {
        Error::InvalidMask(format!(
            "reporter {m} has no node; per-reporter diagnostics need self-dyad masks"
        ))
    })
}

/// Share of alters named on the give question that reappear on the get
/// question. `NoNominations` if `m` gave no names.
pub fn repeat_nomination_rate(x: &ReportTensor, m: u32) -> Result<f64> {
    let v = reporter_node(x, m)?;
    let mut given = 0usize;
    let mut repeated = 0usize;
    for r in x.entries().iter().filter(|r| r.reporter == m && r.ego == v) {
        given += 1;
        if x.get(r.alter, v, m) > 0 {
            repeated += 1;
        }
    }
    if given == 0 {
        return Err(Error::NoNominations(m));
    }
    Ok(repeated as f64 / given as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieConfirmation {
    /// v→j reported by `m` and by another reporter.
    pub confirmed_give: usize,
    /// j→v reported by `m` and by another reporter.
    pub confirmed_get: usize,
    pub own_only_give: usize,
    pub own_only_get: usize,
    /// v→j reported by others but not by `m`.
    pub other_only_give: usize,
    pub other_only_get: usize,
}

/// Classifies every tie touching reporter `m`'s node by who reported it.
pub fn tie_confirmation_summary(x: &ReportTensor, m: u32) -> Result<TieConfirmation> {
    let v = reporter_node(x, m)?;
    let mut out = TieConfirmation::default();
    let entries = x.entries();
    let mut start = 0;
    while start < entries.len() {
        let (i, j) = (entries[start].ego, entries[start].alter);
        let mut end = start;
        let (mut own, mut other) = (false, false);
        while end < entries.len() && (entries[end].ego, entries[end].alter) == (i, j) {
            if entries[end].reporter == m {
                own = true;
            } else {
                other = true;
            }
            end += 1;
        }
        start = end;
        let give = if i == v {
            true
        } else if j == v {
            false
        } else {
            continue;
        };
        let slot = match (own, other, give) {
            (true, true, true) => &mut out.confirmed_give,
            (true, true, false) => &mut out.confirmed_get,
            (true, false, true) => &mut out.own_only_give,
            (true, false, false) => &mut out.own_only_get,
            (false, true, true) => &mut out.other_only_give,
            (false, true, false) => &mut out.other_only_get,
            (false, false, _) => unreachable!("dyad runs are non-empty"),
        };
        *slot += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{build_report_tensor, ReportRecord, ReporterMask};

    fn tensor(n: usize, records: &[(u64, u64, u64)]) -> ReportTensor {
        let recs = records
            .iter()
            .map(|&(i, j, m)| ReportRecord::new(i, j, m, 1));
        build_report_tensor(recs, n, ReporterMask::self_dyads(n)).unwrap()
    }

    #[test]
    fn repeat_rate_hand_count() {
        // Reporter 0 gives to {1, 2, 3} and gets from {2, 3, 5}.
        let x = tensor(
            6,
            &[
                (0, 1, 0),
                (0, 2, 0),
                (0, 3, 0),
                (2, 0, 0),
                (3, 0, 0),
                (5, 0, 0),
            ],
        );
        assert!((repeat_nomination_rate(&x, 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            repeat_nomination_rate(&x, 4),
            Err(Error::NoNominations(4))
        ));
    }

    #[test]
    fn confirmation_categories() {
        // Node 0 and node 1 both report 0->1; only node 2 reports 2->0;
        // only node 0 reports 0->2 and 1->0.
        let x = tensor(3, &[(0, 1, 0), (0, 1, 1), (2, 0, 2), (0, 2, 0), (1, 0, 0)]);
        let c = tie_confirmation_summary(&x, 0).unwrap();
        assert_eq!(
            c,
            TieConfirmation {
                confirmed_give: 1,
                own_only_give: 1,
                own_only_get: 1,
                other_only_get: 1,
                ..TieConfirmation::default()
            }
        );
    }
}
