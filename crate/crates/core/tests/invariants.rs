//! Property tests over small random report tensors.

use approx::assert_relative_eq;
use multirep::eval::*;
use multirep::vi::{self, Problem};
use multirep::*;
use proptest::prelude::*;

const N: u32 = 6;

/// Random self-dyad tensor on `N` nodes with one reporter per node.
fn tensor_strategy() -> impl Strategy<Value = ReportTensor> {
    let record = (0..N, 0..N, 0..N, 1..4u64).prop_filter_map("eligible", |(i, j, m, w)| {
        (i != j && (m == i || m == j)).then_some((i, j, m, w))
    });
    prop::collection::vec(record, 0..25).prop_map(|recs| {
        let recs = recs
            .into_iter()
            .map(|(i, j, m, w)| ReportRecord::new(i.into(), j.into(), m.into(), w));
        build_report_tensor(recs, N as usize, ReporterMask::self_dyads(N as usize)).unwrap()
    })
}

fn network_strategy() -> impl Strategy<Value = Network> {
    prop::collection::vec((0..N, 0..N), 0..20).prop_map(|pairs| {
        Network::from_edges(N as usize, pairs.into_iter().filter(|(i, j)| i != j)).unwrap()
    })
}

fn start(seed: u64) -> FitConfig {
    FitConfig {
        seed,
        ..FitConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn responsibilities_and_rho_rows_normalize(x in tensor_strategy(), seed in 0..1000u64) {
        let p = validate_hyperparams(&HyperParams::default(), 2, x.n_nodes(), x.n_reporters()).unwrap();
        let problem = Problem::new(&x, &p).unwrap();
        let mut s = vi::init_state(&problem, &start(seed));
        for _ in 0..3 {
            let z = vi::update_responsibilities(&problem, &s);
            for e in 0..x.nnz() {
                let total: f64 = z.z1(e).iter().chain(z.z2(e)).sum::<f64>() / 2.0;
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
            vi::sweep(&problem, &mut s);
            for i in 0..N {
                for j in (0..N).filter(|&j| j != i) {
                    let sum: f64 = s.rho.row(i, j).iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-12);
                }
            }
            prop_assert_eq!(s.nu_rate, problem.nu_rate_target());
        }
    }

    #[test]
    fn relabeling_nodes_permutes_the_fit(x in tensor_strategy(), perm in Just((0..N).collect::<Vec<u32>>()).prop_shuffle()) {
        let cfg = FitConfig {
            init_offset_scale: 0.0,
            max_iterations: 20,
            elbo_rel_tol: 0.0,
            ..FitConfig::default()
        };
        let h = HyperParams::default();
        let a = vi::fit(&x, &h, &cfg).unwrap();
        let b = vi::fit(&x.relabel_nodes(&perm).unwrap(), &h, &cfg).unwrap();
        assert_relative_eq!(a.eta_est, b.eta_est, epsilon = 1e-10, max_relative = 1e-10);
        let mut ta = a.theta_est.clone();
        let mut tb = b.theta_est.clone();
        ta.sort_by(f64::total_cmp);
        tb.sort_by(f64::total_cmp);
        for (u, v) in ta.iter().zip(&tb) {
            assert_relative_eq!(u, v, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn fits_repeat_exactly(x in tensor_strategy(), seed in 0..1000u64) {
        let cfg = FitConfig { max_iterations: 10, ..start(seed) };
        let h = HyperParams::default();
        prop_assert_eq!(vi::fit(&x, &h, &cfg).unwrap(), vi::fit(&x, &h, &cfg).unwrap());
    }

    #[test]
    fn serde_round_trips(x in tensor_strategy(), seed in 0..1000u64) {
        let json = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(&serde_json::from_str::<ReportTensor>(&json).unwrap(), &x);
        let cfg = FitConfig { max_iterations: 5, ..start(seed) };
        let fit = vi::fit(&x, &HyperParams::default(), &cfg).unwrap();
        let json = serde_json::to_string(&fit).unwrap();
        prop_assert_eq!(serde_json::from_str::<FitResult>(&json).unwrap(), fit);
    }

    #[test]
    fn baselines_nest_and_respect_the_mask(x in tensor_strategy()) {
        let u = union_baseline(&x);
        let i = intersection_baseline(&x);
        prop_assert!(i.is_subset_of(&u));
        for r in x.entries() {
            prop_assert!(x.mask().contains(r.ego, r.alter, r.reporter));
            prop_assert!(u.contains(r.ego, r.alter));
        }
    }

    #[test]
    fn f1_is_symmetric_under_swap(a in network_strategy(), b in network_strategy()) {
        prop_assume!(a.n_edges() > 0 && b.n_edges() > 0);
        let ab = f1_score(&a, &b).unwrap();
        let ba = f1_score(&b, &a).unwrap();
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
        prop_assert!((ab.f1 - ba.f1).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_is_a_metric(
        a in prop::collection::vec(-10.0..10.0f64, 1..12),
        b in prop::collection::vec(-10.0..10.0f64, 1..12),
        c in prop::collection::vec(-10.0..10.0f64, 1..12),
        shift in -5.0..5.0f64,
    ) {
        let d = |x: &[f64], y: &[f64]| wasserstein_1d(x, y).unwrap();
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-12);
        prop_assert!(d(&a, &a).abs() < 1e-12);
        let moved: Vec<f64> = a.iter().map(|v| v + shift).collect();
        prop_assert!((d(&a, &moved) - shift.abs()).abs() < 1e-9);
    }

    #[test]
    fn mse_of_a_constant_offset(t in prop::collection::vec(0.0..5.0f64, 1..20), off in -3.0..3.0f64) {
        let est: Vec<f64> = t.iter().map(|v| v + off).collect();
        prop_assert!((mse_theta(&est, &t).unwrap() - off * off).abs() < 1e-9);
    }
}

#[test]
fn repeat_rate_extremes() {
    let mk = |recs: &[(u64, u64)]| {
        let recs = recs.iter().map(|&(i, j)| ReportRecord::new(i, j, 0, 1));
        build_report_tensor(recs, 3, ReporterMask::self_dyads(3)).unwrap()
    };
    // Everyone named as a recipient also gives back.
    let x = mk(&[(0, 1), (0, 2), (1, 0), (2, 0)]);
    assert_eq!(repeat_nomination_rate(&x, 0).unwrap(), 1.0);
    let x = mk(&[(0, 1), (2, 0)]);
    assert_eq!(repeat_nomination_rate(&x, 0).unwrap(), 0.0);
}
