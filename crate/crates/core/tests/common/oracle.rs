//! Dense re-derivation of every coordinate update and the ELBO, evaluated by
//! brute force over all (i, j, m) on tiny instances and compared with the
//! sparse implementation.

use multirep::vi::{self, Problem};
use multirep::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{digamma, ln_gamma};

const TOL: f64 = 1e-10;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

fn assert_vec(what: &str, a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len(), "{what}");
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        assert!(close(*x, *y), "{what}[{k}]: {x} vs {y}");
    }
}

/// Dense copy of the inputs: X[i][j][m], R[i][j][m], p[i][j][k].
struct Dense {
    n: usize,
    m: usize,
    k: usize,
    x: Vec<Vec<Vec<f64>>>,
    r: Vec<Vec<Vec<f64>>>,
    p: Vec<Vec<Vec<f64>>>,
}

impl Dense {
    fn new(t: &ReportTensor, pr: &Priors) -> Self {
        let (n, m, k) = (t.n_nodes(), t.n_reporters(), pr.n_levels);
        let mut x = vec![vec![vec![0.0; m]; n]; n];
        let mut r = vec![vec![vec![0.0; m]; n]; n];
        let mut p = vec![vec![vec![0.0; k]; n]; n];
        for i in 0..n {
            for j in 0..n {
                p[i][j] = pr.prior_row(i as u32, j as u32).to_vec();
                for mm in 0..m {
                    x[i][j][mm] = t.get(i as u32, j as u32, mm as u32) as f64;
                    r[i][j][mm] = t.mask().contains(i as u32, j as u32, mm as u32) as u8 as f64;
                }
            }
        }
        Self { n, m, k, x, r, p }
    }
}

fn elog(s: f64, r: f64) -> f64 {
    digamma(s) - r.ln()
}

/// Responsibilities of the split, as zhat[i][j][m][k] = (z1, z2).
fn dense_z(d: &Dense, s: &VariationalState) -> Vec<Vec<Vec<Vec<(f64, f64)>>>> {
    let mut z = vec![vec![vec![vec![(1.0, 0.0); d.k]; d.m]; d.n]; d.n];
    for i in 0..d.n {
        for j in 0..d.n {
            for m in 0..d.m {
                if d.x[i][j][m] == 0.0 {
                    continue;
                }
                for k in 0..d.k {
                    let u1 = (elog(s.gamma_shape[m], s.gamma_rate[m])
                        + elog(s.phi_shape[k], s.phi_rate[k]))
                    .exp();
                    let u2 = d.x[j][i][m] * elog(s.nu_shape, s.nu_rate).exp();
                    z[i][j][m][k] = (u1 / (u1 + u2), u2 / (u1 + u2));
                }
            }
        }
    }
    z
}

fn rho_dense(s: &VariationalState, n: usize) -> Vec<Vec<Vec<f64>>> {
    (0..n)
        .map(|i| (0..n).map(|j| s.rho.row(i as u32, j as u32)).collect())
        .collect()
}

fn oracle_theta(
    d: &Dense,
    s: &VariationalState,
    pr: &Priors,
    z: &[Vec<Vec<Vec<(f64, f64)>>>],
) -> (Vec<f64>, Vec<f64>) {
    let rho = rho_dense(s, d.n);
    let lam: Vec<f64> = (0..d.k).map(|k| s.phi_shape[k] / s.phi_rate[k]).collect();
    let mut shape = pr.alpha.clone();
    let mut rate = pr.beta.clone();
    for i in 0..d.n {
        for j in 0..d.n {
            if i == j {
                continue;
            }
            for m in 0..d.m {
                for k in 0..d.k {
                    shape[m] += d.r[i][j][m] * rho[i][j][k] * d.x[i][j][m] * z[i][j][m][k].0;
                    rate[m] += d.r[i][j][m] * rho[i][j][k] * lam[k];
                }
            }
        }
    }
    (shape, rate)
}

fn oracle_lambda(
    d: &Dense,
    s: &VariationalState,
    pr: &Priors,
    z: &[Vec<Vec<Vec<(f64, f64)>>>],
) -> (Vec<f64>, Vec<f64>) {
    let rho = rho_dense(s, d.n);
    let th: Vec<f64> = (0..d.m)
        .map(|m| s.gamma_shape[m] / s.gamma_rate[m])
        .collect();
    let mut shape = pr.a.clone();
    let mut rate = pr.b.clone();
    for i in 0..d.n {
        for j in 0..d.n {
            if i == j {
                continue;
            }
            for m in 0..d.m {
                for k in 0..d.k {
                    shape[k] += d.r[i][j][m] * rho[i][j][k] * d.x[i][j][m] * z[i][j][m][k].0;
                    rate[k] += d.r[i][j][m] * rho[i][j][k] * th[m];
                }
            }
        }
    }
    (shape, rate)
}

fn oracle_rho(
    d: &Dense,
    s: &VariationalState,
    z: &[Vec<Vec<Vec<(f64, f64)>>>],
) -> Vec<Vec<Vec<f64>>> {
    let th: Vec<f64> = (0..d.m)
        .map(|m| s.gamma_shape[m] / s.gamma_rate[m])
        .collect();
    let mut out = vec![vec![vec![0.0; d.k]; d.n]; d.n];
    for i in 0..d.n {
        for j in 0..d.n {
            if i == j {
                continue;
            }
            let mut score = vec![0.0; d.k];
            for k in 0..d.k {
                score[k] = d.p[i][j][k].ln();
                let el = elog(s.phi_shape[k], s.phi_rate[k]);
                let mut exposure = 0.0;
                for m in 0..d.m {
                    score[k] += d.r[i][j][m] * d.x[i][j][m] * z[i][j][m][k].0 * el;
                    exposure += d.r[i][j][m] * th[m];
                }
                score[k] -= s.phi_shape[k] / s.phi_rate[k] * exposure;
            }
            let mx = score.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let tot: f64 = score.iter().map(|v| (v - mx).exp()).sum();
            out[i][j] = score.iter().map(|v| (v - mx).exp() / tot).collect();
        }
    }
    out
}

fn oracle_eta(
    d: &Dense,
    s: &VariationalState,
    pr: &Priors,
    z: &[Vec<Vec<Vec<(f64, f64)>>>],
) -> (f64, f64) {
    let rho = rho_dense(s, d.n);
    let mut shape = pr.c;
    let mut rate = pr.d;
    for i in 0..d.n {
        for j in 0..d.n {
            if i == j {
                continue;
            }
            for m in 0..d.m {
                for k in 0..d.k {
                    shape += rho[i][j][k] * d.r[i][j][m] * d.x[i][j][m] * z[i][j][m][k].1;
                }
                rate += d.r[i][j][m] * d.x[j][i][m];
            }
        }
    }
    (shape, rate)
}

/// ELBO transcribed term by term, constants dropped.
fn oracle_elbo(d: &Dense, s: &VariationalState, pr: &Priors) -> f64 {
    let rho = rho_dense(s, d.n);
    let th: Vec<f64> = (0..d.m)
        .map(|m| s.gamma_shape[m] / s.gamma_rate[m])
        .collect();
    let lam: Vec<f64> = (0..d.k).map(|k| s.phi_shape[k] / s.phi_rate[k]).collect();
    let eta = s.nu_shape / s.nu_rate;
    let mut total = 0.0;
    for i in 0..d.n {
        for j in 0..d.n {
            if i == j {
                continue;
            }
            for k in 0..d.k {
                let q = rho[i][j][k];
                if q > 0.0 {
                    total += q * (d.p[i][j][k].ln() - q.ln());
                }
                for m in 0..d.m {
                    if d.r[i][j][m] == 0.0 {
                        continue;
                    }
                    let x = d.x[i][j][m];
                    let xr = d.x[j][i][m];
                    let mut loglik = elog(s.gamma_shape[m], s.gamma_rate[m])
                        + elog(s.phi_shape[k], s.phi_rate[k]);
                    if xr > 0.0 {
                        loglik += elog(s.nu_shape, s.nu_rate) + xr.ln();
                    }
                    total += q * (x * loglik - th[m] * lam[k]);
                }
            }
            for m in 0..d.m {
                total -= d.r[i][j][m] * eta * d.x[j][i][m];
            }
        }
    }
    // E_q[log Gamma(x; a, b)] - E_q[log Gamma(x; sh, rt)], minus the
    // data-free constant a ln b - lnΓ(a).
    let block = |a: f64, b: f64, sh: f64, rt: f64| {
        let el = elog(sh, rt);
        let log_prior = a * b.ln() - ln_gamma(a) + (a - 1.0) * el - b * sh / rt;
        let log_q = sh * rt.ln() - ln_gamma(sh) + (sh - 1.0) * el - sh;
        log_prior - log_q - (a * b.ln() - ln_gamma(a))
    };
    let mut g = block(pr.c, pr.d, s.nu_shape, s.nu_rate);
    for k in 0..d.k {
        g += block(pr.a[k], pr.b[k], s.phi_shape[k], s.phi_rate[k]);
    }
    for m in 0..d.m {
        g += block(pr.alpha[m], pr.beta[m], s.gamma_shape[m], s.gamma_rate[m]);
    }
    total + g
}

fn random_instance(rng: &mut impl Rng, mask_kind: usize) -> (ReportTensor, Priors) {
    let n = 3;
    let m = 3;
    let mask = match mask_kind {
        0 => ReporterMask::self_dyads(m),
        1 => ReporterMask::FullRoster { n_reporters: m },
        _ => {
            let mut cells = Vec::new();
            for i in 0..n as u32 {
                for j in 0..n as u32 {
                    for r in 0..m as u32 {
                        if i != j && rng.random::<f64>() < 0.6 {
                            cells.push((i, j, r));
                        }
                    }
                }
            }
            ReporterMask::custom(m, cells)
        }
    };
    let mut records = Vec::new();
    for i in 0..n as u32 {
        for j in 0..n as u32 {
            for r in 0..m as u32 {
                if mask.contains(i, j, r) && rng.random::<f64>() < 0.6 {
                    records.push(ReportRecord::new(
                        i.into(),
                        j.into(),
                        r.into(),
                        rng.random_range(1..4),
                    ));
                }
            }
        }
    }
    let tensor = build_report_tensor(records, n, mask).unwrap();
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let h = HyperParams {
        alpha: (0..m).map(|_| u(0.5, 3.0)).collect(),
        beta: (0..m).map(|_| u(0.5, 3.0)).collect(),
        a: vec![u(0.5, 2.0), u(0.5, 2.0)],
        b: vec![u(0.5, 2.0), u(0.5, 2.0)],
        c: u(0.5, 2.0),
        d: u(0.5, 2.0),
        prior: {
            let p = u(0.2, 0.8);
            vec![p, 1.0 - p]
        },
        prior_overrides: if u(0.0, 1.0) < 0.5 {
            let p = u(0.1, 0.9);
            vec![((2, 0), vec![p, 1.0 - p])]
        } else {
            Vec::new()
        },
    };
    let priors = validate_hyperparams(&h, 2, n, m).unwrap();
    (tensor, priors)
}

/// Runs `warmup` sweeps so the implicit ρ is no longer the prior, then
/// checks one sweep update by update.
pub fn check_instance(seed: u64, mask_kind: usize, warmup: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (tensor, priors) = random_instance(&mut rng, mask_kind);
    let problem = Problem::new(&tensor, &priors).unwrap();
    let config = FitConfig {
        seed,
        init_offset_scale: 0.5,
        ..FitConfig::default()
    };
    let mut state = vi::init_state(&problem, &config);
    for _ in 0..warmup {
        vi::sweep(&problem, &mut state);
    }
    let d = Dense::new(&tensor, &priors);
    let tag = format!("seed {seed} mask {mask_kind} warmup {warmup}");

    let elbo = vi::compute_elbo(&problem, &state).unwrap();
    let elbo_dense = oracle_elbo(&d, &state, &priors);
    assert!(close(elbo, elbo_dense), "{tag} elbo {elbo} vs {elbo_dense}");

    let z = vi::update_responsibilities(&problem, &state);
    let zd = dense_z(&d, &state);
    for (e, r) in tensor.entries().iter().enumerate() {
        let cell = &zd[r.ego as usize][r.alter as usize][r.reporter as usize];
        let (z1, z2): (Vec<f64>, Vec<f64>) = cell.iter().copied().unzip();
        assert_vec(&format!("{tag} z1"), z.z1(e), &z1);
        assert_vec(&format!("{tag} z2"), z.z2(e), &z2);
    }

    let (gs, gr) = vi::update_theta(&problem, &state, &z);
    let (os, or) = oracle_theta(&d, &state, &priors, &zd);
    assert_vec(&format!("{tag} gamma_shape"), &gs, &os);
    assert_vec(&format!("{tag} gamma_rate"), &gr, &or);
    state.gamma_shape = gs;
    state.gamma_rate = gr;

    let (ps, pr) = vi::update_lambda(&problem, &state, &z);
    let (os, or) = oracle_lambda(&d, &state, &priors, &zd);
    assert_vec(&format!("{tag} phi_shape"), &ps, &os);
    assert_vec(&format!("{tag} phi_rate"), &pr, &or);
    state.phi_shape = ps;
    state.phi_rate = pr;

    let rho = vi::update_rho(&problem, &state, &z);
    let od = oracle_rho(&d, &state, &zd);
    for i in 0..d.n {
        for j in (0..d.n).filter(|&j| j != i) {
            assert_vec(
                &format!("{tag} rho[{i}][{j}]"),
                &rho.row(i as u32, j as u32),
                &od[i][j],
            );
        }
    }
    state.rho = rho;

    let (ns, nr) = vi::update_eta(&problem, &state, &z);
    let (os, or) = oracle_eta(&d, &state, &priors, &zd);
    assert!(
        close(ns, os) && close(nr, or),
        "{tag} nu ({ns}, {nr}) vs ({os}, {or})"
    );
}
