//! Acceptance suite. Prints one PASS/FAIL line per criterion on stdout and
//! fails at the end if any criterion failed.

use std::collections::HashMap;
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wpmec::allocation::audit;
use wpmec::channel::{effective_channels, synth_channels, ChannelSet};
use wpmec::convex::rank_residual;
use wpmec::linalg::{CMat, CVec, C64};
use wpmec::offload::{update_varpi, update_xi, varpi_surrogate, xi_surrogate};
use wpmec::phase::{fit_objective, fit_theta};
use wpmec::pipeline::{row_seed, run_scheme, scheme_config, P0Report, Scheme};
use wpmec::scenario::build_scenario;
use wpmec::wet::solve_p1;
use wpmec::{Allocation, SystemConfig};

const SEEDS: std::ops::Range<u64> = 0..10;
/// Float slack on orderings of objectives computed by different solves.
const ORDER_RTOL: f64 = 1e-9;

struct Run {
    alloc: Allocation,
    report: P0Report,
    channels: ChannelSet,
    config: SystemConfig,
}

#[derive(Default)]
struct Runs {
    cache: HashMap<String, Result<Run, String>>,
}

impl Runs {
    fn get(&mut self, label: &str, scheme: Scheme, config: &SystemConfig, seed: u64) -> Result<&Run, String> {
        let key = format!("{label}/{}/{seed}", scheme.tag());
        if !self.cache.contains_key(&key) {
            let rs = row_seed(0, seed);
            let out = build_scenario(config, config.cluster_x, rs)
                .and_then(|sc| {
                    let (alloc, report) = run_scheme(scheme, &sc, config, rs, None)?;
                    let ch = synth_channels(&sc, config, rs)?;
                    let channels = if alloc.irs { ch } else { ch.without_irs() };
                    Ok(Run {
                        alloc,
                        report,
                        channels,
                        config: scheme_config(scheme, config),
                    })
                })
                .map_err(|e| e.to_string());
            self.cache.insert(key.clone(), out);
        }
        self.cache[&key].as_ref().map_err(|e| e.clone())
    }

    fn objective(&mut self, label: &str, scheme: Scheme, config: &SystemConfig, seed: u64) -> Option<f64> {
        self.get(label, scheme, config, seed).ok().map(|r| r.alloc.objective_bits)
    }
}

fn geq(a: f64, b: f64) -> bool {
    a >= b - ORDER_RTOL * b.abs()
}

struct Suite {
    failed: Vec<usize>,
}

impl Suite {
    fn line(&mut self, n: usize, ok: bool, name: &str, detail: String, start: Instant) {
        let tag = if ok { "PASS" } else { "FAIL" };
        let mut o = std::io::stdout().lock();
        let _ = writeln!(o, "{tag} criterion {n:>2} {name}: {detail} [{:.1}s]", start.elapsed().as_secs_f64());
        let _ = o.flush();
        if !ok {
            self.failed.push(n);
        }
    }
}

fn gauss(r: &mut ChaCha8Rng) -> C64 {
    let a: f64 = r.sample(StandardNormal);
    let b: f64 = r.sample(StandardNormal);
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

fn criterion_1() -> (bool, String) {
    let model = wpmec::PhaseModel::default();
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let grid: Vec<f64> = (0..10_000)
        .map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / 10_000.0)
        .collect();
    let mut fit_gap: f64 = 0.0;
    for _ in 0..100 {
        let t = C64::from_polar(r.random_range(0.0..1.2), r.random_range(-3.14..3.14));
        let th = fit_theta(t, &model, std::f64::consts::FRAC_PI_8);
        let best = grid.iter().map(|&g| fit_objective(g, t, &model)).fold(f64::MIN, f64::max);
        fit_gap = fit_gap.max(best - fit_objective(th, t, &model));
    }

    let cfg = SystemConfig::default();
    let sc = build_scenario(&cfg, cfg.cluster_x, 0).unwrap();
    let ch = synth_channels(&sc, &cfg, 0).unwrap();
    let v = CVec::from_fn(ch.irs_elements(), |n, _| C64::from_polar(0.9, 0.7 * n as f64));
    let h = effective_channels(&ch, &v).unwrap();
    let u: Vec<CVec> = (0..cfg.k).map(|_| CVec::from_fn(ch.bm(), |_, _| gauss(&mut r))).collect();
    let p: Vec<f64> = (0..cfg.k).map(|k| 1e-3 * (k + 1) as f64).collect();
    let mu: Vec<f64> = (0..cfg.k).map(|k| (2.0 + k as f64) * cfg.omega).collect();
    let xi = update_xi(&u, &p, &h, &mu, cfg.sigma2);
    let vp = update_varpi(&u, &p, &h, &mu, cfg.sigma2);
    let (bx, bv) = (
        xi_surrogate(&u, &p, &h, &mu, cfg.sigma2, &xi),
        varpi_surrogate(&u, &p, &h, &mu, cfg.sigma2, &vp),
    );
    let mut improve: f64 = f64::MIN;
    for _ in 0..100 {
        let px: Vec<C64> = xi.iter().map(|x| x + gauss(&mut r) * (1e-2 * x.norm())).collect();
        let pv: Vec<C64> = vp.iter().map(|x| x + gauss(&mut r) * (1e-2 * x.norm())).collect();
        improve = improve
            .max((xi_surrogate(&u, &p, &h, &mu, cfg.sigma2, &px) - bx) / bx.abs())
            .max((varpi_surrogate(&u, &p, &h, &mu, cfg.sigma2, &pv) - bv) / bv.abs());
    }

    // one IRS seen through a rank-one cascade: max tr(G'W) = P (sum_b ||a_b||)^2 ||c||^2
    let mut tau_err: f64 = 0.0;
    for _ in 0..3 {
        let mut c1 = SystemConfig { k: 1, i: 1, n: 4, ..SystemConfig::default() };
        c1.p_max = 10.0;
        let c = CVec::from_fn(4, |_, _| gauss(&mut r));
        let a: Vec<CVec> = (0..2).map(|_| CVec::from_fn(2, |_, _| gauss(&mut r) * 3e-3)).collect();
        let g: Vec<Vec<CMat>> = a.iter().map(|ab| vec![ab * c.adjoint()]).collect();
        let h_d = (0..2).map(|_| vec![CVec::from_fn(2, |_, _| gauss(&mut r) * 1e-3)]).collect();
        let h_r = vec![vec![CVec::from_fn(4, |_, _| gauss(&mut r) * 1e-2)]];
        let ch1 = ChannelSet::from_links(h_d, g, h_r).unwrap();
        let gain = c1.p_max * a.iter().map(|x| x.norm()).sum::<f64>().powi(2) * c.norm_squared();
        let need = 4.0 * c1.mu;
        let exact = need * c1.t / (need + c1.eta * gain);
        tau_err = tau_err.max((solve_p1(&ch1, &c1).unwrap().tau1 - exact).abs());
    }
    let ok = fit_gap <= 1e-3 && improve <= 1e-8 && tau_err <= 1e-4;
    (ok, format!("fit gap {fit_gap:.2e}, best perturbation gain {improve:.2e}, tau1 error {tau_err:.2e} s"))
}

#[test]
fn acceptance_suite() {
    let mut suite = Suite { failed: Vec::new() };
    let mut runs = Runs::default();
    let base = SystemConfig::default();
    let alg = &base.alg;

    let t = Instant::now();
    let (ok, d) = criterion_1();
    let ok = ok && t.elapsed().as_secs_f64() < 60.0;
    suite.line(1, ok, "closed-form oracles", d, t);

    let t = Instant::now();
    let mut bad = Vec::new();
    for s in SEEDS {
        match runs.get("base", Scheme::Proposed, &base, s) {
            Ok(run) => {
                let (p3, p4) = (&run.report.p3, &run.report.p4);
                let checks = [
                    p3.worst_inner_decrease() <= 1e-8,
                    p4.worst_inner_decrease() <= 1e-8,
                    p3.max_inner() <= alg.p3_inner_max,
                    p4.max_inner() <= alg.p4_inner_max,
                    p3.converged && p3.final_residual <= alg.penalty_tol && p3.outer_iters <= alg.p3_outer_max,
                    p4.converged && p4.final_residual <= alg.penalty_tol && p4.outer_iters <= alg.p4_outer_max,
                ];
                if checks.iter().any(|c| !c) {
                    bad.push(format!(
                        "seed {s}: p3 dec {:.1e} in {} out {} res {:.1e}; p4 dec {:.1e} in {} out {} res {:.1e}",
                        p3.worst_inner_decrease(),
                        p3.max_inner(),
                        p3.outer_iters,
                        p3.final_residual,
                        p4.worst_inner_decrease(),
                        p4.max_inner(),
                        p4.outer_iters,
                        p4.final_residual
                    ));
                }
            }
            Err(e) => bad.push(format!("seed {s}: {e}")),
        }
    }
    let ok = bad.is_empty() && t.elapsed().as_secs_f64() < 600.0;
    suite.line(2, ok, "monotone traces within caps", format!("{}/10 seeds ok {bad:?}", 10 - bad.len()), t);

    let t = Instant::now();
    let mut bad = Vec::new();
    for s in SEEDS {
        for (label, scheme) in [("base", Scheme::Proposed), ("base", Scheme::UpperBound), ("base", Scheme::NoIrs), ("base", Scheme::FullOffloading)] {
            match runs.get(label, scheme, &base, s) {
                Ok(run) => {
                    let issues = audit(&run.alloc, &run.channels, &run.config, 1e-6);
                    if !issues.is_empty() {
                        bad.push(format!("seed {s} {}: {}", scheme.tag(), issues.join("; ")));
                    }
                }
                Err(e) => bad.push(format!("seed {s} {}: {e}", scheme.tag())),
            }
        }
    }
    suite.line(3, bad.is_empty(), "feasibility audit", format!("{} violations {bad:?}", bad.len()), t);

    let t = Instant::now();
    let half = SystemConfig { phase: wpmec::PhaseModel::practical(0.5), ..base.clone() };
    let mut order_bad = Vec::new();
    for s in SEEDS {
        let b1 = runs.objective("base", Scheme::UpperBound, &base, s);
        let b05 = runs.objective("half", Scheme::Proposed, &half, s);
        let b02 = runs.objective("base", Scheme::Proposed, &base, s);
        let none = runs.objective("base", Scheme::NoIrs, &base, s);
        match (b1, b05, b02, none) {
            (Some(b1), Some(b05), Some(b02), Some(none)) => {
                if !(geq(b1, b05) && geq(b05, b02) && geq(b02, none)) {
                    order_bad.push(format!("seed {s}: {b1:.4e} {b05:.4e} {b02:.4e} no_irs {none:.4e}"));
                }
            }
            _ => order_bad.push(format!("seed {s}: solve failed")),
        }
    }
    let mut gap_ok = 0;
    let mut gaps = Vec::new();
    for s in SEEDS {
        let gap = |n: usize, runs: &mut Runs| {
            let c = SystemConfig { n, ..base.clone() };
            let label = format!("n{n}");
            Some(runs.objective(&label, Scheme::UpperBound, &c, s)? - runs.objective(&label, Scheme::Proposed, &c, s)?)
        };
        match (gap(16, &mut runs), gap(4, &mut runs)) {
            (Some(g16), Some(g4)) => {
                if g16 >= g4 {
                    gap_ok += 1;
                }
                gaps.push(format!("{g4:.2e}->{g16:.2e}"));
            }
            _ => gaps.push("failed".into()),
        }
    }
    let ok = order_bad.is_empty() && gap_ok >= 8;
    suite.line(
        4,
        ok,
        "scheme ordering and element-count gap",
        format!("ordering held on {}/10 {order_bad:?}; gap grew N=4->16 on {gap_ok}/10 {gaps:?}", 10 - order_bad.len()),
        t,
    );

    let t = Instant::now();
    let mut bad = Vec::new();
    for s in SEEDS {
        let vals: Vec<Option<f64>> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&p| {
                let c = SystemConfig { p_max: p, ..base.clone() };
                runs.objective(&format!("pmax{p}"), Scheme::Proposed, &c, s)
            })
            .collect();
        let ok = vals.iter().all(|v| v.is_some()) && vals.windows(2).all(|w| geq(w[1].unwrap(), w[0].unwrap()));
        if !ok {
            bad.push(format!("seed {s}: {vals:?}"));
        }
    }
    suite.line(5, bad.is_empty(), "P_max monotonicity", format!("{}/10 seeds {bad:?}", 10 - bad.len()), t);

    let t = Instant::now();
    let mut trend_ok = 0;
    let mut trend_bad = Vec::new();
    let mut order_bad = Vec::new();
    for s in SEEDS {
        let vals: Vec<Option<f64>> = [2.5, 3.0, 3.5]
            .iter()
            .map(|&k| {
                let c = SystemConfig { kappa_hu: k, ..base.clone() };
                let label = if k == base.kappa_hu { "base".to_string() } else { format!("khu{k}") };
                runs.objective(&label, Scheme::Proposed, &c, s)
            })
            .collect();
        if vals.iter().all(|v| v.is_some()) && vals.windows(2).all(|w| geq(w[0].unwrap(), w[1].unwrap())) {
            trend_ok += 1;
        } else {
            let vals: Vec<String> = vals.iter().map(|v| v.map_or_else(|| "failed".into(), |x| format!("{x:.4e}"))).collect();
            trend_bad.push(format!("seed {s}: {}", vals.join(" ")));
        }
        let prop = runs.objective("base", Scheme::Proposed, &base, s);
        let full = runs.objective("base", Scheme::FullOffloading, &base, s);
        let none = runs.objective("base", Scheme::NoIrs, &base, s);
        match (prop, full, none) {
            (Some(a), Some(b), Some(c)) if geq(a, b) && geq(b, c) => {}
            (Some(a), Some(b), Some(c)) => order_bad.push(format!("seed {s}: {a:.4e} {b:.4e} no_irs {c:.4e}")),
            _ => order_bad.push(format!("seed {s}: solve failed")),
        }
    }
    let ok = trend_ok >= 9 && order_bad.is_empty();
    suite.line(
        6,
        ok,
        "path-loss trend and offloading ordering",
        format!(
            "non-increasing in kappa_HU on {trend_ok}/10 {trend_bad:?}; proposed >= full_offloading >= no_irs on {}/10 {order_bad:?}",
            10 - order_bad.len()
        ),
        t,
    );

    let t = Instant::now();
    let mut interior = 0;
    let mut picks = Vec::new();
    for s in SEEDS {
        if let Ok(run) = runs.get("base", Scheme::Proposed, &base, s) {
            let n = run.report.grid.len();
            let best = run.report.best_index();
            if matches!(best, Some(i) if i > 0 && i + 1 < n) {
                interior += 1;
            }
            picks.push(best.map_or_else(|| format!("none/{n}"), |i| format!("{i}/{n}")));
        }
    }
    suite.line(7, interior >= 8, "interior tau2 optimum", format!("{interior}/10 interior {picks:?}"), t);

    let t = Instant::now();
    let mut loss = [0.0f64; 2];
    let mut counted = 0;
    for s in SEEDS {
        let clean = runs.objective("base", Scheme::Proposed, &base, s);
        let noisy: Vec<Option<f64>> = [0.1, 0.3]
            .iter()
            .map(|&d| {
                let c = SystemConfig { csi_delta: d, ..base.clone() };
                runs.objective(&format!("csi{d}"), Scheme::Proposed, &c, s)
            })
            .collect();
        if let (Some(c), Some(a), Some(b)) = (clean, noisy[0], noisy[1]) {
            loss[0] += (c - a) / c;
            loss[1] += (c - b) / c;
            counted += 1;
        }
    }
    let (l1, l3) = (loss[0] / counted.max(1) as f64, loss[1] / counted.max(1) as f64);
    let ok = counted == 10 && l3 > l1 && l1 > 0.0;
    suite.line(8, ok, "CSI robustness trend", format!("mean loss {:.2}% at 0.1, {:.2}% at 0.3 over {counted} seeds", 100.0 * l1, 100.0 * l3), t);

    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut good = 0;
    for s in SEEDS {
        if let Ok(run) = runs.get("base", Scheme::Proposed, &base, s) {
            let r = rank_residual(&run.alloc.q);
            worst = worst.max(r);
            if r <= 1e-6 {
                good += 1;
            }
        }
    }
    suite.line(9, good == 10, "rank-one charging covariance", format!("{good}/10, worst relative residual {worst:.2e}"), t);

    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let csv = dir.path().join(format!("{run}.csv"));
        let trace = dir.path().join(format!("{run}.trace.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_wpmec"))
            .args(["solve", "--seed", "7", "--out"])
            .arg(&csv)
            .arg("--trace")
            .arg(&trace)
            .output()
            .unwrap();
        outs.push((out.status.success(), std::fs::read(&csv).ok(), std::fs::read(&trace).ok(), out.stdout));
    }
    let ok = outs.iter().all(|o| o.0 && o.1.is_some() && o.2.is_some()) && outs[0].1 == outs[1].1 && outs[0].2 == outs[1].2;
    suite.line(10, ok, "deterministic reruns", format!("csv and trace identical: {ok}"), t);

    {
        let mut o = std::io::stdout().lock();
        let _ = writeln!(o, "{} of 10 criteria passed", 10 - suite.failed.len());
    }
    assert!(suite.failed.is_empty(), "failed criteria: {:?}", suite.failed);
}
