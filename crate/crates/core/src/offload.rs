//! Uplink computation design: detectors `U`, offload reflection `v^I`,
//! transmit powers and CPU frequencies, via Lagrangian-dual and quadratic
//! transforms inside a penalty loop.

use crate::channel::{effective_channels, ChannelSet};
use crate::config::SystemConfig;
use crate::convex::{solve_conic, ConicProgram, LinExpr, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{inner, CMat, CVec, C64};
use crate::phase::{anchor, penalty_residual, project_profile_from, PhaseProfile, Slot};
use crate::report::{SolveReport, TraceEntry};
use crate::rng::{substream, Stream};
use crate::wet::{harvested_energy, WetSetting};

#[derive(Debug, Clone, PartialEq)]
pub struct ComputeSetting {
    /// Stacked BM detector per WD.
    pub u: Vec<CVec>,
    /// Transmit power per WD, watts.
    pub p: Vec<f64>,
    /// CPU frequency per WD, cycles/s.
    pub f: Vec<f64>,
    pub profile_i: PhaseProfile,
    pub rho: Vec<f64>,
    pub xi: Vec<C64>,
    pub varpi: Vec<C64>,
    pub t1: f64,
}

/// Which blocks of the offloading design are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffloadMode {
    /// Optimize the IRS reflection (false: IRS absent, `v = 0`).
    pub passive: bool,
    /// Allow local computing (false: `f = 0`).
    pub local: bool,
}

impl Default for OffloadMode {
    fn default() -> Self {
        OffloadMode {
            passive: true,
            local: true,
        }
    }
}

/// `|u_k^H h_j|^2` for all pairs.
fn cross_gains(u: &[CVec], h: &[CVec]) -> Vec<Vec<f64>> {
    u.iter()
        .map(|uk| h.iter().map(|hj| inner(uk, hj).norm_sqr()).collect())
        .collect()
}

/// SINR and rate (bits/s) for every WD given effective channels.
pub fn sinr_from_channels(p: &[f64], u: &[CVec], h: &[CVec], config: &SystemConfig) -> (Vec<f64>, Vec<f64>) {
    let gains = cross_gains(u, h);
    let gamma: Vec<f64> = (0..u.len())
        .map(|k| {
            let signal = p[k] * gains[k][k];
            let interference: f64 = (0..h.len()).filter(|&j| j != k).map(|j| p[j] * gains[k][j]).sum();
            let noise = config.sigma2 * u[k].norm_squared();
            let den = interference + noise;
            if signal == 0.0 {
                0.0
            } else {
                signal / den
            }
        })
        .collect();
    let rate = gamma.iter().map(|g| config.omega * (1.0 + g).log2()).collect();
    (gamma, rate)
}

pub fn sinr_and_rate(
    p: &[f64],
    u: &[CVec],
    profile_i: &PhaseProfile,
    channels: &ChannelSet,
    config: &SystemConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = effective_channels(channels, &profile_i.v)?;
    Ok(sinr_from_channels(p, u, &h, config))
}

pub fn update_rho(gamma: &[f64]) -> Vec<f64> {
    gamma.to_vec()
}

/// `mu_k = (1 + rho_k) omega`.
pub fn mu_weights(rho: &[f64], config: &SystemConfig) -> Vec<f64> {
    rho.iter().map(|r| (1.0 + r) * config.omega).collect()
}

/// Optimal quadratic-transform auxiliaries for the detector block.
pub fn update_xi(u: &[CVec], p: &[f64], h: &[CVec], mu: &[f64], sigma2: f64) -> Vec<C64> {
    (0..u.len())
        .map(|k| {
            let s = inner(&u[k], &h[k]);
            let den: f64 = (0..h.len()).map(|j| p[j] * inner(&u[k], &h[j]).norm_sqr()).sum::<f64>()
                + sigma2 * u[k].norm_squared();
            if s.norm() == 0.0 || den == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                s * ((mu[k] * p[k]).sqrt() / den)
            }
        })
        .collect()
}

/// Quadratic-transform surrogate of `mu_k g_k` for the detector/power blocks.
pub fn xi_surrogate(u: &[CVec], p: &[f64], h: &[CVec], mu: &[f64], sigma2: f64, xi: &[C64]) -> f64 {
    (0..u.len())
        .map(|k| {
            let s = inner(&u[k], &h[k]);
            let den: f64 = (0..h.len()).map(|j| p[j] * inner(&u[k], &h[j]).norm_sqr()).sum::<f64>()
                + sigma2 * u[k].norm_squared();
            2.0 * (mu[k] * p[k]).sqrt() * (xi[k].conj() * s).re - xi[k].norm_sqr() * den
        })
        .sum()
}

/// Per-user detector QCQP; `A = |xi|^2 (sum_j P_j h_j h_j^H + sigma^2 I)`.
pub struct MudProblem {
    pub a: CMat,
    pub b: CVec,
}

pub fn mud_problem(k: usize, xi: &[C64], p: &[f64], h: &[CVec], mu: &[f64], sigma2: f64) -> MudProblem {
    let bm = h[0].len();
    let mut r = CMat::identity(bm, bm) * C64::new(sigma2, 0.0);
    for (j, hj) in h.iter().enumerate() {
        r += crate::linalg::outer(hj) * C64::new(p[j], 0.0);
    }
    let w = xi[k].norm_sqr();
    MudProblem {
        a: r * C64::new(w, 0.0),
        b: &h[k] * (xi[k].conj() * (mu[k] * p[k]).sqrt()),
    }
}

fn block_norms_ok(u: &CVec, blocks: usize, m: usize) -> bool {
    (0..blocks).all(|b| u.rows(b * m, m).norm_squared() <= 1.0)
}

/// Maximizes `-u^H A u + 2 Re(b^H u)` subject to unit per-HAP block norms.
pub fn solve_mud_user(prob: &MudProblem, blocks: usize, m: usize) -> Result<CVec> {
    let n = prob.b.len();
    if prob.b.norm() == 0.0 {
        return Ok(CVec::zeros(n));
    }
    if let Some(ch) = prob.a.clone().cholesky() {
        let u = ch.solve(&prob.b);
        if block_norms_ok(&u, blocks, m) {
            return Ok(u);
        }
    }
    let scale = prob.a.norm().max(1e-300);
    let mut prog = ConicProgram::new();
    let u = prog.add_complex(n);
    for b in 0..blocks {
        let idx: Vec<usize> = (b * m..(b + 1) * m).collect();
        prog.add_ball(u, &idx, 1.0);
    }
    prog.add_objective_hermitian(u, &(&prob.a / C64::new(scale, 0.0)), 1.0);
    prog.minimize(LinExpr::new().add_re_inner(u, &prob.b, -2.0 / scale));
    let sol = solve_conic(&prog, &SolverSettings::default())?.check("detector QCQP")?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Numerical("detector QCQP reported infeasible".into()));
    }
    let mut out = sol.vector(u);
    // clip round-off above the unit block norm
    for b in 0..blocks {
        let nb = out.rows(b * m, m).norm();
        if nb > 1.0 {
            let mut blk = out.rows_mut(b * m, m);
            blk /= C64::new(nb, 0.0);
        }
    }
    Ok(out)
}

pub fn solve_mud(
    xi: &[C64],
    p: &[f64],
    h: &[CVec],
    mu: &[f64],
    config: &SystemConfig,
) -> Result<Vec<CVec>> {
    (0..h.len())
        .map(|k| solve_mud_user(&mud_problem(k, xi, p, h, mu, config.sigma2), config.b, config.m))
        .collect()
}

/// `F_{k,j} = sqrt(P_j) u_k^H h_j`.
pub fn f_matrix(u: &[CVec], p: &[f64], h: &[CVec]) -> Vec<Vec<C64>> {
    u.iter()
        .map(|uk| h.iter().zip(p).map(|(hj, pj)| inner(uk, hj) * pj.sqrt()).collect())
        .collect()
}

pub fn update_varpi(u: &[CVec], p: &[f64], h: &[CVec], mu: &[f64], sigma2: f64) -> Vec<C64> {
    let f = f_matrix(u, p, h);
    (0..u.len())
        .map(|k| {
            let den: f64 = f[k].iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma2 * u[k].norm_squared();
            if f[k][k].norm() == 0.0 || den == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                f[k][k] * (mu[k].sqrt() / den)
            }
        })
        .collect()
}

/// Quadratic-transform surrogate for the reflection block at `h`.
pub fn varpi_surrogate(u: &[CVec], p: &[f64], h: &[CVec], mu: &[f64], sigma2: f64, varpi: &[C64]) -> f64 {
    let f = f_matrix(u, p, h);
    (0..u.len())
        .map(|k| {
            let den: f64 = f[k].iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma2 * u[k].norm_squared();
            2.0 * mu[k].sqrt() * (varpi[k].conj() * f[k][k]).re - varpi[k].norm_sqr() * den
        })
        .sum()
}

/// Quadratic model `max -v^H Lambda v + 2 Re(nu^H v) - const` of the
/// reflection surrogate.
pub struct PassiveModel {
    pub lambda: CMat,
    pub nu: CVec,
}

pub fn passive_model(
    varpi: &[C64],
    u: &[CVec],
    p: &[f64],
    channels: &ChannelSet,
    mu: &[f64],
) -> PassiveModel {
    let len = channels.irs_elements();
    let k_n = u.len();
    let mut lambda = CMat::zeros(len, len);
    let mut nu = CVec::zeros(len);
    for k in 0..k_n {
        // u_k^H G_stack, as a row turned into a column: G^H u_k
        let gu = channels.g_stack.adjoint() * &u[k];
        for j in 0..k_n {
            let w = varpi[k].conj() * p[j].sqrt();
            let c_kj = w * inner(&u[k], &channels.h_d_stack[j]);
            // g_kj = (w u_k^H G diag(h_r_j))^H = conj(w) diag(conj h_r_j) G^H u_k
            let g_kj = channels.h_r_stack[j].map(|z| z.conj()).component_mul(&gu) * w.conj();
            lambda += &g_kj * g_kj.adjoint();
            // linear term 2 Re(nu^H v): from -2 Re(c^* g^H v) and 2 sqrt(mu) Re(g_kk^H v)
            nu -= &g_kj * c_kj;
            if j == k {
                nu += &g_kj * C64::new(mu[k].sqrt(), 0.0);
            }
        }
    }
    PassiveModel {
        lambda: crate::linalg::hermitian_part(&lambda),
        nu,
    }
}

/// Minimizes `v^H Lambda v - 2 Re(nu^H v) + iota ||v - a||^2` over `|v_n| <= 1`.
pub fn solve_passive_qp(model: &PassiveModel, iota: f64, a: &CVec) -> Result<CVec> {
    let n = a.len();
    let h = &model.lambda + CMat::identity(n, n) * C64::new(iota, 0.0);
    let rhs = &model.nu + a * C64::new(iota, 0.0);
    if let Some(ch) = h.clone().cholesky() {
        let v = ch.solve(&rhs);
        if v.iter().all(|z| z.norm() <= 1.0) {
            return Ok(v);
        }
    }
    let scale = h.norm().max(1e-300);
    let mut prog = ConicProgram::new();
    let var = prog.add_complex(n);
    for e in 0..n {
        prog.add_ball(var, &[e], 1.0);
    }
    prog.add_objective_hermitian(var, &(&h / C64::new(scale, 0.0)), 1.0);
    prog.minimize(LinExpr::new().add_re_inner(var, &rhs, -2.0 / scale));
    let sol = solve_conic(&prog, &SolverSettings::default())?.check("reflection QP")?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Numerical("reflection QP reported infeasible".into()));
    }
    let mut v = sol.vector(var);
    for z in v.iter_mut() {
        let r = z.norm();
        if r > 1.0 {
            *z /= r;
        }
    }
    Ok(v)
}

pub fn solve_passive(
    varpi: &[C64],
    u: &[CVec],
    p: &[f64],
    channels: &ChannelSet,
    mu: &[f64],
    iota: f64,
    anchor_i: &CVec,
) -> Result<CVec> {
    solve_passive_qp(&passive_model(varpi, u, p, channels, mu), iota, anchor_i)
}

/// Power budget `E/t1 - P_c` per WD, rejecting WDs that cannot power their circuit.
pub fn power_budget(e_wd: &[f64], t1: f64, config: &SystemConfig) -> Result<Vec<f64>> {
    e_wd.iter()
        .enumerate()
        .map(|(k, &e)| {
            let required = t1 * config.p_c;
            if e < required {
                Err(Error::CircuitPower {
                    wd: k,
                    harvested: e,
                    required,
                })
            } else {
                Ok((e / t1 - config.p_c).max(0.0))
            }
        })
        .collect()
}

/// `max 2 a p - c p^2 + phi f` subject to `kappa f^2 + p^2 <= s`,
/// `0 <= f <= f_max`, `p >= 0`, by bisection on the budget multiplier.
pub fn power_freq_user(a: f64, c: f64, phi: f64, kappa: f64, f_max: f64, s: f64) -> (f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0);
    }
    let a = a.max(0.0);
    let at = |lam: f64| {
        let p = if a == 0.0 { 0.0 } else { a / (c + lam) };
        let f = if phi == 0.0 {
            0.0
        } else if lam == 0.0 {
            f_max
        } else {
            (phi / (2.0 * kappa * lam)).min(f_max)
        };
        (p, f)
    };
    let excess = |lam: f64| {
        let (p, f) = at(lam);
        kappa * f * f + p * p - s
    };
    let (p, f) = if c > 0.0 && excess(0.0) <= 0.0 {
        at(0.0)
    } else {
        let mut hi = 1e-30_f64.max(c);
        while excess(hi) > 0.0 {
            hi *= 4.0;
        }
        let mut lo = hi / 4.0;
        while lo > 1e-300 && excess(lo) <= 0.0 {
            lo /= 4.0;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
        }
        at(hi)
    };
    let used = kappa * f * f + p * p;
    if used > s {
        let r = (s / used).sqrt();
        (p * r, f * r)
    } else {
        (p, f)
    }
}

/// Power/frequency block for fixed detectors and auxiliaries.
#[allow(clippy::too_many_arguments)]
pub fn solve_power_freq(
    xi: &[C64],
    u: &[CVec],
    h: &[CVec],
    mu: &[f64],
    e_wd: &[f64],
    t1: f64,
    config: &SystemConfig,
    local: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let budget = power_budget(e_wd, t1, config)?;
    let k_n = u.len();
    let gains = cross_gains(u, h);
    let mut p = vec![0.0; k_n];
    let mut f = vec![0.0; k_n];
    let phi = if local { 1.0 / config.c_cycles_per_bit } else { 0.0 };
    for k in 0..k_n {
        let a = mu[k].sqrt() * (xi[k].conj() * inner(&u[k], &h[k])).re;
        let c: f64 = (0..k_n).map(|j| xi[j].norm_sqr() * gains[j][k]).sum();
        let (pk, fk) = power_freq_user(a, c, phi, config.kappa_eff, config.f_max, budget[k]);
        p[k] = pk * pk;
        f[k] = fk;
    }
    Ok((p, f))
}

/// Penalized LDR objective `sum [w ln(1+rho) - w rho + mu g_k] + sum f/C - iota r`.
#[allow(clippy::too_many_arguments)]
fn ldr_objective(
    p: &[f64],
    u: &[CVec],
    h: &[CVec],
    f: &[f64],
    rho: &[f64],
    config: &SystemConfig,
    iota: f64,
    residual: f64,
) -> f64 {
    let gains = cross_gains(u, h);
    let mut total = 0.0;
    for k in 0..u.len() {
        let den: f64 = (0..h.len()).map(|j| p[j] * gains[k][j]).sum::<f64>() + config.sigma2 * u[k].norm_squared();
        let g = if den > 0.0 { p[k] * gains[k][k] / den } else { 0.0 };
        total += config.omega * ((1.0 + rho[k]).ln() - rho[k]) + (1.0 + rho[k]) * config.omega * g;
        total += f[k] / config.c_cycles_per_bit;
    }
    total - iota * residual
}

/// Penalized objective with `rho = gamma`: `sum w ln(1+gamma) + sum f/C - iota r`.
pub fn penalized_objective(
    p: &[f64],
    u: &[CVec],
    h: &[CVec],
    f: &[f64],
    config: &SystemConfig,
    iota: f64,
    residual: f64,
) -> f64 {
    let (gamma, _) = sinr_from_channels(p, u, h, config);
    gamma.iter().map(|g| config.omega * g.ln_1p()).sum::<f64>()
        + f.iter().map(|x| x / config.c_cycles_per_bit).sum::<f64>()
        - iota * residual
}

fn matched_filters(h: &[CVec], blocks: usize, m: usize) -> Vec<CVec> {
    h.iter()
        .map(|hk| {
            let mut u = hk.clone();
            for b in 0..blocks {
                let n = u.rows(b * m, m).norm();
                let mut blk = u.rows_mut(b * m, m);
                if n > 0.0 {
                    blk /= C64::new(n, 0.0);
                }
            }
            u
        })
        .collect()
}

fn mmse_filters(p: &[f64], h: &[CVec], config: &SystemConfig) -> Option<Vec<CVec>> {
    let n = h.first()?.len();
    let mut r = CMat::identity(n, n) * C64::new(config.sigma2, 0.0);
    for (hj, pj) in h.iter().zip(p) {
        r += hj * hj.adjoint() * C64::new(*pj, 0.0);
    }
    let ch = r.cholesky()?;
    Some(
        h.iter()
            .map(|hk| {
                let mut u = ch.solve(hk);
                let peak = (0..config.b)
                    .map(|b| u.rows(b * config.m, config.m).norm())
                    .fold(0.0, f64::max);
                if peak > 0.0 {
                    u /= C64::new(peak, 0.0);
                }
                u
            })
            .collect(),
    )
}

fn clip_disk(v: &mut CVec) {
    for z in v.iter_mut() {
        let r = z.norm();
        if r > 1.0 {
            *z /= r;
        }
    }
}

/// Two-layer penalty BCD for the offloading phase with energy budgets `e_wd`.
pub fn optimize_offloading(
    channels: &ChannelSet,
    config: &SystemConfig,
    e_wd: &[f64],
    t1: f64,
    seed: u64,
    mode: OffloadMode,
) -> Result<(ComputeSetting, SolveReport)> {
    if !(t1 > 0.0) {
        return Err(Error::Domain(format!("offloading time must be positive, got {t1}")));
    }
    let model = &config.phase;
    let alg = &config.alg;
    let len = channels.irs_elements();
    let budget = power_budget(e_wd, t1, config)?;
    let mut rng = substream(seed, Stream::InitOffload);
    let mut profile = if mode.passive {
        PhaseProfile::random(len, model, Slot::Offload, &mut rng)
    } else {
        PhaseProfile::off(len, Slot::Offload)
    };
    let mut h = effective_channels(channels, &profile.v)?;
    let mut u = matched_filters(&h, config.b, config.m);
    let mut p: Vec<f64> = budget.iter().map(|s| 0.5 * s).collect();
    let mut f: Vec<f64> = budget
        .iter()
        .zip(&p)
        .map(|(s, pk)| {
            if mode.local {
                ((s - pk).max(0.0) / config.kappa_eff).sqrt().min(config.f_max)
            } else {
                0.0
            }
        })
        .collect();
    let mut rho = vec![0.0; h.len()];
    let mut xi = vec![C64::new(0.0, 0.0); h.len()];
    let mut varpi = xi.clone();
    let mut iota = if mode.passive { alg.iota2_init } else { 0.0 };
    let mut report = SolveReport::default();
    let rel = |a: f64, b: f64| (a - b).abs() <= alg.inner_tol * a.abs().max(b.abs()).max(1e-300);
    let outer_max = if mode.passive { alg.p4_outer_max } else { 1 };

    for outer in 0..outer_max {
        report.outer_iters = outer + 1;
        let res0 = penalty_residual(&profile.v, &profile.theta, model);
        let mut prev = penalized_objective(&p, &u, &h, &f, config, iota, if mode.passive { res0 } else { 0.0 });
        let mut inner_count = 0;
        let mut beta = 1.0;
        for it in 0..alg.p4_inner_max {
            inner_count = it + 1;
            let residual = |v: &CVec, theta: &[f64]| if mode.passive { penalty_residual(v, theta, model) } else { 0.0 };
            // rho, then detector auxiliaries
            let (gamma, _) = sinr_from_channels(&p, &u, &h, config);
            rho = update_rho(&gamma);
            let mu = mu_weights(&rho, config);
            let objective = |p: &[f64], u: &[CVec], h: &[CVec], f: &[f64], r: f64| {
                ldr_objective(p, u, h, f, &rho, config, iota, r)
            };
            let mut g_now = objective(&p, &u, &h, &f, residual(&profile.v, &profile.theta));
            let v_last = profile.v.clone();
            let stalled = |new: f64, old: f64| new - old <= alg.inner_tol * old.abs().max(1e-300);
            let passes = alg.sca_max_passes.max(1);

            // detectors: xi, the per-user QCQPs, then the MMSE refinement
            for _ in 0..1 {
                xi = update_xi(&u, &p, &h, &mu, config.sigma2);
                let u_new = solve_mud(&xi, &p, &h, &mu, config)?;
                let g_u = objective(&p, &u_new, &h, &f, residual(&profile.v, &profile.theta));
                if g_u < g_now {
                    break;
                }
                u = u_new;
                let done = stalled(g_u, g_now);
                g_now = g_u;
                if done {
                    break;
                }
            }

            if let Some(u_new) = mmse_filters(&p, &h, config) {
                let g_u = objective(&p, &u_new, &h, &f, residual(&profile.v, &profile.theta));
                if g_u > g_now {
                    u = u_new;
                    g_now = g_u;
                }
            }

            // reflection: alternate varpi, the QP and the phase fit
            if mode.passive {
                for _ in 0..passes {
                    let g_pass = g_now;
                    varpi = update_varpi(&u, &p, &h, &mu, config.sigma2);
                    let a = anchor(&profile.theta, model);
                    let v_new = solve_passive(&varpi, &u, &p, channels, &mu, iota, &a)?;
                    let h_new = effective_channels(channels, &v_new)?;
                    let g_v = objective(&p, &u, &h_new, &f, penalty_residual(&v_new, &profile.theta, model));
                    if g_v >= g_now {
                        profile.v = v_new;
                        h = h_new;
                        g_now = g_v;
                        if let Some(u_new) = mmse_filters(&p, &h, config) {
                            let g_u = objective(&p, &u_new, &h, &f, penalty_residual(&profile.v, &profile.theta, model));
                            if g_u > g_now {
                                u = u_new;
                                g_now = g_u;
                            }
                        }
                    }
                    let (theta, _) = project_profile_from(&profile.v, &profile.theta, model, alg.trust_delta);
                    profile.theta = theta;
                    let g_t = objective(&p, &u, &h, &f, residual(&profile.v, &profile.theta));
                    g_now = g_now.max(g_t);
                    let done = stalled(g_now, g_pass);
                    if done {
                        break;
                    }
                }
            }

            // extrapolate the reflection along the last move
            if mode.passive {
                let step = &profile.v - &v_last;
                while step.norm() > 0.0 && beta >= 1.0 {
                    let mut v_new = &profile.v + &step * C64::new(beta, 0.0);
                    clip_disk(&mut v_new);
                    let h_new = effective_channels(channels, &v_new)?;
                    let (theta, _) = project_profile_from(&v_new, &profile.theta, model, alg.trust_delta);
                    let u_new = mmse_filters(&p, &h_new, config).unwrap_or_else(|| u.clone());
                    let g_e = objective(&p, &u_new, &h_new, &f, penalty_residual(&v_new, &theta, model));
                    if g_e > g_now {
                        profile.v = v_new;
                        profile.theta = theta;
                        h = h_new;
                        u = u_new;
                        g_now = g_e;
                        beta = (beta * 2.0).min(64.0);
                        break;
                    }
                    beta *= 0.5;
                }
                beta = beta.max(1.0);
            }

            // powers and frequencies
            for _ in 0..passes {
                xi = update_xi(&u, &p, &h, &mu, config.sigma2);
                let (p_new, f_new) = solve_power_freq(&xi, &u, &h, &mu, e_wd, t1, config, mode.local)?;
                let g_p = objective(&p_new, &u, &h, &f_new, residual(&profile.v, &profile.theta));
                if g_p < g_now {
                    break;
                }
                p = p_new;
                f = f_new;
                let done = stalled(g_p, g_now);
                g_now = g_p;
                if done {
                    break;
                }
            }

            let res = residual(&profile.v, &profile.theta);
            let j = penalized_objective(&p, &u, &h, &f, config, iota, res);
            report.trace.push(TraceEntry {
                outer,
                inner: it,
                objective: j,
                residual: res,
                penalty: iota,
            });
            let done = rel(j, prev);
            prev = j;
            if done {
                break;
            }
        }
        report.inner_per_outer.push(inner_count);
        let res = if mode.passive { penalty_residual(&profile.v, &profile.theta, model) } else { 0.0 };
        report.final_residual = res;
        if res <= alg.penalty_tol {
            report.converged = true;
            break;
        }
        iota *= alg.penalty_growth;
    }

    if mode.passive {
        profile.make_consistent(model);
    }
    Ok((
        ComputeSetting {
            u,
            p,
            f,
            profile_i: profile,
            rho,
            xi,
            varpi,
            t1,
        },
        report,
    ))
}

/// Offloading design after a complete energy-transfer decision.
pub fn solve_p4(
    channels: &ChannelSet,
    config: &SystemConfig,
    wet: &WetSetting,
    seed: u64,
) -> Result<(ComputeSetting, SolveReport)> {
    let t1 = config.t - wet.tau1 - wet.tau2;
    let (_, e_wd) = harvested_energy(wet, channels, config)?;
    optimize_offloading(channels, config, &e_wd, t1, seed, OffloadMode::default())
}
