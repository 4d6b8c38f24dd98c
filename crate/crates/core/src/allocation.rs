//! Complete time, energy and offloading decision for one block, its
//! objective, and an independent feasibility audit.

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::linalg::{inner, min_eigenvalue, quad_form, trace_product_re, trace_re, CMat, CVec, C64};
use crate::offload::sinr_and_rate;
use crate::phase::{reflect_coeff, PhaseProfile};
use crate::wet::hap_power;

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub tau1: f64,
    pub tau2: f64,
    pub t1: f64,
    pub w: CMat,
    pub q: CMat,
    pub profile_e: PhaseProfile,
    pub profile_i: PhaseProfile,
    pub u: Vec<CVec>,
    pub p: Vec<f64>,
    pub f: Vec<f64>,
    /// Whether the IRSs take part (false for the no-IRS baseline).
    pub irs: bool,
    pub objective_bits: f64,
}

impl Allocation {
    pub fn sum_rate(&self, channels: &ChannelSet, config: &SystemConfig) -> Result<f64> {
        let (_, r) = sinr_and_rate(&self.p, &self.u, &self.profile_i, channels, config)?;
        Ok(r.iter().sum())
    }
}

/// Computed bits `t1 sum R_k + sum f_k t1 / C`.
pub fn objective_bits(alloc: &Allocation, channels: &ChannelSet, config: &SystemConfig) -> Result<f64> {
    let rate = alloc.sum_rate(channels, config)?;
    let local: f64 = alloc.f.iter().map(|f| f * alloc.t1 / config.c_cycles_per_bit).sum();
    Ok(alloc.t1 * rate + local)
}

/// `h_d[b][k] + sum_i G[b][i] diag(v_i) h_r[i][k]`, assembled per link.
fn link_channel(channels: &ChannelSet, v: &CVec, k: usize) -> CVec {
    let n = channels.elements();
    let blocks: Vec<CVec> = (0..channels.num_hap())
        .map(|b| {
            let mut h = channels.h_d[b][k].clone();
            for i in 0..channels.num_irs() {
                let vr = CVec::from_fn(n, |e, _| v[i * n + e] * channels.h_r[i][k][e]);
                h += &channels.g[b][i] * vr;
            }
            h
        })
        .collect();
    let m = channels.antennas();
    CVec::from_fn(blocks.len() * m, |r, _| blocks[r / m][r % m])
}

/// `[G[0][i]; G[1][i]; ...]`, BM x N.
fn irs_block(channels: &ChannelSet, i: usize) -> CMat {
    let (m, n) = (channels.antennas(), channels.elements());
    CMat::from_fn(channels.num_hap() * m, n, |r, c| channels.g[r / m][i][(r % m, c)])
}

/// WD energy harvested in the second sub-slot, joules.
pub fn wd_energy(alloc: &Allocation, channels: &ChannelSet, config: &SystemConfig) -> Vec<f64> {
    (0..channels.num_wd())
        .map(|k| {
            let h = link_channel(channels, &alloc.profile_e.v, k);
            alloc.tau2 * config.eta * quad_form(&alloc.q, &h)
        })
        .collect()
}

/// Every violated constraint, described. Empty means feasible.
///
/// Energy constraints are checked at relative tolerance `tol`.
pub fn audit(alloc: &Allocation, channels: &ChannelSet, config: &SystemConfig, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let abs = 1e-9;
    let t = [alloc.tau1, alloc.tau2, alloc.t1];
    if t.iter().any(|x| !(*x >= 0.0)) {
        out.push(format!("negative time share {t:?}"));
    }
    if t.iter().sum::<f64>() > config.t + abs {
        out.push(format!("time shares sum to {} > T = {}", t.iter().sum::<f64>(), config.t));
    }
    let (nb, m) = (channels.num_hap(), channels.antennas());
    for (name, cov) in [("W", &alloc.w), ("Q", &alloc.q)] {
        let scale = trace_re(cov).abs().max(1e-300);
        if (cov - cov.adjoint()).norm() > 1e-9 * scale {
            out.push(format!("{name} is not Hermitian"));
        }
        if min_eigenvalue(cov) < -1e-9 * scale {
            out.push(format!("{name} is not PSD"));
        }
        for b in 0..nb {
            let pw = hap_power(cov, b, m);
            if pw > config.p_max * (1.0 + tol) {
                out.push(format!("HAP {b} power {pw} W under {name} exceeds {}", config.p_max));
            }
        }
    }
    for (k, u) in alloc.u.iter().enumerate() {
        for b in 0..nb {
            let norm = u.rows(b * m, m).norm();
            if norm > 1.0 + abs {
                out.push(format!("detector block ({b}, {k}) has norm {norm}"));
            }
        }
    }
    for (k, (&p, &f)) in alloc.p.iter().zip(&alloc.f).enumerate() {
        if !(p >= 0.0) {
            out.push(format!("WD {k} power {p} < 0"));
        }
        if !(f >= 0.0 && f <= config.f_max * (1.0 + abs)) {
            out.push(format!("WD {k} frequency {f} outside [0, {}]", config.f_max));
        }
    }
    for (name, prof) in [("energy", &alloc.profile_e), ("offload", &alloc.profile_i)] {
        if prof.v.iter().any(|z| z.norm() > 1.0 + abs) {
            out.push(format!("{name} reflection exceeds unit modulus"));
        }
        if alloc.irs {
            let gap = prof
                .v
                .iter()
                .zip(&prof.theta)
                .map(|(z, &th)| (z - reflect_coeff(th, &config.phase)).norm())
                .fold(0.0, f64::max);
            if gap > 1e-6 {
                out.push(format!("{name} reflection off the amplitude curve by {gap}"));
            }
        } else if prof.v.iter().any(|z| *z != C64::new(0.0, 0.0)) {
            out.push(format!("{name} reflection nonzero without IRS"));
        }
    }
    if alloc.irs {
        let need = config.n as f64 * config.mu;
        for i in 0..channels.num_irs() {
            let g = irs_block(channels, i);
            let gram = &g * g.adjoint();
            let have = alloc.tau1 * (need + config.eta * trace_product_re(&gram, &alloc.w));
            if have < need * config.t * (1.0 - tol) {
                out.push(format!("IRS {i} harvests {have} J < {} J", need * config.t));
            }
        }
    }
    let e = wd_energy(alloc, channels, config);
    for k in 0..alloc.p.len() {
        let used = alloc.t1 * (config.kappa_eff * alloc.f[k].powi(2) + alloc.p[k] + config.p_c);
        if used > e[k] * (1.0 + tol) + 1e-300 {
            out.push(format!("WD {k} spends {used} J > harvested {} J", e[k]));
        }
    }
    out
}

/// Recomputes energies on `channels` under `config`, shrinks powers and
/// frequencies that no longer fit their budgets, and refreshes the objective.
pub fn reevaluate(mut alloc: Allocation, channels: &ChannelSet, config: &SystemConfig) -> Result<Allocation> {
    let e = wd_energy(&alloc, channels, config);
    for k in 0..alloc.p.len() {
        let s = e[k] / alloc.t1 - config.p_c;
        let used = config.kappa_eff * alloc.f[k].powi(2) + alloc.p[k];
        if used > s {
            let lam = s.max(0.0) / used;
            alloc.p[k] *= lam;
            alloc.f[k] *= lam.sqrt();
        }
    }
    alloc.objective_bits = objective_bits(&alloc, channels, config)?;
    Ok(alloc)
}

/// Same allocation with both profiles snapped to `config`'s amplitude curve.
pub fn with_practical_amplitudes(mut alloc: Allocation, config: &SystemConfig) -> Allocation {
    if alloc.irs {
        alloc.profile_e.make_consistent(&config.phase);
        alloc.profile_i.make_consistent(&config.phase);
    }
    alloc
}

/// Detection output SINR recomputed from scratch (used by oracles).
pub fn direct_sinr(alloc: &Allocation, channels: &ChannelSet, config: &SystemConfig) -> Vec<f64> {
    let h: Vec<CVec> = (0..channels.num_wd())
        .map(|k| link_channel(channels, &alloc.profile_i.v, k))
        .collect();
    (0..h.len())
        .map(|k| {
            let s = alloc.p[k] * inner(&alloc.u[k], &h[k]).norm_sqr();
            let i: f64 = (0..h.len())
                .filter(|&j| j != k)
                .map(|j| alloc.p[j] * inner(&alloc.u[k], &h[j]).norm_sqr())
                .sum();
            let n = config.sigma2 * alloc.u[k].norm_squared();
            if s == 0.0 {
                0.0
            } else {
                s / (i + n)
            }
        })
        .collect()
}
