//! Downlink energy transfer: IRS charging (`tau1`, `W`) and WD charging
//! (`Q`, `v^E`, `theta^E`).

use crate::channel::{effective_channels, ChannelSet};
use crate::config::SystemConfig;
use crate::convex::{
    dc_rank_step, rank_one_extract, rank_residual, solve_conic, ConicProgram, LinExpr, MatVar,
    SolveStatus, SolverSettings,
};
use crate::error::{Error, Result};
use crate::linalg::{inner, CMat, CVec, C64};
use crate::phase::{penalty_residual, project_profile_from, PhaseProfile, Slot};
use crate::report::{SolveReport, TraceEntry};
use crate::rng::{substream, Stream};

/// Result of the IRS charging stage.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsCharging {
    pub tau1: f64,
    pub w: CMat,
    /// Feasibility probes issued by the bisection.
    pub probes: usize,
}

/// Complete downlink energy-transfer decision.
#[derive(Debug, Clone, PartialEq)]
pub struct WetSetting {
    pub tau1: f64,
    pub w: CMat,
    pub tau2: f64,
    pub q: CMat,
    pub profile_e: PhaseProfile,
    /// `tr(Q H_k)` at the final profile, watts.
    pub zeta: Vec<f64>,
}

/// The `tau2`-independent part of the WD charging design.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingDesign {
    pub q: CMat,
    pub x: CVec,
    pub profile_e: PhaseProfile,
    pub zeta: Vec<f64>,
    pub report: SolveReport,
}

impl ChargingDesign {
    pub fn into_setting(self, p1: &IrsCharging, tau2: f64) -> Result<WetSetting> {
        if !(tau2 > 0.0) {
            return Err(Error::Domain(format!("tau2 must be positive, got {tau2}")));
        }
        Ok(WetSetting {
            tau1: p1.tau1,
            w: p1.w.clone(),
            tau2,
            q: self.q,
            profile_e: self.profile_e,
            zeta: self.zeta,
        })
    }
}

/// Per-HAP block selector `D_b = C_b (x) I_M`.
pub fn hap_selector(b: usize, num_hap: usize, m: usize) -> CMat {
    let mut d = CMat::zeros(num_hap * m, num_hap * m);
    for r in 0..m {
        d[(b * m + r, b * m + r)] = C64::new(1.0, 0.0);
    }
    d
}

/// Transmit power of HAP `b` under covariance `q`.
pub fn hap_power(q: &CMat, b: usize, m: usize) -> f64 {
    (0..m).map(|r| q[(b * m + r, b * m + r)].re).sum()
}

fn add_power_caps(prog: &mut ConicProgram, var: MatVar, channels: &ChannelSet, cap: f64) {
    let (nb, m) = (channels.num_hap(), channels.antennas());
    for b in 0..nb {
        prog.add_le(LinExpr::new().add_trace(var, &hap_selector(b, nb, m), 1.0).add_constant(-cap));
    }
}

/// Shortest IRS charging time supporting covariance `w`.
pub fn optimal_tau1(w: &CMat, channels: &ChannelSet, config: &SystemConfig) -> f64 {
    let need = config.n as f64 * config.mu;
    channels
        .gram
        .iter()
        .map(|g| {
            let p = config.eta * crate::linalg::trace_product_re(g, w).max(0.0);
            need * config.t / (need + p)
        })
        .fold(0.0, f64::max)
}

/// Feasibility of the IRS charging constraints at a given `tau1`.
fn p1_probe(channels: &ChannelSet, config: &SystemConfig, tau1: f64) -> Result<Option<CMat>> {
    let need = config.n as f64 * config.mu;
    let scale = config.p_max;
    let mut prog = ConicProgram::new();
    let w = prog.add_psd(channels.bm());
    add_power_caps(&mut prog, w, channels, 1.0);
    for g in &channels.gram {
        // N mu T - tau1 (N mu + eta tr(G' W)) <= 0 with W = P_max W'
        prog.add_le(
            LinExpr::new()
                .add_trace(w, g, -tau1 * config.eta * scale)
                .add_constant(need * (config.t - tau1)),
        );
    }
    let sol = solve_conic(&prog, &SolverSettings::default())?.check("IRS charging probe")?;
    Ok(match sol.status {
        SolveStatus::Optimal => Some(sol.matrix(w) * C64::new(scale, 0.0)),
        _ => None,
    })
}

/// Bisection over `tau1` with an SDP feasibility probe at each step.
pub fn solve_p1(channels: &ChannelSet, config: &SystemConfig) -> Result<IrsCharging> {
    if channels.gram.iter().all(|g| g.norm() == 0.0) {
        return Err(Error::IrsUnreachable);
    }
    let bm = channels.bm();
    let (mut lo, mut hi) = (0.0, config.t);
    let mut best = CMat::zeros(bm, bm);
    let mut probes = 0;
    while hi - lo > config.alg.bisection_tol {
        let mid = 0.5 * (lo + hi);
        probes += 1;
        match p1_probe(channels, config, mid)? {
            Some(w) => {
                hi = optimal_tau1(&w, channels, config).min(mid);
                best = w;
            }
            None => lo = mid,
        }
    }
    if probes > 0 && best.norm() == 0.0 {
        return Err(Error::IrsUnreachable);
    }
    let tau1 = optimal_tau1(&best, channels, config);
    if tau1 >= config.t {
        return Err(Error::IrsUnreachable);
    }
    Ok(IrsCharging { tau1, w: best, probes })
}

/// `(E_IRS, E_WD)` in joules for a full energy-transfer decision.
pub fn harvested_energy(
    setting: &WetSetting,
    channels: &ChannelSet,
    config: &SystemConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let e_irs = channels
        .gram
        .iter()
        .map(|g| setting.tau1 * config.eta * crate::linalg::trace_product_re(g, &setting.w))
        .collect();
    let h = effective_channels(channels, &setting.profile_e.v)?;
    let e_wd = h
        .iter()
        .map(|hk| setting.tau2 * config.eta * crate::linalg::quad_form(&setting.q, hk))
        .collect();
    Ok((e_irs, e_wd))
}

/// Affine pieces of `h_k(v)^H x = d_k + v^H c_k` for a fixed energy beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCoefficients {
    pub c: Vec<CVec>,
    pub d: Vec<C64>,
}

impl BeamCoefficients {
    pub fn new(channels: &ChannelSet, x: &CVec) -> Self {
        let gx = channels.g_stack.adjoint() * x;
        let c = channels
            .h_r_stack
            .iter()
            .map(|hr| hr.map(|z| z.conj()).component_mul(&gx))
            .collect();
        let d = channels.h_d_stack.iter().map(|hd| inner(hd, x)).collect();
        BeamCoefficients { c, d }
    }

    /// `F_k(v) = |d_k + v^H c_k|^2`, the power WD `k` harvests.
    pub fn harvest(&self, k: usize, v: &CVec) -> f64 {
        (self.d[k] + inner(v, &self.c[k])).norm_sqr()
    }

    /// First-order minorant of `F_k` around `v0`, evaluated at `v`.
    pub fn minorant(&self, k: usize, v: &CVec, v0: &CVec) -> f64 {
        self.harvest(k, v0) + 2.0 * inner(&self.gradient(k, v0), &(v - v0)).re
    }

    /// `C_k v0 + u_k` with `C_k = c_k c_k^H`, `u_k = c_k d_k^*`.
    pub fn gradient(&self, k: usize, v0: &CVec) -> CVec {
        let s = inner(&self.c[k], v0) + self.d[k].conj();
        &self.c[k] * s
    }

    pub fn total(&self, v: &CVec) -> f64 {
        (0..self.c.len()).map(|k| self.harvest(k, v)).sum()
    }
}

/// One SCA pass: maximize `sum_k F_k^low(v; v_prev) - iota ||v - a||^2`
/// subject to `|v_n| <= 1`. Separable, solved elementwise.
pub fn sca_pass(coef: &BeamCoefficients, v_prev: &CVec, anchor: &CVec, iota: f64) -> CVec {
    let mut g = CVec::zeros(v_prev.len());
    for k in 0..coef.c.len() {
        g += coef.gradient(k, v_prev);
    }
    let mut v = anchor + g / C64::new(iota, 0.0);
    for z in v.iter_mut() {
        let r = z.norm();
        if r > 1.0 {
            *z /= r;
        }
    }
    v
}

/// Repeated SCA passes until the penalized harvest stops improving.
/// Returns the reflection vector and the per-WD minorant values `zeta`.
pub fn sca_step_ve(
    coef: &BeamCoefficients,
    v_prev: &CVec,
    anchor: &CVec,
    iota: f64,
    config: &SystemConfig,
) -> (CVec, Vec<f64>) {
    let objective = |v: &CVec| coef.total(v) - iota * (v - anchor).norm_squared();
    let mut v = v_prev.clone();
    let mut j = objective(&v);
    for _ in 0..config.alg.sca_max_passes.max(1) {
        let cand = sca_pass(coef, &v, anchor, iota);
        let jc = objective(&cand);
        if jc < j {
            break;
        }
        let done = (jc - j) <= config.alg.inner_tol * j.abs().max(1e-300);
        v = cand;
        j = jc;
        if done {
            break;
        }
    }
    let zeta = (0..coef.c.len()).map(|k| coef.harvest(k, &v)).collect();
    (v, zeta)
}

/// `max sum_k tr(Q H_k)` under the per-HAP caps, with optional DC rank cut.
fn charging_sdp(
    h_sum: &CMat,
    channels: &ChannelSet,
    config: &SystemConfig,
    cut: Option<(&CVec, f64)>,
) -> Result<CMat> {
    let bm = channels.bm();
    let mut prog = ConicProgram::new();
    let q = prog.add_psd(bm);
    add_power_caps(&mut prog, q, channels, 1.0);
    prog.maximize(LinExpr::new().add_trace(q, h_sum, 1.0));
    if let Some((u, relax)) = cut {
        let minorant = crate::convex::DcMinorant { u: u.clone() };
        prog.add_le(LinExpr::new().add_trace(q, &minorant.constraint(relax), 1.0));
        // strictly feasible start: mostly along u plus a small isotropic part
        let eps = relax * 0.5 / (2.0 * bm as f64);
        let start = crate::linalg::outer(u) * C64::new(0.5, 0.0)
            + CMat::identity(bm, bm) * C64::new(eps, 0.0);
        prog.set_start(prog.start_builder().matrix(q, &start).build());
    }
    let sol = solve_conic(&prog, &SolverSettings::default())?.check("WD charging covariance")?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Numerical("WD charging covariance reported infeasible".into()));
    }
    Ok(crate::linalg::hermitian_part(&sol.matrix(q)) * C64::new(config.p_max, 0.0))
}

/// Rank-one covariance maximizing the total WD harvest for fixed channels:
/// SDP relaxation, DC rank iterations, then leading-eigenvector extraction.
pub fn charging_covariance(
    h: &[CVec],
    channels: &ChannelSet,
    config: &SystemConfig,
) -> Result<(CVec, usize)> {
    let bm = channels.bm();
    let mut h_sum = CMat::zeros(bm, bm);
    for hk in h {
        h_sum += crate::linalg::outer(hk);
    }
    if h_sum.norm() == 0.0 {
        return Ok((CVec::zeros(bm), 0));
    }
    // normalize so the SDP sees O(1) data
    let hs = &h_sum / C64::new(h_sum.norm(), 0.0);
    let mut q = charging_sdp(&hs, channels, config, None)?;
    let mut solves = 1;
    let mut res = rank_residual(&q);
    let mut relax = res / 10.0;
    for _ in 0..config.alg.dc_max_iter {
        if res <= config.alg.rank_tol {
            break;
        }
        let m = dc_rank_step(&q);
        q = charging_sdp(&hs, channels, config, Some((&m.u, relax)))?;
        solves += 1;
        res = rank_residual(&q);
        relax = (relax / 10.0).max(0.9 * config.alg.rank_tol);
    }
    let x = rank_one_extract(&q).x;
    Ok((x, solves))
}

fn harvest_total(h: &[CVec], x: &CVec) -> f64 {
    h.iter().map(|hk| inner(hk, x).norm_sqr()).sum()
}

/// Two-layer penalty BCD for the WD charging slot.
///
/// With `passive = false` the IRS is treated as absent: the reflection vector
/// stays zero and only the covariance is optimized.
pub fn design_charging(
    channels: &ChannelSet,
    config: &SystemConfig,
    seed: u64,
    passive: bool,
) -> Result<ChargingDesign> {
    let model = &config.phase;
    let len = channels.irs_elements();
    let alg = &config.alg;
    let mut report = SolveReport::default();

    if !passive {
        let profile = PhaseProfile::off(len, Slot::Energy);
        let h = effective_channels(channels, &profile.v)?;
        let (x, solves) = charging_covariance(&h, channels, config)?;
        report.conic_solves = solves;
        let zeta = h.iter().map(|hk| inner(hk, &x).norm_sqr()).collect();
        report.converged = true;
        return Ok(ChargingDesign {
            q: crate::linalg::outer(&x),
            x,
            profile_e: profile,
            zeta,
            report,
        });
    }

    let mut rng = substream(seed, Stream::InitWet);
    let mut profile = PhaseProfile::random(len, model, Slot::Energy, &mut rng);
    let mut x: Option<CVec> = None;
    let mut iota = alg.iota1_init;

    for outer in 0..alg.p3_outer_max {
        report.outer_iters = outer + 1;
        let anchor_of = |theta: &[f64]| crate::phase::anchor(theta, model);
        let penalized = |x: &CVec, v: &CVec, theta: &[f64], iota: f64| {
            let h = effective_channels(channels, v).expect("dimensions checked");
            harvest_total(&h, x) - iota * penalty_residual(v, theta, model)
        };
        let mut prev = x.as_ref().map(|x| penalized(x, &profile.v, &profile.theta, iota));
        let mut inner_count = 0;
        for it in 0..alg.p3_inner_max {
            inner_count = it + 1;
            // Q-step
            let h = effective_channels(channels, &profile.v)?;
            let (cand, solves) = charging_covariance(&h, channels, config)?;
            report.conic_solves += solves;
            let keep_old = matches!(&x, Some(old) if harvest_total(&h, old) >= harvest_total(&h, &cand));
            if !keep_old {
                x = Some(cand);
            }
            let xb = x.as_ref().expect("set above");
            // v-step and theta-step, alternated to a joint fixed point
            let coef = BeamCoefficients::new(channels, xb);
            let mut jv = penalized(xb, &profile.v, &profile.theta, iota);
            for _ in 0..alg.sca_max_passes.max(1) {
                let anchor = anchor_of(&profile.theta);
                let (v, _) = sca_step_ve(&coef, &profile.v, &anchor, iota, config);
                profile.v = v;
                let (theta, _) = project_profile_from(&profile.v, &profile.theta, model, alg.trust_delta);
                profile.theta = theta;
                let jn = penalized(xb, &profile.v, &profile.theta, iota);
                let stalled = jn - jv <= alg.inner_tol * jv.abs().max(1e-300);
                jv = jn;
                if stalled {
                    break;
                }
            }

            let j = penalized(xb, &profile.v, &profile.theta, iota);
            report.trace.push(TraceEntry {
                outer,
                inner: it,
                objective: j,
                residual: penalty_residual(&profile.v, &profile.theta, model),
                penalty: iota,
            });
            let done = matches!(prev, Some(p) if (j - p).abs() <= alg.inner_tol * p.abs().max(1e-300));
            prev = Some(j);
            if done {
                break;
            }
        }
        report.inner_per_outer.push(inner_count);
        let res = penalty_residual(&profile.v, &profile.theta, model);
        report.final_residual = res;
        if res <= alg.penalty_tol {
            report.converged = true;
            break;
        }
        iota *= alg.penalty_growth;
    }

    profile.make_consistent(model);
    let x = x.unwrap_or_else(|| CVec::zeros(channels.bm()));
    let h = effective_channels(channels, &profile.v)?;
    let zeta = h.iter().map(|hk| inner(hk, &x).norm_sqr()).collect();
    Ok(ChargingDesign {
        q: crate::linalg::outer(&x),
        x,
        profile_e: profile,
        zeta,
        report,
    })
}

/// WD charging for a given `tau2` after the IRS charging stage.
pub fn solve_p3(
    channels: &ChannelSet,
    config: &SystemConfig,
    p1: &IrsCharging,
    tau2: f64,
    seed: u64,
) -> Result<(WetSetting, SolveReport)> {
    if !(tau2 > 0.0 && tau2 < config.t - p1.tau1) {
        return Err(Error::Domain(format!(
            "tau2 = {tau2} outside (0, {})",
            config.t - p1.tau1
        )));
    }
    let design = design_charging(channels, config, seed, true)?;
    let report = design.report.clone();
    Ok((design.into_setting(p1, tau2)?, report))
}
