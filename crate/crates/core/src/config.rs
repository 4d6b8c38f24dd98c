//! System and algorithm parameters.
//!
//! Radio and computing defaults follow the harvest-then-compute setup at desk
//! scale (two HAPs, two IRSs, three WDs); [`SystemConfig::table2`] restores the
//! full-size network. All values are SI units.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Amplitude-phase coupling of a practical reflecting element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseModel {
    /// Minimum reflection amplitude, in (0, 1]. `1.0` is the ideal model.
    pub beta_min: f64,
    /// Horizontal offset of the amplitude dip, radians.
    pub phi: f64,
    /// Steepness of the amplitude curve.
    pub alpha: f64,
}

impl PhaseModel {
    pub const IDEAL: PhaseModel = PhaseModel {
        beta_min: 1.0,
        phi: 0.0,
        alpha: 1.0,
    };

    pub fn practical(beta_min: f64) -> Self {
        PhaseModel {
            beta_min,
            ..PhaseModel::default()
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.beta_min >= 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min > 0.0 && self.beta_min <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta_min must lie in (0, 1], got {}",
                self.beta_min
            )));
        }
        if !(self.alpha > 0.0) || !self.phi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "phase model needs alpha > 0 and finite phi, got alpha={} phi={}",
                self.alpha, self.phi
            )));
        }
        Ok(())
    }
}

impl Default for PhaseModel {
    fn default() -> Self {
        PhaseModel {
            beta_min: 0.2,
            phi: 0.43 * PI,
            alpha: 1.6,
        }
    }
}

/// Loop controls shared by the WET and offloading optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub iota1_init: f64,
    pub iota2_init: f64,
    /// Multiplicative penalty growth per outer round, > 1.
    pub penalty_growth: f64,
    /// Relative change of the penalized objective that ends an inner loop.
    pub inner_tol: f64,
    /// Consistency residual that ends an outer loop.
    pub penalty_tol: f64,
    pub p3_inner_max: usize,
    pub p3_outer_max: usize,
    pub p4_inner_max: usize,
    pub p4_outer_max: usize,
    pub sca_max_passes: usize,
    pub dc_max_iter: usize,
    /// Rank-one target: tr(Q) - lambda_max(Q) <= rank_tol * tr(Q).
    pub rank_tol: f64,
    pub tau2_grid: usize,
    pub bisection_tol: f64,
    /// Half-width of the phase trust region, radians.
    pub trust_delta: f64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            iota1_init: 1e-4,
            iota2_init: 1e-3,
            penalty_growth: 5.0,
            inner_tol: 1e-6,
            penalty_tol: 1e-6,
            p3_inner_max: 50,
            p3_outer_max: 30,
            p4_inner_max: 60,
            p4_outer_max: 70,
            sca_max_passes: 20,
            dc_max_iter: 20,
            rank_tol: 1e-6,
            tau2_grid: 20,
            bisection_tol: 1e-4,
            trust_delta: PI / 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of WDs.
    pub k: usize,
    /// Number of HAPs.
    pub b: usize,
    /// Antennas per HAP.
    pub m: usize,
    /// Number of IRSs.
    pub i: usize,
    /// Reflecting elements per IRS.
    pub n: usize,
    pub p_max: f64,
    pub t: f64,
    pub omega: f64,
    pub sigma2: f64,
    pub kappa_eff: f64,
    pub eta: f64,
    pub mu: f64,
    pub c_cycles_per_bit: f64,
    pub f_max: f64,
    pub p_c: f64,
    pub phase: PhaseModel,
    pub kappa_hu: f64,
    pub kappa_hi: f64,
    pub kappa_iu: f64,
    pub c0: f64,
    pub d0: f64,
    pub rician_hu: f64,
    pub rician_hi: f64,
    pub rician_iu: f64,
    /// x coordinate of the WD cluster center, meters.
    pub cluster_x: f64,
    pub cluster_radius: f64,
    /// CSI error ratio used when designing on estimated channels.
    pub csi_delta: f64,
    pub alg: AlgorithmConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            k: 3,
            b: 2,
            m: 2,
            i: 2,
            n: 8,
            p_max: 100.0,
            t: 1.0,
            omega: 1e6,
            sigma2: 1e-10,
            kappa_eff: 1e-28,
            eta: 0.8,
            mu: 1e-3,
            c_cycles_per_bit: 500.0,
            f_max: 1e8,
            p_c: 1e-6,
            phase: PhaseModel::default(),
            kappa_hu: 3.5,
            kappa_hi: 2.2,
            kappa_iu: 2.8,
            c0: 1e-3,
            d0: 1.0,
            rician_hu: 0.0,
            rician_hi: f64::INFINITY,
            rician_iu: f64::INFINITY,
            cluster_x: 6.0,
            cluster_radius: 1.0,
            csi_delta: 0.0,
            alg: AlgorithmConfig::default(),
        }
    }
}

impl SystemConfig {
    /// Full-size network: five HAPs, four WDs, ten elements per IRS.
    pub fn table2() -> Self {
        SystemConfig {
            k: 4,
            b: 5,
            m: 2,
            i: 2,
            n: 10,
            ..SystemConfig::default()
        }
    }

    /// Stacked HAP antenna count `B * M`.
    pub fn bm(&self) -> usize {
        self.b * self.m
    }

    /// Stacked reflecting element count `I * N`.
    pub fn irs_elements(&self) -> usize {
        self.i * self.n
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.k),
            ("b", self.b),
            ("m", self.m),
            ("i", self.i),
            ("n", self.n),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("p_max_w", self.p_max),
            ("t_s", self.t),
            ("omega_hz", self.omega),
            ("sigma2_w", self.sigma2),
            ("eta", self.eta),
            ("mu_w", self.mu),
            ("c_cycles_per_bit", self.c_cycles_per_bit),
            ("f_max", self.f_max),
            ("c0", self.c0),
            ("d0_m", self.d0),
            ("cluster_radius_m", self.cluster_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.eta > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        for (name, v) in [
            ("kappa_eff", self.kappa_eff),
            ("p_c_w", self.p_c),
            ("csi_delta", self.csi_delta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("rician_hu", self.rician_hu),
            ("rician_hi", self.rician_hi),
            ("rician_iu", self.rician_iu),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0 (inf allowed), got {v}"
                )));
            }
        }
        self.phase.validate()?;
        let a = &self.alg;
        if !(a.penalty_growth > 1.0) {
            return Err(Error::InvalidConfig(
                "penalty growth must exceed 1".into(),
            ));
        }
        if !(a.trust_delta > 0.0) {
            return Err(Error::InvalidConfig("trust_delta must be > 0".into()));
        }
        if !(a.iota1_init > 0.0 && a.iota2_init > 0.0) {
            return Err(Error::InvalidConfig("initial penalties must be > 0".into()));
        }
        if a.tau2_grid == 0 || a.p3_inner_max == 0 || a.p4_inner_max == 0 {
            return Err(Error::InvalidConfig(
                "grid size and iteration caps must be >= 1".into(),
            ));
        }
        if !(a.bisection_tol > 0.0 && a.bisection_tol < self.t) {
            return Err(Error::InvalidConfig(
                "bisection_tol must lie in (0, T)".into(),
            ));
        }
        Ok(())
    }

    /// Set one parameter by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num(v: &str) -> std::result::Result<f64, String> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("expected a number, got {v:?}"))
        }
        fn count(v: &str) -> std::result::Result<usize, String> {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("expected a positive integer, got {v:?}"))
        }
        let a = &mut self.alg;
        match key {
            "k" => self.k = count(value)?,
            "b" => self.b = count(value)?,
            "m" => self.m = count(value)?,
            "i" => self.i = count(value)?,
            "n" => self.n = count(value)?,
            "p_max_w" => self.p_max = num(value)?,
            "t_s" => self.t = num(value)?,
            "omega_hz" => self.omega = num(value)?,
            "sigma2_w" => self.sigma2 = num(value)?,
            "kappa_eff" => self.kappa_eff = num(value)?,
            "eta" => self.eta = num(value)?,
            "mu_w" => self.mu = num(value)?,
            "c_cycles_per_bit" => self.c_cycles_per_bit = num(value)?,
            "f_max" => self.f_max = num(value)?,
            "p_c_w" => self.p_c = num(value)?,
            "beta_min" => self.phase.beta_min = num(value)?,
            "phi_rad" => self.phase.phi = num(value)?,
            "alpha" => self.phase.alpha = num(value)?,
            "kappa_hu" => self.kappa_hu = num(value)?,
            "kappa_hi" => self.kappa_hi = num(value)?,
            "kappa_iu" => self.kappa_iu = num(value)?,
            "c0" => self.c0 = num(value)?,
            "d0_m" => self.d0 = num(value)?,
            "rician_hu" => self.rician_hu = num(value)?,
            "rician_hi" => self.rician_hi = num(value)?,
            "rician_iu" => self.rician_iu = num(value)?,
            "cluster_x_m" => self.cluster_x = num(value)?,
            "cluster_radius_m" => self.cluster_radius = num(value)?,
            "csi_delta" => self.csi_delta = num(value)?,
            "iota1_init" => a.iota1_init = num(value)?,
            "iota2_init" => a.iota2_init = num(value)?,
            "penalty_growth" => a.penalty_growth = num(value)?,
            "inner_tol" => a.inner_tol = num(value)?,
            "penalty_tol" => a.penalty_tol = num(value)?,
            "p3_inner_max" => a.p3_inner_max = count(value)?,
            "p3_outer_max" => a.p3_outer_max = count(value)?,
            "p4_inner_max" => a.p4_inner_max = count(value)?,
            "p4_outer_max" => a.p4_outer_max = count(value)?,
            "sca_max_passes" => a.sca_max_passes = count(value)?,
            "dc_max_iter" => a.dc_max_iter = count(value)?,
            "rank_tol" => a.rank_tol = num(value)?,
            "tau2_grid" => a.tau2_grid = count(value)?,
            "bisection_tol" => a.bisection_tol = num(value)?,
            "trust_delta" => a.trust_delta = num(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Every recognized config key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let a = &self.alg;
        vec![
            ("k", self.k.to_string()),
            ("b", self.b.to_string()),
            ("m", self.m.to_string()),
            ("i", self.i.to_string()),
            ("n", self.n.to_string()),
            ("p_max_w", self.p_max.to_string()),
            ("t_s", self.t.to_string()),
            ("omega_hz", self.omega.to_string()),
            ("sigma2_w", self.sigma2.to_string()),
            ("kappa_eff", self.kappa_eff.to_string()),
            ("eta", self.eta.to_string()),
            ("mu_w", self.mu.to_string()),
            ("c_cycles_per_bit", self.c_cycles_per_bit.to_string()),
            ("f_max", self.f_max.to_string()),
            ("p_c_w", self.p_c.to_string()),
            ("beta_min", self.phase.beta_min.to_string()),
            ("phi_rad", self.phase.phi.to_string()),
            ("alpha", self.phase.alpha.to_string()),
            ("kappa_hu", self.kappa_hu.to_string()),
            ("kappa_hi", self.kappa_hi.to_string()),
            ("kappa_iu", self.kappa_iu.to_string()),
            ("c0", self.c0.to_string()),
            ("d0_m", self.d0.to_string()),
            ("rician_hu", self.rician_hu.to_string()),
            ("rician_hi", self.rician_hi.to_string()),
            ("rician_iu", self.rician_iu.to_string()),
            ("cluster_x_m", self.cluster_x.to_string()),
            ("cluster_radius_m", self.cluster_radius.to_string()),
            ("csi_delta", self.csi_delta.to_string()),
            ("iota1_init", a.iota1_init.to_string()),
            ("iota2_init", a.iota2_init.to_string()),
            ("penalty_growth", a.penalty_growth.to_string()),
            ("inner_tol", a.inner_tol.to_string()),
            ("penalty_tol", a.penalty_tol.to_string()),
            ("p3_inner_max", a.p3_inner_max.to_string()),
            ("p3_outer_max", a.p3_outer_max.to_string()),
            ("p4_inner_max", a.p4_inner_max.to_string()),
            ("p4_outer_max", a.p4_outer_max.to_string()),
            ("sca_max_passes", a.sca_max_passes.to_string()),
            ("dc_max_iter", a.dc_max_iter.to_string()),
            ("rank_tol", a.rank_tol.to_string()),
            ("tau2_grid", a.tau2_grid.to_string()),
            ("bisection_tol", a.bisection_tol.to_string()),
            ("trust_delta", a.trust_delta.to_string()),
        ]
    }
}
