//! Practical reflection model and the per-element phase update.
//!
//! A practical element cannot set amplitude and phase independently: the
//! amplitude follows the phase, `beta(theta) = (1 - beta_min) ((sin(theta -
//! phi) + 1) / 2)^alpha + beta_min`. Alternating optimizers relax the
//! reflection vector `v` and pull it back onto this curve with
//! [`project_profile`].

use std::f64::consts::PI;

use rand::Rng;

use crate::config::PhaseModel;
use crate::linalg::{CVec, C64};

/// Which sub-slot a reflection profile is used in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// WD charging (second energy sub-slot).
    Energy,
    /// Uplink offloading.
    Offload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub theta: Vec<f64>,
    pub v: CVec,
    pub slot: Slot,
}

impl PhaseProfile {
    /// Profile whose reflection vector sits exactly on the amplitude curve.
    pub fn consistent(theta: Vec<f64>, model: &PhaseModel, slot: Slot) -> Self {
        let v = anchor(&theta, model);
        PhaseProfile { theta, v, slot }
    }

    pub fn random<R: Rng>(len: usize, model: &PhaseModel, slot: Slot, rng: &mut R) -> Self {
        let theta = (0..len).map(|_| rng.random_range(-PI..PI)).collect();
        Self::consistent(theta, model, slot)
    }

    /// All-zero reflection (IRS switched off). Not consistent with any phase.
    pub fn off(len: usize, slot: Slot) -> Self {
        PhaseProfile {
            theta: vec![0.0; len],
            v: CVec::from_element(len, C64::new(0.0, 0.0)),
            slot,
        }
    }

    pub fn residual(&self, model: &PhaseModel) -> f64 {
        penalty_residual(&self.v, &self.theta, model)
    }

    /// Snap `v` onto the amplitude curve at the current phases.
    pub fn make_consistent(&mut self, model: &PhaseModel) {
        self.v = anchor(&self.theta, model);
    }
}

fn wrap(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t.is_nan() {
        0.0
    } else {
        t
    }
}

pub fn amplitude(theta: f64, model: &PhaseModel) -> f64 {
    if model.is_ideal() {
        return 1.0;
    }
    let s = ((wrap(theta) - model.phi).sin() + 1.0) / 2.0;
    (1.0 - model.beta_min) * s.max(0.0).powf(model.alpha) + model.beta_min
}

pub fn reflect_coeff(theta: f64, model: &PhaseModel) -> C64 {
    C64::from_polar(amplitude(theta, model), theta)
}

/// Reflection coefficients on the amplitude curve at the given phases.
pub fn anchor(theta: &[f64], model: &PhaseModel) -> CVec {
    CVec::from_iterator(theta.len(), theta.iter().map(|&t| reflect_coeff(t, model)))
}

/// `2 beta(theta) |v| cos(psi - theta) - beta(theta)^2`; equals
/// `|v|^2 - |v - beta(theta) e^{j theta}|^2`.
pub fn fit_objective(theta: f64, target: C64, model: &PhaseModel) -> f64 {
    let b = amplitude(theta, model);
    2.0 * b * target.norm() * (target.arg() - theta).cos() - b * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegion {
    pub lo: f64,
    pub hi: f64,
    pub branch: Branch,
}

impl TrustRegion {
    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lo - 1e-12 && theta <= self.hi + 1e-12
    }

    /// Far endpoint of the region, away from the target phase.
    fn far(&self, psi: f64) -> f64 {
        if (self.hi - psi).abs() >= (self.lo - psi).abs() {
            self.hi
        } else {
            self.lo
        }
    }
}

/// Branch selection by comparing the mean amplitude over each half-window
/// with the target magnitude. The sign flips with the sign of `psi`.
pub fn trust_region(target: C64, model: &PhaseModel, delta: f64) -> TrustRegion {
    let psi = target.arg();
    let mag = target.norm();
    let sign = if psi >= 0.0 { 1.0 } else { -1.0 };
    let b0 = amplitude(psi, model);
    let up = (b0 + amplitude(psi + delta, model)) / 2.0;
    let down = (b0 + amplitude(psi - delta, model)) / 2.0;
    let branch = if up < mag {
        Branch::Plus
    } else if down > mag {
        Branch::Minus
    } else if (up - mag).abs() <= (down - mag).abs() {
        Branch::Plus
    } else {
        Branch::Minus
    };
    let end = match branch {
        Branch::Plus => psi + sign * delta,
        Branch::Minus => psi - sign * delta,
    };
    TrustRegion {
        lo: psi.min(end),
        hi: psi.max(end),
        branch,
    }
}

/// Three-point quadratic fit inside the trust region. The result always lies
/// in the region.
pub fn trust_region_fit(target: C64, model: &PhaseModel, delta: f64) -> (f64, TrustRegion) {
    let region = trust_region(target, model, delta);
    let psi = target.arg();
    let theta_a = psi;
    let theta_c = region.far(psi);
    let theta_b = 0.5 * (theta_a + theta_c);
    let f1 = fit_objective(theta_a, target, model);
    let f2 = fit_objective(theta_b, target, model);
    let f3 = fit_objective(theta_c, target, model);
    let denom = f1 - 2.0 * f2 + f3;
    let best_sample = || {
        [(theta_a, f1), (theta_b, f2), (theta_c, f3)]
            .into_iter()
            .fold((theta_a, f1), |acc, s| if s.1 > acc.1 { s } else { acc })
            .0
    };
    // A convex parabola's vertex is a minimum, so fall back to the samples.
    let theta = if denom.abs() < 1e-12 || denom > 0.0 {
        best_sample()
    } else {
        let vertex = (theta_a * (f1 - 4.0 * f2 + 3.0 * f3) + theta_c * (3.0 * f1 - 4.0 * f2 + f3))
            / (4.0 * denom);
        let clamped = vertex.clamp(region.lo, region.hi);
        if fit_objective(clamped, target, model) >= f1.max(f2).max(f3) {
            clamped
        } else {
            best_sample()
        }
    };
    (theta, region)
}

const SCAN_POINTS: usize = 64;

/// Global scan plus golden-section polish; catches targets whose optimum lies
/// outside the trust region (small `|v|` relative to the local amplitude).
fn scan_fit(target: C64, model: &PhaseModel) -> f64 {
    let step = 2.0 * PI / SCAN_POINTS as f64;
    let (mut best, mut best_f) = (-PI, f64::NEG_INFINITY);
    for s in 0..SCAN_POINTS {
        let t = -PI + step * s as f64;
        let f = fit_objective(t, target, model);
        if f > best_f {
            best = t;
            best_f = f;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - step, best + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = fit_objective(c, target, model);
    let mut fd = fit_objective(d, target, model);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = fit_objective(c, target, model);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = fit_objective(d, target, model);
        }
    }
    let polished = 0.5 * (a + b);
    if fit_objective(polished, target, model) >= best_f {
        polished
    } else {
        best
    }
}

/// Phase that best places `beta(theta) e^{j theta}` on the target.
pub fn fit_theta(target: C64, model: &PhaseModel, delta: f64) -> f64 {
    if model.is_ideal() {
        return if target.norm() > 0.0 { target.arg() } else { 0.0 };
    }
    let (local, _) = trust_region_fit(target, model, delta);
    let global = scan_fit(target, model);
    let theta = if fit_objective(global, target, model) > fit_objective(local, target, model) {
        global
    } else {
        local
    };
    wrap(theta)
}

/// Elementwise phase fit; returns the phases and their penalty anchor.
pub fn project_profile(v: &CVec, model: &PhaseModel, delta: f64) -> (Vec<f64>, CVec) {
    let theta: Vec<f64> = v.iter().map(|&t| fit_theta(t, model, delta)).collect();
    let a = anchor(&theta, model);
    (theta, a)
}

/// Like [`project_profile`] but keeps the previous phase of any element whose
/// fit would not reduce its residual.
pub fn project_profile_from(
    v: &CVec,
    previous: &[f64],
    model: &PhaseModel,
    delta: f64,
) -> (Vec<f64>, CVec) {
    let theta: Vec<f64> = v
        .iter()
        .zip(previous)
        .map(|(&t, &prev)| {
            let fit = fit_theta(t, model, delta);
            if fit_objective(fit, t, model) >= fit_objective(prev, t, model) {
                fit
            } else {
                prev
            }
        })
        .collect();
    let a = anchor(&theta, model);
    (theta, a)
}

/// `sum_n |v_n - beta(theta_n) e^{j theta_n}|^2`.
pub fn penalty_residual(v: &CVec, theta: &[f64], model: &PhaseModel) -> f64 {
    v.iter()
        .zip(theta)
        .map(|(x, &t)| (x - reflect_coeff(t, model)).norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> PhaseModel {
        PhaseModel::default()
    }

    #[test]
    fn amplitude_extremes() {
        let m = model();
        assert!((amplitude(m.phi - PI / 2.0, &m) - m.beta_min).abs() < 1e-12);
        assert!((amplitude(m.phi + PI / 2.0, &m) - 1.0).abs() < 1e-12);
        let ideal = PhaseModel { beta_min: 1.0, ..m };
        for t in [-3.0, -1.0, 0.0, 0.7, 3.1] {
            assert_eq!(amplitude(t, &ideal), 1.0);
        }
    }

    #[test]
    fn reflect_coeff_examples() {
        let m = model();
        let c = reflect_coeff(m.phi + PI / 2.0, &m);
        assert!((c.norm() - 1.0).abs() < 1e-12);
        assert!((c.arg() - (m.phi + PI / 2.0)).abs() < 1e-12);
        let ideal = PhaseModel::practical(1.0);
        assert_eq!(reflect_coeff(0.0, &ideal), C64::new(1.0, 0.0));
        for t in [-2.0, 0.3, 2.9] {
            assert!((reflect_coeff(t, &m).norm() - amplitude(t, &m)).abs() <= 1e-15);
        }
    }

    proptest! {
        #[test]
        fn amplitude_bounded_and_periodic(t in -20.0f64..20.0, bmin in 0.05f64..1.0, alpha in 0.3f64..4.0) {
            let m = PhaseModel { beta_min: bmin, phi: 0.43 * PI, alpha };
            let b = amplitude(t, &m);
            prop_assert!(b >= bmin - 1e-15 && b <= 1.0 + 1e-15);
            prop_assert!((b - amplitude(t + 2.0 * PI, &m)).abs() < 1e-12);
        }

        #[test]
        fn trust_fit_stays_in_region(mag in 0.0f64..1.0, arg in -PI..PI) {
            let m = model();
            let target = C64::from_polar(mag, arg);
            let (theta, region) = trust_region_fit(target, &m, PI / 8.0);
            prop_assert!(region.contains(theta));
            prop_assert!(region.lo <= region.hi);
            prop_assert!(region.lo >= arg - PI / 8.0 - 1e-12 && region.hi <= arg + PI / 8.0 + 1e-12);
        }

        #[test]
        fn ideal_fit_is_argument(mag in 1e-6f64..1.0, arg in -PI..PI) {
            let ideal = PhaseModel::practical(1.0);
            let target = C64::from_polar(mag, arg);
            let theta = fit_theta(target, &ideal, PI / 8.0);
            prop_assert!((theta - target.arg()).abs() < 1e-9);
        }
    }

    fn grid_best(target: C64, m: &PhaseModel) -> f64 {
        (0..10_000)
            .map(|s| fit_objective(-PI + 2.0 * PI * s as f64 / 10_000.0, target, m))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn fit_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let m = PhaseModel {
                beta_min: rng.random_range(0.05..1.0),
                phi: rng.random_range(-PI..PI),
                alpha: rng.random_range(0.5..3.0),
            };
            let target = C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI));
            let theta = fit_theta(target, &m, PI / 8.0);
            assert!(fit_objective(theta, target, &m) >= grid_best(target, &m) - 1e-3);
        }
    }

    #[test]
    fn zero_target_minimizes_amplitude() {
        let m = model();
        let theta = fit_theta(C64::new(0.0, 0.0), &m, PI / 8.0);
        assert!((amplitude(theta, &m) - m.beta_min).abs() < 1e-6);
    }

    #[test]
    fn consistent_profile_is_fixed_point() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = PhaseProfile::random(16, &m, Slot::Energy, &mut rng);
        let (_, a) = project_profile(&p.v, &m, PI / 8.0);
        let res: f64 = p.v.iter().zip(a.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
        assert!(res <= 1e-6);

        let ideal = PhaseModel::practical(1.0);
        let p = PhaseProfile::random(16, &ideal, Slot::Offload, &mut rng);
        let (_, a) = project_profile(&p.v, &ideal, PI / 8.0);
        assert!((a - &p.v).norm() < 1e-12);
    }

    #[test]
    fn projection_beats_grid_per_element() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = CVec::from_iterator(
            32,
            (0..32).map(|_| C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI))),
        );
        let (theta, a) = project_profile(&v, &m, PI / 8.0);
        for n in 0..32 {
            let res = (v[n] - a[n]).norm_sqr();
            let grid_res = v[n].norm_sqr() - grid_best(v[n], &m);
            assert!(res <= grid_res + 1e-3);
            assert!((a[n] - reflect_coeff(theta[n], &m)).norm() == 0.0);
        }
    }

    #[test]
    fn guarded_projection_monotone() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let prev: Vec<f64> = (0..10).map(|_| rng.random_range(-PI..PI)).collect();
            let v = CVec::from_iterator(
                10,
                (0..10).map(|_| C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI))),
            );
            let (theta, _) = project_profile_from(&v, &prev, &m, PI / 8.0);
            assert!(penalty_residual(&v, &theta, &m) <= penalty_residual(&v, &prev, &m) + 1e-15);
        }
    }

    #[test]
    fn residual_examples() {
        let m = model();
        let theta = vec![0.1, -1.2, 2.5];
        let p = PhaseProfile::consistent(theta.clone(), &m, Slot::Energy);
        assert_eq!(p.residual(&m), 0.0);
        let zero = CVec::from_element(3, C64::new(0.0, 0.0));
        let expect: f64 = theta.iter().map(|&t| amplitude(t, &m).powi(2)).sum();
        assert!((penalty_residual(&zero, &theta, &m) - expect).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = CVec::from_iterator(
            8,
            (0..8).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
        );
        let th: Vec<f64> = (0..8).map(|_| rng.random_range(-PI..PI)).collect();
        let mut oracle = 0.0;
        for n in 0..8 {
            let b = amplitude(th[n], &m);
            let dr = v[n].re - b * th[n].cos();
            let di = v[n].im - b * th[n].sin();
            oracle += dr * dr + di * di;
        }
        assert!((penalty_residual(&v, &th, &m) - oracle).abs() <= 1e-12);
    }
}
