use crate::linalg::{leading_eigenpair, trace_re, CMat, CVec, C64};

/// Linearization of `tr(Q) - lambda_max(Q)` around a previous iterate.
///
/// Since `lambda_max(Q) >= u^H Q u` for the unit leading eigenvector `u` of
/// the previous iterate, `tr(Q) - u^H Q u` upper-bounds the rank residual and
/// is affine in `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcMinorant {
    pub u: CVec,
}

impl DcMinorant {
    /// Coefficient matrix `C` of the affine constraint `Re tr(C Q) <= 0`
    /// enforcing `tr(Q) - u^H Q u <= relax * tr(Q)`.
    pub fn constraint(&self, relax: f64) -> CMat {
        let n = self.u.len();
        CMat::identity(n, n) * C64::new(1.0 - relax, 0.0) - &self.u * self.u.adjoint()
    }

    pub fn value(&self, q: &CMat) -> f64 {
        trace_re(q) - crate::linalg::quad_form(q, &self.u)
    }
}

pub fn dc_rank_step(q_prev: &CMat) -> DcMinorant {
    let (_, u) = leading_eigenpair(q_prev);
    DcMinorant { u }
}

/// `(tr Q - lambda_max Q) / tr Q`, zero for the zero matrix.
pub fn rank_residual(q: &CMat) -> f64 {
    let tr = trace_re(q);
    if tr <= 0.0 {
        return 0.0;
    }
    let (l, _) = leading_eigenpair(q);
    ((tr - l) / tr).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOne {
    /// Beamformer with `x x^H` the rank-one part of `Q`.
    pub x: CVec,
    /// Relative rank residual of the input.
    pub residual: f64,
}

impl RankOne {
    pub fn matrix(&self) -> CMat {
        &self.x * self.x.adjoint()
    }
}

/// Leading-eigenvector extraction `x = sqrt(lambda_max) u`.
///
/// `x x^H <= Q` in the PSD order, so every diagonal block (and hence every
/// per-transmitter power) of the result is no larger than in `Q`.
pub fn rank_one_extract(q: &CMat) -> RankOne {
    let residual = rank_residual(q);
    let (l, u) = leading_eigenpair(q);
    RankOne {
        x: u * C64::new(l.max(0.0).sqrt(), 0.0),
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;

    #[test]
    fn rank_one_input_round_trips() {
        let x = CVec::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)]);
        let q = outer(&x);
        let r = rank_one_extract(&q);
        assert!(r.residual < 1e-12);
        assert!((r.matrix() - q).norm() < 1e-10);
    }

    #[test]
    fn diagonal_residual() {
        let mut q = CMat::zeros(3, 3);
        q[(0, 0)] = C64::new(3.0, 0.0);
        q[(1, 1)] = C64::new(1.0, 0.0);
        assert!((rank_residual(&q) - 0.25).abs() < 1e-12);
        let r = rank_one_extract(&q);
        assert!((r.x.norm_squared() - 3.0).abs() < 1e-12);
        assert_eq!(rank_residual(&CMat::zeros(2, 2)), 0.0);
    }

    #[test]
    fn minorant_bounds_residual() {
        let mut q = CMat::zeros(2, 2);
        q[(0, 0)] = C64::new(2.0, 0.0);
        q[(1, 1)] = C64::new(1.0, 0.0);
        q[(0, 1)] = C64::new(0.3, 0.4);
        q[(1, 0)] = C64::new(0.3, -0.4);
        let m = dc_rank_step(&q);
        // at the linearization point the bound is tight
        let (l, _) = leading_eigenpair(&q);
        assert!((m.value(&q) - (trace_re(&q) - l)).abs() < 1e-12);
        let other = CMat::identity(2, 2);
        assert!(m.value(&other) >= trace_re(&other) - 1.0 - 1e-12);
        let c = m.constraint(0.0);
        assert!((crate::linalg::trace_product_re(&c, &q) - m.value(&q)).abs() < 1e-12);
    }
}
