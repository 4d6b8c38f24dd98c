use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// Hermitian `dim x dim` matrix variable constrained to be PSD.
///
/// Stored as `dim^2` reals: the diagonal, then `(re, im)` of each strictly
/// upper entry in row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatVar {
    pub(crate) offset: usize,
    pub(crate) dim: usize,
}

/// Complex vector variable, stored as all real parts then all imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VecVar {
    pub(crate) offset: usize,
    pub(crate) len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealVar {
    pub(crate) offset: usize,
    pub(crate) len: usize,
}

impl MatVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn diag(&self, i: usize) -> usize {
        self.offset + i
    }

    /// Index of `Re X_ij` (and `Im X_ij` right after it) for `i < j`.
    pub(crate) fn upper(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        let d = self.dim;
        // pairs before row i: sum_{r<i} (d - r - 1)
        let before = i * (2 * d - i - 1) / 2;
        self.offset + d + 2 * (before + (j - i - 1))
    }
}

impl VecVar {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub(crate) fn re(&self, n: usize) -> usize {
        self.offset + n
    }

    pub(crate) fn im(&self, n: usize) -> usize {
        self.offset + self.len + n
    }
}

impl RealVar {
    pub fn at(&self, n: usize) -> usize {
        assert!(n < self.len);
        self.offset + n
    }
}

/// Sparse affine expression in the real parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub(crate) terms: Vec<(usize, f64)>,
    pub(crate) constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn add_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_real(mut self, var: RealVar, n: usize, coef: f64) -> Self {
        self.terms.push((var.at(n), coef));
        self
    }

    /// `+ scale * Re tr(C X)`.
    pub fn add_trace(mut self, var: MatVar, c: &CMat, scale: f64) -> Self {
        let d = var.dim;
        assert_eq!(c.shape(), (d, d), "trace coefficient shape");
        for i in 0..d {
            self.terms.push((var.diag(i), scale * c[(i, i)].re));
            for j in i + 1..d {
                let k = var.upper(i, j);
                self.terms.push((k, scale * (c[(j, i)].re + c[(i, j)].re)));
                self.terms.push((k + 1, scale * (c[(i, j)].im - c[(j, i)].im)));
            }
        }
        self
    }

    /// `+ scale * Re{b^H v}`.
    pub fn add_re_inner(mut self, var: VecVar, b: &CVec, scale: f64) -> Self {
        assert_eq!(b.len(), var.len, "inner-product length");
        for (n, bn) in b.iter().enumerate() {
            self.terms.push((var.re(n), scale * bn.re));
            self.terms.push((var.im(n), scale * bn.im));
        }
        self
    }

    pub(crate) fn dense(&self, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for &(i, c) in &self.terms {
            out[i] += c;
        }
        out
    }
}

/// `z_I^T P z_I + q^T z_I + c` over an index subset.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct QuadForm {
    pub idx: Vec<usize>,
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub c: f64,
}

impl QuadForm {
    pub fn eval(&self, z: &DVector<f64>) -> f64 {
        let x = DVector::from_iterator(self.idx.len(), self.idx.iter().map(|&i| z[i]));
        (x.transpose() * &self.p * &x)[(0, 0)] + self.q.dot(&x) + self.c
    }

    /// Gradient restricted to `idx`.
    pub fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        let x = DVector::from_iterator(self.idx.len(), self.idx.iter().map(|&i| z[i]));
        &self.p * &x * 2.0 + &self.q
    }
}

/// Real 2n x 2n embedding of `v^H A v` for Hermitian `A`.
fn hermitian_real_embedding(a: &CMat) -> DMatrix<f64> {
    let n = a.nrows();
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = 0.5 * (a[(r, c)] + a[(c, r)].conj());
            p[(r, c)] = z.re;
            p[(n + r, n + c)] = z.re;
            p[(r, n + c)] = -z.im;
            p[(n + r, c)] = z.im;
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
    Feasibility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub(crate) n: usize,
    pub(crate) psd: Vec<MatVar>,
    pub(crate) sense: Sense,
    pub(crate) objective: LinExpr,
    pub(crate) objective_quad: Vec<QuadForm>,
    pub(crate) ineq: Vec<LinExpr>,
    pub(crate) eq: Vec<LinExpr>,
    pub(crate) quad: Vec<QuadForm>,
    pub(crate) start: Option<DVector<f64>>,
}

impl Default for ConicProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProgram {
    pub fn new() -> Self {
        ConicProgram {
            n: 0,
            psd: Vec::new(),
            sense: Sense::Feasibility,
            objective: LinExpr::new(),
            objective_quad: Vec::new(),
            ineq: Vec::new(),
            eq: Vec::new(),
            quad: Vec::new(),
            start: None,
        }
    }

    pub fn num_params(&self) -> usize {
        self.n
    }

    pub fn add_psd(&mut self, dim: usize) -> MatVar {
        let var = MatVar {
            offset: self.n,
            dim,
        };
        self.n += dim * dim;
        self.psd.push(var);
        var
    }

    pub fn add_complex(&mut self, len: usize) -> VecVar {
        let var = VecVar {
            offset: self.n,
            len,
        };
        self.n += 2 * len;
        var
    }

    pub fn add_real(&mut self, len: usize) -> RealVar {
        let var = RealVar {
            offset: self.n,
            len,
        };
        self.n += len;
        var
    }

    pub fn minimize(&mut self, expr: LinExpr) {
        self.sense = Sense::Minimize;
        self.objective = expr;
    }

    pub fn maximize(&mut self, expr: LinExpr) {
        self.sense = Sense::Maximize;
        self.objective = expr;
    }

    /// Adds `scale * v^H A v` to the objective. Must keep the objective convex
    /// (minimize) or concave (maximize).
    pub fn add_objective_hermitian(&mut self, var: VecVar, a: &CMat, scale: f64) {
        assert_eq!(a.shape(), (var.len, var.len));
        let idx = (0..var.len)
            .map(|n| var.re(n))
            .chain((0..var.len).map(|n| var.im(n)))
            .collect();
        self.objective_quad.push(QuadForm {
            idx,
            p: hermitian_real_embedding(a) * scale,
            q: DVector::zeros(2 * var.len),
            c: 0.0,
        });
    }

    /// Adds `scale * sum_n coef_n x_n^2` to the objective.
    pub fn add_objective_squares(&mut self, var: RealVar, coef: &[f64], scale: f64) {
        assert_eq!(coef.len(), var.len);
        self.objective_quad.push(QuadForm {
            idx: (0..var.len).map(|n| var.at(n)).collect(),
            p: DMatrix::from_diagonal(&DVector::from_iterator(
                var.len,
                coef.iter().map(|c| c * scale),
            )),
            q: DVector::zeros(var.len),
            c: 0.0,
        });
    }

    /// `expr <= 0`.
    pub fn add_le(&mut self, expr: LinExpr) {
        self.ineq.push(expr);
    }

    /// `expr == 0`.
    pub fn add_eq(&mut self, expr: LinExpr) {
        self.eq.push(expr);
    }

    /// `sum_{n in elements} |v_n|^2 <= radius^2`.
    pub fn add_ball(&mut self, var: VecVar, elements: &[usize], radius: f64) {
        let idx: Vec<usize> = elements
            .iter()
            .map(|&n| var.re(n))
            .chain(elements.iter().map(|&n| var.im(n)))
            .collect();
        let len = idx.len();
        self.quad.push(QuadForm {
            idx,
            p: DMatrix::identity(len, len),
            q: DVector::zeros(len),
            c: -radius * radius,
        });
    }

    /// `sum_n w_n x_n^2 + expr <= 0` with `w_n >= 0`.
    pub fn add_weighted_squares_le(&mut self, var: RealVar, elements: &[(usize, f64)], expr: LinExpr) {
        let mut idx: Vec<usize> = elements.iter().map(|&(n, _)| var.at(n)).collect();
        let mut diag: Vec<f64> = elements.iter().map(|&(_, w)| w).collect();
        let mut lin = vec![0.0; idx.len()];
        for &(i, c) in &expr.terms {
            if let Some(pos) = idx.iter().position(|&j| j == i) {
                lin[pos] += c;
            } else {
                idx.push(i);
                diag.push(0.0);
                lin.push(c);
            }
        }
        let len = idx.len();
        self.quad.push(QuadForm {
            idx,
            p: DMatrix::from_diagonal(&DVector::from_vec(diag)),
            q: DVector::from_vec(lin),
            c: expr.constant,
        });
        debug_assert_eq!(self.quad.last().unwrap().q.len(), len);
    }

    /// Optional starting point; used when strictly feasible.
    pub fn set_start(&mut self, z: DVector<f64>) {
        assert_eq!(z.len(), self.n);
        self.start = Some(z);
    }

    pub fn start_builder(&self) -> StartBuilder {
        StartBuilder {
            z: DVector::zeros(self.n),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let finite = |e: &LinExpr| e.constant.is_finite() && e.terms.iter().all(|t| t.1.is_finite());
        if !self.ineq.iter().chain(&self.eq).all(finite) || !finite(&self.objective) {
            return Err(Error::Numerical("non-finite constraint data".into()));
        }
        if self
            .quad
            .iter()
            .chain(&self.objective_quad)
            .any(|q| q.p.iter().chain(q.q.iter()).any(|x| !x.is_finite()) || !q.c.is_finite())
        {
            return Err(Error::Numerical("non-finite quadratic data".into()));
        }
        Ok(())
    }
}

/// Helper for assembling a start point from typed values.
pub struct StartBuilder {
    z: DVector<f64>,
}

impl StartBuilder {
    pub fn matrix(mut self, var: MatVar, x: &CMat) -> Self {
        write_hermitian(&mut self.z, var, x);
        self
    }

    pub fn vector(mut self, var: VecVar, x: &CVec) -> Self {
        for (n, c) in x.iter().enumerate() {
            self.z[var.re(n)] = c.re;
            self.z[var.im(n)] = c.im;
        }
        self
    }

    pub fn reals(mut self, var: RealVar, x: &[f64]) -> Self {
        for (n, &v) in x.iter().enumerate() {
            self.z[var.at(n)] = v;
        }
        self
    }

    pub fn build(self) -> DVector<f64> {
        self.z
    }
}

pub(crate) fn write_hermitian(z: &mut DVector<f64>, var: MatVar, x: &CMat) {
    let d = var.dim;
    for i in 0..d {
        z[var.diag(i)] = x[(i, i)].re;
        for j in i + 1..d {
            let k = var.upper(i, j);
            let v = 0.5 * (x[(i, j)] + x[(j, i)].conj());
            z[k] = v.re;
            z[k + 1] = v.im;
        }
    }
}

pub(crate) fn read_hermitian(z: &DVector<f64>, var: MatVar) -> CMat {
    let d = var.dim;
    let mut x = CMat::zeros(d, d);
    for i in 0..d {
        x[(i, i)] = C64::new(z[var.diag(i)], 0.0);
        for j in i + 1..d {
            let k = var.upper(i, j);
            let v = C64::new(z[k], z[k + 1]);
            x[(i, j)] = v;
            x[(j, i)] = v.conj();
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub(crate) z: DVector<f64>,
    /// Objective in the program's own sense (maximized value for `Maximize`).
    pub objective: f64,
    /// Duality-gap bound reached by the barrier method.
    pub gap: f64,
    /// Largest constraint violation at the returned point (<= 0 means interior).
    pub max_violation: f64,
    pub newton_steps: usize,
}

impl ConicSolution {
    pub fn matrix(&self, var: MatVar) -> CMat {
        read_hermitian(&self.z, var)
    }

    pub fn vector(&self, var: VecVar) -> CVec {
        CVec::from_iterator(
            var.len,
            (0..var.len).map(|n| C64::new(self.z[var.re(n)], self.z[var.im(n)])),
        )
    }

    pub fn reals(&self, var: RealVar) -> Vec<f64> {
        (0..var.len).map(|n| self.z[var.at(n)]).collect()
    }

    pub fn params(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Turns a numerical failure into an error; infeasibility stays a status.
    pub fn check(self, what: &str) -> Result<Self> {
        match self.status {
            SolveStatus::NumericalFailure => Err(Error::Numerical(format!(
                "{what}: interior-point method did not converge"
            ))),
            _ => Ok(self),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_layout_round_trip() {
        let mut p = ConicProgram::new();
        let _pad = p.add_real(3);
        let x = p.add_psd(4);
        let mut m = CMat::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = C64::new((i + 2 * j) as f64, (i as f64) - (j as f64));
            }
        }
        let m = crate::linalg::hermitian_part(&m);
        let mut z = DVector::zeros(p.num_params());
        write_hermitian(&mut z, x, &m);
        assert_eq!(read_hermitian(&z, x), m);
        // every parameter index is used exactly once
        let mut seen = vec![0; 16];
        for i in 0..4 {
            seen[x.diag(i) - 3] += 1;
            for j in i + 1..4 {
                seen[x.upper(i, j) - 3] += 1;
                seen[x.upper(i, j) + 1 - 3] += 1;
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn trace_functional_matches_direct() {
        let mut p = ConicProgram::new();
        let x = p.add_psd(3);
        let mut c = CMat::zeros(3, 3);
        let mut m = CMat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                c[(i, j)] = C64::new(0.3 * i as f64 - j as f64, 0.7 * (i * j) as f64 + 0.1);
                m[(i, j)] = C64::new(1.0 + (i * j) as f64, i as f64 - 2.0 * j as f64);
            }
        }
        let m = crate::linalg::hermitian_part(&m);
        let mut z = DVector::zeros(p.num_params());
        write_hermitian(&mut z, x, &m);
        let e = LinExpr::new().add_trace(x, &c, 2.0);
        let got = e.dense(p.num_params()).dot(&z);
        let expect = 2.0 * crate::linalg::trace_product_re(&c, &m);
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn embedding_matches_quadratic_form() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = C64::new(2.0, 0.0);
        a[(1, 1)] = C64::new(1.0, 0.0);
        a[(0, 1)] = C64::new(0.5, -0.25);
        a[(1, 0)] = C64::new(0.5, 0.25);
        let v = CVec::from_vec(vec![C64::new(0.3, -1.0), C64::new(-0.7, 0.2)]);
        let p = hermitian_real_embedding(&a);
        let x = DVector::from_vec(vec![v[0].re, v[1].re, v[0].im, v[1].im]);
        let got = (x.transpose() * p * &x)[(0, 0)];
        assert!((got - crate::linalg::quad_form(&a, &v)).abs() < 1e-12);
    }
}
