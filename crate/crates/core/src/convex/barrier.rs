use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::program::{read_hermitian, ConicProgram, ConicSolution, MatVar, QuadForm, Sense, SolveStatus};
use crate::error::Result;
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Duality-gap target relative to the normalized objective.
    pub gap_tol: f64,
    pub max_newton: usize,
    /// Barrier parameter growth per outer round (phase I caps it at 20).
    pub mu: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            gap_tol: 1e-8,
            max_newton: 800,
            mu: 50.0,
        }
    }
}

/// Affine parameterization `z = z0 + N w` removing the equality constraints.
struct Space {
    z0: DVector<f64>,
    basis: Option<DMatrix<f64>>,
}

impl Space {
    fn dim(&self) -> usize {
        match &self.basis {
            Some(n) => n.ncols(),
            None => self.z0.len(),
        }
    }

    fn lift(&self, w: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(n) => &self.z0 + n * w,
            None => &self.z0 + w,
        }
    }

    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        let d = z - &self.z0;
        match &self.basis {
            Some(n) => n.transpose() * d,
            None => d,
        }
    }
}

struct Compiled {
    nz: usize,
    lin_a: DMatrix<f64>,
    lin_b: DVector<f64>,
    quad: Vec<QuadForm>,
    psd: Vec<MatVar>,
    obj_c: DVector<f64>,
    obj_const: f64,
    obj_quad: Vec<QuadForm>,
    obj_scale: f64,
    feasibility: bool,
    maximize: bool,
}

impl Compiled {
    fn theta(&self, phase1: bool) -> f64 {
        let psd: usize = self.psd.iter().map(|v| v.dim()).sum();
        (self.lin_a.nrows() + self.quad.len() + psd) as f64 + if phase1 { 1.0 } else { 0.0 }
    }

    /// Normalized objective (always minimized).
    fn objective(&self, z: &DVector<f64>) -> f64 {
        let mut f = self.obj_c.dot(z) + self.obj_const;
        for q in &self.obj_quad {
            f += q.eval(z);
        }
        f
    }

    fn max_violation(&self, z: &DVector<f64>) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        if self.lin_a.nrows() > 0 {
            let r = &self.lin_a * z + &self.lin_b;
            worst = worst.max(r.max());
        }
        for q in &self.quad {
            worst = worst.max(q.eval(z));
        }
        for &v in &self.psd {
            let x = read_hermitian(z, v);
            worst = worst.max(-crate::linalg::min_eigenvalue(&x));
        }
        worst
    }
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// `Re tr(C X)` coefficients (real functional) for a Hermitian `C`.
fn functional(c: &CMat, var: MatVar, out: &mut DVector<f64>, scale: f64) {
    let d = var.dim();
    for i in 0..d {
        out[var.diag(i)] += scale * c[(i, i)].re;
        for j in i + 1..d {
            let k = var.upper(i, j);
            out[k] += scale * (c[(j, i)].re + c[(i, j)].re);
            out[k + 1] += scale * (c[(i, j)].im - c[(j, i)].im);
        }
    }
}

/// Barrier Hessian block of `-log det X`: `H_pq = Re tr(Y E_p Y E_q)`.
fn psd_hessian(y: &CMat, var: MatVar, nz: usize, hess: &mut DMatrix<f64>, s_col: Option<usize>) {
    let d = var.dim();
    let mut basis: Vec<(usize, usize, usize, bool)> = Vec::with_capacity(d * d);
    for i in 0..d {
        basis.push((var.diag(i), i, i, false));
        for j in i + 1..d {
            let k = var.upper(i, j);
            basis.push((k, i, j, false));
            basis.push((k + 1, i, j, true));
        }
    }
    let mut row = DVector::zeros(nz + 1);
    let y2 = s_col.map(|_| y * y);
    let cross = y2.as_ref().map(|y2| {
        let mut tmp = DVector::zeros(nz + 1);
        functional(y2, var, &mut tmp, 1.0);
        tmp
    });
    for &(p, i, j, imag) in &basis {
        // M = Y E_p Y
        let m = if i == j {
            let yi = y.column(i);
            &yi * yi.adjoint()
        } else {
            let a = y.column(i) * y.row(j);
            let b = y.column(j) * y.row(i);
            if imag {
                (a - b) * C64::new(0.0, 1.0)
            } else {
                a + b
            }
        };
        row.fill(0.0);
        functional(&m, var, &mut row, 1.0);
        for &(q, ..) in &basis {
            hess[(p, q)] += row[q];
        }
        if let (Some(sc), Some(cross)) = (s_col, &cross) {
            // Re tr(Y E_p Y) = functional(Y^2)[p]
            let v = cross[p];
            hess[(p, sc)] += v;
            hess[(sc, p)] += v;
        }
    }
    if let (Some(sc), Some(y2)) = (s_col, &y2) {
        hess[(sc, sc)] += crate::linalg::trace_re(y2);
    }
}

impl Compiled {
    /// Barrier objective at `(z, s)`. `None` outside the domain.
    fn eval(&self, z: &DVector<f64>, s: f64, t: f64, phase1: bool, derivs: bool) -> Option<Eval> {
        let nz = self.nz;
        let dim = nz + 1;
        let mut value;
        let mut grad = DVector::zeros(if derivs { dim } else { 0 });
        let mut hess = DMatrix::zeros(if derivs { dim } else { 0 }, if derivs { dim } else { 0 });
        let sc = nz;
        if phase1 {
            if s <= -1.0 {
                return None;
            }
            value = t * s - (s + 1.0).ln();
            if derivs {
                grad[sc] += t - 1.0 / (s + 1.0);
                hess[(sc, sc)] += 1.0 / ((s + 1.0) * (s + 1.0));
            }
        } else {
            value = t * self.objective(z);
            if derivs {
                for i in 0..nz {
                    grad[i] += t * self.obj_c[i];
                }
                for q in &self.obj_quad {
                    let g = q.grad(z);
                    for (a, &ia) in q.idx.iter().enumerate() {
                        grad[ia] += t * g[a];
                        for (b, &ib) in q.idx.iter().enumerate() {
                            hess[(ia, ib)] += 2.0 * t * q.p[(a, b)];
                        }
                    }
                }
            }
        }
        let shift = if phase1 { s } else { 0.0 };

        if self.lin_a.nrows() > 0 {
            let r = &self.lin_a * z + &self.lin_b;
            for &ri in r.iter() {
                let g = ri - shift;
                if g >= 0.0 {
                    return None;
                }
                value -= (-g).ln();
            }
            if derivs {
                // grad += A^T (1/(-g)), hess += A^T diag(1/g^2) A
                let inv: DVector<f64> = r.map(|ri| 1.0 / (shift - ri));
                let ga = self.lin_a.transpose() * &inv;
                for i in 0..nz {
                    grad[i] += ga[i];
                }
                let mut scaled = self.lin_a.clone();
                for (mut row, w) in scaled.row_iter_mut().zip(inv.iter()) {
                    row *= *w;
                }
                let h = scaled.transpose() * &scaled;
                hess.view_mut((0, 0), (nz, nz)).add_assign(&h);
                if phase1 {
                    let w2: DVector<f64> = inv.map(|x| x * x);
                    let cross = self.lin_a.transpose() * &w2;
                    grad[sc] -= inv.sum();
                    hess[(sc, sc)] += w2.sum();
                    for i in 0..nz {
                        hess[(i, sc)] -= cross[i];
                        hess[(sc, i)] -= cross[i];
                    }
                }
            }
        }

        for q in &self.quad {
            let g = q.eval(z) - shift;
            if g >= 0.0 {
                return None;
            }
            value -= (-g).ln();
            if derivs {
                let dq = q.grad(z);
                let inv = 1.0 / -g;
                for (a, &ia) in q.idx.iter().enumerate() {
                    grad[ia] += inv * dq[a];
                    for (b, &ib) in q.idx.iter().enumerate() {
                        hess[(ia, ib)] += inv * inv * dq[a] * dq[b] + inv * 2.0 * q.p[(a, b)];
                    }
                    if phase1 {
                        hess[(ia, sc)] -= inv * inv * dq[a];
                        hess[(sc, ia)] -= inv * inv * dq[a];
                    }
                }
                if phase1 {
                    grad[sc] -= inv;
                    hess[(sc, sc)] += inv * inv;
                }
            }
        }

        for &v in &self.psd {
            let mut x = read_hermitian(z, v);
            if shift != 0.0 {
                for i in 0..v.dim() {
                    x[(i, i)] += C64::new(shift, 0.0);
                }
            }
            let chol = Cholesky::new(x)?;
            let l = chol.l_dirty();
            let mut logdet = 0.0;
            for i in 0..v.dim() {
                let lii = l[(i, i)].re;
                if !(lii > 0.0) || !lii.is_finite() {
                    return None;
                }
                logdet += 2.0 * lii.ln();
            }
            value -= logdet;
            if derivs {
                let y = crate::linalg::hermitian_part(&chol.inverse());
                functional(&y, v, &mut grad, -1.0);
                if phase1 {
                    grad[sc] -= crate::linalg::trace_re(&y);
                }
                psd_hessian(&y, v, nz, &mut hess, if phase1 { Some(sc) } else { None });
            }
        }
        if !value.is_finite() {
            return None;
        }
        Some(Eval { value, grad, hess })
    }
}

trait AddAssignView {
    fn add_assign(&mut self, other: &DMatrix<f64>);
}

impl AddAssignView for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(&mut self, other: &DMatrix<f64>) {
        for c in 0..other.ncols() {
            for r in 0..other.nrows() {
                self[(r, c)] += other[(r, c)];
            }
        }
    }
}

fn compile(prog: &ConicProgram) -> std::result::Result<(Compiled, Option<Space>), ()> {
    let nz = prog.n;
    let mut rows = Vec::new();
    let mut consts = Vec::new();
    for e in &prog.ineq {
        let a = e.dense(nz);
        let norm = a.amax();
        if norm == 0.0 {
            if e.constant >= 0.0 {
                return Err(());
            }
            continue;
        }
        rows.push(a / norm);
        consts.push(e.constant / norm);
    }
    let lin_a = if rows.is_empty() {
        DMatrix::zeros(0, nz)
    } else {
        DMatrix::from_fn(rows.len(), nz, |r, c| rows[r][c])
    };
    let quad = prog
        .quad
        .iter()
        .map(|q| {
            let s = q.p.amax().max(q.q.amax()).max(1e-300);
            QuadForm {
                idx: q.idx.clone(),
                p: &q.p / s,
                q: &q.q / s,
                c: q.c / s,
            }
        })
        .collect();

    let sign = if prog.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut obj_c = prog.objective.dense(nz) * sign;
    let mut obj_quad: Vec<QuadForm> = prog
        .objective_quad
        .iter()
        .map(|q| QuadForm {
            idx: q.idx.clone(),
            p: &q.p * sign,
            q: &q.q * sign,
            c: q.c * sign,
        })
        .collect();
    let feasibility = prog.sense == Sense::Feasibility;
    if feasibility {
        obj_c.fill(0.0);
        obj_quad.clear();
    }
    let mut obj_scale = obj_c.amax();
    for q in &obj_quad {
        obj_scale = obj_scale.max(q.p.amax()).max(q.q.amax());
    }
    if obj_scale == 0.0 {
        obj_scale = 1.0;
    }
    let obj_const = if feasibility { 0.0 } else { sign * prog.objective.constant / obj_scale };
    obj_c /= obj_scale;
    for q in &mut obj_quad {
        q.p /= obj_scale;
        q.q /= obj_scale;
        q.c /= obj_scale;
    }

    let space = if prog.eq.is_empty() {
        None
    } else {
        let me = prog.eq.len();
        let a = DMatrix::from_fn(me, nz, |r, c| prog.eq[r].dense(nz)[c]);
        let b = DVector::from_iterator(me, prog.eq.iter().map(|e| -e.constant));
        let ata = a.transpose() * &a;
        let eig = SymmetricEigen::new(ata);
        let top = eig.eigenvalues.amax().max(1e-300);
        let null: Vec<usize> = (0..nz).filter(|&i| eig.eigenvalues[i] <= 1e-12 * top).collect();
        let basis = DMatrix::from_fn(nz, null.len(), |r, c| eig.eigenvectors[(r, null[c])]);
        let svd = a.clone().svd(true, true);
        let z0 = svd.solve(&b, 1e-12 * svd.singular_values.amax().max(1e-300)).map_err(|_| ())?;
        let resid = (&a * &z0 - &b).amax();
        if resid > 1e-9 * (1.0 + b.amax()) {
            return Err(());
        }
        Some(Space { z0, basis: Some(basis) })
    };

    Ok((
        Compiled {
            nz,
            lin_a,
            lin_b: DVector::from_vec(consts),
            quad,
            psd: prog.psd.clone(),
            obj_c,
            obj_const,
            obj_quad,
            obj_scale,
            feasibility,
            maximize: prog.sense == Sense::Maximize,
        },
        space,
    ))
}

const TIGHT: f64 = 1e-9;
const PHASE1_MU: f64 = 20.0;
const LOOSE: f64 = 1e-3;

enum Centering {
    Done,
    Stop,
    Failed,
}

struct Newton<'a> {
    data: &'a Compiled,
    space: &'a Space,
    phase1: bool,
    steps: usize,
    max_steps: usize,
}

impl Newton<'_> {
    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let nw = self.space.dim();
        let w = x.rows(0, nw).into_owned();
        let s = if self.phase1 { x[nw] } else { 0.0 };
        (self.space.lift(&w), s)
    }

    fn eval(&self, x: &DVector<f64>, t: f64, derivs: bool) -> Option<Eval> {
        let (z, s) = self.split(x);
        let e = self.data.eval(&z, s, t, self.phase1, derivs)?;
        if !derivs {
            return Some(e);
        }
        // pull back to (w, s)
        let nz = self.data.nz;
        let nw = self.space.dim();
        let dim = nw + usize::from(self.phase1);
        let (grad, hess) = match &self.space.basis {
            None => {
                if self.phase1 {
                    (e.grad, e.hess)
                } else {
                    (e.grad.rows(0, nz).into_owned(), e.hess.view((0, 0), (nz, nz)).into_owned())
                }
            }
            Some(n) => {
                let mut g = DVector::zeros(dim);
                let mut h = DMatrix::zeros(dim, dim);
                let gz = e.grad.rows(0, nz);
                g.rows_mut(0, nw).copy_from(&(n.transpose() * gz));
                let hz = e.hess.view((0, 0), (nz, nz));
                let hw = n.transpose() * hz * n;
                h.view_mut((0, 0), (nw, nw)).copy_from(&hw);
                if self.phase1 {
                    g[nw] = e.grad[nz];
                    let cross = n.transpose() * e.hess.view((0, nz), (nz, 1));
                    for i in 0..nw {
                        h[(i, nw)] = cross[(i, 0)];
                        h[(nw, i)] = cross[(i, 0)];
                    }
                    h[(nw, nw)] = e.hess[(nz, nz)];
                }
                (g, h)
            }
        };
        Some(Eval { value: e.value, grad, hess })
    }

    /// Centers `x` for barrier weight `t`. `stop` may end phase I early.
    fn center(&mut self, x: &mut DVector<f64>, t: f64, tol: f64, stop: &dyn Fn(&DVector<f64>) -> bool) -> Centering {
        loop {
            if self.steps >= self.max_steps {
                return Centering::Failed;
            }
            self.steps += 1;
            let Some(e) = self.eval(x, t, true) else {
                return Centering::Failed;
            };
            let Some(dx) = newton_direction(&e.hess, &e.grad) else {
                return Centering::Failed;
            };
            let dec = -e.grad.dot(&dx);
            if !dec.is_finite() {
                return Centering::Failed;
            }
            if dec * 0.5 <= tol {
                return Centering::Done;
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let cand = &*x + &dx * step;
                if let Some(ec) = self.eval(&cand, t, false) {
                    if ec.value < e.value && ec.value <= e.value - 0.01 * step * dec {
                        *x = cand;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                // stalled at round-off level
                return if dec < 1e-6_f64.max(1e-12 * e.value.abs()) { Centering::Done } else { Centering::Failed };
            }
            if stop(x) {
                return Centering::Stop;
            }
        }
    }
}

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut hr = h.clone();
        if reg > 0.0 {
            for i in 0..n {
                hr[(i, i)] += reg * scale;
            }
        }
        if let Some(ch) = Cholesky::new(hr) {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
    }
    None
}

fn finish(
    data: &Compiled,
    space: &Space,
    w: &DVector<f64>,
    status: SolveStatus,
    gap: f64,
    steps: usize,
) -> ConicSolution {
    let z = space.lift(w);
    let raw = data.objective(&z) * data.obj_scale;
    let objective = if data.feasibility {
        0.0
    } else if data.maximize {
        -raw
    } else {
        raw
    };
    ConicSolution {
        status,
        max_violation: data.max_violation(&z),
        z,
        objective,
        gap: gap * data.obj_scale,
        newton_steps: steps,
    }
}

fn failed(nz: usize, status: SolveStatus) -> ConicSolution {
    ConicSolution {
        status,
        z: DVector::zeros(nz),
        objective: f64::NAN,
        gap: f64::INFINITY,
        max_violation: f64::INFINITY,
        newton_steps: 0,
    }
}

/// Solves a convex program by phase-I / phase-II barrier iterations.
///
/// Infeasibility is reported through the status; data errors (non-finite
/// coefficients) are returned as `Err`.
pub fn solve_conic(prog: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
    prog.validate()?;
    let nz = prog.n;
    let Ok((data, space)) = compile(prog) else {
        return Ok(failed(nz, SolveStatus::Infeasible));
    };
    let space = space.unwrap_or(Space {
        z0: DVector::zeros(nz),
        basis: None,
    });
    let nw = space.dim();
    let mut w = match &prog.start {
        Some(z) => space.project(z),
        None => DVector::zeros(nw),
    };
    let mut steps = 0;

    let z = space.lift(&w);
    let viol = data.max_violation(&z);
    if !(viol < -1e-10) {
        // phase I: minimize s subject to f_i(z) <= s, X + sI >= 0
        let theta = data.theta(true);
        let s0 = viol.max(-0.5) + 1.0;
        let mut x = DVector::zeros(nw + 1);
        x.rows_mut(0, nw).copy_from(&w);
        x[nw] = s0;
        let mut nt = Newton {
            data: &data,
            space: &space,
            phase1: true,
            steps: 0,
            max_steps: settings.max_newton,
        };
        let mut t = 1.0;
        let feasible = |x: &DVector<f64>| x[nw] < -1e-7;
        loop {
            match nt.center(&mut x, t, TIGHT, &feasible) {
                Centering::Failed => {
                    return Ok(finish(&data, &space, &x.rows(0, nw).into_owned(), SolveStatus::NumericalFailure, f64::INFINITY, nt.steps));
                }
                Centering::Stop => break,
                Centering::Done => {}
            }
            let s = x[nw];
            if s < 0.0 {
                break;
            }
            if s - theta / t > 0.0 || theta / t < 1e-10 {
                return Ok(finish(&data, &space, &x.rows(0, nw).into_owned(), SolveStatus::Infeasible, theta / t, nt.steps));
            }
            t *= settings.mu.min(PHASE1_MU);
        }
        steps += nt.steps;
        w = x.rows(0, nw).into_owned();
    }

    if data.feasibility {
        return Ok(finish(&data, &space, &w, SolveStatus::Optimal, 0.0, steps));
    }

    let theta = data.theta(false);
    let mut nt = Newton {
        data: &data,
        space: &space,
        phase1: false,
        steps,
        max_steps: settings.max_newton + steps,
    };
    let t0 = {
        let e1 = nt.eval(&w, 1.0, true);
        let e0 = nt.eval(&w, 0.0, true);
        match (e1, e0) {
            (Some(e1), Some(e0)) => {
                let g0 = &e1.grad - &e0.grad;
                let n2 = g0.norm_squared();
                if n2 > 0.0 {
                    (-g0.dot(&e0.grad) / n2).clamp(1e-3, 1e6)
                } else {
                    1.0
                }
            }
            _ => 1.0,
        }
    };
    let mut t = t0;
    let never = |_: &DVector<f64>| false;
    loop {
        let f = data.objective(&space.lift(&w));
        let last = theta / t <= settings.gap_tol * (1.0 + f.abs());
        match nt.center(&mut w, t, if last { TIGHT } else { LOOSE }, &never) {
            Centering::Failed => {
                return Ok(finish(&data, &space, &w, SolveStatus::NumericalFailure, theta / t, nt.steps));
            }
            Centering::Done | Centering::Stop => {}
        }
        let f = data.objective(&space.lift(&w));
        if theta / t <= settings.gap_tol * (1.0 + f.abs()) {
            if !last {
                if let Centering::Failed = nt.center(&mut w, t, TIGHT, &never) {
                    return Ok(finish(&data, &space, &w, SolveStatus::NumericalFailure, theta / t, nt.steps));
                }
            }
            break;
        }
        t *= settings.mu;
    }
    Ok(finish(&data, &space, &w, SolveStatus::Optimal, theta / t, nt.steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::LinExpr;
    use crate::linalg::{leading_eigenpair, CVec};

    fn hermitian(d: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = || {
            s = crate::rng::mix(s);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = CMat::from_fn(d, d, |_, _| C64::new(next(), next()));
        &a * a.adjoint()
    }

    #[test]
    fn trace_constrained_sdp_hits_top_eigenvalue() {
        for seed in 0..5 {
            let h = hermitian(4, seed);
            let mut p = ConicProgram::new();
            let q = p.add_psd(4);
            p.maximize(LinExpr::new().add_trace(q, &h, 1.0));
            p.add_le(LinExpr::new().add_trace(q, &CMat::identity(4, 4), 1.0).add_constant(-3.0));
            let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
            assert!(sol.is_optimal(), "{:?} {} {}", sol.status, sol.newton_steps, sol.gap);
            let (lmax, _) = leading_eigenpair(&h);
            assert!((sol.objective - 3.0 * lmax).abs() < 1e-6 * (1.0 + lmax), "{} vs {}", sol.objective, 3.0 * lmax);
        }
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = ConicProgram::new();
        let x = p.add_real(2);
        p.add_le(LinExpr::new().add_real(x, 0, 1.0).add_real(x, 1, 1.0).add_constant(-1.0));
        p.add_le(LinExpr::new().add_real(x, 0, -1.0).add_real(x, 1, -1.0).add_constant(2.0));
        p.minimize(LinExpr::new().add_real(x, 0, 1.0));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn equality_constrained_ball() {
        // min Re(v0) + Re(v1) s.t. |v|^2 <= 1, Im v0 = 0.2
        let mut p = ConicProgram::new();
        let v = p.add_complex(2);
        p.add_ball(v, &[0, 1], 1.0);
        let b = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        p.minimize(LinExpr::new().add_re_inner(v, &b, 1.0));
        let e = CVec::from_vec(vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)]);
        p.add_eq(LinExpr::new().add_re_inner(v, &e, 1.0).add_constant(-0.2));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert!(sol.is_optimal());
        let r = (1.0f64 - 0.04).sqrt();
        assert!((sol.objective + r * 2f64.sqrt()).abs() < 1e-6, "{}", sol.objective);
        assert!((sol.vector(v)[0].im - 0.2).abs() < 1e-9);
    }

    #[test]
    fn psd_infeasible_trace() {
        let mut p = ConicProgram::new();
        let q = p.add_psd(3);
        p.add_le(LinExpr::new().add_trace(q, &CMat::identity(3, 3), 1.0).add_constant(1.0));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn strictly_feasible_start_is_used() {
        let mut p = ConicProgram::new();
        let x = p.add_real(1);
        p.add_le(LinExpr::new().add_real(x, 0, 1.0).add_constant(-2.0));
        p.add_le(LinExpr::new().add_real(x, 0, -1.0));
        p.maximize(LinExpr::new().add_real(x, 0, 1.0));
        p.set_start(p.start_builder().reals(x, &[1.0]).build());
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert!((sol.reals(x)[0] - 2.0).abs() < 1e-8);
    }
}

#[cfg(test)]
mod derivative_tests {
    use super::*;
    use crate::convex::LinExpr;

    #[test]
    fn barrier_derivatives_match_finite_differences() {
        for phase1 in [false, true] {
            let mut p = ConicProgram::new();
            let q = p.add_psd(3);
            let v = p.add_complex(2);
            p.add_ball(v, &[0, 1], 2.0);
            p.add_le(LinExpr::new().add_trace(q, &CMat::identity(3, 3), 1.0).add_constant(-10.0));
            p.minimize(LinExpr::new().add_trace(q, &CMat::identity(3, 3), 0.3));
            let (data, _) = compile(&p).ok().unwrap();
            let mut x0 = CMat::identity(3, 3) * C64::new(2.0, 0.0);
            x0[(0, 1)] = C64::new(0.3, 0.2);
            x0[(1, 0)] = C64::new(0.3, -0.2);
            x0[(1, 2)] = C64::new(-0.1, 0.4);
            x0[(2, 1)] = C64::new(-0.1, -0.4);
            let mut z = DVector::zeros(p.num_params());
            super::super::program::write_hermitian(&mut z, q, &x0);
            z[9] = 0.3;
            z[11] = -0.2;
            let s = 0.1;
            let e = data.eval(&z, s, 2.0, phase1, true).unwrap();
            let n = z.len();
            let h = 1e-6;
            let f = |z: &DVector<f64>, s: f64| data.eval(z, s, 2.0, phase1, false).unwrap().value;
            let g_at = |z: &DVector<f64>, s: f64| data.eval(z, s, 2.0, phase1, true).unwrap().grad;
            for i in 0..n {
                let mut zp = z.clone();
                zp[i] += h;
                let mut zm = z.clone();
                zm[i] -= h;
                let fd = (f(&zp, s) - f(&zm, s)) / (2.0 * h);
                assert!((fd - e.grad[i]).abs() < 1e-5, "grad {i}: {fd} vs {}", e.grad[i]);
                let hd = (g_at(&zp, s) - g_at(&zm, s)) / (2.0 * h);
                for j in 0..n {
                    assert!((hd[j] - e.hess[(j, i)]).abs() < 1e-4, "hess {j},{i}: {} vs {}", hd[j], e.hess[(j, i)]);
                }
                if phase1 {
                    assert!((hd[n] - e.hess[(n, i)]).abs() < 1e-4, "cross {i}");
                }
            }
            if phase1 {
                let fd = (f(&z, s + h) - f(&z, s - h)) / (2.0 * h);
                assert!((fd - e.grad[n]).abs() < 1e-5, "grad s: {fd} vs {}", e.grad[n]);
                let hd = (g_at(&z, s + h) - g_at(&z, s - h)) / (2.0 * h);
                assert!((hd[n] - e.hess[(n, n)]).abs() < 1e-4, "hess ss");
            }
        }
    }
}
