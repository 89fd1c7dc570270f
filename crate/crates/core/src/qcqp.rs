//! Convex quadratically-constrained quadratic programming over real
//! variables via a primal log-barrier interior-point method.
//!
//! Problems have the form
//!
//! ```text
//! minimize    x^T P0 x + b0^T x + c0
//! subject to  x^T Pi x + bi^T x + ci <= 0,   i = 1..m
//! ```
//!
//! with every `P` symmetric PSD. A phase-I slack minimization finds a
//! strictly feasible point when the caller cannot supply one, then the
//! barrier parameter is reduced geometrically with damped Newton centering
//! until the duality-gap estimate drops below tolerance. Problem data is
//! normalized per row internally, so tolerances act relative to the natural
//! scale of each constraint.

use std::io::Write;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec};

// ─── Problem data ──────────────────────────────────────────────────────────────

/// A symmetric PSD quadratic, stored as any combination of a diagonal, a
/// factor `F` (contributing `F^T F`) and a dense part. Diagonal and factor
/// parts are PSD by construction.
#[derive(Debug, Clone, Default)]
pub struct QuadForm {
    pub diag: Option<RVec>,
    pub factor: Option<RMat>,
    pub dense: Option<RMat>,
}

impl QuadForm {
    pub fn from_dense(p: RMat) -> Self {
        Self {
            dense: Some(p),
            ..Self::default()
        }
    }

    pub fn from_diag(d: RVec) -> Self {
        Self {
            diag: Some(d),
            ..Self::default()
        }
    }

    pub fn from_factor(f: RMat) -> Self {
        Self {
            factor: Some(f),
            ..Self::default()
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Materializes the full symmetric matrix.
    pub fn to_dense(&self, n: usize) -> RMat {
        let mut out = RMat::zeros(n, n);
        if let Some(d) = &self.diag {
            for i in 0..n {
                out[(i, i)] += d[i];
            }
        }
        if let Some(f) = &self.factor {
            out += f.transpose() * f;
        }
        if let Some(p) = &self.dense {
            out += (p + p.transpose()).scale(0.5);
        }
        out
    }

    fn check_dims(&self, n: usize) -> Result<()> {
        if let Some(d) = &self.diag {
            if d.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "quadratic diagonal length {} != {n}",
                    d.len()
                )));
            }
        }
        if let Some(f) = &self.factor {
            if f.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "quadratic factor has {} columns, expected {n}",
                    f.ncols()
                )));
            }
        }
        if let Some(p) = &self.dense {
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "quadratic dense part is {}x{}, expected {n}x{n}",
                    p.nrows(),
                    p.ncols()
                )));
            }
        }
        Ok(())
    }
}

/// One quadratic function `x^T P x + b^T x + c`.
#[derive(Debug, Clone)]
pub struct QuadFunc {
    pub quad: QuadForm,
    pub lin: RVec,
    pub constant: f64,
}

impl QuadFunc {
    pub fn new(quad: QuadForm, lin: RVec, constant: f64) -> Self {
        Self {
            quad,
            lin,
            constant,
        }
    }

    /// Purely linear function.
    pub fn linear(lin: RVec, constant: f64) -> Self {
        Self {
            quad: QuadForm::zero(),
            lin,
            constant,
        }
    }
}

/// A convex QCQP instance.
#[derive(Debug, Clone)]
pub struct ConvexQcqp {
    pub dim: usize,
    pub objective: QuadFunc,
    pub constraints: Vec<QuadFunc>,
}

impl ConvexQcqp {
    pub fn new(dim: usize, objective: QuadFunc, constraints: Vec<QuadFunc>) -> Result<Self> {
        objective.quad.check_dims(dim)?;
        if objective.lin.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "objective linear term has length {}, expected {dim}",
                objective.lin.len()
            )));
        }
        for (i, c) in constraints.iter().enumerate() {
            c.quad.check_dims(dim)?;
            if c.lin.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {i} linear term has length {}, expected {dim}",
                    c.lin.len()
                )));
            }
        }
        Ok(Self {
            dim,
            objective,
            constraints,
        })
    }

    /// Verifies that every quadratic is symmetric PSD within a relative
    /// eigenvalue tolerance. Intended for tests and debugging; `solve` relies
    /// on diagonal/factor storage being PSD by construction.
    pub fn validate_psd(&self, rel_tol: f64) -> Result<()> {
        let check = |q: &QuadForm, what: &str| -> Result<()> {
            if self.dim == 0 {
                return Ok(());
            }
            let dense = q.to_dense(self.dim);
            let eig = dense.symmetric_eigen();
            let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -rel_tol * max.max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{what}: quadratic has negative eigenvalue {min:.3e}"
                )));
            }
            Ok(())
        };
        check(&self.objective.quad, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check(&c.quad, &format!("constraint {i}"))?;
        }
        Ok(())
    }

    /// Dumps the instance in a plain text format for cross-checking against
    /// external solvers. Layout:
    ///
    /// ```text
    /// qcqp <dim> <num_constraints>
    /// objective
    /// quad            # dim x dim dense rows, whitespace separated
    /// <row 0>
    /// ...
    /// lin <dim values>
    /// const <value>
    /// constraint <i>  # repeated, same layout as the objective
    /// ```
    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "qcqp {} {}", self.dim, self.constraints.len())?;
        let dump = |w: &mut dyn Write, f: &QuadFunc| -> std::io::Result<()> {
            writeln!(w, "quad")?;
            let dense = f.quad.to_dense(self.dim);
            for i in 0..self.dim {
                let row: Vec<String> =
                    (0..self.dim).map(|j| format!("{:.17e}", dense[(i, j)])).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
            let lin: Vec<String> = f.lin.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "lin {}", lin.join(" "))?;
            writeln!(w, "const {:.17e}", f.constant)
        };
        writeln!(w, "objective")?;
        dump(w, &self.objective)?;
        for (i, c) in self.constraints.iter().enumerate() {
            writeln!(w, "constraint {i}")?;
            dump(w, c)?;
        }
        Ok(())
    }
}

// ─── Solver options and results ────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Duality-gap target, relative to the normalized objective scale.
    pub tol: f64,
    /// Total Newton-step budget across both phases.
    pub max_newton: usize,
    /// Initial barrier parameter `mu`; centering starts at `t = 1/mu`.
    pub mu0: f64,
    /// Barrier reduction factor per stage.
    pub mu_factor: f64,
    /// Backtracking line-search parameters.
    pub ls_alpha: f64,
    pub ls_beta: f64,
    /// Starting point; used directly when strictly feasible, otherwise
    /// phase I starts from it.
    pub initial_point: Option<RVec>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_newton: 200,
            mu0: 1.0,
            mu_factor: 10.0,
            ls_alpha: 0.25,
            ls_beta: 0.5,
            initial_point: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub x: RVec,
    /// Objective value in the caller's (unnormalized) units.
    pub objective: f64,
    pub status: SolveStatus,
    /// Worst normalized optimality residual: max of constraint violation,
    /// complementarity residual and duality-gap estimate. Gradient
    /// stationarity is certified through centering rather than re-measured;
    /// see [`check_kkt`] for the explicit gradient diagnostic.
    pub kkt_residual: f64,
    /// Lagrange multipliers in the caller's units.
    pub duals: Vec<f64>,
    /// Whether a marginal phase-I outcome triggered the one-shot constraint
    /// relaxation by `tol`.
    pub relaxed: bool,
    /// Newton steps spent in total.
    pub newton_steps: usize,
    /// Objective value at the end of each barrier stage (caller's units).
    pub stage_objectives: Vec<f64>,
    /// Phase-I slack (normalized units) when declared infeasible.
    pub infeasibility: Option<f64>,
}

/// KKT diagnostics of a candidate point; residuals are in the solver's
/// normalized units.
#[derive(Debug, Clone)]
pub struct KktReport {
    pub stationarity: f64,
    pub feasibility: Vec<f64>,
    pub complementarity: Vec<f64>,
    pub violated: Vec<usize>,
    pub max_residual: f64,
}

// ─── Internal normalized representation ────────────────────────────────────────

struct Func {
    p: RMat,
    b: RVec,
    c: f64,
}

impl Func {
    fn value(&self, x: &RVec) -> f64 {
        let px = &self.p * x;
        x.dot(&px) + self.b.dot(x) + self.c
    }

    fn value_and_grad(&self, x: &RVec) -> (f64, RVec) {
        let px = &self.p * x;
        let v = x.dot(&px) + self.b.dot(x) + self.c;
        let g = px.scale(2.0) + &self.b;
        (v, g)
    }
}

struct Normalized {
    n: usize,
    objective: Func,
    cons: Vec<Func>,
    obj_scale: f64,
    con_scales: Vec<f64>,
}

fn scale_of(p: &RMat, b: &RVec, c: f64) -> f64 {
    let pmax = p.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let bmax = b.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    pmax.max(bmax).max(c.abs()).max(1.0)
}

fn normalize(p: &ConvexQcqp) -> Normalized {
    let n = p.dim;
    let build = |f: &QuadFunc| -> (Func, f64) {
        let dense = f.quad.to_dense(n);
        let s = scale_of(&dense, &f.lin, f.constant);
        (
            Func {
                p: dense.scale(1.0 / s),
                b: f.lin.scale(1.0 / s),
                c: f.constant / s,
            },
            s,
        )
    };
    let (objective, obj_scale) = build(&p.objective);
    let mut cons = Vec::with_capacity(p.constraints.len());
    let mut con_scales = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let (f, s) = build(c);
        cons.push(f);
        con_scales.push(s);
    }
    Normalized {
        n,
        objective,
        cons,
        obj_scale,
        con_scales,
    }
}

fn cholesky_with_ridge(h: &RMat) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let n = h.nrows();
    let base = h.trace().abs().max(1.0) / n as f64;
    let mut ridge = 0.0;
    for attempt in 0..8 {
        let mut trial = h.clone();
        if ridge > 0.0 {
            for i in 0..n {
                trial[(i, i)] += ridge;
            }
        }
        if let Some(ch) = trial.cholesky() {
            return Ok(ch);
        }
        ridge = if attempt == 0 { base * 1e-12 } else { ridge * 100.0 };
    }
    Err(Error::LinearSolve("Newton system not positive definite".into()))
}

/// Newton steps allowed per centering stage; a partially centered stage is
/// still a usable barrier start, while an unbounded stage can eat the whole
/// budget when the Newton system sits at its conditioning limit.
const MAX_STEPS_PER_STAGE: usize = 100;

/// Centers `x` on the barrier path for parameter `t`; returns `false` when
/// the Newton budget ran out first.
fn center(
    x: &mut RVec,
    t: f64,
    objective: &Func,
    cons: &[Func],
    opts: &SolveOptions,
    steps: &mut usize,
) -> Result<bool> {
    let phi = |x: &RVec| -> Option<f64> {
        let mut v = t * objective.value(x);
        for c in cons {
            let fi = c.value(x);
            if fi >= 0.0 {
                return None;
            }
            v -= (-fi).ln();
        }
        Some(v)
    };
    let mut stage_steps = 0usize;
    let mut stalls = 0usize;
    loop {
        if *steps >= opts.max_newton {
            return Ok(false);
        }
        if stage_steps >= MAX_STEPS_PER_STAGE || stalls >= 3 {
            return Ok(true);
        }
        let (_, g0) = objective.value_and_grad(x);
        let mut grad = g0.scale(t);
        let mut hess = objective.p.scale(2.0 * t);
        for c in cons {
            let (fi, gi) = c.value_and_grad(x);
            let inv = 1.0 / (-fi);
            grad += gi.scale(inv);
            hess += c.p.scale(2.0 * inv);
            hess += &gi * gi.transpose() * (inv * inv);
        }
        // Stationarity of the original problem at the implied duals.
        if grad.norm() / (t * (1.0 + x.norm())) <= 0.05 * opts.tol {
            return Ok(true);
        }
        let chol = cholesky_with_ridge(&hess)?;
        let dx = -chol.solve(&grad);
        let decrement = -grad.dot(&dx);
        if decrement <= 0.0 || decrement * 0.5 <= 1e-12 {
            return Ok(true);
        }
        *steps += 1;
        stage_steps += 1;

        if decrement <= 0.04 {
            // Quadratic zone (Newton decrement <= 0.2): full steps, backing
            // off to stay strictly feasible and non-increasing; Armijo's
            // sufficient-decrease comparisons drown in rounding noise here,
            // but monotonicity still guards against cycling when the Newton
            // system is at its conditioning limit.
            let base = phi(x).expect("current point is strictly feasible");
            let noise = 1e-12 * (1.0 + base.abs());
            let mut s = 1.0;
            let mut placed = false;
            for _ in 0..60 {
                let trial = &*x + dx.scale(s);
                if let Some(v) = phi(&trial) {
                    if v <= base + noise {
                        stalls = if base - v <= noise { stalls + 1 } else { 0 };
                        *x = trial;
                        placed = true;
                        break;
                    }
                }
                s *= opts.ls_beta;
            }
            if !placed {
                return Ok(true);
            }
            continue;
        }

        let base = phi(x).expect("current point is strictly feasible");
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &*x + dx.scale(s);
            if let Some(v) = phi(&trial) {
                if v <= base - opts.ls_alpha * s * decrement {
                    stalls = if base - v <= 1e-12 * (1.0 + base.abs()) {
                        stalls + 1
                    } else {
                        0
                    };
                    *x = trial;
                    accepted = true;
                    break;
                }
            }
            s *= opts.ls_beta;
        }
        if !accepted {
            // Step collapsed; the point is as centered as rounding allows.
            return Ok(true);
        }
    }
}

/// Phase I: minimizes the worst constraint slack from `start`. Returns the
/// feasible point if one with margin was found, plus the best slack seen.
fn phase_one(
    cons: &[Func],
    start: &RVec,
    opts: &SolveOptions,
    steps: &mut usize,
) -> Result<(Option<RVec>, f64)> {
    let n = start.len();
    let margin = (10.0 * opts.tol).max(1e-9);
    let worst = |x: &RVec| cons.iter().map(|c| c.value(x)).fold(f64::NEG_INFINITY, f64::max);

    let mut x = start.clone();
    let mut s = worst(&x) + 1.0;
    let x0 = start.clone();
    // Tiny ridge keeps the Newton system positive definite when the slack
    // direction is the only curvature source.
    let reg = 1e-9;

    let phi = |x: &RVec, s: f64, t: f64| -> Option<f64> {
        let mut v = t * (s + reg * (x - &x0).norm_squared());
        for c in cons {
            let slack = s - c.value(x);
            if slack <= 0.0 {
                return None;
            }
            v -= slack.ln();
        }
        Some(v)
    };

    let mut t = 1.0;
    loop {
        loop {
            if *steps >= opts.max_newton {
                return Ok((None, worst(&x)));
            }
            let mut grad = RVec::zeros(n + 1);
            let mut hess = RMat::zeros(n + 1, n + 1);
            for i in 0..n {
                grad[i] = 2.0 * reg * t * (x[i] - x0[i]);
                hess[(i, i)] = 2.0 * reg * t;
            }
            grad[n] = t;
            for c in cons {
                let (fi, gi) = c.value_and_grad(&x);
                let inv = 1.0 / (s - fi);
                for i in 0..n {
                    grad[i] += gi[i] * inv;
                }
                grad[n] -= inv;
                for j in 0..n {
                    for i in 0..n {
                        hess[(i, j)] += 2.0 * inv * c.p[(i, j)];
                    }
                }
                let mut gfull = RVec::zeros(n + 1);
                gfull.rows_mut(0, n).copy_from(&gi);
                gfull[n] = -1.0;
                hess += &gfull * gfull.transpose() * (inv * inv);
            }
            let chol = cholesky_with_ridge(&hess)?;
            let dy = -chol.solve(&grad);
            let decrement = -grad.dot(&dy);
            if decrement <= 0.0 || decrement * 0.5 <= 1e-10 * (1.0 + t) {
                break;
            }
            *steps += 1;
            let armijo = decrement > 0.04;
            let base = phi(&x, s, t).expect("phase-one iterate in domain");
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let xt = &x + dy.rows(0, n).scale(step);
                let st = s + dy[n] * step;
                if let Some(v) = phi(&xt, st, t) {
                    if !armijo || v <= base - opts.ls_alpha * step * decrement {
                        x = xt;
                        s = st;
                        moved = true;
                        break;
                    }
                }
                step *= opts.ls_beta;
            }
            if !moved {
                break;
            }
            let w = worst(&x);
            if w <= -margin {
                return Ok((Some(x), w));
            }
        }
        if cons.len() as f64 / t <= opts.tol {
            break;
        }
        t *= opts.mu_factor;
    }
    let slack = worst(&x);
    if slack <= -margin {
        Ok((Some(x), slack))
    } else {
        Ok((None, slack))
    }
}

// ─── Public entry points ───────────────────────────────────────────────────────

/// Solves a convex QCQP.
///
/// A marginally infeasible phase-I outcome (optimal slack within `1.1 * tol`
/// of zero) triggers one retry with every constraint relaxed by `tol`,
/// flagged in the returned solution.
pub fn solve(p: &ConvexQcqp, opts: &SolveOptions) -> Result<QcqpSolution> {
    let norm = normalize(p);
    let first = solve_normalized(&norm, opts, 0.0)?;
    if first.status == SolveStatus::Infeasible {
        if let Some(slack) = first.infeasibility {
            if slack > 0.0 && slack <= 1.1 * opts.tol {
                let mut retry = solve_normalized(&norm, opts, opts.tol)?;
                retry.relaxed = true;
                return Ok(retry);
            }
        }
    }
    Ok(first)
}

fn solve_normalized(norm: &Normalized, opts: &SolveOptions, relax: f64) -> Result<QcqpSolution> {
    let n = norm.n;
    let m = norm.cons.len();
    let mut steps = 0usize;

    let cons: Vec<Func> = norm
        .cons
        .iter()
        .map(|f| Func {
            p: f.p.clone(),
            b: f.b.clone(),
            c: f.c - relax,
        })
        .collect();

    let hint = match &opts.initial_point {
        Some(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "initial point has length {}, expected {n}",
                    v.len()
                )));
            }
            v.clone()
        }
        None => RVec::zeros(n),
    };
    // Any strictly interior hint is usable: the barrier tolerates
    // near-boundary starts, and warm starts from a previous solve sit close
    // to the active set by construction.
    let hint_margin = 1e-12;
    let mut x = if m == 0 || cons.iter().all(|c| c.value(&hint) < -hint_margin) {
        hint
    } else {
        let (found, slack) = phase_one(&cons, &hint, opts, &mut steps)?;
        match found {
            Some(x) => x,
            None => {
                return Ok(QcqpSolution {
                    x: hint,
                    objective: f64::NAN,
                    status: SolveStatus::Infeasible,
                    kkt_residual: f64::NAN,
                    duals: vec![0.0; m],
                    relaxed: relax > 0.0,
                    newton_steps: steps,
                    stage_objectives: Vec::new(),
                    infeasibility: Some(slack),
                });
            }
        }
    };

    let mut t = 1.0 / opts.mu0;
    let mut stage_objectives = Vec::new();
    let mut completed = true;
    loop {
        let ok = center(&mut x, t, &norm.objective, &cons, opts, &mut steps)?;
        stage_objectives.push(norm.objective.value(&x) * norm.obj_scale);
        if !ok {
            completed = false;
            break;
        }
        if m == 0 || (m as f64) / t <= opts.tol {
            break;
        }
        t *= opts.mu_factor;
    }

    let duals_norm: Vec<f64> = cons
        .iter()
        .map(|c| {
            let fi = c.value(&x);
            1.0 / (t * (-fi).max(f64::MIN_POSITIVE))
        })
        .collect();
    let gap = if m == 0 { 0.0 } else { m as f64 / t };
    let residual = cons
        .iter()
        .zip(&duals_norm)
        .map(|(c, &l)| {
            let fi = c.value(&x);
            fi.max(0.0).max((l * fi).abs())
        })
        .fold(gap, f64::max);
    let status = if completed && residual <= opts.tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    let duals: Vec<f64> = duals_norm
        .iter()
        .zip(&norm.con_scales)
        .map(|(l, s)| l * norm.obj_scale / s)
        .collect();
    Ok(QcqpSolution {
        objective: norm.objective.value(&x) * norm.obj_scale,
        x,
        status,
        kkt_residual: residual,
        duals,
        relaxed: relax > 0.0,
        newton_steps: steps,
        stage_objectives,
        infeasibility: None,
    })
}

fn kkt_normalized(objective: &Func, cons: &[Func], x: &RVec, duals_norm: &[f64]) -> KktReport {
    let (_, mut grad) = objective.value_and_grad(x);
    let mut feasibility = Vec::with_capacity(cons.len());
    let mut complementarity = Vec::with_capacity(cons.len());
    let mut violated = Vec::new();
    for (i, (c, &l)) in cons.iter().zip(duals_norm).enumerate() {
        let (fi, gi) = c.value_and_grad(x);
        grad += gi.scale(l);
        feasibility.push(fi.max(0.0));
        complementarity.push((l * fi).abs());
        if fi > 0.0 {
            violated.push(i);
        }
    }
    let stationarity = grad.norm() / (1.0 + x.norm());
    let max_residual = feasibility
        .iter()
        .chain(complementarity.iter())
        .fold(stationarity, |a, &v| a.max(v));
    KktReport {
        stationarity,
        feasibility,
        complementarity,
        violated,
        max_residual,
    }
}

/// Evaluates KKT residuals of `(x, duals)` for `p` in the solver's
/// normalized units; never mutates.
pub fn check_kkt(p: &ConvexQcqp, x: &RVec, duals: &[f64], tol: f64) -> KktReport {
    let norm = normalize(p);
    let duals_norm: Vec<f64> = duals
        .iter()
        .zip(&norm.con_scales)
        .map(|(l, s)| l * s / norm.obj_scale)
        .collect();
    let mut report = kkt_normalized(&norm.objective, &norm.cons, x, &duals_norm);
    report.violated = report
        .feasibility
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tol)
        .map(|(i, _)| i)
        .collect();
    report
}
