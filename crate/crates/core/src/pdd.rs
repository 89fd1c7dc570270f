//! Penalty dual decomposition (PDD) for the reflection-matrix designs.
//!
//! The structural equality between each reflection block and a unitary
//! auxiliary block is moved into an augmented-Lagrangian penalty. The inner
//! loop alternates closed-form auxiliary-vector updates, a convex QCQP over
//! the half-vectorized blocks plus the min-SINR surrogate, and an SVD
//! projection of the unitary auxiliaries; the outer loop either ascends the
//! duals or shrinks the penalty, driven by the constraint-violation level.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    kron_vec, lift_factor, lift_vector, unlift_vector, vech_len, CMat, CVec, Complex64, RVec,
};
use crate::metrics::{self, IsacMetrics};
use crate::qcqp::{self, ConvexQcqp, QuadForm, QuadFunc, SolveOptions, SolveStatus};
use crate::reflection::ReflectionMatrix;
use crate::scenario::{ChannelSet, ScenarioConfig};

// ─── Configuration and state ───────────────────────────────────────────────────

/// Algorithm knobs. The defaults are the values used throughout the test
/// suite; everything is overridable.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PddConfig {
    /// Initial penalty parameter.
    pub rho0: f64,
    /// Penalty shrink factor applied when the violation misses the threshold.
    pub shrink: f64,
    /// Initial violation threshold for dual updates and its per-outer decay.
    pub eps0: f64,
    pub eps_decay: f64,
    /// Violation level treated as converged.
    pub eps_final: f64,
    /// Relative objective-change threshold for the inner loops.
    pub inner_tol: f64,
    /// Iteration caps: outer loop, inner (subproblem + projection) rounds per
    /// outer iteration, and alternating rounds inside the subproblem.
    pub max_outer: usize,
    pub max_inner: usize,
    pub max_ao: usize,
    /// Number of starts; the first is deterministic, the rest random.
    pub n_starts: usize,
    /// Accepted relative PCRB overshoot when selecting the final matrix.
    pub feas_slack: f64,
    /// Inner solver settings.
    pub qcqp_tol: f64,
    pub max_newton: usize,
    /// Seed for the random restarts.
    pub seed: u64,
}

impl Default for PddConfig {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            shrink: 0.6,
            eps0: 1e-2,
            eps_decay: 0.85,
            eps_final: 1e-6,
            inner_tol: 1e-6,
            max_outer: 60,
            max_inner: 2,
            max_ao: 4,
            n_starts: 1,
            feas_slack: 0.01,
            qcqp_tol: 1e-8,
            max_newton: 2000,
            seed: 0,
        }
    }
}

/// One inner-iteration snapshot of a PDD run.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub outer: usize,
    pub inner: usize,
    pub al_objective: f64,
    pub violation: f64,
    pub rho: f64,
    pub min_rate: f64,
    pub pcrb: f64,
}

/// Which design problem the PDD engine is solving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// Maximize the minimum user SINR surrogate, optionally under the
    /// transformed Fisher-information constraint `sum kappa f_z + gamma <= 0`
    /// (`None` drops a vacuous constraint).
    Isac { gamma: Option<f64> },
    /// Maximize observation Fisher information (minimize the PCRB).
    Sensing,
}

/// Mutable optimizer state: current iterates plus the run history.
#[derive(Debug, Clone)]
pub struct PddState {
    pub alpha: f64,
    pub phi: ReflectionMatrix,
    pub psi: Vec<CMat>,
    pub lambda: Vec<CMat>,
    pub rho: f64,
    pub nu_zeta: Vec<CVec>,
    pub nu_users: Vec<CVec>,
    pub history: Vec<TraceRecord>,
}

impl PddState {
    /// Fresh state at `phi0` (blocks are taken as the auxiliaries as well).
    pub fn new(phi0: ReflectionMatrix, rho0: f64) -> Self {
        let psi = phi0.blocks().to_vec();
        let lambda = phi0
            .group_sizes()
            .iter()
            .map(|&s| CMat::zeros(s, s))
            .collect();
        Self {
            alpha: 0.0,
            phi: phi0,
            psi,
            lambda,
            rho: rho0,
            nu_zeta: Vec::new(),
            nu_users: Vec::new(),
            history: Vec::new(),
        }
    }

    /// Largest entrywise deviation between blocks and auxiliaries.
    pub fn violation(&self) -> f64 {
        self.phi
            .blocks()
            .iter()
            .zip(&self.psi)
            .map(|(p, q)| (p - q).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

// ─── Closed-form auxiliary updates ─────────────────────────────────────────────

/// Minimizers of the auxiliary quadratics: `nu_z = Sigma_0^{-1} R Phi u_z`
/// and `nu_k = Sigma_k^{-1} h_k`.
pub fn update_nu(
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<(Vec<CVec>, Vec<CVec>)> {
    let full = phi.full();
    let rp = &ch.r_mat * &full;
    let s0 = metrics::sigma0(phi, ch, cfg)
        .cholesky()
        .ok_or_else(|| Error::LinearSolve("sigma0 is not positive definite".into()))?;
    let nu_zeta: Vec<CVec> = (0..ch.u_evd.rank)
        .map(|z| s0.solve(&(&rp * ch.u_evd.vectors.column(z).into_owned())))
        .collect();
    let mut nu_users = Vec::with_capacity(cfg.num_users());
    for k in 0..cfg.num_users() {
        let sk = metrics::sigma_k(k, phi, ch, cfg)
            .cholesky()
            .ok_or_else(|| Error::LinearSolve("sigma_k is not positive definite".into()))?;
        nu_users.push(sk.solve(&ch.effective_channel(k, &full)));
    }
    Ok((nu_zeta, nu_users))
}

/// Sensing auxiliary quadratic
/// `f_z = nu^H Sigma_0 nu - 2 Re{nu^H R Phi u_z}` evaluated directly.
pub fn f_zeta(
    zeta: usize,
    nu: &CVec,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> f64 {
    let full = phi.full();
    let u = ch.u_evd.vectors.column(zeta).into_owned();
    let quad = (nu.adjoint() * metrics::sigma0(phi, ch, cfg) * nu)[(0, 0)].re;
    let cross = (nu.adjoint() * &ch.r_mat * &full * u)[(0, 0)].re;
    quad - 2.0 * cross
}

/// Communication auxiliary quadratic
/// `f_k = nu^H Sigma_k nu - 2 Re{nu^H h_k}` evaluated directly.
pub fn f_user(
    k: usize,
    nu: &CVec,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> f64 {
    let full = phi.full();
    let quad = (nu.adjoint() * metrics::sigma_k(k, phi, ch, cfg) * nu)[(0, 0)].re;
    let cross = (nu.adjoint() * ch.effective_channel(k, &full))[(0, 0)].re;
    quad - 2.0 * cross
}

// ─── Half-vectorization layout ─────────────────────────────────────────────────

/// Index bookkeeping between the stacked per-group half-vectorizations, the
/// per-group `vec` spaces and the global `vec(Phi)` space. The selection
/// products are pure gathers, never materialized.
#[derive(Debug, Clone)]
struct VechLayout {
    group_sizes: Vec<usize>,
    /// Per complex coordinate: group, global vec positions, group-local vec
    /// positions (the second pair entry present off the diagonal only).
    cols: Vec<VechCol>,
    /// Per-group offset into the complex coordinate stack.
    offsets: Vec<usize>,
    nc: usize,
}

#[derive(Debug, Clone)]
struct VechCol {
    g: usize,
    global_a: usize,
    global_b: Option<usize>,
    local_a: usize,
    local_b: Option<usize>,
    /// Diagonal of `D^T D`: 1 on the block diagonal, 2 off it.
    weight: f64,
}

impl VechLayout {
    fn new(group_sizes: &[usize]) -> Self {
        let m_total: usize = group_sizes.iter().sum();
        let mut cols = Vec::new();
        let mut offsets = Vec::with_capacity(group_sizes.len());
        let mut m_hat = 0;
        for (g, &mg) in group_sizes.iter().enumerate() {
            offsets.push(cols.len());
            for n in 0..mg {
                for m in n..mg {
                    let global_a = (m_hat + n) * m_total + m_hat + m;
                    let local_a = n * mg + m;
                    let (global_b, local_b, weight) = if m == n {
                        (None, None, 1.0)
                    } else {
                        (Some((m_hat + m) * m_total + m_hat + n), Some(m * mg + n), 2.0)
                    };
                    cols.push(VechCol {
                        g,
                        global_a,
                        global_b,
                        local_a,
                        local_b,
                        weight,
                    });
                }
            }
            m_hat += mg;
        }
        Self {
            group_sizes: group_sizes.to_vec(),
            nc: cols.len(),
            cols,
            offsets,
        }
    }

    /// `S^T v` for the global selection `S = [Q_1 D_1, ..., Q_G D_G]`.
    fn compress_global(&self, v: &CVec) -> CVec {
        CVec::from_fn(self.nc, |t, _| {
            let col = &self.cols[t];
            match col.global_b {
                Some(b) => v[col.global_a] + v[b],
                None => v[col.global_a],
            }
        })
    }

    /// `D_g^T v` for a group-local `vec` vector, written into the group's
    /// slice of a stacked coordinate vector.
    fn compress_local_into(&self, g: usize, v: &CVec, out: &mut CVec) {
        let start = self.offsets[g];
        let len = vech_len(self.group_sizes[g]);
        for t in start..start + len {
            let col = &self.cols[t];
            out[t] += match col.local_b {
                Some(b) => v[col.local_a] + v[b],
                None => v[col.local_a],
            };
        }
    }

    /// Stacked half-vectorizations of (the symmetrized) blocks.
    fn z_from_phi(&self, phi: &ReflectionMatrix) -> CVec {
        let mut z = CVec::zeros(self.nc);
        for (t, col) in self.cols.iter().enumerate() {
            let block = phi.block(col.g);
            let mg = self.group_sizes[col.g];
            let (m, n) = (col.local_a % mg, col.local_a / mg);
            z[t] = match col.local_b {
                Some(_) => (block[(m, n)] + block[(n, m)]) * Complex64::new(0.5, 0.0),
                None => block[(m, n)],
            };
        }
        z
    }

    /// Reflection matrix from stacked half-vectorizations.
    fn phi_from_z(&self, z: &CVec) -> ReflectionMatrix {
        let mut blocks: Vec<CMat> = self
            .group_sizes
            .iter()
            .map(|&s| CMat::zeros(s, s))
            .collect();
        for (t, col) in self.cols.iter().enumerate() {
            let mg = self.group_sizes[col.g];
            let (m, n) = (col.local_a % mg, col.local_a / mg);
            blocks[col.g][(m, n)] = z[t];
            if col.local_b.is_some() {
                blocks[col.g][(n, m)] = z[t];
            }
        }
        ReflectionMatrix::from_blocks(blocks).expect("layout blocks are square")
    }
}

// ─── Subproblem assembly ───────────────────────────────────────────────────────

/// Accumulator for `z^H A z + 2 Re{b^H z} + c` with `A` kept as scaled
/// rank-one factors plus a real diagonal.
#[derive(Debug, Clone)]
struct ComplexForm {
    /// Rows `v` contributing `|v^H z|^2` each (scales already folded in).
    rows: Vec<CVec>,
    diag: RVec,
    lin: CVec,
    constant: f64,
}

impl ComplexForm {
    fn new(nc: usize) -> Self {
        Self {
            rows: Vec::new(),
            diag: RVec::zeros(nc),
            lin: CVec::zeros(nc),
            constant: 0.0,
        }
    }

    fn push_row(&mut self, scale: f64, v: CVec) {
        if scale > 0.0 {
            self.rows.push(v.scale(scale.sqrt()));
        }
    }

    /// Lifts to a real quadratic over `x = [Re z; Im z]` with an optional
    /// trailing scalar variable carrying `alpha_coeff`.
    fn lift(&self, alpha_coeff: Option<f64>) -> QuadFunc {
        let nc = self.diag.len();
        let nr = 2 * nc + usize::from(alpha_coeff.is_some());
        let mut diag = RVec::zeros(nr);
        for t in 0..nc {
            diag[t] = self.diag[t];
            diag[nc + t] = self.diag[t];
        }
        let factor = if self.rows.is_empty() {
            None
        } else {
            let mut f = CMat::zeros(self.rows.len(), nc);
            for (j, row) in self.rows.iter().enumerate() {
                for t in 0..nc {
                    f[(j, t)] = row[t].conj();
                }
            }
            let lifted = lift_factor(&f);
            Some(if nr > 2 * nc {
                lifted.insert_column(2 * nc, 0.0)
            } else {
                lifted
            })
        };
        let mut lin = RVec::zeros(nr);
        for t in 0..nc {
            lin[t] = 2.0 * self.lin[t].re;
            lin[nc + t] = 2.0 * self.lin[t].im;
        }
        if let Some(coeff) = alpha_coeff {
            lin[nr - 1] = coeff;
        }
        QuadFunc::new(
            QuadForm {
                diag: Some(diag),
                factor,
                dense: None,
            },
            lin,
            self.constant,
        )
    }
}

/// `vec(a b^H)` without forming the outer product.
fn vec_outer(a: &CVec, b: &CVec) -> CVec {
    kron_vec(&b.conjugate(), a)
}

/// A lifted convex subproblem plus the bookkeeping to move between solver
/// vectors and reflection matrices.
pub struct Subproblem {
    pub qcqp: ConvexQcqp,
    layout: VechLayout,
    has_alpha: bool,
}

impl Subproblem {
    /// Solver-space point for `(phi, alpha)`.
    pub fn lift_point(&self, phi: &ReflectionMatrix, alpha: f64) -> RVec {
        let z = self.layout.z_from_phi(phi);
        let base = lift_vector(&z);
        if self.has_alpha {
            let mut out = RVec::zeros(base.len() + 1);
            out.rows_mut(0, base.len()).copy_from(&base);
            out[base.len()] = alpha;
            out
        } else {
            base
        }
    }

    /// Recovers `(phi, alpha)` from a solver vector.
    pub fn recover(&self, x: &RVec) -> (ReflectionMatrix, f64) {
        let nc = self.layout.nc;
        let z = unlift_vector(&x.rows(0, 2 * nc).into_owned());
        let alpha = if self.has_alpha { x[x.len() - 1] } else { 0.0 };
        (self.layout.phi_from_z(&z), alpha)
    }
}

/// Assembles the convex inner subproblem at the current state.
///
/// Variables are the real lifting of the stacked block half-vectorizations,
/// plus the min-SINR surrogate for the communication designs. The objective
/// carries the dual and penalty terms; rate constraints and the transformed
/// Fisher-information constraint are built from scaled rank-one factors
/// compressed through the sparse selection maps, so every quadratic is PSD by
/// construction.
pub fn build_subproblem(
    state: &PddState,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    kind: ProblemKind,
) -> Result<Subproblem> {
    let layout = VechLayout::new(state.phi.group_sizes());
    let nc = layout.nc;
    let k_users = cfg.num_users();
    let has_alpha = matches!(kind, ProblemKind::Isac { .. });
    if has_alpha && k_users == 0 {
        return Err(Error::InvalidConfig(
            "communication design needs at least one user".into(),
        ));
    }
    if state.nu_zeta.len() != ch.u_evd.rank || state.nu_users.len() != k_users {
        return Err(Error::DimensionMismatch(format!(
            "auxiliary vectors not current: {} sensing / {} user entries",
            state.nu_zeta.len(),
            state.nu_users.len()
        )));
    }

    let r_adj = ch.r_mat.adjoint();
    let hr_conj: Vec<CVec> = ch.h_irs.iter().map(|h| h.conjugate()).collect();

    // Fisher-information aggregate: quadratic rows, linear term and constant
    // of  sum_z kappa_z f_z({phi_g}, nu_z).
    let fisher_form = |form: &mut ComplexForm| {
        for (z, nu) in state.nu_zeta.iter().enumerate() {
            let kappa = ch.u_evd.values[z];
            let rh_nu = &r_adj * nu;
            for (k, user) in cfg.users.iter().enumerate() {
                form.push_row(kappa * user.power, layout.compress_global(&kron_vec(&hr_conj[k], &rh_nu)));
            }
            let u = ch.u_evd.vectors.column(z).into_owned();
            let mut tail = u.clone();
            for (k, user) in cfg.users.iter().enumerate() {
                let c = (nu.adjoint() * &ch.h_direct[k])[(0, 0)];
                tail -= ch.h_irs[k].scale(user.power) * c.conj();
            }
            // q_z = vec(R^H nu (u^H - sum_k P_k nu^H h_dk h_rk^H)); tail holds
            // the bracket's adjoint.
            let q = vec_outer(&rh_nu, &tail);
            form.lin -= layout.compress_global(&q).scale(kappa);
            let mut c = cfg.sigma2 * nu.norm_squared();
            for (k, user) in cfg.users.iter().enumerate() {
                c += user.power * (nu.adjoint() * &ch.h_direct[k])[(0, 0)].norm_sqr();
            }
            form.constant += kappa * c;
        }
    };

    // Objective: dual + penalty terms (plus -alpha or the Fisher aggregate).
    let mut objective = ComplexForm::new(nc);
    let inv_2rho = 0.5 / state.rho;
    for t in 0..nc {
        objective.diag[t] = inv_2rho * layout.cols[t].weight;
    }
    for g in 0..state.phi.num_groups() {
        let psi_vec = crate::linalg::vec_mat(&state.psi[g]);
        let lambda_vec = crate::linalg::vec_mat(&state.lambda[g]);
        let mut contrib = CVec::zeros(nc);
        layout.compress_local_into(g, &lambda_vec, &mut contrib);
        objective.lin += contrib.scale(0.5);
        let mut pen = CVec::zeros(nc);
        layout.compress_local_into(g, &psi_vec, &mut pen);
        objective.lin -= pen.scale(inv_2rho);
        objective.constant += -(lambda_vec.adjoint() * &psi_vec)[(0, 0)].re
            + inv_2rho * psi_vec.norm_squared();
    }

    let mut constraints = Vec::new();
    match kind {
        ProblemKind::Sensing => {
            fisher_form(&mut objective);
        }
        ProblemKind::Isac { gamma } => {
            // Rate constraints: f_k + alpha / P_k <= 0.
            for (k, user) in cfg.users.iter().enumerate() {
                let nu = &state.nu_users[k];
                let rh_nu = &r_adj * nu;
                let mut form = ComplexForm::new(nc);
                for (kp, other) in cfg.users.iter().enumerate() {
                    if kp == k {
                        continue;
                    }
                    form.push_row(
                        other.power,
                        layout.compress_global(&kron_vec(&hr_conj[kp], &rh_nu)),
                    );
                }
                if cfg.p0 > 0.0 {
                    for j in 0..ch.g_evd.rank {
                        let lam = ch.g_evd.values[j];
                        let v = ch.g_evd.vectors.column(j).into_owned().conjugate();
                        form.push_row(
                            cfg.p0 * lam.max(0.0),
                            layout.compress_global(&kron_vec(&v, &rh_nu)),
                        );
                    }
                }
                let mut tail = ch.h_irs[k].clone();
                for (kp, other) in cfg.users.iter().enumerate() {
                    if kp == k {
                        continue;
                    }
                    let c = (nu.adjoint() * &ch.h_direct[kp])[(0, 0)];
                    tail -= ch.h_irs[kp].scale(other.power) * c.conj();
                }
                let r_k = vec_outer(&rh_nu, &tail);
                form.lin -= layout.compress_global(&r_k);
                form.constant = cfg.sigma2 * nu.norm_squared()
                    - 2.0 * (nu.adjoint() * &ch.h_direct[k])[(0, 0)].re;
                for (kp, other) in cfg.users.iter().enumerate() {
                    if kp != k {
                        form.constant +=
                            other.power * (nu.adjoint() * &ch.h_direct[kp])[(0, 0)].norm_sqr();
                    }
                }
                constraints.push(form.lift(Some(1.0 / user.power)));
            }
            // Transformed PCRB constraint: sum_z kappa_z f_z + gamma <= 0.
            if let Some(gamma) = gamma {
                let mut form = ComplexForm::new(nc);
                fisher_form(&mut form);
                form.constant += gamma;
                constraints.push(form.lift(Some(0.0)));
            }
        }
    }

    let obj_func = objective.lift(if has_alpha { Some(-1.0) } else { None });
    let dim = 2 * nc + usize::from(has_alpha);
    Ok(Subproblem {
        qcqp: ConvexQcqp::new(dim, obj_func, constraints)?,
        layout,
        has_alpha,
    })
}

// ─── Augmented Lagrangian pieces ───────────────────────────────────────────────

/// Dual plus penalty terms of the augmented Lagrangian at the current state.
fn coupling_terms(state: &PddState) -> f64 {
    let mut acc = 0.0;
    for (g, block) in state.phi.blocks().iter().enumerate() {
        let diff = block - &state.psi[g];
        acc += (state.lambda[g].adjoint() * &diff).trace().re;
        acc += diff.norm_squared() * 0.5 / state.rho;
    }
    acc
}

/// Augmented-Lagrangian objective at the current state and auxiliaries.
pub fn al_objective(
    state: &PddState,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    kind: ProblemKind,
) -> f64 {
    let base = match kind {
        ProblemKind::Isac { .. } => -state.alpha,
        ProblemKind::Sensing => (0..ch.u_evd.rank)
            .map(|z| ch.u_evd.values[z] * f_zeta(z, &state.nu_zeta[z], &state.phi, ch, cfg))
            .sum(),
    };
    base + coupling_terms(state)
}

/// Unitary projection of each auxiliary block: `Psi_g` becomes the
/// Frobenius-nearest unitary matrix to `Phi_g + rho Lambda_g`.
pub fn project_psi(state: &mut PddState) -> Result<()> {
    for g in 0..state.phi.num_groups() {
        let target = state.phi.block(g) + state.lambda[g].scale(state.rho);
        state.psi[g] = crate::linalg::project_unitary(&target)?;
    }
    Ok(())
}

/// One outer PDD update: ascends the duals when the violation is within the
/// current threshold, otherwise shrinks the penalty. Returns `true` on a
/// dual update.
pub fn outer_update(state: &mut PddState, eps: f64, shrink: f64) -> bool {
    let violation = state.violation();
    if violation <= eps {
        for g in 0..state.phi.num_groups() {
            let diff = state.phi.block(g) - &state.psi[g];
            state.lambda[g] += diff.scale(1.0 / state.rho);
        }
        true
    } else {
        state.rho *= shrink;
        false
    }
}

// ─── The PDD engine ────────────────────────────────────────────────────────────

struct RunOutcome {
    state: PddState,
    converged: bool,
}

fn min_optimal_sinr(phi: &ReflectionMatrix, ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<f64> {
    let mut best = f64::INFINITY;
    for k in 0..cfg.num_users() {
        best = best.min(metrics::optimal_jensen_sinr(k, phi, ch, cfg)?);
    }
    Ok(best)
}

/// Alternates auxiliary updates and subproblem solves until the
/// augmented-Lagrangian objective stabilizes; one round of the paper's inner
/// alternating optimization.
pub fn inner_ao(
    state: &mut PddState,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    kind: ProblemKind,
    pdd: &PddConfig,
    warm: &mut Option<RVec>,
) -> Result<f64> {
    if matches!(kind, ProblemKind::Isac { .. }) && cfg.num_users() == 0 {
        return Err(Error::InvalidConfig(
            "communication design needs at least one user".into(),
        ));
    }
    let mut last = f64::INFINITY;
    for round in 0..pdd.max_ao {
        let (nu_zeta, nu_users) = update_nu(&state.phi, ch, cfg)?;
        state.nu_zeta = nu_zeta;
        state.nu_users = nu_users;

        let sub = build_subproblem(state, ch, cfg, kind)?;
        let hint = warm
            .clone()
            .unwrap_or_else(|| sub.lift_point(&state.phi, state.alpha));
        let opts = SolveOptions {
            tol: pdd.qcqp_tol,
            max_newton: pdd.max_newton,
            mu0: if round == 0 && warm.is_none() { 1.0 } else { 1e-2 },
            initial_point: Some(hint),
            ..SolveOptions::default()
        };
        let sol = qcqp::solve(&sub.qcqp, &opts)?;
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::MaxIter => {
                return Err(Error::Subproblem(format!(
                    "inner solver hit its Newton budget (residual {:.3e})",
                    sol.kkt_residual
                )))
            }
            SolveStatus::Infeasible => {
                return Err(Error::Subproblem(format!(
                    "inner subproblem infeasible (slack {:.3e}); threshold too tight for the current auxiliaries",
                    sol.infeasibility.unwrap_or(f64::NAN)
                )))
            }
        }
        let (phi, alpha) = sub.recover(&sol.x);
        state.phi = phi;
        state.alpha = alpha;
        *warm = Some(sol.x);

        let objective = al_objective(state, ch, cfg, kind);
        if (last - objective).abs() <= pdd.inner_tol * (1.0 + objective.abs()) {
            return Ok(objective);
        }
        last = objective;
    }
    Ok(last)
}

fn pdd_run(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    kind: ProblemKind,
    pdd: &PddConfig,
    phi0: ReflectionMatrix,
) -> Result<RunOutcome> {
    let mut state = PddState::new(phi0, pdd.rho0);
    if matches!(kind, ProblemKind::Isac { .. }) {
        // Strictly interior surrogate value at the starting point.
        state.alpha = min_optimal_sinr(&state.phi, ch, cfg)? * (1.0 - 1e-9);
    }
    let mut warm: Option<RVec> = None;
    let mut infeasible_retries = 0usize;
    let mut prev_outer_objective = f64::INFINITY;

    for outer in 0..pdd.max_outer {
        let eps_t = (pdd.eps0 * pdd.eps_decay.powi(outer as i32)).max(pdd.eps_final);
        let mut last_inner = f64::INFINITY;
        let mut objective = f64::NAN;
        for inner in 0..pdd.max_inner {
            match inner_ao(&mut state, ch, cfg, kind, pdd, &mut warm) {
                Ok(_) => {}
                Err(Error::Subproblem(msg)) if infeasible_retries == 0 => {
                    // Tight thresholds can make the first subproblems
                    // infeasible; re-anchor the auxiliaries and duals once.
                    infeasible_retries = 1;
                    project_psi(&mut state)?;
                    for l in &mut state.lambda {
                        l.fill(Complex64::new(0.0, 0.0));
                    }
                    warm = None;
                    inner_ao(&mut state, ch, cfg, kind, pdd, &mut warm)
                        .map_err(|e| Error::Subproblem(format!("{msg}; retry failed: {e}")))?;
                }
                Err(e) => return Err(e),
            }
            project_psi(&mut state)?;
            objective = al_objective(&state, ch, cfg, kind);
            let snapshot = metrics::evaluate(&state.phi, ch, cfg)?;
            state.history.push(TraceRecord {
                outer,
                inner,
                al_objective: objective,
                violation: state.violation(),
                rho: state.rho,
                min_rate: snapshot.min_rate,
                pcrb: snapshot.pcrb,
            });
            if (last_inner - objective).abs() <= pdd.inner_tol * (1.0 + objective.abs()) {
                break;
            }
            last_inner = objective;
        }

        let violation = state.violation();
        let dual_step = outer_update(&mut state, eps_t, pdd.shrink);
        let settled = (prev_outer_objective - objective).abs()
            <= pdd.inner_tol * (1.0 + objective.abs());
        if violation <= pdd.eps_final && dual_step && settled {
            return Ok(RunOutcome {
                state,
                converged: true,
            });
        }
        prev_outer_objective = objective;
        if state.rho < 1e-14 {
            break;
        }
    }
    let converged = state.violation() <= pdd.eps_final;
    Ok(RunOutcome { state, converged })
}

fn start_points(
    first: ReflectionMatrix,
    group_sizes: &[usize],
    pdd: &PddConfig,
) -> Vec<ReflectionMatrix> {
    let mut starts = vec![first];
    for i in 1..pdd.n_starts.max(1) {
        let mut rng =
            ChaCha8Rng::seed_from_u64(pdd.seed.wrapping_add(i as u64).wrapping_mul(0x9E3779B97F4A7C15));
        starts.push(ReflectionMatrix::random(group_sizes, &mut rng));
    }
    starts
}

/// Minimizes the PCRB over block-feasible reflection matrices; the first
/// start is isotropic, further starts are random.
pub fn solve_sensing_only(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    pdd: &PddConfig,
) -> Result<(ReflectionMatrix, f64, Vec<TraceRecord>)> {
    cfg.validate()?;
    let starts = start_points(ReflectionMatrix::identity(&cfg.group_sizes), &cfg.group_sizes, pdd);
    let runs: Vec<Result<(ReflectionMatrix, f64, Vec<TraceRecord>)>> = starts
        .into_par_iter()
        .map(|phi0| {
            let outcome = pdd_run(ch, cfg, ProblemKind::Sensing, pdd, phi0)?;
            let phi = outcome.state.phi.sanitized()?;
            let value = metrics::pcrb(&phi, ch, cfg)?;
            Ok((phi, value, outcome.state.history))
        })
        .collect();
    let mut best: Option<(ReflectionMatrix, f64, Vec<TraceRecord>)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::Subproblem("no sensing start completed".into()))
}

/// Maximizes the minimum expected-rate bound under the PCRB threshold.
///
/// The first start is the sensing-only solution (which also certifies that
/// the threshold is achievable); further starts are random. Returned blocks
/// are symmetrized and unitary-projected before the metrics are evaluated.
pub fn solve_isac(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    pdd: &PddConfig,
) -> Result<(ReflectionMatrix, IsacMetrics, Vec<TraceRecord>)> {
    cfg.validate()?;
    if cfg.users.is_empty() {
        return Err(Error::InvalidConfig(
            "the joint design needs at least one user".into(),
        ));
    }
    let (phi_floor, floor, _) = solve_sensing_only(ch, cfg, pdd)?;
    if floor > cfg.gamma_pcrb {
        return Err(Error::InfeasibleThreshold {
            threshold: cfg.gamma_pcrb,
            floor,
        });
    }
    let gamma = if cfg.p0 > 0.0 {
        let g = (1.0 / cfg.gamma_pcrb - ch.f_p) / (2.0 * cfg.p0 * cfg.block_len as f64);
        (g > 0.0).then_some(g)
    } else {
        None
    };
    let kind = ProblemKind::Isac { gamma };

    let starts = start_points(phi_floor, &cfg.group_sizes, pdd);
    type IsacRun = (ReflectionMatrix, IsacMetrics, Vec<TraceRecord>, bool);
    let runs: Vec<Result<IsacRun>> = starts
        .into_par_iter()
        .map(|phi0| {
            let outcome = pdd_run(ch, cfg, kind, pdd, phi0)?;
            let phi = outcome.state.phi.sanitized()?;
            let m = metrics::evaluate(&phi, ch, cfg)?;
            Ok((phi, m, outcome.state.history, outcome.converged))
        })
        .collect();

    let mut best: Option<(ReflectionMatrix, IsacMetrics, Vec<TraceRecord>, bool)> = None;
    for run in runs {
        let run = match run {
            Ok(r) => r,
            // A failed random start is survivable as long as another start
            // completes.
            Err(e) => {
                if pdd.n_starts <= 1 {
                    return Err(e);
                }
                continue;
            }
        };
        if run.1.pcrb > cfg.gamma_pcrb * (1.0 + pdd.feas_slack) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                (run.3, run.1.min_rate) > (b.3, b.1.min_rate)
            }
        };
        if better {
            best = Some(run);
        }
    }
    let (phi, m, trace, _) = best.ok_or_else(|| {
        Error::Subproblem("no start produced a threshold-feasible reflection matrix".into())
    })?;
    Ok((phi, m, trace))
}

/// Max-min rate design with the target absent: the same pipeline with zero
/// probing power and no Fisher-information constraint.
pub fn solve_maxmin_rate_no_sensing(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    pdd: &PddConfig,
) -> Result<ReflectionMatrix> {
    if cfg.users.is_empty() {
        return Err(Error::InvalidConfig(
            "the rate design needs at least one user".into(),
        ));
    }
    let cfg0 = cfg.with_p0(0.0);
    let kind = ProblemKind::Isac { gamma: None };
    let starts = start_points(ReflectionMatrix::identity(&cfg0.group_sizes), &cfg0.group_sizes, pdd);
    let runs: Vec<Result<(ReflectionMatrix, f64)>> = starts
        .into_par_iter()
        .map(|phi0| {
            let outcome = pdd_run(ch, &cfg0, kind, pdd, phi0)?;
            let phi = outcome.state.phi.sanitized()?;
            let mut min_rate = f64::INFINITY;
            for k in 0..cfg0.num_users() {
                min_rate = min_rate.min(metrics::expected_rate_lower_bound(k, &phi, ch, &cfg0)?);
            }
            Ok((phi, min_rate))
        })
        .collect();
    let mut best: Option<(ReflectionMatrix, f64)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.1 > b.1) {
            best = Some(run);
        }
    }
    Ok(best
        .ok_or_else(|| Error::Subproblem("no rate-design start completed".into()))?
        .0)
}
