//! Complex-matrix utilities: vectorization maps, Kronecker products, sparse
//! selection (duplication / indexing) matrices, decompositions, random
//! structured matrices and complex-to-real lifting.
//!
//! The vectorization convention is column-major throughout; the index
//! arithmetic of the selection matrices depends on it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Complex64 = num_complex::Complex<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Draws one standard circularly-symmetric complex Gaussian sample,
/// `CN(0, 1)`.
pub fn standard_complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Column-major stacking of the columns of `m`.
pub fn vec_mat(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_mat`] for the given shape.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "unvec: vector length {} != {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMat::from_column_slice(rows, cols, v.as_slice()))
}

/// Half-vectorization: entries on and below the diagonal, column by column.
pub fn vech(m: &CMat) -> Result<CVec> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "vech requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let mut out = CVec::zeros(n * (n + 1) / 2);
    let mut t = 0;
    for col in 0..n {
        for row in col..n {
            out[t] = m[(row, col)];
            t += 1;
        }
    }
    Ok(out)
}

/// Number of half-vectorization coordinates of an `n`-by-`n` matrix.
pub fn vech_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (p, q) = (a.nrows(), a.ncols());
    let (r, s) = (b.nrows(), b.ncols());
    let mut out = CMat::zeros(p * r, q * s);
    for j in 0..q {
        for i in 0..p {
            let aij = a[(i, j)];
            out.view_mut((i * r, j * s), (r, s)).copy_from(&(b * aij));
        }
    }
    out
}

/// Kronecker product of two column vectors, `(u (x) v)[i*len(v)+t] = u_i v_t`.
pub fn kron_vec(u: &CVec, v: &CVec) -> CVec {
    let mut out = CVec::zeros(u.len() * v.len());
    for i in 0..u.len() {
        for t in 0..v.len() {
            out[i * v.len() + t] = u[i] * v[t];
        }
    }
    out
}

// ─── Sparse 0/1 selection matrices ─────────────────────────────────────────────

/// A 0/1 matrix stored as its list of one-positions; products with it are pure
/// gathers/scatters, so the dense form is never materialized in hot paths.
#[derive(Debug, Clone)]
pub struct SelectionMatrix {
    rows: usize,
    cols: usize,
    ones: Vec<(usize, usize)>,
}

impl SelectionMatrix {
    pub fn new(rows: usize, cols: usize, ones: Vec<(usize, usize)>) -> Result<Self> {
        for &(r, c) in &ones {
            if r >= rows || c >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "selection entry ({r},{c}) outside {rows}x{cols}"
                )));
            }
        }
        Ok(Self { rows, cols, ones })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn ones(&self) -> &[(usize, usize)] {
        &self.ones
    }

    /// `y = S x` (scatter-sum).
    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "apply: vector length {} != {}",
                x.len(),
                self.cols
            )));
        }
        let mut y = CVec::zeros(self.rows);
        for &(r, c) in &self.ones {
            y[r] += x[c];
        }
        Ok(y)
    }

    /// `y = S^T x` (gather-sum).
    pub fn apply_transpose(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "apply_transpose: vector length {} != {}",
                x.len(),
                self.rows
            )));
        }
        let mut y = CVec::zeros(self.cols);
        for &(r, c) in &self.ones {
            y[c] += x[r];
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> RMat {
        let mut out = RMat::zeros(self.rows, self.cols);
        for &(r, c) in &self.ones {
            out[(r, c)] = 1.0;
        }
        out
    }
}

/// Duplication matrix `D` of shape `m_g^2 x m_g(m_g+1)/2` with
/// `D vech(S) = vec(S)` for every symmetric `S`.
pub fn duplication_matrix(m_g: usize) -> SelectionMatrix {
    assert!(m_g >= 1);
    let mut ones = Vec::with_capacity(m_g * m_g);
    let mut t = 0;
    for n in 0..m_g {
        for m in n..m_g {
            ones.push((n * m_g + m, t));
            if m != n {
                ones.push((m * m_g + n, t));
            }
            t += 1;
        }
    }
    SelectionMatrix::new(m_g * m_g, vech_len(m_g), ones).expect("indices in range by construction")
}

/// Indexing matrix `Q_g` of shape `M^2 x M_g^2` scattering `vec(block_g)` into
/// `vec(full)` for a block-diagonal matrix with the given group sizes.
/// `g` is zero-based.
pub fn indexing_matrix(group_sizes: &[usize], g: usize) -> Result<SelectionMatrix> {
    if g >= group_sizes.len() {
        return Err(Error::DimensionMismatch(format!(
            "group index {g} out of range for {} groups",
            group_sizes.len()
        )));
    }
    let m_total: usize = group_sizes.iter().sum();
    let m_g = group_sizes[g];
    let m_hat: usize = group_sizes[..g].iter().sum();
    let mut ones = Vec::with_capacity(m_g * m_g);
    for n in 0..m_g {
        for m in 0..m_g {
            let i1 = (m_hat + n) * m_total + m_hat + m;
            let i2 = n * m_g + m;
            ones.push((i1, i2));
        }
    }
    SelectionMatrix::new(m_total * m_total, m_g * m_g, ones)
}

// ─── Random structured matrices ────────────────────────────────────────────────

/// Haar-distributed random unitary matrix: QR of a complex Gaussian matrix
/// with the R-diagonal phases absorbed into Q.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    assert!(n >= 1);
    let entries: Vec<Complex64> = (0..n * n).map(|_| standard_complex_gaussian(rng)).collect();
    let a = CMat::from_column_slice(n, n, &entries);
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random symmetric unitary matrix in Takagi form `U U^T` with Haar `U`.
pub fn random_symmetric_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let u = random_unitary(n, rng);
    &u * u.transpose()
}

// ─── Decompositions ────────────────────────────────────────────────────────────

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// descending and a numerical rank.
#[derive(Debug, Clone)]
pub struct HermitianEvd {
    /// Eigenvalues in descending order.
    pub values: RVec,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: CMat,
    /// Count of eigenvalues above `rank_tol * max(values, 0)`.
    pub rank: usize,
}

/// Relative eigenvalue cutoff used when callers do not supply one.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Decomposes a Hermitian matrix; fails if the input deviates from Hermitian
/// symmetry by more than `1e-10` relative to its norm.
pub fn hermitian_evd(a: &CMat, rank_tol: f64) -> Result<HermitianEvd> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "hermitian_evd requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let deviation = (a - a.adjoint()).norm();
    if deviation > 1e-10 * (1.0 + a.norm()) {
        return Err(Error::NonHermitian(deviation));
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = RVec::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let max = values[0].max(0.0);
    let rank = values.iter().filter(|&&v| v > rank_tol * max).count();
    Ok(HermitianEvd {
        values,
        vectors,
        rank,
    })
}

impl HermitianEvd {
    /// Reconstructs the decomposed matrix (all eigenvalues, not rank-truncated).
    pub fn reconstruct(&self) -> CMat {
        let d = CMat::from_diagonal(&self.values.map(|v| Complex64::new(v, 0.0)));
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Thin complex SVD `a = U diag(S) V^H`, singular values descending.
pub fn svd(a: &CMat) -> Result<(CMat, RVec, CMat)> {
    let svd = a.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::LinearSolve("SVD did not produce U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::LinearSolve("SVD did not produce V^H".into()))?;
    Ok((u, svd.singular_values, v_t.adjoint()))
}

/// Frobenius-nearest unitary matrix to a square `a`: with `a = U S V^H`,
/// returns `U V^H`.
pub fn project_unitary(a: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "project_unitary requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let decomp = a.clone().svd(true, true);
    let u = decomp
        .u
        .ok_or_else(|| Error::LinearSolve("SVD did not produce U".into()))?;
    let v_t = decomp
        .v_t
        .ok_or_else(|| Error::LinearSolve("SVD did not produce V^H".into()))?;
    Ok(u * v_t)
}

// ─── Complex-to-real lifting ───────────────────────────────────────────────────

/// Lifts the complex quadratic form `z^H A z - 2 Re{q^H z} + c` (Hermitian
/// `A`) to a real form `x^T P x + b^T x + c` over `x = [Re z; Im z]`, with
/// `P = [[Re A, -Im A], [Im A, Re A]]` and `b = -2 [Re q; Im q]`.
pub fn lift_to_real(a: &CMat, q: &CVec, c: f64) -> Result<(RMat, RVec, f64)> {
    let n = a.nrows();
    if a.ncols() != n || q.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "lift_to_real: quadratic {}x{}, linear length {}",
            a.nrows(),
            a.ncols(),
            q.len()
        )));
    }
    let deviation = (a - a.adjoint()).norm();
    if deviation > 1e-10 * (1.0 + a.norm()) {
        return Err(Error::NonHermitian(deviation));
    }
    let mut p = RMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let re = a[(i, j)].re;
            let im = a[(i, j)].im;
            p[(i, j)] = re;
            p[(n + i, n + j)] = re;
            p[(i, n + j)] = -im;
            p[(n + i, j)] = im;
        }
    }
    let mut b = RVec::zeros(2 * n);
    for i in 0..n {
        b[i] = -2.0 * q[i].re;
        b[n + i] = -2.0 * q[i].im;
    }
    Ok((p, b, c))
}

/// Lifts a complex factor `F` (so that `A = F^H F`) to a real factor
/// `[[Re F, -Im F], [Im F, Re F]]` with `||F~ x|| = ||F z||` for
/// `x = [Re z; Im z]`.
pub fn lift_factor(f: &CMat) -> RMat {
    let (r, n) = (f.nrows(), f.ncols());
    let mut out = RMat::zeros(2 * r, 2 * n);
    for j in 0..n {
        for i in 0..r {
            let re = f[(i, j)].re;
            let im = f[(i, j)].im;
            out[(i, j)] = re;
            out[(r + i, n + j)] = re;
            out[(i, n + j)] = -im;
            out[(r + i, j)] = im;
        }
    }
    out
}

/// Splits a complex vector into the lifted real layout `[Re z; Im z]`.
pub fn lift_vector(z: &CVec) -> RVec {
    let n = z.len();
    let mut out = RVec::zeros(2 * n);
    for i in 0..n {
        out[i] = z[i].re;
        out[n + i] = z[i].im;
    }
    out
}

/// Inverse of [`lift_vector`].
pub fn unlift_vector(x: &RVec) -> CVec {
    let n = x.len() / 2;
    CVec::from_fn(n, |i, _| Complex64::new(x[i], x[n + i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
        let entries: Vec<Complex64> = (0..rows * cols)
            .map(|_| standard_complex_gaussian(rng))
            .collect();
        CMat::from_column_slice(rows, cols, &entries)
    }

    #[test]
    fn vec_is_column_major() {
        let m = CMat::from_column_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(4.0, 0.0),
            ],
        );
        let v = vec_mat(&m);
        assert_eq!(v[0].re, 1.0);
        assert_eq!(v[1].re, 2.0);
        assert_eq!(v[2].re, 3.0);
        assert_eq!(v[3].re, 4.0);
    }

    #[test]
    fn unvec_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_cmat(3, 4, &mut rng);
        let back = unvec(&vec_mat(&m), 3, 4).unwrap();
        assert_eq!(m, back);
        assert!(unvec(&vec_mat(&m), 4, 4).is_err());
    }

    #[test]
    fn vech_keeps_lower_triangle() {
        let a = Complex64::new(1.0, -2.0);
        let b = Complex64::new(0.5, 3.0);
        let d = Complex64::new(-4.0, 0.25);
        let m = CMat::from_column_slice(2, 2, &[a, b, b, d]);
        let h = vech(&m).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h[0], a);
        assert_eq!(h[1], b);
        assert_eq!(h[2], d);
    }

    #[test]
    fn kron_identity_cases() {
        let i2 = CMat::identity(2, 2);
        assert_eq!(kron(&i2, &i2), CMat::identity(4, 4));
        let a = CMat::from_element(1, 1, Complex64::new(2.0, 1.0));
        let b = CMat::from_element(1, 1, Complex64::new(-1.0, 3.0));
        let ab = kron(&a, &b);
        assert_eq!(ab[(0, 0)], Complex64::new(2.0, 1.0) * Complex64::new(-1.0, 3.0));
    }

    #[test]
    fn kron_vectorization_identity() {
        // vec(A X B) = (B^T (x) A) vec(X)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_cmat(2, 2, &mut rng);
            let x = random_cmat(2, 2, &mut rng);
            let b = random_cmat(2, 2, &mut rng);
            let lhs = vec_mat(&(&a * &x * &b));
            let rhs = kron(&b.transpose(), &a) * vec_mat(&x);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn duplication_matrix_small_cases() {
        let d1 = duplication_matrix(1);
        assert_eq!(d1.to_dense(), RMat::from_element(1, 1, 1.0));

        let d2 = duplication_matrix(2);
        let h = CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(3.0, 0.0),
        ]);
        let v = d2.apply(&h).unwrap();
        let want = [1.0, 2.0, 2.0, 3.0];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(v[i].re, *w);
        }
    }

    #[test]
    fn duplication_matrix_reproduces_vec_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = duplication_matrix(4);
        for _ in 0..100 {
            let a = random_cmat(4, 4, &mut rng);
            let s = &a + a.transpose();
            let lhs = d.apply(&vech(&s).unwrap()).unwrap();
            let rhs = vec_mat(&s);
            // Pure index selection: bitwise equality, no floating error.
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn indexing_matrix_single_group_is_identity() {
        let q = indexing_matrix(&[3], 0).unwrap();
        assert_eq!(q.to_dense(), RMat::identity(9, 9));
    }

    #[test]
    fn indexing_matrix_two_singleton_groups() {
        let q2 = indexing_matrix(&[1, 1], 1).unwrap();
        assert_eq!(q2.nrows(), 4);
        assert_eq!(q2.ncols(), 1);
        // One-based (4, 1) position from the index arithmetic.
        assert_eq!(q2.ones(), &[(3, 0)]);
        assert!(indexing_matrix(&[1, 1], 2).is_err());
    }

    #[test]
    fn indexing_matrices_assemble_block_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sizes = [2usize, 3, 1];
        let m: usize = sizes.iter().sum();
        let blocks: Vec<CMat> = sizes.iter().map(|&s| random_cmat(s, s, &mut rng)).collect();
        let mut assembled = CVec::zeros(m * m);
        for (g, block) in blocks.iter().enumerate() {
            let q = indexing_matrix(&sizes, g).unwrap();
            assembled += q.apply(&vec_mat(block)).unwrap();
        }
        let mut full = CMat::zeros(m, m);
        let mut off = 0;
        for (g, block) in blocks.iter().enumerate() {
            full.view_mut((off, off), (sizes[g], sizes[g])).copy_from(block);
            off += sizes[g];
        }
        assert_eq!(assembled, vec_mat(&full));
    }

    #[test]
    fn random_symmetric_unitary_satisfies_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let phi = random_symmetric_unitary(1, &mut rng);
        assert!((phi[(0, 0)].norm() - 1.0).abs() < 1e-12);

        for n in [4usize, 16, 64] {
            let phi = random_symmetric_unitary(n, &mut rng);
            let unitary_err = (phi.adjoint() * &phi - CMat::identity(n, n)).norm();
            let sym_err = (&phi - phi.transpose()).norm();
            assert!(unitary_err < 1e-10, "n={n}: unitary error {unitary_err:.3e}");
            assert!(sym_err < 1e-10, "n={n}: symmetry error {sym_err:.3e}");
        }
    }

    #[test]
    fn random_symmetric_unitary_is_seed_deterministic() {
        let a = random_symmetric_unitary(5, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_symmetric_unitary(5, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn hermitian_evd_identity_and_rank_one() {
        let evd = hermitian_evd(&CMat::identity(4, 4), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(evd.rank, 4);
        for v in evd.values.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_cmat(5, 1, &mut rng);
        let outer = &v * v.adjoint();
        let evd = hermitian_evd(&outer, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(evd.rank, 1);
        assert!((evd.values[0] - v.norm_squared()).abs() < 1e-10);
    }

    #[test]
    fn hermitian_evd_reconstructs_psd_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [3usize, 8, 16] {
            let b = random_cmat(n, n, &mut rng);
            let a = &b * b.adjoint();
            let evd = hermitian_evd(&a, DEFAULT_RANK_TOL).unwrap();
            assert!((evd.reconstruct() - &a).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn hermitian_evd_rejects_non_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let a = random_cmat(3, 3, &mut rng);
        assert!(matches!(
            hermitian_evd(&a, DEFAULT_RANK_TOL),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn project_unitary_fixes_unitary_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(4, &mut rng);
        let p = project_unitary(&u).unwrap();
        assert!((&p - &u).norm() < 1e-12);

        let two_i = CMat::identity(2, 2) * Complex64::new(2.0, 0.0);
        let p = project_unitary(&two_i).unwrap();
        assert!((p - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn project_unitary_beats_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_cmat(3, 3, &mut rng);
        let best = project_unitary(&a).unwrap();
        let best_dist = (&best - &a).norm();
        assert!((best.adjoint() * &best - CMat::identity(3, 3)).norm() < 1e-12);
        for _ in 0..1000 {
            let w = random_unitary(3, &mut rng);
            assert!((w - &a).norm() >= best_dist - 1e-12);
        }
    }

    #[test]
    fn project_unitary_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_cmat(6, 6, &mut rng);
        let once = project_unitary(&a).unwrap();
        let twice = project_unitary(&once).unwrap();
        assert!((twice - &once).norm() < 1e-10);
    }

    #[test]
    fn lift_to_real_scalar_modulus() {
        let a = CMat::identity(1, 1);
        let q = CVec::zeros(1);
        let (p, b, c) = lift_to_real(&a, &q, 0.0).unwrap();
        let x = RVec::from_vec(vec![1.0, 1.0]); // z = 1 + j
        let value = (x.transpose() * &p * &x)[(0, 0)] + b.dot(&x) + c;
        assert!((value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lift_to_real_matches_complex_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let b0 = random_cmat(4, 4, &mut rng);
            let a = &b0 * b0.adjoint();
            let q = random_cmat(4, 1, &mut rng).column(0).into_owned();
            let z = random_cmat(4, 1, &mut rng).column(0).into_owned();
            let c = 0.7;
            let complex_val =
                (z.adjoint() * &a * &z)[(0, 0)].re - 2.0 * (q.adjoint() * &z)[(0, 0)].re + c;
            let (p, b, c2) = lift_to_real(&a, &q, c).unwrap();
            let x = lift_vector(&z);
            let real_val = (x.transpose() * &p * &x)[(0, 0)] + b.dot(&x) + c2;
            assert!((complex_val - real_val).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_to_real_doubles_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let b0 = random_cmat(3, 3, &mut rng);
        let a = &b0 * b0.adjoint();
        let (p, _, _) = lift_to_real(&a, &CVec::zeros(3), 0.0).unwrap();
        let mut complex_eigs: Vec<f64> = hermitian_evd(&a, DEFAULT_RANK_TOL)
            .unwrap()
            .values
            .iter()
            .copied()
            .collect();
        let mut lifted_eigs: Vec<f64> = p.symmetric_eigen().eigenvalues.iter().copied().collect();
        complex_eigs.sort_by(f64::total_cmp);
        lifted_eigs.sort_by(f64::total_cmp);
        for (i, ev) in complex_eigs.iter().enumerate() {
            assert!((lifted_eigs[2 * i] - ev).abs() < 1e-10);
            assert!((lifted_eigs[2 * i + 1] - ev).abs() < 1e-10);
        }
    }

    #[test]
    fn lift_factor_preserves_norm_and_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let f = random_cmat(3, 5, &mut rng);
        let z = random_cmat(5, 1, &mut rng).column(0).into_owned();
        let lifted = lift_factor(&f);
        let x = lift_vector(&z);
        let direct = (&f * &z).norm_squared();
        let via_lift = (lifted * &x).norm_squared();
        assert!((direct - via_lift).abs() < 1e-12);

        let gram = f.adjoint() * &f;
        let (p, _, _) = lift_to_real(&gram, &CVec::zeros(5), 0.0).unwrap();
        let lf = lift_factor(&f);
        assert!((lf.transpose() * &lf - p).norm() < 1e-12);
    }
}
