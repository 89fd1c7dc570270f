//! Block-diagonal reflection matrices with symmetric unitary blocks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    self, duplication_matrix, indexing_matrix, project_unitary, random_symmetric_unitary, vech,
    vech_len, CMat, CVec, Complex64,
};

/// Feasibility tolerance recorded for exactly-constructed matrices.
pub const EXACT_FEAS_TOL: f64 = 1e-10;

/// The BD-IRS reflection matrix: one complex square block per element group.
///
/// Feasible instances have blocks that are symmetric (`B = B^T`) and unitary
/// (`B^H B = I`) within `feas_tol`; intermediate optimizer iterates may hold
/// arbitrary blocks, reflected by an infinite stored tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionMatrix {
    group_sizes: Vec<usize>,
    blocks: Vec<CMat>,
    feas_tol: f64,
}

impl ReflectionMatrix {
    /// Wraps blocks after shape validation only; records no feasibility claim.
    pub fn from_blocks(blocks: Vec<CMat>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidConfig("reflection matrix needs at least one block".into()));
        }
        let mut group_sizes = Vec::with_capacity(blocks.len());
        for b in &blocks {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "reflection block must be square and non-empty, got {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            group_sizes.push(b.nrows());
        }
        Ok(Self {
            group_sizes,
            blocks,
            feas_tol: f64::INFINITY,
        })
    }

    /// Wraps blocks and verifies symmetry and unitarity within `feas_tol`.
    pub fn feasible_from_blocks(blocks: Vec<CMat>, feas_tol: f64) -> Result<Self> {
        let mut out = Self::from_blocks(blocks)?;
        let (sym, uni) = (out.symmetry_error(), out.unitarity_error());
        if sym > feas_tol || uni > feas_tol {
            return Err(Error::InvalidConfig(format!(
                "infeasible reflection blocks: symmetry error {sym:.3e}, unitarity error {uni:.3e}, tolerance {feas_tol:.3e}"
            )));
        }
        out.feas_tol = feas_tol;
        Ok(out)
    }

    /// Isotropic reflection: every block an identity matrix.
    pub fn identity(group_sizes: &[usize]) -> Self {
        Self {
            group_sizes: group_sizes.to_vec(),
            blocks: group_sizes.iter().map(|&s| CMat::identity(s, s)).collect(),
            feas_tol: EXACT_FEAS_TOL,
        }
    }

    /// Random reflection with independent Takagi-form symmetric unitary blocks.
    pub fn random(group_sizes: &[usize], rng: &mut impl Rng) -> Self {
        Self {
            group_sizes: group_sizes.to_vec(),
            blocks: group_sizes
                .iter()
                .map(|&s| random_symmetric_unitary(s, rng))
                .collect(),
            feas_tol: EXACT_FEAS_TOL,
        }
    }

    /// Rebuilds the matrix from per-group half-vectorizations via the
    /// indexing/duplication scatter; blocks come out symmetric by
    /// construction and off-block entries are exactly zero.
    pub fn assemble(phi_halves: &[CVec], group_sizes: &[usize]) -> Result<Self> {
        if phi_halves.len() != group_sizes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} half-vectors for {} groups",
                phi_halves.len(),
                group_sizes.len()
            )));
        }
        let m: usize = group_sizes.iter().sum();
        let mut stacked = CVec::zeros(m * m);
        for (g, half) in phi_halves.iter().enumerate() {
            if half.len() != vech_len(group_sizes[g]) {
                return Err(Error::DimensionMismatch(format!(
                    "group {g}: half-vector length {} != {}",
                    half.len(),
                    vech_len(group_sizes[g])
                )));
            }
            let d = duplication_matrix(group_sizes[g]);
            let q = indexing_matrix(group_sizes, g)?;
            stacked += q.apply(&d.apply(half)?)?;
        }
        let full = linalg::unvec(&stacked, m, m)?;
        let mut blocks = Vec::with_capacity(group_sizes.len());
        let mut off = 0;
        for &s in group_sizes {
            blocks.push(full.view((off, off), (s, s)).into_owned());
            off += s;
        }
        Ok(Self {
            group_sizes: group_sizes.to_vec(),
            blocks,
            feas_tol: f64::INFINITY,
        })
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn num_groups(&self) -> usize {
        self.blocks.len()
    }

    /// Total element count `M`.
    pub fn dim(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn block(&self, g: usize) -> &CMat {
        &self.blocks[g]
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn feas_tol(&self) -> f64 {
        self.feas_tol
    }

    /// Dense `M x M` block-diagonal matrix.
    pub fn full(&self) -> CMat {
        let m = self.dim();
        let mut out = CMat::zeros(m, m);
        let mut off = 0;
        for b in &self.blocks {
            out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
            off += b.nrows();
        }
        out
    }

    /// Per-group half-vectorizations `vech(block_g)`.
    pub fn vech_halves(&self) -> Vec<CVec> {
        self.blocks
            .iter()
            .map(|b| vech(&((b + b.transpose()).scale(0.5))).expect("blocks are square"))
            .collect()
    }

    /// Largest `||B - B^T||_F` over blocks.
    pub fn symmetry_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.transpose()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `||B^H B - I||_F` over blocks.
    pub fn unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b.adjoint() * b - CMat::identity(b.nrows(), b.ncols())).norm())
            .fold(0.0, f64::max)
    }

    /// Whether all blocks are feasible within `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.symmetry_error() <= tol && self.unitarity_error() <= tol
    }

    /// Symmetrizes each block and projects it to the nearest unitary matrix;
    /// used before reporting metrics on optimizer output.
    pub fn sanitized(&self) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let sym = (b + b.transpose()).scale(0.5);
                let proj = project_unitary(&sym)?;
                // The nearest unitary to a (complex) symmetric matrix is
                // symmetric; enforce it exactly against rounding.
                Ok((&proj + proj.transpose()).scale(0.5))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::from_blocks(blocks)?;
        out.feas_tol = 1e-8;
        Ok(out)
    }

    /// Multiplies every block by `e^{j beta}`.
    pub fn phase_rotated(&self, beta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, beta);
        Self {
            group_sizes: self.group_sizes.clone(),
            blocks: self.blocks.iter().map(|b| b * phase).collect(),
            feas_tol: self.feas_tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn assemble_single_connected_is_diagonal_phase() {
        let betas = [0.3, -1.2, 2.4];
        let halves: Vec<CVec> = betas
            .iter()
            .map(|&b| CVec::from_element(1, Complex64::from_polar(1.0, b)))
            .collect();
        let phi = ReflectionMatrix::assemble(&halves, &[1, 1, 1]).unwrap();
        let full = phi.full();
        for (i, &b) in betas.iter().enumerate() {
            assert!((full[(i, i)] - Complex64::from_polar(1.0, b)).norm() < 1e-15);
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(full[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
        assert!(phi.is_feasible(1e-12));
    }

    #[test]
    fn assemble_round_trips_known_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sizes = [2usize, 3];
        let phi = ReflectionMatrix::random(&sizes, &mut rng);
        let rebuilt = ReflectionMatrix::assemble(&phi.vech_halves(), &sizes).unwrap();
        assert!((rebuilt.full() - phi.full()).norm() < 1e-14);
    }

    #[test]
    fn assembled_matrix_is_exactly_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let sizes = [3usize, 2];
            let halves: Vec<CVec> = sizes
                .iter()
                .map(|&s| {
                    CVec::from_fn(vech_len(s), |_, _| {
                        crate::linalg::standard_complex_gaussian(&mut rng)
                    })
                })
                .collect();
            let phi = ReflectionMatrix::assemble(&halves, &sizes).unwrap();
            let full = phi.full();
            assert_eq!(full, full.transpose(), "assembly must be exactly symmetric");
        }
    }

    #[test]
    fn sanitized_restores_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let phi = ReflectionMatrix::random(&[4, 4], &mut rng);
        // Perturb the blocks.
        let blocks: Vec<CMat> = phi
            .blocks()
            .iter()
            .map(|b| b + CMat::from_element(4, 4, Complex64::new(1e-4, -2e-4)))
            .collect();
        let rough = ReflectionMatrix::from_blocks(blocks).unwrap();
        assert!(!rough.is_feasible(1e-6));
        let clean = rough.sanitized().unwrap();
        assert!(clean.is_feasible(1e-9));
        assert!((clean.full() - phi.full()).norm() < 1e-2);
    }

    #[test]
    fn feasible_constructor_rejects_bad_blocks() {
        let bad = vec![CMat::identity(2, 2) * Complex64::new(2.0, 0.0)];
        assert!(ReflectionMatrix::feasible_from_blocks(bad, 1e-8).is_err());
    }
}
