//! Dense complex linear algebra on top of `nalgebra`.
//!
//! Composite indices follow one convention everywhere in the crate: the basis
//! vector `|i⟩ ⊗ |m⟩` of `C^da ⊗ C^db` sits at index `i * db + m`, so the first
//! factor (Alice) is the slow index. `nalgebra`'s Kronecker product already
//! uses this layout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Numerical tolerances shared by validation and tests.
pub mod tol {
    /// Max |m - m†| entry for a matrix to count as Hermitian.
    pub const HERMITIAN: f64 = 1e-10;
    pub const TRACE: f64 = 1e-10;
    /// Eigenvalues in `[-PSD, 0)` are clamped to zero.
    pub const PSD: f64 = 1e-10;
    pub const RECONSTRUCTION: f64 = 1e-9;
}

/// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<CMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::InvalidMatrix(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    if let Some(pos) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidMatrix(format!(
            "non-finite entry at row {}, col {}",
            pos / cols.max(1),
            pos % cols.max(1)
        )));
    }
    Ok(CMatrix::from_row_slice(rows, cols, entries))
}

pub fn to_row_major(m: &CMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |m - m†|` over entries.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            for r in 0..n {
                scaled[(r, k)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Validated Hermitian eigen-decomposition; rejects inputs off Hermitian by more than [`tol::HERMITIAN`].
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = hermiticity_defect(m);
    if defect > tol::HERMITIAN {
        return Err(Error::InvalidMatrix(format!(
            "matrix is not Hermitian (max |m - m†| = {defect:.3e})"
        )));
    }
    Ok(eigh(m))
}

/// Eigen-decomposition of the Hermitian part of `m`, without validation.
pub(crate) fn eigh(m: &CMatrix) -> HermitianEigen {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Norms {
    /// Sum of singular values.
    pub trace: f64,
    /// Hilbert-Schmidt (Frobenius) norm.
    pub hs: f64,
    /// Largest singular value.
    pub op: f64,
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().singular_values().iter().copied().collect()
}

pub fn norms(m: &CMatrix) -> Norms {
    let sv = singular_values(m);
    Norms {
        trace: sv.iter().sum(),
        hs: m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        op: sv.iter().copied().fold(0.0, f64::max),
    }
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

pub fn hs_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unitary factor `A B†` of the SVD `m = A Σ B†`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        unreachable!("svd computed with both factors requested")
    };
    u * v_t
}

/// `max |u†u - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.ncols()))
}

/// Partial trace of an operator on `C^da ⊗ C^db`; `keep_first` selects which factor survives.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, keep_first: bool) -> CMatrix {
    debug_assert_eq!(m.nrows(), da * db);
    if keep_first {
        CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum())
    } else {
        CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum())
    }
}

/// Swaps the tensor factors of an operator on `C^da ⊗ C^db`.
pub fn swap_factors(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let n = da * db;
    let perm = |idx: usize| (idx % db) * da + idx / db;
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(perm(r), perm(c))] = m[(r, c)];
        }
    }
    out
}

pub fn real_trace(m: &CMatrix) -> f64 {
    m.trace().re
}
