//! Validated bipartite density matrices and pure states on `C^d ⊗ C^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, tol, CMatrix, CVector, C64};

/// One side of the bipartition. `A` is the slow index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

/// A density matrix on `C^d ⊗ C^d`, Hermitian, unit trace and PSD within [`tol`].
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    d: usize,
    rho: CMatrix,
}

impl BipartiteState {
    pub fn new(d: usize, rho: CMatrix) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidState {
                invariant: "local dimension d >= 2",
                detail: format!("d = {d}"),
            });
        }
        let n = d * d;
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::InvalidState {
                invariant: "matrix is d^2 x d^2",
                detail: format!("d = {d} needs {n}x{n}, got {}x{}", rho.nrows(), rho.ncols()),
            });
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState {
                invariant: "finite entries",
                detail: "matrix contains NaN or infinity".into(),
            });
        }
        let defect = linalg::hermiticity_defect(&rho);
        if defect > tol::HERMITIAN {
            return Err(Error::InvalidState {
                invariant: "Hermitian",
                detail: format!("max |rho - rho†| = {defect:.3e}"),
            });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::InvalidState {
                invariant: "unit trace",
                detail: format!("trace = {tr}"),
            });
        }
        let min_eig = linalg::eigh(&rho).min();
        if min_eig < -tol::PSD {
            return Err(Error::InvalidState {
                invariant: "positive semidefinite",
                detail: format!("minimum eigenvalue = {min_eig:.3e}"),
            });
        }
        Ok(Self { d, rho })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_trusted(d: usize, rho: CMatrix) -> Self {
        debug_assert_eq!(rho.nrows(), d * d);
        Self { d, rho }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let n = d * d;
        Self::from_trusted(d, CMatrix::identity(n, n).scale(1.0 / n as f64))
    }

    /// `|Ψ_d⁺⟩⟨Ψ_d⁺|`.
    pub fn singlet(d: usize) -> Self {
        PureState::singlet(d).density()
    }

    /// `ρ_A ⊗ ρ_B` from two validated `d × d` density matrices.
    pub fn product(rho_a: &CMatrix, rho_b: &CMatrix) -> Result<Self> {
        if rho_a.nrows() != rho_b.nrows() {
            return Err(Error::Dimension(format!(
                "product of {}-dim and {}-dim marginals",
                rho_a.nrows(),
                rho_b.nrows()
            )));
        }
        Self::new(rho_a.nrows(), linalg::tensor(rho_a, rho_b))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `d²`.
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    /// Reduced state on `keep`.
    pub fn marginal(&self, keep: Party) -> CMatrix {
        linalg::partial_trace(&self.rho, self.d, self.d, keep == Party::A)
    }

    /// Eigenvalues ascending, with drift in `[-tol::PSD, 0)` clamped to zero.
    pub fn spectrum(&self) -> Vec<f64> {
        clamp_spectrum(linalg::eigh(&self.rho).values)
    }

    /// `‖ρ‖∞`, the largest eigenvalue.
    pub fn op_norm(&self) -> f64 {
        self.spectrum().last().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_pure(&self, tolerance: f64) -> bool {
        (self.purity() - 1.0).abs() <= tolerance
    }

    /// `⟨Ψ_d⁺|ρ|Ψ_d⁺⟩`.
    pub fn singlet_overlap(&self) -> f64 {
        let d = self.d;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.rho[(i * d + i, j * d + j)];
            }
        }
        acc.re / d as f64
    }

    /// Expectation `⟨v|ρ|v⟩` for a vector of length `d²`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.rho * v)[(0, 0)].re
    }

    /// `(U ⊗ V) ρ (U ⊗ V)†`.
    pub fn local_unitary(&self, u: &CMatrix, v: &CMatrix) -> Self {
        let uv = linalg::tensor(u, v);
        Self::from_trusted(self.d, &uv * &self.rho * uv.adjoint())
    }

    /// `ρ ⊗ ρ` regrouped as a bipartite state on `(A A') ⊗ (B B')`, local dimension `d²`.
    pub fn two_copy(&self) -> Self {
        let d = self.d;
        let big = linalg::tensor(&self.rho, &self.rho);
        // big index ((a, b), (a', b')) -> regrouped ((a, a'), (b, b'))
        let regroup = |idx: usize| {
            let (ab, ab2) = (idx / (d * d), idx % (d * d));
            let (a, b) = (ab / d, ab % d);
            let (a2, b2) = (ab2 / d, ab2 % d);
            (a * d + a2) * d * d + (b * d + b2)
        };
        let n = d.pow(4);
        let mut out = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(regroup(r), regroup(c))] = big[(r, c)];
            }
        }
        Self::from_trusted(d * d, out)
    }
}

pub(crate) fn clamp_spectrum(mut values: Vec<f64>) -> Vec<f64> {
    for v in values.iter_mut() {
        if *v < 0.0 && *v >= -tol::PSD {
            *v = 0.0;
        }
    }
    values
}

/// `|Ψ_d⁺⟩ = d^{-1/2} Σ_i |ii⟩`.
pub fn singlet_vector(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// A normalized pure state on `C^d ⊗ C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    d: usize,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(d: usize, amplitudes: CVector) -> Result<Self> {
        if d < 2 || amplitudes.len() != d * d {
            return Err(Error::InvalidState {
                invariant: "pure state has d^2 amplitudes",
                detail: format!("d = {d}, {} amplitudes", amplitudes.len()),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState {
                invariant: "unit norm",
                detail: format!("norm = {norm}"),
            });
        }
        Ok(Self { d, amplitudes })
    }

    /// Normalizes `amplitudes` before validating.
    pub fn normalized(d: usize, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState {
                invariant: "non-zero amplitudes",
                detail: format!("norm = {norm}"),
            });
        }
        Self::new(d, amplitudes.unscale(norm))
    }

    pub fn singlet(d: usize) -> Self {
        Self { d, amplitudes: singlet_vector(d) }
    }

    /// `|a⟩ ⊗ |b⟩`, each normalized first.
    pub fn product(a: &CVector, b: &CVector) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Dimension(format!("product of {} and {} dims", a.len(), b.len())));
        }
        let v = CVector::from_fn(a.len() * b.len(), |k, _| a[k / b.len()] * b[k % b.len()]);
        Self::normalized(a.len(), v)
    }

    /// Recovers `|φ⟩` (up to a global phase) from a density matrix with purity
    /// within `tolerance` of one.
    pub fn from_density(state: &BipartiteState, tolerance: f64) -> Result<Self> {
        if !state.is_pure(tolerance) {
            return Err(Error::InvalidState {
                invariant: "pure state",
                detail: format!("tr rho^2 = {:.12}", state.purity()),
            });
        }
        let eig = linalg::eigh(state.rho());
        let top = eig.vectors.column(eig.vectors.ncols() - 1).into_owned();
        Self::normalized(state.d(), top)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn density(&self) -> BipartiteState {
        let rho = &self.amplitudes * self.amplitudes.adjoint();
        BipartiteState::from_trusted(self.d, linalg::hermitian_part(&rho))
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distances {
    /// Root fidelity `‖√ρ √σ‖₁`.
    pub fidelity: f64,
    /// `½‖ρ - σ‖₁`.
    pub trace_distance: f64,
    /// `√(2 - 2F)`.
    pub bures_distance: f64,
}

pub fn fidelity_and_distances(rho: &BipartiteState, sigma: &BipartiteState) -> Result<Distances> {
    if rho.d != sigma.d {
        return Err(Error::Dimension(format!(
            "states with local dimensions {} and {}",
            rho.d, sigma.d
        )));
    }
    let fidelity = fidelity(rho.rho(), sigma.rho()).clamp(0.0, 1.0);
    let trace_distance = (0.5 * linalg::trace_norm(&(rho.rho() - sigma.rho()))).clamp(0.0, 1.0);
    Ok(Distances {
        fidelity,
        trace_distance,
        bures_distance: (2.0 - 2.0 * fidelity).max(0.0).sqrt(),
    })
}

fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let sqrt_psd = |m: &CMatrix| linalg::eigh(m).map(|x| x.max(0.0).sqrt());
    linalg::trace_norm(&(sqrt_psd(rho) * sqrt_psd(sigma)))
}
