//! Von Neumann and conditional entropies, in bits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, tol, CMatrix};
use crate::state::{clamp_spectrum, BipartiteState, Party};

/// All entropic quantities of one bipartite state. Every value is in bits
/// except `op_norm_rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub s: f64,
    pub s_a: f64,
    pub s_b: f64,
    /// `S(A|B) = S - S_B`.
    pub s_a_given_b: f64,
    /// `S(B|A) = S - S_A`.
    pub s_b_given_a: f64,
    /// `min(S_A, S_B)`.
    pub s_min: f64,
    pub op_norm_rho: f64,
    /// `-log₂‖ρ‖∞`, a lower bound on the smooth min-entropy.
    pub h_min_lower: f64,
}

/// `-Σ λ log₂ λ` over a spectrum, with `0 log 0 = 0`.
pub fn shannon_bits(spectrum: &[f64]) -> f64 {
    let s: f64 = spectrum
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    s.max(0.0)
}

/// Von Neumann entropy of a density matrix of any size.
pub fn von_neumann(m: &CMatrix) -> Result<f64> {
    let eig = linalg::hermitian_eigen(m)?;
    let tr: f64 = eig.values.iter().sum();
    if (tr - 1.0).abs() > tol::TRACE {
        return Err(Error::InvalidMatrix(format!("density matrix trace = {tr}")));
    }
    if eig.min() < -tol::PSD {
        return Err(Error::InvalidMatrix(format!(
            "density matrix has eigenvalue {:.3e}",
            eig.min()
        )));
    }
    Ok(shannon_bits(&clamp_spectrum(eig.values)))
}

pub fn entropy_report(state: &BipartiteState) -> Result<EntropyReport> {
    let spectrum = state.spectrum();
    let s = shannon_bits(&spectrum);
    let s_a = von_neumann(&state.marginal(Party::A))?;
    let s_b = von_neumann(&state.marginal(Party::B))?;
    let op_norm_rho = spectrum.last().copied().unwrap_or(0.0);
    Ok(EntropyReport {
        s,
        s_a,
        s_b,
        s_a_given_b: s - s_b,
        s_b_given_a: s - s_a,
        s_min: s_a.min(s_b),
        op_norm_rho,
        h_min_lower: -op_norm_rho.log2(),
    })
}

/// `-log₂‖ρ‖∞`. Only a lower bound on the smooth min-entropy; the supremum over
/// the smoothing ball is never optimized.
pub fn smooth_min_entropy_lower(state: &BipartiteState) -> f64 {
    -state.op_norm().log2()
}
