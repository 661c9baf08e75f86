//! Fully entangled fraction `F(ρ) = max_U ⟨Ψ_U|ρ|Ψ_U⟩`, `|Ψ_U⟩ = (I ⊗ U)|Ψ_d⁺⟩`,
//! and closed-form `U ⊗ U*` twirling.
//!
//! The maximization is non-convex. [`fef_see_saw`] returns the best local
//! optimum over several starts, which is a certified lower bound on `F`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::random::{haar_unitary, stream_rng};
use crate::state::{BipartiteState, PureState};
use crate::thermo::{Energy, IsotropicParams, TemperatureScale};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeeSawOptions {
    /// Haar-random starts in addition to the identity start.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once one iteration improves the objective by less than this.
    pub tol: f64,
}

impl Default for SeeSawOptions {
    fn default() -> Self {
        Self { restarts: 16, max_iter: 500, tol: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FefResult {
    /// Best singlet fidelity found; a lower bound on `F(ρ)`.
    pub value: f64,
    #[serde(skip)]
    pub optimal_u: CMatrix,
    pub restarts_used: usize,
    pub converged: bool,
}

/// `v(U)` with `v[(i, m)] = U[m, i] / √d`.
pub fn maximally_entangled_vector(u: &CMatrix) -> CVector {
    let d = u.nrows();
    let s = 1.0 / (d as f64).sqrt();
    CVector::from_fn(d * d, |idx, _| u[(idx % d, idx / d)] * s)
}

/// `⟨Ψ_U|ρ|Ψ_U⟩`.
pub fn overlap(state: &BipartiteState, u: &CMatrix) -> f64 {
    state.expectation(&maximally_entangled_vector(u))
}

/// One see-saw trajectory.
#[derive(Clone, Debug)]
pub struct SeeSawRun {
    pub u: CMatrix,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration, starting with the value at the start point.
    pub trajectory: Vec<f64>,
}

/// Alternates `w = ρ v(U)` and `U ← polar(W)`, where `W[m, i] = w[(i, m)]`.
/// For PSD `ρ` the objective never decreases.
pub fn see_saw_from(state: &BipartiteState, start: CMatrix, max_iter: usize, tol: f64) -> SeeSawRun {
    let d = state.d();
    let mut u = start;
    let mut value = overlap(state, &u);
    let mut trajectory = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let w = state.rho() * maximally_entangled_vector(&u);
        let w_mat = CMatrix::from_fn(d, d, |m, i| w[i * d + m]);
        let next = linalg::polar_unitary(&w_mat);
        let next_value = overlap(state, &next);
        trajectory.push(next_value);
        let improvement = next_value - value;
        if next_value >= value {
            u = next;
            value = next_value;
        }
        if improvement < tol {
            converged = true;
            break;
        }
    }
    SeeSawRun { u, value, iterations, converged, trajectory }
}

/// Best see-saw optimum over the identity start and `restarts` Haar-random
/// starts. Start `k` draws from stream `k` of `seed`; the reduction is
/// max-by-value with ties going to the lowest `k`, so results do not depend on
/// thread scheduling.
pub fn fef_see_saw(state: &BipartiteState, opts: &SeeSawOptions, seed: u64) -> Result<FefResult> {
    if opts.restarts == 0 {
        return Err(Error::OutOfRange("see-saw needs at least one restart".into()));
    }
    let d = state.d();
    let runs: Vec<SeeSawRun> = (0..=opts.restarts as u64)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                linalg::identity(d)
            } else {
                haar_unitary(d, &mut stream_rng(seed, k))
            };
            see_saw_from(state, start, opts.max_iter, opts.tol)
        })
        .collect();
    let mut best = &runs[0];
    for run in &runs[1..] {
        if run.value > best.value {
            best = run;
        }
    }
    Ok(FefResult {
        value: best.value,
        optimal_u: best.u.clone(),
        restarts_used: opts.restarts,
        converged: best.converged,
    })
}

const MC_CHUNK: usize = 1024;

/// Largest `⟨Ψ_U|ρ|Ψ_U⟩` over `samples` Haar-random `U`. An independent check on
/// [`fef_see_saw`], never a replacement.
pub fn fef_monte_carlo(state: &BipartiteState, samples: usize, seed: u64) -> f64 {
    let d = state.d();
    let chunks = samples.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            (0..n)
                .map(|_| overlap(state, &haar_unitary(d, &mut rng)))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Closed-form twirl `∫ (U ⊗ U*) ρ (U ⊗ U*)† dU`, which keeps the singlet
/// overlap and lands on the isotropic family.
pub fn twirl(state: &BipartiteState) -> IsotropicParams {
    let d = state.d();
    let n = (d * d) as f64;
    let p = (n * state.singlet_overlap() - 1.0) / (n - 1.0);
    IsotropicParams::new_clamped(d, p)
}

/// Minimal work cost `k_B T ln ‖T(Π_φ)‖∞ = k_B T ln F[T(φ)]` of twirling a pure
/// state. Negative values are gains.
pub fn twirl_work_cost(phi: &PureState, t: TemperatureScale) -> Energy {
    let fef = twirl(&phi.density()).fef();
    Energy::from_kbt_units(fef.ln(), t)
}

/// `(U ⊗ U*) ρ (U ⊗ U*)†`.
pub fn conjugate_pair(state: &BipartiteState, u: &CMatrix) -> BipartiteState {
    state.local_unitary(u, &u.map(|z: C64| z.conj()))
}
