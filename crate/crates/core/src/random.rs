//! Seeded random unitaries and states.
//!
//! Every random draw goes through a [`ChaCha8Rng`] derived from `(seed, stream)`,
//! so parallel work units get independent, reproducible streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::state::{BipartiteState, PureState};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Haar-distributed `d × d` unitary: QR of a Ginibre matrix with the phases of `R`'s diagonal absorbed.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    assert!(d >= 1, "unitary dimension must be positive");
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..d {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..d {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Haar-random pure state on `C^d ⊗ C^d`.
pub fn haar_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    let g = ginibre(d * d, 1, rng);
    let v = CVector::from_iterator(d * d, g.iter().copied());
    PureState::normalized(d, v).expect("Gaussian vector is non-zero almost surely")
}

/// Random state from the induced measure: trace out a `rank`-dimensional ancilla
/// from a Haar pure state on `C^{d²} ⊗ C^rank`. `rank = 1` gives a Haar pure state.
pub fn random_state<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<BipartiteState> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("local dimension {d} < 2")));
    }
    if rank == 0 || rank > d * d {
        return Err(Error::OutOfRange(format!("rank {rank} outside 1..={}", d * d)));
    }
    let g = ginibre(d * d, rank, rng);
    let rho = &g * g.adjoint();
    let tr = linalg::real_trace(&rho);
    Ok(BipartiteState::from_trusted(d, linalg::hermitian_part(&rho).unscale(tr)))
}
