//! Singlet-fidelity recovery `Q(A|B)` and the conditional min-entropy.
//!
//! `Q(A|B)_ρ = max_E ⟨Ψ_d⁺|(I ⊗ E)(ρ)|Ψ_d⁺⟩` over channels `E` on B, and
//! `H_min(A|B) = -log₂(Q d)`. The solver works on the dual program
//!
//! ```text
//!   minimize tr σ   subject to   I_A ⊗ σ ⪰ ρ,
//! ```
//!
//! whose optimum equals `Q d`. It has `d²` real unknowns against `d⁴` for the
//! Choi form. A log-barrier Newton method tracks the central path; at every
//! centre `X = μ (I ⊗ σ - ρ)⁻¹` satisfies `tr_A X = I`, which after a small
//! renormalization is the Choi matrix of the adjoint of a feasible recovery
//! channel. The dual value is therefore a certified upper bound and the
//! channel a certified lower bound.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fef::FefResult;
use crate::linalg::{self, CMatrix, C64};
use crate::state::BipartiteState;

/// Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)` of a channel `E: L(C^d_in) → L(C^d_out)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelChoi {
    d_in: usize,
    d_out: usize,
    j: CMatrix,
}

impl ChannelChoi {
    /// Validates complete positivity (PSD to 1e-9) and trace preservation (to 1e-8).
    pub fn new(d_in: usize, d_out: usize, j: CMatrix) -> Result<Self> {
        let n = d_in * d_out;
        if j.nrows() != n || j.ncols() != n {
            return Err(Error::Dimension(format!(
                "Choi matrix for {d_in} -> {d_out} must be {n}x{n}, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        let channel = Self { d_in, d_out, j };
        if linalg::hermiticity_defect(&channel.j) > 1e-9 {
            return Err(Error::InvalidMatrix("Choi matrix is not Hermitian".into()));
        }
        let min_eig = linalg::eigh(&channel.j).min();
        if min_eig < -1e-9 {
            return Err(Error::InvalidMatrix(format!(
                "Choi matrix not PSD (min eigenvalue {min_eig:.3e})"
            )));
        }
        let tp = channel.trace_preservation_defect();
        if tp > 1e-8 {
            return Err(Error::InvalidMatrix(format!(
                "channel not trace preserving (|tr_out J - I| = {tp:.3e})"
            )));
        }
        Ok(channel)
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(&linalg::identity(d))
    }

    /// `X ↦ U X U†`.
    pub fn unitary(u: &CMatrix) -> Self {
        Self::from_kraus_unchecked(u.ncols(), u.nrows(), std::slice::from_ref(u))
    }

    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidMatrix("empty Kraus set".into()))?;
        let (d_out, d_in) = (first.nrows(), first.ncols());
        if kraus.iter().any(|k| k.nrows() != d_out || k.ncols() != d_in) {
            return Err(Error::Dimension("Kraus operators differ in shape".into()));
        }
        let c = Self::from_kraus_unchecked(d_in, d_out, kraus);
        Self::new(d_in, d_out, c.j)
    }

    fn from_kraus_unchecked(d_in: usize, d_out: usize, kraus: &[CMatrix]) -> Self {
        let n = d_in * d_out;
        let mut j = CMatrix::zeros(n, n);
        for k in kraus {
            // vec(K) at index (i, m) = K[m, i]
            let v = linalg::CVector::from_fn(n, |idx, _| k[(idx % d_out, idx / d_out)]);
            j += &v * v.adjoint();
        }
        Self { d_in, d_out, j }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &CMatrix {
        &self.j
    }

    /// `max |tr_out J - I_in|`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let reduced = linalg::partial_trace(&self.j, self.d_in, self.d_out, true);
        linalg::max_abs_diff(&reduced, &linalg::identity(self.d_in))
    }

    /// `E(X)`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let (di, dout) = (self.d_in, self.d_out);
        CMatrix::from_fn(dout, dout, |k, l| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..di {
                for j in 0..di {
                    acc += x[(i, j)] * self.j[(i * dout + k, j * dout + l)];
                }
            }
            acc
        })
    }

    /// `(I ⊗ E)(ρ)` with `E` acting on Bob's factor.
    pub fn apply_on_b(&self, state: &BipartiteState) -> Result<CMatrix> {
        let d = state.d();
        if d != self.d_in {
            return Err(Error::Dimension(format!(
                "channel input dimension {} vs local dimension {d}",
                self.d_in
            )));
        }
        let (di, dout) = (self.d_in, self.d_out);
        let rho = state.rho();
        Ok(CMatrix::from_fn(d * dout, d * dout, |r, c| {
            let (a, k) = (r / dout, r % dout);
            let (b, l) = (c / dout, c % dout);
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..di {
                for j in 0..di {
                    acc += rho[(a * di + i, b * di + j)] * self.j[(i * dout + k, j * dout + l)];
                }
            }
            acc
        }))
    }

    /// `⟨Ψ_d⁺|(I ⊗ E)(ρ)|Ψ_d⁺⟩`.
    pub fn singlet_fidelity(&self, state: &BipartiteState) -> Result<f64> {
        if self.d_out != state.d() {
            return Err(Error::Dimension("recovery channel must map B onto itself".into()));
        }
        let out = self.apply_on_b(state)?;
        let d = state.d();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                acc += out[(a * d + a, b * d + b)];
            }
        }
        Ok(acc.re / d as f64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QResult {
    /// Singlet fidelity of a feasible recovery channel: a lower bound on `Q`.
    pub q_primal: f64,
    /// `tr σ / d` for a strictly feasible `σ`: an upper bound on `Q`.
    pub q_dual: f64,
    /// `-log₂(q_dual d)`, the conservative side.
    pub h_min: f64,
    pub gap: f64,
    pub converged: bool,
    #[serde(skip)]
    pub sigma: CMatrix,
    #[serde(skip)]
    pub channel: ChannelChoi,
}

const MU_FLOOR: f64 = 1e-15;
const MAX_NEWTON: usize = 100;

/// Solves for `Q(A|B)` to a primal/dual gap of `tol`. A barrier breakdown is
/// not an error: the result carries `converged = false` and the wider gap.
pub fn q_function(state: &BipartiteState, tol: f64) -> QResult {
    let d = state.d();
    let basis = hermitian_basis(d);
    let barrier = Barrier { rho: state.rho(), d, basis: &basis };

    let start = state.op_norm() + 0.1;
    let mut x: Vec<f64> = basis_coords_of_identity(d).iter().map(|c| c * start).collect();
    let mut mu = 1.0;
    let mut best: Option<QResult> = None;

    loop {
        if let Some(next) = barrier.center(&x, mu) {
            x = next;
        }
        if let Some(candidate) = barrier.certificate(state, &x, mu) {
            let better = best.as_ref().is_none_or(|b| candidate.gap < b.gap);
            if better {
                best = Some(candidate);
            }
        }
        let done = best.as_ref().is_some_and(|b| b.gap <= tol);
        if done || mu < MU_FLOOR {
            break;
        }
        mu *= 0.5;
    }

    let mut result = best.unwrap_or_else(|| fallback(state));
    result.converged = result.gap <= tol;
    result
}

/// Like [`q_function`], but lifts the primal side to at least the singlet
/// fidelity of the FEF optimizer's unitary recovery `X ↦ U† X U`.
pub fn q_function_seeded(state: &BipartiteState, tol: f64, fef: &FefResult) -> QResult {
    let mut result = q_function(state, tol);
    let channel = ChannelChoi::unitary(&fef.optimal_u.adjoint());
    if let Ok(value) = channel.singlet_fidelity(state) {
        if value > result.q_primal {
            result.q_primal = value;
            result.channel = channel;
            result.gap = result.q_dual - result.q_primal;
            result.converged = result.gap <= tol;
        }
    }
    result
}

fn fallback(state: &BipartiteState) -> QResult {
    // σ = ‖ρ‖∞ I is always feasible; the identity channel always is too.
    let d = state.d();
    let q_dual = state.op_norm();
    let channel = ChannelChoi::identity(d);
    let q_primal = state.singlet_overlap();
    QResult {
        q_primal,
        q_dual,
        h_min: -(q_dual * d as f64).log2(),
        gap: q_dual - q_primal,
        converged: false,
        sigma: linalg::identity(d).scale(q_dual),
        channel,
    }
}

/// Orthonormal (Hilbert-Schmidt) basis of `d × d` Hermitian matrices; the first `d` are `|i⟩⟨i|`.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut e = CMatrix::zeros(d, d);
        e[(i, i)] = C64::new(1.0, 0.0);
        basis.push(e);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut re = CMatrix::zeros(d, d);
            re[(i, j)] = C64::new(h, 0.0);
            re[(j, i)] = C64::new(h, 0.0);
            basis.push(re);
            let mut im = CMatrix::zeros(d, d);
            im[(i, j)] = C64::new(0.0, h);
            im[(j, i)] = C64::new(0.0, -h);
            basis.push(im);
        }
    }
    basis
}

fn basis_coords_of_identity(d: usize) -> Vec<f64> {
    (0..d * d).map(|k| if k < d { 1.0 } else { 0.0 }).collect()
}

struct Barrier<'a> {
    rho: &'a CMatrix,
    d: usize,
    basis: &'a [CMatrix],
}

struct Slack {
    inverse: CMatrix,
    log_det: f64,
}

impl Barrier<'_> {
    fn sigma(&self, x: &[f64]) -> CMatrix {
        let mut s = CMatrix::zeros(self.d, self.d);
        for (b, &c) in self.basis.iter().zip(x) {
            s += b.scale(c);
        }
        s
    }

    fn slack(&self, x: &[f64]) -> Option<Slack> {
        let s = linalg::tensor(&linalg::identity(self.d), &self.sigma(x)) - self.rho;
        let s = linalg::hermitian_part(&s);
        let chol = s.cholesky()?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return None;
        }
        Some(Slack { inverse: chol.inverse(), log_det })
    }

    fn objective(&self, x: &[f64], mu: f64) -> Option<f64> {
        let slack = self.slack(x)?;
        Some(x[..self.d].iter().sum::<f64>() - mu * slack.log_det)
    }

    /// Newton iterations on `tr σ - μ log det(I ⊗ σ - ρ)` from `x`.
    fn center(&self, x: &[f64], mu: f64) -> Option<Vec<f64>> {
        let n = self.basis.len();
        let d = self.d;
        let mut x = x.to_vec();
        let mut f = self.objective(&x, mu)?;
        for _ in 0..MAX_NEWTON {
            let slack = self.slack(&x)?;
            let y = linalg::partial_trace(&slack.inverse, d, d, false);
            let lifted: Vec<CMatrix> = self
                .basis
                .iter()
                .map(|b| &slack.inverse * linalg::tensor(&linalg::identity(d), b))
                .collect();
            let grad: Vec<f64> = self
                .basis
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let tr_b = if k < d { 1.0 } else { 0.0 };
                    tr_b - mu * (&y * b).trace().re
                })
                .collect();
            let mut hess = DMatrix::<f64>::zeros(n, n);
            for k in 0..n {
                for l in k..n {
                    let v = mu * trace_of_product(&lifted[k], &lifted[l]);
                    hess[(k, l)] = v;
                    hess[(l, k)] = v;
                }
            }
            let step = solve_spd(hess, &grad)?;
            let decrement: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
            if decrement <= 0.0 || decrement * 0.5 < 1e-13 * (1.0 + f.abs()) {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-12 {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + alpha * si).collect();
                if let Some(ft) = self.objective(&trial, mu) {
                    if ft <= f - 0.25 * alpha * decrement {
                        x = trial;
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Some(x)
    }

    /// Primal/dual pair at the current iterate.
    fn certificate(&self, state: &BipartiteState, x: &[f64], mu: f64) -> Option<QResult> {
        let d = self.d;
        let slack = self.slack(x)?;
        let sigma = self.sigma(x);
        let q_dual = sigma.trace().re / d as f64;

        let raw = linalg::hermitian_part(&slack.inverse.scale(mu));
        let reduced = linalg::partial_trace(&raw, d, d, false);
        let eig = linalg::eigh(&reduced);
        if eig.min() <= 0.0 {
            return None;
        }
        let fix = linalg::tensor(&linalg::identity(d), &eig.map(|v| 1.0 / v.sqrt()));
        let x_feasible = linalg::hermitian_part(&(&fix * raw * &fix));
        // X = J(E†) for the recovery channel E; J(E) is X conjugated with factors swapped.
        let choi = linalg::swap_factors(&x_feasible.map(|z| z.conj()), d, d);
        let channel = ChannelChoi { d_in: d, d_out: d, j: choi };
        let q_primal = channel.singlet_fidelity(state).ok()?;
        Some(QResult {
            q_primal,
            q_dual,
            h_min: -(q_dual * d as f64).log2(),
            gap: q_dual - q_primal,
            converged: false,
            sigma,
            channel,
        })
    }
}

fn trace_of_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Newton direction `-H⁻¹ g`, ridge-regularizing a degenerate Hessian.
fn solve_spd(hess: DMatrix<f64>, grad: &[f64]) -> Option<Vec<f64>> {
    let n = grad.len();
    let rhs = nalgebra::DVector::from_iterator(n, grad.iter().map(|g| -g));
    let scale = hess.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut h = hess.clone();
        for k in 0..n {
            h[(k, k)] += ridge;
        }
        if let Some(chol) = h.cholesky() {
            let sol = chol.solve(&rhs);
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol.iter().copied().collect());
            }
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 100.0 };
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, random_state, stream_rng};

    #[test]
    fn basis_is_orthonormal() {
        let b = hermitian_basis(3);
        for (i, x) in b.iter().enumerate() {
            assert!(linalg::hermiticity_defect(x) < 1e-15);
            for (j, y) in b.iter().enumerate() {
                let ip = (x.adjoint() * y).trace().re;
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn identity_channel_choi_is_scaled_singlet() {
        let c = ChannelChoi::identity(2);
        let expect = BipartiteState::singlet(2).rho().scale(2.0);
        assert!(linalg::max_abs_diff(c.choi(), &expect) < 1e-15);
        assert!(c.trace_preservation_defect() < 1e-15);
        let rho = random_state(2, 3, &mut stream_rng(3, 0)).unwrap();
        let out = c.apply_on_b(&rho).unwrap();
        assert!(linalg::max_abs_diff(&out, rho.rho()) < 1e-14);
    }

    #[test]
    fn kraus_channel_validation() {
        let mut rng = stream_rng(4, 0);
        let u = haar_unitary(2, &mut rng);
        assert!(ChannelChoi::from_kraus(std::slice::from_ref(&u)).is_ok());
        // amplitude damping
        let g: f64 = 0.3;
        let k0 = linalg::from_row_major(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new((1.0 - g).sqrt(), 0.0)]).unwrap();
        let k1 = linalg::from_row_major(2, 2, &[C64::new(0.0, 0.0), C64::new(g.sqrt(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let ch = ChannelChoi::from_kraus(&[k0.clone(), k1.clone()]).unwrap();
        let x = linalg::from_row_major(2, 2, &[C64::new(0.2, 0.0), C64::new(0.1, 0.3), C64::new(0.1, -0.3), C64::new(0.8, 0.0)]).unwrap();
        let direct = &k0 * &x * k0.adjoint() + &k1 * &x * k1.adjoint();
        assert!(linalg::max_abs_diff(&ch.apply(&x), &direct) < 1e-15);
        // not trace preserving
        assert!(ChannelChoi::from_kraus(&[k0]).is_err());
        // not PSD
        let bad = ChannelChoi::identity(2).choi().scale(-1.0);
        assert!(ChannelChoi::new(2, 2, bad).is_err());
    }

    #[test]
    fn singlet_and_maximally_mixed() {
        let q = q_function(&BipartiteState::singlet(2), 1e-9);
        assert!(q.converged, "{q:?}");
        assert!((q.h_min + 1.0).abs() < 1e-6);
        let q = q_function(&BipartiteState::maximally_mixed(2), 1e-9);
        assert!(q.converged);
        assert!((q.q_dual - 0.25).abs() < 1e-8);
        assert!((q.h_min - 1.0).abs() < 1e-6);
    }

    #[test]
    fn primal_channel_is_valid_and_certificate_consistent() {
        let mut rng = stream_rng(8, 0);
        for d in 2..=3 {
            for rank in [1, 2, d * d] {
                let st = random_state(d, rank, &mut rng).unwrap();
                let q = q_function(&st, 1e-8);
                assert!(q.converged, "d={d} rank={rank} gap={}", q.gap);
                assert!(q.q_primal <= q.q_dual + 1e-7);
                let validated = ChannelChoi::new(d, d, q.channel.choi().clone()).unwrap();
                assert!((validated.singlet_fidelity(&st).unwrap() - q.q_primal).abs() < 1e-12);
                let slack = linalg::tensor(&linalg::identity(d), &q.sigma) - st.rho();
                assert!(linalg::eigh(&slack).min() > -1e-12);
                assert_eq!(q.h_min, -(q.q_dual * d as f64).log2());
            }
        }
    }
}
