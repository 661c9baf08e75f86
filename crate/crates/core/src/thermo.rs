//! Work-cost and work-extraction bounds, isotropic states and their
//! nonlocality thresholds.
//!
//! All bound functions take a *lower* bound `F̂ ≤ F(ρ)` on the fully entangled
//! fraction. Every inequality that holds for `F` then also holds for `F̂` in
//! the safe direction. Energies carry their `k_B T` scale explicitly.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::entropy::EntropyReport;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::state::BipartiteState;

/// `k_B T`, positive and finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TemperatureScale(f64);

impl TemperatureScale {
    pub fn new(kbt: f64) -> Result<Self> {
        if kbt.is_finite() && kbt > 0.0 {
            Ok(Self(kbt))
        } else {
            Err(Error::OutOfRange(format!("k_B T must be positive and finite, got {kbt}")))
        }
    }

    pub fn kbt(self) -> f64 {
        self.0
    }
}

impl Default for TemperatureScale {
    fn default() -> Self {
        Self(1.0)
    }
}

/// An energy stored as a multiple of `k_B T` together with the scale, so that
/// rescaling the temperature never perturbs the dimensionless part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Energy {
    pub in_kbt: f64,
    pub kbt: f64,
}

impl Energy {
    pub fn from_kbt_units(in_kbt: f64, t: TemperatureScale) -> Self {
        Self { in_kbt, kbt: t.kbt() }
    }

    pub fn from_value(value: f64, t: TemperatureScale) -> Self {
        Self { in_kbt: value / t.kbt(), kbt: t.kbt() }
    }

    pub fn value(self) -> f64 {
        self.in_kbt * self.kbt
    }

    pub fn scale(self) -> TemperatureScale {
        TemperatureScale(self.kbt)
    }
}

impl std::ops::Add for Energy {
    type Output = Energy;

    fn add(self, rhs: Energy) -> Energy {
        debug_assert_eq!(self.kbt, rhs.kbt, "adding energies at different temperatures");
        Energy { in_kbt: self.in_kbt + rhs.in_kbt, kbt: self.kbt }
    }
}

impl std::ops::Neg for Energy {
    type Output = Energy;

    fn neg(self) -> Energy {
        Energy { in_kbt: -self.in_kbt, kbt: self.kbt }
    }
}

/// `ρ_iso(p) = p |Ψ_d⁺⟩⟨Ψ_d⁺| + (1 - p) I / d²` with `p ∈ [-1/(d²-1), 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsotropicParams {
    pub d: usize,
    pub p: f64,
}

impl IsotropicParams {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::OutOfRange(format!("isotropic state needs d >= 2, got {d}")));
        }
        let (lo, hi) = Self::p_range(d);
        if !(lo..=hi).contains(&p) {
            return Err(Error::OutOfRange(format!(
                "isotropic p = {p} outside [{lo}, {hi}] for d = {d}"
            )));
        }
        Ok(Self { d, p })
    }

    pub(crate) fn new_clamped(d: usize, p: f64) -> Self {
        let (lo, hi) = Self::p_range(d);
        Self { d, p: p.clamp(lo, hi) }
    }

    /// Positivity interval of `p`.
    pub fn p_range(d: usize) -> (f64, f64) {
        (-1.0 / ((d * d) as f64 - 1.0), 1.0)
    }

    pub fn state(&self) -> BipartiteState {
        let n = self.d * self.d;
        let singlet = BipartiteState::singlet(self.d).into_matrix();
        let rho = singlet.scale(self.p) + CMatrix::identity(n, n).scale((1.0 - self.p) / n as f64);
        BipartiteState::from_trusted(self.d, rho)
    }

    /// `F(ρ_iso) = ‖ρ_iso‖∞`.
    pub fn fef(&self) -> f64 {
        isotropic_fef(self)
    }
}

/// `F(ρ_iso(p)) = ‖ρ_iso(p)‖∞`, i.e. `p + (1 - p)/d²` for `p ≥ 0` and `(1 - p)/d²`
/// below zero, where a maximally entangled state orthogonal to `|Ψ_d⁺⟩` wins.
pub fn isotropic_fef(params: &IsotropicParams) -> f64 {
    let n = (params.d * params.d) as f64;
    let p = params.p;
    (p + (1.0 - p) / n).max((1.0 - p) / n)
}

fn applicable(fef: f64, d: usize) -> bool {
    fef > 1.0 / d as f64
}

/// `-log₂(F̂ d)` in bits; `None` unless `F̂ > 1/d`.
pub fn lemma1_rhs(fef_lower: f64, d: usize) -> Option<f64> {
    applicable(fef_lower, d).then(|| -(fef_lower * d as f64).log2())
}

/// Erasure work gain lower bound `k_B T ln(F̂ d) > 0`; `None` unless `F̂ > 1/d`.
pub fn theorem1_bound(fef_lower: f64, d: usize, t: TemperatureScale) -> Option<Energy> {
    applicable(fef_lower, d).then(|| Energy::from_kbt_units((fef_lower * d as f64).ln(), t))
}

/// Erasure cost upper bound `S(A|B) k_B T ln 2`. Negative means guaranteed gain.
pub fn eq4_bound(entropy: &EntropyReport, t: TemperatureScale) -> Energy {
    Energy::from_kbt_units(entropy.s_a_given_b * LN_2, t)
}

/// FEF upper bound `(1/d) exp(W_Er / k_B T)` implied by an erasure gain `W_Er`.
pub fn eq6_fef_upper(w_erasure: Energy, d: usize) -> f64 {
    w_erasure.in_kbt.exp() / d as f64
}

/// Extractable work lower bound `k_B T ln d² - S(ρ) k_B T ln 2`.
pub fn eq12_extract_lower(entropy: &EntropyReport, d: usize, t: TemperatureScale) -> Energy {
    Energy::from_kbt_units((2.0 * (d as f64).log2() - entropy.s) * LN_2, t)
}

/// `Λ = log₂‖ρ‖∞ - [log₂(F̂ d) - S_min]` in bits.
pub fn lambda_gap(op_norm_rho: f64, fef_lower: f64, s_min: f64, d: usize) -> Result<f64> {
    if fef_lower <= 0.0 {
        return Err(Error::OutOfRange(format!("lambda needs F > 0, got {fef_lower}")));
    }
    Ok(op_norm_rho.log2() - ((fef_lower * d as f64).log2() - s_min))
}

/// Inputs of the extraction approximation, all derivable from one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxInputs {
    pub d: usize,
    pub fef_lower: f64,
    pub s_min: f64,
    pub op_norm_rho: f64,
}

impl ApproxInputs {
    pub fn new(d: usize, entropy: &EntropyReport, fef_lower: f64) -> Self {
        Self { d, fef_lower, s_min: entropy.s_min, op_norm_rho: entropy.op_norm_rho }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Theorem2Approx {
    pub epsilon: f64,
    /// `δ_ε = -3 ln ε`.
    pub delta_eps: f64,
    pub lambda_residual: f64,
    /// `F̂ > 1/d` and `|Λ| < δ_ε`.
    pub applicable: bool,
    pub w_total_approx: Option<Energy>,
    pub w_er_approx: Option<Energy>,
    /// `δ_ε k_B T ln 2`, the resolution of both approximations.
    pub error_bar: Energy,
}

pub fn delta_eps(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::OutOfRange(format!("epsilon = {epsilon} outside (0, 0.5]")));
    }
    Ok(-3.0 * epsilon.ln())
}

/// Approximate optimal extractable work and erasure gain, each to within
/// `δ_ε k_B T ln 2`. Only populated where the approximation is applicable.
pub fn theorem2_approx(inputs: &ApproxInputs, epsilon: f64, t: TemperatureScale) -> Result<Theorem2Approx> {
    let delta = delta_eps(epsilon)?;
    let lambda = if inputs.fef_lower > 0.0 {
        lambda_gap(inputs.op_norm_rho, inputs.fef_lower, inputs.s_min, inputs.d)?
    } else {
        f64::INFINITY
    };
    let ok = applicable(inputs.fef_lower, inputs.d) && lambda.abs() < delta;
    let d = inputs.d as f64;
    let (w_total_approx, w_er_approx) = if ok {
        let w_er = (inputs.fef_lower * d).ln();
        let total = 2.0 * d.ln() - inputs.s_min * LN_2 + w_er;
        (Some(Energy::from_kbt_units(total, t)), Some(Energy::from_kbt_units(w_er, t)))
    } else {
        (None, None)
    };
    Ok(Theorem2Approx {
        epsilon,
        delta_eps: delta,
        lambda_residual: lambda,
        applicable: ok,
        w_total_approx,
        w_er_approx,
        error_bar: Energy::from_kbt_units(delta * LN_2, t),
    })
}

/// FEF and erasure-work thresholds of the isotropic family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsotropicThresholds {
    pub d: usize,
    /// `1/d`: entangled (and erasure-gain enabling) above.
    pub fef_entanglement: f64,
    /// `(H_d + H_d d - d) / d²`: unsteerable under projective measurements at or below.
    pub fef_lhs_projective: f64,
    /// `p̃ (1 - 1/d²) + 1/d²`: unsteerable under general POVMs at or below.
    pub fef_lhs_povm: f64,
    /// `k_B T ln((H_d + H_d d - d)/d)`.
    pub w_lhs_projective: Energy,
    /// `k_B T ln(p̃ (d - 1/d) + 1/d)`.
    pub w_lhs_povm: Energy,
    /// The local-hidden-variable threshold has no closed form; absent unless supplied.
    pub fef_lhv: Option<f64>,
    pub w_lhv: Option<Energy>,
}

impl IsotropicThresholds {
    /// Attaches a caller-supplied local-hidden-variable threshold.
    pub fn with_lhv(mut self, fef_lhv: f64, t: TemperatureScale) -> Self {
        self.fef_lhv = Some(fef_lhv);
        self.w_lhv = Some(Energy::from_kbt_units((fef_lhv * self.d as f64).ln(), t));
        self
    }
}

pub fn harmonic(d: usize) -> f64 {
    (1..=d).map(|n| 1.0 / n as f64).sum()
}

/// `p̃ = (3d - 1)/(d² - 1) (1 - 1/d)^d`.
pub fn povm_mixing_threshold(d: usize) -> f64 {
    let df = d as f64;
    (3.0 * df - 1.0) / (df * df - 1.0) * (1.0 - 1.0 / df).powi(d as i32)
}

pub fn isotropic_thresholds(d: usize, t: TemperatureScale) -> Result<IsotropicThresholds> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("thresholds need d >= 2, got {d}")));
    }
    let df = d as f64;
    let h = harmonic(d);
    let p_tilde = povm_mixing_threshold(d);
    let fef_lhs_projective = (h + h * df - df) / (df * df);
    let fef_lhs_povm = p_tilde * (1.0 - 1.0 / (df * df)) + 1.0 / (df * df);
    Ok(IsotropicThresholds {
        d,
        fef_entanglement: 1.0 / df,
        fef_lhs_projective,
        fef_lhs_povm,
        w_lhs_projective: Energy::from_kbt_units(((h + h * df - df) / df).ln(), t),
        w_lhs_povm: Energy::from_kbt_units((p_tilde * (df - 1.0 / df) + 1.0 / df).ln(), t),
        fef_lhv: None,
        w_lhv: None,
    })
}
