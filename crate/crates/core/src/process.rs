//! Allowed processes: typed actions on a bipartite state, their work ledger,
//! and the erasure/extraction pipelines built from them.
//!
//! The simulator is a ledger and validator. Erasure and extraction stages
//! carry *declared* work; only level raising/lowering is computed from the
//! state. Energies in actions are multiples of `k_B T`.
//!
//! # Sign convention
//!
//! Moving the levels from `H` to `H'` changes the energy by `tr[ρ(H' - H)]`.
//! Under [`SignConvention::FigureConsistent`] (the default) the observer
//! *gains* `-tr[ρ(H' - H)]`, so lowering an occupied level is a gain, which is
//! what the pipeline totals require. [`SignConvention::Section2Literal`]
//! books `+tr[ρ(H' - H)]` instead.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::entropy::entropy_report;
use crate::error::{Error, Result};
use crate::fef::{twirl, twirl_work_cost};
use crate::linalg::{self, CMatrix, C64};
use crate::state::{fidelity_and_distances, BipartiteState, Party, PureState};
use crate::statefile::{opt_state, square_matrix};
use crate::thermo::{Energy, TemperatureScale};

const DEGENERACY_TOL: f64 = 1e-12;
const STATE_MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    #[default]
    FigureConsistent,
    #[value(name = "section2-literal")]
    #[serde(rename = "section2-literal")]
    Section2Literal,
}

/// Energy per computational basis state of `C^d ⊗ C^d`, in units of `k_B T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HamiltonianSpec {
    levels: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidProcess("energy levels must be non-empty and finite".into()));
        }
        Ok(Self { levels })
    }

    /// All levels at zero.
    pub fn degenerate(dim: usize) -> Self {
        Self { levels: vec![0.0; dim] }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_degenerate(&self) -> bool {
        let (lo, hi) = min_max(&self.levels);
        hi - lo < DEGENERACY_TOL
    }

    fn max_diff(&self, other: &HamiltonianSpec) -> f64 {
        self.levels.iter().zip(&other.levels).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Splits `E_(i,m) = a_i + b_m` if the Hamiltonian has no interaction term.
    fn local_parts(&self, d: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let e = |i: usize, m: usize| self.levels[i * d + m];
        let a: Vec<f64> = (0..d).map(|i| e(i, 0)).collect();
        let b: Vec<f64> = (0..d).map(|m| e(0, m) - e(0, 0)).collect();
        let additive = (0..d).all(|i| (0..d).all(|m| (e(i, m) - a[i] - b[m]).abs() < DEGENERACY_TOL));
        additive.then_some((a, b))
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// `diag(e^{-E_n/kT}) / Z`, shifted by the ground energy for stability.
fn gibbs(levels: &[f64], kbt: f64) -> CMatrix {
    let (lo, _) = min_max(levels);
    let weights: Vec<f64> = levels.iter().map(|e| (-(e - lo) / kbt).exp()).collect();
    let z: f64 = weights.iter().sum();
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        weights.len(),
        weights.iter().map(|w| C64::new(w / z, 0.0)),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
    AB,
}

/// What a [`Action::UnitaryOp`] does to the state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Effect {
    #[default]
    Identity,
    /// `ρ ↦ U ρ U†` for a `d² × d²` unitary.
    Unitary {
        #[serde(with = "square_matrix")]
        matrix: CMatrix,
    },
    /// Resets one party to `|0⟩⟨0|`, keeping the other marginal.
    EraseLocal { party: Party },
    /// `U ⊗ U*` twirl onto the isotropic family.
    Twirl,
}

fn default_success() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Action {
    RaiseLower {
        new_levels: Vec<f64>,
    },
    /// Couples `subsystem` to a bath at `temperature` (a `k_B T` value,
    /// defaulting to the replay scale). Costs no observer work.
    Thermalize {
        subsystem: Subsystem,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<f64>,
    },
    UnitaryOp {
        description: String,
        /// Work gain in units of `k_B T`; negative is a cost.
        declared_work: f64,
        #[serde(default = "default_success")]
        success_prob: f64,
        #[serde(default)]
        effect: Effect,
    },
    /// Replaces the state by a `δ`-close target, failing with probability `δ`.
    DeltaApprox {
        #[serde(default, with = "opt_state", skip_serializing_if = "Option::is_none")]
        target_state: Option<BipartiteState>,
        delta: f64,
    },
}

impl Action {
    pub fn label(&self) -> String {
        match self {
            Action::RaiseLower { .. } => "raise-lower".into(),
            Action::Thermalize { subsystem, .. } => format!("thermalize {subsystem:?}"),
            Action::UnitaryOp { description, .. } => description.clone(),
            Action::DeltaApprox { delta, .. } => format!("delta-approx {delta}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    pub initial: BipartiteState,
    pub hamiltonian: HamiltonianSpec,
    pub actions: Vec<Action>,
}

impl ProcessSpec {
    /// A process starting from the fully degenerate zero Hamiltonian.
    pub fn new(initial: BipartiteState, actions: Vec<Action>) -> Self {
        let hamiltonian = HamiltonianSpec::degenerate(initial.dim());
        Self { initial, hamiltonian, actions }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    ErasureOnA,
    WorkExtraction,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub index: usize,
    pub label: String,
    pub work: Energy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorkLedger {
    pub per_action: Vec<LedgerEntry>,
    pub total: Energy,
    pub success_prob: f64,
    pub classification: Classification,
}

/// Step-by-step replay. [`replay`] wraps it with the whole-process checks;
/// using it directly allows a process to be split into segments.
#[derive(Clone, Debug)]
pub struct Replayer {
    state: BipartiteState,
    hamiltonian: HamiltonianSpec,
    t: TemperatureScale,
    sign: SignConvention,
    entries: Vec<LedgerEntry>,
    success_prob: f64,
    next_index: usize,
}

impl Replayer {
    pub fn new(
        state: BipartiteState,
        hamiltonian: HamiltonianSpec,
        t: TemperatureScale,
        sign: SignConvention,
    ) -> Result<Self> {
        if hamiltonian.levels.len() != state.dim() {
            return Err(Error::InvalidProcess(format!(
                "{} energy levels for a {}-dimensional system",
                hamiltonian.levels.len(),
                state.dim()
            )));
        }
        Ok(Self { state, hamiltonian, t, sign, entries: Vec::new(), success_prob: 1.0, next_index: 0 })
    }

    pub fn state(&self) -> &BipartiteState {
        &self.state
    }

    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.hamiltonian
    }

    pub fn apply(&mut self, action: &Action) -> Result<()> {
        let index = self.next_index;
        let fail = |msg: String| Error::InvalidProcess(format!("action {index}: {msg}"));
        let work = match action {
            Action::RaiseLower { new_levels } => {
                let next = HamiltonianSpec::new(new_levels.clone()).map_err(|e| fail(e.to_string()))?;
                if next.levels.len() != self.hamiltonian.levels.len() {
                    return Err(fail(format!("expected {} levels", self.hamiltonian.levels.len())));
                }
                let shift: f64 = (0..next.levels.len())
                    .map(|n| self.state.rho()[(n, n)].re * (next.levels[n] - self.hamiltonian.levels[n]))
                    .sum();
                self.hamiltonian = next;
                match self.sign {
                    SignConvention::FigureConsistent => -shift,
                    SignConvention::Section2Literal => shift,
                }
            }
            Action::Thermalize { subsystem, temperature } => {
                let kbt = match temperature {
                    Some(k) if k.is_finite() && *k > 0.0 => *k,
                    Some(k) => return Err(fail(format!("bath temperature must be positive, got {k}"))),
                    None => self.t.kbt(),
                };
                self.state = self.thermalized(*subsystem, kbt / self.t.kbt()).map_err(fail)?;
                0.0
            }
            Action::UnitaryOp { declared_work, success_prob, effect, .. } => {
                if !(*success_prob > 0.0 && *success_prob <= 1.0) {
                    return Err(fail(format!("success probability {success_prob} outside (0, 1]")));
                }
                if !declared_work.is_finite() {
                    return Err(fail("declared work must be finite".into()));
                }
                self.state = self.apply_effect(effect).map_err(fail)?;
                self.success_prob *= success_prob;
                *declared_work
            }
            Action::DeltaApprox { target_state, delta } => {
                if !(0.0..1.0).contains(delta) {
                    return Err(fail(format!("delta {delta} outside [0, 1)")));
                }
                if let Some(target) = target_state {
                    let dist = fidelity_and_distances(&self.state, target).map_err(|e| fail(e.to_string()))?;
                    if dist.trace_distance > delta + 1e-12 {
                        return Err(fail(format!(
                            "target is at trace distance {:.6} > delta {delta}",
                            dist.trace_distance
                        )));
                    }
                    self.state = target.clone();
                }
                self.success_prob *= 1.0 - delta;
                0.0
            }
        };
        self.entries.push(LedgerEntry { index, label: action.label(), work: Energy::from_kbt_units(work, self.t) });
        self.next_index += 1;
        Ok(())
    }

    /// `kbt` is relative to the replay scale, matching the level units.
    fn thermalized(&self, subsystem: Subsystem, kbt: f64) -> std::result::Result<BipartiteState, String> {
        let d = self.state.d();
        if subsystem == Subsystem::AB {
            return Ok(BipartiteState::from_trusted(d, gibbs(&self.hamiltonian.levels, kbt)));
        }
        let (a, b) = self
            .hamiltonian
            .local_parts(d)
            .ok_or("local thermalization is undefined for an interacting Hamiltonian")?;
        let rho = match subsystem {
            Subsystem::A => linalg::tensor(&gibbs(&a, kbt), &self.state.marginal(Party::B)),
            _ => linalg::tensor(&self.state.marginal(Party::A), &gibbs(&b, kbt)),
        };
        Ok(BipartiteState::from_trusted(d, rho))
    }

    fn apply_effect(&self, effect: &Effect) -> std::result::Result<BipartiteState, String> {
        let d = self.state.d();
        Ok(match effect {
            Effect::Identity => self.state.clone(),
            Effect::Unitary { matrix } => {
                if matrix.nrows() != self.state.dim() {
                    return Err(format!("unitary must be {0}x{0}", self.state.dim()));
                }
                let defect = linalg::unitarity_defect(matrix);
                if defect > 1e-9 {
                    return Err(format!("matrix is not unitary (defect {defect:.3e})"));
                }
                let rho = matrix * self.state.rho() * matrix.adjoint();
                BipartiteState::from_trusted(d, linalg::hermitian_part(&rho))
            }
            Effect::EraseLocal { party } => {
                let mut zero = CMatrix::zeros(d, d);
                zero[(0, 0)] = C64::new(1.0, 0.0);
                let rho = match party {
                    Party::A => linalg::tensor(&zero, &self.state.marginal(Party::B)),
                    Party::B => linalg::tensor(&self.state.marginal(Party::A), &zero),
                };
                BipartiteState::from_trusted(d, rho)
            }
            Effect::Twirl => twirl(&self.state).state(),
        })
    }

    /// Ledger of the actions applied so far, classified against `initial`.
    pub fn ledger(&self, initial: &BipartiteState) -> WorkLedger {
        let in_kbt = self.entries.iter().map(|e| e.work.in_kbt).sum();
        WorkLedger {
            per_action: self.entries.clone(),
            total: Energy::from_kbt_units(in_kbt, self.t),
            success_prob: self.success_prob,
            classification: classify(initial, &self.state),
        }
    }
}

fn classify(initial: &BipartiteState, last: &BipartiteState) -> Classification {
    let d = initial.d();
    let n = d * d;
    let mixed = CMatrix::identity(n, n).unscale(n as f64);
    if linalg::max_abs_diff(last.rho(), &mixed) <= STATE_MATCH_TOL {
        return Classification::WorkExtraction;
    }
    let mut zero = CMatrix::zeros(d, d);
    zero[(0, 0)] = C64::new(1.0, 0.0);
    let erased = linalg::tensor(&zero, &initial.marginal(Party::B));
    if linalg::max_abs_diff(last.rho(), &erased) <= STATE_MATCH_TOL {
        return Classification::ErasureOnA;
    }
    Classification::Other
}

/// Replays `spec` in order and checks it is an allowed process: non-empty,
/// starting from a degenerate Hamiltonian and returning to it.
pub fn replay(spec: &ProcessSpec, t: TemperatureScale, sign: SignConvention) -> Result<WorkLedger> {
    if spec.actions.is_empty() {
        return Err(Error::InvalidProcess("a process needs at least one action".into()));
    }
    if !spec.hamiltonian.is_degenerate() {
        return Err(Error::InvalidProcess("the initial Hamiltonian must be fully degenerate".into()));
    }
    let mut replayer = Replayer::new(spec.initial.clone(), spec.hamiltonian.clone(), t, sign)?;
    for action in &spec.actions {
        replayer.apply(action)?;
    }
    let drift = replayer.hamiltonian.max_diff(&spec.hamiltonian);
    if drift > DEGENERACY_TOL {
        return Err(Error::InvalidProcess(format!(
            "final Hamiltonian differs from the initial one by {drift:.3e}"
        )));
    }
    Ok(replayer.ledger(&spec.initial))
}

/// Local erasure on the party with the larger marginal entropy, then
/// extraction on each side. The replay total is
/// `k_B T ln d² - S_min k_B T ln 2 + erasure_work`.
pub fn build_fig1_pipeline(
    state: &BipartiteState,
    erasure_work: Energy,
    t: TemperatureScale,
) -> Result<ProcessSpec> {
    let ent = entropy_report(state)?;
    let d = state.d() as f64;
    let erased = if ent.s_a < ent.s_b { Party::B } else { Party::A };
    let kept = erased.other();
    let name = |p: Party| match p {
        Party::A => "A",
        Party::B => "B",
    };
    let sub = |p: Party| match p {
        Party::A => Subsystem::A,
        Party::B => Subsystem::B,
    };
    let actions = vec![
        Action::UnitaryOp {
            description: format!("erasure on {}", name(erased)),
            declared_work: erasure_work.value() / t.kbt(),
            success_prob: 1.0,
            effect: Effect::EraseLocal { party: erased },
        },
        Action::UnitaryOp {
            description: format!("extraction on {}", name(kept)),
            declared_work: (d.log2() - ent.s_min) * LN_2,
            success_prob: 1.0,
            effect: Effect::Identity,
        },
        Action::Thermalize { subsystem: sub(kept), temperature: None },
        Action::UnitaryOp {
            description: format!("extraction on {}", name(erased)),
            declared_work: d.ln(),
            success_prob: 1.0,
            effect: Effect::Identity,
        },
        Action::Thermalize { subsystem: sub(erased), temperature: None },
    ];
    Ok(ProcessSpec::new(state.clone(), actions))
}

/// Twirl a pure state onto the isotropic family, then run the local-erasure
/// pipeline with erasure work `k_B T ln(F[T(φ)] d)`. The total is `k_B T ln d²`
/// for every applicable `φ`.
pub fn build_fig2_pipeline(phi: &PureState, t: TemperatureScale) -> Result<ProcessSpec> {
    let d = phi.d();
    let rho = phi.density();
    let twirled = twirl(&rho);
    let f = twirled.fef();
    if f <= 1.0 / d as f64 {
        return Err(Error::NotApplicable(format!(
            "twirled state has F = {f} <= 1/d = {}",
            1.0 / d as f64
        )));
    }
    let cost = twirl_work_cost(phi, t);
    let tail = build_fig1_pipeline(&twirled.state(), Energy::from_kbt_units((f * d as f64).ln(), t), t)?;
    let mut actions = vec![Action::UnitaryOp {
        description: "twirl".into(),
        declared_work: -cost.in_kbt,
        success_prob: 1.0,
        effect: Effect::Twirl,
    }];
    actions.extend(tail.actions);
    Ok(ProcessSpec::new(rho, actions))
}
