//! The per-state bounds report and its annotated JSON form.
//!
//! In the annotated form every number is an object
//! `{"value", "units", "paper_eq", "provenance"}`. `paper_eq` names the
//! formula the number comes from (`"plumbing"` for inputs and bookkeeping);
//! `provenance` is `formula`, `optimizer` or `bound`. Energies are multiples
//! of `k_B T`; the scale is the top-level `kbt` entry.

use std::f64::consts::LN_2;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::entropy::{entropy_report, EntropyReport};
use crate::error::Result;
use crate::fef::{fef_see_saw, FefResult, SeeSawOptions};
use crate::qsdp::{q_function_seeded, QResult};
use crate::state::BipartiteState;
use crate::thermo::{
    eq12_extract_lower, eq4_bound, eq6_fef_upper, isotropic_thresholds, lemma1_rhs, theorem1_bound,
    theorem2_approx, ApproxInputs, Energy, IsotropicThresholds, TemperatureScale, Theorem2Approx,
};

/// JSON schema of [`BoundsReport::annotated`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/bounds_report.schema.json");

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportConfig {
    pub seesaw: SeeSawOptions,
    pub seed: u64,
    pub tol: f64,
    pub epsilon: f64,
    pub t: TemperatureScale,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            seesaw: SeeSawOptions::default(),
            seed: 0,
            tol: 1e-8,
            epsilon: 0.05,
            t: TemperatureScale::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub d: usize,
    pub kbt: f64,
    pub entropy: EntropyReport,
    pub singlet_overlap: f64,
    pub fef: FefResult,
    pub q: QResult,
    /// `S(A|B) - H_min(A|B)`, non-negative for every state.
    pub entropic_gap: f64,
    pub lemma1_rhs: Option<f64>,
    pub thm1_erasure_gain_lower: Option<Energy>,
    pub eq4_erasure_cost_upper: Energy,
    /// `(1/d) exp(W/k_B T)` at the erasure gain `W = -S(A|B) k_B T ln 2`, when `F̂ > 1/d`.
    pub eq6_fef_upper: Option<f64>,
    /// Whether that upper bound actually lies above `F̂`.
    pub eq6_dominates_fef: Option<bool>,
    pub eq12_extract_lower: Energy,
    pub thm2: Theorem2Approx,
    pub thresholds: IsotropicThresholds,
}

pub fn bounds_report(state: &BipartiteState, cfg: &ReportConfig) -> Result<BoundsReport> {
    let d = state.d();
    let t = cfg.t;
    let entropy = entropy_report(state)?;
    let fef = fef_see_saw(state, &cfg.seesaw, cfg.seed)?;
    let q = q_function_seeded(state, cfg.tol, &fef);
    let f = fef.value;
    let thm1 = theorem1_bound(f, d, t);
    let eq6 = thm1.map(|_| eq6_fef_upper(Energy::from_kbt_units(-entropy.s_a_given_b * LN_2, t), d));
    Ok(BoundsReport {
        d,
        kbt: t.kbt(),
        entropy,
        singlet_overlap: state.singlet_overlap(),
        entropic_gap: entropy.s_a_given_b - q.h_min,
        lemma1_rhs: lemma1_rhs(f, d),
        thm1_erasure_gain_lower: thm1,
        eq4_erasure_cost_upper: eq4_bound(&entropy, t),
        eq6_fef_upper: eq6,
        eq6_dominates_fef: eq6.map(|u| u >= f - 1e-12),
        eq12_extract_lower: eq12_extract_lower(&entropy, d, t),
        thm2: theorem2_approx(&ApproxInputs::new(d, &entropy, f), cfg.epsilon, t)?,
        thresholds: isotropic_thresholds(d, t)?,
        fef,
        q,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Formula,
    Optimizer,
    Bound,
}

/// One annotated number. `None` serializes as `null` (not applicable).
pub fn tagged(value: Option<f64>, units: &str, paper_eq: &str, provenance: Provenance) -> Value {
    json!({ "value": value, "units": units, "paper_eq": paper_eq, "provenance": provenance })
}

/// An annotated integer count.
pub fn tagged_count(n: usize, paper_eq: &str) -> Value {
    json!({ "value": n, "units": "count", "paper_eq": paper_eq, "provenance": Provenance::Formula })
}

fn bits(v: f64, eq: &str, p: Provenance) -> Value {
    tagged(Some(v), "bits", eq, p)
}

fn energy(e: Option<Energy>, eq: &str, p: Provenance) -> Value {
    tagged(e.map(|e| e.in_kbt), "kBT", eq, p)
}

fn plain(v: f64, units: &str, eq: &str, p: Provenance) -> Value {
    tagged(Some(v), units, eq, p)
}

impl BoundsReport {
    pub fn annotated(&self) -> Value {
        use Provenance::*;
        let e = &self.entropy;
        let th = &self.thresholds;
        let thm2 = &self.thm2;
        json!({
            "kbt": plain(self.kbt, "energy", "plumbing", Formula),
            "d": tagged_count(self.d, "plumbing"),
            "entropy": {
                "S": bits(e.s, "eq.1", Formula),
                "S_A": bits(e.s_a, "eq.1", Formula),
                "S_B": bits(e.s_b, "eq.1", Formula),
                "S_AgivenB": bits(e.s_a_given_b, "eq.1", Formula),
                "S_BgivenA": bits(e.s_b_given_a, "eq.1", Formula),
                "S_min": bits(e.s_min, "thm.2", Formula),
                "opNormRho": plain(e.op_norm_rho, "dimensionless", "eq.19", Formula),
                "hMinLower": bits(e.h_min_lower, "eq.19", Bound),
                "lower_bound": true,
            },
            "fef": {
                "value": plain(self.fef.value, "dimensionless", "eq.2", Optimizer),
                "singletOverlap": plain(self.singlet_overlap, "dimensionless", "eq.2", Formula),
                "restartsUsed": tagged_count(self.fef.restarts_used, "plumbing"),
                "converged": self.fef.converged,
            },
            "q": {
                "qPrimal": plain(self.q.q_primal, "dimensionless", "eq.A3", Optimizer),
                "qDual": plain(self.q.q_dual, "dimensionless", "eq.A3", Optimizer),
                "hMin": bits(self.q.h_min, "eq.A2", Bound),
                "gap": plain(self.q.gap, "dimensionless", "eq.A3", Optimizer),
                "entropicGap": bits(self.entropic_gap, "eq.A2", Bound),
                "converged": self.q.converged,
            },
            "lemma1_rhs": tagged(self.lemma1_rhs, "bits", "lemma.1", Bound),
            "thm1_erasureGainLower": energy(self.thm1_erasure_gain_lower, "thm.1", Bound),
            "eq4_erasureCostUpper": energy(Some(self.eq4_erasure_cost_upper), "eq.4", Bound),
            "eq6_fefUpper": tagged(self.eq6_fef_upper, "dimensionless", "eq.6", Bound),
            "eq6_dominatesFef": self.eq6_dominates_fef,
            "eq12_extractLower": energy(Some(self.eq12_extract_lower), "eq.12", Bound),
            "thm2": {
                "applicable": thm2.applicable,
                "epsilon": plain(thm2.epsilon, "dimensionless", "plumbing", Formula),
                "lambda": bits(thm2.lambda_residual, "thm.2", Formula),
                "deltaEps": bits(thm2.delta_eps, "thm.2", Formula),
                "wTotalApprox": energy(thm2.w_total_approx, "eq.13", Formula),
                "wErApprox": energy(thm2.w_er_approx, "eq.14", Formula),
                "errorBar": energy(Some(thm2.error_bar), "thm.2", Formula),
            },
            "thresholds": thresholds_json(th),
        })
    }
}

pub fn thresholds_json(th: &IsotropicThresholds) -> Value {
    use Provenance::Formula;
    json!({
        "fefEntanglement": plain(th.fef_entanglement, "dimensionless", "thm.1", Formula),
        "fefLhsProjective": plain(th.fef_lhs_projective, "dimensionless", "eq.11", Formula),
        "fefLhsPovm": plain(th.fef_lhs_povm, "dimensionless", "eq.10", Formula),
        "fefLhv": tagged(th.fef_lhv, "dimensionless", "eq.9", Formula),
        "wLhsProjective": energy(Some(th.w_lhs_projective), "eq.11", Formula),
        "wLhsPovm": energy(Some(th.w_lhs_povm), "eq.10", Formula),
        "wLhv": energy(th.w_lhv, "eq.9", Formula),
    })
}

/// A flattened annotated number or flag.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub key: String,
    pub value: String,
    pub units: String,
    pub paper_eq: String,
    pub provenance: String,
}

/// Flattens an annotated document into dotted-key rows, in document order.
pub fn flatten(doc: &Value) -> Vec<Row> {
    let mut rows = Vec::new();
    walk(doc, String::new(), &mut rows);
    rows
}

fn walk(v: &Value, key: String, rows: &mut Vec<Row>) {
    match v {
        Value::Object(map) if is_leaf(map) => {
            let field = |k: &str| map.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
            rows.push(Row {
                value: scalar(&map["value"]),
                units: field("units"),
                paper_eq: field("paper_eq"),
                provenance: field("provenance"),
                key,
            });
        }
        Value::Object(map) => {
            for (k, child) in map {
                walk(child, join(&key, k), rows);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, child) in items.iter().enumerate() {
                walk(child, join(&key, &i.to_string()), rows);
            }
        }
        other => rows.push(Row {
            key,
            value: scalar(other),
            units: "flag".into(),
            paper_eq: "plumbing".into(),
            provenance: "formula".into(),
        }),
    }
}

fn join(key: &str, part: &str) -> String {
    if key.is_empty() {
        part.to_string()
    } else {
        format!("{key}.{part}")
    }
}

fn is_leaf(map: &Map<String, Value>) -> bool {
    map.contains_key("provenance") && map.contains_key("value")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "NA".into(),
        Value::Array(_) => "[]".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
