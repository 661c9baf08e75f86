//! JSON state files.
//!
//! Two shapes are accepted:
//!
//! ```json
//! {"d": 2, "matrix": [[0.5, 0.0], [0.0, 0.0], ...]}
//! {"family": "isotropic", "d": 2, "p": 0.5}
//! ```
//!
//! The matrix form lists `[re, im]` pairs in row-major order and round-trips
//! bit-exactly. Families are `isotropic` (needs `p`), `bell` and `pure-haar`
//! (optional `seed`, default 0).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::process::{Action, HamiltonianSpec, ProcessSpec};
use crate::random::{haar_pure_state, stream_rng};
use crate::state::BipartiteState;
use crate::thermo::IsotropicParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Isotropic,
    Bell,
    PureHaar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixForm {
    pub d: usize,
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyForm {
    pub family: Family,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StateFile {
    Matrix(MatrixForm),
    Family(FamilyForm),
}

impl StateFile {
    pub fn from_state(state: &BipartiteState) -> Self {
        StateFile::Matrix(MatrixForm { d: state.d(), matrix: matrix_to_pairs(state.rho()) })
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let is_family = value.as_object().is_some_and(|o| o.contains_key("family"));
        if is_family {
            Ok(StateFile::Family(serde_json::from_value(value).map_err(schema_error)?))
        } else {
            Ok(StateFile::Matrix(serde_json::from_value(value).map_err(schema_error)?))
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::StateFile(format!("malformed JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::StateFile(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state files always serialize")
    }

    /// Materializes and validates the state.
    pub fn resolve(&self) -> Result<BipartiteState> {
        match self {
            StateFile::Matrix(m) => {
                let n = m.d * m.d;
                let rho = pairs_to_matrix(n, &m.matrix)?;
                BipartiteState::new(m.d, rho)
            }
            StateFile::Family(f) => {
                if f.d < 2 {
                    return Err(Error::InvalidState {
                        invariant: "local dimension d >= 2",
                        detail: format!("d = {}", f.d),
                    });
                }
                match f.family {
                    Family::Isotropic => {
                        let p = f
                            .p
                            .ok_or_else(|| Error::StateFile("isotropic family needs \"p\"".into()))?;
                        Ok(IsotropicParams::new(f.d, p)?.state())
                    }
                    Family::Bell => Ok(BipartiteState::singlet(f.d)),
                    Family::PureHaar => {
                        let mut rng = stream_rng(f.seed.unwrap_or(0), 0);
                        Ok(haar_pure_state(f.d, &mut rng).density())
                    }
                }
            }
        }
    }
}

fn schema_error(e: serde_json::Error) -> Error {
    Error::StateFile(format!("schema violation: {e}"))
}

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    linalg::to_row_major(m).into_iter().map(|z| [z.re, z.im]).collect()
}

/// Square `n × n` matrix from row-major `[re, im]` pairs.
pub fn pairs_to_matrix(n: usize, pairs: &[[f64; 2]]) -> Result<CMatrix> {
    let entries: Vec<C64> = pairs.iter().map(|&[re, im]| C64::new(re, im)).collect();
    linalg::from_row_major(n, n, &entries).map_err(|e| Error::StateFile(e.to_string()))
}

/// A process on disk: `{"initial": <state file or path>, "levels": [...]?, "actions": [...]}`.
/// A string `initial` is a path, resolved relative to the process file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessFile {
    pub initial: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    pub actions: Vec<Action>,
}

impl ProcessFile {
    pub fn from_spec(spec: &ProcessSpec) -> Self {
        let initial = serde_json::to_value(StateFile::from_state(&spec.initial)).expect("state files always serialize");
        let levels = Some(spec.hamiltonian.levels().to_vec());
        Self { initial, levels, actions: spec.actions.clone() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::StateFile(format!("process file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::StateFile(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds the process; `base` is the directory that relative state paths are read from.
    pub fn into_spec(self, base: &Path) -> Result<ProcessSpec> {
        let state_file = match self.initial {
            Value::String(rel) => StateFile::load(&base.join(rel))?,
            other => StateFile::from_value(other)?,
        };
        let initial = state_file.resolve()?;
        let hamiltonian = match self.levels {
            Some(levels) => HamiltonianSpec::new(levels)?,
            None => HamiltonianSpec::degenerate(initial.dim()),
        };
        Ok(ProcessSpec { initial, hamiltonian, actions: self.actions })
    }
}

/// Serde adapter storing a square complex matrix as row-major `[re, im]` pairs.
pub(crate) mod square_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_pairs(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        let n = (pairs.len() as f64).sqrt().round() as usize;
        if n * n != pairs.len() {
            return Err(serde::de::Error::custom(format!("{} entries do not form a square matrix", pairs.len())));
        }
        pairs_to_matrix(n, &pairs).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for an optional inline state in matrix or family form.
pub(crate) mod opt_state {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(st: &Option<BipartiteState>, s: S) -> std::result::Result<S::Ok, S::Error> {
        st.as_ref().map(StateFile::from_state).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<BipartiteState>, D::Error> {
        let Some(value) = Option::<Value>::deserialize(d)? else {
            return Ok(None);
        };
        let file = StateFile::from_value(value).map_err(serde::de::Error::custom)?;
        file.resolve().map(Some).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
use crate::random::random_state;
    use proptest::prelude::*;

    #[test]
    fn families_resolve() {
        let iso = StateFile::parse(r#"{"family": "isotropic", "d": 2, "p": 0.5}"#).unwrap();
        assert!((iso.resolve().unwrap().singlet_overlap() - 0.625).abs() < 1e-15);
        let bell = StateFile::parse(r#"{"family": "bell", "d": 3}"#).unwrap();
        assert!((bell.resolve().unwrap().singlet_overlap() - 1.0).abs() < 1e-14);
        let haar = StateFile::parse(r#"{"family": "pure-haar", "d": 2, "seed": 9}"#).unwrap();
        let a = haar.resolve().unwrap();
        assert!(a.is_pure(1e-12));
        assert_eq!(a, haar.resolve().unwrap());
    }

    #[test]
    fn bad_inputs_are_named() {
        assert!(matches!(StateFile::parse("{not json"), Err(Error::StateFile(_))));
        assert!(StateFile::parse(r#"{"family": "werner", "d": 2}"#).is_err());
        assert!(StateFile::parse(r#"{"d": 2, "matrix": [[1, 0]], "extra": 1}"#).is_err());
        let missing_p = StateFile::parse(r#"{"family": "isotropic", "d": 2}"#).unwrap();
        assert!(missing_p.resolve().is_err());
        let short = StateFile::parse(r#"{"d": 2, "matrix": [[1, 0]]}"#).unwrap();
        assert!(short.resolve().is_err());
        let mut pairs = vec![[0.0, 0.0]; 16];
        pairs[0] = [2.0, 0.0];
        let bad_trace = StateFile::Matrix(MatrixForm { d: 2, matrix: pairs });
        match bad_trace.resolve() {
            Err(Error::InvalidState { invariant, .. }) => assert_eq!(invariant, "unit trace"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn process_file_with_path_reference() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        std::fs::write(dir.join("bell.json"), r#"{"family": "bell", "d": 2}"#).unwrap();
        let text = r#"{"initial": "bell.json", "actions": [{"kind": "thermalize", "subsystem": "AB"}]}"#;
        let spec = ProcessFile::parse(text).unwrap().into_spec(dir).unwrap();
        assert_eq!(spec.initial, BipartiteState::singlet(2));
        assert_eq!(spec.actions.len(), 1);
        let again = ProcessFile::from_spec(&spec).into_spec(dir).unwrap();
        assert_eq!(again, spec);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matrix_form_round_trips_bit_exactly(seed in any::<u64>(), d in 2usize..5, rank in 1usize..4) {
            let st = random_state(d, rank.min(d * d), &mut stream_rng(seed, 0)).unwrap();
            let text = StateFile::from_state(&st).to_json();
            let back = StateFile::parse(&text).unwrap().resolve().unwrap();
            for (x, y) in st.rho().iter().zip(back.rho().iter()) {
                prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}
