//! Versioned JSON forms of states and gate results.

use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::mbqc::GateOutcome;
use crate::quantum::{c, BlochVector, CMatrix, DensityOperator, Ket, State, Tolerances};

pub const SCHEMA: &str = "aklt/1";

/// Complex number as `[re, im]`.
pub type ComplexJson = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dims: Vec<usize>,
    /// Row-major rows.
    pub rows: Vec<Vec<ComplexJson>>,
}

impl MatrixJson {
    pub fn from_density(rho: &DensityOperator) -> Self {
        Self {
            dims: rho.dims().to_vec(),
            rows: rows_of(rho.matrix()),
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        let d: usize = self.dims.iter().product();
        if self.rows.len() != d || self.rows.iter().any(|r| r.len() != d) {
            return Err(Error::Data(format!("matrix is not {d} × {d}")));
        }
        let m = CMatrix::from_fn(d, d, |i, j| c(self.rows[i][j][0], self.rows[i][j][1]));
        DensityOperator::new(self.dims.clone(), m)
    }
}

fn rows_of(m: &CMatrix) -> Vec<Vec<ComplexJson>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainStateJson {
    pub schema: String,
    pub n_qutrits: usize,
    pub dims: Vec<usize>,
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<ComplexJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<ComplexJson>>>,
    pub build_probability: f64,
}

fn check_schema(schema: &str) -> Result<()> {
    if schema != SCHEMA {
        return Err(Error::Data(format!(
            "unsupported schema `{schema}`, expected `{SCHEMA}`"
        )));
    }
    Ok(())
}

impl ChainStateJson {
    pub fn from_chain(chain: &ChainState) -> Self {
        let (kind, amplitudes, matrix) = match &chain.state {
            State::Pure(k) => (
                StateKind::Pure,
                Some(k.amps().iter().map(|a| [a.re, a.im]).collect()),
                None,
            ),
            State::Mixed(rho) => (StateKind::Mixed, None, Some(rows_of(rho.matrix()))),
        };
        Self {
            schema: SCHEMA.into(),
            n_qutrits: chain.n_qutrits,
            dims: chain.dims().to_vec(),
            kind,
            amplitudes,
            matrix,
            build_probability: chain.build_probability,
        }
    }

    pub fn to_chain(&self) -> Result<ChainState> {
        check_schema(&self.schema)?;
        let state = match (self.kind, &self.amplitudes, &self.matrix) {
            (StateKind::Pure, Some(amps), None) => {
                let ket = Ket::new(
                    self.dims.clone(),
                    amps.iter().map(|a| c(a[0], a[1])).collect(),
                )?;
                if !ket.is_normalized() {
                    return Err(Error::Data(format!("state norm² {} ≠ 1", ket.norm_sqr())));
                }
                State::Pure(ket)
            }
            (StateKind::Mixed, None, Some(rows)) => {
                let rho = MatrixJson {
                    dims: self.dims.clone(),
                    rows: rows.clone(),
                }
                .to_density()?;
                rho.validate(&Tolerances::default())?;
                State::Mixed(rho)
            }
            _ => {
                return Err(Error::Data(
                    "a pure state needs `amplitudes`, a mixed one `matrix`".into(),
                ))
            }
        };
        let mut chain = ChainState::from_state(state)?;
        if chain.n_qutrits != self.n_qutrits {
            return Err(Error::Data(format!(
                "n_qutrits {} does not match dims",
                self.n_qutrits
            )));
        }
        if !(0.0..=1.0).contains(&self.build_probability) {
            return Err(Error::ParameterRange {
                name: "build_probability",
                value: self.build_probability,
                range: "[0, 1]",
            });
        }
        chain.build_probability = self.build_probability;
        Ok(chain)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochJson {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<BlochVector> for BlochJson {
    fn from(b: BlochVector) -> Self {
        Self {
            x: b.x,
            y: b.y,
            z: b.z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOutcomeJson {
    pub outcome: String,
    pub probability: f64,
    pub correction: String,
    pub raw_bloch: BlochJson,
    pub corrected_bloch: BlochJson,
}

impl From<&GateOutcome> for GateOutcomeJson {
    fn from(g: &GateOutcome) -> Self {
        Self {
            outcome: g.outcome.label().into(),
            probability: g.probability,
            correction: g.correction_applied.label().into(),
            raw_bloch: g.raw_bloch().into(),
            corrected_bloch: g.corrected_bloch().into(),
        }
    }
}
