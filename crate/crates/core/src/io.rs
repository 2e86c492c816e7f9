//! JSON forms of operators, measurements and observable sets.
//!
//! Operators are `{"dim": D, "re": [[..]], "im": [[..]]}` (row-major, `im`
//! optional) or, for qubits, Bloch form `{"x0": .., "r": [x, y, z]}`.
//! Measurements are `{"dim": D, "effects": [..]}` or the qubit shorthand
//! `{"dim": 2, "bloch": [{"w": w_k, "v": [x, y, z]}, ..]}`.

use serde::{Deserialize, Serialize};

use crate::channel::ClassicalShadowSet;
use crate::error::{Error, Result};
use crate::operator::{BlochVector, HermitianOperator};
use crate::povm::{Povm, QubitPovmParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseOperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorJson {
    Dense(DenseOperatorJson),
    Bloch(BlochVector),
}

impl OperatorJson {
    pub fn from_operator(op: &HermitianOperator) -> Self {
        let d = op.dim();
        let m = op.matrix();
        let re = (0..d)
            .map(|i| (0..d).map(|j| m[(i, j)].re).collect())
            .collect();
        let im = (0..d)
            .map(|i| (0..d).map(|j| m[(i, j)].im).collect())
            .collect();
        OperatorJson::Dense(DenseOperatorJson {
            dim: d,
            re,
            im: Some(im),
        })
    }

    pub fn to_operator(&self) -> Result<HermitianOperator> {
        match self {
            OperatorJson::Bloch(b) => {
                if !b.as_array().iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidOperator("non-finite Bloch component".into()));
                }
                Ok(b.to_operator())
            }
            OperatorJson::Dense(d) => {
                let check = |rows: &Vec<Vec<f64>>, name: &str| -> Result<()> {
                    if rows.len() != d.dim || rows.iter().any(|r| r.len() != d.dim) {
                        return Err(Error::InvalidOperator(format!(
                            "'{name}' is not a {0}x{0} array",
                            d.dim
                        )));
                    }
                    Ok(())
                };
                check(&d.re, "re")?;
                let zeros = vec![vec![0.0; d.dim]; d.dim];
                let im = d.im.as_ref().unwrap_or(&zeros);
                check(im, "im")?;
                HermitianOperator::from_parts(&d.re, im)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochEffectJson {
    pub w: f64,
    pub v: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PovmJson {
    Effects {
        dim: usize,
        effects: Vec<OperatorJson>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Bloch {
        dim: usize,
        bloch: Vec<BlochEffectJson>,
    },
}

impl PovmJson {
    pub fn from_povm(povm: &Povm) -> Self {
        PovmJson::Effects {
            dim: povm.dim(),
            effects: povm
                .effects()
                .iter()
                .map(OperatorJson::from_operator)
                .collect(),
            labels: povm.labels().map(<[String]>::to_vec),
        }
    }

    /// Qubit shorthand with weights and directions.
    pub fn from_qubit_params(params: &QubitPovmParams) -> Self {
        PovmJson::Bloch {
            dim: 2,
            bloch: params
                .weights
                .iter()
                .zip(&params.directions)
                .map(|(&w, &v)| BlochEffectJson { w, v })
                .collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        match self {
            PovmJson::Effects {
                dim,
                effects,
                labels,
            } => {
                let ops = effects
                    .iter()
                    .map(OperatorJson::to_operator)
                    .collect::<Result<Vec<_>>>()?;
                if let Some(op) = ops.iter().find(|o| o.dim() != *dim) {
                    return Err(Error::Dimension {
                        expected: *dim,
                        found: op.dim(),
                    });
                }
                let povm = Povm::new(ops)?;
                match labels {
                    Some(l) => povm.with_labels(l.clone()),
                    None => Ok(povm),
                }
            }
            PovmJson::Bloch { dim, bloch } => {
                if *dim != 2 {
                    return Err(Error::Dimension {
                        expected: 2,
                        found: *dim,
                    });
                }
                let effects = bloch
                    .iter()
                    .map(|e| BlochVector::new(e.w, e.v.map(|c| c * e.w)).to_operator())
                    .collect();
                Povm::new(effects)
            }
        }
    }
}

/// A named list of observables. Files hold either one operator, a list of
/// operators, or `{"observables": [..], "ids": [..]}`.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    pub ids: Vec<String>,
    pub operators: Vec<HermitianOperator>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ObservableFile {
    Named {
        observables: Vec<OperatorJson>,
        #[serde(default)]
        ids: Option<Vec<String>>,
    },
    List(Vec<OperatorJson>),
    Single(OperatorJson),
}

impl ObservableSet {
    pub fn new(operators: Vec<HermitianOperator>) -> Self {
        let ids = (0..operators.len()).map(|i| i.to_string()).collect();
        Self { ids, operators }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (ops, ids) = match serde_json::from_str::<ObservableFile>(text)? {
            ObservableFile::Named { observables, ids } => (observables, ids),
            ObservableFile::List(l) => (l, None),
            ObservableFile::Single(s) => (vec![s], None),
        };
        let operators = ops
            .iter()
            .map(OperatorJson::to_operator)
            .collect::<Result<Vec<_>>>()?;
        if operators.is_empty() {
            return Err(Error::EmptyData);
        }
        match ids {
            Some(ids) if ids.len() != operators.len() => Err(Error::Dimension {
                expected: operators.len(),
                found: ids.len(),
            }),
            Some(ids) => Ok(Self { ids, operators }),
            None => Ok(Self::new(operators)),
        }
    }
}

/// Product observables, `{"factors": [[op, op, ..], ..]}` with one inner
/// list of per-site factors per observable.
#[derive(Clone, Debug)]
pub struct FactorizedSet {
    pub factors: Vec<Vec<HermitianOperator>>,
}

#[derive(Serialize, Deserialize)]
struct FactorizedFile {
    factors: Vec<Vec<OperatorJson>>,
}

impl FactorizedSet {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: FactorizedFile = serde_json::from_str(text)?;
        let factors = file
            .factors
            .iter()
            .map(|l| {
                l.iter()
                    .map(OperatorJson::to_operator)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if factors.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(Self { factors })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = FactorizedFile {
            factors: self
                .factors
                .iter()
                .map(|l| l.iter().map(OperatorJson::from_operator).collect())
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn sites(&self) -> Option<usize> {
        self.factors.first().map(Vec::len)
    }
}

/// Shadow set output: the operators plus `(a, b)` for the closed form.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowsJson {
    pub dim: usize,
    pub method: String,
    pub shadows: Vec<OperatorJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl ShadowsJson {
    pub fn new(set: &ClassicalShadowSet, method: &str) -> Self {
        Self {
            dim: set.dim(),
            method: method.to_string(),
            shadows: set
                .shadows()
                .iter()
                .map(OperatorJson::from_operator)
                .collect(),
            a: set.coefficients().map(|c| c.a),
            b: set.coefficients().map(|c| c.b),
        }
    }
}

pub fn parse_operator(text: &str) -> Result<HermitianOperator> {
    serde_json::from_str::<OperatorJson>(text)?.to_operator()
}

pub fn parse_povm(text: &str) -> Result<Povm> {
    serde_json::from_str::<PovmJson>(text)?.to_povm()
}

/// A state file: one operator, or a list of per-site operators.
pub fn parse_states(text: &str) -> Result<Vec<HermitianOperator>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum StateFile {
        Sites { sites: Vec<OperatorJson> },
        List(Vec<OperatorJson>),
        Single(OperatorJson),
    }
    let list = match serde_json::from_str::<StateFile>(text)? {
        StateFile::Sites { sites } => sites,
        StateFile::List(l) => l,
        StateFile::Single(s) => vec![s],
    };
    if list.is_empty() {
        return Err(Error::EmptyData);
    }
    list.iter().map(OperatorJson::to_operator).collect()
}
