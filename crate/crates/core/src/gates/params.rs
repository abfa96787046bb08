use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DenseOpMode, GateDecision, GatePolicy};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::token::{Op, Token, VOCAB_SIZE};

pub const FORMAT_VERSION: u32 = 1;

/// Linear classifier over a one-hot input, `weights[class][feature]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearHead<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearHead<T> {
    pub fn zeros(inputs: usize, classes: usize) -> Self {
        LinearHead {
            weights: vec![vec![T::zero(); inputs]; classes],
            bias: vec![T::zero(); classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Logits for a one-hot feature at `feature`, plus the optional extra
    /// binary feature stored in the last input column.
    pub fn logits(&self, feature: usize, extra: bool) -> Vec<T> {
        let extra_col = self.inputs() - 1;
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, &b)| {
                let mut z = row[feature] + b;
                if extra {
                    z += row[extra_col];
                }
                z
            })
            .collect()
    }

    /// Lowest index wins ties.
    pub fn predict(&self, feature: usize, extra: bool) -> usize {
        argmax(&self.logits(feature, extra))
    }

    fn check(&self, name: &str, inputs: usize, classes: usize) -> Result<()> {
        let bad = |what: String| Err(Error::ParamFormat(format!("head {name}: {what}")));
        if self.bias.len() != classes || self.weights.len() != classes {
            return bad(format!("expected {classes} classes"));
        }
        if self.weights.iter().any(|r| r.len() != inputs) {
            return bad(format!("expected {inputs} inputs per class"));
        }
        let finite = self.bias.iter().chain(self.weights.iter().flatten()).all(|x| x.is_finite());
        if !finite {
            return bad("non-finite weight".into());
        }
        Ok(())
    }
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Learnable weights of every gate head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GateParams<T = f64> {
    pub format_version: u32,
    pub scalar: String,
    pub ignore: LinearHead<T>,
    #[serde(rename = "move")]
    pub move_pos: LinearHead<T>,
    pub decimal: LinearHead<T>,
    pub dense_op: LinearHead<T>,
    pub digit: LinearHead<T>,
    pub op: LinearHead<T>,
}

pub(crate) const BINARY: usize = 2;
pub(crate) const DENSE_OP_INPUTS: usize = VOCAB_SIZE + 1;

impl<T: Scalar> GateParams<T> {
    pub fn zeros() -> Self {
        GateParams {
            format_version: FORMAT_VERSION,
            scalar: T::NAME.to_string(),
            ignore: LinearHead::zeros(VOCAB_SIZE, BINARY),
            move_pos: LinearHead::zeros(VOCAB_SIZE, BINARY),
            decimal: LinearHead::zeros(VOCAB_SIZE, BINARY),
            dense_op: LinearHead::zeros(DENSE_OP_INPUTS, DenseOpMode::ALL.len()),
            digit: LinearHead::zeros(VOCAB_SIZE, 10),
            op: LinearHead::zeros(VOCAB_SIZE, Op::ALL.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::ParamFormat(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.scalar != T::NAME {
            return Err(Error::ParamFormat(format!(
                "file holds {} weights, expected {}",
                self.scalar,
                T::NAME
            )));
        }
        self.ignore.check("ignore", VOCAB_SIZE, BINARY)?;
        self.move_pos.check("move", VOCAB_SIZE, BINARY)?;
        self.decimal.check("decimal", VOCAB_SIZE, BINARY)?;
        self.dense_op.check("dense_op", DENSE_OP_INPUTS, DenseOpMode::ALL.len())?;
        self.digit.check("digit", VOCAB_SIZE, 10)?;
        self.op.check("op", VOCAB_SIZE, Op::ALL.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gate params always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self =
            serde_json::from_str(text).map_err(|e| Error::ParamFormat(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ParamFormat(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn decide_with(&self, token: Token, decimal_started: bool) -> GateDecision {
        let f = token.index();
        GateDecision {
            ignore: self.ignore.predict(f, false) == 1,
            move_pos: self.move_pos.predict(f, false) == 1,
            decimal_start: self.decimal.predict(f, false) == 1,
            dense_mode: DenseOpMode::from_class(self.dense_op.predict(f, decimal_started))
                .unwrap_or_default(),
            digit: self.digit.predict(f, false) as u8,
            op: Op::from_class(self.op.predict(f, false)).unwrap_or_default(),
        }
    }
}

impl<T: Scalar> Default for GateParams<T> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Scalar> GatePolicy for GateParams<T> {
    fn decide(&self, token: Token, decimal_started: bool) -> GateDecision {
        self.decide_with(token, decimal_started)
    }
}
