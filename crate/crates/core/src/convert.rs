//! Dense number and math op conversion.
//!
//! An RNN-like loop over tokens that writes numbers and operators into
//! fixed-length output vectors. Which transition fires is decided entirely by
//! the [`GatePolicy`]; the loop only applies the gate outputs to the state.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gates::{DenseOpMode, GatePolicy};
use crate::scalar::Scalar;
use crate::token::{Op, Token, TokenKind, TokenStream};

pub const DEFAULT_CAPACITY: usize = 64;

/// Result of feeding one token to the loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Continue,
    Terminate,
}

impl Step {
    pub fn is_terminated(self) -> bool {
        self == Step::Terminate
    }
}

/// The internal status vectors of the conversion loop.
///
/// `pos` stands in for the output-position one-hot vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ConversionState<T> {
    pos: usize,
    valid: Vec<bool>,
    dense: Vec<T>,
    ops: Vec<Op>,
    decimal_started: bool,
    mult_base: T,
}

impl<T: Scalar> ConversionState<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity);
        }
        Ok(ConversionState {
            pos: 0,
            valid: vec![false; capacity],
            dense: vec![T::zero(); capacity],
            ops: vec![Op::None; capacity],
            decimal_started: false,
            mult_base: T::one(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.valid.len()
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn dense(&self) -> &[T] {
        &self.dense
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn decimal_started(&self) -> bool {
        self.decimal_started
    }

    pub fn mult_base(&self) -> T {
        self.mult_base
    }

    /// A number occupies the current slot and has not been finalized.
    pub fn number_in_progress(&self) -> bool {
        self.pos < self.capacity() && self.valid[self.pos] && !self.ops[self.pos].is_some()
    }

    fn reset_decimal(&mut self) {
        self.decimal_started = false;
        self.mult_base = T::one();
    }

    fn finalize_number(&mut self) {
        if self.number_in_progress() {
            self.pos += 1;
            self.reset_decimal();
        }
    }

    fn ensure_slot(&self) -> Result<()> {
        if self.pos >= self.capacity() {
            Err(Error::CapacityExceeded {
                capacity: self.capacity(),
            })
        } else {
            Ok(())
        }
    }

    /// Feeds one token. On error the state is left untouched.
    pub fn step<P: GatePolicy + ?Sized>(&mut self, token: Token, policy: &P) -> Result<Step> {
        if token.kind() == TokenKind::Terminator {
            return Ok(Step::Terminate);
        }
        let g = policy.decide(token, self.decimal_started);
        if g.ignore {
            return Ok(Step::Continue);
        }

        if g.decimal_start {
            if self.decimal_started {
                return Err(Error::MalformedNumber { slot: self.pos });
            }
            self.decimal_started = true;
            self.mult_base = T::lit(0.1);
            return Ok(Step::Continue);
        }

        if g.move_pos {
            if g.op.is_some() {
                let in_progress = self.number_in_progress();
                let slot = self.pos + usize::from(in_progress);
                if slot >= self.capacity() {
                    return Err(Error::CapacityExceeded {
                        capacity: self.capacity(),
                    });
                }
                self.finalize_number();
                self.ops[self.pos] = g.op;
                self.valid[self.pos] = true;
                self.dense[self.pos] = T::zero();
                self.pos += 1;
                self.reset_decimal();
            } else {
                self.finalize_number();
            }
            return Ok(Step::Continue);
        }

        if g.dense_mode != DenseOpMode::Ignore {
            self.ensure_slot()?;
            let d = T::from_digit(g.digit);
            let first = !self.valid[self.pos];
            let mode = match g.dense_mode {
                DenseOpMode::TimesTenAdd if first => DenseOpMode::DirectAdd,
                m => m,
            };
            let slot = &mut self.dense[self.pos];
            match mode {
                DenseOpMode::DirectAdd => *slot += d,
                DenseOpMode::TimesTenAdd => *slot = *slot * T::lit(10.0) + d,
                DenseOpMode::BaseMulAdd => {
                    *slot += d * self.mult_base;
                    self.mult_base /= T::lit(10.0);
                }
                DenseOpMode::Ignore => unreachable!(),
            }
            self.valid[self.pos] = true;
        }
        Ok(Step::Continue)
    }

    /// Finalizes a trailing number and freezes the output vectors.
    pub fn into_program(mut self) -> DenseProgram<T> {
        self.finalize_number();
        self.valid.truncate(self.pos);
        self.dense.truncate(self.pos);
        self.ops.truncate(self.pos);
        DenseProgram {
            valid: self.valid,
            dense: self.dense,
            ops: self.ops,
        }
    }
}

/// Folds [`ConversionState::step`] over `stream`, stopping at `$` or the end.
pub fn convert<T: Scalar, P: GatePolicy + ?Sized>(
    stream: &TokenStream,
    policy: &P,
    capacity: usize,
) -> Result<DenseProgram<T>> {
    let mut state = ConversionState::new(capacity)?;
    for &token in stream {
        if state.step(token, policy)?.is_terminated() {
            break;
        }
    }
    Ok(state.into_program())
}

/// One position of a [`DenseProgram`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slot<T> {
    Number(T),
    Op(Op),
    Dead,
}

/// Frozen output of a conversion: parallel valid / dense / op vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseProgram<T = f64> {
    pub(crate) valid: Vec<bool>,
    pub(crate) dense: Vec<T>,
    pub(crate) ops: Vec<Op>,
}

impl<T: Scalar> DenseProgram<T> {
    pub fn from_slots(slots: &[Slot<T>]) -> Self {
        let mut p = DenseProgram {
            valid: Vec::with_capacity(slots.len()),
            dense: Vec::with_capacity(slots.len()),
            ops: Vec::with_capacity(slots.len()),
        };
        for s in slots {
            let (v, d, o) = match *s {
                Slot::Number(x) => (true, x, Op::None),
                Slot::Op(op) if op.is_some() => (true, T::zero(), op),
                Slot::Op(_) | Slot::Dead => (false, T::zero(), Op::None),
            };
            p.valid.push(v);
            p.dense.push(d);
            p.ops.push(o);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn dense(&self) -> &[T] {
        &self.dense
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn slot(&self, i: usize) -> Slot<T> {
        match (self.valid[i], self.ops[i]) {
            (false, _) => Slot::Dead,
            (true, Op::None) => Slot::Number(self.dense[i]),
            (true, op) => Slot::Op(op),
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot<T>> + '_ {
        (0..self.len()).map(|i| self.slot(i))
    }

    /// Values of the valid number slots in position order.
    pub fn numbers(&self) -> Vec<T> {
        self.slots()
            .filter_map(|s| match s {
                Slot::Number(x) => Some(x),
                _ => None,
            })
            .collect()
    }

    pub fn number_count(&self) -> usize {
        self.slots().filter(|s| matches!(s, Slot::Number(_))).count()
    }

    pub fn op_count(&self) -> usize {
        self.slots().filter(|s| matches!(s, Slot::Op(_))).count()
    }
}

impl<T: Scalar> Serialize for DenseProgram<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let valid: Vec<u8> = self.valid.iter().map(|&v| u8::from(v)).collect();
        let mut s = serializer.serialize_struct("DenseProgram", 3)?;
        s.serialize_field("valid", &valid)?;
        s.serialize_field("dense", &self.dense)?;
        s.serialize_field("ops", &self.ops)?;
        s.end()
    }
}
