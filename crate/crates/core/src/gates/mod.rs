//! Gate functions of the conversion loop.
//!
//! A [`GatePolicy`] maps `(token, decimal_started)` to a hard [`GateDecision`].
//! [`RuleGates`] is the exact reference; [`GateParams`] is the learnable
//! linear policy trained by [`train_gates`].

mod params;
mod train;

use serde::{Deserialize, Serialize};

pub use params::{GateParams, LinearHead, FORMAT_VERSION};
pub use train::{
    anchor_events, event_loss, train_gates, EpochLoss, EventLoss, GateEvent, TrainConfig, TrainReport,
};

use crate::convert::ConversionState;
use crate::error::Result;
use crate::token::{encode, Op, Token, TokenKind};

/// How a digit updates the accumulating dense value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseOpMode {
    #[default]
    Ignore,
    DirectAdd,
    TimesTenAdd,
    BaseMulAdd,
}

impl DenseOpMode {
    pub const ALL: [DenseOpMode; 4] = [
        DenseOpMode::Ignore,
        DenseOpMode::DirectAdd,
        DenseOpMode::TimesTenAdd,
        DenseOpMode::BaseMulAdd,
    ];

    pub fn class(self) -> usize {
        self as usize
    }

    pub fn from_class(class: usize) -> Option<DenseOpMode> {
        Self::ALL.get(class).copied()
    }
}

/// Argmaxed output of every gate for one token.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateDecision {
    pub ignore: bool,
    #[serde(rename = "move")]
    pub move_pos: bool,
    pub decimal_start: bool,
    pub dense_mode: DenseOpMode,
    pub digit: u8,
    pub op: Op,
}

pub trait GatePolicy {
    fn decide(&self, token: Token, decimal_started: bool) -> GateDecision;
}

impl<P: GatePolicy + ?Sized> GatePolicy for &P {
    fn decide(&self, token: Token, decimal_started: bool) -> GateDecision {
        (**self).decide(token, decimal_started)
    }
}

/// Zero-parameter reference policy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RuleGates;

impl GatePolicy for RuleGates {
    fn decide(&self, token: Token, decimal_started: bool) -> GateDecision {
        rule_gates(token, decimal_started)
    }
}

/// Reference gate semantics.
///
/// The gate inputs carry no "first digit of the slot" bit, so digits are
/// labelled `TimesTenAdd` or `BaseMulAdd`; the conversion loop itself resolves
/// `TimesTenAdd` on an empty slot to `DirectAdd`.
pub fn rule_gates(token: Token, decimal_started: bool) -> GateDecision {
    let mut g = GateDecision::default();
    match token.kind() {
        TokenKind::Other => g.ignore = true,
        TokenKind::Dot => g.decimal_start = true,
        TokenKind::Space => g.move_pos = true,
        TokenKind::Op(op) => {
            g.move_pos = true;
            g.op = op;
        }
        TokenKind::Digit(d) => {
            g.digit = d;
            g.dense_mode = if decimal_started {
                DenseOpMode::BaseMulAdd
            } else {
                DenseOpMode::TimesTenAdd
            };
        }
        TokenKind::Terminator => {}
    }
    g
}

/// The 36-case gate domain: every token paired with both decimal contexts.
pub fn gate_domain() -> impl Iterator<Item = (Token, bool)> {
    Token::vocabulary().flat_map(|t| [(t, false), (t, true)])
}

/// Replays `text` through a rule-gated conversion and labels every token with
/// the decimal context it was seen in. Tokens after a `$` are not labelled.
pub fn label_events(text: &str) -> Result<Vec<GateEvent>> {
    let stream = encode(text);
    let mut state = ConversionState::<f64>::new(stream.len().max(1))?;
    let mut events = Vec::with_capacity(stream.len());
    for &token in &stream {
        let decimal_started = state.decimal_started();
        events.push(GateEvent {
            token,
            decimal_started,
            label: rule_gates(token, decimal_started),
        });
        if state.step(token, &RuleGates)?.is_terminated() {
            break;
        }
    }
    Ok(events)
}

/// Per-head agreement of `policy` with [`rule_gates`] over the 36-case domain.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Agreement {
    pub cases: usize,
    pub ignore: usize,
    #[serde(rename = "move")]
    pub move_pos: usize,
    pub decimal_start: usize,
    pub dense_mode: usize,
    pub digit: usize,
    pub op: usize,
    pub full: usize,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub token: char,
    pub token_id: u8,
    pub decimal_started: bool,
    pub expected: GateDecision,
    pub actual: GateDecision,
}

impl Agreement {
    pub fn is_perfect(&self) -> bool {
        self.full == self.cases
    }
}

pub fn agreement<P: GatePolicy + ?Sized>(policy: &P) -> Agreement {
    let mut a = Agreement::default();
    for (token, ds) in gate_domain() {
        let expected = rule_gates(token, ds);
        let actual = policy.decide(token, ds);
        a.cases += 1;
        a.ignore += usize::from(expected.ignore == actual.ignore);
        a.move_pos += usize::from(expected.move_pos == actual.move_pos);
        a.decimal_start += usize::from(expected.decimal_start == actual.decimal_start);
        a.dense_mode += usize::from(expected.dense_mode == actual.dense_mode);
        a.digit += usize::from(expected.digit == actual.digit);
        a.op += usize::from(expected.op == actual.op);
        if expected == actual {
            a.full += 1;
        } else {
            a.mismatches.push(Mismatch {
                token: token.canonical_char(),
                token_id: token.id(),
                decimal_started: ds,
                expected,
                actual,
            });
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn tok(c: char) -> Token {
        Token::from_char(c)
    }

    #[test]
    fn rule_digit_modes() {
        let g = rule_gates(tok('7'), false);
        assert_eq!(g.digit, 7);
        assert_eq!(g.dense_mode, DenseOpMode::TimesTenAdd);
        assert!(!g.ignore);
        assert_eq!(rule_gates(tok('7'), true).dense_mode, DenseOpMode::BaseMulAdd);
    }

    #[test]
    fn rule_other_is_ignored() {
        for ds in [false, true] {
            let g = rule_gates(tok('x'), ds);
            assert!(g.ignore);
            assert!(!g.move_pos && !g.decimal_start);
        }
    }

    #[test]
    fn rule_move_and_ops() {
        assert!(rule_gates(tok(' '), false).move_pos);
        let g = rule_gates(tok('/'), false);
        assert!(g.move_pos);
        assert_eq!(g.op, Op::Div);
        assert!(rule_gates(tok('.'), false).decimal_start);
        assert_eq!(rule_gates(tok('$'), false), GateDecision::default());
    }

    #[test]
    fn domain_has_36_cases() {
        assert_eq!(gate_domain().count(), 36);
    }

    #[test]
    fn label_one_point_one() {
        let ev = label_events("1.1").unwrap();
        assert_eq!(ev.len(), 3);
        assert!(!ev[0].decimal_started);
        assert!(!ev[1].decimal_started && ev[1].label.decimal_start);
        assert!(ev[2].decimal_started);
        assert_eq!(ev[2].label.dense_mode, DenseOpMode::BaseMulAdd);
    }

    #[test]
    fn label_ops_line() {
        let ev = label_events("+ -").unwrap();
        assert_eq!(ev.len(), 3);
        assert_eq!(ev.iter().filter(|e| e.label.op.is_some()).count(), 2);
        assert_eq!(ev.iter().filter(|e| e.token.id() == 15).count(), 1);
    }

    #[test]
    fn label_dot_place_line() {
        let ev = label_events("11.111").unwrap();
        assert_eq!(ev.len(), 6);
        let flags: Vec<bool> = ev.iter().map(|e| e.decimal_started).collect();
        assert_eq!(flags, [false, false, false, true, true, true]);
    }

    #[test]
    fn label_rejects_double_dot() {
        assert!(matches!(label_events("1.2.3"), Err(Error::MalformedNumber { .. })));
    }

    #[test]
    fn rule_policy_agrees_with_itself() {
        assert!(agreement(&RuleGates).is_perfect());
    }
}
