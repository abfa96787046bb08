//! Calculation submodule: reduces `(number, number, op)` triples in place.
//!
//! Each reduction scans the program left to right caching the last two valid
//! number slots. At the first valid op it writes the result over the later
//! number and kills the earlier number and the op slot.

use serde::Serialize;

use crate::convert::{DenseProgram, Slot};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::token::Op;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reduction<T> {
    pub index_a: usize,
    pub index_b: usize,
    pub op_index: usize,
    pub op: Op,
    pub operands: [T; 2],
    pub result: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalTrace<T> {
    pub steps: Vec<Reduction<T>>,
    #[serde(rename = "final")]
    pub value: T,
}

pub fn apply<T: Scalar>(op: Op, a: T, b: T) -> Result<T> {
    match op {
        Op::Add => Ok(a + b),
        Op::Sub => Ok(a - b),
        Op::Mul => Ok(a * b),
        Op::Div if b == T::zero() => Err(Error::DivisionByZero),
        Op::Div => Ok(a / b),
        Op::None => Err(Error::MalformedPostfix("not an operator".into())),
    }
}

fn reduce_in_place<T: Scalar>(p: &mut DenseProgram<T>) -> Result<Reduction<T>> {
    let mut cache: [Option<usize>; 2] = [None, None];
    for k in 0..p.len() {
        match p.slot(k) {
            Slot::Dead => {}
            Slot::Number(_) => cache = [cache[1], Some(k)],
            Slot::Op(op) => {
                let (Some(a), Some(b)) = (cache[0], cache[1]) else {
                    return Err(Error::MalformedPostfix(format!(
                        "operator {op} at position {k} has fewer than two operands"
                    )));
                };
                let operands = [p.dense[a], p.dense[b]];
                let result = apply(op, operands[0], operands[1])?;
                p.dense[b] = result;
                p.valid[a] = false;
                p.dense[a] = T::zero();
                p.valid[k] = false;
                p.ops[k] = Op::None;
                return Ok(Reduction {
                    index_a: a,
                    index_b: b,
                    op_index: k,
                    op,
                    operands,
                    result,
                });
            }
        }
    }
    Err(Error::MalformedPostfix("no operator to reduce".into()))
}

/// Applies a single reduction at the leftmost valid operator.
pub fn reduce_once<T: Scalar>(program: &DenseProgram<T>) -> Result<(DenseProgram<T>, Reduction<T>)> {
    let mut p = program.clone();
    let r = reduce_in_place(&mut p)?;
    Ok((p, r))
}

/// Reduces until no operator is left; exactly one number must remain.
pub fn evaluate_traced<T: Scalar>(program: &DenseProgram<T>) -> Result<EvalTrace<T>> {
    let mut p = program.clone();
    let mut steps = Vec::with_capacity(p.op_count());
    while p.op_count() > 0 {
        steps.push(reduce_in_place(&mut p)?);
    }
    match p.numbers().as_slice() {
        [x] => Ok(EvalTrace { steps, value: *x }),
        [] => Err(Error::MalformedPostfix("no number left after reduction".into())),
        rest => Err(Error::MalformedPostfix(format!(
            "{} numbers left after reduction",
            rest.len()
        ))),
    }
}

pub fn evaluate<T: Scalar>(program: &DenseProgram<T>) -> Result<T> {
    evaluate_traced(program).map(|t| t.value)
}

/// Textbook stack evaluation of the same program, kept as an independent check.
pub fn stack_oracle<T: Scalar>(program: &DenseProgram<T>) -> Result<T> {
    let mut stack: Vec<T> = Vec::new();
    for slot in program.slots() {
        match slot {
            Slot::Dead => {}
            Slot::Number(x) => stack.push(x),
            Slot::Op(op) => {
                let b = stack.pop();
                let a = stack.pop();
                match (a, b) {
                    (Some(a), Some(b)) => stack.push(apply(op, a, b)?),
                    _ => return Err(Error::MalformedPostfix("stack underflow".into())),
                }
            }
        }
    }
    if stack.len() == 1 {
        Ok(stack[0])
    } else {
        Err(Error::MalformedPostfix(format!("{} values left on stack", stack.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convert::{convert, DEFAULT_CAPACITY};
    use crate::gates::RuleGates;
    use crate::token::encode;
    use proptest::prelude::*;

    use Slot::{Dead, Number as N};

    fn prog(text: &str) -> DenseProgram<f64> {
        convert(&encode(text), &RuleGates, DEFAULT_CAPACITY).unwrap()
    }

    fn eval(text: &str) -> Result<f64> {
        evaluate(&prog(text))
    }

    #[test]
    fn reduce_three_five_plus() {
        let (p, r) = reduce_once(&prog("3 5 +")).unwrap();
        assert_eq!(p.slots().collect::<Vec<_>>(), vec![Dead, N(8.0), Dead]);
        assert_eq!((r.index_a, r.index_b, r.op_index), (0, 1, 2));
    }

    #[test]
    fn reduce_uses_last_two_numbers() {
        let (p, _) = reduce_once(&prog("2 3 4 * +")).unwrap();
        assert_eq!(
            p.slots().collect::<Vec<_>>(),
            vec![N(2.0), Dead, N(12.0), Dead, Slot::Op(Op::Add)]
        );
    }

    #[test]
    fn reduce_needs_operands() {
        assert!(matches!(reduce_once(&prog("+")), Err(Error::MalformedPostfix(_))));
        assert!(matches!(reduce_once(&prog("3 4")), Err(Error::MalformedPostfix(_))));
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(eval("3 5 +"), Ok(8.0));
        assert_eq!(eval("7"), Ok(7.0));
        assert_eq!(eval("3 5 2 * +"), Ok(13.0));
        assert_eq!(eval("10 4 /"), Ok(2.5));
        assert_eq!(eval("1 2 3 + +"), Ok(6.0));
        assert_eq!(eval("5 0 /"), Err(Error::DivisionByZero));
    }

    #[test]
    fn evaluate_rejects_leftovers() {
        assert!(matches!(eval(""), Err(Error::MalformedPostfix(_))));
        assert!(matches!(eval("1 2"), Err(Error::MalformedPostfix(_))));
        assert!(matches!(eval("1 +"), Err(Error::MalformedPostfix(_))));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(stack_oracle(&prog("3 5 +")), Ok(8.0));
        assert_eq!(stack_oracle(&prog("7")), Ok(7.0));
        assert_eq!(stack_oracle(&prog("2 3 4 + *")), Ok(14.0));
    }

    #[test]
    fn trace_records_every_reduction() {
        let t = evaluate_traced(&prog("3 5 2 * +")).unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.steps[0].op, Op::Mul);
        assert_eq!(t.steps[0].operands, [5.0, 2.0]);
        assert_eq!(t.steps[1].result, 13.0);
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["final"], 13.0);
    }

    fn arb_slot() -> impl Strategy<Value = Slot<f64>> {
        prop_oneof![
            3 => (-1000i32..=1000).prop_map(|v| N(v as f64 / 4.0)),
            2 => prop::sample::select(vec![Op::Add, Op::Sub, Op::Mul, Op::Div]).prop_map(Slot::Op),
            1 => Just(Dead),
        ]
    }

    proptest! {
        #[test]
        fn reduction_conserves_slots(slots in proptest::collection::vec(arb_slot(), 0..14)) {
            let p = DenseProgram::from_slots(&slots);
            if let Ok((q, _)) = reduce_once(&p) {
                prop_assert_eq!(q.op_count() + 1, p.op_count());
                prop_assert_eq!(q.number_count() + 1, p.number_count());
            }
        }

        #[test]
        fn agrees_with_stack_oracle(slots in proptest::collection::vec(arb_slot(), 0..14)) {
            let p = DenseProgram::from_slots(&slots);
            match (evaluate_traced(&p), stack_oracle(&p)) {
                (Ok(t), Ok(o)) => {
                    prop_assert!((t.value - o).abs() <= 1e-9 * o.abs().max(1.0));
                    prop_assert_eq!(t.steps.len(), p.op_count());
                }
                (Err(a), Err(b)) => prop_assert_eq!(a.kind(), b.kind()),
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }
}
