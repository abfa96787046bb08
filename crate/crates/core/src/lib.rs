//! Arithmetic co-processor for token streams.
//!
//! Postfix text is tokenized over an 18-symbol vocabulary, converted into
//! dense numbers and operators by a gated state machine, reduced by a
//! two-number-cache calculation loop and rendered back to text for injection
//! into a prompt. The gates are either exact rules or a learnable linear
//! policy trained with small-epoch gradient descent.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to one precision.

pub mod convert;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod gates;
pub mod infix;
pub mod pipeline;
pub mod render;
pub mod scalar;
pub mod token;

pub use convert::{convert, ConversionState, Slot, Step, DEFAULT_CAPACITY};
pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_traced, reduce_once, stack_oracle, EvalTrace, Reduction};
pub use gates::{
    label_events, rule_gates, train_gates, DenseOpMode, GateDecision, GateEvent, GatePolicy,
    RuleGates, TrainConfig,
};
pub use infix::{eval_infix, parse_infix, to_postfix};
pub use render::render;
pub use scalar::Scalar;
pub use token::{decode, embed, encode, Op, Token, TokenKind, TokenStream};

pub type DenseProgram = convert::DenseProgram<f64>;
pub type DenseProgramF32 = convert::DenseProgram<f32>;
pub type GateParams = gates::GateParams<f64>;
pub type GateParamsF32 = gates::GateParams<f32>;
pub type InfixAst = infix::InfixAst<f64>;
pub type InfixAstF32 = infix::InfixAst<f32>;
pub type EvalTraceF64 = eval::EvalTrace<f64>;
pub type TrainReport = gates::TrainReport<f64>;
