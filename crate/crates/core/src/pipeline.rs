//! Question in, answer out.
//!
//! An [`ExpressionPredictor`] decides whether a question is arithmetic and
//! emits its postfix form. Arithmetic questions go through conversion,
//! reduction and rendering; the rendered result is appended to the prompt as
//! a fixed-length `$`-terminated segment before the [`Responder`] sees it.
//! Everything else goes to the responder untouched.

use serde::Serialize;

use crate::convert::{convert, DEFAULT_CAPACITY};
use crate::error::{Error, Result};
use crate::eval::{evaluate_traced, EvalTrace, Reduction};
use crate::gates::{GateDecision, GateParams, GatePolicy, RuleGates};
use crate::infix::{parse_infix, to_postfix};
use crate::render::render;
use crate::token::{encode, Token};

pub const DEFAULT_DRAFT_LEN: usize = 32;
pub const DEFAULT_INJECT_LEN: usize = 16;

const TERMINATOR: char = '$';

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictorOutput {
    /// The leading enable flag of the predicted sequence.
    pub enable: bool,
    pub expression: String,
    /// Draft area, enable flag and expression as one sequence.
    pub raw: String,
}

pub trait ExpressionPredictor {
    fn predict(&self, question: &str) -> PredictorOutput;
}

pub trait Responder {
    fn respond(&self, prompt: &str) -> String;
}

/// Deterministic predictor backed by the infix parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferencePredictor {
    pub draft_len: usize,
}

impl Default for ReferencePredictor {
    fn default() -> Self {
        ReferencePredictor {
            draft_len: DEFAULT_DRAFT_LEN,
        }
    }
}

impl ExpressionPredictor for ReferencePredictor {
    fn predict(&self, question: &str) -> PredictorOutput {
        let expression = parse_infix::<f64>(question)
            .and_then(|ast| to_postfix(&ast))
            .unwrap_or_default();
        let enable = !expression.is_empty();
        let flag = if enable { '1' } else { '0' };
        let raw = format!("{}{flag}{expression}", " ".repeat(self.draft_len));
        PredictorOutput {
            enable,
            expression,
            raw,
        }
    }
}

/// Answers with the injected payload when the prompt ends in a segment,
/// otherwise echoes the prompt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EchoResponder {
    pub inject_len: usize,
}

impl Default for EchoResponder {
    fn default() -> Self {
        EchoResponder {
            inject_len: DEFAULT_INJECT_LEN,
        }
    }
}

impl Responder for EchoResponder {
    fn respond(&self, prompt: &str) -> String {
        extract_payload(prompt, self.inject_len)
            .map(str::to_string)
            .unwrap_or_else(|| prompt.to_string())
    }
}

/// Payload of a well-formed segment at the end of `prompt`.
pub fn extract_payload(prompt: &str, inject_len: usize) -> Option<&str> {
    let start = prompt.char_indices().rev().nth(inject_len.checked_sub(1)?)?.0;
    let segment = &prompt[start..];
    if segment.matches(TERMINATOR).count() != 1 {
        return None;
    }
    let (payload, rest) = segment.split_once(TERMINATOR)?;
    let well_formed = !payload.is_empty()
        && !payload.contains(char::is_whitespace)
        && rest.chars().all(|c| c == ' ');
    well_formed.then_some(payload)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectionSegment {
    pub text: String,
    pub payload: String,
}

impl InjectionSegment {
    pub fn new(result: f64, inject_len: usize) -> Result<Self> {
        let payload = render(result)?;
        if payload.len() + 1 > inject_len {
            return Err(Error::PayloadTooLong {
                payload,
                inject_len,
            });
        }
        let mut text = String::with_capacity(inject_len);
        text.push_str(&payload);
        text.push(TERMINATOR);
        text.extend(std::iter::repeat_n(' ', inject_len - payload.len() - 1));
        Ok(InjectionSegment { text, payload })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum GateSource {
    #[default]
    Rule,
    Learned(Box<GateParams<f64>>),
}

impl GatePolicy for GateSource {
    fn decide(&self, token: Token, decimal_started: bool) -> GateDecision {
        match self {
            GateSource::Rule => RuleGates.decide(token, decimal_started),
            GateSource::Learned(p) => p.decide(token, decimal_started),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub draft_len: usize,
    pub inject_len: usize,
    pub capacity: usize,
    pub gates: GateSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            draft_len: DEFAULT_DRAFT_LEN,
            inject_len: DEFAULT_INJECT_LEN,
            capacity: DEFAULT_CAPACITY,
            gates: GateSource::Rule,
        }
    }
}

impl PipelineConfig {
    pub fn predictor(&self) -> ReferencePredictor {
        ReferencePredictor {
            draft_len: self.draft_len,
        }
    }

    pub fn responder(&self) -> EchoResponder {
        EchoResponder {
            inject_len: self.inject_len,
        }
    }
}

/// Appends the rendered `result` segment to `prompt`.
pub fn inject(prompt: &str, result: f64, config: &PipelineConfig) -> Result<String> {
    let segment = InjectionSegment::new(result, config.inject_len)?;
    Ok(format!("{prompt}{}", segment.text))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: &'static str,
    pub message: String,
}

impl From<&Error> for Diagnostic {
    fn from(e: &Error) -> Self {
        Diagnostic {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineResult {
    pub answer: String,
    pub injected: bool,
    pub expression: String,
    #[serde(serialize_with = "trace_steps")]
    pub trace: Option<EvalTrace<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Diagnostic>,
}

fn trace_steps<S: serde::Serializer>(
    trace: &Option<EvalTrace<f64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let steps: &[Reduction<f64>] = trace.as_ref().map_or(&[], |t| &t.steps);
    s.collect_seq(steps)
}

impl PipelineResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pipeline results serialize")
    }
}

/// Converts and reduces a postfix expression. A `$` in the expression ends it.
pub fn compute(expression: &str, config: &PipelineConfig) -> Result<EvalTrace<f64>> {
    let stream = encode(expression);
    let program = convert::<f64, _>(&stream, &config.gates, config.capacity)?;
    evaluate_traced(&program)
}

pub fn run<P, R>(question: &str, predictor: &P, responder: &R, config: &PipelineConfig) -> PipelineResult
where
    P: ExpressionPredictor + ?Sized,
    R: Responder + ?Sized,
{
    let prediction = predictor.predict(question);
    let fallback = |error: Option<Diagnostic>, trace: Option<EvalTrace<f64>>| PipelineResult {
        answer: responder.respond(question),
        injected: false,
        expression: prediction.expression.clone(),
        trace,
        error,
    };
    if !prediction.enable {
        return fallback(None, None);
    }
    let trace = match compute(&prediction.expression, config) {
        Ok(t) => t,
        Err(e) => return fallback(Some((&e).into()), None),
    };
    match inject(question, trace.value, config) {
        Ok(prompt) => PipelineResult {
            answer: responder.respond(&prompt),
            injected: true,
            expression: prediction.expression.clone(),
            trace: Some(trace),
            error: None,
        },
        Err(e) => fallback(Some((&e).into()), Some(trace)),
    }
}

/// [`run`] with the reference predictor and echo responder.
pub fn run_reference(question: &str, config: &PipelineConfig) -> PipelineResult {
    run(question, &config.predictor(), &config.responder(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn predicts_table_question() {
        let p = ReferencePredictor::default().predict("3 + 5 = ?");
        assert!(p.enable);
        assert_eq!(p.expression, "3 5 +");
        assert_eq!(p.raw, format!("{}13 5 +", " ".repeat(32)));
    }

    #[test]
    fn general_questions_disable() {
        for q in ["Design a logo for a food store.", ""] {
            let p = ReferencePredictor::default().predict(q);
            assert!(!p.enable);
            assert!(p.expression.is_empty());
        }
    }

    #[test]
    fn injects_fixed_segment() {
        let cfg = PipelineConfig::default();
        let s = inject("Q: 3 + 5 = ?", 8.0, &cfg).unwrap();
        assert_eq!(s, format!("Q: 3 + 5 = ?8${}", " ".repeat(14)));
        let s = inject("", 0.0, &cfg).unwrap();
        assert_eq!(s, format!("0${}", " ".repeat(14)));
    }

    #[test]
    fn payload_too_long() {
        let cfg = PipelineConfig::default();
        assert!(inject("q", 123456789012345.0, &cfg).is_ok());
        assert!(matches!(
            inject("q", 1234567890123456.0, &cfg),
            Err(Error::PayloadTooLong { .. })
        ));
        assert!(matches!(inject("q", f64::NAN, &cfg), Err(Error::NonFinite(_))));
    }

    #[test]
    fn runs_table_question() {
        let r = run_reference("3 + 5 = ?", &PipelineConfig::default());
        assert_eq!(r.answer, "8");
        assert!(r.injected);
        assert_eq!(r.expression, "3 5 +");
        assert_eq!(r.trace.as_ref().unwrap().steps.len(), 1);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["answer"], "8");
        assert_eq!(v["injected"], true);
        assert_eq!(v["trace"].as_array().unwrap().len(), 1);
        assert!(v.get("error").is_none());
    }

    #[test]
    fn general_path_is_untouched() {
        let r = run_reference("Hello", &PipelineConfig::default());
        assert_eq!(r.answer, "Hello");
        assert!(!r.injected);
        assert!(r.trace.is_none());
    }

    #[test]
    fn division_by_zero_falls_back() {
        let r = run_reference("12 / 0 = ?", &PipelineConfig::default());
        assert!(!r.injected);
        assert_eq!(r.error.as_ref().unwrap().kind, "division_by_zero");
        assert_eq!(r.answer, "12 / 0 = ?");
    }

    #[test]
    fn learned_gate_source_is_used() {
        let cfg = PipelineConfig {
            gates: GateSource::Learned(Box::default()),
            ..Default::default()
        };
        // Zero weights never fire a digit, so the expression reduces to nothing.
        let r = run_reference("3 + 5 = ?", &cfg);
        assert!(!r.injected);
        assert_eq!(r.error.unwrap().kind, "malformed_postfix");
    }

    #[test]
    fn extract_rejects_non_segments() {
        assert_eq!(extract_payload("abc", 16), None);
        assert_eq!(extract_payload("x8$  ", 4), Some("8"));
        assert_eq!(extract_payload("x$8$ ", 4), None);
        assert_eq!(extract_payload("xx$  ", 4), Some("x"));
        assert_eq!(extract_payload("x   $", 4), None);
    }

    proptest! {
        #[test]
        fn segment_shape(x in -1e6f64..1e9) {
            let seg = InjectionSegment::new(x, 16).unwrap();
            prop_assert_eq!(seg.text.chars().count(), 16);
            prop_assert_eq!(seg.text.matches('$').count(), 1);
            prop_assert_eq!(seg.text.find('$'), Some(seg.payload.len()));
        }

        #[test]
        fn non_arithmetic_is_byte_identical(q in "[a-zA-Z ,.!?']{0,40}") {
            let cfg = PipelineConfig::default();
            let r = run_reference(&q, &cfg);
            prop_assert!(!r.injected);
            prop_assert_eq!(r.answer, cfg.responder().respond(&q));
        }
    }
}
