//! Training corpora: dot-place literals, number/op lines, arithmetic QA
//! records and the mixed QA + instruction dataset.
//!
//! All generators are pure functions of their configuration and seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::convert::{convert, DEFAULT_CAPACITY};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::gates::RuleGates;
use crate::infix::{parse_infix, to_postfix};
use crate::render::render;
use crate::token::{encode, Op};

/// Instruction text of every arithmetic record, spelled as in the published dataset.
pub const QA_INSTRUCTION: &str = "Please caculate this.";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub swift_express: String,
}

impl QaRecord {
    /// Builds the record for an infix question such as `"3 + 5 = ?"`.
    pub fn from_question(input: &str) -> Result<Self> {
        let ast = parse_infix::<f64>(input)?;
        let swift_express = to_postfix(&ast)?;
        let program = convert::<f64, _>(&encode(&swift_express), &RuleGates, DEFAULT_CAPACITY)?;
        let output = render(evaluate(&program)?)?;
        Ok(QaRecord {
            instruction: QA_INSTRUCTION.to_string(),
            input: input.to_string(),
            output,
            swift_express,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Few operations on small operands.
    Easy,
    /// An addition or subtraction followed by a multiplication or division.
    Priority,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub count: usize,
    pub seed: u64,
    pub stage: Stage,
    /// Operands are strictly below this bound.
    pub max_value: u32,
    pub max_decimals: u32,
    pub ops_min: usize,
    pub ops_max: usize,
}

impl GenConfig {
    pub fn easy(count: usize, seed: u64) -> Self {
        GenConfig {
            count,
            seed,
            stage: Stage::Easy,
            max_value: 100,
            max_decimals: 2,
            ops_min: 1,
            ops_max: 2,
        }
    }

    pub fn priority(count: usize, seed: u64) -> Self {
        GenConfig {
            stage: Stage::Priority,
            ops_min: 2,
            ops_max: 3,
            ..Self::easy(count, seed)
        }
    }

    pub fn for_stage(stage: Stage, count: usize, seed: u64) -> Self {
        match stage {
            Stage::Easy => Self::easy(count, seed),
            Stage::Priority => Self::priority(count, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.count == 0 {
            return fail("count must be at least 1");
        }
        if self.max_value == 0 {
            return fail("max_value must be positive");
        }
        if self.max_decimals > 6 {
            return fail("max_decimals above 6 is not supported");
        }
        if self.ops_min == 0 || self.ops_min > self.ops_max {
            return fail("ops range must be nonempty and start at 1 or more");
        }
        if self.stage == Stage::Priority && self.ops_max < 2 {
            return fail("priority stage needs at least two operations");
        }
        Ok(())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Decimal text of `units / 10^decimals` with trailing fractional zeros trimmed.
fn fixed_point_text(units: u64, decimals: u32) -> String {
    let scale = 10u64.pow(decimals);
    let int = units / scale;
    let frac = units % scale;
    if decimals == 0 || frac == 0 {
        return int.to_string();
    }
    let frac = format!("{frac:0width$}", width = decimals as usize);
    format!("{int}.{}", frac.trim_end_matches('0'))
}

fn random_literal(rng: &mut impl Rng, bound: u32, max_decimals: u32) -> String {
    let decimals = rng.random_range(0..=max_decimals);
    let units = rng.random_range(0..u64::from(bound) * 10u64.pow(decimals));
    fixed_point_text(units, decimals)
}

fn random_nonzero_literal(rng: &mut impl Rng, bound: u32, max_decimals: u32) -> String {
    loop {
        let s = random_literal(rng, bound, max_decimals);
        if s != "0" {
            return s;
        }
    }
}

/// Places a dot after the first `dot_after` characters of `digits`.
pub fn dot_place_line(digits: &str, dot_after: usize) -> String {
    let (a, b) = digits.split_at(dot_after);
    format!("{a}.{b}")
}

/// Five-digit literals with the dot cycled through the four interior positions.
pub fn gen_dot_place(count: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    (0..count)
        .map(|i| {
            let mut digits = String::with_capacity(5);
            digits.push(char::from(b'0' + rng.random_range(1..=9u8)));
            for _ in 0..4 {
                digits.push(char::from(b'0' + rng.random_range(0..=9u8)));
            }
            dot_place_line(&digits, i % 4 + 1)
        })
        .collect()
}

const OPS: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

fn random_op(rng: &mut impl Rng) -> Op {
    OPS[rng.random_range(0..OPS.len())]
}

/// Space-separated lines mixing literals and operator characters. Every eighth
/// line (starting with the first) holds operators only.
pub fn gen_numbers_ops(count: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    (0..count)
        .map(|i| {
            if i == 0 {
                return "+ - * /".to_string();
            }
            let items: Vec<String> = if i % 8 == 0 {
                let n = rng.random_range(1..=6);
                (0..n).map(|_| random_op(&mut rng).symbol().to_string()).collect()
            } else {
                let n = rng.random_range(1..=8);
                let mut items: Vec<String> = (0..n)
                    .map(|_| {
                        if rng.random_bool(0.6) {
                            random_literal(&mut rng, 1000, 3)
                        } else {
                            random_op(&mut rng).symbol().to_string()
                        }
                    })
                    .collect();
                if items.iter().all(|s| s.len() == 1 && Op::from_char(s.chars().next().unwrap()).is_some()) {
                    items[0] = random_literal(&mut rng, 1000, 3);
                }
                items
            };
            items.join(" ")
        })
        .collect()
}

fn random_question(config: &GenConfig, rng: &mut impl Rng) -> String {
    let n_ops = rng.random_range(config.ops_min..=config.ops_max);
    let mut ops: Vec<Op> = (0..n_ops).map(|_| random_op(rng)).collect();
    if config.stage == Stage::Priority {
        let i = rng.random_range(0..n_ops - 1);
        let j = rng.random_range(i + 1..n_ops);
        ops[i] = [Op::Add, Op::Sub][rng.random_range(0..2)];
        ops[j] = [Op::Mul, Op::Div][rng.random_range(0..2)];
    }
    let mut text = random_literal(rng, config.max_value, config.max_decimals);
    for op in ops {
        let operand = if op == Op::Div {
            random_nonzero_literal(rng, config.max_value, config.max_decimals)
        } else {
            random_literal(rng, config.max_value, config.max_decimals)
        };
        text.push(' ');
        text.push_str(op.symbol());
        text.push(' ');
        text.push_str(&operand);
    }
    text.push_str(" = ?");
    text
}

/// Arithmetic QA records. Questions are flat (no parentheses), so every
/// divisor is a single nonzero literal.
pub fn gen_arith_qa(config: &GenConfig) -> Result<Vec<QaRecord>> {
    config.validate()?;
    let mut rng = rng(config.seed);
    let mut out = Vec::with_capacity(config.count);
    while out.len() < config.count {
        let question = random_question(config, &mut rng);
        match QaRecord::from_question(&question) {
            Ok(r) => out.push(r),
            // A quotient can still come out non-finite; draw again.
            Err(Error::NonFinite(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// A record of the mixed dataset. Non-arithmetic records are kept as the raw
/// JSON text they were read from.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum MixedRecord {
    Arith(QaRecord),
    Other(Box<RawValue>),
}

impl MixedRecord {
    pub fn is_arith(&self) -> bool {
        matches!(self, MixedRecord::Arith(_))
    }
}

/// Largest mix of the two inputs whose arithmetic share rounds to `fraction`.
pub fn mix_datasets(
    arith: &[QaRecord],
    other: &[Box<RawValue>],
    arith_fraction: f64,
    seed: u64,
) -> Result<Vec<MixedRecord>> {
    if arith.is_empty() || other.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(arith_fraction > 0.0 && arith_fraction < 1.0) {
        return Err(Error::InvalidConfig("arith_fraction must lie in (0, 1)".into()));
    }
    let (n_arith, n_other) = (2..=arith.len() + other.len())
        .rev()
        .map(|n| {
            let a = ((n as f64) * arith_fraction).round() as usize;
            (a, n - a)
        })
        .find(|&(a, o)| a >= 1 && o >= 1 && a <= arith.len() && o <= other.len())
        .unwrap_or((1, 1));

    let mut out: Vec<MixedRecord> = arith[..n_arith]
        .iter()
        .cloned()
        .map(MixedRecord::Arith)
        .chain(other[..n_other].iter().cloned().map(MixedRecord::Other))
        .collect();
    out.shuffle(&mut rng(seed));
    Ok(out)
}

/// One JSON document per line, LF terminated.
pub fn to_jsonl<R: Serialize>(records: &[R]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

pub fn to_json_array<R: Serialize>(records: &[R]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize") + "\n"
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        position: e.line(),
        message: e.to_string(),
    }
}

/// Reads either a JSON array or JSONL of arbitrary records, keeping each as raw text.
pub fn read_raw_records(text: &str) -> Result<Vec<Box<RawValue>>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(json_error);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(json_error))
        .collect()
}

pub fn read_qa_records(text: &str) -> Result<Vec<QaRecord>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(json_error);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(json_error))
        .collect()
}

/// Plain text corpus: one example per line, LF line endings.
pub fn to_lines(lines: &[String]) -> String {
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infix::eval_infix;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn dot_place_matches_table() {
        let lines: Vec<String> = (0..4).map(|i| dot_place_line("11111", i + 1)).collect();
        assert_eq!(lines, ["1.1111", "11.111", "111.11", "1111.1"]);
    }

    #[test]
    fn dot_place_lines() {
        let one = gen_dot_place(1, 3);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].matches('.').count(), 1);

        let lines = gen_dot_place(100, 7);
        assert_eq!(lines.len(), 100);
        for (i, l) in lines.iter().enumerate() {
            assert_eq!(l.len(), 6);
            assert_eq!(l.find('.'), Some(i % 4 + 1));
            let expected: f64 = l.parse().unwrap();
            let p = convert::<f64, _>(&encode(l), &RuleGates, 4).unwrap();
            assert!(rel_close(p.dense()[0], expected, 1e-12), "{l}");
        }
    }

    #[test]
    fn numbers_ops_lines() {
        assert_eq!(gen_numbers_ops(1, 9), ["+ - * /"]);
        let lines = gen_numbers_ops(500, 1);
        let op_only = lines
            .iter()
            .filter(|l| l.split(' ').all(|t| t.len() == 1 && "+-*/".contains(t)))
            .count();
        assert!(op_only * 10 >= lines.len(), "{op_only}");
        for l in &lines {
            assert!(!l.is_empty());
            convert::<f64, _>(&encode(l), &RuleGates, DEFAULT_CAPACITY).unwrap();
        }
    }

    #[test]
    fn table_record() {
        let r = QaRecord::from_question("3 + 5 = ?").unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"instruction":"Please caculate this.","input":"3 + 5 = ?","output":"8","swift_express":"3 5 +"}"#
        );
    }

    fn check_record(r: &QaRecord) {
        let ast = parse_infix::<f64>(&r.input).unwrap();
        assert_eq!(to_postfix(&ast).unwrap(), r.swift_express);
        let oracle = eval_infix(&ast).unwrap();
        let p = convert::<f64, _>(&encode(&r.swift_express), &RuleGates, DEFAULT_CAPACITY).unwrap();
        let machine = evaluate(&p).unwrap();
        assert_eq!(render(machine).unwrap(), r.output);
        let printed: f64 = r.output.parse().unwrap();
        assert!(rel_close(machine, oracle, 1e-9), "{r:?}");
        assert!(rel_close(printed, oracle, 1e-9), "{r:?}");
    }

    #[test]
    fn easy_records() {
        let recs = gen_arith_qa(&GenConfig::easy(300, 5)).unwrap();
        assert_eq!(recs.len(), 300);
        for r in &recs {
            assert_eq!(r.instruction, QA_INSTRUCTION);
            assert!(r.input.ends_with(" = ?"));
            let ops = r.swift_express.split(' ').filter(|t| "+-*/".contains(*t)).count();
            assert!((1..=2).contains(&ops));
            for t in r.swift_express.split(' ').filter(|t| !"+-*/".contains(*t)) {
                let v: f64 = t.parse().unwrap();
                assert!(v < 100.0);
                assert!(t.split('.').nth(1).map_or(0, str::len) <= 2);
            }
            check_record(r);
        }
        assert_eq!(gen_arith_qa(&GenConfig::easy(1, 0)).unwrap().len(), 1);
    }

    #[test]
    fn priority_records() {
        let recs = gen_arith_qa(&GenConfig::priority(300, 11)).unwrap();
        for r in &recs {
            let ops: Vec<char> = r.input.chars().filter(|c| "+-*/".contains(*c)).collect();
            assert!(ops.len() >= 2);
            let first_add = ops.iter().position(|c| "+-".contains(*c)).unwrap();
            assert!(ops[first_add..].iter().any(|c| "*/".contains(*c)), "{}", r.input);
            check_record(r);
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = to_jsonl(&gen_arith_qa(&GenConfig::easy(50, 42)).unwrap());
        let b = to_jsonl(&gen_arith_qa(&GenConfig::easy(50, 42)).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, to_jsonl(&gen_arith_qa(&GenConfig::easy(50, 43)).unwrap()));
        assert_eq!(gen_numbers_ops(20, 3), gen_numbers_ops(20, 3));
    }

    #[test]
    fn invalid_gen_config() {
        assert!(gen_arith_qa(&GenConfig::easy(0, 0)).is_err());
        let mut c = GenConfig::priority(5, 0);
        c.ops_max = 1;
        c.ops_min = 1;
        assert!(gen_arith_qa(&c).is_err());
    }

    fn others(n: usize) -> Vec<Box<RawValue>> {
        (0..n)
            .map(|i| RawValue::from_string(format!(r#"{{"instruction":"q{i}","input":"","output":"a"}}"#)).unwrap())
            .collect()
    }

    #[test]
    fn mix_six_to_four() {
        let arith = gen_arith_qa(&GenConfig::easy(60, 1)).unwrap();
        let mixed = mix_datasets(&arith, &others(40), 0.6, 0).unwrap();
        assert_eq!(mixed.len(), 100);
        assert_eq!(mixed.iter().filter(|r| r.is_arith()).count(), 60);
    }

    #[test]
    fn mix_half_and_large() {
        let arith = gen_arith_qa(&GenConfig::easy(30, 1)).unwrap();
        let mixed = mix_datasets(&arith, &others(30), 0.5, 0).unwrap();
        assert_eq!(mixed.iter().filter(|r| r.is_arith()).count(), 30);
        assert_eq!(mixed.len(), 60);

        let arith = gen_arith_qa(&GenConfig::easy(1000, 2)).unwrap();
        let mixed = mix_datasets(&arith, &others(777), 0.6, 3).unwrap();
        let a = mixed.iter().filter(|r| r.is_arith()).count() as f64;
        assert!((a / mixed.len() as f64 - 0.6).abs() <= 1.0 / mixed.len() as f64);
    }

    #[test]
    fn mix_passes_other_records_through() {
        let arith = gen_arith_qa(&GenConfig::easy(3, 1)).unwrap();
        let raw = r#"{"output": "x",  "instruction":"keep   spacing"}"#;
        let other = vec![RawValue::from_string(raw.to_string()).unwrap()];
        let mixed = mix_datasets(&arith, &other, 0.5, 0).unwrap();
        assert!(to_jsonl(&mixed).contains(raw));
    }

    #[test]
    fn mix_errors() {
        let arith = gen_arith_qa(&GenConfig::easy(3, 1)).unwrap();
        assert!(matches!(mix_datasets(&arith, &[], 0.6, 0), Err(Error::EmptyInput)));
        assert!(matches!(mix_datasets(&[], &others(2), 0.6, 0), Err(Error::EmptyInput)));
        assert!(mix_datasets(&arith, &others(2), 1.0, 0).is_err());
    }

    #[test]
    fn reads_records_back() {
        let recs = gen_arith_qa(&GenConfig::easy(5, 1)).unwrap();
        assert_eq!(read_qa_records(&to_jsonl(&recs)).unwrap(), recs);
        assert_eq!(read_qa_records(&to_json_array(&recs)).unwrap(), recs);
        assert_eq!(read_raw_records("{\"a\":1}\n\n[1]\n").unwrap().len(), 2);
        assert!(read_raw_records("{oops").is_err());
    }
}
