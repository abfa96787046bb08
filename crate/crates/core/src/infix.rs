//! Infix questions to postfix expressions.
//!
//! Grammar (whitespace insignificant, optional trailing `= ?`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | '(' expr ')'
//! ```
//!
//! Numeric literals are read with the same rule-gated conversion loop the
//! postfix path uses, so a literal has one dense value wherever it appears.

use std::fmt;

use crate::convert::{convert, Slot};
use crate::error::{Error, Result};
use crate::gates::RuleGates;
use crate::render::render;
use crate::scalar::Scalar;
use crate::token::{encode, Op};

#[derive(Clone, Debug, PartialEq)]
pub enum InfixAst<T = f64> {
    Number(T),
    BinOp {
        op: Op,
        left: Box<InfixAst<T>>,
        right: Box<InfixAst<T>>,
    },
}

fn precedence(op: Op) -> u8 {
    match op {
        Op::Add | Op::Sub => 1,
        Op::Mul | Op::Div => 2,
        Op::None => 0,
    }
}

impl<T: Scalar> InfixAst<T> {
    pub fn bin(op: Op, left: InfixAst<T>, right: InfixAst<T>) -> Self {
        InfixAst::BinOp {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            InfixAst::Number(_) => 0,
            InfixAst::BinOp { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn op_count(&self) -> usize {
        match self {
            InfixAst::Number(_) => 0,
            InfixAst::BinOp { left, right, .. } => 1 + left.op_count() + right.op_count(),
        }
    }

    fn write_infix(&self, out: &mut String) -> Result<()> {
        match self {
            InfixAst::Number(x) => out.push_str(&render(*x)?),
            InfixAst::BinOp { op, left, right } => {
                let p = precedence(*op);
                let wrap = |child: &InfixAst<T>, strict: bool, out: &mut String| -> Result<()> {
                    let needs = match child {
                        InfixAst::BinOp { op: c, .. } => {
                            if strict {
                                precedence(*c) <= p
                            } else {
                                precedence(*c) < p
                            }
                        }
                        InfixAst::Number(_) => false,
                    };
                    if needs {
                        out.push('(');
                        child.write_infix(out)?;
                        out.push(')');
                        Ok(())
                    } else {
                        child.write_infix(out)
                    }
                };
                wrap(left, false, out)?;
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                wrap(right, true, out)?;
            }
        }
        Ok(())
    }

    /// Infix text with the minimal parentheses that preserve the tree shape.
    pub fn to_infix(&self) -> Result<String> {
        let mut s = String::new();
        self.write_infix(&mut s)?;
        Ok(s)
    }
}

impl<T: Scalar> fmt::Display for InfixAst<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_infix() {
            Ok(s) => f.write_str(&s),
            Err(_) => f.write_str("<non-finite>"),
        }
    }
}

struct Parser<'a, T> {
    chars: Vec<(usize, char)>,
    at: usize,
    src: &'a str,
    _scalar: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar> Parser<'a, T> {
    fn new(src: &'a str) -> Self {
        Parser {
            chars: src.char_indices().collect(),
            at: 0,
            src,
            _scalar: std::marker::PhantomData,
        }
    }

    fn offset(&self) -> usize {
        self.chars.get(self.at).map_or(self.src.len(), |&(i, _)| i)
    }

    fn error<R>(&self, message: impl Into<String>) -> Result<R> {
        Err(Error::Parse {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.at).is_some_and(|(_, c)| c.is_whitespace()) {
            self.at += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.at).map(|&(_, c)| c)
    }

    fn expr(&mut self) -> Result<InfixAst<T>> {
        let mut lhs = self.term()?;
        while let Some(op @ (Op::Add | Op::Sub)) = self.peek().and_then(Op::from_char) {
            self.at += 1;
            let rhs = self.term()?;
            lhs = InfixAst::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<InfixAst<T>> {
        let mut lhs = self.factor()?;
        while let Some(op @ (Op::Mul | Op::Div)) = self.peek().and_then(Op::from_char) {
            self.at += 1;
            let rhs = self.factor()?;
            lhs = InfixAst::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<InfixAst<T>> {
        match self.peek() {
            Some('(') => {
                self.at += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return self.error("expected ')'");
                }
                self.at += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('-') => self.error("unary minus is not supported"),
            Some(c) => self.error(format!("unexpected {c:?}")),
            None => self.error("unexpected end of input"),
        }
    }

    fn number(&mut self) -> Result<InfixAst<T>> {
        let start = self.at;
        while self
            .chars
            .get(self.at)
            .is_some_and(|(_, c)| c.is_ascii_digit() || *c == '.')
        {
            self.at += 1;
        }
        let literal: String = self.chars[start..self.at].iter().map(|&(_, c)| c).collect();
        let program = convert::<T, _>(&encode(&literal), &RuleGates, 1);
        let value = match program {
            Ok(p) if p.len() == 1 => match p.slot(0) {
                Slot::Number(x) => Some(x),
                _ => None,
            },
            _ => None,
        };
        match value {
            Some(x) => Ok(InfixAst::Number(x)),
            _ => {
                self.at = start;
                self.error(format!("malformed number {literal:?}"))
            }
        }
    }
}

fn strip_question_suffix(text: &str) -> &str {
    let t = text.trim_end();
    if let Some(rest) = t.strip_suffix('?') {
        if let Some(rest) = rest.trim_end().strip_suffix('=') {
            return rest;
        }
    }
    t
}

pub fn parse_infix<T: Scalar>(text: &str) -> Result<InfixAst<T>> {
    let body = strip_question_suffix(text);
    let mut parser = Parser::new(body);
    let ast = parser.expr()?;
    if parser.peek().is_some() {
        return parser.error("trailing input");
    }
    Ok(ast)
}

fn write_postfix<T: Scalar>(ast: &InfixAst<T>, out: &mut Vec<String>) -> Result<()> {
    match ast {
        InfixAst::Number(x) => out.push(render(*x)?),
        InfixAst::BinOp { op, left, right } => {
            write_postfix(left, out)?;
            write_postfix(right, out)?;
            out.push(op.symbol().to_string());
        }
    }
    Ok(())
}

/// Post-order traversal joined by single spaces. Fails only on non-finite leaves.
pub fn to_postfix<T: Scalar>(ast: &InfixAst<T>) -> Result<String> {
    let mut parts = Vec::new();
    write_postfix(ast, &mut parts)?;
    Ok(parts.join(" "))
}

pub fn eval_infix<T: Scalar>(ast: &InfixAst<T>) -> Result<T> {
    match ast {
        InfixAst::Number(x) => Ok(*x),
        InfixAst::BinOp { op, left, right } => {
            let a = eval_infix(left)?;
            let b = eval_infix(right)?;
            match op {
                Op::Add => Ok(a + b),
                Op::Sub => Ok(a - b),
                Op::Mul => Ok(a * b),
                Op::Div if b.is_zero() => Err(Error::DivisionByZero),
                Op::Div => Ok(a / b),
                Op::None => Err(Error::MalformedPostfix("operator slot without operator".into())),
            }
        }
    }
}
