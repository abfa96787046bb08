//! Character-level arithmetic vocabulary.
//!
//! Every character maps to one of 18 fixed ids: the ten digits, `.`, the four
//! binary operators, space, the `$` terminator and a catch-all `OTHER`.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const VOCAB_SIZE: usize = 18;

pub const DOT_ID: u8 = 10;
pub const ADD_ID: u8 = 11;
pub const SUB_ID: u8 = 12;
pub const MUL_ID: u8 = 13;
pub const DIV_ID: u8 = 14;
pub const SPACE_ID: u8 = 15;
pub const TERMINATOR_ID: u8 = 16;
pub const OTHER_ID: u8 = 17;

/// Character emitted by [`decode`] for tokens outside the named vocabulary.
pub const PLACEHOLDER: char = '?';

/// Operator slot contents. `None` marks a number (or empty) slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::None, Op::Add, Op::Sub, Op::Mul, Op::Div];

    /// Class index used by the operator prediction head.
    pub fn class(self) -> usize {
        self as usize
    }

    pub fn from_class(class: usize) -> Option<Op> {
        Self::ALL.get(class).copied()
    }

    pub fn from_char(c: char) -> Option<Op> {
        match c {
            '+' => Some(Op::Add),
            '-' => Some(Op::Sub),
            '*' => Some(Op::Mul),
            '/' => Some(Op::Div),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::None => "none",
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
        }
    }

    pub fn is_some(self) -> bool {
        self != Op::None
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Coarse classification of a token, convenient for matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Digit(u8),
    Dot,
    Op(Op),
    Space,
    Terminator,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    id: u8,
    ch: char,
}

impl Token {
    pub fn from_char(ch: char) -> Token {
        let id = match ch {
            '0'..='9' => ch as u8 - b'0',
            '.' => DOT_ID,
            '+' => ADD_ID,
            '-' => SUB_ID,
            '*' => MUL_ID,
            '/' => DIV_ID,
            ' ' => SPACE_ID,
            '$' => TERMINATOR_ID,
            _ => OTHER_ID,
        };
        Token { id, ch }
    }

    /// Canonical token for an id; `OTHER` gets the placeholder character.
    pub fn from_id(id: u8) -> Option<Token> {
        let ch = match id {
            0..=9 => (b'0' + id) as char,
            DOT_ID => '.',
            ADD_ID => '+',
            SUB_ID => '-',
            MUL_ID => '*',
            DIV_ID => '/',
            SPACE_ID => ' ',
            TERMINATOR_ID => '$',
            OTHER_ID => PLACEHOLDER,
            _ => return None,
        };
        Some(Token { id, ch })
    }

    /// All 18 canonical tokens in id order.
    pub fn vocabulary() -> impl Iterator<Item = Token> {
        (0..VOCAB_SIZE as u8).filter_map(Token::from_id)
    }

    pub fn id(self) -> u8 {
        self.id
    }

    pub fn index(self) -> usize {
        self.id as usize
    }

    /// Source character (the original one, even for `OTHER`).
    pub fn source_char(self) -> char {
        self.ch
    }

    pub fn canonical_char(self) -> char {
        if self.id == OTHER_ID {
            PLACEHOLDER
        } else {
            self.ch
        }
    }

    pub fn kind(self) -> TokenKind {
        match self.id {
            0..=9 => TokenKind::Digit(self.id),
            DOT_ID => TokenKind::Dot,
            ADD_ID => TokenKind::Op(Op::Add),
            SUB_ID => TokenKind::Op(Op::Sub),
            MUL_ID => TokenKind::Op(Op::Mul),
            DIV_ID => TokenKind::Op(Op::Div),
            SPACE_ID => TokenKind::Space,
            TERMINATOR_ID => TokenKind::Terminator,
            _ => TokenKind::Other,
        }
    }

    pub fn is_op(self) -> bool {
        matches!(self.kind(), TokenKind::Op(_))
    }

    pub fn is_dot(self) -> bool {
        self.id == DOT_ID
    }

    pub fn onehot(self) -> [f64; VOCAB_SIZE] {
        embed(self)
    }
}

/// Ordered token sequence produced by [`encode`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ids(&self) -> Vec<u8> {
        self.tokens.iter().map(|t| t.id).collect()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

pub fn encode(text: &str) -> TokenStream {
    TokenStream {
        tokens: text.chars().map(Token::from_char).collect(),
    }
}

pub fn decode(stream: &TokenStream) -> String {
    stream.tokens.iter().map(|t| t.canonical_char()).collect()
}

pub fn embed(token: Token) -> [f64; VOCAB_SIZE] {
    let mut v = [0.0; VOCAB_SIZE];
    v[token.index()] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encodes_table_one_postfix() {
        assert_eq!(encode("3 5 +").ids(), vec![3, 15, 5, 15, 11]);
    }

    #[test]
    fn empty_and_unknown() {
        assert!(encode("").is_empty());
        assert_eq!(encode("a$").ids(), vec![17, 16]);
        assert_eq!(decode(&encode("a$")), "?$");
    }

    #[test]
    fn embed_is_onehot() {
        for (id, expected) in [(0u8, 0usize), (10, 10), (17, 17)] {
            let v = embed(Token::from_id(id).unwrap());
            assert_eq!(v.iter().sum::<f64>(), 1.0);
            assert_eq!(v[expected], 1.0);
        }
    }

    #[test]
    fn vocabulary_ids_are_dense() {
        let ids: Vec<u8> = Token::vocabulary().map(Token::id).collect();
        assert_eq!(ids, (0..18).collect::<Vec<_>>());
        assert!(Token::from_id(18).is_none());
    }

    #[test]
    fn embeddings_are_orthonormal() {
        for t in Token::vocabulary() {
            for u in Token::vocabulary() {
                let dot: f64 = embed(t).iter().zip(embed(u)).map(|(a, b)| a * b).sum();
                assert_eq!(dot, if t.id() == u.id() { 1.0 } else { 0.0 });
            }
        }
    }

    proptest! {
        #[test]
        fn named_vocabulary_round_trips(s in "[0-9.+*/ $-]{0,40}") {
            prop_assert_eq!(decode(&encode(&s)), s);
        }

        #[test]
        fn other_characters_become_placeholder(s in "\\PC{0,30}") {
            let expected: String = s
                .chars()
                .map(|c| if "0123456789.+-*/ $".contains(c) { c } else { PLACEHOLDER })
                .collect();
            prop_assert_eq!(decode(&encode(&s)), expected);
        }
    }
}
