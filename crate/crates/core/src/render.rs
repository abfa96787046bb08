//! Dense-to-text conversion.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Text form of a dense value together with the value it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedNumber<T = f64> {
    pub text: String,
    pub value: T,
}

impl<T: Scalar> RenderedNumber<T> {
    pub fn new(value: T) -> Result<Self> {
        Ok(RenderedNumber {
            text: render(value)?,
            value,
        })
    }
}

impl<T> fmt::Display for RenderedNumber<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Renders `x` as plain decimal text.
///
/// Values within a relative `T::snap_tolerance()` of an integer print as that
/// integer. Everything else is rounded to `T::RENDER_DIGITS` significant
/// digits with trailing zeros trimmed; only magnitudes below `1e-6` use an
/// exponent.
pub fn render<T: Scalar>(x: T) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("{x}")));
    }
    let r = x.round();
    if (x - r).abs() <= T::snap_tolerance() * x.abs().max(T::one()) {
        if r == T::zero() {
            return Ok("0".to_string());
        }
        return Ok(format!("{:.0}", r.to_f64().unwrap_or_default()));
    }

    let v = x.to_f64().unwrap_or_default();
    let sci = format!("{:.*e}", T::RENDER_DIGITS - 1, v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let sign = if v < 0.0 { "-" } else { "" };

    let body = if v.abs() < 1e-6 {
        let (head, tail) = digits.split_at(1);
        if tail.is_empty() {
            format!("{head}e{exp}")
        } else {
            format!("{head}.{tail}e{exp}")
        }
    } else if exp >= 0 {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    Ok(format!("{sign}{body}"))
}
