//! Exact decimal numbers.
//!
//! Values are stored as a sign, a digit string without leading or trailing
//! zeros, and a power-of-ten exponent, so comparisons never round and JSON
//! exponents such as `1e400` stay exact.

use std::cmp::Ordering;
use std::fmt;

/// Exponents are clamped to this magnitude so that pathological inputs like
/// `1e99999999999999999999` still compare sensibly.
const EXPONENT_LIMIT: i64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decimal {
    negative: bool,
    /// Significant digits (values 0..=9), most significant first. Empty for zero.
    digits: Vec<u8>,
    /// value = digits * 10^exponent
    exponent: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecimalParseError {
    pub position: usize,
    pub message: &'static str,
}

impl fmt::Display for DecimalParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.position)
    }
}

impl std::error::Error for DecimalParseError {}

impl Decimal {
    pub fn zero() -> Self {
        Decimal {
            negative: false,
            digits: Vec::new(),
            exponent: 0,
        }
    }

    fn from_parts(negative: bool, mut digits: Vec<u8>, mut exponent: i64) -> Self {
        let lead = digits.iter().take_while(|&&d| d == 0).count();
        digits.drain(..lead);
        while digits.last() == Some(&0) {
            digits.pop();
            exponent += 1;
        }
        if digits.is_empty() {
            return Decimal::zero();
        }
        Decimal {
            negative,
            digits,
            exponent: exponent.clamp(-EXPONENT_LIMIT, EXPONENT_LIMIT),
        }
    }

    pub fn from_i64(v: i64) -> Self {
        let digits = v
            .unsigned_abs()
            .to_string()
            .bytes()
            .map(|b| b - b'0')
            .collect();
        Decimal::from_parts(v < 0, digits, 0)
    }

    /// `mantissa * 10^-scale`.
    pub fn from_scaled(mantissa: i128, scale: u32) -> Self {
        let digits = mantissa
            .unsigned_abs()
            .to_string()
            .bytes()
            .map(|b| b - b'0')
            .collect();
        Decimal::from_parts(mantissa < 0, digits, -(scale as i64))
    }

    /// Parses a plain decimal literal: optional `-`, digits, optional `.` and
    /// more digits. No exponent, no leading `+`.
    pub fn parse_plain(text: &str) -> Result<Self, DecimalParseError> {
        let bytes = text.as_bytes();
        let mut pos = 0;
        let negative = bytes.first() == Some(&b'-');
        if negative {
            pos += 1;
        }
        let int_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == int_start {
            return Err(DecimalParseError {
                position: pos,
                message: "expected digit",
            });
        }
        let mut digits: Vec<u8> = bytes[int_start..pos].iter().map(|b| b - b'0').collect();
        let mut exponent = 0i64;
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            let frac_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos == frac_start {
                return Err(DecimalParseError {
                    position: pos,
                    message: "expected fraction digit",
                });
            }
            digits.extend(bytes[frac_start..pos].iter().map(|b| b - b'0'));
            exponent = -((pos - frac_start) as i64);
        }
        if pos != bytes.len() {
            return Err(DecimalParseError {
                position: pos,
                message: "unexpected character in decimal literal",
            });
        }
        Ok(Decimal::from_parts(negative, digits, exponent))
    }

    /// Parses text following the JSON number grammar exactly.
    pub fn parse_json(text: &str) -> Result<Self, DecimalParseError> {
        let bytes = text.as_bytes();
        let err = |position, message| Err(DecimalParseError { position, message });
        let mut pos = 0;
        let negative = bytes.first() == Some(&b'-');
        if negative {
            pos += 1;
        }
        let int_start = pos;
        match bytes.get(pos) {
            Some(b'0') => pos += 1,
            Some(b'1'..=b'9') => {
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
            }
            _ => return err(pos, "expected digit"),
        }
        let mut digits: Vec<u8> = bytes[int_start..pos].iter().map(|b| b - b'0').collect();
        let mut exponent = 0i64;
        if bytes.get(pos) == Some(&b'.') {
            pos += 1;
            let frac_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos == frac_start {
                return err(pos, "expected fraction digit");
            }
            digits.extend(bytes[frac_start..pos].iter().map(|b| b - b'0'));
            exponent = -((pos - frac_start) as i64);
        }
        if matches!(bytes.get(pos), Some(b'e' | b'E')) {
            pos += 1;
            let exp_negative = match bytes.get(pos) {
                Some(b'-') => {
                    pos += 1;
                    true
                }
                Some(b'+') => {
                    pos += 1;
                    false
                }
                _ => false,
            };
            let exp_start = pos;
            let mut value: i64 = 0;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                value = value
                    .saturating_mul(10)
                    .saturating_add((bytes[pos] - b'0') as i64)
                    .min(EXPONENT_LIMIT);
                pos += 1;
            }
            if pos == exp_start {
                return err(pos, "expected exponent digit");
            }
            exponent += if exp_negative { -value } else { value };
        }
        if pos != bytes.len() {
            return err(pos, "unexpected character in number");
        }
        Ok(Decimal::from_parts(negative, digits, exponent))
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn abs(&self) -> Decimal {
        Decimal {
            negative: false,
            ..self.clone()
        }
    }

    pub fn negated(&self) -> Decimal {
        if self.is_zero() {
            return self.clone();
        }
        Decimal {
            negative: !self.negative,
            ..self.clone()
        }
    }

    /// Integer part of the magnitude: canonical digits, empty for zero.
    pub fn int_digits(&self) -> Vec<u8> {
        if self.is_zero() {
            return Vec::new();
        }
        let point = self.digits.len() as i64 + self.exponent;
        if point <= 0 {
            return Vec::new();
        }
        let mut out: Vec<u8> = self.digits.iter().copied().take(point as usize).collect();
        out.resize(point as usize, 0);
        out
    }

    /// Fraction part of the magnitude without trailing zeros.
    pub fn frac_digits(&self) -> Vec<u8> {
        if self.exponent >= 0 {
            return Vec::new();
        }
        let frac_len = (-self.exponent) as usize;
        if frac_len <= self.digits.len() {
            self.digits[self.digits.len() - frac_len..].to_vec()
        } else {
            let mut out = vec![0; frac_len - self.digits.len()];
            out.extend_from_slice(&self.digits);
            out
        }
    }

    /// Number of fraction digits needed to write the value exactly.
    pub fn scale(&self) -> u32 {
        if self.exponent >= 0 {
            0
        } else {
            (-self.exponent) as u32
        }
    }

    /// `self * 10^scale`, rounded toward negative infinity. `None` on overflow.
    pub fn scaled_floor(&self, scale: u32) -> Option<i128> {
        self.scaled(scale, false)
    }

    /// `self * 10^scale`, rounded toward positive infinity. `None` on overflow.
    pub fn scaled_ceil(&self, scale: u32) -> Option<i128> {
        self.scaled(scale, true)
    }

    fn scaled(&self, scale: u32, ceil: bool) -> Option<i128> {
        if self.is_zero() {
            return Some(0);
        }
        let shift = self.exponent + scale as i64;
        let mut magnitude: i128 = 0;
        let kept = if shift >= 0 {
            self.digits.len()
        } else {
            (self.digits.len() as i64 + shift).max(0) as usize
        };
        for &d in &self.digits[..kept] {
            magnitude = magnitude.checked_mul(10)?.checked_add(d as i128)?;
        }
        if shift > 0 {
            for _ in 0..shift {
                magnitude = magnitude.checked_mul(10)?;
            }
        }
        let inexact = kept < self.digits.len();
        let mut value = if self.negative { -magnitude } else { magnitude };
        if inexact {
            // dropped digits are nonzero because digits carry no trailing zeros
            if ceil && !self.negative {
                value += 1;
            } else if !ceil && self.negative {
                value -= 1;
            }
        }
        Some(value)
    }

    fn cmp_magnitude(&self, other: &Decimal) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let a = self.digits.len() as i64 + self.exponent;
        let b = other.digits.len() as i64 + other.exponent;
        a.cmp(&b).then_with(|| self.digits.cmp(&other.digits))
    }
}

impl Decimal {
    /// JSON number text. Plain notation for moderate magnitudes, otherwise
    /// `digits e exponent`.
    pub fn to_json_string(&self) -> String {
        if self.is_zero() || self.exponent.unsigned_abs() <= 40 {
            return self.to_string();
        }
        let mut out = String::with_capacity(self.digits.len() + 24);
        if self.negative {
            out.push('-');
        }
        out.extend(self.digits.iter().map(|&d| (b'0' + d) as char));
        out.push('e');
        out.push_str(&self.exponent.to_string());
        out
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_magnitude(other),
            (true, true) => other.cmp_magnitude(self),
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Decimal {
    /// Plain notation, no exponent.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        if self.negative {
            f.write_str("-")?;
        }
        let int = self.int_digits();
        if int.is_empty() {
            f.write_str("0")?;
        }
        for d in int {
            write!(f, "{d}")?;
        }
        let frac = self.frac_digits();
        if !frac.is_empty() {
            f.write_str(".")?;
            for d in frac {
                write!(f, "{d}")?;
            }
        }
        Ok(())
    }
}
