// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Serialize, Serializer};

/// Non-negative decimal stored as an integer count of ten-thousandths.
///
/// Grades and attendance percentages are kept in this form so that means and
/// band boundaries (CR = 5, attendance = 75, ...) are decided exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FixedDecimal(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DecimalParseError {
    #[error("not a number")]
    NotANumber,
    #[error("negative value")]
    Negative,
    #[error("more than 4 decimal places")]
    TooPrecise,
}

impl FixedDecimal {
    pub const FRACTION_DIGITS: u32 = 4;
    pub const SCALE: u64 = 10_000;

    pub const fn from_raw(raw: u64) -> Self {
        Self(raw)
    }

    pub const fn from_int(value: u64) -> Self {
        Self(value * Self::SCALE)
    }

    /// Value in ten-thousandths.
    pub const fn raw(self) -> u64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }

    /// Parses plain decimal notation (`7`, `7.5`, `.25`, `+3.0`).
    pub fn parse(text: &str) -> Result<Self, DecimalParseError> {
        let text = text.trim();
        let (negative, body) = match text.as_bytes().first() {
            Some(b'-') => (true, &text[1..]),
            Some(b'+') => (false, &text[1..]),
            _ => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(DecimalParseError::NotANumber);
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(DecimalParseError::NotANumber);
        }
        let frac_trimmed = frac_part.trim_end_matches('0');
        if frac_trimmed.len() > Self::FRACTION_DIGITS as usize {
            return Err(DecimalParseError::TooPrecise);
        }
        let int_value: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse::<u64>().map_err(|_| DecimalParseError::NotANumber)?
        };
        let mut frac_value = 0u64;
        for (i, digit) in frac_trimmed.bytes().enumerate() {
            frac_value += u64::from(digit - b'0') * 10u64.pow(Self::FRACTION_DIGITS - 1 - i as u32);
        }
        let raw = int_value
            .checked_mul(Self::SCALE)
            .and_then(|v| v.checked_add(frac_value))
            .ok_or(DecimalParseError::NotANumber)?;
        if negative && raw > 0 {
            return Err(DecimalParseError::Negative);
        }
        Ok(Self(raw))
    }
}

impl fmt::Display for FixedDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.0 / Self::SCALE;
        let frac = self.0 % Self::SCALE;
        if frac == 0 {
            return write!(f, "{int}.0");
        }
        let digits = format!("{frac:04}");
        write!(f, "{int}.{}", digits.trim_end_matches('0'))
    }
}

impl Serialize for FixedDecimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_forms() {
        assert_eq!(FixedDecimal::parse("7").unwrap().raw(), 70_000);
        assert_eq!(FixedDecimal::parse("7.5").unwrap().raw(), 75_000);
        assert_eq!(FixedDecimal::parse(".25").unwrap().raw(), 2_500);
        assert_eq!(FixedDecimal::parse("00.1000").unwrap().raw(), 1_000);
        assert_eq!(FixedDecimal::parse("-0").unwrap().raw(), 0);
        assert_eq!(FixedDecimal::parse(" 10.0 ").unwrap(), FixedDecimal::from_int(10));
    }

    #[test]
    fn rejects_bad_forms() {
        assert_eq!(FixedDecimal::parse(""), Err(DecimalParseError::NotANumber));
        assert_eq!(FixedDecimal::parse("."), Err(DecimalParseError::NotANumber));
        assert_eq!(FixedDecimal::parse("1e3"), Err(DecimalParseError::NotANumber));
        assert_eq!(FixedDecimal::parse("1.2.3"), Err(DecimalParseError::NotANumber));
        assert_eq!(FixedDecimal::parse("-1.5"), Err(DecimalParseError::Negative));
        assert_eq!(FixedDecimal::parse("1.23456"), Err(DecimalParseError::TooPrecise));
    }

    #[test]
    fn display_is_minimal() {
        assert_eq!(FixedDecimal::parse("8").unwrap().to_string(), "8.0");
        assert_eq!(FixedDecimal::parse("8.250").unwrap().to_string(), "8.25");
    }
}
