// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// An exact percentage.
///
/// Arithmetic and comparisons use the exact rational value. Serialization
/// renders one decimal place, rounding half up.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(BigRational);

impl Percent {
    /// `100 * part / whole`. Panics if `whole` is zero.
    pub fn of(part: u64, whole: u64) -> Self {
        assert!(whole > 0, "percentage of an empty whole");
        Self(BigRational::new(BigInt::from(part) * 100u32, BigInt::from(whole)))
    }

    pub fn from_ratio(value: BigRational) -> Self {
        Self(value)
    }

    /// Exact conversion of a finite float (used for configured reference values).
    pub fn from_f64(value: f64) -> Option<Self> {
        BigRational::from_float(value).map(Self)
    }

    pub fn exact(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Value in tenths of a percent, rounded half up (away from zero).
    pub fn tenths(&self) -> BigInt {
        let scaled = &self.0 * BigRational::from_integer(BigInt::from(10));
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        if scaled.is_negative() {
            -(-scaled + half).floor().to_integer()
        } else {
            (scaled + half).floor().to_integer()
        }
    }

    pub fn rounded(&self) -> f64 {
        self.tenths().to_f64().unwrap_or(f64::NAN) / 10.0
    }

    /// Unweighted mean; `None` for an empty input.
    pub fn mean<'a>(values: impl IntoIterator<Item = &'a Percent>) -> Option<Percent> {
        let mut sum = BigRational::zero();
        let mut n = 0u64;
        for value in values {
            sum += &value.0;
            n += 1;
        }
        (n > 0).then(|| Percent(sum / BigRational::from_integer(BigInt::from(n))))
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tenths = self.tenths();
        let sign = if tenths.is_negative() { "-" } else { "" };
        let abs = tenths.abs();
        let ten = BigInt::from(10);
        write!(f, "{sign}{}.{}", &abs / &ten, &abs % &ten)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.rounded())
    }
}
