//! Numeric abstraction shared by the accounting code (mixing weights, epoch
//! arithmetic, EM scores).
//!
//! Everything that does arithmetic on ratios is generic over [`Scalar`], so
//! the same code runs on `f32`/`f64` for quick estimates and on an exact
//! rational type when fixed points have to reproduce to the last digit.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// A number type usable for ratio bookkeeping.
pub trait Scalar:
    Num + Signed + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Exact conversion from a count.
    fn from_count(n: u64) -> Self;

    /// Parses a decimal literal (`"0.5"`, `"-28.38"`, `"3"`). Rational types
    /// also accept `"p/q"`. Exact wherever the type can represent the value.
    fn parse_decimal(text: &str) -> Option<Self>;

    /// The value as a non-negative integer count, when it is one.
    ///
    /// Exact for rationals; floats accept values within rounding noise of an
    /// integer.
    fn as_count(&self) -> Option<u64>;

    /// Smallest count that is `>= self`. Same tolerance rules as
    /// [`Scalar::as_count`].
    fn ceil_count(&self) -> Option<u64>;

    /// Equality for configuration checks (exact for rationals).
    fn nearly_eq(&self, other: &Self) -> bool;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! float_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            fn from_count(n: u64) -> Self {
                n as $t
            }

            fn parse_decimal(text: &str) -> Option<Self> {
                text.trim().parse::<$t>().ok().filter(|v| v.is_finite())
            }

            fn as_count(&self) -> Option<u64> {
                let r = self.round();
                if r < 0.0 || (self - r).abs() > $eps * r.abs().max(1.0) {
                    return None;
                }
                Some(r as u64)
            }

            fn ceil_count(&self) -> Option<u64> {
                if !self.is_finite() || *self < -$eps {
                    return None;
                }
                match self.as_count() {
                    Some(n) => Some(n),
                    None => Some(self.ceil() as u64),
                }
            }

            fn nearly_eq(&self, other: &Self) -> bool {
                (self - other).abs() <= $eps * self.abs().max(other.abs()).max(1.0)
            }
        }
    };
}

float_scalar!(f32, 1e-5);
float_scalar!(f64, 1e-9);

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }

    fn parse_decimal(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num: i64 = num.trim().parse().ok()?;
            let den: i64 = den.trim().parse().ok()?;
            if den == 0 {
                return None;
            }
            return Some(Ratio::new(num, den));
        }
        parse_decimal_ratio(text)
    }

    fn as_count(&self) -> Option<u64> {
        if self.is_integer() && !self.is_negative() {
            u64::try_from(self.to_integer()).ok()
        } else {
            None
        }
    }

    fn ceil_count(&self) -> Option<u64> {
        let c = self.ceil();
        if c.is_negative() {
            return None;
        }
        u64::try_from(c.to_integer()).ok()
    }

    fn nearly_eq(&self, other: &Self) -> bool {
        self == other
    }
}

/// `[-+]?digits[.digits]` (optionally with an exponent) into an exact ratio.
fn parse_decimal_ratio(text: &str) -> Option<Ratio<i64>> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(at) => (&text[..at], text[at + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut numer: i64 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer.checked_mul(10)?.checked_add(i64::from(b - b'0'))?;
    }
    let scale = exponent - frac_part.len() as i32;
    let pow = 10i64.checked_pow(scale.unsigned_abs())?;
    let value = if scale >= 0 {
        Ratio::from_integer(numer.checked_mul(pow)?)
    } else {
        Ratio::new(numer, pow)
    };
    Some(if negative { -value } else { value })
}

/// Sum of a slice of scalars.
pub fn sum<S: Scalar>(values: impl IntoIterator<Item = S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v)
}

/// Unweighted mean; `None` for an empty input.
pub fn mean<S: Scalar>(values: &[S]) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    Some(sum(values.iter().cloned()) / S::from_count(values.len() as u64))
}

/// Renders a scalar as the shortest decimal that round-trips through `f64`.
pub fn format_decimal<S: Scalar>(value: &S) -> String {
    let v = value.to_f64_lossy();
    if v.is_zero() {
        // avoid "-0"
        return "0".to_string();
    }
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn decimal_parsing_is_exact_for_rationals() {
        assert_eq!(Rational::parse_decimal("28.38"), Some(Rational::new(2838, 100)));
        assert_eq!(Rational::parse_decimal("-0.05"), Some(Rational::new(-5, 100)));
        assert_eq!(Rational::parse_decimal("3"), Some(Rational::from_integer(3)));
        assert_eq!(Rational::parse_decimal("1/2"), Some(Rational::new(1, 2)));
        assert_eq!(Rational::parse_decimal(".5"), Some(Rational::new(1, 2)));
        assert_eq!(Rational::parse_decimal("2.5e1"), Some(Rational::from_integer(25)));
        assert_eq!(Rational::parse_decimal("1/0"), None);
        assert_eq!(Rational::parse_decimal("abc"), None);
        assert_eq!(Rational::parse_decimal("."), None);
    }

    #[test]
    fn table_difference_is_exact() {
        let a = Rational::parse_decimal("28.38").unwrap();
        let b = Rational::parse_decimal("28.33").unwrap();
        assert_eq!(a - b, Rational::new(5, 100));
        // the float route is not exact
        assert_ne!(28.38f64 - 28.33f64, 0.05f64);
    }

    #[test]
    fn counts() {
        assert_eq!(Rational::new(6, 2).as_count(), Some(3));
        assert_eq!(Rational::new(1, 2).as_count(), None);
        assert_eq!(Rational::new(3, 10).ceil_count(), Some(1));
        assert_eq!((0.1f64 * 3.0).ceil_count(), Some(1));
        assert_eq!((0.7f64 * 10.0).ceil_count(), Some(7));
        assert_eq!(1.0000000000000002f64.as_count(), Some(1));
        assert_eq!(0.5f64.as_count(), None);
        assert_eq!((-1.0f64).as_count(), None);
    }

    #[test]
    fn mean_and_format() {
        let xs = [Rational::new(1, 20), Rational::new(542, 100)];
        assert_eq!(mean(&xs), Some(Rational::new(547, 200)));
        assert_eq!(mean::<f64>(&[]), None);
        assert_eq!(format_decimal(&Rational::new(5, 100)), "0.05");
        assert_eq!(format_decimal(&Rational::new(0, 1)), "0");
    }
}
