//! Fixed-point decimal arithmetic for quantities and money.
//!
//! Every value is an `i128` count of 10⁻¹⁰ units. That scale is wide enough
//! for a 4-digit per-megabyte price applied to a byte count to stay exact,
//! so rated amounts add up without drift. Any multiplication that would
//! need more digits rounds half-to-even back to the ledger scale.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of fractional digits carried by [`Fixed`] and [`Money`].
pub const SCALE: u32 = 10;
const ONE_RAW: i128 = 10_000_000_000;

/// Fractional digits tariff prices are quoted in.
pub const PRICE_DIGITS: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseDecimalError {
    #[error("empty decimal string")]
    Empty,
    #[error("invalid decimal `{0}`")]
    Invalid(String),
    #[error("`{0}` has more than {SCALE} fractional digits")]
    TooPrecise(String),
    #[error("`{0}` is out of range")]
    Overflow(String),
}

/// Integer division rounding half to even. `den` must be positive.
pub(crate) fn div_half_even(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

fn pow10(exp: u32) -> i128 {
    10i128.pow(exp)
}

/// A signed decimal with [`SCALE`] fractional digits.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(i128);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(ONE_RAW);

    pub const fn from_raw(raw: i128) -> Self {
        Fixed(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn from_int(n: i64) -> Self {
        Fixed(n as i128 * ONE_RAW)
    }

    /// `mantissa × 10^-scale`; `scale` must not exceed [`SCALE`].
    pub fn from_parts(mantissa: i64, scale: u32) -> Self {
        assert!(scale <= SCALE, "scale {scale} exceeds ledger scale");
        Fixed(mantissa as i128 * pow10(SCALE - scale))
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Product rounded half-even to the ledger scale.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: Fixed) -> Fixed {
        let prod = self.0.checked_mul(rhs.0).expect("fixed-point multiplication overflow");
        Fixed(div_half_even(prod, ONE_RAW))
    }

    pub fn mul_int(self, n: i128) -> Fixed {
        Fixed(self.0.checked_mul(n).expect("fixed-point overflow"))
    }

    /// `self × num / den` with a single half-even rounding step.
    pub fn mul_ratio(self, num: i128, den: i128) -> Fixed {
        assert!(den > 0, "ratio denominator must be positive");
        let prod = self.0.checked_mul(num).expect("fixed-point overflow");
        Fixed(div_half_even(prod, den))
    }

    /// Exact product of all factors, rounded once (half-even) to `digits`
    /// fractional digits.
    pub fn product_rounded(factors: &[Fixed], digits: u32) -> Fixed {
        use num_bigint::BigInt;
        use num_integer::Integer;
        use num_traits::ToPrimitive;

        let digits = digits.min(SCALE);
        let mut num = BigInt::from(1);
        for f in factors {
            num *= BigInt::from(f.0);
        }
        // num carries SCALE × len fractional digits; keep `digits` of them.
        let shift = SCALE * factors.len() as u32 - digits;
        let den = BigInt::from(10).pow(shift);
        let (q, r) = num.div_mod_floor(&den);
        let twice = r * 2;
        let q = if twice > den || (twice == den && q.is_odd()) {
            q + 1
        } else {
            q
        };
        let raw = q * BigInt::from(10).pow(SCALE - digits);
        Fixed(raw.to_i128().expect("fixed-point overflow"))
    }

    /// Round half-even to `digits` fractional digits.
    pub fn round_dp(self, digits: u32) -> Fixed {
        if digits >= SCALE {
            return self;
        }
        let step = pow10(SCALE - digits);
        Fixed(div_half_even(self.0, step) * step)
    }

    /// Number of significant fractional digits.
    pub fn fractional_digits(self) -> u32 {
        let mut frac = self.0.rem_euclid(ONE_RAW);
        if frac == 0 {
            return 0;
        }
        let mut digits = SCALE;
        while frac % 10 == 0 {
            frac /= 10;
            digits -= 1;
        }
        digits
    }

    /// Renders with at least `min` and at most [`SCALE`] fractional digits.
    pub fn format_with_min_digits(self, min: u32) -> String {
        let digits = self.fractional_digits().max(min).min(SCALE);
        self.format_exact(digits)
    }

    /// Renders with exactly `digits` fractional digits; the value must
    /// already be representable at that precision.
    fn format_exact(self, digits: u32) -> String {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / ONE_RAW as u128;
        if digits == 0 {
            return format!("{sign}{int}");
        }
        let frac = (abs % ONE_RAW as u128) / 10u128.pow(SCALE - digits);
        format!("{sign}{int}.{frac:0width$}", width = digits as usize)
    }
}

impl FromStr for Fixed {
    type Err = ParseDecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseDecimalError::Empty);
        }
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let invalid = || ParseDecimalError::Invalid(s.to_string());
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        if frac_part.len() > SCALE as usize {
            return Err(ParseDecimalError::TooPrecise(s.to_string()));
        }
        let overflow = || ParseDecimalError::Overflow(s.to_string());
        let int: i128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| overflow())?
        };
        let frac: i128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse::<i128>().map_err(|_| invalid())? * pow10(SCALE - frac_part.len() as u32)
        };
        let raw = int
            .checked_mul(ONE_RAW)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(overflow)?;
        Ok(Fixed(if negative { -raw } else { raw }))
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => f.write_str(&self.round_dp(p as u32).format_exact(p as u32)),
            None => f.write_str(&self.format_with_min_digits(0)),
        }
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({self})")
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0.checked_add(rhs.0).expect("fixed-point overflow"))
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0.checked_sub(rhs.0).expect("fixed-point overflow"))
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-self.0)
    }
}

impl Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        iter.fold(Fixed::ZERO, Add::add)
    }
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A monetary amount at ledger scale. Serialized with at least four
/// fractional digits.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(Fixed);

impl Money {
    pub const ZERO: Money = Money(Fixed::ZERO);

    pub const fn new(value: Fixed) -> Self {
        Money(value)
    }

    pub const fn from_raw(raw: i128) -> Self {
        Money(Fixed::from_raw(raw))
    }

    pub fn from_parts(mantissa: i64, scale: u32) -> Self {
        Money(Fixed::from_parts(mantissa, scale))
    }

    pub const fn value(self) -> Fixed {
        self.0
    }

    pub const fn raw(self) -> i128 {
        self.0.raw()
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(self) -> bool {
        self.0.is_negative()
    }

    pub fn scale_by(self, factor: Fixed) -> Money {
        Money(self.0.mul(factor))
    }

    pub fn times(self, n: i128) -> Money {
        Money(self.0.mul_int(n))
    }

    pub fn mul_ratio(self, num: i128, den: i128) -> Money {
        Money(self.0.mul_ratio(num, den))
    }

    pub fn round_dp(self, digits: u32) -> Money {
        Money(self.0.round_dp(digits))
    }

    pub fn min(self, other: Money) -> Money {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Money) -> Money {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Presentation form: half-even rounding to `digits` places.
    pub fn present(self, digits: u32) -> String {
        format!("{:.*}", digits as usize, self.0)
    }
}

impl FromStr for Money {
    type Err = ParseDecimalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(Money)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.format_with_min_digits(PRICE_DIGITS))
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Money({self})")
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        *self = *self + rhs;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        *self = *self - rhs;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Fixed::deserialize(deserializer).map(Money)
    }
}
