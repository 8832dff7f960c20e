//! Exact rational numbers and directed simplification of floating-point values.
//!
//! [`Rational`] keeps small values as a reduced `i64` pair and promotes to an
//! arbitrary-precision representation only when an intermediate result no
//! longer fits. Every value is kept in lowest terms with a positive
//! denominator, so structural equality and hashing agree with numeric
//! equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors produced by conversions into [`Rational`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumberError {
    #[error("value is not finite: {0}")]
    NonFinite(f64),
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

#[derive(Clone)]
enum Repr {
    /// Reduced, denominator > 0, numerator != i64::MIN.
    Small(i64, i64),
    Big(Box<BigRational>),
}

/// Exact arbitrary-precision fraction.
#[derive(Clone)]
pub struct Rational(Repr);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    pub fn from_integer(n: i64) -> Self {
        if n == i64::MIN {
            return Self::from_big(BigRational::from_integer(BigInt::from(n)));
        }
        Rational(Repr::Small(n, 1))
    }

    /// Builds `num / den`, reducing to lowest terms.
    ///
    /// Panics if `den == 0`; use [`Rational::try_new`] for fallible input.
    pub fn new(num: i64, den: i64) -> Self {
        Self::try_new(num, den).expect("zero denominator")
    }

    pub fn try_new(num: i64, den: i64) -> Result<Self, NumberError> {
        if den == 0 {
            return Err(NumberError::ZeroDenominator);
        }
        Ok(Self::from_i128(num as i128, den as i128))
    }

    /// Builds `num / den` from big integers.
    pub fn from_bigints(num: BigInt, den: BigInt) -> Result<Self, NumberError> {
        if den.is_zero() {
            return Err(NumberError::ZeroDenominator);
        }
        Ok(Self::from_big(BigRational::new(num, den)))
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let (mut n, mut d) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd_u128(n.unsigned_abs(), d as u128);
        if g > 1 {
            n /= g as i128;
            d /= g as i128;
        }
        if n > i64::MIN as i128 && n <= i64::MAX as i128 && d <= i64::MAX as i128 {
            Rational(Repr::Small(n as i64, d as i64))
        } else {
            Rational(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(n),
                BigInt::from(d),
            ))))
        }
    }

    /// Wraps an already reduced big rational, demoting it when it fits.
    fn from_big(r: BigRational) -> Self {
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            if n != i64::MIN {
                return Rational(Repr::Small(n, d));
            }
        }
        Rational(Repr::Big(Box::new(r)))
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    /// Numerator and denominator when both fit in an `i64`.
    pub fn as_small(&self) -> Option<(i64, i64)> {
        match self.0 {
            Repr::Small(n, d) => Some((n, d)),
            Repr::Big(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match &self.0 {
            Repr::Small(n, _) => n.signum() as i32,
            Repr::Big(b) => match b.numer().sign() {
                Sign::Minus => -1,
                Sign::NoSign => 0,
                Sign::Plus => 1,
            },
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(n, d) => Self::from_i128(*d as i128, *n as i128),
            Repr::Big(b) => Self::from_big(b.recip()),
        }
    }

    /// Largest integer not greater than `self`.
    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(Integer::div_floor(n, d)),
            Repr::Big(b) => b.floor().to_integer(),
        }
    }

    /// Smallest integer not less than `self`.
    pub fn ceil(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(-Integer::div_floor(&-n, d)),
            Repr::Big(b) => b.ceil().to_integer(),
        }
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::from_big(BigRational::from_integer(n))
    }

    /// Nearest `f64` (may round).
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => {
                // Exact for |n|, d < 2^53; otherwise still correctly scaled.
                *n as f64 / *d as f64
            }
            Repr::Big(b) => {
                let n = b.numer();
                let d = b.denom();
                let nb = n.bits() as i64;
                let db = d.bits() as i64;
                // Scale both to ~60 significant bits before dividing.
                let shift_n = (nb - 60).max(0);
                let shift_d = (db - 60).max(0);
                let nf = (n >> shift_n as usize).to_f64().unwrap_or(f64::NAN);
                let df = (d >> shift_d as usize).to_f64().unwrap_or(f64::NAN);
                nf / df * 2f64.powi((shift_n - shift_d) as i32)
            }
        }
    }

    /// Exact value of a finite `f64`.
    pub fn from_f64_exact(x: f64) -> Result<Self, NumberError> {
        if !x.is_finite() {
            return Err(NumberError::NonFinite(x));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let mut m = BigInt::from(mantissa);
        if negative {
            m = -m;
        }
        let r = if exp >= 0 {
            BigRational::from_integer(m << exp as usize)
        } else {
            BigRational::new(m, BigInt::one() << (-exp) as usize)
        };
        Ok(Self::from_big(r))
    }

    /// `2^-k` for small `k`.
    pub fn pow2_neg(k: u32) -> Self {
        if k < 62 {
            Rational::new(1, 1i64 << k)
        } else {
            Self::from_big(BigRational::new(BigInt::one(), BigInt::one() << k as usize))
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Bit length of numerator plus denominator; a rough size measure.
    pub fn bit_size(&self) -> u64 {
        match &self.0 {
            Repr::Small(n, d) => {
                (64 - n.unsigned_abs().leading_zeros() + 64 - d.leading_zeros()) as u64
            }
            Repr::Big(b) => b.numer().bits() + b.denom().bits(),
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<i32> for Rational {
    fn from(n: i32) -> Self {
        Self::from_integer(n as i64)
    }
}

impl From<u32> for Rational {
    fn from(n: u32) -> Self {
        Self::from_integer(n as i64)
    }
}

impl From<usize> for Rational {
    fn from(n: usize) -> Self {
        Self::from_bigint(BigInt::from(n))
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Self::from_bigint(n)
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            // Canonical form: a value that fits is always Small.
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn add_ref(x: &Rational, y: &Rational) -> Rational {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            if b == d {
                Rational::from_i128(*a as i128 + *c as i128, *b as i128)
            } else {
                Rational::from_i128(
                    *a as i128 * *d as i128 + *c as i128 * *b as i128,
                    *b as i128 * *d as i128,
                )
            }
        }
        _ => Rational::from_big(x.to_big() + y.to_big()),
    }
}

fn sub_ref(x: &Rational, y: &Rational) -> Rational {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            if b == d {
                Rational::from_i128(*a as i128 - *c as i128, *b as i128)
            } else {
                Rational::from_i128(
                    *a as i128 * *d as i128 - *c as i128 * *b as i128,
                    *b as i128 * *d as i128,
                )
            }
        }
        _ => Rational::from_big(x.to_big() - y.to_big()),
    }
}

fn mul_ref(x: &Rational, y: &Rational) -> Rational {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            Rational::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
        }
        _ => Rational::from_big(x.to_big() * y.to_big()),
    }
}

fn div_ref(x: &Rational, y: &Rational) -> Rational {
    assert!(!y.is_zero(), "division by zero");
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            Rational::from_i128(*a as i128 * *d as i128, *b as i128 * *c as i128)
        }
        _ => Rational::from_big(x.to_big() / y.to_big()),
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $f(self, rhs)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $f(&self, &rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $f(&self, rhs)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $f(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_ref);
forward_binop!(Sub, sub, sub_ref);
forward_binop!(Mul, mul, mul_ref);
forward_binop!(Div, div, div_ref);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(-n, *d)),
            Repr::Big(b) => Rational::from_big(-(**b).clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = add_ref(self, rhs);
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = add_ref(self, &rhs);
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = sub_ref(self, rhs);
    }
}

impl SubAssign<Rational> for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        *self = sub_ref(self, &rhs);
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        *self = mul_ref(self, rhs);
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().ok()?
    };
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(Rational::from_big(r))
}

impl FromStr for Rational {
    type Err = NumberError;

    /// Accepts `p`, `p/q`, and decimal notation such as `-1.25` or `3e-2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| NumberError::Parse(s.to_string()))?;
            let q: BigInt = q.trim().parse().map_err(|_| NumberError::Parse(s.to_string()))?;
            return Rational::from_bigints(p, q);
        }
        parse_decimal(t).ok_or_else(|| NumberError::Parse(s.to_string()))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        // Numbers go through their shortest decimal rendering, so `0.1` is 1/10.
        let v = serde_json::Value::deserialize(deserializer)?;
        let text = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "expected number or \"p/q\" string, got {other}"
                )))
            }
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Direction of a one-sided approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundingMode {
    /// Result lies in `[x - eps, x]`.
    Down,
    /// Result lies in `[x, x + eps]`.
    Up,
}

/// Simplest fraction (smallest denominator, then smallest numerator magnitude)
/// in the closed interval `[lo, hi]`, found by descending the Stern–Brocot tree
/// via continued-fraction steps.
pub fn simplest_in_interval(lo: &Rational, hi: &Rational) -> Rational {
    assert!(lo <= hi, "empty interval [{lo}, {hi}]");
    if !lo.is_positive() && !hi.is_negative() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_in_interval(&-hi, &-lo);
    }
    simplest_positive(lo.clone(), hi.clone())
}

fn simplest_positive(lo: Rational, hi: Rational) -> Rational {
    // Iterative form of: fl = floor(lo); if lo is an integer or fl+1 <= hi the
    // answer is ceil(lo); otherwise recurse on the reciprocals of the
    // fractional parts.
    let mut terms: Vec<BigInt> = Vec::new();
    let (mut lo, mut hi) = (lo, hi);
    let tail = loop {
        let fl = lo.floor();
        if lo.is_integer() {
            break lo.clone();
        }
        let next = Rational::from_bigint(&fl + 1);
        if next <= hi {
            break next;
        }
        let fl_r = Rational::from_bigint(fl.clone());
        terms.push(fl);
        let new_lo = (&hi - &fl_r).recip();
        let new_hi = (&lo - &fl_r).recip();
        lo = new_lo;
        hi = new_hi;
    };
    terms
        .into_iter()
        .rev()
        .fold(tail, |acc, a| Rational::from_bigint(a) + acc.recip())
}

/// Simplest rational in the directed interval `[x - eps, x]` (Down) or
/// `[x, x + eps]` (Up) around an exact rational `x`.
pub fn simplify_directed(x: &Rational, mode: RoundingMode, eps: &Rational) -> Rational {
    assert!(!eps.is_negative(), "negative tolerance");
    match mode {
        RoundingMode::Down => simplest_in_interval(&(x - eps), x),
        RoundingMode::Up => simplest_in_interval(x, &(x + eps)),
    }
}

/// Exact value of a finite binary floating-point number.
pub fn exact_rational(x: f64) -> Result<Rational, NumberError> {
    Rational::from_f64_exact(x)
}

/// Best rational approximation of `x` from one side: the fraction with the
/// smallest denominator inside the closed directed interval of width `eps`.
pub fn approx_rational(x: f64, mode: RoundingMode, eps: &Rational) -> Result<Rational, NumberError> {
    let exact = exact_rational(x)?;
    Ok(simplify_directed(&exact, mode, eps))
}

/// Default tolerance for rounding conflict bounds, in time units.
pub fn default_eps() -> Rational {
    Rational::pow2_neg(20)
}

/// Rational lower and upper brackets of `sqrt(x)` with width at most `eps`,
/// verified exactly by squaring.
pub fn sqrt_bracket(x: &Rational, eps: &Rational) -> (Rational, Rational) {
    assert!(!x.is_negative(), "sqrt of negative value");
    if x.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    let guess = x.to_f64().sqrt();
    let half = eps / Rational::from_integer(2);
    let mut lo = Rational::from_f64_exact(guess)
        .map(|g| simplify_directed(&g, RoundingMode::Down, &half))
        .unwrap_or_else(|_| Rational::zero());
    let mut hi = Rational::from_f64_exact(guess)
        .map(|g| simplify_directed(&g, RoundingMode::Up, &half))
        .unwrap_or_else(|_| x.clone() + Rational::one());
    if lo.is_negative() {
        lo = Rational::zero();
    }
    // Repair the float guess until the bracket is exact.
    let mut step = half.clone();
    while &(&lo * &lo) > x {
        lo = (&lo - &step).max(Rational::zero());
        step = &step * Rational::from_integer(2);
    }
    let mut step = half.clone();
    while &(&hi * &hi) < x {
        hi = &hi + &step;
        step = &step * Rational::from_integer(2);
    }
    // Tighten by bisection when the repair widened the bracket.
    while &hi - &lo > *eps {
        let mid = (&lo + &hi) / Rational::from_integer(2);
        if &(&mid * &mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if let Some(exact) = exact_sqrt(x) {
        return (exact.clone(), exact);
    }
    (lo, hi)
}

/// Exact square root when `x` is the square of a rational.
pub fn exact_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer();
    let d = x.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &sn * &sn == n && &sd * &sd == d {
        Rational::from_bigints(sn, sd).ok()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    /// Brute-force oracle: smallest denominator q (then smallest |p|) with p/q in [lo, hi].
    fn brute_simplest(lo: &Rational, hi: &Rational, max_q: i64) -> Option<Rational> {
        for q in 1..=max_q {
            let qr = Rational::from_integer(q);
            let p_lo = (lo * &qr).ceil();
            let p_hi = (hi * &qr).floor();
            if p_lo <= p_hi {
                let zero = BigInt::zero();
                let p = if p_lo <= zero && zero <= p_hi {
                    zero
                } else if p_lo > zero {
                    p_lo
                } else {
                    p_hi
                };
                return Some(Rational::from_bigints(p, BigInt::from(q)).unwrap());
            }
        }
        None
    }

    #[test]
    fn arithmetic_basics() {
        assert_eq!(r(1, 2) + r(1, 3), r(5, 6));
        assert_eq!(r(1, 2) - r(1, 3), r(1, 6));
        assert_eq!(r(2, 3) * r(3, 4), r(1, 2));
        assert_eq!(r(2, 3) / r(4, 9), r(3, 2));
        assert_eq!(-r(2, 4), r(-1, 2));
        assert_eq!(r(6, -4), r(-3, 2));
        assert!(r(1, 3) < r(1, 2));
        assert_eq!(r(7, 2).floor(), BigInt::from(3));
        assert_eq!(r(-7, 2).floor(), BigInt::from(-4));
        assert_eq!(r(-7, 2).ceil(), BigInt::from(-3));
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Rational::from_integer(i64::MAX);
        let sq = &big * &big;
        assert!(sq.as_small().is_none());
        let back = &sq / &big;
        assert_eq!(back, big);
        assert!(back.as_small().is_some());
        let tiny = Rational::new(1, i64::MAX);
        let t2 = &tiny * &tiny;
        assert_eq!(t2.recip(), &big * &big);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/4".parse::<Rational>().unwrap(), r(3, 4));
        assert_eq!("-6/8".parse::<Rational>().unwrap(), r(-3, 4));
        assert_eq!("0.1".parse::<Rational>().unwrap(), r(1, 10));
        assert_eq!("-1.25".parse::<Rational>().unwrap(), r(-5, 4));
        assert_eq!("3e-2".parse::<Rational>().unwrap(), r(3, 100));
        assert_eq!("12".parse::<Rational>().unwrap(), r(12, 1));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert_eq!(r(3, 4).to_string(), "3/4");
        assert_eq!(r(8, 4).to_string(), "2");
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let a: Rational = serde_json::from_str("0.1").unwrap();
        assert_eq!(a, r(1, 10));
        let b: Rational = serde_json::from_str("\"7/3\"").unwrap();
        assert_eq!(b, r(7, 3));
        assert_eq!(serde_json::to_string(&r(7, 3)).unwrap(), "\"7/3\"");
        assert_eq!(serde_json::to_string(&r(5, 1)).unwrap(), "\"5\"");
    }

    #[test]
    fn exact_rational_examples() {
        assert_eq!(exact_rational(0.5).unwrap(), r(1, 2));
        assert_eq!(exact_rational(0.25).unwrap(), r(1, 4));
        let tenth = exact_rational(0.1).unwrap();
        assert_eq!(tenth.numer(), BigInt::from(3602879701896397i64));
        assert_eq!(tenth.denom(), BigInt::from(36028797018963968i64));
        assert!(tenth > r(1, 10));
        assert_eq!(exact_rational(-3.0).unwrap(), r(-3, 1));
        assert!(matches!(exact_rational(f64::NAN), Err(NumberError::NonFinite(_))));
        assert!(matches!(exact_rational(f64::INFINITY), Err(NumberError::NonFinite(_))));
        let sub = exact_rational(f64::MIN_POSITIVE / 4.0).unwrap();
        assert_eq!(sub.to_f64(), f64::MIN_POSITIVE / 4.0);
    }

    #[test]
    fn approx_rational_examples() {
        let eps6 = r(1, 1_000_000);
        assert_eq!(approx_rational(0.5, RoundingMode::Down, &eps6).unwrap(), r(1, 2));
        let eps9 = r(1, 1_000_000_000);
        assert_eq!(approx_rational(0.1, RoundingMode::Down, &eps9).unwrap(), r(1, 10));
        let eps4 = r(1, 10_000);
        assert_eq!(approx_rational(1.4142135, RoundingMode::Up, &eps4).unwrap(), r(99, 70));
        assert!(approx_rational(f64::NAN, RoundingMode::Up, &eps4).is_err());
    }

    #[test]
    fn approx_examples_match_brute_force() {
        let x = exact_rational(1.4142135).unwrap();
        let eps4 = r(1, 10_000);
        let brute = brute_simplest(&x, &(&x + &eps4), 10_000).unwrap();
        assert_eq!(brute, r(99, 70));
        let tenth = exact_rational(0.1).unwrap();
        let eps9 = r(1, 1_000_000_000);
        assert_eq!(brute_simplest(&(&tenth - &eps9), &tenth, 1_000_000).unwrap(), r(1, 10));
    }

    #[test]
    fn simplest_handles_signs_and_ties() {
        assert_eq!(simplest_in_interval(&r(-1, 3), &r(1, 7)), Rational::zero());
        assert_eq!(simplest_in_interval(&r(1, 2), &r(5, 2)), r(1, 1));
        assert_eq!(simplest_in_interval(&r(-5, 2), &r(-1, 2)), r(-1, 1));
        assert_eq!(simplest_in_interval(&r(1, 3), &r(2, 3)), r(1, 2));
        assert_eq!(simplest_in_interval(&r(7, 5), &r(7, 5)), r(7, 5));
    }

    #[test]
    fn sqrt_bracket_is_sound() {
        let eps = default_eps();
        let (lo, hi) = sqrt_bracket(&r(2, 1), &eps);
        assert!(&lo * &lo <= r(2, 1));
        assert!(&hi * &hi >= r(2, 1));
        assert!(&hi - &lo <= eps);
        assert_eq!(sqrt_bracket(&r(9, 4), &eps), (r(3, 2), r(3, 2)));
        assert_eq!(exact_sqrt(&r(2, 1)), None);
    }

    proptest! {
        #[test]
        fn directed_interval_and_minimality(x in -1000.0f64..1000.0, eps_exp in 2u32..14, up in any::<bool>()) {
            let eps = Rational::new(1, 1i64 << eps_exp);
            let mode = if up { RoundingMode::Up } else { RoundingMode::Down };
            let exact = exact_rational(x).unwrap();
            let got = approx_rational(x, mode, &eps).unwrap();
            match mode {
                RoundingMode::Down => prop_assert!(got <= exact && &exact - &got <= eps),
                RoundingMode::Up => prop_assert!(got >= exact && &got - &exact <= eps),
            }
            let (lo, hi) = match mode {
                RoundingMode::Down => (&exact - &eps, exact.clone()),
                RoundingMode::Up => (exact.clone(), &exact + &eps),
            };
            let q = got.denom().to_i64().unwrap();
            let brute = brute_simplest(&lo, &hi, q).unwrap();
            prop_assert_eq!(brute, got);
        }

        #[test]
        fn idempotent_on_simple_rationals(p in -1000i64..1000, q in 1i64..1000, up in any::<bool>()) {
            let v = Rational::new(p, q);
            let mode = if up { RoundingMode::Up } else { RoundingMode::Down };
            let got = approx_rational(v.to_f64(), mode, &Rational::new(1, 10_000_000)).unwrap();
            // v itself lies in the interval whenever the float is exact or on the right side.
            let exact = exact_rational(v.to_f64()).unwrap();
            let inside = match mode {
                RoundingMode::Down => v <= exact,
                RoundingMode::Up => v >= exact,
            };
            if inside {
                prop_assert_eq!(got, v);
            }
        }

        #[test]
        fn arithmetic_matches_bigrational(a in any::<i64>(), b in 1i64..i64::MAX, c in any::<i64>(), d in 1i64..i64::MAX) {
            let x = Rational::new(a, b);
            let y = Rational::new(c, d);
            let bx = BigRational::new(BigInt::from(a), BigInt::from(b));
            let by = BigRational::new(BigInt::from(c), BigInt::from(d));
            prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            prop_assert_eq!((&x * &y).to_big(), &bx * &by);
            prop_assert_eq!(x.cmp(&y), bx.cmp(&by));
            if c != 0 {
                prop_assert_eq!((&x / &y).to_big(), &bx / &by);
            }
        }

        #[test]
        fn display_parse_roundtrip(a in any::<i64>(), b in 1i64..i64::MAX) {
            let x = Rational::new(a, b) * Rational::new(a, b);
            prop_assert_eq!(x.to_string().parse::<Rational>().unwrap(), x);
        }
    }
}
