//! Outward-rounded real intervals on top of MPFR floats.
//!
//! Every operation rounds the lower endpoint toward −∞ and the upper
//! endpoint toward +∞, so the exact real result of the operation applied to
//! any points of the operands is contained in the output.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::{Constant, Round};
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Working precision (in bits) used when the caller does not ask for one.
pub const DEFAULT_PRECISION: u32 = 128;

/// A closed interval `[lo, hi]` with outward rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
    prec: u32,
}

fn down<T>(prec: u32, v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

fn up<T>(prec: u32, v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

impl Interval {
    /// Builds `[lo, hi]` from endpoints; panics if `lo > hi` or either is NaN.
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "interval endpoint is NaN");
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        let prec = lo.prec().max(hi.prec());
        Interval { lo, hi, prec }
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        Interval { lo: down(prec, r), hi: up(prec, r), prec }
    }

    pub fn from_integer(v: &Integer, prec: u32) -> Self {
        Interval { lo: down(prec, v), hi: up(prec, v), prec }
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Interval { lo: down(prec, v), hi: up(prec, v), prec }
    }

    /// Exact conversion of a finite `f64` (precision is raised to 53 bits if needed).
    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite(), "cannot enclose a non-finite f64");
        let prec = prec.max(53);
        Interval { lo: down(prec, v), hi: up(prec, v), prec }
    }

    /// Encloses `[lo, hi]` given as f64 bounds.
    pub fn from_f64_bounds(lo: f64, hi: f64, prec: u32) -> Self {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi);
        let prec = prec.max(53);
        Interval { lo: down(prec, lo), hi: up(prec, hi), prec }
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_i64(0, prec)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn ln2(prec: u32) -> Self {
        Interval { lo: down(prec, Constant::Log2), hi: up(prec, Constant::Log2), prec }
    }

    pub fn pi(prec: u32) -> Self {
        Interval { lo: down(prec, Constant::Pi), hi: up(prec, Constant::Pi), prec }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Lower endpoint rounded down to f64.
    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    /// Upper endpoint rounded up to f64.
    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid_f64(&self) -> f64 {
        let mid = Float::with_val(self.prec, &self.lo + &self.hi) / 2u32;
        mid.to_f64()
    }

    /// Upper bound on `hi − lo`.
    pub fn width(&self) -> Float {
        up(self.prec, &self.hi - &self.lo)
    }

    pub fn width_f64(&self) -> f64 {
        self.width().to_f64_round(Round::Up)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo <= *r && self.hi >= *r
    }

    pub fn contains_f64(&self, v: f64) -> bool {
        self.lo <= v && self.hi >= v
    }

    pub fn contains_integer(&self, v: &Integer) -> bool {
        self.lo <= *v && self.hi >= *v
    }

    /// `true` when `other ⊆ self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        let lo = if self.lo <= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi >= other.hi { self.hi.clone() } else { other.hi.clone() };
        Interval::new(lo, hi)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        (lo <= hi).then(|| Interval::new(lo.clone(), hi.clone()))
    }

    /// Certainly `self < other` for every pair of points.
    pub fn lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    pub fn gt(&self, other: &Interval) -> bool {
        other.lt(self)
    }

    pub fn ge(&self, other: &Interval) -> bool {
        other.le(self)
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo >= 0
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    /// Upper bound on `sup |a − b|` over `a ∈ self`, `b ∈ other`.
    pub fn max_distance(&self, other: &Interval) -> Float {
        let p = self.prec.max(other.prec);
        let d1 = up(p, &self.hi - &other.lo).abs();
        let d2 = up(p, &other.hi - &self.lo).abs();
        let d3 = up(p, &self.lo - &other.hi).abs();
        let d4 = up(p, &other.lo - &self.hi).abs();
        [d1, d2, d3, d4].into_iter().fold(Float::with_val(p, 0), |a, b| if b > a { b } else { a })
    }

    /// Distance between the sets (0 when they overlap), rounded down.
    pub fn gap_lower(&self, other: &Interval) -> Float {
        let p = self.prec.max(other.prec);
        if self.overlaps(other) {
            Float::with_val(p, 0)
        } else if self.hi < other.lo {
            down(p, &other.lo - &self.hi)
        } else {
            down(p, &self.lo - &other.hi)
        }
    }

    /// Distance between the sets (0 when they overlap), rounded up.
    pub fn gap(&self, other: &Interval) -> Float {
        let p = self.prec.max(other.prec);
        if self.overlaps(other) {
            Float::with_val(p, 0)
        } else if self.hi < other.lo {
            up(p, &other.lo - &self.hi)
        } else {
            up(p, &self.lo - &other.hi)
        }
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            -self
        } else {
            let m = if -self.lo.clone() > self.hi { -self.lo.clone() } else { self.hi.clone() };
            Interval::new(Float::with_val(self.prec, 0), m)
        }
    }

    pub fn max(&self, other: &Interval) -> Interval {
        let lo = if self.lo >= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi >= other.hi { self.hi.clone() } else { other.hi.clone() };
        Interval::new(lo, hi)
    }

    pub fn min(&self, other: &Interval) -> Interval {
        let lo = if self.lo <= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi <= other.hi { self.hi.clone() } else { other.hi.clone() };
        Interval::new(lo, hi)
    }

    pub fn recip(&self) -> Result<Interval> {
        if self.contains_zero() {
            return Err(Error::domain("reciprocal of an interval containing zero"));
        }
        let p = self.prec;
        Ok(Interval { lo: down(p, 1 / &self.hi), hi: up(p, 1 / &self.lo), prec: p })
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.lo < 0 {
            return Err(Error::domain("square root of a negative number"));
        }
        let p = self.prec;
        Ok(Interval { lo: down(p, self.lo.sqrt_ref()), hi: up(p, self.hi.sqrt_ref()), prec: p })
    }

    /// Natural logarithm; the interval must be strictly positive.
    pub fn ln(&self) -> Result<Interval> {
        if self.lo <= 0 {
            return Err(Error::domain("logarithm of a nonpositive number"));
        }
        let p = self.prec;
        Ok(Interval { lo: down(p, self.lo.ln_ref()), hi: up(p, self.hi.ln_ref()), prec: p })
    }

    pub fn exp(&self) -> Interval {
        let p = self.prec;
        Interval { lo: down(p, self.lo.exp_ref()), hi: up(p, self.hi.exp_ref()), prec: p }
    }

    /// `self^exponent` for a strictly positive base.
    pub fn pow(&self, exponent: &Interval) -> Result<Interval> {
        if self.lo == 1 && self.hi == 1 {
            return Ok(Interval::one(self.prec.max(exponent.prec)));
        }
        Ok((&self.ln()? * exponent).exp())
    }

    pub fn powi(&self, n: u32) -> Interval {
        let mut acc = Interval::one(self.prec);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn mul_rational(&self, r: &Rational) -> Interval {
        self * &Interval::from_rational(r, self.prec)
    }

    /// Rounds the endpoints outward to a (possibly lower) precision.
    pub fn with_prec(&self, prec: u32) -> Interval {
        Interval { lo: down(prec, &self.lo), hi: up(prec, &self.hi), prec }
    }

    /// Shortest decimal rendering of an endpoint pair, `digits` significant digits,
    /// rounded outward.
    pub fn to_decimal_pair(&self, digits: usize) -> (String, String) {
        (
            self.lo.to_string_radix_round(10, Some(digits), Round::Down),
            self.hi.to_string_radix_round(10, Some(digits), Round::Up),
        )
    }

    /// Midpoint with the given number of significant decimal digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let mid = Float::with_val(self.prec, &self.lo + &self.hi) / 2u32;
        mid.to_string_radix(10, Some(digits))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_decimal_pair(20);
        write!(f, "[{lo}, {hi}]")
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi.clone(), hi: -self.lo.clone(), prec: self.prec }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        -&self
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, rhs: &Interval) -> Interval {
        let p = self.prec.max(rhs.prec);
        Interval { lo: down(p, &self.lo + &rhs.lo), hi: up(p, &self.hi + &rhs.hi), prec: p }
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, rhs: &Interval) -> Interval {
        let p = self.prec.max(rhs.prec);
        Interval { lo: down(p, &self.lo - &rhs.hi), hi: up(p, &self.hi - &rhs.lo), prec: p }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, rhs: &Interval) -> Interval {
        let p = self.prec.max(rhs.prec);
        if self.lo >= 0 && rhs.lo >= 0 {
            return Interval { lo: down(p, &self.lo * &rhs.lo), hi: up(p, &self.hi * &rhs.hi), prec: p };
        }
        let pairs = [(&self.lo, &rhs.lo), (&self.lo, &rhs.hi), (&self.hi, &rhs.lo), (&self.hi, &rhs.hi)];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let l = down(p, a * b);
            let h = up(p, a * b);
            if lo.as_ref().is_none_or(|x| l < *x) {
                lo = Some(l);
            }
            if hi.as_ref().is_none_or(|x| h > *x) {
                hi = Some(h);
            }
        }
        Interval { lo: lo.unwrap(), hi: hi.unwrap(), prec: p }
    }
}

impl Div for &Interval {
    type Output = Interval;
    /// Panics when the divisor contains zero; use [`Interval::recip`] to handle that case.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Interval) -> Interval {
        let r = rhs.recip().expect("interval division by an interval containing zero");
        self * &r
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Interval> for Interval {
            type Output = Interval;
            fn $m(self, rhs: &Interval) -> Interval {
                (&self).$m(rhs)
            }
        }
        impl $tr<Interval> for &Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn rational_enclosure_contains_value() {
        let x = Interval::from_rational(&q(1, 3), 64);
        assert!(x.contains_rational(&q(1, 3)));
        assert!(!x.is_point());
        assert!(x.width_f64() < 1e-18);
    }

    #[test]
    fn arithmetic_is_outward() {
        let third = Interval::from_rational(&q(1, 3), 80);
        let sum = &(&third + &third) + &third;
        assert!(sum.contains_rational(&q(1, 1)));
        let prod = &third * &Interval::from_i64(3, 80);
        assert!(prod.contains_rational(&q(1, 1)));
        let neg = &Interval::from_rational(&q(-2, 7), 80) * &Interval::from_rational(&q(3, 5), 80);
        assert!(neg.contains_rational(&q(-6, 35)));
        let d = &Interval::one(80) / &Interval::from_i64(7, 80);
        assert!(d.contains_rational(&q(1, 7)));
    }

    #[test]
    fn mixed_sign_product() {
        let a = Interval::new(Float::with_val(64, -2), Float::with_val(64, 3));
        let b = Interval::new(Float::with_val(64, -5), Float::with_val(64, 1));
        let p = &a * &b;
        assert_eq!(p.lo_f64(), -15.0);
        assert_eq!(p.hi_f64(), 10.0);
    }

    #[test]
    fn log_rejects_nonpositive() {
        assert!(Interval::zero(64).ln().is_err());
        assert!(Interval::from_i64(-3, 64).ln().is_err());
        assert!(Interval::zero(64).recip().is_err());
    }

    #[test]
    fn exp_of_log_round_trips() {
        let x = Interval::from_rational(&q(7, 5), 128);
        let back = x.ln().unwrap().exp();
        assert!(back.contains_rational(&q(7, 5)));
        assert!(back.width_f64() < 1e-35);
    }

    #[test]
    fn distances() {
        let a = Interval::from_f64_bounds(0.0, 1.0, 64);
        let b = Interval::from_f64_bounds(2.0, 3.0, 64);
        assert_eq!(a.gap(&b).to_f64(), 1.0);
        assert_eq!(a.max_distance(&b).to_f64(), 3.0);
        assert_eq!(a.hull(&b).width_f64(), 3.0);
        assert!(a.intersect(&b).is_none());
        assert!(a.lt(&b) && b.gt(&a));
    }
}
