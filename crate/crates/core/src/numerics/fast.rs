//! Nonnegative `f64` intervals with one-ulp outward rounding.
//!
//! IEEE-754 `+ − × ÷` are correctly rounded to nearest, so stepping the
//! rounded result one ulp outward yields a rigorous enclosure. Used by the
//! large dynamic programs where MPFR would be too slow and 53 bits suffice.

use std::ops::{Add, Div, Mul};

use rug::float::Round;
use rug::{Float, Rational};

use super::interval::Interval;

#[inline]
fn dn(x: f64) -> f64 {
    if x > 0.0 {
        x.next_down()
    } else {
        0.0
    }
}

#[inline]
fn upr(x: f64) -> f64 {
    x.next_up()
}

/// An enclosure `[lo, hi]` of a nonnegative real, `0 ≤ lo ≤ hi`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct F64Interval {
    pub lo: f64,
    pub hi: f64,
}

impl F64Interval {
    pub const ZERO: F64Interval = F64Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: F64Interval = F64Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo >= 0.0 && lo <= hi, "bad nonnegative interval [{lo}, {hi}]");
        F64Interval { lo, hi }
    }

    /// A point that is exactly representable (e.g. a small integer).
    pub fn exact(v: f64) -> Self {
        Self::new(v, v)
    }

    pub fn from_rational(r: &Rational) -> Self {
        let lo = Float::with_val_round(53, r, Round::Down).0.to_f64_round(Round::Down);
        let hi = Float::with_val_round(53, r, Round::Up).0.to_f64_round(Round::Up);
        Self::new(lo.max(0.0), hi)
    }

    pub fn from_interval(iv: &Interval) -> Self {
        Self::new(iv.lo_f64().max(0.0), iv.hi_f64())
    }

    pub fn to_interval(self, prec: u32) -> Interval {
        Interval::from_f64_bounds(self.lo, self.hi, prec)
    }

    #[inline]
    pub fn hull(self, o: Self) -> Self {
        F64Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn contains(self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }
}

impl Add for F64Interval {
    type Output = Self;

    #[inline]
    fn add(self, o: Self) -> Self {
        F64Interval { lo: dn(self.lo + o.lo), hi: upr(self.hi + o.hi) }
    }
}

impl Mul for F64Interval {
    type Output = Self;

    #[inline]
    fn mul(self, o: Self) -> Self {
        F64Interval { lo: dn(self.lo * o.lo), hi: upr(self.hi * o.hi) }
    }
}

/// Division by a strictly positive interval.
impl Div for F64Interval {
    type Output = Self;

    #[inline]
    fn div(self, o: Self) -> Self {
        debug_assert!(o.lo > 0.0);
        F64Interval { lo: dn(self.lo / o.hi), hi: upr(self.hi / o.lo) }
    }
}

/// Lower bound of `a + b` for nonnegative reals given as f64.
#[inline]
pub fn add_dn(a: f64, b: f64) -> f64 {
    dn(a + b)
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    upr(a + b)
}

#[inline]
pub fn mul_dn(a: f64, b: f64) -> f64 {
    dn(a * b)
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    upr(a * b)
}

#[inline]
pub fn div_dn(a: f64, b: f64) -> f64 {
    dn(a / b)
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    upr(a / b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_times_three_encloses_one() {
        let third = F64Interval::from_rational(&Rational::from((1, 3)));
        let one = third * F64Interval::exact(3.0);
        assert!(one.contains(1.0));
        let s = third + third + third;
        assert!(s.contains(1.0));
    }

    #[test]
    fn rounding_never_goes_negative() {
        let tiny = F64Interval::new(0.0, f64::MIN_POSITIVE);
        let p = tiny * tiny;
        assert_eq!(p.lo, 0.0);
        assert!(p.hi > 0.0);
    }

    #[test]
    fn division_is_outward() {
        let a = F64Interval::exact(1.0) / F64Interval::exact(10.0);
        assert!(Interval::from_f64_bounds(a.lo, a.hi, 64).contains_rational(&Rational::from((1, 10))));
    }
}
