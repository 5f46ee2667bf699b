//! Exact integers and rationals, outward-rounded intervals, binomials.

mod extended;
mod fast;
mod interval;

pub use extended::ExtendedReal;
pub use fast::{add_dn, add_up, div_dn, div_up, mul_dn, mul_up, F64Interval};
pub use interval::{Interval, DEFAULT_PRECISION};
pub use rug::{Integer, Rational};

use rug::ops::Pow;

use crate::error::{Error, Result};

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> Integer {
    if k > n {
        return Integer::new();
    }
    Integer::from(Integer::binomial_u(n, k))
}

/// Enclosure of `base^θ` for an exact rational exponent.
pub fn interval_pow_rational(base: &Integer, theta: &Rational, prec: u32) -> Result<Interval> {
    interval_pow(base, &Interval::from_rational(theta, prec))
}

/// Enclosure of `base^θ` for an enclosed exponent; `1^θ` is exactly 1.
pub fn interval_pow(base: &Integer, theta: &Interval) -> Result<Interval> {
    if *base < 1 {
        return Err(Error::domain(format!("power base must be at least 1, got {base}")));
    }
    if *base == 1 {
        return Ok(Interval::one(theta.prec()));
    }
    let b = Interval::from_integer(base, theta.prec());
    // Integer square roots and friends come out exactly when the exponent is.
    if theta.is_point() {
        if let Some(r) = theta.lo().to_rational() {
            if let Some(exact) = exact_rational_power(base, &r) {
                return Ok(Interval::from_integer(&exact, theta.prec()));
            }
        }
    }
    b.pow(theta)
}

fn exact_rational_power(base: &Integer, theta: &Rational) -> Option<Integer> {
    if theta.cmp0().is_lt() {
        return None;
    }
    let den = theta.denom().to_u32()?;
    let num = theta.numer().to_u32()?;
    let (root, rem) = base.clone().root_rem(Integer::new(), den);
    if rem != 0 {
        return None;
    }
    Some(root.pow(num))
}

pub fn interval_log(x: &Interval) -> Result<Interval> {
    x.ln()
}

pub fn interval_log_rational(x: &Rational, prec: u32) -> Result<Interval> {
    if x.cmp0().is_le() {
        return Err(Error::domain(format!("logarithm of nonpositive {x}")));
    }
    if *x == 1 {
        return Ok(Interval::zero(prec));
    }
    Interval::from_rational(x, prec).ln()
}

/// Parses `p/q`, an integer, or a decimal such as `-0.25` or `1e-3` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::invalid(format!("not a rational number: {s:?}"));
    if t.contains('/') {
        let r: Rational = t.parse().map_err(|_| bad())?;
        return Ok(r);
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: Integer = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = Integer::from(10);
    let mut r = if scale >= 0 {
        Rational::from(digits * ten.pow(scale as u32))
    } else {
        Rational::from((digits, ten.pow(scale.unsigned_abs())))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Golden ratio `(1 + √5)/2`.
pub fn phi(prec: u32) -> Interval {
    let five = Interval::from_i64(5, prec);
    let s = five.sqrt().expect("sqrt 5");
    (s + Interval::one(prec)).mul_rational(&Rational::from((1, 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("7/10").unwrap(), Rational::from((7, 10)));
        assert_eq!(parse_rational("-0.25").unwrap(), Rational::from((-1, 4)));
        assert_eq!(parse_rational("1e-3").unwrap(), Rational::from((1, 1000)));
        assert_eq!(parse_rational("2.5E2").unwrap(), Rational::from(250));
        assert_eq!(parse_rational("-3").unwrap(), Rational::from(-3));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational(".").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(3, 7), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn pascal_rule_up_to_sixty() {
        for n in 1..=60u32 {
            for k in 1..=60u32 {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k), "C({n},{k})");
            }
        }
    }

    #[test]
    fn rational_addition_two_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (a, b): (i64, i64) = (rng.gen_range(-1000..1000), rng.gen_range(1..1000));
            let (c, d): (i64, i64) = (rng.gen_range(-1000..1000), rng.gen_range(1..1000));
            let direct = Rational::from((a, b)) + Rational::from((c, d));
            let common = Rational::from((Integer::from(a * d + c * b), Integer::from(b * d)));
            assert_eq!(direct, common);
            assert!(*direct.denom() > 0);
            assert_eq!(direct.numer().clone().gcd(direct.denom()), 1);
        }
    }

    #[test]
    fn square_root_of_four() {
        let r = interval_pow_rational(&Integer::from(4), &Rational::from((1, 2)), 128).unwrap();
        assert!(r.contains_integer(&Integer::from(2)));
        assert!(r.width_f64() <= 2f64.powi(-100));
    }

    #[test]
    fn unit_base_is_exact() {
        for theta in [Rational::from((-7, 3)), Rational::from((9, 10)), Rational::from(0)] {
            let r = interval_pow_rational(&Integer::from(1), &theta, 128).unwrap();
            assert!(r.is_point() && r.contains_integer(&Integer::from(1)));
        }
    }

    #[test]
    fn cube_root_of_two_cubes_back() {
        let r = interval_pow_rational(&Integer::from(2), &Rational::from((1, 3)), 128).unwrap();
        assert!((r.mid_f64() - 1.259_921_049_894_873).abs() < 1e-15);
        assert!(r.powi(3).contains_integer(&Integer::from(2)));
        assert!(r.width_f64() < 1e-30);
    }

    #[test]
    fn log_of_phi_and_two() {
        let p = phi(128);
        let l = interval_log(&p).unwrap();
        assert!((l.mid_f64() - 0.481_211_825_059_603_4).abs() < 1e-15);
        assert!(l.exp().encloses(&p));

        let two = interval_log_rational(&Rational::from(2), 128).unwrap();
        assert!(two.overlaps(&Interval::ln2(128)));
        assert!((two.mid_f64() - std::f64::consts::LN_2).abs() < 1e-15);

        let one = interval_log_rational(&Rational::from(1), 128).unwrap();
        assert!(one.is_point() && one.contains_zero());
    }

    #[test]
    fn log_rejects_nonpositive() {
        assert!(interval_log_rational(&Rational::from(0), 64).is_err());
        assert!(interval_log_rational(&Rational::from(-3), 64).is_err());
    }

    #[test]
    fn enclosure_survives_doubled_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10_000 {
            let base = Integer::from(rng.gen_range(1u32..10_000));
            let theta = Rational::from((rng.gen_range(-3000i32..999), 1000));
            let single = interval_pow_rational(&base, &theta, 64).unwrap();
            let double = interval_pow_rational(&base, &theta, 128).unwrap();
            let mid = rug::Float::with_val(128, double.lo() + double.hi()) / 2u32;
            assert!(single.lo() <= &mid && &mid <= single.hi(), "{base}^{theta}");

            let x = Rational::from((rng.gen_range(1u32..1_000_000), rng.gen_range(1u32..1_000_000)));
            let single = interval_log_rational(&x, 64).unwrap();
            let double = interval_log_rational(&x, 128).unwrap();
            let mid = rug::Float::with_val(128, double.lo() + double.hi()) / 2u32;
            assert!(single.lo() <= &mid && &mid <= single.hi(), "log {x}");
        }
    }
}
