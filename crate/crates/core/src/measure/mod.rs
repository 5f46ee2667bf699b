//! Cylinder probabilities under Lebesgue measure, conditional laws of the
//! next digit, and enclosures of the digit distribution and its moments.

mod lift;
mod marginal;
mod moment;

pub use lift::{LiftDistribution, LiftGrid};
pub use marginal::{marginal_exact, marginal_interval_dp, MarginalTable};
pub use moment::{moment_interval, moment_tree_nodes};

use rug::{Integer, Rational};

use crate::combinatorics::{enumerate_words, LastDigit, WordFamily};
use crate::error::{Error, Result};
use crate::expansion::{continuants, ContinuantPair, DigitWord};
use crate::numerics::{interval_pow_rational, phi, Interval};

/// An exact enclosure `[lo, hi]` with `0 ≤ lo ≤ hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl ProbInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo.cmp0().is_ge() && lo <= hi, "bad enclosure [{lo}, {hi}]");
        ProbInterval { lo, hi }
    }

    pub fn point(v: Rational) -> Self {
        ProbInterval { lo: v.clone(), hi: v }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

/// `P(B(b₁…b_n)) = (b₁⋯b_{n−1}) / (Q_n(Q_n + Q_{n−1}))`.
pub fn cylinder_measure(w: &DigitWord) -> Result<Rational> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let q = continuants(w);
    let n = w.len();
    let prod: Integer = w.digits()[..n - 1].iter().product();
    let den = &q[n] * Integer::from(&q[n] + &q[n - 1]);
    Ok(Rational::from((prod, den)))
}

/// `a(1+y) / ((b+ay)(b+1+ay))`: the conditional probability of the next
/// digit `b` after last digit `a`, with `y = Q_{n−1}/Q_n`.
pub fn phi_ratio(a: &Integer, b: &Integer, y: &Rational) -> Result<Rational> {
    if *a < 1 || a > b {
        return Err(Error::domain(format!("phi_ratio needs 1 ≤ a ≤ b, got a={a}, b={b}")));
    }
    // y = Q_0/Q_1 = 1 after a first digit 1, so y = 1 must be allowed.
    if y.cmp0().is_lt() || *y > 1 {
        return Err(Error::domain(format!("phi_ratio needs 0 ≤ y ≤ 1, got {y}")));
    }
    let ay = Rational::from(a * y);
    let num = a * Rational::from(1 + y);
    let d1 = Rational::from(b + &ay);
    let d2 = d1.clone() + 1u32;
    Ok(num / (d1 * d2))
}

fn extend_check(prefix: &DigitWord, next: &Integer) -> Result<()> {
    let last = prefix.last().ok_or(Error::EmptyWord)?;
    if next < last {
        return Err(Error::NotAdmissible(format!("{prefix},{next}")));
    }
    Ok(())
}

/// `P(b_{n+1} = next | b₁…b_n = prefix)`, exact.
pub fn conditional_probability(prefix: &DigitWord, next: &Integer) -> Result<Rational> {
    extend_check(prefix, next)?;
    Ok(cylinder_measure(&prefix.extended(next)?)? / cylinder_measure(prefix)?)
}

/// `P(b_n = k | b_{n−1} = j)`, averaging over every history of length `n−1`
/// that ends in `j`.
pub fn conditional_given_last(n: u32, j: u32, k: u32, budget: u64) -> Result<Rational> {
    if n < 2 {
        return Err(Error::invalid("conditional_given_last needs n ≥ 2"));
    }
    if k < j {
        return Err(Error::NotAdmissible(format!("next digit {k} below last digit {j}")));
    }
    let family = WordFamily::new(n - 1, j, LastDigit::Exact)?;
    let next = Integer::from(k);
    let (mut joint, mut marginal) = (Rational::new(), Rational::new());
    for prefix in enumerate_words(&family, budget)? {
        marginal += cylinder_measure(&prefix)?;
        joint += cylinder_measure(&prefix.extended(&next)?)?;
    }
    Ok(joint / marginal)
}

/// `[j/(k(k+2)), (j+1)/(k(k+1))]`, valid for every history ending in `j`.
pub fn transition_bounds(j: &Integer, k: &Integer) -> Result<ProbInterval> {
    if *j < 1 || k < j {
        return Err(Error::domain(format!("transition bounds need 1 ≤ j ≤ k, got j={j}, k={k}")));
    }
    let lo = Rational::from((j.clone(), (k * Integer::from(k + 2))));
    let hi = Rational::from((Integer::from(j + 1), (k * Integer::from(k + 1))));
    Ok(ProbInterval::new(lo, hi))
}

/// Exact `P(b_n = 1)` and the Fibonacci sandwich `[1/(2Q_n²), 1/Q_n²]`.
pub fn prob_digit_one(n: u32) -> Result<(Rational, ProbInterval)> {
    if n < 1 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let mut q = ContinuantPair::start();
    let one = Integer::from(1);
    for _ in 0..n {
        q.advance(&one);
    }
    let exact = Rational::from((1, (&q.q_curr * Integer::from(&q.q_curr + &q.q_prev))));
    let sq = Integer::from(q.q_curr.square_ref());
    let lo = Rational::from((1, Integer::from(&sq * 2u32)));
    let hi = Rational::from((1, sq));
    Ok((exact, ProbInterval::new(lo, hi)))
}

/// Binet's closed form `(φ^{n+1} − ψ^{n+1})/√5` for `Q_n` of the all-ones word.
pub fn fibonacci_binet(n: u32, prec: u32) -> Interval {
    let p = phi(prec);
    let sqrt5 = Interval::from_i64(5, prec).sqrt().expect("positive");
    let big = p.powi(n + 1);
    let small = big.recip().expect("positive");
    let psi_pow = if (n + 1).is_multiple_of(2) { small } else { -small };
    (big - psi_pow) / sqrt5
}

/// Enclosures of the two series that bound one step of the θ-moment
/// recursion, compared with their closed-form bounds.
#[derive(Clone, Debug)]
pub struct SeriesCheck {
    /// `Σ_{k≥j} j/(k(k+2))·(k/j)^θ`.
    pub lower_series: Interval,
    /// `(j/(j+2))/(1−θ)`.
    pub lower_bound: Interval,
    /// `Σ_{k≥j} (j+1)/(k(k+1))·(k/j)^θ`.
    pub upper_series: Interval,
    /// `(1+1/j)(1−1/j)^{θ−1}/(1−θ)`.
    pub upper_bound: Interval,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Sums `terms` terms of each series exactly (up to outward rounding) and
/// encloses the rest by `∫ x^{θ−2} dx`.
pub fn series_bounds_check(j: u64, theta: &Rational, terms: u64, prec: u32) -> Result<SeriesCheck> {
    if j < 2 {
        return Err(Error::domain("series bounds need j ≥ 2"));
    }
    if *theta >= 1 {
        return Err(Error::domain(format!("series diverge for θ = {theta} ≥ 1")));
    }
    let th = Interval::from_rational(theta, prec);
    let one_minus = Interval::from_rational(&Rational::from(1 - theta), prec);
    let jq = Integer::from(j);
    let j_pow = interval_pow_rational(&jq, theta, prec)?;

    let (mut lower, mut upper) = (Interval::zero(prec), Interval::zero(prec));
    for k in j..j + terms {
        let kq = Integer::from(k);
        let kp = interval_pow_rational(&kq, theta, prec)?;
        let kk = Integer::from(&kq * &kq);
        lower = lower + kp.mul_rational(&Rational::from((jq.clone(), Integer::from(&kk + 2 * &kq))));
        upper = upper + kp.mul_rational(&Rational::from((Integer::from(j + 1), Integer::from(&kk + &kq))));
    }

    // Σ_{k≥N} k^{θ−2} ∈ [N^{θ−1}/(1−θ), N^{θ−2} + N^{θ−1}/(1−θ)].
    let n = Integer::from(j + terms);
    let n_pow = interval_pow_rational(&n, &Rational::from(theta - 1u32), prec)?;
    let integral = &n_pow / &one_minus;
    let sum_hi = &n_pow / &Interval::from_integer(&n, prec) + &integral;
    let n_iv = Interval::from_integer(&n, prec);
    let shrink_lower = &n_iv / &(&n_iv + &Interval::from_i64(2, prec));
    let shrink_upper = &n_iv / &(&n_iv + &Interval::one(prec));
    let tail_lower = Interval::new((&integral * &shrink_lower).lo().clone(), sum_hi.hi().clone())
        * Interval::from_integer(&jq, prec);
    let tail_upper = Interval::new((&integral * &shrink_upper).lo().clone(), sum_hi.hi().clone())
        * Interval::from_integer(&Integer::from(j + 1), prec);

    let lower_series = (lower + tail_lower) / j_pow.clone();
    let upper_series = (upper + tail_upper) / j_pow;

    let lower_bound = Interval::from_rational(&Rational::from((j, j + 2)), prec) / one_minus.clone();
    let jr = Interval::from_rational(&Rational::from((j - 1, j)), prec);
    let upper_bound =
        Interval::from_rational(&Rational::from((j + 1, j)), prec) * jr.pow(&(&th - &Interval::one(prec)))? / one_minus;
    let lower_ok = lower_series.ge(&lower_bound);
    let upper_ok = upper_series.le(&upper_bound);
    Ok(SeriesCheck { lower_series, lower_bound, upper_series, upper_bound, lower_ok, upper_ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(d: &[u64]) -> DigitWord {
        DigitWord::from_u64s(d).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn int(v: u64) -> Integer {
        Integer::from(v)
    }

    #[test]
    fn golden_cylinders() {
        let cases: [(&[u64], i64); 6] = [
            (&[1, 1, 2], 35),
            (&[1, 2, 2], 44),
            (&[2, 2, 2], 88),
            (&[1, 1, 2, 2], 133),
            (&[1, 2, 2, 2], 165),
            (&[2, 2, 2, 2], 330),
        ];
        for (word, den) in cases {
            assert_eq!(cylinder_measure(&w(word)).unwrap(), q(1, den), "{word:?}");
        }
        for j in 1..100 {
            assert_eq!(cylinder_measure(&w(&[j])).unwrap(), q(1, (j * (j + 1)) as i64));
        }
        assert_eq!(cylinder_measure(&DigitWord::empty()), Err(Error::EmptyWord));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(phi_ratio(&int(1), &int(2), &q(1, 2)).unwrap(), q(6, 35));
        assert_eq!(phi_ratio(&int(1), &int(1), &q(0, 1)).unwrap(), q(1, 2));
        for (a, b) in [(1u64, 1u64), (2, 5), (7, 7), (3, 40)] {
            assert_eq!(phi_ratio(&int(a), &int(b), &q(0, 1)).unwrap(), Rational::from((a, b * (b + 1))));
        }
        assert!(phi_ratio(&int(3), &int(2), &q(0, 1)).is_err());
        assert!(phi_ratio(&int(1), &int(2), &q(3, 2)).is_err());
        assert_eq!(phi_ratio(&int(1), &int(1), &q(1, 1)).unwrap(), q(1, 3));
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(conditional_probability(&w(&[1, 1, 2]), &int(2)).unwrap(), q(5, 19));
        assert_eq!(conditional_probability(&w(&[1]), &int(1)).unwrap(), q(1, 3));
        assert_eq!(conditional_probability(&w(&[2]), &int(2)).unwrap(), q(1, 4));
        assert!(conditional_probability(&w(&[3]), &int(2)).is_err());

        assert_eq!(conditional_given_last(4, 2, 2, 1000).unwrap(), q(972, 3667));
        assert_eq!(conditional_given_last(2, 1, 1, 1000).unwrap(), q(1, 3));
        assert_eq!(conditional_given_last(2, 1, 2, 1000).unwrap(), q(1, 6));
        assert!(matches!(conditional_given_last(12, 12, 12, 10), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn ratio_identity_on_small_words() {
        for word in [&[1u64, 1, 2][..], &[2, 3, 3, 7], &[1], &[5, 5], &[1, 4, 9, 9, 10]] {
            let prefix = w(word);
            let qs = continuants(&prefix);
            let n = prefix.len();
            let y = Rational::from((qs[n - 1].clone(), qs[n].clone()));
            let last = prefix.last().unwrap().clone();
            for k in last.to_u64().unwrap()..last.to_u64().unwrap() + 6 {
                let direct = conditional_probability(&prefix, &int(k)).unwrap();
                assert_eq!(direct, phi_ratio(&last, &int(k), &y).unwrap());
            }
        }
    }

    #[test]
    fn sandwich_examples() {
        assert_eq!(transition_bounds(&int(2), &int(3)).unwrap(), ProbInterval::new(q(2, 15), q(1, 4)));
        assert_eq!(transition_bounds(&int(1), &int(1)).unwrap(), ProbInterval::new(q(1, 3), q(1, 1)));
        for j in 1..30 {
            assert_eq!(transition_bounds(&int(j), &int(j)).unwrap().lo, Rational::from((1, j + 2)));
        }
        assert!(transition_bounds(&int(3), &int(2)).is_err());
    }

    #[test]
    fn digit_one_probabilities() {
        let (e, s) = prob_digit_one(3).unwrap();
        assert_eq!(e, q(1, 15));
        assert_eq!(s, ProbInterval::new(q(1, 18), q(1, 9)));
        let (e, s) = prob_digit_one(1).unwrap();
        assert_eq!(e, q(1, 2));
        assert_eq!(s, ProbInterval::new(q(1, 2), q(1, 1)));
        for n in 1..=30 {
            let (e, s) = prob_digit_one(n).unwrap();
            assert!(s.contains(&e));
            assert_eq!(e, cylinder_measure(&w(&vec![1; n as usize])).unwrap());
            let qn = continuants(&w(&vec![1; n as usize]))[n as usize].clone();
            assert!(fibonacci_binet(n, 128).contains_integer(&qn));
        }
    }

    #[test]
    fn series_at_theta_zero_matches_telescoping() {
        let c = series_bounds_check(5, &q(0, 1), 2000, 128).unwrap();
        assert!(c.lower_series.contains_rational(&q(11, 12)));
        assert!(c.upper_series.contains_rational(&q(6, 5)));
        assert!(c.lower_ok && c.upper_ok);
        assert!(c.lower_bound.contains_rational(&q(5, 7)));
    }

    #[test]
    fn series_examples() {
        let c = series_bounds_check(2, &q(1, 2), 5000, 128).unwrap();
        assert!(c.lower_bound.contains_rational(&q(1, 1)));
        let three_root_two = Interval::from_i64(18, 128).sqrt().unwrap();
        assert!(c.upper_bound.overlaps(&three_root_two));
        assert!(c.lower_ok && c.upper_ok);

        let c = series_bounds_check(1000, &q(9, 10), 20_000, 128).unwrap();
        assert!(c.lower_ok && c.upper_ok);
        let ratio = c.upper_series.mid_f64() / c.upper_bound.mid_f64();
        assert!(ratio > 0.9 && ratio <= 1.0, "{ratio}");

        assert!(series_bounds_check(3, &q(1, 1), 10, 64).is_err());
        assert!(series_bounds_check(1, &q(0, 1), 10, 64).is_err());
    }
}
