//! The ECF map, digit extraction, reconstruction, continuants and cylinders.

use std::fmt;
use std::str::FromStr;

use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// A finite admissible digit word: positive, non-decreasing integers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DigitWord(Vec<Integer>);

impl DigitWord {
    pub fn new(digits: Vec<Integer>) -> Result<Self> {
        if !is_admissible(&digits) {
            return Err(Error::NotAdmissible(format_digits(&digits)));
        }
        Ok(DigitWord(digits))
    }

    pub fn from_u64s(digits: &[u64]) -> Result<Self> {
        Self::new(digits.iter().map(|&d| Integer::from(d)).collect())
    }

    /// Wraps digits already known to be admissible.
    pub(crate) fn from_trusted(digits: Vec<Integer>) -> Self {
        debug_assert!(is_admissible(&digits));
        DigitWord(digits)
    }

    pub fn empty() -> Self {
        DigitWord(Vec::new())
    }

    pub fn digits(&self) -> &[Integer] {
        &self.0
    }

    pub fn into_digits(self) -> Vec<Integer> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<&Integer> {
        self.0.last()
    }

    /// The word extended by one digit, if the extension stays admissible.
    pub fn extended(&self, next: &Integer) -> Result<Self> {
        let mut d = self.0.clone();
        d.push(next.clone());
        Self::new(d)
    }

    pub fn prefix(&self, len: usize) -> Self {
        DigitWord(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        self.0.iter().map(|d| d.to_u64()).collect()
    }
}

fn format_digits(d: &[Integer]) -> String {
    let parts: Vec<String> = d.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}

impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses a comma-separated list such as `1,2,6`; brackets and spaces are allowed.
impl FromStr for DigitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('[').trim_end_matches(']').trim();
        if body.is_empty() {
            return Ok(DigitWord::empty());
        }
        let digits = body
            .split(',')
            .map(|t| {
                t.trim().parse::<Integer>().map_err(|_| Error::invalid(format!("not an integer digit: {:?}", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        DigitWord::new(digits)
    }
}

/// Recursion state `(Q_{k−1}, Q_k)` of the continuants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuantPair {
    pub q_prev: Integer,
    pub q_curr: Integer,
    last_digit: Integer,
}

impl ContinuantPair {
    /// `(Q_{−1}, Q_0) = (0, 1)`.
    pub fn start() -> Self {
        ContinuantPair { q_prev: Integer::new(), q_curr: Integer::from(1), last_digit: Integer::new() }
    }

    /// Applies `Q_{k+1} = b_{k+1}·Q_k + b_k·Q_{k−1}`.
    pub fn advance(&mut self, digit: &Integer) {
        let next = Integer::from(digit * &self.q_curr) + Integer::from(&self.last_digit * &self.q_prev);
        self.q_prev = std::mem::replace(&mut self.q_curr, next);
        self.last_digit = digit.clone();
    }
}

/// An expansion prefix together with how much of it is certified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedExpansion {
    pub digits: DigitWord,
    pub certified_count: usize,
    /// True when the digits shown are not the complete expansion.
    pub truncated: bool,
}

pub fn is_admissible(w: &[Integer]) -> bool {
    w.iter().all(|d| *d >= 1) && w.windows(2).all(|p| p[0] <= p[1])
}

fn check_unit_interval(x: &Rational) -> Result<()> {
    if x.cmp0().is_le() || *x > 1 {
        return Err(Error::domain(format!("{x} is outside (0, 1]")));
    }
    Ok(())
}

/// One application of the ECF map: `(⌊1/x⌋, T(x))`.
pub fn ecf_step(x: &Rational) -> Result<(Integer, Rational)> {
    check_unit_interval(x)?;
    let (num, den) = (x.numer(), x.denom());
    let (digit, rem) = den.clone().div_rem(num.clone());
    let remainder = Rational::from((rem, Integer::from(&digit * num)));
    Ok((digit, remainder))
}

/// Step on an unreduced pair `x = num/den`: returns the digit and updates the
/// pair in place to `T(x)`. `num` becomes 0 when the expansion terminates.
#[inline]
fn step_pair(num: &mut Integer, den: &mut Integer) -> Integer {
    let (digit, rem) = std::mem::take(den).div_rem(num.clone());
    *den = Integer::from(&digit * &*num);
    *num = rem;
    digit
}

pub fn expand_rational(x: &Rational, max_digits: usize) -> Result<CertifiedExpansion> {
    check_unit_interval(x)?;
    if max_digits < 1 {
        return Err(Error::invalid("max_digits must be at least 1"));
    }
    let (mut num, mut den) = (x.numer().clone(), x.denom().clone());
    let mut digits = Vec::new();
    while num != 0 && digits.len() < max_digits {
        digits.push(step_pair(&mut num, &mut den));
    }
    let count = digits.len();
    Ok(CertifiedExpansion { digits: DigitWord::from_trusted(digits), certified_count: count, truncated: num != 0 })
}

/// The longest digit prefix shared by every point of `[lo, hi]`.
///
/// Within a cylinder `T^k` is monotone, so a digit is common to the whole
/// interval exactly when both endpoints produce it.
pub fn expand_interval(lo: &Rational, hi: &Rational, max_digits: usize) -> Result<CertifiedExpansion> {
    check_unit_interval(lo)?;
    check_unit_interval(hi)?;
    if lo > hi {
        return Err(Error::domain(format!("empty interval [{lo}, {hi}]")));
    }
    if max_digits < 1 {
        return Err(Error::invalid("max_digits must be at least 1"));
    }
    Ok(expand_pairs(lo.numer().clone(), lo.denom().clone(), hi.numer().clone(), hi.denom().clone(), max_digits))
}

/// Lockstep expansion of `a/b` and `c/d` (unreduced, both in `(0, 1]`).
pub(crate) fn expand_pairs(
    mut a: Integer,
    mut b: Integer,
    mut c: Integer,
    mut d: Integer,
    max_digits: usize,
) -> CertifiedExpansion {
    let mut digits = Vec::new();
    let complete = loop {
        if a == 0 && c == 0 {
            break true;
        }
        if a == 0 || c == 0 || digits.len() >= max_digits {
            break false;
        }
        let x = step_pair(&mut a, &mut b);
        let y = step_pair(&mut c, &mut d);
        if x != y {
            break false;
        }
        digits.push(x);
    };
    let count = digits.len();
    CertifiedExpansion { digits: DigitWord::from_trusted(digits), certified_count: count, truncated: !complete }
}

/// Evaluates `1/(b₁ + b₁/(b₂ + … + b_{n−1}/b_n))` exactly.
pub fn reconstruct(w: &DigitWord) -> Result<Rational> {
    let (last, rest) = w.digits().split_last().ok_or(Error::EmptyWord)?;
    let mut r = Rational::from(last);
    for b in rest.iter().rev() {
        r = Rational::from(b) + Rational::from(b) / r;
    }
    Ok(r.recip())
}

/// `Q_0, …, Q_n` for the word.
pub fn continuants(w: &DigitWord) -> Vec<Integer> {
    let mut state = ContinuantPair::start();
    let mut out = Vec::with_capacity(w.len() + 1);
    out.push(state.q_curr.clone());
    for b in w.digits() {
        state.advance(b);
        out.push(state.q_curr.clone());
    }
    out
}

/// The cylinder's endpoints `[[b₁…b_n]]` and `[[b₁…b_{n−1}, b_n+1]]`, ascending.
/// The empty word's cylinder is the whole space, returned as `(0, 1)`.
pub fn cylinder_endpoints(w: &DigitWord) -> (Rational, Rational) {
    let Some(last) = w.last() else {
        return (Rational::new(), Rational::from(1));
    };
    let mut bumped = w.digits().to_vec();
    *bumped.last_mut().expect("nonempty") = Integer::from(last + 1);
    let a = reconstruct(w).expect("nonempty");
    let b = reconstruct(&DigitWord::from_trusted(bumped)).expect("nonempty");
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(d: &[u64]) -> DigitWord {
        DigitWord::from_u64s(d).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn single_steps() {
        assert_eq!(ecf_step(&q(1, 2)).unwrap(), (Integer::from(2), q(0, 1)));
        assert_eq!(ecf_step(&q(2, 3)).unwrap(), (Integer::from(1), q(1, 2)));
        assert_eq!(ecf_step(&q(1, 1)).unwrap(), (Integer::from(1), q(0, 1)));
        assert!(ecf_step(&q(0, 1)).is_err());
        assert!(ecf_step(&q(3, 2)).is_err());
    }

    #[test]
    fn rational_expansions() {
        let e = expand_rational(&q(7, 10), 20).unwrap();
        assert_eq!(e.digits, w(&[1, 2, 6]));
        assert!(!e.truncated);
        assert_eq!(e.certified_count, 3);
        assert_eq!(expand_rational(&q(1, 2), 20).unwrap().digits, w(&[2]));
        assert_eq!(expand_rational(&q(3, 5), 20).unwrap().digits, w(&[1, 1, 2]));
        assert_eq!(expand_rational(&q(1, 1), 20).unwrap().digits, w(&[1]));

        let cut = expand_rational(&q(7, 10), 2).unwrap();
        assert_eq!(cut.digits, w(&[1, 2]));
        assert!(cut.truncated);
        assert!(expand_rational(&q(7, 10), 0).is_err());
    }

    #[test]
    fn interval_expansions() {
        let e = expand_interval(&q(61, 100), &q(62, 100), 50).unwrap();
        assert_eq!(e.digits, w(&[1, 1, 1, 1]));
        assert_eq!(e.certified_count, 4);
        assert!(e.truncated);

        let e = expand_interval(&q(1, 2), &q(1, 2), 50).unwrap();
        assert_eq!(e.digits, w(&[2]));
        assert!(!e.truncated);

        let e = expand_interval(&q(1, 3), &q(2, 3), 50).unwrap();
        assert_eq!(e.certified_count, 0);
        assert!(expand_interval(&q(2, 3), &q(1, 3), 5).is_err());
    }

    #[test]
    fn one_endpoint_terminating_stops_certification() {
        // b₁ = 2 on (1/3, 1/2]; 1/2 terminates there, interior points do not.
        let e = expand_interval(&q(45, 100), &q(1, 2), 50).unwrap();
        assert_eq!(e.digits, w(&[2]));
        assert!(e.truncated);
    }

    #[test]
    fn reconstruction() {
        assert_eq!(reconstruct(&w(&[1, 2])).unwrap(), q(2, 3));
        assert_eq!(reconstruct(&w(&[1, 1, 2])).unwrap(), q(3, 5));
        assert_eq!(reconstruct(&w(&[1, 2, 6])).unwrap(), q(7, 10));
        for m in 1..50 {
            assert_eq!(reconstruct(&w(&[m])).unwrap(), q(1, m as i64));
        }
        assert_eq!(reconstruct(&DigitWord::empty()), Err(Error::EmptyWord));
    }

    #[test]
    fn continuant_sequences() {
        let c = continuants(&w(&[1, 1, 2]));
        assert_eq!(c, [1, 1, 2, 5].map(Integer::from));
        assert_eq!(continuants(&w(&[2])), [1, 2].map(Integer::from));
        let ones = continuants(&w(&[1; 20]));
        let mut fib = vec![Integer::from(1), Integer::from(1)];
        while fib.len() < 21 {
            let n = fib.len();
            fib.push(Integer::from(&fib[n - 1] + &fib[n - 2]));
        }
        assert_eq!(ones, fib);
    }

    #[test]
    fn cylinders() {
        let (a, b) = cylinder_endpoints(&w(&[1, 1, 2]));
        assert_eq!((a.clone(), b.clone()), (q(4, 7), q(3, 5)));
        assert_eq!(b - a, q(1, 35));
        assert_eq!(cylinder_endpoints(&w(&[1])), (q(1, 2), q(1, 1)));
        assert_eq!(cylinder_endpoints(&w(&[2])), (q(1, 3), q(1, 2)));
    }

    #[test]
    fn admissibility() {
        let ints = |d: &[i64]| d.iter().map(|&x| Integer::from(x)).collect::<Vec<_>>();
        assert!(is_admissible(&ints(&[1, 1, 2, 5])));
        assert!(!is_admissible(&ints(&[2, 1])));
        assert!(is_admissible(&[]));
        assert!(!is_admissible(&ints(&[0, 1])));
        assert!(!is_admissible(&ints(&[-1])));
        assert!(DigitWord::from_u64s(&[3, 2]).is_err());
    }

    #[test]
    fn word_text_round_trip() {
        let word: DigitWord = "1,2,6".parse().unwrap();
        assert_eq!(word, w(&[1, 2, 6]));
        assert_eq!(word.to_string(), "1,2,6");
        assert_eq!("[1, 1, 2]".parse::<DigitWord>().unwrap(), w(&[1, 1, 2]));
        assert!("2,1".parse::<DigitWord>().is_err());
        assert!("1,x".parse::<DigitWord>().is_err());
    }

    /// Non-decreasing words of length 1..=12 with digits in 1..=50.
    fn admissible_word() -> impl Strategy<Value = DigitWord> {
        prop::collection::vec(1u64..=50, 1..=12).prop_map(|mut v| {
            v.sort_unstable();
            w(&v)
        })
    }

    /// Finite expansions never end in a repeated digit: `[…, b, b]` evaluates
    /// to the same number as `[…, b+1]`. These are the words a rational expands to.
    fn terminal_word() -> impl Strategy<Value = DigitWord> {
        admissible_word().prop_filter("last digit repeats", |w| {
            let d = w.digits();
            d.len() < 2 || d[d.len() - 1] > d[d.len() - 2]
        })
    }

    #[test]
    fn repeated_last_digit_collapses() {
        assert_eq!(reconstruct(&w(&[2, 2])).unwrap(), q(1, 3));
        assert_eq!(reconstruct(&w(&[1, 3, 3])).unwrap(), reconstruct(&w(&[1, 4])).unwrap());
        assert_eq!(expand_rational(&q(1, 3), 10).unwrap().digits, w(&[3]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn expand_inverts_reconstruct(word in terminal_word()) {
            let x = reconstruct(&word).unwrap();
            let e = expand_rational(&x, 64).unwrap();
            prop_assert!(!e.truncated);
            prop_assert_eq!(e.digits, word);
        }

        #[test]
        fn reconstruct_inverts_expand(p in 1u64..=1_000_000, qd in 1u64..=1_000_000) {
            let (p, qd) = if p <= qd { (p, qd) } else { (qd, p) };
            let x = Rational::from((p, qd));
            let e = expand_rational(&x, usize::MAX).unwrap();
            prop_assert!(!e.truncated);
            prop_assert!(is_admissible(e.digits.digits()));
            prop_assert_eq!(reconstruct(&e.digits).unwrap(), x);
        }

        #[test]
        fn interval_prefixes_are_admissible_and_shared(a in 1u64..=100_000, b in 1u64..=100_000) {
            let lo = Rational::from((a.min(b), 100_000));
            let hi = Rational::from((a.max(b), 100_000));
            let e = expand_interval(&lo, &hi, 64).unwrap();
            prop_assert!(is_admissible(e.digits.digits()));
            for end in [&lo, &hi] {
                let full = expand_rational(end, 64).unwrap();
                prop_assert_eq!(full.digits.prefix(e.certified_count), e.digits.clone());
            }
        }

        #[test]
        fn continuants_grow(word in admissible_word()) {
            let c = continuants(&word);
            for pair in c.windows(2) {
                prop_assert!(pair[1] >= pair[0]);
            }
        }
    }
}
