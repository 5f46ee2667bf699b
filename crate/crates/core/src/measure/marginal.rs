//! The law of a single digit `b_n`, exactly by summing cylinders or as
//! rational enclosures propagated through the transition sandwich.

use rug::{Integer, Rational};

use super::ProbInterval;
use crate::combinatorics::{count_words, LastDigit, WordFamily};
use crate::error::{Error, Result};
use crate::expansion::ContinuantPair;

/// Enclosures of `P(b_n = k)` for `k = 1..=cap` and of `P(b_n > cap)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTable {
    pub n: u32,
    pub cap: u32,
    /// `entries[k − 1]` encloses `P(b_n = k)`.
    pub entries: Vec<ProbInterval>,
    pub tail: ProbInterval,
    /// Number of cylinders summed when the table is exact.
    pub cylinders_visited: Option<Integer>,
}

impl MarginalTable {
    pub fn entry(&self, k: u32) -> Option<&ProbInterval> {
        if k == 0 {
            return None;
        }
        self.entries.get(k as usize - 1)
    }

    pub fn sum_lo(&self) -> Rational {
        self.entries.iter().map(|e| &e.lo).sum::<Rational>() + &self.tail.lo
    }

    pub fn sum_hi(&self) -> Rational {
        self.entries.iter().map(|e| &e.hi).sum::<Rational>() + &self.tail.hi
    }
}

fn check_depth(n: u32, cap: u32) -> Result<()> {
    if n < 1 || cap < 1 {
        return Err(Error::invalid(format!("marginal needs n ≥ 1 and cap ≥ 1, got n={n}, cap={cap}")));
    }
    Ok(())
}

struct ExactWalk {
    n: u32,
    cap: u32,
    sums: Vec<Rational>,
    visited: Integer,
}

impl ExactWalk {
    /// `q` holds the continuants of the current prefix of length `depth`,
    /// `prod` the product of all its digits.
    fn visit(&mut self, depth: u32, last: u32, q: &ContinuantPair, prod: &Integer) {
        for k in last.max(1)..=self.cap {
            let kk = Integer::from(k);
            let mut next = q.clone();
            next.advance(&kk);
            if depth + 1 == self.n {
                let den = &next.q_curr * Integer::from(&next.q_curr + &next.q_prev);
                self.sums[k as usize - 1] += Rational::from((prod.clone(), den));
                self.visited += 1;
            } else {
                self.visit(depth + 1, k, &next, &Integer::from(prod * &kk));
            }
        }
    }
}

/// Exact `P(b_n = k)` for `k ≤ kmax` by summing every cylinder of length `n`
/// with digits at most `kmax`.
pub fn marginal_exact(n: u32, kmax: u32, budget: u64) -> Result<MarginalTable> {
    check_depth(n, kmax)?;
    let count = count_words(&WordFamily::new(n, kmax, LastDigit::AtMost)?);
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }
    let mut walk = ExactWalk { n, cap: kmax, sums: vec![Rational::new(); kmax as usize], visited: Integer::new() };
    walk.visit(0, 1, &ContinuantPair::start(), &Integer::from(1));
    let total: Rational = walk.sums.iter().sum();
    let tail = ProbInterval::point(Rational::from(1) - total);
    Ok(MarginalTable {
        n,
        cap: kmax,
        entries: walk.sums.into_iter().map(ProbInterval::point).collect(),
        tail,
        cylinders_visited: Some(walk.visited),
    })
}

/// Rational enclosures of the law of `b_n` from the exact law of `b₁` and the
/// transition sandwich `j/(k(k+2)) ≤ P(k | j) ≤ (j+1)/(k(k+1))`.
///
/// Digits never decrease, so mass above `cap` stays there and only digits
/// `j ≤ k` feed entry `k`.
pub fn marginal_interval_dp(n: u32, cap: u32) -> Result<MarginalTable> {
    check_depth(n, cap)?;
    let one = Rational::from(1);
    let mut lo: Vec<Rational> = (1..=cap as u64).map(|k| Rational::from((1, k * (k + 1)))).collect();
    let mut hi = lo.clone();
    let mut tail = ProbInterval::point(Rational::from((1, cap + 1)));
    for _ in 1..n {
        let (mut acc_lo, mut acc_hi) = (Rational::new(), Rational::new());
        let mut next_lo = Vec::with_capacity(cap as usize);
        let mut next_hi = Vec::with_capacity(cap as usize);
        for k in 1..=cap as u64 {
            let i = k as usize - 1;
            acc_lo += Rational::from(&lo[i] * k);
            acc_hi += Rational::from(&hi[i] * (k + 1));
            next_lo.push(Rational::from(&acc_lo / (k * (k + 2))));
            let h = Rational::from(&acc_hi / (k * (k + 1)));
            next_hi.push(if h > one { one.clone() } else { h });
        }
        lo = next_lo;
        hi = next_hi;
        let sum_lo: Rational = lo.iter().sum();
        let sum_hi: Rational = hi.iter().sum();
        let from_hi = Rational::from(&one - &sum_hi);
        let t_lo = if from_hi > tail.lo { from_hi } else { tail.lo.clone() };
        let t_lo = if t_lo.cmp0().is_lt() { Rational::new() } else { t_lo };
        tail = ProbInterval::new(t_lo, one.clone() - sum_lo);
    }
    Ok(MarginalTable {
        n,
        cap,
        entries: lo.into_iter().zip(hi).map(|(l, h)| ProbInterval::new(l, h)).collect(),
        tail,
        cylinders_visited: None,
    })
}
