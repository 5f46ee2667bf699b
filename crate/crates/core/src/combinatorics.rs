//! Counting and listing admissible words of a fixed length.

use std::fmt;
use std::str::FromStr;

use rug::Integer;

use crate::error::{Error, Result};
use crate::expansion::DigitWord;
use crate::numerics::binomial;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LastDigit {
    /// `b_n = m`.
    Exact,
    /// `b_n ≤ m`.
    AtMost,
}

impl FromStr for LastDigit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-last" => Ok(LastDigit::Exact),
            "at-most" | "last-at-most" => Ok(LastDigit::AtMost),
            other => Err(Error::invalid(format!("unknown mode {other:?} (expected exact or at-most)"))),
        }
    }
}

impl fmt::Display for LastDigit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LastDigit::Exact => "exact",
            LastDigit::AtMost => "at-most",
        })
    }
}

/// Non-decreasing positive words of length `n` whose last digit is `m` or at most `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WordFamily {
    n: u32,
    m: u32,
    mode: LastDigit,
}

impl WordFamily {
    pub fn new(n: u32, m: u32, mode: LastDigit) -> Result<Self> {
        if n < 1 || m < 1 {
            return Err(Error::invalid(format!("word family needs n ≥ 1 and m ≥ 1, got n={n}, m={m}")));
        }
        Ok(WordFamily { n, m, mode })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn mode(&self) -> LastDigit {
        self.mode
    }
}

/// `C(n+m−2, m−1)` words end exactly in `m`; `C(n+m−1, m−1)` end in at most `m`.
pub fn count_words(family: &WordFamily) -> Integer {
    let (n, m) = (family.n, family.m);
    match family.mode {
        LastDigit::Exact => binomial(n + m - 2, m - 1),
        LastDigit::AtMost => binomial(n + m - 1, m - 1),
    }
}

/// Lexicographic iterator over a word family.
#[derive(Clone, Debug)]
pub struct Words {
    current: Option<Vec<u32>>,
    /// Positions `0..free` vary; the rest are pinned to `m`.
    free: usize,
    m: u32,
}

impl Iterator for Words {
    type Item = DigitWord;

    fn next(&mut self) -> Option<DigitWord> {
        let cur = self.current.as_mut()?;
        let out = DigitWord::from_trusted(cur.iter().map(|&d| Integer::from(d)).collect());
        match (0..self.free).rev().find(|&i| cur[i] < self.m) {
            Some(i) => {
                let v = cur[i] + 1;
                for d in &mut cur[i..self.free] {
                    *d = v;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// Lists the family, refusing when it holds more than `budget` words.
pub fn enumerate_words(family: &WordFamily, budget: u64) -> Result<Words> {
    let count = count_words(family);
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }
    let n = family.n as usize;
    let free = match family.mode {
        LastDigit::Exact => n - 1,
        LastDigit::AtMost => n,
    };
    let mut start = vec![1; n];
    if family.mode == LastDigit::Exact {
        start[n - 1] = family.m;
    }
    Ok(Words { current: Some(start), free, m: family.m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::is_admissible;

    fn fam(n: u32, m: u32, mode: LastDigit) -> WordFamily {
        WordFamily::new(n, m, mode).unwrap()
    }

    fn listed(n: u32, m: u32, mode: LastDigit) -> Vec<Vec<u64>> {
        enumerate_words(&fam(n, m, mode), DEFAULT_BUDGET).unwrap().map(|w| w.to_u64s().unwrap()).collect()
    }

    #[test]
    fn small_families() {
        assert_eq!(listed(3, 2, LastDigit::AtMost), vec![vec![1, 1, 1], vec![1, 1, 2], vec![1, 2, 2], vec![2, 2, 2]]);
        assert_eq!(listed(2, 2, LastDigit::Exact), vec![vec![1, 2], vec![2, 2]]);
        assert_eq!(listed(5, 1, LastDigit::Exact), vec![vec![1; 5]]);
        assert_eq!(listed(1, 4, LastDigit::Exact), vec![vec![4]]);
        assert_eq!(count_words(&fam(3, 3, LastDigit::Exact)), 6);
        assert_eq!(count_words(&fam(4, 2, LastDigit::AtMost)), 5);
        assert_eq!(
            listed(4, 2, LastDigit::AtMost),
            vec![vec![1, 1, 1, 1], vec![1, 1, 1, 2], vec![1, 1, 2, 2], vec![1, 2, 2, 2], vec![2, 2, 2, 2]]
        );
        for k in 1..20 {
            assert_eq!(count_words(&fam(1, k, LastDigit::AtMost)), k);
        }
        for n in 1..20 {
            assert_eq!(count_words(&fam(n, 2, LastDigit::Exact)), n);
        }
    }

    #[test]
    fn enumeration_matches_count_and_is_sorted() {
        for mode in [LastDigit::Exact, LastDigit::AtMost] {
            for n in 1..=10 {
                for m in 1..=10 {
                    let words = listed(n, m, mode);
                    assert_eq!(Integer::from(words.len()), count_words(&fam(n, m, mode)), "n={n} m={m} {mode}");
                    assert!(words.windows(2).all(|p| p[0] < p[1]));
                    for w in &words {
                        let ints: Vec<Integer> = w.iter().map(|&d| Integer::from(d)).collect();
                        assert!(is_admissible(&ints));
                        assert_eq!(w.len(), n as usize);
                        match mode {
                            LastDigit::Exact => assert_eq!(*w.last().unwrap(), m as u64),
                            LastDigit::AtMost => assert!(*w.last().unwrap() <= m as u64),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pascal_recurrence_and_partition() {
        for n in 2..=12 {
            for k in 1..=12 {
                let lhs =
                    count_words(&fam(n, k + 1, LastDigit::Exact)) - count_words(&fam(n - 1, k + 1, LastDigit::Exact));
                let rhs: Integer = (1..=k).map(|j| count_words(&fam(n - 1, j, LastDigit::Exact))).sum();
                assert_eq!(lhs, rhs, "n={n} k={k}");
                if n <= 7 && k <= 7 {
                    let by_list =
                        listed(n, k + 1, LastDigit::Exact).len() - listed(n - 1, k + 1, LastDigit::Exact).len();
                    let rhs_list: usize = (1..=k).map(|j| listed(n - 1, j, LastDigit::Exact).len()).sum();
                    assert_eq!(by_list, rhs_list);
                }
            }
        }
        for n in 1..=12 {
            for m in 1..=12 {
                let parts: Integer = (1..=m).map(|j| count_words(&fam(n, j, LastDigit::Exact))).sum();
                assert_eq!(parts, count_words(&fam(n, m, LastDigit::AtMost)));
            }
        }
    }

    #[test]
    fn budget_refusal_names_the_count() {
        let f = fam(10, 10, LastDigit::AtMost);
        match enumerate_words(&f, 100) {
            Err(Error::BudgetExceeded { count, budget }) => {
                assert_eq!(count, 92378);
                assert_eq!(budget, 100);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        assert!(WordFamily::new(0, 3, LastDigit::Exact).is_err());
    }
}
