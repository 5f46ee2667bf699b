//! Two-sided enclosures of `E(b_n^θ)` from the capped digit tree.

use rayon::prelude::*;
use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::expansion::ContinuantPair;
use crate::numerics::{binomial, interval_pow_rational, ExtendedReal, Interval};

/// Nodes of depth `1..=n` in the tree of words with digits at most `cap`.
pub fn moment_tree_nodes(n: u32, cap: u32) -> Integer {
    binomial(n + cap, n) - 1u32
}

/// `mass[d][k−1]` = exact probability of the words of length `d+1` with all
/// digits `≤ cap` that end in `k`.
fn capped_masses(n: u32, cap: u32) -> Vec<Vec<Rational>> {
    fn walk(depth: usize, last: u32, cap: u32, q: &ContinuantPair, prod: &Integer, out: &mut [Vec<Rational>]) {
        let kk = Integer::from(last);
        let mut here = q.clone();
        here.advance(&kk);
        let den = &here.q_curr * Integer::from(&here.q_curr + &here.q_prev);
        out[depth][last as usize - 1] += Rational::from((prod.clone(), den));
        if depth + 1 < out.len() {
            let prod = Integer::from(prod * &kk);
            for k in last..=cap {
                walk(depth + 1, k, cap, &here, &prod, out);
            }
        }
    }

    let empty = || vec![vec![Rational::new(); cap as usize]; n as usize];
    (1..=cap)
        .into_par_iter()
        .map(|first| {
            let mut out = empty();
            walk(0, first, cap, &ContinuantPair::start(), &Integer::from(1), &mut out);
            out
        })
        .reduce(empty, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        })
}

/// Encloses `E(b_n^θ)` for `θ < 1` by walking every word with digits `≤ cap`.
///
/// Leaves contribute exactly. Below each node with last digit `j`, the
/// children `k > cap` are bounded in aggregate: one step contributes
/// `Σ_{k>cap} P(k | …)·k^θ ∈ P·[j·L, (j+1)·U]`, and each further step
/// multiplies by a factor in `[c, u]`, where
/// `c = ((K+1)/(K+3))/(1−θ)` and `u = (1+1/(K+1))(1−1/(K+1))^{θ−1}/(1−θ)`
/// bound `E(b_{m+1}^θ | b_m = j)/j^θ` for every `j > K`.
///
/// For `θ ≥ 1` already `E(b₁^θ) = Σ k^{θ−1}/(k+1)` diverges.
pub fn moment_interval(n: u32, theta: &Rational, cap: u32, prec: u32, budget: u64) -> Result<ExtendedReal> {
    if n < 1 || cap < 1 {
        return Err(Error::invalid(format!("moment needs n ≥ 1 and cap ≥ 1, got n={n}, cap={cap}")));
    }
    if *theta >= 1 {
        return Ok(ExtendedReal::PosInfinity);
    }
    if theta.cmp0().is_eq() {
        return Ok(ExtendedReal::Finite(Interval::one(prec)));
    }
    let nodes = moment_tree_nodes(n, cap);
    if nodes > budget {
        return Err(Error::BudgetExceeded { count: nodes, budget });
    }
    let masses = capped_masses(n, cap);
    let b = TailFactors::new(theta, &Integer::from(cap), prec)?;

    let mut lo = Interval::zero(prec);
    let mut hi = Interval::zero(prec);
    let leaves = &masses[n as usize - 1];
    for (i, m) in leaves.iter().enumerate() {
        if m.cmp0().is_eq() {
            continue;
        }
        let v = interval_pow_rational(&Integer::from(i + 1), theta, prec)?.mul_rational(m);
        lo = lo + v.clone();
        hi = hi + v;
    }

    let steps = |r: u32| (b.c.powi(r), b.u.powi(r));
    let (c_pow, u_pow) = steps(n - 1);
    lo = lo + &b.root_lo * &c_pow;
    hi = hi + &b.root_hi * &u_pow;
    for d in 1..n {
        let level = &masses[d as usize - 1];
        let weighted: Rational = level.iter().enumerate().map(|(i, m)| Rational::from(m * (i as u64 + 1))).sum();
        let total: Rational = level.iter().sum();
        let (c_pow, u_pow) = steps(n - d - 1);
        lo = lo + (&b.child_lo * &c_pow).mul_rational(&weighted);
        hi = hi + (&b.child_hi * &u_pow).mul_rational(&(weighted + total));
    }
    Ok(ExtendedReal::Finite(Interval::new(lo.lo().clone(), hi.hi().clone())))
}

/// Closed-form bounds for the digits beyond a cap `K`.
pub(crate) struct TailFactors {
    /// `Σ_{k>K} k^θ/(k(k+1))` from the initial law, lower and upper.
    pub root_lo: Interval,
    pub root_hi: Interval,
    /// Per unit of `j` (lower) or `j+1` (upper): `Σ_{k>K} k^θ/(k(k+2))` and `Σ_{k>K} k^θ/(k(k+1))`.
    pub child_lo: Interval,
    pub child_hi: Interval,
    pub c: Interval,
    pub u: Interval,
}

impl TailFactors {
    pub fn new(theta: &Rational, cap: &Integer, prec: u32) -> Result<Self> {
        let k1 = Integer::from(cap + 1);
        let one_minus = Interval::from_rational(&Rational::from(1 - theta), prec);
        let tm1 = Rational::from(theta - 1u32);
        let pow_k1 = interval_pow_rational(&k1, &tm1, prec)? / one_minus.clone();
        let pow_k = interval_pow_rational(cap, &tm1, prec)? / one_minus.clone();
        let frac = |a: &Integer, b: Integer| Interval::from_rational(&Rational::from((a.clone(), b)), prec);
        let root_lo = &frac(&k1, Integer::from(&k1 + 1)) * &pow_k1;
        let child_lo = &frac(&k1, Integer::from(&k1 + 2)) * &pow_k1;
        let c = &frac(&k1, Integer::from(&k1 + 2)) / &one_minus;
        let below = Rational::from((cap.clone(), k1.clone()));
        let u = frac(&Integer::from(&k1 + 1), k1.clone()) * interval_pow_rational_base(&below, &tm1, prec)? / one_minus;
        Ok(TailFactors { root_lo, root_hi: pow_k.clone(), child_lo, child_hi: pow_k, c, u })
    }
}

/// `x^e` for a positive rational base.
pub(crate) fn interval_pow_rational_base(x: &Rational, e: &Rational, prec: u32) -> Result<Interval> {
    Interval::from_rational(x, prec).pow(&Interval::from_rational(e, prec))
}
