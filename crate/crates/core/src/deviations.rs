//! Pressure and rate functions for the growth of `log b_n`, numerical
//! Legendre transforms, and finite-depth tables that track the limits.
//!
//! All closed forms are evaluated on intervals. A function with a breakpoint
//! is evaluated on each piece its argument meets; where the argument touches
//! the (enclosed) breakpoint both pieces are evaluated and hulled.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::measure::{moment_interval, moment_tree_nodes, LiftDistribution, LiftGrid};
use crate::numerics::{phi, ExtendedReal, Interval};

/// Constants of the all-ones (Fibonacci) branch.
#[derive(Clone, Debug)]
pub struct GoldenConstants {
    /// `(√5+1)/2`.
    pub phi: Interval,
    pub two_log_phi: Interval,
    /// `−(√5−1)/2 = 1 − φ`, where the rate function changes branch.
    pub branch_point: Interval,
    /// `φ^{−2}`.
    pub gamma: Interval,
}

impl GoldenConstants {
    pub fn new(prec: u32) -> Self {
        let phi = phi(prec);
        let two_log_phi = phi.ln().expect("φ > 0").mul_rational(&Rational::from(2));
        let branch_point = &Interval::one(prec) - &phi;
        let gamma = (&phi * &phi).recip().expect("φ² > 0");
        GoldenConstants { phi, two_log_phi, branch_point, gamma }
    }
}

/// Which closed-form function `rate` evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateFunctionId {
    I,
    /// The rate for the chain started with `b_1 ≥ b`.
    Ib(u64),
    IInf,
    J,
    Pressure,
    EngelMomentLimit,
    ModifiedMomentLimit,
}

impl RateFunctionId {
    /// Parses the short names used on the command line; `Ib` takes `b` separately.
    pub fn parse(name: &str, b: Option<u64>) -> Result<Self> {
        let id = match name {
            "I" => RateFunctionId::I,
            "Ib" => RateFunctionId::Ib(b.ok_or_else(|| Error::invalid("rate Ib needs b"))?),
            "Iinf" => RateFunctionId::IInf,
            "J" => RateFunctionId::J,
            "pressure" | "Lambda" => RateFunctionId::Pressure,
            "engel" => RateFunctionId::EngelMomentLimit,
            "modified" => RateFunctionId::ModifiedMomentLimit,
            other => return Err(Error::invalid(format!("unknown rate function {other:?}"))),
        };
        if let RateFunctionId::Ib(0) = id {
            return Err(Error::invalid("rate Ib needs b ≥ 1"));
        }
        Ok(id)
    }
}

impl fmt::Display for RateFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFunctionId::I => write!(f, "I"),
            RateFunctionId::Ib(b) => write!(f, "Ib(b={b})"),
            RateFunctionId::IInf => write!(f, "Iinf"),
            RateFunctionId::J => write!(f, "J"),
            RateFunctionId::Pressure => write!(f, "pressure"),
            RateFunctionId::EngelMomentLimit => write!(f, "engel"),
            RateFunctionId::ModifiedMomentLimit => write!(f, "modified"),
        }
    }
}

/// `x ∩ [lo, hi]`, either side unbounded when `None`.
fn clip(x: &Interval, lo: Option<&Float>, hi: Option<&Float>) -> Option<Interval> {
    let a = match lo {
        Some(l) if l > x.lo() => l.clone(),
        _ => x.lo().clone(),
    };
    let b = match hi {
        Some(h) if h < x.hi() => h.clone(),
        _ => x.hi().clone(),
    };
    (a <= b).then(|| Interval::new(a, b))
}

fn hull_all(parts: impl IntoIterator<Item = Interval>) -> Interval {
    parts.into_iter().reduce(|a, b| a.hull(&b)).expect("at least one piece")
}

/// `−log(1 − θ)` for `θ < 1`.
fn neg_log_one_minus(theta: &Interval) -> Interval {
    -(&Interval::one(theta.prec()) - theta).ln().expect("θ < 1")
}

/// `Λ(θ) = −θ − 2 log φ` for `θ ≤ −φ`, `−θ − log(1−θ)` for `−φ < θ < 1`, `+∞` for `θ ≥ 1`.
pub fn pressure(theta: &Interval) -> ExtendedReal {
    if *theta.hi() >= 1 {
        return ExtendedReal::PosInfinity;
    }
    let g = GoldenConstants::new(theta.prec());
    let kink = -&g.phi;
    let mut parts = Vec::new();
    if let Some(t) = clip(theta, None, Some(kink.hi())) {
        parts.push(&(-&t) - &g.two_log_phi);
    }
    if let Some(t) = clip(theta, Some(kink.lo()), None) {
        parts.push(&(-&t) + &neg_log_one_minus(&t));
    }
    hull_all(parts).into()
}

/// `lim (1/n) log E(b_n^θ) = max{−2 log φ, −log(1−θ)}` for `θ < 1`.
pub fn moment_growth_limit(theta: &Interval) -> ExtendedReal {
    if *theta.hi() >= 1 {
        return ExtendedReal::PosInfinity;
    }
    let g = GoldenConstants::new(theta.prec());
    (-&g.two_log_phi).max(&neg_log_one_minus(theta)).into()
}

/// `(b² + 2 + √(b² + 4b)) / (2b)`.
pub fn xi_b(b: u64, prec: u32) -> Result<Interval> {
    if b < 1 {
        return Err(Error::invalid("ξ_b needs b ≥ 1"));
    }
    let bi = Integer::from(b);
    let sq = Integer::from(&bi * &bi);
    let root = Interval::from_integer(&Integer::from(&sq + 4 * &bi), prec).sqrt()?;
    let num = &Interval::from_integer(&(sq + 2u32), prec) + &root;
    Ok(&num / &Interval::from_integer(&(2u32 * bi), prec))
}

/// Common shape of the rate functions: `x − log(1+x)` right of the
/// breakpoint `−1 + 1/ξ`, `(1−ξ)(x+1) + log ξ` on `[−1, −1 + 1/ξ]`.
fn two_branch_rate(x: &Interval, xi: &Interval) -> ExtendedReal {
    if *x.lo() < -1 {
        return ExtendedReal::PosInfinity;
    }
    let prec = x.prec();
    let one = Interval::one(prec);
    let bp = &xi.recip().expect("ξ > 0") - &one;
    let mut parts = Vec::new();
    if let Some(t) = clip(x, Some(bp.lo()), None) {
        parts.push(log_branch(&t));
    }
    if let Some(t) = clip(x, None, Some(bp.hi())) {
        parts.push(&(&(&one - xi) * &(&t + &one)) + &xi.ln().expect("ξ > 0"));
    }
    hull_all(parts).into()
}

/// `x − log(1+x)` for `x > −1`.
fn log_branch(x: &Interval) -> Interval {
    x - &(x + &Interval::one(x.prec())).ln().expect("x > −1")
}

fn rate_i(x: &Interval) -> ExtendedReal {
    if *x.lo() < -1 {
        return ExtendedReal::PosInfinity;
    }
    let g = GoldenConstants::new(x.prec());
    let one = Interval::one(x.prec());
    let mut parts = Vec::new();
    if let Some(t) = clip(x, Some(g.branch_point.lo()), None) {
        parts.push(log_branch(&t));
    }
    if let Some(t) = clip(x, None, Some(g.branch_point.hi())) {
        parts.push(&g.two_log_phi - &(&g.phi * &(&t + &one)));
    }
    hull_all(parts).into()
}

/// Evaluates the selected closed-form function at `x`.
pub fn rate(id: RateFunctionId, x: &Interval) -> Result<ExtendedReal> {
    let prec = x.prec();
    Ok(match id {
        RateFunctionId::I => rate_i(x),
        RateFunctionId::Ib(b) => two_branch_rate(x, &xi_b(b, prec)?),
        RateFunctionId::IInf => {
            if *x.lo() <= -1 {
                ExtendedReal::PosInfinity
            } else {
                log_branch(x).into()
            }
        }
        RateFunctionId::J => {
            let a = x.abs();
            (&a * &a).mul_rational(&Rational::from((1, 2))).into()
        }
        RateFunctionId::Pressure => pressure(x),
        RateFunctionId::EngelMomentLimit => {
            if *x.hi() >= 1 {
                ExtendedReal::PosInfinity
            } else {
                (-&Interval::ln2(prec)).max(&neg_log_one_minus(x)).into()
            }
        }
        RateFunctionId::ModifiedMomentLimit => {
            if *x.hi() >= 1 {
                ExtendedReal::PosInfinity
            } else {
                neg_log_one_minus(x).into()
            }
        }
    })
}

/// Default search range for `θ`: the pressure is `+∞` from `θ = 1` on.
pub const LEGENDRE_BRACKET: (f64, f64) = (-50.0, 1.0 - 1e-12);

/// Outcome of a numerical Legendre transform.
#[derive(Clone, Debug)]
pub struct LegendreTransform {
    /// Encloses `sup_θ {θx − Λ(θ)}` over the bracket.
    pub value: ExtendedReal,
    /// Sample point with the largest certified objective.
    pub argmax: Option<f64>,
}

struct Sample {
    t: f64,
    v: Interval,
}

/// Encloses `sup {θx − Λ(θ) : θ ∈ bracket}` for a convex `Λ`.
///
/// A golden-section search locates the maximizer, then the supremum is
/// bracketed: the lower end is the best certified sample, the upper end
/// bounds the concave objective between samples by extending the secants of
/// neighbouring samples. Segments whose bound is worst are bisected until
/// the enclosure is narrower than `tol` or the sample budget runs out.
/// Points where `Λ = +∞` are cut off the bracket first.
pub fn legendre_numeric<F>(pressure_fn: F, x: &Interval, bracket: (f64, f64), tol: f64) -> Result<LegendreTransform>
where
    F: Fn(&Interval) -> ExtendedReal,
{
    let (mut lo, mut hi) = bracket;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::invalid(format!("Legendre bracket [{lo}, {hi}] is not a finite range")));
    }
    let prec = x.prec();
    let objective = |t: f64| -> Option<Interval> {
        let ti = Interval::from_f64(t, prec);
        match pressure_fn(&ti) {
            ExtendedReal::Finite(l) => Some(&(&ti * x) - &l),
            ExtendedReal::PosInfinity => None,
        }
    };

    // The finite set of a convex function is an interval.
    let finite_at = |t: f64| objective(t).is_some();
    if !finite_at(lo) || !finite_at(hi) {
        let Some(inside) = (0..=256).map(|i| lo + (hi - lo) * i as f64 / 256.0).find(|&t| finite_at(t)) else {
            return Ok(LegendreTransform { value: ExtendedReal::PosInfinity, argmax: None });
        };
        let edge = |mut good: f64, mut bad: f64| {
            for _ in 0..200 {
                let m = 0.5 * (good + bad);
                if m == good || m == bad {
                    break;
                }
                if finite_at(m) {
                    good = m;
                } else {
                    bad = m;
                }
            }
            good
        };
        if !finite_at(lo) {
            lo = edge(inside, lo);
        }
        if !finite_at(hi) {
            hi = edge(inside, hi);
        }
    }

    let key = |v: &Interval| Float::with_val(prec, v.lo() + v.hi());
    let eval = |t: f64| Sample { t, v: objective(t).expect("inside the finite range") };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    let mut samples = vec![eval(lo), eval(hi)];
    for _ in 0..200 {
        if b - a <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if key(&fc.v) >= key(&fd.v) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    let h = (b - a).max(f64::EPSILON * (1.0 + a.abs()));
    for t in [a - h, a, 0.5 * (a + b), b, b + h, c, d] {
        if t > lo && t < hi {
            samples.push(eval(t));
        }
    }
    samples.sort_by(|p, q| p.t.total_cmp(&q.t));
    samples.dedup_by(|p, q| p.t == q.t);

    for _ in 0..400 {
        let (enclosure, worst) = secant_enclosure(&samples, prec);
        let done = enclosure.width_f64() <= tol;
        let Some(i) = worst.filter(|_| !done) else {
            let argmax = samples.iter().max_by(|p, q| p.v.lo().total_cmp(q.v.lo())).map(|s| s.t);
            return Ok(LegendreTransform { value: enclosure.into(), argmax });
        };
        let m = 0.5 * (samples[i].t + samples[i + 1].t);
        if m <= samples[i].t || m >= samples[i + 1].t {
            let argmax = samples.iter().max_by(|p, q| p.v.lo().total_cmp(q.v.lo())).map(|s| s.t);
            return Ok(LegendreTransform { value: enclosure.into(), argmax });
        }
        samples.insert(i + 1, eval(m));
    }
    let (enclosure, _) = secant_enclosure(&samples, prec);
    let argmax = samples.iter().max_by(|p, q| p.v.lo().total_cmp(q.v.lo())).map(|s| s.t);
    Ok(LegendreTransform { value: enclosure.into(), argmax })
}

/// Enclosure of the supremum of a concave function known at sorted sample
/// points, plus the index of the segment with the largest upper bound.
fn secant_enclosure(s: &[Sample], prec: u32) -> (Interval, Option<usize>) {
    let best_lo = s.iter().map(|p| p.v.lo().clone()).reduce(|a, b| a.max(&b)).expect("samples");
    let mut best_hi = s.iter().map(|p| p.v.hi().clone()).reduce(|a, b| a.max(&b)).expect("samples");
    let mut worst = None;
    let mut worst_bound = best_lo.clone();
    for i in 0..s.len().saturating_sub(1) {
        let left = (i >= 1).then(|| (&s[i], &s[i - 1]));
        let right = (i + 2 < s.len()).then(|| (&s[i + 1], &s[i + 2]));
        let bound = segment_bound(s[i].t, s[i + 1].t, left, right, prec);
        let bound = match bound {
            Some(b) => b,
            None => Float::with_val(prec, f64::INFINITY),
        };
        if bound > worst_bound {
            worst_bound = bound.clone();
            worst = Some(i);
        }
        if bound > best_hi {
            best_hi = bound;
        }
    }
    let lo = best_lo.clone();
    let hi = if best_hi < lo { lo.clone() } else { best_hi };
    (Interval::new(lo, hi), worst)
}

/// Upper bound of a concave `f` on `[t0, t1]`. `left = (s_i, s_{i−1})` and
/// `right = (s_{i+1}, s_{i+2})` give the secants extended into the segment.
fn segment_bound(
    t0: f64,
    t1: f64,
    left: Option<(&Sample, &Sample)>,
    right: Option<(&Sample, &Sample)>,
    prec: u32,
) -> Option<Float> {
    // Line through (anchor, hi) and (other, lo), evaluated at t on the far side of anchor.
    let line = |anchor: &Sample, other: &Sample, t: f64| -> Interval {
        let ah = Interval::new(anchor.v.hi().clone(), anchor.v.hi().clone());
        let ol = Interval::new(other.v.lo().clone(), other.v.lo().clone());
        let run = (&Interval::from_f64(t, prec) - &Interval::from_f64(anchor.t, prec)).abs();
        let span = (&Interval::from_f64(anchor.t, prec) - &Interval::from_f64(other.t, prec)).abs();
        &ah + &(&run * &(&(&ah - &ol) / &span))
    };
    let fmax = |a: &Interval, b: &Interval| if a.hi() >= b.hi() { a.hi().clone() } else { b.hi().clone() };
    match (left, right) {
        (None, None) => None,
        (Some((p, q)), None) => Some(fmax(&line(p, q, t0), &line(p, q, t1))),
        (None, Some((p, q))) => Some(fmax(&line(p, q, t0), &line(p, q, t1))),
        (Some((lp, lq)), Some((rp, rq))) => {
            let a0 = line(lp, lq, t0);
            let a1 = line(lp, lq, t1);
            let b0 = line(rp, rq, t0);
            let b1 = line(rp, rq, t1);
            let only_a = fmax(&a0, &a1);
            let only_b = fmax(&b0, &b1);
            // Any convex combination of the two lines also dominates min(A, B);
            // weight them so the combination is nearly flat.
            let sa = (a1.mid_f64() - a0.mid_f64()) / (t1 - t0);
            let sb = (b1.mid_f64() - b0.mid_f64()) / (t1 - t0);
            let mut best = if only_a < only_b { only_a } else { only_b };
            if sa > 0.0 && sb < 0.0 {
                let w = (-sb / (sa - sb)).clamp(0.0, 1.0);
                let wi = Interval::from_f64(w, prec);
                // Exact: w has 53 bits and prec ≥ 64.
                let vi = &Interval::one(prec) - &wi;
                let c0 = &(&wi * &a0) + &(&vi * &b0);
                let c1 = &(&wi * &a1) + &(&vi * &b1);
                let comb = fmax(&c0, &c1);
                if comb < best {
                    best = comb;
                }
            }
            Some(best)
        }
    }
}

/// How `E(b_n^θ)` is enclosed.
#[derive(Clone, Debug)]
pub enum MomentEngine {
    /// The Markov-lift distribution, valid up to its depth.
    Lift(Arc<LiftDistribution>),
    /// The capped digit tree; `K(n)` is the largest cap `≤ max_cap` whose
    /// tree fits the node budget.
    Tree { max_cap: u32, budget: u64 },
}

impl MomentEngine {
    pub fn lift(grid: &LiftGrid, depth: u32) -> Result<Self> {
        Ok(MomentEngine::Lift(Arc::new(LiftDistribution::compute(grid, depth)?)))
    }

    /// Cap used at depth `n` by the tree engine.
    pub fn tree_cap(n: u32, max_cap: u32, budget: u64) -> Option<u32> {
        (1..=max_cap).rev().find(|&k| moment_tree_nodes(n, k) <= budget)
    }

    pub fn name(&self) -> String {
        match self {
            MomentEngine::Lift(d) => format!("lift(bins={}, tail_start={:e})", d.bin_count(), d.tail_start()),
            MomentEngine::Tree { max_cap, budget } => format!("tree(max_cap={max_cap}, budget={budget})"),
        }
    }

    /// Encloses `E(b_n^θ)` for all `θ` in `theta`.
    pub fn moment(&self, n: u32, theta: &Interval) -> Result<ExtendedReal> {
        if *theta.hi() >= 1 {
            return Ok(ExtendedReal::PosInfinity);
        }
        let prec = theta.prec();
        if theta.is_point() && theta.contains_f64(0.0) {
            return Ok(Interval::one(prec).into());
        }
        match self {
            MomentEngine::Lift(d) => Ok(d.moment(n, theta)?.into()),
            MomentEngine::Tree { max_cap, budget } => {
                let cap = Self::tree_cap(n, *max_cap, *budget)
                    .ok_or_else(|| Error::BudgetExceeded { count: moment_tree_nodes(n, 1), budget: *budget })?;
                // E(b^θ) is nondecreasing in θ since b ≥ 1.
                let end = |f: &Float| f.to_rational().expect("finite endpoint");
                let lo = moment_interval(n, &end(theta.lo()), cap, prec, *budget)?;
                let hi = moment_interval(n, &end(theta.hi()), cap, prec, *budget)?;
                match (lo, hi) {
                    (ExtendedReal::Finite(l), ExtendedReal::Finite(h)) => {
                        Ok(Interval::new(l.lo().clone(), h.hi().clone()).into())
                    }
                    _ => Ok(ExtendedReal::PosInfinity),
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct GrowthRow {
    pub n: u32,
    /// Encloses `(1/n) log E(b_n^θ)`.
    pub value: ExtendedReal,
}

#[derive(Clone, Debug)]
pub struct GrowthTable {
    pub theta: Rational,
    pub rows: Vec<GrowthRow>,
    pub limit: ExtendedReal,
}

impl GrowthTable {
    /// `sup |row − limit|` per row; `None` for infinite rows.
    pub fn distances(&self) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| match (&r.value, &self.limit) {
                (ExtendedReal::Finite(v), ExtendedReal::Finite(l)) => Some(v.max_distance(l).to_f64()),
                _ => None,
            })
            .collect()
    }
}

/// Rows `(1/n) log E(b_n^θ)` for each `n`, next to their limit.
pub fn moment_growth_rate(theta: &Rational, n_list: &[u32], engine: &MomentEngine, prec: u32) -> Result<GrowthTable> {
    let ti = Interval::from_rational(theta, prec);
    let limit = moment_growth_limit(&ti);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n < 1 {
            return Err(Error::invalid("depths start at 1"));
        }
        let value = if *theta >= 1 {
            ExtendedReal::PosInfinity
        } else if theta.cmp0().is_eq() {
            Interval::zero(prec).into()
        } else {
            match engine.moment(n, &ti)? {
                ExtendedReal::Finite(m) => (&m.ln()? / &Interval::from_i64(n as i64, prec)).into(),
                ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
            }
        };
        rows.push(GrowthRow { n, value });
    }
    Ok(GrowthTable { theta: theta.clone(), rows, limit })
}

/// Normalizing sequence `a_n` of the moderate deviations.
#[derive(Clone)]
pub enum Scaling {
    /// `a_n = n^p` with `1/2 < p < 1`.
    Power(Rational),
    /// Any enclosure `(n, prec) ↦ a_n`; the growth conditions are the caller's.
    Custom(Arc<dyn Fn(u32, u32) -> Interval + Send + Sync>),
}

impl fmt::Debug for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scaling::Power(p) => write!(f, "Power({p})"),
            Scaling::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Scaling {
    pub fn power(p: Rational) -> Result<Self> {
        // n^p/√(n log n) → ∞ needs p > 1/2, n^p/n → 0 needs p < 1.
        if p <= (1, 2) || p >= 1 {
            return Err(Error::invalid(format!("a_n = n^p needs 1/2 < p < 1, got p = {p}")));
        }
        Ok(Scaling::Power(p))
    }

    pub fn a(&self, n: u32, prec: u32) -> Interval {
        match self {
            Scaling::Power(p) => {
                let ln = Interval::from_i64(n as i64, prec).ln().expect("n ≥ 1");
                (&ln * &Interval::from_rational(p, prec)).exp()
            }
            Scaling::Custom(f) => f(n, prec),
        }
    }

    /// Exponent `2p − 1` of the speed `a_n²/n = n^{2p−1}`.
    pub fn speed_exponent(&self) -> Option<Rational> {
        match self {
            Scaling::Power(p) => Some((2 * p.clone()) - 1u32),
            Scaling::Custom(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MdpRow {
    pub n: u32,
    /// `θ_n = a_n λ / n`.
    pub theta_n: Interval,
    /// Encloses `(n/a_n²)(−nθ_n + log E(b_n^{θ_n}))`; `None` when `θ_n ≥ 1` is possible.
    pub value: Option<Interval>,
}

#[derive(Clone, Debug)]
pub struct MdpTable {
    pub lambda: Rational,
    /// `λ²/2`.
    pub target: Rational,
    pub speed_exponent: Option<Rational>,
    pub rows: Vec<MdpRow>,
}

impl MdpTable {
    /// `sup |row − target|` per row.
    pub fn distances(&self, prec: u32) -> Vec<Option<f64>> {
        let t = Interval::from_rational(&self.target, prec);
        self.rows.iter().map(|r| r.value.as_ref().map(|v| v.max_distance(&t).to_f64())).collect()
    }
}

pub fn mdp_curve(
    lambda: &Rational,
    n_list: &[u32],
    scaling: &Scaling,
    engine: &MomentEngine,
    prec: u32,
) -> Result<MdpTable> {
    let target = Rational::from(lambda * lambda) / 2u32;
    let lam = Interval::from_rational(lambda, prec);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n < 1 {
            return Err(Error::invalid("depths start at 1"));
        }
        let ni = Interval::from_i64(n as i64, prec);
        let a = scaling.a(n, prec);
        let theta_n = &(&a * &lam) / &ni;
        if lambda.cmp0().is_eq() {
            rows.push(MdpRow { n, theta_n: Interval::zero(prec), value: Some(Interval::zero(prec)) });
            continue;
        }
        let value = match engine.moment(n, &theta_n)? {
            ExtendedReal::PosInfinity => None,
            ExtendedReal::Finite(m) => {
                let inner = &m.ln()? - &(&ni * &theta_n);
                Some(&(&ni / &(&a * &a)) * &inner)
            }
        };
        rows.push(MdpRow { n, theta_n, value });
    }
    Ok(MdpTable { lambda: lambda.clone(), target, speed_exponent: scaling.speed_exponent(), rows })
}

/// `min(I(ε), I(−ε))`, the exponent the large deviations allow for
/// `P(|log b_n/n − 1| ≥ ε)`.
pub fn beta_max(eps: &Rational, prec: u32) -> Result<Interval> {
    if eps.cmp0().is_le() {
        return Err(Error::invalid("ε must be positive"));
    }
    let up = rate_i(&Interval::from_rational(eps, prec));
    let down = rate_i(&Interval::from_rational(&Rational::from(-eps), prec));
    Ok(match (up, down) {
        (ExtendedReal::Finite(u), ExtendedReal::Finite(d)) => u.min(&d),
        (ExtendedReal::Finite(u), ExtendedReal::PosInfinity) => u,
        _ => unreachable!("I is finite for x > 0"),
    })
}

#[derive(Clone, Debug)]
pub struct BoundRow {
    pub n: u32,
    /// Lower and upper bounds on `P(|log b_n/n − 1| ≥ ε)`.
    pub p_lo: f64,
    pub p_hi: f64,
    /// Smallest `α` for which this row satisfies the bound.
    pub alpha_needed: f64,
}

#[derive(Clone, Debug)]
pub struct ExponentialBound {
    pub eps: Rational,
    pub beta_max: Interval,
    pub beta: Interval,
    /// Smallest `α` satisfying every row (or the caller's `α`).
    pub alpha: f64,
    pub rows: Vec<BoundRow>,
    /// Depths where the probability certainly exceeds `α e^{−βn}`.
    pub violations: Vec<u32>,
}

/// Checks `P(|log b_n/n − 1| ≥ ε) ≤ α e^{−βn}` with `β = fraction·β_max`.
///
/// `estimator(n)` returns bounds `(lo, hi)` on the probability. With
/// `alpha = None` the smallest `α` fitting every upper bound is reported.
pub fn exponential_bound_check<F>(
    eps: &Rational,
    n_list: &[u32],
    fraction: &Rational,
    alpha: Option<f64>,
    estimator: F,
) -> Result<ExponentialBound>
where
    F: Fn(u32) -> Result<(f64, f64)>,
{
    let prec = 64;
    let beta_max = beta_max(eps, prec)?;
    let beta = beta_max.mul_rational(fraction);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (p_lo, p_hi) = estimator(n)?;
        let growth = (&beta * &Interval::from_i64(n as i64, prec)).exp();
        let alpha_needed = (&Interval::from_f64(p_hi, prec) * &growth).hi_f64();
        rows.push(BoundRow { n, p_lo, p_hi, alpha_needed });
    }
    let alpha = alpha.unwrap_or_else(|| rows.iter().map(|r| r.alpha_needed).fold(0.0, f64::max));
    let violations = rows
        .iter()
        .filter(|r| {
            let decay = (-&(&beta * &Interval::from_i64(r.n as i64, prec))).exp();
            r.p_lo > (&Interval::from_f64(alpha, prec) * &decay).hi_f64()
        })
        .map(|r| r.n)
        .collect();
    Ok(ExponentialBound { eps: eps.clone(), beta_max, beta, alpha, rows, violations })
}

/// Encloses `P(|log b_n/n − 1| ≥ ε)` from a lift distribution.
pub fn lift_deviation_probability(dist: &LiftDistribution, n: u32, eps: &Rational) -> Result<(f64, f64)> {
    let prec = 64;
    let ni = Interval::from_i64(n as i64, prec);
    let e = Interval::from_rational(eps, prec);
    let one = Interval::one(prec);
    let upper = (&ni * &(&one + &e)).exp();
    let lower = (&ni * &(&one - &e)).exp();
    let (u_lo, u_hi, d_lo, d_hi) = (upper.lo_f64(), upper.hi_f64(), lower.lo_f64(), lower.hi_f64());
    let p = dist.event_probability(n, |a, c| {
        let top = if c.is_finite() { c - 1.0 } else { f64::INFINITY };
        if a >= u_hi || top <= d_lo {
            Some(true)
        } else if a > d_hi && top < u_lo {
            Some(false)
        } else {
            None
        }
    })?;
    Ok((p.lo, p.hi))
}

impl FromStr for RateFunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RateFunctionId::parse(s, None)
    }
}
