//! Seeded Monte Carlo over dyadic samples with certified digits.
//!
//! Trial `i` draws `k` uniformly from `{0, …, 2^B − 1}` using ChaCha20 keyed
//! by the seed on stream `i`, and stands for the whole cell
//! `[k/2^B, (k+1)/2^B]`. Its digits are the prefix shared by both cell
//! endpoints, so every statistic is computed from digits that hold for every
//! real in the cell. Results depend only on `(seed, index)`, never on the
//! number of workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rug::integer::Order;
use rug::{Integer, Rational};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::deviations::{rate, RateFunctionId};
use crate::error::{Error, Result};
use crate::expansion::{expand_interval, expand_pairs, CertifiedExpansion, DigitWord};
use crate::numerics::{F64Interval, Interval};

/// Name recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3), key = seed via seed_from_u64, stream = trial index";

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleConfig {
    pub seed: u64,
    pub trials: u64,
    /// Dyadic precision `B`.
    pub bits: u32,
    /// Number of digits to certify.
    pub depth: u32,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SampleConfig {
    /// Uses `B = max(⌈2.2·n²⌉, 64)` bits.
    pub fn new(seed: u64, trials: u64, depth: u32) -> Self {
        SampleConfig { seed, trials, bits: Self::default_bits(depth), depth, workers: None }
    }

    pub fn default_bits(depth: u32) -> u32 {
        let n = depth as u64;
        ((22 * n * n).div_ceil(10)).max(64) as u32
    }

    fn validate(&self) -> Result<()> {
        if self.bits < 1 || self.depth < 1 || self.trials < 1 {
            return Err(Error::invalid(format!(
                "sampling needs bits, depth and trials ≥ 1 (bits={}, depth={}, trials={})",
                self.bits, self.depth, self.trials
            )));
        }
        Ok(())
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(job()),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }
}

/// The integer `k` of trial `index`.
fn draw(seed: u64, bits: u32, index: u64) -> Integer {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let words = (bits as usize).div_ceil(64);
    let mut buf = vec![0u64; words];
    for w in buf.iter_mut() {
        *w = rng.next_u64();
    }
    let mut k = Integer::from_digits(&buf, Order::Lsf);
    k.keep_bits_mut(bits);
    k
}

/// Sample `index`: `(k+1)/2^B`.
pub fn sample_dyadic(config: &SampleConfig, index: u64) -> Rational {
    let k = draw(config.seed, config.bits, index);
    Rational::from((k + 1u32, Integer::from(1) << config.bits))
}

/// Samples `0, 1, 2, …` of the configuration, in index order.
pub fn sample_stream(config: &SampleConfig) -> impl Iterator<Item = Rational> + '_ {
    (0..config.trials).map(move |i| sample_dyadic(config, i))
}

/// Certified digits of the cell `[x − 2^−B, x]`, up to `n` of them.
///
/// A cell touching 0 certifies nothing.
pub fn simulate_digits(x: &Rational, bits: u32, n: u32) -> Result<CertifiedExpansion> {
    if x.cmp0().is_le() || *x > 1 {
        return Err(Error::domain(format!("sample {x} is outside (0, 1]")));
    }
    let lo = x - Rational::from((1, Integer::from(1) << bits));
    if lo.cmp0().is_le() {
        return Ok(CertifiedExpansion { digits: DigitWord::empty(), certified_count: 0, truncated: true });
    }
    expand_interval(&lo, x, n as usize)
}

/// Certified digits shared by every real in `[lo, hi]`.
pub fn simulate_cell(lo: &Rational, hi: &Rational, n: u32) -> Result<CertifiedExpansion> {
    expand_interval(lo, hi, n as usize)
}

/// The first `depth` digits of trial `index`, if all are certified.
fn trial_digits(config: &SampleConfig, index: u64) -> Option<Vec<Integer>> {
    let k = draw(config.seed, config.bits, index);
    if k == 0 {
        return None;
    }
    let den = Integer::from(1) << config.bits;
    let hi = Integer::from(&k + 1u32);
    let e = expand_pairs(k, den.clone(), hi, den, config.depth as usize);
    (e.certified_count >= config.depth as usize).then(|| e.digits.into_digits())
}

/// A frequency with its 99% Clopper–Pearson interval.
#[derive(Clone, Debug, PartialEq)]
pub struct EventEstimate {
    pub hits: u64,
    /// Certified trials, the denominator of `p_hat`.
    pub trials: u64,
    pub p_hat: Rational,
    pub ci_lo: Rational,
    pub ci_hi: Rational,
    /// Trials whose digits (or event) could not be certified; excluded above.
    pub uncertified: u64,
}

impl EventEstimate {
    fn new(hits: u64, trials: u64, uncertified: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::NoCertifiedTrials { uncertified });
        }
        let p_hat = Rational::from((hits, trials));
        let (lo, hi) = clopper_pearson(hits, trials, 1.0 - CONFIDENCE);
        let exact = |v: f64| Rational::from_f64(v).expect("finite");
        let ci_lo = exact(lo).min(p_hat.clone());
        let ci_hi = exact(hi).max(p_hat.clone());
        Ok(EventEstimate { hits, trials, p_hat, ci_lo, ci_hi, uncertified })
    }

    pub fn p_hat_f64(&self) -> f64 {
        self.p_hat.to_f64()
    }

    pub fn contains(&self, p: &Rational) -> bool {
        self.ci_lo <= *p && *p <= self.ci_hi
    }
}

/// `ln Σ_{k=a}^{b} C(n,k) p^k (1−p)^{n−k}`, summing outward from the
/// largest term until the rest is negligible.
fn ln_binomial_sum(n: u64, a: u64, b: u64, p: f64) -> f64 {
    if a > b {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if a == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if b == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let lnc = ln_gamma(nf + 1.0);
    let term = |k: u64| {
        let kf = k as f64;
        lnc - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + kf * lp + (nf - kf) * lq
    };
    let mode = (((n + 1) as f64) * p).floor() as u64;
    let peak = mode.clamp(a, b);
    let top = term(peak);
    let mut sum = 1.0;
    let cutoff = -40.0;
    let mut k = peak;
    while k < b {
        k += 1;
        let r = term(k) - top;
        if r < cutoff {
            break;
        }
        sum += r.exp();
    }
    let mut k = peak;
    while k > a {
        k -= 1;
        let r = term(k) - top;
        if r < cutoff {
            break;
        }
        sum += r.exp();
    }
    top + sum.ln()
}

/// Exact-tail Clopper–Pearson interval at level `1 − alpha`.
pub fn clopper_pearson(hits: u64, trials: u64, alpha: f64) -> (f64, f64) {
    let half = (alpha / 2.0).ln();
    let solve = |f: &dyn Fn(f64) -> bool, mut lo: f64, mut hi: f64| {
        // f is false below the root and true above it.
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if f(m) {
                hi = m;
            } else {
                lo = m;
            }
        }
        (lo, hi)
    };
    let p_hat = hits as f64 / trials as f64;
    let lower = if hits == 0 {
        0.0
    } else {
        // P(X ≥ hits | p) grows with p.
        solve(&|p| ln_binomial_sum(trials, hits, trials, p) >= half, 0.0, p_hat).0
    };
    let upper = if hits == trials {
        1.0
    } else {
        // P(X ≤ hits | p) falls with p.
        solve(&|p| ln_binomial_sum(trials, 0, hits, p) <= half, p_hat, 1.0).1
    };
    (lower, upper)
}

/// Estimates `P(event)` from the certified digits `b_1, …, b_n` of each
/// trial; `None` from the event counts the trial as uncertified.
pub fn estimate_event<F>(config: &SampleConfig, event: F) -> Result<EventEstimate>
where
    F: Fn(&[Integer]) -> Option<bool> + Sync,
{
    config.validate()?;
    let (hits, trials, uncertified) = config.run(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| match trial_digits(config, i).and_then(|d| event(&d)) {
                Some(true) => (1u64, 1u64, 0u64),
                Some(false) => (0, 1, 0),
                None => (0, 0, 1),
            })
            .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    })?;
    EventEstimate::new(hits, trials, uncertified)
}

/// Enclosures of `log b_n` at selected depths for one batch of trials.
#[derive(Clone, Debug)]
pub struct TrialSet {
    pub config: SampleConfig,
    pub depths: Vec<u32>,
    /// `logs[i·depths.len() + j]` encloses `log b_{depths[j]}` of trial `i`.
    logs: Vec<F64Interval>,
    certified: Vec<bool>,
}

impl TrialSet {
    /// Runs `config.trials` trials to depth `config.depth`, keeping `log b_n`
    /// for each `n` in `depths`.
    pub fn collect(config: &SampleConfig, depths: &[u32]) -> Result<Self> {
        config.validate()?;
        if depths.iter().any(|&n| n < 1 || n > config.depth) {
            return Err(Error::invalid(format!("depths {depths:?} must lie in 1..={}", config.depth)));
        }
        let per: Vec<Option<Vec<F64Interval>>> = config.run(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|i| {
                    trial_digits(config, i).map(|d| {
                        depths
                            .iter()
                            .map(|&n| {
                                let b = Interval::from_integer(&d[n as usize - 1], 64);
                                F64Interval::from_interval(&b.ln().expect("digits are ≥ 1"))
                            })
                            .collect()
                    })
                })
                .collect()
        })?;
        let mut logs = Vec::with_capacity(per.len() * depths.len());
        let mut certified = Vec::with_capacity(per.len());
        for p in per {
            certified.push(p.is_some());
            match p {
                Some(v) => logs.extend(v),
                None => logs.extend(std::iter::repeat_n(F64Interval::ZERO, depths.len())),
            }
        }
        Ok(TrialSet { config: config.clone(), depths: depths.to_vec(), logs, certified })
    }

    pub fn certified_count(&self) -> u64 {
        self.certified.iter().filter(|&&c| c).count() as u64
    }

    pub fn uncertified_count(&self) -> u64 {
        self.certified.len() as u64 - self.certified_count()
    }

    fn column(&self, n: u32) -> Result<usize> {
        self.depths.iter().position(|&d| d == n).ok_or_else(|| Error::invalid(format!("depth {n} was not collected")))
    }

    /// Enclosures of `log b_n` over the certified trials, in index order.
    pub fn logs_at(&self, n: u32) -> Result<Vec<F64Interval>> {
        let j = self.column(n)?;
        let w = self.depths.len();
        Ok(self.certified.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| self.logs[i * w + j]).collect())
    }

    /// Estimates `P(event(log b_n))`; `None` counts as uncertified.
    pub fn estimate<F>(&self, n: u32, event: F) -> Result<EventEstimate>
    where
        F: Fn(F64Interval) -> Option<bool>,
    {
        let logs = self.logs_at(n)?;
        let (mut hits, mut trials) = (0u64, 0u64);
        let mut uncertified = self.uncertified_count();
        for l in logs {
            match event(l) {
                Some(true) => {
                    hits += 1;
                    trials += 1;
                }
                Some(false) => trials += 1,
                None => uncertified += 1,
            }
        }
        EventEstimate::new(hits, trials, uncertified)
    }
}

/// `Some(true)` when `log b ≥ t` for every point of both enclosures,
/// `Some(false)` when `log b < t` throughout, `None` otherwise.
pub fn at_least(log_b: F64Interval, t: &Interval) -> Option<bool> {
    if log_b.lo >= t.hi_f64() {
        Some(true)
    } else if log_b.hi < t.lo_f64() {
        Some(false)
    } else {
        None
    }
}

fn at_most(log_b: F64Interval, t: &Interval) -> Option<bool> {
    if log_b.hi <= t.lo_f64() {
        Some(true)
    } else if log_b.lo > t.hi_f64() {
        Some(false)
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct LlnReport {
    pub depth: u32,
    pub certified: u64,
    pub uncertified: u64,
    /// Sample mean of `log b_n / n`.
    pub mean: f64,
    pub std_dev: f64,
}

pub fn lln_report(config: &SampleConfig) -> Result<LlnReport> {
    let set = TrialSet::collect(config, &[config.depth])?;
    lln_from(&set, config.depth)
}

pub fn lln_from(set: &TrialSet, n: u32) -> Result<LlnReport> {
    let v: Vec<f64> = set.logs_at(n)?.iter().map(|l| 0.5 * (l.lo + l.hi) / n as f64).collect();
    if v.is_empty() {
        return Err(Error::NoCertifiedTrials { uncertified: set.uncertified_count() });
    }
    let (mean, std_dev) = mean_std(&v);
    Ok(LlnReport { depth: n, certified: v.len() as u64, uncertified: set.uncertified_count(), mean, std_dev })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64 } else { 0.0 };
    (m, var.sqrt())
}

#[derive(Clone, Debug)]
pub struct CltReport {
    pub depth: u32,
    pub certified: u64,
    pub uncertified: u64,
    /// Kolmogorov–Smirnov distance of `(log b_n − n)/√n` to `N(0, 1)`.
    pub ks: f64,
    /// `(level, empirical quantile, normal quantile)`.
    pub quantiles: Vec<(f64, f64, f64)>,
}

pub fn clt_report(config: &SampleConfig) -> Result<CltReport> {
    let set = TrialSet::collect(config, &[config.depth])?;
    clt_from(&set, config.depth)
}

pub fn clt_from(set: &TrialSet, n: u32) -> Result<CltReport> {
    let root = (n as f64).sqrt();
    let mut v: Vec<f64> = set.logs_at(n)?.iter().map(|l| (0.5 * (l.lo + l.hi) - n as f64) / root).collect();
    if v.is_empty() {
        return Err(Error::NoCertifiedTrials { uncertified: set.uncertified_count() });
    }
    v.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let m = v.len() as f64;
    let ks = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max);
    let quantiles = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99]
        .iter()
        .map(|&q| {
            let idx = ((q * m).ceil() as usize).clamp(1, v.len()) - 1;
            (q, v[idx], normal.inverse_cdf(q))
        })
        .collect();
    Ok(CltReport { depth: n, certified: v.len() as u64, uncertified: set.uncertified_count(), ks, quantiles })
}

/// Which large deviation of `(log b_n − n)/n` is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// `(log b_n − n)/n ≥ ε`.
    Upper,
    /// `(log b_n − n)/n ≤ −ε`.
    Lower,
}

#[derive(Clone, Debug)]
pub struct LdpRow {
    pub n: u32,
    pub estimate: EventEstimate,
    /// `−(1/n) log p̂`; `None` without hits.
    pub rate_hat: Option<f64>,
    /// `−(1/n) log` of the CI ends, as `(from ci_hi, from ci_lo)`.
    pub rate_ci: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct LdpSlope {
    pub tail: Tail,
    pub eps: Rational,
    pub rows: Vec<LdpRow>,
    /// Minus the least-squares slope of `log p̂_n` against `n`, over rows with hits.
    pub slope: Option<f64>,
    /// `I(ε)` or `I(−ε)`.
    pub target: Interval,
}

/// Probability estimate of the tail event at depth `n` from collected trials.
pub fn tail_estimate(set: &TrialSet, tail: Tail, eps: &Rational, n: u32) -> Result<EventEstimate> {
    let prec = 64;
    let ni = Interval::from_i64(n as i64, prec);
    let e = Interval::from_rational(eps, prec);
    let one = Interval::one(prec);
    match tail {
        Tail::Upper => {
            let t = &ni * &(&one + &e);
            set.estimate(n, |l| at_least(l, &t))
        }
        Tail::Lower => {
            let t = &ni * &(&one - &e);
            set.estimate(n, |l| at_most(l, &t))
        }
    }
}

/// Estimates `P(|log b_n/n − 1| ≥ ε)` from collected trials.
pub fn two_sided_estimate(set: &TrialSet, eps: &Rational, n: u32) -> Result<EventEstimate> {
    let prec = 64;
    let ni = Interval::from_i64(n as i64, prec);
    let e = Interval::from_rational(eps, prec);
    let one = Interval::one(prec);
    let up = &ni * &(&one + &e);
    let down = &ni * &(&one - &e);
    set.estimate(n, |l| match (at_least(l, &up), at_most(l, &down)) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    })
}

/// Fits the decay of a tail probability over `n_list` from collected trials.
pub fn ldp_slope_from(set: &TrialSet, tail: Tail, eps: &Rational, n_list: &[u32]) -> Result<LdpSlope> {
    if eps.cmp0().is_lt() {
        return Err(Error::invalid("ε must be nonnegative"));
    }
    let x = match tail {
        Tail::Upper => eps.clone(),
        Tail::Lower => Rational::from(-eps),
    };
    let target = rate(RateFunctionId::I, &Interval::from_rational(&x, 128))?
        .finite()
        .cloned()
        .ok_or_else(|| Error::invalid(format!("rate is infinite at {x}; the event is null")))?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let estimate = tail_estimate(set, tail, eps, n)?;
        let nf = n as f64;
        let rate_of = |p: f64| if p > 0.0 { -p.ln() / nf } else { f64::INFINITY };
        let rate_hat = (estimate.hits > 0).then(|| rate_of(estimate.p_hat_f64()));
        let rate_ci = (rate_of(estimate.ci_hi.to_f64()), rate_of(estimate.ci_lo.to_f64()));
        rows.push(LdpRow { n, estimate, rate_hat, rate_ci });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.estimate.hits > 0).map(|r| (r.n as f64, r.estimate.p_hat_f64().ln())).collect();
    let slope = least_squares_slope(&pts).map(|s| -s);
    Ok(LdpSlope { tail, eps: eps.clone(), rows, slope, target })
}

/// Runs one trial batch to `max(n_list)` and fits the decay.
pub fn ldp_slope(eps: &Rational, tail: Tail, n_list: &[u32], config: &SampleConfig) -> Result<LdpSlope> {
    let max_n = *n_list.iter().max().ok_or_else(|| Error::invalid("empty depth list"))?;
    let mut cfg = config.clone();
    if cfg.depth < max_n {
        cfg.depth = max_n;
        cfg.bits = cfg.bits.max(SampleConfig::default_bits(max_n));
    }
    let set = TrialSet::collect(&cfg, n_list)?;
    ldp_slope_from(&set, tail, eps, n_list)
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::expand_rational;
    use crate::measure::marginal_exact;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn dyadic_samples_are_uniform_cells() {
        let cfg = SampleConfig { seed: 7, trials: 100_000, bits: 8, depth: 1, workers: None };
        let mut sum = 0.0;
        for x in sample_stream(&cfg) {
            let scaled = Rational::from(&x * 256u32);
            assert!(scaled.denom() == &1u32 && *scaled.numer() >= 1 && *scaled.numer() <= 256);
            sum += x.to_f64();
        }
        // E((k+1)/256) = 257/512.
        assert!((sum / 1e5 - 0.5).abs() < 0.005);
    }

    #[test]
    fn samples_depend_only_on_seed_and_index() {
        let a = SampleConfig { seed: 42, trials: 10, bits: 300, depth: 3, workers: Some(1) };
        let b = SampleConfig { trials: 1000, workers: Some(4), ..a.clone() };
        for i in 0..10 {
            assert_eq!(sample_dyadic(&a, i), sample_dyadic(&b, i));
        }
        assert_ne!(sample_dyadic(&a, 0), sample_dyadic(&a, 1));
        let c = SampleConfig { seed: 43, ..a.clone() };
        assert_ne!(sample_dyadic(&a, 0), sample_dyadic(&c, 0));
    }

    #[test]
    fn reports_independent_of_workers() {
        let one = SampleConfig { seed: 9, trials: 3000, bits: 400, depth: 10, workers: Some(1) };
        let many = SampleConfig { workers: Some(3), ..one.clone() };
        let ev = |d: &[Integer]| Some(d[9] >= 1000u32);
        assert_eq!(estimate_event(&one, ev).unwrap(), estimate_event(&many, ev).unwrap());
        let a = lln_report(&one).unwrap();
        let b = lln_report(&many).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(clt_report(&one).unwrap().ks.to_bits(), clt_report(&many).unwrap().ks.to_bits());
    }

    #[test]
    fn cell_examples() {
        let e = simulate_cell(&q(61, 100), &q(62, 100), 10).unwrap();
        assert_eq!(e.digits.to_u64s().unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(e.certified_count, 4);
        let x = q(7, 10);
        let e = simulate_cell(&x, &x, 10).unwrap();
        assert_eq!(e, expand_rational(&x, 10).unwrap());
        assert!(!e.truncated);
        let e = simulate_digits(&q(1, 4), 2, 5).unwrap();
        assert_eq!(e.certified_count, 0);
    }

    #[test]
    fn certification_rate_at_two_thousand_bits() {
        let cfg = SampleConfig { seed: 1, trials: 2000, bits: 2000, depth: 30, workers: None };
        let e = estimate_event(&cfg, |_| Some(true)).unwrap();
        assert!(e.uncertified * 100 <= cfg.trials, "{} uncertified", e.uncertified);
        assert_eq!(e.p_hat, 1);
    }

    #[test]
    fn first_digit_law() {
        let cfg = SampleConfig::new(42, 200_000, 1);
        let e = estimate_event(&cfg, |d| Some(d[0] >= 2u32)).unwrap();
        assert!(e.contains(&q(1, 2)), "{:?}", e);
        assert_eq!(e.uncertified, 0);
    }

    #[test]
    fn clopper_pearson_known_values() {
        // Closed forms when all or none of the trials hit: (α/2)^{1/n}.
        let (lo, hi) = clopper_pearson(0, 10, 0.01);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.005f64.powf(0.1))).abs() < 1e-12);
        let (lo, hi) = clopper_pearson(10, 10, 0.01);
        assert!((lo - 0.005f64.powf(0.1)).abs() < 1e-12);
        assert_eq!(hi, 1.0);
        // Large n: close to the normal approximation.
        let (lo, hi) = clopper_pearson(500_000, 1_000_000, 0.01);
        let half = 2.5758 * (0.25f64 / 1e6).sqrt();
        assert!((lo - (0.5 - half)).abs() < 2e-5 && (hi - (0.5 + half)).abs() < 2e-5);
    }

    #[test]
    fn estimator_calibration() {
        let exact_b1 = q(1, 6);
        let exact_b2 = marginal_exact(2, 2, 100).unwrap().entry(2).unwrap().lo.clone();
        assert_eq!(exact_b2, q(1, 8));
        let (mut ok1, mut ok2) = (0, 0);
        for run in 0..100u64 {
            let cfg = SampleConfig::new(1000 + run, 2000, 2);
            let e1 = estimate_event(&cfg, |d| Some(d[0] == 2u32)).unwrap();
            let e2 = estimate_event(&cfg, |d| Some(d[1] == 2u32)).unwrap();
            ok1 += e1.contains(&exact_b1) as u32;
            ok2 += e2.contains(&exact_b2) as u32;
        }
        assert!(ok1 >= 95 && ok2 >= 95, "coverage {ok1}, {ok2}");
    }

    #[test]
    fn tail_frequencies_fall_with_threshold() {
        let cfg = SampleConfig::new(5, 5000, 20);
        let set = TrialSet::collect(&cfg, &[20]).unwrap();
        let mut prev = None;
        for i in 0..40 {
            let a = Interval::from_f64(-10.0 + i as f64, 64);
            let t = &a + &Interval::from_i64(20, 64);
            let e = set.estimate(20, |l| at_least(l, &t)).unwrap();
            if let Some(p) = prev {
                assert!(e.p_hat <= p);
            }
            prev = Some(e.p_hat);
        }
    }

    #[test]
    fn zero_threshold_splits_mass() {
        let cfg = SampleConfig::new(11, 20_000, 30);
        let r = ldp_slope(&q(0, 1), Tail::Upper, &[10, 20, 30], &cfg).unwrap();
        for row in &r.rows {
            assert!((row.estimate.p_hat_f64() - 0.5).abs() < 0.1, "n={} p={}", row.n, row.estimate.p_hat_f64());
        }
        assert!(r.slope.unwrap().abs() < 0.02);
        assert!(r.target.contains_f64(0.0));
    }

    #[test]
    fn reports_at_depth_one() {
        let cfg = SampleConfig::new(3, 20_000, 1);
        let l = lln_report(&cfg).unwrap();
        // E log b₁ = Σ log k/(k(k+1)) ≈ 0.7885.
        assert!((l.mean - 0.7885).abs() < 0.05, "{}", l.mean);
        assert!(clt_report(&cfg).unwrap().ks > 0.2);
    }

    #[test]
    fn empty_batches_fail_loudly() {
        let cfg = SampleConfig::new(3, 100, 2);
        assert!(matches!(estimate_event(&cfg, |_| None), Err(Error::NoCertifiedTrials { uncertified: 100 })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn certified_prefix_is_shared_by_cell_endpoints(seed in any::<u64>(), index in 0u64..1_000_000, depth in 1u32..12) {
            let cfg = SampleConfig::new(seed, 1, depth);
            let x = sample_dyadic(&cfg, index);
            let e = simulate_digits(&x, cfg.bits, depth).unwrap();
            prop_assert!(crate::expansion::is_admissible(e.digits.digits()));
            let lo = &x - Rational::from((1, Integer::from(1) << cfg.bits));
            if e.certified_count > 0 {
                let a = expand_rational(&lo, e.certified_count).unwrap();
                let b = expand_rational(&x, e.certified_count).unwrap();
                prop_assert_eq!(&a.digits, &e.digits);
                prop_assert_eq!(&b.digits, &e.digits);
            }
            if let Some(d) = trial_digits(&cfg, index) {
                prop_assert_eq!(&d[..], e.digits.digits());
            }
        }
    }
}
