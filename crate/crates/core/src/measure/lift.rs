//! Enclosures of the law of `b_n` for large `n` through a Markov lift.
//!
//! With `z_n = b_n·Q_{n−1}/Q_n ∈ (0, 1]` the pair `(b_n, z_n)` is a
//! time-homogeneous Markov chain:
//!
//! ```text
//! P(b_{n+1} = k | b_n = j, z_n = z) = (j+z) / ((k+z)(k+1+z)),   k ≥ j,
//! z_{n+1} = k / (k + z),                                       z_1 = 1.
//! ```
//!
//! Summing over `k ∈ [a, c)` telescopes to `(j+z)(c−a)/((a+z)(c+z))`. Digits
//! are grouped into bins (singletons, then geometric, then a tail `k ≥ E`),
//! each bin carries an interval of mass and a hull of its `z` values, and
//! the transition probabilities between bins are bounded over those hulls.
//! All arithmetic is `f64` rounded outward, so every reported quantity is a
//! rigorous enclosure.

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::numerics::{add_dn, add_up, div_dn, div_up, mul_dn, mul_up, F64Interval, Interval};

/// Integers at or above this are not all representable in `f64`.
const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0;

/// Bin layout of the lifted chain.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftGrid {
    /// Digits `1..=singletons` get a bin each.
    pub singletons: u32,
    /// Geometric growth of the wider bins: `[a, ⌊a(1+ratio)⌋)`.
    pub ratio: f64,
    /// Digits at or above the last edge (about `k_max`) form the tail.
    pub k_max: f64,
    /// Targets whose first digit is at least this use aggregated sources.
    pub far_from: f64,
    /// Singleton bins `j ≤ z_split_upto` are split into `z_cells` cells by `z`.
    pub z_split_upto: u32,
    pub z_cells: u32,
}

impl Default for LiftGrid {
    fn default() -> Self {
        LiftGrid { singletons: 200, ratio: 2e-3, k_max: 1e15, far_from: 2e4, z_split_upto: 30, z_cells: 16 }
    }
}

impl LiftGrid {
    /// A coarser, deeper layout for tail probabilities at depths up to ~40.
    pub fn deep() -> Self {
        LiftGrid { singletons: 100, ratio: 1e-2, k_max: 1e45, far_from: 1e4, z_split_upto: 20, z_cells: 8 }
    }

    fn validate(&self) -> Result<()> {
        if self.singletons < 1
            || self.ratio.is_nan()
            || self.ratio <= 0.0
            || self.k_max.is_nan()
            || self.k_max <= self.singletons as f64
            || self.z_cells < 1
        {
            return Err(Error::invalid(format!("unusable lift grid {self:?}")));
        }
        Ok(())
    }

    fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = (1..=self.singletons as u64 + 1).map(|k| k as f64).collect();
        let mut a = *e.last().expect("nonempty");
        while a <= self.k_max {
            let next = (a * (1.0 + self.ratio)).floor().max(a + 1.0);
            let next = if next == a { next.next_up() } else { next };
            e.push(next);
            a = next;
        }
        e
    }
}

#[derive(Clone, Debug)]
struct Bin {
    /// First digit in the bin.
    a: f64,
    /// One past the last digit.
    c: f64,
    first_cell: usize,
    cells: usize,
}

impl Bin {
    fn is_singleton(&self) -> bool {
        self.c == self.a + 1.0
    }

    /// Upper bound of the largest digit in the bin.
    fn top(&self) -> f64 {
        if self.c < EXACT_LIMIT {
            self.c - 1.0
        } else {
            self.c
        }
    }

    fn cell_for(&self, z: f64) -> usize {
        if self.cells == 1 {
            return self.first_cell;
        }
        let base = self.a / (self.a + 1.0);
        let t = ((z - base) / (1.0 - base) * self.cells as f64).floor();
        self.first_cell + (t.max(0.0) as usize).min(self.cells - 1)
    }
}

#[derive(Clone, Debug)]
struct State {
    lo: Vec<f64>,
    hi: Vec<f64>,
    zl: Vec<f64>,
    zh: Vec<f64>,
}

impl State {
    fn empty(cells: usize) -> Self {
        State {
            lo: vec![0.0; cells],
            hi: vec![0.0; cells],
            zl: vec![f64::INFINITY; cells],
            zh: vec![f64::NEG_INFINITY; cells],
        }
    }

    #[inline]
    fn add(&mut self, cell: usize, plo: f64, phi: f64, zl: f64, zh: f64) {
        self.lo[cell] = add_dn(self.lo[cell], plo);
        self.hi[cell] = add_up(self.hi[cell], phi);
        self.zl[cell] = self.zl[cell].min(zl);
        self.zh[cell] = self.zh[cell].max(zh);
    }
}

/// Per-depth summary of the lifted chain.
#[derive(Clone, Debug)]
struct Step {
    bin_lo: Vec<f64>,
    bin_hi: Vec<f64>,
    tail: F64Interval,
    /// Bounds of `Σ P(b_n = j, z_n = z)·(j + z)` over the finite bins.
    entry: F64Interval,
}

/// Enclosures of the law of `b_1, …, b_depth`.
#[derive(Clone, Debug)]
pub struct LiftDistribution {
    grid: LiftGrid,
    bins: Vec<Bin>,
    /// The tail is `k ≥ tail_start`.
    tail_start: f64,
    steps: Vec<Step>,
}

impl LiftDistribution {
    pub fn compute(grid: &LiftGrid, depth: u32) -> Result<Self> {
        grid.validate()?;
        if depth < 1 {
            return Err(Error::invalid("depth must be at least 1"));
        }
        let edges = grid.edges();
        let mut bins = Vec::with_capacity(edges.len() - 1);
        let mut cells = 0;
        for w in edges.windows(2) {
            let split = w[1] == w[0] + 1.0 && w[0] <= grid.z_split_upto as f64;
            let n = if split { grid.z_cells as usize } else { 1 };
            bins.push(Bin { a: w[0], c: w[1], first_cell: cells, cells: n });
            cells += n;
        }
        let tail_start = *edges.last().expect("nonempty");
        let near = bins.iter().take_while(|b| b.a < grid.far_from).count();

        let mut state = State::empty(cells);
        for b in &bins {
            // P(b₁ ∈ [a, c)) = 1/a − 1/c.
            let cell = b.cell_for(1.0);
            let lo = (div_dn(1.0, b.a) - div_up(1.0, b.c)).next_down().max(0.0);
            let hi = (div_up(1.0, b.a) - div_dn(1.0, b.c)).next_up();
            state.add(cell, lo, hi, 1.0, 1.0);
        }
        let tail = F64Interval::new(div_dn(1.0, tail_start), div_up(1.0, tail_start));

        let mut dist = LiftDistribution { grid: grid.clone(), bins, tail_start, steps: Vec::new() };
        let mut tail = tail;
        for m in 1..=depth {
            let step = dist.summarize(&state, tail);
            if m < depth {
                let entry_mass = F64Interval::new(
                    div_dn(step.entry.lo, add_up(tail_start, 1.0)),
                    div_up(step.entry.hi, tail_start).min(1.0),
                );
                tail = tail + entry_mass;
                tail.hi = tail.hi.min(1.0);
                state = dist.advance(&state, near);
            }
            dist.steps.push(step);
        }
        Ok(dist)
    }

    pub fn depth(&self) -> u32 {
        self.steps.len() as u32
    }

    pub fn grid(&self) -> &LiftGrid {
        &self.grid
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    /// First digit of the tail bin.
    pub fn tail_start(&self) -> f64 {
        self.tail_start
    }

    fn summarize(&self, s: &State, tail: F64Interval) -> Step {
        let mut bin_lo = vec![0.0; self.bins.len()];
        let mut bin_hi = vec![0.0; self.bins.len()];
        let (mut elo, mut ehi) = (0.0, 0.0);
        for (i, b) in self.bins.iter().enumerate() {
            for c in b.first_cell..b.first_cell + b.cells {
                if s.hi[c] == 0.0 {
                    continue;
                }
                bin_lo[i] = add_dn(bin_lo[i], s.lo[c]);
                bin_hi[i] = add_up(bin_hi[i], s.hi[c]);
                elo = add_dn(elo, mul_dn(s.lo[c], add_dn(b.a, s.zl[c])));
                ehi = add_up(ehi, mul_up(s.hi[c], add_up(b.top(), s.zh[c])));
            }
            bin_hi[i] = bin_hi[i].min(1.0);
        }
        Step { bin_lo, bin_hi, tail, entry: F64Interval::new(elo, ehi) }
    }

    fn advance(&self, s: &State, near: usize) -> State {
        let bins = &self.bins;
        let mut next = State::empty(s.lo.len());
        // Aggregates over all source bins strictly before the current one.
        let (mut agg_lo, mut agg_hi) = (0.0f64, 0.0f64);
        for (i, b) in bins.iter().enumerate() {
            let far_target = i >= near;
            if far_target && (agg_lo > 0.0 || agg_hi > 0.0) {
                // Sources j < a reach [a, c) with (j+z)(c−a)/((a+z)(c+z)), z ∈ [0, 1].
                let w = b.c - b.a;
                let plo = div_dn(mul_dn(agg_lo, w), mul_up(add_up(b.a, 1.0), add_up(b.c, 1.0)));
                let phi = div_up(mul_up(agg_hi, w), mul_dn(b.a, b.c));
                let z_lo = div_dn(b.a, add_up(b.a, 1.0));
                next.add(b.first_cell, plo, phi.min(1.0), z_lo, 1.0);
            }
            for sc in b.first_cell..b.first_cell + b.cells {
                let (mlo, mhi) = (s.lo[sc], s.hi[sc]);
                if mhi == 0.0 {
                    continue;
                }
                let (zl, zh) = (s.zl[sc], s.zh[sc]);
                // Staying inside the bin.
                let (plo, phi, z_lo, z_hi) = if b.is_singleton() {
                    let j = b.a;
                    (
                        div_dn(1.0, add_up(j + 1.0, zh)),
                        div_up(1.0, add_dn(j + 1.0, zl)),
                        div_dn(j, add_up(j, zh)),
                        div_up(j, add_dn(j, zl)).min(1.0),
                    )
                } else {
                    (
                        div_dn(1.0, add_up(b.c, zh)),
                        div_up(b.c - b.a, add_dn(b.c, zl)).min(1.0),
                        div_dn(b.a, add_up(b.a, zh)),
                        div_up(b.top(), add_dn(b.top(), zl)).min(1.0),
                    )
                };
                let cell = bins[i].cell_for(0.5 * (z_lo + z_hi));
                next.add(cell, mul_dn(mlo, plo), mul_up(mhi, phi).min(1.0), z_lo, z_hi);

                if i + 1 < near {
                    let (jl, jh) = (add_dn(b.a, zl), add_up(b.top(), zh));
                    for t in &bins[i + 1..near] {
                        let w = t.c - t.a;
                        let plo = div_dn(mul_dn(jl, w), mul_up(add_up(t.a, zh), add_up(t.c, zh)));
                        let phi = div_up(mul_up(jh, w), mul_dn(add_dn(t.a, zl), add_dn(t.c, zl))).min(1.0);
                        let z_lo = div_dn(t.a, add_up(t.a, zh));
                        let z_hi = div_up(t.top(), add_dn(t.top(), zl)).min(1.0);
                        let cell = t.cell_for(0.5 * (z_lo + z_hi));
                        next.add(cell, mul_dn(mlo, plo), mul_up(mhi, phi).min(1.0), z_lo, z_hi);
                    }
                }
                agg_lo = add_dn(agg_lo, mul_dn(mlo, add_dn(b.a, zl)));
                agg_hi = add_up(agg_hi, mul_up(mhi, add_up(b.top(), zh)));
            }
        }
        for c in 0..next.hi.len() {
            next.hi[c] = next.hi[c].min(1.0);
        }
        next
    }

    fn step(&self, n: u32) -> Result<&Step> {
        if n < 1 || n > self.depth() {
            return Err(Error::invalid(format!("depth {n} outside 1..={}", self.depth())));
        }
        Ok(&self.steps[n as usize - 1])
    }

    /// Mass enclosures per bin at depth `n`: `(first digit, one past last, lo, hi)`.
    pub fn bins_at(&self, n: u32) -> Result<Vec<(f64, f64, f64, f64)>> {
        let s = self.step(n)?;
        Ok(self.bins.iter().enumerate().map(|(i, b)| (b.a, b.c, s.bin_lo[i], s.bin_hi[i])).collect())
    }

    pub fn tail_mass(&self, n: u32) -> Result<F64Interval> {
        Ok(self.step(n)?.tail)
    }

    /// Encloses `P(b_n ∈ A)` for `A = {k : inside(k)}` given by a classifier on
    /// digit ranges: `Some(true)` when the whole range `[a, c)` lies in `A`,
    /// `Some(false)` when none of it does, `None` otherwise.
    pub fn event_probability<F>(&self, n: u32, classify: F) -> Result<F64Interval>
    where
        F: Fn(f64, f64) -> Option<bool>,
    {
        let s = self.step(n)?;
        let (mut in_lo, mut in_hi, mut out_lo, mut out_hi) = (0.0, 0.0, 0.0, 0.0);
        let ranges = self
            .bins
            .iter()
            .enumerate()
            .map(|(i, b)| (b.a, b.c, s.bin_lo[i], s.bin_hi[i]))
            .chain(std::iter::once((self.tail_start, f64::INFINITY, s.tail.lo, s.tail.hi)));
        for (a, c, lo, hi) in ranges {
            match classify(a, c) {
                Some(true) => {
                    in_lo = add_dn(in_lo, lo);
                    in_hi = add_up(in_hi, hi);
                }
                Some(false) => {
                    out_lo = add_dn(out_lo, lo);
                    out_hi = add_up(out_hi, hi);
                }
                None => {
                    in_hi = add_up(in_hi, hi);
                    out_hi = add_up(out_hi, hi);
                }
            }
        }
        let lo = in_lo.max((1.0 - out_hi).next_down()).max(0.0);
        let hi = in_hi.min((1.0 - out_lo).next_up()).min(1.0);
        Ok(F64Interval::new(lo.min(hi), hi))
    }

    /// Encloses `E(b_n^θ)` for every `θ` in the interval `theta ⊂ (−∞, 1)`.
    pub fn moment(&self, n: u32, theta: &Interval) -> Result<Interval> {
        let prec = theta.prec().max(64);
        if theta.hi_f64() >= 1.0 {
            return Err(Error::domain("moments of order θ ≥ 1 are infinite"));
        }
        if theta.is_point() && theta.contains_f64(0.0) {
            return Ok(Interval::one(prec));
        }
        let s = self.step(n)?;
        let consts = TailConstants::new(self.tail_start, theta, prec)?;
        let mut w = consts.start;
        for m in 1..n as usize {
            let entry = self.steps[m - 1].entry;
            w = w * consts.stay
                + F64Interval::new(mul_dn(entry.lo, consts.enter.lo), mul_up(entry.hi, consts.enter.hi));
        }

        let (tlo, thi) = (theta.lo_f64(), theta.hi_f64());
        let mut items = Vec::with_capacity(self.bins.len() + 1);
        for (i, b) in self.bins.iter().enumerate() {
            if s.bin_hi[i] == 0.0 {
                continue;
            }
            let (vmin, vmax) = power_range(b.a, b.top(), tlo, thi);
            items.push(Item { lo: s.bin_lo[i], hi: s.bin_hi[i], vmin, vmax });
        }
        items.push(Item { lo: s.tail.lo, hi: s.tail.hi, vmin: 0.0, vmax: 0.0 });
        let (lo, hi) = constrained_sum(&mut items);
        Ok(Interval::from_f64_bounds(add_dn(lo, w.lo), add_up(hi, w.hi), prec))
    }
}

struct Item {
    lo: f64,
    hi: f64,
    vmin: f64,
    vmax: f64,
}

/// Bounds of `Σ mᵢvᵢ` over masses `mᵢ ∈ [loᵢ, hiᵢ]` with `Σ mᵢ = 1` and
/// values `vᵢ ∈ [vminᵢ, vmaxᵢ]`, by greedy allocation of the free mass.
fn constrained_sum(items: &mut [Item]) -> (f64, f64) {
    let base_lo = items.iter().fold(0.0, |acc, it| add_dn(acc, mul_dn(it.lo, it.vmin)));
    let base_hi = items.iter().fold(0.0, |acc, it| add_up(acc, mul_up(it.lo, it.vmax)));
    let mass_lo = items.iter().fold(0.0, |acc, it| add_dn(acc, it.lo));
    let mass_lo_up = items.iter().fold(0.0, |acc, it| add_up(acc, it.lo));
    let free_up = (1.0 - mass_lo).next_up().max(0.0);
    let free_dn = (1.0 - mass_lo_up).next_down().max(0.0);

    items.sort_by(|a, b| b.vmax.total_cmp(&a.vmax));
    let mut hi = base_hi;
    let mut left = free_up;
    for it in items.iter() {
        if left <= 0.0 {
            break;
        }
        let take = (it.hi - it.lo).next_up().min(left);
        hi = add_up(hi, mul_up(take, it.vmax));
        left -= take;
    }
    if left > 0.0 {
        // Enclosures of the masses leave room above their upper bounds; the
        // maximum of all values is then a safe price for the remainder.
        let vmax = items.iter().map(|it| it.vmax).fold(0.0, f64::max);
        hi = add_up(hi, mul_up(left, vmax));
    }

    items.sort_by(|a, b| a.vmin.total_cmp(&b.vmin));
    let mut lo = base_lo;
    let mut left = free_dn;
    for it in items.iter() {
        if left <= 0.0 {
            break;
        }
        let take = (it.hi - it.lo).next_down().max(0.0).min(left);
        lo = add_dn(lo, mul_dn(take, it.vmin));
        left -= take;
    }
    (lo, hi)
}

/// `[min k^θ, max k^θ]` over `k ∈ [a, b]`, `θ ∈ [tlo, thi]`; `k^θ` grows with θ.
fn power_range(a: f64, b: f64, tlo: f64, thi: f64) -> (f64, f64) {
    let pow = |k: f64, t: f64| -> Interval {
        if k == 1.0 {
            return Interval::one(64);
        }
        let ln = Interval::from_f64(k, 64).ln().expect("k ≥ 1");
        (&ln * &Interval::from_f64(t, 64)).exp()
    };
    let vmin = pow(a, tlo).lo_f64().min(pow(b, tlo).lo_f64());
    let vmax = pow(a, thi).hi_f64().max(pow(b, thi).hi_f64());
    (vmin, vmax)
}

/// θ-dependent factors for the tail `k ≥ E`.
struct TailConstants {
    /// `E(b₁^θ; b₁ ≥ E)`.
    start: F64Interval,
    /// `E(b_{m+1}^θ | b_m = j)/j^θ` for `j ≥ E`.
    stay: F64Interval,
    /// `E(b_{m+1}^θ; b_{m+1} ≥ E | b_m = j, z_m = z)/(j+z)`.
    enter: F64Interval,
}

impl TailConstants {
    fn new(tail_start: f64, theta: &Interval, prec: u32) -> Result<Self> {
        let e = Integer::from_f64(tail_start).ok_or_else(|| Error::invalid("non-integer tail start"))?;
        let iv = |v: Integer| Interval::from_integer(&v, prec);
        let ei = iv(e.clone());
        let one = Interval::one(prec);
        let theta = theta.with_prec(prec);
        let one_minus = &one - &theta;
        let tm1 = &theta - &one;
        let pow = |base: &Interval| -> Result<Interval> { Ok(&base.pow(&tm1)? / &one_minus) };
        let e_pow = pow(&ei)?;
        let em1_pow = pow(&iv(Integer::from(&e - 1)))?;
        let e1 = iv(Integer::from(&e + 1));
        let e2 = iv(Integer::from(&e + 2));
        let start = Interval::new((&(&ei / &e1) * &e_pow).lo().clone(), em1_pow.hi().clone());
        let enter_lo = &(&(&ei * &ei) / &(&e1 * &e2)) * &e_pow;
        let enter = Interval::new(enter_lo.lo().clone(), em1_pow.hi().clone());
        let stay_lo = &(&ei / &e2) / &one_minus;
        let ratio = Interval::from_rational(&Rational::from((Integer::from(&e - 1), e.clone())), prec);
        let stay_hi = &(&(&e1 / &ei) * &ratio.pow(&tm1)?) / &one_minus;
        let stay = Interval::new(stay_lo.lo().clone(), stay_hi.hi().clone());
        Ok(TailConstants {
            start: F64Interval::from_interval(&start),
            stay: F64Interval::from_interval(&stay),
            enter: F64Interval::from_interval(&enter),
        })
    }
}
