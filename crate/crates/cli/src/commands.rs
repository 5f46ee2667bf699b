use std::io::Write;

use ecf_core::acceptance::{Runner, Suite};
use ecf_core::combinatorics::{count_words, enumerate_words, WordFamily};
use ecf_core::deviations::{
    legendre_numeric, mdp_curve, moment_growth_rate, pressure, rate, GoldenConstants, MomentEngine, RateFunctionId,
    Scaling, LEGENDRE_BRACKET,
};
use ecf_core::expansion::{cylinder_endpoints, expand_rational, reconstruct, DigitWord};
use ecf_core::measure::{
    conditional_given_last, conditional_probability, cylinder_measure, marginal_exact, marginal_interval_dp,
    moment_interval, transition_bounds, LiftGrid, MarginalTable,
};
use ecf_core::montecarlo::{
    clt_report, estimate_event, ldp_slope, lln_report, EventEstimate, SampleConfig, Tail, RNG_ALGORITHM,
};
use ecf_core::numerics::{ExtendedReal, Integer, Interval, Rational};
use serde_json::{json, Value};

use crate::args::{Command, EngineArgs, EngineKind, FamilyArgs, McArgs, McTask, SuiteArg, TailArg};
use crate::output::{decimal, extended, float, int, interval, ints, rat, Report};
use crate::Failure;

/// A report, plus a failure to raise once the report is written.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<Failure>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, failure: None }
    }
}

pub fn seed_and_rng(cmd: &Command) -> (Option<u64>, Option<String>) {
    match cmd {
        Command::Mc(a) => (Some(a.seed), Some(RNG_ALGORITHM.to_string())),
        Command::Verify { .. } => (Some(ecf_core::acceptance::SEED), Some(RNG_ALGORITHM.to_string())),
        _ => (None, None),
    }
}

pub fn run(cmd: &Command, prec: u32) -> Result<Outcome, Failure> {
    Ok(match cmd {
        Command::Expand { x, max_digits } => {
            let e = expand_rational(x, *max_digits)?;
            Report::new(json!({ "x": rat(x), "digits": ints(e.digits.digits()), "truncated": e.truncated })).into()
        }
        Command::Reconstruct { digits } => {
            Report::new(json!({ "digits": ints(digits.digits()), "value": rat(&reconstruct(digits)?) })).into()
        }
        Command::Cylinder { digits } => {
            let (a, b) = cylinder_endpoints(digits);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            Report::new(json!({
                "digits": ints(digits.digits()),
                "left": rat(&lo),
                "right": rat(&hi),
                "measure": rat(&cylinder_measure(digits)?),
            }))
            .into()
        }
        Command::Count(f) => {
            let family = family(f)?;
            Report::new(json!({ "n": f.n, "m": f.m, "mode": f.mode.to_string(), "count": int(&count_words(&family)) }))
                .into()
        }
        Command::Enumerate { family: f, limit } => {
            let words: Vec<DigitWord> = enumerate_words(&family(f)?, *limit)?.collect();
            let rows = words.iter().enumerate().map(|(i, w)| json!({ "index": i, "word": ints(w.digits()) })).collect();
            let list: Vec<Value> = words.iter().map(|w| ints(w.digits())).collect();
            Report::with_rows(
                json!({ "n": f.n, "m": f.m, "mode": f.mode.to_string(), "count": words.len(), "words": list }),
                rows,
            )
            .into()
        }
        Command::Marginal { n, cap, exact, budget, .. } => {
            let table = if *exact { marginal_exact(*n, *cap, *budget)? } else { marginal_interval_dp(*n, *cap)? };
            marginal_report(&table, *exact).into()
        }
        Command::Conditional { prefix, given_last, n, next, budget } => {
            conditional(prefix.as_ref(), *given_last, *n, *next, *budget)?.into()
        }
        Command::Moment { n, theta, cap, budget } => {
            let cap = match cap {
                Some(c) => *c,
                None => MomentEngine::tree_cap(*n, 60, *budget)
                    .ok_or_else(|| Failure::Budget(format!("no cap fits a budget of {budget} nodes at depth {n}")))?,
            };
            let m = moment_interval(*n, theta, cap, prec, *budget)?;
            let growth = match m.finite() {
                Some(v) => ExtendedReal::Finite(&v.ln()? / &Interval::from_i64(*n as i64, prec)),
                None => ExtendedReal::PosInfinity,
            };
            Report::new(json!({
                "n": n,
                "theta": rat(theta),
                "cap": cap,
                "moment": extended(&m),
                "growth": extended(&growth),
            }))
            .into()
        }
        Command::Growth { theta, n_list, engine } => {
            let table = moment_growth_rate(theta, n_list, &moment_engine(engine, n_list)?, prec)?;
            let dist = table.distances();
            let rows: Vec<Value> = table
                .rows
                .iter()
                .zip(dist)
                .map(|(r, d)| json!({ "n": r.n, "value": extended(&r.value), "distance": d.map(float) }))
                .collect();
            Report::with_rows(
                json!({ "theta": rat(theta), "engine": engine_name(engine), "limit": extended(&table.limit), "rows": rows.clone() }),
                rows,
            )
            .into()
        }
        Command::Pressure { theta } => {
            let v = pressure(&Interval::from_rational(theta, prec));
            Report::new(json!({ "theta": rat(theta), "value": extended(&v), "decimal": decimal(&v) })).into()
        }
        Command::Rate { which, x, b } => {
            let id = RateFunctionId::parse(which, *b)?;
            let v = rate(id, &Interval::from_rational(x, prec))?;
            let expr = (id == RateFunctionId::I).then(|| rate_expression(x, prec));
            Report::new(json!({
                "which": id.to_string(),
                "x": rat(x),
                "value": extended(&v),
                "decimal": decimal(&v),
                "expression": expr,
            }))
            .into()
        }
        Command::Legendre { x, tol } => {
            let xi = Interval::from_rational(x, prec);
            let t = legendre_numeric(pressure, &xi, LEGENDRE_BRACKET, *tol)?;
            let closed = rate(RateFunctionId::I, &xi)?;
            Report::new(json!({
                "x": rat(x),
                "transform": extended(&t.value),
                "argmax": t.argmax.map(float),
                "rate": extended(&closed),
                "agree": t.value.agrees_with(&closed),
            }))
            .into()
        }
        Command::Mdp { lambda, p, n_list, engine } => {
            let table = mdp_curve(lambda, n_list, &Scaling::power(p.clone())?, &moment_engine(engine, n_list)?, prec)?;
            let dist = table.distances(prec);
            let rows: Vec<Value> = table
                .rows
                .iter()
                .zip(dist)
                .map(|(r, d)| {
                    json!({
                        "n": r.n,
                        "theta_n": interval(&r.theta_n),
                        "value": r.value.as_ref().map(interval),
                        "distance": d.map(float),
                    })
                })
                .collect();
            Report::with_rows(
                json!({
                    "lambda": rat(lambda),
                    "p": rat(p),
                    "engine": engine_name(engine),
                    "target": rat(&table.target),
                    "speed_exponent": table.speed_exponent.as_ref().map(rat),
                    "rows": rows.clone(),
                }),
                rows,
            )
            .into()
        }
        Command::Mc(a) => mc(a)?.into(),
        Command::Verify { suite } => verify(*suite),
        Command::Replay { .. } => unreachable!("replay is resolved before dispatch"),
    })
}

fn family(f: &FamilyArgs) -> Result<WordFamily, Failure> {
    Ok(WordFamily::new(f.n, f.m, f.mode)?)
}

fn marginal_report(t: &MarginalTable, exact: bool) -> Report {
    let mut rows: Vec<Value> = t
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| json!({ "k": (i + 1).to_string(), "lo": rat(&e.lo), "hi": rat(&e.hi) }))
        .collect();
    rows.push(json!({ "k": format!(">{}", t.cap), "lo": rat(&t.tail.lo), "hi": rat(&t.tail.hi) }));
    Report::with_rows(
        json!({
            "n": t.n,
            "cap": t.cap,
            "method": if exact { "exact" } else { "interval" },
            "cylinders_visited": t.cylinders_visited.as_ref().map(int),
            "rows": rows.clone(),
        }),
        rows,
    )
}

fn conditional(
    prefix: Option<&DigitWord>,
    given_last: Option<u32>,
    n: Option<u32>,
    next: u32,
    budget: u64,
) -> Result<Report, Failure> {
    let k = Integer::from(next);
    match (prefix, given_last, n) {
        (Some(w), _, _) => {
            let p = conditional_probability(w, &k)?;
            let last = w.last().ok_or(ecf_core::Error::EmptyWord)?;
            let bounds = transition_bounds(last, &k)?;
            Ok(Report::new(json!({
                "prefix": ints(w.digits()),
                "next": next,
                "probability": rat(&p),
                "bounds": { "lo": rat(&bounds.lo), "hi": rat(&bounds.hi) },
                "within_bounds": bounds.contains(&p),
            })))
        }
        (None, Some(j), Some(n)) => {
            let p = conditional_given_last(n, j, next, budget)?;
            Ok(Report::new(json!({ "n": n, "given_last": j, "next": next, "probability": rat(&p) })))
        }
        _ => Err(Failure::Usage("conditional needs --prefix, or --given-last with --n".into())),
    }
}

fn moment_engine(e: &EngineArgs, n_list: &[u32]) -> Result<MomentEngine, Failure> {
    Ok(match e.engine {
        EngineKind::Lift => {
            let depth = n_list.iter().copied().max().unwrap_or(1).max(1);
            MomentEngine::lift(&LiftGrid::default(), depth)?
        }
        EngineKind::Tree => MomentEngine::Tree { max_cap: e.max_cap, budget: e.budget },
    })
}

fn engine_name(e: &EngineArgs) -> String {
    match e.engine {
        EngineKind::Lift => "lift".into(),
        EngineKind::Tree => format!("tree(max_cap={}, budget={})", e.max_cap, e.budget),
    }
}

/// The branch of `I` at a rational `x`, with `x` substituted.
fn rate_expression(x: &Rational, prec: u32) -> String {
    let g = GoldenConstants::new(prec);
    let xi = Interval::from_rational(x, prec);
    let shifted = Rational::from(x + 1u32);
    if xi.gt(&g.branch_point) {
        format!("{x} - log({shifted})")
    } else if shifted.cmp0().is_lt() {
        "+inf".into()
    } else if shifted.cmp0().is_eq() {
        "2*log(phi)".into()
    } else {
        format!("2*log(phi) - ({shifted})*phi")
    }
}

fn sample_config(a: &McArgs, depth: u32) -> SampleConfig {
    SampleConfig {
        bits: a.bits.unwrap_or_else(|| SampleConfig::default_bits(depth)),
        workers: a.workers,
        ..SampleConfig::new(a.seed, a.trials, depth)
    }
}

fn single_depth(a: &McArgs) -> Result<u32, Failure> {
    match a.n.as_slice() {
        [n] => Ok(*n),
        _ => Err(Failure::Usage(format!("task {:?} takes a single --n", a.task).to_lowercase())),
    }
}

fn estimate_json(e: &EventEstimate) -> Value {
    json!({
        "hits": e.hits,
        "trials": e.trials,
        "uncertified": e.uncertified,
        "p_hat": rat(&e.p_hat),
        "ci": { "lo": rat(&e.ci_lo), "hi": rat(&e.ci_hi) },
    })
}

fn mc(a: &McArgs) -> Result<Report, Failure> {
    Ok(match a.task {
        McTask::Lln => {
            let n = single_depth(a)?;
            let config = sample_config(a, n);
            let r = lln_report(&config)?;
            Report::new(json!({
                "task": "lln", "n": n, "bits": config.bits, "certified": r.certified, "uncertified": r.uncertified,
                "mean": float(r.mean), "std_dev": float(r.std_dev),
            }))
        }
        McTask::Clt => {
            let n = single_depth(a)?;
            let config = sample_config(a, n);
            let r = clt_report(&config)?;
            let rows: Vec<Value> = r
                .quantiles
                .iter()
                .map(|&(level, emp, normal)| json!({ "level": float(level), "empirical": float(emp), "normal": float(normal) }))
                .collect();
            Report::with_rows(
                json!({
                    "task": "clt", "n": n, "bits": config.bits, "certified": r.certified, "uncertified": r.uncertified,
                    "ks": float(r.ks), "quantiles": rows.clone(),
                }),
                rows,
            )
        }
        McTask::Ldp => {
            let eps = a.eps.as_ref().ok_or_else(|| Failure::Usage("task ldp needs --eps".into()))?;
            let depth = a.n.iter().copied().max().unwrap_or(1);
            let config = sample_config(a, depth);
            let tail = match a.tail {
                TailArg::Upper => Tail::Upper,
                TailArg::Lower => Tail::Lower,
            };
            let s = ldp_slope(eps, tail, &a.n, &config)?;
            let rows: Vec<Value> = s
                .rows
                .iter()
                .map(|r| {
                    let mut v = estimate_json(&r.estimate);
                    v["n"] = json!(r.n);
                    v["rate_hat"] = r.rate_hat.map(float).unwrap_or(Value::Null);
                    v
                })
                .collect();
            Report::with_rows(
                json!({
                    "task": "ldp", "tail": format!("{:?}", a.tail).to_lowercase(), "eps": rat(eps), "bits": config.bits,
                    "slope": s.slope.map(float), "target": interval(&s.target), "rows": rows.clone(),
                }),
                rows,
            )
        }
        McTask::Event => {
            let n = single_depth(a)?;
            let ev = a.event.as_ref().ok_or_else(|| Failure::Usage("task event needs --event, e.g. b>=2".into()))?;
            let config = sample_config(a, n);
            let e = estimate_event(&config, |d| d.get(n as usize - 1).map(|b| ev.holds(b)))?;
            let mut v = estimate_json(&e);
            v["task"] = json!("event");
            v["n"] = json!(n);
            v["bits"] = json!(config.bits);
            Report::new(v)
        }
    })
}

fn verify(suite: SuiteArg) -> Outcome {
    let suite = match suite {
        SuiteArg::Quick => Suite::Quick,
        SuiteArg::Full => Suite::Full,
    };
    let reports = Runner::new().run_suite(suite, |r| {
        let _ = writeln!(std::io::stderr(), "{r}");
    });
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "id": r.id, "title": r.title, "passed": r.passed, "detail": r.detail }))
        .collect();
    let failure = reports
        .iter()
        .find(|r| !r.passed)
        .map(|r| Failure::Verification(format!("criterion {} ({}) failed: {}", r.id, r.title, r.detail)));
    let passed = reports.iter().all(|r| r.passed);
    let report = Report::with_rows(
        json!({ "suite": format!("{suite:?}").to_lowercase(), "passed": passed, "criteria": rows.clone() }),
        rows,
    );
    Outcome { report, failure }
}
