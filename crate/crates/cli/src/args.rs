use clap::{Args, Parser, Subcommand, ValueEnum};
use ecf_core::combinatorics::LastDigit;
use ecf_core::expansion::DigitWord;
use ecf_core::numerics::{parse_rational, Integer, Rational};

#[derive(Parser, Debug)]
#[command(name = "ecf", version, about = "Engel continued fractions: digits, cylinders, measures, deviations")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<std::path::PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Digits of a rational in (0, 1].
    Expand {
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        x: Rational,
        #[arg(long, default_value_t = 64)]
        max_digits: usize,
    },
    /// The rational with a finite digit word.
    Reconstruct {
        #[arg(long, value_parser = word)]
        digits: DigitWord,
    },
    /// Endpoints and measure of a cylinder.
    Cylinder {
        #[arg(long, value_parser = word)]
        digits: DigitWord,
    },
    /// Number of non-decreasing words of length n with last digit m (or at most m).
    Count(FamilyArgs),
    /// Lists the words counted by `count`.
    Enumerate {
        #[command(flatten)]
        family: FamilyArgs,
        /// Refuse families larger than this.
        #[arg(long, default_value_t = ecf_core::combinatorics::DEFAULT_BUDGET)]
        limit: u64,
    },
    /// Law of the n-th digit on 1..=cap plus the tail above cap.
    Marginal {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        cap: u32,
        /// Sum the cylinders exactly.
        #[arg(long, conflicts_with = "interval")]
        exact: bool,
        /// Rational interval recursion (default).
        #[arg(long)]
        interval: bool,
        #[arg(long, default_value_t = ecf_core::combinatorics::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Probability of the next digit given a prefix, or given only the last digit.
    Conditional {
        #[arg(long, value_parser = word, required_unless_present = "given_last", conflicts_with = "given_last")]
        prefix: Option<DigitWord>,
        /// Condition on `b_{n−1}` only.
        #[arg(long, value_name = "J", requires = "n")]
        given_last: Option<u32>,
        /// Depth of the predicted digit (with --given-last).
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        next: u32,
        #[arg(long, default_value_t = ecf_core::combinatorics::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Enclosure of E(b_n^θ) from the capped digit tree.
    Moment {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        theta: Rational,
        /// Largest digit followed exactly; defaults to the largest cap fitting the budget (at most 60).
        #[arg(long)]
        cap: Option<u32>,
        #[arg(long, default_value_t = 200_000)]
        budget: u64,
    },
    /// Rows of (1/n) log E(b_n^θ) against their limit.
    Growth {
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        theta: Rational,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u32>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// The pressure function Λ(θ).
    Pressure {
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        theta: Rational,
    },
    /// A rate function at x.
    Rate {
        /// I, Ib, Iinf, J, pressure, engel or modified.
        #[arg(long, default_value = "I")]
        which: String,
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        x: Rational,
        #[arg(long)]
        b: Option<u64>,
    },
    /// Numerical Legendre transform of Λ at x, next to the closed-form rate.
    Legendre {
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        x: Rational,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Moderate deviation rows for a_n = n^p.
    Mdp {
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        lambda: Rational,
        #[arg(long, value_parser = rational)]
        p: Rational,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u32>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Monte Carlo estimates over certified dyadic samples.
    Mc(McArgs),
    /// Runs the acceptance checks.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::Quick)]
        suite: SuiteArg,
    },
    /// Re-runs the command recorded in an output file's manifest.
    Replay {
        /// A JSON or CSV file written by ecf.
        manifest: std::path::PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: u32,
    /// exact or at-most.
    #[arg(long, default_value = "exact", value_parser = mode)]
    pub mode: LastDigit,
}

#[derive(Args, Debug)]
pub struct EngineArgs {
    #[arg(long, value_enum, default_value_t = EngineKind::Lift)]
    pub engine: EngineKind,
    /// Tree engine: largest cap.
    #[arg(long, default_value_t = 60)]
    pub max_cap: u32,
    /// Tree engine: node budget per depth.
    #[arg(long, default_value_t = 200_000)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    Lift,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum McTask {
    Lln,
    Clt,
    Ldp,
    Event,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    Upper,
    Lower,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, value_enum)]
    pub task: McTask,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Dyadic precision; defaults to max(⌈2.2 n²⌉, 64) for the largest n.
    #[arg(long)]
    pub bits: Option<u32>,
    /// Depth, or a comma-separated list of depths for ldp.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    #[arg(long, value_parser = rational)]
    pub eps: Option<Rational>,
    #[arg(long, value_enum, default_value_t = TailArg::Lower)]
    pub tail: TailArg,
    /// Event on the n-th digit for task event, e.g. `b>=2`.
    #[arg(long, value_parser = event)]
    pub event: Option<DigitEvent>,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// `b <op> k` on the n-th digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitEvent {
    pub op: CmpOp,
    pub k: Integer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl DigitEvent {
    pub fn holds(&self, b: &Integer) -> bool {
        match self.op {
            CmpOp::Ge => *b >= self.k,
            CmpOp::Gt => *b > self.k,
            CmpOp::Le => *b <= self.k,
            CmpOp::Lt => *b < self.k,
            CmpOp::Eq => *b == self.k,
        }
    }
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn word(s: &str) -> Result<DigitWord, String> {
    let digits = s
        .split(',')
        .map(|d| d.trim().parse::<Integer>().map_err(|_| format!("{d:?} is not an integer digit")))
        .collect::<Result<Vec<_>, _>>()?;
    DigitWord::new(digits).map_err(|e| e.to_string())
}

fn mode(s: &str) -> Result<LastDigit, String> {
    s.parse().map_err(|e: ecf_core::Error| e.to_string())
}

fn event(s: &str) -> Result<DigitEvent, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let rest = t.strip_prefix("b_n").or_else(|| t.strip_prefix('b')).ok_or("events look like b>=2")?;
    let (op, k) =
        [(">=", CmpOp::Ge), ("<=", CmpOp::Le), ("==", CmpOp::Eq), (">", CmpOp::Gt), ("<", CmpOp::Lt), ("=", CmpOp::Eq)]
            .iter()
            .find_map(|(sym, op)| rest.strip_prefix(sym).map(|k| (*op, k)))
            .ok_or("expected one of >=, >, <=, <, = after b")?;
    let k = k.parse::<Integer>().map_err(|_| format!("{k:?} is not an integer"))?;
    Ok(DigitEvent { op, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_events() {
        let e = event("b >= 2").unwrap();
        assert_eq!(e.op, CmpOp::Ge);
        assert!(e.holds(&Integer::from(2)) && !e.holds(&Integer::from(1)));
        assert_eq!(event("b_n=3").unwrap().op, CmpOp::Eq);
        assert!(event("c>1").is_err());
        assert!(event("b>x").is_err());
    }

    #[test]
    fn parses_words() {
        assert_eq!(word("1,2,6").unwrap().to_u64s(), Some(vec![1, 2, 6]));
        assert!(word("2,1").is_err());
        assert!(word("1,a").is_err());
    }
}
