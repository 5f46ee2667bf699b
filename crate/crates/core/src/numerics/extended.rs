use std::cmp::Ordering;
use std::fmt;

use super::interval::Interval;

/// A real enclosure or `+∞`, the codomain of rate and pressure functions.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(Interval),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedReal::PosInfinity)
    }

    pub fn finite(&self) -> Option<&Interval> {
        match self {
            ExtendedReal::Finite(iv) => Some(iv),
            ExtendedReal::PosInfinity => None,
        }
    }

    pub fn expect_finite(&self, what: &str) -> &Interval {
        self.finite().unwrap_or_else(|| panic!("{what}: expected a finite value, got +inf"))
    }

    /// Overlap test used for comparing irrational values: two finite
    /// enclosures agree when they intersect; `+∞` only agrees with `+∞`.
    pub fn agrees_with(&self, other: &ExtendedReal) -> bool {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.overlaps(b),
            (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => true,
            _ => false,
        }
    }

    /// Ordering when it is decided by the enclosures, `None` when they overlap.
    pub fn certain_cmp(&self, other: &ExtendedReal) -> Option<Ordering> {
        match (self, other) {
            (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => Some(Ordering::Equal),
            (ExtendedReal::PosInfinity, ExtendedReal::Finite(_)) => Some(Ordering::Greater),
            (ExtendedReal::Finite(_), ExtendedReal::PosInfinity) => Some(Ordering::Less),
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => {
                if a.lt(b) {
                    Some(Ordering::Less)
                } else if a.gt(b) {
                    Some(Ordering::Greater)
                } else if a.is_point() && a == b {
                    Some(Ordering::Equal)
                } else {
                    None
                }
            }
        }
    }
}

impl From<Interval> for ExtendedReal {
    fn from(iv: Interval) -> Self {
        ExtendedReal::Finite(iv)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(iv) => write!(f, "{iv}"),
            ExtendedReal::PosInfinity => write!(f, "+inf"),
        }
    }
}
