use std::cmp::Ordering;
use std::fmt;

/// Tropical semiring weight: `plus` is `min`, `times` is `+`.
///
/// Values are costs on the negative-log scale, so lower is better.
/// `Weight::ZERO` (+inf) marks an unreachable path or a non-final state.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Weight(pub f64);

impl Weight {
    pub const ZERO: Weight = Weight(f64::INFINITY);
    pub const ONE: Weight = Weight(0.0);

    #[inline]
    pub const fn new(value: f64) -> Self {
        Weight(value)
    }

    #[inline]
    pub const fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn plus(self, other: Weight) -> Weight {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    #[inline]
    pub fn times(self, other: Weight) -> Weight {
        Weight(self.0 + other.0)
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Total order used for sorting; NaN-safe.
    #[inline]
    pub fn total_cmp(&self, other: &Weight) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl From<f64> for Weight {
    fn from(value: f64) -> Self {
        Weight(value)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Shortest representation that parses back to the same f64.
        write!(f, "{}", self.0)
    }
}
