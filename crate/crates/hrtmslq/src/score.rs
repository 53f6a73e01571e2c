//! Exact rational scores.
//!
//! Satisfaction ratios have hospital lower quotas as denominators, and the
//! optimality and bound checks in this crate compare sums of such ratios for
//! exact equality. Floating point cannot do that, so scores are arbitrary
//! precision rationals kept in canonical reduced form.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact nonnegative rational score in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(BigRational);

impl Score {
    pub fn zero() -> Self {
        Score(BigRational::zero())
    }

    pub fn one() -> Self {
        Score(BigRational::one())
    }

    pub fn from_integer(value: u64) -> Self {
        Score(BigRational::from_integer(BigInt::from(value)))
    }

    /// Builds `num/den`. Panics if `den` is zero.
    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den != 0, "score denominator must be positive");
        Score(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn to_f64(&self) -> f64 {
        let num: f64 = self.0.numer().to_string().parse().unwrap_or(f64::NAN);
        let den: f64 = self.0.denom().to_string().parse().unwrap_or(f64::NAN);
        num / den
    }
}

impl fmt::Display for Score {
    /// Always renders as `num/den`, even for integers (`3` prints as `3/1`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Add for Score {
    type Output = Score;
    fn add(self, rhs: Score) -> Score {
        Score(self.0 + rhs.0)
    }
}

impl AddAssign for Score {
    fn add_assign(&mut self, rhs: Score) {
        self.0 += rhs.0;
    }
}

impl Sub for Score {
    type Output = Score;
    fn sub(self, rhs: Score) -> Score {
        let diff = self.0 - rhs.0;
        assert!(!diff.is_negative(), "score subtraction went negative");
        Score(diff)
    }
}

impl Mul for Score {
    type Output = Score;
    fn mul(self, rhs: Score) -> Score {
        Score(self.0 * rhs.0)
    }
}

impl Div for Score {
    type Output = Score;
    fn div(self, rhs: Score) -> Score {
        assert!(!rhs.0.is_zero(), "division of scores by zero");
        Score(self.0 / rhs.0)
    }
}

impl Sum for Score {
    fn sum<I: Iterator<Item = Score>>(iter: I) -> Score {
        iter.fold(Score::zero(), |acc, s| acc + s)
    }
}
