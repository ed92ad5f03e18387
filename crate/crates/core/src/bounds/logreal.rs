//! Nonnegative reals stored by their natural logarithm.
//!
//! The constant-selection chain produces values such as `exp(-2.7e6)`, far
//! below the smallest positive `f64`. Every quantity in that chain is a
//! product, quotient, power or short sum of nonnegative terms, so the log
//! representation loses nothing that matters for strict comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul};

use serde::{Serialize, Serializer};

#[derive(Clone, Copy, PartialEq)]
pub struct LogReal {
    ln: f64,
}

impl LogReal {
    pub const ZERO: Self = Self { ln: f64::NEG_INFINITY };
    pub const ONE: Self = Self { ln: 0.0 };

    /// Panics on negative or NaN input.
    pub fn new(x: f64) -> Self {
        assert!(x >= 0.0, "LogReal needs a nonnegative value, got {x}");
        Self { ln: x.ln() }
    }

    pub fn from_ln(ln: f64) -> Self {
        assert!(!ln.is_nan(), "LogReal from NaN logarithm");
        Self { ln }
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    /// The value as an `f64`; underflows to 0 and overflows to infinity.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    pub fn powf(self, e: f64) -> Self {
        if self.is_zero() {
            return if e > 0.0 { Self::ZERO } else { Self::ONE };
        }
        Self { ln: self.ln * e }
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn scale(self, k: f64) -> Self {
        self * Self::new(k)
    }

    /// `self − other` when the difference is positive.
    pub fn checked_sub(self, other: Self) -> Option<Self> {
        if other.is_zero() {
            return Some(self);
        }
        if !(self.ln > other.ln) {
            return None;
        }
        if self.ln == f64::INFINITY {
            return (other.ln < f64::INFINITY).then_some(self);
        }
        // ln(e^a − e^b) = a + ln(1 − e^(b − a)).
        Some(Self {
            ln: self.ln + (-(other.ln - self.ln).exp_m1()).ln(),
        })
    }

    /// `−ln(1 − x)` for `x < 1`; infinity at or above 1.
    pub fn neg_log1p(x: Self) -> Self {
        if x.is_zero() {
            return Self::ZERO;
        }
        if x.ln >= 0.0 {
            return Self { ln: f64::INFINITY };
        }
        if x.ln < -20.0 {
            // x + x²/2 + x³/3 + … = x·(1 + x/2 + x²/3 + …); the tail is below 1e-8.
            let v = x.value();
            return Self {
                ln: x.ln + (v / 2.0 + v * v / 3.0).ln_1p(),
            };
        }
        Self::new(-(-x.value()).ln_1p())
    }

    pub fn max(self, other: Self) -> Self {
        if self.ln >= other.ln {
            self
        } else {
            other
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for LogReal {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self { ln: self.ln + rhs.ln }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for LogReal {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self { ln: self.ln - rhs.ln }
    }
}

impl Add for LogReal {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let (hi, lo) = if self.ln >= rhs.ln { (self, rhs) } else { (rhs, self) };
        if lo.is_zero() {
            return hi;
        }
        if hi.ln == f64::INFINITY {
            return hi;
        }
        Self {
            ln: hi.ln + (lo.ln - hi.ln).exp().ln_1p(),
        }
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln.partial_cmp(&other.ln)
    }
}

impl From<f64> for LogReal {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}

impl fmt::Debug for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.ln)
    }
}

impl fmt::Display for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value();
        if v > 0.0 && v.is_finite() {
            write!(f, "{v:e}")
        } else {
            write!(f, "exp({})", self.ln)
        }
    }
}

impl Serialize for LogReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LogReal", 2)?;
        st.serialize_field("ln", &self.ln)?;
        st.serialize_field("value", &self.value())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn arithmetic_matches_f64() {
        let a = LogReal::new(3.0);
        let b = LogReal::new(0.25);
        assert_relative_eq!((a * b).value(), 0.75, max_relative = 1e-14);
        assert_relative_eq!((a / b).value(), 12.0, max_relative = 1e-14);
        assert_relative_eq!((a + b).value(), 3.25, max_relative = 1e-14);
        assert_relative_eq!(a.checked_sub(b).unwrap().value(), 2.75, max_relative = 1e-14);
        assert!(b.checked_sub(a).is_none());
        assert!(a.checked_sub(a).is_none());
        assert_relative_eq!(a.sqrt().value(), 3f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn zero_behaves() {
        let z = LogReal::ZERO;
        assert_eq!((z * LogReal::new(5.0)).value(), 0.0);
        assert_relative_eq!((z + LogReal::new(5.0)).value(), 5.0, max_relative = 1e-15);
        assert_relative_eq!(LogReal::new(5.0).checked_sub(z).unwrap().value(), 5.0, max_relative = 1e-15);
        assert_eq!(LogReal::neg_log1p(z).value(), 0.0);
    }

    #[test]
    fn tiny_values_survive() {
        let x = LogReal::from_ln(-1e6);
        let y = x.scale(0.4);
        let d = LogReal::neg_log1p(y).checked_sub(LogReal::neg_log1p(x.scale(0.3))).unwrap();
        assert_relative_eq!(d.ln(), -1e6 + 0.1f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn neg_log1p_matches_ln_1p() {
        for x in [1e-12, 1e-9, 1e-6, 0.01, 0.3, 0.9] {
            let v = LogReal::neg_log1p(LogReal::new(x)).value();
            assert_relative_eq!(v, -(-x).ln_1p(), max_relative = 1e-12);
        }
        assert_eq!(LogReal::neg_log1p(LogReal::ONE).value(), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn add_then_sub_round_trips(a in -700.0f64..700.0, gap in 1e-3f64..50.0) {
            let x = LogReal::from_ln(a);
            let y = LogReal::from_ln(a - gap);
            let back = (x + y).checked_sub(y).unwrap();
            prop_assert!((back.ln() - x.ln()).abs() < 1e-10);
        }
    }
}
