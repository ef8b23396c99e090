//! Exact rationals for threshold comparisons.
//!
//! Cohesiveness levels and equilibrium thresholds are compared with strict
//! inequalities, so they are kept as reduced `i128` fractions instead of
//! floats. Every operation is checked; `None` signals overflow.

use core::cmp::Ordering;
use core::fmt;

/// A reduced fraction with a positive denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    /// Returns `None` when `den == 0`.
    pub fn new(num: i128, den: i128) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Some(Ratio {
            num: sign * num / g,
            den: sign * den / g,
        })
    }

    pub const fn from_integer(v: i128) -> Self {
        Ratio { num: v, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Recovers a decimal with at most six fractional digits, e.g. `-2.5`
    /// becomes `-5/2`. Values that are not such decimals yield `None`.
    pub fn from_decimal(v: f64) -> Option<Self> {
        if !v.is_finite() || v.abs() > 1e12 {
            return None;
        }
        let mut scale: i128 = 1;
        for _ in 0..=6 {
            let scaled = v * scale as f64;
            let rounded = libm::round(scaled);
            if (scaled - rounded).abs() <= 1e-9 * rounded.abs().max(1.0) {
                return Ratio::new(rounded as i128, scale);
            }
            scale *= 10;
        }
        None
    }

    pub fn checked_add(self, rhs: Ratio) -> Option<Ratio> {
        let num = self
            .num
            .checked_mul(rhs.den)?
            .checked_add(rhs.num.checked_mul(self.den)?)?;
        Ratio::new(num, self.den.checked_mul(rhs.den)?)
    }

    pub fn checked_sub(self, rhs: Ratio) -> Option<Ratio> {
        self.checked_add(Ratio {
            num: rhs.num.checked_neg()?,
            den: rhs.den,
        })
    }

    pub fn checked_mul(self, rhs: Ratio) -> Option<Ratio> {
        Ratio::new(self.num.checked_mul(rhs.num)?, self.den.checked_mul(rhs.den)?)
    }

    pub fn checked_div(self, rhs: Ratio) -> Option<Ratio> {
        if rhs.num == 0 {
            return None;
        }
        Ratio::new(self.num.checked_mul(rhs.den)?, self.den.checked_mul(rhs.num)?)
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        match (
            self.num.checked_mul(other.den),
            other.num.checked_mul(self.den),
        ) {
            (Some(a), Some(b)) => a.cmp(&b),
            // Only reachable for astronomically large operands.
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_normalises_sign() {
        let r = Ratio::new(6, -8).unwrap();
        assert_eq!((r.numer(), r.denom()), (-3, 4));
        assert!(Ratio::new(1, 0).is_none());
    }

    #[test]
    fn decimal_recovery() {
        assert_eq!(Ratio::from_decimal(-2.5), Ratio::new(-5, 2));
        assert_eq!(Ratio::from_decimal(0.1), Ratio::new(1, 10));
        assert_eq!(Ratio::from_decimal(3.0), Some(Ratio::from_integer(3)));
        assert_eq!(Ratio::from_decimal(core::f64::consts::PI), None);
    }

    #[test]
    fn ordering_is_exact() {
        let a = Ratio::new(1, 3).unwrap();
        let b = Ratio::new(333_333, 1_000_000).unwrap();
        assert!(a > b);
        assert_eq!(a.checked_sub(b).unwrap(), Ratio::new(1, 3_000_000).unwrap());
    }
}
