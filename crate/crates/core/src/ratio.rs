//! Exact non-negative rationals for moment bookkeeping.
//!
//! Enumerated weight statistics must match their closed forms exactly,
//! not to float precision, so means and variances are carried as
//! reduced `u128` fractions until the moment they are displayed.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A reduced non-negative fraction. Serializes as `"num/den"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den);
        Ratio {
            num: num / g.max(1),
            den: den / g.max(1),
        }
    }

    pub fn zero() -> Self {
        Ratio { num: 0, den: 1 }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn den(&self) -> u128 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::ops::Sub for Ratio {
    type Output = Ratio;

    /// Panics if the result would be negative.
    fn sub(self, other: Ratio) -> Ratio {
        let g = gcd(self.den, other.den);
        let den = self.den / g * other.den;
        let a = self.num * (den / self.den);
        let b = other.num * (den / other.den);
        assert!(a >= b, "negative ratio");
        Ratio::new(a - b, den)
    }
}

impl std::ops::Mul for Ratio {
    type Output = Ratio;

    fn mul(self, other: Ratio) -> Ratio {
        // Cross-reduce first to keep intermediates small.
        let g1 = gcd(self.num, other.den).max(1);
        let g2 = gcd(other.num, self.den).max(1);
        Ratio::new(
            (self.num / g1) * (other.num / g2),
            (self.den / g2) * (other.den / g1),
        )
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let (n, q) = text
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected \"num/den\""))?;
        let num: u128 = n.parse().map_err(serde::de::Error::custom)?;
        let den: u128 = q.parse().map_err(serde::de::Error::custom)?;
        if den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(num, den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_on_construction() {
        assert_eq!(Ratio::new(5120, 1023), Ratio::new(10240, 2046));
        assert_eq!(Ratio::new(4, 8), Ratio::new(1, 2));
    }

    #[test]
    fn arithmetic() {
        let a = Ratio::new(28160, 1023);
        let b = Ratio::new(5120, 1023) * Ratio::new(5120, 1023);
        let var = a - b;
        assert_eq!(var, Ratio::new(2_593_280, 1_046_529));
        assert!((var.to_f64() - 2.477_981_976_610_299_5).abs() < 1e-15);
    }

    #[test]
    fn display_and_serde_round_trip() {
        let r = Ratio::new(5120, 1023);
        assert_eq!(r.to_string(), "5120/1023");
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, "\"5120/1023\"");
        let back: Ratio = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
