//! Extended-rational Lebesgue exponents.
//!
//! Index relations (admissibility, Hölder, Kato-Ponce) are checked in exact
//! rational arithmetic, so exponents are stored as rationals with a separate
//! representation for `+inf`.

use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// An exponent in `(0, inf]`, either a positive rational or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub const INF: Exponent = Exponent::Infinite;

    pub fn int(p: i64) -> Self {
        Exponent::Finite(Rational::from_integer(p))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Exponent::Finite(Rational::new(num, den))
    }

    /// Builds the exponent whose reciprocal is `recip`; `recip = 0` gives
    /// infinity.
    pub fn from_reciprocal(recip: Rational) -> Result<Self> {
        if recip < Rational::zero() {
            return Err(Error::InvalidExponent(format!("negative reciprocal {recip}")));
        }
        if recip.is_zero() {
            Ok(Exponent::Infinite)
        } else {
            Ok(Exponent::Finite(recip.recip()))
        }
    }

    /// `1/p`, with `1/inf = 0`.
    pub fn reciprocal(&self) -> Rational {
        match self {
            Exponent::Finite(p) => p.recip(),
            Exponent::Infinite => Rational::zero(),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p.numer() as f64 / *p.denom() as f64,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// `1/p` as a float.
    pub fn recip_f64(&self) -> f64 {
        let r = self.reciprocal();
        *r.numer() as f64 / *r.denom() as f64
    }

    /// Checks `p >= 1`.
    pub fn lebesgue(self) -> Result<Self> {
        match self {
            Exponent::Infinite => Ok(self),
            Exponent::Finite(p) if p >= Rational::one() => Ok(self),
            _ => Err(Error::InvalidExponent(format!("Lebesgue exponent {self} < 1"))),
        }
    }

    /// Compares in the extended order of `(0, inf]`.
    pub fn le(&self, other: &Exponent) -> bool {
        self.reciprocal() >= other.reciprocal()
    }

    /// Parses `inf`, `∞`, integers, `a/b` fractions and terminating
    /// decimals.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if matches!(t, "inf" | "Inf" | "INF" | "infinity" | "∞") {
            return Ok(Exponent::Infinite);
        }
        let value = parse_rational(t)?;
        if value <= Rational::zero() {
            return Err(Error::InvalidExponent(format!("non-positive exponent {t}")));
        }
        Ok(Exponent::Finite(value))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinite => write!(f, "inf"),
            Exponent::Finite(p) if p.is_integer() => write!(f, "{}", p.numer()),
            Exponent::Finite(p) => write!(f, "{}/{}", p.numer(), p.denom()),
        }
    }
}

/// Parses an integer, a fraction `a/b` or a terminating decimal into an exact
/// rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {t:?}"));
    if let Some((a, b)) = t.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(a, b));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_val: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10i64.pow(frac.len() as u32);
        let frac_val: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int_val.abs() * den + frac_val;
        return Ok(Rational::new(if negative { -num } else { num }, den));
    }
    let v: i64 = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(v))
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Conjugate exponent `p'` with `1/p + 1/p' = 1`.
pub fn dual_exponent(p: Exponent) -> Result<Exponent> {
    let recip = p.reciprocal();
    if recip > Rational::one() {
        return Err(Error::InvalidExponent(format!("dual of {p} < 1 is undefined")));
    }
    if let Exponent::Finite(v) = p {
        if v <= Rational::zero() {
            return Err(Error::InvalidExponent(format!("non-positive exponent {p}")));
        }
    }
    Exponent::from_reciprocal(Rational::one() - recip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_examples() {
        assert_eq!(dual_exponent(Exponent::int(2)).unwrap(), Exponent::int(2));
        assert_eq!(dual_exponent(Exponent::int(1)).unwrap(), Exponent::INF);
        assert_eq!(dual_exponent(Exponent::INF).unwrap(), Exponent::int(1));
        assert_eq!(dual_exponent(Exponent::ratio(4, 3)).unwrap(), Exponent::int(4));
        assert!(dual_exponent(Exponent::ratio(1, 2)).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(Exponent::parse("inf").unwrap(), Exponent::INF);
        assert_eq!(Exponent::parse("∞").unwrap(), Exponent::INF);
        assert_eq!(Exponent::parse("6/5").unwrap(), Exponent::ratio(6, 5));
        assert_eq!(Exponent::parse("1.5").unwrap(), Exponent::ratio(3, 2));
        assert_eq!(Exponent::parse("4").unwrap(), Exponent::int(4));
        assert!(Exponent::parse("0").is_err());
        assert!(Exponent::parse("x").is_err());
        assert_eq!(parse_rational("-0.25").unwrap(), Rational::new(-1, 4));
    }

    #[test]
    fn lebesgue_check() {
        assert!(Exponent::int(1).lebesgue().is_ok());
        assert!(Exponent::INF.lebesgue().is_ok());
        assert!(Exponent::ratio(1, 2).lebesgue().is_err());
    }

    #[test]
    fn ordering_and_display() {
        assert!(Exponent::int(2).le(&Exponent::int(3)));
        assert!(Exponent::int(3).le(&Exponent::INF));
        assert!(!Exponent::INF.le(&Exponent::int(3)));
        assert_eq!(Exponent::ratio(6, 5).to_string(), "6/5");
        assert_eq!(Exponent::INF.to_string(), "inf");
    }
}
