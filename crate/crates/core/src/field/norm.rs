use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A valuation in `(1/k) Z`, or `+inf` for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Rational64),
    Infinite,
}

impl Valuation {
    pub fn finite(num: i64, den: i64) -> Self {
        Valuation::Finite(Rational64::new(num, den))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    pub fn as_rational(&self) -> Option<Rational64> {
        match self {
            Valuation::Finite(v) => Some(*v),
            Valuation::Infinite => None,
        }
    }

    pub fn add(&self, other: &Valuation) -> Valuation {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Infinite => write!(f, "inf"),
            Valuation::Finite(v) if *v.denom() == 1 => write!(f, "{}", v.numer()),
            Valuation::Finite(v) => write!(f, "{}/{}", v.numer(), v.denom()),
        }
    }
}

impl std::str::FromStr for Valuation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "inf" || s == "+inf" {
            return Ok(Valuation::Infinite);
        }
        let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("bad valuation {s:?}: {e}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse(d)?;
                if d == 0 {
                    return Err(format!("bad valuation {s:?}: zero denominator"));
                }
                Ok(Valuation::finite(parse(n)?, d))
            }
            None => Ok(Valuation::finite(parse(s)?, 1)),
        }
    }
}

/// The norm of a field element.
///
/// Nonarchimedean norms are kept as exact valuations `|x| = base^{-v}` so they
/// never underflow; exact rationals under the absolute value keep an exact
/// rational norm.
#[derive(Clone, Debug, PartialEq)]
pub enum NormValue {
    Float(f64),
    Exact(BigRational),
    Valuation { base: u64, v: Valuation },
}

impl NormValue {
    pub fn is_zero(&self) -> bool {
        match self {
            NormValue::Float(x) => *x == 0.0,
            NormValue::Exact(q) => q.is_zero(),
            NormValue::Valuation { v, .. } => v.is_infinite(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            NormValue::Float(x) => *x,
            NormValue::Exact(q) => rational_to_f64(q),
            NormValue::Valuation { base, v } => match v {
                Valuation::Infinite => 0.0,
                Valuation::Finite(r) => {
                    (*base as f64).powf(-(*r.numer() as f64) / (*r.denom() as f64))
                }
            },
        }
    }

    /// Natural logarithm, `-inf` for zero. Exact inputs never overflow.
    pub fn ln(&self) -> f64 {
        match self {
            NormValue::Float(x) => x.ln(),
            NormValue::Exact(q) => rational_ln(q),
            NormValue::Valuation { base, v } => match v {
                Valuation::Infinite => f64::NEG_INFINITY,
                Valuation::Finite(r) => {
                    -(*r.numer() as f64) / (*r.denom() as f64) * (*base as f64).ln()
                }
            },
        }
    }

    /// The norm as an exact rational, when it is one.
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            NormValue::Float(_) => None,
            NormValue::Exact(q) => Some(q.clone()),
            NormValue::Valuation { base, v } => match v {
                Valuation::Infinite => Some(BigRational::zero()),
                Valuation::Finite(r) if *r.denom() == 1 => Some(pow_rational(*base, -*r.numer())),
                Valuation::Finite(_) => None,
            },
        }
    }

    /// Product of two norms of the same family.
    pub fn mul(&self, other: &NormValue) -> NormValue {
        match (self, other) {
            (NormValue::Valuation { base, v: a }, NormValue::Valuation { v: b, .. }) => {
                NormValue::Valuation {
                    base: *base,
                    v: a.add(b),
                }
            }
            (NormValue::Exact(a), NormValue::Exact(b)) => NormValue::Exact(a * b),
            (a, b) => NormValue::Float(a.to_f64() * b.to_f64()),
        }
    }

    /// Ordering by magnitude; valuations compare reversed.
    pub fn cmp_magnitude(&self, other: &NormValue) -> Ordering {
        match (self, other) {
            (NormValue::Valuation { v: a, .. }, NormValue::Valuation { v: b, .. }) => b.cmp(a),
            (NormValue::Exact(a), NormValue::Exact(b)) => a.cmp(b),
            (a, b) => a.to_f64().partial_cmp(&b.to_f64()).unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Float(x) => write!(f, "{x}"),
            NormValue::Exact(q) => write!(f, "{q}"),
            NormValue::Valuation { base, v } => write!(f, "{base}^-({v})"),
        }
    }
}

/// `base^e` as an exact rational.
pub fn pow_rational(base: u64, e: i64) -> BigRational {
    let b = BigInt::from(base).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(b)
    } else {
        BigRational::new(BigInt::one(), b)
    }
}

fn biguint_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(0.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln |q|` without intermediate overflow.
pub fn rational_ln(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    let n = q.numer().abs().to_biguint().unwrap_or_default();
    let d = q.denom().abs().to_biguint().unwrap_or_default();
    biguint_ln(&n) - biguint_ln(&d)
}

/// Nearest-ish `f64` of a rational, robust to huge numerators and denominators.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    sign * rational_ln(q).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuation_order_puts_infinity_last() {
        assert!(Valuation::Infinite > Valuation::finite(1000, 1));
        assert!(Valuation::finite(1, 2) < Valuation::finite(1, 1));
    }

    #[test]
    fn valuation_parses() {
        assert_eq!("3/2".parse::<Valuation>().unwrap(), Valuation::finite(3, 2));
        assert_eq!("inf".parse::<Valuation>().unwrap(), Valuation::Infinite);
        assert_eq!("-4".parse::<Valuation>().unwrap(), Valuation::finite(-4, 1));
    }

    #[test]
    fn exact_norm_conversion() {
        let n = NormValue::Valuation {
            base: 2,
            v: Valuation::finite(2, 1),
        };
        assert_eq!(n.to_rational().unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(n.to_f64(), 0.25);
    }

    #[test]
    fn ln_of_huge_rational() {
        let q = pow_rational(3, 2000);
        let expected = 2000.0 * 3f64.ln();
        assert!((rational_ln(&q) - expected).abs() < 1e-9 * expected);
    }
}
