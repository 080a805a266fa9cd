//! Complete normed fields: `R`, `C`, `Q_p`, the totally ramified extension
//! `Q_p(p^{1/k})`, and exact rationals carrying a chosen norm.
//!
//! P-adic elements use fixed relative precision: an exact valuation plus
//! `precision` digits in the uniformizer `pi = p^{1/k}`. Valuations, and hence
//! norms, stay exact no matter how digits are truncated. Cancellation that
//! consumes every retained digit is reported as
//! [`FieldError::PrecisionExhausted`] by the plain operations; kernels that
//! track absolute precision themselves use the `*_flush` variants.

mod json;
mod norm;
mod padic;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

pub use norm::{pow_rational, rational_ln, rational_to_f64, NormValue, Valuation};
use padic::{PiAdicInt, Shape};

/// Default number of retained uniformizer digits.
pub const DEFAULT_PRECISION: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("descriptor mismatch: {0} vs {1}")]
    DescriptorMismatch(FieldDescriptor, FieldDescriptor),
    #[error("division by zero")]
    DivisionByZero,
    #[error("p-adic cancellation consumed all retained digits")]
    PrecisionExhausted,
    #[error("operation not supported for {0}")]
    UnsupportedField(FieldDescriptor),
    #[error("invalid field parameters: {0}")]
    InvalidParameters(String),
    #[error("malformed field element: {0}")]
    Malformed(String),
}

pub type Result<T, E = FieldError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Real,
    Complex,
    Padic,
    RamifiedPadic,
    ExactRational,
}

/// The norm carried by an exact-rational field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RationalNorm {
    Absolute,
    PAdic(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldDescriptor {
    Real,
    Complex,
    Padic { p: u64, precision: usize },
    RamifiedPadic { p: u64, k: u32, precision: usize },
    ExactRational { norm: RationalNorm },
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn check_prime(p: u64) -> Result<()> {
    if p > u32::MAX as u64 || !is_prime(p) {
        return Err(FieldError::InvalidParameters(format!("{p} is not a supported prime")));
    }
    Ok(())
}

impl FieldDescriptor {
    pub fn padic(p: u64, precision: usize) -> Result<Self> {
        check_prime(p)?;
        if precision == 0 {
            return Err(FieldError::InvalidParameters("precision must be >= 1".into()));
        }
        Ok(FieldDescriptor::Padic { p, precision })
    }

    pub fn ramified(p: u64, k: u32, precision: usize) -> Result<Self> {
        check_prime(p)?;
        if k == 0 || precision == 0 {
            return Err(FieldError::InvalidParameters("need k >= 1 and precision >= 1".into()));
        }
        Ok(FieldDescriptor::RamifiedPadic { p, k, precision })
    }

    pub fn rational() -> Self {
        FieldDescriptor::ExactRational {
            norm: RationalNorm::Absolute,
        }
    }

    pub fn rational_padic(p: u64) -> Result<Self> {
        check_prime(p)?;
        Ok(FieldDescriptor::ExactRational {
            norm: RationalNorm::PAdic(p),
        })
    }

    pub fn kind(&self) -> FieldKind {
        match self {
            FieldDescriptor::Real => FieldKind::Real,
            FieldDescriptor::Complex => FieldKind::Complex,
            FieldDescriptor::Padic { .. } => FieldKind::Padic,
            FieldDescriptor::RamifiedPadic { .. } => FieldKind::RamifiedPadic,
            FieldDescriptor::ExactRational { .. } => FieldKind::ExactRational,
        }
    }

    /// The prime of a nonarchimedean norm.
    pub fn prime(&self) -> Option<u64> {
        match *self {
            FieldDescriptor::Padic { p, .. } | FieldDescriptor::RamifiedPadic { p, .. } => Some(p),
            FieldDescriptor::ExactRational {
                norm: RationalNorm::PAdic(p),
            } => Some(p),
            _ => None,
        }
    }

    /// Ramification index; 1 for everything but the ramified extension.
    pub fn ramification(&self) -> u32 {
        match *self {
            FieldDescriptor::RamifiedPadic { k, .. } => k,
            _ => 1,
        }
    }

    pub fn precision(&self) -> Option<usize> {
        match *self {
            FieldDescriptor::Padic { precision, .. }
            | FieldDescriptor::RamifiedPadic { precision, .. } => Some(precision),
            _ => None,
        }
    }

    /// Same field with a different number of retained digits (p-adic only).
    pub fn with_precision(&self, precision: usize) -> Self {
        match *self {
            FieldDescriptor::Padic { p, .. } => FieldDescriptor::Padic { p, precision },
            FieldDescriptor::RamifiedPadic { p, k, .. } => {
                FieldDescriptor::RamifiedPadic { p, k, precision }
            }
            other => other,
        }
    }

    pub fn is_nonarchimedean(&self) -> bool {
        self.prime().is_some()
    }

    /// Arithmetic is exact up to the retained digits (no rounding error).
    pub fn is_exact(&self) -> bool {
        !matches!(self, FieldDescriptor::Real | FieldDescriptor::Complex)
    }

    pub fn is_padic(&self) -> bool {
        self.precision().is_some()
    }

    fn shape(&self) -> Option<Shape> {
        match *self {
            FieldDescriptor::Padic { p, precision } => Some(Shape::new(p, 1, precision)),
            FieldDescriptor::RamifiedPadic { p, k, precision } => {
                Some(Shape::new(p, k as usize, precision))
            }
            _ => None,
        }
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldDescriptor::Real => write!(f, "real"),
            FieldDescriptor::Complex => write!(f, "complex"),
            FieldDescriptor::Padic { p, precision } => write!(f, "padic:p={p},prec={precision}"),
            FieldDescriptor::RamifiedPadic { p, k, precision } => {
                write!(f, "ramified:p={p},k={k},prec={precision}")
            }
            FieldDescriptor::ExactRational {
                norm: RationalNorm::Absolute,
            } => write!(f, "rational"),
            FieldDescriptor::ExactRational {
                norm: RationalNorm::PAdic(p),
            } => write!(f, "rational:p={p}"),
        }
    }
}

impl FromStr for FieldDescriptor {
    type Err = FieldError;

    /// Parses `real`, `complex`, `padic:p=2,prec=64`, `ramified:p=3,k=2,prec=32`,
    /// `rational` and `rational:p=2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut p = None;
        let mut k = None;
        let mut prec = None;
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (key, val) = kv
                .split_once('=')
                .ok_or_else(|| FieldError::InvalidParameters(format!("expected key=value in {kv:?}")))?;
            let val: u64 = val
                .trim()
                .parse()
                .map_err(|_| FieldError::InvalidParameters(format!("bad number in {kv:?}")))?;
            match key.trim() {
                "p" => p = Some(val),
                "k" => k = Some(val as u32),
                "prec" | "precision" => prec = Some(val as usize),
                other => {
                    return Err(FieldError::InvalidParameters(format!("unknown key {other:?}")))
                }
            }
        }
        let need_p = || p.ok_or_else(|| FieldError::InvalidParameters(format!("{s:?} needs p=")));
        match name {
            "real" | "R" => Ok(FieldDescriptor::Real),
            "complex" | "C" => Ok(FieldDescriptor::Complex),
            "padic" => FieldDescriptor::padic(need_p()?, prec.unwrap_or(DEFAULT_PRECISION)),
            "ramified" => FieldDescriptor::ramified(
                need_p()?,
                k.unwrap_or(1),
                prec.unwrap_or(DEFAULT_PRECISION),
            ),
            "rational" | "Q" => match p {
                Some(p) => FieldDescriptor::rational_padic(p),
                None => Ok(FieldDescriptor::rational()),
            },
            other => Err(FieldError::InvalidParameters(format!("unknown field {other:?}"))),
        }
    }
}

/// Valuation (in uniformizer units) and unit part of a nonzero p-adic element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct PadicRepr {
    val: i64,
    unit: PiAdicInt,
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Real(f64),
    Complex(Complex64),
    Padic(Option<PadicRepr>),
    Rational(BigRational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A value in one of the supported fields. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldElement {
    desc: FieldDescriptor,
    payload: Payload,
}

/// Applies one of the four field operations.
pub fn arith(op: ArithOp, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
    match op {
        ArithOp::Add => x.add(y),
        ArithOp::Sub => x.sub(y),
        ArithOp::Mul => x.mul(y),
        ArithOp::Div => x.div(y),
    }
}

/// `pi^n` where `pi = p^{1/k}`; valuation exactly `n/k`.
pub fn uniformizer_power(desc: FieldDescriptor, n: i64) -> Result<FieldElement> {
    let shape = desc.shape().ok_or(FieldError::UnsupportedField(desc))?;
    Ok(FieldElement {
        desc,
        payload: Payload::Padic(Some(PadicRepr {
            val: n,
            unit: PiAdicInt::one(shape),
        })),
    })
}

impl FieldElement {
    pub fn zero(desc: FieldDescriptor) -> Self {
        let payload = match desc {
            FieldDescriptor::Real => Payload::Real(0.0),
            FieldDescriptor::Complex => Payload::Complex(Complex64::new(0.0, 0.0)),
            FieldDescriptor::Padic { .. } | FieldDescriptor::RamifiedPadic { .. } => {
                Payload::Padic(None)
            }
            FieldDescriptor::ExactRational { .. } => Payload::Rational(BigRational::zero()),
        };
        FieldElement { desc, payload }
    }

    pub fn one(desc: FieldDescriptor) -> Self {
        Self::from_i64(desc, 1)
    }

    pub fn real(x: f64) -> Self {
        FieldElement {
            desc: FieldDescriptor::Real,
            payload: Payload::Real(x),
        }
    }

    pub fn complex(re: f64, im: f64) -> Self {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Self {
        FieldElement {
            desc: FieldDescriptor::Complex,
            payload: Payload::Complex(z),
        }
    }

    /// An exact rational under the given rational-field descriptor.
    pub fn rational(desc: FieldDescriptor, q: BigRational) -> Result<Self> {
        match desc {
            FieldDescriptor::ExactRational { .. } => Ok(FieldElement {
                desc,
                payload: Payload::Rational(q),
            }),
            other => Err(FieldError::UnsupportedField(other)),
        }
    }

    pub fn from_i64(desc: FieldDescriptor, n: i64) -> Self {
        Self::from_rational(desc, &BigRational::from_integer(BigInt::from(n)))
    }

    /// Image of a rational number. P-adic images are truncated to the
    /// descriptor's precision; archimedean images are rounded to binary64.
    pub fn from_rational(desc: FieldDescriptor, q: &BigRational) -> Self {
        let payload = match desc {
            FieldDescriptor::Real => Payload::Real(rational_to_f64(q)),
            FieldDescriptor::Complex => Payload::Complex(Complex64::new(rational_to_f64(q), 0.0)),
            FieldDescriptor::ExactRational { .. } => Payload::Rational(q.clone()),
            FieldDescriptor::Padic { .. } | FieldDescriptor::RamifiedPadic { .. } => {
                let shape = desc.shape().expect("p-adic shape");
                Payload::Padic(rational_to_padic(q, shape))
            }
        };
        FieldElement { desc, payload }
    }

    /// Builds a p-adic element from its valuation (in units of `1/k`) and
    /// uniformizer digits `d_0, d_1, ...`. Leading zero digits are absorbed
    /// into the valuation.
    pub fn from_digits(desc: FieldDescriptor, valuation: Valuation, digits: &[u32]) -> Result<Self> {
        let shape = desc.shape().ok_or(FieldError::UnsupportedField(desc))?;
        if let Some(d) = digits.iter().find(|&&d| d as u64 >= shape.p) {
            return Err(FieldError::Malformed(format!("digit {d} out of range for p={}", shape.p)));
        }
        let v = match valuation {
            Valuation::Infinite => return Ok(Self::zero(desc)),
            Valuation::Finite(v) => {
                let scaled = v * num_rational::Rational64::from_integer(shape.k as i64);
                if !scaled.is_integer() {
                    return Err(FieldError::Malformed(format!(
                        "valuation {v} not in (1/{})Z",
                        shape.k
                    )));
                }
                scaled.to_integer()
            }
        };
        let raw = PiAdicInt::from_digits(shape, digits);
        Ok(FieldElement {
            desc,
            payload: Payload::Padic(normalize(v, raw, shape)),
        })
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }

    pub fn is_zero(&self) -> bool {
        match &self.payload {
            Payload::Real(x) => *x == 0.0,
            Payload::Complex(z) => z.re == 0.0 && z.im == 0.0,
            Payload::Padic(r) => r.is_none(),
            Payload::Rational(q) => q.is_zero(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match &self.payload {
            Payload::Real(x) => Some(*x),
            Payload::Rational(q) => Some(rational_to_f64(q)),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match &self.payload {
            Payload::Real(x) => Some(Complex64::new(*x, 0.0)),
            Payload::Complex(z) => Some(*z),
            Payload::Rational(q) => Some(Complex64::new(rational_to_f64(q), 0.0)),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.payload {
            Payload::Rational(q) => Some(q),
            _ => None,
        }
    }

    /// Exact rational value of the stored truncation (rationals, and p-adics
    /// with `k = 1`).
    pub fn to_rational(&self) -> Option<BigRational> {
        match (&self.payload, self.desc) {
            (Payload::Rational(q), _) => Some(q.clone()),
            (Payload::Padic(None), _) => Some(BigRational::zero()),
            (Payload::Padic(Some(r)), FieldDescriptor::Padic { p, .. }) => {
                let unit = BigRational::from_integer(BigInt::from(r.unit.base_component().clone()));
                Some(unit * pow_rational(p, r.val))
            }
            _ => None,
        }
    }

    /// Valuation of a nonarchimedean element (`+inf` for zero).
    pub fn valuation(&self) -> Option<Valuation> {
        match (&self.payload, self.desc) {
            (Payload::Padic(None), _) => Some(Valuation::Infinite),
            (Payload::Padic(Some(r)), d) => Some(Valuation::finite(r.val, d.ramification() as i64)),
            (Payload::Rational(q), FieldDescriptor::ExactRational { norm: RationalNorm::PAdic(p) }) => {
                Some(rational_valuation(q, p).map_or(Valuation::Infinite, |v| Valuation::finite(v, 1)))
            }
            _ => None,
        }
    }

    /// Valuation in uniformizer units (integer), p-adic kinds only.
    pub fn pi_valuation(&self) -> Option<i64> {
        match &self.payload {
            Payload::Padic(Some(r)) => Some(r.val),
            _ => None,
        }
    }

    /// Uniformizer digits `d_0..d_{precision-1}`; empty for zero.
    pub fn digits(&self) -> Option<Vec<u32>> {
        let shape = self.desc.shape()?;
        match &self.payload {
            Payload::Padic(None) => Some(Vec::new()),
            Payload::Padic(Some(r)) => Some(r.unit.digits(shape)),
            _ => None,
        }
    }

    /// Leading digit of a nonzero p-adic element, i.e. its residue in `F_p`
    /// after removing the valuation.
    pub fn leading_digit(&self) -> Option<u64> {
        let shape = self.desc.shape()?;
        match &self.payload {
            Payload::Padic(Some(r)) => Some(r.unit.residue(shape)),
            _ => None,
        }
    }

    pub fn norm(&self) -> NormValue {
        match (&self.payload, self.desc) {
            (Payload::Real(x), _) => NormValue::Float(x.abs()),
            (Payload::Complex(z), _) => NormValue::Float(z.norm()),
            (Payload::Padic(_), d) => NormValue::Valuation {
                base: d.prime().unwrap_or(2),
                v: self.valuation().unwrap_or(Valuation::Infinite),
            },
            (Payload::Rational(q), FieldDescriptor::ExactRational { norm: RationalNorm::Absolute }) => {
                NormValue::Exact(q.abs())
            }
            (Payload::Rational(_), d) => NormValue::Valuation {
                base: d.prime().unwrap_or(2),
                v: self.valuation().unwrap_or(Valuation::Infinite),
            },
        }
    }

    fn check(&self, other: &FieldElement) -> Result<()> {
        if self.desc != other.desc {
            return Err(FieldError::DescriptorMismatch(self.desc, other.desc));
        }
        Ok(())
    }

    fn padic_add(&self, other: &FieldElement, flush: bool) -> Result<FieldElement> {
        let shape = self.desc.shape().expect("p-adic shape");
        let (a, b) = match (&self.payload, &other.payload) {
            (Payload::Padic(None), _) => return Ok(other.clone()),
            (_, Payload::Padic(None)) => return Ok(self.clone()),
            (Payload::Padic(Some(a)), Payload::Padic(Some(b))) => {
                if a.val <= b.val {
                    (a, b)
                } else {
                    (b, a)
                }
            }
            _ => unreachable!("p-adic payload"),
        };
        let s = (b.val - a.val) as usize;
        if s >= shape.prec {
            return Ok(FieldElement {
                desc: self.desc,
                payload: Payload::Padic(Some(a.clone())),
            });
        }
        let sum = a.unit.add(&b.unit.shift_up(s, shape), shape);
        match normalize(a.val, sum, shape) {
            Some(r) => Ok(FieldElement {
                desc: self.desc,
                payload: Payload::Padic(Some(r)),
            }),
            None if flush => Ok(Self::zero(self.desc)),
            None => Err(FieldError::PrecisionExhausted),
        }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check(other)?;
        self.add_unchecked(other, false)
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check(other)?;
        self.add_unchecked(&other.neg(), false)
    }

    /// Like [`add`](Self::add) but total cancellation yields zero. For
    /// callers that bound the absolute error of their inputs.
    pub fn add_flush(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check(other)?;
        self.add_unchecked(other, true)
    }

    pub fn sub_flush(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check(other)?;
        self.add_unchecked(&other.neg(), true)
    }

    fn add_unchecked(&self, other: &FieldElement, flush: bool) -> Result<FieldElement> {
        let payload = match (&self.payload, &other.payload) {
            (Payload::Real(a), Payload::Real(b)) => Payload::Real(a + b),
            (Payload::Complex(a), Payload::Complex(b)) => Payload::Complex(a + b),
            (Payload::Rational(a), Payload::Rational(b)) => Payload::Rational(a + b),
            (Payload::Padic(_), Payload::Padic(_)) => return self.padic_add(other, flush),
            _ => return Err(FieldError::DescriptorMismatch(self.desc, other.desc)),
        };
        Ok(FieldElement {
            desc: self.desc,
            payload,
        })
    }

    pub fn neg(&self) -> FieldElement {
        let payload = match &self.payload {
            Payload::Real(a) => Payload::Real(-a),
            Payload::Complex(a) => Payload::Complex(-a),
            Payload::Rational(a) => Payload::Rational(-a),
            Payload::Padic(None) => Payload::Padic(None),
            Payload::Padic(Some(r)) => {
                let shape = self.desc.shape().expect("p-adic shape");
                Payload::Padic(Some(PadicRepr {
                    val: r.val,
                    unit: r.unit.neg(shape),
                }))
            }
        };
        FieldElement {
            desc: self.desc,
            payload,
        }
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check(other)?;
        let payload = match (&self.payload, &other.payload) {
            (Payload::Real(a), Payload::Real(b)) => Payload::Real(a * b),
            (Payload::Complex(a), Payload::Complex(b)) => Payload::Complex(a * b),
            (Payload::Rational(a), Payload::Rational(b)) => Payload::Rational(a * b),
            (Payload::Padic(Some(a)), Payload::Padic(Some(b))) => {
                let shape = self.desc.shape().expect("p-adic shape");
                Payload::Padic(Some(PadicRepr {
                    val: a.val + b.val,
                    unit: a.unit.mul(&b.unit, shape),
                }))
            }
            (Payload::Padic(_), Payload::Padic(_)) => Payload::Padic(None),
            _ => return Err(FieldError::DescriptorMismatch(self.desc, other.desc)),
        };
        Ok(FieldElement {
            desc: self.desc,
            payload,
        })
    }

    pub fn inv(&self) -> Result<FieldElement> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let payload = match &self.payload {
            Payload::Real(a) => Payload::Real(1.0 / a),
            Payload::Complex(a) => Payload::Complex(a.inv()),
            Payload::Rational(a) => Payload::Rational(a.recip()),
            Payload::Padic(Some(r)) => {
                let shape = self.desc.shape().expect("p-adic shape");
                Payload::Padic(Some(PadicRepr {
                    val: -r.val,
                    unit: r.unit.inverse_unit(shape),
                }))
            }
            Payload::Padic(None) => unreachable!("zero handled above"),
        };
        Ok(FieldElement {
            desc: self.desc,
            payload,
        })
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check(other)?;
        if other.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        self.mul(&other.inv()?)
    }

    pub fn pow(&self, mut e: u32) -> FieldElement {
        let mut base = self.clone();
        let mut acc = FieldElement::one(self.desc);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same descriptor");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same descriptor");
            }
        }
        acc
    }

    /// Changes the retained precision of a p-adic element: truncates, or
    /// extends with zero digits. Other kinds are returned unchanged.
    pub fn with_precision(&self, precision: usize) -> FieldElement {
        let desc = self.desc.with_precision(precision);
        let payload = match &self.payload {
            Payload::Padic(Some(r)) => {
                let shape = desc.shape().expect("p-adic shape");
                Payload::Padic(Some(PadicRepr {
                    val: r.val,
                    unit: r.unit.resize(shape),
                }))
            }
            other => other.clone(),
        };
        FieldElement { desc, payload }
    }

    /// Draws an element uniformly from the closed unit ball `{|c| <= 1}`:
    /// `[-1, 1]` for `R`, the unit disk for `C`, uniform digits for p-adics,
    /// and bounded-denominator rationals for `Q`.
    pub fn random_unit_ball<R: Rng + ?Sized>(desc: FieldDescriptor, rng: &mut R) -> FieldElement {
        match desc {
            FieldDescriptor::Real => FieldElement::real(rng.gen_range(-1.0..=1.0)),
            FieldDescriptor::Complex => {
                let r = rng.gen::<f64>().sqrt();
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                FieldElement::from_complex(Complex64::from_polar(r, t))
            }
            FieldDescriptor::Padic { p, precision } | FieldDescriptor::RamifiedPadic { p, precision, .. } => {
                let digits: Vec<u32> = (0..precision).map(|_| rng.gen_range(0..p) as u32).collect();
                FieldElement::from_digits(desc, Valuation::finite(0, 1), &digits).expect("valid digits")
            }
            FieldDescriptor::ExactRational { norm } => {
                let q = match norm {
                    RationalNorm::Absolute => {
                        BigRational::new(rng.gen_range(-1024i64..=1024).into(), 1024.into())
                    }
                    RationalNorm::PAdic(_) => BigRational::from_integer(rng.gen_range(-1024i64..=1024).into()),
                };
                FieldElement {
                    desc,
                    payload: Payload::Rational(q),
                }
            }
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::Real(x) => write!(f, "{x}"),
            Payload::Complex(z) => write!(f, "{}{:+}i", z.re, z.im),
            Payload::Rational(q) => write!(f, "{q}"),
            Payload::Padic(None) => write!(f, "0"),
            Payload::Padic(Some(_)) => {
                let digits = self.digits().unwrap_or_default();
                let last = digits.iter().rposition(|&d| d != 0).unwrap_or(0);
                let body: Vec<String> = digits[..=last].iter().rev().map(|d| d.to_string()).collect();
                write!(f, "(...{})*pi^{}", body.join(","), self.pi_valuation().unwrap_or(0))
            }
        }
    }
}

/// Strips leading zero digits into the valuation; `None` when nothing is left.
fn normalize(val: i64, raw: PiAdicInt, shape: Shape) -> Option<PadicRepr> {
    let e = raw.valuation(shape)?;
    Some(PadicRepr {
        val: val + e as i64,
        unit: raw.shift_down(e, shape),
    })
}

/// `v_p(q)`, `None` for zero.
pub fn rational_valuation(q: &BigRational, p: u64) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let count = |x: &BigInt| {
        let mut x = x.abs();
        let mut c = 0i64;
        loop {
            let (qq, r) = x.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            x = qq;
            c += 1;
        }
        c
    };
    Some(count(q.numer()) - count(q.denom()))
}

fn rational_to_padic(q: &BigRational, shape: Shape) -> Option<PadicRepr> {
    let v = rational_valuation(q, shape.p)?;
    let p = shape.p;
    let scaled = q * pow_rational(p, -v);
    let digits_needed = (shape.prec as u32).div_ceil(shape.k as u32);
    let modulus = BigInt::from(p).pow(digits_needed);
    let num = scaled.numer().mod_floor(&modulus);
    let den = scaled.denom().mod_floor(&modulus);
    let den_inv = mod_inverse_big(&den, &modulus)?;
    let unit = (num * den_inv).mod_floor(&modulus);
    let unit = unit.to_biguint().unwrap_or_default();
    Some(PadicRepr {
        val: v * shape.k as i64,
        unit: PiAdicInt::from_base(shape, unit),
    })
}

fn mod_inverse_big(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

impl FieldElement {
    /// `|x|` as an `f64`; convenient for archimedean reports.
    pub fn abs_f64(&self) -> f64 {
        self.norm().to_f64()
    }

    /// `x.to_u64()` style accessor for small nonnegative integers in exact kinds.
    pub fn to_i64(&self) -> Option<i64> {
        let q = self.to_rational()?;
        if q.is_integer() {
            q.to_integer().to_i64()
        } else {
            None
        }
    }
}

pub use json::{element_from_json, element_to_json};
