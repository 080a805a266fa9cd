//! Sparse multivariate polynomials over the supported fields.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{element_from_json, element_to_json, FieldDescriptor, FieldElement, FieldError, NormValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("degree {degree} exceeds target degree {n}")]
    DegreeOverflow { degree: u32, n: u32 },
    #[error("polynomial is not homogeneous of degree {0}")]
    NotHomogeneous(u32),
    #[error("sample set is empty")]
    EmptySample,
    #[error("malformed polynomial: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub type Exponent = Vec<u32>;

/// `sum c_e x^e` with no zero coefficients stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    desc: FieldDescriptor,
    d: usize,
    terms: BTreeMap<Exponent, FieldElement>,
}

/// A sum of nonnegative norms, exact when every summand is rational.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnitude {
    pub value: f64,
    pub ln: f64,
    pub exact: Option<BigRational>,
}

impl Magnitude {
    pub fn zero() -> Self {
        Magnitude {
            value: 0.0,
            ln: f64::NEG_INFINITY,
            exact: Some(BigRational::zero()),
        }
    }

    pub fn from_norm(n: &NormValue) -> Self {
        Magnitude {
            value: n.to_f64(),
            ln: n.ln(),
            exact: n.to_rational(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    /// Sum of the given norms: exact when each is rational, otherwise a
    /// log-sum-exp in binary64.
    pub fn sum<'a, I: IntoIterator<Item = &'a NormValue>>(norms: I) -> Self {
        let norms: Vec<&NormValue> = norms.into_iter().filter(|n| !n.is_zero()).collect();
        if norms.is_empty() {
            return Self::zero();
        }
        let exact: Option<BigRational> = norms
            .iter()
            .map(|n| n.to_rational())
            .try_fold(BigRational::zero(), |acc, q| q.map(|q| acc + q));
        if let Some(q) = exact {
            return Magnitude::from_norm(&NormValue::Exact(q));
        }
        let lns: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
        let top = lns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ln = top + lns.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        Magnitude {
            value: ln.exp(),
            ln,
            exact: None,
        }
    }

    pub fn cmp(&self, other: &Magnitude) -> Ordering {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a.cmp(b),
            _ => self.ln.partial_cmp(&other.ln).unwrap_or(Ordering::Equal),
        }
    }
}

/// Running sum that treats total p-adic cancellation of a partial sum as zero
/// but reports it if the final value vanishes.
struct Accumulator {
    acc: FieldElement,
    cancelled: bool,
}

impl Accumulator {
    fn new(desc: FieldDescriptor) -> Self {
        Accumulator {
            acc: FieldElement::zero(desc),
            cancelled: false,
        }
    }

    fn add(&mut self, x: &FieldElement) -> Result<(), FieldError> {
        if x.is_zero() {
            return Ok(());
        }
        let was_zero = self.acc.is_zero();
        self.acc = self.acc.add_flush(x)?;
        if !was_zero && self.acc.is_zero() && x.descriptor().is_padic() {
            self.cancelled = true;
        }
        Ok(())
    }

    fn finish(self, strict: bool) -> Result<FieldElement, FieldError> {
        if strict && self.cancelled && self.acc.is_zero() {
            return Err(FieldError::PrecisionExhausted);
        }
        Ok(self.acc)
    }
}

impl MultiPoly {
    pub fn zero(desc: FieldDescriptor, d: usize) -> Self {
        MultiPoly {
            desc,
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: FieldElement, d: usize) -> Self {
        let mut p = Self::zero(c.descriptor(), d);
        p.insert(vec![0; d], c);
        p
    }

    pub fn monomial(c: FieldElement, e: Exponent) -> Self {
        let mut p = Self::zero(c.descriptor(), e.len());
        p.insert(e, c);
        p
    }

    /// The coordinate function `x_i` (0-based).
    pub fn variable(desc: FieldDescriptor, d: usize, i: usize) -> Self {
        let mut e = vec![0; d];
        e[i] = 1;
        Self::monomial(FieldElement::one(desc), e)
    }

    /// Collects terms, summing repeated exponents and dropping zeros.
    pub fn from_terms<I>(desc: FieldDescriptor, d: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Exponent, FieldElement)>,
    {
        let mut p = Self::zero(desc, d);
        for (e, c) in terms {
            if e.len() != d {
                return Err(PolyError::ArityMismatch { expected: d, got: e.len() });
            }
            if c.descriptor() != desc {
                return Err(FieldError::DescriptorMismatch(desc, c.descriptor()).into());
            }
            p.add_term(e, &c)?;
        }
        Ok(p)
    }

    /// Univariate `sum coeffs[i] z^i`.
    pub fn univariate(desc: FieldDescriptor, coeffs: &[FieldElement]) -> Result<Self, PolyError> {
        Self::from_terms(desc, 1, coeffs.iter().enumerate().map(|(i, c)| (vec![i as u32], c.clone())))
    }

    fn insert(&mut self, e: Exponent, c: FieldElement) {
        if !c.is_zero() {
            self.terms.insert(e, c);
        }
    }

    fn add_term(&mut self, e: Exponent, c: &FieldElement) -> Result<(), FieldError> {
        if c.is_zero() {
            return Ok(());
        }
        match self.terms.remove(&e) {
            Some(old) => {
                let s = old.add_flush(c)?;
                self.insert(e, s);
            }
            None => {
                self.terms.insert(e, c.clone());
            }
        }
        Ok(())
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }

    pub fn arity(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &FieldElement)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &[u32]) -> FieldElement {
        self.terms.get(e).cloned().unwrap_or_else(|| FieldElement::zero(self.desc))
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Dense coefficients `c_0..c_deg` of a univariate polynomial.
    pub fn univariate_coeffs(&self) -> Vec<FieldElement> {
        let n = self.degree().map_or(0, |n| n as usize + 1);
        let mut out = vec![FieldElement::zero(self.desc); n];
        for (e, c) in &self.terms {
            out[e[0] as usize] = c.clone();
        }
        out
    }

    fn check(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.d != other.d {
            return Err(PolyError::ArityMismatch { expected: self.d, got: other.d });
        }
        if self.desc != other.desc {
            return Err(FieldError::DescriptorMismatch(self.desc, other.desc).into());
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c)?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly {
            desc: self.desc,
            d: self.d,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &FieldElement) -> Result<MultiPoly, PolyError> {
        let mut out = Self::zero(self.desc, self.d);
        for (e, c) in &self.terms {
            out.insert(e.clone(), c.mul(s)?);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check(other)?;
        let mut out = Self::zero(self.desc, self.d);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, &ca.mul(cb)?)?;
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<MultiPoly, PolyError> {
        let mut acc = Self::constant(FieldElement::one(self.desc), self.d);
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Terms of total degree at most `n`.
    pub fn truncate(&self, n: u32) -> MultiPoly {
        MultiPoly {
            desc: self.desc,
            d: self.d,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= n)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Re-expresses p-adic coefficients at another precision.
    pub fn with_precision(&self, precision: usize) -> MultiPoly {
        let desc = self.desc.with_precision(precision);
        let mut out = Self::zero(desc, self.d);
        for (e, c) in &self.terms {
            out.insert(e.clone(), c.with_precision(precision));
        }
        out
    }

    fn powers(&self, x: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>, PolyError> {
        if x.len() != self.d {
            return Err(PolyError::ArityMismatch { expected: self.d, got: x.len() });
        }
        let mut maxe = vec![0u32; self.d];
        for e in self.terms.keys() {
            for (m, &k) in maxe.iter_mut().zip(e) {
                *m = (*m).max(k);
            }
        }
        x.iter()
            .zip(&maxe)
            .map(|(xi, &m)| {
                if xi.descriptor() != self.desc {
                    return Err(FieldError::DescriptorMismatch(self.desc, xi.descriptor()).into());
                }
                let mut pw = vec![FieldElement::one(self.desc)];
                for _ in 0..m {
                    let next = pw.last().expect("nonempty").mul(xi)?;
                    pw.push(next);
                }
                Ok(pw)
            })
            .collect()
    }

    fn eval_impl(&self, x: &[FieldElement], strict: bool) -> Result<FieldElement, PolyError> {
        let pw = self.powers(x)?;
        let mut acc = Accumulator::new(self.desc);
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&pw[i][k as usize])?;
                }
            }
            acc.add(&t)?;
        }
        Ok(acc.finish(strict)?)
    }

    /// `h(x)`. A p-adic value lost entirely to cancellation is
    /// [`FieldError::PrecisionExhausted`].
    pub fn evaluate(&self, x: &[FieldElement]) -> Result<FieldElement, PolyError> {
        self.eval_impl(x, true)
    }

    /// `h(x)` with total cancellation read as zero.
    pub fn evaluate_flush(&self, x: &[FieldElement]) -> Result<FieldElement, PolyError> {
        self.eval_impl(x, false)
    }

    /// `||h||`: the sum of the coefficient norms.
    pub fn coeff_norm(&self) -> Magnitude {
        let norms: Vec<NormValue> = self.terms.values().map(FieldElement::norm).collect();
        Magnitude::sum(&norms)
    }

    /// `||h||_X` over an explicit sample.
    pub fn sup_norm_on_sample(&self, x: &SamplePointSet) -> Result<NormValue, PolyError> {
        if x.arity() != self.d {
            return Err(PolyError::ArityMismatch { expected: self.d, got: x.arity() });
        }
        let norms: Vec<NormValue> = x
            .points
            .par_iter()
            .map(|pt| self.evaluate(pt).map(|v| v.norm()))
            .collect::<Result<_, _>>()?;
        Ok(norms
            .into_iter()
            .reduce(|a, b| if b.cmp_magnitude(&a) == Ordering::Greater { b } else { a })
            .expect("sample is nonempty"))
    }

    /// `h_0, ..., h_N` where `h_n` collects the terms of total degree `n`.
    pub fn homogeneous_parts(&self, n_max: u32) -> Vec<HomogeneousComponent> {
        let mut parts: Vec<MultiPoly> = (0..=n_max).map(|_| Self::zero(self.desc, self.d)).collect();
        for (e, c) in &self.terms {
            let n: u32 = e.iter().sum();
            if n <= n_max {
                parts[n as usize].insert(e.clone(), c.clone());
            }
        }
        parts
            .into_iter()
            .enumerate()
            .map(|(n, poly)| HomogeneousComponent { n: n as u32, poly })
            .collect()
    }

    /// Coefficients of `p(u + z v)` as a univariate polynomial in `z`.
    pub fn restrict_slice(&self, u: &[FieldElement], v: &[FieldElement]) -> Result<MultiPoly, PolyError> {
        for w in [u, v] {
            if w.len() != self.d {
                return Err(PolyError::ArityMismatch { expected: self.d, got: w.len() });
            }
        }
        let one = FieldElement::one(self.desc);
        let lines: Vec<MultiPoly> = (0..self.d)
            .map(|i| MultiPoly::univariate(self.desc, &[u[i].clone(), v[i].clone()]))
            .collect::<Result<_, _>>()?;
        let mut cache: Vec<Vec<MultiPoly>> = lines
            .iter()
            .map(|_| vec![MultiPoly::constant(one.clone(), 1)])
            .collect();
        let mut out = MultiPoly::zero(self.desc, 1);
        for (e, c) in &self.terms {
            let mut t = MultiPoly::constant(c.clone(), 1);
            for (i, &k) in e.iter().enumerate() {
                while cache[i].len() <= k as usize {
                    let next = cache[i].last().expect("nonempty").mul(&lines[i])?;
                    cache[i].push(next);
                }
                if k > 0 {
                    t = t.mul(&cache[i][k as usize])?;
                }
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| json!({ "e": e, "c": element_to_json(c) }))
            .collect();
        json!({ "d": self.d, "terms": terms })
    }

    pub fn from_json(desc: FieldDescriptor, v: &Value) -> Result<MultiPoly, PolyError> {
        let bad = |m: &str| PolyError::Malformed(m.to_string());
        let d = v.get("d").and_then(Value::as_u64).ok_or_else(|| bad("missing \"d\""))? as usize;
        let terms = v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing \"terms\""))?;
        let parsed = terms
            .iter()
            .map(|t| {
                let e: Exponent = t
                    .get("e")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("term without \"e\""))?
                    .iter()
                    .map(|k| k.as_u64().map(|k| k as u32).ok_or_else(|| bad("negative or non-integer exponent")))
                    .collect::<Result<_, _>>()?;
                let c = element_from_json(desc, t.get("c").ok_or_else(|| bad("term without \"c\""))?)?;
                Ok((e, c))
            })
            .collect::<Result<Vec<_>, PolyError>>()?;
        Self::from_terms(desc, d, parsed)
    }
}

/// A polynomial all of whose terms have total degree `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousComponent {
    pub n: u32,
    pub poly: MultiPoly,
}

impl HomogeneousComponent {
    pub fn new(n: u32, poly: MultiPoly) -> Result<Self, PolyError> {
        if poly.terms.keys().any(|e| e.iter().sum::<u32>() != n) {
            return Err(PolyError::NotHomogeneous(n));
        }
        Ok(HomogeneousComponent { n, poly })
    }
}

/// `h(1, t_2, ..., t_d)` in the variables `t_2..t_d`.
pub fn dehomogenize(h: &HomogeneousComponent) -> Result<MultiPoly, PolyError> {
    let p = &h.poly;
    if p.d == 0 {
        return Err(PolyError::ArityMismatch { expected: 1, got: 0 });
    }
    let terms = p.terms.iter().map(|(e, c)| (e[1..].to_vec(), c.clone()));
    MultiPoly::from_terms(p.desc, p.d - 1, terms)
}

/// Inverse of [`dehomogenize`]: pads each term with `x_1^{n - deg}`.
pub fn rehomogenize(g: &MultiPoly, n: u32) -> Result<HomogeneousComponent, PolyError> {
    if let Some(deg) = g.degree() {
        if deg > n {
            return Err(PolyError::DegreeOverflow { degree: deg, n });
        }
    }
    let terms = g.terms.iter().map(|(e, c)| {
        let mut full = Vec::with_capacity(e.len() + 1);
        full.push(n - e.iter().sum::<u32>());
        full.extend_from_slice(e);
        (full, c.clone())
    });
    Ok(HomogeneousComponent {
        n,
        poly: MultiPoly::from_terms(g.desc, g.d + 1, terms)?,
    })
}

/// A finite stand-in for a set `X` of points in `F^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePointSet {
    points: Vec<Vec<FieldElement>>,
}

impl SamplePointSet {
    pub fn new(points: Vec<Vec<FieldElement>>) -> Result<Self, PolyError> {
        let first = points.first().ok_or(PolyError::EmptySample)?;
        let d = first.len();
        let desc = first.first().map(FieldElement::descriptor);
        for pt in &points {
            if pt.len() != d {
                return Err(PolyError::ArityMismatch { expected: d, got: pt.len() });
            }
            if let Some(c) = pt.iter().find(|c| Some(c.descriptor()) != desc) {
                return Err(FieldError::DescriptorMismatch(desc.expect("nonempty"), c.descriptor()).into());
            }
        }
        Ok(SamplePointSet { points })
    }

    /// `count` evenly spaced real points covering `[lo, hi]`.
    pub fn uniform_real(lo: f64, hi: f64, count: usize) -> Result<Self, PolyError> {
        let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
        Self::new((0..count).map(|i| vec![FieldElement::real(lo + step * i as f64)]).collect())
    }

    pub fn points(&self) -> &[Vec<FieldElement>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.points[0].len()
    }

    pub fn descriptor(&self) -> Option<FieldDescriptor> {
        self.points[0].first().map(FieldElement::descriptor)
    }
}
