//! Sources of slice coefficients `a_n(x)`, the `n`-th coefficient of
//! `z -> f(z x)`.

use std::io::BufRead;
use std::sync::Arc;

use serde_json::Value;

use super::GermError;
use crate::field::{element_from_json, FieldDescriptor, FieldElement};
use crate::poly::MultiPoly;

pub trait SliceOracle: Send + Sync {
    fn arity(&self) -> usize;
    fn descriptor(&self) -> FieldDescriptor;
    /// Largest available coefficient index.
    fn max_n(&self) -> usize;
    fn coefficient(&self, x: &[FieldElement], n: usize) -> Result<FieldElement, GermError>;

    fn coefficients(&self, x: &[FieldElement], n_max: usize) -> Result<Vec<FieldElement>, GermError> {
        (0..=n_max).map(|n| self.coefficient(x, n)).collect()
    }
}

fn check_arity(d: usize, x: &[FieldElement]) -> Result<(), GermError> {
    if x.len() != d {
        return Err(GermError::InvalidInput(format!("direction has {} coordinates, expected {d}", x.len())));
    }
    Ok(())
}

fn check_order(n: usize, max_n: usize) -> Result<(), GermError> {
    if n > max_n {
        return Err(GermError::OracleTruncated { requested: n, max_n });
    }
    Ok(())
}

/// Slices of a polynomial: `a_n(x) = h_n(x)`.
#[derive(Debug, Clone)]
pub struct PolynomialOracle {
    parts: Vec<MultiPoly>,
    desc: FieldDescriptor,
    d: usize,
}

impl PolynomialOracle {
    pub fn new(f: &MultiPoly) -> Self {
        let top = f.degree().unwrap_or(0);
        PolynomialOracle {
            parts: f.homogeneous_parts(top).into_iter().map(|h| h.poly).collect(),
            desc: f.descriptor(),
            d: f.arity(),
        }
    }
}

impl SliceOracle for PolynomialOracle {
    fn arity(&self) -> usize {
        self.d
    }
    fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }
    fn max_n(&self) -> usize {
        usize::MAX
    }
    fn coefficient(&self, x: &[FieldElement], n: usize) -> Result<FieldElement, GermError> {
        check_arity(self.d, x)?;
        match self.parts.get(n) {
            Some(h) => Ok(h.evaluate(x)?),
            None => Ok(FieldElement::zero(self.desc)),
        }
    }
}

/// `f = 1 / (1 - <w, x>)`, so `a_n(x) = <w, x>^n`.
#[derive(Debug, Clone)]
pub struct LinearFormOracle {
    w: Vec<FieldElement>,
    desc: FieldDescriptor,
}

impl LinearFormOracle {
    pub fn new(w: Vec<FieldElement>) -> Result<Self, GermError> {
        let desc = w.first().ok_or_else(|| GermError::InvalidInput("empty linear form".into()))?.descriptor();
        Ok(LinearFormOracle { w, desc })
    }
}

impl SliceOracle for LinearFormOracle {
    fn arity(&self) -> usize {
        self.w.len()
    }
    fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }
    fn max_n(&self) -> usize {
        usize::MAX
    }
    fn coefficient(&self, x: &[FieldElement], n: usize) -> Result<FieldElement, GermError> {
        check_arity(self.w.len(), x)?;
        let mut s = FieldElement::zero(self.desc);
        for (w, x) in self.w.iter().zip(x) {
            s = s.add_flush(&w.mul(x)?)?;
        }
        Ok(s.pow(n as u32))
    }
}

/// `f = prod_i 1 / (1 - x_i)`: `a_n(x)` is the complete homogeneous
/// symmetric polynomial of degree `n`.
#[derive(Debug, Clone)]
pub struct GeometricProductOracle {
    d: usize,
    desc: FieldDescriptor,
}

impl GeometricProductOracle {
    pub fn new(desc: FieldDescriptor, d: usize) -> Self {
        GeometricProductOracle { d, desc }
    }
}

impl SliceOracle for GeometricProductOracle {
    fn arity(&self) -> usize {
        self.d
    }
    fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }
    fn max_n(&self) -> usize {
        usize::MAX
    }
    fn coefficient(&self, x: &[FieldElement], n: usize) -> Result<FieldElement, GermError> {
        Ok(self.coefficients(x, n)?.pop().expect("n + 1 entries"))
    }
    fn coefficients(&self, x: &[FieldElement], n_max: usize) -> Result<Vec<FieldElement>, GermError> {
        check_arity(self.d, x)?;
        let mut c = vec![FieldElement::zero(self.desc); n_max + 1];
        c[0] = FieldElement::one(self.desc);
        // multiply by 1/(1 - x_i z): c_k += x_i c_{k-1}, in increasing k
        for xi in x {
            for k in 1..=n_max {
                c[k] = c[k].add_flush(&xi.mul(&c[k - 1])?)?;
            }
        }
        Ok(c)
    }
}

type CoefficientFn = dyn Fn(&[FieldElement], usize) -> Result<FieldElement, GermError> + Send + Sync;

/// An oracle given by a closure.
#[derive(Clone)]
pub struct FnOracle {
    d: usize,
    desc: FieldDescriptor,
    max_n: usize,
    f: Arc<CoefficientFn>,
}

impl FnOracle {
    pub fn new<F>(desc: FieldDescriptor, d: usize, max_n: usize, f: F) -> Self
    where
        F: Fn(&[FieldElement], usize) -> Result<FieldElement, GermError> + Send + Sync + 'static,
    {
        FnOracle { d, desc, max_n, f: Arc::new(f) }
    }
}

impl std::fmt::Debug for FnOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnOracle").field("d", &self.d).field("desc", &self.desc).field("max_n", &self.max_n).finish()
    }
}

impl SliceOracle for FnOracle {
    fn arity(&self) -> usize {
        self.d
    }
    fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }
    fn max_n(&self) -> usize {
        self.max_n
    }
    fn coefficient(&self, x: &[FieldElement], n: usize) -> Result<FieldElement, GermError> {
        check_arity(self.d, x)?;
        check_order(n, self.max_n)?;
        (self.f)(x, n)
    }
}

/// Recorded slices, stored in the chart `x_1 = 1`: a record at `x` is kept
/// as `a_n(x) / x_1^n` at `x / x_1`, which homogeneity makes equivalent.
#[derive(Debug, Clone)]
pub struct TableOracle {
    d: usize,
    desc: FieldDescriptor,
    max_n: usize,
    records: Vec<(Vec<FieldElement>, Vec<FieldElement>)>,
}

fn close(a: &FieldElement, b: &FieldElement) -> Result<bool, GermError> {
    let diff = a.sub_flush(b)?;
    Ok(if a.descriptor().is_exact() || a.descriptor().is_padic() {
        diff.is_zero()
    } else {
        diff.abs_f64() <= 1e-12 * a.abs_f64().max(1.0)
    })
}

impl TableOracle {
    pub fn new(desc: FieldDescriptor, records: Vec<(Vec<FieldElement>, Vec<FieldElement>)>) -> Result<Self, GermError> {
        let d = records.first().ok_or_else(|| GermError::InvalidInput("no slice records".into()))?.0.len();
        let mut charted = Vec::with_capacity(records.len());
        let mut max_n = usize::MAX;
        for (i, (x, a)) in records.into_iter().enumerate() {
            check_arity(d, &x)?;
            if a.is_empty() {
                return Err(GermError::InvalidInput(format!("record {i} has no coefficients")));
            }
            if x[0].is_zero() {
                return Err(GermError::OutOfChart(i));
            }
            let inv = x[0].inv()?;
            let t: Vec<FieldElement> = x.iter().map(|c| c.mul(&inv)).collect::<Result<_, _>>()?;
            let mut scale = FieldElement::one(desc);
            let mut coeffs = Vec::with_capacity(a.len());
            for c in &a {
                coeffs.push(c.mul(&scale)?);
                scale = scale.mul(&inv)?;
            }
            max_n = max_n.min(coeffs.len() - 1);
            charted.push((t, coeffs));
        }
        Ok(TableOracle { d, desc, max_n, records: charted })
    }

    /// One JSON object per line: `{"x": [...], "a": [a_0, ..., a_max]}`.
    pub fn from_jsonl<R: BufRead>(desc: FieldDescriptor, input: R) -> Result<Self, GermError> {
        let mut records = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| GermError::InvalidInput(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: String| GermError::InvalidInput(format!("line {}: {m}", lineno + 1));
            let v: Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let list = |key: &str| -> Result<Vec<FieldElement>, GermError> {
                v.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad(format!("missing array \"{key}\"")))?
                    .iter()
                    .map(|e| element_from_json(desc, e).map_err(|e| bad(e.to_string())))
                    .collect()
            };
            records.push((list("x")?, list("a")?));
        }
        Self::new(desc, records)
    }
}

impl SliceOracle for TableOracle {
    fn arity(&self) -> usize {
        self.d
    }
    fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }
    fn max_n(&self) -> usize {
        self.max_n
    }
    fn coefficient(&self, x: &[FieldElement], n: usize) -> Result<FieldElement, GermError> {
        check_arity(self.d, x)?;
        check_order(n, self.max_n)?;
        if x[0].is_zero() {
            return Err(GermError::InvalidInput("direction outside the chart x_1 != 0".into()));
        }
        let inv = x[0].inv()?;
        let t: Vec<FieldElement> = x.iter().map(|c| c.mul(&inv)).collect::<Result<_, _>>()?;
        for (rt, a) in &self.records {
            let mut hit = true;
            for (u, v) in rt.iter().zip(&t) {
                hit &= close(u, v)?;
            }
            if hit {
                return Ok(a[n].mul(&x[0].pow(n as u32))?);
            }
        }
        Err(GermError::MissingDirection(t.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")))
    }
}
