//! Norms of zeros: Newton polygons over the p-adic kinds, simultaneous
//! iteration over R and C, and the distance from a point to a zero set.

mod arch;
mod geometry;

use num_rational::Rational64;
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

pub use arch::{arch_roots, smallest_root_modulus_arch, ArchRoots, BACKWARD_ERROR_TOLERANCE};
pub use geometry::{
    empirical_c, hyperbolic_distance_bound, zero_free_slice_radius, EmpiricalC, FactoredPoly, LinearFactor, PolyInput,
    ZeroGeometryReport,
};

use crate::field::{uniformizer_power, FieldDescriptor, FieldElement, FieldError, NormValue, RationalNorm, Valuation};
use crate::poly::{MultiPoly, PolyError};

#[derive(Debug, Error)]
pub enum ZerosError {
    #[error("the zero polynomial has no Newton polygon")]
    ZeroPolynomial,
    #[error("root finder did not certify: backward error {backward_error:e}")]
    RootFindingFailure { backward_error: f64 },
    #[error("expected a univariate polynomial, got arity {0}")]
    NotUnivariate(usize),
    #[error("{0} is not supported here")]
    Unsupported(FieldDescriptor),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One edge of the lower convex hull of `(i, v(c_i))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub slope: Rational64,
    pub length: usize,
}

/// Lower convex hull of `(i, v(c_i))`, valuations normalized so `v(p) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub prime: u64,
    pub vertices: Vec<(usize, Rational64)>,
    pub segments: Vec<Segment>,
    /// Vanishing order at 0: the index of the first nonzero coefficient.
    pub order_at_zero: usize,
}

impl NewtonPolygon {
    pub fn to_json(&self) -> Value {
        json!({
            "prime": self.prime,
            "vertices": self.vertices.iter().map(|(i, v)| json!([i, v.to_string()])).collect::<Vec<_>>(),
            "segments": self.segments.iter().map(|s| json!({"slope": s.slope.to_string(), "length": s.length})).collect::<Vec<_>>(),
            "order_at_zero": self.order_at_zero,
        })
    }
}

/// Root norms with multiplicities, smallest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RootNormMultiset {
    pub entries: Vec<(NormValue, usize)>,
}

impl RootNormMultiset {
    pub fn degree(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Valuations of the roots with multiplicity, largest (smallest norm) first.
    pub fn valuations(&self) -> Vec<Valuation> {
        self.entries
            .iter()
            .flat_map(|(n, m)| {
                let v = match n {
                    NormValue::Valuation { v, .. } => *v,
                    _ => Valuation::Infinite,
                };
                std::iter::repeat(v).take(*m)
            })
            .collect()
    }
}

pub(crate) fn univariate(q: &MultiPoly) -> Result<Vec<FieldElement>, ZerosError> {
    if q.arity() != 1 {
        return Err(ZerosError::NotUnivariate(q.arity()));
    }
    if q.is_zero() {
        return Err(ZerosError::ZeroPolynomial);
    }
    Ok(q.univariate_coeffs())
}

/// Lower hull of points sorted by abscissa.
fn lower_hull(points: &[(usize, Rational64)]) -> Vec<(usize, Rational64)> {
    let mut hull: Vec<(usize, Rational64)> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.1 - a.1) * Rational64::from_integer((p.0 - a.0) as i64)
                - (p.1 - a.1) * Rational64::from_integer((b.0 - a.0) as i64);
            // drop b unless it lies strictly below the chord a-p
            if cross >= Rational64::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn polygon_of(points: Vec<(usize, Rational64)>, prime: u64) -> NewtonPolygon {
    let order_at_zero = points[0].0;
    let vertices = lower_hull(&points);
    let segments = vertices
        .windows(2)
        .map(|w| {
            let len = w[1].0 - w[0].0;
            Segment { slope: (w[1].1 - w[0].1) / Rational64::from_integer(len as i64), length: len }
        })
        .collect();
    NewtonPolygon { prime, vertices, segments, order_at_zero }
}

pub fn newton_polygon(q: &MultiPoly) -> Result<NewtonPolygon, ZerosError> {
    let desc = q.descriptor();
    if desc.is_nonarchimedean() {
        let coeffs = univariate(q)?;
        let points: Vec<(usize, Rational64)> = coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.valuation().and_then(|v| v.as_rational()).map(|v| (i, v)))
            .collect();
        Ok(polygon_of(points, desc.prime().expect("nonarchimedean kind")))
    } else {
        Err(ZerosError::Unsupported(desc))
    }
}

/// A slope-`s` segment of length `l` gives `l` roots of valuation `-s`.
pub fn root_norms_nonarch(q: &MultiPoly) -> Result<RootNormMultiset, ZerosError> {
    let poly = newton_polygon(q)?;
    let base = poly.prime;
    let mut entries = Vec::new();
    if poly.order_at_zero > 0 {
        entries.push((NormValue::Valuation { base, v: Valuation::Infinite }, poly.order_at_zero));
    }
    // slopes increase left to right, so root valuations -s decrease
    for s in &poly.segments {
        let v = -s.slope;
        entries.push((NormValue::Valuation { base, v: Valuation::Finite(v) }, s.length));
    }
    Ok(RootNormMultiset { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rootedness {
    True,
    False,
    Undecided,
}

impl Rootedness {
    fn and(self, other: Rootedness) -> Rootedness {
        match (self, other) {
            (Rootedness::False, _) | (_, Rootedness::False) => Rootedness::False,
            (Rootedness::Undecided, _) | (_, Rootedness::Undecided) => Rootedness::Undecided,
            _ => Rootedness::True,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rootedness::True => "true",
            Rootedness::False => "false",
            Rootedness::Undecided => "undecided",
        }
    }
}

/// Largest residue characteristic searched by brute force.
const MAX_RESIDUE_SEARCH: u64 = 1 << 16;
/// Nesting limit for the Taylor shifts that separate clustered roots.
const MAX_SHIFT_DEPTH: usize = 24;

/// Imaginary parts below this (relative) count as real; above the looser
/// bound as certainly non-real.
const REAL_TOLERANCE: f64 = 1e-6;
const NONREAL_TOLERANCE: f64 = 1e-4;

/// Whether `q` splits into linear factors over its field.
pub fn is_f_rooted(q: &MultiPoly) -> Result<Rootedness, ZerosError> {
    let desc = q.descriptor();
    let coeffs = univariate(q)?;
    match desc {
        FieldDescriptor::Complex => Ok(Rootedness::True),
        FieldDescriptor::Real | FieldDescriptor::ExactRational { norm: RationalNorm::Absolute } => {
            let roots = arch_roots(q)?;
            let mut verdict = Rootedness::True;
            for z in &roots.roots {
                let scale = z.norm().max(1.0);
                if z.im.abs() > NONREAL_TOLERANCE * scale {
                    return Ok(Rootedness::False);
                }
                if z.im.abs() > REAL_TOLERANCE * scale {
                    verdict = Rootedness::Undecided;
                }
            }
            Ok(verdict)
        }
        FieldDescriptor::ExactRational { norm: RationalNorm::PAdic(p) } => {
            let pd = FieldDescriptor::padic(p, 64)?;
            let lifted: Vec<FieldElement> = coeffs
                .iter()
                .map(|c| FieldElement::from_rational(pd, &c.to_rational().expect("rational coefficient")))
                .collect();
            padic_rooted(&lifted, 0)
        }
        _ => padic_rooted(&coeffs, 0),
    }
}

fn trim(mut c: Vec<FieldElement>) -> Vec<FieldElement> {
    while c.len() > 1 && c.last().is_some_and(FieldElement::is_zero) {
        c.pop();
    }
    c
}

/// Residue in `F_p` of an integral element.
fn residue(c: &FieldElement) -> u64 {
    match c.pi_valuation() {
        Some(0) => c.leading_digit().expect("nonzero"),
        _ => 0,
    }
}

/// Roots of `sum r_k w^k` over `F_p` with multiplicity.
fn residue_roots(r: &[u64], p: u64) -> Vec<(u64, usize)> {
    let mut out = Vec::new();
    for a in 0..p {
        let mut poly: Vec<u64> = r.to_vec();
        let mut mult = 0;
        loop {
            // synthetic division by (w - a)
            let n = poly.len();
            if n < 2 {
                break;
            }
            let mut q = vec![0u64; n - 1];
            let mut acc = 0u64;
            for k in (0..n).rev() {
                acc = (acc * a + poly[k]) % p;
                if k > 0 {
                    q[k - 1] = acc;
                }
            }
            if acc != 0 {
                break;
            }
            mult += 1;
            poly = q;
        }
        if mult > 0 {
            out.push((a, mult));
        }
    }
    out
}

/// `c(a + s w)` for the element `a` and scale `s`, coefficients in `w`.
fn taylor_shift(c: &[FieldElement], a: &FieldElement, s: &FieldElement) -> Result<Vec<FieldElement>, ZerosError> {
    let mut t = c.to_vec();
    let n = t.len();
    for i in 0..n {
        for k in (i..n - 1).rev() {
            let add = t[k + 1].mul(a)?;
            t[k] = t[k].add_flush(&add)?;
        }
    }
    let mut scale = FieldElement::one(a.descriptor());
    for k in t.iter_mut() {
        *k = k.mul(&scale)?;
        scale = scale.mul(s)?;
    }
    Ok(t)
}

/// Every root of `c` (in an algebraic closure) lies in the field, for the
/// roots counted by `filter`: all roots when `min_valuation` is `None`,
/// otherwise those with `pi`-valuation at least this bound.
fn padic_rooted_from(c: &[FieldElement], min_valuation: Option<i64>, depth: usize) -> Result<Rootedness, ZerosError> {
    let c = trim(c.to_vec());
    let desc = c[0].descriptor();
    let p = desc.prime().expect("p-adic kind");
    let start = c.iter().position(|x| !x.is_zero()).ok_or(ZerosError::ZeroPolynomial)?;
    if start == c.len() - 1 {
        // only zero roots
        return Ok(Rootedness::True);
    }
    if depth > MAX_SHIFT_DEPTH {
        return Ok(Rootedness::Undecided);
    }
    if p > MAX_RESIDUE_SEARCH {
        return Ok(Rootedness::Undecided);
    }
    let points: Vec<(usize, Rational64)> = c
        .iter()
        .enumerate()
        .filter_map(|(i, x)| x.pi_valuation().map(|v| (i, Rational64::from_integer(v))))
        .collect();
    let poly = polygon_of(points, p);
    let mut verdict = Rootedness::True;
    for (seg, w) in poly.segments.iter().zip(poly.vertices.windows(2)) {
        let lam_r = -seg.slope;
        if let Some(bound) = min_valuation {
            if lam_r < Rational64::from_integer(bound) {
                continue;
            }
        }
        if !lam_r.is_integer() {
            return Ok(Rootedness::False);
        }
        let lam = lam_r.to_integer();
        // w-polynomial pi^{-m} c(pi^lam w), whose segment roots are units
        let m = w[0].1.to_integer() + w[0].0 as i64 * lam;
        let scale = uniformizer_power(desc, lam)?;
        let shifted = taylor_shift(&c, &FieldElement::zero(desc), &scale)?;
        let unscale = uniformizer_power(desc, -m)?;
        let cl: Vec<FieldElement> = shifted.iter().map(|x| x.mul(&unscale)).collect::<Result<_, _>>()?;
        let red: Vec<u64> = cl[w[0].0..=w[1].0].iter().map(residue).collect();
        if red[0] == 0 || *red.last().expect("segment") == 0 {
            return Ok(Rootedness::Undecided);
        }
        let roots = residue_roots(&red, p);
        if roots.iter().map(|r| r.1).sum::<usize>() < seg.length {
            // an irreducible residue factor of degree > 1
            return Ok(Rootedness::False);
        }
        for (a, mult) in roots {
            let a = FieldElement::from_i64(desc, a as i64);
            let part = if mult == 1 {
                // a simple residue root lifts to a root by Hensel's lemma
                Rootedness::True
            } else {
                let pi = uniformizer_power(desc, 1)?;
                let t = taylor_shift(&cl, &a, &pi)?;
                padic_rooted_from(&t, Some(0), depth + 1)?
            };
            verdict = verdict.and(part);
            if verdict == Rootedness::False {
                return Ok(verdict);
            }
        }
    }
    Ok(verdict)
}

fn padic_rooted(c: &[FieldElement], depth: usize) -> Result<Rootedness, ZerosError> {
    padic_rooted_from(c, None, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn poly(desc: FieldDescriptor, c: &[i64]) -> MultiPoly {
        let c: Vec<FieldElement> = c.iter().map(|&x| FieldElement::from_i64(desc, x)).collect();
        MultiPoly::univariate(desc, &c).unwrap()
    }

    fn r(a: i64, b: i64) -> Rational64 {
        Rational64::new(a, b)
    }

    #[test]
    fn polygon_examples() {
        let q3 = FieldDescriptor::padic(3, 16).unwrap();
        let a = newton_polygon(&poly(q3, &[-3, 0, 1])).unwrap();
        assert_eq!(a.vertices, vec![(0, r(1, 1)), (2, r(0, 1))]);
        assert_eq!(a.segments, vec![Segment { slope: r(-1, 2), length: 2 }]);
        let b = newton_polygon(&poly(q3, &[-1, 0, 1])).unwrap();
        assert_eq!(b.segments, vec![Segment { slope: r(0, 1), length: 2 }]);
        let c = newton_polygon(&poly(q3, &[-1, 0, 3])).unwrap();
        assert_eq!(c.vertices, vec![(0, r(0, 1)), (2, r(1, 1))]);
        assert_eq!(c.segments[0].slope, r(1, 2));
        assert!(matches!(newton_polygon(&MultiPoly::zero(q3, 1)), Err(ZerosError::ZeroPolynomial)));
    }

    #[test]
    fn root_norm_examples() {
        let q5 = FieldDescriptor::padic(5, 16).unwrap();
        let n = root_norms_nonarch(&poly(q5, &[-5, 0, 1])).unwrap();
        assert_eq!(n.entries, vec![(NormValue::Valuation { base: 5, v: Valuation::Finite(r(1, 2)) }, 2)]);
        let n = root_norms_nonarch(&poly(q5, &[0, -1, 1])).unwrap();
        assert_eq!(n.valuations(), vec![Valuation::Infinite, Valuation::Finite(r(0, 1))]);
        // (z - 5)(z - 25) = z^2 - 30 z + 125
        let n = root_norms_nonarch(&poly(q5, &[125, -30, 1])).unwrap();
        assert_eq!(n.valuations(), vec![Valuation::Finite(r(2, 1)), Valuation::Finite(r(1, 1))]);
    }

    #[test]
    fn rootedness_examples() {
        let q2 = FieldDescriptor::padic(2, 32).unwrap();
        assert_eq!(is_f_rooted(&poly(q2, &[-2, 0, 1])).unwrap(), Rootedness::False);
        assert_eq!(is_f_rooted(&poly(q2, &[-1, 0, 1])).unwrap(), Rootedness::True);
        assert_eq!(is_f_rooted(&poly(FieldDescriptor::Complex, &[1, 0, 1])).unwrap(), Rootedness::True);
        assert_eq!(is_f_rooted(&poly(FieldDescriptor::Real, &[1, 0, 1])).unwrap(), Rootedness::False);
        assert_eq!(is_f_rooted(&poly(FieldDescriptor::Real, &[-1, 0, 1])).unwrap(), Rootedness::True);
        // z^2 + 1 over Q_5 splits (i exists), over Q_3 it does not
        let q5 = FieldDescriptor::padic(5, 24).unwrap();
        assert_eq!(is_f_rooted(&poly(q5, &[1, 0, 1])).unwrap(), Rootedness::True);
        let q3 = FieldDescriptor::padic(3, 24).unwrap();
        assert_eq!(is_f_rooted(&poly(q3, &[1, 0, 1])).unwrap(), Rootedness::False);
        // z^2 - 17 over Q_2: 17 is a square
        assert_eq!(is_f_rooted(&poly(q2, &[-17, 0, 1])).unwrap(), Rootedness::True);
        // z^2 - 5 over Q_2: 5 is not a square
        assert_eq!(is_f_rooted(&poly(q2, &[-5, 0, 1])).unwrap(), Rootedness::False);
        // an exact double root still splits
        assert_eq!(is_f_rooted(&poly(q2, &[1, -2, 1])).unwrap(), Rootedness::True);
        // (z - 1)^2 - 2^40 leaves the clusters unresolved at 32 digits
        let close = FieldElement::from_rational(q2, &BigRational::from_integer(BigInt::from(1u64 << 40)));
        let c = vec![FieldElement::from_i64(q2, 1).sub(&close).unwrap(), FieldElement::from_i64(q2, -2), FieldElement::from_i64(q2, 1)];
        assert_ne!(is_f_rooted(&MultiPoly::univariate(q2, &c).unwrap()).unwrap(), Rootedness::False);
        let qp = FieldDescriptor::rational_padic(2).unwrap();
        assert_eq!(is_f_rooted(&poly(qp, &[-1, 0, 1])).unwrap(), Rootedness::True);
    }

    #[test]
    fn ramified_half_slopes_are_integral() {
        // z^2 - 3 over Q_3(3^{1/2}) splits: the roots are +-pi
        let k = FieldDescriptor::ramified(3, 2, 24).unwrap();
        assert_eq!(is_f_rooted(&poly(k, &[-3, 0, 1])).unwrap(), Rootedness::True);
        let n = root_norms_nonarch(&poly(k, &[-3, 0, 1])).unwrap();
        assert_eq!(n.entries[0].1, 2);
        assert_eq!(n.valuations()[0], Valuation::Finite(r(1, 2)));
    }
}
