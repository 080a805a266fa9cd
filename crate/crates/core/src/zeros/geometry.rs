//! Zero-free slice radii and the distance from a point to a zero set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{arch_roots, root_norms_nonarch, ZerosError};
use crate::field::{element_from_json, element_to_json, FieldDescriptor, FieldElement};
use crate::poly::{MultiPoly, SamplePointSet};

/// Slack allowed on the unit norm of a sampled direction.
const UNIT_NORM_TOLERANCE: f64 = 1e-9;
/// Directions sampled when no factorization is available.
pub const FALLBACK_DIRECTIONS: usize = 4096;
const FALLBACK_SEED: u64 = 0x2e50_f1e1d;
/// A root counts as real when `|Im z| <= 1e-7 max(1, |z|)`.
const REAL_ROOT_TOLERANCE: f64 = 1e-7;

/// Smallest norm of a root of `z -> p(u + z v)`; 0 when `p(u) = 0` and
/// `+inf` when the slice is a nonzero constant.
pub fn zero_free_slice_radius(p: &MultiPoly, u: &[FieldElement], v: &[FieldElement]) -> Result<f64, ZerosError> {
    let slice = p.restrict_slice(u, v)?;
    if slice.is_zero() || slice.coeff(&[0]).is_zero() {
        return Ok(0.0);
    }
    if slice.degree() == Some(0) {
        return Ok(f64::INFINITY);
    }
    if slice.descriptor().is_nonarchimedean() {
        let norms = root_norms_nonarch(&slice)?;
        Ok(norms.entries.iter().map(|(n, _)| n.to_f64()).fold(f64::INFINITY, f64::min))
    } else {
        Ok(arch_roots(&slice)?.min_modulus())
    }
}

/// `<linear, x> + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFactor {
    pub linear: Vec<FieldElement>,
    pub constant: FieldElement,
}

impl LinearFactor {
    pub fn evaluate(&self, x: &[FieldElement]) -> Result<FieldElement, ZerosError> {
        let mut s = self.constant.clone();
        for (a, x) in self.linear.iter().zip(x) {
            s = s.add_flush(&a.mul(x)?)?;
        }
        Ok(s)
    }

    /// Norm of the linear part dual to the direction norm: Euclidean over
    /// R and C, max over the nonarchimedean kinds.
    fn dual_norm(&self) -> f64 {
        let norms = self.linear.iter().map(|a| a.norm().to_f64());
        if self.constant.descriptor().is_nonarchimedean() {
            norms.fold(0.0, f64::max)
        } else {
            norms.map(|x| x * x).sum::<f64>().sqrt()
        }
    }

    /// Distance from `u` to the hyperplane `{factor = 0}`.
    pub fn distance(&self, u: &[FieldElement]) -> Result<f64, ZerosError> {
        let n = self.dual_norm();
        if n == 0.0 {
            return Ok(if self.constant.is_zero() { 0.0 } else { f64::INFINITY });
        }
        Ok(self.evaluate(u)?.norm().to_f64() / n)
    }
}

/// A product of affine linear factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredPoly {
    pub desc: FieldDescriptor,
    pub arity: usize,
    pub factors: Vec<LinearFactor>,
}

impl FactoredPoly {
    pub fn new(desc: FieldDescriptor, arity: usize, factors: Vec<LinearFactor>) -> Result<Self, ZerosError> {
        if factors.is_empty() {
            return Err(ZerosError::InvalidInput("no factors".into()));
        }
        for f in &factors {
            if f.linear.len() != arity {
                return Err(ZerosError::InvalidInput(format!("factor has {} coefficients, expected {arity}", f.linear.len())));
            }
            if f.linear.iter().chain([&f.constant]).any(|c| c.descriptor() != desc) {
                return Err(ZerosError::InvalidInput("factor over a different field".into()));
            }
        }
        Ok(FactoredPoly { desc, arity, factors })
    }

    pub fn expand(&self) -> Result<MultiPoly, ZerosError> {
        let mut out = MultiPoly::constant(FieldElement::one(self.desc), self.arity);
        for f in &self.factors {
            let mut l = MultiPoly::constant(f.constant.clone(), self.arity);
            for (i, a) in f.linear.iter().enumerate() {
                l = l.add(&MultiPoly::variable(self.desc, self.arity, i).scale(a)?)?;
            }
            out = out.mul(&l)?;
        }
        Ok(out)
    }

    /// Distance to the union of the factor hyperplanes.
    pub fn distance(&self, u: &[FieldElement]) -> Result<f64, ZerosError> {
        let mut d = f64::INFINITY;
        for f in &self.factors {
            d = d.min(f.distance(u)?);
        }
        Ok(d)
    }

    /// Smallest root norm of `z -> f(u + z x)`: each factor contributes the
    /// single root `-l(u) / <a, x>`, so no root finding is needed. The
    /// conventions match [`zero_free_slice_radius`].
    pub fn slice_radius(&self, u: &[FieldElement], x: &[FieldElement]) -> Result<f64, ZerosError> {
        let mut r = f64::INFINITY;
        for f in &self.factors {
            let c = f.evaluate(u)?;
            if c.is_zero() {
                return Ok(0.0);
            }
            let mut s = FieldElement::zero(self.desc);
            for (a, x) in f.linear.iter().zip(x) {
                s = s.add_flush(&a.mul(x)?)?;
            }
            if !s.is_zero() {
                r = r.min(c.norm().to_f64() / s.norm().to_f64());
            }
        }
        Ok(r)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "factors": self.factors.iter().map(|f| json!({
                "linear": f.linear.iter().map(element_to_json).collect::<Vec<_>>(),
                "const": element_to_json(&f.constant),
            })).collect::<Vec<_>>(),
        })
    }

    /// `{"factors": [{"linear": [...], "const": c}, ...]}`.
    pub fn from_json(desc: FieldDescriptor, v: &Value) -> Result<Self, ZerosError> {
        let bad = |m: &str| ZerosError::InvalidInput(m.to_string());
        let list = v.get("factors").and_then(Value::as_array).ok_or_else(|| bad("missing array \"factors\""))?;
        let mut factors = Vec::with_capacity(list.len());
        for f in list {
            let linear = f
                .get("linear")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("factor without \"linear\""))?
                .iter()
                .map(|c| element_from_json(desc, c))
                .collect::<Result<Vec<_>, _>>()?;
            let constant = match f.get("const") {
                Some(c) => element_from_json(desc, c)?,
                None => FieldElement::zero(desc),
            };
            factors.push(LinearFactor { linear, constant });
        }
        let arity = factors.first().map_or(0, |f| f.linear.len());
        Self::new(desc, arity, factors)
    }
}

/// A polynomial with or without a known linear factorization.
#[derive(Debug, Clone)]
pub enum PolyInput {
    Factored(FactoredPoly),
    Expanded(MultiPoly),
}

impl PolyInput {
    pub fn descriptor(&self) -> FieldDescriptor {
        match self {
            PolyInput::Factored(f) => f.desc,
            PolyInput::Expanded(p) => p.descriptor(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            PolyInput::Factored(f) => f.arity,
            PolyInput::Expanded(p) => p.arity(),
        }
    }

    pub fn expanded(&self) -> Result<MultiPoly, ZerosError> {
        match self {
            PolyInput::Factored(f) => f.expand(),
            PolyInput::Expanded(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZeroGeometryReport {
    pub u: Vec<FieldElement>,
    /// Smallest zero-free slice radius over the directions.
    pub s_u: f64,
    pub d_uz: f64,
    /// `d_uz / s_u`, taken as 1 when both agree (both 0 or both infinite).
    pub ratio: f64,
    pub directions_used: usize,
    /// `d_uz` comes from a factorization rather than sampling.
    pub exact: bool,
    /// Angular spacing of the fallback sample, when sampling was used.
    pub resolution: Option<f64>,
    pub worst_direction: usize,
    pub radii: Vec<f64>,
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else {
        json!(if x > 0.0 { "inf" } else { "-inf" })
    }
}

impl ZeroGeometryReport {
    pub fn to_json(&self) -> Value {
        json!({
            "u": self.u.iter().map(element_to_json).collect::<Vec<_>>(),
            "s_u": finite_or_null(self.s_u),
            "d_uZ": finite_or_null(self.d_uz),
            "ratio": finite_or_null(self.ratio),
            "directions_used": self.directions_used,
            "exact": self.exact,
            "not_factored": !self.exact,
            "resolution": self.resolution,
            "worst_direction": self.worst_direction,
            "radii": self.radii.iter().map(|r| finite_or_null(*r)).collect::<Vec<_>>(),
        })
    }
}

fn ratio(d: f64, s: f64) -> f64 {
    if d == s {
        1.0
    } else {
        d / s
    }
}

fn check_unit(x: &SamplePointSet, desc: FieldDescriptor, d: usize) -> Result<(), ZerosError> {
    if x.is_empty() {
        return Err(ZerosError::InvalidInput("empty direction set".into()));
    }
    if x.arity() != d {
        return Err(ZerosError::InvalidInput(format!("directions have arity {}, expected {d}", x.arity())));
    }
    for (i, v) in x.points().iter().enumerate() {
        let norms = v.iter().map(|c| c.norm().to_f64());
        let n = if desc.is_nonarchimedean() { norms.fold(0.0, f64::max) } else { norms.map(|t| t * t).sum::<f64>().sqrt() };
        if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(ZerosError::InvalidInput(format!("direction {i} has norm {n}, expected 1")));
        }
    }
    Ok(())
}

/// Index-ordered minimum, first index on ties.
fn argmin(radii: &[f64]) -> (usize, f64) {
    radii.iter().enumerate().fold((0, f64::INFINITY), |(bi, b), (i, &r)| if r < b { (i, r) } else { (bi, b) })
}

/// Evenly spread real unit directions: a half-circle grid in dimension 2,
/// Gaussian samples projected to the sphere otherwise. Also returns the
/// angular resolution.
fn fallback_directions(d: usize) -> (Vec<Vec<f64>>, f64) {
    if d == 1 {
        return (vec![vec![1.0]], 0.0);
    }
    if d == 2 {
        let n = FALLBACK_DIRECTIONS;
        let step = std::f64::consts::PI / n as f64;
        return ((0..n).map(|k| vec![(k as f64 * step).cos(), (k as f64 * step).sin()]).collect(), step);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
    let dirs: Vec<Vec<f64>> = (0..FALLBACK_DIRECTIONS)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.iter().map(|x| x / n).collect()
        })
        .collect();
    // covering radius of N random points on S^{d-1} scales like N^{-1/(d-1)}
    let res = (FALLBACK_DIRECTIONS as f64).powf(-1.0 / (d as f64 - 1.0)) * std::f64::consts::PI;
    (dirs, res)
}

/// Standard normal sample by Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Smallest |t| over real roots of `p(u + t x)` for real unit `x`.
fn real_root_distance(p: &MultiPoly, u: &[FieldElement], x: &[FieldElement]) -> Result<f64, ZerosError> {
    let slice = p.restrict_slice(u, x)?;
    if slice.is_zero() || slice.coeff(&[0]).is_zero() {
        return Ok(0.0);
    }
    let roots = arch_roots(&slice)?;
    Ok(roots
        .roots
        .iter()
        .filter(|z| z.im.abs() <= REAL_ROOT_TOLERANCE * z.norm().max(1.0))
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min))
}

/// Sampled distance to the zero set for a polynomial without a known
/// factorization.
fn sampled_distance(p: &MultiPoly, u: &[FieldElement], s_u: f64) -> Result<(f64, Option<f64>), ZerosError> {
    if p.descriptor() != FieldDescriptor::Real {
        // complex and nonarchimedean lines through u sweep the whole space,
        // so the slice radii over the given directions are the only estimate
        return Ok((s_u, None));
    }
    let (dirs, res) = fallback_directions(p.arity());
    let dists = dirs
        .par_iter()
        .map(|x| {
            let x: Vec<FieldElement> = x.iter().map(|&c| FieldElement::real(c)).collect();
            real_root_distance(p, u, &x)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((argmin(&dists).1.min(s_u), Some(res)))
}

/// Compares the zero-free slice radius over `directions` with the distance
/// from `u` to the zero set.
pub fn hyperbolic_distance_bound(p: &PolyInput, u: &[FieldElement], directions: &SamplePointSet) -> Result<ZeroGeometryReport, ZerosError> {
    let desc = p.descriptor();
    if u.len() != p.arity() {
        return Err(ZerosError::InvalidInput(format!("point has {} coordinates, expected {}", u.len(), p.arity())));
    }
    check_unit(directions, desc, p.arity())?;
    let radii = match p {
        PolyInput::Factored(f) => {
            if f.factors.iter().any(|l| l.constant.is_zero() && l.linear.iter().all(FieldElement::is_zero)) {
                return Err(ZerosError::ZeroPolynomial);
            }
            directions.points().par_iter().map(|x| f.slice_radius(u, x)).collect::<Result<Vec<_>, _>>()?
        }
        PolyInput::Expanded(q) => {
            if q.is_zero() {
                return Err(ZerosError::ZeroPolynomial);
            }
            directions.points().par_iter().map(|x| zero_free_slice_radius(q, u, x)).collect::<Result<Vec<_>, _>>()?
        }
    };
    let (worst_direction, s_u) = argmin(&radii);
    let (d_uz, exact, resolution) = match p {
        PolyInput::Factored(f) => (f.distance(u)?, true, None),
        PolyInput::Expanded(q) => {
            let (d, res) = sampled_distance(q, u, s_u)?;
            (d, false, res)
        }
    };
    Ok(ZeroGeometryReport {
        u: u.to_vec(),
        s_u,
        d_uz,
        ratio: ratio(d_uz, s_u),
        directions_used: radii.len(),
        exact,
        resolution,
        worst_direction,
        radii,
    })
}

#[derive(Debug, Clone)]
pub struct EmpiricalC {
    pub c: f64,
    pub binding_poly: usize,
    pub binding_point: usize,
    pub max_ratio: f64,
    pub instances: usize,
    /// Points lying on the zero set, where the ratio is uninformative.
    pub skipped: usize,
}

impl EmpiricalC {
    pub fn to_json(&self) -> Value {
        json!({
            "C": finite_or_null(self.c),
            "binding_poly": self.binding_poly,
            "binding_point": self.binding_point,
            "max_ratio": finite_or_null(self.max_ratio),
            "instances": self.instances,
            "skipped": self.skipped,
        })
    }
}

/// Minimum of `d(u, Z) / s_u` over a family of factored polynomials and a
/// list of points, with the instance attaining it.
pub fn empirical_c(family: &[FactoredPoly], points: &[Vec<FieldElement>], directions: &SamplePointSet) -> Result<EmpiricalC, ZerosError> {
    let jobs: Vec<(usize, usize)> = (0..family.len()).flat_map(|i| (0..points.len()).map(move |j| (i, j))).collect();
    let ratios = jobs
        .par_iter()
        .map(|&(i, j)| {
            let r = hyperbolic_distance_bound(&PolyInput::Factored(family[i].clone()), &points[j], directions)?;
            Ok(if r.d_uz == 0.0 { None } else { Some(r.ratio) })
        })
        .collect::<Result<Vec<_>, ZerosError>>()?;
    let mut out = EmpiricalC { c: f64::INFINITY, binding_poly: 0, binding_point: 0, max_ratio: 0.0, instances: 0, skipped: 0 };
    for (&(i, j), r) in jobs.iter().zip(&ratios) {
        match r {
            None => out.skipped += 1,
            Some(r) => {
                out.instances += 1;
                out.max_ratio = out.max_ratio.max(*r);
                if *r < out.c {
                    out.c = *r;
                    out.binding_poly = i;
                    out.binding_point = j;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: &[f64]) -> Vec<FieldElement> {
        x.iter().map(|&c| FieldElement::real(c)).collect()
    }

    fn circle(n: usize) -> SamplePointSet {
        SamplePointSet::new((0..n).map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            re(&[t.cos(), t.sin()])
        }).collect()).unwrap()
    }

    fn xy() -> FactoredPoly {
        let r = FieldDescriptor::Real;
        FactoredPoly::new(r, 2, vec![
            LinearFactor { linear: re(&[1.0, 0.0]), constant: FieldElement::zero(r) },
            LinearFactor { linear: re(&[0.0, 1.0]), constant: FieldElement::zero(r) },
        ]).unwrap()
    }

    #[test]
    fn slice_radius_examples() {
        let r = FieldDescriptor::Real;
        let x1 = MultiPoly::variable(r, 2, 0);
        assert!((zero_free_slice_radius(&x1, &re(&[1.0, 0.0]), &re(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(zero_free_slice_radius(&x1, &re(&[0.0, 1.0]), &re(&[1.0, 0.0])).unwrap(), 0.0);
        let p = xy().expand().unwrap();
        assert!((zero_free_slice_radius(&p, &re(&[1.0, 1.0]), &re(&[1.0, 1.0])).unwrap() - 1.0).abs() < 1e-6);
        // a direction along the kernel of x_1 leaves a constant slice factor
        assert_eq!(zero_free_slice_radius(&x1, &re(&[1.0, 0.0]), &re(&[0.0, 1.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn factored_radii_match_root_finding() {
        let f = FactoredPoly::new(
            FieldDescriptor::Real,
            2,
            vec![
                LinearFactor { linear: re(&[0.6, -0.8]), constant: FieldElement::real(0.3) },
                LinearFactor { linear: re(&[1.5, 0.2]), constant: FieldElement::real(-1.0) },
                LinearFactor { linear: re(&[0.0, 1.0]), constant: FieldElement::real(2.0) },
            ],
        )
        .unwrap();
        let q = f.expand().unwrap();
        for u in [[0.5, 0.5], [-2.0, 1.0], [3.0, -0.25]] {
            for x in circle(24).points() {
                let a = f.slice_radius(&re(&u), x).unwrap();
                let b = zero_free_slice_radius(&q, &re(&u), x).unwrap();
                assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
            }
        }
        // (-1/2, 0) lies on the first factor
        assert_eq!(f.slice_radius(&re(&[-0.5, 0.0]), &re(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn report_for_the_coordinate_cross() {
        let r = hyperbolic_distance_bound(&PolyInput::Factored(xy()), &re(&[1.0, 1.0]), &circle(360)).unwrap();
        assert!(r.exact);
        assert!((r.d_uz - 1.0).abs() < 1e-12);
        assert!((r.s_u - 1.0).abs() < 1e-9);
        assert!((r.ratio - 1.0).abs() < 1e-2);
        let on = hyperbolic_distance_bound(&PolyInput::Factored(xy()), &re(&[0.0, 3.0]), &circle(36)).unwrap();
        assert_eq!((on.s_u, on.d_uz), (0.0, 0.0));
        // one direction along the kernel of x_1: only x_2 has a slice root
        let one = SamplePointSet::new(vec![re(&[0.0, 1.0])]).unwrap();
        let r = hyperbolic_distance_bound(&PolyInput::Factored(xy()), &re(&[1.0, 2.0]), &one).unwrap();
        assert!((r.s_u - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_fallback_without_factorization() {
        let p = PolyInput::Expanded(xy().expand().unwrap());
        let r = hyperbolic_distance_bound(&p, &re(&[1.0, 2.0]), &circle(360)).unwrap();
        assert!(!r.exact);
        assert!(r.resolution.is_some());
        assert!((r.d_uz - 1.0).abs() < 1e-6);
        assert_eq!(r.to_json()["not_factored"], true);
    }

    #[test]
    fn rejects_non_unit_directions() {
        let x = SamplePointSet::new(vec![re(&[1.0, 1.0])]).unwrap();
        assert!(matches!(hyperbolic_distance_bound(&PolyInput::Factored(xy()), &re(&[1.0, 1.0]), &x), Err(ZerosError::InvalidInput(_))));
    }

    #[test]
    fn factored_json_round_trip() {
        let f = xy();
        let back = FactoredPoly::from_json(FieldDescriptor::Real, &f.to_json()).unwrap();
        assert_eq!(back, f);
    }
}
