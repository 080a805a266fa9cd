//! Bitstrings, the Cantor space metric and measure, and spread embeddings
//! of Cantor space into the supported fields.
//!
//! A bitstring `b_1 b_2 ... b_n` is read as a branch padded with zeros. Two
//! branches first disagreeing at 0-based index `n` are `2^{-n}` apart.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{
    uniformizer_power, FieldDescriptor, FieldElement, FieldError, NormValue, RationalNorm,
    Valuation,
};

/// Deepest level at which spread constants are verified over every pair.
pub const EXHAUSTIVE_DEPTH: usize = 12;
/// Pair count for sampled verification beyond [`EXHAUSTIVE_DEPTH`].
pub const SAMPLED_PAIRS: usize = 100_000;
const SAMPLE_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CantorError {
    #[error("bitstring of length {len} exceeds truncation depth {depth}")]
    DepthExceeded { len: usize, depth: usize },
    #[error("invalid base: {0}")]
    InvalidBase(String),
    #[error("embedding is not injective: {0} and {1} have the same image")]
    NotInjective(BitString, BitString),
    #[error("scheme does not fit field: {0}")]
    SchemeMismatch(String),
    #[error("invalid bitstring {0:?}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The `len` low bits of `n`, most significant first.
    pub fn from_index(n: u64, len: usize) -> Self {
        BitString {
            bits: (0..len).rev().map(|i| (n >> i) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bit at 0-based position `i`, zero past the end.
    pub fn bit(&self, i: usize) -> bool {
        self.bits.get(i).copied().unwrap_or(false)
    }

    pub fn child(&self, b: bool) -> BitString {
        let mut bits = self.bits.clone();
        bits.push(b);
        BitString { bits }
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// All bitstrings of length `n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = BitString> {
        (0..1u64 << n).map(move |i| BitString::from_index(i, n))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = CantorError;

    fn from_str(s: &str) -> Result<Self, CantorError> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CantorError::Parse(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString::new)
    }
}

/// 0-based index of the first disagreement of the zero-padded branches.
pub fn first_disagreement(a: &BitString, b: &BitString) -> Option<usize> {
    (0..a.len().max(b.len())).find(|&i| a.bit(i) != b.bit(i))
}

/// `2^{-n}` with `n` the first disagreement, `0` for equal branches.
pub fn cantor_distance(a: &BitString, b: &BitString) -> f64 {
    match first_disagreement(a, b) {
        Some(n) => 0.5f64.powi(n as i32),
        None => 0.0,
    }
}

/// Natural measure `2^{-len}` of the cylinder above `prefix`.
pub fn cylinder_measure(prefix: &BitString) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << prefix.len())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpreadScheme {
    /// `sum 2 b_i 3^{-i}` into the middle-thirds Cantor set.
    MiddleThirdsReal,
    /// `sum b_i q^i` for a base with `|q| < 1/2`.
    PadicBinary(FieldElement),
    /// `sum b_i p^{i/k}` in `Q_p(p^{1/k})`.
    Spk { p: u64, k: u32 },
    /// `sum b_i c_i` for the listed coefficients `c_1, c_2, ...`.
    Custom(Vec<FieldElement>),
}

/// A map from bitstrings of bounded length into a field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadEmbedding {
    descriptor: FieldDescriptor,
    scheme: SpreadScheme,
    depth: usize,
    coeffs: Vec<FieldElement>,
}

fn below_half(n: &NormValue) -> bool {
    match n {
        NormValue::Float(x) => *x < 0.5,
        NormValue::Exact(q) => q * BigRational::from_integer(2.into()) < BigRational::one(),
        NormValue::Valuation { base, v } => match v {
            Valuation::Infinite => true,
            Valuation::Finite(r) => {
                // p^{-a/b} < 1/2  iff  p^a > 2^b
                let (a, b) = (*r.numer(), *r.denom());
                a > 0 && BigInt::from(*base).pow(a as u32) > (BigInt::one() << b as usize)
            }
        },
    }
}

impl SpreadEmbedding {
    pub fn new(
        descriptor: FieldDescriptor,
        scheme: SpreadScheme,
        depth: usize,
    ) -> Result<Self, CantorError> {
        let coeffs: Vec<FieldElement> = match &scheme {
            SpreadScheme::MiddleThirdsReal => {
                let ok = matches!(
                    descriptor,
                    FieldDescriptor::Real
                        | FieldDescriptor::ExactRational {
                            norm: RationalNorm::Absolute
                        }
                );
                if !ok {
                    return Err(CantorError::SchemeMismatch(format!(
                        "middle thirds needs the real absolute value, got {descriptor}"
                    )));
                }
                (1..=depth)
                    .map(|i| {
                        let q = BigRational::new(2.into(), BigInt::from(3).pow(i as u32));
                        FieldElement::from_rational(descriptor, &q)
                    })
                    .collect()
            }
            SpreadScheme::PadicBinary(q) => {
                if q.descriptor() != descriptor {
                    return Err(CantorError::SchemeMismatch(format!(
                        "base lives in {}, embedding targets {descriptor}",
                        q.descriptor()
                    )));
                }
                if q.is_zero() || !below_half(&q.norm()) {
                    return Err(CantorError::InvalidBase(format!("need 0 < |q| < 1/2, |q| = {}", q.norm())));
                }
                (1..=depth).map(|i| q.pow(i as u32)).collect()
            }
            SpreadScheme::Spk { p, k } => {
                if descriptor.prime() != Some(*p)
                    || descriptor.ramification() != *k
                    || !descriptor.is_padic()
                {
                    return Err(CantorError::SchemeMismatch(format!(
                        "S_(p={p},k={k}) needs the matching p-adic field, got {descriptor}"
                    )));
                }
                (1..=depth)
                    .map(|i| uniformizer_power(descriptor, i as i64))
                    .collect::<Result<_, _>>()?
            }
            SpreadScheme::Custom(cs) => {
                if cs.len() < depth {
                    return Err(CantorError::SchemeMismatch(format!(
                        "{} coefficients for depth {depth}",
                        cs.len()
                    )));
                }
                if let Some(c) = cs.iter().find(|c| c.descriptor() != descriptor) {
                    return Err(CantorError::SchemeMismatch(format!(
                        "coefficient in {} for {descriptor}",
                        c.descriptor()
                    )));
                }
                cs[..depth].to_vec()
            }
        };
        Ok(SpreadEmbedding {
            descriptor,
            scheme,
            depth,
            coeffs,
        })
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        self.descriptor
    }

    pub fn scheme(&self) -> &SpreadScheme {
        &self.scheme
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Image of a bitstring: `sum_{i=1}^{len} b_i c_i`.
    pub fn embed(&self, b: &BitString) -> Result<FieldElement, CantorError> {
        if b.len() > self.depth {
            return Err(CantorError::DepthExceeded {
                len: b.len(),
                depth: self.depth,
            });
        }
        let mut acc = FieldElement::zero(self.descriptor);
        for (i, &bit) in b.bits().iter().enumerate() {
            if bit {
                acc = acc.add_flush(&self.coeffs[i])?;
            }
        }
        Ok(acc)
    }

    /// `iota(a) - iota(b)` summed from the differing bits only.
    fn difference(&self, a: &BitString, b: &BitString) -> Result<FieldElement, CantorError> {
        let mut acc = FieldElement::zero(self.descriptor);
        for i in 0..a.len().max(b.len()) {
            match (a.bit(i), b.bit(i)) {
                (true, false) => acc = acc.add_flush(&self.coeffs[i])?,
                (false, true) => acc = acc.sub_flush(&self.coeffs[i])?,
                _ => {}
            }
        }
        Ok(acc)
    }

    /// Known exponent and constant valid at every depth, if the scheme has them.
    fn analytic_constants(&self) -> Option<(f64, f64)> {
        match &self.scheme {
            SpreadScheme::MiddleThirdsReal => Some((1.0 / 3.0, 3f64.log2())),
            SpreadScheme::Spk { p, k } => {
                let pk = (*p as f64).powf(1.0 / *k as f64);
                Some((1.0 / pk, pk.log2()))
            }
            SpreadScheme::PadicBinary(q) => {
                let a = q.norm().to_f64();
                let c = if self.descriptor.is_nonarchimedean() {
                    a
                } else {
                    // |1 + sum_{j>=1} e_j q^j| >= 1 - |q|/(1-|q|)
                    a * (1.0 - 2.0 * a) / (1.0 - a)
                };
                Some((c, -a.log2()))
            }
            SpreadScheme::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerificationMode {
    Exhaustive,
    Sampled { pairs: usize, seed: u64 },
}

/// Constants `(C, gamma)` with `d(iota x, iota y) >= C d(x,y)^gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadEstimate {
    pub c: f64,
    pub gamma: f64,
    pub depth: usize,
    /// Smallest `d(iota x, iota y) / d(x,y)^gamma` among examined pairs.
    pub min_ratio: f64,
    /// Pair attaining `min_ratio`.
    pub worst_pair: (BitString, BitString),
    pub mode: VerificationMode,
    /// Whether `c` comes from a closed form rather than the examined pairs.
    pub analytic: bool,
}

impl SpreadEstimate {
    /// Checks the spread inequality on one pair, allowing `1e-12` relative slack
    /// for binary64 rounding.
    pub fn holds(&self, e: &SpreadEmbedding, a: &BitString, b: &BitString) -> Result<bool, CantorError> {
        let Some(n) = first_disagreement(a, b) else {
            return Ok(true);
        };
        let lhs = e.difference(a, b)?.norm().ln();
        let rhs = self.c.ln() - self.gamma * (n as f64) * std::f64::consts::LN_2;
        Ok(lhs >= rhs - 1e-12)
    }
}

/// One difference pattern: `-ln d(x,y)`, `iota(x) - iota(y)` and the signs.
struct PatternVisit<'a> {
    log_dist: f64,
    diff: &'a FieldElement,
    pattern: &'a [i8],
}

/// Every difference pattern `x - y` in `{-1,0,1}^depth` whose first nonzero is
/// `+1`. Together with the `+-` symmetry this covers every pair at `depth`.
fn for_each_pattern<F>(e: &SpreadEmbedding, depth: usize, f: &mut F) -> Result<(), CantorError>
where
    F: FnMut(PatternVisit<'_>) -> Result<(), CantorError>,
{
    fn rec<F>(
        e: &SpreadEmbedding,
        depth: usize,
        pos: usize,
        log_dist: f64,
        acc: &FieldElement,
        pattern: &mut Vec<i8>,
        f: &mut F,
    ) -> Result<(), CantorError>
    where
        F: FnMut(PatternVisit<'_>) -> Result<(), CantorError>,
    {
        if pos == depth {
            return f(PatternVisit {
                log_dist,
                diff: acc,
                pattern,
            });
        }
        for s in [0i8, 1, -1] {
            let next = match s {
                0 => acc.clone(),
                1 => acc.add_flush(&e.coeffs[pos])?,
                _ => acc.sub_flush(&e.coeffs[pos])?,
            };
            pattern.push(s);
            rec(e, depth, pos + 1, log_dist, &next, pattern, f)?;
            pattern.pop();
        }
        Ok(())
    }
    for first in 0..depth {
        let mut pattern = vec![0i8; first];
        pattern.push(1);
        let log_dist = -(first as f64) * std::f64::consts::LN_2;
        rec(e, depth, first + 1, log_dist, &e.coeffs[first], &mut pattern, f)?;
    }
    Ok(())
}

fn pair_from_pattern(pattern: &[i8]) -> (BitString, BitString) {
    (
        BitString::new(pattern.iter().map(|&s| s == 1).collect()),
        BitString::new(pattern.iter().map(|&s| s == -1).collect()),
    )
}

/// Weighted least-squares slope of `-ln d(iota)` against `-ln d` over every
/// pair at `depth`.
fn fit_gamma(e: &SpreadEmbedding, depth: usize) -> Result<f64, CantorError> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for_each_pattern(e, depth, &mut |v| {
        if v.diff.is_zero() {
            let (a, b) = pair_from_pattern(v.pattern);
            return Err(CantorError::NotInjective(a, b));
        }
        // A pattern with z zeros stands for 2^z pairs.
        let zeros = v.pattern.iter().filter(|&&s| s == 0).count();
        let w = (zeros as f64).exp2();
        let (x, y) = (-v.log_dist, -v.diff.norm().ln());
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
        Ok(())
    })?;
    let var = sxx - sx * sx / sw;
    if var <= 0.0 {
        return Err(CantorError::SchemeMismatch("depth too small to fit an exponent".into()));
    }
    let gamma = (sxy - sx * sy / sw) / var;
    if !(gamma > 0.0) {
        return Err(CantorError::SchemeMismatch(format!("fitted exponent {gamma} is not positive")));
    }
    Ok(gamma)
}

/// Estimates spread constants at `depth`.
///
/// Up to [`EXHAUSTIVE_DEPTH`] every pair is examined; beyond it
/// [`SAMPLED_PAIRS`] seeded random pairs are. Schemes with a closed form report
/// its `(C, gamma)`; `Custom` schemes use a fitted `gamma` and `C = min_ratio`.
pub fn estimate_spread_constants(e: &SpreadEmbedding, depth: usize) -> Result<SpreadEstimate, CantorError> {
    if depth < 2 {
        return Err(CantorError::SchemeMismatch("verification depth must be at least 2".into()));
    }
    if depth > e.depth {
        return Err(CantorError::DepthExceeded {
            len: depth,
            depth: e.depth,
        });
    }
    let analytic = e.analytic_constants();
    let gamma = match analytic {
        Some((_, g)) => g,
        None => fit_gamma(e, depth.min(EXHAUSTIVE_DEPTH))?,
    };
    let mut best = f64::INFINITY;
    let mut worst: Option<(BitString, BitString)> = None;
    let mode;
    if depth <= EXHAUSTIVE_DEPTH {
        mode = VerificationMode::Exhaustive;
        for_each_pattern(e, depth, &mut |v| {
            if v.diff.is_zero() {
                let (a, b) = pair_from_pattern(v.pattern);
                return Err(CantorError::NotInjective(a, b));
            }
            let r = v.diff.norm().ln() - gamma * v.log_dist;
            if r < best {
                best = r;
                worst = Some(pair_from_pattern(v.pattern));
            }
            Ok(())
        })?;
    } else {
        mode = VerificationMode::Sampled {
            pairs: SAMPLED_PAIRS,
            seed: SAMPLE_SEED,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        for _ in 0..SAMPLED_PAIRS {
            let a = BitString::new((0..depth).map(|_| rng.gen()).collect());
            let b = BitString::new((0..depth).map(|_| rng.gen()).collect());
            let Some(n) = first_disagreement(&a, &b) else {
                continue;
            };
            let diff = e.difference(&a, &b)?;
            if diff.is_zero() {
                return Err(CantorError::NotInjective(a, b));
            }
            let r = diff.norm().ln() + gamma * n as f64 * std::f64::consts::LN_2;
            if r < best {
                best = r;
                worst = Some((a, b));
            }
        }
    }
    let min_ratio = best.exp();
    let c = analytic.map_or(min_ratio, |(c, _)| c);
    Ok(SpreadEstimate {
        c,
        gamma,
        depth,
        min_ratio,
        worst_pair: worst.unwrap_or_default(),
        mode,
        analytic: analytic.is_some(),
    })
}

/// Cylinder-counting estimate of the outer measure of `member` pulled back
/// through `embeddings` (one per coordinate). Each depth-`depth` cylinder is
/// represented by its all-zeros extension.
pub fn outer_measure<F>(
    member: F,
    embeddings: &[SpreadEmbedding],
    depth: usize,
) -> Result<BigRational, CantorError>
where
    F: Fn(&[FieldElement]) -> bool,
{
    let d = embeddings.len();
    let images: Vec<Vec<FieldElement>> = embeddings
        .iter()
        .map(|e| BitString::all(depth).map(|b| e.embed(&b)).collect())
        .collect::<Result<_, _>>()?;
    let per_axis = 1usize << depth;
    let mut count = BigInt::zero();
    let mut idx = vec![0usize; d];
    let mut point: Vec<FieldElement> = images.iter().map(|im| im[0].clone()).collect();
    loop {
        if member(&point) {
            count += 1;
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return Ok(BigRational::new(count, BigInt::one() << (d * depth)));
            }
            idx[axis] += 1;
            if idx[axis] < per_axis {
                point[axis] = images[axis][idx[axis]].clone();
                break;
            }
            idx[axis] = 0;
            point[axis] = images[axis][0].clone();
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(cantor_distance(&bs("101"), &bs("101")), 0.0);
        assert_eq!(cantor_distance(&bs("101"), &bs("100")), 0.25);
        assert_eq!(cantor_distance(&bs("0"), &bs("1")), 1.0);
        assert_eq!(cantor_distance(&bs("10"), &bs("1000")), 0.0);
    }

    #[test]
    fn measures() {
        assert!(cylinder_measure(&BitString::empty()).is_one());
        assert_eq!(cylinder_measure(&bs("010")), BigRational::new(1.into(), 8.into()));
        let a = bs("11");
        assert_eq!(
            cylinder_measure(&a.child(false)) + cylinder_measure(&a.child(true)),
            cylinder_measure(&a)
        );
    }

    #[test]
    fn embed_examples() {
        let e = SpreadEmbedding::new(FieldDescriptor::rational(), SpreadScheme::MiddleThirdsReal, 8).unwrap();
        let x = e.embed(&bs("1000")).unwrap();
        assert_eq!(x.as_rational().unwrap(), &BigRational::new(2.into(), 3.into()));
        assert!(e.embed(&bs("0000")).unwrap().is_zero());

        let q2 = FieldDescriptor::padic(2, 32).unwrap();
        let four = FieldElement::from_i64(q2, 4);
        let e = SpreadEmbedding::new(q2, SpreadScheme::PadicBinary(four), 8).unwrap();
        assert_eq!(e.embed(&bs("11")).unwrap(), FieldElement::from_i64(q2, 20));
        assert!(matches!(
            e.embed(&bs("000000000")),
            Err(CantorError::DepthExceeded { len: 9, depth: 8 })
        ));
    }

    #[test]
    fn base_must_be_small() {
        let q2 = FieldDescriptor::padic(2, 32).unwrap();
        for n in [1, 2, 3] {
            let r = SpreadEmbedding::new(q2, SpreadScheme::PadicBinary(FieldElement::from_i64(q2, n)), 4);
            assert!(matches!(r, Err(CantorError::InvalidBase(_))), "q = {n}");
        }
        let r = SpreadEmbedding::new(FieldDescriptor::Real, SpreadScheme::PadicBinary(FieldElement::real(0.5)), 4);
        assert!(matches!(r, Err(CantorError::InvalidBase(_))));
        let ram = FieldDescriptor::ramified(2, 2, 16).unwrap();
        let pi = uniformizer_power(ram, 1).unwrap();
        assert!(SpreadEmbedding::new(ram, SpreadScheme::PadicBinary(pi.clone()), 4).is_err());
        assert!(SpreadEmbedding::new(ram, SpreadScheme::PadicBinary(pi.pow(3)), 4).is_ok());
    }

    #[test]
    fn spk_constants_are_exact() {
        let d = FieldDescriptor::ramified(3, 2, 16).unwrap();
        let e = SpreadEmbedding::new(d, SpreadScheme::Spk { p: 3, k: 2 }, 10).unwrap();
        let est = estimate_spread_constants(&e, 10).unwrap();
        assert!((est.gamma - 3f64.log2() / 2.0).abs() < 1e-15);
        assert!((est.min_ratio - 3f64.powf(-0.5)).abs() < 1e-12);
        assert_eq!(est.mode, VerificationMode::Exhaustive);
    }

    #[test]
    fn duplicate_custom_is_not_injective() {
        let d = FieldDescriptor::rational();
        let c = FieldElement::from_i64(d, 1);
        let e = SpreadEmbedding::new(d, SpreadScheme::Custom(vec![c.clone(), c.clone(), c]), 3).unwrap();
        assert!(matches!(estimate_spread_constants(&e, 3), Err(CantorError::NotInjective(..))));
    }

    #[test]
    fn custom_geometric_fits_its_exponent() {
        let d = FieldDescriptor::rational_padic(5).unwrap();
        let cs: Vec<_> = (1..=8).map(|i| FieldElement::from_i64(d, 5i64.pow(i))).collect();
        let e = SpreadEmbedding::new(d, SpreadScheme::Custom(cs), 8).unwrap();
        let est = estimate_spread_constants(&e, 8).unwrap();
        assert!((est.gamma - 5f64.log2()).abs() < 1e-9);
        assert!((est.c - 0.2).abs() < 1e-9);
        assert!(!est.analytic);
    }

    #[test]
    fn outer_measure_examples() {
        let e = SpreadEmbedding::new(FieldDescriptor::Real, SpreadScheme::MiddleThirdsReal, 6).unwrap();
        let all = outer_measure(|_| true, &[e.clone(), e.clone()], 4).unwrap();
        assert!(all.is_one());
        let left = outer_measure(|x| x[0].as_f64().unwrap() < 0.5, &[e.clone()], 5).unwrap();
        assert_eq!(left, BigRational::new(1.into(), 2.into()));
        for depth in 1..6 {
            let point = outer_measure(|x| x[0].is_zero(), &[e.clone()], depth).unwrap();
            assert_eq!(point, BigRational::new(1.into(), BigInt::one() << depth));
        }
    }
}
