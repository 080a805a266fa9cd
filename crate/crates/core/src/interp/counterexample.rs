//! The family `q_n = ((z - 3 z^3) / 2)^n`: bounded by 1 on `[-1, 1]` and on
//! `Z_2`, while the `z^{3n}` coefficient grows like `(3/2)^n` and `2^n`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::InterpError;
use crate::field::{pow_rational, FieldDescriptor, FieldElement};
use crate::poly::MultiPoly;

pub const SUP_GRID_POINTS: usize = 4096;
pub const TWO_ADIC_RESIDUE_BITS: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleRecord {
    pub n: u32,
    pub coeff_z3n: BigRational,
    /// `|coeff_z3n|`.
    pub real_norm: BigRational,
    /// `|coeff_z3n|_2`.
    pub two_adic_norm: BigRational,
    /// Largest `|q_n|` on the real grid, computed exactly.
    pub real_sup: BigRational,
    /// Largest `|q_n|_2` over the residue representatives.
    pub two_adic_sup: BigRational,
    pub sampled_sup: f64,
    /// Full coefficient norms `sum |c|` and `sum |c|_2`.
    pub real_coeff_norm: BigRational,
    pub two_adic_coeff_norm: BigRational,
}

impl CounterexampleRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "coeff_z3n": self.coeff_z3n.to_string(),
            "real_norm": self.real_norm.to_string(),
            "two_adic_norm": self.two_adic_norm.to_string(),
            "sampled_sup": self.sampled_sup,
            "real_sup": self.real_sup.to_string(),
            "two_adic_sup": self.two_adic_sup.to_string(),
            "real_coeff_norm": self.real_coeff_norm.to_string(),
            "two_adic_coeff_norm": self.two_adic_coeff_norm.to_string(),
        })
    }
}

/// `q_n` expanded over `Q` with the absolute value.
pub fn counterexample_poly(n: u32) -> MultiPoly {
    let desc = FieldDescriptor::rational();
    let half = BigRational::new(1.into(), 2.into());
    let h = MultiPoly::univariate(
        desc,
        &[
            FieldElement::from_i64(desc, 0),
            FieldElement::rational(desc, half.clone()).expect("rational field"),
            FieldElement::from_i64(desc, 0),
            FieldElement::rational(desc, -half * BigRational::from_integer(3.into())).expect("rational field"),
        ],
    )
    .expect("four coefficients");
    h.pow(n).expect("exact arithmetic")
}

fn v2(x: &BigInt) -> u64 {
    x.trailing_zeros().unwrap_or(u64::MAX)
}

fn two_adic_abs(q: &BigRational) -> BigRational {
    if q.is_zero() {
        return BigRational::zero();
    }
    let v = v2(q.numer()) as i64 - v2(q.denom()) as i64;
    pow_rational(2, -v)
}

/// Integer coefficients of `2^n q_n`, lowest degree first.
fn scaled_coeffs(q: &MultiPoly, n: u32) -> Vec<BigInt> {
    let scale = BigRational::from_integer(BigInt::one() << n as usize);
    q.univariate_coeffs()
        .iter()
        .map(|c| {
            let v = c.to_rational().expect("rational coefficient") * &scale;
            debug_assert!(v.is_integer());
            v.to_integer()
        })
        .collect()
}

/// `sum_k P_k a^k b^{deg-k}` by Horner over precomputed `P_k b^{deg-k}`.
fn homogeneous_horner(terms: &[BigInt], a: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for t in terms.iter().rev() {
        acc = acc * a + t;
    }
    acc
}

pub fn counterexample_family(n: u32) -> Result<CounterexampleRecord, InterpError> {
    counterexample_family_with(n, SUP_GRID_POINTS, TWO_ADIC_RESIDUE_BITS)
}

/// As [`counterexample_family`], with the real grid `z_j = -1 + 2j/(grid-1)`
/// and residues `0..2^bits` as the `Z_2` sample.
pub fn counterexample_family_with(n: u32, grid: usize, bits: u32) -> Result<CounterexampleRecord, InterpError> {
    if n == 0 {
        return Err(InterpError::InvalidParameter("power must be at least 1".into()));
    }
    if grid < 2 || bits == 0 || bits > 24 {
        return Err(InterpError::InvalidParameter("grid needs >= 2 points, bits in 1..=24".into()));
    }
    let q = counterexample_poly(n);
    let coeffs = q.univariate_coeffs();
    let top = coeffs.get(3 * n as usize).and_then(|c| c.to_rational()).expect("degree 3n");
    let real_coeff_norm = coeffs.iter().map(|c| c.to_rational().expect("rational").abs()).fold(BigRational::zero(), |a, b| a + b);
    let two_adic_coeff_norm = coeffs
        .iter()
        .map(|c| two_adic_abs(&c.to_rational().expect("rational")))
        .fold(BigRational::zero(), |a, b| a + b);

    let p = scaled_coeffs(&q, n);
    let deg = p.len() - 1;
    let scale = BigInt::one() << n as usize;

    // real grid: z = a/b with b = grid - 1, exact
    let b = BigInt::from(grid as u64 - 1);
    let b_pows: Vec<BigInt> = std::iter::successors(Some(BigInt::one()), |x| Some(x * &b)).take(deg + 1).collect();
    let terms: Vec<BigInt> = p.iter().enumerate().map(|(k, c)| c * &b_pows[deg - k]).collect();
    let best_num = (0..grid)
        .into_par_iter()
        .map(|j| homogeneous_horner(&terms, &BigInt::from(2 * j as i64 - (grid as i64 - 1))).abs())
        .max()
        .expect("nonempty grid");
    let real_sup = BigRational::new(best_num, &b_pows[deg] * &scale);

    // Z_2: |q_n(a)|_2 = 2^{n - v2(P(a))}; residues fix the value mod 2^bits
    let two_adic_v = (0..1u64 << bits)
        .into_par_iter()
        .filter_map(|a| {
            let v = homogeneous_horner(&p, &BigInt::from(a));
            (!v.is_zero()).then(|| v2(&v))
        })
        .min();
    let two_adic_sup = match two_adic_v {
        Some(v) => pow_rational(2, n as i64 - v as i64),
        None => BigRational::zero(),
    };
    let sampled_sup = crate::field::rational_to_f64(&real_sup).max(crate::field::rational_to_f64(&two_adic_sup));

    Ok(CounterexampleRecord {
        n,
        real_norm: top.abs(),
        two_adic_norm: two_adic_abs(&top),
        coeff_z3n: top,
        real_sup,
        two_adic_sup,
        sampled_sup,
        real_coeff_norm,
        two_adic_coeff_norm,
    })
}

/// Exact evidence that the family admits no envelope `A B^n` with `B` below
/// `3/2` (real) or `2` (2-adic) as the power `n` grows.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleCertificate {
    pub max_n: u32,
    /// `|coeff_z3n| / sup` per power, real then 2-adic.
    pub real_ratios: Vec<BigRational>,
    pub two_adic_ratios: Vec<BigRational>,
    /// `ratio_n >= threshold^n` for every `n`.
    pub real_exceeds: bool,
    pub two_adic_exceeds: bool,
    /// Slope of the ratio envelope against the power and against the degree `3n`.
    pub real_b_per_power: f64,
    pub two_adic_b_per_power: f64,
    pub real_b_per_degree: f64,
    pub two_adic_b_per_degree: f64,
}

impl CounterexampleCertificate {
    pub const REAL_THRESHOLD: (i64, i64) = (3, 2);
    pub const TWO_ADIC_THRESHOLD: (i64, i64) = (2, 1);

    /// Smallest `A` making `ratio_n <= A B^n` for all recorded powers; it
    /// grows like `(threshold / B)^{max_n}` when `B` is below the threshold.
    pub fn required_a(&self, b: f64, two_adic: bool) -> f64 {
        let ratios = if two_adic { &self.two_adic_ratios } else { &self.real_ratios };
        ratios
            .iter()
            .enumerate()
            .map(|(i, r)| (crate::field::rational_ln(r) - (i + 1) as f64 * b.ln()).exp())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "max_n": self.max_n,
            "real_exceeds_threshold": self.real_exceeds,
            "two_adic_exceeds_threshold": self.two_adic_exceeds,
            "real_B_per_power": self.real_b_per_power,
            "two_adic_B_per_power": self.two_adic_b_per_power,
            "real_B_per_degree": self.real_b_per_degree,
            "two_adic_B_per_degree": self.two_adic_b_per_degree,
        })
    }
}

/// Certificate over powers `1..=max_n`. Sup norms come from the `n = 1`
/// sample: `max |q_1|^n = max |q_n|` pointwise, so the powers need no
/// separate evaluation.
pub fn counterexample_certificate(max_n: u32) -> Result<CounterexampleCertificate, InterpError> {
    if max_n == 0 {
        return Err(InterpError::InvalidParameter("max_n must be at least 1".into()));
    }
    let base = counterexample_family(1)?;
    let mut real_ratios = Vec::new();
    let mut two_adic_ratios = Vec::new();
    let (mut real_ok, mut two_ok) = (true, true);
    let thr = |(a, b): (i64, i64)| BigRational::new(a.into(), b.into());
    for n in 1..=max_n {
        let top = counterexample_poly(n).univariate_coeffs()[3 * n as usize].to_rational().expect("rational");
        let rr = top.abs() / (&base.real_sup).pow(n as i32);
        let tr = two_adic_abs(&top) / (&base.two_adic_sup).pow(n as i32);
        real_ok &= rr >= thr(CounterexampleCertificate::REAL_THRESHOLD).pow(n as i32);
        two_ok &= tr >= thr(CounterexampleCertificate::TWO_ADIC_THRESHOLD).pow(n as i32);
        real_ratios.push(rr);
        two_adic_ratios.push(tr);
    }
    let fit = |rs: &[BigRational], step: f64| {
        let pts: Vec<(f64, f64)> = rs.iter().enumerate().map(|(i, r)| ((i + 1) as f64 * step, crate::field::rational_ln(r))).collect();
        super::envelope_fit(&pts).1.exp()
    };
    Ok(CounterexampleCertificate {
        max_n,
        real_exceeds: real_ok,
        two_adic_exceeds: two_ok,
        real_b_per_power: fit(&real_ratios, 1.0),
        two_adic_b_per_power: fit(&two_adic_ratios, 1.0),
        real_b_per_degree: fit(&real_ratios, 3.0),
        two_adic_b_per_degree: fit(&two_adic_ratios, 3.0),
        real_ratios,
        two_adic_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn first_power() {
        let rec = counterexample_family(1).unwrap();
        assert_eq!(rec.coeff_z3n, r(-3, 2));
        assert_eq!(rec.real_norm, r(3, 2));
        assert_eq!(rec.two_adic_norm, r(2, 1));
        assert_eq!(rec.real_sup, r(1, 1));
        assert_eq!(rec.two_adic_sup, r(1, 1));
        assert_eq!(rec.real_coeff_norm, r(2, 1));
        assert_eq!(rec.two_adic_coeff_norm, r(4, 1));
    }

    #[test]
    fn fifth_power() {
        let rec = counterexample_family(5).unwrap();
        assert_eq!(rec.real_norm, r(243, 32));
        assert_eq!(rec.two_adic_norm, r(32, 1));
        assert!((rec.sampled_sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_small() {
        let c = counterexample_certificate(8).unwrap();
        assert!(c.real_exceeds && c.two_adic_exceeds);
        assert!((c.real_b_per_power - 1.5).abs() < 1e-12);
        assert!((c.two_adic_b_per_power - 2.0).abs() < 1e-12);
        assert!(c.required_a(1.2, false) > 1.0);
        assert!(c.required_a(1.5, false) <= 1.0 + 1e-12);
        assert_eq!(c.real_ratios.len(), 8);
    }

    #[test]
    fn rejects_zero_power() {
        assert!(counterexample_family(0).is_err());
    }

    #[test]
    fn odd_residue_is_a_unit() {
        let rec = counterexample_family_with(3, 16, 4).unwrap();
        assert_eq!(rec.two_adic_sup, r(1, 1));
    }
}
