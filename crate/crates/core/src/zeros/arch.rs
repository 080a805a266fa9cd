//! All complex roots by Aberth-Ehrlich iteration.

use num_complex::Complex64;
use serde_json::{json, Value};

use super::{univariate, ZerosError};
use crate::field::{FieldDescriptor, RationalNorm};
use crate::poly::MultiPoly;

/// Per-root bound on `|q(r)| / sum |c_k| |r|^k`.
pub const BACKWARD_ERROR_TOLERANCE: f64 = 1e-10;

const MAX_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchRoots {
    /// Nonzero roots; the root 0 is only counted in `zero_roots`.
    pub roots: Vec<Complex64>,
    pub zero_roots: usize,
    pub backward_errors: Vec<f64>,
    pub iterations: usize,
}

impl ArchRoots {
    pub fn min_modulus(&self) -> f64 {
        if self.zero_roots > 0 {
            return 0.0;
        }
        self.roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "roots": self.roots.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
            "zero_roots": self.zero_roots,
            "max_backward_error": self.backward_errors.iter().cloned().fold(0.0, f64::max),
            "iterations": self.iterations,
        })
    }
}

fn complex_coeffs(q: &MultiPoly) -> Result<Vec<Complex64>, ZerosError> {
    match q.descriptor() {
        FieldDescriptor::Real | FieldDescriptor::Complex | FieldDescriptor::ExactRational { norm: RationalNorm::Absolute } => {}
        other => return Err(ZerosError::Unsupported(other)),
    }
    Ok(univariate(q)?.iter().map(|c| c.as_complex().expect("archimedean coefficient")).collect())
}

fn eval_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for k in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + k;
    }
    (p, dp)
}

pub(crate) fn backward_error(c: &[Complex64], z: Complex64) -> f64 {
    let (p, _) = eval_with_derivative(c, z);
    let r = z.norm();
    let mut scale = 0.0;
    for k in c.iter().rev() {
        scale = scale * r + k.norm();
    }
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

/// Starting points on circles read off the upper hull of `(k, ln |c_k|)`.
fn initial_guesses(c: &[Complex64]) -> Vec<Complex64> {
    let pts: Vec<(usize, f64)> = c.iter().enumerate().filter(|(_, x)| x.norm() > 0.0).map(|(k, x)| (k, x.norm().ln())).collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) as f64 * (p.1 - a.1) - (p.0 - a.0) as f64 * (b.1 - a.1);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let n = c.len() - 1;
    let mut out = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let len = w[1].0 - w[0].0;
        let radius = ((w[0].1 - w[1].1) / len as f64).exp();
        for j in 0..len {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5) / len as f64 + 0.7 * out.len() as f64 / n as f64;
            out.push(Complex64::from_polar(radius, theta));
        }
    }
    out
}

/// All roots of a univariate polynomial over R, C or Q with the absolute
/// norm, each certified by its backward error.
pub fn arch_roots(q: &MultiPoly) -> Result<ArchRoots, ZerosError> {
    let full = complex_coeffs(q)?;
    let zero_roots = full.iter().position(|c| c.norm() > 0.0).expect("nonzero polynomial");
    let c = &full[zero_roots..];
    let n = c.len() - 1;
    if n == 0 {
        return Ok(ArchRoots { roots: Vec::new(), zero_roots, backward_errors: Vec::new(), iterations: 0 });
    }
    let mut z = initial_guesses(c);
    let mut done = vec![false; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && done.iter().any(|d| !d) {
        iterations += 1;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (p, dp) = eval_with_derivative(c, z[i]);
            if p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            if step.norm() <= 1e-15 * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            }
        }
    }
    // one Newton step each, kept only when it lowers the backward error
    for zi in z.iter_mut() {
        let (p, dp) = eval_with_derivative(c, *zi);
        let cand = *zi - p / dp;
        if cand.is_finite() && backward_error(c, cand) < backward_error(c, *zi) {
            *zi = cand;
        }
    }
    let backward_errors: Vec<f64> = z.iter().map(|&r| backward_error(c, r)).collect();
    let worst = backward_errors.iter().cloned().fold(0.0, f64::max);
    if !(worst <= BACKWARD_ERROR_TOLERANCE) {
        return Err(ZerosError::RootFindingFailure { backward_error: worst });
    }
    Ok(ArchRoots { roots: z, zero_roots, backward_errors, iterations })
}

/// Smallest modulus of a complex root; `+inf` for a nonzero constant.
pub fn smallest_root_modulus_arch(q: &MultiPoly) -> Result<f64, ZerosError> {
    Ok(arch_roots(q)?.min_modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement;

    fn real_poly(c: &[f64]) -> MultiPoly {
        let c: Vec<FieldElement> = c.iter().map(|&x| FieldElement::real(x)).collect();
        MultiPoly::univariate(FieldDescriptor::Real, &c).unwrap()
    }

    #[test]
    fn modulus_examples() {
        assert!((smallest_root_modulus_arch(&real_poly(&[1.0, 1.0])).unwrap() - 1.0).abs() < 1e-14);
        assert!((smallest_root_modulus_arch(&real_poly(&[1.0, -2.5, 1.0])).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(smallest_root_modulus_arch(&real_poly(&[3.0])).unwrap(), f64::INFINITY);
        assert_eq!(smallest_root_modulus_arch(&real_poly(&[0.0, 2.0, 1.0])).unwrap(), 0.0);
        assert!(matches!(smallest_root_modulus_arch(&MultiPoly::zero(FieldDescriptor::Real, 1)), Err(ZerosError::ZeroPolynomial)));
    }

    #[test]
    fn widely_spread_and_repeated_roots() {
        // (z - 1e-3)(z - 1)(z - 1e3)
        let c = [-1.0, 1e3 + 1.0 + 1e-3, -(1e3 + 1.0 + 1e-3), 1.0];
        let r = arch_roots(&real_poly(&c)).unwrap();
        assert!((r.min_modulus() - 1e-3).abs() < 1e-12);
        // (z + 1)^4
        let r = arch_roots(&real_poly(&[1.0, 4.0, 6.0, 4.0, 1.0])).unwrap();
        assert!((r.min_modulus() - 1.0).abs() < 1e-3);
        assert!(r.backward_errors.iter().all(|e| *e <= BACKWARD_ERROR_TOLERANCE));
    }

    #[test]
    fn roots_of_unity() {
        let mut c = vec![0.0; 17];
        c[0] = -1.0;
        c[16] = 1.0;
        let r = arch_roots(&real_poly(&c)).unwrap();
        assert_eq!(r.roots.len(), 16);
        assert!(r.roots.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }
}
