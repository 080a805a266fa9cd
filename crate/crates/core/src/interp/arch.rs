use std::f64::consts::PI;

use super::InterpError;

const TARGET_ERROR: f64 = 1e-12;
const ACCEPTED_ERROR: f64 = 1e-9;

/// Per-node logarithmic bounds for roots-of-unity plans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchBound {
    pub t: f64,
    pub r: f64,
    /// `(1/2t) int_{-t}^{t} log|1 - e^{i pi theta}| dtheta`.
    pub lower_integral: f64,
    /// `lower_integral + log r`: lower bound on `(1/n) log prod |rho_i - rho_j|`.
    pub lower: f64,
    /// `(1/2t) int_{-t}^{t} log|1 - e^{i pi (1 + theta)}| dtheta`: upper bound
    /// on `(1/n) log prod |e^{i theta} - rho_j|`.
    pub upper: f64,
    pub error_estimate: f64,
}

fn symmetric_mean<F: Fn(f64) -> f64>(f: F, t: f64) -> Result<(f64, f64), InterpError> {
    // Both integrands are even, and tanh-sinh quadrature absorbs the
    // logarithmic endpoint singularities at 0 and 1.
    let out = quadrature::integrate(f, 0.0, t, TARGET_ERROR);
    if !(out.error_estimate <= ACCEPTED_ERROR) || !out.integral.is_finite() {
        return Err(InterpError::QuadratureFailure {
            tol: ACCEPTED_ERROR,
            estimate: out.error_estimate,
        });
    }
    Ok((out.integral / t, out.error_estimate / t))
}

pub fn arch_integral_bound(t: f64, r: f64) -> Result<ArchBound, InterpError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(InterpError::InvalidParameter(format!("t = {t} not in (0, 1]")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(InterpError::InvalidParameter(format!("r = {r} not in (0, 1)")));
    }
    let (lower_integral, e1) = symmetric_mean(|x| (2.0 * (0.5 * PI * x).sin()).abs().ln(), t)?;
    let (upper, e2) = symmetric_mean(|x| (2.0 * (0.5 * PI * x).cos()).abs().ln(), t)?;
    Ok(ArchBound {
        t,
        r,
        lower_integral,
        lower: lower_integral + r.ln(),
        upper,
        error_estimate: e1.max(e2),
    })
}
