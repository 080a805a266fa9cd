//! Reconstruction of a power series from its one-variable slices.
//!
//! The degree-`n` component `h_n` is recovered from the slice coefficients
//! `a_n(x) = h_n(x)` at the directions `(1, t)` with `t` on a node grid: the
//! values are those of `g_n(t) = h_n(1, t)`, which is tensor-interpolated and
//! padded back with powers of `x_1`.

mod oracle;

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

pub use oracle::{FnOracle, GeometricProductOracle, LinearFormOracle, PolynomialOracle, SliceOracle, TableOracle};

use crate::cantor::{estimate_spread_constants, EXHAUSTIVE_DEPTH};
use crate::field::{FieldDescriptor, FieldElement, FieldError, Valuation};
use crate::interp::{select_nodes_arch, tensor_interpolate, Grid, InterpError, NodePlan, NodeScheme};
use crate::poly::{rehomogenize, HomogeneousComponent, Magnitude, MultiPoly, PolyError, SamplePointSet};

/// Relative slack when comparing a directional radius with 1.
pub const RADIUS_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum GermError {
    #[error("oracle truncated at order {max_n}, degree {requested} requested")]
    OracleTruncated { requested: usize, max_n: usize },
    #[error("record {0} has x_1 = 0 and lies outside the chart")]
    OutOfChart(usize),
    #[error("no recorded slice at chart direction ({0})")]
    MissingDirection(String),
    #[error("direction {index} has slice radius {radius} < 1")]
    SliceDivergent { index: usize, radius: f64 },
    #[error("empty degree window")]
    EmptyWindow,
    #[error("oracle values of degree {0} are not homogeneous")]
    Inhomogeneous(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Node plans for the chart coordinates `t_2..t_d`.
#[derive(Debug, Clone)]
pub enum ChartPlans {
    /// One plan per axis with at least `N + 1` nodes; degree `n` uses the
    /// first `n + 1`.
    Shared(Vec<NodePlan>),
    /// `plans[n][axis]` with exactly `n + 1` nodes each.
    PerDegree(Vec<Vec<NodePlan>>),
}

impl ChartPlans {
    /// Full `(n + 1)`-th roots of unity for each degree.
    pub fn roots_of_unity(d: usize, n_max: usize) -> Result<Self, GermError> {
        let plans = (0..=n_max)
            .map(|n| {
                let p = select_nodes_arch(n, 0.5 / (n as f64 + 1.0), 1.0, 0.0)?;
                Ok(vec![p; d.saturating_sub(1)])
            })
            .collect::<Result<_, InterpError>>()?;
        Ok(ChartPlans::PerDegree(plans))
    }

    /// Chebyshev points of `[-1, 1]` for each degree.
    pub fn chebyshev(d: usize, n_max: usize) -> Result<Self, GermError> {
        let plans = (0..=n_max)
            .map(|n| Ok(vec![NodePlan::chebyshev(FieldDescriptor::Real, n)?; d.saturating_sub(1)]))
            .collect::<Result<_, InterpError>>()?;
        Ok(ChartPlans::PerDegree(plans))
    }

    /// The integers `0..=n_max` on every axis.
    pub fn integers(desc: FieldDescriptor, d: usize, n_max: usize) -> Result<Self, GermError> {
        let nodes: Vec<FieldElement> = (0..=n_max as i64).map(|i| FieldElement::from_i64(desc, i)).collect();
        Ok(ChartPlans::Shared(vec![NodePlan::explicit(nodes)?; d.saturating_sub(1)]))
    }

    pub fn for_degree(&self, n: usize, axes: usize) -> Result<Vec<NodePlan>, GermError> {
        let plans = match self {
            ChartPlans::Shared(ps) => ps
                .iter()
                .map(|p| {
                    if p.nodes.len() < n + 1 {
                        return Err(GermError::InvalidInput(format!(
                            "plan has {} nodes, degree {n} needs {}",
                            p.nodes.len(),
                            n + 1
                        )));
                    }
                    Ok(NodePlan {
                        scheme: p.scheme.clone(),
                        nodes: p.nodes[..=n].to_vec(),
                        branches: p.branches.iter().take(n + 1).cloned().collect(),
                        embedding: p.embedding.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
            ChartPlans::PerDegree(by_n) => {
                let ps = by_n.get(n).ok_or_else(|| GermError::InvalidInput(format!("no plans for degree {n}")))?;
                if ps.iter().any(|p| p.nodes.len() != n + 1) {
                    return Err(GermError::InvalidInput(format!("degree-{n} plans need {} nodes", n + 1)));
                }
                ps.clone()
            }
        };
        if plans.len() != axes {
            return Err(GermError::InvalidInput(format!("{} chart plans for {axes} chart axes", plans.len())));
        }
        Ok(plans)
    }
}

#[derive(Debug, Clone)]
pub struct SeriesRecon {
    pub components: Vec<HomogeneousComponent>,
    pub order: usize,
    pub plans: Vec<Vec<NodePlan>>,
    /// Largest `|h_n(x) - a_n(x)| / max(1, |a_n(x)|)` over the directions used,
    /// together with the norm of discarded terms of total degree above `n`
    /// (binary64 only; zero in exact and p-adic modes).
    pub residuals: Vec<f64>,
}

impl SeriesRecon {
    pub const CHART: &'static str = "x1=1";

    pub fn to_json(&self) -> Value {
        json!({
            "chart": Self::CHART,
            "order": self.order,
            "components": self.components.iter().enumerate().map(|(n, h)| json!({
                "n": n,
                "poly": h.poly.to_json(),
                "residual": self.residuals[n],
            })).collect::<Vec<_>>(),
        })
    }
}

/// All chart directions `(1, t)` of a plan tensor, row-major.
fn chart_directions(desc: FieldDescriptor, plans: &[NodePlan]) -> Vec<Vec<FieldElement>> {
    let mut out = vec![vec![FieldElement::one(desc)]];
    for p in plans {
        out = out
            .into_iter()
            .flat_map(|x| {
                p.nodes.iter().map(move |t| {
                    let mut y = x.clone();
                    y.push(t.clone());
                    y
                })
            })
            .collect();
    }
    out
}

/// Decides whether a p-adic discrepancy is rounding noise: interpolation at
/// nodes with small differences divides by powers of p and leaves garbage in
/// the last digits, so anything at least half the working precision above the
/// smallest value valuation counts as zero.
struct PadicNoise {
    floor: Option<num_rational::Rational64>,
    margin: num_rational::Rational64,
}

impl PadicNoise {
    fn new(desc: FieldDescriptor, values: &[FieldElement]) -> Option<Self> {
        let prec = desc.precision()? as i64;
        let floor = values.iter().filter_map(|v| match v.valuation() {
            Some(Valuation::Finite(q)) => Some(q),
            _ => None,
        }).min();
        Some(PadicNoise { floor, margin: num_rational::Rational64::new(prec, 2 * desc.ramification() as i64) })
    }

    fn negligible(&self, c: &FieldElement) -> bool {
        match (c.valuation(), self.floor) {
            (Some(Valuation::Infinite), _) => true,
            (Some(Valuation::Finite(v)), Some(f)) => v >= f + self.margin,
            _ => c.is_zero(),
        }
    }
}

fn reconstruct_degree(o: &dyn SliceOracle, n: usize, plans: Vec<NodePlan>) -> Result<(HomogeneousComponent, Vec<NodePlan>, f64), GermError> {
    let desc = o.descriptor();
    let d = o.arity();
    let dirs = chart_directions(desc, &plans);
    let values: Vec<FieldElement> = dirs.iter().map(|x| o.coefficient(x, n)).collect::<Result<_, _>>()?;
    let noise = PadicNoise::new(desc, &values);
    let exact = desc.is_exact() || desc.is_padic();
    let vanishes = |c: &FieldElement| match &noise {
        Some(nz) => nz.negligible(c),
        None => c.is_zero(),
    };
    let g = if d == 1 {
        MultiPoly::constant(values[0].clone(), 0)
    } else {
        let shape: Vec<usize> = plans.iter().map(|p| p.nodes.len()).collect();
        tensor_interpolate(&Grid::new(shape, values.clone())?, &plans)?
    };
    let mut residual: f64 = 0.0;
    let mut stray = false;
    let kept: Vec<(Vec<u32>, FieldElement)> = g
        .terms()
        .filter_map(|(e, c)| {
            if e.iter().sum::<u32>() as usize > n {
                residual += c.abs_f64();
                stray |= !vanishes(c);
                None
            } else {
                Some((e.clone(), c.clone()))
            }
        })
        .collect();
    if exact && stray {
        return Err(GermError::Inhomogeneous(n));
    }
    if exact {
        residual = 0.0;
    }
    let g = MultiPoly::from_terms(desc, d - 1, kept)?;
    let h = rehomogenize(&g, n as u32)?;
    for (x, v) in dirs.iter().zip(&values) {
        let got = h.poly.evaluate_flush(x)?;
        if exact {
            if !vanishes(&got.sub_flush(v)?) {
                return Err(GermError::Inhomogeneous(n));
            }
        } else {
            residual = residual.max(got.sub(v)?.abs_f64() / v.abs_f64().max(1.0));
        }
    }
    Ok((h, plans, residual))
}

/// Components `h_0..h_N` of the series behind `o`, in the chart `x_1 = 1`.
pub fn reconstruct_series(o: &dyn SliceOracle, n_max: usize, plans: &ChartPlans) -> Result<SeriesRecon, GermError> {
    if n_max > o.max_n() {
        return Err(GermError::OracleTruncated { requested: n_max, max_n: o.max_n() });
    }
    if o.arity() == 0 {
        return Err(GermError::InvalidInput("zero-variable oracle".into()));
    }
    let per_degree: Vec<Vec<NodePlan>> = (0..=n_max).map(|n| plans.for_degree(n, o.arity() - 1)).collect::<Result<_, _>>()?;
    let parts: Vec<(HomogeneousComponent, Vec<NodePlan>, f64)> = per_degree
        .into_par_iter()
        .enumerate()
        .map(|(n, ps)| reconstruct_degree(o, n, ps))
        .collect::<Result<_, _>>()?;
    let mut rec = SeriesRecon { components: Vec::new(), order: n_max, plans: Vec::new(), residuals: Vec::new() };
    for (h, ps, r) in parts {
        rec.components.push(h);
        rec.plans.push(ps);
        rec.residuals.push(r);
    }
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEstimate {
    /// `+inf` when every windowed component vanishes.
    pub r_est: f64,
    /// The same value as a rational when the binding norm is an exact `n`-th power.
    pub r_exact: Option<BigRational>,
    pub window: (usize, usize),
    pub per_degree_norms: Vec<(usize, Magnitude)>,
    pub binding_degree: Option<usize>,
}

impl RadiusEstimate {
    pub fn to_json(&self) -> Value {
        json!({
            "r_est": if self.r_est.is_finite() { json!(self.r_est) } else { json!("inf") },
            "r_exact": self.r_exact.as_ref().map(|r| r.to_string()),
            "window": [self.window.0, self.window.1],
            "binding_degree": self.binding_degree,
            "per_degree_norms": self.per_degree_norms.iter().map(|(n, m)| json!({
                "n": n,
                "norm": m.value,
                "exact": m.exact.as_ref().map(|q| q.to_string()),
            })).collect::<Vec<_>>(),
        })
    }
}

/// The trailing window `[ceil(N/2), N]`.
pub fn default_window(n_max: usize) -> RangeInclusive<usize> {
    n_max.div_ceil(2)..=n_max
}

fn exact_root(q: &BigRational, n: usize) -> Option<BigRational> {
    let root = |x: &BigInt| {
        let r = x.nth_root(n as u32);
        (r.pow(n as u32) == *x).then_some(r)
    };
    Some(BigRational::new(root(q.numer())?, root(q.denom())?))
}

/// `1 / max_{n in window, h_n != 0} m_n^{1/n}` over `(n, m_n)`, skipping `n = 0`.
fn radius_from_norms(norms: Vec<(usize, Magnitude)>, window: (usize, usize)) -> RadiusEstimate {
    let mut best: Option<(usize, f64)> = None;
    for (n, m) in &norms {
        if *n == 0 || m.is_zero() {
            continue;
        }
        let rate = m.ln / *n as f64;
        let better = match best {
            None => true,
            Some((bn, br)) => {
                if (rate - br).abs() <= 1e-12 * br.abs().max(1.0) {
                    // near tie: settle exactly when both norms are exact
                    let bm = &norms.iter().find(|(k, _)| *k == bn).expect("recorded").1;
                    match (&m.exact, &bm.exact) {
                        (Some(a), Some(b)) => num_traits::Pow::pow(a, bn as u32) > num_traits::Pow::pow(b, *n as u32),
                        _ => rate > br,
                    }
                } else {
                    rate > br
                }
            }
        };
        if better {
            best = Some((*n, rate));
        }
    }
    let (r_est, r_exact, binding) = match best {
        None => (f64::INFINITY, None, None),
        Some((n, rate)) => {
            let m = &norms.iter().find(|(k, _)| *k == n).expect("recorded").1;
            let exact = m.exact.as_ref().and_then(|q| exact_root(q, n)).filter(|r| !r.is_zero()).map(|r| r.recip());
            ((-rate).exp(), exact, Some(n))
        }
    };
    RadiusEstimate { r_est, r_exact, window, per_degree_norms: norms, binding_degree: binding }
}

fn check_window(window: &RangeInclusive<usize>, order: usize) -> Result<(usize, usize), GermError> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo > hi {
        return Err(GermError::EmptyWindow);
    }
    if hi > order {
        return Err(GermError::OracleTruncated { requested: hi, max_n: order });
    }
    Ok((lo, hi))
}

/// Finite-order proxy for `1 / limsup ||h_n||^{1/n}`.
pub fn estimate_radius(rec: &SeriesRecon, window: RangeInclusive<usize>) -> Result<RadiusEstimate, GermError> {
    let (lo, hi) = check_window(&window, rec.order)?;
    let norms = (lo..=hi).map(|n| (n, rec.components[n].poly.coeff_norm())).collect();
    Ok(radius_from_norms(norms, (lo, hi)))
}

/// `1 / max_{n in window} |a_n(x)|^{1/n}` along one slice.
pub fn directional_radius(o: &dyn SliceOracle, x: &[FieldElement], window: RangeInclusive<usize>) -> Result<f64, GermError> {
    let (lo, hi) = check_window(&window, o.max_n())?;
    let a = o.coefficients(x, hi)?;
    let norms = (lo..=hi).map(|n| (n, Magnitude::from_norm(&a[n].norm()))).collect();
    Ok(radius_from_norms(norms, (lo, hi)).r_est)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolydiskReport {
    pub radius: RadiusEstimate,
    pub min_direction_radius: f64,
    pub worst_direction: usize,
    pub directions: usize,
}

/// Gate every sampled direction of the closed unit polydisk on a slice radius
/// of at least `1 - RADIUS_TOLERANCE`, then reconstruct and estimate.
pub fn polydisk_check(
    o: &dyn SliceOracle,
    sample: &SamplePointSet,
    plans: &ChartPlans,
    n_max: usize,
    window: RangeInclusive<usize>,
) -> Result<PolydiskReport, GermError> {
    if sample.arity() != o.arity() {
        return Err(PolyError::ArityMismatch { expected: o.arity(), got: sample.arity() }.into());
    }
    if sample.points().iter().flatten().any(|c| c.abs_f64() > 1.0 + 1e-12) {
        return Err(GermError::InvalidInput("sample leaves the unit polydisk".into()));
    }
    let radii: Vec<f64> = sample
        .points()
        .par_iter()
        .map(|x| directional_radius(o, x, window.clone()))
        .collect::<Result<_, _>>()?;
    let (worst, min_r) = radii
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, br), (i, &r)| if r < br { (i, r) } else { (bi, br) });
    if let Some(index) = radii.iter().position(|&r| r < 1.0 - RADIUS_TOLERANCE) {
        return Err(GermError::SliceDivergent { index, radius: radii[index] });
    }
    let rec = reconstruct_series(o, n_max, plans)?;
    let radius = estimate_radius(&rec, window)?;
    if !(radius.r_est > 0.0) {
        return Err(GermError::InvalidInput("reconstructed series has zero radius".into()));
    }
    Ok(PolydiskReport { radius, min_direction_radius: min_r, worst_direction: worst, directions: radii.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConstants {
    pub axis: usize,
    pub scheme: String,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub mu: Option<BigRational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressReport {
    pub min_r_est: f64,
    pub argmin: usize,
    pub per_oracle: Vec<f64>,
    pub plan_constants: Vec<PlanConstants>,
}

fn describe(plan: &NodePlan) -> String {
    match &plan.scheme {
        NodeScheme::NonarchSubtree { level } => format!("subtree(level={level})"),
        NodeScheme::ArchRootsOfUnity { big_n, r, rotation, .. } => format!("roots_of_unity(N={big_n},r={r},rotation={rotation})"),
        NodeScheme::Explicit => "explicit".to_string(),
    }
}

/// Smallest radius estimate across `family`, each member first gated on the
/// chart directions of the top degree.
pub fn quantitative_stress(
    family: &[&dyn SliceOracle],
    plans: &ChartPlans,
    n_max: usize,
    window: RangeInclusive<usize>,
    mu_est: Option<&BigRational>,
) -> Result<StressReport, GermError> {
    if family.is_empty() {
        return Err(GermError::InvalidInput("empty oracle family".into()));
    }
    let mut per_oracle = Vec::with_capacity(family.len());
    for o in family {
        let top = plans.for_degree(n_max, o.arity() - 1)?;
        for (index, x) in chart_directions(o.descriptor(), &top).iter().enumerate() {
            let radius = directional_radius(*o, x, window.clone())?;
            if radius < 1.0 - RADIUS_TOLERANCE {
                return Err(GermError::SliceDivergent { index, radius });
            }
        }
        let rec = reconstruct_series(*o, n_max, plans)?;
        per_oracle.push(estimate_radius(&rec, window.clone())?.r_est);
    }
    let (argmin, min_r_est) = per_oracle
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, br), (i, &r)| if r < br { (i, r) } else { (bi, br) });
    let top = plans.for_degree(n_max, family[0].arity() - 1)?;
    let plan_constants = top
        .iter()
        .enumerate()
        .map(|(axis, p)| {
            let est = p.embedding.as_ref().and_then(|e| estimate_spread_constants(e, e.depth().min(EXHAUSTIVE_DEPTH)).ok());
            PlanConstants {
                axis,
                scheme: describe(p),
                c: est.as_ref().map(|e| e.c),
                gamma: est.as_ref().map(|e| e.gamma),
                mu: mu_est.cloned(),
            }
        })
        .collect();
    Ok(StressReport { min_r_est, argmin, per_oracle, plan_constants })
}
