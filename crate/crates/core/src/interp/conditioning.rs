//! Measured conditioning `||h|| <= A B^{deg h} ||h||_X`.

use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{lebesgue_sum, InterpError, NodePlan};
use crate::field::{FieldElement, NormValue};
use crate::poly::{MultiPoly, SamplePointSet};

/// The set `X` a conditioning run measures against.
#[derive(Debug, Clone, Copy)]
pub enum ConditioningSource<'a> {
    /// The nodes of one plan; all degrees up to the plan degree.
    Plan(&'a NodePlan),
    /// A plan per degree: trials of degree `n` use the plan with `n + 1` nodes.
    PlanPerDegree(&'a [NodePlan]),
    Sample(&'a SamplePointSet),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialFamily {
    /// Dense polynomials with coefficients uniform on the unit ball.
    UnitBall,
    /// Every monomial of each degree.
    Monomials,
    /// Fixed polynomials; the degree range is ignored.
    Given(Vec<MultiPoly>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningConfig {
    pub degrees: RangeInclusive<u32>,
    pub trials: usize,
    pub seed: u64,
    pub family: TrialFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub id: String,
    pub n: u32,
    /// `ln ||h|| - ln ||h||_X`.
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeRecord {
    pub n: u32,
    pub max_log_ratio: f64,
    /// `ln sum_i ||L_i||` for plan sources, a bound over all polynomials.
    pub certified_log_bound: Option<f64>,
    /// The value entering the envelope fit.
    pub envelope_log: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningReport {
    pub a: f64,
    pub b: f64,
    pub ln_a: f64,
    pub ln_b: f64,
    pub degree_range: (u32, u32),
    pub trials: usize,
    pub worst_poly_id: String,
    pub sample_size: usize,
    pub per_degree: Vec<DegreeRecord>,
    pub trial_data: Vec<TrialRecord>,
}

impl ConditioningReport {
    /// Whether every stored trial satisfies the envelope.
    pub fn envelope_holds(&self) -> bool {
        self.trial_data
            .iter()
            .all(|t| t.log_ratio <= self.ln_a + t.n as f64 * self.ln_b + 1e-9 * (1.0 + self.ln_a.abs()))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "A": self.a,
            "B": self.b,
            "degree_range": [self.degree_range.0, self.degree_range.1],
            "trials": self.trials,
            "worst_poly_id": self.worst_poly_id,
            "sample_size": self.sample_size,
            "per_degree": self.per_degree.iter().map(|d| json!({
                "n": d.n,
                "max_log_ratio": d.max_log_ratio,
                "certified_log_bound": d.certified_log_bound,
            })).collect::<Vec<_>>(),
        })
    }

    /// `trial,n,log_ratio` rows for plotting.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "n", "log_ratio"])?;
        for t in &self.trial_data {
            w.write_record([t.id.clone(), t.n.to_string(), t.log_ratio.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least upper envelope `ln A + n ln B` of the points `(n, y_n)`: among the
/// lines lying above every point, the one with the smallest mean over the
/// degree range. That is the edge of the upper concave hull above the middle
/// degree (the right-hand edge when the middle is a vertex). A single degree
/// gives `B = 1`.
pub fn envelope_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.partial_cmp(&a.1).unwrap()));
    pts.dedup_by(|later, earlier| later.0 == earlier.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or below the chord a-p
            if (b.1 - a.1) * (p.0 - a.0) <= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let ln_b = if hull.len() < 2 {
        0.0
    } else {
        let mid = 0.5 * (hull[0].0 + hull[hull.len() - 1].0);
        let k = hull.windows(2).position(|w| w[1].0 > mid).unwrap_or(hull.len() - 2);
        (hull[k + 1].1 - hull[k].1) / (hull[k + 1].0 - hull[k].0)
    };
    let ln_a = points.iter().map(|(n, y)| y - n * ln_b).fold(f64::NEG_INFINITY, f64::max);
    (ln_a, ln_b)
}

fn monomials(d: usize, n: u32) -> Vec<Vec<u32>> {
    if d == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    if d == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for k in (0..=n).rev() {
        for mut rest in monomials(d - 1, n - k) {
            rest.insert(0, k);
            out.push(rest);
        }
    }
    out
}

fn trial_rng(seed: u64, n: u32, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | t as u64);
    rng
}

fn random_trial(desc: crate::field::FieldDescriptor, d: usize, n: u32, rng: &mut ChaCha8Rng) -> Result<MultiPoly, InterpError> {
    let mut terms = Vec::new();
    for k in 0..=n {
        for e in monomials(d, k) {
            let mut c = FieldElement::random_unit_ball(desc, rng);
            if k == n && terms.iter().all(|(e2, _): &(Vec<u32>, FieldElement)| e2.iter().sum::<u32>() < n) {
                while c.is_zero() {
                    c = FieldElement::random_unit_ball(desc, rng);
                }
            }
            terms.push((e, c));
        }
    }
    Ok(MultiPoly::from_terms(desc, d, terms)?)
}

/// `max_X |h|`; for p-adic points a value lost to cancellation counts as zero,
/// which can only overstate the ratio.
fn sup_flush(h: &MultiPoly, points: &[Vec<FieldElement>]) -> Result<NormValue, InterpError> {
    let norms: Vec<NormValue> = points
        .par_iter()
        .map(|x| h.evaluate_flush(x).map(|v| v.norm()))
        .collect::<Result<_, _>>()?;
    Ok(norms
        .into_iter()
        .reduce(|a, b| if b.cmp_magnitude(&a) == std::cmp::Ordering::Greater { b } else { a })
        .expect("nonempty sample"))
}

struct Target {
    points: Vec<Vec<FieldElement>>,
    log_bound: Option<f64>,
}

pub fn conditioning_estimate(source: ConditioningSource<'_>, config: &ConditioningConfig) -> Result<ConditioningReport, InterpError> {
    if config.trials == 0 && !matches!(config.family, TrialFamily::Given(_) | TrialFamily::Monomials) {
        return Err(InterpError::InvalidParameter("need at least one trial".into()));
    }
    let plan_target = |p: &NodePlan| -> Result<Target, InterpError> {
        Ok(Target {
            points: p.nodes.iter().map(|x| vec![x.clone()]).collect(),
            log_bound: Some(lebesgue_sum(p)?.ln),
        })
    };
    let (desc, arity, sample_size) = match source {
        ConditioningSource::Plan(p) => (p.descriptor(), 1, p.nodes.len()),
        ConditioningSource::PlanPerDegree(ps) => {
            let p = ps.first().ok_or_else(|| InterpError::InvalidParameter("no plans".into()))?;
            (p.descriptor(), 1, ps.iter().map(|p| p.nodes.len()).max().unwrap_or(0))
        }
        ConditioningSource::Sample(s) => (
            s.descriptor().ok_or_else(|| InterpError::InvalidParameter("zero-dimensional sample".into()))?,
            s.arity(),
            s.len(),
        ),
    };
    let fixed_plan = match source {
        ConditioningSource::Plan(p) => Some(plan_target(p)?),
        _ => None,
    };
    let target_for = |n: u32| -> Result<Target, InterpError> {
        match source {
            ConditioningSource::Plan(p) => {
                if n as usize > p.degree() {
                    return Err(InterpError::InvalidParameter(format!(
                        "degree {n} exceeds plan degree {}",
                        p.degree()
                    )));
                }
                let t = fixed_plan.as_ref().expect("plan target");
                Ok(Target { points: t.points.clone(), log_bound: t.log_bound })
            }
            ConditioningSource::PlanPerDegree(ps) => {
                let p = ps
                    .iter()
                    .find(|p| p.degree() == n as usize)
                    .ok_or_else(|| InterpError::InvalidParameter(format!("no plan of degree {n}")))?;
                plan_target(p)
            }
            ConditioningSource::Sample(s) => Ok(Target { points: s.points().to_vec(), log_bound: None }),
        }
    };

    // (degree, id, polynomial)
    let mut trials: Vec<(u32, String, MultiPoly)> = Vec::new();
    match &config.family {
        TrialFamily::Given(ps) => {
            for (i, p) in ps.iter().enumerate() {
                trials.push((p.degree().unwrap_or(0), format!("given:{i}"), p.clone()));
            }
        }
        TrialFamily::Monomials => {
            for n in config.degrees.clone() {
                for e in monomials(arity, n) {
                    let id = format!("monomial:{e:?}");
                    trials.push((n, id, MultiPoly::monomial(FieldElement::one(desc), e)));
                }
            }
        }
        TrialFamily::UnitBall => {
            for n in config.degrees.clone() {
                for t in 0..config.trials {
                    let mut rng = trial_rng(config.seed, n, t);
                    trials.push((n, format!("n={n},trial={t}"), random_trial(desc, arity, n, &mut rng)?));
                }
            }
        }
    }
    if trials.is_empty() {
        return Err(InterpError::InvalidParameter("empty trial family".into()));
    }
    let mut degrees: Vec<u32> = trials.iter().map(|t| t.0).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let targets: Vec<(u32, Target)> = degrees.iter().map(|&n| Ok((n, target_for(n)?))).collect::<Result<_, InterpError>>()?;
    let target = |n: u32| &targets.iter().find(|(m, _)| *m == n).expect("target per degree").1;

    let mut trial_data = Vec::with_capacity(trials.len());
    for (n, id, h) in &trials {
        if h.arity() != arity {
            return Err(crate::poly::PolyError::ArityMismatch { expected: arity, got: h.arity() }.into());
        }
        let sup = sup_flush(h, &target(*n).points)?;
        if sup.is_zero() {
            return Err(InterpError::DegenerateSample(id.clone()));
        }
        trial_data.push(TrialRecord { id: id.clone(), n: *n, log_ratio: h.coeff_norm().ln - sup.ln() });
    }

    let per_degree: Vec<DegreeRecord> = degrees
        .iter()
        .map(|&n| {
            let max_log_ratio = trial_data
                .iter()
                .filter(|t| t.n == n)
                .map(|t| t.log_ratio)
                .fold(f64::NEG_INFINITY, f64::max);
            let certified = target(n).log_bound;
            DegreeRecord { n, max_log_ratio, certified_log_bound: certified, envelope_log: certified.map_or(max_log_ratio, |c| c.max(max_log_ratio)) }
        })
        .collect();
    let points: Vec<(f64, f64)> = per_degree.iter().map(|d| (d.n as f64, d.envelope_log)).collect();
    let (ln_a, ln_b) = envelope_fit(&points);
    let worst = trial_data
        .iter()
        .max_by(|a, b| {
            let sa = a.log_ratio - a.n as f64 * ln_b;
            let sb = b.log_ratio - b.n as f64 * ln_b;
            sa.partial_cmp(&sb).unwrap()
        })
        .map(|t| t.id.clone())
        .unwrap_or_default();
    Ok(ConditioningReport {
        a: ln_a.exp(),
        b: ln_b.exp(),
        ln_a,
        ln_b,
        degree_range: (degrees[0], *degrees.last().expect("nonempty")),
        trials: trial_data.len(),
        worst_poly_id: worst,
        sample_size,
        per_degree,
        trial_data,
    })
}

/// Conditioning along a sequence of (nested) sets, for trend inspection.
pub fn perfect_interp_check(
    sequence: &[ConditioningSource<'_>],
    config: &ConditioningConfig,
) -> Result<Vec<ConditioningReport>, InterpError> {
    sequence.iter().map(|s| conditioning_estimate(*s, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldDescriptor;

    #[test]
    fn envelope_of_a_line_is_the_line() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|n| (n as f64, 0.5 + 0.25 * n as f64)).collect();
        let (a, b) = envelope_fit(&pts);
        assert!((a - 0.5).abs() < 1e-12 && (b - 0.25).abs() < 1e-12);
        assert_eq!(envelope_fit(&[(3.0, 2.0)]), (2.0, 0.0));
    }

    #[test]
    fn envelope_uses_the_edge_above_the_middle_degree() {
        // steep start, slope 0.1 afterwards
        let pts = [(1.0, 0.0), (2.0, 3.0), (3.0, 3.1), (4.0, 3.2)];
        let (ln_a, ln_b) = envelope_fit(&pts);
        assert!((ln_b - 0.1).abs() < 1e-12);
        assert!(pts.iter().all(|(n, y)| *y <= ln_a + n * ln_b + 1e-12));
    }

    #[test]
    fn monomials_on_the_circle() {
        let pts: Vec<Vec<FieldElement>> = (0..256)
            .map(|j| {
                let z = num_complex::Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 256.0);
                vec![FieldElement::from_complex(z)]
            })
            .collect();
        let x = SamplePointSet::new(pts).unwrap();
        let cfg = ConditioningConfig { degrees: 1..=10, trials: 1, seed: 0, family: TrialFamily::Monomials };
        let r = conditioning_estimate(ConditioningSource::Sample(&x), &cfg).unwrap();
        assert!((r.a - 1.0).abs() < 1e-12 && (r.b - 1.0).abs() < 1e-12);
        assert!(r.envelope_holds());
    }

    #[test]
    fn origin_alone_is_degenerate() {
        let d = FieldDescriptor::Real;
        let x = SamplePointSet::new(vec![vec![FieldElement::real(0.0)]]).unwrap();
        let h = MultiPoly::monomial(FieldElement::one(d), vec![2]);
        let cfg = ConditioningConfig { degrees: 0..=0, trials: 1, seed: 0, family: TrialFamily::Given(vec![h]) };
        let r = conditioning_estimate(ConditioningSource::Sample(&x), &cfg);
        assert!(matches!(r, Err(InterpError::DegenerateSample(_))));
    }

    #[test]
    fn deterministic_reports() {
        let plan = NodePlan::chebyshev(FieldDescriptor::Real, 6).unwrap();
        let cfg = ConditioningConfig { degrees: 1..=6, trials: 20, seed: 42, family: TrialFamily::UnitBall };
        let a = conditioning_estimate(ConditioningSource::Plan(&plan), &cfg).unwrap();
        let b = conditioning_estimate(ConditioningSource::Plan(&plan), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.envelope_holds());
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 6 * 20);
    }
}
