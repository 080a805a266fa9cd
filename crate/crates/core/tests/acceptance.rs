//! Acceptance run: one line per criterion, nonzero exit on any failure.
//!
//! Every tolerance is pinned here as a constant next to the check it governs.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use germinate_core::cantor::{BitString, SpreadEmbedding, SpreadScheme};
use germinate_core::field::{FieldDescriptor, FieldElement, Valuation};
use germinate_core::germ::{
    default_window, estimate_radius, polydisk_check, reconstruct_series, ChartPlans, FnOracle, GeometricProductOracle,
    GermError, LinearFormOracle,
};
use germinate_core::interp::{
    conditioning_estimate, counterexample_certificate, counterexample_family, evaluate_on_grid, select_nodes_arch,
    select_nodes_nonarch, separation_lower_bound, tensor_interpolate, ConditioningConfig, ConditioningSource, NodePlan,
    TrialFamily,
};
use germinate_core::poly::{MultiPoly, SamplePointSet};
use germinate_core::zeros::{empirical_c, hyperbolic_distance_bound, root_norms_nonarch, FactoredPoly, LinearFactor, PolyInput};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Pow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

// 1. counterexample family
const SUP_SLACK: f64 = 1e-12;
const COUNTEREXAMPLE_LIMIT: Duration = Duration::from_secs(5);

fn counterexample() -> Outcome {
    let start = Instant::now();
    for n in 1..=20u32 {
        let r = counterexample_family(n).map_err(|e| e.to_string())?;
        ensure(r.coeff_z3n == ratio(-3, 2).pow(n as i32), || format!("n = {n}: coefficient {}", r.coeff_z3n))?;
        ensure(r.real_norm == ratio(3, 2).pow(n as i32), || format!("n = {n}: real norm {}", r.real_norm))?;
        ensure(r.two_adic_norm == ratio(2, 1).pow(n as i32), || format!("n = {n}: 2-adic norm {}", r.two_adic_norm))?;
        ensure(r.sampled_sup <= 1.0 + SUP_SLACK, || format!("n = {n}: sampled real sup {}", r.sampled_sup))?;
        ensure(r.two_adic_sup <= BigRational::one(), || format!("n = {n}: 2-adic sup {}", r.two_adic_sup))?;
    }
    within(start.elapsed(), COUNTEREXAMPLE_LIMIT)?;
    Ok(format!("n = 1..20 exact, sups <= 1 + {SUP_SLACK:e}, {:.2?}", start.elapsed()))
}

// 2. interpolation round trip
const ROUND_TRIPS: usize = 200;
const COMPLEX_RELATIVE: f64 = 1e-8;
const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(30);

fn exponents(shape: &[usize]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &n in shape {
        out = out.into_iter().flat_map(|e| (0..=n as u32).map(move |k| [e.clone(), vec![k]].concat())).collect();
    }
    out
}

fn round_trips<P, C>(desc: FieldDescriptor, seed: u64, plan: P, mut coeff: C) -> Result<Vec<(MultiPoly, MultiPoly)>, String>
where
    P: Fn(usize) -> NodePlan,
    C: FnMut(&mut ChaCha8Rng) -> FieldElement,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ROUND_TRIPS)
        .map(|_| {
            let d = rng.gen_range(1..=3);
            let shape: Vec<usize> = (0..d).map(|_| rng.gen_range(0..=8)).collect();
            let terms: Vec<_> = exponents(&shape).into_iter().map(|e| (e, coeff(&mut rng))).collect();
            let h = MultiPoly::from_terms(desc, d, terms).map_err(|e| e.to_string())?;
            let plans: Vec<NodePlan> = shape.iter().map(|&n| plan(n)).collect();
            let grid = evaluate_on_grid(&h, &plans).map_err(|e| e.to_string())?;
            Ok((h, tensor_interpolate(&grid, &plans).map_err(|e| e.to_string())?))
        })
        .collect()
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let q = FieldDescriptor::rational();
    let shifted = |n: usize| NodePlan::explicit((0..=n as i64).map(|i| FieldElement::from_i64(q, 2 * i - 3)).collect()).unwrap();
    for (i, (h, back)) in round_trips(q, 1, shifted, |rng| {
        FieldElement::rational(q, BigRational::new(rng.gen_range(-50..=50).into(), rng.gen_range(1..=9).into())).unwrap()
    })?
    .into_iter()
    .enumerate()
    {
        ensure(h == back, || format!("rational case {i} not recovered"))?;
    }

    let q2 = FieldDescriptor::padic(2, 64).unwrap();
    let e = SpreadEmbedding::new(q2, SpreadScheme::Spk { p: 2, k: 1 }, 16).unwrap();
    let plans: Vec<NodePlan> = (0..=8).map(|n| select_nodes_nonarch(&e, |_| true, n, &BigRational::one()).unwrap()).collect();
    for (i, (h, back)) in round_trips(q2, 2, |n| plans[n].clone(), |rng| FieldElement::random_unit_ball(q2, rng))?.into_iter().enumerate() {
        ensure(h == back, || format!("2-adic case {i} not recovered"))?;
    }

    let c = FieldDescriptor::Complex;
    let roots = |n: usize| select_nodes_arch(n, 0.5 / (n as f64 + 1.0), 1.0, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for (h, back) in round_trips(c, 3, roots, |rng| FieldElement::random_unit_ball(c, rng))? {
        let scale = h.terms().map(|(_, x)| x.abs_f64()).fold(1.0, f64::max);
        for (e, _) in h.terms().chain(back.terms()) {
            worst = worst.max(back.coeff(e).sub(&h.coeff(e)).unwrap().abs_f64() / scale);
        }
    }
    ensure(worst <= COMPLEX_RELATIVE, || format!("complex relative error {worst:e}"))?;
    within(start.elapsed(), ROUND_TRIP_LIMIT)?;
    Ok(format!("3 x {ROUND_TRIPS} polynomials, complex error {worst:.1e}, {:.2?}", start.elapsed()))
}

// 3. conditioning envelope and separation
const SEPARATION_EMBEDDINGS: [(u64, u32); 3] = [(2, 1), (3, 1), (3, 2)];

fn conditioning() -> Outcome {
    let depth = 8;
    let e = SpreadEmbedding::new(FieldDescriptor::Real, SpreadScheme::MiddleThirdsReal, depth).unwrap();
    let x = SamplePointSet::new(BitString::all(depth).map(|b| vec![e.embed(&b).unwrap()]).collect()).unwrap();
    let cfg = ConditioningConfig { degrees: 1..=12, trials: 50, seed: 3, family: TrialFamily::UnitBall };
    let r = conditioning_estimate(ConditioningSource::Sample(&x), &cfg).map_err(|e| e.to_string())?;
    // recompute the envelope test from the stored ratios
    let misses = r.trial_data.iter().filter(|t| t.log_ratio > r.ln_a + t.n as f64 * r.ln_b + 1e-9).count();
    ensure(r.trial_data.len() >= 12 * 50, || format!("only {} trials recorded", r.trial_data.len()))?;
    ensure(misses == 0, || format!("{misses} trials outside the envelope"))?;

    let mut plans_checked = 0;
    for (p, k) in SEPARATION_EMBEDDINGS {
        let desc = if k == 1 { FieldDescriptor::padic(p, 48).unwrap() } else { FieldDescriptor::ramified(p, k, 48).unwrap() };
        let e = SpreadEmbedding::new(desc, SpreadScheme::Spk { p, k }, 16).unwrap();
        for n in 1..=12 {
            let plan = select_nodes_nonarch(&e, |_| true, n, &BigRational::one()).map_err(|e| e.to_string())?;
            let s = separation_lower_bound(&plan, &e).map_err(|e| e.to_string())?;
            // independent product over the plan nodes
            let nodes = &plan.nodes;
            let measured = (0..nodes.len())
                .map(|i| (0..nodes.len()).filter(|&j| j != i).map(|j| nodes[i].sub(&nodes[j]).unwrap().norm().to_f64().ln()).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            ensure((measured - s.measured_log_product).abs() <= 1e-9 * measured.abs().max(1.0), || {
                format!("p = {p}, k = {k}, n = {n}: product {measured} vs reported {}", s.measured_log_product)
            })?;
            ensure(s.holds() && measured >= s.log_product_bound - 1e-9 * s.log_product_bound.abs().max(1.0), || {
                format!("p = {p}, k = {k}, n = {n}: {s:?}")
            })?;
            plans_checked += 1;
        }
    }
    Ok(format!("A = {:.4}, B = {:.4} over {} trials; separation on {plans_checked} plans", r.a, r.b, r.trial_data.len()))
}

// 4. Newton polygon against constructed roots
fn newton_polygons() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut ramified = 0;
    for case in 0..500 {
        let p = [2u64, 3, 5, 7][rng.gen_range(0..4)];
        let k = [1u32, 2, 3][rng.gen_range(0..3)];
        let desc = if k == 1 { FieldDescriptor::padic(p, 40).unwrap() } else { FieldDescriptor::ramified(p, k, 40).unwrap() };
        let deg = rng.gen_range(1..=6);
        let mut expected = Vec::new();
        let mut q = MultiPoly::constant(FieldElement::one(desc), 1);
        for _ in 0..deg {
            let root = if rng.gen_ratio(1, 12) {
                expected.push(Valuation::Infinite);
                FieldElement::zero(desc)
            } else {
                let v = rng.gen_range(-4..=4i64);
                ramified += (v % k as i64 != 0) as usize;
                expected.push(Valuation::finite(v, k as i64));
                let mut digits: Vec<u32> = (0..12).map(|_| rng.gen_range(0..p as u32)).collect();
                digits[0] = rng.gen_range(1..p as u32);
                FieldElement::from_digits(desc, Valuation::finite(v, k as i64), &digits).unwrap()
            };
            q = q.mul(&MultiPoly::univariate(desc, &[root.neg(), FieldElement::one(desc)]).unwrap()).unwrap();
        }
        expected.sort_by(|a, b| b.cmp(a));
        let got = root_norms_nonarch(&q).map_err(|e| e.to_string())?.valuations();
        ensure(got == expected, || format!("case {case} over {desc}: {got:?} vs {expected:?}"))?;
    }
    ensure(ramified > 50, || format!("only {ramified} fractional valuations drawn"))?;
    Ok(format!("500 products, {ramified} roots of fractional valuation"))
}

// 5. germination of 1/(1 - x1 - x2)
const GERMINATION_LIMIT: Duration = Duration::from_secs(10);

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn germination() -> Outcome {
    let start = Instant::now();
    let q = FieldDescriptor::rational();
    let one = FieldElement::one(q);
    let o = LinearFormOracle::new(vec![one.clone(), one]).unwrap();
    let rec = reconstruct_series(&o, 12, &ChartPlans::integers(q, 2, 12).unwrap()).map_err(|e| e.to_string())?;
    for n in 0..=12u32 {
        let h = &rec.components[n as usize].poly;
        ensure(h.len() == n as usize + 1, || format!("h_{n} has {} terms", h.len()))?;
        for k in 0..=n {
            let c = h.coeff(&[n - k, k]).to_rational().unwrap();
            ensure(c == BigRational::from_integer(binomial(n, k)), || format!("h_{n}: coefficient of x1^{} x2^{k} is {c}", n - k))?;
        }
    }
    let r = estimate_radius(&rec, 6..=12).map_err(|e| e.to_string())?;
    ensure(r.r_exact == Some(ratio(1, 2)), || format!("r_exact = {:?}", r.r_exact))?;
    ensure(r.r_est == 0.5, || format!("r_est = {}", r.r_est))?;
    within(start.elapsed(), GERMINATION_LIMIT)?;
    Ok(format!("h_0..h_12 binomial, r = 1/2 exactly, {:.2?}", start.elapsed()))
}

// 6. polydisk check
const POLYDISK_ORDER: usize = 200;
const POLYDISK_BAND: (f64, f64) = (0.9, 1.1);

fn polydisk() -> Outcome {
    let c = FieldDescriptor::Complex;
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let unit = |z: Complex64| FieldElement::from_complex(z);
    let mut pts = vec![
        vec![unit(Complex64::new(1.0, 0.0)), unit(Complex64::new(1.0, 0.0))],
        vec![unit(Complex64::new(-1.0, 0.0)), unit(Complex64::new(0.0, 1.0))],
    ];
    pts.extend((0..30).map(|_| (0..2).map(|_| FieldElement::random_unit_ball(c, &mut rng)).collect()));
    let sample = SamplePointSet::new(pts).unwrap();
    let o = GeometricProductOracle::new(c, 2);
    let plans = ChartPlans::roots_of_unity(2, POLYDISK_ORDER).unwrap();
    let rep = polydisk_check(&o, &sample, &plans, POLYDISK_ORDER, default_window(POLYDISK_ORDER)).map_err(|e| e.to_string())?;
    let r = rep.radius.r_est;
    ensure((POLYDISK_BAND.0..=POLYDISK_BAND.1).contains(&r), || format!("r_est = {r}"))?;

    let two = FieldElement::from_i64(c, 2);
    let planted = FnOracle::new(c, 2, usize::MAX, move |x, n| Ok(x[0].mul(&two)?.pow(n as u32)));
    let plans = ChartPlans::roots_of_unity(2, 12).unwrap();
    let err = polydisk_check(&planted, &sample, &plans, 12, 6..=12);
    ensure(matches!(err, Err(GermError::SliceDivergent { .. })), || format!("planted oracle gave {err:?}"))?;
    Ok(format!("r_est = {r:.4} at N = {POLYDISK_ORDER}; planted slice rejected"))
}

// 7. hyperbolic corollary
const RATIO_BAND: (f64, f64) = (0.99, 1.01);
const C_FLOOR: f64 = 0.99;

fn real_unit(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    [t.cos(), t.sin()]
}

fn re(x: &[f64]) -> Vec<FieldElement> {
    x.iter().map(|&c| FieldElement::real(c)).collect()
}

fn hyperbolic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let family: Vec<FactoredPoly> = (0..100)
        .map(|_| {
            let factors = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let s = rng.gen_range(0.5..2.0);
                    let a = real_unit(&mut rng);
                    LinearFactor { linear: re(&[a[0] * s, a[1] * s]), constant: FieldElement::real(rng.gen_range(-2.0..2.0)) }
                })
                .collect();
            FactoredPoly::new(FieldDescriptor::Real, 2, factors).unwrap()
        })
        .collect();
    let points: Vec<Vec<FieldElement>> = (0..100).map(|_| re(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])).collect();
    let circle = SamplePointSet::new(
        (0..360)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 360.0;
                re(&[t.cos(), t.sin()])
            })
            .collect(),
    )
    .unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, f) in family.iter().enumerate() {
        for (j, u) in points.iter().enumerate() {
            let r = hyperbolic_distance_bound(&PolyInput::Factored(f.clone()), u, &circle).map_err(|e| e.to_string())?;
            if r.d_uz == 0.0 {
                continue;
            }
            ensure((RATIO_BAND.0..=RATIO_BAND.1).contains(&r.ratio), || format!("polynomial {i}, point {j}: ratio {}", r.ratio))?;
            lo = lo.min(r.ratio);
            hi = hi.max(r.ratio);
        }
    }
    let c = empirical_c(&family, &points, &circle).map_err(|e| e.to_string())?;
    ensure(c.c >= C_FLOOR, || format!("empirical C = {}", c.c))?;
    Ok(format!("ratios in [{lo:.5}, {hi:.5}] over {} instances, C = {:.5}", c.instances, c.c))
}

// 8. perfect-interpolation trend and the counterexample certificate
const FINAL_B_CEILING: f64 = 1.1;
const GRID: [(f64, f64); 4] = [(0.9, 0.1), (0.9, 0.01), (0.99, 0.1), (0.99, 0.01)];

fn perfect_interpolation() -> Outcome {
    let cfg = ConditioningConfig { degrees: 1..=24, trials: 30, seed: 7, family: TrialFamily::UnitBall };
    let mut b = Vec::new();
    for (r, eps) in GRID {
        let plans: Vec<NodePlan> = (0..=24).map(|n| select_nodes_arch(n, eps, r, 0.0).unwrap()).collect();
        let rep = conditioning_estimate(ConditioningSource::PlanPerDegree(&plans), &cfg).map_err(|e| e.to_string())?;
        ensure(rep.envelope_holds(), || format!("(r, eps) = ({r}, {eps}): envelope misses"))?;
        b.push(rep.b);
    }
    // refinement: either parameter moves toward the circle without the other moving back
    for i in 0..GRID.len() {
        for j in 0..GRID.len() {
            let (ri, ei) = GRID[i];
            let (rj, ej) = GRID[j];
            if i != j && rj >= ri && ej <= ei {
                ensure(b[j] <= b[i] + 1e-12, || format!("B rises from {:?} = {} to {:?} = {}", GRID[i], b[i], GRID[j], b[j]))?;
            }
        }
    }
    ensure(b[3] <= FINAL_B_CEILING, || format!("final B = {}", b[3]))?;

    let cert = counterexample_certificate(60).map_err(|e| e.to_string())?;
    ensure(cert.real_exceeds && cert.two_adic_exceeds, || "certificate does not exceed its thresholds".into())?;
    for n in 1..=60u32 {
        let (rr, tr) = (&cert.real_ratios[n as usize - 1], &cert.two_adic_ratios[n as usize - 1]);
        ensure(*rr == ratio(3, 2).pow(n as i32) && *tr == ratio(2, 1).pow(n as i32), || format!("n = {n}: ratios {rr}, {tr}"))?;
    }
    let seq: Vec<String> = b.iter().map(|x| format!("{x:.4}")).collect();
    Ok(format!("B = [{}], final {:.4}; no envelope below 3/2 (R) or 2 (Z_2) to n = 60", seq.join(", "), b[3]))
}

// 9. field axioms
const PAIRS: usize = 10_000;

fn random_nonarch(desc: FieldDescriptor, rng: &mut ChaCha8Rng) -> FieldElement {
    if let FieldDescriptor::ExactRational { .. } = desc {
        let n: i64 = rng.gen_range(-100_000..100_000);
        let d: i64 = rng.gen_range(1..100_000);
        return FieldElement::rational(desc, BigRational::new(n.into(), d.into())).unwrap();
    }
    let p = desc.prime().unwrap();
    let k = desc.ramification() as i64;
    let mut digits: Vec<u32> = (0..desc.precision().unwrap()).map(|_| rng.gen_range(0..p) as u32).collect();
    digits[0] = rng.gen_range(1..p) as u32;
    FieldElement::from_digits(desc, Valuation::finite(rng.gen_range(-20..20), k), &digits).unwrap()
}

fn finite(x: &FieldElement) -> Result<num_rational::Rational64, String> {
    match x.valuation() {
        Some(Valuation::Finite(v)) => Ok(v),
        other => Err(format!("expected a finite valuation, got {other:?}")),
    }
}

fn field_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let descs = [
        FieldDescriptor::padic(2, 64).unwrap(),
        FieldDescriptor::padic(5, 24).unwrap(),
        FieldDescriptor::ramified(3, 2, 32).unwrap(),
        FieldDescriptor::rational_padic(3).unwrap(),
    ];
    let mut isosceles = 0;
    for desc in descs {
        for i in 0..PAIRS {
            let x = random_nonarch(desc, &mut rng);
            let y = random_nonarch(desc, &mut rng);
            let prod = x.mul(&y).map_err(|e| e.to_string())?;
            let (vx, vy) = (finite(&x)?, finite(&y)?);
            ensure(finite(&prod)? == vx + vy, || format!("{desc} pair {i}: v(xy) != v(x) + v(y)"))?;
            ensure(prod.norm() == x.norm().mul(&y.norm()), || format!("{desc} pair {i}: |xy| != |x||y|"))?;
            if vx != vy {
                let s = x.add(&y).map_err(|e| e.to_string())?;
                ensure(finite(&s)? == vx.min(vy), || format!("{desc} pair {i}: triangle not isosceles"))?;
                isosceles += 1;
            }
        }
    }
    Ok(format!("{} pairs in {} fields, {isosceles} isosceles cases", PAIRS * descs.len(), descs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("counterexample family", counterexample),
        ("interpolation round trip", round_trip),
        ("conditioning envelope", conditioning),
        ("Newton polygon oracle", newton_polygons),
        ("germination", germination),
        ("polydisk check", polydisk),
        ("hyperbolic corollary", hyperbolic),
        ("perfect-interpolation trend", perfect_interpolation),
        ("field axioms", field_axioms),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{t:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}) [{t:.2?}]", i + 1);
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria pass", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria fail", criteria.len());
        ExitCode::FAILURE
    }
}
