use germinate_core::field::{FieldDescriptor, FieldElement, Valuation};
use germinate_core::poly::{MultiPoly, SamplePointSet};
use germinate_core::zeros::{
    empirical_c, hyperbolic_distance_bound, is_f_rooted, newton_polygon, root_norms_nonarch, smallest_root_modulus_arch,
    FactoredPoly, LinearFactor, PolyInput, Rootedness,
};
use num_complex::Complex64;
use num_rational::Rational64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn product_of_roots(desc: FieldDescriptor, roots: &[FieldElement]) -> MultiPoly {
    let mut q = MultiPoly::constant(FieldElement::one(desc), 1);
    for a in roots {
        q = q.mul(&MultiPoly::univariate(desc, &[a.neg(), FieldElement::one(desc)]).unwrap()).unwrap();
    }
    q
}

/// `pi^v` times a random 12-digit unit.
fn element_of_valuation(desc: FieldDescriptor, v: i64, rng: &mut ChaCha8Rng) -> FieldElement {
    let p = desc.prime().unwrap() as u32;
    let k = desc.ramification() as i64;
    let mut digits: Vec<u32> = (0..12).map(|_| rng.gen_range(0..p)).collect();
    digits[0] = rng.gen_range(1..p);
    FieldElement::from_digits(desc, Valuation::finite(v, k), &digits).unwrap()
}

#[test]
fn newton_polygon_recovers_constructed_root_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut ramified = 0;
    for case in 0..500 {
        let p = [2u64, 3, 5, 7][rng.gen_range(0..4)];
        let k = [1u32, 1, 2, 3][rng.gen_range(0..4)];
        let desc = if k == 1 { FieldDescriptor::padic(p, 40).unwrap() } else { FieldDescriptor::ramified(p, k, 40).unwrap() };
        let deg = rng.gen_range(1..=6);
        let mut expected = Vec::new();
        let roots: Vec<FieldElement> = (0..deg)
            .map(|_| {
                if rng.gen_ratio(1, 12) {
                    expected.push(Valuation::Infinite);
                    FieldElement::zero(desc)
                } else {
                    let v = rng.gen_range(-4..=4i64);
                    expected.push(Valuation::finite(v, k as i64));
                    element_of_valuation(desc, v, &mut rng)
                }
            })
            .collect();
        if k > 1 && roots.iter().any(|a| a.pi_valuation().is_some_and(|v| v % k as i64 != 0)) {
            ramified += 1;
        }
        let q = product_of_roots(desc, &roots);
        let norms = root_norms_nonarch(&q).unwrap();
        expected.sort_by(|a, b| b.cmp(a));
        assert_eq!(norms.valuations(), expected, "case {case} over {desc:?}");
        assert_eq!(norms.degree(), deg);
    }
    assert!(ramified > 50, "only {ramified} cases with ramified roots");
}

#[test]
fn archimedean_modulus_matches_constructed_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..500 {
        let real = case % 2 == 0;
        let desc = if real { FieldDescriptor::Real } else { FieldDescriptor::Complex };
        let mut roots: Vec<Complex64> = Vec::new();
        let deg = rng.gen_range(1..=8);
        while roots.len() < deg {
            let r = 10f64.powf(rng.gen_range(-1.0..1.0));
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            if real {
                if roots.len() + 2 <= deg && rng.gen_bool(0.5) {
                    let z = Complex64::from_polar(r, t);
                    roots.extend([z, z.conj()]);
                } else {
                    roots.push(Complex64::new(if rng.gen_bool(0.5) { r } else { -r }, 0.0));
                }
            } else {
                roots.push(Complex64::from_polar(r, t));
            }
        }
        // expand in complex arithmetic, then take real parts for R
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for z in &roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (i, ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= ci * z;
            }
            c = next;
        }
        let coeffs: Vec<FieldElement> =
            c.iter().map(|z| if real { FieldElement::real(z.re) } else { FieldElement::from_complex(*z) }).collect();
        let q = MultiPoly::univariate(desc, &coeffs).unwrap();
        let want = roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let got = smallest_root_modulus_arch(&q).unwrap();
        assert!((got - want).abs() <= 1e-8 * want, "case {case}: {got} vs {want} for roots {roots:?}");
    }
}

#[test]
fn rootedness_of_constructed_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut decided = 0;
    for case in 0..200 {
        let p = [2u64, 3, 5][case % 3];
        let desc = FieldDescriptor::padic(p, 40).unwrap();
        let roots: Vec<FieldElement> = (0..rng.gen_range(1..=4)).map(|_| element_of_valuation(desc, rng.gen_range(-2..=2), &mut rng)).collect();
        let q = product_of_roots(desc, &roots);
        let split = is_f_rooted(&q).unwrap();
        assert_ne!(split, Rootedness::False, "case {case}");
        decided += (split == Rootedness::True) as usize;
        // an Eisenstein quadratic factor z^2 - p never splits
        let eis = MultiPoly::univariate(desc, &[FieldElement::from_i64(desc, -(p as i64)), FieldElement::zero(desc), FieldElement::one(desc)]).unwrap();
        assert_eq!(is_f_rooted(&q.mul(&eis).unwrap()).unwrap(), Rootedness::False, "case {case}");
    }
    assert!(decided >= 180, "only {decided} of 200 certified");
}

fn real_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (0.1..=1.0).contains(&n) {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn re(x: &[f64]) -> Vec<FieldElement> {
    x.iter().map(|&c| FieldElement::real(c)).collect()
}

fn circle(n: usize) -> SamplePointSet {
    SamplePointSet::new((0..n).map(|k| {
        let t = std::f64::consts::TAU * k as f64 / n as f64;
        re(&[t.cos(), t.sin()])
    }).collect()).unwrap()
}

fn fibonacci_sphere(n: usize) -> SamplePointSet {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    SamplePointSet::new((0..n).map(|i| {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let t = golden * i as f64;
        re(&[r * t.cos(), r * t.sin(), z])
    }).collect()).unwrap()
}

fn random_factored(rng: &mut ChaCha8Rng, d: usize) -> FactoredPoly {
    let factors = (0..rng.gen_range(1..=3))
        .map(|_| LinearFactor { linear: re(&real_unit(rng, d)).iter().map(|a| a.mul(&FieldElement::real(rng.gen_range(0.5..2.0))).unwrap()).collect(), constant: FieldElement::real(rng.gen_range(-2.0..2.0)) })
        .collect();
    FactoredPoly::new(FieldDescriptor::Real, d, factors).unwrap()
}

#[test]
fn two_sided_pinch_with_dense_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for (d, x) in [(2, circle(360)), (3, fibonacci_sphere(2000))] {
        for _ in 0..40 {
            let f = random_factored(&mut rng, d);
            let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let r = hyperbolic_distance_bound(&PolyInput::Factored(f), &re(&u), &x).unwrap();
            if r.d_uz == 0.0 {
                continue;
            }
            // any slice root z gives a zero at distance |z|
            assert!(r.d_uz <= r.s_u * (1.0 + 1e-9), "{r:?}");
            assert!(r.d_uz >= (1.0 - 1e-2) * r.s_u, "{r:?}");
            assert!(r.radii.iter().all(|&s| s >= r.s_u));
        }
    }
}

#[test]
fn sampling_fallback_is_an_upper_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..10 {
        let f = random_factored(&mut rng, 2);
        let u = re(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
        let exact = f.distance(&u).unwrap();
        let r = hyperbolic_distance_bound(&PolyInput::Expanded(f.expand().unwrap()), &u, &circle(90)).unwrap();
        assert!(!r.exact);
        assert!(r.d_uz >= exact * (1.0 - 1e-9));
        assert!(r.d_uz <= exact * (1.0 + 1e-4) + 1e-12, "{} vs {exact}", r.d_uz);
    }
}

#[test]
fn empirical_constant_over_random_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let family: Vec<FactoredPoly> = (0..20).map(|_| random_factored(&mut rng, 2)).collect();
    let points: Vec<Vec<FieldElement>> = (0..20).map(|_| re(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])).collect();
    let c = empirical_c(&family, &points, &circle(360)).unwrap();
    assert!(c.c >= 0.99, "{c:?}");
    assert!(c.max_ratio <= 1.0 + 1e-9);
    assert_eq!(c.instances + c.skipped, 400);
}

#[test]
fn single_form_has_ratio_one() {
    let a = [0.6, -0.8];
    let f = FactoredPoly::new(FieldDescriptor::Real, 2, vec![LinearFactor { linear: re(&a), constant: FieldElement::real(0.3) }]).unwrap();
    // the normal direction attains the distance
    let x = SamplePointSet::new(vec![re(&a), re(&[0.8, 0.6]), re(&[1.0, 0.0])]).unwrap();
    for u in [[1.0, 1.0], [-2.0, 0.5], [0.0, 3.0]] {
        let r = hyperbolic_distance_bound(&PolyInput::Factored(f.clone()), &re(&u), &x).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn padic_distance_uses_the_max_norm() {
    let q3 = FieldDescriptor::padic(3, 20).unwrap();
    let int = |n| FieldElement::from_i64(q3, n);
    // z -> x_1 - 9 x_2 at u = (0, 1): |l(u)| = |9| = 1/9, ||a|| = 1
    let f = FactoredPoly::new(q3, 2, vec![LinearFactor { linear: vec![int(1), int(-9)], constant: int(0) }]).unwrap();
    let x = SamplePointSet::new(vec![vec![int(1), int(0)], vec![int(1), int(1)], vec![int(0), int(1)]]).unwrap();
    let r = hyperbolic_distance_bound(&PolyInput::Factored(f), &[int(0), int(1)], &x).unwrap();
    assert!((r.d_uz - 1.0 / 9.0).abs() < 1e-15);
    assert!((r.s_u - 1.0 / 9.0).abs() < 1e-15);
}

fn int_valuation(mut x: i64, p: u64) -> i64 {
    let mut v = 0;
    while x % p as i64 == 0 {
        x /= p as i64;
        v += 1;
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polygon_shape_invariants(c in prop::collection::vec(-200i64..200, 1..9), p in prop::sample::select(vec![2u64, 3, 5])) {
        let desc = FieldDescriptor::padic(p, 24).unwrap();
        let q = MultiPoly::univariate(desc, &c.iter().map(|&x| FieldElement::from_i64(desc, x)).collect::<Vec<_>>()).unwrap();
        prop_assume!(!q.is_zero());
        let poly = newton_polygon(&q).unwrap();
        let deg = q.degree().unwrap() as usize;
        prop_assert_eq!(poly.segments.iter().map(|s| s.length).sum::<usize>(), deg - poly.order_at_zero);
        for w in poly.segments.windows(2) {
            prop_assert!(w[0].slope < w[1].slope);
        }
        // every coefficient lies on or above the hull
        for (i, x) in c.iter().enumerate() {
            if *x == 0 || i < poly.order_at_zero {
                continue;
            }
            let v = Rational64::from_integer(int_valuation(*x, p));
            let seg = poly.vertices.windows(2).find(|w| w[0].0 <= i && i <= w[1].0);
            if let Some(w) = seg {
                let t = Rational64::new((i - w[0].0) as i64, (w[1].0 - w[0].0) as i64);
                prop_assert!(v >= w[0].1 + (w[1].1 - w[0].1) * t);
            }
        }
        let norms = root_norms_nonarch(&q).unwrap();
        prop_assert_eq!(norms.degree(), deg);
    }
}
