//! One pipeline per subcommand.

use std::path::PathBuf;

use clap::Args;
use germinate_core::cantor::{estimate_spread_constants, BitString, SpreadEmbedding, SpreadScheme, VerificationMode};
use germinate_core::field::FieldDescriptor;
use germinate_core::germ::{default_window, estimate_radius, polydisk_check, reconstruct_series, ChartPlans};
use germinate_core::interp::{
    arch_integral_bound, conditioning_estimate, counterexample_certificate, counterexample_family_with, select_nodes_arch,
    select_nodes_nonarch, separation_lower_bound, ConditioningConfig, ConditioningSource, NodePlan, TrialFamily,
};
use germinate_core::poly::SamplePointSet;
use germinate_core::zeros::{
    empirical_c, hyperbolic_distance_bound, is_f_rooted, newton_polygon, root_norms_nonarch, arch_roots, FactoredPoly,
    PolyInput,
};
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::input::{
    parse_field, parse_list, parse_point, parse_range, points_from_json, read_json, read_poly, read_sample, slice_source,
    unit_directions, Options,
};
use crate::report::{num, Outcome, Table};

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Largest power n of ((z - 3z^3)/2)^n to expand.
    #[arg(long, default_value_t = 20)]
    pub n_max: u32,
    /// Points of the uniform grid on [-1, 1].
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    /// The 2-adic sup runs over residues mod 2^bits.
    #[arg(long, default_value_t = 12)]
    pub residue_bits: u32,
    /// Largest power for the no-envelope certificate (0 skips it).
    #[arg(long, default_value_t = 60)]
    pub certify_to: u32,
}

pub fn counterexample(a: &CounterexampleArgs) -> Result<Outcome, CliError> {
    if a.n_max == 0 || a.grid < 2 {
        return Err(CliError::invalid("need --n-max >= 1 and --grid >= 2"));
    }
    let records = (1..=a.n_max)
        .into_par_iter()
        .map(|n| counterexample_family_with(n, a.grid, a.residue_bits))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["n", "coeff_z3n", "real_norm", "two_adic_norm", "real_sup", "two_adic_sup"]);
    for r in &records {
        table.push([
            r.n.to_string(),
            r.coeff_z3n.to_string(),
            r.real_norm.to_string(),
            r.two_adic_norm.to_string(),
            r.real_sup.to_string(),
            r.two_adic_sup.to_string(),
        ]);
    }
    let certificate = if a.certify_to > 0 { Some(counterexample_certificate(a.certify_to)?.to_json()) } else { None };
    Ok(Outcome {
        config: json!({ "n_max": a.n_max, "grid": a.grid, "residue_bits": a.residue_bits, "certify_to": a.certify_to }),
        results: json!({
            "records": records.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "certificate": certificate,
        }),
        table,
    })
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    /// Field descriptor, e.g. rational, real, complex, padic:p=2,prec=64.
    #[arg(long, default_value = "rational")]
    pub field: String,
    /// Slice table, one JSON object {"x": [...], "a": [...]} per line.
    #[arg(long)]
    pub slices: Option<PathBuf>,
    /// Polynomial JSON {"d": ..., "terms": [{"e": [...], "c": ...}]}.
    #[arg(long)]
    pub poly: Option<PathBuf>,
    /// Built-in germ: geometric:d=2, linear:w=1;1 or diverge:d=2,c=2.
    #[arg(long)]
    pub oracle: Option<String>,
    /// Reconstruction order N.
    #[arg(long = "N", visible_alias = "order", default_value_t = 12)]
    pub order: usize,
    /// Chart plans: auto, integers, roots-of-unity or chebyshev. Auto picks
    /// roots of unity over C, Chebyshev over R and the integers otherwise.
    #[arg(long, default_value = "auto")]
    pub plans: String,
    /// Radius window a..b (default ceil(N/2)..N).
    #[arg(long)]
    pub window: Option<String>,
}

struct SliceSetup {
    desc: FieldDescriptor,
    oracle: Box<dyn germinate_core::germ::SliceOracle>,
    plans: ChartPlans,
    plans_name: String,
    window: std::ops::RangeInclusive<usize>,
}

fn slice_setup(a: &SliceArgs) -> Result<SliceSetup, CliError> {
    let desc = parse_field(&a.field)?;
    let oracle = slice_source(desc, a.slices.as_deref(), a.poly.as_deref(), a.oracle.as_deref())?;
    let d = oracle.arity();
    let plans_name = match a.plans.as_str() {
        "auto" => match desc {
            FieldDescriptor::Complex => "roots-of-unity",
            FieldDescriptor::Real => "chebyshev",
            _ => "integers",
        },
        other => other,
    }
    .to_string();
    let plans = match plans_name.as_str() {
        "integers" => ChartPlans::integers(desc, d, a.order)?,
        "roots-of-unity" => ChartPlans::roots_of_unity(d, a.order)?,
        "chebyshev" => ChartPlans::chebyshev(d, a.order)?,
        other => return Err(CliError::invalid(format!("unknown plans {other:?}"))),
    };
    let window = match &a.window {
        Some(w) => parse_range(w)?,
        None => default_window(a.order),
    };
    Ok(SliceSetup { desc, oracle, plans, plans_name, window })
}

fn slice_config(a: &SliceArgs, s: &SliceSetup) -> Value {
    json!({
        "field": s.desc.to_string(),
        "slices": a.slices.as_ref().map(|p| p.display().to_string()),
        "poly": a.poly.as_ref().map(|p| p.display().to_string()),
        "oracle": a.oracle,
        "N": a.order,
        "plans": s.plans_name,
        "window": [s.window.start(), s.window.end()],
        "chart": "x1=1",
    })
}

fn norm_table(r: &germinate_core::germ::RadiusEstimate) -> Table {
    let mut t = Table::new(&["n", "norm"]);
    for (n, m) in &r.per_degree_norms {
        t.push([n.to_string(), m.value.to_string()]);
    }
    t
}

pub fn reconstruct(a: &SliceArgs) -> Result<Outcome, CliError> {
    let s = slice_setup(a)?;
    let rec = reconstruct_series(s.oracle.as_ref(), a.order, &s.plans)?;
    let radius = estimate_radius(&rec, s.window.clone())?;
    Ok(Outcome {
        config: slice_config(a, &s),
        results: json!({ "series": rec.to_json(), "radius": radius.to_json(), "r": num(radius.r_est) }),
        table: norm_table(&radius),
    })
}

#[derive(Debug, Args)]
pub struct RadiusArgs {
    #[command(flatten)]
    pub slices: SliceArgs,
    /// Sample of the closed unit polydisk; every direction is gated on its
    /// slice radius before reconstruction.
    #[arg(long)]
    pub sample: Option<PathBuf>,
}

pub fn radius(a: &RadiusArgs) -> Result<Outcome, CliError> {
    let s = slice_setup(&a.slices)?;
    let mut config = slice_config(&a.slices, &s);
    config["sample"] = json!(a.sample.as_ref().map(|p| p.display().to_string()));
    let (radius, polydisk) = match &a.sample {
        Some(path) => {
            let sample = read_sample(s.desc, path)?;
            let rep = polydisk_check(s.oracle.as_ref(), &sample, &s.plans, a.slices.order, s.window.clone())?;
            let pd = json!({
                "min_direction_radius": num(rep.min_direction_radius),
                "worst_direction": rep.worst_direction,
                "directions": rep.directions,
            });
            (rep.radius, Some(pd))
        }
        None => {
            let rec = reconstruct_series(s.oracle.as_ref(), a.slices.order, &s.plans)?;
            (estimate_radius(&rec, s.window.clone())?, None)
        }
    };
    Ok(Outcome {
        config,
        results: json!({ "radius": radius.to_json(), "r": num(radius.r_est), "polydisk": polydisk }),
        table: norm_table(&radius),
    })
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    /// Node sets: middle-thirds:depth=8, spk:p=2,k=1,depth=16,
    /// roots:r=0.99,eps=0.01 or chebyshev.
    #[arg(long, default_value = "middle-thirds")]
    pub nodes: String,
    /// A sample-point file instead of --nodes.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// Field of the sample file.
    #[arg(long, default_value = "real")]
    pub field: String,
    #[arg(long, default_value = "1..12")]
    pub degrees: String,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Trial polynomials: unit-ball or monomials.
    #[arg(long, default_value = "unit-ball")]
    pub family: String,
}

fn trial_family(s: &str) -> Result<TrialFamily, CliError> {
    match s {
        "unit-ball" => Ok(TrialFamily::UnitBall),
        "monomials" => Ok(TrialFamily::Monomials),
        other => Err(CliError::invalid(format!("unknown trial family {other:?}"))),
    }
}

/// Node sets of a conditioning run.
enum NodeSet {
    Sample(SamplePointSet),
    PerDegree(Vec<NodePlan>),
}

fn spk_embedding(opts: &Options) -> Result<SpreadEmbedding, CliError> {
    let p: u64 = opts.get("p", Some(2))?;
    let k: u32 = opts.get("k", Some(1))?;
    let depth: usize = opts.get("depth", Some(16))?;
    let prec: usize = opts.get("prec", Some(64))?;
    let desc = if k == 1 { FieldDescriptor::padic(p, prec)? } else { FieldDescriptor::ramified(p, k, prec)? };
    Ok(SpreadEmbedding::new(desc, SpreadScheme::Spk { p, k }, depth)?)
}

fn node_set(opts: &Options, max_n: usize) -> Result<(NodeSet, Value, Vec<Value>), CliError> {
    let mut extras = Vec::new();
    match opts.name.as_str() {
        "middle-thirds" => {
            opts.check_keys(&["depth"])?;
            let depth: usize = opts.get("depth", Some(8))?;
            let e = SpreadEmbedding::new(FieldDescriptor::Real, SpreadScheme::MiddleThirdsReal, depth)?;
            let pts = BitString::all(depth).map(|b| Ok(vec![e.embed(&b)?])).collect::<Result<Vec<_>, CliError>>()?;
            Ok((NodeSet::Sample(SamplePointSet::new(pts)?), json!({ "kind": "middle-thirds", "depth": depth }), extras))
        }
        "spk" => {
            opts.check_keys(&["p", "k", "depth", "prec"])?;
            let e = spk_embedding(opts)?;
            let mu = BigRational::from_integer(1.into());
            let plans = (0..=max_n).map(|n| select_nodes_nonarch(&e, |_| true, n, &mu)).collect::<Result<Vec<_>, _>>()?;
            for p in &plans {
                let s = separation_lower_bound(p, &e)?;
                extras.push(json!({
                    "n": s.n,
                    "m": s.level,
                    "average_bound": s.average_bound,
                    "measured_average": s.measured_average,
                    "log_product_bound": s.log_product_bound,
                    "measured_log_product": s.measured_log_product,
                    "C": s.c,
                    "gamma": s.gamma,
                    "holds": s.holds(),
                }));
            }
            let cfg = json!({ "kind": "spk", "field": e.descriptor().to_string(), "depth": e.depth(), "mu": mu.to_string() });
            Ok((NodeSet::PerDegree(plans), cfg, extras))
        }
        "roots" => {
            opts.check_keys(&["r", "eps"])?;
            let r: f64 = opts.get("r", Some(0.99))?;
            let eps: f64 = opts.get("eps", Some(0.01))?;
            let plans = (0..=max_n).map(|n| select_nodes_arch(n, eps, r, 0.0)).collect::<Result<Vec<_>, _>>()?;
            for p in plans.iter().skip(1) {
                if let germinate_core::interp::NodeScheme::ArchRootsOfUnity { big_n, t, .. } = p.scheme {
                    let b = arch_integral_bound(t, r)?;
                    extras.push(json!({ "n": p.degree(), "N": big_n, "t": t, "r": r, "lower": b.lower, "upper": b.upper }));
                }
            }
            Ok((NodeSet::PerDegree(plans), json!({ "kind": "roots", "r": r, "eps": eps }), extras))
        }
        "chebyshev" => {
            opts.check_keys(&[])?;
            let plans = (0..=max_n).map(|n| NodePlan::chebyshev(FieldDescriptor::Real, n)).collect::<Result<Vec<_>, _>>()?;
            Ok((NodeSet::PerDegree(plans), json!({ "kind": "chebyshev" }), extras))
        }
        other => Err(CliError::invalid(format!("unknown node set {other:?}"))),
    }
}

pub fn condition(a: &ConditionArgs, seed: u64) -> Result<Outcome, CliError> {
    let degrees = parse_range(&a.degrees)?;
    let (set, nodes_cfg, extras) = match &a.sample {
        Some(path) => {
            let desc = parse_field(&a.field)?;
            (NodeSet::Sample(read_sample(desc, path)?), json!({ "kind": "sample", "path": path.display().to_string(), "field": desc.to_string() }), Vec::new())
        }
        None => node_set(&Options::parse(&a.nodes)?, *degrees.end())?,
    };
    let config = ConditioningConfig {
        degrees: *degrees.start() as u32..=*degrees.end() as u32,
        trials: a.trials,
        seed,
        family: trial_family(&a.family)?,
    };
    let report = match &set {
        NodeSet::Sample(x) => conditioning_estimate(ConditioningSource::Sample(x), &config)?,
        NodeSet::PerDegree(p) => conditioning_estimate(ConditioningSource::PlanPerDegree(p), &config)?,
    };
    if !report.envelope_holds() {
        return Err(CliError::Internal("fitted envelope misses a recorded trial".into()));
    }
    let mut table = Table::new(&["trial", "n", "log_ratio"]);
    for t in &report.trial_data {
        table.push([t.id.clone(), t.n.to_string(), t.log_ratio.to_string()]);
    }
    let mut results = report.to_json();
    results["envelope_holds"] = json!(true);
    results["nodes"] = json!(extras);
    Ok(Outcome {
        config: json!({
            "nodes": nodes_cfg,
            "degrees": [degrees.start(), degrees.end()],
            "trials": a.trials,
            "family": a.family,
            "seed": seed,
        }),
        results,
        table,
    })
}

#[derive(Debug, Args)]
pub struct PerfectInterpArgs {
    /// Radii r of the roots-of-unity node sets.
    #[arg(long, default_value = "0.9,0.99")]
    pub r: String,
    /// Gaps eps, with N = ceil(n / (1 - eps)).
    #[arg(long, default_value = "0.1,0.01")]
    pub eps: String,
    #[arg(long, default_value = "1..24")]
    pub degrees: String,
    #[arg(long, default_value_t = 30)]
    pub trials: usize,
    /// Largest power for the real and 2-adic counterexample certificate
    /// (0 skips it).
    #[arg(long, default_value_t = 60)]
    pub certify_to: u32,
}

pub fn perfect_interp(a: &PerfectInterpArgs, seed: u64) -> Result<Outcome, CliError> {
    let rs = parse_list(&a.r)?;
    let epss = parse_list(&a.eps)?;
    let degrees = parse_range(&a.degrees)?;
    let config = ConditioningConfig {
        degrees: *degrees.start() as u32..=*degrees.end() as u32,
        trials: a.trials,
        seed,
        family: TrialFamily::UnitBall,
    };
    let grid: Vec<(f64, f64)> = rs.iter().flat_map(|&r| epss.iter().map(move |&e| (r, e))).collect();
    let reports = grid
        .par_iter()
        .map(|&(r, eps)| {
            let plans = (0..=*degrees.end()).map(|n| select_nodes_arch(n, eps, r, 0.0)).collect::<Result<Vec<_>, _>>()?;
            Ok(conditioning_estimate(ConditioningSource::PlanPerDegree(&plans), &config)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    // refinement is the product order: r up, eps down
    let mut nonincreasing = true;
    for (i, &(ri, ei)) in grid.iter().enumerate() {
        for (j, &(rj, ej)) in grid.iter().enumerate() {
            if i != j && rj >= ri && ej <= ei && reports[j].b > reports[i].b + 1e-12 {
                nonincreasing = false;
            }
        }
    }
    let finest = (0..grid.len())
        .max_by(|&i, &j| (grid[i].0, -grid[i].1).partial_cmp(&(grid[j].0, -grid[j].1)).expect("finite parameters"))
        .ok_or_else(|| CliError::invalid("empty (r, eps) grid"))?;
    let mut table = Table::new(&["i", "r", "eps", "B"]);
    let mut seq = Vec::new();
    for (i, (&(r, eps), rep)) in grid.iter().zip(&reports).enumerate() {
        table.push([i.to_string(), r.to_string(), eps.to_string(), rep.b.to_string()]);
        seq.push(json!({ "i": i, "r": r, "eps": eps, "A": rep.a, "B": rep.b, "envelope_holds": rep.envelope_holds() }));
    }
    let certificate = if a.certify_to > 0 { Some(counterexample_certificate(a.certify_to)?.to_json()) } else { None };
    Ok(Outcome {
        config: json!({ "r": rs, "eps": epss, "degrees": [degrees.start(), degrees.end()], "trials": a.trials, "seed": seed, "certify_to": a.certify_to }),
        results: json!({
            "sequence": seq,
            "nonincreasing": nonincreasing,
            "final_B": reports[finest].b,
            "final": { "r": grid[finest].0, "eps": grid[finest].1 },
            "certificate": certificate,
        }),
        table,
    })
}

#[derive(Debug, Args)]
pub struct ZerosArgs {
    #[arg(long, default_value = "real")]
    pub field: String,
    /// Factored input {"factors": [{"linear": [...], "const": c}]}.
    #[arg(long)]
    pub factored: Option<PathBuf>,
    /// Expanded polynomial JSON.
    #[arg(long)]
    pub poly: Option<PathBuf>,
    /// Base point u, comma separated. Without it a univariate --poly gets
    /// its Newton polygon, root norms and rootedness.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Number of generated unit directions.
    #[arg(long, default_value_t = 360)]
    pub directions: usize,
    /// Sample-point file of unit directions, replacing the generated ones.
    #[arg(long)]
    pub directions_file: Option<PathBuf>,
    /// A JSON array of factored polynomials; with --points, reports the
    /// empirical constant C.
    #[arg(long)]
    pub family: Option<PathBuf>,
    #[arg(long)]
    pub points: Option<PathBuf>,
}

pub fn zeros(a: &ZerosArgs, seed: u64) -> Result<Outcome, CliError> {
    let desc = parse_field(&a.field)?;
    let config = json!({
        "field": desc.to_string(),
        "factored": a.factored.as_ref().map(|p| p.display().to_string()),
        "poly": a.poly.as_ref().map(|p| p.display().to_string()),
        "point": a.point,
        "directions": a.directions,
        "directions_file": a.directions_file.as_ref().map(|p| p.display().to_string()),
        "family": a.family.as_ref().map(|p| p.display().to_string()),
        "points": a.points.as_ref().map(|p| p.display().to_string()),
        "seed": seed,
    });
    let directions = |d: usize| -> Result<SamplePointSet, CliError> {
        match &a.directions_file {
            Some(p) => read_sample(desc, p),
            None => unit_directions(desc, d, a.directions, seed),
        }
    };
    if let (Some(fam), Some(pts)) = (&a.family, &a.points) {
        let list = read_json(fam)?;
        let family = list
            .as_array()
            .ok_or_else(|| CliError::invalid("--family expects a JSON array"))?
            .iter()
            .map(|v| Ok(FactoredPoly::from_json(desc, v)?))
            .collect::<Result<Vec<_>, CliError>>()?;
        let d = family.first().ok_or_else(|| CliError::invalid("empty family"))?.arity;
        let points = points_from_json(desc, &read_json(pts)?)?;
        let c = empirical_c(&family, &points, &directions(d)?)?;
        let mut table = Table::new(&["binding_poly", "binding_point", "C"]);
        table.push([c.binding_poly.to_string(), c.binding_point.to_string(), c.c.to_string()]);
        return Ok(Outcome { config, results: json!({ "empirical_C": c.to_json(), "C": num(c.c) }), table });
    }
    let input = match (&a.factored, &a.poly) {
        (Some(p), None) => PolyInput::Factored(FactoredPoly::from_json(desc, &read_json(p)?)?),
        (None, Some(p)) => PolyInput::Expanded(read_poly(desc, p)?),
        _ => return Err(CliError::invalid("give exactly one of --factored, --poly (or --family with --points)")),
    };
    match &a.point {
        Some(u) => {
            let u = parse_point(desc, u)?;
            let x = directions(input.arity())?;
            let r = hyperbolic_distance_bound(&input, &u, &x)?;
            if r.radii.iter().any(|&s| s < r.s_u) {
                return Err(CliError::Internal("s_u exceeds a recorded direction radius".into()));
            }
            let mut table = Table::new(&["direction", "radius"]);
            for (i, s) in r.radii.iter().enumerate() {
                table.push([i.to_string(), s.to_string()]);
            }
            Ok(Outcome { config, results: json!({ "geometry": r.to_json() }), table })
        }
        None => {
            let q = input.expanded()?;
            if q.arity() != 1 {
                return Err(CliError::invalid("without --point the polynomial must be univariate"));
            }
            let mut results = json!({ "rooted": is_f_rooted(&q)?.as_str() });
            let mut table = Table::new(&["norm", "multiplicity"]);
            if desc.is_nonarchimedean() {
                results["newton_polygon"] = newton_polygon(&q)?.to_json();
                let norms = root_norms_nonarch(&q)?;
                results["root_norms"] = json!(norms
                    .entries
                    .iter()
                    .map(|(n, m)| json!({ "norm": n.to_string(), "multiplicity": m }))
                    .collect::<Vec<_>>());
                for (n, m) in &norms.entries {
                    table.push([n.to_string(), m.to_string()]);
                }
            } else {
                let roots = arch_roots(&q)?;
                results["smallest_root_modulus"] = num(roots.min_modulus());
                results["roots"] = roots.to_json();
                for z in &roots.roots {
                    table.push([z.norm().to_string(), "1".to_string()]);
                }
            }
            Ok(Outcome { config, results, table })
        }
    }
}

#[derive(Debug, Args)]
pub struct SpreadArgs {
    /// Embedding: spk:p=2,k=1[,prec=64] or middle-thirds[:field=rational].
    #[arg(long, default_value = "spk:p=2,k=1")]
    pub embedding: String,
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
}

pub fn spread(a: &SpreadArgs) -> Result<Outcome, CliError> {
    let opts = Options::parse(&a.embedding)?;
    let e = match opts.name.as_str() {
        "spk" => {
            opts.check_keys(&["p", "k", "prec"])?;
            let mut s = Options { name: opts.name.clone(), params: opts.params.clone() };
            s.params.insert("depth".into(), a.depth.to_string());
            spk_embedding(&s)?
        }
        "middle-thirds" => {
            opts.check_keys(&["field"])?;
            let desc = parse_field(&opts.get::<String>("field", Some("rational".into()))?)?;
            SpreadEmbedding::new(desc, SpreadScheme::MiddleThirdsReal, a.depth)?
        }
        other => return Err(CliError::invalid(format!("unknown embedding {other:?}"))),
    };
    let est = estimate_spread_constants(&e, a.depth)?;
    let mode = match est.mode {
        VerificationMode::Exhaustive => json!({ "kind": "exhaustive" }),
        VerificationMode::Sampled { pairs, seed } => json!({ "kind": "sampled", "pairs": pairs, "seed": seed }),
    };
    let mut table = Table::new(&["i", "coefficient"]);
    for i in 0..a.depth.min(64) {
        let b = BitString::new((0..=i).map(|j| j == i).collect());
        table.push([(i + 1).to_string(), e.embed(&b)?.to_string()]);
    }
    Ok(Outcome {
        config: json!({ "embedding": a.embedding, "field": e.descriptor().to_string(), "depth": a.depth }),
        results: json!({
            "C": est.c,
            "gamma": est.gamma,
            "min_ratio": est.min_ratio,
            "worst_pair": [est.worst_pair.0.to_string(), est.worst_pair.1.to_string()],
            "mode": mode,
            "analytic": est.analytic,
        }),
        table,
    })
}
