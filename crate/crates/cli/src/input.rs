//! Parsing of flag values and input files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::ops::RangeInclusive;
use std::path::Path;

use germinate_core::field::{element_from_json, FieldDescriptor, FieldElement};
use germinate_core::germ::{FnOracle, GeometricProductOracle, LinearFormOracle, PolynomialOracle, SliceOracle, TableOracle};
use germinate_core::poly::{MultiPoly, SamplePointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::CliError;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let f = File::open(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

/// `name:key=value,key=value`, the field-descriptor syntax.
pub struct Options {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl Options {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::invalid(format!("expected key=value in {kv:?}")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Options { name: name.trim().to_string(), params })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, CliError> {
        match self.params.get(key) {
            Some(v) => v.parse().map_err(|_| CliError::invalid(format!("bad value {v:?} for {key} in {}", self.name))),
            None => default.ok_or_else(|| CliError::invalid(format!("{} needs {key}=", self.name))),
        }
    }

    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::invalid(format!("unknown key {k:?} for {}", self.name))),
            None => Ok(()),
        }
    }
}

pub fn parse_field(s: &str) -> Result<FieldDescriptor, CliError> {
    Ok(s.parse::<FieldDescriptor>()?)
}

/// `a..b` or `a..=b`, both inclusive.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, CliError> {
    let bad = || CliError::invalid(format!("expected a range a..b, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.trim_start_matches('=');
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| CliError::invalid(format!("bad number {t:?}")))).collect()
}

/// A scalar token as JSON: integers, then floats, then strings such as `1/2`.
fn token_json(t: &str) -> Value {
    let t = t.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(x) = t.parse::<f64>() {
        return Value::from(x);
    }
    Value::String(t.to_string())
}

pub fn parse_element(desc: FieldDescriptor, t: &str) -> Result<FieldElement, CliError> {
    Ok(element_from_json(desc, &token_json(t))?)
}

/// Comma-separated coordinates.
pub fn parse_point(desc: FieldDescriptor, s: &str) -> Result<Vec<FieldElement>, CliError> {
    s.split(',').map(|t| parse_element(desc, t)).collect()
}

pub fn points_from_json(desc: FieldDescriptor, v: &Value) -> Result<Vec<Vec<FieldElement>>, CliError> {
    let list = v.get("points").unwrap_or(v).as_array().ok_or_else(|| CliError::invalid("expected an array of points"))?;
    list.iter()
        .map(|p| {
            p.as_array()
                .ok_or_else(|| CliError::invalid("a point must be an array"))?
                .iter()
                .map(|c| Ok(element_from_json(desc, c)?))
                .collect()
        })
        .collect()
}

/// Sample-point JSON: `[[x1, x2], ...]` or `{"points": [...]}`.
pub fn read_sample(desc: FieldDescriptor, path: &Path) -> Result<SamplePointSet, CliError> {
    Ok(SamplePointSet::new(points_from_json(desc, &read_json(path)?)?)?)
}

pub fn read_poly(desc: FieldDescriptor, path: &Path) -> Result<MultiPoly, CliError> {
    Ok(MultiPoly::from_json(desc, &read_json(path)?)?)
}

/// A slice source: a JSON Lines table, a polynomial file, or a built-in germ
/// (`geometric:d=2`, `linear:w=1;1`, `diverge:d=2,c=2`).
pub fn slice_source(
    desc: FieldDescriptor,
    slices: Option<&Path>,
    poly: Option<&Path>,
    oracle: Option<&str>,
) -> Result<Box<dyn SliceOracle>, CliError> {
    match (slices, poly, oracle) {
        (Some(path), None, None) => {
            let f = File::open(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
            Ok(Box::new(TableOracle::from_jsonl(desc, BufReader::new(f))?))
        }
        (None, Some(path), None) => Ok(Box::new(PolynomialOracle::new(&read_poly(desc, path)?))),
        (None, None, Some(s)) => builtin_oracle(desc, s),
        _ => Err(CliError::invalid("give exactly one of --slices, --poly, --oracle")),
    }
}

fn builtin_oracle(desc: FieldDescriptor, s: &str) -> Result<Box<dyn SliceOracle>, CliError> {
    let opts = Options::parse(s)?;
    match opts.name.as_str() {
        "geometric" => {
            opts.check_keys(&["d"])?;
            Ok(Box::new(GeometricProductOracle::new(desc, opts.get("d", Some(2usize))?)))
        }
        "linear" => {
            opts.check_keys(&["w"])?;
            let w: String = opts.get("w", None)?;
            let w = w.split(';').map(|t| parse_element(desc, t)).collect::<Result<Vec<_>, _>>()?;
            Ok(Box::new(LinearFormOracle::new(w)?))
        }
        "diverge" => {
            // a_n(x) = (c x_1)^n: radius 1/c along every chart direction
            opts.check_keys(&["d", "c"])?;
            let d: usize = opts.get("d", Some(2))?;
            let c = parse_element(desc, &opts.get::<String>("c", Some("2".into()))?)?;
            Ok(Box::new(FnOracle::new(desc, d, usize::MAX, move |x, n| Ok(x[0].mul(&c)?.pow(n as u32)))))
        }
        other => Err(CliError::invalid(format!("unknown oracle {other:?}"))),
    }
}

/// Unit directions: the circle in dimension 2, a Fibonacci sphere in
/// dimension 3, seeded Gaussian samples above; basis vectors and the
/// all-ones vector for the nonarchimedean kinds.
pub fn unit_directions(desc: FieldDescriptor, d: usize, count: usize, seed: u64) -> Result<SamplePointSet, CliError> {
    if count == 0 || d == 0 {
        return Err(CliError::invalid("need at least one direction"));
    }
    let lift = |v: Vec<f64>| -> Vec<FieldElement> {
        v.into_iter()
            .map(|c| match desc {
                FieldDescriptor::Complex => FieldElement::complex(c, 0.0),
                _ => FieldElement::real(c),
            })
            .collect()
    };
    if desc.is_nonarchimedean() {
        let mut pts: Vec<Vec<FieldElement>> = (0..d)
            .map(|i| (0..d).map(|j| FieldElement::from_i64(desc, (i == j) as i64)).collect())
            .collect();
        if d > 1 {
            pts.push(vec![FieldElement::one(desc); d]);
        }
        return Ok(SamplePointSet::new(pts)?);
    }
    if !matches!(desc, FieldDescriptor::Real | FieldDescriptor::Complex) {
        return Err(CliError::invalid(format!("generated directions need real or complex coordinates, got {desc}")));
    }
    let pts: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let g: Vec<f64> = (0..d)
                        .map(|_| {
                            let u: f64 = 1.0 - rng.gen::<f64>();
                            let v: f64 = rng.gen();
                            (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
                        })
                        .collect();
                    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    g.iter().map(|x| x / n).collect()
                })
                .collect()
        }
    };
    Ok(SamplePointSet::new(pts.into_iter().map(lift).collect())?)
}
