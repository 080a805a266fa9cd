use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use super::{FieldDescriptor, FieldElement, FieldError, Result, Valuation};

/// Encodes an element: reals as numbers, complexes as `[re, im]`, p-adics as
/// `{"v": "<valuation>", "digits": [...]}` and rationals as `"num/den"`.
pub fn element_to_json(x: &FieldElement) -> Value {
    match x.descriptor() {
        FieldDescriptor::Real => json!(x.as_f64().unwrap_or(0.0)),
        FieldDescriptor::Complex => {
            let z = x.as_complex().unwrap_or_default();
            json!([z.re, z.im])
        }
        FieldDescriptor::Padic { .. } | FieldDescriptor::RamifiedPadic { .. } => {
            let v = x.valuation().unwrap_or(Valuation::Infinite);
            json!({ "v": v.to_string(), "digits": x.digits().unwrap_or_default() })
        }
        FieldDescriptor::ExactRational { .. } => {
            let q = x.as_rational().cloned().unwrap_or_default();
            json!(format!("{}/{}", q.numer(), q.denom()))
        }
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || FieldError::Malformed(format!("bad rational {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Decodes an element of `desc`. Integers are accepted for every kind.
pub fn element_from_json(desc: FieldDescriptor, v: &Value) -> Result<FieldElement> {
    let bad = || FieldError::Malformed(format!("cannot read {v} as an element of {desc}"));
    if let Some(i) = v.as_i64() {
        if desc != FieldDescriptor::Real && desc != FieldDescriptor::Complex {
            return Ok(FieldElement::from_i64(desc, i));
        }
    }
    match desc {
        FieldDescriptor::Real => v.as_f64().map(FieldElement::real).ok_or_else(bad),
        FieldDescriptor::Complex => {
            if let Some(x) = v.as_f64() {
                return Ok(FieldElement::complex(x, 0.0));
            }
            let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
            let re = arr[0].as_f64().ok_or_else(bad)?;
            let im = arr[1].as_f64().ok_or_else(bad)?;
            Ok(FieldElement::complex(re, im))
        }
        FieldDescriptor::Padic { .. } | FieldDescriptor::RamifiedPadic { .. } => {
            if let Some(s) = v.as_str() {
                return Ok(FieldElement::from_rational(desc, &parse_rational(s)?));
            }
            let obj = v.as_object().ok_or_else(bad)?;
            let val: Valuation = match obj.get("v") {
                Some(Value::String(s)) => s.parse().map_err(FieldError::Malformed)?,
                Some(Value::Number(n)) => Valuation::finite(n.as_i64().ok_or_else(bad)?, 1),
                _ => return Err(bad()),
            };
            let digits: Vec<u32> = obj
                .get("digits")
                .and_then(Value::as_array)
                .ok_or_else(bad)?
                .iter()
                .map(|d| d.as_u64().map(|d| d as u32).ok_or_else(bad))
                .collect::<Result<_>>()?;
            FieldElement::from_digits(desc, val, &digits)
        }
        FieldDescriptor::ExactRational { .. } => {
            let s = v.as_str().ok_or_else(bad)?;
            FieldElement::rational(desc, parse_rational(s)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_each_kind() {
        let descs = [
            FieldDescriptor::Real,
            FieldDescriptor::Complex,
            FieldDescriptor::padic(3, 10).unwrap(),
            FieldDescriptor::ramified(2, 3, 12).unwrap(),
            FieldDescriptor::rational(),
        ];
        for d in descs {
            let x = FieldElement::from_i64(d, -7).div(&FieldElement::from_i64(d, 12)).unwrap();
            let j = element_to_json(&x);
            assert_eq!(element_from_json(d, &j).unwrap(), x, "{d}");
        }
    }

    #[test]
    fn padic_json_shape() {
        let d = FieldDescriptor::ramified(3, 2, 4).unwrap();
        let x = super::super::uniformizer_power(d, 3).unwrap();
        let j = element_to_json(&x);
        assert_eq!(j["v"], "3/2");
        assert_eq!(j["digits"], json!([1, 0, 0, 0]));
        let z = element_to_json(&FieldElement::zero(d));
        assert_eq!(z["v"], "inf");
    }
}
