//! Polynomials with rational coefficients, as used in sheet specifications.
//!
//! JSON form: `{"vars": 2, "terms": [["3", [2, 0]], ["-3", [0, 2]]]}`, where a
//! coefficient is a number or a string `"p"` / `"p/q"`.

use serde_json::{json, Value};

use crate::error::{Result, SpecqError};

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub vars: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn zero(vars: usize) -> Self {
        Polynomial { vars, terms: Vec::new() }
    }

    pub fn constant(vars: usize, c: f64) -> Self {
        Polynomial { vars, terms: vec![(c, vec![0; vars])] }
    }

    /// Σ_k a_k x_k.
    pub fn linear(a: &[f64]) -> Self {
        let vars = a.len();
        let terms = a
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, &c)| {
                let mut e = vec![0; vars];
                e[k] = 1;
                (c, e)
            })
            .collect();
        Polynomial { vars, terms }
    }

    pub fn monomial(c: f64, exps: Vec<u32>) -> Self {
        Polynomial { vars: exps.len(), terms: vec![(c, exps)] }
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial { vars: self.vars, terms: self.terms.iter().map(|(c, e)| (c * s, e.clone())).collect() }
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Polynomial { vars: self.vars.max(other.vars), terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// ∂/∂x_k.
    pub fn partial(&self, x: &[f64], k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(_, e)| e[k] > 0)
            .map(|(c, e)| {
                let mut p = c * e[k] as f64;
                for (j, (&ej, v)) in e.iter().zip(x).enumerate() {
                    let pow = if j == k { ej - 1 } else { ej };
                    p *= v.powi(pow as i32);
                }
                p
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.vars).map(|k| self.partial(x, k)).collect()
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self.terms.iter().map(|(c, e)| json!([c, e])).collect();
        json!({ "vars": self.vars, "terms": terms })
    }

    /// Parses the JSON form; `path` prefixes error messages.
    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        let err = |what: &str| SpecqError::Parse(format!("{path}: {what}"));
        let vars = v.get("vars").and_then(Value::as_u64).ok_or_else(|| err("missing integer \"vars\""))? as usize;
        let raw = v.get("terms").and_then(Value::as_array).ok_or_else(|| err("missing array \"terms\""))?;
        let mut terms = Vec::with_capacity(raw.len());
        for (k, t) in raw.iter().enumerate() {
            let tp = format!("{path}.terms[{k}]");
            let pair = t.as_array().filter(|a| a.len() == 2).ok_or_else(|| SpecqError::Parse(format!("{tp}: expected [coefficient, exponents]")))?;
            let c = parse_coefficient(&pair[0]).map_err(|e| SpecqError::Parse(format!("{tp}: {e}")))?;
            let exps: Vec<u32> = pair[1]
                .as_array()
                .ok_or_else(|| SpecqError::Parse(format!("{tp}: exponents must be an array")))?
                .iter()
                .map(|e| e.as_u64().map(|e| e as u32))
                .collect::<Option<_>>()
                .ok_or_else(|| SpecqError::Parse(format!("{tp}: exponents must be nonnegative integers")))?;
            if exps.len() != vars {
                return Err(SpecqError::Parse(format!("{tp}: expected {vars} exponents, found {}", exps.len())));
            }
            terms.push((c, exps));
        }
        Ok(Polynomial { vars, terms })
    }
}

/// A number, or a string holding an integer, decimal or `p/q`.
pub fn parse_coefficient(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| "coefficient out of range".to_string()),
        Value::String(s) => parse_rational(s),
        _ => Err("coefficient must be a number or a string".into()),
    }
}

pub fn parse_rational(s: &str) -> std::result::Result<f64, String> {
    let bad = || format!("bad coefficient {s:?}");
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: f64 = num.parse().map_err(|_| bad())?;
    let q: f64 = den.parse().map_err(|_| bad())?;
    if q == 0.0 {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(p / q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_gradient() {
        let p = Polynomial { vars: 2, terms: vec![(3.0, vec![2, 0]), (-3.0, vec![0, 2]), (0.5, vec![1, 1])] };
        assert_eq!(p.eval(&[1.0, 2.0]), 3.0 - 12.0 + 1.0);
        assert_eq!(p.gradient(&[1.0, 2.0]), vec![6.0 + 1.0, -12.0 + 0.5]);
    }

    #[test]
    fn json_round_trip_and_rationals() {
        let v: Value = serde_json::from_str(r#"{"vars":2,"terms":[["3/2",[1,0]],[-1,[0,3]]]}"#).unwrap();
        let p = Polynomial::from_json(&v, "p").unwrap();
        assert_eq!(p.terms[0].0, 1.5);
        assert_eq!(Polynomial::from_json(&p.to_json(), "p").unwrap(), p);
        let bad: Value = serde_json::from_str(r#"{"vars":2,"terms":[["1/0",[1,0]]]}"#).unwrap();
        let e = Polynomial::from_json(&bad, "sheets[0][0]").unwrap_err();
        assert!(e.to_string().contains("sheets[0][0].terms[0]"));
    }
}
