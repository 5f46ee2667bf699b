//! Output documents: a run manifest plus a data payload, as JSON or CSV.
//!
//! Exact quantities are written as strings (`"p/q"`) or arbitrary-precision
//! JSON integers, never as decimals. Real enclosures are `{"lo", "hi"}`
//! string pairs rounded outward.

use std::collections::BTreeMap;
use std::str::FromStr;

use ecf_core::numerics::{ExtendedReal, Integer, Interval, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Number, Value};

use crate::args::Format;
use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every argument of the subcommand, defaults included.
    pub params: BTreeMap<String, String>,
    /// Arguments that reproduce the run (without `--output`).
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    /// Interval precision in bits.
    pub precision: u32,
    pub version: String,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

/// A command's result: the JSON payload and the rows written as CSV.
pub struct Report {
    pub data: Map<String, Value>,
    /// CSV rows; empty means one row made of the scalar fields of `data`.
    pub rows: Vec<Map<String, Value>>,
}

impl Report {
    pub fn new(data: Value) -> Self {
        Report { data: object(data), rows: Vec::new() }
    }

    pub fn with_rows(data: Value, rows: Vec<Value>) -> Self {
        Report { data: object(data), rows: rows.into_iter().map(object).collect() }
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        other => panic!("report payloads are objects, got {other}"),
    }
}

pub const MANIFEST_PREFIX: &str = "# manifest: ";

pub fn render(format: Format, manifest: &RunManifest, report: &Report) -> Result<String, Failure> {
    match format {
        Format::Json => {
            let doc = json!({ "manifest": manifest, "data": report.data });
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Csv => {
            let mut out = format!("{MANIFEST_PREFIX}{}\n", serde_json::to_string(manifest)?);
            let rows: Vec<Vec<(String, String)>> = if report.rows.is_empty() {
                vec![flatten(&report.data, true)]
            } else {
                report.rows.iter().map(|r| flatten(r, false)).collect()
            };
            let header: Vec<String> = rows.first().map(|r| r.iter().map(|c| c.0.clone()).collect()).unwrap_or_default();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header)?;
            for row in &rows {
                let by_name: BTreeMap<&str, &str> = row.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
                w.write_record(header.iter().map(|h| by_name.get(h.as_str()).copied().unwrap_or("")))?;
            }
            out.push_str(&String::from_utf8(w.into_inner().map_err(|e| Failure::Other(e.to_string()))?)?);
            Ok(out)
        }
    }
}

/// Recovers the manifest from a JSON or CSV output document.
pub fn read_manifest(text: &str) -> Result<RunManifest, Failure> {
    if let Some(line) = text.lines().next().and_then(|l| l.strip_prefix(MANIFEST_PREFIX)) {
        return Ok(serde_json::from_str(line)?);
    }
    let doc: Value = serde_json::from_str(text)?;
    let m = doc.get("manifest").ok_or_else(|| Failure::Usage("document has no manifest".into()))?;
    Ok(serde_json::from_value(m.clone())?)
}

/// Column/value pairs of a flat row. Intervals split into `_lo`/`_hi`
/// columns, arrays join with `;`; with `scalars_only` arrays are dropped.
fn flatten(row: &Map<String, Value>, scalars_only: bool) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, v) in row {
        match v {
            Value::Object(o) if o.contains_key("lo") && o.contains_key("hi") => {
                out.push((format!("{k}_lo"), cell(&o["lo"])));
                out.push((format!("{k}_hi"), cell(&o["hi"])));
            }
            Value::Object(_) => {}
            Value::Array(a) if !scalars_only => {
                out.push((k.clone(), a.iter().map(cell).collect::<Vec<_>>().join(";")));
            }
            Value::Array(_) => {}
            other => out.push((k.clone(), cell(other))),
        }
    }
    out
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn rat(r: &Rational) -> Value {
    Value::String(r.to_string())
}

pub fn int(i: &Integer) -> Value {
    Value::Number(Number::from_str(&i.to_string()).expect("integers are JSON numbers"))
}

pub fn ints<'a>(it: impl IntoIterator<Item = &'a Integer>) -> Value {
    Value::Array(it.into_iter().map(int).collect())
}

pub fn float(v: f64) -> Value {
    if v.is_finite() {
        Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
    } else if v.is_nan() {
        Value::String("nan".into())
    } else if v > 0.0 {
        Value::String("+inf".into())
    } else {
        Value::String("-inf".into())
    }
}

/// Decimal digits an interval of `prec` bits can carry.
pub fn digits_for(prec: u32) -> usize {
    ((prec as f64 * std::f64::consts::LOG10_2).floor() as usize).max(5)
}

pub fn interval(iv: &Interval) -> Value {
    let (lo, hi) = iv.to_decimal_pair(digits_for(iv.prec()));
    json!({ "lo": positional(&lo), "hi": positional(&hi) })
}

pub fn extended(e: &ExtendedReal) -> Value {
    match e.finite() {
        Some(iv) => interval(iv),
        None => json!({ "lo": "+inf", "hi": "+inf" }),
    }
}

/// Midpoint to at most 40 significant digits; `"+inf"` for infinity.
pub fn decimal(e: &ExtendedReal) -> Value {
    match e.finite() {
        Some(iv) => Value::String(positional(&iv.to_decimal(digits_for(iv.prec()).min(40)))),
        None => Value::String("+inf".into()),
    }
}

/// Rewrites `d.ddde±x` as a plain positional decimal with the same digits.
fn positional(s: &str) -> String {
    let Some((mant, exp)) = s.split_once('e') else { return s.to_string() };
    let Ok(exp) = exp.parse::<i64>() else { return s.to_string() };
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int}{frac}");
    // Position of the decimal point within `digits`.
    let point = int.len() as i64 + exp;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    format!("{sign}{body}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> RunManifest {
        RunManifest {
            command: "expand".into(),
            params: BTreeMap::from([("x".into(), "7/10".into())]),
            argv: vec!["expand".into(), "--x".into(), "7/10".into()],
            seed: None,
            precision: 160,
            version: "0.1.0".into(),
            timestamp: "2024-06-01T00:00:00Z".into(),
            rng: None,
        }
    }

    #[test]
    fn decimals_are_positional() {
        assert_eq!(positional("9.625e-1"), "0.9625");
        assert_eq!(positional("-1.5e-3"), "-0.0015");
        assert_eq!(positional("1.25e1"), "12.5");
        assert_eq!(positional("3.0e2"), "300");
        assert_eq!(positional("7"), "7");
    }

    #[test]
    fn big_integers_stay_exact() {
        let big: Integer = "10000000000000000000000000000000000000007".parse().unwrap();
        let v = int(&big);
        assert_eq!(v.to_string(), big.to_string());
        let back: Value = serde_json::from_str(&v.to_string()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn csv_splits_intervals_and_keeps_manifest() {
        let iv = Interval::from_rational(&Rational::from((1, 3)), 64);
        let report = Report::with_rows(json!({}), vec![json!({"n": 1, "p": "1/3", "v": interval(&iv)})]);
        let text = render(Format::Csv, &manifest(), &report).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with(MANIFEST_PREFIX));
        assert_eq!(lines.next().unwrap(), "n,p,v_lo,v_hi");
        assert!(lines.next().unwrap().starts_with("1,1/3,0.333"));
        assert_eq!(read_manifest(&text).unwrap(), manifest());
    }

    #[test]
    fn json_manifest_round_trips() {
        let report = Report::new(json!({"digits": [1, 2, 6], "truncated": false}));
        let text = render(Format::Json, &manifest(), &report).unwrap();
        assert_eq!(read_manifest(&text).unwrap(), manifest());
    }
}
