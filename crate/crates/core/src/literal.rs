//! Literal syntax and JSON form for Orlicz functions.
//!
//! Literals: `power:p=2`, `powerlog:alpha=1`,
//! `dilsum:base=<literal>;pairs=[(lambda,omega),...]`,
//! `tabulated:file=<path>` (CSV, two columns: log10(t), M(t)).
//! Any literal accepts the optional suffixes `;norm=<positive real>` and,
//! for cutoff kinds, `;cutoff=<eps>`.
//!
//! The JSON form is an object with `kind`, `params`, `cutoff_eps` and
//! `normalization`. Normalization is carried as `{ "ln": <f64> }` so the
//! astronomically scaled construction outputs survive the round trip.

use std::path::Path;

use num_rational::Ratio;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::num::parse_ratio;
use crate::orlicz::{Kind, OrliczFunction};
use crate::table::CubicTable;

pub fn parse_literal(s: &str) -> Result<OrliczFunction> {
    let s = s.trim();
    let (head, rest) = match s.find(':') {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => (s, ""),
    };
    match head {
        "power" => {
            let (opts, norm, cutoff) = split_options(rest)?;
            if cutoff.is_some() {
                return Err(Error::parse(0, "power kind takes no cutoff"));
            }
            let p = require_key(&opts, "p", s)?;
            apply_norm(OrliczFunction::power(p)?, norm)
        }
        "powerlog" => {
            let (opts, norm, cutoff) = split_options(rest)?;
            let alpha = require_key(&opts, "alpha", s)?;
            apply_norm(OrliczFunction::power_log_with_cutoff(alpha, cutoff)?, norm)
        }
        "dilsum" => {
            // Split on the *last* ";pairs=" so nested dilsum bases work.
            let idx = rest
                .rfind(";pairs=")
                .ok_or_else(|| Error::parse(s.len(), "dilsum needs ;pairs=[...]"))?;
            let base_part = &rest[..idx];
            let pairs_part = &rest[idx + ";pairs=".len()..];
            let base_lit = base_part
                .strip_prefix("base=")
                .ok_or_else(|| Error::parse(head.len() + 1, "dilsum needs base=<literal>"))?;
            let (pairs_str, norm, _) = split_options(pairs_part)?;
            let pairs = parse_pairs(&pairs_str_raw(pairs_part, &pairs_str))?;
            let base = parse_literal(base_lit)?;
            apply_norm(OrliczFunction::dilation_sum(base, &pairs)?, norm)
        }
        "tabulated" => {
            let (opts, norm, _cutoff) = split_options(rest)?;
            let file = opts
                .iter()
                .find(|(k, _)| k == "file")
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::parse(0, "tabulated needs file=<path>"))?;
            let points = read_tabulated_csv(Path::new(&file))?;
            apply_norm(OrliczFunction::tabulated(&points)?, norm)
        }
        other => Err(Error::parse(
            0,
            format!("unknown function kind {other:?} (expected power, powerlog, dilsum, tabulated)"),
        )),
    }
}

fn pairs_str_raw(pairs_part: &str, _parsed: &[(String, String)]) -> String {
    // The pairs list is everything up to the first ';' option separator.
    match pairs_part.find(';') {
        Some(i) => pairs_part[..i].to_string(),
        None => pairs_part.to_string(),
    }
}

fn apply_norm(f: OrliczFunction, norm: Option<f64>) -> Result<OrliczFunction> {
    match norm {
        Some(n) => f.with_normalization(n),
        None => Ok(f),
    }
}

/// Split `k=v;k=v;...` picking out `norm` and `cutoff`.
#[allow(clippy::type_complexity)]
fn split_options(s: &str) -> Result<(Vec<(String, String)>, Option<f64>, Option<f64>)> {
    let mut opts = Vec::new();
    let mut norm = None;
    let mut cutoff = None;
    for (pos, part) in s.split(';').enumerate() {
        if part.is_empty() {
            continue;
        }
        let Some(eq) = part.find('=') else {
            // Not a k=v fragment (e.g. the raw pairs list); keep it verbatim.
            opts.push((part.to_string(), String::new()));
            continue;
        };
        let key = &part[..eq];
        let val = &part[eq + 1..];
        match key {
            "norm" => {
                norm = Some(val.parse::<f64>().map_err(|_| {
                    Error::parse(pos, format!("bad norm value {val:?}"))
                })?)
            }
            "cutoff" => {
                cutoff = Some(val.parse::<f64>().map_err(|_| {
                    Error::parse(pos, format!("bad cutoff value {val:?}"))
                })?)
            }
            _ => opts.push((key.to_string(), val.to_string())),
        }
    }
    Ok((opts, norm, cutoff))
}

fn require_key(opts: &[(String, String)], key: &str, ctx: &str) -> Result<f64> {
    let v = opts
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::parse(0, format!("missing {key}= in {ctx:?}")))?;
    v.parse::<f64>()
        .map_err(|_| Error::parse(0, format!("bad value for {key}: {v:?}")))
}

/// Parse `[(l,w),(l,w)]`.
fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| Error::parse(0, format!("pairs must be [...], got {s:?}")))?;
    let mut out = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let open = rest
            .find('(')
            .ok_or_else(|| Error::parse(0, "expected '(' in pairs"))?;
        let close = rest[open..]
            .find(')')
            .ok_or_else(|| Error::parse(open, "unclosed pair"))?
            + open;
        let body = &rest[open + 1..close];
        let nums: Vec<&str> = body.split(',').map(str::trim).collect();
        if nums.len() != 2 {
            return Err(Error::parse(open, format!("pair needs two entries, got {body:?}")));
        }
        let l: f64 = nums[0]
            .parse()
            .map_err(|_| Error::parse(open, format!("bad lambda {:?}", nums[0])))?;
        let w: f64 = nums[1]
            .parse()
            .map_err(|_| Error::parse(open, format!("bad weight {:?}", nums[1])))?;
        out.push((l, w));
        rest = rest[close + 1..].trim_start_matches(',').trim();
    }
    if out.is_empty() {
        return Err(Error::parse(0, "pairs list is empty"));
    }
    Ok(out)
}

pub fn read_tabulated_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e.to_string()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::parse(lineno, format!("expected 2 columns, got {line:?}")));
        }
        let a: f64 = cols[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad log10(t) {:?}", cols[0])))?;
        let b: f64 = cols[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad value {:?}", cols[1])))?;
        out.push((a, b));
    }
    Ok(out)
}

pub fn to_value(f: &OrliczFunction) -> Value {
    let (kind, params, cutoff_eps) = match &f.kind {
        Kind::Power { p } => ("power", json!({ "p": p }), None),
        Kind::PowerLog { alpha, cutoff } => (
            "powerlog",
            json!({ "alpha": alpha }),
            Some(cutoff.ln_eps.exp()),
        ),
        Kind::DilationSum { base, terms } => {
            let all_finite = terms.iter().all(|t| t.weight.is_finite());
            let params = if all_finite {
                json!({
                    "base": to_value(base),
                    "pairs": terms.iter().map(|t| json!([t.lambda, t.weight])).collect::<Vec<_>>(),
                })
            } else {
                json!({
                    "base": to_value(base),
                    "pairs_ln": terms
                        .iter()
                        .map(|t| json!([t.ln_lambda, t.ln_weight]))
                        .collect::<Vec<_>>(),
                })
            };
            ("dilsum", params, None)
        }
        Kind::GeometricSum {
            base,
            tau,
            kappa,
            big_r,
        } => (
            "geomsum",
            json!({
                "base": to_value(base),
                "tau": tau.to_string(),
                "kappa": kappa.to_string(),
                "r": big_r,
            }),
            None,
        ),
        Kind::Synthesized { psi, k_const } => (
            "synthesized",
            json!({
                "psi": { "lo": psi.lo, "step": psi.step, "values": psi.values },
                "k": k_const,
            }),
            None,
        ),
        Kind::Tabulated { ln_ts, ln_ms, cutoff } => (
            "tabulated",
            json!({ "ln_ts": ln_ts, "ln_ms": ln_ms }),
            Some(cutoff.ln_eps.exp()),
        ),
    };
    let mut obj = Map::new();
    obj.insert("kind".into(), json!(kind));
    obj.insert("params".into(), params);
    obj.insert("cutoff_eps".into(), json!(cutoff_eps));
    let normalization = if f.ln_scale == 0.0 {
        Value::Null
    } else {
        json!({ "ln": f.ln_scale })
    };
    obj.insert("normalization".into(), normalization);
    if f.arg_ln_shift != 0.0 {
        obj.insert("arg_dilation_ln".into(), json!(f.arg_ln_shift));
    }
    Value::Object(obj)
}

pub fn from_value(v: &Value) -> Result<OrliczFunction> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::parse(0, "function JSON must be an object"))?;
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::parse(0, "missing kind"))?;
    let params = obj.get("params").cloned().unwrap_or(Value::Null);
    let cutoff_eps = obj.get("cutoff_eps").and_then(Value::as_f64);
    let mut f = match kind {
        "power" => OrliczFunction::power(num_field(&params, "p")?)?,
        "powerlog" => {
            OrliczFunction::power_log_with_cutoff(num_field(&params, "alpha")?, cutoff_eps)?
        }
        "dilsum" => {
            let base = from_value(
                params
                    .get("base")
                    .ok_or_else(|| Error::parse(0, "dilsum missing base"))?,
            )?;
            if let Some(pairs) = params.get("pairs").and_then(Value::as_array) {
                let pairs = parse_pair_array(pairs)?;
                OrliczFunction::dilation_sum(base, &pairs)?
            } else if let Some(pairs) = params.get("pairs_ln").and_then(Value::as_array) {
                let pairs = parse_pair_array(pairs)?;
                OrliczFunction::dilation_sum_ln(base, &pairs)?
            } else {
                return Err(Error::parse(0, "dilsum missing pairs"));
            }
        }
        "geomsum" => {
            let base = from_value(
                params
                    .get("base")
                    .ok_or_else(|| Error::parse(0, "geomsum missing base"))?,
            )?;
            let tau: Ratio<u64> = parse_ratio(str_field(&params, "tau")?)?;
            let kappa: Ratio<u64> = parse_ratio(str_field(&params, "kappa")?)?;
            let big_r = params
                .get("r")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::parse(0, "geomsum missing r"))? as u32;
            OrliczFunction::geometric_sum(base, tau, kappa, big_r)?
        }
        "synthesized" => {
            let psi = params
                .get("psi")
                .ok_or_else(|| Error::parse(0, "synthesized missing psi"))?;
            let lo = num_field(psi, "lo")?;
            let step = num_field(psi, "step")?;
            let values: Vec<f64> = psi
                .get("values")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(0, "psi missing values"))?
                .iter()
                .filter_map(Value::as_f64)
                .collect();
            OrliczFunction::synthesized(CubicTable::new(lo, step, values), num_field(&params, "k")?)
        }
        "tabulated" => {
            let ln_ts: Vec<f64> = vec_field(&params, "ln_ts")?;
            let ln_ms: Vec<f64> = vec_field(&params, "ln_ms")?;
            let pts: Vec<(f64, f64)> = ln_ts
                .iter()
                .zip(&ln_ms)
                .map(|(&u, &m)| (u / std::f64::consts::LN_10, m.exp()))
                .collect();
            OrliczFunction::tabulated(&pts)?
        }
        other => return Err(Error::parse(0, format!("unknown kind {other:?}"))),
    };
    if let Some(norm) = obj.get("normalization") {
        if let Some(ln) = norm.get("ln").and_then(Value::as_f64) {
            f = f.with_ln_normalization(ln);
        } else if let Some(v) = norm.as_f64() {
            f = f.with_normalization(v)?;
        }
    }
    if let Some(shift) = obj.get("arg_dilation_ln").and_then(Value::as_f64) {
        f = f.argument_dilated(shift);
    }
    Ok(f)
}

fn num_field(v: &Value, key: &str) -> Result<f64> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::parse(0, format!("missing numeric field {key}")))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::parse(0, format!("missing string field {key}")))
}

fn vec_field(v: &Value, key: &str) -> Result<Vec<f64>> {
    Ok(v.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse(0, format!("missing array field {key}")))?
        .iter()
        .filter_map(Value::as_f64)
        .collect())
}

fn parse_pair_array(arr: &[Value]) -> Result<Vec<(f64, f64)>> {
    arr.iter()
        .map(|p| {
            let pair = p
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::parse(0, "pair must be [l, w]"))?;
            Ok((
                pair[0].as_f64().ok_or_else(|| Error::parse(0, "bad lambda"))?,
                pair[1].as_f64().ok_or_else(|| Error::parse(0, "bad weight"))?,
            ))
        })
        .collect()
}

impl Serialize for OrliczFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        to_value(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OrliczFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        from_value(&v).map_err(D::Error::custom)
    }
}

/// Lipschitz function literals: `identity`, `zero`, `const:c=...`,
/// `from-orlicz:<orlicz literal>`, `tabulated:file=<path>` (columns x, phi(x)).
pub fn parse_phi_literal(s: &str) -> Result<crate::kalton::LipschitzFunction> {
    use crate::kalton::LipschitzFunction;
    let s = s.trim();
    if s == "identity" {
        return Ok(LipschitzFunction::identity());
    }
    if s == "zero" {
        return Ok(LipschitzFunction::zero());
    }
    if let Some(rest) = s.strip_prefix("const:") {
        let (opts, _, _) = split_options(rest)?;
        let c = require_key(&opts, "c", s)?;
        return Ok(LipschitzFunction::constant(c));
    }
    if let Some(rest) = s.strip_prefix("from-orlicz:") {
        let m1 = parse_literal(rest)?;
        return crate::kalton::phi_from_orlicz(&m1);
    }
    if let Some(rest) = s.strip_prefix("tabulated:") {
        let (opts, _, _) = split_options(rest)?;
        let file = opts
            .iter()
            .find(|(k, _)| k == "file")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::parse(0, "tabulated phi needs file=<path>"))?;
        let text = std::fs::read_to_string(&file).map_err(|e| Error::Io(e.to_string()))?;
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(Error::parse(lineno, "expected 2 columns"));
            }
            pts.push((
                cols[0].parse::<f64>().map_err(|_| Error::parse(lineno, "bad x"))?,
                cols[1].parse::<f64>().map_err(|_| Error::parse(lineno, "bad phi"))?,
            ));
        }
        return LipschitzFunction::tabulated(&pts);
    }
    Err(Error::parse(
        0,
        format!("unknown phi literal {s:?} (expected identity, zero, const:, from-orlicz:, tabulated:)"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_power_and_norm() {
        let f = parse_literal("power:p=2;norm=3").unwrap();
        assert!((f.eval(1.0).unwrap() - 3.0).abs() < 1e-14);
        assert!(parse_literal("power:p=0.5").is_err());
        assert!(parse_literal("mystery:p=2").is_err());
    }

    #[test]
    fn parse_dilsum_nested() {
        let f = parse_literal("dilsum:base=powerlog:alpha=1;pairs=[(0.5,2),(0.25,1)]").unwrap();
        let base = parse_literal("powerlog:alpha=1").unwrap();
        let direct = 2.0 * base.eval(0.25).unwrap() + base.eval(0.125).unwrap();
        assert!((f.eval(0.5).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        for lit in [
            "power:p=1.5",
            "powerlog:alpha=2;norm=4",
            "dilsum:base=power:p=2;pairs=[(0.5,3)]",
        ] {
            let f = parse_literal(lit).unwrap();
            let v = to_value(&f);
            let g = from_value(&v).unwrap();
            for t in [0.01, 0.2, 0.9] {
                assert!(
                    (f.eval(t).unwrap() - g.eval(t).unwrap()).abs()
                        < 1e-12 * f.eval(t).unwrap().max(1e-300),
                    "{lit} at {t}"
                );
            }
        }
    }
}
