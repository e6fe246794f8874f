//! JSON documents and experiment CSV files.
//!
//! Every JSON document carries `"schema": "dynet/v1"` and a `"type"`. Models
//! are flat objects with 1-based coefficient keys `A[i]`, `By[i][j]`,
//! `Bu[i][k]` and `C[i]`, each an array of `q^-1` coefficients from lag 0;
//! absent `By`/`Bu` keys are zero. Networks list arcs as `["y2", "y1"]`
//! (from, to).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::lti::Polynomial;
use crate::network::{ArxNetworkModel, BooleanNetwork};
use crate::regression::ExperimentData;

pub const SCHEMA: &str = "dynet/v1";

fn check_header(v: &Value, kind: &str) -> Result<()> {
    match v.get("schema").and_then(Value::as_str) {
        Some(SCHEMA) => {}
        Some(s) => return Err(Error::Parse(format!("unsupported schema '{s}'"))),
        None => return Err(Error::Parse("missing field 'schema'".into())),
    }
    match v.get("type").and_then(Value::as_str) {
        Some(t) if t == kind => Ok(()),
        Some(t) => Err(Error::Parse(format!("expected type '{kind}', found '{t}'"))),
        None => Err(Error::Parse("missing field 'type'".into())),
    }
}

fn usize_field(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::Parse(format!("missing or invalid field '{key}'")))
}

fn coeffs(v: &Value, key: &str) -> Result<Polynomial> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("field '{key}' must be an array of numbers")))?;
    let c = arr
        .iter()
        .enumerate()
        .map(|(n, x)| {
            x.as_f64()
                .ok_or_else(|| Error::Parse(format!("field '{key}' entry {n} is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Polynomial::discrete(c))
}

/// Model as a JSON object.
pub fn model_to_json(model: &ArxNetworkModel) -> Value {
    let mut obj = Map::new();
    obj.insert("schema".into(), json!(SCHEMA));
    obj.insert("type".into(), json!("arx"));
    obj.insert("p".into(), json!(model.outputs()));
    obj.insert("m".into(), json!(model.inputs()));
    for (i, a) in model.a.iter().enumerate() {
        obj.insert(format!("A[{}]", i + 1), json!(a.coeffs()));
        for (j, b) in model.by[i].iter().enumerate() {
            if !b.is_zero() {
                obj.insert(format!("By[{}][{}]", i + 1, j + 1), json!(b.coeffs()));
            }
        }
        for (k, b) in model.bu[i].iter().enumerate() {
            if !b.is_zero() {
                obj.insert(format!("Bu[{}][{}]", i + 1, k + 1), json!(b.coeffs()));
            }
        }
        if let Some(c) = &model.c {
            obj.insert(format!("C[{}]", i + 1), json!(c[i].coeffs()));
        }
    }
    Value::Object(obj)
}

fn parse_index(s: &str) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(stripped) = rest.strip_prefix('[') {
        let end = stripped.find(']')?;
        let n: usize = stripped[..end].parse().ok()?;
        out.push(n.checked_sub(1)?);
        rest = &stripped[end + 1..];
    }
    rest.is_empty().then_some(out)
}

/// Parse a model written by [`model_to_json`].
pub fn model_from_json(v: &Value) -> Result<ArxNetworkModel> {
    check_header(v, "arx")?;
    let p = usize_field(v, "p")?;
    let m = usize_field(v, "m")?;
    let mut model = ArxNetworkModel::empty(p, m);
    let mut seen_a = vec![false; p];
    let mut c = vec![None; p];
    let obj = v.as_object().expect("checked above");
    for (key, val) in obj {
        if matches!(key.as_str(), "schema" | "type" | "p" | "m") {
            continue;
        }
        let bad = || Error::Parse(format!("unexpected model key '{key}'"));
        let name_end = key.find('[').ok_or_else(bad)?;
        let idx = parse_index(&key[name_end..]).ok_or_else(bad)?;
        let in_range = |i: usize, n: usize| {
            if i < n {
                Ok(i)
            } else {
                Err(Error::Parse(format!("index in '{key}' out of range")))
            }
        };
        let poly = coeffs(val, key)?;
        match (&key[..name_end], idx.as_slice()) {
            ("A", [i]) => {
                model.a[in_range(*i, p)?] = poly;
                seen_a[*i] = true;
            }
            ("By", [i, j]) => model.by[in_range(*i, p)?][in_range(*j, p)?] = poly,
            ("Bu", [i, k]) => model.bu[in_range(*i, p)?][in_range(*k, m)?] = poly,
            ("C", [i]) => c[in_range(*i, p)?] = Some(poly),
            _ => return Err(bad()),
        }
    }
    if let Some(i) = seen_a.iter().position(|s| !s) {
        return Err(Error::Parse(format!("missing field 'A[{}]'", i + 1)));
    }
    if c.iter().any(Option::is_some) {
        model.c = Some(
            c.into_iter()
                .enumerate()
                .map(|(i, ci)| ci.ok_or_else(|| Error::Parse(format!("missing field 'C[{}]'", i + 1))))
                .collect::<Result<_>>()?,
        );
    }
    model.validate()?;
    Ok(model)
}

/// Network as a JSON object.
pub fn network_to_json(net: &BooleanNetwork) -> Value {
    let arcs: Vec<[String; 2]> = net
        .yy
        .iter()
        .map(|(f, t)| [format!("y{}", f + 1), format!("y{}", t + 1)])
        .collect();
    let inputs: Vec<[String; 2]> = net
        .uy
        .iter()
        .map(|(k, t)| [format!("u{}", k + 1), format!("y{}", t + 1)])
        .collect();
    json!({
        "schema": SCHEMA,
        "type": "network",
        "p": net.p,
        "m": net.m,
        "arcs": arcs,
        "input_arcs": inputs,
    })
}

fn node(s: &str, prefix: char, n: usize) -> Result<usize> {
    s.strip_prefix(prefix)
        .and_then(|r| r.parse::<usize>().ok())
        .and_then(|k| k.checked_sub(1))
        .filter(|&k| k < n)
        .ok_or_else(|| Error::Parse(format!("invalid node '{s}'")))
}

fn arc_list(v: &Value, key: &str) -> Result<Vec<(String, String)>> {
    let Some(list) = v.get(key) else {
        return Ok(Vec::new());
    };
    serde_json::from_value(list.clone()).map_err(|e| Error::Parse(format!("field '{key}': {e}")))
}

/// Parse a network written by [`network_to_json`].
pub fn network_from_json(v: &Value) -> Result<BooleanNetwork> {
    check_header(v, "network")?;
    let p = usize_field(v, "p")?;
    let m = v.get("m").and_then(Value::as_u64).unwrap_or(0) as usize;
    let mut net = BooleanNetwork::new(p, m);
    for (f, t) in arc_list(v, "arcs")? {
        net.add_yy(node(&f, 'y', p)?, node(&t, 'y', p)?)?;
    }
    for (k, t) in arc_list(v, "input_arcs")? {
        net.add_uy(node(&k, 'u', m)?, node(&t, 'y', p)?)?;
    }
    Ok(net)
}

/// Serialize `value` with the schema header and `type` merged in.
pub fn tagged<T: Serialize>(kind: &str, value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::InvalidArgument("only objects can be tagged".into()))?;
    obj.insert("schema".into(), json!(SCHEMA));
    obj.insert("type".into(), json!(kind));
    Ok(v)
}

/// Inverse of [`tagged`].
pub fn untagged<T: for<'de> Deserialize<'de>>(kind: &str, v: &Value) -> Result<T> {
    check_header(v, kind)?;
    let mut v = v.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("schema");
        obj.remove("type");
    }
    Ok(serde_json::from_value(v)?)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| with_path(path, e.into()))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Parse(format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Write one experiment as `t,y1..yp,u1..um` with `t = k * sample_period`.
pub fn write_experiment_csv<W: Write>(data: &ExperimentData, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=data.outputs()).map(|i| format!("y{i}")));
    header.extend((1..=data.inputs()).map(|k| format!("u{k}")));
    out.write_record(&header)?;
    for t in 0..data.samples() {
        let mut row = vec![(t as f64 * data.sample_period).to_string()];
        row.extend(data.y.row(t).iter().map(f64::to_string));
        row.extend(data.u.row(t).iter().map(f64::to_string));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Read an experiment CSV. Columns are recognized by name (`t`, `y<i>`,
/// `u<k>`, 1-based and contiguous); the time column must be uniformly
/// spaced.
pub fn read_experiment_csv<R: Read>(r: R) -> Result<ExperimentData> {
    let (y, u, dt) = read_columns(r)?;
    if y.ncols() == 0 {
        return Err(Error::Parse("no output columns".into()));
    }
    ExperimentData::new(y, u, dt)
}

/// Read an input-only CSV `t,u1..um`; returns the `N x m` input and the
/// sample period.
pub fn read_input_csv<R: Read>(r: R) -> Result<(DMatrix<f64>, f64)> {
    let (y, u, dt) = read_columns(r)?;
    if y.ncols() != 0 {
        return Err(Error::Parse("input files must not contain output columns".into()));
    }
    Ok((u, dt))
}

fn read_columns<R: Read>(r: R) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.clone();
    let mut t_col = None;
    let mut ys = BTreeMap::new();
    let mut us = BTreeMap::new();
    for (c, name) in header.iter().enumerate() {
        let bad = || Error::Parse(format!("unrecognized column '{name}'"));
        if name == "t" {
            t_col = Some(c);
        } else if let Some(rest) = name.strip_prefix('y') {
            ys.insert(rest.parse::<usize>().map_err(|_| bad())?, c);
        } else if let Some(rest) = name.strip_prefix('u') {
            us.insert(rest.parse::<usize>().map_err(|_| bad())?, c);
        } else {
            return Err(bad());
        }
    }
    let t_col = t_col.ok_or_else(|| Error::Parse("missing column 't'".into()))?;
    for (kind, cols) in [('y', &ys), ('u', &us)] {
        if cols.keys().copied().ne(1..=cols.len()) {
            return Err(Error::Parse(format!("columns {kind}1..{kind}n must be contiguous")));
        }
    }
    let (mut t, mut yv, mut uv) = (Vec::new(), Vec::new(), Vec::new());
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let field = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>().map_err(|_| {
                Error::Parse(format!("line {line}, column '{}': invalid number '{s}'", &header[c]))
            })
        };
        t.push(field(t_col)?);
        for &c in ys.values() {
            yv.push(field(c)?);
        }
        for &c in us.values() {
            uv.push(field(c)?);
        }
    }
    let n = t.len();
    if n < 2 {
        return Err(Error::Parse("need at least two samples".into()));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) {
        return Err(Error::Parse("time column must be increasing".into()));
    }
    for k in 1..n {
        let step = t[k] - t[k - 1];
        if (step - dt).abs() > 1e-6 * dt.abs().max(t[k].abs() * 1e-3) {
            return Err(Error::Parse(format!(
                "line {}: non-uniform sampling (step {step} vs {dt})",
                k + 2
            )));
        }
    }
    let y = DMatrix::from_row_slice(n, ys.len(), &yv);
    let u = DMatrix::from_row_slice(n, us.len(), &uv);
    Ok((y, u, dt))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

pub fn read_experiment_file(path: &Path) -> Result<ExperimentData> {
    std::fs::File::open(path)
        .map_err(Error::from)
        .and_then(read_experiment_csv)
        .map_err(|e| with_path(path, e))
}

pub fn read_input_file(path: &Path) -> Result<(DMatrix<f64>, f64)> {
    std::fs::File::open(path)
        .map_err(Error::from)
        .and_then(read_input_csv)
        .map_err(|e| with_path(path, e))
}

pub fn write_experiment_file(path: &Path, data: &ExperimentData) -> Result<()> {
    write_experiment_csv(data, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trip() {
        let mut m = ArxNetworkModel::empty(2, 1);
        m.a[0] = Polynomial::discrete(vec![1.0, -0.5]);
        m.by[1][0] = Polynomial::discrete(vec![0.0, 0.3, 0.1]);
        m.bu[0][0] = Polynomial::discrete(vec![0.0, 1.0]);
        let v = model_to_json(&m);
        assert!(v.get("By[2][1]").is_some());
        assert_eq!(model_from_json(&v).unwrap(), m);
    }

    #[test]
    fn network_round_trip() {
        let mut n = BooleanNetwork::new(3, 1);
        n.add_yy(1, 0).unwrap();
        n.add_uy(0, 2).unwrap();
        let v = network_to_json(&n);
        assert_eq!(v["arcs"][0], json!(["y2", "y1"]));
        assert_eq!(network_from_json(&v).unwrap(), n);
    }

    #[test]
    fn csv_round_trip() {
        let d = ExperimentData::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            DMatrix::from_row_slice(3, 1, &[0.5, -0.5, 0.25]),
            0.1,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_experiment_csv(&d, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,y1,y2,u1\n"));
        let back = read_experiment_csv(buf.as_slice()).unwrap();
        assert_eq!(back.y, d.y);
        assert_eq!(back.u, d.u);
        assert!((back.sample_period - 0.1).abs() < 1e-15);
    }

    #[test]
    fn csv_rejects_irregular_sampling() {
        let text = "t,y1\n0,1\n1,2\n3,3\n";
        assert!(read_experiment_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn csv_reports_bad_field() {
        let text = "t,y1\n0,1\n1,x\n";
        let err = read_experiment_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
