//! Versioned JSON documents and CSV emission.
//!
//! Floats in emitted JSON are rounded to 12 significant digits so repeated
//! runs produce identical bytes. CSV uses `.` as decimal separator.

use std::io::Write;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::criteria::{PmRecordSet, PmRow};
use crate::error::{Error, Result};
use crate::inference::{BoundaryPoint, SmPoint, Slice};
use crate::oracle::SamplePoint;
use crate::scenarios::{BellCorrelation, BellTable};

pub const SCHEMA: &str = "qubit-corr/v1";

/// Rounds to 12 significant digits; `-0` becomes `0`, non-finite values pass through.
pub fn round12(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    if !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BellDoc {
    schema: String,
    p: BellTable,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PmDoc {
    schema: String,
    measurements: Vec<String>,
    rows: Vec<PmRow>,
}

fn check_schema(found: &str) -> Result<()> {
    if found == SCHEMA {
        Ok(())
    } else {
        Err(Error::Schema(format!("unsupported schema \"{found}\", expected \"{SCHEMA}\"")))
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}

/// Parses `{"schema": "qubit-corr/v1", "p": [alpha][beta][a][b]}`.
pub fn read_bell(text: &str) -> Result<BellCorrelation> {
    let doc: BellDoc = parse(text)?;
    check_schema(&doc.schema)?;
    BellCorrelation::new(doc.p)
}

/// Parses `{"schema": "qubit-corr/v1", "measurements": [...], "rows": [...]}`.
pub fn read_pm(text: &str) -> Result<PmRecordSet> {
    let doc: PmDoc = parse(text)?;
    check_schema(&doc.schema)?;
    PmRecordSet::new(doc.measurements, doc.rows)
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_bell(corr: &BellCorrelation) -> Result<String> {
    to_json(&Versioned { schema: SCHEMA, body: corr })
}

pub fn write_pm(records: &PmRecordSet) -> Result<String> {
    to_json(&Versioned { schema: SCHEMA, body: records })
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Writes a header and rows of rounded floats.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| round12(*v).to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Columns `theta, x, y, r`.
pub fn write_sm_csv<W: Write>(out: W, points: &[SmPoint]) -> Result<()> {
    write_csv(out, &["theta", "x", "y", "r"], points.iter().map(|p| vec![p.theta, p.x, p.y, p.r]))
}

/// Columns `x, y_star, margin` or `x_star, y, margin` depending on the slice.
pub fn write_scan_csv<W: Write>(out: W, slice: Slice, points: &[BoundaryPoint]) -> Result<()> {
    let header = match slice {
        Slice::YOfX => ["x", "y_star", "margin"],
        Slice::XOfY => ["x_star", "y", "margin"],
    };
    write_csv(out, &header, points.iter().map(|p| vec![p.x, p.y, p.margin]))
}

/// Columns `x, y, residual`.
pub fn write_samples_csv<W: Write>(out: W, points: &[SamplePoint]) -> Result<()> {
    write_csv(out, &["x", "y", "residual"], points.iter().map(|p| vec![p.x, p.y, p.residual]))
}

/// Columns `curve, x, y` for labelled overlay curves.
pub fn write_overlay_csv<W: Write>(out: W, curves: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve", "x", "y"]).map_err(csv_err)?;
    for (name, pts) in curves {
        for (x, y) in pts {
            w.write_record([name.to_string(), round12(*x).to_string(), round12(*y).to_string()]).map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{qbell, qpm};

    #[test]
    fn rounding() {
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(-2.0e-20 / 3.0), -6.66666666667e-21);
        assert!(round12(f64::INFINITY).is_infinite());
        assert!(round12(-0.0).is_sign_positive());
    }

    #[test]
    fn documents_round_trip() {
        let q = qbell(0.3, 0.1).unwrap();
        let text = write_bell(&q).unwrap();
        assert!(text.contains("\"schema\": \"qubit-corr/v1\""));
        let back = read_bell(&text).unwrap();
        assert!(back.table().iter().flatten().flatten().flatten().zip(q.table().iter().flatten().flatten().flatten()).all(|(a, b)| (a - b).abs() < 1e-12));
        let r = qpm(0.4, 0.2).unwrap();
        let back = read_pm(&write_pm(&r).unwrap()).unwrap();
        assert_eq!(back.n_states(), 4);
        assert_eq!(back.rows()[2].label, "0|1");
    }

    #[test]
    fn schema_violations() {
        assert!(matches!(read_bell("{}"), Err(Error::Schema(m)) if m.contains("missing field `schema`")));
        assert!(matches!(read_bell("{\"schema\": \"v0\", \"p\": []}"), Err(Error::Schema(_))));
        let bad = read_pm("{\"schema\": \"qubit-corr/v1\",\n \"measurements\": [\"A0\"],\n \"rows\": [{\"label\": 3}]}");
        assert!(matches!(bad, Err(Error::Schema(m)) if m.contains("line 3")));
        let e = read_pm("{\n\"schema\": \"qubit-corr/v1\",\n\"rows\": [,]\n}").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(read_pm("{\"schema\": \"qubit-corr/v1\", \"measurements\": [], \"rows\": [], \"extra\": 1}").is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let mut buf = Vec::new();
        let pts = [BoundaryPoint { x: 0.5, y: 0.1 + 0.2, margin: 0.0 }];
        write_scan_csv(&mut buf, Slice::YOfX, &pts).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y_star,margin\n0.5,0.3,0\n");
    }
}
