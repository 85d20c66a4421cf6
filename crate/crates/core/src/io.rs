//! File formats: coverage curves and trial matrices as CSV, models as JSON.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back reproduces every value bit for bit.

use std::io::{Read, Write};

use serde_json::{Map, Value};

use crate::correlated::{CorrelatedTrialModel, TrialMatrix};
use crate::coverage::BetaFailureModel;
use crate::curve::CoverageCurve;
use crate::error::{Error, Result};
use crate::fitting::CoverageModel;

pub const CURVE_HEADER: [&str; 2] = ["k", "coverage"];

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn is_blank(record: &csv::StringRecord) -> bool {
    record.iter().all(|f| f.is_empty())
}

/// Reads a `k,coverage` CSV. Errors carry the 1-based line number.
pub fn read_curve_csv<R: Read>(r: R, label: impl Into<String>) -> Result<CoverageCurve> {
    let mut rdr = csv_reader(r);
    let mut points = Vec::new();
    let mut saw_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if is_blank(&rec) {
            continue;
        }
        if !saw_header {
            if rec.len() != 2 || rec[0] != *CURVE_HEADER[0] || rec[1] != *CURVE_HEADER[1] {
                return Err(Error::Parse {
                    line,
                    message: "expected header `k,coverage`".into(),
                });
            }
            saw_header = true;
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let k: u64 = rec[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("k `{}` is not a positive integer", &rec[0]),
        })?;
        let c: f64 = rec[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("coverage `{}` is not a number", &rec[1]),
        })?;
        if k == 0 {
            return Err(Error::Parse {
                line,
                message: "k must be >= 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Parse {
                line,
                message: format!("coverage {c} outside [0, 1]"),
            });
        }
        if let Some(&(prev, _)) = points.last() {
            if k <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("k must be strictly increasing ({k} after {prev})"),
                });
            }
        }
        points.push((k, c));
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            message: "empty file; expected header `k,coverage`".into(),
        });
    }
    CoverageCurve::new(points, label)
}

pub fn write_curve_csv<W: Write>(mut w: W, curve: &CoverageCurve) -> Result<()> {
    writeln!(w, "{}", CURVE_HEADER.join(","))?;
    for (k, c) in curve.points() {
        writeln!(w, "{k},{c}")?;
    }
    Ok(())
}

/// Reads a rectangular CSV of real values, one row per sample. A first row
/// of the form `trial_1,...,trial_k` is skipped.
pub fn read_trial_matrix_csv<R: Read>(r: R) -> Result<TrialMatrix> {
    let mut rdr = csv_reader(r);
    let mut width: Option<usize> = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    let mut first = true;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if is_blank(&rec) {
            continue;
        }
        if first {
            first = false;
            let header = rec
                .iter()
                .enumerate()
                .all(|(i, f)| f == format!("trial_{}", i + 1));
            if header {
                width = Some(rec.len());
                continue;
            }
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                line,
                message: format!(
                    "row {} has {} columns, expected {w} (matrix must be rectangular)",
                    rows + 1,
                    rec.len()
                ),
            });
        }
        for (j, f) in rec.iter().enumerate() {
            let v: f64 = f.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
                line,
                message: format!("column {}: `{f}` is not a finite number", j + 1),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let k = width.unwrap_or(0);
    TrialMatrix::new(rows, k, values)
}

pub fn write_trial_matrix_csv<W: Write>(mut w: W, m: &TrialMatrix, header: bool) -> Result<()> {
    if header {
        let names: Vec<String> = (1..=m.trials()).map(|j| format!("trial_{j}")).collect();
        writeln!(w, "{}", names.join(","))?;
    }
    let mut line = String::new();
    for i in 0..m.samples() {
        line.clear();
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn number_field(obj: &Map<String, Value>, field: &str) -> Result<f64> {
    match obj.get(field) {
        None => Err(Error::schema(field, "missing")),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::schema(field, format!("expected a number, got {v}"))),
    }
}

/// Parses `{"kind":"beta",...}` or `{"kind":"correlated",...}`. Errors name the
/// offending field.
pub fn parse_model_json(text: &str) -> Result<CoverageModel> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema("model", "expected a JSON object"))?;
    let kind = match obj.get("kind") {
        None => return Err(Error::schema("kind", "missing")),
        Some(Value::String(s)) => s.as_str(),
        Some(v) => return Err(Error::schema("kind", format!("expected a string, got {v}"))),
    };
    let fields: [&str; 3] = match kind {
        "beta" => ["ceiling", "alpha", "beta"],
        "correlated" => ["ceiling", "failure", "kappa"],
        other => {
            return Err(Error::schema(
                "kind",
                format!("expected \"beta\" or \"correlated\", got \"{other}\""),
            ))
        }
    };
    if let Some(extra) = obj.keys().find(|k| *k != "kind" && !fields.contains(&k.as_str())) {
        return Err(Error::schema(extra, format!("unknown field for kind \"{kind}\"")));
    }
    let [a, b, c] = [
        number_field(obj, fields[0])?,
        number_field(obj, fields[1])?,
        number_field(obj, fields[2])?,
    ];
    Ok(match kind {
        "beta" => CoverageModel::Beta(BetaFailureModel::new(a, b, c)?),
        _ => CoverageModel::Correlated(CorrelatedTrialModel::new(a, b, c)?),
    })
}

pub fn model_to_json(model: &CoverageModel) -> String {
    serde_json::to_string_pretty(model).expect("models always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_roundtrip_is_exact() {
        let curve = CoverageCurve::new(
            vec![(1, 0.1), (2, 1.0 / 3.0), (10, 0.123456789012345678), (4096, 0.9)],
            "x",
        )
        .unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve).unwrap();
        let back = read_curve_csv(buf.as_slice(), "x").unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn bad_row_names_its_line() {
        let text = "k,coverage\n1,0.2\nten,0.5\n";
        match read_curve_csv(text.as_bytes(), "") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn curve_errors() {
        for (text, line) in [
            ("x,y\n1,0.1\n", 1),
            ("k,coverage\n1,0.1\n1,0.2\n", 3),
            ("k,coverage\n1,1.5\n", 2),
            ("k,coverage\n0,0.5\n", 2),
            ("k,coverage\n1,0.5,3\n", 2),
            ("", 1),
        ] {
            match read_curve_csv(text.as_bytes(), "") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn trial_matrix_with_and_without_header() {
        let a = read_trial_matrix_csv("trial_1,trial_2\n1,0\n0,1\n".as_bytes()).unwrap();
        let b = read_trial_matrix_csv("1,0\n0,1\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.samples(), a.trials()), (2, 2));

        let m = TrialMatrix::new(3, 2, vec![0.5, -1.25, 1e-300, 3.0, 0.1, 0.2]).unwrap();
        for header in [true, false] {
            let mut buf = Vec::new();
            write_trial_matrix_csv(&mut buf, &m, header).unwrap();
            assert_eq!(read_trial_matrix_csv(buf.as_slice()).unwrap(), m);
        }
    }

    #[test]
    fn ragged_matrix_names_first_bad_row() {
        let text = "trial_1,trial_2,trial_3\n1,0,1\n0,1,1\n1,1\n0,0,0\n";
        match read_trial_matrix_csv(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("row 3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn model_json_schema_errors_name_fields() {
        let ok = parse_model_json(r#"{"kind":"beta","ceiling":0.9,"alpha":5,"beta":0.35}"#).unwrap();
        assert_eq!(ok.parameters(), [0.9, 5.0, 0.35]);
        let c = parse_model_json(r#"{"kind":"correlated","ceiling":1,"failure":0.5,"kappa":2}"#).unwrap();
        assert_eq!(c.kind(), "correlated");
        assert_eq!(parse_model_json(&model_to_json(&ok)).unwrap(), ok);

        for (text, field) in [
            (r#"{"ceiling":0.9,"alpha":5,"beta":0.35}"#, "kind"),
            (r#"{"kind":"gamma"}"#, "kind"),
            (r#"{"kind":"beta","ceiling":0.9,"beta":0.35}"#, "alpha"),
            (r#"{"kind":"beta","ceiling":"high","alpha":5,"beta":0.35}"#, "ceiling"),
            (r#"{"kind":"beta","ceiling":1.5,"alpha":5,"beta":0.35}"#, "ceiling"),
            (r#"{"kind":"beta","ceiling":0.9,"alpha":5,"beta":0.35,"p":1}"#, "p"),
            (r#"{"kind":"correlated","ceiling":0.9,"failure":2,"kappa":1}"#, "failure"),
            (r#"{"kind":"correlated","ceiling":0.9,"failure":0.2,"kappa":-1}"#, "kappa"),
        ] {
            match parse_model_json(text) {
                Err(Error::Schema { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(parse_model_json("{not json"), Err(Error::Parse { .. })));
    }
}
