//! Serialization of reports: CSV rows and JSON with 17 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::CliError;

/// Header of table CSV files.
pub const TABLE_HEADER: &str = "m,n,nu,omega_mn,re,im,verdict,err,route";

/// One row of a γ₋ table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub m: u32,
    pub n: u32,
    /// Absent for radial presets.
    pub nu: Option<f64>,
    pub omega_mn: f64,
    pub re: Option<f64>,
    /// Absent when the principal value diverges.
    pub im: Option<f64>,
    pub verdict: String,
    pub err: Option<f64>,
    pub route: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `v` with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Empty for absent or non-finite values.
pub fn csv_number(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(fmt17).unwrap_or_default()
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes to pretty JSON with 17-digit floats. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut value = serde_json::to_value(value).map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    scrub_non_finite(&mut value);
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn scrub_non_finite(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) if n.as_f64().is_some_and(|f| !f.is_finite()) => *value = serde_json::Value::Null,
        serde_json::Value::Array(items) => items.iter_mut().for_each(scrub_non_finite),
        serde_json::Value::Object(map) => map.values_mut().for_each(scrub_non_finite),
        _ => {}
    }
}

pub fn table_csv(rows: &[TableRecord]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let line = [
            r.m.to_string(),
            r.n.to_string(),
            csv_number(r.nu),
            fmt17(r.omega_mn),
            csv_number(r.re),
            csv_number(r.im),
            r.verdict.clone(),
            csv_number(r.err),
            r.route.clone(),
        ]
        .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Writes `rows` to `path` (or stdout) as CSV or as a JSON array.
pub fn emit_table(rows: &[TableRecord], format: Format, path: Option<&Path>) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Usage("table has no rows".into()));
    }
    let body = match format {
        Format::Csv => table_csv(rows),
        Format::Json => to_json(&rows)?,
    };
    write_output(&body, path)
}

pub fn write_output(body: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

/// `<path>.meta.json`, the config sidecar of CSV and table outputs.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(im: Option<f64>) -> TableRecord {
        TableRecord {
            m: 2,
            n: 1,
            nu: Some(0.5),
            omega_mn: 0.375,
            re: Some(4.493_732_158_573_849),
            im,
            verdict: if im.is_some() { "finite" } else { "divergent-endpoint" }.into(),
            err: Some(1.0e-12),
            route: "frequency-domain".into(),
        }
    }

    #[test]
    fn csv_shape() {
        let csv = table_csv(&[record(Some(3.767_144_625_934_571))]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap(), TABLE_HEADER);
        let divergent = table_csv(&[record(None)]);
        let fields: Vec<&str> = divergent.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields[5], "");
        assert_eq!(fields[6], "divergent-endpoint");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let rows = vec![record(Some(1.0 / 3.0)), record(None)];
        let text = to_json(&rows).unwrap();
        let back: Vec<TableRecord> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rows);
        assert!(text.contains("\"im\": null"));
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn non_finite_becomes_null() {
        let text = to_json(&serde_json::json!({ "x": 1.0 })).unwrap();
        assert!(text.contains("1.0000000000000000e0"));
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        let text = to_json(&S { x: f64::NAN }).unwrap();
        assert!(text.contains("null"));
    }
}
