//! JSON-lines verification reports.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use twisted_core::{Error, Result};

/// A real or complex number as it appears in a report row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(#[serde(with = "float")] f64),
    Complex {
        #[serde(with = "float")]
        re: f64,
        #[serde(with = "float")]
        im: f64,
    },
}

/// JSON has no infinities or NaN; they are written as the strings `"inf"`,
/// `"-inf"` and `"NaN"` and read back from them.
mod float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("NaN")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not a number: `{other}`"))),
            },
        }
    }
}

impl Scalar {
    pub fn to_complex(self) -> Complex64 {
        match self {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex { re, im } => Complex64::new(re, im),
        }
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Real(x)
    }
}

impl From<i64> for Scalar {
    fn from(x: i64) -> Self {
        Scalar::Real(x as f64)
    }
}

impl From<Complex64> for Scalar {
    fn from(z: Complex64) -> Self {
        Scalar::Complex { re: z.re, im: z.im }
    }
}

/// One row of a report. `pass` is always `abs_err <= tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub paper_ref: String,
    pub params: Value,
    pub lhs: Scalar,
    pub rhs: Scalar,
    #[serde(with = "float")]
    pub abs_err: f64,
    #[serde(with = "float")]
    pub tol: f64,
    pub pass: bool,
    pub runtime_ms: u64,
    pub seed: Option<u64>,
}

impl CheckReport {
    /// Compares `lhs` with `rhs`; a NaN error never passes.
    #[allow(clippy::too_many_arguments)]
    pub fn compare(
        check_id: impl Into<String>,
        paper_ref: impl Into<String>,
        params: Value,
        lhs: impl Into<Scalar>,
        rhs: impl Into<Scalar>,
        tol: f64,
        started: Instant,
        seed: Option<u64>,
    ) -> Self {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        let abs_err = (lhs.to_complex() - rhs.to_complex()).norm();
        CheckReport {
            check_id: check_id.into(),
            paper_ref: paper_ref.into(),
            params,
            lhs,
            rhs,
            abs_err,
            tol,
            pass: abs_err <= tol,
            runtime_ms: started.elapsed().as_millis() as u64,
            seed,
        }
    }

    /// A row for a computation that raised an error: `abs_err` is infinite.
    pub fn failed(check_id: impl Into<String>, paper_ref: impl Into<String>, err: &Error, tol: f64, seed: Option<u64>) -> Self {
        CheckReport {
            check_id: check_id.into(),
            paper_ref: paper_ref.into(),
            params: serde_json::json!({ "error": err.to_string() }),
            lhs: Scalar::Real(f64::NAN),
            rhs: Scalar::Real(f64::NAN),
            abs_err: f64::INFINITY,
            tol,
            pass: false,
            runtime_ms: 0,
            seed,
        }
    }

    /// Checks the row invariant `pass ⇔ abs_err ≤ tol`.
    pub fn is_consistent(&self) -> bool {
        self.pass == (self.abs_err <= self.tol)
    }
}

/// Header line echoing the command and the effective configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportHeader {
    pub command: String,
    pub config: Value,
}

#[derive(Debug)]
pub struct Report {
    pub header: ReportHeader,
    rows: Vec<CheckReport>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report {
            header: ReportHeader {
                command: command.to_string(),
                config,
            },
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: CheckReport) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = CheckReport>) {
        self.rows.extend(rows);
    }

    /// Rows sorted by `check_id`.
    pub fn rows(&self) -> Vec<CheckReport> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        rows
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.rows {
            if !seen.insert(r.check_id.as_str()) {
                return Err(Error::Config(format!("duplicate check_id `{}`", r.check_id)));
            }
        }
        Ok(())
    }

    /// The header line followed by the sorted rows.
    pub fn to_json_lines(&self) -> Result<String> {
        self.check_unique()?;
        let mut out = serde_json::to_string(&serde_json::json!({ "header": self.header })).map_err(json_err)?;
        out.push('\n');
        for row in self.rows() {
            out.push_str(&serde_json::to_string(&row).map_err(json_err)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Appends to `path`, or prints to stdout when no path is given.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let text = self.to_json_lines()?;
        match path {
            Some(p) => {
                let mut f = OpenOptions::new().create(true).append(true).open(p).map_err(io_err)?;
                f.write_all(text.as_bytes()).map_err(io_err)
            }
            None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(io_err),
        }
    }
}

/// Parses report text, skipping header lines.
pub fn parse_rows(text: &str) -> Result<Vec<CheckReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .filter(|l| !l.starts_with("{\"header\""))
        .map(|l| serde_json::from_str(l).map_err(json_err))
        .collect()
}

pub(crate) fn json_err(e: serde_json::Error) -> Error {
    Error::Config(e.to_string())
}

pub(crate) fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// A convergence table with header `N,value_re,value_im,delta`; the first
/// row has an empty delta.
pub fn write_convergence_csv(path: &Path, values: &[(usize, Complex64)]) -> Result<()> {
    let mut text = String::from("N,value_re,value_im,delta\n");
    for (i, (n, v)) in values.iter().enumerate() {
        let delta = if i == 0 {
            String::new()
        } else {
            format!("{:e}", (v - values[i - 1].1).norm())
        };
        text.push_str(&format!("{n},{:e},{:e},{delta}\n", v.re, v.im));
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    std::fs::write(path, text).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, lhs: f64, tol: f64) -> CheckReport {
        CheckReport::compare(id, "test", Value::Null, lhs, 0.0, tol, Instant::now(), Some(1))
    }

    #[test]
    fn pass_iff_within_tolerance() {
        assert!(row("a", 1e-12, 1e-10).pass);
        assert!(!row("a", 1e-9, 1e-10).pass);
        assert!(row("a", 0.0, 0.0).pass);
        assert!(!row("a", f64::NAN, 1.0).pass);
        assert!(row("a", f64::NAN, 1.0).is_consistent());
    }

    #[test]
    fn rows_are_sorted_and_unique() {
        let mut r = Report::new("x", Value::Null);
        r.push(row("b", 0.0, 1.0));
        r.push(row("a", 0.0, 1.0));
        let ids: Vec<String> = r.rows().into_iter().map(|r| r.check_id).collect();
        assert_eq!(ids, ["a", "b"]);
        let text = r.to_json_lines().unwrap();
        assert_eq!(parse_rows(&text).unwrap().len(), 2);
        r.push(row("a", 0.0, 1.0));
        assert!(r.to_json_lines().is_err());
    }

    #[test]
    fn scalars_round_trip() {
        let z: Scalar = Complex64::new(1.5, -2.0).into();
        let s = serde_json::to_string(&z).unwrap();
        assert_eq!(s, r#"{"re":1.5,"im":-2.0}"#);
        assert_eq!(serde_json::from_str::<Scalar>(&s).unwrap(), z);
        assert_eq!(serde_json::from_str::<Scalar>("3.0").unwrap(), Scalar::Real(3.0));
    }

    #[test]
    fn failed_rows_round_trip() {
        let err = Error::InvalidArgument("x".into());
        let r = CheckReport::failed("a", "test", &err, 1e-3, None);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""abs_err":"inf""#));
        let back: CheckReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.abs_err, f64::INFINITY);
        assert!(back.lhs.to_complex().re.is_nan());
        assert!(back.is_consistent() && !back.pass);
    }
}
