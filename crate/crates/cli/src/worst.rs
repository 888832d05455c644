//! Aggregates repeated observations of one check into its worst case.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde_json::Value;

use twisted_core::Result;

use crate::report::{CheckReport, Scalar};

struct Entry {
    paper_ref: String,
    tol: f64,
    lhs: Complex64,
    rhs: Complex64,
    err: f64,
    params: Value,
    samples: usize,
    elapsed: Duration,
    error: Option<String>,
}

/// One row per check id, holding the observation with the largest error.
pub struct WorstCase {
    seed: u64,
    entries: BTreeMap<String, Entry>,
}

fn scalar(z: Complex64) -> Scalar {
    if z.im == 0.0 {
        Scalar::Real(z.re)
    } else {
        z.into()
    }
}

impl WorstCase {
    pub fn new(seed: u64) -> Self {
        WorstCase {
            seed,
            entries: BTreeMap::new(),
        }
    }

    /// Runs `f`, which returns `(lhs, rhs)`, and keeps it if it is the worst so far.
    pub fn observe<F>(&mut self, id: String, paper_ref: &str, tol: f64, params: &Value, f: F)
    where
        F: FnOnce() -> Result<(Complex64, Complex64)>,
    {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let e = self.entries.entry(id).or_insert_with(|| Entry {
            paper_ref: paper_ref.to_string(),
            tol,
            lhs: Complex64::new(0.0, 0.0),
            rhs: Complex64::new(0.0, 0.0),
            err: f64::NEG_INFINITY,
            params: params.clone(),
            samples: 0,
            elapsed: Duration::ZERO,
            error: None,
        });
        e.samples += 1;
        e.elapsed += elapsed;
        match outcome {
            Ok((lhs, rhs)) => {
                let err = (lhs - rhs).norm();
                if err > e.err || err.is_nan() {
                    e.lhs = lhs;
                    e.rhs = rhs;
                    e.err = if err.is_nan() { f64::INFINITY } else { err };
                    e.params = params.clone();
                }
            }
            Err(err) => {
                e.err = f64::INFINITY;
                e.lhs = Complex64::new(f64::NAN, 0.0);
                e.rhs = Complex64::new(f64::NAN, 0.0);
                e.params = params.clone();
                e.error.get_or_insert_with(|| err.to_string());
            }
        }
    }

    pub fn into_rows(self) -> Vec<CheckReport> {
        let seed = self.seed;
        self.entries
            .into_iter()
            .map(|(id, e)| {
                let mut params = e.params;
                if let Value::Object(map) = &mut params {
                    map.insert("samples".into(), e.samples.into());
                    if let Some(msg) = &e.error {
                        map.insert("error".into(), msg.clone().into());
                    }
                }
                CheckReport {
                    check_id: id,
                    paper_ref: e.paper_ref,
                    params,
                    lhs: scalar(e.lhs),
                    rhs: scalar(e.rhs),
                    abs_err: e.err,
                    tol: e.tol,
                    pass: e.err <= e.tol,
                    runtime_ms: e.elapsed.as_millis() as u64,
                    seed: Some(seed),
                }
            })
            .collect()
    }
}
