//! JSON configuration with command-line overrides.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use twisted_core::circle_kernel::{function_from_literal, CoeffLiteral, PeriodicFunction};
use twisted_core::matrix_triples::{IdempotentData, MatrixTwistedTriple};
use twisted_core::spectral_traces::HeatFitConfig;
use twisted_core::{Error, Result};

use crate::report::{io_err, json_err};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Truncation `N` for the spectral computations.
    pub n_trunc: usize,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    /// Where convergence tables go; defaults to the report's directory.
    pub tables_dir: Option<PathBuf>,
    /// When set, `verify-matrix` writes binary dumps of one triple per dimension.
    pub dump_dir: Option<PathBuf>,
    pub matrix: MatrixSuiteConfig,
    pub circle: CircleSuiteConfig,
    pub heat_fit: HeatFitConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 7,
            n_trunc: 256,
            tol_scale: 1.0,
            tables_dir: None,
            dump_dir: None,
            matrix: MatrixSuiteConfig::default(),
            circle: CircleSuiteConfig::default(),
            heat_fit: HeatFitConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixSuiteConfig {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub degrees: Vec<usize>,
    pub h_scale: f64,
    pub d_spread: f64,
    pub sample_scale: f64,
    /// Points of `[0, 1]` at which the homotopy cocycle is checked.
    pub homotopy_points: usize,
    /// Points of the modular path along which the index is tracked.
    pub path_points: usize,
}

impl Default for MatrixSuiteConfig {
    fn default() -> Self {
        MatrixSuiteConfig {
            dims: vec![4, 8, 16],
            trials: 10,
            degrees: vec![2, 4],
            h_scale: 0.2,
            d_spread: 1.0,
            sample_scale: 0.5,
            homotopy_points: 5,
            path_points: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleSuiteConfig {
    /// Truncations for the convergence tables.
    pub ladder: Vec<usize>,
    /// `φ = φ_ε` used by the commutator and cocycle checks.
    pub epsilon: f64,
    /// Coefficient `g` of the monomial in the commutator check.
    pub commutator_coeff: CoeffLiteral,
    /// Relative tolerance for the commutator norm against the symbol sup.
    pub commutator_rel_tol: f64,
    pub vanishing_epsilons: Vec<f64>,
    /// Number of random localized pairs in the cocycle checks.
    pub pairs: usize,
}

impl Default for CircleSuiteConfig {
    fn default() -> Self {
        CircleSuiteConfig {
            ladder: vec![64, 128, 256, 512],
            epsilon: 0.3,
            commutator_coeff: vec![(0, 1.0, 0.0), (1, 0.0, -0.25), (-1, 0.0, 0.25)],
            commutator_rel_tol: 1e-6,
            vanishing_epsilons: vec![0.2, 0.3, 0.5],
            pairs: 3,
        }
    }
}

/// Values given on the command line; they win over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_trunc: Option<usize>,
    pub tol_scale: Option<f64>,
}

impl Config {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Config::default(),
        };
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(n) = overrides.n_trunc {
            cfg.n_trunc = n;
        }
        if let Some(t) = overrides.tol_scale {
            cfg.tol_scale = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_trunc < 16 {
            return bad(format!("n_trunc = {} is below 16", self.n_trunc));
        }
        if !self.tol_scale.is_finite() || self.tol_scale < 0.0 {
            return bad(format!("tol_scale = {} must be finite and non-negative", self.tol_scale));
        }
        if let Some(d) = self.matrix.dims.iter().find(|&&d| d < 2 || d % 2 != 0) {
            return bad(format!("matrix dimension {d} is not a positive even number"));
        }
        if let Some(n) = self.matrix.degrees.iter().find(|&&n| n % 2 != 0 || n > 4) {
            return bad(format!("degree {n} is not one of 0, 2, 4"));
        }
        if self.matrix.trials == 0 {
            return bad("matrix.trials must be positive".into());
        }
        if self.matrix.homotopy_points < 2 || self.matrix.path_points < 2 {
            return bad("homotopy_points and path_points must be at least 2".into());
        }
        let ladder = &self.circle.ladder;
        if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] < 16 {
            return bad("circle.ladder must be strictly increasing, start at 16 or more, and have two entries".into());
        }
        if !(0.0..1.0).contains(&self.circle.epsilon) {
            return bad(format!("circle.epsilon = {} outside [0, 1)", self.circle.epsilon));
        }
        if self.circle.vanishing_epsilons.iter().any(|e| !(0.0 < *e && *e < 1.0)) {
            return bad("vanishing epsilons must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// A tolerance scaled by `tol_scale`.
    pub fn tol(&self, base: f64) -> f64 {
        base * self.tol_scale
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// A function given by name (`one`, `sin`, `cos`, meaning the first
/// Fourier mode) or by `(k, re, im)` coefficient triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Named(String),
    Coeffs(CoeffLiteral),
}

impl FunctionSpec {
    pub fn build(&self) -> Result<PeriodicFunction> {
        match self {
            FunctionSpec::Coeffs(c) => Ok(function_from_literal(c)),
            FunctionSpec::Named(n) => match n.as_str() {
                "one" => Ok(PeriodicFunction::one()),
                "sin" => Ok(PeriodicFunction::sin_mode(1)),
                "cos" => Ok(PeriodicFunction::cos_mode(1)),
                other => Err(Error::InvalidArgument(format!("unknown function name `{other}`"))),
            },
        }
    }
}

/// Matrices are lists of rows of `[re, im]` pairs.
pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_literal(lit: &MatrixLiteral) -> Result<DMatrix<Complex64>> {
    let r = lit.len();
    let c = lit.first().map_or(0, Vec::len);
    if r == 0 || lit.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidArgument("ragged or empty matrix literal".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| Complex64::new(lit[i][j][0], lit[i][j][1])))
}

/// File format for a shipped triple: `D₊`, the even self-adjoint `h`
/// (full size), and a projection that is twisted into an idempotent.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleFile {
    pub label: String,
    pub d_plus: MatrixLiteral,
    pub h: MatrixLiteral,
    pub projection: MatrixLiteral,
}

pub struct LoadedTriple {
    pub label: String,
    pub triple: MatrixTwistedTriple,
    pub idempotent: IdempotentData,
}

impl TripleFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err)?;
        serde_json::from_str(&text).map_err(json_err)
    }

    /// `D = e^h D₀ e^h` from the untwisted `D₀` built on `D₊`, with the
    /// idempotent `e^{−h} p e^{h}`.
    pub fn load(&self) -> Result<LoadedTriple> {
        let base = MatrixTwistedTriple::from_d_plus(&matrix_from_literal(&self.d_plus)?)?;
        let triple = base.perturb(&matrix_from_literal(&self.h)?)?;
        let idempotent = IdempotentData::twisted(&triple, &matrix_from_literal(&self.projection)?)?;
        Ok(LoadedTriple {
            label: self.label.clone(),
            triple,
            idempotent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        let back: Config = serde_json::from_value(cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg: Config = serde_json::from_str(r#"{"seed": 3, "matrix": {"trials": 2}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.matrix.trials, 2);
        assert_eq!(cfg.matrix.dims, vec![4, 8, 16]);
        assert!(serde_json::from_str::<Config>(r#"{"sede": 3}"#).is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = Config::default();
        cfg.matrix.dims = vec![3];
        assert!(cfg.validate().is_err());
        let cfg = Config { tol_scale: -1.0, ..Config::default() };
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.circle.ladder = vec![128, 64];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn function_specs() {
        let s: FunctionSpec = serde_json::from_str(r#""sin""#).unwrap();
        assert_eq!(s.build().unwrap(), PeriodicFunction::sin_mode(1));
        let c: FunctionSpec = serde_json::from_str("[[0, 1.0, 0.0]]").unwrap();
        assert_eq!(c.build().unwrap(), PeriodicFunction::one());
        let bad: FunctionSpec = serde_json::from_str(r#""tan""#).unwrap();
        assert!(bad.build().is_err());
    }
}
