//! Single evaluations for `compute` and `residue`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use twisted_core::circle_cocycles::{psi1_closed, psi1_spectral, tau, theorem12_check, MonomialPair};
use twisted_core::circle_kernel::{CircleDiffeo, DiffeoLiteral, PeriodicFunction};
use twisted_core::crossed_product::{CrossedProductElement, Group, GroupConfig, GroupWord};
use twisted_core::matrix_triples::{index_pair, random_samples, TripleConfig};
use twisted_core::operator_rep::{abs_dirac_power, represent};
use twisted_core::spectral_traces::{halo_band, residue_functional, wodzicki_closed_form, ResidueResult};
use twisted_core::{Error, Result};

use crate::config::{Config, FunctionSpec, LoadedTriple, TripleFile};
use crate::report::CheckReport;

/// The example triple shipped with the binary.
pub const EXAMPLE_TRIPLE: &str = include_str!("../data/example_triple.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expression {
    Psi1Spectral,
    Psi1Closed,
    Tau,
    Residue,
    IndexPair,
    ChernPhi,
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "psi1_spectral" => Expression::Psi1Spectral,
            "psi1_closed" => Expression::Psi1Closed,
            "tau" => Expression::Tau,
            "residue" => Expression::Residue,
            "index_pair" => Expression::IndexPair,
            "chern_phi" => Expression::ChernPhi,
            other => return Err(Error::UnknownExpression(other.to_string())),
        })
    }
}

/// What a computation prints, plus the oracle rows it produced.
#[derive(Debug)]
pub struct Computed {
    pub value: Value,
    pub rows: Vec<CheckReport>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairArgs {
    f: FunctionSpec,
    g: FunctionSpec,
    #[serde(default = "identity_literal")]
    phi: DiffeoLiteral,
    n: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidueArgs {
    pub f: FunctionSpec,
    #[serde(default = "identity_literal")]
    pub chi: DiffeoLiteral,
    pub n: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleArgs {
    triple: Option<PathBuf>,
    #[serde(default = "default_degree")]
    n: usize,
    seed: Option<u64>,
}

fn identity_literal() -> DiffeoLiteral {
    DiffeoLiteral::Identity
}

fn default_degree() -> usize {
    2
}

fn parse<T: for<'de> Deserialize<'de>>(args: &str) -> Result<T> {
    serde_json::from_str(args).map_err(|e| Error::InvalidArgument(format!("arguments: {e}")))
}

fn cval(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// A one-generator group whose generator is `lit`, and the word to use.
fn word_for(lit: &DiffeoLiteral) -> Result<(Arc<Group>, GroupWord)> {
    let diffeo = CircleDiffeo::from_literal(lit)?;
    if diffeo.is_identity() {
        let g = Group::new(Vec::new(), GroupConfig::default())?;
        let id = g.identity();
        return Ok((g, id));
    }
    let g = Group::new(vec![("phi".into(), diffeo)], GroupConfig::default())?;
    let w = g.generator("phi")?;
    Ok((g, w))
}

/// `∫ f g'` by direct summation of the series on a uniform grid.
fn tau_identity_oracle(f: &PeriodicFunction, g: &PeriodicFunction) -> Complex64 {
    let m = 2048;
    let dg = |x: f64| -> Complex64 {
        g.modes()
            .into_iter()
            .map(|(k, c)| c * Complex64::new(0.0, 2.0 * PI * k as f64) * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x))
            .sum()
    };
    (0..m).map(|j| {
        let x = j as f64 / m as f64;
        f.eval(x) * dg(x)
    })
    .sum::<Complex64>()
        / m as f64
}

pub fn evaluate(cfg: &Config, expr: Expression, args: &str) -> Result<Computed> {
    let seed = Some(cfg.seed);
    match expr {
        Expression::Tau | Expression::Psi1Closed | Expression::Psi1Spectral => {
            let a: PairArgs = parse(args)?;
            let (_, w) = word_for(&a.phi)?;
            let pair = MonomialPair::localized(a.f.build()?, w.clone(), a.g.build()?)?;
            let n = a.n.unwrap_or(cfg.n_trunc);
            let started = Instant::now();
            let params = serde_json::from_str::<Value>(args).unwrap_or(Value::Null);
            let (name, value, rows) = match expr {
                Expression::Tau => {
                    let v = tau(&pair)?;
                    let rows = if w.is_identity() {
                        vec![CheckReport::compare("compute.tau", "τ(f, g) = ∫ f g' for the identity word", params, v, tau_identity_oracle(&pair.f, &pair.g), cfg.tol(1e-10), started, seed)]
                    } else {
                        Vec::new()
                    };
                    ("tau", v, rows)
                }
                Expression::Psi1Closed => {
                    let v = psi1_closed(&pair)?;
                    let rhs = theorem12_check(&pair, None)?.rhs;
                    ("psi1_closed", v, vec![CheckReport::compare("compute.psi1_closed", "Ψ₁ = −2iτ + L_δτ", params, v, rhs, cfg.tol(1e-9), started, seed)])
                }
                _ => {
                    let v = psi1_spectral(&pair, n, &cfg.heat_fit)?.value;
                    let closed = psi1_closed(&pair)?;
                    ("psi1_spectral", v, vec![CheckReport::compare("compute.psi1_spectral", "residue form of Ψ₁ against its closed form", json!({ "args": params, "N": n }), v, closed, cfg.tol(1e-3), started, seed)])
                }
            };
            Ok(Computed {
                value: json!({ "expression": name, "value": cval(value) }),
                rows,
            })
        }
        Expression::Residue => {
            let a: ResidueArgs = parse(args)?;
            let (res, rows) = residue(cfg, &a)?;
            Ok(Computed {
                value: json!({ "expression": "residue", "value": cval(res.value), "fit_residual": res.fit_residual }),
                rows,
            })
        }
        Expression::IndexPair | Expression::ChernPhi => {
            let a: TripleArgs = parse(args)?;
            let loaded = load_triple(a.triple.as_ref())?;
            let t = &loaded.triple;
            let started = Instant::now();
            let params = json!({ "triple": loaded.label, "n": a.n });
            if expr == Expression::IndexPair {
                let ip = index_pair(t, &loaded.idempotent, a.n)?;
                let rows = vec![
                    CheckReport::compare("compute.index_pair.plus", "plus half-character computes the plus index", params.clone(), ip.phi_plus, ip.index_plus as f64, cfg.tol(1e-9), started, None),
                    CheckReport::compare("compute.index_pair.minus", "minus half-character computes the minus index", params, ip.phi_minus, ip.index_minus as f64, cfg.tol(1e-9), started, None),
                ];
                Ok(Computed {
                    value: json!({
                        "expression": "index_pair",
                        "index_plus": ip.index_plus,
                        "index_minus": ip.index_minus,
                        "phi_plus": cval(ip.phi_plus),
                        "phi_minus": cval(ip.phi_minus),
                    }),
                    rows,
                })
            } else {
                let s = a.seed.unwrap_or(cfg.seed);
                let tc = TripleConfig::with_dim(t.dim());
                let args = random_samples(t, &tc, &mut ChaCha8Rng::seed_from_u64(s), a.n + 1);
                let v = t.chern_phi(&args)?;
                let (p, q) = t.phi_pm(&args)?;
                let row = CheckReport::compare("compute.chern_phi", "character splits into half-characters", params, v, p - q, cfg.tol(1e-11), started, Some(s));
                Ok(Computed {
                    value: json!({ "expression": "chern_phi", "value": cval(v) }),
                    rows: vec![row],
                })
            }
        }
    }
}

fn load_triple(path: Option<&PathBuf>) -> Result<LoadedTriple> {
    let file = match path {
        Some(p) => TripleFile::read(p)?,
        None => serde_json::from_str(EXAMPLE_TRIPLE).map_err(|e| Error::Config(e.to_string()))?,
    };
    file.load()
}

/// `∫̸ V_χ⁻¹ π(f)|∂̸|⁻¹`, checked against `2∫f` when `χ` is the identity
/// and against zero otherwise.
pub fn residue(cfg: &Config, a: &ResidueArgs) -> Result<(ResidueResult, Vec<CheckReport>)> {
    let f = a.f.build()?;
    let (g, chi) = word_for(&a.chi)?;
    let n = a.n.unwrap_or(cfg.n_trunc);
    let started = Instant::now();
    let stretch = if chi.is_identity() { 1.0 } else { 1.0 / chi.diffeo().min_jacobian() };
    let band = halo_band(n, stretch);
    let p = represent(&CrossedProductElement::function(&g, f.clone()), band)?
        .mul(&abs_dirac_power(band, 1.0, cfg.heat_fit.zero_mode_patch))?;
    let res = residue_functional(&p, &chi, n, &cfg.heat_fit)?;
    let params = json!({ "N": n, "chi": serde_json::to_value(&a.chi).unwrap_or(Value::Null) });
    let row = if chi.is_identity() {
        let want = wodzicki_closed_form(&f);
        CheckReport::compare("residue.zeta", "residue of π(f)|D|⁻¹ is 2∫f", params, res.value, want, cfg.tol(1e-3 * want.norm().max(1e-12)), started, None)
    } else {
        let tol = cfg.tol(1e-3 * f.sup_norm(4096));
        CheckReport::compare("residue.vanishing", "residue vanishes off the identity word", params, res.value, 0.0, tol, started, None)
    };
    Ok((res, vec![row]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!("psi2".parse::<Expression>(), Err(Error::UnknownExpression(_))));
        assert_eq!("tau".parse::<Expression>().unwrap(), Expression::Tau);
    }

    #[test]
    fn tau_of_sin_and_cos_is_minus_pi() {
        let c = evaluate(&Config::default(), Expression::Tau, r#"{"f": "sin", "g": "cos"}"#).unwrap();
        let re = c.value["value"]["re"].as_f64().unwrap();
        assert!((re + PI).abs() < 1e-12);
        assert!(c.rows[0].pass);
    }

    #[test]
    fn closed_psi1_of_constants_vanishes() {
        let c = evaluate(&Config::default(), Expression::Psi1Closed, r#"{"f": "one", "g": "one"}"#).unwrap();
        assert_eq!(c.value["value"]["re"].as_f64().unwrap(), 0.0);
        assert_eq!(c.value["value"]["im"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn example_triple_index() {
        let c = evaluate(&Config::default(), Expression::IndexPair, "{}").unwrap();
        assert_eq!(c.value["index_plus"], json!(1));
        assert_eq!(c.value["index_minus"], json!(-1));
        assert!(c.rows.iter().all(|r| r.pass));
    }
}
