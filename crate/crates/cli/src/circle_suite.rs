//! Checks on the crossed product of the circle by a diffeomorphism group.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use twisted_core::circle_cocycles::{
    psi1_closed_cochain, psi1_spectral, psi_gauge_m, psi_gauge_m_closed, tau_cochain, theorem12_check, MonomialPair,
};
use twisted_core::circle_kernel::{function_from_literal, CircleDiffeo, InversionOptions, PeriodicFunction};
use twisted_core::cochain_calculus::{cyclic_lambda, hochschild_b, CrossedProductAlgebra};
use twisted_core::crossed_product::{CrossedProductElement, Group, GroupConfig, GroupWord};
use twisted_core::operator_rep::{
    abs_dirac, abs_dirac_power, commutator_symbol_sup, dirac, interior_commutator_norm, represent,
};
use twisted_core::spectral_traces::{
    dixmier_twisted_trace_sides, halo_band, residue_functional, wodzicki_closed_form, HeatFitConfig, ResidueResult,
};
use twisted_core::Result;

use crate::config::Config;
use crate::report::{write_convergence_csv, CheckReport, Scalar};
use crate::worst::WorstCase;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn random_function(rng: &mut ChaCha8Rng, band: i64) -> PeriodicFunction {
    let modes: Vec<(i64, Complex64)> = (-band..=band)
        .map(|k| (k, Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))))
        .collect();
    PeriodicFunction::from_modes(&modes)
}

/// Table entry; a failed fit at small `N` is recorded as NaN.
fn table_value(r: Result<ResidueResult>) -> Complex64 {
    r.map_or(Complex64::new(f64::NAN, f64::NAN), |r| r.value)
}

/// Words up to length four are drawn from this group, so realizations get
/// a wider band than the default.
fn group(eps: f64) -> Result<Arc<Group>> {
    let cfg = GroupConfig {
        band: 256,
        inversion: InversionOptions { band: 256, ..Default::default() },
        ..Default::default()
    };
    Group::new(vec![("phi".into(), CircleDiffeo::sine(eps)?)], cfg)
}

fn random_word(g: &Arc<Group>, rng: &mut ChaCha8Rng) -> Result<GroupWord> {
    const WORDS: [&str; 4] = ["phi", "phi^-1", "phi.phi", "phi^-1.phi^-1"];
    g.parse_word(WORDS[rng.random_range(0..WORDS.len())])
}

fn function_operator(g: &Arc<Group>, f: &PeriodicFunction, band: usize, patch: f64) -> Result<twisted_core::operator_rep::TruncatedOperator> {
    represent(&CrossedProductElement::function(g, f.clone()), band)?.mul(&abs_dirac_power(band, 1.0, patch))
}

/// Runs the suite; convergence tables are written to `tables`.
pub fn run(cfg: &Config, tables: &Path) -> Result<Vec<CheckReport>> {
    let cc = &cfg.circle;
    let g = group(cc.epsilon)?;
    let phi = g.generator("phi")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut acc = WorstCase::new(cfg.seed);
    let n = cfg.n_trunc;
    let heat = &cfg.heat_fit;

    commutator_ladder(cfg, &phi, tables, &mut rows)?;

    for i in 0..8 {
        let wa = random_word(&g, &mut rng)?;
        let wb = if i % 2 == 0 { wa.inverse()? } else { random_word(&g, &mut rng)? };
        let a = CrossedProductElement::monomial(random_function(&mut rng, 2), wa);
        let b = CrossedProductElement::monomial(random_function(&mut rng, 2), wb);
        acc.observe("circle.state.sigma_trace".into(), "state is a σ⁻¹-twisted trace", cfg.tol(1e-10), &json!({ "sample": i }), || {
            Ok((a.multiply(&b)?.state(), b.multiply(&a.sigma_inv()?)?.state()))
        });
    }

    for (label, localized) in [("localized", true), ("identity_word", false)] {
        let t = CrossedProductElement::monomial(random_function(&mut rng, 1), phi.clone());
        let word = if localized { phi.inverse()? } else { g.identity() };
        let a = CrossedProductElement::monomial(random_function(&mut rng, 1), word);
        acc.observe(format!("circle.dixmier.sigma_trace.{label}"), "Dixmier surrogate is a σ⁻¹-twisted trace", cfg.tol(1e-3), &json!({ "N": n }), || {
            let (l, r) = dixmier_twisted_trace_sides(&t, &a, n, heat)?;
            Ok((l.value, r.value))
        });
    }

    residue_checks(cfg, &g, tables, &mut rng, &mut acc)?;
    cocycle_checks(cfg, &g, tables, &mut rng, &mut acc)?;

    rows.extend(acc.into_rows());
    Ok(rows)
}

/// Twisted commutator norms along the ladder for `∂̸` and `|∂̸|`.
fn commutator_ladder(cfg: &Config, phi: &GroupWord, tables: &Path, rows: &mut Vec<CheckReport>) -> Result<()> {
    let cc = &cfg.circle;
    let coeff = function_from_literal(&cc.commutator_coeff);
    let a = CrossedProductElement::monomial(coeff.clone(), phi.clone());
    let sup = commutator_symbol_sup(&coeff, phi.diffeo(), 1 << 16);
    for (name, abs) in [("dirac", false), ("abs_dirac", true)] {
        let started = std::time::Instant::now();
        let mut values = Vec::new();
        for &n in &cc.ladder {
            let d = if abs { abs_dirac(n) } else { dirac(n) };
            values.push((n, re(interior_commutator_norm(&d, &a)?)));
        }
        write_convergence_csv(&tables.join(format!("commutator_{name}.csv")), &values)?;
        let deltas: Vec<f64> = values.windows(2).map(|w| (w[1].1 - w[0].1).norm()).collect();
        for (i, w) in deltas.windows(2).enumerate() {
            let n = values[i + 2].0;
            let growth = (w[1] - w[0]).max(0.0);
            rows.push(CheckReport {
                check_id: format!("circle.commutator.{name}.cauchy.N{n:04}"),
                paper_ref: "twisted commutators are bounded: successive differences shrink".into(),
                params: json!({ "N": n, "criterion": "abs_err is the growth of the Cauchy difference" }),
                lhs: Scalar::Real(w[1]),
                rhs: Scalar::Real(w[0]),
                abs_err: growth,
                tol: 0.0,
                pass: growth <= 0.0,
                runtime_ms: started.elapsed().as_millis() as u64,
                seed: None,
            });
        }
        if !abs {
            let (n, top) = *values.last().expect("ladder is non-empty");
            rows.push(CheckReport::compare(
                format!("circle.commutator.dirac.symbol_sup.N{n:04}"),
                "commutator norm equals the sup of its symbol",
                json!({ "N": n, "epsilon": cc.epsilon, "relative_tol": cc.commutator_rel_tol }),
                top.re,
                sup,
                cfg.tol(cc.commutator_rel_tol * sup),
                started,
                None,
            ));
        }
    }
    Ok(())
}

fn residue_checks(cfg: &Config, g: &Arc<Group>, tables: &Path, rng: &mut ChaCha8Rng, acc: &mut WorstCase) -> Result<()> {
    let heat = &cfg.heat_fit;
    let n = cfg.n_trunc;
    let f = random_function(rng, 3);
    let want = wodzicki_closed_form(&f);
    let mut table = Vec::new();
    for &m in &cfg.circle.ladder {
        let p = function_operator(g, &f, m, heat.zero_mode_patch)?;
        table.push((m, table_value(residue_functional(&p, &g.identity(), m, heat))));
    }
    write_convergence_csv(&tables.join("residue_zeta.csv"), &table)?;
    acc.observe("circle.residue.zeta".into(), "residue of π(f)|D|⁻¹ is 2∫f", cfg.tol(1e-3 * want.norm()), &json!({ "N": n }), || {
        let p = function_operator(g, &f, n, heat.zero_mode_patch)?;
        Ok((residue_functional(&p, &g.identity(), n, heat)?.value, want))
    });
    acc.observe("circle.residue.patch_invariance".into(), "residue ignores the zero-mode patch", cfg.tol(1e-6), &json!({ "N": n }), || {
        let p1 = function_operator(g, &f, n, 1.0)?;
        let p2 = function_operator(g, &f, n, 2.0)?;
        let cfg2 = HeatFitConfig { zero_mode_patch: 2.0, ..heat.clone() };
        let h1 = HeatFitConfig { zero_mode_patch: 1.0, ..heat.clone() };
        Ok((residue_functional(&p1, &g.identity(), n, &h1)?.value, residue_functional(&p2, &g.identity(), n, &cfg2)?.value))
    });

    for &eps in &cfg.circle.vanishing_epsilons {
        let ge = group(eps)?;
        let chi = ge.generator("phi")?;
        let sup = f.sup_norm(4096);
        let mut table = Vec::new();
        let mut top = None;
        for &m in &cfg.circle.ladder {
            let band = halo_band(m, 1.0 / (1.0 - eps));
            let p = function_operator(&ge, &f, band, heat.zero_mode_patch)?;
            let r = residue_functional(&p, &chi, m, heat);
            table.push((m, table_value(r.clone())));
            top = Some((m, r));
        }
        write_convergence_csv(&tables.join(format!("residue_vanishing_eps{eps}.csv")), &table)?;
        let (top_n, top) = top.expect("validated ladder is non-empty");
        acc.observe(format!("circle.residue.vanishing.eps{eps}"), "residue vanishes for a diffeomorphism with isolated fixed points", cfg.tol(1e-3 * sup), &json!({ "N": top_n, "epsilon": eps }), || {
            Ok((top?.value, ZERO))
        });
    }
    Ok(())
}

fn cocycle_checks(cfg: &Config, g: &Arc<Group>, tables: &Path, rng: &mut ChaCha8Rng, acc: &mut WorstCase) -> Result<()> {
    let heat = &cfg.heat_fit;
    let n = cfg.n_trunc;
    let alg = Arc::new(CrossedProductAlgebra { group: g.clone() });
    let tau = tau_cochain(alg.clone());
    let psi = psi1_closed_cochain(alg.clone());
    let mono = |rng: &mut ChaCha8Rng, w: GroupWord| CrossedProductElement::monomial(random_function(rng, 2), w);

    for i in 0..4 {
        let w0 = random_word(g, rng)?;
        let w1 = random_word(g, rng)?;
        let w2 = w0.then_after(&w1)?.inverse()?;
        let triple = [mono(rng, w0.clone()), mono(rng, w1.clone()), mono(rng, w2)];
        let pair = [mono(rng, w0.clone()), mono(rng, w0.inverse()?)];
        let p = json!({ "sample": i });
        acc.observe("circle.tau.hochschild".into(), "τ is a Hochschild cocycle", cfg.tol(1e-8), &p, || {
            Ok((hochschild_b(&tau).eval(&triple)?, ZERO))
        });
        acc.observe("circle.tau.cyclic".into(), "τ is cyclic", cfg.tol(1e-8), &p, || {
            Ok((cyclic_lambda(&tau).eval(&pair)?, tau.eval(&pair)?))
        });
        acc.observe("circle.psi1.hochschild".into(), "local cocycle is a Hochschild cocycle", cfg.tol(1e-8), &p, || {
            Ok((hochschild_b(&psi).eval(&triple)?, ZERO))
        });
    }

    let pairs: Vec<MonomialPair> = (0..cfg.circle.pairs.max(1))
        .map(|_| {
            let w = random_word(g, rng)?;
            MonomialPair::localized(random_function(rng, 2), w, random_function(rng, 2))
        })
        .collect::<Result<_>>()?;
    for (i, pair) in pairs.iter().enumerate() {
        let p = json!({ "pair": i, "N": n });
        let rep = theorem12_check(pair, Some((n, heat)));
        acc.observe("circle.theorem12.closed".into(), "Ψ₁ = −2iτ + L_δτ, closed forms", cfg.tol(1e-9), &p, || {
            let r = rep.clone()?;
            Ok((r.psi1_closed, r.rhs))
        });
        acc.observe("circle.theorem12.spectral".into(), "Ψ₁ = −2iτ + L_δτ, residue side", cfg.tol(1e-3), &p, || {
            let r = rep.clone()?;
            Ok((r.psi1_spectral.unwrap_or(Complex64::new(f64::NAN, 0.0)), r.rhs))
        });
        acc.observe("circle.theorem12.cartan".into(), "L_δτ = B(e_δτ) + b(E_δτ)", cfg.tol(1e-8), &p, || {
            let r = rep.clone()?;
            Ok((re(r.cartan_residual), ZERO))
        });
        for m in [-1, 1, 2] {
            acc.observe(format!("circle.gauge.m{m}"), "gauge-transformed local cocycle", cfg.tol(1e-3), &json!({ "pair": i, "N": n, "m": m }), || {
                Ok((psi_gauge_m(pair, m, n, heat)?.value, psi_gauge_m_closed(pair, m)?))
            });
        }
    }

    let mut table = Vec::new();
    for &m in &cfg.circle.ladder {
        table.push((m, table_value(psi1_spectral(&pairs[0], m, heat))));
    }
    write_convergence_csv(&tables.join("psi1_spectral.csv"), &table)?;
    Ok(())
}
