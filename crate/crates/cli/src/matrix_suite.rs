//! Randomized checks on finite-dimensional twisted triples.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use twisted_core::cochain_calculus::{cyclic_lambda, hochschild_b};
use twisted_core::matrix_triples::{
    homotopy_cochain, index_pair, chern_cochain, phase_normalization, random_even_hermitian, random_projection,
    random_samples, IdempotentData, IdempotentKind, MatrixTwistedTriple, TripleConfig,
};
use twisted_core::Result;

use crate::config::Config;
use crate::report::CheckReport;
use crate::worst::WorstCase;

type CMat = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Seed of trial `trial` at dimension `dim`.
fn trial_seed(seed: u64, dim: usize, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((dim as u64) << 32) ^ trial as u64
}

fn fro(m: &CMat) -> f64 {
    m.norm()
}

pub fn run(cfg: &Config) -> Result<Vec<CheckReport>> {
    let mut acc = WorstCase::new(cfg.seed);
    let mc = &cfg.matrix;
    for &dim in &mc.dims {
        let tc = TripleConfig {
            dim,
            h_scale: mc.h_scale,
            d_spread: mc.d_spread,
            sample_scale: mc.sample_scale,
            ..TripleConfig::with_dim(dim)
        };
        for trial in 0..mc.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, dim, trial));
            let t = Arc::new(MatrixTwistedTriple::random(&tc, &mut rng)?);
            if trial == 0 {
                if let Some(dir) = &cfg.dump_dir {
                    std::fs::create_dir_all(dir).map_err(crate::report::io_err)?;
                    t.write_dumps(Path::new(dir), &format!("triple_d{dim}"))?;
                }
            }
            let params = json!({ "dim": dim, "trial": trial });
            trial_checks(cfg, &mut acc, &t, &tc, &mut rng, dim, &params)?;
        }
    }
    Ok(acc.into_rows())
}

fn trial_checks(
    cfg: &Config,
    acc: &mut WorstCase,
    t: &Arc<MatrixTwistedTriple>,
    tc: &TripleConfig,
    rng: &mut ChaCha8Rng,
    dim: usize,
    params: &serde_json::Value,
) -> Result<()> {
    let mc = &cfg.matrix;
    let m = dim / 2;
    for &n in &mc.degrees {
        let b_args = random_samples(t, tc, rng, n + 2);
        let args = random_samples(t, tc, rng, n + 1);
        let phi = chern_cochain(t, n);

        acc.observe(format!("matrix.chern.hochschild.n{n}.d{dim}"), "twisted Chern character is a Hochschild cocycle", cfg.tol(1e-10), params, || {
            Ok((hochschild_b(&phi).eval(&b_args)?, ZERO))
        });
        acc.observe(format!("matrix.chern.cyclic.n{n}.d{dim}"), "twisted Chern character is cyclic", cfg.tol(1e-10), params, || {
            Ok((cyclic_lambda(&phi).eval(&args)?, phi.eval(&args)?))
        });
        acc.observe(format!("matrix.chern.half_split.n{n}.d{dim}"), "character splits into half-characters", cfg.tol(1e-11), params, || {
            let (p, q) = t.phi_pm(&args)?;
            Ok((t.chern_phi(&args)?, p - q))
        });
        acc.observe(format!("matrix.perturbation.n{n}.d{dim}"), "perturbed character equals conjugated untwisted character", cfg.tol(1e-11), params, || {
            let base = MatrixTwistedTriple::random_untwisted(tc, rng)?;
            let pert = base.perturb(&random_even_hermitian(rng, m, tc.h_scale))?;
            let a = random_samples(&pert, tc, rng, n + 1);
            let (eh, emh) = (pert.exp_h(1.0), pert.exp_h(-1.0));
            let b: Vec<CMat> = a.iter().map(|x| &eh * x * &emh).collect();
            Ok((pert.chern_phi(&a)?, base.chern_phi(&b)?))
        });
        let endpoints = t.adjoint_chern_endpoints(&args);
        acc.observe(format!("matrix.endpoint.start.n{n}.d{dim}"), "homotopy start equals adjoint of the plus character", cfg.tol(1e-10), params, || {
            let e = endpoints.clone()?;
            Ok((e.phi0, e.phi_plus_star))
        });
        acc.observe(format!("matrix.endpoint.end.n{n}.d{dim}"), "homotopy end equals minus the minus character", cfg.tol(1e-10), params, || {
            let e = endpoints.clone()?;
            Ok((e.phi1, e.minus_phi_minus))
        });
        let ts: Vec<f64> = (0..mc.homotopy_points).map(|k| k as f64 / (mc.homotopy_points - 1) as f64).collect();
        for &s in &ts {
            let p = json!({ "dim": dim, "trial": params["trial"], "t": s });
            let phi_t = homotopy_cochain(t, s, n);
            acc.observe(format!("matrix.homotopy.hochschild.n{n}.d{dim}"), "D^t homotopy is a Hochschild cocycle", cfg.tol(1e-10), &p, || {
                Ok((hochschild_b(&phi_t).eval(&b_args)?, ZERO))
            });
            acc.observe(format!("matrix.homotopy.cyclic.n{n}.d{dim}"), "D^t homotopy is cyclic", cfg.tol(1e-10), &p, || {
                Ok((cyclic_lambda(&phi_t).eval(&args)?, phi_t.eval(&args)?))
            });
        }
        acc.observe(format!("matrix.homotopy.t0.n{n}.d{dim}"), "D^t homotopy at t = 0 is the twisted character", cfg.tol(1e-10), params, || {
            Ok((t.homotopy_phi_t(0.0, &args)?, t.chern_phi(&args)?))
        });
        acc.observe(format!("matrix.homotopy.t1.n{n}.d{dim}"), "D^t homotopy at t = 1 is the phase character", cfg.tol(1e-10), params, || {
            Ok((t.homotopy_phi_t(1.0, &args)?, t.phi_f(&args)? * phase_normalization(n)))
        });

        let rp = 1 + params["trial"].as_u64().unwrap_or(0) as usize % m;
        let rm = (rp + 1) % (m + 1);
        let p = random_projection(rng, m, rp, rm);
        let e = IdempotentData::twisted(t, &p);
        let ip = e.as_ref().map_err(Clone::clone).and_then(|e| index_pair(t, e, n));
        let ip_params = json!({ "dim": dim, "trial": params["trial"], "rank_plus": rp, "rank_minus": rm });
        acc.observe(format!("matrix.index.plus.n{n}.d{dim}"), "plus half-character computes the plus index", cfg.tol(1e-9), &ip_params, || {
            let ip = ip.clone()?;
            Ok((ip.phi_plus, Complex64::new(ip.index_plus as f64, 0.0)))
        });
        acc.observe(format!("matrix.index.minus.n{n}.d{dim}"), "minus half-character computes the minus index", cfg.tol(1e-9), &ip_params, || {
            let ip = ip.clone()?;
            Ok((ip.phi_minus, Complex64::new(ip.index_minus as f64, 0.0)))
        });
        acc.observe(format!("matrix.index.antisymmetry.n{n}.d{dim}"), "plus index is minus the minus index", cfg.tol(0.0), &ip_params, || {
            let ip = ip.clone()?;
            Ok((Complex64::new(ip.index_plus as f64, 0.0), Complex64::new(-ip.index_minus as f64, 0.0)))
        });
    }

    let s = random_samples(t, tc, rng, 2);
    acc.observe(format!("matrix.leibniz.d{dim}"), "twisted differential obeys the Leibniz rule", cfg.tol(1e-11), params, || {
        let lhs = t.twisted_commutator(&(&s[0] * &s[1]));
        let rhs = t.twisted_commutator(&s[0]) * &s[1] + t.sigma(&s[0]) * t.twisted_commutator(&s[1]);
        Ok((Complex64::new(fro(&(lhs - rhs)), 0.0), ZERO))
    });
    acc.observe(format!("matrix.sigma_unitarity.d{dim}"), "σ(a*) = (σ⁻¹(a))*", cfg.tol(1e-11), params, || {
        Ok((Complex64::new(t.sigma_unitarity_defect(&s[0]), 0.0), ZERO))
    });
    acc.observe(format!("matrix.fredholm_blocks.d{dim}"), "graded blocks of the phase commutator", cfg.tol(1e-10), params, || {
        Ok((Complex64::new(t.fredholm_block_defect(&s[0]), 0.0), ZERO))
    });
    acc.observe(format!("matrix.phase_untwist.d{dim}"), "untwisting the phase of the perturbed operator", cfg.tol(1e-10), params, || {
        Ok((Complex64::new(t.untwist_phase(&s).max_residual(), 0.0), ZERO))
    });

    let p = random_projection(rng, m, m, m / 2);
    let e = IdempotentData::twisted(t, &p);
    acc.observe(format!("matrix.idempotent.square.d{dim}"), "e² = e for the twisted idempotent", cfg.tol(1e-12), params, || {
        let e = e.clone()?;
        Ok((Complex64::new(fro(&(&e.e * &e.e - &e.e)), 0.0), ZERO))
    });
    acc.observe(format!("matrix.idempotent.twisted_adjoint.d{dim}"), "e* = σ(e) for the twisted idempotent", cfg.tol(1e-11), params, || {
        let e = e.clone()?;
        Ok((Complex64::new(fro(&(e.e.adjoint() - t.sigma(&e.e))), 0.0), ZERO))
    });

    let start = IdempotentData::projection(t, p.clone()).and_then(|e| index_pair(t, &e, 2));
    for k in 0..mc.path_points {
        let s = k as f64 / (mc.path_points - 1) as f64;
        let pp = json!({ "dim": dim, "trial": params["trial"], "s": s });
        acc.observe(format!("matrix.index.path_constancy.d{dim}"), "index is constant along the modular path", cfg.tol(0.0), &pp, || {
            let ip0 = start.clone()?;
            let e = IdempotentData::new(t, t.sigma_power(-s, &p), IdempotentKind::Projection)?;
            let ip = index_pair(t, &e, 2)?;
            let moved = ((ip.index_plus - ip0.index_plus).abs() + (ip.index_minus - ip0.index_minus).abs()) as f64;
            Ok((Complex64::new(moved, 0.0), ZERO))
        });
    }
    Ok(())
}
