//! Regularized traces on the circle: the residue functional, a Dixmier-trace
//! surrogate, and the Wodzicki closed form.
//!
//! For an operator `Y` whose diagonal is `d_k`, the heat curve
//! `h(t) = Σ_{|k|≤N} d_k e^{-t(2πk)²}` is sampled on a log-spaced window just
//! above the truncation time of the band, and fitted by a short power
//! series `Σ_p a_p t^p`. The Mellin representation
//! `|∂̸|^{-1-s} = Γ((1+s)/2)^{-1} ∫ t^{(s-1)/2} e^{-t∂̸²} dt` shows that the
//! residue at `s = 0` of `Tr(Y|∂̸|^{-1-s})` comes from the `t^{-1/2}` term
//! alone and equals `(2/√π) a_{-1/2}`.
//!
//! Values are reported in the normalization where `∫̸ π(f)|∂̸|^{-1} = 2∫f`,
//! one unit per cosphere point. Because the eigenvalues of `∂̸` are `2πk`,
//! this is `2π` times the raw residue, see [`RESIDUE_SCALE`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_kernel::PeriodicFunction;
use crate::crossed_product::{CrossedProductElement, GroupWord};
use crate::error::{Error, Result};
use crate::operator_rep::{check_heat, diag_of_product, represent, translation_inverse, TruncatedOperator};

/// Factor turning the fitted `t^{-1/2}` coefficient into `∫̸`:
/// `2π · 2/√π = 4√π`.
pub const RESIDUE_SCALE: f64 = 4.0 * 1.772_453_850_905_516;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatFitConfig {
    /// Smallest sampled time; `None` selects `ln(1e16)/(2πN)²`, the
    /// earliest time at which the band-`N` heat semigroup is untruncated.
    pub t_min: Option<f64>,
    /// `t_max = t_max_factor · t_min`.
    pub t_max_factor: f64,
    pub count: usize,
    /// Exponents `p` of the fit basis `t^p`; must contain `-1/2`.
    pub basis_powers: Vec<f64>,
    pub condition_bound: f64,
    /// Bound on the fit residual reported by [`fit_heat_curve`].
    pub residual_bound: f64,
    /// Absolute floor added to the residual normalization, so that curves
    /// made of rounding noise are not flagged.
    pub residual_floor: f64,
    /// Zero-mode eigenvalue of `|∂̸|` wherever an inverse power is formed.
    pub zero_mode_patch: f64,
}

impl Default for HeatFitConfig {
    fn default() -> Self {
        HeatFitConfig {
            t_min: None,
            t_max_factor: 4.0,
            count: 24,
            basis_powers: vec![-0.5, 0.0, 1.0, 2.0],
            condition_bound: 1e12,
            residual_bound: 1e-5,
            residual_floor: 1e-9,
            zero_mode_patch: 1.0,
        }
    }
}

impl HeatFitConfig {
    /// Earliest untruncated time for band `n`.
    pub fn auto_t_min(n: usize) -> f64 {
        (1e16f64).ln() / (2.0 * PI * n as f64).powi(2)
    }

    /// Log-spaced sample times for a trace over modes `|k| ≤ n`.
    pub fn t_grid(&self, n: usize) -> Result<Vec<f64>> {
        if self.count < self.basis_powers.len() + 1 {
            return Err(Error::Config(format!(
                "{} sample times cannot fit {} basis powers",
                self.count,
                self.basis_powers.len()
            )));
        }
        if !self.basis_powers.contains(&-0.5) {
            return Err(Error::Config("fit basis must contain the power -1/2".into()));
        }
        if !(self.t_max_factor > 1.0) {
            return Err(Error::Config("t_max_factor must exceed 1".into()));
        }
        let t_min = self.t_min.unwrap_or_else(|| Self::auto_t_min(n));
        check_heat(n, t_min)?;
        let (a, b) = (t_min.ln(), (t_min * self.t_max_factor).ln());
        let last = (self.count - 1) as f64;
        Ok((0..self.count).map(|i| (a + (b - a) * i as f64 / last).exp()).collect())
    }
}

/// Fitted coefficient of one basis power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitCoefficient {
    pub power: f64,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidueResult {
    pub value: Complex64,
    pub fit_residual: f64,
    pub condition: f64,
    pub coefficients: Vec<FitCoefficient>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientJson {
    power: f64,
    value: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ResidueJson {
    value_re: f64,
    value_im: f64,
    fit_residual: f64,
    coefficients: Vec<CoefficientJson>,
}

impl Serialize for ResidueResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ResidueJson {
            value_re: self.value.re,
            value_im: self.value.im,
            fit_residual: self.fit_residual,
            coefficients: self
                .coefficients
                .iter()
                .map(|c| CoefficientJson {
                    power: c.power,
                    value: [c.value.re, c.value.im],
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl ResidueResult {
    pub fn coefficient(&self, power: f64) -> Option<Complex64> {
        self.coefficients.iter().find(|c| c.power == power).map(|c| c.value)
    }

    fn zero(cfg: &HeatFitConfig) -> Self {
        ResidueResult {
            value: Complex64::new(0.0, 0.0),
            fit_residual: 0.0,
            condition: 1.0,
            coefficients: cfg
                .basis_powers
                .iter()
                .map(|&power| FitCoefficient {
                    power,
                    value: Complex64::new(0.0, 0.0),
                })
                .collect(),
        }
    }
}

/// `t ↦ Σ_{|k|≤n} d_k e^{-t(2πk)²}` on the configured grid, for a diagonal of
/// length `2n + 1`.
pub fn heat_curve_from_diagonal(diag: &[Complex64], cfg: &HeatFitConfig) -> Result<Vec<(f64, Complex64)>> {
    let n = (diag.len() - 1) / 2;
    let ts = cfg.t_grid(n)?;
    Ok(ts
        .into_iter()
        .map(|t| {
            let v: Complex64 = diag
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let k = i as f64 - n as f64;
                    d * (-t * (2.0 * PI * k).powi(2)).exp()
                })
                .sum();
            (t, v)
        })
        .collect())
}

/// Sampled `Tr(P e^{-t∂̸²})`; exact for each `t` since the semigroup is diagonal.
pub fn heat_trace_curve(prefactor: &TruncatedOperator, cfg: &HeatFitConfig) -> Result<Vec<(f64, Complex64)>> {
    heat_curve_from_diagonal(&prefactor.diagonal(), cfg)
}

/// `Σ_k |d_k| e^{-t(2πk)²}` at the first sample time, an upper bound for
/// `|h(t)|` on the whole grid that does not suffer from cancellation.
pub fn curve_mass(diag: &[Complex64], cfg: &HeatFitConfig) -> Result<f64> {
    let n = (diag.len() - 1) / 2;
    let t = cfg.t_grid(n)?[0];
    Ok(diag
        .iter()
        .enumerate()
        .map(|(i, d)| d.norm() * (-t * (2.0 * PI * (i as f64 - n as f64)).powi(2)).exp())
        .sum())
}

/// Least-squares fit of a sampled curve by `Σ_p a_p t^p`.
///
/// The reported residual is `‖Ac − h‖ / (√count · (mass + floor))`, where
/// `mass` bounds `|h|` pointwise (see [`curve_mass`]); a zero `mass` means
/// the curve vanishes identically.
pub fn fit_heat_curve(curve: &[(f64, Complex64)], mass: f64, cfg: &HeatFitConfig) -> Result<ResidueResult> {
    let rows = curve.len();
    let cols = cfg.basis_powers.len();
    let mut a = DMatrix::<f64>::from_fn(rows, cols, |i, j| curve[i].0.powf(cfg.basis_powers[j]));
    let mut scales = Vec::with_capacity(cols);
    for mut col in a.column_iter_mut() {
        let s = col.norm();
        col /= s;
        scales.push(s);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !(condition <= cfg.condition_bound) {
        return Err(Error::IllConditionedFit {
            condition,
            bound: cfg.condition_bound,
        });
    }
    let yr = DVector::from_iterator(rows, curve.iter().map(|(_, v)| v.re));
    let yi = DVector::from_iterator(rows, curve.iter().map(|(_, v)| v.im));
    let norm_y = (yr.norm_squared() + yi.norm_squared()).sqrt();
    if norm_y == 0.0 || mass == 0.0 {
        return Ok(ResidueResult::zero(cfg));
    }
    let scale = (rows as f64).sqrt() * (mass + cfg.residual_floor);
    let cr = svd.solve(&yr, 0.0).map_err(|e| Error::Convergence(e.to_string()))?;
    let ci = svd.solve(&yi, 0.0).map_err(|e| Error::Convergence(e.to_string()))?;
    let res = ((&a * &cr - &yr).norm_squared() + (&a * &ci - &yi).norm_squared()).sqrt() / scale;
    let coefficients: Vec<FitCoefficient> = (0..cols)
        .map(|j| FitCoefficient {
            power: cfg.basis_powers[j],
            value: Complex64::new(cr[j], ci[j]) / scales[j],
        })
        .collect();
    if !(res <= cfg.residual_bound) {
        return Err(Error::UnreliableResidue {
            residual: res,
            bound: cfg.residual_bound,
        });
    }
    let lead = coefficients
        .iter()
        .find(|c| c.power == -0.5)
        .map(|c| c.value)
        .unwrap_or_default();
    Ok(ResidueResult {
        value: lead * RESIDUE_SCALE,
        fit_residual: res,
        condition,
        coefficients,
    })
}

/// `∫̸ Y|∂̸|^{-1}` from the diagonal `d_k = ⟨e_k, Y e_k⟩`, `|k| ≤ n`.
pub fn residue_of_diagonal(diag: &[Complex64], cfg: &HeatFitConfig) -> Result<ResidueResult> {
    fit_heat_curve(&heat_curve_from_diagonal(diag, cfg)?, curve_mass(diag, cfg)?, cfg)
}

/// `∫̸ V_χ^{-1} P`, where `P = Y|∂̸|^{-1}` with the patched `|∂̸|` and is
/// given at a band wide enough that the diagonal of `V_χ^{-1}P` is exact
/// on `|k| ≤ n`.
pub fn residue_functional(
    prefactor: &TruncatedOperator,
    chi: &GroupWord,
    n: usize,
    cfg: &HeatFitConfig,
) -> Result<ResidueResult> {
    let v = translation_inverse(chi, prefactor.band())?;
    let mut diag = diag_of_product(&v, prefactor, n)?;
    strip_inverse_abs_dirac(&mut diag, cfg.zero_mode_patch);
    residue_of_diagonal(&diag, cfg)
}

/// Multiplies `d_k` by the patched `|∂̸|` eigenvalue.
fn strip_inverse_abs_dirac(diag: &mut [Complex64], patch: f64) {
    let n = (diag.len() - 1) / 2;
    for (i, d) in diag.iter_mut().enumerate() {
        let k = i as i64 - n as i64;
        *d *= if k == 0 { patch } else { 2.0 * PI * k.abs() as f64 };
    }
}

/// Kernel replacing `D^{-1}` in the Dixmier surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DixmierKernel {
    /// `D^{-1} = F|D|^{-1}` with the sign of each mode.
    Signed,
    /// `|D|^{-1}`.
    Absolute,
}

fn kernel_sign(kernel: DixmierKernel, k: i64) -> f64 {
    match kernel {
        DixmierKernel::Absolute => 1.0,
        DixmierKernel::Signed => {
            if k < 0 {
                -1.0
            } else {
                1.0
            }
        }
    }
}

/// Residue surrogate for `Tr_ω(L R K)` with `K` the chosen kernel; `L` and `R`
/// share a band wide enough for the diagonal on `|k| ≤ n` to be exact.
pub fn dixmier_surrogate_product(
    left: &TruncatedOperator,
    right: &TruncatedOperator,
    n: usize,
    kernel: DixmierKernel,
    cfg: &HeatFitConfig,
) -> Result<ResidueResult> {
    let mut diag = diag_of_product(left, right, n)?;
    for (i, d) in diag.iter_mut().enumerate() {
        *d *= kernel_sign(kernel, i as i64 - n as i64);
    }
    residue_of_diagonal(&diag, cfg)
}

/// Surrogate for `Tr_ω(T π(a) K)`; `t` is given at the inner band.
pub fn dixmier_surrogate(
    t: &TruncatedOperator,
    a: &CrossedProductElement,
    n: usize,
    kernel: DixmierKernel,
    cfg: &HeatFitConfig,
) -> Result<ResidueResult> {
    let pa = represent(a, t.band())?;
    dixmier_surrogate_product(t, &pa, n, kernel, cfg)
}

/// Surrogate for `Tr_ω(π(a) T K)`.
pub fn dixmier_surrogate_left(
    a: &CrossedProductElement,
    t: &TruncatedOperator,
    n: usize,
    kernel: DixmierKernel,
    cfg: &HeatFitConfig,
) -> Result<ResidueResult> {
    let pa = represent(a, t.band())?;
    dixmier_surrogate_product(&pa, t, n, kernel, cfg)
}

/// Both sides of the twisted trace property of the Dixmier surrogate with
/// the `|∂̸|^{-1}` kernel: `(Tr_ω(T σ^{-1}(a) |∂̸|^{-1}), Tr_ω(a T |∂̸|^{-1}))`
/// for `T = π(t)`. The inner band is sized from the words of `t` and `a`.
pub fn dixmier_twisted_trace_sides(
    t: &CrossedProductElement,
    a: &CrossedProductElement,
    n: usize,
    cfg: &HeatFitConfig,
) -> Result<(ResidueResult, ResidueResult)> {
    let stretch = t
        .terms()
        .chain(a.terms())
        .map(|(w, _)| 1.0 / w.diffeo().min_jacobian())
        .fold(1.0, f64::max);
    let band = halo_band(n, stretch * stretch);
    let pt = represent(t, band)?;
    let lhs = dixmier_surrogate(&pt, &a.sigma_inv()?, n, DixmierKernel::Absolute, cfg)?;
    let rhs = dixmier_surrogate_left(a, &pt, n, DixmierKernel::Absolute, cfg)?;
    Ok((lhs, rhs))
}

/// Wodzicki residue of `π(f)|∂̸|^{-1}`: the order `-1` symbol summed over the
/// two cosphere points and integrated, `2∫f`.
pub fn wodzicki_closed_form(f: &PeriodicFunction) -> Complex64 {
    f.quadrature() * 2.0
}

/// Inner band that keeps diagonals exact on `|k| ≤ n` when the factors move
/// modes by at most the given maximal stretch (largest `1/χ'` over the words
/// involved).
pub fn halo_band(n: usize, stretch: f64) -> usize {
    ((n as f64) * stretch * 1.15).ceil() as usize + 48
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_kernel::CircleDiffeo;
    use crate::crossed_product::{Group, GroupConfig};
    use crate::operator_rep::{abs_dirac_power, represent};
    use std::sync::Arc;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn group(eps: f64) -> Arc<Group> {
        Group::new(
            vec![("phi".into(), CircleDiffeo::sine(eps).unwrap())],
            GroupConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn identity_curve_is_theta_sum() {
        let n = 64;
        let cfg = HeatFitConfig::default();
        let curve = heat_trace_curve(&TruncatedOperator::identity(n), &cfg).unwrap();
        for (t, v) in &curve {
            let direct: f64 = (-200i64..=200).map(|k| (-t * (2.0 * PI * k as f64).powi(2)).exp()).sum();
            assert!((v.re - direct).abs() < 1e-12 * direct);
            // Poisson summation: Σ e^{-4π²tk²} = (4πt)^{-1/2} Σ e^{-m²/(4t)}.
            assert!((v.re - 1.0 / (4.0 * PI * t).sqrt()).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn grid_rejects_truncated_window() {
        let cfg = HeatFitConfig {
            t_min: Some(1e-9),
            ..Default::default()
        };
        assert!(matches!(cfg.t_grid(64), Err(Error::Truncation { .. })));
        let bad = HeatFitConfig {
            basis_powers: vec![0.0, 1.0],
            ..Default::default()
        };
        assert!(matches!(bad.t_grid(64), Err(Error::Config(_))));
    }

    #[test]
    fn riemann_zeta_oracle() {
        // Tr(π(f)|∂̸|^{-1-s}) = (∫f)·2(2π)^{-1-s}ζ(1+s): residue (∫f)/π, reported as 2∫f.
        let g = group(0.3);
        let f = PeriodicFunction::from_modes(&[(0, c(0.7)), (1, c(0.2)), (-1, c(0.2)), (3, Complex64::new(0.0, 0.4))]);
        let n = 256;
        let p = represent(&CrossedProductElement::function(&g, f.clone()), n)
            .unwrap()
            .mul(&abs_dirac_power(n, 1.0, 1.0))
            .unwrap();
        let r = residue_functional(&p, &g.identity(), n, &HeatFitConfig::default()).unwrap();
        let want = wodzicki_closed_form(&f);
        assert!((want - c(1.4)).norm() < 1e-15);
        assert!((r.value - want).norm() < 1e-9, "{:?}", r);
    }

    #[test]
    fn zero_operator_gives_zero() {
        let r = residue_of_diagonal(&vec![c(0.0); 129], &HeatFitConfig::default()).unwrap();
        assert_eq!(r.value, c(0.0));
    }

    #[test]
    fn patch_value_is_invisible() {
        let g = group(0.3);
        let f = PeriodicFunction::cos_mode(1).add(&PeriodicFunction::one());
        let n = 128;
        let pf = represent(&CrossedProductElement::function(&g, f), n).unwrap();
        let run = |patch: f64| {
            let cfg = HeatFitConfig {
                zero_mode_patch: patch,
                ..Default::default()
            };
            let p = pf.mul(&abs_dirac_power(n, 1.0, patch)).unwrap();
            residue_functional(&p, &g.identity(), n, &cfg).unwrap().value
        };
        assert!((run(1.0) - run(2.0)).norm() < 1e-6);
    }

    #[test]
    fn fixed_point_residue_vanishes() {
        let g = group(0.3);
        let phi = g.generator("phi").unwrap();
        let f = PeriodicFunction::cos_mode(2).add(&PeriodicFunction::sin_mode(1)).add(&PeriodicFunction::one());
        let n = 256;
        let l = halo_band(n, 1.0 / 0.7);
        let p = represent(&CrossedProductElement::function(&g, f.clone()), l)
            .unwrap()
            .mul(&abs_dirac_power(l, 1.0, 1.0))
            .unwrap();
        let r = residue_functional(&p, &phi, n, &HeatFitConfig::default()).unwrap();
        assert!(r.value.norm() < 1e-3 * f.sup_norm(1024), "{:?}", r);
    }

    #[test]
    fn dixmier_signed_and_absolute() {
        let g = group(0.3);
        let f = PeriodicFunction::one().add(&PeriodicFunction::cos_mode(1).scale(c(0.5)));
        let n = 128;
        let t = represent(&CrossedProductElement::function(&g, f.clone()), n).unwrap();
        let one = CrossedProductElement::one(&g);
        let cfg = HeatFitConfig::default();
        let abs = dixmier_surrogate(&t, &one, n, DixmierKernel::Absolute, &cfg).unwrap();
        assert!((abs.value - wodzicki_closed_form(&f)).norm() < 1e-9);
        // The signed kernel pairs ±k with opposite signs; a translation-invariant
        // diagonal cancels out of the leading term.
        let signed = dixmier_surrogate(&t, &one, n, DixmierKernel::Signed, &cfg).unwrap();
        assert!(signed.value.norm() < 1e-9);
        let zero = TruncatedOperator::zeros(n);
        assert_eq!(dixmier_surrogate(&zero, &one, n, DixmierKernel::Absolute, &cfg).unwrap().value, c(0.0));
    }

    #[test]
    fn json_shape() {
        let r = residue_of_diagonal(&vec![c(1.0); 129], &HeatFitConfig::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["value_re"].as_f64().unwrap() > 1.99);
        assert_eq!(v["coefficients"].as_array().unwrap().len(), 4);
        assert_eq!(v["coefficients"][0]["power"], -0.5);
    }
}
