//! Smooth functions and orientation-preserving diffeomorphisms of the circle ℝ/ℤ.
//!
//! Functions are stored as truncated Fourier series `Σ_{|k|≤N} c_k e^{2πikx}`.
//! Every operation that can create content above its output band (products,
//! compositions, pointwise maps) samples on a uniform grid, transforms, and
//! reports the energy fraction that fell outside the band. When that tail
//! exceeds the configured bound the operation fails with [`Error::Aliasing`]
//! instead of truncating silently.
//!
//! Diffeomorphisms are degree-one lifts `φ(x) = x + p(x)` with a periodic
//! displacement `p`, so rotations are constant displacements.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default input band limit.
pub const DEFAULT_BAND: usize = 32;

/// Default bound on the tail-energy ratio of a projected result.
pub const DEFAULT_ALIAS_BOUND: f64 = 1e-22;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Uniform grid size used for an output band limit `band`: the next power
/// of two that is at least `4(band + 1)`.
pub fn grid_size(band: usize) -> usize {
    (4 * (band + 1)).next_power_of_two()
}

/// Grid point `j` of a uniform grid with `m` points.
#[inline]
pub fn grid_point(j: usize, m: usize) -> f64 {
    j as f64 / m as f64
}

/// Index of Fourier mode `k` in a length-`m` DFT buffer.
#[inline]
pub(crate) fn mode_index(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// In-place forward DFT normalized so that the output holds Fourier
/// coefficients of the sampled function.
pub(crate) fn dft_forward(buf: &mut [Complex64]) {
    let m = buf.len();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(buf);
    let scale = 1.0 / m as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// In-place unnormalized inverse DFT (coefficients to samples).
pub(crate) fn dft_inverse(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
}

/// A band-limited result together with its measured aliasing tail.
#[derive(Clone, Debug)]
pub struct Projected {
    pub function: PeriodicFunction,
    /// Energy beyond the output band divided by total energy on the grid.
    pub tail: f64,
}

impl Projected {
    pub fn checked(self, bound: f64, context: &str) -> Result<PeriodicFunction> {
        if self.tail > bound {
            return Err(Error::Aliasing {
                tail: self.tail,
                bound,
                context: context.to_string(),
            });
        }
        Ok(self.function)
    }
}

/// Truncated Fourier representation of a smooth function on ℝ/ℤ.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFunction {
    band: usize,
    /// `coeffs[k + band]` is `c_k`.
    coeffs: Vec<Complex64>,
    /// `c_{-k} = conj(c_k)` is maintained exactly when set.
    real: bool,
}

impl PeriodicFunction {
    pub fn zero(band: usize) -> Self {
        PeriodicFunction {
            band,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * band + 1],
            real: true,
        }
    }

    pub fn constant(c: Complex64) -> Self {
        PeriodicFunction {
            band: 0,
            coeffs: vec![c],
            real: c.im == 0.0,
        }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// Dense coefficient vector for modes `-band..=band`.
    pub fn from_coeffs(band: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * band + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients for band {band}, got {}",
                2 * band + 1,
                coeffs.len()
            )));
        }
        let mut f = PeriodicFunction {
            band,
            coeffs,
            real: false,
        };
        f.real = f.symmetry_defect() == 0.0;
        Ok(f)
    }

    /// Sparse `(k, c_k)` list; the band is the largest `|k|` present.
    pub fn from_modes(modes: &[(i64, Complex64)]) -> Self {
        let band = modes.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut f = PeriodicFunction::zero(band);
        f.real = false;
        for &(k, c) in modes {
            f.coeffs[(k + band as i64) as usize] += c;
        }
        f.real = f.symmetry_defect() == 0.0;
        f
    }

    /// `e^{2πikx}`.
    pub fn exp_mode(k: i64) -> Self {
        Self::from_modes(&[(k, Complex64::new(1.0, 0.0))])
    }

    /// `cos(2πkx)`.
    pub fn cos_mode(k: i64) -> Self {
        let h = Complex64::new(0.5, 0.0);
        Self::from_modes(&[(k, h), (-k, h)]).into_real()
    }

    /// `sin(2πkx)`.
    pub fn sin_mode(k: i64) -> Self {
        let h = Complex64::new(0.0, 0.5);
        Self::from_modes(&[(k, -h), (-k, h)]).into_real()
    }

    /// Samples on the uniform grid projected to modes `|k| ≤ band`.
    pub fn from_samples(samples: &[Complex64], band: usize) -> Result<Projected> {
        let m = samples.len();
        if m < 2 * band + 1 {
            return Err(Error::InvalidArgument(format!(
                "grid of {m} points cannot resolve band {band}"
            )));
        }
        let mut buf = samples.to_vec();
        dft_forward(&mut buf);
        Ok(Self::project_spectrum(&buf, band))
    }

    /// Real samples; the result carries the real flag.
    pub fn from_real_samples(samples: &[f64], band: usize) -> Result<Projected> {
        let z: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut p = Self::from_samples(&z, band)?;
        p.function = p.function.into_real();
        Ok(p)
    }

    fn project_spectrum(spectrum: &[Complex64], band: usize) -> Projected {
        let m = spectrum.len();
        let mut coeffs = Vec::with_capacity(2 * band + 1);
        let mut kept = 0.0;
        for k in -(band as i64)..=(band as i64) {
            let c = spectrum[mode_index(k, m)];
            kept += c.norm_sqr();
            coeffs.push(c);
        }
        // Sum the discarded modes directly; `total - kept` would cancel.
        let half = (m / 2) as i64;
        let dropped: f64 = (-half..half)
            .filter(|k| k.unsigned_abs() as usize > band)
            .map(|k| spectrum[mode_index(k, m)].norm_sqr())
            .sum();
        let total = kept + dropped;
        let tail = if total > 0.0 { dropped / total } else { 0.0 };
        let mut function = PeriodicFunction {
            band,
            coeffs,
            real: false,
        };
        function.real = function.symmetry_defect() == 0.0;
        Projected { function, tail }
    }

    /// Enforces `c_{-k} = conj(c_k)` by symmetrizing and sets the real flag.
    pub fn into_real(mut self) -> Self {
        let n = self.band as i64;
        for k in 0..=n {
            let a = self.coeffs[(k + n) as usize];
            let b = self.coeffs[(n - k) as usize];
            let s = 0.5 * (a + b.conj());
            self.coeffs[(k + n) as usize] = s;
            self.coeffs[(n - k) as usize] = s.conj();
        }
        self.real = true;
        self
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `max_k |c_{-k} - conj(c_k)|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.band as i64;
        (0..=n)
            .map(|k| (self.coeffs[(k + n) as usize] - self.coeffs[(n - k) as usize].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c_k`, zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.band {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.band as i64) as usize]
        }
    }

    /// Nonzero modes as `(k, c_k)`.
    pub fn modes(&self) -> Vec<(i64, Complex64)> {
        let n = self.band as i64;
        (-n..=n)
            .map(|k| (k, self.coeff(k)))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect()
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.band as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -n..=n {
            let c = self.coeffs[(k + n) as usize];
            if c != Complex64::new(0.0, 0.0) {
                acc += c * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x);
            }
        }
        if self.real {
            Complex64::new(acc.re, 0.0)
        } else {
            acc
        }
    }

    /// Values on the uniform grid of `m ≥ 2·band + 1` points.
    pub fn samples(&self, m: usize) -> Vec<Complex64> {
        assert!(m > 2 * self.band, "grid too coarse for band");
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let n = self.band as i64;
        for k in -n..=n {
            buf[mode_index(k, m)] = self.coeffs[(k + n) as usize];
        }
        dft_inverse(&mut buf);
        if self.real {
            for v in buf.iter_mut() {
                v.im = 0.0;
            }
        }
        buf
    }

    pub fn real_samples(&self, m: usize) -> Vec<f64> {
        self.samples(m).into_iter().map(|z| z.re).collect()
    }

    /// Re-embeds at a larger band (zero padding) or truncates.
    pub fn with_band(&self, band: usize) -> Self {
        let mut out = PeriodicFunction::zero(band);
        let n = band as i64;
        for k in -n..=n {
            out.coeffs[(k + n) as usize] = self.coeff(k);
        }
        out.real = self.real || out.symmetry_defect() == 0.0;
        out
    }

    /// Mean value `c_0`, the exact integral over ℝ/ℤ.
    pub fn quadrature(&self) -> Complex64 {
        self.coeff(0)
    }

    /// `d/dx`: coefficients `2πik c_k`.
    pub fn derivative(&self) -> Self {
        let n = self.band as i64;
        let coeffs = (-n..=n)
            .map(|k| self.coeffs[(k + n) as usize] * I * (2.0 * PI * k as f64))
            .collect();
        PeriodicFunction {
            band: self.band,
            coeffs,
            real: self.real,
        }
    }

    pub fn conj(&self) -> Self {
        let n = self.band as i64;
        let coeffs = (-n..=n).map(|k| self.coeff(-k).conj()).collect();
        PeriodicFunction {
            band: self.band,
            coeffs,
            real: self.real,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        PeriodicFunction {
            band: self.band,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            real: self.real && s.im == 0.0,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let band = self.band.max(other.band);
        let n = band as i64;
        let coeffs = (-n..=n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        PeriodicFunction {
            band,
            coeffs,
            real: self.real && other.real,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// `Σ |c_k|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest coefficient difference against another function.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let n = self.band.max(other.band) as i64;
        (-n..=n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    /// `max |f|` over a uniform grid of `m` points.
    pub fn sup_norm(&self, m: usize) -> f64 {
        let m = m.max(2 * self.band + 1);
        self.samples(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Pointwise product with an explicit output band.
    pub fn mul_projected(&self, other: &Self, band_out: usize) -> Projected {
        if self.band == 0 || other.band == 0 {
            let (c, f) = if self.band == 0 { (self, other) } else { (other, self) };
            let scaled = f.scale(c.coeffs[0]);
            let m = (2 * f.band.max(band_out) + 1).next_power_of_two();
            let mut spectrum = vec![Complex64::new(0.0, 0.0); m];
            for k in -(f.band as i64)..=(f.band as i64) {
                spectrum[mode_index(k, m)] = scaled.coeff(k);
            }
            let mut p = Self::project_spectrum(&spectrum, band_out);
            if scaled.real {
                p.function = p.function.into_real();
            }
            return p;
        }
        let m = grid_size(band_out).max((2 * (self.band + other.band) + 1).next_power_of_two());
        let a = self.samples(m);
        let b = other.samples(m);
        let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut p = Self::from_samples(&prod, band_out).expect("grid sized for band");
        if self.real && other.real {
            p.function = p.function.into_real();
        }
        p
    }

    pub fn mul(&self, other: &Self, band_out: usize, bound: f64) -> Result<Self> {
        self.mul_projected(other, band_out).checked(bound, "product")
    }

    /// Exact product (output band is the sum of the input bands).
    pub fn mul_exact(&self, other: &Self) -> Self {
        self.mul_projected(other, self.band + other.band).function
    }

    /// Applies `op` to grid samples and projects onto `band_out`.
    pub fn map_projected<F>(&self, band_out: usize, op: F) -> Projected
    where
        F: Fn(Complex64) -> Complex64,
    {
        let m = grid_size(band_out.max(self.band));
        let vals: Vec<Complex64> = self.samples(m).into_iter().map(op).collect();
        Self::from_samples(&vals, band_out).expect("grid sized for band")
    }

    /// `f ∘ φ` with Fourier coefficients taken from a uniform grid of size
    /// `grid_size(band_out)`.
    pub fn compose_projected(&self, phi: &CircleDiffeo, band_out: usize) -> Projected {
        let m = grid_size(band_out.max(self.band).max(phi.band()));
        let n = self.band as i64;
        let vals: Vec<Complex64> = phi
            .real_samples(m)
            .iter()
            .map(|&y| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in -n..=n {
                    let c = self.coeffs[(k + n) as usize];
                    if c != Complex64::new(0.0, 0.0) {
                        acc += c * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * y);
                    }
                }
                acc
            })
            .collect();
        let mut p = Self::from_samples(&vals, band_out).expect("grid sized for band");
        if self.real {
            p.function = p.function.into_real();
        }
        p
    }

    pub fn compose(&self, phi: &CircleDiffeo, band_out: usize, bound: f64) -> Result<Self> {
        if phi.is_identity() || self.band == 0 {
            return Ok(self.clone());
        }
        self.compose_projected(phi, band_out).checked(bound, "composition")
    }
}

/// Literal for a periodic function: `(k, Re c_k, Im c_k)` triples.
pub type CoeffLiteral = Vec<(i64, f64, f64)>;

pub fn function_from_literal(lit: &[(i64, f64, f64)]) -> PeriodicFunction {
    let modes: Vec<(i64, Complex64)> =
        lit.iter().map(|&(k, re, im)| (k, Complex64::new(re, im))).collect();
    PeriodicFunction::from_modes(&modes)
}

pub fn function_to_literal(f: &PeriodicFunction) -> CoeffLiteral {
    f.modes().into_iter().map(|(k, c)| (k, c.re, c.im)).collect()
}

/// Fixed point of a diffeomorphism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint {
    pub x: f64,
    pub derivative: f64,
    /// `φ'(x*) ≠ 1`.
    pub nondegenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FixedPoints {
    Isolated(Vec<FixedPoint>),
    /// The identity fixes every point.
    Everywhere,
}

/// Tuning for numerical inversion.
#[derive(Clone, Copy, Debug)]
pub struct InversionOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub band: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            tol: 1e-12,
            max_iter: 60,
            band: 64,
        }
    }
}

/// Orientation-preserving diffeomorphism `φ(x) = x + p(x)` of ℝ/ℤ.
#[derive(Clone, Debug)]
pub struct CircleDiffeo {
    displacement: PeriodicFunction,
    derivative: PeriodicFunction,
    identity: bool,
}

impl PartialEq for CircleDiffeo {
    fn eq(&self, other: &Self) -> bool {
        self.displacement == other.displacement
    }
}

impl CircleDiffeo {
    pub fn identity() -> Self {
        CircleDiffeo {
            displacement: PeriodicFunction::zero(0),
            derivative: PeriodicFunction::one(),
            identity: true,
        }
    }

    /// `x ↦ x + α`.
    pub fn rotation(alpha: f64) -> Self {
        Self::from_displacement(PeriodicFunction::constant(Complex64::new(alpha, 0.0)))
            .expect("rotations are monotone")
    }

    /// `x ↦ x + (ε/2π) sin(2πx)`, fixed points 0 and 1/2 with
    /// derivatives `1 ± ε`.
    pub fn sine(epsilon: f64) -> Result<Self> {
        Self::from_displacement(PeriodicFunction::sin_mode(1).scale(Complex64::new(
            epsilon / (2.0 * PI),
            0.0,
        )))
    }

    pub fn from_displacement(p: PeriodicFunction) -> Result<Self> {
        let p = p.into_real();
        let derivative = p.derivative().add(&PeriodicFunction::one());
        let m = (8 * grid_size(p.band())).max(1024);
        let min = derivative.real_samples(m).into_iter().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::NonMonotone { min_derivative: min });
        }
        let identity = p.is_zero();
        Ok(CircleDiffeo {
            displacement: p,
            derivative,
            identity,
        })
    }

    pub fn from_literal(lit: &DiffeoLiteral) -> Result<Self> {
        match lit {
            DiffeoLiteral::Identity => Ok(Self::identity()),
            DiffeoLiteral::Sine { epsilon } => Self::sine(*epsilon),
            DiffeoLiteral::Rotation { alpha } => Ok(Self::rotation(*alpha)),
            DiffeoLiteral::Fourier { coeffs } => Self::from_displacement(function_from_literal(coeffs)),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn band(&self) -> usize {
        self.displacement.band()
    }

    pub fn displacement(&self) -> &PeriodicFunction {
        &self.displacement
    }

    /// `φ' = 1 + p'`.
    pub fn derivative(&self) -> &PeriodicFunction {
        &self.derivative
    }

    /// Lifted value `x + p(x)` (not reduced mod 1).
    pub fn eval(&self, x: f64) -> f64 {
        x + self.displacement.eval(x).re
    }

    pub fn jacobian(&self, x: f64) -> f64 {
        self.derivative.eval(x).re
    }

    /// Lifted values on the uniform grid of `m` points.
    pub fn real_samples(&self, m: usize) -> Vec<f64> {
        if self.displacement.band() == 0 {
            let c = self.displacement.coeff(0).re;
            return (0..m).map(|j| grid_point(j, m) + c).collect();
        }
        self.displacement
            .real_samples(m)
            .into_iter()
            .enumerate()
            .map(|(j, p)| grid_point(j, m) + p)
            .collect()
    }

    pub fn jacobian_samples(&self, m: usize) -> Vec<f64> {
        if self.derivative.band() == 0 {
            return vec![self.derivative.coeff(0).re; m];
        }
        self.derivative.real_samples(m)
    }

    pub fn min_jacobian(&self) -> f64 {
        let m = (8 * grid_size(self.band())).max(1024);
        self.jacobian_samples(m).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_jacobian(&self) -> f64 {
        let m = (8 * grid_size(self.band())).max(1024);
        self.jacobian_samples(m).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self ∘ inner`: displacement `p_inner + p_self ∘ inner`.
    pub fn compose(&self, inner: &CircleDiffeo, band_out: usize, bound: f64) -> Result<Self> {
        if self.identity {
            return Ok(inner.clone());
        }
        if inner.identity {
            return Ok(self.clone());
        }
        let outer = self.displacement.compose(inner, band_out, bound)?;
        Self::from_displacement(outer.add(&inner.displacement).with_band(band_out.max(inner.band())))
    }

    /// Inverse by bracketed bisection seeding and Newton iteration at each
    /// grid point, re-projected to a band-limited displacement.
    pub fn invert(&self, opts: InversionOptions) -> Result<Self> {
        if self.identity {
            return Ok(Self::identity());
        }
        if self.displacement.band() == 0 {
            return Ok(Self::rotation(-self.displacement.coeff(0).re));
        }
        if self.min_jacobian() <= 0.0 {
            return Err(Error::NonMonotone {
                min_derivative: self.min_jacobian(),
            });
        }
        let m = grid_size(opts.band);
        let p_samples = self.displacement.real_samples(8 * m);
        let pmin = p_samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let pmax = p_samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut q = Vec::with_capacity(m);
        for j in 0..m {
            let y = grid_point(j, m);
            let x = self.solve(y, pmin, pmax, opts)?;
            q.push(x - y);
        }
        let inv = PeriodicFunction::from_real_samples(&q, opts.band)?.function;
        let psi = Self::from_displacement(inv)?;
        let defect = self.inversion_defect(&psi, 4 * m);
        if defect > opts.tol {
            return Err(Error::Convergence(format!(
                "inverse composition defect {defect:.3e} exceeds {:.3e}",
                opts.tol
            )));
        }
        Ok(psi)
    }

    fn solve(&self, y: f64, pmin: f64, pmax: f64, opts: InversionOptions) -> Result<f64> {
        // x + p(x) is increasing, so the root lies in [y - pmax, y - pmin].
        let slack = 1e-9;
        let mut lo = y - pmax - slack;
        let mut hi = y - pmin + slack;
        for _ in 0..12 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..opts.max_iter {
            let r = self.eval(x) - y;
            if r.abs() < 1e-15 {
                return Ok(x);
            }
            let step = r / self.jacobian(x);
            x -= step;
            if step.abs() < 1e-16 {
                return Ok(x);
            }
        }
        let r = (self.eval(x) - y).abs();
        if r < 1e-14 {
            Ok(x)
        } else {
            Err(Error::Convergence(format!(
                "Newton inversion stalled at y = {y}: residual {r:.3e}"
            )))
        }
    }

    /// `max |φ(ψ(y)) - y|` over a grid offset from the fitting grid.
    pub fn inversion_defect(&self, psi: &CircleDiffeo, m: usize) -> f64 {
        (0..m)
            .map(|j| {
                let y = (j as f64 + 0.37) / m as f64;
                (self.eval(psi.eval(y)) - y).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Fixed points mod 1: zeros of `p(x) - n` for each integer `n` in the
    /// range of `p`.
    pub fn fixed_points(&self) -> FixedPoints {
        if self.identity {
            return FixedPoints::Everywhere;
        }
        let m = (16 * grid_size(self.band())).max(2048);
        let p = self.displacement.real_samples(m);
        let pmin = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let pmax = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out = Vec::new();
        let mut n = pmin.ceil();
        while n <= pmax {
            let g = |x: f64| self.displacement.eval(x).re - n;
            for j in 0..m {
                let a = grid_point(j, m);
                let b = grid_point(j + 1, m);
                let (ga, gb) = (g(a), g(b));
                if ga == 0.0 || ga * gb < 0.0 {
                    let x = refine_root(&g, a, b);
                    let d = self.jacobian(x);
                    out.push(FixedPoint {
                        x: x.rem_euclid(1.0),
                        derivative: d,
                        nondegenerate: (d - 1.0).abs() > 1e-9,
                    });
                }
            }
            n += 1.0;
        }
        out.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        out.dedup_by(|a, b| (a.x - b.x).abs() < 1e-10);
        FixedPoints::Isolated(out)
    }
}

fn refine_root<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    if ga == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let gm = g(mid);
        if gm == 0.0 || (b - a) < 1e-16 {
            return mid;
        }
        if ga * gm < 0.0 {
            b = mid;
        } else {
            a = mid;
            ga = gm;
        }
    }
    0.5 * (a + b)
}

/// Config literal for a diffeomorphism.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DiffeoLiteral {
    Identity,
    Sine { epsilon: f64 },
    Rotation { alpha: f64 },
    /// Displacement coefficients `(k, Re c_k, Im c_k)`.
    Fourier { coeffs: CoeffLiteral },
}

/// Shared handle, used by group words.
pub type DiffeoRef = Arc<CircleDiffeo>;
