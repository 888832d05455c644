//! Fourier-mode truncations of operators on `L²(ℝ/ℤ)`.
//!
//! A [`TruncatedOperator`] of band `N` is the dense matrix of an operator
//! compressed to the modes `e_k = e^{2πikx}`, `|k| ≤ N`, with row/column
//! index `k + N`. Entries are exact matrix elements `⟨e_k, T e_m⟩`; only
//! products of truncations lose accuracy, and only near the band edge.
//! [`diag_of_product`] evaluates diagonals of products through a wider inner
//! band so that the result is exact on an interior window.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_kernel::{grid_size, mode_index, CircleDiffeo, PeriodicFunction, DEFAULT_ALIAS_BOUND};
use crate::crossed_product::{CrossedProductElement, GroupWord};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Threshold on `e^{-t λ_max²}` below which the heat semigroup counts as
/// untruncated.
pub const HEAT_TRUNCATION_BOUND: f64 = 1e-16;

/// Dense matrix on the Fourier modes `|k| ≤ band`.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    band: usize,
    matrix: DMatrix<Complex64>,
    label: String,
    leakage: f64,
}

/// JSON header written next to a binary matrix dump.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DumpHeader {
    #[serde(rename = "N")]
    pub n: usize,
    pub label: String,
}

impl TruncatedOperator {
    pub fn new(band: usize, matrix: DMatrix<Complex64>, label: impl Into<String>) -> Result<Self> {
        let dim = 2 * band + 1;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, band {band} needs {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(TruncatedOperator {
            band,
            matrix,
            label: label.into(),
            leakage: 0.0,
        })
    }

    pub fn identity(band: usize) -> Self {
        let dim = 2 * band + 1;
        Self::from_parts(band, DMatrix::identity(dim, dim), "I")
    }

    pub fn zeros(band: usize) -> Self {
        let dim = 2 * band + 1;
        Self::from_parts(band, DMatrix::zeros(dim, dim), "0")
    }

    /// Diagonal operator `e_k ↦ f(k) e_k`.
    pub fn diagonal_from<F>(band: usize, label: &str, f: F) -> Self
    where
        F: Fn(i64) -> Complex64,
    {
        let n = band as i64;
        let d: Vec<Complex64> = (-n..=n).map(f).collect();
        Self::from_parts(band, DMatrix::from_diagonal(&d.into()), label)
    }

    fn from_parts(band: usize, matrix: DMatrix<Complex64>, label: impl Into<String>) -> Self {
        TruncatedOperator {
            band,
            matrix,
            label: label.into(),
            leakage: 0.0,
        }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn dim(&self) -> usize {
        2 * self.band + 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest energy fraction lost above the band by columns `|j| ≤ band/2`
    /// when the operator was assembled from functions (0 otherwise).
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    #[inline]
    fn idx(&self, k: i64) -> usize {
        (k + self.band as i64) as usize
    }

    /// `⟨e_k, T e_m⟩`.
    pub fn entry(&self, k: i64, m: i64) -> Complex64 {
        self.matrix[(self.idx(k), self.idx(m))]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|c| (0..d).all(|r| r == c || self.matrix[(r, c)] == ZERO))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.band, self.matrix.adjoint(), format!("({})*", self.label))
    }

    fn check_band(&self, other: &Self) -> Result<()> {
        if self.band != other.band {
            return Err(Error::InvalidArgument(format!(
                "band mismatch: {} vs {}",
                self.band, other.band
            )));
        }
        Ok(())
    }

    /// Product of the truncations. Diagonal factors are applied as row or
    /// column scalings, so products with `∂̸`, `|∂̸|` or the heat semigroup
    /// are exact.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_band(other)?;
        let label = format!("{}·{}", self.label, other.label);
        let matrix = if self.is_diagonal() {
            let mut m = other.matrix.clone();
            for (r, mut row) in m.row_iter_mut().enumerate() {
                row *= self.matrix[(r, r)];
            }
            m
        } else if other.is_diagonal() {
            let mut m = self.matrix.clone();
            for (c, mut col) in m.column_iter_mut().enumerate() {
                col *= other.matrix[(c, c)];
            }
            m
        } else {
            &self.matrix * &other.matrix
        };
        Ok(Self::from_parts(self.band, matrix, label))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_band(other)?;
        Ok(Self::from_parts(
            self.band,
            &self.matrix + &other.matrix,
            format!("{} + {}", self.label, other.label),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_band(other)?;
        Ok(Self::from_parts(
            self.band,
            &self.matrix - &other.matrix,
            format!("{} - {}", self.label, other.label),
        ))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_parts(self.band, &self.matrix * s, self.label.clone())
    }

    /// Compression to the interior modes `|k| ≤ band`.
    pub fn restrict(&self, band: usize) -> Self {
        assert!(band <= self.band, "cannot restrict to a wider band");
        let off = self.band - band;
        let dim = 2 * band + 1;
        let m = self.matrix.view((off, off), (dim, dim)).into_owned();
        Self::from_parts(band, m, format!("P{band}({})", self.label))
    }

    /// Re-embeds in a wider band by zero padding.
    pub fn embed(&self, band: usize) -> Self {
        assert!(band >= self.band, "cannot embed in a narrower band");
        let off = band - self.band;
        let dim = 2 * band + 1;
        let mut m = DMatrix::zeros(dim, dim);
        m.view_mut((off, off), (self.dim(), self.dim())).copy_from(&self.matrix);
        Self::from_parts(band, m, self.label.clone())
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Largest singular value.
    pub fn opnorm(&self) -> f64 {
        if self.is_diagonal() {
            return self.matrix.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.band, other.band);
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Writes the matrix row-major as little-endian `(re, im)` pairs to
    /// `path` and the header `{N, label}` to `path` with `.json` appended.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let header = DumpHeader {
            n: self.band,
            label: self.label.clone(),
        };
        write_matrix_dump(path, &self.matrix, &header)
    }

    pub fn read_dump(path: &Path) -> Result<Self> {
        let header = read_dump_header(path)?;
        let d = 2 * header.n + 1;
        let m = read_matrix_dump(path, d)?;
        Ok(Self::from_parts(header.n, m, header.label))
    }
}

/// Writes a square matrix as row-major little-endian `(re, im)` pairs to
/// `path` and the header as JSON to `path.json`.
pub fn write_matrix_dump(path: &Path, matrix: &DMatrix<Complex64>, header: &DumpHeader) -> Result<()> {
    let mut bytes = Vec::with_capacity(matrix.len() * 16);
    for r in 0..matrix.nrows() {
        for c in 0..matrix.ncols() {
            let z = matrix[(r, c)];
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&bytes)?;
    fs::write(header_path(path), serde_json::to_string(header)?)?;
    Ok(())
}

pub fn read_dump_header(path: &Path) -> Result<DumpHeader> {
    Ok(serde_json::from_str(&fs::read_to_string(header_path(path))?)?)
}

/// Reads a `d × d` matrix written by [`write_matrix_dump`].
pub fn read_matrix_dump(path: &Path, d: usize) -> Result<DMatrix<Complex64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != d * d * 16 {
        return Err(Error::Io(format!(
            "dump has {} bytes, expected {}",
            bytes.len(),
            d * d * 16
        )));
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    Ok(DMatrix::from_fn(d, d, |r, c| {
        let o = 16 * (r * d + c);
        Complex64::new(f(o), f(o + 8))
    }))
}

fn header_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// `∂̸ = (1/i) d/dx`: `diag(2πk)`.
pub fn dirac(band: usize) -> TruncatedOperator {
    TruncatedOperator::diagonal_from(band, "D", |k| Complex64::new(2.0 * PI * k as f64, 0.0))
}

/// `|∂̸|` with the zero-mode eigenvalue replaced by `patch`.
pub fn abs_dirac_patched(band: usize, patch: f64) -> TruncatedOperator {
    TruncatedOperator::diagonal_from(band, "|D|", |k| {
        Complex64::new(if k == 0 { patch } else { 2.0 * PI * k.abs() as f64 }, 0.0)
    })
}

/// `|∂̸|` with the zero mode patched to 1.
pub fn abs_dirac(band: usize) -> TruncatedOperator {
    abs_dirac_patched(band, 1.0)
}

/// `|∂̸|^{-s}` of the patched operator.
pub fn abs_dirac_power(band: usize, s: f64, patch: f64) -> TruncatedOperator {
    TruncatedOperator::diagonal_from(band, "|D|^-s", |k| {
        let lam = if k == 0 { patch } else { 2.0 * PI * k.abs() as f64 };
        Complex64::new(lam.powf(-s), 0.0)
    })
}

/// Phase `F = sign(∂̸)` with `F e_0 = e_0`, so that `∂̸_patched = F|∂̸|_patched`.
pub fn phase(band: usize) -> TruncatedOperator {
    TruncatedOperator::diagonal_from(band, "F", |k| if k < 0 { -ONE } else { ONE })
}

/// Inverse of the patched Dirac operator `F|∂̸|` (zero mode sent to `1/patch`).
pub fn inv_dirac(band: usize, patch: f64) -> TruncatedOperator {
    TruncatedOperator::diagonal_from(band, "D^-1", |k| {
        Complex64::new(if k == 0 { 1.0 / patch } else { 1.0 / (2.0 * PI * k as f64) }, 0.0)
    })
}

/// Heat semigroup `e^{-t∂̸²}`; the zero mode keeps its true eigenvalue 0.
pub fn heat(band: usize, t: f64) -> Result<TruncatedOperator> {
    check_heat(band, t)?;
    Ok(TruncatedOperator::diagonal_from(band, "exp(-tD^2)", |k| {
        Complex64::new((-t * (2.0 * PI * k as f64).powi(2)).exp(), 0.0)
    }))
}

pub(crate) fn check_heat(band: usize, t: f64) -> Result<()> {
    let weight = (-t * (2.0 * PI * band as f64).powi(2)).exp();
    // Tiny slack so that the exact threshold time itself is accepted.
    if !(t > 0.0) || weight > HEAT_TRUNCATION_BOUND * (1.0 + 1e-9) {
        return Err(Error::Truncation { t, weight });
    }
    Ok(())
}

/// Assembly options for operators built from functions on the circle.
#[derive(Clone, Copy, Debug)]
pub struct RepOptions {
    /// Bound on the energy fraction near the Nyquist frequency of the
    /// sampling grid.
    pub alias_bound: f64,
}

impl Default for RepOptions {
    fn default() -> Self {
        RepOptions {
            alias_bound: DEFAULT_ALIAS_BOUND,
        }
    }
}

/// One term `ξ ↦ w · (ξ ∘ χ)` with `χ(x) = x + p(x)`, all on a grid.
struct GridTerm {
    weight: Vec<Complex64>,
    displacement: Vec<f64>,
}

/// Matrix of `ξ ↦ Σ_terms w · ξ∘χ` on modes `|k| ≤ band`.
///
/// Column `j` is `Σ w·e^{2πijp} e^{2πijx}`; the factor `e^{2πijx}` is a shift
/// of the spectrum, so each column costs one FFT.
fn assemble(band: usize, m: usize, terms: &[GridTerm], opts: RepOptions, label: String) -> Result<TruncatedOperator> {
    let dim = 2 * band + 1;
    let n = band as i64;
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut buf = vec![ZERO; m];
    let mut worst_alias = 0.0f64;
    let mut worst_leak = 0.0f64;
    let guard = (m / 8) as i64;
    let half = (m / 2) as i64;
    for j in -n..=n {
        buf.iter_mut().for_each(|v| *v = ZERO);
        for term in terms {
            for (v, (w, p)) in buf.iter_mut().zip(term.weight.iter().zip(&term.displacement)) {
                *v += w * Complex64::from_polar(1.0, 2.0 * PI * j as f64 * p);
            }
        }
        fft.process(&mut buf);
        let scale = 1.0 / m as f64;
        let mut total = 0.0;
        let mut kept = 0.0;
        let mut near_nyquist = 0.0;
        for q in -half..half {
            let e = buf[mode_index(q, m)].norm_sqr();
            total += e;
            if q.abs() >= half - guard {
                near_nyquist += e;
            }
            if (q + j).abs() <= n {
                kept += e;
            }
        }
        for k in -n..=n {
            matrix[((k + n) as usize, (j + n) as usize)] = buf[mode_index(k - j, m)] * scale;
        }
        if total > 0.0 {
            worst_alias = worst_alias.max(near_nyquist / total);
            if 2 * j.abs() <= n {
                worst_leak = worst_leak.max(((total - kept) / total).max(0.0));
            }
        }
    }
    if worst_alias > opts.alias_bound {
        return Err(Error::Aliasing {
            tail: worst_alias,
            bound: opts.alias_bound,
            context: label,
        });
    }
    let mut op = TruncatedOperator::from_parts(band, matrix, label);
    op.leakage = worst_leak;
    Ok(op)
}

/// Grid size for assembling band `band` operators whose words move modes by
/// at most a factor `spread`.
fn assembly_grid(band: usize, spread: f64, extra: usize) -> usize {
    let content = ((band as f64) * spread).ceil() as usize + extra;
    grid_size(band).max((2 * (2 * band + content) + 2).next_power_of_two())
}

/// `π(Σ a_φ U*_φ) ξ = Σ a_φ (φ')^{1/2} ξ∘φ`, compressed to `|k| ≤ band`.
pub fn represent(a: &CrossedProductElement, band: usize) -> Result<TruncatedOperator> {
    represent_with(a, band, RepOptions::default())
}

pub fn represent_with(a: &CrossedProductElement, band: usize, opts: RepOptions) -> Result<TruncatedOperator> {
    let mut spread: f64 = 0.0;
    let mut extra = 0usize;
    for (w, f) in a.terms() {
        let d = w.diffeo();
        spread = spread.max((d.max_jacobian() - 1.0).abs()).max((1.0 - d.min_jacobian()).abs());
        extra = extra.max(f.band() + 2 * d.band() + 16);
    }
    let m = assembly_grid(band, spread, extra);
    let mut terms = Vec::new();
    for (w, f) in a.terms() {
        let d = w.diffeo();
        let jac = d.jacobian_samples(m);
        let weight: Vec<Complex64> = f
            .samples(m)
            .into_iter()
            .zip(&jac)
            .map(|(g, &j)| g * j.sqrt())
            .collect();
        let displacement = displacement_samples(d, m);
        terms.push(GridTerm { weight, displacement });
    }
    assemble(band, m, &terms, opts, "pi(a)".to_string())
}

fn displacement_samples(d: &crate::circle_kernel::CircleDiffeo, m: usize) -> Vec<f64> {
    d.real_samples(m)
        .into_iter()
        .enumerate()
        .map(|(j, y)| y - crate::circle_kernel::grid_point(j, m))
        .collect()
}

/// `V_φ ξ = ξ ∘ φ^{-1}` (no density factor).
pub fn translation(word: &GroupWord, band: usize) -> Result<TruncatedOperator> {
    translation_inverse(&word.inverse()?, band).map(|t| t.with_label(format!("V[{word}]")))
}

/// `V_φ^{-1} ξ = ξ ∘ φ`.
pub fn translation_inverse(word: &GroupWord, band: usize) -> Result<TruncatedOperator> {
    if word.is_identity() {
        return Ok(TruncatedOperator::identity(band).with_label("V[e]"));
    }
    let d = word.diffeo();
    let spread = (d.max_jacobian() - 1.0).abs().max((1.0 - d.min_jacobian()).abs());
    let m = assembly_grid(band, spread, 2 * d.band() + 16);
    let terms = [GridTerm {
        weight: vec![ONE; m],
        displacement: displacement_samples(d, m),
    }];
    assemble(band, m, &terms, RepOptions::default(), format!("V[{word}]^-1"))
}

/// `d·π(a) − π(σ(a))·d`; with `d = ∂̸` this is the twisted commutator, with
/// `d = |∂̸|` its Lipschitz-regularity variant.
pub fn twisted_commutator(d: &TruncatedOperator, a: &CrossedProductElement) -> Result<TruncatedOperator> {
    let pa = represent(a, d.band())?;
    let psa = represent(&a.sigma()?, d.band())?;
    Ok(d.mul(&pa)?.sub(&psa.mul(d)?)?.with_label("d_sigma(a)"))
}

/// Operator norm of `d·π(a) − π(σ(a))·d` at the band of `d`, compressed to
/// the interior modes `|k| ≤ band/2`.
pub fn interior_commutator_norm(d: &TruncatedOperator, a: &CrossedProductElement) -> Result<f64> {
    Ok(twisted_commutator(d, a)?.restrict(d.band() / 2).opnorm())
}

/// `sup_x |(1/i)(g φ'^{1/2})' φ'^{-1/2}| = sup_x |g' + g φ''/(2φ')|` on an
/// `m`-point grid, refined by a parabola through the largest sample.
pub fn commutator_symbol_sup(g: &PeriodicFunction, phi: &CircleDiffeo, m: usize) -> f64 {
    let dg = g.derivative();
    let d1 = phi.derivative();
    let d2 = d1.derivative();
    let h = |x: f64| (dg.eval(x) + g.eval(x) * d2.eval(x) / (2.0 * d1.eval(x).re)).norm();
    let step = 1.0 / m as f64;
    let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
    for j in 0..m {
        let x = j as f64 * step;
        let v = h(x);
        if v > best {
            best = v;
            at = x;
        }
    }
    let (l, c, r) = (h(at - step), best, h(at + step));
    let curv = l - 2.0 * c + r;
    if curv < 0.0 {
        let off = 0.5 * (l - r) / curv;
        if off.abs() <= 1.0 {
            return h(at + off * step).max(best);
        }
    }
    best
}

/// Diagonal entries `(AB)_{kk}`, `|k| ≤ n`, using the full inner band of the
/// factors. Exact whenever `A_{km}` and `B_{mk}` vanish for `|m|` beyond
/// that band, which is what a wide inner band buys.
pub fn diag_of_product(a: &TruncatedOperator, b: &TruncatedOperator, n: usize) -> Result<Vec<Complex64>> {
    a.check_band(b)?;
    if n > a.band {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds band {}", a.band)));
    }
    let off = a.band - n;
    Ok((0..2 * n + 1)
        .map(|r| {
            let i = r + off;
            a.matrix.row(i).iter().zip(b.matrix.column(i).iter()).map(|(x, y)| x * y).sum()
        })
        .collect())
}

/// Least-squares slope of `log y` against `log x`.
pub(crate) fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in points {
        let dx = x.ln() - mx;
        num += dx * (y.ln() - my);
        den += dx * dx;
    }
    num / den
}

/// Decay exponent `α` in `s_j ~ j^{-α}`, fitted over `j ∈ [N/8, N/2]` where
/// `s_1 ≥ s_2 ≥ …` are the singular values.
pub fn summability_exponent(t: &TruncatedOperator) -> Result<f64> {
    let s = t.singular_values();
    let scale = s.first().copied().unwrap_or(0.0);
    let nonzero = s.iter().filter(|&&v| v > 1e-14 * scale).count();
    if nonzero < 8 || scale == 0.0 {
        return Err(Error::DegenerateSpectrum { nonzero });
    }
    let n = t.band();
    let lo = (n / 8).max(1);
    let hi = (n / 2).max(lo + 7).min(nonzero);
    if hi < lo + 7 {
        return Err(Error::DegenerateSpectrum { nonzero });
    }
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|j| (j as f64, s[j - 1])).collect();
    Ok(-loglog_slope(&pts))
}

/// Growth exponent `β` in `|d_k| ~ |k|^β` of a diagonal, fitted over
/// `|k| ∈ [n/8, n/2]`.
pub fn diagonal_growth_exponent(diag: &[Complex64]) -> f64 {
    let n = (diag.len() - 1) / 2;
    let lo = (n / 8).max(1);
    let hi = n / 2;
    let mut pts = Vec::new();
    for k in lo..=hi {
        let v = 0.5 * (diag[n + k].norm() + diag[n - k].norm());
        if v > 0.0 {
            pts.push((k as f64, v));
        }
    }
    loglog_slope(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_kernel::{CircleDiffeo, PeriodicFunction};
    use crate::crossed_product::{Group, GroupConfig};
    use std::sync::Arc;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn group() -> Arc<Group> {
        Group::new(
            vec![
                ("phi".into(), CircleDiffeo::sine(0.3).unwrap()),
                ("rot".into(), CircleDiffeo::rotation(0.2)),
            ],
            GroupConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn dirac_small() {
        let d = dirac(1);
        assert_eq!(d.diagonal(), vec![c(-2.0 * PI), c(0.0), c(2.0 * PI)]);
        assert_eq!(d.max_abs_diff(&d.adjoint()), 0.0);
        assert_eq!(abs_dirac(1).diagonal(), vec![c(2.0 * PI), c(1.0), c(2.0 * PI)]);
        let f = phase(3);
        assert_eq!(f.mul(&abs_dirac(3)).unwrap().max_abs_diff(&dirac(3).add(&TruncatedOperator::diagonal_from(3, "", |k| if k == 0 { ONE } else { ZERO })).unwrap()), 0.0);
    }

    #[test]
    fn represent_function_is_toeplitz() {
        let g = group();
        let f = PeriodicFunction::from_modes(&[(0, c(0.5)), (1, Complex64::new(0.25, 0.1)), (-2, c(-0.3))]);
        let op = represent(&CrossedProductElement::function(&g, f.clone()), 8).unwrap();
        for k in -8i64..=8 {
            for m in -8i64..=8 {
                assert!((op.entry(k, m) - f.coeff(k - m)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn represent_rotation_is_diagonal_character() {
        let g = group();
        let rot = g.generator("rot").unwrap();
        let op = represent(&CrossedProductElement::unitary(rot), 16).unwrap();
        for k in -16i64..=16 {
            let want = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * 0.2);
            assert!((op.entry(k, k) - want).norm() < 1e-13);
        }
        let off: f64 = (0..op.dim())
            .flat_map(|r| (0..op.dim()).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| op.matrix()[(r, c)].norm())
            .fold(0.0, f64::max);
        assert!(off < 1e-13);
    }

    #[test]
    fn represent_entries_match_quadrature_oracle() {
        let g = group();
        let phi = g.generator("phi").unwrap();
        let f = PeriodicFunction::cos_mode(1);
        let op = represent(&CrossedProductElement::monomial(f, phi.clone()), 12).unwrap();
        // Midpoint rule on a fine grid of f φ'^{1/2} e^{2πi(mφ(x) − kx)}.
        let d = phi.diffeo();
        let q = 4096;
        for &(k, m) in &[(0i64, 0i64), (3, 2), (-5, -7), (11, 12)] {
            let mut acc = ZERO;
            for j in 0..q {
                let x = (j as f64 + 0.5) / q as f64;
                let w = (2.0 * PI * x).cos() * d.jacobian(x).sqrt();
                acc += w * Complex64::from_polar(1.0, 2.0 * PI * (m as f64 * d.eval(x) - k as f64 * x));
            }
            acc /= q as f64;
            assert!((op.entry(k, m) - acc).norm() < 1e-12, "{k},{m}");
        }
    }

    #[test]
    fn pi_u_is_unitary_on_interior() {
        let g = group();
        let u = CrossedProductElement::unitary(g.generator("phi").unwrap());
        let p = represent(&u, 256).unwrap();
        let defect = p.adjoint().mul(&p).unwrap().sub(&TruncatedOperator::identity(256)).unwrap().restrict(128);
        assert!(defect.max_abs() < 1e-12);
        assert!(defect.opnorm() < 1e-8);
    }

    #[test]
    fn star_representation() {
        let g = group();
        let a = CrossedProductElement::monomial(PeriodicFunction::sin_mode(1), g.generator("phi").unwrap());
        let lhs = represent(&a.involution().unwrap(), 64).unwrap();
        let rhs = represent(&a, 64).unwrap().adjoint();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn translations() {
        let g = group();
        let id = g.identity();
        assert_eq!(translation(&id, 4).unwrap().max_abs_diff(&TruncatedOperator::identity(4)), 0.0);
        let v = translation(&g.generator("rot").unwrap(), 8).unwrap();
        for k in -8i64..=8 {
            assert!((v.entry(k, k) - Complex64::from_polar(1.0, -2.0 * PI * k as f64 * 0.2)).norm() < 1e-13);
        }
        let phi = g.generator("phi").unwrap();
        let rot = g.generator("rot").unwrap();
        let n = 128;
        let vphi = translation(&phi, n).unwrap();
        let vrot = translation(&rot, n).unwrap();
        // V_φ V_ψ ξ = ξ ∘ ψ^{-1} ∘ φ^{-1} = V_{φ∘ψ}.
        let both = translation(&phi.then_after(&rot).unwrap(), n).unwrap();
        let diff = vphi.mul(&vrot).unwrap().sub(&both).unwrap().restrict(n / 2);
        assert!(diff.max_abs() < 1e-8);
    }

    #[test]
    fn twisted_commutator_cases() {
        let g = group();
        let d = dirac(32);
        let one = CrossedProductElement::one(&g);
        assert_eq!(twisted_commutator(&d, &one).unwrap().max_abs(), 0.0);

        let f = PeriodicFunction::sin_mode(2).add(&PeriodicFunction::cos_mode(1));
        let plain = CrossedProductElement::function(&g, f.clone());
        let lhs = twisted_commutator(&d, &plain).unwrap();
        let rhs = represent(
            &CrossedProductElement::function(&g, f.derivative().scale(Complex64::new(0.0, -1.0))),
            32,
        )
        .unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn heat_cases() {
        assert!(matches!(heat(64, 1e-9), Err(Error::Truncation { .. })));
        let n = 64;
        let t = 36.8 / (2.0 * PI * n as f64).powi(2) * 1.01;
        let h = heat(n, t).unwrap();
        let want: f64 = (-(n as i64)..=n as i64).map(|k| (-t * (2.0 * PI * k as f64).powi(2)).exp()).sum();
        assert!((h.trace().re - want).abs() < 1e-12 * want);
        let big = heat(4, 10.0).unwrap();
        assert!((big.entry(0, 0) - ONE).norm() == 0.0);
        assert!(big.entry(1, 1).norm() < 1e-100);
    }

    #[test]
    fn summability_cases() {
        let n = 256;
        let inv = abs_dirac_power(n, 1.0, 1.0);
        assert!((summability_exponent(&inv).unwrap() - 1.0).abs() < 0.05);
        assert!(summability_exponent(&TruncatedOperator::identity(n)).unwrap().abs() < 1e-12);
        let mut few = TruncatedOperator::zeros(n);
        few.matrix[(0, 0)] = ONE;
        assert!(matches!(summability_exponent(&few), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn diag_of_product_matches_full_product() {
        let g = group();
        let a = represent(&CrossedProductElement::unitary(g.generator("phi").unwrap()), 40).unwrap();
        let b = translation(&g.generator("phi").unwrap(), 40).unwrap();
        let full = a.mul(&b).unwrap().restrict(10).diagonal();
        let fast = diag_of_product(&a, &b, 10).unwrap();
        for (x, y) in full.iter().zip(&fast) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn dump_round_trip() {
        let g = group();
        let a = represent(&CrossedProductElement::unitary(g.generator("phi").unwrap()), 5).unwrap();
        let dir = std::env::temp_dir().join(format!("dump_rt_{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("op.bin");
        a.write_dump(&path).unwrap();
        let back = TruncatedOperator::read_dump(&path).unwrap();
        assert_eq!(back.max_abs_diff(&a), 0.0);
        assert_eq!(back.label(), a.label());
        let header: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("op.bin.json")).unwrap()).unwrap();
        assert_eq!(header["N"], 5);
        fs::remove_dir_all(&dir).unwrap();
    }
}
