//! Finite-dimensional graded twisted triples.
//!
//! The Hilbert space is `H = H₊ ⊕ H₋` with `dim H₊ = dim H₋ = m`, the grading
//! is `γ = diag(I, −I)` and the Dirac operator is `D = [[0, D₋], [D₊, 0]]`
//! with `D₋ = D₊*`. Algebra elements are even, `a = diag(a₊, a₋)`, and the
//! twist is `σ = Ad(e^{2h})` for an even self-adjoint `h`. Every trace below is
//! an exact matrix trace.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cochain_calculus::{Cochain, MatrixAlgebra};
use crate::error::{Error, Result};
use crate::operator_rep::{read_dump_header, read_matrix_dump, write_matrix_dump, DumpHeader};

pub type CMat = DMatrix<Complex64>;

pub const DEFAULT_MAX_DEGREE: usize = 4;
/// Relative singular-value cutoff for numerical ranks.
pub const RANK_THRESHOLD: f64 = 1e-9;
const ADJOINT_TOL: f64 = 1e-12;
const GRADING_TOL: f64 = 1e-13;
const IDEMPOTENT_TOL: f64 = 1e-12;
const TWISTED_ADJOINT_TOL: f64 = 1e-11;

/// Parameters of the random triple generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripleConfig {
    /// Total dimension `2m`.
    pub dim: usize,
    /// Operator norm of the random `h`.
    pub h_scale: f64,
    /// Singular values of `D₊` are drawn from `[1, 1 + d_spread]`.
    pub d_spread: f64,
    /// Operator norm of random algebra samples.
    pub sample_scale: f64,
    pub max_degree: usize,
}

impl Default for TripleConfig {
    fn default() -> Self {
        TripleConfig {
            dim: 4,
            h_scale: 0.2,
            d_spread: 1.0,
            sample_scale: 0.5,
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }
}

impl TripleConfig {
    pub fn with_dim(dim: usize) -> Self {
        TripleConfig {
            dim,
            ..Self::default()
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, kept for functional calculus.
#[derive(Clone, Debug)]
struct Spectral {
    values: Vec<f64>,
    vectors: CMat,
}

impl Spectral {
    fn of(m: &CMat) -> Self {
        let eig = nalgebra::SymmetricEigen::new(m.clone());
        Spectral {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let diag = CMat::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(f(self.values[r]), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        &self.vectors * diag * self.vectors.adjoint()
    }
}

/// Which graded half a block formula refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Plus,
    Minus,
}

impl Half {
    fn other(self) -> Half {
        match self {
            Half::Plus => Half::Minus,
            Half::Minus => Half::Plus,
        }
    }
}

/// A graded twisted triple on `ℂ^{2m}`.
#[derive(Clone, Debug)]
pub struct MatrixTwistedTriple {
    half: usize,
    d: CMat,
    d_inv: CMat,
    h: CMat,
    d_spec: Spectral,
    h_spec: Spectral,
    max_degree: usize,
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn opnorm(m: &CMat) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Numerical rank with the cutoff `RANK_THRESHOLD · ‖m‖`.
pub fn numerical_rank(m: &CMat) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * top).count()
}

fn gamma_trace(p: &CMat, half: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 * half {
        if i < half {
            acc += p[(i, i)];
        } else {
            acc -= p[(i, i)];
        }
    }
    acc
}

fn random_complex(rng: &mut (impl Rng + ?Sized), r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// A random unitary from the QR factor of a random matrix.
pub fn random_unitary(rng: &mut (impl Rng + ?Sized), n: usize) -> CMat {
    random_complex(rng, n, n).qr().q()
}

fn block_diag(p: &CMat, m: &CMat) -> CMat {
    let k = p.nrows();
    let mut out = CMat::zeros(2 * k, 2 * k);
    out.view_mut((0, 0), (k, k)).copy_from(p);
    out.view_mut((k, k), (k, k)).copy_from(m);
    out
}

fn scaled_to_norm(m: CMat, target: f64) -> CMat {
    let n = opnorm(&m);
    if n == 0.0 {
        m
    } else {
        m * Complex64::new(target / n, 0.0)
    }
}

/// A random even element of operator norm `scale`.
pub fn random_even(rng: &mut (impl Rng + ?Sized), half: usize, scale: f64) -> CMat {
    let p = random_complex(rng, half, half);
    let m = random_complex(rng, half, half);
    scaled_to_norm(block_diag(&p, &m), scale)
}

/// A random even self-adjoint matrix of operator norm `scale`.
pub fn random_even_hermitian(rng: &mut (impl Rng + ?Sized), half: usize, scale: f64) -> CMat {
    let a = random_even(rng, half, 1.0);
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    scaled_to_norm(h, scale)
}

/// An even orthogonal projection with ranks `(r₊, r₋)` in a random basis.
pub fn random_projection(rng: &mut (impl Rng + ?Sized), half: usize, rank_plus: usize, rank_minus: usize) -> CMat {
    let p = rotated_projection(rng, half, rank_plus.min(half));
    let m = rotated_projection(rng, half, rank_minus.min(half));
    block_diag(&p, &m)
}

fn rotated_projection(rng: &mut (impl Rng + ?Sized), half: usize, rank: usize) -> CMat {
    let u = random_unitary(rng, half);
    let p = CMat::from_fn(half, half, |i, j| {
        if i == j && i < rank {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &u * p * u.adjoint()
}

impl MatrixTwistedTriple {
    /// Validates `D` and `h` and precomputes the functional calculus.
    pub fn new(d: CMat, h: CMat) -> Result<Self> {
        let dim = d.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || d.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "D must be square of even size, got {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::InvalidArgument("h and D differ in size".into()));
        }
        let half = dim / 2;
        let scale = max_abs(&d).max(1.0);
        let defect = max_abs(&(&d - d.adjoint()));
        if defect > ADJOINT_TOL * scale {
            return Err(Error::NotSelfAdjoint { defect });
        }
        let defect = max_abs(&(&h - h.adjoint()));
        if defect > ADJOINT_TOL * max_abs(&h).max(1.0) {
            return Err(Error::NotSelfAdjoint { defect });
        }
        let g = gamma(half);
        let anti = max_abs(&(&d * &g + &g * &d));
        if anti > GRADING_TOL * scale {
            return Err(Error::Grading(format!("D does not anticommute with γ: {anti:.3e}")));
        }
        if max_abs(&(&h * &g - &g * &h)) > GRADING_TOL * max_abs(&h).max(1.0) {
            return Err(Error::Grading("h is not even".into()));
        }
        let d_spec = Spectral::of(&d);
        let top = d_spec.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let smallest = d_spec.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        if !(smallest > 1e-12 * top) {
            return Err(Error::SingularD { smallest });
        }
        let d_inv = d_spec.apply(|l| 1.0 / l);
        let h_spec = Spectral::of(&h);
        Ok(MatrixTwistedTriple {
            half,
            d,
            d_inv,
            h,
            d_spec,
            h_spec,
            max_degree: DEFAULT_MAX_DEGREE,
        })
    }

    pub fn with_max_degree(mut self, max_degree: usize) -> Self {
        self.max_degree = max_degree;
        self
    }

    /// A triple with `σ = id` built from the block `D₊`.
    pub fn from_d_plus(d_plus: &CMat) -> Result<Self> {
        let m = d_plus.nrows();
        if d_plus.ncols() != m {
            return Err(Error::InvalidArgument("D₊ must be square".into()));
        }
        let mut d = CMat::zeros(2 * m, 2 * m);
        d.view_mut((m, 0), (m, m)).copy_from(d_plus);
        d.view_mut((0, m), (m, m)).copy_from(&d_plus.adjoint());
        Self::new(d, CMat::zeros(2 * m, 2 * m))
    }

    /// Random untwisted triple: `D₊ = U·diag(s)·V*` with `s ∈ [1, 1 + spread]`.
    pub fn random_untwisted(cfg: &TripleConfig, rng: &mut impl Rng) -> Result<Self> {
        if cfg.dim == 0 || !cfg.dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("dimension {} is not even", cfg.dim)));
        }
        let m = cfg.dim / 2;
        let u = random_unitary(rng, m);
        let v = random_unitary(rng, m);
        let s = CMat::from_fn(m, m, |i, j| {
            if i == j {
                Complex64::new(1.0 + cfg.d_spread * rng.random::<f64>(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self::from_d_plus(&(u * s * v.adjoint()))?.with_max_degree(cfg.max_degree))
    }

    /// Random twisted triple: a random untwisted one perturbed by a random `h`.
    pub fn random(cfg: &TripleConfig, rng: &mut impl Rng) -> Result<Self> {
        let base = Self::random_untwisted(cfg, rng)?;
        let h = random_even_hermitian(rng, cfg.dim / 2, cfg.h_scale);
        base.perturb(&h)
    }

    pub fn from_seed(cfg: &TripleConfig, seed: u64) -> Result<Self> {
        Self::random(cfg, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn dim(&self) -> usize {
        2 * self.half
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn d(&self) -> &CMat {
        &self.d
    }

    pub fn d_inv(&self) -> &CMat {
        &self.d_inv
    }

    pub fn h(&self) -> &CMat {
        &self.h
    }

    pub fn gamma(&self) -> CMat {
        gamma(self.half)
    }

    /// `D₊ : H₊ → H₋` (lower-left block) or `D₋ : H₋ → H₊` (upper-right).
    pub fn d_block(&self, which: Half) -> CMat {
        let m = self.half;
        match which {
            Half::Plus => self.d.view((m, 0), (m, m)).into_owned(),
            Half::Minus => self.d.view((0, m), (m, m)).into_owned(),
        }
    }

    /// `D₊⁻¹` is the upper-right block of `D⁻¹`, `D₋⁻¹` the lower-left one.
    pub fn d_block_inv(&self, which: Half) -> CMat {
        let m = self.half;
        match which {
            Half::Plus => self.d_inv.view((0, m), (m, m)).into_owned(),
            Half::Minus => self.d_inv.view((m, 0), (m, m)).into_owned(),
        }
    }

    /// The diagonal block `a₊` or `a₋` of an even element.
    pub fn block(&self, a: &CMat, which: Half) -> CMat {
        let m = self.half;
        match which {
            Half::Plus => a.view((0, 0), (m, m)).into_owned(),
            Half::Minus => a.view((m, m), (m, m)).into_owned(),
        }
    }

    pub fn is_untwisted(&self) -> bool {
        max_abs(&self.h) == 0.0
    }

    /// `e^{s h}`.
    pub fn exp_h(&self, s: f64) -> CMat {
        self.h_spec.apply(|l| (s * l).exp())
    }

    /// `σ^s(a) = e^{2sh} a e^{−2sh}`; `σ_{it} = σ^{−t}` along the imaginary axis.
    pub fn sigma_power(&self, s: f64, a: &CMat) -> CMat {
        self.exp_h(2.0 * s) * a * self.exp_h(-2.0 * s)
    }

    pub fn sigma(&self, a: &CMat) -> CMat {
        self.sigma_power(1.0, a)
    }

    pub fn sigma_inv(&self, a: &CMat) -> CMat {
        self.sigma_power(-1.0, a)
    }

    /// `‖σ(a*) − (σ⁻¹(a))*‖`.
    pub fn sigma_unitarity_defect(&self, a: &CMat) -> f64 {
        max_abs(&(self.sigma(&a.adjoint()) - self.sigma_inv(a).adjoint()))
    }

    /// Smallest singular value of `D`.
    pub fn smallest_singular_value(&self) -> f64 {
        self.d_spec.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }

    /// `‖Dγ + γD‖`.
    pub fn grading_defect(&self) -> f64 {
        let g = self.gamma();
        max_abs(&(&self.d * &g + &g * &self.d))
    }

    /// `D′ = e^h D e^h` with twist `Ad(e^{2h})`. Requires `σ = id` here.
    pub fn perturb(&self, h: &CMat) -> Result<Self> {
        if !self.is_untwisted() {
            return Err(Error::InvalidArgument("perturb expects a triple with trivial twist".into()));
        }
        if h.nrows() != self.dim() || h.ncols() != self.dim() {
            return Err(Error::InvalidArgument("h and D differ in size".into()));
        }
        let defect = max_abs(&(h - h.adjoint()));
        if defect > ADJOINT_TOL * max_abs(h).max(1.0) {
            return Err(Error::NotSelfAdjoint { defect });
        }
        let g = self.gamma();
        if max_abs(&(h * &g - &g * h)) > GRADING_TOL * max_abs(h).max(1.0) {
            return Err(Error::Grading("h is not even".into()));
        }
        let e = Spectral::of(h).apply(f64::exp);
        let d = &e * &self.d * &e;
        let d = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self::new(d, h.clone())?.with_max_degree(self.max_degree))
    }

    /// `‖d′_σ a − e^h [D, b] e^h‖` with `b = e^h a e^{−h}`, where `self` is the
    /// untwisted base and `perturbed = self.perturb(h)`.
    pub fn perturbation_defect(&self, perturbed: &Self, a: &CMat) -> f64 {
        let eh = perturbed.exp_h(1.0);
        let b = &eh * a * perturbed.exp_h(-1.0);
        let comm = &self.d * &b - &b * &self.d;
        max_abs(&(perturbed.twisted_commutator(a) - &eh * comm * &eh))
    }

    /// `d_σ(a) = D a − σ(a) D`.
    pub fn twisted_commutator(&self, a: &CMat) -> CMat {
        &self.d * a - self.sigma(a) * &self.d
    }

    /// `Σ a_i d_σ(b_i)`.
    pub fn gauge_potential(&self, pairs: &[(CMat, CMat)]) -> CMat {
        let mut acc = CMat::zeros(self.dim(), self.dim());
        for (a, b) in pairs {
            acc += a * self.twisted_commutator(b);
        }
        acc
    }

    /// `a·ω·b = σ(a) ω b`.
    pub fn bimodule_action(&self, a: &CMat, omega: &CMat, b: &CMat) -> CMat {
        self.sigma(a) * omega * b
    }

    fn check_degree(&self, count: usize) -> Result<usize> {
        if count == 0 {
            return Err(Error::InvalidArgument("empty argument tuple".into()));
        }
        let n = count - 1;
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("degree {n} is odd")));
        }
        if n > self.max_degree {
            return Err(Error::InvalidArgument(format!(
                "degree {n} exceeds the configured maximum {}",
                self.max_degree
            )));
        }
        Ok(n)
    }

    /// `D⁻¹ d_σ(a)`, an even matrix.
    pub fn quantized_differential(&self, a: &CMat) -> CMat {
        &self.d_inv * self.twisted_commutator(a)
    }

    /// `Tr(γ D⁻¹d_σa⁰ ⋯ D⁻¹d_σaⁿ)`.
    pub fn chern_phi(&self, args: &[CMat]) -> Result<Complex64> {
        self.check_degree(args.len())?;
        let mut p = CMat::identity(self.dim(), self.dim());
        for a in args {
            p *= self.quantized_differential(a);
        }
        Ok(gamma_trace(&p, self.half))
    }

    /// `D_±⁻¹(D_± a_± − σ(a)_∓ D_±)`, computed blockwise.
    pub fn half_differential(&self, a: &CMat, which: Half) -> CMat {
        let dp = self.d_block(which);
        let dpi = self.d_block_inv(which);
        let sa = self.block(&self.sigma(a), which.other());
        &dpi * (&dp * self.block(a, which) - sa * &dp)
    }

    /// `(Φ⁺(a⁰,…,aⁿ), Φ⁻(a⁰,…,aⁿ))`.
    pub fn phi_pm(&self, args: &[CMat]) -> Result<(Complex64, Complex64)> {
        self.check_degree(args.len())?;
        let half_trace = |which| {
            let mut p = CMat::identity(self.half, self.half);
            for a in args {
                p *= self.half_differential(a, which);
            }
            p.trace()
        };
        Ok((half_trace(Half::Plus), half_trace(Half::Minus)))
    }

    /// `(Φ⁺)*(a⁰,…,aⁿ) = conj Φ⁺(aₙ*, …, a₀*)`.
    pub fn phi_plus_star(&self, args: &[CMat]) -> Result<Complex64> {
        let rev: Vec<CMat> = args.iter().rev().map(|a| a.adjoint()).collect();
        Ok(self.phi_pm(&rev)?.0.conj())
    }

    /// `|D|^s`.
    pub fn abs_d_power(&self, s: f64) -> CMat {
        self.d_spec.apply(|l| l.abs().powf(s))
    }

    /// `F = D|D|⁻¹`.
    pub fn phase(&self) -> CMat {
        self.d_spec.apply(f64::signum)
    }

    /// `F` together with `[F, a]` and the residual of
    /// `[F,a] = |D|⁻¹((Da − σ(a)D) − (|D|a − σ(a)|D|)F)` for each sample.
    pub fn untwist_phase(&self, samples: &[CMat]) -> UntwistedPhase {
        let f = self.phase();
        let abs = self.abs_d_power(1.0);
        let abs_inv = self.abs_d_power(-1.0);
        let table = samples
            .iter()
            .map(|a| {
                let comm = &f * a - a * &f;
                let sa = self.sigma(a);
                let rhs = &abs_inv * (self.twisted_commutator(a) - (&abs * a - &sa * &abs) * &f);
                PhaseCommutator {
                    residual: max_abs(&(&comm - rhs)),
                    commutator: comm,
                }
            })
            .collect();
        UntwistedPhase { f, table }
    }

    /// `Φ_F(a⁰,…,aⁿ) = Tr(γ F [F,a⁰] ⋯ [F,aⁿ])`.
    pub fn phi_f(&self, args: &[CMat]) -> Result<Complex64> {
        self.check_degree(args.len())?;
        let f = self.phase();
        let mut p = f.clone();
        for a in args {
            p *= &f * a - a * &f;
        }
        Ok(gamma_trace(&p, self.half))
    }

    /// `Tr(γ D_t⁻¹(D_t a⁰ − σ^{1−t}(a⁰)D_t) ⋯)` with `D_t = D|D|^{−t}`.
    pub fn homotopy_phi_t(&self, t: f64, args: &[CMat]) -> Result<Complex64> {
        self.check_degree(args.len())?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
        }
        let dt = self.d_spec.apply(|l| l.signum() * l.abs().powf(1.0 - t));
        let dt_inv = self.d_spec.apply(|l| l.signum() * l.abs().powf(t - 1.0));
        let mut p = CMat::identity(self.dim(), self.dim());
        for a in args {
            let sa = self.sigma_power(1.0 - t, a);
            p *= &dt_inv * (&dt * a - sa * &dt);
        }
        Ok(gamma_trace(&p, self.half))
    }

    /// `π_t(a) = diag(σ_{−it}(a)₊, D₋ σ_{i−it}(a)₋ D₋⁻¹)` on `H₊ ⊕ H₊`.
    pub fn pi_t(&self, t: f64, a: &CMat) -> CMat {
        let top = self.block(&self.sigma_power(t, a), Half::Plus);
        let dm = self.d_block(Half::Minus);
        let dmi = self.d_block_inv(Half::Minus);
        let bottom = &dm * self.block(&self.sigma_power(t - 1.0, a), Half::Minus) * &dmi;
        block_diag(&top, &bottom)
    }

    /// The character of the Fredholm module `(H₊ ⊕ H₊, F_t, π_t)`,
    /// `c_n · ½ Tr(Γ F_t [F_t, π_t(a⁰)] ⋯ [F_t, π_t(aⁿ)])` with
    /// `c_n = phase_normalization(n)`.
    pub fn fredholm_phi_t(&self, t: f64, args: &[CMat]) -> Result<Complex64> {
        let n = self.check_degree(args.len())?;
        let m = self.half;
        let ft = swap(m);
        let mut p = ft.clone();
        for a in args {
            let pa = self.pi_t(t, a);
            p *= &ft * &pa - &pa * &ft;
        }
        Ok(gamma_trace(&p, m) * (0.5 * phase_normalization(n)))
    }

    /// Evaluates both endpoint identities of the `π_t` homotopy.
    pub fn adjoint_chern_endpoints(&self, args: &[CMat]) -> Result<EndpointReport> {
        let phi0 = self.fredholm_phi_t(0.0, args)?;
        let phi_plus_star = self.phi_plus_star(args)?;
        let phi1 = self.fredholm_phi_t(1.0, args)?;
        let minus_phi_minus = -self.phi_pm(args)?.1;
        Ok(EndpointReport {
            phi0,
            phi_plus_star,
            residual0: (phi0 - phi_plus_star).norm(),
            phi1,
            minus_phi_minus,
            residual1: (phi1 - minus_phi_minus).norm(),
        })
    }

    /// `π^±(a) = diag(a_±, D_±⁻¹ σ(a)_∓ D_±)` on `H_± ⊕ H_±`.
    pub fn pi_pm(&self, a: &CMat, which: Half) -> CMat {
        let dp = self.d_block(which);
        let dpi = self.d_block_inv(which);
        let lower = &dpi * self.block(&self.sigma(a), which.other()) * &dp;
        block_diag(&self.block(a, which), &lower)
    }

    /// Largest deviation, over both halves, of
    /// `D_±⁻¹σ(a)_∓D_± = a_± − D_±⁻¹(D_± a_± − σ(a)_∓ D_±)` and of the block
    /// form of `[F^±, π^±(a)]`.
    pub fn fredholm_block_defect(&self, a: &CMat) -> f64 {
        let m = self.half;
        let f = swap(m);
        let mut worst = 0.0f64;
        for which in [Half::Plus, Half::Minus] {
            let y = self.half_differential(a, which);
            let pi = self.pi_pm(a, which);
            let lower = pi.view((m, m), (m, m)).into_owned();
            worst = worst.max(max_abs(&(lower - (self.block(a, which) - &y))));
            let comm = &f * &pi - &pi * &f;
            let mut expected = CMat::zeros(2 * m, 2 * m);
            expected.view_mut((0, m), (m, m)).copy_from(&(-&y));
            expected.view_mut((m, 0), (m, m)).copy_from(&y);
            worst = worst.max(max_abs(&(comm - expected)));
        }
        worst
    }

    /// Writes `D` and `h` as `<stem>.D.bin` and `<stem>.h.bin` with JSON headers.
    pub fn write_dumps(&self, dir: &Path, stem: &str) -> Result<()> {
        for (label, m) in [("D", &self.d), ("h", &self.h)] {
            let header = DumpHeader {
                n: self.dim(),
                label: label.to_string(),
            };
            write_matrix_dump(&dir.join(format!("{stem}.{label}.bin")), m, &header)?;
        }
        Ok(())
    }

    pub fn read_dumps(dir: &Path, stem: &str) -> Result<Self> {
        let load = |label: &str| -> Result<CMat> {
            let path = dir.join(format!("{stem}.{label}.bin"));
            let header = read_dump_header(&path)?;
            read_matrix_dump(&path, header.n)
        };
        Self::new(load("D")?, load("h")?)
    }
}

fn gamma(half: usize) -> CMat {
    CMat::from_fn(2 * half, 2 * half, |r, c| {
        if r != c {
            Complex64::new(0.0, 0.0)
        } else if r < half {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        }
    })
}

/// `[[0, I], [I, 0]]` on `ℂ^m ⊕ ℂ^m`.
fn swap(m: usize) -> CMat {
    CMat::from_fn(2 * m, 2 * m, |r, c| {
        if (r + m == c) || (c + m == r) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// The constant `c_n = (−1)^{n/2}` relating the `t = 1` end of the `D_t`
/// homotopy to the phase character: `Φ_{t=1} = c_n Φ_F`. The same constant
/// makes the `π_t` module character at `t = 0, 1` equal the plain block traces.
pub fn phase_normalization(n: usize) -> f64 {
    if (n / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// One row of the untwisting table.
#[derive(Clone, Debug)]
pub struct PhaseCommutator {
    pub commutator: CMat,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct UntwistedPhase {
    pub f: CMat,
    pub table: Vec<PhaseCommutator>,
}

impl UntwistedPhase {
    pub fn max_residual(&self) -> f64 {
        self.table.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndpointReport {
    pub phi0: Complex64,
    pub phi_plus_star: Complex64,
    pub residual0: f64,
    pub phi1: Complex64,
    pub minus_phi_minus: Complex64,
    pub residual1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdempotentKind {
    /// An orthogonal projection `p`.
    Projection,
    /// `e = e^{−h} p e^{h}`, which satisfies `e* = σ(e)`.
    Twisted,
}

/// An even idempotent and its companions `f_± = D_±⁻¹ σ(e)_∓ D_±`.
#[derive(Clone, Debug)]
pub struct IdempotentData {
    pub e: CMat,
    pub kind: IdempotentKind,
    pub f_plus: CMat,
    pub f_minus: CMat,
}

impl IdempotentData {
    pub fn new(t: &MatrixTwistedTriple, e: CMat, kind: IdempotentKind) -> Result<Self> {
        if e.nrows() != t.dim() || e.ncols() != t.dim() {
            return Err(Error::InvalidArgument("idempotent has the wrong size".into()));
        }
        let defect = max_abs(&(&e * &e - &e));
        if defect > IDEMPOTENT_TOL {
            return Err(Error::NotIdempotent { defect });
        }
        let g = t.gamma();
        if max_abs(&(&e * &g - &g * &e)) > GRADING_TOL * max_abs(&e).max(1.0) {
            return Err(Error::Grading("idempotent is not even".into()));
        }
        if kind == IdempotentKind::Twisted {
            let defect = max_abs(&(e.adjoint() - t.sigma(&e)));
            if defect > TWISTED_ADJOINT_TOL {
                return Err(Error::InvalidArgument(format!("e* differs from σ(e) by {defect:.3e}")));
            }
        }
        let f = |which: Half| {
            let se = t.block(&t.sigma(&e), which.other());
            t.d_block_inv(which) * se * t.d_block(which)
        };
        Ok(IdempotentData {
            f_plus: f(Half::Plus),
            f_minus: f(Half::Minus),
            e,
            kind,
        })
    }

    /// Wraps an orthogonal projection.
    pub fn projection(t: &MatrixTwistedTriple, p: CMat) -> Result<Self> {
        let defect = max_abs(&(&p - p.adjoint()));
        if defect > ADJOINT_TOL {
            return Err(Error::NotSelfAdjoint { defect });
        }
        Self::new(t, p, IdempotentKind::Projection)
    }

    /// `e = e^{−h} p e^{h}` for an orthogonal projection `p`.
    pub fn twisted(t: &MatrixTwistedTriple, p: &CMat) -> Result<Self> {
        let defect = max_abs(&(p - p.adjoint()));
        if defect > ADJOINT_TOL {
            return Err(Error::NotSelfAdjoint { defect });
        }
        let e = t.exp_h(-1.0) * p * t.exp_h(1.0);
        Self::new(t, e, IdempotentKind::Twisted)
    }

    pub fn f(&self, which: Half) -> &CMat {
        match which {
            Half::Plus => &self.f_plus,
            Half::Minus => &self.f_minus,
        }
    }
}

/// `(Index⁺, Index⁻)` with the half-characters evaluated on `(e, …, e)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexPair {
    pub index_plus: i64,
    pub index_minus: i64,
    pub phi_plus: Complex64,
    pub phi_minus: Complex64,
}

impl IndexPair {
    /// `max |Φ^± − Index^±|`.
    pub fn defect(&self) -> f64 {
        let p = (self.phi_plus - self.index_plus as f64).norm();
        let m = (self.phi_minus - self.index_minus as f64).norm();
        p.max(m)
    }
}

/// `Index^± = rank(e_±) − rank(f_±)` and `Φ^±(e, …, e)` in degree `n`.
pub fn index_pair(t: &MatrixTwistedTriple, e: &IdempotentData, n: usize) -> Result<IndexPair> {
    let args = vec![e.e.clone(); n + 1];
    let (phi_plus, phi_minus) = t.phi_pm(&args)?;
    let index = |which: Half| {
        numerical_rank(&t.block(&e.e, which)) as i64 - numerical_rank(e.f(which)) as i64
    };
    Ok(IndexPair {
        index_plus: index(Half::Plus),
        index_minus: index(Half::Minus),
        phi_plus,
        phi_minus,
    })
}

/// Degree-`n` cochain `a ↦ Φ_{D,σ}(a⁰,…,aⁿ)`.
pub fn chern_cochain(t: &Arc<MatrixTwistedTriple>, n: usize) -> Cochain<MatrixAlgebra> {
    let t2 = Arc::clone(t);
    Cochain::new(Arc::new(MatrixAlgebra { dim: t.dim() }), n, move |args| t2.chern_phi(args))
}

/// Degree-`n` cochain `Φ^±`.
pub fn half_character_cochain(t: &Arc<MatrixTwistedTriple>, n: usize, which: Half) -> Cochain<MatrixAlgebra> {
    let t2 = Arc::clone(t);
    Cochain::new(Arc::new(MatrixAlgebra { dim: t.dim() }), n, move |args| {
        let (p, m) = t2.phi_pm(args)?;
        Ok(match which {
            Half::Plus => p,
            Half::Minus => m,
        })
    })
}

/// Degree-`n` cochain `Φ_t` of the `D_t` homotopy.
pub fn homotopy_cochain(t: &Arc<MatrixTwistedTriple>, s: f64, n: usize) -> Cochain<MatrixAlgebra> {
    let t2 = Arc::clone(t);
    Cochain::new(Arc::new(MatrixAlgebra { dim: t.dim() }), n, move |args| t2.homotopy_phi_t(s, args))
}

/// Random even samples for a triple, scaled by `cfg.sample_scale`.
pub fn random_samples(t: &MatrixTwistedTriple, cfg: &TripleConfig, rng: &mut (impl Rng + ?Sized), count: usize) -> Vec<CMat> {
    (0..count).map(|_| random_even(rng, t.half(), cfg.sample_scale)).collect()
}
