//! Multilinear cochains over an arbitrary algebra and the operators of
//! cyclic cohomology.
//!
//! A cochain of degree `n` is a black-box evaluator on `(n+1)`-tuples. The
//! operators follow the usual conventions:
//!
//! * `bψ(a⁰,…,aⁿ⁺¹) = Σ_{i=0}^{n} (−1)^i ψ(…, aⁱaⁱ⁺¹, …) + (−1)^{n+1} ψ(aⁿ⁺¹a⁰, a¹, …, aⁿ)`
//! * `λψ(a⁰,…,aⁿ) = (−1)^n ψ(aⁿ, a⁰, …, aⁿ⁻¹)`
//! * `B = A∘B₀` with `B₀ψ(a⁰,…,aⁿ⁻¹) = ψ(1, a⁰, …) − (−1)^n ψ(a⁰, …, aⁿ⁻¹, 1)`
//!   and `A = Σ_j λ^j` on degree `n − 1`, with no `1/(n+1)` or similar factor.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crossed_product::{CrossedProductElement, Group};
use crate::error::{Error, Result};

/// An algebra over ℂ seen through the operations cochains need.
pub trait Algebra: Send + Sync {
    type Elem: Clone + Send + Sync;

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn scale(&self, a: &Self::Elem, s: Complex64) -> Self::Elem;
    /// The unit, if the algebra has one.
    fn unit(&self) -> Option<Self::Elem>;
    /// A size for elements, used in derivation checks.
    fn norm(&self, a: &Self::Elem) -> f64;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.scale(b, Complex64::new(-1.0, 0.0)))
    }
}

/// Square complex matrices of a fixed size.
#[derive(Clone, Copy, Debug)]
pub struct MatrixAlgebra {
    pub dim: usize,
}

impl Algebra for MatrixAlgebra {
    type Elem = DMatrix<Complex64>;

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        Ok(a * b)
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a + b
    }
    fn scale(&self, a: &Self::Elem, s: Complex64) -> Self::Elem {
        a * s
    }
    fn unit(&self) -> Option<Self::Elem> {
        Some(DMatrix::identity(self.dim, self.dim))
    }
    fn norm(&self, a: &Self::Elem) -> f64 {
        a.norm()
    }
}

/// `C∞(S¹) ⋊ Γ` for a fixed group.
#[derive(Clone, Debug)]
pub struct CrossedProductAlgebra {
    pub group: Arc<Group>,
}

impl Algebra for CrossedProductAlgebra {
    type Elem = CrossedProductElement;

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        a.multiply(b)
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.add(b)
    }
    fn scale(&self, a: &Self::Elem, s: Complex64) -> Self::Elem {
        a.scale(s)
    }
    fn unit(&self) -> Option<Self::Elem> {
        Some(CrossedProductElement::one(&self.group))
    }
    fn norm(&self, a: &Self::Elem) -> f64 {
        a.max_diff(&CrossedProductElement::zero(&self.group))
    }
}

type Evaluator<E> = Arc<dyn Fn(&[E]) -> Result<Complex64> + Send + Sync>;

/// A degree-`n` cochain on `A`.
pub struct Cochain<A: Algebra> {
    degree: usize,
    algebra: Arc<A>,
    eval: Evaluator<A::Elem>,
}

impl<A: Algebra> Clone for Cochain<A> {
    fn clone(&self) -> Self {
        Cochain {
            degree: self.degree,
            algebra: self.algebra.clone(),
            eval: self.eval.clone(),
        }
    }
}

impl<A: Algebra> fmt::Debug for Cochain<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cochain(degree {})", self.degree)
    }
}

impl<A: Algebra + 'static> Cochain<A> {
    pub fn new<F>(algebra: Arc<A>, degree: usize, f: F) -> Self
    where
        F: Fn(&[A::Elem]) -> Result<Complex64> + Send + Sync + 'static,
    {
        Cochain {
            degree,
            algebra,
            eval: Arc::new(f),
        }
    }

    pub fn zero(algebra: Arc<A>, degree: usize) -> Self {
        Self::new(algebra, degree, |_| Ok(Complex64::new(0.0, 0.0)))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn algebra(&self) -> &Arc<A> {
        &self.algebra
    }

    pub fn eval(&self, args: &[A::Elem]) -> Result<Complex64> {
        if args.len() != self.degree + 1 {
            return Err(Error::DegreeMismatch {
                expected: self.degree + 1,
                got: args.len(),
            });
        }
        (self.eval)(args)
    }

    fn same_degree(&self, other: &Self) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_degree(other)?;
        let (p, q) = (self.clone(), other.clone());
        Ok(Self::new(self.algebra.clone(), self.degree, move |a| Ok(p.eval(a)? + q.eval(a)?)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let p = self.clone();
        Self::new(self.algebra.clone(), self.degree, move |a| Ok(p.eval(a)? * s))
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Hochschild coboundary, degree `n → n + 1`.
pub fn hochschild_b<A: Algebra + 'static>(psi: &Cochain<A>) -> Cochain<A> {
    let n = psi.degree;
    let p = psi.clone();
    let alg = psi.algebra.clone();
    Cochain::new(psi.algebra.clone(), n + 1, move |a| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let mut args = Vec::with_capacity(n + 1);
            args.extend_from_slice(&a[..i]);
            args.push(alg.mul(&a[i], &a[i + 1])?);
            args.extend_from_slice(&a[i + 2..]);
            acc += p.eval(&args)? * sign(i);
        }
        let mut args = Vec::with_capacity(n + 1);
        args.push(alg.mul(&a[n + 1], &a[0])?);
        args.extend_from_slice(&a[1..=n]);
        acc += p.eval(&args)? * sign(n + 1);
        Ok(acc)
    })
}

/// Cyclic permutation with sign, degree preserving.
pub fn cyclic_lambda<A: Algebra + 'static>(psi: &Cochain<A>) -> Cochain<A> {
    let n = psi.degree;
    let p = psi.clone();
    Cochain::new(psi.algebra.clone(), n, move |a| {
        let mut args = Vec::with_capacity(n + 1);
        args.push(a[n].clone());
        args.extend_from_slice(&a[..n]);
        Ok(p.eval(&args)? * sign(n))
    })
}

/// Cyclic antisymmetrization `A = Σ_{j=0}^{n} λ^j`.
pub fn cyclic_sum<A: Algebra + 'static>(psi: &Cochain<A>) -> Cochain<A> {
    let n = psi.degree;
    let p = psi.clone();
    Cochain::new(psi.algebra.clone(), n, move |a| {
        let mut acc = Complex64::new(0.0, 0.0);
        // λ^j ψ(a⁰,…,aⁿ) = (−1)^{nj} ψ(a^{n−j+1}, …, aⁿ, a⁰, …, a^{n−j}).
        for j in 0..=n {
            let args: Vec<A::Elem> = (0..=n).map(|i| a[(i + n + 1 - j) % (n + 1)].clone()).collect();
            acc += p.eval(&args)? * sign(n * j);
        }
        Ok(acc)
    })
}

/// Connes boundary, degree `n → n − 1`; a degree-0 cochain maps to the zero
/// cochain of degree 0.
pub fn connes_b<A: Algebra + 'static>(psi: &Cochain<A>) -> Result<Cochain<A>> {
    let unit = psi.algebra.unit().ok_or(Error::NotUnital)?;
    let n = psi.degree;
    if n == 0 {
        return Ok(Cochain::zero(psi.algebra.clone(), 0));
    }
    let p = psi.clone();
    let b0 = Cochain::new(psi.algebra.clone(), n - 1, move |a| {
        let mut front = Vec::with_capacity(n + 1);
        front.push(unit.clone());
        front.extend_from_slice(a);
        let mut back = a.to_vec();
        back.push(unit.clone());
        Ok(p.eval(&front)? - p.eval(&back)? * sign(n))
    });
    Ok(cyclic_sum(&b0))
}

type DerivationMap<A> = Arc<dyn Fn(&<A as Algebra>::Elem) -> Result<<A as Algebra>::Elem> + Send + Sync>;

/// A linear map declared to be a derivation.
pub struct Derivation<A: Algebra> {
    map: DerivationMap<A>,
}

impl<A: Algebra> Clone for Derivation<A> {
    fn clone(&self) -> Self {
        Derivation { map: self.map.clone() }
    }
}

impl<A: Algebra + 'static> Derivation<A> {
    /// Wraps `map` after checking `δ(ab) = δ(a)b + aδ(b)` on all ordered
    /// pairs of `samples`, relative to `‖a‖‖b‖`.
    pub fn checked<F>(algebra: &A, map: F, samples: &[A::Elem], tol: f64) -> Result<Self>
    where
        F: Fn(&A::Elem) -> Result<A::Elem> + Send + Sync + 'static,
    {
        let mut worst = 0.0f64;
        for a in samples {
            for b in samples {
                let lhs = map(&algebra.mul(a, b)?)?;
                let rhs = algebra.add(&algebra.mul(&map(a)?, b)?, &algebra.mul(a, &map(b)?)?);
                let scale = (algebra.norm(a) * algebra.norm(b)).max(1.0);
                worst = worst.max(algebra.norm(&algebra.sub(&lhs, &rhs)) / scale);
            }
        }
        if worst > tol {
            return Err(Error::NotDerivation { defect: worst });
        }
        Ok(Derivation { map: Arc::new(map) })
    }

    pub fn apply(&self, a: &A::Elem) -> Result<A::Elem> {
        (self.map)(a)
    }
}

/// `L_δψ(a⁰,…,aⁿ) = Σ_i ψ(a⁰, …, δ(aⁱ), …, aⁿ)`.
pub fn lie_derivative<A: Algebra + 'static>(psi: &Cochain<A>, delta: &Derivation<A>) -> Cochain<A> {
    let n = psi.degree;
    let p = psi.clone();
    let d = delta.clone();
    Cochain::new(psi.algebra.clone(), n, move |a| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let mut args = a.to_vec();
            args[i] = d.apply(&a[i])?;
            acc += p.eval(&args)?;
        }
        Ok(acc)
    })
}

fn require_degree_one<A: Algebra>(psi: &Cochain<A>) -> Result<()> {
    if psi.degree != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            got: psi.degree,
        });
    }
    Ok(())
}

/// `e_δψ(a⁰, a¹, a²) = −ψ(δ(a²)a⁰, a¹)` for a degree-1 cochain.
pub fn contraction_e<A: Algebra + 'static>(psi: &Cochain<A>, delta: &Derivation<A>) -> Result<Cochain<A>> {
    require_degree_one(psi)?;
    let p = psi.clone();
    let d = delta.clone();
    let alg = psi.algebra.clone();
    Ok(Cochain::new(psi.algebra.clone(), 2, move |a| {
        let x = alg.mul(&d.apply(&a[2])?, &a[0])?;
        Ok(-p.eval(&[x, a[1].clone()])?)
    }))
}

/// `E_δψ(a⁰) = ψ(1, a⁰)` for a degree-1 cochain.
pub fn contraction_big_e<A: Algebra + 'static>(psi: &Cochain<A>, _delta: &Derivation<A>) -> Result<Cochain<A>> {
    require_degree_one(psi)?;
    let unit = psi.algebra.unit().ok_or(Error::NotUnital)?;
    let p = psi.clone();
    Ok(Cochain::new(psi.algebra.clone(), 0, move |a| p.eval(&[unit.clone(), a[0].clone()])))
}

/// Outcome of a cocycle test over sample tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleReport {
    pub b_residual: f64,
    pub lambda_residual: Option<f64>,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

/// `max |bψ|` over `(n+2)`-tuples.
pub fn is_hochschild_cocycle<A: Algebra + 'static>(
    psi: &Cochain<A>,
    samples: &[Vec<A::Elem>],
    tol: f64,
) -> Result<CocycleReport> {
    let b = hochschild_b(psi);
    let mut worst = 0.0f64;
    for s in samples {
        worst = worst.max(b.eval(s)?.norm());
    }
    Ok(CocycleReport {
        b_residual: worst,
        lambda_residual: None,
        samples: samples.len(),
        tol,
        pass: worst <= tol,
    })
}

/// `max |bψ|` over `(n+2)`-tuples and `max |λψ − ψ|` over `(n+1)`-tuples.
pub fn is_cyclic_cocycle<A: Algebra + 'static>(
    psi: &Cochain<A>,
    b_samples: &[Vec<A::Elem>],
    lambda_samples: &[Vec<A::Elem>],
    tol: f64,
) -> Result<CocycleReport> {
    let mut report = is_hochschild_cocycle(psi, b_samples, tol)?;
    let lam = cyclic_lambda(psi);
    let mut worst = 0.0f64;
    for s in lambda_samples {
        worst = worst.max((lam.eval(s)? - psi.eval(s)?).norm());
    }
    report.lambda_residual = Some(worst);
    report.pass = report.b_residual <= tol && worst <= tol;
    Ok(report)
}

/// `|ψ(…, x + s·y, …) − ψ(…, x, …) − s·ψ(…, y, …)|` in argument `slot`.
pub fn multilinearity_defect<A: Algebra + 'static>(
    psi: &Cochain<A>,
    args: &[A::Elem],
    slot: usize,
    x: &A::Elem,
    y: &A::Elem,
    s: Complex64,
) -> Result<f64> {
    let alg = &psi.algebra;
    let with = |v: A::Elem| {
        let mut a = args.to_vec();
        a[slot] = v;
        psi.eval(&a)
    };
    let combined = with(alg.add(x, &alg.scale(y, s)))?;
    Ok((combined - with(x.clone())? - with(y.clone())? * s).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// `ψ(a⁰,…,aⁿ) = Tr(M₀a⁰M₁a¹⋯Mₙaⁿ)`: multilinear, neither cyclic nor closed.
    fn random_cochain(rng: &mut ChaCha8Rng, alg: &Arc<MatrixAlgebra>, n: usize) -> Cochain<MatrixAlgebra> {
        let ms: Vec<DMatrix<Complex64>> = (0..=n).map(|_| rand_matrix(rng, alg.dim)).collect();
        Cochain::new(alg.clone(), n, move |a| {
            let mut p = DMatrix::identity(ms[0].nrows(), ms[0].nrows());
            for (m, x) in ms.iter().zip(a) {
                p = p * m * x;
            }
            Ok(p.trace())
        })
    }

    fn tuple(rng: &mut ChaCha8Rng, d: usize, len: usize) -> Vec<DMatrix<Complex64>> {
        (0..len).map(|_| rand_matrix(rng, d)).collect()
    }

    fn setup() -> (ChaCha8Rng, Arc<MatrixAlgebra>) {
        (ChaCha8Rng::seed_from_u64(7), Arc::new(MatrixAlgebra { dim: 3 }))
    }

    #[test]
    fn b_squared_vanishes() {
        let (mut rng, alg) = setup();
        for n in 0..=2 {
            let psi = random_cochain(&mut rng, &alg, n);
            let bb = hochschild_b(&hochschild_b(&psi));
            let v = bb.eval(&tuple(&mut rng, 3, n + 3)).unwrap();
            assert!(v.norm() < 1e-9, "n = {n}: {v}");
        }
    }

    #[test]
    fn lambda_has_order_n_plus_one() {
        let (mut rng, alg) = setup();
        for n in 0..=3 {
            let psi = random_cochain(&mut rng, &alg, n);
            let mut l = psi.clone();
            for _ in 0..=n {
                l = cyclic_lambda(&l);
            }
            let args = tuple(&mut rng, 3, n + 1);
            assert!((l.eval(&args).unwrap() - psi.eval(&args).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn connes_b_identities() {
        let (mut rng, alg) = setup();
        let zero_deg = random_cochain(&mut rng, &alg, 0);
        let b0 = connes_b(&zero_deg).unwrap();
        assert_eq!(b0.eval(&tuple(&mut rng, 3, 1)).unwrap(), Complex64::new(0.0, 0.0));
        for n in 1..=3 {
            let psi = random_cochain(&mut rng, &alg, n);
            if n >= 2 {
                let bb = connes_b(&connes_b(&psi).unwrap()).unwrap();
                assert!(bb.eval(&tuple(&mut rng, 3, n - 1)).unwrap().norm() < 1e-9);
            }
            let anti = hochschild_b(&connes_b(&psi).unwrap())
                .add(&connes_b(&hochschild_b(&psi)).unwrap())
                .unwrap();
            assert!(anti.eval(&tuple(&mut rng, 3, n + 1)).unwrap().norm() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn image_of_cyclic_sum_is_lambda_invariant() {
        let (mut rng, alg) = setup();
        let psi = cyclic_sum(&random_cochain(&mut rng, &alg, 2));
        let args = tuple(&mut rng, 3, 3);
        let d = cyclic_lambda(&psi).eval(&args).unwrap() - psi.eval(&args).unwrap();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn trace_is_cyclic_and_degree_checked() {
        let (mut rng, alg) = setup();
        let tr = Cochain::new(alg.clone(), 0, |a: &[DMatrix<Complex64>]| Ok(a[0].trace()));
        let b_samples: Vec<_> = (0..5).map(|_| tuple(&mut rng, 3, 2)).collect();
        let l_samples: Vec<_> = (0..5).map(|_| tuple(&mut rng, 3, 1)).collect();
        assert!(is_cyclic_cocycle(&tr, &b_samples, &l_samples, 1e-12).unwrap().pass);
        assert!(matches!(tr.eval(&tuple(&mut rng, 3, 2)), Err(Error::DegreeMismatch { .. })));
        let z = Cochain::<MatrixAlgebra>::zero(alg.clone(), 2);
        assert!(is_cyclic_cocycle(&z, &[], &[], 0.0).unwrap().pass);
    }

    #[test]
    fn derivation_checks_and_contractions() {
        let (mut rng, alg) = setup();
        let x = rand_matrix(&mut rng, 3);
        let samples = tuple(&mut rng, 3, 3);
        let xc = x.clone();
        let inner = Derivation::checked(&*alg, move |a: &DMatrix<Complex64>| Ok(&xc * a - a * &xc), &samples, 1e-12).unwrap();
        let xs = x.clone();
        let bad = Derivation::checked(&*alg, move |a: &DMatrix<Complex64>| Ok(&xs * a), &samples, 1e-12);
        assert!(matches!(bad, Err(Error::NotDerivation { .. })));
        let psi2 = random_cochain(&mut rng, &alg, 2);
        assert!(matches!(contraction_e(&psi2, &inner), Err(Error::DegreeMismatch { .. })));
        assert!(matches!(contraction_big_e(&psi2, &inner), Err(Error::DegreeMismatch { .. })));
        // The trace pairing is invariant under inner derivations.
        let pair = Cochain::new(alg.clone(), 1, |a: &[DMatrix<Complex64>]| Ok((&a[0] * &a[1]).trace()));
        let l = lie_derivative(&pair, &inner);
        assert!(l.eval(&tuple(&mut rng, 3, 2)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn multilinearity_of_random_cochain() {
        let (mut rng, alg) = setup();
        let psi = random_cochain(&mut rng, &alg, 2);
        let args = tuple(&mut rng, 3, 3);
        let (x, y) = (rand_matrix(&mut rng, 3), rand_matrix(&mut rng, 3));
        for slot in 0..3 {
            let d = multilinearity_defect(&psi, &args, slot, &x, &y, Complex64::new(0.3, -1.2)).unwrap();
            assert!(d < 1e-9);
        }
    }
}
