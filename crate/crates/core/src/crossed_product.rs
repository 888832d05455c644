//! The algebraic crossed product `C∞(S¹) ⋊ Γ`.
//!
//! Elements are finite sums `Σ a_φ U*_φ` with the relations
//! `U*_φ f = (f∘φ) U*_φ` and `U*_φ U*_ψ = U*_{ψ∘φ}`. The group Γ is the free
//! group on a configured list of generator diffeomorphisms; words reduce only
//! by cancelling adjacent generator/inverse pairs.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_kernel::{
    function_from_literal, function_to_literal, CircleDiffeo, CoeffLiteral, InversionOptions,
    PeriodicFunction, DEFAULT_ALIAS_BOUND,
};
use crate::error::{Error, Result};

/// `(generator index, ±1)`.
pub type Letter = (usize, i8);

#[derive(Clone, Copy, Debug)]
pub struct GroupConfig {
    /// Output band limit for coefficients and word realizations.
    pub band: usize,
    pub alias_bound: f64,
    pub inversion: InversionOptions,
}

impl Default for GroupConfig {
    fn default() -> Self {
        GroupConfig {
            band: 64,
            alias_bound: DEFAULT_ALIAS_BOUND,
            inversion: InversionOptions::default(),
        }
    }
}

#[derive(Debug)]
struct Generator {
    name: String,
    forward: Arc<CircleDiffeo>,
    inverse: Arc<CircleDiffeo>,
}

/// Free group on named generator diffeomorphisms.
#[derive(Debug)]
pub struct Group {
    generators: Vec<Generator>,
    config: GroupConfig,
}

impl Group {
    pub fn new(generators: Vec<(String, CircleDiffeo)>, config: GroupConfig) -> Result<Arc<Self>> {
        let mut gens = Vec::with_capacity(generators.len());
        for (name, phi) in generators {
            let inverse = phi.invert(config.inversion)?;
            gens.push(Generator {
                name,
                forward: Arc::new(phi),
                inverse: Arc::new(inverse),
            });
        }
        Ok(Arc::new(Group {
            generators: gens,
            config,
        }))
    }

    pub fn config(&self) -> &GroupConfig {
        &self.config
    }

    pub fn generator_names(&self) -> Vec<&str> {
        self.generators.iter().map(|g| g.name.as_str()).collect()
    }

    pub fn identity(self: &Arc<Self>) -> GroupWord {
        GroupWord {
            group: Arc::clone(self),
            letters: Vec::new(),
            realization: Arc::new(CircleDiffeo::identity()),
        }
    }

    pub fn generator(self: &Arc<Self>, name: &str) -> Result<GroupWord> {
        let idx = self
            .generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
        self.word(&[(idx, 1)])
    }

    /// Word `l₁ l₂ ⋯ l_r`, realized as `l₁ ∘ l₂ ∘ ⋯ ∘ l_r`.
    pub fn word(self: &Arc<Self>, letters: &[Letter]) -> Result<GroupWord> {
        let mut reduced: Vec<Letter> = Vec::with_capacity(letters.len());
        for &(g, e) in letters {
            if g >= self.generators.len() || (e != 1 && e != -1) {
                return Err(Error::InvalidArgument(format!("bad letter ({g}, {e})")));
            }
            if let Some(&(h, f)) = reduced.last() {
                if h == g && f == -e {
                    reduced.pop();
                    continue;
                }
            }
            reduced.push((g, e));
        }
        let mut real = CircleDiffeo::identity();
        for &(g, e) in reduced.iter().rev() {
            let gen = &self.generators[g];
            let d = if e == 1 { &gen.forward } else { &gen.inverse };
            real = d.compose(&real, self.config.band, self.config.alias_bound)?;
        }
        if reduced.len() == 1 {
            let gen = &self.generators[reduced[0].0];
            let d = if reduced[0].1 == 1 { &gen.forward } else { &gen.inverse };
            return Ok(GroupWord {
                group: Arc::clone(self),
                letters: reduced,
                realization: Arc::clone(d),
            });
        }
        Ok(GroupWord {
            group: Arc::clone(self),
            letters: reduced,
            realization: Arc::new(real),
        })
    }

    /// Parses `name.name^-1...`; `""`, `"1"` and `"e"` are the identity.
    pub fn parse_word(self: &Arc<Self>, s: &str) -> Result<GroupWord> {
        let s = s.trim();
        if s.is_empty() || s == "1" || s == "e" {
            return Ok(self.identity());
        }
        let mut letters = Vec::new();
        for part in s.split('.') {
            let (name, exp) = match part.strip_suffix("^-1") {
                Some(n) => (n, -1),
                None => (part, 1),
            };
            let idx = self
                .generators
                .iter()
                .position(|g| g.name == name)
                .ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
            letters.push((idx, exp));
        }
        self.word(&letters)
    }
}

/// Freely reduced word in the generators with its cached realization.
#[derive(Clone)]
pub struct GroupWord {
    group: Arc<Group>,
    letters: Vec<Letter>,
    realization: Arc<CircleDiffeo>,
}

impl GroupWord {
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn diffeo(&self) -> &CircleDiffeo {
        &self.realization
    }

    /// Fails when the realization of the inverse cannot be resolved at
    /// the group's band.
    pub fn inverse(&self) -> Result<GroupWord> {
        let letters: Vec<Letter> = self.letters.iter().rev().map(|&(g, e)| (g, -e)).collect();
        self.group.word(&letters)
    }

    /// The word realizing `self ∘ inner`.
    pub fn then_after(&self, inner: &GroupWord) -> Result<GroupWord> {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&inner.letters);
        self.group.word(&letters)
    }
}

impl PartialEq for GroupWord {
    fn eq(&self, other: &Self) -> bool {
        self.letters == other.letters
    }
}
impl Eq for GroupWord {}

impl PartialOrd for GroupWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for GroupWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters.cmp(&other.letters)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|&(g, e)| {
                let name = &self.group.generators[g].name;
                if e == 1 {
                    name.clone()
                } else {
                    format!("{name}^-1")
                }
            })
            .collect();
        write!(f, "{}", parts.join("."))
    }
}

impl fmt::Debug for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupWord({self})")
    }
}

/// JSON form of one term.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermLiteral {
    pub word: String,
    pub coeffs: CoeffLiteral,
}

/// Finite sum `Σ a_φ U*_φ`.
#[derive(Clone, Debug)]
pub struct CrossedProductElement {
    group: Arc<Group>,
    terms: BTreeMap<GroupWord, PeriodicFunction>,
}

impl CrossedProductElement {
    pub fn zero(group: &Arc<Group>) -> Self {
        CrossedProductElement {
            group: Arc::clone(group),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(group: &Arc<Group>) -> Self {
        Self::function(group, PeriodicFunction::one())
    }

    /// Plain function `f = f U*_e`.
    pub fn function(group: &Arc<Group>, f: PeriodicFunction) -> Self {
        Self::monomial(f, group.identity())
    }

    /// `f U*_φ`.
    pub fn monomial(f: PeriodicFunction, word: GroupWord) -> Self {
        let group = Arc::clone(word.group());
        let mut terms = BTreeMap::new();
        if !f.is_zero() {
            terms.insert(word, f);
        }
        CrossedProductElement { group, terms }
    }

    /// `U*_φ`.
    pub fn unitary(word: GroupWord) -> Self {
        Self::monomial(PeriodicFunction::one(), word)
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GroupWord, &PeriodicFunction)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `U*_word` (zero if absent).
    pub fn coefficient(&self, word: &GroupWord) -> PeriodicFunction {
        self.terms
            .get(word)
            .cloned()
            .unwrap_or_else(|| PeriodicFunction::zero(0))
    }

    fn insert_add(&mut self, word: GroupWord, f: PeriodicFunction) {
        let sum = match self.terms.remove(&word) {
            Some(g) => g.add(&f),
            None => f,
        };
        if !sum.is_zero() {
            self.terms.insert(word, sum);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, f) in &other.terms {
            out.insert_add(w.clone(), f.clone());
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(&self.group);
        for (w, f) in &self.terms {
            out.insert_add(w.clone(), f.scale(s));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Termwise derivative of the coefficients, `g U*_ψ ↦ g' U*_ψ`.
    pub fn coefficient_derivative(&self) -> Self {
        let mut out = Self::zero(&self.group);
        for (w, f) in &self.terms {
            out.insert_add(w.clone(), f.derivative());
        }
        out
    }

    fn cfg(&self) -> GroupConfig {
        *self.group.config()
    }

    /// `(f U*_φ)(g U*_ψ) = f·(g∘φ) U*_{ψ∘φ}`, extended bilinearly.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let cfg = self.cfg();
        let mut out = Self::zero(&self.group);
        for (phi, f) in &self.terms {
            for (psi, g) in &other.terms {
                let g_phi = g.compose(phi.diffeo(), cfg.band, cfg.alias_bound)?;
                let coeff = f.mul(&g_phi, cfg.band, cfg.alias_bound)?;
                let word = psi.then_after(phi)?;
                out.insert_add(word, coeff);
            }
        }
        Ok(out)
    }

    /// `(f U*_φ)* = (f̄ ∘ φ⁻¹) U*_{φ⁻¹}`.
    pub fn involution(&self) -> Result<Self> {
        let cfg = self.cfg();
        let mut out = Self::zero(&self.group);
        for (phi, f) in &self.terms {
            let inv = phi.inverse()?;
            let coeff = f.conj().compose(inv.diffeo(), cfg.band, cfg.alias_bound)?;
            out.insert_add(inv, coeff);
        }
        Ok(out)
    }

    /// Multiplies each coefficient `a_φ` by a function of `φ'`.
    fn twist_by<F>(&self, op: F, context: &str) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let cfg = self.cfg();
        let mut out = Self::zero(&self.group);
        for (phi, f) in &self.terms {
            if phi.is_identity() {
                let factor = op(1.0);
                out.insert_add(phi.clone(), f.scale(factor));
                continue;
            }
            let weight = phi
                .diffeo()
                .derivative()
                .map_projected(cfg.band, |d| op(d.re))
                .checked(cfg.alias_bound, context)?;
            let coeff = f.mul(&weight, cfg.band, cfg.alias_bound)?;
            out.insert_add(phi.clone(), coeff);
        }
        Ok(out)
    }

    /// `σ(g U*_φ) = φ' g U*_φ`.
    pub fn sigma(&self) -> Result<Self> {
        self.sigma_power(1)
    }

    /// `σ^m`, termwise multiplication by `(φ')^m`.
    pub fn sigma_power(&self, m: i32) -> Result<Self> {
        if m == 0 {
            return Ok(self.clone());
        }
        self.twist_by(|d| Complex64::new(d.powi(m), 0.0), "sigma power")
    }

    pub fn sigma_inv(&self) -> Result<Self> {
        self.sigma_power(-1)
    }

    /// Analytic continuation of the modular group: `(φ')^{iz}`.
    pub fn sigma_analytic(&self, z: Complex64) -> Result<Self> {
        self.twist_by(|d| (Complex64::new(0.0, 1.0) * z * d.ln()).exp(), "sigma_t")
    }

    /// `σ_t(g U*_φ) = (φ')^{it} g U*_φ`.
    pub fn sigma_t(&self, t: f64) -> Result<Self> {
        if t == 0.0 {
            return Ok(self.clone());
        }
        self.sigma_analytic(Complex64::new(t, 0.0))
    }

    /// Modular derivation `δ(f U*_φ) = i log φ' · f U*_φ`.
    pub fn delta(&self) -> Result<Self> {
        self.twist_by(|d| Complex64::new(0.0, d.ln()), "delta")
    }

    /// Canonical state: integral of the identity-word coefficient.
    pub fn state(&self) -> Complex64 {
        self.terms
            .iter()
            .find(|(w, _)| w.is_identity())
            .map(|(_, f)| f.quadrature())
            .unwrap_or_default()
    }

    /// Largest coefficient difference over all words.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut words: Vec<&GroupWord> = self.terms.keys().collect();
        words.extend(other.terms.keys());
        words
            .into_iter()
            .map(|w| self.coefficient(w).max_coeff_diff(&other.coefficient(w)))
            .fold(0.0, f64::max)
    }

    pub fn to_literal(&self) -> Vec<TermLiteral> {
        self.terms
            .iter()
            .map(|(w, f)| TermLiteral {
                word: w.to_string(),
                coeffs: function_to_literal(f),
            })
            .collect()
    }

    pub fn from_literal(group: &Arc<Group>, terms: &[TermLiteral]) -> Result<Self> {
        let mut out = Self::zero(group);
        for t in terms {
            let w = group.parse_word(&t.word)?;
            out.insert_add(w, function_from_literal(&t.coeffs));
        }
        Ok(out)
    }
}
