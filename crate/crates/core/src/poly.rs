//! Sparse polarized polynomials.
//!
//! A polynomial in N complex variables is stored over 2N exponent slots: the
//! first N slots are the holomorphic variables, the last N their formal
//! conjugates. Conjugation is the slot swap plus coefficient conjugation, and
//! every Wirtinger derivative is a plain formal partial. Reality of a
//! polynomial is the testable identity `p.conjugate() == p`.

use crate::scalar::{ComplexDouble, GaussianRational};
use std::collections::BTreeMap;
use std::fmt;

/// Coefficient ring interface shared by the exact and float backends.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn modulus_f64(&self) -> f64;
}

impl Coeff for GaussianRational {
    fn zero() -> Self {
        GaussianRational::zero()
    }
    fn one() -> Self {
        GaussianRational::one()
    }
    fn from_int(n: i64) -> Self {
        GaussianRational::from_int(n)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        GaussianRational::conj(self)
    }
    fn is_zero(&self) -> bool {
        GaussianRational::is_zero(self)
    }
    fn modulus_f64(&self) -> f64 {
        GaussianRational::modulus_f64(self)
    }
}

impl Coeff for ComplexDouble {
    fn zero() -> Self {
        ComplexDouble::new(0.0, 0.0)
    }
    fn one() -> Self {
        ComplexDouble::new(1.0, 0.0)
    }
    fn from_int(n: i64) -> Self {
        ComplexDouble::new(n as f64, 0.0)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        ComplexDouble::conj(self)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn modulus_f64(&self) -> f64 {
        self.norm()
    }
}

/// Exponent vector of length `2 * nvars`: holomorphic slots, then conjugates.
pub type Exponents = Vec<u16>;

/// Sparse multivariate polynomial over `C` with polarized conjugate slots.
///
/// Canonical form: no zero coefficients are ever stored, and terms live in a
/// `BTreeMap` so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<C: Coeff> {
    nvars: usize,
    terms: BTreeMap<Exponents, C>,
}

/// Exact polynomial over the Gaussian rationals.
pub type PolarizedPoly = Poly<GaussianRational>;
/// Float-backend polynomial.
pub type FloatPoly = Poly<ComplexDouble>;

impl<C: Coeff> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: C, nvars: usize) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; 2 * nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(C::one(), nvars)
    }

    /// The holomorphic variable `z_{index}` (0-based).
    pub fn variable(index: usize, nvars: usize) -> Self {
        assert!(index < nvars, "variable index out of range");
        let mut e = vec![0u16; 2 * nvars];
        e[index] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, C::one());
        p
    }

    /// The conjugate variable `conj(z_{index})` (0-based).
    pub fn conj_variable(index: usize, nvars: usize) -> Self {
        assert!(index < nvars, "variable index out of range");
        let mut e = vec![0u16; 2 * nvars];
        e[nvars + index] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, C::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponents, C)>) -> Self {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u16]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    /// Coefficient of a mixed monomial given as (holomorphic, conjugate)
    /// exponent pairs; unlisted slots are zero.
    pub fn coeff_of(&self, holo: &[(usize, u16)], conj: &[(usize, u16)]) -> C {
        let mut e = vec![0u16; 2 * self.nvars];
        for &(j, k) in holo {
            e[j] = k;
        }
        for &(j, k) in conj {
            e[self.nvars + j] = k;
        }
        self.coeff(&e)
    }

    pub fn add_term(&mut self, exps: Exponents, c: C) {
        assert_eq!(exps.len(), 2 * self.nvars, "exponent vector length mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().add(&c);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.nvars, rhs.nvars, "variable roster mismatch");
        let mut out = self.clone();
        for (e, c) in rhs.terms.iter() {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in self.terms.iter() {
            out.terms.insert(e.clone(), c.neg());
        }
        out
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = Poly::zero(self.nvars);
        if s.is_zero() {
            return out;
        }
        for (e, c) in self.terms.iter() {
            let v = c.mul(s);
            if !v.is_zero() {
                out.terms.insert(e.clone(), v);
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.nvars, rhs.nvars, "variable roster mismatch");
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in self.terms.iter() {
            for (eb, cb) in rhs.terms.iter() {
                let e: Exponents = ea
                    .iter()
                    .zip(eb.iter())
                    .map(|(&x, &y)| x.checked_add(y).expect("exponent overflow"))
                    .collect();
                out.add_term(e, ca.mul(cb));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Poly::one(self.nvars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Formal Wirtinger partial derivative with respect to variable `index`
    /// (0-based); `conjugated` selects the conjugate slot.
    pub fn wirtinger(&self, index: usize, conjugated: bool) -> crate::Result<Self> {
        if index >= self.nvars {
            return Err(crate::Error::Usage(format!(
                "derivative index {} out of range for {} variables",
                index + 1,
                self.nvars
            )));
        }
        let slot = if conjugated { self.nvars + index } else { index };
        let mut out = Poly::zero(self.nvars);
        for (e, c) in self.terms.iter() {
            let k = e[slot];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[slot] = k - 1;
            out.add_term(e2, c.mul(&C::from_int(k as i64)));
        }
        Ok(out)
    }

    /// Swap each holomorphic slot with its conjugate slot and conjugate the
    /// coefficients. An involution.
    pub fn conjugate(&self) -> Self {
        let n = self.nvars;
        let mut out = Poly::zero(n);
        for (e, c) in self.terms.iter() {
            let mut e2 = vec![0u16; 2 * n];
            for j in 0..n {
                e2[j] = e[n + j];
                e2[n + j] = e[j];
            }
            out.terms.insert(e2, c.conj());
        }
        out
    }

    pub fn is_real(&self) -> bool {
        self.conjugate() == *self
    }

    /// Exact evaluation; conjugate slots receive the conjugated entries.
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.nvars, "point length mismatch");
        let conj_point: Vec<C> = point.iter().map(|c| c.conj()).collect();
        let mut acc = C::zero();
        for (e, c) in self.terms.iter() {
            let mut term = c.clone();
            for j in 0..self.nvars {
                term = term.mul(&pow_c(&point[j], e[j]));
                term = term.mul(&pow_c(&conj_point[j], e[self.nvars + j]));
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Replace one slot by a polynomial over the same roster.
    pub fn substitute(&self, index: usize, conjugated: bool, replacement: &Self) -> Self {
        assert_eq!(self.nvars, replacement.nvars, "variable roster mismatch");
        let slot = if conjugated { self.nvars + index } else { index };
        let mut out = Poly::zero(self.nvars);
        let mut powers: Vec<Poly<C>> = vec![Poly::one(self.nvars)];
        for (e, c) in self.terms.iter() {
            let k = e[slot] as usize;
            while powers.len() <= k {
                let next = powers.last().unwrap().mul(replacement);
                powers.push(next);
            }
            let mut e2 = e.clone();
            e2[slot] = 0;
            let mut mono = Poly::zero(self.nvars);
            mono.terms.insert(e2, c.clone());
            out = out.add(&mono.mul(&powers[k]));
        }
        out
    }

    /// Compose with a holomorphic map: holomorphic slot `j` becomes
    /// `components[j]`, conjugate slot `j` its conjugate. The components must
    /// be holomorphic (no conjugate slots) and share a roster of `out_nvars`
    /// variables.
    pub fn compose_holomorphic(&self, components: &[Poly<C>], out_nvars: usize) -> Self {
        assert_eq!(components.len(), self.nvars, "component count mismatch");
        for comp in components {
            assert_eq!(comp.nvars, out_nvars);
            debug_assert!(comp.is_holomorphic(), "map components must be holomorphic");
        }
        let conj_components: Vec<Poly<C>> = components.iter().map(|p| p.conjugate()).collect();
        let mut out = Poly::zero(out_nvars);
        for (e, c) in self.terms.iter() {
            let mut term = Poly::constant(c.clone(), out_nvars);
            for j in 0..self.nvars {
                if e[j] > 0 {
                    term = term.mul(&components[j].pow(e[j] as u32));
                }
                if e[self.nvars + j] > 0 {
                    term = term.mul(&conj_components[j].pow(e[self.nvars + j] as u32));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// True when no conjugate slot is used.
    pub fn is_holomorphic(&self) -> bool {
        self.terms
            .keys()
            .all(|e| e[self.nvars..].iter().all(|&k| k == 0))
    }

    /// Total degree (all slots count 1); zero polynomial reports 0.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as u32).sum())
            .max()
            .unwrap_or(0)
    }

    /// Smallest total degree among terms; None for the zero polynomial.
    pub fn min_total_degree(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as u32).sum())
            .min()
    }

    /// Weighted degree of a term where the distinguished variable (and its
    /// conjugate) weighs 2 and every other slot weighs 1.
    pub fn graded_term_degree(exps: &[u16], nvars: usize, distinguished: usize) -> u32 {
        let mut d = 0u32;
        for (slot, &k) in exps.iter().enumerate() {
            let var = if slot >= nvars { slot - nvars } else { slot };
            let w = if var == distinguished { 2 } else { 1 };
            d += w * k as u32;
        }
        d
    }

    /// Sub-polynomial of terms selected by a predicate on exponent vectors.
    pub fn filter_terms(&self, mut pred: impl FnMut(&[u16]) -> bool) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in self.terms.iter() {
            if pred(e) {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Terms of total degree strictly below `bound`.
    pub fn low_degree_part(&self, bound: u32) -> Self {
        self.filter_terms(|e| e.iter().map(|&k| k as u32).sum::<u32>() < bound)
    }

    /// Largest coefficient modulus, as f64.
    pub fn max_coeff_modulus(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.modulus_f64())
            .fold(0.0, f64::max)
    }
}

fn pow_c<C: Coeff>(c: &C, e: u16) -> C {
    let mut acc = C::one();
    for _ in 0..e {
        acc = acc.mul(c);
    }
    acc
}

impl PolarizedPoly {
    /// Convert to the float backend (nearest binary64 coefficients).
    pub fn to_float(&self) -> FloatPoly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in self.terms.iter() {
            let v = c.to_complex64();
            if v.re != 0.0 || v.im != 0.0 {
                out.terms.insert(e.clone(), v);
            }
        }
        out
    }

    /// Leading-term divisibility reduction by a single divisor: returns the
    /// remainder of `self` modulo `d` under the graded-lexicographic order.
    /// The remainder is zero exactly when `d` divides `self`.
    pub fn remainder_by(&self, d: &PolarizedPoly) -> PolarizedPoly {
        assert!(!d.is_zero(), "division by zero polynomial");
        assert_eq!(self.nvars, d.nvars);
        let lead = |p: &PolarizedPoly| -> (Exponents, GaussianRational) {
            let (e, c) = p
                .terms
                .iter()
                .max_by(|(ea, _), (eb, _)| grlex_cmp(ea, eb))
                .expect("nonzero polynomial");
            (e.clone(), c.clone())
        };
        let (de, dc) = lead(d);
        let mut r = self.clone();
        loop {
            if r.is_zero() {
                return r;
            }
            // Find the grlex-largest term of r divisible by lead(d).
            let candidate = r
                .terms
                .iter()
                .filter(|(e, _)| e.iter().zip(de.iter()).all(|(&a, &b)| a >= b))
                .max_by(|(ea, _), (eb, _)| grlex_cmp(ea, eb))
                .map(|(e, c)| (e.clone(), c.clone()));
            let Some((re, rc)) = candidate else {
                return r;
            };
            let qe: Exponents = re.iter().zip(de.iter()).map(|(&a, &b)| a - b).collect();
            let qc = &rc / &dc;
            let mut q = PolarizedPoly::zero(self.nvars);
            q.terms.insert(qe, qc);
            r = r.sub(&q.mul(d));
        }
    }
}

/// Graded-lexicographic comparison of exponent vectors.
pub fn grlex_cmp(a: &[u16], b: &[u16]) -> std::cmp::Ordering {
    let da: u32 = a.iter().map(|&k| k as u32).sum();
    let db: u32 = b.iter().map(|&k| k as u32).sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

impl fmt::Display for PolarizedPoly {
    /// Canonical text form, re-parseable by the expression grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&default_names(self.nvars)))
    }
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("x{j}")).collect()
}

impl PolarizedPoly {
    /// Render with explicit variable names, in deterministic term order.
    pub fn render(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.nvars);
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        let mut entries: Vec<(&Exponents, &GaussianRational)> = self.terms.iter().collect();
        entries.sort_by(|(ea, _), (eb, _)| grlex_cmp(ea, eb).then(ea.cmp(eb)));
        for (idx, (e, c)) in entries.into_iter().enumerate() {
            let mut factors: Vec<String> = Vec::new();
            for j in 0..self.nvars {
                if e[j] > 0 {
                    factors.push(if e[j] == 1 {
                        names[j].clone()
                    } else {
                        format!("{}^{}", names[j], e[j])
                    });
                }
            }
            for j in 0..self.nvars {
                if e[self.nvars + j] > 0 {
                    let base = format!("conj({})", names[j]);
                    factors.push(if e[self.nvars + j] == 1 {
                        base
                    } else {
                        format!("{}^{}", base, e[self.nvars + j])
                    });
                }
            }
            let coeff_str = if factors.is_empty() {
                // Constant term: always print the coefficient.
                if c.is_real() || c.re.is_zero() {
                    c.to_string()
                } else {
                    format!("({c})")
                }
            } else if *c == GaussianRational::one() {
                String::new()
            } else if *c == GaussianRational::from_int(-1) {
                "-".to_string()
            } else if c.is_real() || c.re.is_zero() {
                format!("{c}*")
            } else {
                format!("({c})*")
            };
            let term = format!("{}{}", coeff_str, factors.join("*"));
            if idx == 0 {
                out.push_str(&term);
            } else if let Some(stripped) = term.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(&term);
            }
        }
        out
    }
}
