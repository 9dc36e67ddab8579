//! Sparse multivariate polynomials over the Gaussian rationals.
//!
//! A [`PhasePoly`] lives on a `2M`-dimensional phase space. The basis tag says
//! which variables the exponent vector refers to:
//!
//! * `Ambient`: `x1..xM, p1..pM`
//! * `Chart`: `z1..z2M`, Darboux coordinates of some chart
//! * `Ladder`: the scaled ladder pair `b1..bM, b̄1..b̄M` (see [`crate::ladder`])
//!
//! Terms are kept in a `BTreeMap` under graded-lexicographic order, so the
//! term order (and therefore every serialization) is canonical.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{falling_factorial, format_gaussian, real, to_c64, GaussianRational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Ambient,
    Chart,
    Ladder,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Ambient => "ambient",
            Basis::Chart => "chart",
            Basis::Ladder => "ladder",
        })
    }
}

impl Basis {
    /// Name of variable `k` in a `2m`-variable basis.
    pub fn var_name(self, m: usize, k: usize) -> String {
        match self {
            Basis::Ambient if k < m => format!("x{}", k + 1),
            Basis::Ambient => format!("p{}", k - m + 1),
            Basis::Chart => format!("z{}", k + 1),
            Basis::Ladder if k < m => format!("b{}", k + 1),
            Basis::Ladder => format!("b̄{}", k - m + 1),
        }
    }
}

/// Exponent vector; its length is the number of phase-space variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Monomial(e)
    }

    pub fn from_exponents(e: Vec<u32>) -> Self {
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePoly {
    dim: usize,
    basis: Basis,
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl PhasePoly {
    pub fn zero(dim: usize, basis: Basis) -> Self {
        PhasePoly {
            dim,
            basis,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, basis: Basis, c: GaussianRational) -> Self {
        let mut p = Self::zero(dim, basis);
        p.add_term(Monomial::one(2 * dim), c);
        p
    }

    pub fn one(dim: usize, basis: Basis) -> Self {
        Self::constant(dim, basis, GaussianRational::one())
    }

    /// The coordinate function of variable `k` (`0 <= k < 2M`).
    pub fn var(dim: usize, basis: Basis, k: usize) -> Self {
        assert!(k < 2 * dim, "variable index {k} out of range for M={dim}");
        let mut p = Self::zero(dim, basis);
        p.add_term(Monomial::var(2 * dim, k), GaussianRational::one());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// duplicates and dropping zeros.
    pub fn from_terms<I>(dim: usize, basis: Basis, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, GaussianRational)>,
    {
        let mut p = Self::zero(dim, basis);
        for (e, c) in terms {
            assert_eq!(e.len(), 2 * dim, "exponent vector length must be 2M");
            p.add_term(Monomial(e), c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nvars(&self) -> usize {
        2 * self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> GaussianRational {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    /// Constant term.
    pub fn constant_term(&self) -> GaussianRational {
        self.coeff(&vec![0; self.nvars()])
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn add_term(&mut self, m: Monomial, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn check_compatible(&self, other: &PhasePoly) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(self.basis, other.basis));
        }
        Ok(())
    }

    fn assert_compatible(&self, other: &PhasePoly) {
        if let Err(e) = self.check_compatible(other) {
            panic!("incompatible polynomials: {e}");
        }
    }

    /// Same terms, different basis tag. Used when a coordinate change is the
    /// identity map on exponent vectors.
    pub fn relabel(&self, basis: Basis) -> PhasePoly {
        PhasePoly {
            dim: self.dim,
            basis,
            terms: self.terms.clone(),
        }
    }

    pub fn scale(&self, c: &GaussianRational) -> PhasePoly {
        if c.is_zero() {
            return PhasePoly::zero(self.dim, self.basis);
        }
        PhasePoly {
            dim: self.dim,
            basis: self.basis,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn scale_rational(&self, r: &BigRational) -> PhasePoly {
        self.scale(&real(r.clone()))
    }

    pub fn map_coeffs<F>(&self, f: F) -> PhasePoly
    where
        F: Fn(&Monomial, &GaussianRational) -> GaussianRational,
    {
        let mut p = PhasePoly::zero(self.dim, self.basis);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), f(m, c));
        }
        p
    }

    /// Keeps only the terms selected by `keep`.
    pub fn filter<F>(&self, keep: F) -> PhasePoly
    where
        F: Fn(&Monomial) -> bool,
    {
        PhasePoly {
            dim: self.dim,
            basis: self.basis,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Complex conjugation of coefficients only (variables untouched).
    pub fn conj_coeffs(&self) -> PhasePoly {
        self.map_coeffs(|_, c| c.conj())
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im.is_zero())
    }

    pub fn real_part(&self) -> PhasePoly {
        self.map_coeffs(|_, c| real(c.re.clone()))
    }

    pub fn imag_part(&self) -> PhasePoly {
        self.map_coeffs(|_, c| real(c.im.clone()))
    }

    pub fn pow(&self, n: u32) -> PhasePoly {
        let mut acc = PhasePoly::one(self.dim, self.basis);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Partial derivative with respect to variable `k`.
    pub fn derivative(&self, k: usize) -> PhasePoly {
        let mut alpha = vec![0; self.nvars()];
        alpha[k] = 1;
        self.derivative_multi(&alpha)
    }

    /// Mixed partial derivative `∂^alpha`.
    pub fn derivative_multi(&self, alpha: &[u32]) -> PhasePoly {
        debug_assert_eq!(alpha.len(), self.nvars());
        let mut out = PhasePoly::zero(self.dim, self.basis);
        for (m, c) in &self.terms {
            if !m.0.iter().zip(alpha).all(|(e, a)| e >= a) {
                continue;
            }
            let factor: BigInt = m
                .0
                .iter()
                .zip(alpha)
                .map(|(&e, &a)| falling_factorial(e, a))
                .product();
            let e: Vec<u32> = m.0.iter().zip(alpha).map(|(e, a)| e - a).collect();
            out.add_term(
                Monomial(e),
                c * real(BigRational::from_integer(factor)),
            );
        }
        out
    }

    /// Substitutes `images[k]` for variable `k`. All images must share a
    /// dimension and basis; the result lives in that basis.
    pub fn substitute(&self, images: &[PhasePoly]) -> PhasePoly {
        assert_eq!(images.len(), self.nvars(), "need one image per variable");
        let target = &images[0];
        for im in images {
            target.assert_compatible(im);
        }
        let (tdim, tbasis) = (target.dim, target.basis);
        let max_exp: Vec<u32> = (0..self.nvars())
            .map(|k| self.terms.keys().map(|m| m.0[k]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<PhasePoly>> = images
            .iter()
            .zip(&max_exp)
            .map(|(im, &mx)| {
                let mut v = vec![PhasePoly::one(tdim, tbasis)];
                for _ in 0..mx {
                    let next = v.last().unwrap() * im;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = PhasePoly::zero(tdim, tbasis);
        for (m, c) in &self.terms {
            let mut t = PhasePoly::constant(tdim, tbasis, c.clone());
            for (k, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = &t * &powers[k][e as usize];
                }
            }
            out += &t;
        }
        out
    }

    /// Floating-point evaluation at a complex point.
    pub fn eval_c64(&self, point: &[Complex64]) -> Complex64 {
        assert_eq!(point.len(), self.nvars());
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = to_c64(c);
                for (k, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        v *= point[k].powu(e);
                    }
                }
                v
            })
            .sum()
    }

    pub fn eval_f64(&self, point: &[f64]) -> Complex64 {
        let pt: Vec<Complex64> = point.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval_c64(&pt)
    }

    /// Exact quotient `self / divisor` when it exists in the polynomial ring.
    pub fn div_exact(&self, divisor: &PhasePoly) -> Option<PhasePoly> {
        self.assert_compatible(divisor);
        let (lead_m, lead_c) = divisor.terms.iter().next_back()?;
        let mut rem = self.clone();
        let mut quot = PhasePoly::zero(self.dim, self.basis);
        while let Some((m, c)) = rem.terms.iter().next_back() {
            if !lead_m.divides(m) {
                return None;
            }
            let qm = m.div(lead_m);
            let qc = c / lead_c;
            let mut t = PhasePoly::zero(self.dim, self.basis);
            t.add_term(qm, qc);
            rem -= &(&t * divisor);
            quot += &t;
        }
        Some(quot)
    }
}

impl AddAssign<&PhasePoly> for PhasePoly {
    fn add_assign(&mut self, rhs: &PhasePoly) {
        self.assert_compatible(rhs);
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&PhasePoly> for PhasePoly {
    fn sub_assign(&mut self, rhs: &PhasePoly) {
        self.assert_compatible(rhs);
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add for &PhasePoly {
    type Output = PhasePoly;
    fn add(self, rhs: &PhasePoly) -> PhasePoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &PhasePoly {
    type Output = PhasePoly;
    fn sub(self, rhs: &PhasePoly) -> PhasePoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &PhasePoly {
    type Output = PhasePoly;
    fn neg(self) -> PhasePoly {
        self.map_coeffs(|_, c| -c.clone())
    }
}

impl Mul for &PhasePoly {
    type Output = PhasePoly;
    fn mul(self, rhs: &PhasePoly) -> PhasePoly {
        self.assert_compatible(rhs);
        let mut out = PhasePoly::zero(self.dim, self.basis);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for PhasePoly {
    /// Readable form, highest-degree terms first. Not the canonical
    /// serialization; see [`crate::io`] for that.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(k, &e)| {
                    let name = self.basis.var_name(self.dim, k);
                    if e == 1 {
                        name
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            if vars.is_empty() {
                f.write_str(&format_gaussian(c))?;
            } else if c.is_one() {
                f.write_str(&vars.join("*"))?;
            } else {
                write!(f, "{}*{}", format_gaussian(c), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gr, int};

    fn x() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 0)
    }
    fn p() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 1)
    }

    #[test]
    fn graded_lex_order() {
        let a = Monomial(vec![2, 0]);
        let b = Monomial(vec![0, 1]);
        let c = Monomial(vec![1, 1]);
        assert!(b < a);
        assert!(c < a);
        assert!(c > b);
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let s = &(&x() + &p()) - &x();
        assert_eq!(s, p());
        assert_eq!((&x() - &x()).num_terms(), 0);
    }

    #[test]
    fn derivatives() {
        let f = &x().pow(3) * &p().pow(2);
        let d = f.derivative_multi(&[2, 1]);
        assert_eq!(d, &x().scale(&int(12)) * &p());
        assert!(f.derivative_multi(&[4, 0]).is_zero());
    }

    #[test]
    fn substitution_composes() {
        // f(x, p) = x p evaluated at (x, p + x^2)
        let f = &x() * &p();
        let g = f.substitute(&[x(), &p() + &x().pow(2)]);
        assert_eq!(g, &(&x() * &p()) + &x().pow(3));
    }

    #[test]
    fn exact_division() {
        let a = &x() + &PhasePoly::one(1, Basis::Ambient);
        let b = &x() - &p();
        let prod = &a * &b;
        assert_eq!(prod.div_exact(&a).unwrap(), b);
        assert!(prod.div_exact(&x()).is_none());
        let half = PhasePoly::constant(1, Basis::Ambient, gr(1, 2));
        assert_eq!(x().div_exact(&half).unwrap(), x().scale(&int(2)));
    }

    #[test]
    #[should_panic]
    fn mixing_bases_panics() {
        let _ = &x() + &PhasePoly::var(1, Basis::Chart, 0);
    }

    #[test]
    fn display_is_readable() {
        let f = &x().pow(2).scale(&gr(1, 2)) + &p();
        assert_eq!(f.to_string(), "1/2*x1^2 + p1");
    }
}
