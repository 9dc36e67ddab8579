//! Truncated power series in ℏ with polynomial coefficients.

use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::poly::{Basis, PhasePoly};
use crate::scalar::GaussianRational;

/// `Σ_{k=0}^{T} ℏ^k c_k`; everything at order `T+1` and beyond is discarded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HbarSeries {
    dim: usize,
    basis: Basis,
    coeffs: Vec<PhasePoly>,
}

impl HbarSeries {
    pub fn zero(dim: usize, basis: Basis, order: usize) -> Self {
        HbarSeries {
            dim,
            basis,
            coeffs: vec![PhasePoly::zero(dim, basis); order + 1],
        }
    }

    /// `p` as an ℏ-independent series.
    pub fn from_poly(p: PhasePoly, order: usize) -> Self {
        let mut s = Self::zero(p.dim(), p.basis(), order);
        s.coeffs[0] = p;
        s
    }

    /// Coefficients beyond `order` are dropped; missing ones are zero.
    pub fn from_coeffs(dim: usize, basis: Basis, coeffs: Vec<PhasePoly>, order: usize) -> Self {
        let mut s = Self::zero(dim, basis, order);
        for (k, c) in coeffs.into_iter().enumerate().take(order + 1) {
            assert!(c.dim() == dim && c.basis() == basis);
            s.coeffs[k] = c;
        }
        s
    }

    /// `c ℏ^k`.
    pub fn hbar_power(dim: usize, basis: Basis, k: usize, c: GaussianRational, order: usize) -> Self {
        let mut s = Self::zero(dim, basis, order);
        if k <= order {
            s.coeffs[k] = PhasePoly::constant(dim, basis, c);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Truncation order `T`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[PhasePoly] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &PhasePoly {
        &self.coeffs[k]
    }

    pub fn coeff_or_zero(&self, k: usize) -> PhasePoly {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| PhasePoly::zero(self.dim, self.basis))
    }

    /// Principal symbol `πA`.
    pub fn principal(&self) -> &PhasePoly {
        &self.coeffs[0]
    }

    pub fn set_coeff(&mut self, k: usize, p: PhasePoly) {
        assert!(p.dim() == self.dim && p.basis() == self.basis);
        if k <= self.order() {
            self.coeffs[k] = p;
        }
    }

    /// Adds `ℏ^k p`; silently ignored past the truncation order.
    pub fn add_at(&mut self, k: usize, p: &PhasePoly) {
        if k <= self.order() {
            self.coeffs[k] += p;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(PhasePoly::is_zero)
    }

    /// Smallest ℏ power with a nonzero coefficient.
    pub fn first_nonzero_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(PhasePoly::is_zero)
    }

    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(PhasePoly::is_zero)
    }

    pub fn truncate(&self, order: usize) -> HbarSeries {
        HbarSeries::from_coeffs(self.dim, self.basis, self.coeffs.clone(), order)
    }

    pub fn map<F>(&self, f: F) -> HbarSeries
    where
        F: Fn(&PhasePoly) -> PhasePoly,
    {
        let coeffs: Vec<PhasePoly> = self.coeffs.iter().map(f).collect();
        let (dim, basis) = (coeffs[0].dim(), coeffs[0].basis());
        HbarSeries { dim, basis, coeffs }
    }

    /// Multiplication by `ℏ^k` (truncating).
    pub fn shift(&self, k: usize) -> HbarSeries {
        let mut s = Self::zero(self.dim, self.basis, self.order());
        for (j, c) in self.coeffs.iter().enumerate() {
            if j + k <= self.order() {
                s.coeffs[j + k] = c.clone();
            }
        }
        s
    }

    pub fn check_compatible(&self, other: &HbarSeries) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(self.basis, other.basis));
        }
        if self.order() != other.order() {
            return Err(Error::TruncationMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    pub fn scale(&self, c: &GaussianRational) -> HbarSeries {
        self.map(|p| p.scale(c))
    }

    /// Complex conjugation of every coefficient.
    pub fn conj_coeffs(&self) -> HbarSeries {
        self.map(PhasePoly::conj_coeffs)
    }
}

/// Exact sum.
pub fn series_add(a: &HbarSeries, b: &HbarSeries) -> Result<HbarSeries> {
    a.check_compatible(b)?;
    Ok(HbarSeries {
        dim: a.dim,
        basis: a.basis,
        coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
    })
}

/// Scalar multiple.
pub fn series_scale(a: &HbarSeries, c: &GaussianRational) -> HbarSeries {
    a.scale(c)
}

/// Truncated Cauchy product with the pointwise (commutative) product.
pub fn series_mul(a: &HbarSeries, b: &HbarSeries) -> Result<HbarSeries> {
    a.check_compatible(b)?;
    let order = a.order();
    let mut out = HbarSeries::zero(a.dim, a.basis, order);
    for (i, ai) in a.coeffs.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.coeffs.iter().enumerate().take(order + 1 - i) {
            if !bj.is_zero() {
                out.coeffs[i + j] += &(ai * bj);
            }
        }
    }
    Ok(out)
}

impl Add for &HbarSeries {
    type Output = HbarSeries;
    fn add(self, rhs: &HbarSeries) -> HbarSeries {
        series_add(self, rhs).expect("incompatible series")
    }
}

impl Sub for &HbarSeries {
    type Output = HbarSeries;
    fn sub(self, rhs: &HbarSeries) -> HbarSeries {
        self.check_compatible(rhs).expect("incompatible series");
        HbarSeries {
            dim: self.dim,
            basis: self.basis,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(x, y)| x - y)
                .collect(),
        }
    }
}

impl Neg for &HbarSeries {
    type Output = HbarSeries;
    fn neg(self) -> HbarSeries {
        self.map(|p| -p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gr, imag_unit, int};

    fn x() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 0)
    }
    fn p() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 1)
    }
    fn one() -> PhasePoly {
        PhasePoly::one(1, Basis::Ambient)
    }

    #[test]
    fn cauchy_product() {
        let a = HbarSeries::from_coeffs(1, Basis::Ambient, vec![one(), x()], 2);
        let b = HbarSeries::from_coeffs(1, Basis::Ambient, vec![one(), -&x()], 2);
        let prod = series_mul(&a, &b).unwrap();
        let expect = HbarSeries::from_coeffs(
            1,
            Basis::Ambient,
            vec![one(), PhasePoly::zero(1, Basis::Ambient), -&x().pow(2)],
            2,
        );
        assert_eq!(prod, expect);
    }

    #[test]
    fn truncation_discards_high_orders() {
        let h2 = HbarSeries::hbar_power(1, Basis::Ambient, 2, int(1), 3);
        assert!(series_mul(&h2, &h2).unwrap().is_zero());
    }

    #[test]
    fn scaling_by_i() {
        let s = HbarSeries::from_coeffs(1, Basis::Ambient, vec![x(), p()], 3);
        let t = series_scale(&s, &imag_unit());
        assert_eq!(t.coeff(0), &x().scale(&imag_unit()));
        assert_eq!(t.coeff(1), &p().scale(&imag_unit()));
    }

    #[test]
    fn parity_and_orders() {
        let s = HbarSeries::from_coeffs(
            1,
            Basis::Ambient,
            vec![PhasePoly::zero(1, Basis::Ambient), PhasePoly::zero(1, Basis::Ambient), x()],
            4,
        );
        assert!(s.is_even());
        assert_eq!(s.first_nonzero_order(), Some(2));
        assert_eq!(s.shift(1).first_nonzero_order(), Some(3));
        assert!(s.shift(1).is_odd());
        assert_eq!(s.shift(3).first_nonzero_order(), None);
        let half = s.scale(&gr(1, 2));
        assert_eq!(&half + &half, s);
    }

    #[test]
    fn mismatched_truncation_is_an_error() {
        let a = HbarSeries::zero(1, Basis::Ambient, 2);
        let b = HbarSeries::zero(1, Basis::Ambient, 3);
        assert!(matches!(series_add(&a, &b), Err(Error::TruncationMismatch(2, 3))));
    }
}
