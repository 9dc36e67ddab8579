//! Polynomials in the `M` action variables `I1..IM`.
//!
//! These carry the functions `f^i` with `h^i = f^i ∘ I`, the second-order
//! corrections `F^i_2`, and the frequency matrix entries.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::poly::{Monomial, PhasePoly};
use crate::scalar::{format_gaussian, real, to_c64, GaussianRational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionPoly {
    dim: usize,
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl ActionPoly {
    pub fn zero(dim: usize) -> Self {
        ActionPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: GaussianRational) -> Self {
        let mut a = Self::zero(dim);
        a.add_term(vec![0; dim], c);
        a
    }

    /// The action variable `I_{i+1}`.
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        let mut a = Self::zero(dim);
        a.add_term(e, GaussianRational::one());
        a
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, GaussianRational)>,
    {
        let mut a = Self::zero(dim);
        for (e, c) in terms {
            a.add_term(e, c);
        }
        a
    }

    pub fn add_term(&mut self, e: Vec<u32>, c: GaussianRational) {
        assert_eq!(e.len(), self.dim);
        if c.is_zero() {
            return;
        }
        let m = Monomial::from_exponents(e);
        let entry = self.terms.entry(m.clone()).or_insert_with(GaussianRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im.is_zero())
    }

    pub fn scale(&self, c: &GaussianRational) -> ActionPoly {
        ActionPoly::from_terms(
            self.dim,
            self.terms
                .iter()
                .map(|(m, v)| (m.exponents().to_vec(), v * c)),
        )
    }

    /// `∂f/∂I_j`.
    pub fn derivative(&self, j: usize) -> ActionPoly {
        ActionPoly::from_terms(
            self.dim,
            self.terms.iter().filter(|(m, _)| m.exponents()[j] > 0).map(|(m, c)| {
                let mut e = m.exponents().to_vec();
                let k = e[j];
                e[j] -= 1;
                (e, c * real(BigRational::from_integer(BigInt::from(k))))
            }),
        )
    }

    pub fn eval_c64(&self, point: &[f64]) -> Complex64 {
        assert_eq!(point.len(), self.dim);
        self.terms
            .iter()
            .map(|(m, c)| {
                let mono: f64 = m
                    .exponents()
                    .iter()
                    .zip(point)
                    .map(|(&e, &v)| v.powi(e as i32))
                    .product();
                to_c64(c) * mono
            })
            .sum()
    }

    /// Real part of the value at `point`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.eval_c64(point).re
    }

    /// `f ∘ images`, substituting a phase-space polynomial for each action.
    pub fn compose(&self, images: &[PhasePoly]) -> PhasePoly {
        assert_eq!(images.len(), self.dim);
        let (pd, pb) = (images[0].dim(), images[0].basis());
        let mut out = PhasePoly::zero(pd, pb);
        let mut powers: Vec<Vec<PhasePoly>> =
            images.iter().map(|_| vec![PhasePoly::one(pd, pb)]).collect();
        for (m, c) in &self.terms {
            let mut t = PhasePoly::constant(pd, pb, c.clone());
            for (i, &e) in m.exponents().iter().enumerate() {
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap() * &images[i];
                    powers[i].push(next);
                }
                if e > 0 {
                    t = &t * &powers[i][e as usize];
                }
            }
            out += &t;
        }
        out
    }

    pub fn pow(&self, n: u32) -> ActionPoly {
        (0..n).fold(ActionPoly::constant(self.dim, GaussianRational::one()), |acc, _| {
            &acc * self
        })
    }
}

impl Add for &ActionPoly {
    type Output = ActionPoly;
    fn add(self, rhs: &ActionPoly) -> ActionPoly {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.exponents().to_vec(), c.clone());
        }
        out
    }
}

impl Neg for &ActionPoly {
    type Output = ActionPoly;
    fn neg(self) -> ActionPoly {
        self.scale(&-GaussianRational::one())
    }
}

impl Sub for &ActionPoly {
    type Output = ActionPoly;
    fn sub(self, rhs: &ActionPoly) -> ActionPoly {
        self + &(-rhs)
    }
}

impl Mul for &ActionPoly {
    type Output = ActionPoly;
    fn mul(self, rhs: &ActionPoly) -> ActionPoly {
        assert_eq!(self.dim, rhs.dim);
        let mut out = ActionPoly::zero(self.dim);
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(a.mul(b).exponents().to_vec(), ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for ActionPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| {
                let vars: Vec<String> = m
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        if e == 1 {
                            format!("I{}", i + 1)
                        } else {
                            format!("I{}^{}", i + 1, e)
                        }
                    })
                    .collect();
                match (vars.is_empty(), c.is_one()) {
                    (true, _) => format_gaussian(c),
                    (false, true) => vars.join("*"),
                    (false, false) => format!("{}*{}", format_gaussian(c), vars.join("*")),
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}
