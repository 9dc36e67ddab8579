//! Polynomial differential forms over the `2M` chart coordinates, the exterior
//! derivative and the radial (Poincaré) homotopy.
//!
//! A two-form is stored as the full antisymmetric matrix `w_{ab}`, with
//! `w = Σ_{a<b} w_{ab} dz^a ∧ dz^b`.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::poly::{Basis, Monomial, PhasePoly};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyOneForm {
    comps: Vec<PhasePoly>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyTwoForm {
    n: usize,
    comps: Vec<PhasePoly>,
}

/// Components `(dw)_{abc}` for `a < b < c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyThreeForm {
    pub comps: Vec<([usize; 3], PhasePoly)>,
}

impl PolyThreeForm {
    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|(_, p)| p.is_zero())
    }

    pub fn first_nonzero(&self) -> Option<&([usize; 3], PhasePoly)> {
        self.comps.iter().find(|(_, p)| !p.is_zero())
    }
}

impl PolyOneForm {
    pub fn new(comps: Vec<PhasePoly>) -> Self {
        assert!(!comps.is_empty());
        let (d, b) = (comps[0].dim(), comps[0].basis());
        assert!(comps.len() == 2 * d && comps.iter().all(|c| c.dim() == d && c.basis() == b));
        PolyOneForm { comps }
    }

    pub fn zero(dim: usize, basis: Basis) -> Self {
        PolyOneForm {
            comps: vec![PhasePoly::zero(dim, basis); 2 * dim],
        }
    }

    /// `dγ`.
    pub fn exact(gamma: &PhasePoly) -> Self {
        PolyOneForm {
            comps: (0..gamma.nvars()).map(|a| gamma.derivative(a)).collect(),
        }
    }

    pub fn comps(&self) -> &[PhasePoly] {
        &self.comps
    }

    pub fn get(&self, a: usize) -> &PhasePoly {
        &self.comps[a]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(PhasePoly::is_zero)
    }

    /// `(dθ)_{ab} = ∂_a θ_b − ∂_b θ_a`.
    pub fn exterior_derivative(&self) -> PolyTwoForm {
        let n = self.comps.len();
        let (d, b) = (self.comps[0].dim(), self.comps[0].basis());
        let mut w = PolyTwoForm::zero(d, b);
        for a in 0..n {
            for c in (a + 1)..n {
                let v = &self.comps[c].derivative(a) - &self.comps[a].derivative(c);
                w.set(a, c, v);
            }
        }
        w
    }
}

impl PolyTwoForm {
    pub fn zero(dim: usize, basis: Basis) -> Self {
        let n = 2 * dim;
        PolyTwoForm {
            n,
            comps: vec![PhasePoly::zero(dim, basis); n * n],
        }
    }

    /// Builds a form from the upper-triangular components `w_{ab}`, `a < b`.
    pub fn from_upper<F>(dim: usize, basis: Basis, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> PhasePoly,
    {
        let mut w = Self::zero(dim, basis);
        for a in 0..w.n {
            for b in (a + 1)..w.n {
                w.set(a, b, f(a, b));
            }
        }
        w
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> &PhasePoly {
        &self.comps[a * self.n + b]
    }

    /// Sets `w_{ab} = v` and `w_{ba} = −v`.
    pub fn set(&mut self, a: usize, b: usize, v: PhasePoly) {
        assert_ne!(a, b, "diagonal of a two-form is zero");
        self.comps[b * self.n + a] = -&v;
        self.comps[a * self.n + b] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(PhasePoly::is_zero)
    }

    /// `(dw)_{abc} = ∂_a w_{bc} + ∂_b w_{ca} + ∂_c w_{ab}` for `a < b < c`.
    pub fn exterior_derivative(&self) -> PolyThreeForm {
        let n = self.n;
        let mut comps = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let v = &(&self.get(b, c).derivative(a) + &self.get(c, a).derivative(b))
                        + &self.get(a, b).derivative(c);
                    comps.push(([a, b, c], v));
                }
            }
        }
        PolyThreeForm { comps }
    }
}

/// Radial homotopy at the origin: `θ_b = Σ_a ∫_0^1 t z^a w_{ab}(tz) dt`.
/// A degree-`d` monomial in `w_{ab}` picks up the factor `1/(d+2)`. For a
/// closed `w` the result satisfies `dθ = w` exactly.
pub fn poincare_homotopy(w: &PolyTwoForm) -> Result<PolyOneForm> {
    let dw = w.exterior_derivative();
    if let Some((idx, r)) = dw.first_nonzero() {
        return Err(Error::NotClosed {
            index: *idx,
            residual: r.to_string(),
        });
    }
    let n = w.size();
    let (dim, basis) = (w.comps[0].dim(), w.comps[0].basis());
    let mut theta = vec![PhasePoly::zero(dim, basis); n];
    for (b, tb) in theta.iter_mut().enumerate() {
        for a in 0..n {
            let wab = w.get(a, b);
            if wab.is_zero() {
                continue;
            }
            let za = Monomial::var(n, a);
            for (m, c) in wab.terms() {
                let k = BigRational::new(BigInt::from(1), BigInt::from(m.degree() + 2));
                tb.add_term(m.mul(&za), c * crate::scalar::real(k));
            }
        }
    }
    Ok(PolyOneForm { comps: theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gr, int};

    fn z(k: usize) -> PhasePoly {
        PhasePoly::var(1, Basis::Chart, k)
    }

    #[test]
    fn constant_form_primitive() {
        let w = PolyTwoForm::from_upper(1, Basis::Chart, |_, _| PhasePoly::one(1, Basis::Chart));
        let theta = poincare_homotopy(&w).unwrap();
        assert_eq!(theta.get(0), &z(1).scale(&gr(-1, 2)));
        assert_eq!(theta.get(1), &z(0).scale(&gr(1, 2)));
        assert_eq!(theta.exterior_derivative(), w);
    }

    #[test]
    fn d_squared_vanishes() {
        let zz = |k| PhasePoly::var(2, Basis::Chart, k);
        let theta = PolyOneForm::new(vec![
            &zz(1).pow(3) * &zz(2),
            &zz(0) * &zz(3).pow(2),
            zz(2).pow(4),
            &(&zz(0) * &zz(1)) * &zz(2),
        ]);
        assert!(theta.exterior_derivative().exterior_derivative().is_zero());
        assert!(PolyOneForm::exact(&(&zz(0).pow(2) * &zz(3))).exterior_derivative().is_zero());
    }

    #[test]
    fn homotopy_inverts_d_in_four_dimensions() {
        let zz = |k| PhasePoly::var(2, Basis::Chart, k);
        let theta = PolyOneForm::new(vec![
            &zz(1).pow(2) * &zz(3),
            zz(0).scale(&int(5)),
            &zz(2) * &zz(3),
            &zz(0).pow(3) + &zz(1),
        ]);
        let w = theta.exterior_derivative();
        let prim = poincare_homotopy(&w).unwrap();
        assert_eq!(prim.exterior_derivative(), w);
    }

    #[test]
    fn non_closed_form_is_rejected() {
        let zz = |k| PhasePoly::var(2, Basis::Chart, k);
        let mut w = PolyTwoForm::zero(2, Basis::Chart);
        w.set(0, 1, zz(2));
        assert!(matches!(poincare_homotopy(&w), Err(Error::NotClosed { index: [0, 1, 2], .. })));
    }
}
