//! Ladder variables, charge grading and angle averages.
//!
//! The ladder basis stores polynomials in the *scaled* pair
//! `b^i = z^i + s·i·z^{i+M}`, `b̄^i = z^i − s·i·z^{i+M}` where `s = ±1` is the
//! ladder sign. The normalized ladder symbols are `a = b/√2`, so a monomial
//! `b^k b̄^l` equals `(√2)^{k+l} a^k ā^l`: the power of `√2` is the monomial
//! degree and never needs to be stored, and every coefficient stays rational.
//!
//! Charge `q_i = deg_{b^i} − deg_{b̄^i}`. Since `{b^k b̄^l, I} = −s·i(k−l) b^k b̄^l`,
//! the charge-0 part of a polynomial is its angle average.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::action::ActionPoly;
use crate::chart::DarbouxChart;
use crate::error::{Error, Result};
use crate::poly::{Basis, Monomial, PhasePoly};
use crate::scalar::{gr, imag_unit, real, GaussianRational};

/// Sign convention for `A^i = (Z^i + s·i·Z^{i+M})/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderSign {
    /// `A = (Z + iZ')/√2`
    Plus,
    /// `A = (Z − iZ')/√2`
    Minus,
}

impl LadderSign {
    pub fn as_i64(self) -> i64 {
        match self {
            LadderSign::Plus => 1,
            LadderSign::Minus => -1,
        }
    }

    pub fn flipped(self) -> LadderSign {
        match self {
            LadderSign::Plus => LadderSign::Minus,
            LadderSign::Minus => LadderSign::Plus,
        }
    }
}

/// The sign used by the ladder basis and the number-symbol pipeline. It is the
/// one for which `Ā ⋆ A = I − ℏ/2` on the harmonic chart, which makes `N/ℏ`
/// have the spectrum `{0, 1, 2, …}` under Weyl quantization;
/// [`crate::number::pin_ladder_sign`] recomputes it from scratch.
pub const PINNED_LADDER_SIGN: LadderSign = LadderSign::Plus;

/// `{b, b̄}` for the pinned sign: `−2 s i`.
pub fn ladder_bracket() -> GaussianRational {
    imag_unit().scale(BigRational::from_integer(BigInt::from(-2 * PINNED_LADDER_SIGN.as_i64())))
}

/// Images of the chart coordinates in the ladder basis:
/// `z^i = (b + b̄)/2`, `z^{i+M} = −(s i/2)(b − b̄)`.
pub fn chart_to_ladder_images(dim: usize) -> Vec<PhasePoly> {
    let s = PINNED_LADDER_SIGN.as_i64();
    let b = |i| PhasePoly::var(dim, Basis::Ladder, i);
    let mut out = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        out.push((&b(i) + &b(i + dim)).scale(&gr(1, 2)));
    }
    let coeff = imag_unit().scale(BigRational::new(BigInt::from(-s), BigInt::from(2)));
    for i in 0..dim {
        out.push((&b(i) - &b(i + dim)).scale(&coeff));
    }
    out
}

/// Images of `b^i, b̄^i` in terms of the chart coordinates.
pub fn ladder_to_chart_images(dim: usize) -> Vec<PhasePoly> {
    let si = imag_unit().scale(BigRational::from_integer(BigInt::from(PINNED_LADDER_SIGN.as_i64())));
    let z = |i| PhasePoly::var(dim, Basis::Chart, i);
    let mut out = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        out.push(&z(i) + &z(i + dim).scale(&si));
    }
    for i in 0..dim {
        out.push(&z(i) - &z(i + dim).scale(&si));
    }
    out
}

/// Ambient polynomial → ladder basis through the chart inverse.
pub fn to_ladder(f: &PhasePoly, chart: &DarbouxChart) -> Result<PhasePoly> {
    let in_chart = chart.to_chart_basis(f)?;
    Ok(in_chart.substitute(&chart_to_ladder_images(f.dim())))
}

/// Ladder polynomial → ambient basis through the chart.
pub fn from_ladder(g: &PhasePoly, chart: &DarbouxChart) -> Result<PhasePoly> {
    require_ladder(g)?;
    let in_chart = g.substitute(&ladder_to_chart_images(g.dim()));
    chart.to_ambient_basis(&in_chart)
}

pub fn require_ladder(f: &PhasePoly) -> Result<()> {
    if f.basis() != Basis::Ladder {
        return Err(Error::WrongBasis {
            expected: Basis::Ladder,
            found: f.basis(),
        });
    }
    Ok(())
}

/// Charge vector of a ladder monomial.
pub fn charge(m: &Monomial, dim: usize) -> Vec<i64> {
    let e = m.exponents();
    (0..dim).map(|i| e[i] as i64 - e[i + dim] as i64).collect()
}

/// Splits a ladder polynomial by charge.
pub fn charge_components(f: &PhasePoly) -> Result<BTreeMap<Vec<i64>, PhasePoly>> {
    require_ladder(f)?;
    let mut out: BTreeMap<Vec<i64>, PhasePoly> = BTreeMap::new();
    for (m, c) in f.terms() {
        out.entry(charge(m, f.dim()))
            .or_insert_with(|| PhasePoly::zero(f.dim(), Basis::Ladder))
            .add_term(m.clone(), c.clone());
    }
    Ok(out)
}

/// `⟨f⟩`: the charge-0 part.
pub fn angle_average(f: &PhasePoly) -> Result<PhasePoly> {
    require_ladder(f)?;
    let dim = f.dim();
    Ok(f.filter(|m| charge(m, dim).iter().all(|&q| q == 0)))
}

/// `⟩f⟨ = f − ⟨f⟩`.
pub fn angle_fluctuation(f: &PhasePoly) -> Result<PhasePoly> {
    Ok(f - &angle_average(f)?)
}

/// Rewrites a charge-0 ladder polynomial in the actions, using `b^i b̄^i = 2 I^i`.
pub fn as_action_polynomial(f: &PhasePoly) -> Result<ActionPoly> {
    require_ladder(f)?;
    let dim = f.dim();
    let mut out = ActionPoly::zero(dim);
    for (m, c) in f.terms() {
        let q = charge(m, dim);
        if q.iter().any(|&v| v != 0) {
            return Err(Error::ChargedComponent(q));
        }
        let k: Vec<u32> = m.exponents()[..dim].to_vec();
        let total: u32 = k.iter().sum();
        let two_pow = BigRational::from_integer(BigInt::from(2).pow(total));
        out.add_term(k, c * real(two_pow));
    }
    Ok(out)
}

/// Ladder images of the actions: `I^i = b^i b̄^i / 2`.
pub fn action_images_ladder(dim: usize) -> Vec<PhasePoly> {
    (0..dim)
        .map(|i| {
            (&PhasePoly::var(dim, Basis::Ladder, i) * &PhasePoly::var(dim, Basis::Ladder, i + dim))
                .scale(&gr(1, 2))
        })
        .collect()
}

/// Inverse of [`as_action_polynomial`].
pub fn action_to_ladder(f: &ActionPoly) -> PhasePoly {
    f.compose(&action_images_ladder(f.dim()))
}

/// Coefficient of a ladder monomial with respect to the normalized pair
/// `a = b/√2`: `rational · (√2)^{sqrt2_exp}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtTwoMultiple {
    pub rational: GaussianRational,
    pub sqrt2_exp: u32,
}

impl SqrtTwoMultiple {
    /// The exact square, which is always rational.
    pub fn square(&self) -> GaussianRational {
        let two_pow = BigRational::from_integer(BigInt::from(2).pow(self.sqrt2_exp));
        &self.rational * &self.rational * real(two_pow)
    }
}

/// Normalized-basis coefficient of the term `c·b^k b̄^l`.
pub fn normalized_coefficient(m: &Monomial, c: &GaussianRational) -> SqrtTwoMultiple {
    let d = m.degree();
    let two_pow = BigRational::from_integer(BigInt::from(2).pow(d / 2));
    SqrtTwoMultiple {
        rational: c * real(two_pow),
        sqrt2_exp: d % 2,
    }
}

/// Helper for tests and callers that want `I^i` directly in the ladder basis.
pub fn ladder_action(dim: usize, i: usize) -> PhasePoly {
    action_images_ladder(dim).swap_remove(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;
    use crate::bracket::poisson_bracket;
    use crate::chart::DarbouxChart;

    fn amb(k: usize) -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, k)
    }
    fn b() -> PhasePoly {
        PhasePoly::var(1, Basis::Ladder, 0)
    }
    fn bb() -> PhasePoly {
        PhasePoly::var(1, Basis::Ladder, 1)
    }

    #[test]
    fn harmonic_action_is_charge_zero() {
        let chart = DarbouxChart::identity(1);
        let i = (&amb(0).pow(2) + &amb(1).pow(2)).scale(&gr(1, 2));
        let l = to_ladder(&i, &chart).unwrap();
        // āa = b̄b/2
        assert_eq!(l, (&b() * &bb()).scale(&gr(1, 2)));
        assert_eq!(as_action_polynomial(&l).unwrap(), ActionPoly::var(1, 0));
    }

    #[test]
    fn position_has_sqrt_two_coefficient() {
        let chart = DarbouxChart::identity(1);
        let l = to_ladder(&amb(0), &chart).unwrap();
        assert_eq!(l, (&b() + &bb()).scale(&gr(1, 2)));
        for (m, c) in l.terms() {
            let n = normalized_coefficient(m, c);
            assert_eq!(n.sqrt2_exp, 1);
            assert_eq!(n.square(), gr(1, 2));
        }
    }

    #[test]
    fn charge_two_components() {
        let chart = DarbouxChart::identity(1);
        let f = &amb(0).pow(2) - &amb(1).pow(2);
        let l = to_ladder(&f, &chart).unwrap();
        // a^2 + ā^2 = (b^2 + b̄^2)/2
        assert_eq!(l, (&b().pow(2) + &bb().pow(2)).scale(&gr(1, 2)));
        let comps = charge_components(&l).unwrap();
        assert_eq!(comps.keys().cloned().collect::<Vec<_>>(), vec![vec![-2], vec![2]]);
        assert!(angle_average(&l).unwrap().is_zero());
    }

    #[test]
    fn angle_average_filters() {
        let f = &(&bb().pow(2) * &b().pow(2)) + &b().pow(3);
        assert_eq!(angle_average(&f).unwrap(), &bb().pow(2) * &b().pow(2));
        assert_eq!(angle_fluctuation(&f).unwrap(), b().pow(3));
        assert!(angle_average(&amb(0)).is_err());
    }

    #[test]
    fn action_polynomials() {
        let i = (&b() * &bb()).scale(&gr(1, 2));
        let f = &i.pow(2).scale(&int(3)) + &PhasePoly::one(1, Basis::Ladder);
        let a = as_action_polynomial(&f).unwrap();
        assert_eq!(
            a,
            &ActionPoly::var(1, 0).pow(2).scale(&int(3)) + &ActionPoly::constant(1, int(1))
        );
        assert_eq!(action_to_ladder(&a), f);
        assert!(matches!(
            as_action_polynomial(&b()),
            Err(Error::ChargedComponent(q)) if q == vec![1]
        ));
    }

    #[test]
    fn two_mode_action_product() {
        let l = &ladder_action(2, 0) * &ladder_action(2, 1);
        let a = as_action_polynomial(&l).unwrap();
        assert_eq!(a, &ActionPoly::var(2, 0) * &ActionPoly::var(2, 1));
    }

    #[test]
    fn ladder_bracket_matches_ambient() {
        // {b, b̄} computed with the ambient J equals the ladder-adapted constant.
        let chart = DarbouxChart::identity(1);
        let imgs = ladder_to_chart_images(1);
        let b_amb = chart.to_ambient_basis(&imgs[0]).unwrap();
        let bb_amb = chart.to_ambient_basis(&imgs[1]).unwrap();
        let br = poisson_bracket(&b_amb, &bb_amb).unwrap();
        assert_eq!(br.constant_term(), ladder_bracket());
        // and charge eigenvalue of {·, I}
        let i = ladder_action(1, 0);
        let m = &b().pow(3) * &bb();
        let lhs = poisson_bracket(&m, &i).unwrap();
        let s = PINNED_LADDER_SIGN.as_i64();
        assert_eq!(lhs, m.scale(&(imag_unit() * int(-s * 2))));
    }
}
