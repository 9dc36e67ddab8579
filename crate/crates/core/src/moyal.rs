//! The Moyal star product on truncated ℏ-series.
//!
//! `F ⋆ G = Σ_n (1/n!) (iℏ/2)^n {F, G}_n`, assembled by ℏ grade. The formula is
//! invariant under linear canonical changes of variables, so it is valid in
//! the ambient, chart and ladder bases alike (each with its own constant `J`).

use crate::bracket::{pairing, scaled_bracket, Jets};
use crate::error::Result;
use crate::series::HbarSeries;
use crate::scalar::{gr, i_pow, GaussianRational};

/// Residual of an identity that should hold through the truncation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarDefect {
    pub residual: HbarSeries,
    /// Smallest ℏ power with a nonzero coefficient; `None` if the residual
    /// vanishes through truncation.
    pub first_nonzero_order: Option<usize>,
}

impl StarDefect {
    pub fn new(residual: HbarSeries) -> Self {
        let first_nonzero_order = residual.first_nonzero_order();
        StarDefect {
            residual,
            first_nonzero_order,
        }
    }

    pub fn vanishes(&self) -> bool {
        self.first_nonzero_order.is_none()
    }

    /// True when the defect is `O(ℏ^k)`, i.e. orders below `k` vanish.
    pub fn is_order_at_least(&self, k: usize) -> bool {
        self.first_nonzero_order.is_none_or(|o| o >= k)
    }
}

/// `(i/2)^n`.
fn moyal_weight(n: u32) -> GaussianRational {
    let mut w = i_pow(n as usize);
    for _ in 0..n {
        w *= gr(1, 2);
    }
    w
}

/// Moyal product keeping only the bracket orders `n` accepted by `keep`.
/// With `keep = |_| true` this is [`moyal_star`]; other filters exist for
/// negative controls.
pub fn moyal_star_filtered<K>(f: &HbarSeries, g: &HbarSeries, keep: K) -> Result<HbarSeries>
where
    K: Fn(u32) -> bool,
{
    f.check_compatible(g)?;
    let order = f.order();
    let pairs = pairing(f.dim(), f.basis());
    let mut out = HbarSeries::zero(f.dim(), f.basis(), order);
    let mut fj: Vec<Jets<'_>> = f.coeffs().iter().map(Jets::new).collect();
    let mut gj: Vec<Jets<'_>> = g.coeffs().iter().map(Jets::new).collect();
    for a in 0..=order {
        if f.coeff(a).is_zero() {
            continue;
        }
        for b in 0..=(order - a) {
            if g.coeff(b).is_zero() {
                continue;
            }
            for n in 0..=(order - a - b) as u32 {
                if !keep(n) {
                    continue;
                }
                let term = scaled_bracket(&mut fj[a], &mut gj[b], n, &pairs);
                if term.is_zero() {
                    // higher derivatives vanish too once both jets are exhausted
                    let fd = f.coeff(a).degree().unwrap_or(0);
                    let gd = g.coeff(b).degree().unwrap_or(0);
                    if n >= fd.min(gd) {
                        break;
                    }
                    continue;
                }
                out.add_at(a + b + n as usize, &term.scale(&moyal_weight(n)));
            }
        }
    }
    Ok(out)
}

/// `F ⋆ G` truncated at the common order.
pub fn moyal_star(f: &HbarSeries, g: &HbarSeries) -> Result<HbarSeries> {
    moyal_star_filtered(f, g, |_| true)
}

/// `{F, G}_⋆ = F ⋆ G − G ⋆ F`.
pub fn star_commutator(f: &HbarSeries, g: &HbarSeries) -> Result<HbarSeries> {
    Ok(&moyal_star(f, g)? - &moyal_star(g, f)?)
}

/// `(F ⋆ G) ⋆ H − F ⋆ (G ⋆ H)`.
pub fn associativity_defect(f: &HbarSeries, g: &HbarSeries, h: &HbarSeries) -> Result<StarDefect> {
    let left = moyal_star(&moyal_star(f, g)?, h)?;
    let right = moyal_star(f, &moyal_star(g, h)?)?;
    Ok(StarDefect::new(&left - &right))
}

/// `F ⋆ F ⋆ … ⋆ F` (`k` factors; `k = 0` gives 1).
pub fn star_power(f: &HbarSeries, k: u32) -> Result<HbarSeries> {
    let one = HbarSeries::from_poly(
        crate::poly::PhasePoly::one(f.dim(), f.basis()),
        f.order(),
    );
    let mut acc = one;
    for _ in 0..k {
        acc = moyal_star(&acc, f)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Basis, PhasePoly};
    use crate::scalar::{imag_unit, int};

    fn s(p: PhasePoly) -> HbarSeries {
        HbarSeries::from_poly(p, 6)
    }
    fn x() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 0)
    }
    fn p() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 1)
    }
    fn action() -> PhasePoly {
        (&x().pow(2) + &p().pow(2)).scale(&gr(1, 2))
    }

    #[test]
    fn canonical_pair() {
        let r = moyal_star(&s(x()), &s(p())).unwrap();
        assert_eq!(r.coeff(0), &(&x() * &p()));
        assert_eq!(r.coeff(1), &PhasePoly::constant(1, Basis::Ambient, imag_unit() * gr(1, 2)));
        assert!(r.coeffs()[2..].iter().all(PhasePoly::is_zero));
        let c = star_commutator(&s(x()), &s(p())).unwrap();
        assert_eq!(c, HbarSeries::hbar_power(1, Basis::Ambient, 1, imag_unit(), 6));
    }

    #[test]
    fn action_squared() {
        let r = moyal_star(&s(action()), &s(action())).unwrap();
        let mut expect = s(action().pow(2));
        expect.add_at(2, &PhasePoly::constant(1, Basis::Ambient, gr(-1, 4)));
        assert_eq!(r, expect);
    }

    #[test]
    fn unit_and_self_commutator() {
        let f = &x().pow(3) + &(&x() * &p().pow(2));
        let one = s(PhasePoly::one(1, Basis::Ambient));
        assert_eq!(moyal_star(&s(f.clone()), &one).unwrap(), s(f.clone()));
        assert!(star_commutator(&s(f.clone()), &s(f)).unwrap().is_zero());
    }

    #[test]
    fn commutator_with_action_is_odd() {
        let c = star_commutator(&s(action()), &s(x().pow(4))).unwrap();
        assert!(c.is_odd());
        let pb = crate::bracket::poisson_bracket(&action(), &x().pow(4)).unwrap();
        assert_eq!(c.coeff(1), &pb.scale(&imag_unit()));
        // I is quadratic, so every bracket beyond the first vanishes
        assert!(c.coeff(3).is_zero());
    }

    #[test]
    fn dropping_second_order_breaks_associativity() {
        let (f, g, h) = (s(&x() * &p()), s(x().pow(2)), s(p().pow(2)));
        let bad = |a: &HbarSeries, b: &HbarSeries| moyal_star_filtered(a, b, |n| n != 2).unwrap();
        let res = &bad(&bad(&f, &g), &h) - &bad(&f, &bad(&g, &h));
        assert_eq!(StarDefect::new(res).first_nonzero_order, Some(2));
        assert!(associativity_defect(&f, &g, &h).unwrap().vanishes());
    }

    #[test]
    fn star_power_of_position() {
        let r = star_power(&s(x()), 3).unwrap();
        assert_eq!(r, s(x().pow(3)));
        assert_eq!(star_power(&s(x()), 0).unwrap(), s(PhasePoly::constant(1, Basis::Ambient, int(1))));
    }
}
