//! Fedosov star product through ℏ³ from a polynomial symplectic connection
//! written in Darboux coordinates, its curvature, and the Fedosov version of
//! the second-order s'Darboux correction.
//!
//! Everything here lives in the chart basis: the variables are the Darboux
//! coordinates `z^a` and the Poisson tensor is the constant `J`. Conventions:
//! `∇_a V_b = ∂_a V_b − Γ^c_{ab} V_c` with `Γ^d_{ab} = J^{dk} Γ_{kab}`, indices
//! lowered with `J^{-1}`, and `∂^d = J^{dk} ∂_k`.

use num_traits::Zero;

use crate::bracket::pairing;
use crate::chart::{DarbouxChart, GammaTensor};
use crate::error::{Error, Result};
use crate::moyal::StarDefect;
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{gr, i_pow, GaussianRational};
use crate::sdarboux::{commutator_defect_with, z2_from_gamma, DefectMatrix};
use crate::series::HbarSeries;

/// Where a connection came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectionSource {
    /// The flat connection of the ambient coordinates, written in a chart.
    Chart,
    Supplied,
}

/// Torsionless symplectic connection: a fully symmetric `Γ^{abc}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticConnection {
    upper: GammaTensor,
    lower: GammaTensor,
    source: ConnectionSource,
}

impl SymplecticConnection {
    /// Validates symmetry; entries must be chart-basis polynomials.
    pub fn new(gamma_upper: GammaTensor) -> Result<Self> {
        Self::with_source(gamma_upper, ConnectionSource::Supplied)
    }

    fn with_source(upper: GammaTensor, source: ConnectionSource) -> Result<Self> {
        if upper.basis() != Basis::Chart {
            return Err(Error::WrongBasis {
                expected: Basis::Chart,
                found: upper.basis(),
            });
        }
        if let Some(idx) = upper.symmetry_violation() {
            return Err(Error::AsymmetricConnection(idx));
        }
        let lower = upper.lower();
        Ok(SymplecticConnection { upper, lower, source })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(GammaTensor::zero(dim, Basis::Chart)).expect("zero is symmetric")
    }

    /// Flat connection of `(x, p)` in the coordinates of `chart`:
    /// `Γ^c_{ab} = (∂_k z^c ∘ X) ∂_a ∂_b X^k`.
    pub fn from_chart(chart: &DarbouxChart) -> Result<Self> {
        let m = chart.dim();
        let n = 2 * m;
        let jac: Vec<Vec<PhasePoly>> = chart
            .forward()
            .iter()
            .map(|zc| {
                (0..n)
                    .map(|k| chart.to_chart_basis(&zc.derivative(k)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let hess: Vec<Vec<Vec<PhasePoly>>> = chart
            .inverse()
            .iter()
            .map(|xk| {
                (0..n)
                    .map(|a| (0..n).map(|b| xk.derivative(a).derivative(b)).collect())
                    .collect()
            })
            .collect();
        let mixed = |c: usize, a: usize, b: usize| {
            let mut s = PhasePoly::zero(m, Basis::Chart);
            for k in 0..n {
                if !hess[k][a][b].is_zero() {
                    s += &(&jac[c][k] * &hess[k][a][b]);
                }
            }
            s
        };
        let pairs = pairing(m, Basis::Chart);
        // Γ_{dab} = (J^{-1})_{d σ(d)} Γ^{σ(d)}_{ab}
        let lowered = GammaTensor::from_fn(m, Basis::Chart, |d, a, b| {
            let (sd, cd) = &pairs[d];
            mixed(*sd, a, b).scale(&-cd.clone())
        });
        Self::with_source(lowered.raise(), ConnectionSource::Chart)
    }

    pub fn dim(&self) -> usize {
        self.upper.dim()
    }

    pub fn source(&self) -> ConnectionSource {
        self.source
    }

    pub fn gamma_upper(&self) -> &GammaTensor {
        &self.upper
    }

    pub fn gamma_lower(&self) -> &GammaTensor {
        &self.lower
    }

    /// `Γ^d_{ab} = J^{dk} Γ_{kab}`.
    pub fn christoffel(&self, d: usize, a: usize, b: usize) -> PhasePoly {
        let (sd, cd) = &pairing(self.dim(), Basis::Chart)[d];
        self.lower.get(*sd, a, b).scale(cd)
    }
}

/// `∂^d f = J^{dk} ∂_k f`.
fn raised_derivative(f: &PhasePoly, d: usize) -> PhasePoly {
    let (sd, cd) = &pairing(f.dim(), f.basis())[d];
    f.derivative(*sd).scale(cd)
}

fn sym3<F>(n: usize, mut t: F) -> Vec<PhasePoly>
where
    F: FnMut(usize, usize, usize) -> PhasePoly,
{
    // computes the symmetrization once per sorted triple and copies it out
    let mut out: Vec<Option<PhasePoly>> = vec![None; n * n * n];
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let perms = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)];
                let mut s = t(a, b, c);
                for &(i, j, k) in &perms[1..] {
                    s += &t(i, j, k);
                }
                let s = s.scale(&gr(1, 6));
                for &(i, j, k) in &perms {
                    out[(i * n + j) * n + k] = Some(s.clone());
                }
            }
        }
    }
    out.into_iter().map(|p| p.expect("filled")).collect()
}

/// `R_{a1 a2 a3}{}^d`, symmetrized over the lower indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RiemannTensor {
    n: usize,
    /// indexed `[d][(a1 n + a2) n + a3]`
    comps: Vec<Vec<PhasePoly>>,
}

impl RiemannTensor {
    pub fn get(&self, a1: usize, a2: usize, a3: usize, d: usize) -> &PhasePoly {
        &self.comps[d][(a1 * self.n + a2) * self.n + a3]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(PhasePoly::is_zero)
    }
}

/// `R_{a1a2a3}{}^d = −∂_{a3}Γ^d_{a1a2} + ∂^dΓ_{a1a2a3} + Γ^η_{a1a3}Γ^d_{ηa2}
/// + Γ^η_{a2a3}Γ^d_{ηa1}`, symmetrized over `a1, a2, a3`.
pub fn riemann(conn: &SymplecticConnection) -> RiemannTensor {
    let n = 2 * conn.dim();
    let chr: Vec<Vec<Vec<PhasePoly>>> = (0..n)
        .map(|d| (0..n).map(|a| (0..n).map(|b| conn.christoffel(d, a, b)).collect()).collect())
        .collect();
    let comps = (0..n)
        .map(|d| {
            sym3(n, |a1, a2, a3| {
                let mut s = -&chr[d][a1][a2].derivative(a3);
                s += &raised_derivative(conn.lower.get(a1, a2, a3), d);
                for eta in 0..n {
                    if !chr[eta][a1][a3].is_zero() {
                        s += &(&chr[eta][a1][a3] * &chr[d][eta][a2]);
                    }
                    if !chr[eta][a2][a3].is_zero() {
                        s += &(&chr[eta][a2][a3] * &chr[d][eta][a1]);
                    }
                }
                s
            })
        })
        .collect();
    RiemannTensor { n, comps }
}

/// `f^{(0)} … f^{(3)}` as full symmetric arrays (`f1[a]`, `f2[a n + b]`,
/// `f3[(a n + b) n + c]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CovariantJets {
    pub f0: PhasePoly,
    pub f1: Vec<PhasePoly>,
    pub f2: Vec<PhasePoly>,
    pub f3: Vec<PhasePoly>,
}

/// Jets through order `nmax ≤ 3`; `f^{(3)} = sym ∇∇∇f − c_R sym(R_{abc}{}^j ∂_j f)`.
/// Orders above `nmax` are left empty.
pub fn covariant_jets(
    f: &PhasePoly,
    conn: &SymplecticConnection,
    nmax: usize,
    c_r: &GaussianRational,
) -> Result<CovariantJets> {
    if nmax > 3 {
        return Err(Error::Unsupported(format!("covariant jets beyond order 3 (asked {nmax})")));
    }
    if f.basis() != Basis::Chart || f.dim() != conn.dim() {
        return Err(Error::InvalidArgument("jets need a chart-basis polynomial of matching M".into()));
    }
    let n = 2 * conn.dim();
    let f1: Vec<PhasePoly> = (0..n).map(|a| f.derivative(a)).collect();
    let mut jets = CovariantJets {
        f0: f.clone(),
        f1: Vec::new(),
        f2: Vec::new(),
        f3: Vec::new(),
    };
    if nmax == 0 {
        return Ok(jets);
    }
    let chr: Vec<Vec<Vec<PhasePoly>>> = (0..n)
        .map(|d| (0..n).map(|a| (0..n).map(|b| conn.christoffel(d, a, b)).collect()).collect())
        .collect();
    let mut f2 = vec![PhasePoly::zero(f.dim(), Basis::Chart); n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = f1[b].derivative(a);
            for c in 0..n {
                if !chr[c][a][b].is_zero() {
                    s -= &(&chr[c][a][b] * &f1[c]);
                }
            }
            f2[a * n + b] = s;
        }
    }
    if nmax >= 3 {
        let curv = if c_r.is_zero() { None } else { Some(riemann(conn)) };
        let nabla = |a: usize, b: usize, c: usize| {
            let mut s = f2[b * n + c].derivative(a);
            for e in 0..n {
                if !chr[e][a][b].is_zero() {
                    s -= &(&chr[e][a][b] * &f2[e * n + c]);
                }
                if !chr[e][a][c].is_zero() {
                    s -= &(&chr[e][a][c] * &f2[b * n + e]);
                }
            }
            if let Some(r) = &curv {
                for (j, dj) in f1.iter().enumerate() {
                    let rj = r.get(a, b, c, j);
                    if !rj.is_zero() {
                        s -= &(rj * dj).scale(c_r);
                    }
                }
            }
            s
        };
        jets.f3 = sym3(n, nabla);
    }
    jets.f1 = f1;
    if nmax >= 2 {
        jets.f2 = f2;
    }
    Ok(jets)
}

/// The truncated Fedosov product for a connection and curvature coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FedosovProduct {
    pub conn: SymplecticConnection,
    pub c_r: GaussianRational,
}

/// Highest ℏ order the truncated product supports.
pub const FEDOSOV_MAX_ORDER: usize = 3;

impl FedosovProduct {
    pub fn new(conn: SymplecticConnection) -> Self {
        FedosovProduct {
            conn,
            c_r: gr(1, 1),
        }
    }

    pub fn with_curvature_coefficient(conn: SymplecticConnection, c_r: GaussianRational) -> Self {
        FedosovProduct { conn, c_r }
    }

    /// `Σ_{n ≤ 3} (1/n!)(iℏ/2)^n f^{(n)} ω^n g^{(n)}` on ℏ-series of order ≤ 3.
    pub fn star(&self, f: &HbarSeries, g: &HbarSeries) -> Result<HbarSeries> {
        f.check_compatible(g)?;
        let order = f.order();
        if order > FEDOSOV_MAX_ORDER {
            return Err(Error::Unsupported(format!(
                "the Fedosov product is available through order {FEDOSOV_MAX_ORDER}, asked for {order}"
            )));
        }
        if f.basis() != Basis::Chart {
            return Err(Error::WrongBasis {
                expected: Basis::Chart,
                found: f.basis(),
            });
        }
        let dim = f.dim();
        let n = 2 * dim;
        let pairs = pairing(dim, Basis::Chart);
        let fj: Vec<CovariantJets> = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(a, c)| covariant_jets(c, &self.conn, order - a, &self.c_r))
            .collect::<Result<_>>()?;
        let gj: Vec<CovariantJets> = g
            .coeffs()
            .iter()
            .enumerate()
            .map(|(b, c)| covariant_jets(c, &self.conn, order - b, &self.c_r))
            .collect::<Result<_>>()?;
        let mut out = HbarSeries::zero(dim, Basis::Chart, order);
        for a in 0..=order {
            for b in 0..=(order - a) {
                for k in 0..=(order - a - b) {
                    let term = contract(&fj[a], &gj[b], k, n, &pairs);
                    if term.is_zero() {
                        continue;
                    }
                    let mut w = i_pow(k);
                    for j in 1..=k {
                        w *= gr(1, 2 * j as i64);
                    }
                    out.add_at(a + b + k, &term.scale(&w));
                }
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, f: &HbarSeries, g: &HbarSeries) -> Result<HbarSeries> {
        Ok(&self.star(f, g)? - &self.star(g, f)?)
    }

    /// `(F ⋆ G) ⋆ H − F ⋆ (G ⋆ H)`.
    pub fn associativity_defect(&self, f: &HbarSeries, g: &HbarSeries, h: &HbarSeries) -> Result<StarDefect> {
        let l = self.star(&self.star(f, g)?, h)?;
        let r = self.star(f, &self.star(g, h)?)?;
        Ok(StarDefect::new(&l - &r))
    }
}

/// `f^{(k)}_{i1..ik} ω^{i1 j1} … ω^{ik jk} g^{(k)}_{j1..jk}`.
fn contract(
    f: &CovariantJets,
    g: &CovariantJets,
    k: usize,
    n: usize,
    pairs: &[(usize, GaussianRational)],
) -> PhasePoly {
    let mut s = PhasePoly::zero(f.f0.dim(), Basis::Chart);
    match k {
        0 => s = &f.f0 * &g.f0,
        1 => {
            for (i, (si, ci)) in pairs.iter().enumerate() {
                s += &(&f.f1[i] * &g.f1[*si]).scale(ci);
            }
        }
        2 => {
            for (i1, (s1, c1)) in pairs.iter().enumerate() {
                for (i2, (s2, c2)) in pairs.iter().enumerate() {
                    let fv = &f.f2[i1 * n + i2];
                    let gv = &g.f2[s1 * n + s2];
                    if !fv.is_zero() && !gv.is_zero() {
                        s += &(fv * gv).scale(&(c1 * c2));
                    }
                }
            }
        }
        3 => {
            for (i1, (s1, c1)) in pairs.iter().enumerate() {
                for (i2, (s2, c2)) in pairs.iter().enumerate() {
                    for (i3, (s3, c3)) in pairs.iter().enumerate() {
                        let fv = &f.f3[(i1 * n + i2) * n + i3];
                        let gv = &g.f3[(s1 * n + s2) * n + s3];
                        if !fv.is_zero() && !gv.is_zero() {
                            s += &(fv * gv).scale(&(c1 * c2 * c3));
                        }
                    }
                }
            }
        }
        _ => unreachable!("orders above 3 are rejected earlier"),
    }
    s
}

/// Residual of `sym ∇∇∇ z^d − R_{a1a2a3}{}^d + ∂^d Γ_{a1a2a3}` for sorted
/// `a1 ≤ a2 ≤ a3`; only nonzero entries are returned.
pub fn gmagic_defect(conn: &SymplecticConnection) -> Vec<([usize; 4], PhasePoly)> {
    let m = conn.dim();
    let n = 2 * m;
    let r = riemann(conn);
    let mut out = Vec::new();
    for d in 0..n {
        let zd = PhasePoly::var(m, Basis::Chart, d);
        let jets = covariant_jets(&zd, conn, 3, &GaussianRational::zero()).expect("order 3");
        for a1 in 0..n {
            for a2 in a1..n {
                for a3 in a2..n {
                    let mut res = jets.f3[(a1 * n + a2) * n + a3].clone();
                    res -= r.get(a1, a2, a3, d);
                    res += &raised_derivative(conn.lower.get(a1, a2, a3), d);
                    if !res.is_zero() {
                        out.push(([a1, a2, a3, d], res));
                    }
                }
            }
        }
    }
    out
}

/// `Z^d_2 = (1/48) Γ_{abc} {z^d, Γ^{abc}}` in the chart basis.
pub fn fedosov_z2(conn: &SymplecticConnection) -> Vec<PhasePoly> {
    let m = conn.dim();
    let coords: Vec<PhasePoly> = (0..2 * m).map(|d| PhasePoly::var(m, Basis::Chart, d)).collect();
    z2_from_gamma(&coords, &conn.upper)
}

/// `Z^d = z^d + ℏ² Z^d_2` truncated at `order ≤ 3`.
pub fn fedosov_sdarboux_coords(conn: &SymplecticConnection, order: usize) -> Vec<HbarSeries> {
    let m = conn.dim();
    fedosov_z2(conn)
        .into_iter()
        .enumerate()
        .map(|(d, z2)| {
            let mut s = HbarSeries::from_poly(PhasePoly::var(m, Basis::Chart, d), order);
            s.add_at(2, &z2);
            s
        })
        .collect()
}

/// `{Z^a, Z^b}_⋆ − iℏJ^{ab}` under the Fedosov product.
pub fn fedosov_sdarboux_defect(product: &FedosovProduct, z: &[HbarSeries]) -> Result<DefectMatrix> {
    commutator_defect_with(z, |a, b| product.commutator(a, b))
}

/// Chart-basis polynomial as a ladder-basis one (`z → (b, b̄)`).
pub fn chart_to_ladder(f: &PhasePoly) -> PhasePoly {
    f.substitute(&crate::ladder::chart_to_ladder_images(f.dim()))
}

/// Second-order rule computed entirely with the Fedosov product:
/// `F^i_2 ∘ I = ⟨H^i_2 − K^i_2 − Ω_ij N^j_2⟩` with `N`, `K_2` from the
/// truncated product and `Z = z + ℏ² Z_2`. Angle-dependent parts of the
/// residual are dropped by the average, so no good-number correction is
/// needed to read off `F_2`.
pub fn fedosov_bs_rule(
    product: &FedosovProduct,
    h: &[HbarSeries],
    f: &[crate::action::ActionPoly],
) -> Result<crate::number::EBKRule> {
    use crate::ladder::{angle_average, as_action_polynomial};
    use crate::number::star_compose_with;
    let m = product.conn.dim();
    let order = FEDOSOV_MAX_ORDER;
    let z = fedosov_sdarboux_coords(&product.conn, order);
    let si = crate::scalar::imag_unit() * crate::scalar::int(crate::ladder::PINNED_LADDER_SIGN.as_i64());
    let mut n = Vec::with_capacity(m);
    for i in 0..m {
        let b = &z[i] + &z[i + m].scale(&si);
        let bb = &z[i] - &z[i + m].scale(&si);
        n.push(product.star(&bb, &b)?.scale(&gr(1, 2)));
    }
    let comp = star_compose_with(f, &n, true, |a, b| product.star(a, b))?;
    let mut f2 = Vec::with_capacity(m);
    for i in 0..m {
        let hi = h[i].truncate(order);
        if hi.basis() != Basis::Chart {
            return Err(Error::WrongBasis {
                expected: Basis::Chart,
                found: hi.basis(),
            });
        }
        // H_2 − (f ∘⋆ (N + ℏ/2))_2 = H_2 − K_2 − Ω N_2
        let r = &hi.coeff_or_zero(2) - comp[i].coeff(2);
        f2.push(as_action_polynomial(&angle_average(&chart_to_ladder(&r))?)?);
    }
    Ok(crate::number::EBKRule {
        f: f.to_vec(),
        f2,
        half_shift: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::gamma;
    use crate::moyal::moyal_star;
    use crate::scalar::int;

    fn cvar(i: usize) -> PhasePoly {
        PhasePoly::var(1, Basis::Chart, i)
    }

    fn series(p: PhasePoly) -> HbarSeries {
        HbarSeries::from_poly(p, 3)
    }

    fn constant_gamma() -> SymplecticConnection {
        let mut g = GammaTensor::zero(1, Basis::Chart);
        g.set(0, 0, 0, PhasePoly::one(1, Basis::Chart));
        g.set(1, 1, 1, PhasePoly::one(1, Basis::Chart));
        SymplecticConnection::new(g).unwrap()
    }

    #[test]
    fn zero_connection_is_moyal() {
        let prod = FedosovProduct::new(SymplecticConnection::zero(1));
        let f = series(&cvar(0).pow(3) + &(&cvar(0) * &cvar(1)).pow(2));
        let g = series(&cvar(1).pow(4) + &cvar(0));
        assert_eq!(prod.star(&f, &g).unwrap(), moyal_star(&f, &g).unwrap());
    }

    #[test]
    fn flat_connection_of_a_chart_reproduces_moyal() {
        for chart in [DarbouxChart::shear(), DarbouxChart::double_shear()] {
            let conn = SymplecticConnection::from_chart(&chart).unwrap();
            assert!(riemann(&conn).is_zero());
            let diagram = gamma(&chart).unwrap().map(|p| chart.to_chart_basis(p).unwrap());
            assert_eq!(conn.gamma_upper(), &diagram.map(|p| -p));
            let prod = FedosovProduct::new(conn);
            let amb = |p: PhasePoly| chart.to_ambient_basis(&p).unwrap();
            let f = &cvar(0).pow(2) * &cvar(1);
            let g = &cvar(1).pow(3) + &cvar(0);
            let fed = prod.star(&series(f.clone()), &series(g.clone())).unwrap();
            let moy = moyal_star(&series(amb(f)), &series(amb(g))).unwrap();
            assert_eq!(fed, moy.map(|p| chart.to_chart_basis(p).unwrap()));
        }
    }

    #[test]
    fn gmagic_identity_holds() {
        let mut g = GammaTensor::zero(1, Basis::Chart);
        g.set_symmetric(0, 0, 1, &cvar(0) * &cvar(1));
        g.set_symmetric(1, 1, 1, cvar(0).pow(2));
        g.set_symmetric(0, 0, 0, PhasePoly::constant(1, Basis::Chart, int(3)));
        let conn = SymplecticConnection::new(g).unwrap();
        assert!(gmagic_defect(&conn).is_empty());
        assert!(gmagic_defect(&constant_gamma()).is_empty());
    }

    #[test]
    fn curvature_coefficient_one_removes_third_order_defect() {
        let conn = constant_gamma();
        assert!(!riemann(&conn).is_zero());
        let z = fedosov_sdarboux_coords(&conn, 3);
        let good = FedosovProduct::new(conn.clone());
        assert_eq!(fedosov_sdarboux_defect(&good, &z).unwrap().first_nonzero_order(), None);
        let quarter = FedosovProduct::with_curvature_coefficient(conn, gr(1, 4));
        assert_eq!(fedosov_sdarboux_defect(&quarter, &z).unwrap().first_nonzero_order(), Some(3));
    }

    #[test]
    fn associativity_for_linear_connection() {
        let mut g = GammaTensor::zero(1, Basis::Chart);
        g.set_symmetric(0, 1, 1, cvar(0));
        g.set_symmetric(0, 0, 0, cvar(1));
        let prod = FedosovProduct::new(SymplecticConnection::new(g).unwrap());
        let f = series(&cvar(0).pow(2) * &cvar(1));
        let g = series(cvar(1).pow(3));
        let h = series(&cvar(0) * &cvar(1));
        assert!(prod.associativity_defect(&f, &g, &h).unwrap().is_order_at_least(3));
    }

    #[test]
    fn rejects_fourth_order() {
        let prod = FedosovProduct::new(SymplecticConnection::zero(1));
        let f = HbarSeries::from_poly(cvar(0), 4);
        assert!(prod.star(&f, &f).is_err());
    }
}

#[cfg(test)]
mod rule_tests {
    use super::*;
    use crate::action::ActionPoly;
    use crate::number::{bs_rule, good_number_correction, NumberSystem, QuantumIntegrableSystem};
    use crate::sdarboux::SDarbouxSet;

    #[test]
    fn disguised_flat_rule_agrees_with_moyal() {
        let chart = DarbouxChart::double_shear();
        let ns = NumberSystem::new(&SDarbouxSet::corrected(&chart, 5).unwrap()).unwrap();
        let i = ActionPoly::var(1, 0);
        let f = vec![&i + &i.pow(2).scale(&gr(1, 10))];
        let q = QuantumIntegrableSystem::from_action_functions(&ns, &f).unwrap();
        let moyal = bs_rule(&q, &good_number_correction(&q, &ns).unwrap()).unwrap();
        let h: Vec<HbarSeries> = q
            .hamiltonians()
            .iter()
            .map(|s| s.truncate(3).map(|p| chart.to_chart_basis(p).unwrap()))
            .collect();
        let prod = FedosovProduct::new(SymplecticConnection::from_chart(&chart).unwrap());
        let fed = fedosov_bs_rule(&prod, &h, &f).unwrap();
        assert_eq!(fed.f2, moyal.f2);
    }
}
