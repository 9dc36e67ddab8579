//! Ladder and number symbols, the star composition `F ∘⋆ (N + ℏ/2)`, the
//! good-number-symbol correction and the second-order Bohr–Sommerfeld rule.
//!
//! Ladder series are stored scaled, `B = √2·A = Z^i + s·i·Z^{i+M}`, so
//! `N = Ā ⋆ A = ½ B̄ ⋆ B` and `{Ā, A}_⋆ = ½ {B̄, B}_⋆` stay rational.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::action::ActionPoly;
use crate::bracket::{higher_bracket, poisson_bracket};
use crate::chart::{arrows_into, gamma, DarbouxChart};
use crate::error::{Error, Result};
use crate::ladder::{
    action_to_ladder, angle_average, angle_fluctuation, as_action_polynomial, charge_components,
    from_ladder, to_ladder, LadderSign, PINNED_LADDER_SIGN,
};
use crate::moyal::{moyal_star, star_commutator, StarDefect};
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{gr, imag_unit, int, GaussianRational};
use crate::sdarboux::{sdarboux_defect, SDarbouxSet};
use crate::series::HbarSeries;

/// Scaled ladder series `B^i`, `B̄^i` in the ambient basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LadderSeries {
    pub sign: LadderSign,
    pub b: Vec<HbarSeries>,
    pub bbar: Vec<HbarSeries>,
}

/// Ladder series from s'Darboux coordinates with the pinned sign.
pub fn ladder_series(s: &SDarbouxSet) -> LadderSeries {
    ladder_series_with_sign(s, PINNED_LADDER_SIGN)
}

pub fn ladder_series_with_sign(s: &SDarbouxSet, sign: LadderSign) -> LadderSeries {
    let m = s.dim();
    let si = imag_unit() * int(sign.as_i64());
    let z = s.coords();
    let b = (0..m).map(|i| &z[i] + &z[i + m].scale(&si)).collect();
    let bbar = (0..m).map(|i| &z[i] - &z[i + m].scale(&si)).collect();
    LadderSeries { sign, b, bbar }
}

/// `{Ā^i, A^i}_⋆ / ℏ` for a given ladder sign: `−s`.
pub fn dirac_unit(sign: LadderSign) -> GaussianRational {
    int(-sign.as_i64())
}

/// Residuals of the Dirac algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiracDefect {
    /// `{Ā^i, A^j}_⋆ − (−s)ℏδ_ij` for all `i, j`.
    pub mixed: Vec<(usize, usize, StarDefect)>,
    /// `{A^i, A^j}_⋆` for `i < j`.
    pub same: Vec<(usize, usize, StarDefect)>,
}

impl DiracDefect {
    pub fn first_nonzero_order(&self) -> Option<usize> {
        self.mixed
            .iter()
            .chain(&self.same)
            .filter_map(|(_, _, d)| d.first_nonzero_order)
            .min()
    }

    pub fn is_order_at_least(&self, k: usize) -> bool {
        self.first_nonzero_order().is_none_or(|o| o >= k)
    }
}

pub fn dirac_defect(l: &LadderSeries) -> Result<DiracDefect> {
    let m = l.b.len();
    let half = gr(1, 2);
    let (dim, order) = (l.b[0].dim(), l.b[0].order());
    let mut mixed = Vec::new();
    let mut same = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let mut r = star_commutator(&l.bbar[i], &l.b[j])?.scale(&half);
            if i == j {
                r = &r - &HbarSeries::hbar_power(dim, Basis::Ambient, 1, dirac_unit(l.sign), order);
            }
            mixed.push((i, j, StarDefect::new(r)));
            if i < j {
                let r = star_commutator(&l.b[i], &l.b[j])?.scale(&half);
                same.push((i, j, StarDefect::new(r)));
            }
        }
    }
    Ok(DiracDefect { mixed, same })
}

/// `N^i = Ā^i ⋆ A^i` (no sum).
pub fn number_series(l: &LadderSeries) -> Result<Vec<HbarSeries>> {
    l.bbar
        .iter()
        .zip(&l.b)
        .map(|(bb, b)| Ok(moyal_star(bb, b)?.scale(&gr(1, 2))))
        .collect()
}

/// Picks the ladder sign for which the harmonic chart gives
/// `N = I − ℏ/2` exactly, by computing `N` with both signs.
pub fn pin_ladder_sign() -> LadderSign {
    let chart = DarbouxChart::identity(1);
    let s = SDarbouxSet::bare(&chart, 4);
    let i = chart.actions().remove(0);
    let mut target = HbarSeries::from_poly(i, 4);
    target.add_at(1, &PhasePoly::constant(1, Basis::Ambient, gr(-1, 2)));
    for sign in [LadderSign::Plus, LadderSign::Minus] {
        let n = number_series(&ladder_series_with_sign(&s, sign)).expect("same shapes");
        if n[0] == target {
            return sign;
        }
    }
    unreachable!("one of the two signs gives I - hbar/2")
}

/// Closed form of the ℏ² coefficient of `N^i` for the set
/// `Z = z + ℏ² Z_2`: `−(1/8){ā^i, a^i}_2 + σ(1/48) Γ_{abc} {I^i, Γ^{abc}}`.
/// The consistent sign is `σ = +1`; `σ = −1` is the alternative kept for
/// comparison.
pub fn n2_closed_form_with_sign(chart: &DarbouxChart, sigma: i64) -> Result<Vec<PhasePoly>> {
    let g = gamma(chart)?;
    let lower = g.lower();
    let n = g.size();
    let ladder = chart.ladder_symbols();
    let m = chart.dim();
    let actions = chart.actions();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // {ā, a}_2 = ½ {b̄, b}_2
        let bracket2 = higher_bracket(&ladder[i + m], &ladder[i], 2)?.scale(&gr(1, 2));
        let mut gterm = PhasePoly::zero(m, Basis::Ambient);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let gl = lower.get(a, b, c);
                    if gl.is_zero() {
                        continue;
                    }
                    gterm += &(gl * &poisson_bracket(&actions[i], g.get(a, b, c))?);
                }
            }
        }
        out.push(&bracket2.scale(&gr(-1, 8)) + &gterm.scale(&gr(sigma, 48)));
    }
    Ok(out)
}

pub fn n2_closed_form(chart: &DarbouxChart) -> Result<Vec<PhasePoly>> {
    n2_closed_form_with_sign(chart, 1)
}

/// `F^i ∘⋆ (N + ℏ/2)`: every monomial `I^α` of `F^i` is replaced by the star
/// product of star powers of `N^j + ℏ/2` (or `N^j` without the shift).
pub fn star_compose(f: &[ActionPoly], n: &[HbarSeries], shift: bool) -> Result<Vec<HbarSeries>> {
    star_compose_with(f, n, shift, moyal_star)
}

/// [`star_compose`] for an arbitrary product `star`.
pub fn star_compose_with<S>(f: &[ActionPoly], n: &[HbarSeries], shift: bool, star: S) -> Result<Vec<HbarSeries>>
where
    S: Fn(&HbarSeries, &HbarSeries) -> Result<HbarSeries>,
{
    let m = n.len();
    if f.iter().any(|fi| fi.dim() != m) {
        return Err(Error::DimensionMismatch(m, f[0].dim()));
    }
    let (dim, basis, order) = (n[0].dim(), n[0].basis(), n[0].order());
    for i in 0..m {
        for j in (i + 1)..m {
            let c = &star(&n[i], &n[j])? - &star(&n[j], &n[i])?;
            if let Some(o) = c.first_nonzero_order() {
                return Err(Error::NonCommuting(o));
            }
        }
    }
    let base: Vec<HbarSeries> = n
        .iter()
        .map(|ni| {
            let mut s = ni.clone();
            if shift {
                s.add_at(1, &PhasePoly::constant(dim, basis, gr(1, 2)));
            }
            s
        })
        .collect();
    let one = HbarSeries::from_poly(PhasePoly::one(dim, basis), order);
    let max_deg: Vec<u32> = (0..m)
        .map(|j| {
            f.iter()
                .flat_map(|fi| fi.terms().map(move |(mono, _)| mono.exponents()[j]))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut powers: Vec<Vec<HbarSeries>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut p = vec![one.clone()];
        for k in 1..=max_deg[j] as usize {
            let next = star(&p[k - 1], &base[j])?;
            p.push(next);
        }
        powers.push(p);
    }
    f.iter()
        .map(|fi| {
            let mut acc = HbarSeries::zero(dim, basis, order);
            for (mono, c) in fi.terms() {
                let mut t = one.clone();
                for (j, &e) in mono.exponents().iter().enumerate() {
                    if e > 0 {
                        t = star(&t, &powers[j][e as usize])?;
                    }
                }
                acc = &acc + &t.scale(c);
            }
            Ok(acc)
        })
        .collect()
}

/// `Ω_ij = ∂_j f^i` as action polynomials.
pub fn frequency_matrix(f: &[ActionPoly]) -> Vec<Vec<ActionPoly>> {
    f.iter()
        .map(|fi| (0..fi.dim()).map(|j| fi.derivative(j)).collect())
        .collect()
}

/// `K_2` (ambient basis) and the frequency matrix `Ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct K2Omega {
    pub k2: Vec<PhasePoly>,
    pub omega: Vec<Vec<ActionPoly>>,
}

/// `K^i_2` is the ℏ² coefficient of `f^i ∘⋆ (N + ℏ/2) − h^i − ℏ² Ω_ij N^j_2`.
pub fn k2_omega(f: &[ActionPoly], ns: &NumberSystem) -> Result<K2Omega> {
    let chart = ns.chart();
    let comp = star_compose(f, &ns.n, true)?;
    let omega = frequency_matrix(f);
    let actions = chart.actions();
    let n2 = ns.n2();
    let mut k2 = Vec::with_capacity(f.len());
    for (i, ci) in comp.iter().enumerate() {
        let h = f[i].compose(&actions);
        if ci.coeff(0) != &h {
            return Err(Error::Inconsistent("principal symbol of the star composition".into()));
        }
        let mut k = ci.coeff_or_zero(2);
        for (j, n2j) in n2.iter().enumerate() {
            k -= &(&omega[i][j].compose(&actions) * n2j);
        }
        k2.push(k);
    }
    Ok(K2Omega { k2, omega })
}

/// Sign pattern for the closed-form `K_2`
/// `±(1/16){I^j,I^k}_2 ∂_j∂_k f ± (1/24)(I^j → I^k ← I^l) ∂_j∂_k∂_l f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum K2Signs {
    /// Both terms negative, matching the expansion of `f ∘⋆ (N + ℏ/2)`.
    Consistent,
    /// Both terms positive.
    Flipped,
}

/// Closed-form `K_2` in the ambient basis.
pub fn k2_closed_form(f: &[ActionPoly], chart: &DarbouxChart, signs: K2Signs) -> Result<Vec<PhasePoly>> {
    let m = chart.dim();
    let actions = chart.actions();
    let s = match signs {
        K2Signs::Consistent => -1,
        K2Signs::Flipped => 1,
    };
    let mut br2 = vec![vec![PhasePoly::zero(m, Basis::Ambient); m]; m];
    for j in 0..m {
        for k in 0..m {
            br2[j][k] = higher_bracket(&actions[j], &actions[k], 2)?;
        }
    }
    let mut diag = vec![vec![vec![PhasePoly::zero(m, Basis::Ambient); m]; m]; m];
    for j in 0..m {
        for k in 0..m {
            for l in 0..m {
                diag[j][k][l] = arrows_into(&actions[j], &actions[k], &actions[l]);
            }
        }
    }
    Ok(f.iter()
        .map(|fi| {
            let mut out = PhasePoly::zero(m, Basis::Ambient);
            for j in 0..m {
                let dj = fi.derivative(j);
                for k in 0..m {
                    let djk = dj.derivative(k);
                    out += &(&br2[j][k] * &djk.compose(&actions)).scale(&gr(s, 16));
                    for l in 0..m {
                        let djkl = djk.derivative(l);
                        out += &(&diag[j][k][l] * &djkl.compose(&actions)).scale(&gr(s, 24));
                    }
                }
            }
            out
        })
        .collect())
}

/// `M` star-commuting Hamiltonians whose principal symbols are functions of
/// the chart actions, `h^i = f^i ∘ I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantumIntegrableSystem {
    chart: DarbouxChart,
    h: Vec<HbarSeries>,
    f: Vec<ActionPoly>,
}

impl QuantumIntegrableSystem {
    /// Checks that the `H^i` star-commute through truncation and that each
    /// principal symbol is a polynomial in the actions.
    pub fn new(chart: &DarbouxChart, h: Vec<HbarSeries>) -> Result<Self> {
        if h.len() != chart.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} Hamiltonians, got {}",
                chart.dim(),
                h.len()
            )));
        }
        for hi in &h {
            if hi.dim() != chart.dim() || hi.basis() != Basis::Ambient {
                return Err(Error::InvalidArgument("Hamiltonians must be ambient-basis series".into()));
            }
        }
        for i in 0..h.len() {
            for j in (i + 1)..h.len() {
                if let Some(o) = star_commutator(&h[i], &h[j])?.first_nonzero_order() {
                    return Err(Error::NonCommuting(o));
                }
            }
        }
        let f = h
            .iter()
            .map(|hi| as_action_polynomial(&to_ladder(hi.principal(), chart)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantumIntegrableSystem {
            chart: chart.clone(),
            h,
            f,
        })
    }

    /// `H^i = F^i ∘⋆ (N + ℏ/2)` for a number system `ns`.
    pub fn from_action_functions(ns: &NumberSystem, f: &[ActionPoly]) -> Result<Self> {
        let h = star_compose(f, &ns.n, true)?;
        Self::new(ns.chart(), h)
    }

    pub fn chart(&self) -> &DarbouxChart {
        &self.chart
    }

    pub fn hamiltonians(&self) -> &[HbarSeries] {
        &self.h
    }

    pub fn action_functions(&self) -> &[ActionPoly] {
        &self.f
    }

    pub fn order(&self) -> usize {
        self.h[0].order()
    }
}

/// Ladder and number symbols built from one s'Darboux set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumberSystem {
    sdarboux: SDarbouxSet,
    ladder: LadderSeries,
    n: Vec<HbarSeries>,
    /// `∂G/∂θ^i` (ladder basis) of the last correction; zero if none.
    pub g_gradients: Vec<PhasePoly>,
    /// First order at which `{N^i, H^j}_⋆` is nonzero for the system the
    /// symbols were last checked against; `None` if it vanishes through
    /// truncation. Unset until checked.
    pub compatibility_order: Option<Option<usize>>,
}

impl NumberSystem {
    /// Requires the s'Darboux defect to start at order 5 or later.
    pub fn new(s: &SDarbouxSet) -> Result<Self> {
        let d = sdarboux_defect(s)?.first_nonzero_order();
        if d.is_some_and(|o| o < 5) {
            return Err(Error::InsufficientOrder { needed: 5, found: d });
        }
        Ok(Self::new_unchecked(s))
    }

    /// Skips the s'Darboux order check; for negative controls.
    pub fn new_unchecked(s: &SDarbouxSet) -> Self {
        let ladder = ladder_series(s);
        let n = number_series(&ladder).expect("same shapes");
        let m = s.dim();
        NumberSystem {
            sdarboux: s.clone(),
            ladder,
            n,
            g_gradients: vec![PhasePoly::zero(m, Basis::Ladder); m],
            compatibility_order: None,
        }
    }

    pub fn chart(&self) -> &DarbouxChart {
        self.sdarboux.chart()
    }

    pub fn sdarboux(&self) -> &SDarbouxSet {
        &self.sdarboux
    }

    pub fn ladder(&self) -> &LadderSeries {
        &self.ladder
    }

    /// `N^i` in the ambient basis.
    pub fn number_symbols(&self) -> &[HbarSeries] {
        &self.n
    }

    /// `N^i_2`, the ℏ² coefficients (ambient basis).
    pub fn n2(&self) -> Vec<PhasePoly> {
        self.n.iter().map(|s| s.coeff_or_zero(2)).collect()
    }

    pub fn order(&self) -> usize {
        self.n[0].order()
    }
}

/// `{N^i, H^j}_⋆` for all `i, j`; returns the lowest nonzero order.
pub fn compatibility_defect(q: &QuantumIntegrableSystem, ns: &NumberSystem) -> Result<Vec<(usize, usize, StarDefect)>> {
    let mut out = Vec::new();
    for (i, ni) in ns.n.iter().enumerate() {
        for (j, hj) in q.h.iter().enumerate() {
            out.push((i, j, StarDefect::new(star_commutator(ni, hj)?)));
        }
    }
    Ok(out)
}

fn lowest_order(d: &[(usize, usize, StarDefect)]) -> Option<usize> {
    d.iter().filter_map(|(_, _, s)| s.first_nonzero_order).min()
}

/// Solves `{G, h^i} = ⟩H^i_2 − K^i_2 − Ω_ij N^j_2⟨` charge by charge and
/// returns the number symbols of `Z' = Z + ℏ²{G, z}`.
///
/// A charge-`q` monomial satisfies `{G_q, h^i} = −i s (Ωq)_i G_q`, so
/// `G_q = i s R^i_q / (Ωq)_i`, computed by exact division in the ladder ring
/// and required to agree for every `i` with `(Ωq)_i ≠ 0`.
pub fn good_number_correction(q: &QuantumIntegrableSystem, ns: &NumberSystem) -> Result<NumberSystem> {
    let chart = q.chart();
    let m = chart.dim();
    let pre = compatibility_defect(q, ns)?;
    if lowest_order(&pre).is_some_and(|o| o < 3) {
        return Err(Error::Inconsistent(
            "number symbols and Hamiltonians fail to commute at order below 3".into(),
        ));
    }
    let k = k2_omega(&q.f, ns)?;
    let n2 = ns.n2();
    let actions = chart.actions();
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let mut r = &q.h[i].coeff_or_zero(2) - &k.k2[i];
        for (j, n2j) in n2.iter().enumerate() {
            r -= &(&k.omega[i][j].compose(&actions) * n2j);
        }
        rhs.push(angle_fluctuation(&to_ladder(&r, chart)?)?);
    }
    let g = solve_angle_equation(&rhs, &k.omega, ns.ladder.sign)?;
    let s = ns.ladder.sign.as_i64();
    let mut g_gradients = Vec::with_capacity(m);
    for i in 0..m {
        let mut gi = PhasePoly::zero(m, Basis::Ladder);
        for (qv, gq) in charge_components(&g)? {
            if qv[i] != 0 {
                gi += &gq.scale(&(imag_unit() * int(-s * qv[i])));
            }
        }
        g_gradients.push(gi);
    }
    let g_amb = from_ladder(&g, chart)?;
    let mut z = ns.sdarboux.clone();
    let corr: Vec<PhasePoly> = chart
        .forward()
        .iter()
        .map(|za| poisson_bracket(&g_amb, za))
        .collect::<Result<_>>()?;
    if corr.iter().any(|c| !c.is_zero()) {
        z.add_correction(2, &corr)?;
    }
    let mut out = NumberSystem::new_unchecked(&z);
    out.g_gradients = g_gradients;
    out.compatibility_order = Some(lowest_order(&compatibility_defect(q, &out)?));
    Ok(out)
}

/// Finds `G` (ladder basis, no charge-0 part) with `{G, f^i ∘ I} = R^i`.
fn solve_angle_equation(
    rhs: &[PhasePoly],
    omega: &[Vec<ActionPoly>],
    sign: LadderSign,
) -> Result<PhasePoly> {
    let m = rhs.len();
    let s = sign.as_i64();
    let mut by_charge: std::collections::BTreeMap<Vec<i64>, Vec<PhasePoly>> = Default::default();
    for (i, r) in rhs.iter().enumerate() {
        for (qv, comp) in charge_components(r)? {
            by_charge
                .entry(qv)
                .or_insert_with(|| vec![PhasePoly::zero(m, Basis::Ladder); m])[i] = comp;
        }
    }
    let mut g = PhasePoly::zero(m, Basis::Ladder);
    for (qv, comps) in by_charge {
        let mut found: Option<PhasePoly> = None;
        for i in 0..m {
            let mut freq = ActionPoly::zero(m);
            for (kk, &qk) in qv.iter().enumerate() {
                freq = &freq + &omega[i][kk].scale(&int(qk));
            }
            if freq.is_zero() {
                if !comps[i].is_zero() {
                    return Err(Error::Resonance(qv));
                }
                continue;
            }
            let freq_l = action_to_ladder(&freq);
            let quot = comps[i]
                .div_exact(&freq_l)
                .ok_or_else(|| Error::NonPolynomialCorrection(qv.clone()))?;
            let gq = quot.scale(&(imag_unit() * int(s)));
            match &found {
                None => found = Some(gq),
                Some(prev) if *prev == gq => {}
                Some(_) => {
                    return Err(Error::Inconsistent(format!(
                        "charge {qv:?}: the equations for different i disagree"
                    )))
                }
            }
        }
        match found {
            Some(gq) => g += &gq,
            None => return Err(Error::Resonance(qv)),
        }
    }
    Ok(g)
}

/// Pointwise values of `∂G/∂θ^i` at ladder-basis points `(b, b̄)` for systems
/// where exact division fails: `∂G_q/∂θ^i = q_i R^k_q / (Ωq)_k`, checked for
/// agreement across `k` to relative tolerance `1e−12`.
pub fn pointwise_angle_gradients(
    q: &QuantumIntegrableSystem,
    ns: &NumberSystem,
    points: &[Vec<Complex64>],
) -> Result<Vec<Vec<Complex64>>> {
    let chart = q.chart();
    let m = chart.dim();
    let k = k2_omega(&q.f, ns)?;
    let n2 = ns.n2();
    let actions = chart.actions();
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let mut r = &q.h[i].coeff_or_zero(2) - &k.k2[i];
        for (j, n2j) in n2.iter().enumerate() {
            r -= &(&k.omega[i][j].compose(&actions) * n2j);
        }
        rhs.push(charge_components(&angle_fluctuation(&to_ladder(&r, chart)?)?)?);
    }
    let s = ns.ladder.sign.as_i64() as f64;
    let mut out = Vec::with_capacity(points.len());
    for pt in points {
        let acts: Vec<f64> = (0..m).map(|i| (pt[i] * pt[i + m]).re / 2.0).collect();
        let mut grad = vec![Complex64::new(0.0, 0.0); m];
        let charges: std::collections::BTreeSet<Vec<i64>> =
            rhs.iter().flat_map(|r| r.keys().cloned()).collect();
        for qv in charges {
            let mut value: Option<Complex64> = None;
            for (kk, rk) in rhs.iter().enumerate() {
                let freq: f64 = (0..m).map(|j| k.omega[kk][j].eval(&acts) * qv[j] as f64).sum();
                let r = rk.get(&qv).map(|p| p.eval_c64(pt)).unwrap_or_default();
                if freq.abs() < 1e-300 {
                    if r.norm() > 0.0 {
                        return Err(Error::Resonance(qv));
                    }
                    continue;
                }
                let gq = Complex64::new(0.0, s) * r / freq;
                match value {
                    None => value = Some(gq),
                    Some(v) if (v - gq).norm() <= 1e-12 * (1.0 + v.norm()) => {}
                    Some(_) => {
                        return Err(Error::Inconsistent(format!("charge {qv:?}: pointwise mismatch")))
                    }
                }
            }
            if let Some(v) = value {
                for i in 0..m {
                    grad[i] += Complex64::new(0.0, -s * qv[i] as f64) * v;
                }
            }
        }
        out.push(grad);
    }
    Ok(out)
}

/// `E^i = f^i(ℏ(n+½)) + ℏ² F^i_2(ℏ(n+½))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EBKRule {
    pub f: Vec<ActionPoly>,
    pub f2: Vec<ActionPoly>,
    /// Evaluate at `ℏ(n+½)` (true) or `ℏn` (false).
    pub half_shift: bool,
}

/// `F^i_2 ∘ I = ⟨H^i_2 − K^i_2 − Ω_ij N^j_2⟩`, with `N` the corrected number
/// symbols. Fails if `{N, H}_⋆` is not `O(ℏ⁵)` or the order-ℏ² residual keeps
/// angle dependence.
pub fn bs_rule(q: &QuantumIntegrableSystem, ns: &NumberSystem) -> Result<EBKRule> {
    let chart = q.chart();
    let m = chart.dim();
    let order = match ns.compatibility_order {
        Some(o) => o,
        None => lowest_order(&compatibility_defect(q, ns)?),
    };
    if order.is_some_and(|o| o < 5) && order.is_some_and(|o| o <= q.order()) {
        return Err(Error::InsufficientOrder { needed: 5, found: order });
    }
    let k = k2_omega(&q.f, ns)?;
    let n2 = ns.n2();
    let actions = chart.actions();
    let mut f2 = Vec::with_capacity(m);
    for i in 0..m {
        let mut r = &q.h[i].coeff_or_zero(2) - &k.k2[i];
        for (j, n2j) in n2.iter().enumerate() {
            r -= &(&k.omega[i][j].compose(&actions) * n2j);
        }
        let rl = to_ladder(&r, chart)?;
        if !angle_fluctuation(&rl)?.is_zero() {
            return Err(Error::Inconsistent(format!(
                "order-hbar^2 residual of H{} depends on the angles",
                i + 1
            )));
        }
        f2.push(as_action_polynomial(&angle_average(&rl)?)?);
    }
    Ok(EBKRule {
        f: q.f.clone(),
        f2,
        half_shift: true,
    })
}

/// `H^i − (f^i + ℏ² F^i_2) ∘⋆ (N + ℏ/2)` truncated at ℏ³, for the component
/// with the lowest nonzero order; should vanish.
pub fn verify_rule(q: &QuantumIntegrableSystem, ns: &NumberSystem, rule: &EBKRule) -> Result<StarDefect> {
    let order = q.order().min(3);
    let n: Vec<HbarSeries> = ns.n.iter().map(|s| s.truncate(order)).collect();
    let a = star_compose(&rule.f, &n, rule.half_shift)?;
    let b = star_compose(&rule.f2, &n, rule.half_shift)?;
    let worst = (0..a.len())
        .map(|i| StarDefect::new(&(&q.h[i].truncate(order) - &a[i]) - &b[i].shift(2)))
        .min_by_key(|d| d.first_nonzero_order.unwrap_or(usize::MAX))
        .expect("at least one Hamiltonian");
    Ok(worst)
}

/// One row of a predicted spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: Vec<i64>,
    pub e_ebk: Vec<f64>,
}

/// Evaluates the rule at each tuple of quantum numbers.
pub fn spectrum(rule: &EBKRule, hbar: f64, quantum_numbers: &[Vec<i64>]) -> Result<Vec<SpectrumRow>> {
    if hbar.is_nan() || hbar <= 0.0 {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let shift = if rule.half_shift { 0.5 } else { 0.0 };
    quantum_numbers
        .iter()
        .map(|n| {
            if n.len() != rule.f.len() {
                return Err(Error::DimensionMismatch(rule.f.len(), n.len()));
            }
            if let Some(bad) = n.iter().find(|&&v| v < 0) {
                return Err(Error::InvalidArgument(format!("negative quantum number {bad}")));
            }
            let acts: Vec<f64> = n.iter().map(|&v| hbar * (v as f64 + shift)).collect();
            let e = rule
                .f
                .iter()
                .zip(&rule.f2)
                .map(|(f, f2)| f.eval(&acts) + hbar * hbar * f2.eval(&acts))
                .collect();
            Ok(SpectrumRow { n: n.clone(), e_ebk: e })
        })
        .collect()
}
