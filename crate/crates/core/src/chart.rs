//! Darboux charts as polynomial canonical transformations, the connection
//! tensor `Γ^{abc}` built from a chart, actions and ladder symbols.

use num_traits::Zero;

use crate::bracket::{pairing, poisson_bracket};
use crate::error::{Error, Result};
use crate::ladder::{LadderSign, PINNED_LADDER_SIGN};
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{gr, imag_unit, int, GaussianRational};

/// Forward map `z^a(x, p)` (ambient basis) with its polynomial inverse
/// `(x, p)(z)` (chart basis).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DarbouxChart {
    dim: usize,
    forward: Vec<PhasePoly>,
    inverse: Vec<PhasePoly>,
    ladder_sign: LadderSign,
}

/// Outcome of [`DarbouxChart::validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChartReport {
    /// `(a, b, {z^a, z^b} − J^{ab})` for every failing pair.
    pub bracket_failures: Vec<(usize, usize, PhasePoly)>,
    /// Components `k` where `forward(inverse(z))_k ≠ z_k`.
    pub forward_inverse_failures: Vec<(usize, PhasePoly)>,
    /// Components `k` where `inverse(forward(x,p))_k ≠ (x,p)_k`.
    pub inverse_forward_failures: Vec<(usize, PhasePoly)>,
}

impl ChartReport {
    pub fn is_valid(&self) -> bool {
        self.bracket_failures.is_empty()
            && self.forward_inverse_failures.is_empty()
            && self.inverse_forward_failures.is_empty()
    }

    /// Short description of the first failure, if any.
    pub fn first_failure(&self) -> Option<String> {
        if let Some((a, b, r)) = self.bracket_failures.first() {
            return Some(format!("{{z{}, z{}}} - J = {}", a + 1, b + 1, r));
        }
        if let Some((k, r)) = self.forward_inverse_failures.first() {
            return Some(format!("forward(inverse(z)) component {}: residual {}", k + 1, r));
        }
        if let Some((k, r)) = self.inverse_forward_failures.first() {
            return Some(format!("inverse(forward(x,p)) component {}: residual {}", k + 1, r));
        }
        None
    }
}

fn ensure_shape(polys: &[PhasePoly], dim: usize, basis: Basis, what: &str) -> Result<()> {
    if polys.len() != 2 * dim {
        return Err(Error::InvalidChart(format!(
            "{what} has {} components, expected {}",
            polys.len(),
            2 * dim
        )));
    }
    for p in polys {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch(dim, p.dim()));
        }
        if p.basis() != basis {
            return Err(Error::WrongBasis {
                expected: basis,
                found: p.basis(),
            });
        }
    }
    Ok(())
}

impl DarbouxChart {
    /// Builds a chart without checking the Darboux or inverse conditions.
    pub fn from_maps_unchecked(forward: Vec<PhasePoly>, inverse: Vec<PhasePoly>) -> Result<Self> {
        let dim = forward.first().map(PhasePoly::dim).ok_or_else(|| {
            Error::InvalidChart("empty forward map".into())
        })?;
        ensure_shape(&forward, dim, Basis::Ambient, "forward map")?;
        ensure_shape(&inverse, dim, Basis::Chart, "inverse map")?;
        Ok(DarbouxChart {
            dim,
            forward,
            inverse,
            ladder_sign: PINNED_LADDER_SIGN,
        })
    }

    /// Builds and validates a chart.
    pub fn new(forward: Vec<PhasePoly>, inverse: Vec<PhasePoly>) -> Result<Self> {
        let c = Self::from_maps_unchecked(forward, inverse)?;
        let report = c.validate();
        match report.first_failure() {
            None => Ok(c),
            Some(msg) => Err(Error::InvalidChart(msg)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let forward = (0..2 * dim).map(|k| PhasePoly::var(dim, Basis::Ambient, k)).collect();
        let inverse = (0..2 * dim).map(|k| PhasePoly::var(dim, Basis::Chart, k)).collect();
        Self::from_maps_unchecked(forward, inverse).expect("identity chart")
    }

    /// `z = (x, p + x²)`.
    pub fn shear() -> Self {
        let x = PhasePoly::var(1, Basis::Ambient, 0);
        let p = PhasePoly::var(1, Basis::Ambient, 1);
        let z1 = PhasePoly::var(1, Basis::Chart, 0);
        let z2 = PhasePoly::var(1, Basis::Chart, 1);
        Self::from_maps_unchecked(vec![x.clone(), &p + &x.pow(2)], vec![z1.clone(), &z2 - &z1.pow(2)])
            .expect("shear chart")
    }

    /// `u = p + x³`, `z = (x + u³, u)`: two stacked cubic shears. A single
    /// shear (or a shear with a quadratic partner) has vanishing higher
    /// brackets between its coordinates; this one does not, so the bare
    /// coordinates carry a star-commutator defect at ℏ³.
    pub fn double_shear() -> Self {
        let x = PhasePoly::var(1, Basis::Ambient, 0);
        let p = PhasePoly::var(1, Basis::Ambient, 1);
        let u = &p + &x.pow(3);
        let z1 = PhasePoly::var(1, Basis::Chart, 0);
        let z2 = PhasePoly::var(1, Basis::Chart, 1);
        let xi = &z1 - &z2.pow(3);
        let pi = &z2 - &xi.pow(3);
        Self::from_maps_unchecked(vec![&x + &u.pow(3), u], vec![xi, pi]).expect("double shear chart")
    }

    /// Chart acting independently on each mode; the `k`-th factor acts on
    /// `(x_k, p_k)`. Every factor must have `M = 1`.
    pub fn product(factors: &[DarbouxChart]) -> Result<Self> {
        let dim = factors.len();
        if dim == 0 || factors.iter().any(|f| f.dim != 1) {
            return Err(Error::InvalidArgument("product charts take one-mode factors".into()));
        }
        let amb: Vec<PhasePoly> = (0..2 * dim).map(|k| PhasePoly::var(dim, Basis::Ambient, k)).collect();
        let cha: Vec<PhasePoly> = (0..2 * dim).map(|k| PhasePoly::var(dim, Basis::Chart, k)).collect();
        let mut forward = vec![PhasePoly::zero(dim, Basis::Ambient); 2 * dim];
        let mut inverse = vec![PhasePoly::zero(dim, Basis::Chart); 2 * dim];
        for (k, f) in factors.iter().enumerate() {
            let ai = [amb[k].clone(), amb[k + dim].clone()];
            let ci = [cha[k].clone(), cha[k + dim].clone()];
            for s in 0..2 {
                let slot = k + s * dim;
                forward[slot] = f.forward[s].substitute(&ai);
                inverse[slot] = f.inverse[s].substitute(&ci);
            }
        }
        Self::from_maps_unchecked(forward, inverse)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self) -> &[PhasePoly] {
        &self.forward
    }

    pub fn inverse(&self) -> &[PhasePoly] {
        &self.inverse
    }

    pub fn ladder_sign(&self) -> LadderSign {
        self.ladder_sign
    }

    /// Chart coordinate `z^a` as a function of `(x, p)`.
    pub fn coordinate(&self, a: usize) -> &PhasePoly {
        &self.forward[a]
    }

    pub fn validate(&self) -> ChartReport {
        let mut report = ChartReport::default();
        let n = 2 * self.dim;
        let pairs = pairing(self.dim, Basis::Ambient);
        for a in 0..n {
            for b in (a + 1)..n {
                let br = poisson_bracket(&self.forward[a], &self.forward[b]).expect("same basis");
                let mut expect = GaussianRational::zero();
                if pairs[a].0 == b {
                    expect = pairs[a].1.clone();
                }
                let r = &br - &PhasePoly::constant(self.dim, Basis::Ambient, expect);
                if !r.is_zero() {
                    report.bracket_failures.push((a, b, r));
                }
            }
        }
        for k in 0..n {
            let fi = self.forward[k].substitute(&self.inverse);
            let r = &fi - &PhasePoly::var(self.dim, Basis::Chart, k);
            if !r.is_zero() {
                report.forward_inverse_failures.push((k, r));
            }
            let inf = self.inverse[k].substitute(&self.forward);
            let r = &inf - &PhasePoly::var(self.dim, Basis::Ambient, k);
            if !r.is_zero() {
                report.inverse_forward_failures.push((k, r));
            }
        }
        report
    }

    /// Rewrites an ambient-basis polynomial in the chart variables.
    pub fn to_chart_basis(&self, f: &PhasePoly) -> Result<PhasePoly> {
        self.expect(f, Basis::Ambient)?;
        Ok(f.substitute(&self.inverse))
    }

    /// Rewrites a chart-basis polynomial in `(x, p)`.
    pub fn to_ambient_basis(&self, g: &PhasePoly) -> Result<PhasePoly> {
        self.expect(g, Basis::Chart)?;
        Ok(g.substitute(&self.forward))
    }

    fn expect(&self, f: &PhasePoly, basis: Basis) -> Result<()> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, f.dim()));
        }
        if f.basis() != basis {
            return Err(Error::WrongBasis {
                expected: basis,
                found: f.basis(),
            });
        }
        Ok(())
    }

    /// `I^i = ((z^i)² + (z^{i+M})²)/2` in the ambient basis.
    pub fn actions(&self) -> Vec<PhasePoly> {
        (0..self.dim)
            .map(|i| (&self.forward[i].pow(2) + &self.forward[i + self.dim].pow(2)).scale(&gr(1, 2)))
            .collect()
    }

    /// Scaled ladder symbols `b^i = √2 a^i = z^i + s·i·z^{i+M}` followed by
    /// their conjugates, in the ambient basis.
    pub fn ladder_symbols(&self) -> Vec<PhasePoly> {
        let si = imag_unit() * int(self.ladder_sign.as_i64());
        let mut out = Vec::with_capacity(2 * self.dim);
        for i in 0..self.dim {
            out.push(&self.forward[i] + &self.forward[i + self.dim].scale(&si));
        }
        for i in 0..self.dim {
            out.push(&self.forward[i] - &self.forward[i + self.dim].scale(&si));
        }
        out
    }

    /// Spot check of `I^i ≥ 0` at the given `(x, p)` points. Returns the first
    /// offending `(i, point)`.
    pub fn check_actions_nonnegative(&self, points: &[Vec<f64>]) -> Option<(usize, Vec<f64>)> {
        let actions = self.actions();
        for pt in points {
            for (i, a) in actions.iter().enumerate() {
                let v = a.eval_f64(pt);
                if v.re < 0.0 || v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                    return Some((i, pt.clone()));
                }
            }
        }
        None
    }
}

/// Regular sample grid on `[-r, r]^{2M}` with `k` points per axis.
pub fn sample_grid(dim: usize, r: f64, k: usize) -> Vec<Vec<f64>> {
    let n = 2 * dim;
    let axis: Vec<f64> = (0..k)
        .map(|j| if k == 1 { 0.0 } else { -r + 2.0 * r * j as f64 / (k - 1) as f64 })
        .collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|pt| {
                axis.iter().map(move |&v| {
                    let mut q = pt.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Fully covariant or contravariant three-index tensor of polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaTensor {
    n: usize,
    entries: Vec<PhasePoly>,
}

impl GammaTensor {
    pub fn zero(dim: usize, basis: Basis) -> Self {
        let n = 2 * dim;
        GammaTensor {
            n,
            entries: vec![PhasePoly::zero(dim, basis); n * n * n],
        }
    }

    pub fn from_fn<F>(dim: usize, basis: Basis, mut f: F) -> Self
    where
        F: FnMut(usize, usize, usize) -> PhasePoly,
    {
        let mut g = Self::zero(dim, basis);
        for a in 0..g.n {
            for b in 0..g.n {
                for c in 0..g.n {
                    let v = f(a, b, c);
                    assert!(v.dim() == dim && v.basis() == basis);
                    let k = g.idx(a, b, c);
                    g.entries[k] = v;
                }
            }
        }
        g
    }

    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.n + b) * self.n + c
    }

    /// Number of index values, `2M`.
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n / 2
    }

    pub fn basis(&self) -> Basis {
        self.entries[0].basis()
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> &PhasePoly {
        &self.entries[self.idx(a, b, c)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: PhasePoly) {
        let k = self.idx(a, b, c);
        self.entries[k] = v;
    }

    /// Sets all six permutations of `(a, b, c)`.
    pub fn set_symmetric(&mut self, a: usize, b: usize, c: usize, v: PhasePoly) {
        for (i, j, k) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
            self.set(i, j, k, v.clone());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(PhasePoly::is_zero)
    }

    /// First index triple that breaks full permutation symmetry.
    pub fn symmetry_violation(&self) -> Option<[usize; 3]> {
        for a in 0..self.n {
            for b in 0..self.n {
                for c in 0..self.n {
                    let v = self.get(a, b, c);
                    if v != self.get(b, a, c) || v != self.get(a, c, b) {
                        return Some([a, b, c]);
                    }
                }
            }
        }
        None
    }

    /// Maximum total degree over the entries.
    pub fn degree(&self) -> Option<u32> {
        self.entries.iter().filter_map(PhasePoly::degree).max()
    }

    /// `T_{abc} = J_{aa'} J_{bb'} J_{cc'} T^{a'b'c'}` with `J_{ij}` the inverse of `J^{ij}`
    /// (the same contraction maps lower indices back up with `J^{ij}`).
    pub fn lower(&self) -> GammaTensor {
        let pairs = pairing(self.dim(), Basis::Chart);
        // (J^{-1})_{a, σ(a)} = −c_a for the canonical tensor
        let lowered = |a: usize| (pairs[a].0, -pairs[a].1.clone());
        self.contract_each_index(lowered)
    }

    /// Inverse of [`GammaTensor::lower`].
    pub fn raise(&self) -> GammaTensor {
        let pairs = pairing(self.dim(), Basis::Chart);
        let raised = |a: usize| (pairs[a].0, pairs[a].1.clone());
        self.contract_each_index(raised)
    }

    fn contract_each_index<F>(&self, m: F) -> GammaTensor
    where
        F: Fn(usize) -> (usize, GaussianRational),
    {
        GammaTensor::from_fn(self.dim(), self.basis(), |a, b, c| {
            let (sa, ca) = m(a);
            let (sb, cb) = m(b);
            let (sc, cc) = m(c);
            self.get(sa, sb, sc).scale(&(ca * cb * cc))
        })
    }

    /// Applies `f` to every entry.
    pub fn map<F>(&self, f: F) -> GammaTensor
    where
        F: Fn(&PhasePoly) -> PhasePoly,
    {
        let entries: Vec<PhasePoly> = self.entries.iter().map(f).collect();
        GammaTensor { n: self.n, entries }
    }
}

/// `v_j = Σ_i ∂_i f J^{ij}`, the raised gradient entering every arrow `f → ·`.
pub fn raised_gradient(f: &PhasePoly) -> Vec<PhasePoly> {
    let pairs = pairing(f.dim(), f.basis());
    let mut v = vec![PhasePoly::zero(f.dim(), f.basis()); f.nvars()];
    for (i, (s, c)) in pairs.iter().enumerate() {
        v[*s] = f.derivative(i).scale(c);
    }
    v
}

/// The diagram `f_a → f_b ← f_c`: `∂_i f_a J^{ij} ∂_j ∂_l f_b J^{kl} ∂_k f_c`.
pub fn arrows_into(fa: &PhasePoly, fb: &PhasePoly, fc: &PhasePoly) -> PhasePoly {
    let va = raised_gradient(fa);
    let vc = raised_gradient(fc);
    let mut s = PhasePoly::zero(fb.dim(), fb.basis());
    for (j, vaj) in va.iter().enumerate() {
        if vaj.is_zero() {
            continue;
        }
        let dj = fb.derivative(j);
        for (l, vcl) in vc.iter().enumerate() {
            if vcl.is_zero() {
                continue;
            }
            s += &(&(vaj * &dj.derivative(l)) * vcl);
        }
    }
    s
}

/// `Γ^{abc}` for the coordinate functions `forward` (ambient basis): the
/// diagram `z^a → z^b ← z^c`, i.e. `∂_i z^a J^{ij} ∂_j ∂_l z^b J^{kl} ∂_k z^c`.
pub fn gamma_of_map(forward: &[PhasePoly]) -> GammaTensor {
    let dim = forward[0].dim();
    let basis = forward[0].basis();
    let n = 2 * dim;
    let grads: Vec<Vec<PhasePoly>> = forward.iter().map(raised_gradient).collect();
    let hess: Vec<Vec<Vec<PhasePoly>>> = forward
        .iter()
        .map(|z| {
            (0..n)
                .map(|j| (0..n).map(|l| z.derivative(j).derivative(l)).collect())
                .collect()
        })
        .collect();
    GammaTensor::from_fn(dim, basis, |a, b, c| {
        let mut s = PhasePoly::zero(dim, basis);
        for j in 0..n {
            if grads[a][j].is_zero() {
                continue;
            }
            for l in 0..n {
                let h = &hess[b][j][l];
                if h.is_zero() || grads[c][l].is_zero() {
                    continue;
                }
                s += &(&(&grads[a][j] * h) * &grads[c][l]);
            }
        }
        s
    })
}

/// `Γ^{abc}` of a chart, validated to be fully symmetric.
pub fn gamma(chart: &DarbouxChart) -> Result<GammaTensor> {
    let g = gamma_of_map(chart.forward());
    if let Some(idx) = g.symmetry_violation() {
        return Err(Error::AsymmetricConnection(idx));
    }
    Ok(g)
}

/// Residual of `{z^d, Γ^{abc}} = z^a → z^d ← z^c` with an extra arrow
/// `z^b → z^d`, i.e. `∂_i z^a ∂_k z^b ∂_m z^c ∂^i ∂^k ∂^m z^d`.
/// Returns every nonzero residual keyed by `[a, b, c, d]`.
pub fn magic_identity_defect_of(forward: &[PhasePoly]) -> Vec<([usize; 4], PhasePoly)> {
    let dim = forward[0].dim();
    let n = 2 * dim;
    let g = gamma_of_map(forward);
    let grads: Vec<Vec<PhasePoly>> = forward.iter().map(raised_gradient).collect();
    let mut out = Vec::new();
    for d in 0..n {
        let zd = &forward[d];
        let mut third = vec![vec![vec![PhasePoly::zero(dim, zd.basis()); n]; n]; n];
        for (j, tj) in third.iter_mut().enumerate() {
            let dj = zd.derivative(j);
            for (l, tjl) in tj.iter_mut().enumerate() {
                let djl = dj.derivative(l);
                for (m, slot) in tjl.iter_mut().enumerate() {
                    *slot = djl.derivative(m);
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let lhs = poisson_bracket(zd, g.get(a, b, c)).expect("same basis");
                    let mut rhs = PhasePoly::zero(dim, zd.basis());
                    for (j, tj) in third.iter().enumerate() {
                        if grads[a][j].is_zero() {
                            continue;
                        }
                        for (l, tjl) in tj.iter().enumerate() {
                            if grads[b][l].is_zero() {
                                continue;
                            }
                            let ab = &grads[a][j] * &grads[b][l];
                            for (m, t) in tjl.iter().enumerate() {
                                if t.is_zero() || grads[c][m].is_zero() {
                                    continue;
                                }
                                rhs += &(&(&ab * &grads[c][m]) * t);
                            }
                        }
                    }
                    let r = &lhs - &rhs;
                    if !r.is_zero() {
                        out.push(([a, b, c, d], r));
                    }
                }
            }
        }
    }
    out
}

pub fn magic_identity_defect(chart: &DarbouxChart) -> Vec<([usize; 4], PhasePoly)> {
    magic_identity_defect_of(chart.forward())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::poisson_tensor;
    use crate::scalar::to_c64;

    fn x() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 0)
    }
    fn p() -> PhasePoly {
        PhasePoly::var(1, Basis::Ambient, 1)
    }

    #[test]
    fn builtin_charts_are_valid() {
        for c in [
            DarbouxChart::identity(1),
            DarbouxChart::identity(2),
            DarbouxChart::shear(),
            DarbouxChart::double_shear(),
            DarbouxChart::product(&[DarbouxChart::shear(), DarbouxChart::identity(1)]).unwrap(),
        ] {
            let r = c.validate();
            assert!(r.is_valid(), "{:?}", r.first_failure());
        }
    }

    #[test]
    fn scaled_chart_is_rejected() {
        let z1 = PhasePoly::var(1, Basis::Chart, 0);
        let z2 = PhasePoly::var(1, Basis::Chart, 1);
        let c = DarbouxChart::from_maps_unchecked(vec![x(), p().scale(&int(2))], vec![z1, z2.scale(&gr(1, 2))])
            .unwrap();
        let r = c.validate();
        assert_eq!(r.bracket_failures.len(), 1);
        assert_eq!(r.bracket_failures[0].2, PhasePoly::one(1, Basis::Ambient));
        assert!(r.forward_inverse_failures.is_empty());
    }

    #[test]
    fn shear_actions() {
        let c = DarbouxChart::shear();
        let i = (&x().pow(2) + &(&p() + &x().pow(2)).pow(2)).scale(&gr(1, 2));
        assert_eq!(c.actions(), vec![i.clone()]);
        let l = c.ladder_symbols();
        assert_eq!((&l[0] * &l[1]).scale(&gr(1, 2)), i);
        assert!(c.check_actions_nonnegative(&sample_grid(1, 2.0, 9)).is_none());
    }

    #[test]
    fn gamma_matches_dense_index_sum() {
        for chart in [DarbouxChart::shear(), DarbouxChart::double_shear()] {
            let g = gamma(&chart).unwrap();
            let n = 2;
            let j = poisson_tensor(1, Basis::Ambient);
            let jf: Vec<Vec<f64>> = j.iter().map(|r| r.iter().map(|c| to_c64(c).re).collect()).collect();
            for pt in [[0.3, -0.7], [1.1, 0.4], [-0.5, 2.0]] {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let z = chart.forward();
                            let mut s = 0.0;
                            for i in 0..n {
                                for jj in 0..n {
                                    for k in 0..n {
                                        for l in 0..n {
                                            s += z[a].derivative(i).eval_f64(&pt).re
                                                * jf[i][jj]
                                                * z[b].derivative(jj).derivative(l).eval_f64(&pt).re
                                                * jf[k][l]
                                                * z[c].derivative(k).eval_f64(&pt).re;
                                        }
                                    }
                                }
                            }
                            let e = g.get(a, b, c).eval_f64(&pt).re;
                            assert!((s - e).abs() < 1e-9 * (1.0 + s.abs()), "{a}{b}{c}: {s} vs {e}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shear_gamma_has_single_component() {
        let g = gamma(&DarbouxChart::shear()).unwrap();
        assert_eq!(g.get(1, 1, 1), &PhasePoly::constant(1, Basis::Ambient, int(2)));
        for (a, b, c) in [(0, 0, 0), (0, 0, 1), (0, 1, 1)] {
            assert!(g.get(a, b, c).is_zero());
        }
        assert!(gamma(&DarbouxChart::identity(2)).unwrap().is_zero());
    }

    #[test]
    fn lower_and_raise_are_inverse() {
        let g = gamma(&DarbouxChart::double_shear()).unwrap();
        assert_eq!(g.lower().raise(), g);
        assert!(g.lower().symmetry_violation().is_none());
    }

    #[test]
    fn magic_identity_holds_for_charts() {
        for c in [DarbouxChart::identity(1), DarbouxChart::shear(), DarbouxChart::double_shear()] {
            assert!(magic_identity_defect(&c).is_empty());
        }
    }

    #[test]
    fn magic_identity_fails_for_non_darboux_map() {
        let broken = vec![x(), &p().scale(&int(2)) + &(&x().pow(2) * &p())];
        assert!(!magic_identity_defect_of(&broken).is_empty());
    }

    #[test]
    fn linear_symplectic_chart_has_no_gamma() {
        let z1 = PhasePoly::var(1, Basis::Chart, 0);
        let z2 = PhasePoly::var(1, Basis::Chart, 1);
        let c = DarbouxChart::new(vec![&x() + &p(), p()], vec![&z1 - &z2, z2]).unwrap();
        assert!(gamma(&c).unwrap().is_zero());
    }
}
