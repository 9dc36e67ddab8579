//! s'Darboux coordinates: ℏ-series `Z^i` with `{Z^i, Z^j}_⋆ = iℏJ^{ij}` to a
//! given order, the explicit second-order correction, the defect two-form and
//! the homotopy step that removes the leading defect.

use crate::bracket::{pairing, poisson_bracket};
use crate::chart::{gamma, DarbouxChart, GammaTensor};
use crate::error::{Error, Result};
use crate::forms::{poincare_homotopy, PolyOneForm, PolyTwoForm};
use crate::moyal::{star_commutator, StarDefect};
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{gr, imag_unit, GaussianRational};
use crate::series::HbarSeries;

/// Series `Z^a`, `a = 1..2M`, in the ambient basis with `πZ^a = z^a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SDarbouxSet {
    chart: DarbouxChart,
    z: Vec<HbarSeries>,
}

impl SDarbouxSet {
    /// `Z^a = z^a` with no corrections.
    pub fn bare(chart: &DarbouxChart, order: usize) -> Self {
        let z = chart
            .forward()
            .iter()
            .map(|c| HbarSeries::from_poly(c.clone(), order))
            .collect();
        SDarbouxSet {
            chart: chart.clone(),
            z,
        }
    }

    /// `Z^a = z^a + ℏ² Z^a_2` with `Z_2` from [`z2_correction`].
    pub fn corrected(chart: &DarbouxChart, order: usize) -> Result<Self> {
        let mut s = Self::bare(chart, order);
        let z2 = z2_correction(chart)?;
        s.add_correction(2, &z2)?;
        Ok(s)
    }

    pub fn from_series(chart: &DarbouxChart, z: Vec<HbarSeries>) -> Result<Self> {
        if z.len() != chart.forward().len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} series, got {}",
                chart.forward().len(),
                z.len()
            )));
        }
        for (a, s) in z.iter().enumerate() {
            if s.principal() != chart.coordinate(a) {
                return Err(Error::Inconsistent(format!(
                    "principal symbol of Z{} differs from z{}",
                    a + 1,
                    a + 1
                )));
            }
        }
        Ok(SDarbouxSet {
            chart: chart.clone(),
            z,
        })
    }

    /// `Z^a ← Z^a + ℏ^k X^a`.
    pub fn add_correction(&mut self, k: usize, x: &[PhasePoly]) -> Result<()> {
        if x.len() != self.z.len() {
            return Err(Error::InvalidArgument("one correction per coordinate".into()));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("corrections start at order 1".into()));
        }
        for (s, xa) in self.z.iter_mut().zip(x) {
            s.add_at(k, xa);
        }
        Ok(())
    }

    pub fn chart(&self) -> &DarbouxChart {
        &self.chart
    }

    pub fn coords(&self) -> &[HbarSeries] {
        &self.z
    }

    pub fn coordinate(&self, a: usize) -> &HbarSeries {
        &self.z[a]
    }

    pub fn order(&self) -> usize {
        self.z[0].order()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
}

/// `Z^i_2 = (1/48) Γ_{abc} {z^i, Γ^{abc}}` for coordinates `coords` and the
/// upper-index tensor `gamma_upper`, both in the same basis.
pub fn z2_from_gamma(coords: &[PhasePoly], gamma_upper: &GammaTensor) -> Vec<PhasePoly> {
    let lower = gamma_upper.lower();
    let n = gamma_upper.size();
    coords
        .iter()
        .map(|zi| {
            let mut s = PhasePoly::zero(zi.dim(), zi.basis());
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let gl = lower.get(a, b, c);
                        if gl.is_zero() {
                            continue;
                        }
                        let br = poisson_bracket(zi, gamma_upper.get(a, b, c)).expect("same basis");
                        s += &(gl * &br);
                    }
                }
            }
            s.scale(&gr(1, 48))
        })
        .collect()
}

/// Second-order correction for a Darboux chart, in the ambient basis.
pub fn z2_correction(chart: &DarbouxChart) -> Result<Vec<PhasePoly>> {
    let g = gamma(chart)?;
    Ok(z2_from_gamma(chart.forward(), &g))
}

/// `{Z^a, Z^b}_⋆ − iℏJ^{ab}` for every pair `a < b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefectMatrix {
    pub entries: Vec<(usize, usize, StarDefect)>,
}

impl DefectMatrix {
    /// Lowest ℏ power at which any pair fails.
    pub fn first_nonzero_order(&self) -> Option<usize> {
        self.entries
            .iter()
            .filter_map(|(_, _, d)| d.first_nonzero_order)
            .min()
    }

    pub fn is_order_at_least(&self, k: usize) -> bool {
        self.first_nonzero_order().is_none_or(|o| o >= k)
    }

    /// Coefficient of `ℏ^k` in the `(a, b)` residual, antisymmetrically extended.
    pub fn coefficient(&self, a: usize, b: usize, k: usize) -> Option<PhasePoly> {
        if a == b {
            return None;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let d = self.entries.iter().find(|(i, j, _)| *i == lo && *j == hi)?;
        let c = d.2.residual.coeff_or_zero(k);
        Some(if a < b { c } else { -&c })
    }

    /// First failing pair at the lowest failing order.
    pub fn first_failure(&self) -> Option<(usize, usize, usize)> {
        let k = self.first_nonzero_order()?;
        self.entries
            .iter()
            .find(|(_, _, d)| d.first_nonzero_order == Some(k))
            .map(|(a, b, _)| (*a, *b, k))
    }
}

/// Star-commutator defect of a coordinate set `coords` (any flat basis)
/// against `iℏJ`, using `commutator` for the bracket.
pub fn commutator_defect_with<F>(coords: &[HbarSeries], commutator: F) -> Result<DefectMatrix>
where
    F: Fn(&HbarSeries, &HbarSeries) -> Result<HbarSeries>,
{
    let dim = coords[0].dim();
    let basis = coords[0].basis();
    let order = coords[0].order();
    let pairs = pairing(dim, Basis::Chart);
    let mut entries = Vec::new();
    for a in 0..coords.len() {
        for b in (a + 1)..coords.len() {
            let mut r = commutator(&coords[a], &coords[b])?;
            if pairs[a].0 == b {
                let ij = imag_unit() * pairs[a].1.clone();
                r = &r - &HbarSeries::hbar_power(dim, basis, 1, ij, order);
            }
            entries.push((a, b, StarDefect::new(r)));
        }
    }
    Ok(DefectMatrix { entries })
}

/// Per-pair residual `{Z^a, Z^b}_⋆ − iℏJ^{ab}` with the Moyal product.
pub fn sdarboux_defect(s: &SDarbouxSet) -> Result<DefectMatrix> {
    commutator_defect_with(s.coords(), star_commutator)
}

/// The order-`k` part of `ω̃ = (1/iℏ){Z^a, Z^b}_⋆ dz_a ∧ dz_b`, written in
/// `dz^a ∧ dz^b` components with the chart coordinates as variables.
pub fn defect_two_form(s: &SDarbouxSet, defect: &DefectMatrix, k: usize) -> Result<PolyTwoForm> {
    if k == 0 {
        return Err(Error::InvalidArgument("the defect form starts at ℏ¹".into()));
    }
    let dim = s.dim();
    let pairs = pairing(dim, Basis::Chart);
    let minus_i = -imag_unit();
    let mut w = PolyTwoForm::zero(dim, Basis::Chart);
    let n = 2 * dim;
    for a in 0..n {
        for b in (a + 1)..n {
            // lowering with (J^{-1})_{a σ(a)} = −c_a
            let (sa, ca) = (&pairs[a].0, &pairs[a].1);
            let (sb, cb) = (&pairs[b].0, &pairs[b].1);
            let d = defect.coefficient(*sa, *sb, k).expect("distinct indices");
            let c: GaussianRational = ca * cb * &minus_i;
            w.set(a, b, s.chart().to_chart_basis(&d.scale(&c))?);
        }
    }
    Ok(w)
}

/// Data of one homotopy step, kept for verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendStep {
    /// ℏ power of the defect that was removed.
    pub defect_order: usize,
    /// The closed two-form `w = −ω̃_k` that was integrated.
    pub form: PolyTwoForm,
    /// `θ` with `dθ = w`.
    pub primitive: PolyOneForm,
    /// Corrections `X^a` (ambient basis) added at `ℏ^{k−1}`.
    pub correction: Vec<PhasePoly>,
}

/// Removes the leading defect: with the defect first at `ℏ^k`, adds
/// `ℏ^{k−1} X^a`, `X^a = J^{ab} θ_b`, where `dθ = −ω̃_k`. Returns the set
/// unchanged (and `None`) when the defect vanishes through truncation.
pub fn extend_order_with_details(s: &SDarbouxSet) -> Result<(SDarbouxSet, Option<ExtendStep>)> {
    let defect = sdarboux_defect(s)?;
    let Some(k) = defect.first_nonzero_order() else {
        return Ok((s.clone(), None));
    };
    let form = defect_two_form(s, &defect, k)?;
    let w = PolyTwoForm::from_upper(s.dim(), Basis::Chart, |a, b| -form.get(a, b));
    let theta = poincare_homotopy(&w)?;
    let pairs = pairing(s.dim(), Basis::Chart);
    let mut correction = Vec::with_capacity(pairs.len());
    for (sa, ca) in &pairs {
        let xa = theta.get(*sa).scale(ca);
        correction.push(s.chart().to_ambient_basis(&xa)?);
    }
    let mut out = s.clone();
    out.add_correction(k - 1, &correction)?;
    Ok((
        out,
        Some(ExtendStep {
            defect_order: k,
            form: w,
            primitive: theta,
            correction,
        }),
    ))
}

pub fn extend_order(s: &SDarbouxSet) -> Result<SDarbouxSet> {
    Ok(extend_order_with_details(s)?.0)
}
