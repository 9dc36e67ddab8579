//! Weyl quantization of one-mode polynomial symbols as truncated matrices in
//! the harmonic-oscillator basis, dense Hermitian eigenvalues, and EBK versus
//! matrix comparisons with a log-log convergence fit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number::{spectrum, EBKRule};
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{binomial, rational_to_f64, to_c64};
use crate::series::HbarSeries;

/// Relative change allowed between truncations `D` and `2D`.
pub const CONVERGENCE_TOL: f64 = 1e-8;
/// Per-pair eigen-residual bound relative to `‖M‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Hermiticity bound relative to the largest entry.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub hbar: f64,
    pub entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |M − M†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= HERMITICITY_TOL * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Leading `k × k` block.
    pub fn block(&self, k: usize) -> DMatrix<Complex64> {
        self.entries.view((0, 0), (k, k)).into_owned()
    }
}

/// `X = √(ℏ/2)(a + a†)`, `a|n⟩ = √n |n−1⟩`.
pub fn position_matrix(dim: usize, hbar: f64) -> DMatrix<Complex64> {
    let s = (hbar / 2.0).sqrt();
    DMatrix::from_fn(dim, dim, |i, j| {
        if i + 1 == j {
            Complex64::new(s * (j as f64).sqrt(), 0.0)
        } else if j + 1 == i {
            Complex64::new(s * (i as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `P = i√(ℏ/2)(a† − a)`.
pub fn momentum_matrix(dim: usize, hbar: f64) -> DMatrix<Complex64> {
    let s = (hbar / 2.0).sqrt();
    DMatrix::from_fn(dim, dim, |i, j| {
        if j + 1 == i {
            Complex64::new(0.0, s * (i as f64).sqrt())
        } else if i + 1 == j {
            Complex64::new(0.0, -s * (j as f64).sqrt())
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn powers(m: &DMatrix<Complex64>, k: usize) -> Vec<DMatrix<Complex64>> {
    let mut out = vec![DMatrix::identity(m.nrows(), m.ncols())];
    for i in 1..=k {
        let next = &out[i - 1] * m;
        out.push(next);
    }
    out
}

fn check_symbol(f: &PhasePoly) -> Result<()> {
    if f.basis() != Basis::Ambient {
        return Err(Error::WrongBasis {
            expected: Basis::Ambient,
            found: f.basis(),
        });
    }
    if f.dim() != 1 {
        return Err(Error::Unsupported(format!("matrix quantization is one-mode only, got M = {}", f.dim())));
    }
    Ok(())
}

/// Weyl quantization of `Σ_k ℏ^k f_k` evaluated at `hbar`, truncated to `dim`.
/// Built at `dim + degree` and cropped, so every entry of the returned block
/// equals the infinite matrix element.
pub fn weyl_matrix_terms(terms: &[(f64, &PhasePoly)], dim: usize, hbar: f64) -> Result<OperatorMatrix> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let deg = terms.iter().filter_map(|(_, f)| f.degree()).max().unwrap_or(0) as usize;
    for (_, f) in terms {
        check_symbol(f)?;
    }
    if dim <= deg {
        return Err(Error::InvalidArgument(format!(
            "truncation {dim} too small for a degree-{deg} symbol"
        )));
    }
    let big = dim + deg;
    let xp = powers(&position_matrix(big, hbar), deg);
    let pp = powers(&momentum_matrix(big, hbar), deg);
    let mut acc = DMatrix::<Complex64>::zeros(big, big);
    for (w, f) in terms {
        for (mono, c) in f.terms() {
            let e = mono.exponents();
            let (m, n) = (e[0] as usize, e[1] as usize);
            let coef = to_c64(c) * *w / 2f64.powi(m as i32);
            for k in 0..=m {
                let b = rational_to_f64(&num_rational::BigRational::from_integer(binomial(m as u32, k as u32)));
                let t = &(&xp[k] * &pp[n]) * &xp[m - k];
                acc += t * (coef * b);
            }
        }
    }
    Ok(OperatorMatrix {
        hbar,
        entries: acc.view((0, 0), (dim, dim)).into_owned(),
    })
}

pub fn weyl_matrix(f: &PhasePoly, dim: usize, hbar: f64) -> Result<OperatorMatrix> {
    weyl_matrix_terms(&[(1.0, f)], dim, hbar)
}

/// Weyl quantization of an ℏ-series evaluated at `hbar`.
pub fn weyl_matrix_series(h: &HbarSeries, dim: usize, hbar: f64) -> Result<OperatorMatrix> {
    let terms: Vec<(f64, &PhasePoly)> = h
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (hbar.powi(k as i32), c))
        .collect();
    if terms.is_empty() {
        return weyl_matrix(&PhasePoly::zero(h.dim(), h.basis()), dim, hbar);
    }
    weyl_matrix_terms(&terms, dim, hbar)
}

/// All eigenvalues, ascending. Each pair is checked against
/// `‖Mv − λv‖ ≤ 1e−10 ‖M‖` (Frobenius norm).
pub fn eigenvalues(m: &OperatorMatrix) -> Result<Vec<f64>> {
    if !m.is_hermitian() {
        return Err(Error::Oracle(format!(
            "matrix is not Hermitian (residual {:.3e})",
            m.hermiticity_residual()
        )));
    }
    let norm = m.entries.norm();
    let eig = m.entries.clone().symmetric_eigen();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let r = (&m.entries * v - v * Complex64::new(*lam, 0.0)).norm();
        if r > RESIDUAL_TOL * norm.max(1.0) {
            return Err(Error::Oracle(format!("eigenpair {k} residual {r:.3e} exceeds bound")));
        }
    }
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

/// Low eigenvalue with its truncation-convergence flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: usize,
    pub value: f64,
    pub converged: bool,
}

/// Eigenvalues at `dim` and `2 dim`; level `n` is converged when the relative
/// change is below [`CONVERGENCE_TOL`].
pub fn converged_levels(h: &HbarSeries, dim: usize, hbar: f64, n_max: usize) -> Result<Vec<Level>> {
    let lo = eigenvalues(&weyl_matrix_series(h, dim, hbar)?)?;
    let hi = eigenvalues(&weyl_matrix_series(h, 2 * dim, hbar)?)?;
    Ok((0..=n_max.min(dim - 1))
        .map(|n| {
            let scale = hi[n].abs().max(f64::MIN_POSITIVE);
            Level {
                n,
                value: hi[n],
                converged: (lo[n] - hi[n]).abs() <= CONVERGENCE_TOL * scale,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub hbar: f64,
    pub n: usize,
    pub e_ebk: f64,
    pub e_oracle: f64,
    pub abs_diff: f64,
}

/// Least-squares line through `(log ℏ, log max_n |diff|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dim: usize,
    pub rows: Vec<ComparisonRow>,
    /// `(ℏ, n)` pairs dropped because doubling the truncation moved them.
    pub unconverged: Vec<(f64, usize)>,
    /// Set when every difference sits at floating-point roundoff, in which
    /// case no slope is fitted (the rule is exact for this symbol).
    pub roundoff_limited: bool,
    pub fit: Option<SlopeFit>,
}

impl ComparisonReport {
    pub fn max_abs_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max)
    }

    pub fn max_diff_at(&self, hbar: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.hbar == hbar)
            .map(|r| r.abs_diff)
            .fold(0.0, f64::max)
    }
}

/// A difference counts as roundoff when below this multiple of `|E|` (with a
/// floor of `ℏ^{deg}` so that near-zero levels do not dominate).
pub const ROUNDOFF_REL: f64 = 1e-11;

pub fn fit_slope(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, d)| *h > 0.0 && *d > 0.0)
        .map(|(h, d)| (h.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(SlopeFit {
        slope,
        intercept: my - slope * mx,
        points: points.to_vec(),
    })
}

/// Compares the one-mode rule against the matrix spectrum of `h` for every
/// `ℏ` in `hbars` (run in parallel) and levels `n ≤ n_max`.
pub fn compare(rule: &EBKRule, h: &HbarSeries, dim: usize, hbars: &[f64], n_max: usize) -> Result<ComparisonReport> {
    if rule.f.len() != 1 {
        return Err(Error::Unsupported("comparison is one-mode only".into()));
    }
    let per_hbar: Vec<Result<(Vec<ComparisonRow>, Vec<(f64, usize)>)>> = hbars
        .par_iter()
        .map(|&hbar| {
            let levels = converged_levels(h, dim, hbar, n_max)?;
            let qns: Vec<Vec<i64>> = levels.iter().map(|l| vec![l.n as i64]).collect();
            let ebk = spectrum(rule, hbar, &qns)?;
            let mut rows = Vec::new();
            let mut bad = Vec::new();
            for (l, e) in levels.iter().zip(ebk) {
                if !l.converged {
                    bad.push((hbar, l.n));
                    continue;
                }
                let e = e.e_ebk[0];
                rows.push(ComparisonRow {
                    hbar,
                    n: l.n,
                    e_ebk: e,
                    e_oracle: l.value,
                    abs_diff: (e - l.value).abs(),
                });
            }
            if rows.is_empty() {
                return Err(Error::Oracle(format!("no converged levels at hbar = {hbar} for n <= {n_max}")));
            }
            Ok((rows, bad))
        })
        .collect();
    let mut rows = Vec::new();
    let mut unconverged = Vec::new();
    for r in per_hbar {
        let (a, b) = r?;
        rows.extend(a);
        unconverged.extend(b);
    }
    let roundoff_limited = rows
        .iter()
        .all(|r| r.abs_diff <= ROUNDOFF_REL * r.e_oracle.abs().max(r.hbar.powi(2)));
    let fit = if roundoff_limited || hbars.len() < 2 {
        None
    } else {
        let pts: Vec<(f64, f64)> = hbars
            .iter()
            .map(|&hb| {
                let d = rows.iter().filter(|r| r.hbar == hb).map(|r| r.abs_diff).fold(0.0, f64::max);
                (hb, d)
            })
            .collect();
        fit_slope(&pts)
    };
    Ok(ComparisonReport {
        dim,
        rows,
        unconverged,
        roundoff_limited,
        fit,
    })
}

/// Weyl matrix with exact entries, stored in the rescaled basis
/// `|n⟩' = w_n |n⟩`, `w_n = √(n!) (2/ℏ)^{n/2}`. In that basis position and
/// momentum are bidiagonal with Gaussian-rational entries
/// (`X'_{n,n+1} = n+1`, `X'_{n+1,n} = ℏ/2`, `P'_{n,n+1} = −i(n+1)`,
/// `P'_{n+1,n} = iℏ/2`), so sums and products stay exact. The matrix in the
/// orthonormal basis is `M_{ij} = M'_{ij} w_i / w_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactOperatorMatrix {
    pub dim: usize,
    pub hbar: num_rational::BigRational,
    /// Nonzero entries of `M'`.
    pub entries: std::collections::BTreeMap<(usize, usize), crate::scalar::GaussianRational>,
}

impl ExactOperatorMatrix {
    pub fn zero(dim: usize, hbar: num_rational::BigRational) -> Self {
        ExactOperatorMatrix {
            dim,
            hbar,
            entries: Default::default(),
        }
    }

    pub fn identity(dim: usize, hbar: num_rational::BigRational) -> Self {
        let mut m = Self::zero(dim, hbar);
        for i in 0..dim {
            m.entries.insert((i, i), crate::scalar::gr(1, 1));
        }
        m
    }

    fn add_entry(&mut self, i: usize, j: usize, v: crate::scalar::GaussianRational) {
        use num_traits::Zero;
        let e = self.entries.entry((i, j)).or_insert_with(crate::scalar::GaussianRational::zero);
        *e += v;
        if e.is_zero() {
            self.entries.remove(&(i, j));
        }
    }

    pub fn position(dim: usize, hbar: &num_rational::BigRational) -> Self {
        let half = crate::scalar::real(hbar / num_rational::BigRational::from_integer(2.into()));
        let mut m = Self::zero(dim, hbar.clone());
        for n in 0..dim.saturating_sub(1) {
            m.entries.insert((n, n + 1), crate::scalar::int(n as i64 + 1));
            m.entries.insert((n + 1, n), half.clone());
        }
        m
    }

    pub fn momentum(dim: usize, hbar: &num_rational::BigRational) -> Self {
        let i = crate::scalar::imag_unit();
        let half = crate::scalar::real(hbar / num_rational::BigRational::from_integer(2.into()));
        let mut m = Self::zero(dim, hbar.clone());
        for n in 0..dim.saturating_sub(1) {
            m.entries.insert((n, n + 1), -(&i * crate::scalar::int(n as i64 + 1)));
            m.entries.insert((n + 1, n), &i * &half);
        }
        m
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut rows: Vec<Vec<(usize, &crate::scalar::GaussianRational)>> = vec![Vec::new(); rhs.dim];
        for ((k, j), v) in &rhs.entries {
            rows[*k].push((*j, v));
        }
        let mut out = Self::zero(self.dim, self.hbar.clone());
        for ((i, k), a) in &self.entries {
            for (j, b) in &rows[*k] {
                out.add_entry(*i, *j, a * *b);
            }
        }
        out
    }

    pub fn add_scaled(&mut self, rhs: &Self, c: &crate::scalar::GaussianRational) {
        for ((i, j), v) in &rhs.entries {
            self.add_entry(*i, *j, v * c);
        }
    }

    /// Leading `k × k` block.
    pub fn block(&self, k: usize) -> Self {
        ExactOperatorMatrix {
            dim: k,
            hbar: self.hbar.clone(),
            entries: self
                .entries
                .iter()
                .filter(|((i, j), _)| *i < k && *j < k)
                .map(|(ij, v)| (*ij, v.clone()))
                .collect(),
        }
    }

    /// The matrix in the orthonormal basis.
    pub fn to_float(&self) -> OperatorMatrix {
        let hbar = rational_to_f64(&self.hbar);
        let mut entries = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for ((i, j), v) in &self.entries {
            // w_i / w_j = Π_{k=j+1..i} √(2k/ℏ)  (or its inverse)
            let (lo, hi) = if i >= j { (*j, *i) } else { (*i, *j) };
            let mut r = 1.0;
            for k in (lo + 1)..=hi {
                r *= (2.0 * k as f64 / hbar).sqrt();
            }
            let ratio = if i >= j { r } else { 1.0 / r };
            entries[(*i, *j)] = to_c64(v) * ratio;
        }
        OperatorMatrix { hbar, entries }
    }
}

/// Exact Weyl quantization at a rational `ℏ`, built at `dim + degree` and
/// cropped like [`weyl_matrix`].
pub fn weyl_matrix_exact(f: &PhasePoly, dim: usize, hbar: &num_rational::BigRational) -> Result<ExactOperatorMatrix> {
    use num_traits::Signed;
    check_symbol(f)?;
    if !hbar.is_positive() {
        return Err(Error::InvalidArgument("hbar must be positive".into()));
    }
    let deg = f.degree().unwrap_or(0) as usize;
    if dim <= deg {
        return Err(Error::InvalidArgument(format!(
            "truncation {dim} too small for a degree-{deg} symbol"
        )));
    }
    let big = dim + deg;
    let mut xp = vec![ExactOperatorMatrix::identity(big, hbar.clone())];
    let mut pp = vec![ExactOperatorMatrix::identity(big, hbar.clone())];
    let (x, p) = (ExactOperatorMatrix::position(big, hbar), ExactOperatorMatrix::momentum(big, hbar));
    for k in 1..=deg {
        xp.push(xp[k - 1].mul(&x));
        pp.push(pp[k - 1].mul(&p));
    }
    let mut acc = ExactOperatorMatrix::zero(big, hbar.clone());
    for (mono, c) in f.terms() {
        let e = mono.exponents();
        let (m, n) = (e[0] as usize, e[1] as usize);
        let base = c * crate::scalar::gr(1, 1i64 << m);
        for k in 0..=m {
            let b = crate::scalar::real(num_rational::BigRational::from_integer(binomial(m as u32, k as u32)));
            let t = xp[k].mul(&pp[n]).mul(&xp[m - k]);
            acc.add_scaled(&t, &(&base * &b));
        }
    }
    Ok(acc.block(dim))
}

/// [`weyl_matrix_exact`] of `Σ_k ℏ^k h_k` at the given `ℏ`.
pub fn weyl_matrix_series_exact(h: &HbarSeries, dim: usize, hbar: &num_rational::BigRational) -> Result<ExactOperatorMatrix> {
    let mut sum = PhasePoly::zero(h.dim(), h.basis());
    let mut hk = num_rational::BigRational::from_integer(1.into());
    for c in h.coeffs() {
        sum += &c.scale_rational(&hk);
        hk *= hbar;
    }
    weyl_matrix_exact(&sum, dim, hbar)
}
