//! File formats: canonical JSON for polynomials, charts and connections,
//! JSON/CSV tables for spectra and comparisons, binary matrix dumps and the
//! run configuration.
//!
//! Polynomials serialize as `{"M", "basis", "terms": [{"exp", "re", "im"}]}`
//! with exact `p/q` strings and terms in ascending graded-lex order, so equal
//! polynomials always produce identical bytes. Wherever a polynomial is read,
//! an expression string (see [`crate::parse`]) is accepted instead.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::{DarbouxChart, GammaTensor};
use crate::error::{Error, Result};
use crate::fedosov::SymplecticConnection;
use crate::number::SpectrumRow;
use crate::oracle::{ComparisonReport, OperatorMatrix};
use crate::parse::parse_poly;
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{format_rational, parse_rational, GaussianRational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDoc {
    pub exp: Vec<u32>,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyDoc {
    #[serde(rename = "M")]
    pub m: usize,
    pub basis: Basis,
    pub terms: Vec<TermDoc>,
}

impl PolyDoc {
    pub fn from_poly(f: &PhasePoly) -> Self {
        PolyDoc {
            m: f.dim(),
            basis: f.basis(),
            terms: f
                .terms()
                .map(|(mono, c)| TermDoc {
                    exp: mono.exponents().to_vec(),
                    re: format_rational(&c.re),
                    im: format_rational(&c.im),
                })
                .collect(),
        }
    }

    pub fn to_poly(&self) -> Result<PhasePoly> {
        let nvars = 2 * self.m;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.exp.len() != nvars {
                return Err(Error::InvalidArgument(format!(
                    "exponent vector {:?} has length {}, expected {nvars}",
                    t.exp,
                    t.exp.len()
                )));
            }
            terms.push((t.exp.clone(), GaussianRational::new(parse_rational(&t.re)?, parse_rational(&t.im)?)));
        }
        Ok(PhasePoly::from_terms(self.m, self.basis, terms))
    }
}

/// A polynomial given either canonically or as an expression string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Text(String),
    Doc(PolyDoc),
}

impl PolySpec {
    pub fn resolve(&self, dim: usize, basis: Basis) -> Result<PhasePoly> {
        let p = match self {
            PolySpec::Text(s) => parse_poly(s, dim, basis)?,
            PolySpec::Doc(d) => d.to_poly()?,
        };
        if p.dim() != dim || p.basis() != basis {
            return Err(Error::InvalidArgument(format!(
                "expected an M = {dim} {basis} polynomial, found M = {} {}",
                p.dim(),
                p.basis()
            )));
        }
        Ok(p)
    }
}

pub fn poly_to_json(f: &PhasePoly) -> String {
    serde_json::to_string(&PolyDoc::from_poly(f)).expect("serializable")
}

pub fn poly_from_json(s: &str) -> Result<PhasePoly> {
    serde_json::from_str::<PolyDoc>(s)?.to_poly()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartDoc {
    #[serde(rename = "M")]
    pub m: usize,
    /// `z^a(x, p)`, ambient variables.
    pub forward: Vec<PolySpec>,
    /// `(x, p)(z)`, chart variables `z1..z2M`.
    pub inverse: Vec<PolySpec>,
}

impl ChartDoc {
    pub fn from_chart(c: &DarbouxChart) -> Self {
        ChartDoc {
            m: c.dim(),
            forward: c.forward().iter().map(|p| PolySpec::Doc(PolyDoc::from_poly(p))).collect(),
            inverse: c.inverse().iter().map(|p| PolySpec::Doc(PolyDoc::from_poly(p))).collect(),
        }
    }

    /// Builds the chart without validating it; call
    /// [`DarbouxChart::validate`] to check it.
    pub fn to_chart_unchecked(&self) -> Result<DarbouxChart> {
        let fwd = self
            .forward
            .iter()
            .map(|s| s.resolve(self.m, Basis::Ambient))
            .collect::<Result<Vec<_>>>()?;
        let inv = self
            .inverse
            .iter()
            .map(|s| s.resolve(self.m, Basis::Chart))
            .collect::<Result<Vec<_>>>()?;
        DarbouxChart::from_maps_unchecked(fwd, inv)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_chart_unchecked(path: &Path) -> Result<DarbouxChart> {
    read_json::<ChartDoc>(path)?.to_chart_unchecked()
}

/// One entry `Γ^{abc}` with one-based indices; the other orderings are filled
/// in by symmetry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaEntryDoc {
    pub index: [usize; 3],
    pub poly: PolySpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionDoc {
    #[serde(rename = "M")]
    pub m: usize,
    pub gamma: Vec<GammaEntryDoc>,
}

impl ConnectionDoc {
    pub fn from_connection(c: &SymplecticConnection) -> Self {
        let g = c.gamma_upper();
        let n = g.size();
        let mut gamma = Vec::new();
        for a in 0..n {
            for b in a..n {
                for cc in b..n {
                    let p = g.get(a, b, cc);
                    if !p.is_zero() {
                        gamma.push(GammaEntryDoc {
                            index: [a + 1, b + 1, cc + 1],
                            poly: PolySpec::Doc(PolyDoc::from_poly(p)),
                        });
                    }
                }
            }
        }
        ConnectionDoc { m: c.dim(), gamma }
    }

    pub fn to_connection(&self) -> Result<SymplecticConnection> {
        let n = 2 * self.m;
        let mut g = GammaTensor::zero(self.m, Basis::Chart);
        let mut seen = std::collections::BTreeMap::new();
        for e in &self.gamma {
            let [a, b, c] = e.index;
            if [a, b, c].iter().any(|&i| i == 0 || i > n) {
                return Err(Error::InvalidArgument(format!("connection index {:?} outside 1..{n}", e.index)));
            }
            let p = e.poly.resolve(self.m, Basis::Chart)?;
            let mut key = [a, b, c];
            key.sort_unstable();
            if let Some(prev) = seen.insert(key, p.clone()) {
                if prev != p {
                    return Err(Error::AsymmetricConnection([a - 1, b - 1, c - 1]));
                }
            }
            g.set_symmetric(a - 1, b - 1, c - 1, p);
        }
        SymplecticConnection::new(g)
    }
}

pub fn load_connection(path: &Path) -> Result<SymplecticConnection> {
    read_json::<ConnectionDoc>(path)?.to_connection()
}

/// Row shared by spectrum and comparison tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub hbar: f64,
    /// Quantum numbers joined with `;`.
    pub n: String,
    #[serde(rename = "E_ebk")]
    pub e_ebk: f64,
    #[serde(rename = "E_oracle")]
    pub e_oracle: Option<f64>,
    pub abs_diff: Option<f64>,
}

fn join_n(n: &[i64]) -> String {
    n.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
}

/// One row per mode component (`E_ebk` of component `i` for M ≥ 2 goes in
/// successive rows with the same `n`).
pub fn spectrum_table(hbar: f64, rows: &[SpectrumRow]) -> Vec<TableRow> {
    rows.iter()
        .flat_map(|r| {
            r.e_ebk.iter().map(move |&e| TableRow {
                hbar,
                n: join_n(&r.n),
                e_ebk: e,
                e_oracle: None,
                abs_diff: None,
            })
        })
        .collect()
}

pub fn comparison_table(rep: &ComparisonReport) -> Vec<TableRow> {
    rep.rows
        .iter()
        .map(|r| TableRow {
            hbar: r.hbar,
            n: r.n.to_string(),
            e_ebk: r.e_ebk,
            e_oracle: Some(r.e_oracle),
            abs_diff: Some(r.abs_diff),
        })
        .collect()
}

pub fn write_csv<W: Write>(w: W, rows: &[TableRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<TableRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(|e| Error::InvalidArgument(e.to_string())))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub hbar: f64,
    /// Always `"complex128-le"`: interleaved little-endian `f64` (re, im).
    pub dtype: String,
    pub order: String,
}

/// One JSON header line, then the entries row-major.
pub fn write_matrix_dump<W: Write>(mut w: W, m: &OperatorMatrix) -> Result<()> {
    let header = MatrixHeader {
        rows: m.dim(),
        cols: m.dim(),
        hbar: m.hbar,
        dtype: "complex128-le".into(),
        order: "row-major".into(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let z = m.entries[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_dump<R: Read>(mut r: R) -> Result<OperatorMatrix> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvalidArgument("matrix dump has no header line".into()))?;
    let h: MatrixHeader = serde_json::from_slice(&bytes[..nl])?;
    let body = &bytes[nl + 1..];
    if body.len() != h.rows * h.cols * 16 {
        return Err(Error::InvalidArgument("matrix dump body has the wrong length".into()));
    }
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let entries = nalgebra::DMatrix::from_fn(h.rows, h.cols, |i, j| {
        let k = 2 * (i * h.cols + j);
        Complex64::new(f(k), f(k + 1))
    });
    Ok(OperatorMatrix { hbar: h.hbar, entries })
}

/// Parameters shared by the command-line pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(rename = "M")]
    pub m: usize,
    /// ℏ-series truncation order.
    #[serde(rename = "T")]
    pub t: usize,
    pub hbars: Vec<f64>,
    /// Oracle matrix truncation.
    #[serde(rename = "D")]
    pub d: usize,
    /// Curvature coefficient as an exact rational string.
    #[serde(rename = "c_R")]
    pub c_r: String,
    /// Built-in chart name (`identity`, `shear`, `double-shear`) or a path.
    pub chart: Option<String>,
    pub connection: Option<PathBuf>,
    pub json_out: Option<PathBuf>,
    pub csv_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 1,
            t: 5,
            hbars: vec![1.0],
            d: 64,
            c_r: "1".into(),
            chart: None,
            connection: None,
            json_out: None,
            csv_out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.t == 0 || self.d == 0 {
            return Err(Error::InvalidArgument("M, T and D must be positive".into()));
        }
        if let Some(h) = self.hbars.iter().find(|h| !h.is_finite() || **h <= 0.0) {
            return Err(Error::InvalidArgument(format!("hbar values must be positive, got {h}")));
        }
        parse_rational(&self.c_r)?;
        Ok(())
    }

    pub fn curvature_coefficient(&self) -> Result<GaussianRational> {
        Ok(crate::scalar::real(parse_rational(&self.c_r)?))
    }
}
