use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};
use starq::chart::{magic_identity_defect, sample_grid};
use starq::fedosov::{
    fedosov_sdarboux_coords, fedosov_sdarboux_defect, gmagic_defect, riemann, FedosovProduct,
    SymplecticConnection,
};
use starq::io::{comparison_table, load_chart_unchecked, load_connection, spectrum_table, write_csv, write_matrix_dump, RunConfig};
use starq::number::{bs_rule, dirac_defect, good_number_correction, spectrum, verify_rule, EBKRule, NumberSystem, QuantumIntegrableSystem};
use starq::oracle::{compare, weyl_matrix_series};
use starq::parse::{infer_dim, parse_expr, parse_poly, print_action, print_poly};
use starq::scalar::{parse_rational, real};
use starq::sdarboux::{extend_order, sdarboux_defect, z2_correction, DefectMatrix, SDarbouxSet};
use starq::{Basis, DarbouxChart, GaussianRational, HbarSeries, PhasePoly};

use crate::{ChartArg, Outcome};

/// A mathematical check failed (exit code 1) rather than the input being
/// malformed (exit code 2).
#[derive(Debug)]
pub struct CheckFailure {
    pub invariant: &'static str,
    pub message: String,
}

impl CheckFailure {
    fn new(invariant: &'static str, message: impl Into<String>) -> anyhow::Error {
        anyhow!(CheckFailure {
            invariant,
            message: message.into(),
        })
    }
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CheckFailure {}

/// Sorts engine errors into usage errors and failed checks.
fn engine(e: starq::Error) -> anyhow::Error {
    use starq::Error as E;
    match e {
        E::Parse { .. } | E::InvalidArgument(_) | E::Io(_) | E::Json(_) | E::DimensionMismatch(..) => anyhow!(e),
        other => {
            let invariant = match &other {
                E::InsufficientOrder { .. } => "sdarboux_order",
                E::NonCommuting(_) => "star_commutation",
                E::Resonance(_) => "nonresonance",
                E::NonPolynomialCorrection(_) => "polynomial_correction",
                E::InvalidChart(_) => "darboux_chart",
                E::ChargedComponent(_) => "angle_independence",
                E::AsymmetricConnection(_) => "connection_symmetry",
                E::NotClosed { .. } => "closed_defect_form",
                _ => "engine",
            };
            CheckFailure::new(invariant, other.to_string())
        }
    }
}

pub fn run_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => starq::io::read_json::<RunConfig>(p)
            .map_err(engine)
            .with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    cfg.validate().map_err(engine)?;
    Ok(cfg)
}

fn exact_rational(text: &str) -> Result<GaussianRational> {
    if text.contains('.') {
        bail!("decimal literal {text:?} on an exact path; write it as a rational such as 1/4");
    }
    Ok(real(parse_rational(text).map_err(engine)?))
}

fn resolve_chart_unchecked(cfg: &RunConfig, arg: &ChartArg) -> Result<DarbouxChart> {
    let name = arg.chart.clone().or_else(|| cfg.chart.clone()).unwrap_or_else(|| "identity".into());
    let m = arg.m.unwrap_or(cfg.m);
    let one_mode = |c: DarbouxChart| -> Result<DarbouxChart> {
        if m == 1 {
            Ok(c)
        } else {
            DarbouxChart::product(&vec![c; m]).map_err(engine)
        }
    };
    match name.as_str() {
        "identity" => Ok(DarbouxChart::identity(m)),
        "shear" => one_mode(DarbouxChart::shear()),
        "double-shear" => one_mode(DarbouxChart::double_shear()),
        path => load_chart_unchecked(Path::new(path))
            .map_err(engine)
            .with_context(|| format!("loading chart {path}")),
    }
}

fn resolve_chart(cfg: &RunConfig, arg: &ChartArg) -> Result<DarbouxChart> {
    let c = resolve_chart_unchecked(cfg, arg)?;
    if let Some(msg) = c.validate().first_failure() {
        return Err(CheckFailure::new("darboux_chart", format!("invalid chart: {msg}")));
    }
    Ok(c)
}

fn chart_label(cfg: &RunConfig, arg: &ChartArg) -> String {
    arg.chart.clone().or_else(|| cfg.chart.clone()).unwrap_or_else(|| "identity".into())
}

fn text(p: &PhasePoly) -> String {
    print_poly(p).unwrap_or_else(|_| p.to_string())
}

fn series_json(s: &HbarSeries) -> Value {
    let terms: Vec<Value> = s
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| json!({ "order": k, "symbol": text(c) }))
        .collect();
    Value::Array(terms)
}

fn outcome(mut report: Value, violation: Option<Value>) -> Outcome {
    let pass = violation.is_none();
    report["pass"] = json!(pass);
    report["first_violation"] = violation.unwrap_or(Value::Null);
    Outcome { report, pass }
}

pub fn check_chart(cfg: &RunConfig, arg: &ChartArg, samples: usize) -> Result<Outcome> {
    let chart = resolve_chart_unchecked(cfg, arg)?;
    let rep = chart.validate();
    let mut violation = if let Some((a, b, r)) = rep.bracket_failures.first() {
        Some(json!({ "invariant": "darboux_bracket", "index": [a + 1, b + 1], "residual": text(r) }))
    } else if let Some((k, r)) = rep.forward_inverse_failures.first() {
        Some(json!({ "invariant": "forward_after_inverse", "index": [k + 1], "residual": text(r) }))
    } else if let Some((k, r)) = rep.inverse_forward_failures.first() {
        Some(json!({ "invariant": "inverse_after_forward", "index": [k + 1], "residual": text(r) }))
    } else {
        None
    };
    if violation.is_none() {
        if let Some((i, pt)) = chart.check_actions_nonnegative(&sample_grid(chart.dim(), 2.0, samples.max(1))) {
            violation = Some(json!({ "invariant": "action_nonnegative", "index": [i + 1], "point": pt }));
        }
    }
    let report = json!({
        "command": "check-chart",
        "chart": chart_label(cfg, arg),
        "M": chart.dim(),
        "bracket_failures": rep.bracket_failures.len(),
        "inverse_failures": rep.forward_inverse_failures.len() + rep.inverse_forward_failures.len(),
        "actions": chart.actions().iter().map(text).collect::<Vec<_>>(),
    });
    Ok(outcome(report, violation))
}

fn defect_violation(d: &DefectMatrix) -> Option<Value> {
    d.first_failure().map(|(a, b, k)| {
        let r = d.coefficient(a, b, k).expect("failing pair");
        json!({ "invariant": "sdarboux_commutator", "order": k, "index": [a + 1, b + 1], "coefficient": text(&r) })
    })
}

pub fn check_sdarboux(cfg: &RunConfig, arg: &ChartArg, order: Option<usize>, bare: bool, extend: bool) -> Result<Outcome> {
    let order = order.unwrap_or(cfg.t);
    if order < 3 {
        bail!("--order must be at least 3");
    }
    let chart = resolve_chart(cfg, arg)?;
    let mut s = if bare {
        SDarbouxSet::bare(&chart, order)
    } else {
        SDarbouxSet::corrected(&chart, order).map_err(engine)?
    };
    let mut steps = 0;
    let mut d = sdarboux_defect(&s).map_err(engine)?;
    let bare_order = sdarboux_defect(&SDarbouxSet::bare(&chart, order)).map_err(engine)?.first_nonzero_order();
    if extend {
        while !d.is_order_at_least(order) && steps < order {
            s = extend_order(&s).map_err(engine)?;
            d = sdarboux_defect(&s).map_err(engine)?;
            steps += 1;
        }
    }
    let violation = if d.is_order_at_least(order) { None } else { defect_violation(&d) };
    let z2 = z2_correction(&chart).map_err(engine)?;
    let report = json!({
        "command": "check-sdarboux",
        "chart": chart_label(cfg, arg),
        "order": order,
        "corrected": !bare,
        "extend_steps": steps,
        "bare_defect_order": bare_order,
        "defect_order": d.first_nonzero_order(),
        "Z2": z2.iter().map(text).collect::<Vec<_>>(),
        "coordinates": s.coords().iter().map(series_json).collect::<Vec<_>>(),
    });
    Ok(outcome(report, violation))
}

fn tensor_violation(invariant: &str, v: &[([usize; 4], PhasePoly)]) -> Option<Value> {
    v.first().map(|(idx, r)| {
        json!({ "invariant": invariant, "index": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "residual": text(r) })
    })
}

pub fn check_magic(cfg: &RunConfig, arg: &ChartArg) -> Result<Outcome> {
    let chart = resolve_chart(cfg, arg)?;
    let d = magic_identity_defect(&chart);
    let report = json!({
        "command": "check-magic",
        "chart": chart_label(cfg, arg),
        "nonzero_components": d.len(),
    });
    Ok(outcome(report, tensor_violation("magic_identity", &d)))
}

fn resolve_connection(cfg: &RunConfig, arg: &ChartArg, path: Option<&Path>) -> Result<(SymplecticConnection, String)> {
    let path: Option<PathBuf> = path.map(Path::to_path_buf).or_else(|| cfg.connection.clone());
    match path {
        Some(p) => Ok((
            load_connection(&p)
                .map_err(engine)
                .with_context(|| format!("loading connection {}", p.display()))?,
            p.display().to_string(),
        )),
        None => {
            let chart = resolve_chart(cfg, arg)?;
            Ok((
                SymplecticConnection::from_chart(&chart).map_err(engine)?,
                format!("flat:{}", chart_label(cfg, arg)),
            ))
        }
    }
}

pub fn check_gmagic(cfg: &RunConfig, arg: &ChartArg, connection: Option<&Path>) -> Result<Outcome> {
    let (conn, label) = resolve_connection(cfg, arg, connection)?;
    let d = gmagic_defect(&conn);
    let report = json!({
        "command": "check-gmagic",
        "connection": label,
        "nonzero_components": d.len(),
    });
    Ok(outcome(report, tensor_violation("covariant_identity", &d)))
}

pub fn build_number(cfg: &RunConfig, arg: &ChartArg, order: Option<usize>) -> Result<Outcome> {
    let order = order.unwrap_or(cfg.t);
    if order < 5 {
        bail!("--order must be at least 5 for number symbols");
    }
    let chart = resolve_chart(cfg, arg)?;
    let ns = NumberSystem::new(&SDarbouxSet::corrected(&chart, order).map_err(engine)?).map_err(engine)?;
    let dd = dirac_defect(ns.ladder()).map_err(engine)?;
    let violation = if dd.is_order_at_least(5) {
        None
    } else {
        dd.mixed
            .iter()
            .chain(&dd.same)
            .find(|(_, _, d)| d.first_nonzero_order == dd.first_nonzero_order())
            .map(|(i, j, d)| json!({ "invariant": "dirac_algebra", "order": d.first_nonzero_order, "index": [i + 1, j + 1] }))
    };
    let report = json!({
        "command": "build-number",
        "chart": chart_label(cfg, arg),
        "order": order,
        "ladder_sign": chart.ladder_sign(),
        "dirac_defect_order": dd.first_nonzero_order(),
        "N": ns.number_symbols().iter().map(series_json).collect::<Vec<_>>(),
        "N2": ns.n2().iter().map(text).collect::<Vec<_>>(),
    });
    Ok(outcome(report, violation))
}

fn parse_quantum_numbers(text: &str) -> Result<Vec<i64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: i64 = a.trim().parse().with_context(|| format!("bad range start in {text:?}"))?;
        let b: i64 = b.trim().parse().with_context(|| format!("bad range end in {text:?}"))?;
        if a < 0 || b < a {
            bail!("quantum number range {text:?} must satisfy 0 <= a <= b");
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|t| {
            let v: i64 = t.trim().parse().with_context(|| format!("bad quantum number {t:?}"))?;
            if v < 0 {
                bail!("negative quantum number {v}");
            }
            Ok(v)
        })
        .collect()
}

fn tuples(values: &[i64], m: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                values.iter().map(move |&v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

/// Rule for Hamiltonians given as ambient expressions on a chart.
fn rule_for(chart: &DarbouxChart, h: &[PhasePoly], order: usize) -> Result<(QuantumIntegrableSystem, NumberSystem, EBKRule)> {
    let series: Vec<HbarSeries> = h.iter().map(|p| HbarSeries::from_poly(p.clone(), order)).collect();
    let q = QuantumIntegrableSystem::new(chart, series).map_err(engine)?;
    let ns = NumberSystem::new(&SDarbouxSet::corrected(chart, order).map_err(engine)?).map_err(engine)?;
    let ns = good_number_correction(&q, &ns).map_err(engine)?;
    let rule = bs_rule(&q, &ns).map_err(engine)?;
    Ok((q, ns, rule))
}

fn rule_json(rule: &EBKRule) -> Value {
    json!({
        "F": rule.f.iter().map(print_action).collect::<Vec<_>>(),
        "F2": rule.f2.iter().map(print_action).collect::<Vec<_>>(),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn ebk(
    cfg: &RunConfig,
    arg: &ChartArg,
    h: &[String],
    hbar: Option<f64>,
    n: &str,
    order: Option<usize>,
    csv: Option<&Path>,
) -> Result<Outcome> {
    let order = order.unwrap_or(cfg.t);
    if order < 5 {
        bail!("--order must be at least 5");
    }
    let hbar = hbar.unwrap_or(cfg.hbars[0]);
    if !(hbar > 0.0) {
        bail!("--hbar must be positive");
    }
    let mut dim = arg.m.unwrap_or(cfg.m);
    for e in h {
        dim = dim.max(infer_dim(&parse_expr(e).map_err(engine)?));
    }
    let arg = ChartArg {
        chart: arg.chart.clone(),
        m: Some(dim),
    };
    let chart = resolve_chart(cfg, &arg)?;
    let hs: Vec<PhasePoly> = h
        .iter()
        .map(|e| parse_poly(e, chart.dim(), Basis::Ambient).map_err(engine))
        .collect::<Result<_>>()?;
    let (q, ns, rule) = rule_for(&chart, &hs, order)?;
    let check = verify_rule(&q, &ns, &rule).map_err(engine)?;
    let qns = tuples(&parse_quantum_numbers(n)?, chart.dim());
    let rows = spectrum(&rule, hbar, &qns).map_err(engine)?;
    if let Some(p) = csv {
        let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_csv(f, &spectrum_table(hbar, &rows)).map_err(engine)?;
    }
    let violation = check
        .first_nonzero_order
        .map(|k| json!({ "invariant": "rule_reproduces_hamiltonian", "order": k }));
    let report = json!({
        "command": "ebk",
        "chart": chart_label(cfg, &arg),
        "hbar": hbar,
        "rule": rule_json(&rule),
        "compatibility_order": ns.compatibility_order,
        "rows": rows,
    });
    Ok(outcome(report, violation))
}

pub struct OracleArgs {
    pub h: String,
    pub hbars: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub n_max: usize,
    pub fit: bool,
    pub min_slope: Option<f64>,
    pub tol: Option<f64>,
    pub csv: Option<PathBuf>,
    pub dump_matrix: Option<PathBuf>,
}

pub fn oracle_compare(cfg: &RunConfig, a: &OracleArgs) -> Result<Outcome> {
    let hbars = a.hbars.clone().unwrap_or_else(|| cfg.hbars.clone());
    if hbars.is_empty() || hbars.iter().any(|h| !(*h > 0.0)) {
        bail!("--hbars must be a non-empty list of positive values");
    }
    let d = a.d.unwrap_or(cfg.d);
    let order = cfg.t.max(5);
    let h = parse_poly(&a.h, 1, Basis::Ambient).map_err(engine)?;
    let chart = DarbouxChart::identity(1);
    let (_, _, rule) = rule_for(&chart, std::slice::from_ref(&h), order)?;
    let hs = HbarSeries::from_poly(h, order);
    let rep = compare(&rule, &hs, d, &hbars, a.n_max).map_err(engine)?;
    if let Some(p) = &a.csv {
        let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_csv(f, &comparison_table(&rep)).map_err(engine)?;
    }
    if let Some(p) = &a.dump_matrix {
        let m = weyl_matrix_series(&hs, d, hbars[0]).map_err(engine)?;
        let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_matrix_dump(std::io::BufWriter::new(f), &m).map_err(engine)?;
    }
    let max_diff = rep.max_abs_diff();
    let mut violation = None;
    if let Some(tol) = a.tol {
        if max_diff > tol {
            violation = Some(json!({ "invariant": "oracle_difference", "max_abs_diff": max_diff, "tol": tol }));
        }
    }
    if let Some(min) = a.min_slope {
        // an exact rule leaves only roundoff, which satisfies any order bound
        let ok = rep.roundoff_limited || rep.fit.as_ref().is_some_and(|f| f.slope >= min);
        if !ok && violation.is_none() {
            violation = Some(json!({
                "invariant": "convergence_slope",
                "slope": rep.fit.as_ref().map(|f| f.slope),
                "min_slope": min,
            }));
        }
    }
    let mut report = json!({
        "command": "oracle-compare",
        "H": a.h,
        "D": d,
        "hbars": hbars,
        "rule": rule_json(&rule),
        "max_abs_diff": max_diff,
        "roundoff_limited": rep.roundoff_limited,
        "unconverged": rep.unconverged,
        "rows": rep.rows,
    });
    if a.fit || a.min_slope.is_some() {
        report["fit"] = match &rep.fit {
            Some(f) => json!({ "slope": f.slope, "intercept": f.intercept, "points": f.points }),
            None => Value::Null,
        };
    }
    Ok(outcome(report, violation))
}

pub fn fedosov_check(cfg: &RunConfig, arg: &ChartArg, connection: Option<&Path>, c_r: Option<&str>) -> Result<Outcome> {
    let (conn, label) = resolve_connection(cfg, arg, connection)?;
    let c_r_text = c_r.map(str::to_string).unwrap_or_else(|| cfg.c_r.clone());
    let c = exact_rational(&c_r_text)?;
    let g = gmagic_defect(&conn);
    let z = fedosov_sdarboux_coords(&conn, 3);
    let product = FedosovProduct::with_curvature_coefficient(conn.clone(), c);
    let d = fedosov_sdarboux_defect(&product, &z).map_err(engine)?;
    let violation = tensor_violation("covariant_identity", &g).or_else(|| defect_violation(&d));
    let report = json!({
        "command": "fedosov-check",
        "connection": label,
        "c_R": c_r_text,
        "flat": riemann(&conn).is_zero(),
        "covariant_identity_nonzero": g.len(),
        "defect_order": d.first_nonzero_order(),
        "coordinates": z.iter().map(series_json).collect::<Vec<_>>(),
    });
    Ok(outcome(report, violation))
}
