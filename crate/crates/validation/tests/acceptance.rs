//! Acceptance suite. Each test prints one `PASS`/`FAIL` line per criterion
//! (written past the harness capture so the lines show up in every run) and
//! then asserts the same condition.

use std::io::Write;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use starq::action::ActionPoly;
use starq::bracket::poisson_bracket;
use starq::chart::magic_identity_defect;
use starq::fedosov::{
    fedosov_sdarboux_coords, fedosov_sdarboux_defect, gmagic_defect, FedosovProduct, SymplecticConnection,
};
use starq::ladder::{angle_average, as_action_polynomial, to_ladder};
use starq::moyal::associativity_defect;
use starq::number::{
    bs_rule, compatibility_defect, dirac_defect, good_number_correction, k2_closed_form, ladder_series, spectrum,
    verify_rule, EBKRule, K2Signs, NumberSystem, QuantumIntegrableSystem,
};
use starq::oracle::{compare, fit_slope, weyl_matrix_exact, weyl_matrix_series_exact, ComparisonReport};
use starq::scalar::{gr, int};
use starq::sdarboux::{extend_order_with_details, sdarboux_defect, SDarbouxSet};
use starq::{moyal_star, star_commutator, Basis, Monomial, DarbouxChart, GammaTensor, HbarSeries, PhasePoly};

/// Random polynomial with small rational coefficients, total degree ≤ `deg`.
fn random_poly<R: Rng>(rng: &mut R, dim: usize, basis: Basis, deg: u32, terms: usize) -> PhasePoly {
    let mut p = PhasePoly::zero(dim, basis);
    for _ in 0..terms {
        let mut exps = vec![0u32; 2 * dim];
        let mut left = rng.gen_range(0..=deg);
        for e in exps.iter_mut() {
            let k = rng.gen_range(0..=left);
            *e = k;
            left -= k;
        }
        p.add_term(Monomial::from_exponents(exps), gr(rng.gen_range(-6..=6), rng.gen_range(1..=5)));
    }
    p
}

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance {verdict} criterion {criterion}: {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn check(criterion: &str, pass: bool, detail: &str) {
    report(criterion, pass, detail);
    assert!(pass, "criterion {criterion}: {detail}");
}

fn ambient_var(m: usize, k: usize) -> PhasePoly {
    PhasePoly::var(m, Basis::Ambient, k)
}

fn number_system(chart: &DarbouxChart, order: usize) -> NumberSystem {
    NumberSystem::new(&SDarbouxSet::corrected(chart, order).unwrap()).unwrap()
}

fn rule_for(chart: &DarbouxChart, f: &[ActionPoly]) -> (QuantumIntegrableSystem, NumberSystem, EBKRule) {
    let ns = number_system(chart, 5);
    let h: Vec<HbarSeries> = f
        .iter()
        .map(|fi| HbarSeries::from_poly(fi.compose(&chart.actions()), 5))
        .collect();
    let q = QuantumIntegrableSystem::new(chart, h).unwrap();
    let ns = good_number_correction(&q, &ns).unwrap();
    let rule = bs_rule(&q, &ns).unwrap();
    (q, ns, rule)
}

fn action_pow(k: u32) -> ActionPoly {
    ActionPoly::var(1, 0).pow(k)
}

#[test]
fn criterion_1_exact_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut jacobi = 0;
    let mut leibniz = 0;
    for m in [1usize, 2] {
        for _ in 0..15 {
            let f = random_poly(&mut rng, m, Basis::Ambient, 4, 4);
            let g = random_poly(&mut rng, m, Basis::Ambient, 4, 4);
            let h = random_poly(&mut rng, m, Basis::Ambient, 4, 4);
            let pb = |a: &PhasePoly, b: &PhasePoly| poisson_bracket(a, b).unwrap();
            let cyc = &(&pb(&f, &pb(&g, &h)) + &pb(&g, &pb(&h, &f))) + &pb(&h, &pb(&f, &g));
            jacobi += usize::from(!cyc.is_zero());
            let lhs = pb(&f, &(&g * &h));
            let rhs = &(&pb(&f, &g) * &h) + &(&g * &pb(&f, &h));
            leibniz += usize::from(lhs != rhs);
        }
    }

    let mut assoc = 0;
    for t in 0..50 {
        let (m, deg) = if t % 2 == 0 { (1, 4) } else { (2, 3) };
        let s = |p: PhasePoly| HbarSeries::from_poly(p, 6);
        let f = s(random_poly(&mut rng, m, Basis::Ambient, deg, 3));
        let g = s(random_poly(&mut rng, m, Basis::Ambient, deg, 3));
        let h = s(random_poly(&mut rng, m, Basis::Ambient, deg, 3));
        assoc += usize::from(!associativity_defect(&f, &g, &h).unwrap().vanishes());
    }

    let magic_id = magic_identity_defect(&DarbouxChart::identity(2)).len();
    let magic_shear = magic_identity_defect(&DarbouxChart::shear()).len();
    let magic_double = magic_identity_defect(&DarbouxChart::double_shear()).len();

    let mut gmagic = 0;
    for m in [1usize, 2] {
        for _ in 0..4 {
            let mut g = GammaTensor::zero(m, Basis::Chart);
            let n = 2 * m;
            for a in 0..n {
                for b in a..n {
                    for c in b..n {
                        g.set_symmetric(a, b, c, random_poly(&mut rng, m, Basis::Chart, 2, 3));
                    }
                }
            }
            gmagic += gmagic_defect(&SymplecticConnection::new(g).unwrap()).len();
        }
    }

    let elapsed = start.elapsed();
    let pass = jacobi == 0
        && leibniz == 0
        && assoc == 0
        && magic_id + magic_shear + magic_double == 0
        && gmagic == 0
        && elapsed < Duration::from_secs(60);
    check(
        "1 (exact identity suite)",
        pass,
        &format!(
            "Jacobi failures {jacobi}/30, Leibniz failures {leibniz}/30, Moyal associativity nonzero at T=6 {assoc}/50, \
             magic identity residual entries identity/shear/double-shear {magic_id}/{magic_shear}/{magic_double}, \
             covariant identity residual entries {gmagic} over 8 random symmetric degree-2 connections, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_2_shear_bare_defect_is_third_order() {
    let d = sdarboux_defect(&SDarbouxSet::bare(&DarbouxChart::shear(), 6)).unwrap();
    let first = d.first_nonzero_order();
    check(
        "2 (bare shear chart z=(x, p+x^2) has first defect order exactly 3)",
        first == Some(3),
        &format!(
            "computed first nonzero defect order {first:?} through T=6; \
             z1 = x is linear and z2 quadratic, so every higher bracket vanishes"
        ),
    );
}

#[test]
fn criterion_2_z2_correction_and_homotopy_step() {
    let shear = SDarbouxSet::corrected(&DarbouxChart::shear(), 6).unwrap();
    let shear_order = sdarboux_defect(&shear).unwrap().first_nonzero_order();

    // Nontrivial case: the ℏ³ coefficient is present before and cancels after.
    let chart = DarbouxChart::double_shear();
    let bare = sdarboux_defect(&SDarbouxSet::bare(&chart, 6)).unwrap();
    let fixed = sdarboux_defect(&SDarbouxSet::corrected(&chart, 6).unwrap()).unwrap();
    let bare3 = bare.coefficient(0, 1, 3).is_some_and(|p| !p.is_zero());
    let fixed3 = fixed.coefficient(0, 1, 3).is_none_or(|p| p.is_zero());
    let pass_z2 = shear_order.is_none_or(|o| o >= 5)
        && bare.first_nonzero_order() == Some(3)
        && bare3
        && fixed3
        && fixed.is_order_at_least(5);
    report(
        "2 (Z2 correction gives defect order >= 5 by exact hbar^3 cancellation)",
        pass_z2,
        &format!(
            "shear corrected order {shear_order:?}; double shear bare order {:?} (hbar^3 coefficient nonzero: {bare3}), \
             corrected order {:?} (hbar^3 coefficient zero: {fixed3})",
            bare.first_nonzero_order(),
            fixed.first_nonzero_order()
        ),
    );

    // Synthetic order-4 defect: Z1 = x + ℏ³x², Z2 = p.
    let id = DarbouxChart::identity(1);
    let mut z1 = HbarSeries::from_poly(ambient_var(1, 0), 6);
    z1.add_at(3, &ambient_var(1, 0).pow(2));
    let z2 = HbarSeries::from_poly(ambient_var(1, 1), 6);
    let s = SDarbouxSet::from_series(&id, vec![z1, z2]).unwrap();
    let before = sdarboux_defect(&s).unwrap().first_nonzero_order();
    let (t, step) = extend_order_with_details(&s).unwrap();
    let step = step.expect("defect present");
    let after = sdarboux_defect(&t).unwrap().first_nonzero_order();
    let exact = step.primitive.exterior_derivative() == step.form;
    let pass_ext = before == Some(4) && step.defect_order == 4 && exact && after.is_none_or(|o| o >= 5);
    report(
        "2 (one homotopy step raises a synthetic order-4 defect to >= 5)",
        pass_ext,
        &format!("order before {before:?}, after {after:?}, d(homotopy(w)) == w: {exact}"),
    );
    assert!(pass_z2 && pass_ext);
}

#[test]
fn criterion_3_dirac_algebra_and_harmonic_number() {
    let chart = DarbouxChart::product(&[DarbouxChart::double_shear(), DarbouxChart::double_shear()]).unwrap();
    let s = SDarbouxSet::corrected(&chart, 5).unwrap();
    let l = ladder_series(&s);
    let m = l.b.len();
    let (dim, order) = (l.b[0].dim(), l.b[0].order());
    let half = gr(1, 2);
    let hbar = |c| HbarSeries::hbar_power(dim, Basis::Ambient, 1, c, order);

    // {Ā^i, A^j}⋆ with A = B/√2, literal sign +ℏδ, and the reversed
    // ordering {A^i, Ā^j}⋆ = ℏδ that goes with N = I − ℏ/2.
    let mut literal: Option<usize> = None;
    let mut reversed: Option<usize> = None;
    let mut same: Option<usize> = None;
    let min = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    };
    for i in 0..m {
        for j in 0..m {
            let delta = if i == j { int(1) } else { int(0) };
            let lit = &star_commutator(&l.bbar[i], &l.b[j]).unwrap().scale(&half) - &hbar(delta.clone());
            let rev = &star_commutator(&l.b[i], &l.bbar[j]).unwrap().scale(&half) - &hbar(delta);
            literal = min(literal, lit.first_nonzero_order());
            reversed = min(reversed, rev.first_nonzero_order());
            let aa = star_commutator(&l.b[i], &l.b[j]).unwrap();
            same = min(same, aa.first_nonzero_order());
        }
    }
    let engine = dirac_defect(&l).unwrap().first_nonzero_order();

    let id = DarbouxChart::identity(1);
    let ns = NumberSystem::new(&SDarbouxSet::bare(&id, 6)).unwrap();
    let n = &ns.number_symbols()[0];
    let i_sym = id.actions().remove(0);
    let harmonic = n.coeff_or_zero(0) == i_sym
        && n.coeff_or_zero(1) == PhasePoly::constant(1, Basis::Ambient, gr(-1, 2))
        && (2..=6).all(|k| n.coeff_or_zero(k).is_zero());

    let ok5 = |o: Option<usize>| o.is_none_or(|o| o >= 5);
    report(
        "3 (harmonic chart N = I - hbar/2 with zero higher terms)",
        harmonic,
        &format!("N coefficients through hbar^6: {:?}", (0..=6).map(|k| n.coeff_or_zero(k).num_terms()).collect::<Vec<_>>()),
    );
    report(
        "3 ({A^i, Abar^j} = hbar delta + O(hbar^5), {A^i, A^j} = O(hbar^5), corrected double shear M=2)",
        ok5(reversed) && ok5(same) && ok5(engine),
        &format!("residual orders: mixed {reversed:?}, same {same:?}, engine Dirac defect {engine:?}"),
    );
    report(
        "3 (literal {Abar^i, A^j} = +hbar delta + O(hbar^5))",
        ok5(literal),
        &format!(
            "residual first order {literal:?}: with the ladder sign fixed by N = I - hbar/2 this ordering gives \
             -hbar delta; +hbar delta holds only for the sign that gives N = I + hbar/2"
        ),
    );
    assert!(harmonic && ok5(reversed) && ok5(same) && ok5(engine));
    assert!(ok5(literal), "criterion 3: literal Dirac sign, residual order {literal:?}");
}

fn max_formula_diff(rule: &EBKRule, hbar: f64, n_max: usize, exact: impl Fn(f64) -> f64) -> f64 {
    let ns: Vec<Vec<i64>> = (0..=n_max as i64).map(|n| vec![n]).collect();
    spectrum(rule, hbar, &ns)
        .unwrap()
        .iter()
        .map(|r| (r.e_ebk[0] - exact(hbar * (r.n[0] as f64 + 0.5))).abs())
        .fold(0.0, f64::max)
}

fn converged_ok(rep: &ComparisonReport, hbars: &[f64], n_max: usize) -> bool {
    hbars
        .iter()
        .all(|h| (0..=n_max).all(|n| rep.rows.iter().any(|r| r.hbar == *h && r.n == n)))
}

#[test]
fn criterion_4_oracle_checks() {
    let start = Instant::now();
    let id = DarbouxChart::identity(1);
    let ambient_i = |k: u32| HbarSeries::from_poly(id.actions()[0].pow(k), 5);

    // H = I
    let (_, _, r1) = rule_for(&id, &[action_pow(1)]);
    let rep1 = compare(&r1, &ambient_i(1), 64, &[1.0, 0.1], 10).unwrap();
    let f1 = max_formula_diff(&r1, 1.0, 10, |i| i).max(max_formula_diff(&r1, 0.1, 10, |i| i));
    let pass1 = rep1.max_abs_diff() <= 1e-10 && f1 <= 1e-14 && converged_ok(&rep1, &[1.0, 0.1], 10);
    report(
        "4a (H = I: hbar(n+1/2) vs eigenvalues, n <= 10, hbar in {1, 0.1}, tol 1e-10)",
        pass1,
        &format!("max |E_ebk - E_oracle| {:.3e}, rows {}", rep1.max_abs_diff(), rep1.rows.len()),
    );

    // H = I²
    let (_, _, r2) = rule_for(&id, &[action_pow(2)]);
    let f2_ok = r2.f2[0] == ActionPoly::constant(1, gr(1, 4));
    let mut formula = 0.0f64;
    for hb in [1.0, 0.1] {
        formula = formula.max(max_formula_diff(&r2, hb, 20, |i| i * i + hb * hb / 4.0));
    }
    let rep2 = compare(&r2, &ambient_i(2), 128, &[1.0, 0.1], 20).unwrap();
    let pass2 = f2_ok && formula <= 1e-12 && rep2.max_abs_diff() <= 1e-9 && !rep2.rows.is_empty();
    report(
        "4b (H = I^2: F2 = 1/4, E_n = hbar^2(n+1/2)^2 + hbar^2/4, oracle tol 1e-9, converged n <= 20)",
        pass2,
        &format!(
            "F2 = {:?}, formula diff {formula:.3e}, max oracle diff {:.3e} over {} rows, unconverged {:?}",
            r2.f2[0].terms().map(|(_, c)| starq::scalar::format_gaussian(c)).collect::<Vec<_>>(),
            rep2.max_abs_diff(),
            rep2.rows.len(),
            rep2.unconverged
        ),
    );

    // Negative control: K₂ with the printed (flipped) signs.
    let f = vec![action_pow(2)];
    let k2 = |signs| {
        let k = k2_closed_form(&f, &id, signs).unwrap().remove(0);
        as_action_polynomial(&angle_average(&to_ladder(&(-&k), &id).unwrap()).unwrap()).unwrap()
    };
    let good = EBKRule {
        f: f.clone(),
        f2: vec![k2(K2Signs::Consistent)],
        half_shift: true,
    };
    let bad = EBKRule {
        f: f.clone(),
        f2: vec![k2(K2Signs::Flipped)],
        half_shift: true,
    };
    let rep_good = compare(&good, &ambient_i(2), 128, &[1.0, 0.1], 20).unwrap();
    let rep_bad = compare(&bad, &ambient_i(2), 128, &[1.0, 0.1], 20).unwrap();
    let pass_neg = good.f2 == r2.f2 && rep_good.max_abs_diff() <= 1e-9 && rep_bad.max_abs_diff() > 1e-9;
    report(
        "4b (negative control: printed K2 sign must mismatch the oracle)",
        pass_neg,
        &format!(
            "consistent-sign closed form: F2 matches engine {}, max diff {:.3e}; printed sign: max diff {:.3e}",
            good.f2 == r2.f2,
            rep_good.max_abs_diff(),
            rep_bad.max_abs_diff()
        ),
    );

    // H = I³, and I⁴ where the residual is a genuine ℏ⁴ term.
    let hbars = [0.2, 0.1, 0.05, 0.025];
    let (_, _, r3) = rule_for(&id, &[action_pow(3)]);
    let rep3 = compare(&r3, &ambient_i(3), 128, &hbars, 8).unwrap();
    let pts3: Vec<(f64, f64)> = hbars.iter().map(|h| (*h, rep3.max_diff_at(*h))).collect();
    let raw3 = fit_slope(&pts3).map(|f| f.slope);
    let slope_ok = rep3.fit.as_ref().is_some_and(|f| f.slope >= 3.5);
    let pass3 = converged_ok(&rep3, &hbars, 8) && (rep3.roundoff_limited || slope_ok);
    report(
        "4c (H = I^3: |E_ebk - E_oracle| = O(hbar^4), slope >= 3.5 over hbar in {0.2, 0.1, 0.05, 0.025}, n <= 8)",
        pass3,
        &format!(
            "F2 = 5I/4: {}; max diff per hbar {:?}; roundoff-limited (rule exact for I^3): {}; \
             fitted slope {:?} (noise slope {:?})",
            r3.f2[0] == ActionPoly::var(1, 0).scale(&gr(5, 4)),
            pts3.iter().map(|(_, d)| format!("{d:.2e}")).collect::<Vec<_>>(),
            rep3.roundoff_limited,
            rep3.fit.as_ref().map(|f| f.slope),
            raw3
        ),
    );
    let (_, _, r4) = rule_for(&id, &[action_pow(4)]);
    let rep4 = compare(&r4, &ambient_i(4), 128, &hbars, 8).unwrap();
    let slope4 = rep4.fit.as_ref().map(|f| f.slope);
    let pass4 = converged_ok(&rep4, &hbars, 8) && slope4.is_some_and(|s| s >= 3.5);
    report(
        "4c (supplement H = I^4: fitted slope >= 3.5)",
        pass4,
        &format!("slope {slope4:?}, max diff {:.3e}", rep4.max_abs_diff()),
    );

    let elapsed = start.elapsed();
    let pass_time = elapsed < Duration::from_secs(300);
    report("4 (runtime < 5 min at D <= 128)", pass_time, &format!("{elapsed:.2?}"));
    assert!(pass1 && pass2 && pass_neg && pass3 && pass4 && pass_time);
}

#[test]
fn criterion_5_closure() {
    let i = ActionPoly::var(1, 0);
    let f = vec![&i + &i.pow(2).scale(&gr(1, 10))];
    let mut all = true;
    for (name, chart) in [("shear", DarbouxChart::shear()), ("double shear", DarbouxChart::double_shear())] {
        let ns = number_system(&chart, 5);
        let q = QuantumIntegrableSystem::from_action_functions(&ns, &f).unwrap();
        let ns2 = good_number_correction(&q, &ns).unwrap();
        let rule = bs_rule(&q, &ns2).unwrap();
        let recovered = rule.f == f && rule.f2.iter().all(ActionPoly::is_zero);
        let residual = verify_rule(&q, &ns2, &rule).unwrap().vanishes();
        let compat = compatibility_defect(&q, &ns2)
            .unwrap()
            .iter()
            .filter_map(|(_, _, d)| d.first_nonzero_order)
            .min();
        let pass = recovered && residual && compat.is_none_or(|o| o >= 5);
        report(
            &format!("5 (closure on the {name} chart, F = I + I^2/10)"),
            pass,
            &format!(
                "F recovered through hbar^2: {recovered}; H - F o* (N' + hbar/2) vanishes through hbar^3: {residual}; \
                 {{N', H}} first order {compat:?}"
            ),
        );
        all &= pass;
    }
    assert!(all);
}

#[test]
fn criterion_6_fedosov_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for m in [1usize, 2] {
        let prod = FedosovProduct::new(SymplecticConnection::zero(m));
        for _ in 0..10 {
            let f = HbarSeries::from_poly(random_poly(&mut rng, m, Basis::Chart, 4, 4), 3);
            let g = HbarSeries::from_poly(random_poly(&mut rng, m, Basis::Chart, 4, 4), 3);
            mismatches += usize::from(prod.star(&f, &g).unwrap() != moyal_star(&f, &g).unwrap());
        }
    }
    let pass_zero = mismatches == 0;
    report(
        "6 (Gamma = 0: Fedosov equals Moyal through hbar^3)",
        pass_zero,
        &format!("{mismatches}/20 random pairs differ"),
    );

    let mut g = GammaTensor::zero(1, Basis::Chart);
    g.set_symmetric(0, 0, 0, PhasePoly::constant(1, Basis::Chart, int(1)));
    g.set_symmetric(1, 1, 1, PhasePoly::constant(1, Basis::Chart, int(1)));
    let conn = SymplecticConnection::new(g).unwrap();
    let z = fedosov_sdarboux_coords(&conn, 3);
    let one = fedosov_sdarboux_defect(&FedosovProduct::new(conn.clone()), &z)
        .unwrap()
        .first_nonzero_order();
    let quarter = fedosov_sdarboux_defect(&FedosovProduct::with_curvature_coefficient(conn, gr(1, 4)), &z)
        .unwrap()
        .first_nonzero_order();
    let pass_const = one.is_none() && quarter == Some(3);
    report(
        "6 (constant Gamma: Z2 defect vanishes at hbar^3 with c_R = 1, not with c_R = 1/4)",
        pass_const,
        &format!("first defect order through hbar^3: c_R = 1 {one:?}, c_R = 1/4 {quarter:?}"),
    );
    assert!(pass_zero && pass_const);
}

#[test]
fn criterion_7_matrix_star_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dim = 64;
    let one = BigRational::from_integer(1.into());
    let mut worst = 0.0f64;
    let mut exact_pairs = 0;
    for _ in 0..20 {
        let f = random_poly(&mut rng, 1, Basis::Ambient, 4, 4);
        let g = random_poly(&mut rng, 1, Basis::Ambient, 4, 4);
        let deg = f.degree().unwrap_or(0).max(g.degree().unwrap_or(0)) as usize;
        let k = dim - deg;
        let fs = HbarSeries::from_poly(f.clone(), 8);
        let gs = HbarSeries::from_poly(g.clone(), 8);
        let lhs = weyl_matrix_series_exact(&moyal_star(&fs, &gs).unwrap(), dim, &one).unwrap().block(k);
        let rhs = weyl_matrix_exact(&f, dim, &one)
            .unwrap()
            .mul(&weyl_matrix_exact(&g, dim, &one).unwrap())
            .block(k);
        exact_pairs += usize::from(lhs == rhs);
        let d = (&lhs.to_float().entries - &rhs.to_float().entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    check(
        "7 (Weyl(f*g) = Weyl(f) Weyl(g) on the interior block, 20 pairs, degree <= 4, hbar = 1, D = 64, tol 1e-9)",
        worst <= 1e-9 && exact_pairs == 20,
        &format!("exact matrix arithmetic: {exact_pairs}/20 blocks identical, max |difference| {worst:.3e}"),
    );
}
