#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use starq::scalar::gr;
use starq::{Basis, GaussianRational, PhasePoly};

/// Random polynomial with small rational coefficients, total degree ≤ `deg`.
pub fn random_poly<R: Rng>(rng: &mut R, dim: usize, basis: Basis, deg: u32, terms: usize) -> PhasePoly {
    let mut p = PhasePoly::zero(dim, basis);
    for _ in 0..terms {
        let mut exps = vec![0u32; 2 * dim];
        let mut left = rng.gen_range(0..=deg);
        for e in exps.iter_mut() {
            let k = rng.gen_range(0..=left);
            *e = k;
            left -= k;
        }
        let c = gr(rng.gen_range(-6..=6), rng.gen_range(1..=5));
        p.add_term(starq::poly::Monomial::from_exponents(exps), c);
    }
    p
}

fn coeff_strategy(complex: bool) -> BoxedStrategy<GaussianRational> {
    let r = (-6i64..=6, 1i64..=4).prop_map(|(n, d)| gr(n, d));
    if complex {
        (r.clone(), r).prop_map(|(a, b)| GaussianRational::new(a.re, b.re)).boxed()
    } else {
        r.boxed()
    }
}

/// proptest strategy for polynomials of total degree ≤ `deg`.
pub fn poly_strategy(dim: usize, basis: Basis, deg: u32, max_terms: usize, complex: bool) -> BoxedStrategy<PhasePoly> {
    let exps = proptest::collection::vec(0..=deg, 2 * dim).prop_filter_map("degree bound", move |e| {
        (e.iter().sum::<u32>() <= deg).then_some(e)
    });
    proptest::collection::vec((exps, coeff_strategy(complex)), 0..=max_terms)
        .prop_map(move |terms| PhasePoly::from_terms(dim, basis, terms))
        .boxed()
}
