//! Poisson bracket and the higher bidifferential brackets `{f,g}_n`.
//!
//! In every supported basis the Poisson tensor is a scaled permutation:
//! `J^{k, σ(k)} = c_k` and all other entries vanish. For ambient and chart
//! coordinates `σ` swaps `q` and `p` with `c = ±1`; for the ladder pair
//! `c = ±{b, b̄}`. That lets the `n`-th bracket be summed over multisets of
//! derivative directions instead of over `(2M)^{2n}` index tuples:
//!
//! `{f,g}_n = Σ_{|α|=n} n!/α! · c^α · ∂^α f · ∂^{σ(α)} g`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Result;
use crate::ladder::ladder_bracket;
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{factorial, real, GaussianRational};

/// `(σ(k), J^{k σ(k)})` for every variable `k`.
pub fn pairing(dim: usize, basis: Basis) -> Vec<(usize, GaussianRational)> {
    let unit = match basis {
        Basis::Ambient | Basis::Chart => GaussianRational::one(),
        Basis::Ladder => ladder_bracket(),
    };
    (0..2 * dim)
        .map(|k| {
            if k < dim {
                (k + dim, unit.clone())
            } else {
                (k - dim, -unit.clone())
            }
        })
        .collect()
}

/// Dense Poisson tensor `J^{ab}`.
pub fn poisson_tensor(dim: usize, basis: Basis) -> Vec<Vec<GaussianRational>> {
    let n = 2 * dim;
    let mut j = vec![vec![GaussianRational::zero(); n]; n];
    for (k, (s, c)) in pairing(dim, basis).into_iter().enumerate() {
        j[k][s] = c;
    }
    j
}

/// All exponent vectors over `nvars` variables with total degree `n`.
pub fn multi_indices(nvars: usize, n: u32) -> Vec<Vec<u32>> {
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k + 1 == cur.len() {
            cur[k] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[k] = v;
            rec(k + 1, left - v, cur, out);
        }
    }
    if nvars == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(0, n, &mut vec![0; nvars], &mut out);
    out
}

/// Memoized mixed partial derivatives of one polynomial.
pub(crate) struct Jets<'a> {
    poly: &'a PhasePoly,
    cache: HashMap<Vec<u32>, PhasePoly>,
}

impl<'a> Jets<'a> {
    pub(crate) fn new(poly: &'a PhasePoly) -> Self {
        Jets {
            poly,
            cache: HashMap::new(),
        }
    }

    pub(crate) fn get(&mut self, alpha: &[u32]) -> &PhasePoly {
        if !self.cache.contains_key(alpha) {
            let d = self.poly.derivative_multi(alpha);
            self.cache.insert(alpha.to_vec(), d);
        }
        &self.cache[alpha]
    }
}

/// `Σ_{|α|=n} c^α/α! ∂^α f ∂^{σα} g`, i.e. `{f,g}_n / n!`.
pub(crate) fn scaled_bracket(
    f: &mut Jets<'_>,
    g: &mut Jets<'_>,
    n: u32,
    pairs: &[(usize, GaussianRational)],
) -> PhasePoly {
    let (dim, basis) = (f.poly.dim(), f.poly.basis());
    let nvars = 2 * dim;
    let mut out = PhasePoly::zero(dim, basis);
    for alpha in multi_indices(nvars, n) {
        let df = f.get(&alpha);
        if df.is_zero() {
            continue;
        }
        let df = df.clone();
        let mut beta = vec![0u32; nvars];
        let mut weight = GaussianRational::one();
        let mut denom = BigInt::one();
        for (k, &a) in alpha.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let (s, c) = &pairs[k];
            beta[*s] = a;
            for _ in 0..a {
                weight *= c;
            }
            denom *= factorial(a);
        }
        let dg = g.get(&beta);
        if dg.is_zero() {
            continue;
        }
        let w = weight * real(BigRational::new(BigInt::one(), denom));
        out += &(&df * dg).scale(&w);
    }
    out
}

/// `{f, g} = ∂_i f J^{ij} ∂_j g`.
pub fn poisson_bracket(f: &PhasePoly, g: &PhasePoly) -> Result<PhasePoly> {
    higher_bracket(f, g, 1)
}

/// The `n`-th bidifferential bracket; `{f,g}_0 = fg`, `{f,g}_1 = {f,g}`.
pub fn higher_bracket(f: &PhasePoly, g: &PhasePoly, n: u32) -> Result<PhasePoly> {
    f.check_compatible(g)?;
    let pairs = pairing(f.dim(), f.basis());
    let s = scaled_bracket(&mut Jets::new(f), &mut Jets::new(g), n, &pairs);
    Ok(s.scale(&real(BigRational::from_integer(factorial(n)))))
}
