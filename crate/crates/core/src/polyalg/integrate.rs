//! Exact integration over an open face in chart (Lebesgue) measure.
//!
//! Monomials integrate by the Dirichlet formula. Rational terms whose
//! denominator factors form a nested chain of label sets are reduced by
//! stick-breaking: inside the largest set `A` write `p^l = s q^l`, integrate
//! the outer simplex in closed form and recurse on the `q` simplex.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::poly::MultiPoly;
use super::rational::{factor_name, FaceFunction, RationalFn};
use super::Coeff;
use crate::error::{Error, Result};
use crate::simplex::MAX_ALLELES;

type LabelMono = [u16; MAX_ALLELES];

const FACT_LIMIT: usize = 1024;

fn factorial(n: usize) -> &'static BigInt {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(FACT_LIMIT);
        v.push(BigInt::one());
        for i in 1..FACT_LIMIT {
            let next = &v[i - 1] * BigInt::from(i);
            v.push(next);
        }
        v
    });
    &t[n]
}

/// `prod a_l! / (k - 1 + sum a_l)!` over a simplex with `k` labels.
fn dirichlet(exps: impl Iterator<Item = usize>, k: usize) -> Coeff {
    let mut num = BigInt::one();
    let mut total = 0usize;
    for a in exps {
        num *= factorial(a);
        total += a;
    }
    Coeff::new(num, factorial(k - 1 + total).clone())
}

fn to_label_poly(p: &MultiPoly) -> BTreeMap<LabelMono, Coeff> {
    let labels: Vec<usize> = p.chart().free_labels().collect();
    let mut out = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut e = [0u16; MAX_ALLELES];
        for (v, &l) in labels.iter().enumerate() {
            e[l] = m.exp(v) as u16;
        }
        out.insert(e, c.clone());
    }
    out
}

/// Exact integral of a polynomial over its face.
pub fn integrate_poly(p: &MultiPoly) -> Coeff {
    let face = p.face();
    let k = face.len();
    let labels: Vec<usize> = p.chart().free_labels().collect();
    let mut total = Coeff::zero();
    for (m, c) in p.terms() {
        let exps = (0..labels.len()).map(|v| m.exp(v) as usize);
        total += c * dirichlet(exps, k);
    }
    total
}

/// Exact integral of a rational function whose denominator factors are
/// nested. Non-nested denominators and divergent integrals are errors.
pub fn integrate_rational(r: &RationalFn) -> Result<Coeff> {
    if let Some(p) = r.as_poly() {
        return Ok(integrate_poly(p));
    }
    let mut chain: Vec<(u16, u32)> = r.factors().collect();
    chain.sort_by(|a, b| b.0.count_ones().cmp(&a.0.count_ones()).then(a.0.cmp(&b.0)));
    for w in chain.windows(2) {
        if w[1].0 & !w[0].0 != 0 || w[1].0 == w[0].0 {
            return Err(Error::Argument(format!(
                "denominator factors {} and {} are not nested",
                factor_name(w[0].0),
                factor_name(w[1].0)
            )));
        }
    }
    chain_integral(to_label_poly(r.numer()), r.face().mask(), &chain)
}

fn chain_integral(poly: BTreeMap<LabelMono, Coeff>, simplex: u16, chain: &[(u16, u32)]) -> Result<Coeff> {
    let labels: Vec<usize> = (0..MAX_ALLELES).filter(|l| simplex & (1 << l) != 0).collect();
    let k = labels.len();
    let Some(&(inner, _)) = chain.first() else {
        let mut total = Coeff::zero();
        for (e, c) in &poly {
            total += c * dirichlet(labels.iter().map(|&l| e[l] as usize), k);
        }
        return Ok(total);
    };
    if inner == simplex {
        return chain_integral(poly, simplex, &chain[1..]);
    }
    let total_exp: i64 = chain.iter().map(|(_, e)| *e as i64).sum();
    let inner_size = inner.count_ones() as i64;
    let outer: Vec<usize> = labels.iter().copied().filter(|l| inner & (1 << l) == 0).collect();
    let mut reduced: BTreeMap<LabelMono, Coeff> = BTreeMap::new();
    for (e, c) in &poly {
        let inner_deg: i64 = labels
            .iter()
            .filter(|&&l| inner & (1 << l) != 0)
            .map(|&l| e[l] as i64)
            .sum();
        let s_exp = inner_deg + inner_size - 1 - total_exp;
        if s_exp < 0 {
            return Err(Error::Divergent(format!(
                "factor {} has too high an order for the numerator",
                factor_name(inner)
            )));
        }
        let w = dirichlet(
            outer
                .iter()
                .map(|&l| e[l] as usize)
                .chain(std::iter::once(s_exp as usize)),
            outer.len() + 1,
        );
        let mut ie = [0u16; MAX_ALLELES];
        for &l in &labels {
            if inner & (1 << l) != 0 {
                ie[l] = e[l];
            }
        }
        let slot = reduced.entry(ie).or_insert_with(Coeff::zero);
        *slot += c * w;
    }
    reduced.retain(|_, c| !c.is_zero());
    chain_integral(reduced, inner, &chain[1..])
}

/// Integral of a face function, summing its terms separately.
pub fn integrate_face_function(f: &FaceFunction) -> Result<Coeff> {
    let mut total = integrate_poly(f.poly());
    for t in f.terms() {
        total += integrate_rational(t)?;
    }
    Ok(total)
}

/// `(f, g)` for a face function and a polynomial.
pub fn pair_with_poly(f: &FaceFunction, g: &MultiPoly) -> Result<Coeff> {
    let mut total = integrate_poly(&f.poly().checked_mul(g)?);
    for t in f.terms() {
        let prod = RationalFn::raw(t.numer().checked_mul(g)?, t.factors().collect());
        total += integrate_rational(&prod)?;
    }
    Ok(total)
}
