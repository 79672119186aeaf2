use super::poly::MultiPoly;
use super::rational::{to_f64, RationalFn};
use crate::simplex::MAX_ALLELES;

/// Floating mirror of a [`MultiPoly`], indexed directly by allele label.
#[derive(Clone, Debug, Default)]
pub struct FloatPoly {
    terms: Vec<(Vec<(usize, i32)>, f64)>,
}

impl FloatPoly {
    pub fn from_exact(p: &MultiPoly) -> FloatPoly {
        let labels: Vec<usize> = p.chart().free_labels().collect();
        let terms = p
            .terms()
            .map(|(m, c)| {
                let powers = labels
                    .iter()
                    .enumerate()
                    .filter(|(v, _)| m.exp(*v) > 0)
                    .map(|(v, &l)| (l, m.exp(v) as i32))
                    .collect();
                (powers, to_f64(c))
            })
            .collect();
        FloatPoly { terms }
    }

    pub fn eval(&self, dense: &[f64; MAX_ALLELES]) -> f64 {
        self.terms
            .iter()
            .map(|(pw, c)| pw.iter().fold(*c, |acc, &(l, e)| acc * dense[l].powi(e)))
            .sum()
    }
}

/// Floating mirror of a [`RationalFn`].
#[derive(Clone, Debug, Default)]
pub struct FloatRational {
    numer: FloatPoly,
    factors: Vec<(u16, i32)>,
}

impl FloatRational {
    pub fn from_exact(r: &RationalFn) -> FloatRational {
        FloatRational {
            numer: FloatPoly::from_exact(r.numer()),
            factors: r.factors().map(|(m, e)| (m, e as i32)).collect(),
        }
    }

    /// Value at a label-indexed point; infinite or NaN where a denominator
    /// factor vanishes.
    pub fn eval(&self, dense: &[f64; MAX_ALLELES]) -> f64 {
        let mut d = 1.0;
        for &(m, e) in &self.factors {
            let mut s = 0.0;
            let mut rest = m;
            while rest != 0 {
                let l = rest.trailing_zeros() as usize;
                s += dense[l];
                rest &= rest - 1;
            }
            d *= s.powi(e);
        }
        self.numer.eval(dense) / d
    }
}
