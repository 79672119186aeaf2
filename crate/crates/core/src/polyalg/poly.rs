use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::labelmap::LabelMap;
use super::monomial::Monomial;
use super::Coeff;
use crate::error::{Error, Result};
use crate::simplex::{Chart, Face};

/// Sparse polynomial with exact rational coefficients in the free variables
/// of a face chart.
///
/// No zero coefficient is ever stored, so structural equality is equality of
/// polynomials.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultiPoly {
    chart: Chart,
    terms: BTreeMap<Monomial, Coeff>,
}

impl MultiPoly {
    pub fn zero(chart: Chart) -> MultiPoly {
        MultiPoly {
            chart,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(chart: Chart, c: Coeff) -> MultiPoly {
        let mut p = MultiPoly::zero(chart);
        if !c.is_zero() {
            p.terms.insert(Monomial::ONE, c);
        }
        p
    }

    pub fn one(chart: Chart) -> MultiPoly {
        MultiPoly::constant(chart, Coeff::one())
    }

    /// The free variable with index `var`.
    pub fn var(chart: Chart, var: usize) -> MultiPoly {
        assert!(var < chart.nvars(), "variable index out of range");
        MultiPoly::monomial(chart, Monomial::var(var), Coeff::one())
    }

    pub fn monomial(chart: Chart, m: Monomial, c: Coeff) -> MultiPoly {
        let mut p = MultiPoly::zero(chart);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// The homogeneous coordinate `p^label` expressed in the chart.
    pub fn coord(chart: Chart, label: usize) -> Result<MultiPoly> {
        if !chart.face().contains(label) {
            return Err(Error::Argument(format!(
                "label {label} is not on face {}",
                chart.face()
            )));
        }
        Ok(match chart.var_of(label) {
            Some(v) => MultiPoly::var(chart, v),
            None => {
                let mut p = MultiPoly::one(chart);
                for v in 0..chart.nvars() {
                    p.terms.insert(Monomial::var(v), -Coeff::one());
                }
                p
            }
        })
    }

    /// The linear form `sum of p^l over l in mask`, expressed in the chart.
    pub fn label_sum(chart: Chart, mask: u16) -> Result<MultiPoly> {
        let face = chart.face();
        if mask & !face.mask() != 0 {
            return Err(Error::Argument(format!(
                "label mask {mask:#x} is not within face {face}"
            )));
        }
        let mut out = MultiPoly::zero(chart);
        if mask & (1 << chart.dependent()) != 0 {
            // 1 - (free labels outside the mask)
            out = MultiPoly::one(chart);
            for (v, l) in chart.free_labels().enumerate() {
                if mask & (1 << l) == 0 {
                    out.terms.insert(Monomial::var(v), -Coeff::one());
                }
            }
        } else {
            for (v, l) in chart.free_labels().enumerate() {
                if mask & (1 << l) != 0 {
                    out.terms.insert(Monomial::var(v), Coeff::one());
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn from_map(chart: Chart, mut terms: BTreeMap<Monomial, Coeff>) -> MultiPoly {
        terms.retain(|_, c| !c.is_zero());
        MultiPoly { chart, terms }
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    pub fn from_terms<I>(chart: Chart, terms: I) -> Result<MultiPoly>
    where
        I: IntoIterator<Item = (Vec<u8>, Coeff)>,
    {
        let mut out = MultiPoly::zero(chart);
        for (e, c) in terms {
            if e.len() != chart.nvars() {
                return Err(Error::Argument(format!(
                    "exponent vector of length {} on a chart with {} variables",
                    e.len(),
                    chart.nvars()
                )));
            }
            out.add_term(Monomial::from_exps(&e), c);
        }
        Ok(out)
    }

    #[inline]
    pub fn chart(&self) -> Chart {
        self.chart
    }

    #[inline]
    pub fn face(&self) -> Face {
        self.chart.face()
    }

    #[inline]
    pub fn nvars(&self) -> usize {
        self.chart.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    /// Constant value when the polynomial has degree at most zero.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.degree() {
            None => Some(Coeff::zero()),
            Some(0) => Some(self.coeff(&Monomial::ONE)),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.last_key_value()
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_chart(&self, other: &MultiPoly) -> Result<()> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch {
                expected: self.face(),
                found: other.face(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_chart(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_chart(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_chart(other)?;
        let mut acc: BTreeMap<Monomial, Coeff> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert_with(Coeff::zero) += ca * cb;
            }
        }
        Ok(MultiPoly::from_map(self.chart, acc))
    }

    pub fn scale(&self, c: &Coeff) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.chart);
        }
        MultiPoly {
            chart: self.chart,
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut out = MultiPoly::one(self.chart);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Partial derivative with respect to free variable `var`.
    pub fn partial(&self, var: usize) -> MultiPoly {
        assert!(var < self.nvars(), "variable index out of range");
        let mut out = MultiPoly::zero(self.chart);
        for (m, c) in &self.terms {
            let e = m.exp(var);
            if let Some(lower) = m.lower(var) {
                out.terms.insert(lower, c * Coeff::from_integer(e.into()));
            }
        }
        out
    }

    /// Re-expresses the polynomial on `chart` through a label map whose
    /// source face is this polynomial's face.
    pub fn substitute(&self, map: &LabelMap) -> Result<MultiPoly> {
        if map.source() != self.face() {
            return Err(Error::ChartMismatch {
                expected: map.source(),
                found: self.face(),
            });
        }
        let target = Chart::new(map.target());
        let images: Vec<MultiPoly> = self
            .chart
            .free_labels()
            .map(|l| MultiPoly::label_sum(target, map.image(l)))
            .collect::<Result<_>>()?;
        Ok(self.compose(target, &images))
    }

    /// Substitutes `images[v]` for free variable `v`.
    pub(crate) fn compose(&self, target: Chart, images: &[MultiPoly]) -> MultiPoly {
        let mut powers: Vec<Vec<MultiPoly>> = images
            .iter()
            .map(|p| vec![MultiPoly::one(target), p.clone()])
            .collect();
        let mut out = MultiPoly::zero(target);
        for (m, c) in &self.terms {
            let mut t = MultiPoly::constant(target, c.clone());
            for v in 0..self.nvars() {
                let e = m.exp(v) as usize;
                if e == 0 {
                    continue;
                }
                while powers[v].len() <= e {
                    let next = &powers[v][powers[v].len() - 1] * &images[v];
                    powers[v].push(next);
                }
                t = &t * &powers[v][e];
            }
            for (mm, cc) in t.terms {
                out.add_term(mm, cc);
            }
        }
        out
    }

    /// Moves the polynomial to another chart with the same number of free
    /// variables, mapping variables by position.
    pub fn rechart(&self, chart: Chart) -> Result<MultiPoly> {
        if chart.nvars() != self.nvars() {
            return Err(Error::Argument(format!(
                "cannot move a polynomial from face {} to face {}",
                self.face(),
                chart.face()
            )));
        }
        Ok(MultiPoly {
            chart,
            terms: self.terms.clone(),
        })
    }

    /// Exact quotient `self / divisor`, or `None` if the division leaves a
    /// remainder.
    pub fn div_exact(&self, divisor: &MultiPoly) -> Option<MultiPoly> {
        let (lm, lc) = divisor.leading()?;
        let (lm, lc) = (*lm, lc.clone());
        let mut rem = self.terms.clone();
        let mut quot = MultiPoly::zero(self.chart);
        while let Some((m, c)) = rem.last_key_value() {
            let qm = m.div(&lm)?;
            let qc = c / &lc;
            for (dm, dc) in &divisor.terms {
                let key = qm.mul(dm);
                let v = rem.entry(key).or_insert_with(Coeff::zero);
                *v -= &qc * dc;
                if v.is_zero() {
                    rem.remove(&key);
                }
            }
            quot.terms.insert(qm, qc);
        }
        Some(quot)
    }

    /// Floating-point value at a label-indexed frequency vector.
    pub fn eval(&self, dense: &[f64]) -> f64 {
        let x: Vec<f64> = self.chart.free_labels().map(|l| dense[l]).collect();
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64().unwrap_or(f64::NAN) * m.eval_f64(&x))
            .sum()
    }

    /// Exact value at label-indexed rational coordinates.
    pub fn eval_exact(&self, dense: &[Coeff]) -> Coeff {
        let x: Vec<&Coeff> = self.chart.free_labels().map(|l| &dense[l]).collect();
        let mut total = Coeff::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, xv) in x.iter().enumerate() {
                let e = m.exp(v);
                if e > 0 {
                    t *= num_traits::pow::pow((*xv).clone(), e as usize);
                }
            }
            total += t;
        }
        total
    }

    /// Largest absolute coefficient, zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> Coeff {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Coeff::zero)
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    /// Panics on chart mismatch; use [`MultiPoly::checked_add`] otherwise.
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_add(rhs).expect("chart mismatch in polynomial addition")
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_sub(rhs).expect("chart mismatch in polynomial subtraction")
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_mul(rhs).expect("chart mismatch in polynomial product")
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            chart: self.chart,
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }
}
