use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, ToPrimitive, Zero};

use super::labelmap::LabelMap;
use super::poly::MultiPoly;
use super::Coeff;
use crate::error::{Error, Result};
use crate::simplex::{Chart, Face};

/// A rational function `numer / prod_A (sum_{l in A} p^l)^{e_A}`.
///
/// Each denominator factor is a label-sum linear form, keyed by its label
/// mask. Factors equal to the whole face (the constant 1) are dropped, and
/// every factor dividing the numerator is cancelled, so the representation
/// is canonical and `==` is equality of functions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RationalFn {
    numer: MultiPoly,
    denom: BTreeMap<u16, u32>,
}

/// Renders a label mask as the linear form it stands for.
pub fn factor_name(mask: u16) -> String {
    let mut s = String::from("(");
    let mut first = true;
    for l in 0..16 {
        if mask & (1 << l) != 0 {
            if !first {
                s.push_str(" + ");
            }
            s.push_str(&format!("p{l}"));
            first = false;
        }
    }
    s.push(')');
    s
}

/// Derivative of the linear form with label mask `mask` in free variable `var`.
fn form_partial(chart: Chart, mask: u16, var: usize) -> i32 {
    let in_mask = mask & (1 << chart.label_of(var)) != 0;
    match (mask & (1 << chart.dependent()) != 0, in_mask) {
        (true, true) => 0,
        (true, false) => -1,
        (false, true) => 1,
        (false, false) => 0,
    }
}

impl RationalFn {
    pub fn from_poly(numer: MultiPoly) -> RationalFn {
        RationalFn {
            numer,
            denom: BTreeMap::new(),
        }
    }

    pub fn zero(chart: Chart) -> RationalFn {
        RationalFn::from_poly(MultiPoly::zero(chart))
    }

    pub fn one(chart: Chart) -> RationalFn {
        RationalFn::from_poly(MultiPoly::one(chart))
    }

    /// Builds `numer / prod (label sum over mask)^exp` and cancels.
    pub fn new(numer: MultiPoly, factors: impl IntoIterator<Item = (u16, u32)>) -> Result<RationalFn> {
        let face = numer.face();
        let mut denom = BTreeMap::new();
        for (mask, e) in factors {
            if mask == 0 || mask & !face.mask() != 0 {
                return Err(Error::Argument(format!(
                    "denominator factor {} is not a nonempty label sum on face {face}",
                    factor_name(mask)
                )));
            }
            if e > 0 && mask != face.mask() {
                *denom.entry(mask).or_insert(0) += e;
            }
        }
        Ok(RationalFn { numer, denom }.cancelled())
    }

    /// Assembles without cancellation. Callers guarantee valid masks.
    pub(crate) fn raw(numer: MultiPoly, mut denom: BTreeMap<u16, u32>) -> RationalFn {
        let full = numer.face().mask();
        denom.remove(&full);
        denom.retain(|_, e| *e > 0);
        RationalFn { numer, denom }
    }

    /// Cancels every denominator factor that divides the numerator.
    pub(crate) fn cancelled(mut self) -> RationalFn {
        if self.numer.is_zero() {
            self.denom.clear();
            return self;
        }
        let chart = self.chart();
        let masks: Vec<u16> = self.denom.keys().copied().collect();
        for mask in masks {
            let form = MultiPoly::label_sum(chart, mask).expect("factor within face");
            let e = self.denom.get_mut(&mask).expect("present");
            while *e > 0 {
                match self.numer.div_exact(&form) {
                    Some(q) => {
                        self.numer = q;
                        *e -= 1;
                    }
                    None => break,
                }
            }
            if *e == 0 {
                self.denom.remove(&mask);
            }
        }
        self
    }

    #[inline]
    pub fn chart(&self) -> Chart {
        self.numer.chart()
    }

    #[inline]
    pub fn face(&self) -> Face {
        self.numer.face()
    }

    pub fn numer(&self) -> &MultiPoly {
        &self.numer
    }

    /// Denominator factors as `(label mask, exponent)`.
    pub fn factors(&self) -> impl Iterator<Item = (u16, u32)> + '_ {
        self.denom.iter().map(|(m, e)| (*m, *e))
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    pub fn as_poly(&self) -> Option<&MultiPoly> {
        self.denom.is_empty().then_some(&self.numer)
    }

    pub fn into_poly(self) -> std::result::Result<MultiPoly, RationalFn> {
        if self.denom.is_empty() {
            Ok(self.numer)
        } else {
            Err(self)
        }
    }

    fn check_chart(&self, other: &RationalFn) -> Result<()> {
        if self.chart() != other.chart() {
            return Err(Error::ChartMismatch {
                expected: self.face(),
                found: other.face(),
            });
        }
        Ok(())
    }

    /// Rewrites both operands over their least common denominator.
    fn aligned(&self, other: &RationalFn) -> (MultiPoly, MultiPoly, BTreeMap<u16, u32>) {
        let chart = self.chart();
        let mut denom = self.denom.clone();
        for (m, e) in &other.denom {
            let slot = denom.entry(*m).or_insert(0);
            *slot = (*slot).max(*e);
        }
        let lift = |r: &RationalFn| {
            let mut n = r.numer.clone();
            for (m, e) in &denom {
                let have = r.denom.get(m).copied().unwrap_or(0);
                if *e > have {
                    let form = MultiPoly::label_sum(chart, *m).expect("factor within face");
                    n = &n * &form.pow(e - have);
                }
            }
            n
        };
        (lift(self), lift(other), denom)
    }

    pub(crate) fn add_raw(&self, other: &RationalFn) -> RationalFn {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let (a, b, denom) = self.aligned(other);
        RationalFn::raw(&a + &b, denom)
    }

    pub fn checked_add(&self, other: &RationalFn) -> Result<RationalFn> {
        self.check_chart(other)?;
        Ok(self.add_raw(other).cancelled())
    }

    pub fn checked_sub(&self, other: &RationalFn) -> Result<RationalFn> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &RationalFn) -> Result<RationalFn> {
        self.check_chart(other)?;
        let mut denom = self.denom.clone();
        for (m, e) in &other.denom {
            *denom.entry(*m).or_insert(0) += e;
        }
        Ok(RationalFn::raw(&self.numer * &other.numer, denom).cancelled())
    }

    pub fn mul_poly(&self, p: &MultiPoly) -> Result<RationalFn> {
        self.checked_mul(&RationalFn::from_poly(p.clone()))
    }

    pub(crate) fn mul_poly_raw(&self, p: &MultiPoly) -> RationalFn {
        RationalFn::raw(&self.numer * p, self.denom.clone())
    }

    pub fn scale(&self, c: &Coeff) -> RationalFn {
        if c.is_zero() {
            return RationalFn::zero(self.chart());
        }
        RationalFn {
            numer: self.numer.scale(c),
            denom: self.denom.clone(),
        }
    }

    pub fn neg(&self) -> RationalFn {
        RationalFn {
            numer: -&self.numer,
            denom: self.denom.clone(),
        }
    }

    /// Divides by `(label sum over mask)^e`.
    pub fn div_form(&self, mask: u16, e: u32) -> Result<RationalFn> {
        let mut f = self.denom.clone();
        *f.entry(mask).or_insert(0) += e;
        RationalFn::new(self.numer.clone(), f)
    }

    /// Quotient-rule derivative keeping the factored denominator; not
    /// cancelled.
    pub(crate) fn partial_raw(&self, var: usize) -> RationalFn {
        let chart = self.chart();
        let active: Vec<(u16, u32, i32)> = self
            .denom
            .iter()
            .map(|(m, e)| (*m, *e, form_partial(chart, *m, var)))
            .filter(|(_, _, c)| *c != 0)
            .collect();
        if active.is_empty() {
            return RationalFn::raw(self.numer.partial(var), self.denom.clone());
        }
        let forms: Vec<MultiPoly> = active
            .iter()
            .map(|(m, _, _)| MultiPoly::label_sum(chart, *m).expect("factor within face"))
            .collect();
        let q_all = forms.iter().fold(MultiPoly::one(chart), |acc, f| &acc * f);
        let mut numer = &self.numer.partial(var) * &q_all;
        for (k, (_, e, c)) in active.iter().enumerate() {
            let others = forms
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .fold(MultiPoly::one(chart), |acc, (_, f)| &acc * f);
            let w = Coeff::from_integer((*e as i64 * *c as i64).into());
            numer = &numer - &(&self.numer * &others).scale(&w);
        }
        let mut denom = self.denom.clone();
        for (m, _, _) in &active {
            *denom.get_mut(m).expect("present") += 1;
        }
        RationalFn::raw(numer, denom)
    }

    pub fn partial(&self, var: usize) -> RationalFn {
        self.partial_raw(var).cancelled()
    }

    /// Pulls the function back along a label map. A denominator factor whose
    /// image is empty has no continuous extension and is reported as such.
    pub fn substitute(&self, map: &LabelMap) -> Result<RationalFn> {
        let numer = self.numer.substitute(map)?;
        let target = map.target();
        let mut denom = BTreeMap::new();
        for (m, e) in &self.denom {
            let img = map.image_of_mask(*m);
            if img == 0 {
                return Err(Error::NoContinuousExtension {
                    face: target,
                    factor: factor_name(*m),
                });
            }
            *denom.entry(img).or_insert(0) += e;
        }
        Ok(RationalFn::raw(numer, denom).cancelled())
    }

    /// Restriction to a subface, where it exists as a rational function.
    pub fn restrict(&self, subface: Face) -> Result<RationalFn> {
        self.substitute(&LabelMap::restriction(self.face(), subface)?)
    }

    /// Floating value at a label-indexed frequency vector.
    pub fn eval(&self, dense: &[f64]) -> Result<f64> {
        let mut d = 1.0;
        for (m, e) in &self.denom {
            let v: f64 = (0..dense.len().min(16))
                .filter(|l| m & (1 << l) != 0)
                .map(|l| dense[l])
                .sum();
            if v <= 0.0 {
                return Err(Error::Singular {
                    factor: factor_name(*m),
                });
            }
            d *= v.powi(*e as i32);
        }
        Ok(self.numer.eval(dense) / d)
    }

    pub fn eval_exact(&self, dense: &[Coeff]) -> Result<Coeff> {
        let mut d = Coeff::one();
        for (m, e) in &self.denom {
            let v = (0..dense.len().min(16))
                .filter(|l| m & (1 << l) != 0)
                .fold(Coeff::zero(), |acc, l| acc + &dense[l]);
            if v.is_zero() {
                return Err(Error::Singular {
                    factor: factor_name(*m),
                });
            }
            d *= num_traits::pow::pow(v, *e as usize);
        }
        Ok(self.numer.eval_exact(dense) / d)
    }

    /// Total degree of the denominator.
    pub fn denom_degree(&self) -> u32 {
        self.denom.values().sum()
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = super::text::format_poly(&self.numer);
        if self.denom.is_empty() {
            return f.write_str(&n);
        }
        write!(f, "({n}) / (")?;
        for (i, (m, e)) in self.denom.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&factor_name(*m))?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        f.write_str(")")
    }
}

/// A function on an open face given as a polynomial plus a list of rational
/// terms, kept unsummed so each term stays integrable on its own.
#[derive(Clone, PartialEq, Debug)]
pub struct FaceFunction {
    face: Face,
    poly: MultiPoly,
    terms: Vec<RationalFn>,
}

impl FaceFunction {
    pub fn zero(face: Face) -> FaceFunction {
        FaceFunction::from_poly(MultiPoly::zero(Chart::new(face)))
    }

    pub fn from_poly(poly: MultiPoly) -> FaceFunction {
        FaceFunction {
            face: poly.face(),
            poly,
            terms: Vec::new(),
        }
    }

    #[inline]
    pub fn face(&self) -> Face {
        self.face
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn terms(&self) -> &[RationalFn] {
        &self.terms
    }

    pub fn is_trivially_zero(&self) -> bool {
        self.poly.is_zero() && self.terms.is_empty()
    }

    /// Adds a term; polynomial terms fold into the polynomial part.
    pub fn push(&mut self, r: RationalFn) -> Result<()> {
        if r.face() != self.face {
            return Err(Error::ChartMismatch {
                expected: self.face,
                found: r.face(),
            });
        }
        if r.is_zero() {
            return Ok(());
        }
        match r.into_poly() {
            Ok(p) => self.poly = &self.poly + &p,
            Err(r) => self.terms.push(r),
        }
        Ok(())
    }

    pub fn add_poly(&mut self, p: &MultiPoly) -> Result<()> {
        self.poly = self.poly.checked_add(p)?;
        Ok(())
    }

    pub fn neg(&self) -> FaceFunction {
        FaceFunction {
            face: self.face,
            poly: -&self.poly,
            terms: self.terms.iter().map(RationalFn::neg).collect(),
        }
    }

    /// Sums everything into a single canonical rational function.
    pub fn simplify(&self) -> RationalFn {
        let mut acc = RationalFn::from_poly(self.poly.clone());
        for t in &self.terms {
            acc = acc.add_raw(t);
        }
        acc.cancelled()
    }

    pub fn eval(&self, dense: &[f64]) -> Result<f64> {
        let mut v = self.poly.eval(dense);
        for t in &self.terms {
            v += t.eval(dense)?;
        }
        Ok(v)
    }
}

/// Converts a rational coefficient for floating evaluation.
pub(crate) fn to_f64(c: &Coeff) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}
