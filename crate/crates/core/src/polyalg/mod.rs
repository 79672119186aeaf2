//! Exact sparse polynomial and rational-function algebra on face charts,
//! exact integration, text serialization and floating mirrors.

mod float;
mod integrate;
mod labelmap;
mod monomial;
mod poly;
mod rational;
mod text;

use num_bigint::BigInt;
use num_rational::BigRational;

pub use float::{FloatPoly, FloatRational};
pub use integrate::{integrate_face_function, integrate_poly, integrate_rational, pair_with_poly};
pub use labelmap::LabelMap;
pub use monomial::{graded_basis, monomials_of_degree, Monomial, MAX_VARS};
pub use poly::MultiPoly;
pub use rational::{factor_name, FaceFunction, RationalFn};
pub use text::{format_poly, parse_poly};

use crate::simplex::Chart;

/// Exact rational coefficient, always in lowest terms.
pub type Coeff = BigRational;

/// Largest total degree accepted for final conditions and truncations.
pub const DEGREE_CAP: u32 = 16;

/// Integer as a coefficient.
pub fn q(n: i64) -> Coeff {
    Coeff::from_integer(BigInt::from(n))
}

/// `n / d` as a coefficient.
pub fn frac(n: i64, d: i64) -> Coeff {
    Coeff::new(BigInt::from(n), BigInt::from(d))
}

/// Expressions the differential operators can act on.
pub trait ChartExpr: Clone + Sized {
    fn chart(&self) -> Chart;
    fn zero_like(&self) -> Self;
    /// Partial derivative, not necessarily in canonical form.
    fn partial_in(&self, var: usize) -> Self;
    fn mul_by_poly(&self, p: &MultiPoly) -> Self;
    fn add_to(&self, other: &Self) -> Self;
    /// Canonical form after a chain of raw operations.
    fn finish(self) -> Self;
}

impl ChartExpr for MultiPoly {
    fn chart(&self) -> Chart {
        MultiPoly::chart(self)
    }
    fn zero_like(&self) -> Self {
        MultiPoly::zero(MultiPoly::chart(self))
    }
    fn partial_in(&self, var: usize) -> Self {
        self.partial(var)
    }
    fn mul_by_poly(&self, p: &MultiPoly) -> Self {
        self * p
    }
    fn add_to(&self, other: &Self) -> Self {
        self + other
    }
    fn finish(self) -> Self {
        self
    }
}

impl ChartExpr for RationalFn {
    fn chart(&self) -> Chart {
        RationalFn::chart(self)
    }
    fn zero_like(&self) -> Self {
        RationalFn::zero(RationalFn::chart(self))
    }
    fn partial_in(&self, var: usize) -> Self {
        self.partial_raw(var)
    }
    fn mul_by_poly(&self, p: &MultiPoly) -> Self {
        self.mul_poly_raw(p)
    }
    fn add_to(&self, other: &Self) -> Self {
        self.add_raw(other)
    }
    fn finish(self) -> Self {
        self.cancelled()
    }
}
