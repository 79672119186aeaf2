//! The backward operator `L* = 1/2 sum p^i (delta_ij - p^j) d_i d_j` and its
//! formal adjoint `L`, applied exactly in face charts.
//!
//! Both operators take the same form in every chart, so the dependent
//! coordinate can be any label of the face.

use crate::error::{Error, Result};
use crate::polyalg::{frac, integrate_poly, ChartExpr, Coeff, LabelMap, MultiPoly};
use crate::simplex::{Chart, Face};

/// Which of the two operators to apply.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OperatorKind {
    Backward,
    Forward,
}

/// Diffusion coefficient `a_ij = p^i (delta_ij - p^j)` for `i <= j`, halved on
/// the diagonal and left whole off it, so summing over `i <= j` gives the
/// full symmetric operator.
fn coefficient(chart: Chart, i: usize, j: usize) -> MultiPoly {
    let xi = MultiPoly::var(chart, i);
    if i == j {
        (&xi - &xi.pow(2)).scale(&frac(1, 2))
    } else {
        -&(&xi * &MultiPoly::var(chart, j))
    }
}

/// Applies `L*` exactly. On a vertex the operator is zero.
pub fn apply_backward<E: ChartExpr>(expr: &E) -> E {
    let chart = expr.chart();
    let n = chart.nvars();
    let mut acc = expr.zero_like();
    if n == 0 {
        return acc;
    }
    let firsts: Vec<E> = (0..n).map(|i| expr.partial_in(i)).collect();
    for i in 0..n {
        for j in i..n {
            let second = firsts[i].partial_in(j);
            acc = acc.add_to(&second.mul_by_poly(&coefficient(chart, i, j)));
        }
    }
    acc.finish()
}

/// Applies the forward operator `L u = 1/2 sum d_i d_j (a_ij u)` exactly.
pub fn apply_forward(u: &MultiPoly) -> MultiPoly {
    let chart = u.chart();
    let n = chart.nvars();
    let mut acc = MultiPoly::zero(chart);
    for i in 0..n {
        for j in i..n {
            let inner = &coefficient(chart, i, j) * u;
            acc = &acc + &inner.partial(i).partial(j);
        }
    }
    acc
}

/// Applies the chosen operator to a polynomial.
pub fn apply(kind: OperatorKind, u: &MultiPoly) -> MultiPoly {
    match kind {
        OperatorKind::Backward => apply_backward(u),
        OperatorKind::Forward => apply_forward(u),
    }
}

/// Product of all homogeneous coordinates of the face; positive inside and
/// zero on the whole boundary.
pub fn omega(face: Face) -> Result<MultiPoly> {
    if face.is_vertex() {
        return Err(Error::Argument(format!(
            "omega is undefined on the vertex {face}"
        )));
    }
    let chart = Chart::new(face);
    face.labels().try_fold(MultiPoly::one(chart), |acc, l| {
        Ok(&acc * &MultiPoly::coord(chart, l)?)
    })
}

/// `L*_sub (u|sub) - (L* u)|sub`, which vanishes identically.
pub fn restriction_defect(expr: &MultiPoly, subface: Face) -> Result<MultiPoly> {
    let face = expr.face();
    if subface == face || !subface.is_subface_of(face) {
        return Err(Error::Argument(format!(
            "{subface} is not a proper subface of {face}"
        )));
    }
    let map = LabelMap::restriction(face, subface)?;
    let restricted_first = apply_backward(&expr.substitute(&map)?);
    let applied_first = apply_backward(expr).substitute(&map)?;
    Ok(&restricted_first - &applied_first)
}

/// `(L u, phi) - (u, L* phi)` for `phi` vanishing on the boundary.
pub fn adjointness_defect(u: &MultiPoly, phi: &MultiPoly) -> Result<Coeff> {
    let lhs = integrate_poly(&apply_forward(u).checked_mul(phi)?);
    let rhs = integrate_poly(&u.checked_mul(&apply_backward(phi))?);
    Ok(lhs - rhs)
}

/// True when `L* f = -kappa f` holds exactly.
pub fn is_backward_eigen<E: ChartExpr + PartialEq + Scalable>(f: &E, kappa: &Coeff) -> bool {
    let lf = apply_backward(f);
    let rhs = f.scaled(&-kappa.clone());
    lf == rhs
}

/// Scalar multiplication for the eigen-identity check.
pub trait Scalable {
    fn scaled(&self, c: &Coeff) -> Self;
}

impl Scalable for MultiPoly {
    fn scaled(&self, c: &Coeff) -> Self {
        self.scale(c)
    }
}

impl Scalable for crate::polyalg::RationalFn {
    fn scaled(&self, c: &Coeff) -> Self {
        self.scale(c)
    }
}

/// Eigenvalue of `L` (and `L*`) on the leading part of a degree-`m` block in
/// a chart with `n` free variables is `-kappa`, `kappa` as returned here.
pub fn forward_block_kappa(m: u32, n: usize) -> Coeff {
    let s = m as i64 + n as i64;
    frac(s * (s + 1), 2)
}

/// `kappa` of the degree-`m` block of `L*`.
pub fn backward_block_kappa(m: u32) -> Coeff {
    let m = m as i64;
    frac(m * (m - 1), 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{parse_poly, q, RationalFn};
    use num_traits::Zero;

    fn chart(l: &[usize]) -> Chart {
        Chart::new(Face::new(l).unwrap())
    }

    #[test]
    fn logistic_has_kappa_one() {
        let c = chart(&[0, 1]);
        let f = parse_poly("p1 (1 - p1)", c).unwrap();
        assert_eq!(apply_backward(&f), -&f);
    }

    #[test]
    fn affine_kernel() {
        for l in [&[0, 1][..], &[0, 1, 2], &[1, 2, 4, 5]] {
            let c = chart(l);
            let mut f = MultiPoly::constant(c, q(3));
            for (k, lab) in c.face().labels().enumerate() {
                f = &f + &MultiPoly::coord(c, lab).unwrap().scale(&q(k as i64 + 2));
            }
            assert!(apply_backward(&f).is_zero());
        }
    }

    #[test]
    fn backward_on_extended_logistic() {
        let c = chart(&[0, 1, 2]);
        let s = parse_poly("p1 + p2", c).unwrap();
        let numer = &(&s * &parse_poly("1 - p1 - p2", c).unwrap()) * &parse_poly("p1", c).unwrap();
        let psi = RationalFn::new(numer, [(0b110, 1)]).unwrap();
        assert_eq!(apply_backward(&psi), psi.scale(&q(-1)));
    }

    #[test]
    fn vertex_is_zero_operator() {
        let c = chart(&[2]);
        assert!(apply_backward(&MultiPoly::constant(c, q(5))).is_zero());
    }

    #[test]
    fn forward_examples() {
        let c = chart(&[0, 1]);
        assert_eq!(apply_forward(&MultiPoly::one(c)), MultiPoly::constant(c, q(-1)));
        // L p = 1/2 (p^2 (1-p))'' = 1 - 3p.
        assert_eq!(
            apply_forward(&MultiPoly::var(c, 0)),
            parse_poly("1 - 3 p1", c).unwrap()
        );
    }

    #[test]
    fn adjointness_examples() {
        let c = chart(&[0, 1]);
        let w = omega(c.face()).unwrap();
        assert!(adjointness_defect(&MultiPoly::one(c), &w).unwrap().is_zero());
        let p = MultiPoly::var(c, 0);
        assert!(adjointness_defect(&p, &(&w * &p)).unwrap().is_zero());
        let phi = parse_poly("p1^2 (1 - p1)^2", c).unwrap();
        assert!(adjointness_defect(&p, &phi).unwrap().is_zero());
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(Face::new(&[0, 1]).unwrap()).unwrap(), parse_poly("p1 - p1^2", chart(&[0, 1])).unwrap());
        let c = chart(&[0, 1, 2]);
        assert_eq!(
            omega(c.face()).unwrap(),
            parse_poly("p1 p2 (1 - p1 - p2)", c).unwrap()
        );
        assert!(omega(Face::new(&[1]).unwrap()).is_err());
    }

    #[test]
    fn restriction_examples() {
        let c = chart(&[0, 1, 2]);
        let f = parse_poly("p1^3 p2^2 - 4 p1 p2 + 2 p2^5 + 1", c).unwrap();
        assert!(restriction_defect(&f, Face::new(&[0, 1]).unwrap()).unwrap().is_zero());
        assert!(restriction_defect(&f, Face::new(&[1, 2]).unwrap()).unwrap().is_zero());
        assert!(restriction_defect(&f, Face::new(&[2]).unwrap()).unwrap().is_zero());
        assert!(restriction_defect(&f, Face::new(&[3]).unwrap()).is_err());
    }
}
