//! Proper eigenbases of the backward operator and proper solutions on a
//! single open face.
//!
//! Eigenfunctions of the forward operator are computed exactly on polynomials
//! of bounded degree and multiplied by `omega`, which turns them into
//! boundary-vanishing eigenfunctions of the backward operator with the same
//! eigenvalue.
//!
//! Both operators map a monomial of degree `m` to a multiple of itself plus
//! terms of lower degree, with the multiple depending only on `m`. Each
//! eigenvector is therefore determined by its leading monomial and found by
//! solving the lower degree blocks one at a time, top down.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{apply, apply_backward, omega, OperatorKind};
use crate::polyalg::{
    graded_basis, integrate_poly, monomials_of_degree, pair_with_poly, Coeff, FaceFunction,
    FloatPoly, Monomial, MultiPoly, DEGREE_CAP,
};
use crate::simplex::{Chart, Face, SimplexPoint};

/// An eigenpair `L* phi* = -kappa phi*` on a face.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub kappa: Coeff,
    /// The backward eigenfunction `phi*`.
    pub eigenfunction: MultiPoly,
    /// The forward eigenfunction `phi` with `phi* = omega phi`; for a pair
    /// that is not proper this equals `eigenfunction`.
    pub forward: MultiPoly,
    pub proper: bool,
}

impl EigenPair {
    pub fn face(&self) -> Face {
        self.eigenfunction.face()
    }

    /// Total degree of the backward eigenfunction.
    pub fn degree(&self) -> u32 {
        self.eigenfunction.degree().unwrap_or(0)
    }

    fn rechart(&self, chart: Chart) -> EigenPair {
        EigenPair {
            kappa: self.kappa.clone(),
            eigenfunction: self.eigenfunction.rechart(chart).expect("same dimension"),
            forward: self.forward.rechart(chart).expect("same dimension"),
            proper: self.proper,
        }
    }
}

/// Matrix of an operator on the graded monomial basis of degree at most `D`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub basis: Vec<Monomial>,
    /// `entries[row][col]`: coefficient of `basis[row]` in the image of
    /// `basis[col]`.
    pub entries: Vec<Vec<Coeff>>,
}

impl OperatorMatrix {
    /// Coefficient vector of a polynomial of degree at most `D`.
    pub fn coefficients(&self, p: &MultiPoly) -> Result<Vec<Coeff>> {
        let index: HashMap<&Monomial, usize> =
            self.basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut v = vec![Coeff::zero(); self.basis.len()];
        for (m, c) in p.terms() {
            let i = index.get(m).ok_or_else(|| {
                Error::Range("polynomial degree exceeds the matrix basis".into())
            })?;
            v[*i] = c.clone();
        }
        Ok(v)
    }

    pub fn apply(&self, v: &[Coeff]) -> Vec<Coeff> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Coeff::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }
}

/// Builds the operator matrix on monomials of degree at most `max_degree`.
pub fn operator_matrix(face: Face, max_degree: u32, kind: OperatorKind) -> Result<OperatorMatrix> {
    if max_degree > DEGREE_CAP {
        return Err(Error::Range(format!(
            "degree {max_degree} exceeds the cap {DEGREE_CAP}"
        )));
    }
    let chart = Chart::new(face);
    let basis = graded_basis(chart.nvars(), max_degree);
    let index: HashMap<Monomial, usize> = basis.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let n = basis.len();
    let mut entries = vec![vec![Coeff::zero(); n]; n];
    for (col, m) in basis.iter().enumerate() {
        let image = apply(kind, &MultiPoly::monomial(chart, *m, Coeff::one()));
        for (mm, c) in image.terms() {
            entries[index[mm]][col] = c.clone();
        }
    }
    Ok(OperatorMatrix { basis, entries })
}

fn homogeneous_part(p: &MultiPoly, deg: u32) -> MultiPoly {
    let mut out = MultiPoly::zero(p.chart());
    for (m, c) in p.terms().filter(|(m, _)| m.degree() == deg) {
        out = &out + &MultiPoly::monomial(p.chart(), *m, c.clone());
    }
    out
}

/// Scalar by which the operator acts on the top degree of degree-`deg`
/// monomials; errors if the action is not scalar.
fn block_scalar(face: Face, kind: OperatorKind, deg: u32) -> Result<Coeff> {
    let chart = Chart::new(face);
    let mut scalar: Option<Coeff> = None;
    for m in monomials_of_degree(chart.nvars(), deg) {
        let x = MultiPoly::monomial(chart, m, Coeff::one());
        let top = homogeneous_part(&apply(kind, &x), deg);
        let s = top.coeff(&m);
        if top != x.scale(&s) || scalar.as_ref().is_some_and(|v| *v != s) {
            return Err(Error::Decomposition {
                face,
                degree: deg,
                reason: "diagonal block is not a multiple of the identity".into(),
            });
        }
        scalar = Some(s);
    }
    Ok(scalar.unwrap_or_else(Coeff::zero))
}

/// Eigenvectors of the forward operator on polynomials of degree at most
/// `max_degree`, one per leading monomial, each with leading coefficient 1.
/// Returns `(eigenvalue, eigenvector)` pairs sorted by leading monomial.
pub fn forward_eigenpairs(face: Face, max_degree: u32) -> Result<Vec<(Coeff, MultiPoly)>> {
    let chart = Chart::new(face);
    let kind = OperatorKind::Forward;
    let scalars: Vec<Coeff> = (0..=max_degree)
        .map(|d| block_scalar(face, kind, d))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for lead in graded_basis(chart.nvars(), max_degree) {
        let m = lead.degree();
        let lambda = scalars[m as usize].clone();
        let mut v = MultiPoly::monomial(chart, lead, Coeff::one());
        let mut resid = &apply(kind, &v) - &v.scale(&lambda);
        for k in (0..m).rev() {
            let rk = homogeneous_part(&resid, k);
            if rk.is_zero() {
                continue;
            }
            let gap = &lambda - &scalars[k as usize];
            if gap.is_zero() {
                return Err(Error::Decomposition {
                    face,
                    degree: k,
                    reason: "repeated eigenvalue with a nonzero coupling (defective block)".into(),
                });
            }
            v = &v + &rk.scale(&gap.recip());
            resid = &apply(kind, &v) - &v.scale(&lambda);
            if !homogeneous_part(&resid, k).is_zero() {
                return Err(Error::Decomposition {
                    face,
                    degree: k,
                    reason: "back-substitution left a residual".into(),
                });
            }
        }
        if !resid.is_zero() {
            return Err(Error::Decomposition {
                face,
                degree: m,
                reason: "eigen-identity failed".into(),
            });
        }
        out.push((lambda, v));
    }
    Ok(out)
}

type BasisCache = RwLock<HashMap<(usize, u32), Arc<Vec<EigenPair>>>>;

fn cache() -> &'static BasisCache {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn compute_proper_basis(face: Face, max_degree: u32) -> Result<Vec<EigenPair>> {
    let w = omega(face)?;
    let fwd_degree = max_degree - face.dim() as u32 - 1;
    let mut out = Vec::new();
    for (lambda, phi) in forward_eigenpairs(face, fwd_degree)? {
        let kappa = -lambda;
        let star = &w * &phi;
        if apply_backward(&star) != star.scale(&-kappa.clone()) {
            return Err(Error::Decomposition {
                face,
                degree: star.degree().unwrap_or(0),
                reason: "shifted eigenfunction fails the backward eigen-identity".into(),
            });
        }
        out.push(EigenPair {
            kappa,
            eigenfunction: star,
            forward: phi,
            proper: true,
        });
    }
    Ok(out)
}

/// Proper eigenpairs of `L*` on `face` with eigenfunctions of degree at most
/// `max_degree`, ordered by degree and then by leading monomial.
///
/// Bases are cached by face dimension and degree; the operator has the same
/// form in every chart, so one computation serves all faces of a dimension.
pub fn proper_basis(face: Face, max_degree: u32) -> Result<Vec<EigenPair>> {
    let dim = face.dim();
    if dim == 0 {
        return Err(Error::Argument(format!("no proper basis on the vertex {face}")));
    }
    if max_degree > DEGREE_CAP {
        return Err(Error::Range(format!(
            "degree {max_degree} exceeds the cap {DEGREE_CAP}"
        )));
    }
    if max_degree < dim as u32 + 1 {
        return Err(Error::Range(format!(
            "degree {max_degree} is below {} needed on a face of dimension {dim}",
            dim + 1
        )));
    }
    let key = (dim, max_degree);
    let cached = cache().read().expect("cache lock").get(&key).cloned();
    let basis = match cached {
        Some(b) => b,
        None => {
            let canonical = Face::full(dim + 1)?;
            let computed = Arc::new(compute_proper_basis(canonical, max_degree)?);
            cache()
                .write()
                .expect("cache lock")
                .entry(key)
                .or_insert(computed)
                .clone()
        }
    };
    let chart = Chart::new(face);
    Ok(basis.iter().map(|e| e.rechart(chart)).collect())
}

/// Exact Gaussian elimination; `None` when the matrix is singular.
fn solve_linear(mut a: Vec<Vec<Coeff>>, mut b: Vec<Coeff>) -> Option<Vec<Coeff>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
            let sub = &factor * &b[col];
            b[r] -= sub;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Coefficients of `f` on the proper basis.
///
/// Eigenspaces with different eigenvalues are biorthogonal under the face
/// integral, so the coefficients of each eigenspace come from a small Gram
/// system `sum_m (phi*_m, phi_l) c_m = (f, phi_l)`. When `f` lies in the span
/// of the basis the reconstruction is exact.
pub fn project_final_condition(f: &FaceFunction, basis: &[EigenPair]) -> Result<Vec<Coeff>> {
    let face = f.face();
    if let Some(bad) = basis.iter().find(|e| e.face() != face) {
        return Err(Error::ChartMismatch {
            expected: face,
            found: bad.face(),
        });
    }
    let mut coeffs = Vec::with_capacity(basis.len());
    let mut start = 0;
    while start < basis.len() {
        let end = (start..basis.len())
            .find(|&i| basis[i].kappa != basis[start].kappa)
            .unwrap_or(basis.len());
        let group = &basis[start..end];
        let rhs: Vec<Coeff> = group
            .iter()
            .map(|e| pair_with_poly(f, &e.forward))
            .collect::<Result<_>>()?;
        if rhs.iter().all(Zero::is_zero) {
            coeffs.extend(std::iter::repeat_with(Coeff::zero).take(group.len()));
            start = end;
            continue;
        }
        let gram: Vec<Vec<Coeff>> = group
            .iter()
            .map(|row| {
                group
                    .iter()
                    .map(|col| integrate_poly(&(&col.eigenfunction * &row.forward)))
                    .collect()
            })
            .collect();
        let solved = solve_linear(gram, rhs).ok_or_else(|| Error::Decomposition {
            face,
            degree: group[0].degree(),
            reason: "vanishing pairing between forward and backward eigenfunctions".into(),
        })?;
        coeffs.extend(solved);
        start = end;
    }
    Ok(coeffs)
}

/// One term `coeff * exp(kappa t) * eigenfunction` of a proper solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralMode {
    #[serde(serialize_with = "crate::io::ser_coeff")]
    pub kappa: Coeff,
    #[serde(serialize_with = "crate::io::ser_coeff")]
    pub coeff: Coeff,
    #[serde(serialize_with = "crate::io::ser_poly")]
    pub eigenfunction: MultiPoly,
}

/// `u(p, t) = sum c_m exp(kappa_m t) phi*_m(p)` on one open face.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProperSolution {
    pub face: Face,
    pub modes: Vec<SpectralMode>,
    pub truncation_degree: u32,
}

impl ProperSolution {
    pub fn zero(face: Face, truncation_degree: u32) -> ProperSolution {
        ProperSolution {
            face,
            modes: Vec::new(),
            truncation_degree,
        }
    }

    /// The solution at `t = 0`: the projection of the final condition.
    pub fn initial_value(&self) -> MultiPoly {
        self.modes
            .iter()
            .fold(MultiPoly::zero(Chart::new(self.face)), |acc, m| {
                &acc + &m.eigenfunction.scale(&m.coeff)
            })
    }

    /// Modes with equal eigenvalue merged into one, with coefficient 1.
    pub fn collapsed(&self) -> Vec<(Coeff, MultiPoly)> {
        let mut out: Vec<(Coeff, MultiPoly)> = Vec::new();
        for m in &self.modes {
            let term = m.eigenfunction.scale(&m.coeff);
            match out.iter_mut().find(|(k, _)| *k == m.kappa) {
                Some((_, p)) => *p = &*p + &term,
                None => out.push((m.kappa.clone(), term)),
            }
        }
        out.retain(|(_, p)| !p.is_zero());
        out
    }

    /// Checks `-du/dt = L* u` exactly, mode by mode.
    pub fn satisfies_kbe(&self) -> bool {
        self.modes.iter().all(|m| {
            apply_backward(&m.eigenfunction) == m.eigenfunction.scale(&-m.kappa.clone())
        })
    }
}

/// The proper solution on `f.face()` with final condition `f`.
///
/// A truncation degree too small to hold any proper polynomial yields the
/// zero solution.
pub fn proper_solution(f: &FaceFunction, max_degree: u32) -> Result<ProperSolution> {
    let face = f.face();
    if face.is_vertex() {
        return Err(Error::Argument(format!(
            "proper solutions need a face of dimension at least 1, got {face}"
        )));
    }
    if max_degree < face.dim() as u32 + 1 || f.is_trivially_zero() {
        return Ok(ProperSolution::zero(face, max_degree));
    }
    let basis = proper_basis(face, max_degree)?;
    let coeffs = project_final_condition(f, &basis)?;
    let modes = basis
        .into_iter()
        .zip(coeffs)
        .filter(|(_, c)| !c.is_zero())
        .map(|(e, c)| SpectralMode {
            kappa: e.kappa,
            coeff: c,
            eigenfunction: e.eigenfunction,
        })
        .collect();
    Ok(ProperSolution {
        face,
        modes,
        truncation_degree: max_degree,
    })
}

/// Evaluates a proper solution at a point of its closed face; boundary
/// points give 0.
pub fn evaluate_solution(sol: &ProperSolution, p: &SimplexPoint, t: f64) -> Result<f64> {
    if !p.face().is_subface_of(sol.face) {
        return Err(Error::Argument(format!(
            "point on {} is not in the closure of {}",
            p.face(),
            sol.face
        )));
    }
    if t > 0.0 {
        return Err(Error::Argument(format!("time {t} must not be positive")));
    }
    if p.face() != sol.face {
        return Ok(0.0);
    }
    let dense = p.dense();
    Ok(sol
        .modes
        .iter()
        .map(|m| {
            FloatPoly::from_exact(&m.eigenfunction).eval(dense)
                * m.coeff.to_f64().unwrap_or(f64::NAN)
                * (m.kappa.to_f64().unwrap_or(f64::NAN) * t).exp()
        })
        .sum())
}
