//! Extensions of face solutions to larger faces.
//!
//! A single step extends a function `psi` on `I \ {s}` to `I` as
//! `psi(pi^{r,s} p) * p^r / (p^r + p^s)`, which keeps the eigenvalue and
//! attains `psi` on the source face while vanishing on `I \ {r}`. Iterating
//! along a path `i_k, i_{k+1}, ..., i_n` gives the closed form
//! `u(pi p) * prod_j p^{i_j} / (p^{i_j} + ... + p^{i_d})`, and averaging
//! over all paths and anchors gives a globally regular extension.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use itertools::Itertools;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operators::apply_backward;
use crate::polyalg::{
    Coeff, FaceFunction, FloatRational, LabelMap, MultiPoly, RationalFn,
};
use crate::simplex::{Chart, Face, PathSpec, SimplexPoint, MAX_ALLELES};
use crate::spectral::ProperSolution;

/// Extension from `ambient \ {s}` to `ambient`, anchored at `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtensionStep {
    ambient: Face,
    r: usize,
    s: usize,
}

impl ExtensionStep {
    pub fn new(ambient: Face, r: usize, s: usize) -> Result<ExtensionStep> {
        if r == s || !ambient.contains(r) || !ambient.contains(s) {
            return Err(Error::Argument(format!(
                "step ({r},{s}) is not admissible on face {ambient}"
            )));
        }
        Ok(ExtensionStep { ambient, r, s })
    }

    pub fn ambient(&self) -> Face {
        self.ambient
    }

    pub fn source(&self) -> Face {
        self.ambient.without(self.s).expect("s is in the ambient face")
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }
}

/// Label mask of a list of labels.
fn mask_of(labels: &[usize]) -> u16 {
    labels.iter().fold(0u16, |m, &l| m | (1 << l))
}

/// Extends an expression one step without checking the eigen-identity.
pub fn extend_expr(expr: &RationalFn, step: &ExtensionStep) -> Result<RationalFn> {
    if expr.face() != step.source() {
        return Err(Error::ChartMismatch {
            expected: step.source(),
            found: expr.face(),
        });
    }
    let map = LabelMap::collapse(step.ambient, step.r, &[step.s])?;
    let pulled = expr.substitute(&map)?;
    let chart = Chart::new(step.ambient);
    let numer = pulled.numer() * &MultiPoly::coord(chart, step.r)?;
    let factors = pulled
        .factors()
        .chain(std::iter::once((mask_of(&[step.r, step.s]), 1)));
    RationalFn::new(numer, factors.collect::<Vec<_>>())
}

/// Extends a backward eigenfunction with eigenvalue `kappa` one step; the
/// eigen-identity of the input is checked exactly first.
pub fn extend_eigenfunction(psi: &MultiPoly, kappa: &Coeff, step: &ExtensionStep) -> Result<RationalFn> {
    if apply_backward(psi) != psi.scale(&-kappa.clone()) {
        return Err(Error::Argument(format!(
            "input is not an eigenfunction with eigenvalue {kappa}"
        )));
    }
    extend_expr(&RationalFn::from_poly(psi.clone()), step)
}

/// One term `coeff * exp(kappa t) * expr`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub kappa: Coeff,
    pub coeff: Coeff,
    pub expr: RationalFn,
}

/// A time-dependent solution on one open face, as a list of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    face: Face,
    modes: Vec<Mode>,
}

impl Piece {
    pub fn new(face: Face, modes: Vec<Mode>) -> Result<Piece> {
        if let Some(m) = modes.iter().find(|m| m.expr.face() != face) {
            return Err(Error::ChartMismatch {
                expected: face,
                found: m.expr.face(),
            });
        }
        Ok(Piece { face, modes })
    }

    pub fn zero(face: Face) -> Piece {
        Piece {
            face,
            modes: Vec::new(),
        }
    }

    /// A time-independent constant on a face.
    pub fn constant(face: Face, value: Coeff) -> Piece {
        let mut p = Piece::zero(face);
        if !value.is_zero() {
            p.modes.push(Mode {
                kappa: Coeff::zero(),
                coeff: Coeff::one(),
                expr: RationalFn::from_poly(MultiPoly::constant(Chart::new(face), value)),
            });
        }
        p
    }

    /// Modes of a proper solution, merged per eigenvalue.
    pub fn from_proper(sol: &ProperSolution) -> Piece {
        Piece {
            face: sol.face,
            modes: sol
                .collapsed()
                .into_iter()
                .map(|(kappa, p)| Mode {
                    kappa,
                    coeff: Coeff::one(),
                    expr: RationalFn::from_poly(p),
                })
                .collect(),
        }
    }

    pub fn face(&self) -> Face {
        self.face
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.coeff.is_zero() || m.expr.is_zero())
    }

    pub fn is_stationary(&self) -> bool {
        self.modes.iter().all(|m| m.kappa.is_zero())
    }

    pub fn scaled(&self, c: &Coeff) -> Piece {
        Piece {
            face: self.face,
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    kappa: m.kappa.clone(),
                    coeff: &m.coeff * c,
                    expr: m.expr.clone(),
                })
                .collect(),
        }
    }

    /// Appends the modes of another piece on the same face.
    pub fn absorb(&mut self, other: Piece) -> Result<()> {
        if other.face != self.face {
            return Err(Error::ChartMismatch {
                expected: self.face,
                found: other.face,
            });
        }
        self.modes.extend(other.modes);
        Ok(())
    }

    /// Sums modes of equal eigenvalue exactly, leaving one canonical
    /// expression per eigenvalue.
    pub fn simplified(&self) -> Piece {
        let mut groups: Vec<(Coeff, RationalFn)> = Vec::new();
        for m in &self.modes {
            let term = m.expr.scale(&m.coeff);
            match groups.iter_mut().find(|(k, _)| *k == m.kappa) {
                Some((_, acc)) => *acc = acc.checked_add(&term).expect("same face"),
                None => groups.push((m.kappa.clone(), term)),
            }
        }
        groups.sort_by(|a, b| a.0.cmp(&b.0));
        Piece {
            face: self.face,
            modes: groups
                .into_iter()
                .filter(|(_, e)| !e.is_zero())
                .map(|(kappa, expr)| Mode {
                    kappa,
                    coeff: Coeff::one(),
                    expr,
                })
                .collect(),
        }
    }

    /// The piece at `t = 0`, kept as a list of terms.
    pub fn snapshot(&self) -> FaceFunction {
        let mut f = FaceFunction::zero(self.face);
        for m in &self.modes {
            f.push(m.expr.scale(&m.coeff)).expect("same face");
        }
        f
    }

    /// Checks `L* expr = -kappa expr` exactly for every mode.
    pub fn satisfies_kbe(&self) -> bool {
        self.modes
            .iter()
            .all(|m| apply_backward(&m.expr) == m.expr.scale(&-m.kappa.clone()))
    }

    pub fn eval(&self, dense: &[f64], t: f64) -> Result<f64> {
        let mut v = 0.0;
        for m in &self.modes {
            let k = m.kappa.to_f64().unwrap_or(f64::NAN);
            v += m.coeff.to_f64().unwrap_or(f64::NAN) * (k * t).exp() * m.expr.eval(dense)?;
        }
        Ok(v)
    }

    fn map_modes(&self, face: Face, f: impl Fn(&RationalFn) -> Result<RationalFn>) -> Result<Piece> {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                Ok(Mode {
                    kappa: m.kappa.clone(),
                    coeff: m.coeff.clone(),
                    expr: f(&m.expr)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Piece { face, modes })
    }
}

/// Extends every mode of a piece one step.
pub fn extend_solution_once(u: &Piece, step: &ExtensionStep) -> Result<Piece> {
    if u.face != step.source() {
        return Err(Error::ChartMismatch {
            expected: step.source(),
            found: u.face,
        });
    }
    u.map_modes(step.ambient, |e| extend_expr(e, step))
}

fn check_path(u: &Piece, path: &PathSpec) -> Result<()> {
    if u.face != path.base() {
        return Err(Error::Argument(format!(
            "solution lives on {} but the path starts at {}",
            u.face,
            path.base()
        )));
    }
    Ok(())
}

/// Closed form of the extension of `u` along `path` after `level` steps.
pub fn path_piece(u: &Piece, path: &PathSpec, level: usize) -> Result<Piece> {
    check_path(u, path)?;
    if level > path.added().len() {
        return Err(Error::Range(format!("path has no level {level}")));
    }
    if level == 0 {
        return Ok(u.clone());
    }
    let face = path.face_at(level);
    let chart = Chart::new(face);
    let chain = path.chain(level);
    let map = LabelMap::collapse(face, path.anchor(), &path.added()[..level])?;
    let mut weight = MultiPoly::one(chart);
    let mut weight_factors = Vec::with_capacity(level);
    for j in 0..level {
        weight = &weight * &MultiPoly::coord(chart, chain[j])?;
        weight_factors.push((mask_of(&chain[j..]), 1u32));
    }
    u.map_modes(face, |e| {
        let pulled = e.substitute(&map)?;
        let factors: Vec<(u16, u32)> = pulled.factors().chain(weight_factors.iter().copied()).collect();
        RationalFn::new(pulled.numer() * &weight, factors)
    })
}

/// The same piece obtained by folding single steps along the path.
pub fn path_piece_by_steps(u: &Piece, path: &PathSpec, level: usize) -> Result<Piece> {
    check_path(u, path)?;
    let chain = path.chain(level);
    let mut cur = u.clone();
    for j in 1..=level {
        let step = ExtensionStep::new(path.face_at(j), chain[j - 1], chain[j])?;
        cur = extend_solution_once(&cur, &step)?;
    }
    Ok(cur)
}

/// Pieces of the extension of `u` on every face of the path's chain.
pub fn pathwise_extension(u: &Piece, path: &PathSpec) -> Result<PiecewiseSolution> {
    let mut out = PiecewiseSolution::new();
    for level in 0..=path.added().len() {
        out.insert(path_piece(u, path, level)?)?;
    }
    Ok(out)
}

/// Average over anchors in the base face and over all orders of adding the
/// remaining labels, on every face of the simplex on `alleles` alleles that
/// contains the base. Faces not containing the base carry nothing.
pub fn global_extension(u: &Piece, alleles: usize) -> Result<PiecewiseSolution> {
    let base = u.face;
    let top = Face::full(alleles)?;
    if !base.is_subface_of(top) {
        return Err(Error::Argument(format!(
            "base face {base} is not a face of the simplex on {alleles} alleles"
        )));
    }
    let weight = Coeff::new(1.into(), (base.len() as i64).into());
    let targets: Vec<Face> = top
        .subfaces()
        .into_iter()
        .filter(|f| base.is_subface_of(*f) && *f != base)
        .collect();
    let pieces: Vec<Piece> = targets
        .par_iter()
        .map(|&face| {
            let extra: Vec<usize> = face.labels().filter(|l| !base.contains(*l)).collect();
            let mut acc = Piece::zero(face);
            for anchor in base.labels() {
                for order in extra.iter().copied().permutations(extra.len()) {
                    let path = PathSpec::new(base, anchor, order)?;
                    let piece = path_piece(u, &path, extra.len())?;
                    acc.absorb(piece.scaled(&weight))?;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut out = PiecewiseSolution::new();
    out.insert(u.clone())?;
    for p in pieces {
        out.insert(p)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
struct FloatPiece {
    modes: Vec<(f64, f64, FloatRational)>,
}

/// A solution defined piece by piece on open faces; faces without a piece
/// carry the zero function.
#[derive(Clone, Debug, Default)]
pub struct PiecewiseSolution {
    pieces: BTreeMap<Face, Piece>,
    float: OnceLock<BTreeMap<Face, FloatPiece>>,
}

impl PiecewiseSolution {
    pub fn new() -> PiecewiseSolution {
        PiecewiseSolution::default()
    }

    /// Adds a piece, appending its modes to any piece already on that face.
    pub fn insert(&mut self, piece: Piece) -> Result<()> {
        self.float = OnceLock::new();
        match self.pieces.get_mut(&piece.face) {
            Some(existing) => existing.absorb(piece),
            None => {
                self.pieces.insert(piece.face, piece);
                Ok(())
            }
        }
    }

    /// Adds all pieces of another solution.
    pub fn merge(&mut self, other: &PiecewiseSolution) -> Result<()> {
        for p in other.pieces.values() {
            self.insert(p.clone())?;
        }
        Ok(())
    }

    pub fn piece(&self, face: Face) -> Option<&Piece> {
        self.pieces.get(&face)
    }

    pub fn pieces(&self) -> impl Iterator<Item = &Piece> {
        self.pieces.values()
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        self.pieces.keys().copied()
    }

    /// Each piece with equal-eigenvalue modes summed exactly.
    pub fn simplified(&self) -> PiecewiseSolution {
        let mut out = PiecewiseSolution::new();
        for p in self.pieces.values() {
            let s = p.simplified();
            if !s.modes.is_empty() {
                out.pieces.insert(s.face, s);
            }
        }
        out
    }

    /// The `t = 0` values per face.
    pub fn snapshot(&self) -> BTreeMap<Face, FaceFunction> {
        self.pieces
            .iter()
            .map(|(f, p)| (*f, p.snapshot()))
            .collect()
    }

    pub fn satisfies_kbe(&self) -> bool {
        self.pieces.values().all(Piece::satisfies_kbe)
    }

    pub fn is_stationary(&self) -> bool {
        self.pieces.values().all(Piece::is_stationary)
    }

    fn float_pieces(&self) -> &BTreeMap<Face, FloatPiece> {
        self.float.get_or_init(|| {
            self.pieces
                .iter()
                .map(|(f, p)| {
                    let modes = p
                        .modes
                        .iter()
                        .map(|m| {
                            (
                                m.kappa.to_f64().unwrap_or(f64::NAN),
                                m.coeff.to_f64().unwrap_or(f64::NAN),
                                FloatRational::from_exact(&m.expr),
                            )
                        })
                        .collect();
                    (*f, FloatPiece { modes })
                })
                .collect()
        })
    }

    /// Floating value at a label-indexed point on the open face `face`.
    pub fn eval_dense(&self, face: Face, dense: &[f64; MAX_ALLELES], t: f64) -> f64 {
        match self.float_pieces().get(&face) {
            None => 0.0,
            Some(p) => p
                .modes
                .iter()
                .map(|(k, c, r)| c * (k * t).exp() * r.eval(dense))
                .sum(),
        }
    }

    pub fn eval(&self, p: &SimplexPoint, t: f64) -> f64 {
        self.eval_dense(p.face(), p.dense(), t)
    }
}
