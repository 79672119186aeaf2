//! The layered construction of solutions with final data on every stratum,
//! and the stationary theory.
//!
//! Layer 0 holds the vertex values extended globally. Each higher layer
//! solves, on every face of its dimension, the final condition minus what
//! the lower layers already produce there at `t = 0`, and extends that
//! proper solution globally. The top layer needs no extension.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{global_extension, Mode, Piece, PiecewiseSolution};
use crate::operators::apply_backward;
use crate::polyalg::{Coeff, FaceFunction, MultiPoly, RationalFn, DEGREE_CAP};
use crate::simplex::{Chart, Face, PathSpec, SimplexPoint};
use crate::spectral::proper_solution;

/// Meaning of faces that carry no explicit final data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unspecified {
    /// The final condition is zero there.
    #[default]
    Zero,
    /// The face takes whatever the lower strata induce; no new data enters.
    Induced,
}

/// Polynomial final data per face of the simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct StratifiedFinalCondition {
    alleles: usize,
    components: BTreeMap<Face, MultiPoly>,
    unspecified: Unspecified,
}

impl StratifiedFinalCondition {
    pub fn new(alleles: usize, unspecified: Unspecified) -> Result<Self> {
        if !(2..=crate::simplex::MAX_ALLELES).contains(&alleles) {
            return Err(Error::Range(format!(
                "need between 2 and {} alleles, got {alleles}",
                crate::simplex::MAX_ALLELES
            )));
        }
        Ok(StratifiedFinalCondition {
            alleles,
            components: BTreeMap::new(),
            unspecified,
        })
    }

    /// Sets the component on the polynomial's face, replacing any earlier one.
    pub fn set(&mut self, poly: MultiPoly) -> Result<()> {
        let face = poly.face();
        if !face.is_subface_of(Face::full(self.alleles)?) {
            return Err(Error::Argument(format!(
                "face {face} is not a face of the simplex on {} alleles",
                self.alleles
            )));
        }
        if poly.degree().unwrap_or(0) > DEGREE_CAP {
            return Err(Error::Range(format!(
                "component on {face} exceeds the degree cap {DEGREE_CAP}"
            )));
        }
        self.components.insert(face, poly);
        Ok(())
    }

    pub fn with(mut self, poly: MultiPoly) -> Result<Self> {
        self.set(poly)?;
        Ok(self)
    }

    /// Data only at the vertices, induced everywhere else.
    pub fn vertex_values(values: &[Coeff]) -> Result<Self> {
        let mut f = StratifiedFinalCondition::new(values.len(), Unspecified::Induced)?;
        for (l, v) in values.iter().enumerate() {
            f.set(MultiPoly::constant(Chart::new(Face::vertex(l)?), v.clone()))?;
        }
        Ok(f)
    }

    pub fn alleles(&self) -> usize {
        self.alleles
    }

    pub fn unspecified(&self) -> Unspecified {
        self.unspecified
    }

    pub fn component(&self, face: Face) -> Option<&MultiPoly> {
        self.components.get(&face)
    }

    pub fn components(&self) -> impl Iterator<Item = (Face, &MultiPoly)> {
        self.components.iter().map(|(f, p)| (*f, p))
    }

    pub fn max_degree(&self) -> u32 {
        self.components
            .values()
            .filter_map(MultiPoly::degree)
            .max()
            .unwrap_or(0)
    }
}

/// The layered solution and its sum.
#[derive(Clone, Debug)]
pub struct GlobalSolution {
    alleles: usize,
    degree: u32,
    layers: Vec<PiecewiseSolution>,
    total: PiecewiseSolution,
}

impl GlobalSolution {
    pub fn from_layers(alleles: usize, degree: u32, layers: Vec<PiecewiseSolution>) -> Result<Self> {
        let mut total = PiecewiseSolution::new();
        for l in &layers {
            total.merge(l)?;
        }
        Ok(GlobalSolution {
            alleles,
            degree,
            layers,
            total,
        })
    }

    pub fn alleles(&self) -> usize {
        self.alleles
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn layers(&self) -> &[PiecewiseSolution] {
        &self.layers
    }

    pub fn total(&self) -> &PiecewiseSolution {
        &self.total
    }

    pub fn is_stationary(&self) -> bool {
        self.total.is_stationary()
    }

    pub fn eval(&self, p: &SimplexPoint, t: f64) -> f64 {
        self.total.eval(p, t)
    }
}

/// `f_d` minus the `t = 0` values of the lower layers, on every face of
/// dimension `d`. Faces left unspecified under [`Unspecified::Induced`] get
/// no new data.
pub fn modified_final_condition(
    d: usize,
    f: &StratifiedFinalCondition,
    lower: &[PiecewiseSolution],
) -> Result<BTreeMap<Face, FaceFunction>> {
    let top = Face::full(f.alleles)?;
    let mut out = BTreeMap::new();
    for face in top.boundary_faces(d)? {
        out.insert(face, modified_on_face(face, f, lower)?);
    }
    Ok(out)
}

fn modified_on_face(face: Face, f: &StratifiedFinalCondition, lower: &[PiecewiseSolution]) -> Result<FaceFunction> {
    let given = match (f.component(face), f.unspecified) {
        (Some(p), _) => p.clone(),
        (None, Unspecified::Zero) => MultiPoly::zero(Chart::new(face)),
        (None, Unspecified::Induced) => return Ok(FaceFunction::zero(face)),
    };
    let mut out = FaceFunction::from_poly(given);
    for layer in lower {
        if let Some(piece) = layer.piece(face) {
            let snap = piece.snapshot().neg();
            out.add_poly(snap.poly())?;
            for t in snap.terms() {
                out.push(t.clone())?;
            }
        }
    }
    Ok(out)
}

/// Solves the backward equation with final data on every stratum, using
/// proper bases of degree at most `max_degree` on each face.
pub fn solve_extended_kbe(f: &StratifiedFinalCondition, max_degree: u32) -> Result<GlobalSolution> {
    if max_degree > DEGREE_CAP {
        return Err(Error::Range(format!(
            "degree {max_degree} exceeds the cap {DEGREE_CAP}"
        )));
    }
    if let Some((face, p)) = f
        .components()
        .find(|(_, p)| p.degree().unwrap_or(0) > max_degree)
    {
        return Err(Error::Range(format!(
            "component on {face} has degree {} above the truncation {max_degree}",
            p.degree().unwrap_or(0)
        )));
    }
    let n = f.alleles - 1;
    let top = Face::full(f.alleles)?;
    let mut layers: Vec<PiecewiseSolution> = Vec::with_capacity(n + 1);
    for d in 0..=n {
        let faces = top.boundary_faces(d)?;
        let parts: Vec<PiecewiseSolution> = faces
            .par_iter()
            .map(|&face| {
                let fmod = modified_on_face(face, f, &layers)?;
                let piece = if d == 0 {
                    let value = fmod.simplify().into_poly().ok().and_then(|p| p.as_constant());
                    let value = value.ok_or_else(|| Error::OutOfModel {
                        face,
                        reason: "vertex data must be constant".into(),
                    })?;
                    Piece::constant(face, value)
                } else {
                    Piece::from_proper(&proper_solution(&fmod, max_degree)?)
                };
                if piece.is_zero() {
                    return Ok(PiecewiseSolution::new());
                }
                if d < n {
                    global_extension(&piece, f.alleles)
                } else {
                    let mut s = PiecewiseSolution::new();
                    s.insert(piece)?;
                    Ok(s)
                }
            })
            .collect::<Result<_>>()?;
        let mut layer = PiecewiseSolution::new();
        for p in &parts {
            layer.merge(p)?;
        }
        layers.push(layer);
    }
    GlobalSolution::from_layers(f.alleles, max_degree, layers)
}

/// The product form for losing the labels of `path` in reverse order and
/// fixing its anchor: `prod_j p^{i_j} / (1 - p^{i_0} - ... - p^{i_{j-1}})`.
pub fn littler(path: &PathSpec) -> Result<RationalFn> {
    if !path.base().is_vertex() {
        return Err(Error::Argument(format!(
            "the product form needs a vertex base, got {}",
            path.base()
        )));
    }
    let top = path.top();
    let chart = Chart::new(top);
    let chain = path.chain(path.added().len());
    let mut numer = MultiPoly::one(chart);
    let mut factors = Vec::new();
    let mut prefix = 0u16;
    for &l in &chain[..chain.len() - 1] {
        numer = &numer * &MultiPoly::coord(chart, l)?;
        factors.push((top.mask() & !prefix, 1));
        prefix |= 1 << l;
    }
    RationalFn::new(numer, factors)
}

/// The stationary solution `sum_i values[i] p^i` on every face.
pub fn stationary_solution(values: &[Coeff]) -> Result<GlobalSolution> {
    let alleles = values.len();
    let top = Face::full(alleles)?;
    let mut layer = PiecewiseSolution::new();
    for face in top.subfaces() {
        let chart = Chart::new(face);
        let mut u = MultiPoly::zero(chart);
        for l in face.labels() {
            u = &u + &MultiPoly::coord(chart, l)?.scale(&values[l]);
        }
        if u.is_zero() {
            continue;
        }
        layer.insert(Piece::new(
            face,
            vec![Mode {
                kappa: Coeff::zero(),
                coeff: num_traits::One::one(),
                expr: RationalFn::from_poly(u),
            }],
        )?)?;
    }
    let mut layers = vec![layer];
    layers.extend((1..alleles).map(|_| PiecewiseSolution::new()));
    GlobalSolution::from_layers(alleles, 1, layers)
}

/// Outcome of [`stem_check`] on one face.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StemEntry {
    pub face: Face,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StemReport {
    pub entries: Vec<StemEntry>,
}

impl StemReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Verifies `L* U = 0` exactly on every face of dimension at least one for a
/// stationary solution.
pub fn stem_check(u: &GlobalSolution) -> Result<StemReport> {
    if !u.is_stationary() {
        return Err(Error::Argument("stem check needs a time-independent solution".into()));
    }
    let top = Face::full(u.alleles)?;
    let simplified = u.total.simplified();
    let entries = top
        .subfaces()
        .into_iter()
        .filter(|f| !f.is_vertex())
        .map(|face| {
            let pass = simplified
                .piece(face)
                .map(|p| p.modes().iter().all(|m| apply_backward(&m.expr).is_zero()))
                .unwrap_or(true);
            StemEntry { face, pass }
        })
        .collect();
    Ok(StemReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{parse_poly, q};

    fn face(l: &[usize]) -> Face {
        Face::new(l).unwrap()
    }

    #[test]
    fn vertex_supported_gives_coordinate() {
        let f = StratifiedFinalCondition::vertex_values(&[q(0), q(1), q(0)]).unwrap();
        let sol = solve_extended_kbe(&f, 5).unwrap();
        let total = sol.total().simplified();
        for fc in Face::full(3).unwrap().subfaces() {
            let piece = total.piece(fc);
            if fc.contains(1) {
                let p = piece.unwrap();
                assert_eq!(p.modes().len(), 1);
                assert!(p.modes()[0].kappa.is_zero());
                assert_eq!(
                    p.modes()[0].expr.as_poly().unwrap(),
                    &MultiPoly::coord(Chart::new(fc), 1).unwrap()
                );
            } else {
                assert!(piece.is_none());
            }
        }
        assert!(sol.total().satisfies_kbe());
    }

    #[test]
    fn zero_data_gives_zero() {
        let f = StratifiedFinalCondition::new(3, Unspecified::Zero).unwrap();
        let sol = solve_extended_kbe(&f, 4).unwrap();
        assert_eq!(sol.total().faces().count(), 0);
    }

    #[test]
    fn edge_data_matching_vertex_extension() {
        let e = face(&[0, 1]);
        let f = StratifiedFinalCondition::new(2, Unspecified::Zero)
            .unwrap()
            .with(MultiPoly::constant(Chart::new(face(&[1])), q(1)))
            .unwrap()
            .with(parse_poly("p1", Chart::new(e)).unwrap())
            .unwrap();
        let fmod = {
            let sol = solve_extended_kbe(&f, 4).unwrap();
            modified_final_condition(1, &f, &sol.layers()[..1]).unwrap()
        };
        assert!(fmod[&e].simplify().is_zero());
        let sol = solve_extended_kbe(&f, 4).unwrap();
        assert!(sol.is_stationary());
        let total = sol.total().simplified();
        assert_eq!(total.piece(e).unwrap().modes()[0].expr.as_poly().unwrap(), &MultiPoly::var(Chart::new(e), 0));
    }

    #[test]
    fn modified_condition_subtracts_vertex_extension() {
        let f = StratifiedFinalCondition::new(3, Unspecified::Zero)
            .unwrap()
            .with(MultiPoly::constant(Chart::new(face(&[0])), q(1)))
            .unwrap();
        let sol = solve_extended_kbe(&f, 4).unwrap();
        let fmod = modified_final_condition(1, &f, &sol.layers()[..1]).unwrap();
        for (fc, g) in &fmod {
            let s = g.simplify();
            if fc.contains(0) {
                let expect = -&MultiPoly::coord(Chart::new(*fc), 0).unwrap();
                assert_eq!(s.as_poly().unwrap(), &expect);
            } else {
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn littler_examples() {
        let path = PathSpec::new(face(&[0]), 0, vec![1, 2]).unwrap();
        let c = Chart::new(face(&[0, 1, 2]));
        let expect = RationalFn::new(parse_poly("p0 p1", c).unwrap(), [(0b110, 1)]).unwrap();
        assert_eq!(littler(&path).unwrap(), expect);
        let path = PathSpec::new(face(&[0]), 0, vec![1]).unwrap();
        assert_eq!(
            littler(&path).unwrap().as_poly().unwrap(),
            &MultiPoly::coord(Chart::new(face(&[0, 1])), 0).unwrap()
        );
    }

    #[test]
    fn stationary_examples() {
        let u = stationary_solution(&[q(1), q(0), q(0)]).unwrap();
        assert!(stem_check(&u).unwrap().all_pass());
        let ones = stationary_solution(&[q(1), q(1), q(1)]).unwrap();
        for p in ones.total().simplified().pieces() {
            assert_eq!(p.modes()[0].expr.as_poly().unwrap().as_constant(), Some(q(1)));
        }
    }

    #[test]
    fn stem_check_flags_defect() {
        let base = stationary_solution(&[q(2), q(-1), q(3), q(1)]).unwrap();
        let mut layers = base.layers().to_vec();
        let bad = face(&[1, 2]);
        let c = Chart::new(bad);
        let defect = parse_poly("p2^2", c).unwrap();
        layers[0]
            .insert(Piece::new(
                bad,
                vec![Mode {
                    kappa: Coeff::zero(),
                    coeff: q(1),
                    expr: RationalFn::from_poly(defect),
                }],
            )
            .unwrap())
            .unwrap();
        let u = GlobalSolution::from_layers(4, 2, layers).unwrap();
        let report = stem_check(&u).unwrap();
        for e in &report.entries {
            assert_eq!(e.pass, e.face != bad, "face {}", e.face);
        }
    }
}
