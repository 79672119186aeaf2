//! Faces of the closed probability simplex, points on them, charts and the
//! collapsing projections used by the extension scheme.
//!
//! Allele labels are small integers `0..MAX_ALLELES`. A face is stored as a
//! bit mask over labels, so faces are `Copy` and cheap to hash and compare.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg, Error, Result};

/// Largest supported number of alleles (labels `0..=12`).
pub const MAX_ALLELES: usize = 13;

/// Coordinates with absolute value at or below this are treated as zero when
/// classifying which face a point lies on.
pub const FACE_TOL: f64 = 1e-12;

const FULL_MASK: u16 = (1 << MAX_ALLELES) - 1;

/// A face of the simplex, identified by its set of allele labels.
///
/// Faces order by dimension first and then lexicographically by label list,
/// which gives the ascending order used in every enumeration.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    mask: u16,
}

impl Face {
    /// Builds a face from a strictly increasing list of labels.
    pub fn new(labels: &[usize]) -> Result<Face> {
        if labels.is_empty() {
            return arg("a face needs at least one label");
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return arg(format!("face labels must be strictly increasing: {labels:?}"));
        }
        Face::from_labels(labels.iter().copied())
    }

    /// Builds a face from labels in any order. Duplicates are rejected.
    pub fn from_labels(labels: impl IntoIterator<Item = usize>) -> Result<Face> {
        let mut mask = 0u16;
        for l in labels {
            if l >= MAX_ALLELES {
                return Err(Error::Range(format!(
                    "allele label {l} exceeds the maximum {}",
                    MAX_ALLELES - 1
                )));
            }
            if mask & (1 << l) != 0 {
                return arg(format!("duplicate allele label {l}"));
            }
            mask |= 1 << l;
        }
        Face::from_mask(mask)
    }

    pub fn from_mask(mask: u16) -> Result<Face> {
        if mask == 0 {
            return arg("a face needs at least one label");
        }
        if mask & !FULL_MASK != 0 {
            return Err(Error::Range(format!("label mask {mask:#x} has bits above label 12")));
        }
        Ok(Face { mask })
    }

    /// The full simplex on `alleles` alleles, i.e. labels `0..alleles`.
    pub fn full(alleles: usize) -> Result<Face> {
        if alleles == 0 || alleles > MAX_ALLELES {
            return Err(Error::Range(format!(
                "allele count must lie in 1..={MAX_ALLELES}, got {alleles}"
            )));
        }
        Ok(Face {
            mask: ((1u32 << alleles) - 1) as u16,
        })
    }

    pub fn vertex(label: usize) -> Result<Face> {
        Face::from_labels([label])
    }

    #[inline]
    pub fn mask(self) -> u16 {
        self.mask
    }

    /// Number of labels, `dim + 1`.
    #[inline]
    pub fn len(self) -> usize {
        self.mask.count_ones() as usize
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.len() - 1
    }

    #[inline]
    pub fn is_vertex(self) -> bool {
        self.len() == 1
    }

    #[inline]
    pub fn contains(self, label: usize) -> bool {
        label < MAX_ALLELES && self.mask & (1 << label) != 0
    }

    /// True when every label of `self` is a label of `other`.
    #[inline]
    pub fn is_subface_of(self, other: Face) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn labels(self) -> Labels {
        Labels { rest: self.mask }
    }

    pub fn label_vec(self) -> Vec<usize> {
        self.labels().collect()
    }

    #[inline]
    pub fn min_label(self) -> usize {
        self.mask.trailing_zeros() as usize
    }

    #[inline]
    pub fn max_label(self) -> usize {
        15 - self.mask.leading_zeros() as usize
    }

    /// Position of `label` within the sorted label list.
    pub fn position(self, label: usize) -> Option<usize> {
        self.contains(label)
            .then(|| (self.mask & ((1u16 << label) - 1)).count_ones() as usize)
    }

    pub fn without(self, label: usize) -> Result<Face> {
        if !self.contains(label) {
            return arg(format!("label {label} is not in face {self}"));
        }
        Face::from_mask(self.mask & !(1 << label))
    }

    pub fn with(self, label: usize) -> Result<Face> {
        if label >= MAX_ALLELES {
            return Err(Error::Range(format!("allele label {label} too large")));
        }
        Ok(Face {
            mask: self.mask | (1 << label),
        })
    }

    /// All subfaces with `k + 1` labels, in ascending order.
    pub fn boundary_faces(self, k: usize) -> Result<Vec<Face>> {
        if k > self.dim() {
            return Err(Error::Range(format!(
                "boundary dimension {k} exceeds face dimension {}",
                self.dim()
            )));
        }
        let mut out: Vec<Face> = self
            .submasks()
            .filter(|m| m.count_ones() as usize == k + 1)
            .map(|mask| Face { mask })
            .collect();
        out.sort();
        Ok(out)
    }

    /// Every nonempty subface (including `self`), in ascending order.
    pub fn subfaces(self) -> Vec<Face> {
        let mut out: Vec<Face> = self.submasks().map(|mask| Face { mask }).collect();
        out.sort();
        out
    }

    /// Codimension-one subfaces. Empty for a vertex.
    pub fn facets(self) -> Vec<Face> {
        if self.is_vertex() {
            return Vec::new();
        }
        self.labels()
            .map(|l| Face {
                mask: self.mask & !(1 << l),
            })
            .rev()
            .collect()
    }

    fn submasks(self) -> impl Iterator<Item = u16> {
        let full = self.mask;
        let mut sub = full;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let cur = sub;
            if sub == 0 {
                done = true;
                return None;
            }
            sub = (sub - 1) & full;
            Some(cur)
        })
    }
}

impl Ord for Face {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.labels().cmp(other.labels()))
    }
}

impl PartialOrd for Face {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.labels().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Face{self}")
    }
}

impl Serialize for Face {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.labels())
    }
}

impl<'de> Deserialize<'de> for Face {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(d)?;
        Face::new(&labels).map_err(serde::de::Error::custom)
    }
}

/// Iterator over the labels of a face in increasing order.
#[derive(Clone)]
pub struct Labels {
    rest: u16,
}

impl Iterator for Labels {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.rest == 0 {
            return None;
        }
        let l = self.rest.trailing_zeros() as usize;
        self.rest &= self.rest - 1;
        Some(l)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.rest.count_ones() as usize;
        (n, Some(n))
    }
}

impl DoubleEndedIterator for Labels {
    fn next_back(&mut self) -> Option<usize> {
        if self.rest == 0 {
            return None;
        }
        let l = 15 - self.rest.leading_zeros() as usize;
        self.rest &= !(1 << l);
        Some(l)
    }
}

impl ExactSizeIterator for Labels {}

/// Enumerates every face of the simplex on `alleles` alleles, ascending.
pub fn all_faces(alleles: usize) -> Result<Vec<Face>> {
    Ok(Face::full(alleles)?.subfaces())
}

/// Coordinate chart on a face: the smallest label is the dependent one,
/// `p^dep = 1 - sum of the others`; the remaining labels are the free
/// variables, numbered in increasing label order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Chart {
    face: Face,
}

impl Chart {
    pub fn new(face: Face) -> Chart {
        Chart { face }
    }

    #[inline]
    pub fn face(self) -> Face {
        self.face
    }

    #[inline]
    pub fn dependent(self) -> usize {
        self.face.min_label()
    }

    #[inline]
    pub fn nvars(self) -> usize {
        self.face.dim()
    }

    /// Labels of the free variables, in variable order.
    pub fn free_labels(self) -> impl Iterator<Item = usize> {
        self.face.labels().skip(1)
    }

    /// Free-variable index of `label`, or `None` for the dependent label and
    /// labels outside the face.
    pub fn var_of(self, label: usize) -> Option<usize> {
        match self.face.position(label) {
            Some(0) | None => None,
            Some(i) => Some(i - 1),
        }
    }

    pub fn label_of(self, var: usize) -> usize {
        self.free_labels()
            .nth(var)
            .expect("variable index within chart")
    }
}

/// A point of the closed simplex lying on `face`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "PointRepr", into = "PointRepr")]
pub struct SimplexPoint {
    face: Face,
    /// Coordinates indexed by allele label; zero outside the face.
    dense: [f64; MAX_ALLELES],
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    face: Face,
    coords: Vec<f64>,
}

impl TryFrom<PointRepr> for SimplexPoint {
    type Error = Error;
    fn try_from(r: PointRepr) -> Result<Self> {
        SimplexPoint::new(r.face, &r.coords)
    }
}

impl From<SimplexPoint> for PointRepr {
    fn from(p: SimplexPoint) -> Self {
        PointRepr {
            face: p.face,
            coords: p.coords(),
        }
    }
}

impl SimplexPoint {
    /// Builds a point from coordinates listed in face-label order.
    pub fn new(face: Face, coords: &[f64]) -> Result<SimplexPoint> {
        if coords.len() != face.len() {
            return arg(format!(
                "face {face} needs {} coordinates, got {}",
                face.len(),
                coords.len()
            ));
        }
        let mut dense = [0.0; MAX_ALLELES];
        for (l, &c) in face.labels().zip(coords) {
            if !c.is_finite() || c < 0.0 {
                return arg(format!("coordinate {c} for label {l} is not a frequency"));
            }
            dense[l] = c;
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return arg(format!("coordinates sum to {sum}, not 1"));
        }
        Ok(SimplexPoint { face, dense })
    }

    /// Builds a point from a label-indexed frequency vector, placing it on the
    /// face of labels whose frequency exceeds [`FACE_TOL`].
    pub fn from_dense(freqs: &[f64]) -> Result<SimplexPoint> {
        if freqs.len() > MAX_ALLELES {
            return Err(Error::Range(format!("{} alleles exceed the maximum", freqs.len())));
        }
        let face = Face::from_labels(
            freqs
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > FACE_TOL)
                .map(|(l, _)| l),
        )?;
        let coords: Vec<f64> = face.labels().map(|l| freqs[l]).collect();
        SimplexPoint::new(face, &coords)
    }

    /// Unchecked constructor for callers that already hold a valid dense vector.
    pub(crate) fn from_parts(face: Face, dense: [f64; MAX_ALLELES]) -> SimplexPoint {
        SimplexPoint { face, dense }
    }

    pub fn vertex(label: usize) -> Result<SimplexPoint> {
        SimplexPoint::new(Face::vertex(label)?, &[1.0])
    }

    #[inline]
    pub fn face(&self) -> Face {
        self.face
    }

    /// Frequency of `label`, zero for labels off the face.
    #[inline]
    pub fn coord(&self, label: usize) -> f64 {
        self.dense.get(label).copied().unwrap_or(0.0)
    }

    /// Coordinates in face-label order.
    pub fn coords(&self) -> Vec<f64> {
        self.face.labels().map(|l| self.dense[l]).collect()
    }

    /// Label-indexed coordinates.
    #[inline]
    pub fn dense(&self) -> &[f64; MAX_ALLELES] {
        &self.dense
    }

    pub fn is_interior(&self) -> bool {
        self.face.labels().all(|l| self.dense[l] > 0.0)
    }
}

/// The collapse `pi^{r,s}`: moves the mass of `s` onto `r`.
pub fn project_rs(p: &SimplexPoint, r: usize, s: usize) -> Result<SimplexPoint> {
    let face = p.face();
    if r == s || !face.contains(r) || !face.contains(s) {
        return arg(format!("projection ({r},{s}) is not admissible on face {face}"));
    }
    let mut dense = p.dense;
    dense[r] += dense[s];
    dense[s] = 0.0;
    Ok(SimplexPoint {
        face: face.without(s)?,
        dense,
    })
}

/// An extension path: starts on `base`, anchored at `anchor`, and adds the
/// labels in `added` one at a time.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct PathSpec {
    base: Face,
    anchor: usize,
    added: Vec<usize>,
}

impl PathSpec {
    pub fn new(base: Face, anchor: usize, added: Vec<usize>) -> Result<PathSpec> {
        if !base.contains(anchor) {
            return arg(format!("anchor {anchor} is not in base face {base}"));
        }
        let mut seen = base;
        for &l in &added {
            if seen.contains(l) {
                return arg(format!("path label {l} repeats or lies in the base face"));
            }
            seen = seen.with(l)?;
        }
        Ok(PathSpec {
            base,
            anchor,
            added,
        })
    }

    pub fn base(&self) -> Face {
        self.base
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn added(&self) -> &[usize] {
        &self.added
    }

    /// The face after adding the first `level` labels.
    pub fn face_at(&self, level: usize) -> Face {
        let mask = self.added[..level]
            .iter()
            .fold(self.base.mask(), |m, &l| m | (1 << l));
        Face { mask }
    }

    pub fn top(&self) -> Face {
        self.face_at(self.added.len())
    }

    /// Level at which the chain reaches `face`, if it does.
    pub fn level_of(&self, face: Face) -> Option<usize> {
        (0..=self.added.len()).find(|&lv| self.face_at(lv) == face)
    }

    /// The chain labels `anchor, added[0], ..., added[level-1]`.
    pub fn chain(&self, level: usize) -> Vec<usize> {
        std::iter::once(self.anchor)
            .chain(self.added[..level].iter().copied())
            .collect()
    }
}

/// The chain collapse: all mass of the path labels present on `p.face()`
/// accumulates onto the anchor, landing on the base face.
pub fn project_chain(p: &SimplexPoint, path: &PathSpec) -> Result<SimplexPoint> {
    let level = path.level_of(p.face()).ok_or_else(|| {
        Error::Argument(format!(
            "point face {} is not on the chain of path from {}",
            p.face(),
            path.base()
        ))
    })?;
    let chain = path.chain(level);
    let mut dense = p.dense;
    // Right-to-left accumulation reproduces the fold of single collapses
    // bit for bit.
    let mut acc = 0.0;
    for &l in chain[1..].iter().rev() {
        acc = dense[l] + acc;
        dense[l] = 0.0;
    }
    if level > 0 {
        dense[path.anchor()] += acc;
    }
    Ok(SimplexPoint {
        face: path.base(),
        dense,
    })
}

/// Uniform (flat Dirichlet) sample from the open face.
pub fn sample_interior<R: Rng + ?Sized>(face: Face, rng: &mut R) -> SimplexPoint {
    let mut dense = [0.0; MAX_ALLELES];
    if face.is_vertex() {
        dense[face.min_label()] = 1.0;
        return SimplexPoint { face, dense };
    }
    loop {
        let mut total = 0.0;
        for l in face.labels() {
            let e: f64 = Exp1.sample(rng);
            dense[l] = e;
            total += e;
        }
        if face.labels().all(|l| dense[l] > 0.0) {
            for l in face.labels() {
                dense[l] /= total;
            }
            return SimplexPoint { face, dense };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(l: &[usize]) -> Face {
        Face::new(l).unwrap()
    }

    #[test]
    fn boundary_faces_enumerates_subsets() {
        let tri = f(&[0, 1, 2]);
        assert_eq!(
            tri.boundary_faces(1).unwrap(),
            vec![f(&[0, 1]), f(&[0, 2]), f(&[1, 2])]
        );
        assert_eq!(tri.boundary_faces(2).unwrap(), vec![tri]);
        let tet = f(&[0, 1, 2, 3]);
        assert_eq!(tet.boundary_faces(0).unwrap().len(), 4);
        assert!(tri.boundary_faces(3).is_err());
    }

    #[test]
    fn boundary_counts_are_binomial() {
        for n in 1..=6usize {
            let face = Face::full(n + 1).unwrap();
            for k in 0..n {
                let expect = (0..=k).fold(1usize, |c, i| c * (n + 1 - i) / (i + 1));
                assert_eq!(face.boundary_faces(k).unwrap().len(), expect);
            }
        }
    }

    #[test]
    fn face_validation() {
        assert!(Face::new(&[]).is_err());
        assert!(Face::new(&[1, 1]).is_err());
        assert!(Face::new(&[2, 1]).is_err());
        assert!(Face::new(&[13]).is_err());
        assert_eq!(f(&[0, 1, 2]).dim(), 2);
        assert!(f(&[3]).is_vertex());
    }

    #[test]
    fn face_order_is_dimension_then_lex() {
        let mut v = vec![f(&[1, 2]), f(&[0, 1, 2]), f(&[2]), f(&[0, 2]), f(&[0])];
        v.sort();
        assert_eq!(v, vec![f(&[0]), f(&[2]), f(&[0, 2]), f(&[1, 2]), f(&[0, 1, 2])]);
    }

    #[test]
    fn face_json_is_sorted_array() {
        let face = f(&[0, 2, 5]);
        let s = serde_json::to_string(&face).unwrap();
        assert_eq!(s, "[0,2,5]");
        assert_eq!(serde_json::from_str::<Face>(&s).unwrap(), face);
        assert!(serde_json::from_str::<Face>("[2,0]").is_err());
    }

    #[test]
    fn point_json_round_trip() {
        let p = SimplexPoint::new(f(&[0, 2]), &[0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"face":[0,2],"coords":[0.25,0.75]}"#);
        assert_eq!(serde_json::from_str::<SimplexPoint>(&s).unwrap(), p);
    }

    #[test]
    fn project_rs_examples() {
        let p = SimplexPoint::new(f(&[0, 1, 2]), &[0.5, 0.2, 0.3]).unwrap();
        let q = project_rs(&p, 1, 2).unwrap();
        assert_eq!(q.face(), f(&[0, 1]));
        assert_eq!(q.coords(), vec![0.5, 0.5]);
        let q = project_rs(&p, 0, 1).unwrap();
        assert_eq!(q.face(), f(&[0, 2]));
        assert_eq!(q.coords(), vec![0.7, 0.3]);
        assert!(project_rs(&p, 1, 1).is_err());
        assert!(project_rs(&p, 1, 4).is_err());
    }

    #[test]
    fn project_chain_examples() {
        let p = SimplexPoint::new(f(&[0, 1, 2]), &[0.5, 0.2, 0.3]).unwrap();
        let path = PathSpec::new(f(&[0]), 0, vec![1, 2]).unwrap();
        let q = project_chain(&p, &path).unwrap();
        assert_eq!(q.face(), f(&[0]));
        assert_eq!(q.coords(), vec![1.0]);
        let path = PathSpec::new(f(&[0, 1]), 0, vec![2]).unwrap();
        let q = project_chain(&p, &path).unwrap();
        assert_eq!(q.face(), f(&[0, 1]));
        assert_eq!(q.coords(), vec![0.8, 0.2]);
        let off = PathSpec::new(f(&[0]), 0, vec![2, 3]).unwrap();
        assert!(project_chain(&p, &off).is_err());
    }

    #[test]
    fn project_chain_equals_fold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let path = PathSpec::new(f(&[1, 3]), 3, vec![0, 4, 2]).unwrap();
            let p = sample_interior(path.top(), &mut rng);
            let mut q = p.clone();
            let chain = path.chain(3);
            for j in (1..chain.len()).rev() {
                q = project_rs(&q, chain[j - 1], chain[j]).unwrap();
            }
            assert_eq!(project_chain(&p, &path).unwrap(), q);
        }
    }

    #[test]
    fn sample_interior_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = sample_interior(f(&[2]), &mut rng);
        assert_eq!(v.coords(), vec![1.0]);
        let n = 100_000;
        let tri = f(&[0, 1, 2]);
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let p = sample_interior(tri, &mut rng);
            assert!(p.is_interior());
            for (s, c) in sums.iter_mut().zip(p.coords()) {
                *s += c;
            }
        }
        // Dirichlet(1,1,1) marginal variance is 1/18.
        let sigma = (1.0f64 / 18.0 / n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64 - 1.0 / 3.0).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn chart_variables() {
        let c = Chart::new(f(&[1, 3, 4]));
        assert_eq!(c.dependent(), 1);
        assert_eq!(c.nvars(), 2);
        assert_eq!(c.var_of(3), Some(0));
        assert_eq!(c.var_of(4), Some(1));
        assert_eq!(c.var_of(1), None);
        assert_eq!(c.label_of(1), 4);
    }
}
