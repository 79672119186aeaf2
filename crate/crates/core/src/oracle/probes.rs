use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::PiecewiseSolution;
use crate::hierarchy::GlobalSolution;
use crate::simplex::{sample_interior, Chart, Face, SimplexPoint, MAX_ALLELES};

/// Offsets used by [`continuity_probe`].
pub const PROBE_EPSILONS: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// A function of position and time defined on every open face.
pub trait SpaceTimeFunction {
    fn value_at(&self, face: Face, dense: &[f64; MAX_ALLELES], t: f64) -> f64;
}

impl SpaceTimeFunction for PiecewiseSolution {
    fn value_at(&self, face: Face, dense: &[f64; MAX_ALLELES], t: f64) -> f64 {
        self.eval_dense(face, dense, t)
    }
}

impl SpaceTimeFunction for GlobalSolution {
    fn value_at(&self, face: Face, dense: &[f64; MAX_ALLELES], t: f64) -> f64 {
        self.total().eval_dense(face, dense, t)
    }
}

/// Central-difference estimate of `-dU/dt - L* U` at an interior point.
///
/// Derivatives are taken in the chart of the point's face; every stencil
/// point must stay inside the open face.
pub fn pde_residual<U>(u: &U, p: &SimplexPoint, t: f64, h: f64) -> Result<f64>
where
    U: SpaceTimeFunction + ?Sized,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!("step {h} must be positive")));
    }
    let face = p.face();
    let chart = Chart::new(face);
    let free: Vec<usize> = chart.free_labels().collect();
    let dep = chart.dependent();
    let base = *p.dense();
    let at = |shifts: &[(usize, f64)], tt: f64| -> Result<f64> {
        let mut d = base;
        for &(v, s) in shifts {
            d[free[v]] += s;
        }
        d[dep] = 1.0 - free.iter().map(|&l| d[l]).sum::<f64>();
        if face.labels().any(|l| d[l] <= 0.0) {
            return Err(Error::Argument(format!(
                "finite-difference stencil with step {h} leaves the open face {face}"
            )));
        }
        Ok(u.value_at(face, &d, tt))
    };
    let u0 = at(&[], t)?;
    let dt = (at(&[], t + h)? - at(&[], t - h)?) / (2.0 * h);
    let mut lu = 0.0;
    for i in 0..free.len() {
        let xi = base[free[i]];
        let dii = (at(&[(i, h)], t)? - 2.0 * u0 + at(&[(i, -h)], t)?) / (h * h);
        lu += 0.5 * xi * (1.0 - xi) * dii;
        for j in i + 1..free.len() {
            let xj = base[free[j]];
            let dij = (at(&[(i, h), (j, h)], t)? - at(&[(i, h), (j, -h)], t)?
                - at(&[(i, -h), (j, h)], t)?
                + at(&[(i, -h), (j, -h)], t)?)
                / (4.0 * h * h);
            lu -= xi * xj * dij;
        }
    }
    Ok(-dt - lu)
}

/// Largest jump seen at one approach distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub epsilon: f64,
    pub max_gap: f64,
}

/// Compares `U` on a facet with `U` on the face just inside it.
///
/// For `count` random interior points `q` of `subface` and each offset in
/// [`PROBE_EPSILONS`], evaluates `|U((1-eps) q + eps e_s) - U(q)|` where `s`
/// is the label of `face` missing from `subface`.
pub fn continuity_probe<U>(
    u: &U,
    face: Face,
    subface: Face,
    count: usize,
    seed: u64,
    t: f64,
) -> Result<Vec<ProbeResult>>
where
    U: SpaceTimeFunction + ?Sized,
{
    if !subface.is_subface_of(face) || subface.len() + 1 != face.len() {
        return Err(Error::Argument(format!("{subface} is not a facet of {face}")));
    }
    let s = face
        .labels()
        .find(|l| !subface.contains(*l))
        .expect("facet misses one label");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<SimplexPoint> = (0..count).map(|_| sample_interior(subface, &mut rng)).collect();
    Ok(PROBE_EPSILONS
        .iter()
        .map(|&eps| {
            let max_gap = points
                .iter()
                .map(|q| {
                    let on = u.value_at(subface, q.dense(), t);
                    let mut d = *q.dense();
                    for l in subface.labels() {
                        d[l] *= 1.0 - eps;
                    }
                    d[s] = eps;
                    (u.value_at(face, &d, t) - on).abs()
                })
                .fold(0.0, f64::max);
            ProbeResult { epsilon: eps, max_gap }
        })
        .collect())
}
