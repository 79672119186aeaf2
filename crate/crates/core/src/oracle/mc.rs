use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::PiecewiseSolution;
use crate::hierarchy::{GlobalSolution, StratifiedFinalCondition};
use crate::polyalg::FloatPoly;
use crate::simplex::{Face, SimplexPoint, MAX_ALLELES};

/// Parameters of a Monte Carlo run of the discrete chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    /// Population size `N`.
    pub pop_size: u64,
    pub start: SimplexPoint,
    /// Diffusion time `tau = |t|`; one generation is `1/N`.
    pub horizon: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Range(format!("population size {} is below 2", self.pop_size)));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::Range(format!("horizon {} must be finite and nonnegative", self.horizon)));
        }
        if self.replicates < 2 {
            return Err(Error::Range("need at least 2 replicates".into()));
        }
        Ok(())
    }

    /// `round(tau * N)`.
    pub fn generations(&self) -> u64 {
        (self.horizon * self.pop_size as f64).round() as u64
    }
}

/// Resamples `n` individuals with class probabilities proportional to
/// `weights` (over `labels`) by successive conditional binomials.
fn multinomial(
    rng: &mut ChaCha8Rng,
    n: u64,
    labels: &[usize],
    weights: &[f64; MAX_ALLELES],
    out: &mut [u64; MAX_ALLELES],
) {
    let mut left = n;
    let mut mass: f64 = labels.iter().map(|&l| weights[l]).sum();
    for (i, &l) in labels.iter().enumerate() {
        if i + 1 == labels.len() {
            out[l] = left;
            break;
        }
        if left == 0 || mass <= 0.0 {
            out[l] = 0;
            continue;
        }
        let p = (weights[l] / mass).clamp(0.0, 1.0);
        let x = Binomial::new(left, p).expect("valid binomial").sample(rng);
        out[l] = x;
        left -= x;
        mass -= weights[l];
    }
}

/// One trajectory endpoint of the neutral Wright-Fisher chain. Replicate
/// `r` always draws from the same random stream, whatever the thread count.
pub fn simulate_discrete_wf(cfg: &MCConfig, replicate: u64) -> SimplexPoint {
    let n = cfg.pop_size;
    let gens = cfg.generations();
    if gens == 0 {
        return cfg.start.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(replicate);
    let mut labels: Vec<usize> = cfg.start.face().labels().collect();
    let mut counts = [0u64; MAX_ALLELES];
    multinomial(&mut rng, n, &labels, cfg.start.dense(), &mut counts);
    let mut weights = [0.0; MAX_ALLELES];
    for _ in 1..gens {
        labels.retain(|&l| counts[l] > 0);
        if labels.len() == 1 {
            break;
        }
        for &l in &labels {
            weights[l] = counts[l] as f64;
        }
        multinomial(&mut rng, n, &labels, &weights, &mut counts);
    }
    let face = Face::from_labels(labels.iter().copied().filter(|&l| counts[l] > 0))
        .expect("at least one allele survives");
    let mut dense = [0.0; MAX_ALLELES];
    for l in face.labels() {
        dense[l] = counts[l] as f64 / n as f64;
    }
    SimplexPoint::from_parts(face, dense)
}

/// A function on the closed simplex given stratum by stratum.
pub trait StratumFunction {
    /// Value at a point of the open face `face`.
    fn value(&self, face: Face, dense: &[f64; MAX_ALLELES]) -> f64;
}

/// Faces without a component contribute zero whatever the [`Unspecified`]
/// setting; for induced data use the solved [`GlobalSolution`], whose value at
/// `t = 0` is the complete final condition.
///
/// [`Unspecified`]: crate::hierarchy::Unspecified
impl StratumFunction for StratifiedFinalCondition {
    fn value(&self, face: Face, dense: &[f64; MAX_ALLELES]) -> f64 {
        self.component(face).map_or(0.0, |p| FloatPoly::from_exact(p).eval(dense))
    }
}

/// The value at `t = 0`.
impl StratumFunction for PiecewiseSolution {
    fn value(&self, face: Face, dense: &[f64; MAX_ALLELES]) -> f64 {
        self.eval_dense(face, dense, 0.0)
    }
}

impl StratumFunction for GlobalSolution {
    fn value(&self, face: Face, dense: &[f64; MAX_ALLELES]) -> f64 {
        self.total().value(face, dense)
    }
}

/// Result of a Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over the square root of the replicate count.
    pub standard_error: f64,
    pub replicates: usize,
    /// Fraction of endpoints on each stratum.
    #[serde(serialize_with = "crate::io::ser_face_map")]
    pub absorbed_fraction_per_stratum: BTreeMap<Face, f64>,
}

/// Sum by recursive halving; the grouping depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Estimates `E_p0[f(X_tau)]` from independent runs of the chain.
pub fn mc_backward_estimate<F>(f: &F, cfg: &MCConfig) -> Result<MCEstimate>
where
    F: StratumFunction + Sync + ?Sized,
{
    cfg.validate()?;
    let samples: Vec<(Face, f64)> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let end = simulate_discrete_wf(cfg, r);
            (end.face(), f.value(end.face(), end.dense()))
        })
        .collect();
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let n = values.len() as f64;
    let mean = pairwise_sum(&values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    let mut counts: BTreeMap<Face, usize> = BTreeMap::new();
    for (face, _) in &samples {
        *counts.entry(*face).or_default() += 1;
    }
    Ok(MCEstimate {
        mean,
        standard_error: (var / n).sqrt(),
        replicates: cfg.replicates,
        absorbed_fraction_per_stratum: counts
            .into_iter()
            .map(|(f, c)| (f, c as f64 / n))
            .collect(),
    })
}
