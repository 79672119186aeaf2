//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wfkb_core::extension::{
    extend_eigenfunction, global_extension, path_piece, path_piece_by_steps, pathwise_extension,
    ExtensionStep, Piece, PiecewiseSolution,
};
use wfkb_core::hierarchy::{littler, solve_extended_kbe, stem_check};
use wfkb_core::operators::apply_backward;
use wfkb_core::oracle::{continuity_probe, mc_backward_estimate, pde_residual, MCConfig};
use wfkb_core::polyalg::{frac, parse_poly, q};
use wfkb_core::simplex::{sample_interior, Chart, Face, PathSpec, SimplexPoint};
use wfkb_core::spectral::{proper_basis, proper_solution};
use wfkb_core::{Coeff, FaceFunction, MultiPoly, RationalFn, StratifiedFinalCondition, Unspecified};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit, || {
        format!("took {:.1}s, limit {limit}s", elapsed.as_secs_f64())
    })
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn eigen_identities() -> Outcome {
    let start = Instant::now();
    let edge = Face::new(&[0, 1]).map_err(e)?;
    let mut kappas: Vec<Coeff> = proper_basis(edge, 9).map_err(e)?.into_iter().map(|p| p.kappa).collect();
    kappas.sort();
    kappas.dedup();
    let want: Vec<Coeff> = (1..=8).map(|m| frac(m * (m + 1), 2)).collect();
    check(kappas == want, || format!("edge spectrum {kappas:?}"))?;
    let mut count = 0;
    for face in Face::full(4).map_err(e)?.subfaces().into_iter().filter(|f| !f.is_vertex()) {
        for pair in proper_basis(face, 6).map_err(e)? {
            let defect = &apply_backward(&pair.eigenfunction) + &pair.eigenfunction.scale(&pair.kappa);
            check(defect.is_zero(), || format!("eigen-identity fails on {face}"))?;
            count += 1;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("edge kappas 1..36 exact; {count} proper pairs on 11 faces of the tetrahedron"))
}

fn single_step_identities() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    for alleles in [3, 4] {
        let top = Face::full(alleles).map_err(e)?;
        for source in top.facets() {
            let s = top.labels().find(|l| !source.contains(*l)).unwrap();
            let basis = proper_basis(source, 5).map_err(e)?;
            for r in source.labels() {
                let step = ExtensionStep::new(top, r, s).map_err(e)?;
                let opposite = top.without(r).map_err(e)?;
                for pair in &basis {
                    let ext = extend_eigenfunction(&pair.eigenfunction, &pair.kappa, &step).map_err(e)?;
                    let defect = apply_backward(&ext).checked_add(&ext.scale(&pair.kappa)).map_err(e)?;
                    check(defect.numer().is_zero(), || format!("L* defect on {top} step ({r},{s})"))?;
                    let on_source = ext.restrict(source).map_err(e)?;
                    check(on_source == RationalFn::from_poly(pair.eigenfunction.clone()), || {
                        format!("extension does not attain the source on {source}")
                    })?;
                    check(ext.restrict(opposite).map_err(e)?.is_zero(), || {
                        format!("extension does not vanish on {opposite}")
                    })?;
                    count += 1;
                }
            }
        }
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!("{count} (mode, step) extensions verified"))
}

fn random_path(rng: &mut ChaCha8Rng) -> Result<(PathSpec, Piece), String> {
    let alleles = rng.random_range(2..=5);
    let mut labels: Vec<usize> = (0..alleles).collect();
    labels.shuffle(rng);
    let k = rng.random_range(1..alleles);
    let base = Face::from_labels(labels[..k].iter().copied()).map_err(e)?;
    let anchor = *labels[..k].choose(rng).unwrap();
    let added = labels[k..].to_vec();
    let path = PathSpec::new(base, anchor, added).map_err(e)?;
    let piece = if base.is_vertex() {
        Piece::constant(base, frac(rng.random_range(1..9), 7))
    } else {
        let basis = proper_basis(base, 4).map_err(e)?;
        let pick = &basis[rng.random_range(0..basis.len())];
        let f = FaceFunction::from_poly(pick.eigenfunction.clone());
        Piece::from_proper(&proper_solution(&f, 4).map_err(e)?)
    };
    Ok((path, piece))
}

fn path_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let (path, piece) = random_path(&mut rng)?;
        for level in 0..=path.added().len() {
            let closed = path_piece(&piece, &path, level).map_err(e)?;
            let folded = path_piece_by_steps(&piece, &path, level).map_err(e)?;
            check(closed.simplified() == folded.simplified(), || {
                format!("closed form differs from fold on {path:?} level {level}")
            })?;
        }
    }
    for alleles in 2..=5 {
        let top = Face::full(alleles).map_err(e)?;
        for i0 in 0..alleles {
            let rest: Vec<usize> = top.labels().filter(|&l| l != i0).collect();
            let mut sum = RationalFn::zero(Chart::new(top));
            for order in rest.iter().copied().permutations(rest.len()) {
                let path = PathSpec::new(Face::vertex(i0).map_err(e)?, i0, order).map_err(e)?;
                sum = sum.checked_add(&littler(&path).map_err(e)?).map_err(e)?;
            }
            let want = RationalFn::from_poly(MultiPoly::coord(Chart::new(top), i0).map_err(e)?);
            check(sum == want, || format!("product forms sum to {sum} on {top}"))?;
        }
    }
    Ok("20 random paths match their step folds; product forms telescope for n = 1..4".into())
}

fn stationary_hierarchy() -> Outcome {
    for alleles in 2..=4 {
        let top = Face::full(alleles).map_err(e)?;
        for i0 in 0..alleles {
            let values: Vec<Coeff> = (0..alleles).map(|l| q((l == i0) as i64)).collect();
            let f = StratifiedFinalCondition::vertex_values(&values).map_err(e)?;
            let sol = solve_extended_kbe(&f, 4).map_err(e)?;
            check(sol.is_stationary(), || "vertex solution depends on time".into())?;
            let total = sol.total().simplified();
            for face in top.subfaces() {
                let chart = Chart::new(face);
                let want = if face.contains(i0) {
                    MultiPoly::coord(chart, i0).map_err(e)?
                } else {
                    MultiPoly::zero(chart)
                };
                let got = total
                    .piece(face)
                    .map(|p| p.snapshot().simplify())
                    .unwrap_or_else(|| RationalFn::zero(chart));
                check(got == RationalFn::from_poly(want), || format!("{got} on {face} for vertex {i0}"))?;
            }
            let report = stem_check(&sol).map_err(e)?;
            check(report.all_pass(), || format!("stem check fails for vertex {i0}"))?;
        }
        for face in top.subfaces() {
            let chart = Chart::new(face);
            check(apply_backward(&MultiPoly::one(chart)).is_zero(), || format!("L* 1 on {face}"))?;
            for l in face.labels() {
                let p = MultiPoly::coord(chart, l).map_err(e)?;
                check(apply_backward(&p).is_zero(), || format!("L* p{l} on {face}"))?;
            }
        }
    }
    Ok("vertex data give p^i0 on all faces for n = 1..3; stem check and affine kernel exact".into())
}

fn codim_one_gaps(u: &PiecewiseSolution, top: Face) -> Result<Vec<(Face, Face, [f64; 3])>, String> {
    let mut out = Vec::new();
    for face in top.subfaces().into_iter().filter(|f| !f.is_vertex()) {
        for facet in face.facets() {
            let r = continuity_probe(u, face, facet, 20, 7, -0.5).map_err(e)?;
            out.push((face, facet, [r[0].max_gap, r[1].max_gap, r[2].max_gap]));
        }
    }
    Ok(out)
}

fn continuity_contract() -> Outcome {
    let top = Face::full(4).map_err(e)?;
    let vertex = Face::vertex(0).map_err(e)?;
    let u = Piece::constant(vertex, q(1));
    let global = global_extension(&u, 4).map_err(e)?;
    let gaps = codim_one_gaps(&global, top)?;
    let mut worst = [0.0f64; 3];
    for (_, _, g) in &gaps {
        for i in 0..3 {
            worst[i] = worst[i].max(g[i]);
        }
    }
    check(worst[2] < 1e-4, || format!("global gap at 1e-5 is {:e}", worst[2]))?;
    for i in 0..2 {
        let ratio = worst[i] / worst[i + 1].max(f64::MIN_POSITIVE);
        check(worst[i + 1] <= 1e-13 || (5.0..20.0).contains(&ratio), || {
            format!("global gaps {worst:?} do not scale linearly")
        })?;
    }
    let path = PathSpec::new(vertex, 0, vec![1, 2, 3]).map_err(e)?;
    let along = pathwise_extension(&u, &path).map_err(e)?;
    let mut mixed = PiecewiseSolution::new();
    for face in top.subfaces() {
        let piece = along.piece(face).or_else(|| global.piece(face));
        if let Some(p) = piece {
            mixed.insert(p.clone()).map_err(e)?;
        }
    }
    let off = codim_one_gaps(&mixed, top)?
        .into_iter()
        .filter(|(face, facet, _)| path.level_of(*face).is_some() && path.level_of(*facet).is_none())
        .map(|(face, facet, g)| (face, facet, g[2]))
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .ok_or("no off-path facet")?;
    check(off.2 > 0.05, || format!("largest off-path gap {:e}", off.2))?;
    Ok(format!(
        "global max gaps {:.2e} {:.2e} {:.2e}; single path jumps {:.3} from {} to {}",
        worst[0], worst[1], worst[2], off.2, off.0, off.1
    ))
}

fn edge_mc(pop_size: u64) -> Result<(f64, f64, f64), String> {
    let edge = Face::new(&[0, 1]).map_err(e)?;
    let f = StratifiedFinalCondition::new(2, Unspecified::Zero)
        .map_err(e)?
        .with(parse_poly("p1 (1 - p1)", Chart::new(edge)).map_err(e)?)
        .map_err(e)?;
    let cfg = MCConfig {
        pop_size,
        start: SimplexPoint::new(edge, &[0.5, 0.5]).map_err(e)?,
        horizon: 1.0,
        replicates: 100_000,
        seed: 11,
    };
    let est = mc_backward_estimate(&f, &cfg).map_err(e)?;
    let exact_discrete = (1.0 - 1.0 / pop_size as f64).powi(cfg.generations() as i32) * 0.25;
    Ok((est.mean, est.standard_error, exact_discrete))
}

fn mc_edge() -> Outcome {
    let start = Instant::now();
    let analytic = (-1.0f64).exp() * 0.25;
    let mut lines = Vec::new();
    let mut bias = Vec::new();
    for n in [500u64, 2000] {
        let (mean, se, discrete) = edge_mc(n)?;
        check((mean - analytic).abs() <= 3.0 * se + 2.0 / n as f64, || {
            format!("N={n}: {mean} vs {analytic} (se {se})")
        })?;
        check((mean - discrete).abs() <= 3.0 * se, || {
            format!("N={n}: {mean} vs discrete expectation {discrete} (se {se})")
        })?;
        bias.push((discrete - analytic).abs());
        lines.push(format!("N={n} mean {mean:.5} se {se:.1e}"));
    }
    check(bias[1] < bias[0], || format!("bias does not shrink: {bias:?}"))?;
    within(start.elapsed(), 120.0)?;
    Ok(format!(
        "{}; target {analytic:.5}; bias {:.1e} -> {:.1e}",
        lines.join(", "),
        bias[0],
        bias[1]
    ))
}

/// Vertex data with the higher strata induced (the stationary problem), so
/// the target is `p0^i`. The strict indicator, zero off the vertex, is
/// reported against the hierarchy's own prediction at `t = -5`.
fn mc_fixation() -> Outcome {
    let start = Instant::now();
    let top = Face::full(3).map_err(e)?;
    let p0 = [0.5, 0.2, 0.3];
    let start_point = SimplexPoint::new(top, &p0).map_err(e)?;
    let cfg = MCConfig {
        pop_size: 200,
        start: start_point.clone(),
        horizon: 5.0,
        replicates: 100_000,
        seed: 12,
    };
    let mut lines = Vec::new();
    for i in 0..3 {
        let values: Vec<Coeff> = (0..3).map(|l| q((l == i) as i64)).collect();
        let induced = StratifiedFinalCondition::vertex_values(&values).map_err(e)?;
        let stationary = solve_extended_kbe(&induced, 1).map_err(e)?;
        let est = mc_backward_estimate(&stationary, &cfg).map_err(e)?;
        let z = (est.mean - p0[i]) / est.standard_error;
        check(z.abs() <= 3.0, || format!("allele {i}: {} vs {} (z = {z:.2})", est.mean, p0[i]))?;
        let mut strict = StratifiedFinalCondition::new(3, Unspecified::Zero).map_err(e)?;
        strict.set(MultiPoly::constant(Chart::new(Face::vertex(i).map_err(e)?), q(1))).map_err(e)?;
        let fixed = mc_backward_estimate(&strict, &cfg).map_err(e)?;
        let predicted = solve_extended_kbe(&strict, 6).map_err(e)?.eval(&start_point, -5.0);
        let zs = (fixed.mean - predicted) / fixed.standard_error;
        lines.push(format!(
            "p{i} {:.4} (z {z:+.2}); fixed {:.4} vs predicted {predicted:.4} (z {zs:+.2})",
            est.mean, fixed.mean
        ));
    }
    within(start.elapsed(), 180.0)?;
    Ok(lines.join("; "))
}

fn fd_residual() -> Outcome {
    let top = Face::full(3).map_err(e)?;
    let c = |l: &[usize]| Chart::new(Face::new(l).unwrap());
    let f = StratifiedFinalCondition::new(3, Unspecified::Zero)
        .map_err(e)?
        .with(MultiPoly::constant(c(&[0]), q(1)))
        .and_then(|f| f.with(MultiPoly::constant(c(&[2]), frac(1, 2))))
        .and_then(|f| f.with(parse_poly("p1^2 (1 - p1) + 1/3 p1", c(&[0, 1]))?))
        .and_then(|f| f.with(parse_poly("p1 p2 + p1^2 - 2 p2^3", c(&[0, 1, 2]))?))
        .map_err(e)?;
    let sol = solve_extended_kbe(&f, 6).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for face in top.subfaces() {
        for _ in 0..50 {
            let p = sample_interior(face, &mut rng);
            let r = pde_residual(&sol, &p, -0.5, 1e-4).map_err(e)?;
            check(r.abs() < 1e-5, || format!("residual {r:e} on {face} at {:?}", p.coords()))?;
            worst = worst.max(r.abs());
        }
    }
    Ok(format!("max |residual| {worst:.2e} over 7 faces x 50 points"))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wfkb"))
        .args(args)
        .current_dir(dir)
        .env_remove("WFKB_SEED")
        .env_remove("WFKB_THREADS")
        .output()
        .map_err(e)?;
    check(out.status.success(), || {
        format!("{args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    std::fs::write(
        dir.path().join("fc.json"),
        r#"{"strata":[{"face":[0],"poly":"1"},{"face":[0,1],"poly":"p1^2"},{"face":[0,1,2],"poly":"p1 p2"}]}"#,
    )
    .map_err(e)?;
    std::fs::write(
        dir.path().join("edge.json"),
        r#"{"strata":[{"face":[0,1],"poly":"p1 (1 - p1)"}]}"#,
    )
    .map_err(e)?;
    let runs: [&[&str]; 7] = [
        &["eigen", "--alleles", "3", "--degree", "5"],
        &["solve", "--alleles", "3", "--degree", "5", "--final", "fc.json", "--points", "4", "--seed", "3", "--format", "csv"],
        &["solve", "--alleles", "3", "--degree", "5", "--final", "fc.json", "--format", "json"],
        &["extend", "--alleles", "4", "--base", "0,1", "--anchor", "0", "--global", "--poly", "p1 (1 - p1)", "--degree", "3"],
        &["stationary", "--alleles", "3", "--vertex-values", "1,0,0"],
        &["mc-check", "--alleles", "2", "--pop-size", "100", "--horizon", "1", "--reps", "2000", "--seed", "5", "--final-condition", "edge.json", "--start", "0.5,0.5"],
        &["residual", "--alleles", "3", "--degree", "5", "--final-condition", "fc.json", "--points", "5", "--seed", "4"],
    ];
    for args in runs {
        let a = run_cli(args, dir.path())?;
        let b = run_cli(args, dir.path())?;
        check(!a.is_empty() && a == b, || format!("{} output differs between runs", args[0]))?;
    }
    Ok("7 invocations over 6 subcommands byte-identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact eigen-identities", eigen_identities),
        ("single-step extension identities", single_step_identities),
        ("path closed form and product-form telescoping", path_identities),
        ("stationary hierarchy", stationary_hierarchy),
        ("continuity contract", continuity_contract),
        ("Monte Carlo on the edge", mc_edge),
        ("Monte Carlo fixation probabilities", mc_fixation),
        ("finite-difference residual", fd_residual),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
