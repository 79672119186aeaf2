//! Subcommand execution and rendering. Every output is a byte buffer built
//! from exact strings or `{}`-formatted floats, so reruns are byte-identical.

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use wfkb_core::extension::{global_extension, pathwise_extension, Piece, PiecewiseSolution};
use wfkb_core::hierarchy::{solve_extended_kbe, stationary_solution, stem_check, GlobalSolution};
use wfkb_core::io::{coeff_string, global_json, piecewise_json};
use wfkb_core::oracle::{mc_backward_estimate, pde_residual};
use wfkb_core::polyalg::format_poly;
use wfkb_core::simplex::{sample_interior, MAX_ALLELES};
use wfkb_core::spectral::{proper_basis, proper_solution};
use wfkb_core::{Coeff, Face, FaceFunction, SimplexPoint, Unspecified};

use crate::args::Format;
use crate::config::{Command, ExtendTarget, RunConfig};
use crate::error::CliError;

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(std::io::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(std::io::Error::from)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn json_bytes(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(std::io::Error::from)?;
    out.push(b'\n');
    Ok(out)
}

fn point_string(p: &SimplexPoint) -> String {
    p.coords().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// `count` interior points per face, drawn in face order from one stream.
fn sample_points(faces: &[Face], count: usize, seed: u64) -> Vec<SimplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    faces
        .iter()
        .flat_map(|&f| {
            let n = if f.is_vertex() { 1 } else { count };
            (0..n).map(|_| sample_interior(f, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    match &cfg.command {
        Command::Eigen { face, degree } => eigen(*face, *degree, cfg.format.unwrap_or(Format::Csv)),
        Command::Solve {
            condition,
            degree,
            points,
            times,
        } => {
            let sol = solve_extended_kbe(condition, *degree)?;
            match cfg.format.unwrap_or(Format::Json) {
                Format::Json => json_bytes(&global_json(&sol)),
                Format::Csv => solve_table(&sol, *points, times, cfg.seed),
            }
        }
        Command::Extend {
            alleles,
            base,
            poly,
            degree,
            target,
        } => {
            let piece = if base.is_vertex() {
                Piece::constant(*base, poly.as_constant().unwrap_or_else(Coeff::zero))
            } else {
                Piece::from_proper(&proper_solution(&FaceFunction::from_poly(poly.clone()), *degree)?)
            };
            let ext = match target {
                ExtendTarget::Global => global_extension(&piece, *alleles)?,
                ExtendTarget::Path(path) => pathwise_extension(&piece, path)?,
            };
            match cfg.format.unwrap_or(Format::Json) {
                Format::Json => json_bytes(&piecewise_json(&ext)),
                Format::Csv => pieces_table(&ext),
            }
        }
        Command::Stationary { values } => stationary(values, cfg.format.unwrap_or(Format::Json)),
        Command::McCheck {
            condition,
            degree,
            mc,
        } => {
            let sol = solve_extended_kbe(condition, *degree)?;
            let analytic = sol.eval(&mc.start, -mc.horizon);
            let est = match condition.unspecified() {
                Unspecified::Zero => mc_backward_estimate(condition, mc)?,
                Unspecified::Induced => mc_backward_estimate(&sol, mc)?,
            };
            let z = if est.standard_error > 0.0 {
                (est.mean - analytic) / est.standard_error
            } else if est.mean == analytic {
                0.0
            } else {
                f64::INFINITY
            };
            let flag = if z.abs() > 3.0 { "|z|>3" } else { "ok" };
            match cfg.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_bytes(
                    &["estimate", "stderr", "analytic", "z_score", "flag"],
                    &[vec![
                        est.mean.to_string(),
                        est.standard_error.to_string(),
                        analytic.to_string(),
                        z.to_string(),
                        flag.to_string(),
                    ]],
                ),
                Format::Json => json_bytes(&json!({
                    "estimate": est,
                    "analytic": analytic,
                    "z_score": z,
                    "flag": flag,
                })),
            }
        }
        Command::Residual {
            condition,
            degree,
            points,
            t,
            h,
        } => {
            let sol = solve_extended_kbe(condition, *degree)?;
            let faces: Vec<Face> = Face::full(condition.alleles())?
                .subfaces()
                .into_iter()
                .filter(|f| !f.is_vertex())
                .collect();
            let mut rows = Vec::new();
            for p in sample_points(&faces, *points, cfg.seed) {
                let r = pde_residual(&sol, &p, *t, *h)?;
                rows.push(vec![p.face().to_string(), point_string(&p), t.to_string(), r.to_string()]);
            }
            rows_out(&["face", "point", "t", "residual"], rows, cfg.format.unwrap_or(Format::Csv))
        }
    }
}

/// CSV as is, or JSON objects keyed by the header.
fn rows_out(header: &[&str], rows: Vec<Vec<String>>, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => csv_bytes(header, &rows),
        Format::Json => json_bytes(&Value::Array(
            rows.into_iter()
                .map(|r| {
                    Value::Object(
                        header
                            .iter()
                            .zip(r)
                            .map(|(k, v)| (k.to_string(), Value::String(v)))
                            .collect(),
                    )
                })
                .collect(),
        )),
    }
}

fn eigen(face: Face, degree: u32, format: Format) -> Result<Vec<u8>, CliError> {
    let rows = proper_basis(face, degree)?
        .iter()
        .map(|p| {
            vec![
                face.to_string(),
                p.degree().to_string(),
                coeff_string(&p.kappa),
                format_poly(&p.eigenfunction),
            ]
        })
        .collect();
    rows_out(&["face", "degree", "eigenvalue", "eigenfunction"], rows, format)
}

fn solve_table(sol: &GlobalSolution, points: usize, times: &[f64], seed: u64) -> Result<Vec<u8>, CliError> {
    let faces = Face::full(sol.alleles())?.subfaces();
    let mut rows = Vec::new();
    for p in sample_points(&faces, points, seed) {
        for &t in times {
            rows.push(vec![
                p.face().to_string(),
                point_string(&p),
                t.to_string(),
                sol.eval(&p, t).to_string(),
            ]);
        }
    }
    csv_bytes(&["face", "point", "t", "value"], &rows)
}

fn pieces_table(u: &PiecewiseSolution) -> Result<Vec<u8>, CliError> {
    let mut rows = Vec::new();
    for piece in u.simplified().pieces() {
        for m in piece.modes() {
            rows.push(vec![
                piece.face().to_string(),
                coeff_string(&m.kappa),
                coeff_string(&m.coeff),
                m.expr.to_string(),
            ]);
        }
    }
    csv_bytes(&["face", "kappa", "coeff", "expr"], &rows)
}

/// An affine function written in the homogeneous coordinates of its face,
/// e.g. `p0` or `1/2 * p1 + p2`.
fn affine_string(coeffs: &[(usize, Coeff)]) -> String {
    let mut out = String::new();
    for (l, c) in coeffs.iter().filter(|(_, c)| !c.is_zero()) {
        let neg = *c < Coeff::zero();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mag = if neg { -c.clone() } else { c.clone() };
        if !mag.is_one() {
            out.push_str(&coeff_string(&mag));
            out.push_str(" * ");
        }
        out.push_str(&format!("p{l}"));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn stationary(values: &[Coeff], format: Format) -> Result<Vec<u8>, CliError> {
    let sol = stationary_solution(values)?;
    let report = stem_check(&sol)?;
    let total = sol.total().simplified();
    let mut rows = Vec::new();
    for face in Face::full(values.len())?.subfaces() {
        let value = match total.piece(face) {
            None => vec![],
            Some(p) => {
                let poly = p.snapshot().simplify().into_poly().map_err(|r| {
                    wfkb_core::Error::OutOfModel {
                        face,
                        reason: format!("stationary value {r} is not polynomial"),
                    }
                })?;
                face.labels()
                    .map(|l| {
                        let mut dense = vec![Coeff::zero(); MAX_ALLELES];
                        dense[l] = Coeff::one();
                        (l, poly.eval_exact(&dense))
                    })
                    .collect()
            }
        };
        let pass = report.entries.iter().find(|e| e.face == face).map(|e| e.pass);
        rows.push((face, affine_string(&value), pass));
    }
    match format {
        Format::Json => json_bytes(&json!({
            "solution": rows.iter().map(|(f, v, _)| json!({"face": f, "value": v})).collect::<Vec<_>>(),
            "stem_check": {
                "pass": report.all_pass(),
                "faces": report.entries,
            },
        })),
        Format::Csv => csv_bytes(
            &["face", "value", "stem_pass"],
            &rows
                .into_iter()
                .map(|(f, v, p)| vec![f.to_string(), v, p.map(|b| b.to_string()).unwrap_or_default()])
                .collect::<Vec<_>>(),
        ),
    }
}
