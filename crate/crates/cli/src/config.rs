//! Turning flags, environment and an optional TOML file into a validated
//! [`RunConfig`]. Flags win over the environment, which wins over the file.

use std::fmt::Debug;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use wfkb_core::io::{parse_coeff, FinalConditionDoc, SolveDoc};
use wfkb_core::oracle::MCConfig;
use wfkb_core::polyalg::{parse_poly, DEGREE_CAP};
use wfkb_core::simplex::MAX_ALLELES;
use wfkb_core::{Chart, Coeff, Face, MultiPoly, PathSpec, SimplexPoint, StratifiedFinalCondition};

use crate::args::{Cli, CommandArgs, Format};
use crate::error::CliError;

/// Values a config file may supply. Keys match the long flag names with
/// underscores.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub output: Option<String>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub alleles: Option<usize>,
    pub degree: Option<u32>,
    pub face: Option<String>,
    pub final_condition: Option<PathBuf>,
    pub points: Option<usize>,
    pub times: Option<String>,
    pub base: Option<String>,
    pub anchor: Option<usize>,
    pub path: Option<String>,
    pub global: Option<bool>,
    pub poly: Option<String>,
    pub vertex_values: Option<String>,
    pub pop_size: Option<u64>,
    pub horizon: Option<f64>,
    pub reps: Option<usize>,
    pub start: Option<String>,
    pub t: Option<f64>,
    pub h: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub enum ExtendTarget {
    Path(PathSpec),
    Global,
}

#[derive(Debug)]
pub enum Command {
    Eigen {
        face: Face,
        degree: u32,
    },
    Solve {
        condition: StratifiedFinalCondition,
        degree: u32,
        points: usize,
        times: Vec<f64>,
    },
    Extend {
        alleles: usize,
        base: Face,
        poly: MultiPoly,
        degree: u32,
        target: ExtendTarget,
    },
    Stationary {
        values: Vec<Coeff>,
    },
    McCheck {
        condition: StratifiedFinalCondition,
        degree: u32,
        mc: MCConfig,
    },
    Residual {
        condition: StratifiedFinalCondition,
        degree: u32,
        points: usize,
        t: f64,
        h: f64,
    },
}

#[derive(Debug)]
pub struct RunConfig {
    /// `None` for standard output.
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub command: Command,
}

const DEFAULT_DEGREE: u32 = 8;

/// Collects precedence warnings while merging flags with file values.
struct Merge<'a> {
    file: &'a FileConfig,
    warnings: Vec<String>,
}

impl Merge<'_> {
    fn pick<T: Debug>(&mut self, name: &str, flag: Option<T>, file: Option<T>) -> Option<T> {
        match (flag, file) {
            (Some(f), Some(g)) => {
                self.warnings.push(format!(
                    "--{name} {f:?} overrides the config file value {g:?}"
                ));
                Some(f)
            }
            (f, g) => f.or(g),
        }
    }

    fn env_or_file<T: std::str::FromStr + Debug>(
        &mut self,
        name: &str,
        var: &str,
        flag: Option<T>,
        file: Option<T>,
    ) -> Result<Option<T>, CliError> {
        let env = match std::env::var(var) {
            Ok(v) => Some(
                v.trim()
                    .parse::<T>()
                    .map_err(|_| CliError::Usage(format!("{var}: cannot parse '{v}'")))?,
            ),
            Err(_) => None,
        };
        Ok(match (flag, env) {
            (Some(f), _) => self.pick(name, Some(f), file),
            (None, Some(e)) => Some(e),
            (None, None) => file,
        })
    }
}

fn usage(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("--{field}: {msg}"))
}

fn alleles(v: Option<usize>) -> Result<usize, CliError> {
    let n = v.ok_or_else(|| usage("alleles", "required"))?;
    if !(2..=MAX_ALLELES).contains(&n) {
        return Err(usage(
            "alleles",
            format!("need between 2 and {MAX_ALLELES} alleles, got {n}"),
        ));
    }
    Ok(n)
}

fn degree(v: Option<u32>) -> Result<u32, CliError> {
    let d = v.unwrap_or(DEFAULT_DEGREE);
    if d > DEGREE_CAP {
        return Err(usage("degree", format!("{d} exceeds the cap {DEGREE_CAP}")));
    }
    Ok(d)
}

fn labels(field: &str, text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| usage(field, format!("bad label '{s}'"))))
        .collect()
}

fn face_in(field: &str, text: &str, alleles: usize) -> Result<Face, CliError> {
    let mut l = labels(field, text)?;
    l.sort_unstable();
    let face = Face::new(&l).map_err(|e| usage(field, e))?;
    if face.max_label() >= alleles {
        return Err(usage(field, format!("{face} is not a face of the simplex on {alleles} alleles")));
    }
    Ok(face)
}

fn floats(field: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| usage(field, format!("bad number '{s}'")))
        })
        .collect()
}

/// Reads a final-condition document; a `{final_condition, degree}` document
/// also yields its degree.
fn condition(
    field: &str,
    path: Option<&Path>,
    alleles: usize,
) -> Result<(StratifiedFinalCondition, Option<u32>), CliError> {
    let path = path.ok_or_else(|| usage(field, "required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| usage(field, format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(field, format!("{}: {e}", path.display())))?;
    let (doc, deg) = if value.get("final_condition").is_some() {
        let d = SolveDoc::from_json(&text).map_err(|e| usage(field, e))?;
        (d.final_condition, Some(d.degree))
    } else {
        (FinalConditionDoc::from_json(&text).map_err(|e| usage(field, e))?, None)
    };
    Ok((doc.to_condition(alleles).map_err(|e| usage(field, e))?, deg))
}

fn check_condition_degree(f: &StratifiedFinalCondition, degree: u32) -> Result<(), CliError> {
    if f.max_degree() > degree {
        return Err(usage(
            "degree",
            format!("{degree} is below the final condition degree {}", f.max_degree()),
        ));
    }
    Ok(())
}

/// Validates everything; the returned warnings go to standard error.
pub fn resolve(cli: Cli, file: &FileConfig) -> Result<(RunConfig, Vec<String>), CliError> {
    let mut m = Merge {
        file,
        warnings: Vec::new(),
    };
    let g = cli.global;
    let output = m.pick("output", g.output, file.output.clone());
    let format = m.pick("format", g.format, file.format);
    let seed = m.env_or_file("seed", "WFKB_SEED", g.seed, file.seed)?.unwrap_or(0);
    let threads = m.env_or_file("threads", "WFKB_THREADS", g.threads, file.threads)?;
    if threads == Some(0) {
        return Err(usage("threads", "must be positive"));
    }
    let f = m.file;
    let command = match cli.command {
        CommandArgs::Eigen(a) => {
            let n = alleles(m.pick("alleles", a.alleles, f.alleles))?;
            let degree = degree(m.pick("degree", a.degree, f.degree))?;
            let face = match m.pick("face", a.face, f.face.clone()) {
                Some(t) => face_in("face", &t, n)?,
                None => Face::full(n).map_err(|e| usage("alleles", e))?,
            };
            if face.is_vertex() {
                return Err(usage("face", "a vertex has no proper eigenfunctions"));
            }
            Command::Eigen { face, degree }
        }
        CommandArgs::Solve(a) => {
            let n = alleles(m.pick("alleles", a.alleles, f.alleles))?;
            let path = m.pick("final", a.final_condition, f.final_condition.clone());
            let (condition, doc_degree) = condition("final", path.as_deref(), n)?;
            let flag_degree = m.pick("degree", a.degree, f.degree);
            if let (Some(fd), Some(dd)) = (flag_degree, doc_degree) {
                if fd != dd {
                    m.warnings
                        .push(format!("--degree {fd} overrides the document degree {dd}"));
                }
            }
            let degree = degree(flag_degree.or(doc_degree))?;
            check_condition_degree(&condition, degree)?;
            let times = match m.pick("times", a.times, f.times.clone()) {
                Some(t) => floats("times", &t)?,
                None => vec![0.0, -0.5, -1.0],
            };
            if times.iter().any(|&t| t > 0.0) {
                return Err(usage("times", "times must be nonpositive"));
            }
            Command::Solve {
                condition,
                degree,
                points: m.pick("points", a.points, f.points).unwrap_or(5),
                times,
            }
        }
        CommandArgs::Extend(a) => {
            let n = alleles(m.pick("alleles", a.alleles, f.alleles))?;
            let base_text = m.pick("base", a.base, f.base.clone()).ok_or_else(|| usage("base", "required"))?;
            let base = face_in("base", &base_text, n)?;
            let anchor = m.pick("anchor", a.anchor, f.anchor).unwrap_or(base.min_label());
            let global = a.global || f.global.unwrap_or(false);
            let path = m.pick("path", a.path, f.path.clone());
            let target = match (global, path) {
                (true, Some(_)) => return Err(usage("path", "cannot be combined with --global")),
                (true, None) => {
                    if !base.contains(anchor) {
                        return Err(usage("anchor", format!("{anchor} is not in {base}")));
                    }
                    if n > 8 {
                        m.warnings.push(format!(
                            "global extension on {n} alleles enumerates every path; this may be slow"
                        ));
                    }
                    ExtendTarget::Global
                }
                (false, Some(p)) => {
                    let added = labels("path", &p)?;
                    if added.iter().any(|&l| l >= n) {
                        return Err(usage("path", format!("labels must be below {n}")));
                    }
                    ExtendTarget::Path(PathSpec::new(base, anchor, added).map_err(|e| usage("path", e))?)
                }
                (false, None) => return Err(usage("path", "give --path or --global")),
            };
            let poly_text = m.pick("poly", a.poly, f.poly.clone()).unwrap_or_else(|| "1".into());
            let poly = parse_poly(&poly_text, Chart::new(base)).map_err(|e| usage("poly", e))?;
            if base.is_vertex() && poly.as_constant().is_none() {
                return Err(usage("poly", "data on a vertex must be constant"));
            }
            let degree = degree(m.pick("degree", a.degree, f.degree))?;
            if poly.degree().unwrap_or(0) > degree {
                return Err(usage("degree", "below the degree of --poly"));
            }
            Command::Extend {
                alleles: n,
                base,
                poly,
                degree,
                target,
            }
        }
        CommandArgs::Stationary(a) => {
            let text = m
                .pick("vertex-values", a.vertex_values, f.vertex_values.clone())
                .ok_or_else(|| usage("vertex-values", "required"))?;
            let values: Vec<Coeff> = text
                .split(',')
                .map(|s| parse_coeff(s.trim()).map_err(|e| usage("vertex-values", e)))
                .collect::<Result<_, _>>()?;
            let n = alleles(m.pick("alleles", a.alleles, f.alleles).or(Some(values.len())))?;
            if n != values.len() {
                return Err(usage(
                    "vertex-values",
                    format!("{} values given for {n} alleles", values.len()),
                ));
            }
            Command::Stationary { values }
        }
        CommandArgs::McCheck(a) => {
            let n = alleles(m.pick("alleles", a.alleles, f.alleles))?;
            let path = m.pick("final-condition", a.final_condition, f.final_condition.clone());
            let (condition, doc_degree) = condition("final-condition", path.as_deref(), n)?;
            let degree = degree(m.pick("degree", a.degree, f.degree).or(doc_degree))?;
            check_condition_degree(&condition, degree)?;
            let start = match m.pick("start", a.start, f.start.clone()) {
                Some(s) => {
                    let v = floats("start", &s)?;
                    if v.len() != n {
                        return Err(usage("start", format!("need {n} frequencies, got {}", v.len())));
                    }
                    SimplexPoint::from_dense(&v).map_err(|e| usage("start", e))?
                }
                None => SimplexPoint::new(
                    Face::full(n).map_err(|e| usage("alleles", e))?,
                    &vec![1.0 / n as f64; n],
                )
                .map_err(|e| usage("start", e))?,
            };
            let mc = MCConfig {
                pop_size: m.pick("pop-size", a.pop_size, f.pop_size).unwrap_or(500),
                start,
                horizon: m.pick("horizon", a.horizon, f.horizon).unwrap_or(1.0),
                replicates: m.pick("reps", a.reps, f.reps).unwrap_or(10_000),
                seed,
            };
            mc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            Command::McCheck {
                condition,
                degree,
                mc,
            }
        }
        CommandArgs::Residual(a) => {
            let n = alleles(m.pick("alleles", a.alleles, f.alleles))?;
            let path = m.pick("final-condition", a.final_condition, f.final_condition.clone());
            let (condition, doc_degree) = condition("final-condition", path.as_deref(), n)?;
            let degree = degree(m.pick("degree", a.degree, f.degree).or(doc_degree))?;
            check_condition_degree(&condition, degree)?;
            let t = m.pick("t", a.t, f.t).unwrap_or(-0.5);
            let h = m.pick("h", a.h, f.h).unwrap_or(1e-4);
            if !t.is_finite() || t > 0.0 {
                return Err(usage("t", "must be finite and nonpositive"));
            }
            if !(h > 0.0 && h < 0.1) {
                return Err(usage("h", "must lie in (0, 0.1)"));
            }
            Command::Residual {
                condition,
                degree,
                points: m.pick("points", a.points, f.points).unwrap_or(50),
                t,
                h,
            }
        }
    };
    let output = match output.as_deref() {
        None | Some("-") => None,
        Some(p) => Some(PathBuf::from(p)),
    };
    Ok((
        RunConfig {
            output,
            format,
            seed,
            threads,
            command,
        },
        m.warnings,
    ))
}
