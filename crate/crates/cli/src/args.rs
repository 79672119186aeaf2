use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "wfkb", version, about = "Backward Kolmogorov solutions for the neutral Wright-Fisher diffusion")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// TOML file with default values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path, `-` for standard output.
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Random seed; also read from WFKB_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; also read from WFKB_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Proper eigenpairs on a face.
    Eigen(EigenArgs),
    /// Solution for final data on every stratum.
    Solve(SolveArgs),
    /// Pathwise or global extension of a face solution.
    Extend(ExtendArgs),
    /// Stationary solution from vertex values.
    Stationary(StationaryArgs),
    /// Monte Carlo estimate against the computed solution.
    McCheck(McCheckArgs),
    /// Finite-difference residual of the computed solution.
    Residual(ResidualArgs),
}

#[derive(Args, Debug)]
pub struct EigenArgs {
    #[arg(long)]
    pub alleles: Option<usize>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Face labels, e.g. `0,2`; the whole simplex by default.
    #[arg(long)]
    pub face: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub alleles: Option<usize>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Final condition JSON, or a document `{final_condition, degree}`.
    #[arg(long = "final", visible_alias = "final-condition")]
    pub final_condition: Option<PathBuf>,
    /// Evaluation points per face for the CSV table.
    #[arg(long)]
    pub points: Option<usize>,
    /// Comma-separated times `t <= 0` for the CSV table.
    #[arg(long, allow_hyphen_values = true)]
    pub times: Option<String>,
}

#[derive(Args, Debug)]
pub struct ExtendArgs {
    #[arg(long)]
    pub alleles: Option<usize>,
    /// Labels of the face carrying the solution.
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long)]
    pub anchor: Option<usize>,
    /// Labels to add, in order.
    #[arg(long, conflicts_with = "global")]
    pub path: Option<String>,
    /// Average over all paths and anchors.
    #[arg(long)]
    pub global: bool,
    /// Final data on the base face; `1` by default.
    #[arg(long, allow_hyphen_values = true)]
    pub poly: Option<String>,
    #[arg(long)]
    pub degree: Option<u32>,
}

#[derive(Args, Debug)]
pub struct StationaryArgs {
    #[arg(long)]
    pub alleles: Option<usize>,
    /// One exact value per vertex, e.g. `1,0,1/2`.
    #[arg(long, allow_hyphen_values = true)]
    pub vertex_values: Option<String>,
}

#[derive(Args, Debug)]
pub struct McCheckArgs {
    #[arg(long)]
    pub alleles: Option<usize>,
    #[arg(long)]
    pub pop_size: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long = "final-condition", visible_alias = "final")]
    pub final_condition: Option<PathBuf>,
    /// Starting frequencies, one per allele; uniform by default.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub degree: Option<u32>,
}

#[derive(Args, Debug)]
pub struct ResidualArgs {
    #[arg(long)]
    pub alleles: Option<usize>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long = "final-condition", visible_alias = "final")]
    pub final_condition: Option<PathBuf>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
}
