//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phdsens::PhdVariant;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::ingest::IngestConfig;

#[derive(Debug, Parser)]
#[command(name = "phdsens", version, about = "Principal Hessian directions and their influence diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit PHD and write the eigenvalue table and the leading directions.
    Fit(FitArgs),
    /// Per-observation SRIS, ERIS, HRIS and Mahalanobis distance.
    Influence(InfluenceArgs),
    /// Population influence over a (‖x₀‖, cos θ₀) grid for the cosine model.
    Surface(SurfaceArgs),
    /// Write a simulated dataset.
    Simulate(SimulateArgs),
    /// Monte Carlo check of the cosine-model constants.
    ValidateConstants(ConstantsArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Response column name, or 0-based index.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Use the natural log of the response.
    #[arg(long)]
    pub log_response: bool,
    /// Keep rows whose response is missing (they then fail to parse).
    #[arg(long)]
    pub keep_missing_response: bool,
    /// Comma-separated predictor columns; default is every numeric column
    /// except the response.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    #[arg(long, default_value = ",")]
    pub delimiter: String,
}

impl InputArgs {
    pub fn config(&self) -> CliResult<IngestConfig> {
        let delimiter = match self.delimiter.as_bytes() {
            [b] => *b,
            _ if self.delimiter == "\\t" => b'\t',
            _ => return Err(CliError::Usage(format!("delimiter must be one byte, got '{}'", self.delimiter))),
        };
        Ok(IngestConfig {
            response: self.response.clone(),
            log_response: self.log_response,
            drop_missing_response: !self.keep_missing_response,
            predictors: self.predictors.clone(),
            delimiter,
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Y,
    R,
}

impl From<VariantArg> for PhdVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Y => PhdVariant::YBased,
            VariantArg::R => PhdVariant::RBased,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "y")]
    pub variant: VariantArg,
    /// Number of directions.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 3.0)]
    pub norm_max: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 61)]
    pub grid: usize,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    /// Comma-separated index direction (normalised); default e₁.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    Cosine,
    Quadratic,
    Linear,
    Custom,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkArg {
    SumOfSquares,
    Product,
    SinePlusSquare,
    CosineSum,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "cosine")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long, default_value_t = 263)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Index direction for cosine/linear models; default e₁ (cosine) or
    /// (1, …, 1) (linear).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// Custom-model directions: columns separated by ';', entries by ','.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, value_enum)]
    pub link: Option<LinkArg>,
    /// Output file; default `<out-dir>/simulated.csv`.
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsArgs {
    /// Monte Carlo sample size.
    #[arg(long, default_value_t = 10_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}
