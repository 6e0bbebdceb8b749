use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_dim_sets, parse_f64_list, parse_usize_list, ConfigLayer, Format, Method};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "fasc", version, about = "Algebraic subspace clustering by descending filtrations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic arrangement into DIR/points.csv and DIR/manifest.json.
    Gen(ExperimentArgs),
    /// Cluster a point CSV and report metrics.
    Run(RunArgs),
    /// Sweep methods × dimension sets × noise levels over seeded trials.
    Bench(ExperimentArgs),
    /// Recompute metrics from stored predictions, or re-emit a benchmark table.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Method(s), comma separated: fsasc, sasc-a, sasc-d, fasc.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub ambient_dim: Option<usize>,
    /// Subspace dimensions, e.g. `2,3,4`; separate several sets with `;`.
    #[arg(long)]
    pub dims: Option<String>,
    /// Points per subspace, e.g. `200,200,200`.
    #[arg(long)]
    pub counts: Option<String>,
    /// Noise level(s), comma separated.
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of clusters.
    #[arg(long)]
    pub n: Option<usize>,
    /// Degree of the working polynomials (defaults to n).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Drop-threshold multiplier(s), comma separated.
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub min_cluster: Option<usize>,
    /// Relative singular-value tolerance for rank decisions.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output format: json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Output path (a directory for `gen`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ExperimentArgs {
    pub fn layer(&self) -> Result<ConfigLayer, CliError> {
        Ok(ConfigLayer {
            methods: self
                .method
                .as_deref()
                .map(|m| m.split(',').map(Method::parse).collect())
                .transpose()?,
            ambient_dim: self.ambient_dim,
            dims: self.dims.as_deref().map(parse_dim_sets).transpose()?,
            counts: self.counts.as_deref().map(parse_usize_list).transpose()?,
            sigmas: self.sigma.as_deref().map(parse_f64_list).transpose()?,
            trials: self.trials,
            seed: self.seed,
            n: self.n,
            degree: self.degree,
            min_cluster: self.min_cluster,
            gammas: self.gamma.as_deref().map(parse_f64_list).transpose()?,
            tol: self.tol,
            format: self.format.as_deref().map(Format::parse).transpose()?,
        })
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Point CSV (`x1,…,xD[,label]`); labels are only used for metrics.
    #[arg(long)]
    pub input: PathBuf,
    /// Store the affinity matrix in the JSON output.
    #[arg(long)]
    pub save_affinity: bool,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction record written by `run`.
    #[arg(long, requires = "truth", conflicts_with = "bench")]
    pub predictions: Option<PathBuf>,
    /// Ground truth: a labelled point CSV or a prediction record.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Benchmark table (JSON or CSV) to validate and re-emit.
    #[arg(long, required_unless_present = "predictions")]
    pub bench: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
