use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use bbr_core::posterior::RatioBasis;
use bbr_core::study_data::{GroundTruth, UnsuitableHandling};

#[derive(Parser, Debug)]
#[command(name = "bbr", version, about = "Inconclusive-aware analysis of forensic black-box studies")]
pub struct Cli {
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ingest a study file and print validation counts.
    Validate(ValidateArgs),
    /// Error rates under the four inconclusive treatments.
    Rates(DataArgs),
    /// Empirical examiner/item split of inconclusive variability.
    Decompose(DataArgs),
    /// Fit the latent-tendency model by MCMC.
    Fit(FitArgs),
    /// Posterior-predictive interval for the empirical ratio (needs `fit`).
    Ppc(PpcArgs),
    /// Simulate a study from a parameter file.
    Simulate(SimulateArgs),
    /// Aggregate rates, ratios and failure rates (needs `fit`).
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Response-level CSV.
    #[arg(long)]
    pub input: PathBuf,

    /// Built-in mapping name (ulery2011, monson2022, canonical) or a TOML file.
    #[arg(long)]
    pub mapping: String,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Also write validation.json and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// How unsuitable / no-value responses are handled. Defaults to
    /// `exclude` for rates and `pool` otherwise.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,

    #[arg(long, value_enum, default_value_t = TruthArg::Both)]
    pub ground_truth: TruthArg,

    /// Split examiners by whether they ever excluded on individual characteristics.
    #[arg(long)]
    pub group_by_elims: bool,

    /// Extra responses consulted only when classifying examiners.
    #[arg(long, requires = "group_by_elims")]
    pub auxiliary: Option<PathBuf>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, default_value_t = 4)]
    pub chains: usize,

    /// Iterations per chain, warmup included.
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,

    #[arg(long, default_value_t = 2500)]
    pub warmup: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Scale of the half-t and t hyperpriors.
    #[arg(long, default_value_t = 1.0)]
    pub hyperprior_scale: f64,

    #[arg(long, value_enum, default_value_t = BasisArg::Scale)]
    pub ratio_basis: BasisArg,

    /// Also write every retained draw as long-format CSV.
    #[arg(long)]
    pub draws_csv: bool,
}

#[derive(Args, Debug)]
pub struct PpcArgs {
    /// Output directory of a previous `fit`.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Simulated studies per unit; defaults to min(1000, retained draws).
    #[arg(long)]
    pub n_sims: Option<usize>,

    /// Defaults to the fit seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Output directory of a previous `fit`.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Basis of the ratio used for failure rates; defaults to the fit's.
    #[arg(long, value_enum)]
    pub ratio_basis: Option<BasisArg>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Parameter JSON (theta, zeta, sigma_zeta, omega, alpha and optional ids).
    #[arg(long)]
    pub params: PathBuf,

    /// `crossed` for every examiner x item pair, or a CSV with
    /// `examiner,item[,ground_truth]` columns.
    #[arg(long, default_value = "crossed")]
    pub assignment: String,

    /// Ground truth of items not covered by the assignment file.
    #[arg(long, value_enum, default_value_t = SingleTruthArg::Ss)]
    pub ground_truth: SingleTruthArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyArg {
    Pool,
    Exclude,
}

impl PolicyArg {
    pub fn handling(self) -> UnsuitableHandling {
        match self {
            PolicyArg::Pool => UnsuitableHandling::PoolAsInconclusive,
            PolicyArg::Exclude => UnsuitableHandling::Exclude,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyArg::Pool => "pool",
            PolicyArg::Exclude => "exclude",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthArg {
    Ss,
    Ds,
    Both,
}

impl TruthArg {
    pub fn selected(self) -> Vec<GroundTruth> {
        match self {
            TruthArg::Ss => vec![GroundTruth::SameSource],
            TruthArg::Ds => vec![GroundTruth::DifferentSource],
            TruthArg::Both => vec![GroundTruth::SameSource, GroundTruth::DifferentSource],
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingleTruthArg {
    Ss,
    Ds,
}

impl SingleTruthArg {
    pub fn truth(self) -> GroundTruth {
        match self {
            SingleTruthArg::Ss => GroundTruth::SameSource,
            SingleTruthArg::Ds => GroundTruth::DifferentSource,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisArg {
    Scale,
    Variance,
}

impl BasisArg {
    pub fn basis(self) -> RatioBasis {
        match self {
            BasisArg::Scale => RatioBasis::ScaleParams,
            BasisArg::Variance => RatioBasis::VarianceParams,
        }
    }
}
