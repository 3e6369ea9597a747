//! Command-line surface. Every parsed invocation serializes as the
//! experiment config echoed into its report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kcost_core::solvers::Oracle;
use kcost_core::CostKind;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "kcost", version, about = "Cost-decay experiments for k-means and k-median")]
pub struct Cli {
    /// Directory receiving the JSON report and CSV artifacts.
    #[arg(long, global = true, default_value = "kcost-out")]
    pub out: PathBuf,
    /// RNG seed for every randomized step.
    #[arg(long, global = true, env = "KCOST_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Objective: means (squared distances) or median (distances).
    #[arg(long, global = true, value_enum, default_value_t = KindArg::Means)]
    pub kind: KindArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Means,
    Median,
}

impl From<KindArg> for CostKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Means => CostKind::Means,
            KindArg::Median => CostKind::Median,
        }
    }
}

/// Input points: a CSV file or a generator spec.
#[derive(Args, Debug, Clone, Serialize)]
#[group(required = true, multiple = false)]
pub struct DataArgs {
    /// Dataset CSV, one point per row (optional `# dim=d` header).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Random generator spec as inline JSON or a path to a JSON file, e.g.
    /// {"family":"ball","n":200,"d":2,"radius":1}. Drawn with --seed.
    #[arg(long)]
    pub spec: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleArg {
    /// Exact DP in 1-D, subset enumeration for n <= 12, Lloyd otherwise.
    Auto,
    Dp1d,
    Enumerate,
    Lloyd,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    /// Oracle for optimal costs Δ_m.
    #[arg(long, value_enum, default_value_t = OracleArg::Auto)]
    pub oracle: OracleArg,
    /// Lloyd restarts when the oracle is heuristic.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
}

impl OracleArgs {
    pub fn oracle(&self, seed: u64) -> Oracle {
        match self.oracle {
            OracleArg::Auto => Oracle::Auto { restarts: self.restarts, seed },
            OracleArg::Dp1d => Oracle::Dp1d,
            OracleArg::Enumerate => Oracle::Enumerate,
            OracleArg::Lloyd => Oracle::Lloyd { restarts: self.restarts, seed },
        }
    }
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate random data or a lower-bound instance.
    Gen(GenArgs),
    /// Optimal (or best-found) k-center set.
    Solve(SolveArgs),
    /// D² seeding trace, or the over-seeding experiment with --k/--epsilon.
    Seed(SeedArgs),
    /// Build an upper-bound point set (1-D grid, fan, metric annuli).
    Construct(ConstructArgs),
    /// Build a weighted coreset and validate it against random center sets.
    Coreset(CoresetArgs),
    /// Build and certify a sphere net.
    Nets(NetsArgs),
    /// Doubling-dimension and covering-number estimates of a finite metric.
    Metric(MetricArgs),
    /// Least m with Δ_m <= ε·Δ_k.
    EstimateL(EstimateLArgs),
    /// Cost against the number of centers, exact sweep or D² seeding.
    DecayCurve(DecayArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenArgs {
    #[command(subcommand)]
    pub family: GenFamily,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GenFamily {
    /// Random data from a JSON spec.
    Random {
        /// Inline JSON or path to a JSON file.
        #[arg(long)]
        spec: String,
    },
    /// One-dimensional lower-bound instance.
    Lower1d {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        t: u32,
    },
    /// d-dimensional lower-bound instance with k apexes.
    LowerDdim {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        t: u32,
        /// Random candidate pool for the direction net (d >= 3).
        #[arg(long)]
        pool: Option<usize>,
        /// Swap rounds of the local-search adversary.
        #[arg(long, default_value_t = 2)]
        swap_rounds: usize,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SeedArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Number of centers to draw (trace mode).
    #[arg(long, conflicts_with_all = ["k", "epsilon"])]
    pub m: Option<usize>,
    /// Fix the first center to this point index (trace mode).
    #[arg(long, requires = "m")]
    pub first: Option<usize>,
    /// Target k (experiment mode).
    #[arg(long, requires = "epsilon")]
    pub k: Option<usize>,
    /// Target ε (experiment mode).
    #[arg(long, requires = "k")]
    pub epsilon: Option<f64>,
    /// Sample size is L at ε / c_const.
    #[arg(long, default_value_t = 1.0)]
    pub c_const: f64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Fail (exit 2) when the success rate is below this.
    #[arg(long)]
    pub min_rate: Option<f64>,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConstructArgs {
    #[command(subcommand)]
    pub which: Construction,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "construction", rename_all = "kebab-case")]
pub enum Construction {
    /// Grid on the line around a center (1-D data).
    Upper1d {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long)]
        epsilon: f64,
        /// Grid origin; defaults to the optimal single center.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<f64>,
    },
    /// Fan of rays around a Lloyd clustering.
    Fan {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        epsilon: f64,
        /// Random candidate pool per cell net (d >= 3); data directions are always added.
        #[arg(long)]
        pool: Option<usize>,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
    },
    /// Annuli representatives of a finite metric around one point.
    Annuli {
        /// Distance matrix CSV.
        #[arg(long)]
        matrix: PathBuf,
        /// Index of the center point.
        #[arg(long, default_value_t = 0)]
        center: usize,
        #[arg(long)]
        epsilon: f64,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoresetMethod {
    /// Fan at ε²/32 around a Lloyd clustering.
    Fan,
    /// D² sample of size L(k, ε²/β).
    D2,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CoresetArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = CoresetMethod::Fan)]
    pub method: CoresetMethod,
    /// Candidate center sets for validation.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Sampling constant of the D² method.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Random candidate pool per cell net (fan method, d >= 3).
    #[arg(long, default_value_t = 0)]
    pub pool: usize,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NetsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub epsilon: f64,
    /// Random candidate pool (d >= 3); default scales with (1+2/ε)^d.
    #[arg(long)]
    pub pool: Option<usize>,
    /// Random probes for the cover check (d >= 3).
    #[arg(long, default_value_t = 100_000)]
    pub probes: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MetricArgs {
    /// Distance matrix CSV.
    #[arg(long, required_unless_present = "data", conflicts_with = "data")]
    pub matrix: Option<PathBuf>,
    /// Dataset CSV, turned into its Euclidean distance matrix.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Random balls for both estimates; 0 makes the γ estimate exhaustive.
    #[arg(long, default_value_t = 200)]
    pub balls: usize,
    /// Extra exponent allowed in the covering-number comparison.
    #[arg(long, default_value_t = 1.0)]
    pub slack: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EstimateLArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayMode {
    /// Δ_m for m = 1..=mmax through the oracle.
    Exact,
    /// Pointwise minimum over D² seeding traces.
    Seeding,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DecayArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Largest number of centers.
    #[arg(long)]
    pub mmax: usize,
    #[arg(long, value_enum, default_value_t = DecayMode::Exact)]
    pub mode: DecayMode,
    /// Seeding traces (seeding mode).
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[command(flatten)]
    pub oracle: OracleArgs,
}
