use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use permlimit::limit::SweepReading;
use permlimit::Pattern;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "permlimit", version, about = "Uniform pattern-avoiding permutations and their infinite limits")]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, env = "PERMLIMIT_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "PERMLIMIT_JOBS")]
    pub jobs: Option<usize>,

    /// Output format. Defaults to `lines` for sample/enumerate/limit and
    /// `json` for verify.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Lines,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw uniform avoiders of [n], one per line.
    Sample(SampleArgs),
    /// List every avoider of [n], then `count=<N>`.
    Enumerate(EnumerateArgs),
    /// Print a prefix of a limiting object, with `inf` for ∞.
    Limit(LimitArgs),
    /// Run a verification experiment and write a report.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, short)]
    pub pattern: Pattern,
    #[arg(long, short)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Sample block-irreducible 321-avoiders (requires --pattern 321).
    #[arg(long)]
    pub birr_only: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long, short)]
    pub pattern: Pattern,
    #[arg(long, short)]
    pub n: usize,
    /// Only block-irreducible 321-avoiders (requires --pattern 321).
    #[arg(long)]
    pub birr_only: bool,
    /// Largest n allowed for exhaustive enumeration.
    #[arg(long, default_value_t = permlimit::DEFAULT_EXHAUSTIVE_BOUND)]
    pub bound: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LimitArgs {
    /// 312, 231, 213 or 321-partial (321 is accepted for 321-partial).
    #[arg(long, short, required_unless_present = "replay")]
    pub pattern: Option<String>,
    /// Number of entries; for 321-partial the default is the whole finite
    /// part.
    #[arg(long, short = 'm')]
    pub prefix_len: Option<usize>,
    /// Also write the segment trace (JSON) to this file.
    #[arg(long)]
    #[serde(skip)]
    pub trace: Option<PathBuf>,
    /// Regenerate the prefix recorded in a trace file and check it.
    #[arg(long, conflicts_with_all = ["pattern", "prefix_len", "trace"])]
    #[serde(skip)]
    pub replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SweepArg::ReuseY0)]
    pub sweep_reading: SweepArg,
    /// Avoider blocks up to this length are sampled whole; longer ones
    /// are expanded only where the prefix needs them.
    #[arg(long, default_value_t = permlimit::sampler::DEFAULT_MATERIALIZE_LIMIT)]
    pub materialize_limit: u64,
    /// Longest block-irreducible block materialised for 321-partial.
    #[arg(long, default_value_t = permlimit::LimitOptions::default().max_birr_block)]
    pub max_birr_block: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepArg {
    ReuseY0,
    ThirdSequence,
}

impl From<SweepArg> for SweepReading {
    fn from(s: SweepArg) -> Self {
        match s {
            SweepArg::ReuseY0 => SweepReading::ReuseY0,
            SweepArg::ThirdSequence => SweepReading::ThirdSequence,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Law of the position of the split element against C_{j-1}C_{n-j}/C_n.
    Positional(PositionalArgs),
    /// TV distance between finite-n coordinate laws and the limit's.
    Convergence(ConvergenceArgs),
    /// P(σ_j ≤ L) along an n-grid for 123 and 132.
    Escape(EscapeArgs),
    /// Empirical characteristic function of T_n^X / n² against the stable(1/2) law.
    Stable(StableArgs),
    /// Chi-square test of sampler output against the enumerated class.
    Uniformity(UniformityArgs),
    /// Enumerated class sizes against Catalan numbers.
    Counts(CountsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PositionalArgs {
    #[arg(long, short)]
    pub pattern: Pattern,
    #[arg(long, short)]
    pub n: usize,
    /// Enumerate S_n instead of sampling.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Largest allowed |observed - expected| in standard errors.
    #[arg(long, default_value_t = 4.0)]
    pub max_z: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergenceArgs {
    #[arg(long, short)]
    pub pattern: Pattern,
    /// Coordinates (1-based).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub coords: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub cap: usize,
    #[arg(long, value_delimiter = ',', default_value = "200,800,2000")]
    pub n_grid: Vec<usize>,
    /// Samples on each side.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Largest allowed TV at the largest n.
    #[arg(long, default_value_t = 0.05)]
    pub max_tv: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EscapeArgs {
    #[arg(long, short)]
    pub pattern: Pattern,
    #[arg(long, short, default_value_t = 1)]
    pub j: usize,
    #[arg(long, short = 'L', default_value_t = 3)]
    pub l: usize,
    #[arg(long, value_delimiter = ',', default_value = "50,200,800")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Largest allowed probability at the largest n.
    #[arg(long, default_value_t = 0.02)]
    pub max_final: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct StableArgs {
    #[arg(long, short, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long = "t", value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub ts: Vec<f64>,
    /// Largest allowed |empirical - reference| per point.
    #[arg(long, default_value_t = 0.03)]
    pub tolerance: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct UniformityArgs {
    /// One pattern; all six when omitted.
    #[arg(long, short)]
    pub pattern: Option<Pattern>,
    /// Run n = 1..=max-n.
    #[arg(long, default_value_t = 7)]
    pub max_n: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Quantile of the chi-square law used as the critical value.
    #[arg(long, default_value_t = 0.999)]
    pub level: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CountsArgs {
    #[arg(long, default_value_t = 8)]
    pub max_n: usize,
}
