use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Clone)]
#[command(name = "twoprover", version, about = "Experiments on two-prover tests and games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Plane-vs-point low-degree test
    Ldt(LdtArgs),
    /// Oracularized linearity test
    Linearity(LinearityArgs),
    /// Two-prover QUADEQ test
    Quadeq(QuadeqArgs),
    /// Values of a two-player game
    Value(ValueCmdArgs),
    /// Self-improvement of a consistent measurement
    Improve(ImproveArgs),
    /// Consistency metrics of a measurement against a family
    Metrics(MetricsArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Seed for every random choice; required by randomized runs
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path (written atomically); stdout when absent
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LdtArgs {
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 11)]
    pub q: u32,
    /// honest, constant-bob, mismatched, random-function or custom-json
    #[arg(long, default_value = "honest")]
    pub strategy: String,
    /// Polynomial JSON for g; random of degree d when absent
    #[arg(long)]
    pub poly: Option<PathBuf>,
    /// Second polynomial for the mismatched strategy; random when absent
    #[arg(long)]
    pub poly2: Option<PathBuf>,
    /// Bob's answer for constant-bob
    #[arg(long, default_value_t = 0)]
    pub constant: u32,
    /// Strategy JSON for custom-json
    #[arg(long)]
    pub strategy_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    /// Enumerate every (x, y1, y2) for the exact acceptance probability
    #[arg(long)]
    pub exhaustive: bool,
    /// epsilon in the diagnostic ratio q / (d m / epsilon)^c
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Exponent c in the diagnostic ratio
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Write a CSV transcript of the first rounds
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub transcript_rounds: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LinearityArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// linear:S, linear:S+flip:P1,P2, const:B, bits:0110... or random
    #[arg(long, default_value = "linear:0")]
    pub function: String,
    /// Bob's function; Alice's when absent
    #[arg(long)]
    pub bob_function: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    /// Enumerate every (u, v, i)
    #[arg(long)]
    pub exhaustive: bool,
    /// Also build the explicit two-player game and evaluate the strategy in it
    #[arg(long)]
    pub explicit_game: bool,
    /// Keep Alice's answer triples in the explicit game
    #[arg(long)]
    pub untrimmed: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Satisfiable,
    Contradictory,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct QuadeqArgs {
    /// Instance JSON
    #[arg(long, conflicts_with = "generate")]
    pub instance: Option<PathBuf>,
    /// Built-in generator, seeded by --instance-seed or --seed
    #[arg(long, value_enum)]
    pub generate: Option<Generator>,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub instance_seed: Option<u64>,
    /// honest, assignment:BITS or tensor:BITS,BITS (x then y, first variable first)
    #[arg(long, default_value = "honest")]
    pub strategy: String,
    /// Probabilities of steps 1-4
    #[arg(long, default_value = "1/4,1/4,1/4,1/4")]
    pub steps: String,
    /// Probabilities of sub-tests 1a-1d within step 1
    #[arg(long, default_value = "1/4,1/4,1/4,1/4")]
    pub linearity_mix: String,
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    /// Exact acceptance per sub-test (n <= 4, K <= 20)
    #[arg(long)]
    pub exhaustive: bool,
    /// Also evaluate the strategy in the explicit trimmed game (n = 2)
    #[arg(long)]
    pub explicit_game: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ValueCmdArgs {
    /// GameSpec JSON
    #[arg(long, conflicts_with = "builtin")]
    pub game: Option<PathBuf>,
    /// chsh, accept-all, reject-all or equal
    #[arg(long)]
    pub builtin: Option<String>,
    /// exact-classical, strategy-eval, seesaw or repeat:K
    #[arg(long, default_value = "exact-classical")]
    pub method: String,
    /// Strategy JSON for strategy-eval
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    /// Play the game with roles chosen at random
    #[arg(long)]
    pub symmetrize: bool,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImprovePreset {
    /// Same projective measurement for every question, maximally entangled state
    Exact,
    /// Rotated copies of the exact family at each --etas level
    Sweep,
    /// Solver contract on seeded random instances
    RandomSdp,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ImproveArgs {
    /// Instance JSON (state, family, structured family, optional baseline)
    #[arg(long, conflicts_with = "preset")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<ImprovePreset>,
    /// pretty-good, uniform or fixed (the instance's baseline)
    #[arg(long, default_value = "pretty-good")]
    pub baseline: String,
    /// Run the outer self-improvement loop instead of a single step
    #[arg(long = "loop")]
    pub outer_loop: bool,
    /// Self-improvement configuration JSON
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub outcomes: usize,
    #[arg(long, default_value_t = 3)]
    pub questions: usize,
    #[arg(long, default_value = "0.1,0.05,0.025")]
    pub etas: String,
    /// Random instances for the random-sdp preset
    #[arg(long, default_value_t = 20)]
    pub count: u64,
    /// Write the solver trace as CSV
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricsPreset {
    Exact,
    Perturbed,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MetricsArgs {
    #[arg(long, conflicts_with = "preset")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<MetricsPreset>,
    /// Sub-measurement JSON to evaluate; the instance baseline when absent
    #[arg(long)]
    pub measurement: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub outcomes: usize,
    #[arg(long, default_value_t = 3)]
    pub questions: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ldt(_) => "ldt",
            Command::Linearity(_) => "linearity",
            Command::Quadeq(_) => "quadeq",
            Command::Value(_) => "value",
            Command::Improve(_) => "improve",
            Command::Metrics(_) => "metrics",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Ldt(a) => &a.common,
            Command::Linearity(a) => &a.common,
            Command::Quadeq(a) => &a.common,
            Command::Value(a) => &a.common,
            Command::Improve(a) => &a.common,
            Command::Metrics(a) => &a.common,
        }
    }
}
