//! `genplan`: project classes of planning problems, compile QNPs, plan,
//! synthesize, verify and simulate policies.
//!
//! Exit codes: 0 on success, 1 when the pipeline ran and the answer is
//! negative (the reason is printed as JSON on stdout), 2 on bad input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "genplan", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for sampled initial values and nondeterministic outcomes
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Size cap for automata, games and products
    #[arg(long, global = true, env = "GENPLAN_BUDGET", default_value_t = 1_000_000)]
    pub budget: usize,

    /// Output format for artifacts and reports
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Print sizes and diagnostics on stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Fair,
    Strong,
    Constraint,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelArg {
    State,
    Observation,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the observation projection of a class of problems
    Project {
        /// Class file (`{"members": [...]}`) or a single problem
        class: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthesize a policy that reaches the goal under trajectory constraints
    Synthesize {
        /// Fully observable problem
        problem: PathBuf,
        /// Constraint: `qnp`, `qnp(X)`, `qnp-strong(X)`, `true` or an LTL
        /// formula; repeated constraints are conjoined
        #[arg(short, long)]
        constraint: Vec<String>,
        /// Alphabet level of LTL constraints
        #[arg(long, value_enum, default_value_t = LevelArg::Observation)]
        level: LevelArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile a QNP into its boolean FOND abstraction
    Qnp2fond {
        qnp: PathBuf,
        /// Add commitment fluents and set/unset actions first
        #[arg(long)]
        close: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute a strong-cyclic policy
    Plan {
        problem: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a policy against a problem
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyMode::Fair)]
        mode: VerifyMode,
        problem: PathBuf,
        policy: PathBuf,
        /// Constraint for `--mode constraint`
        constraint: Option<String>,
        #[arg(long, value_enum, default_value_t = LevelArg::Observation)]
        level: LevelArg,
    },
    /// Run a policy on a problem or on a QNP
    Simulate {
        /// Problem JSON or QNP text (`.qnp`)
        problem: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Initial values (`X=20,Y=30`) for a QNP, or an initial state name;
        /// sampled with the seed when omitted
        #[arg(long)]
        init: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
    },
    /// Translate an LTL formula into a deterministic parity automaton
    Ltl2dpw {
        formula: String,
        /// Comma-separated letters
        #[arg(long, conflicts_with = "problem")]
        alphabet: Option<String>,
        /// Use the interleaved alphabet of this problem
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = LevelArg::Observation)]
        level: LevelArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a problem, class, policy or QNP as a Graphviz graph
    Show {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(commands::run(cli))
}
