//! `coh`: batch front end for the coherent logic workbench. Every command
//! prints one JSON report on stdout and writes artifacts under `--out`.

mod commands;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coherent::prover::ProverBudget;
use coherent::semantics::SearchBudget;

use report::{CommandReport, Status};

#[derive(Debug, Parser)]
#[command(name = "coh", version, about = "Coherent theories: models, proofs, syntactic categories and gluing")]
pub struct Cli {
    /// Worker threads for parallel searches.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Leave the timings object empty, so reports are reproducible.
    #[arg(long, global = true)]
    no_timings: bool,
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Prover step budget.
    #[arg(long, global = true, default_value_t = 10_000)]
    steps: usize,
    /// Prover branch budget.
    #[arg(long, global = true, default_value_t = 512)]
    branches: usize,
    /// Largest carrier tried when looking for countermodels.
    #[arg(long, global = true, default_value_t = 3)]
    countermodel_size: usize,
    /// Node budget for model enumeration.
    #[arg(long, global = true, default_value_t = SearchBudget::default().max_nodes)]
    nodes: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Op {
    Terminal,
    Product,
    Equalizer,
    Pullback,
    Image,
    Union,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Generator {
    Quotient,
    Cover,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a theory, category, morphism, structure or sequent list.
    Check {
        file: PathBuf,
        /// Theory for a structure file.
        #[arg(long)]
        theory: Option<String>,
    },
    /// Enumerate models up to a carrier size.
    Models {
        theory: String,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Prove or refute a sequent.
    Prove { theory: String, sequent: String },
    /// Finite limits, images and unions in the syntactic category.
    Syncat {
        theory: String,
        #[arg(long, value_enum)]
        op: Op,
        /// `[ctx]. φ`; repeatable.
        #[arg(long = "object")]
        objects: Vec<String>,
        /// `DOM ; COD ; θ`; repeatable.
        #[arg(long = "arrow")]
        arrows: Vec<String>,
        /// A subobject predicate over the ambient object; repeatable.
        #[arg(long = "formula")]
        formulas: Vec<String>,
    },
    /// Theory of the free coherent category on a finite category.
    FreeCat { file: PathBuf },
    /// Glue one cell of a generator into a theory.
    Glue {
        theory: String,
        #[arg(long, value_enum)]
        generator: Generator,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Which attachment, in enumeration order.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Factor a verified morphism through glued cells.
    Factor {
        morphism: PathBuf,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Look for missing quotients and disjoint sums.
    Probe {
        theory: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Glue the missing quotients and sums, round by round.
    Saturate {
        theory: String,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Compare model categories along a morphism.
    Morita {
        #[arg(long)]
        from: String,
        #[arg(long)]
        via: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Defaults to twice `k`.
        #[arg(long)]
        k_prime: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Models { .. } => "models",
            Command::Prove { .. } => "prove",
            Command::Syncat { .. } => "syncat",
            Command::FreeCat { .. } => "free-cat",
            Command::Glue { .. } => "glue",
            Command::Factor { .. } => "factor",
            Command::Probe { .. } => "probe",
            Command::Saturate { .. } => "saturate",
            Command::Morita { .. } => "morita",
        }
    }
}

pub struct Budgets {
    pub prover: ProverBudget,
    pub search: SearchBudget,
}

fn emit(report: &CommandReport) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool set once");
    }
    let budgets = Budgets {
        prover: ProverBudget { max_steps: cli.steps, max_branches: cli.branches, max_model_size: cli.countermodel_size },
        search: SearchBudget { max_nodes: cli.nodes },
    };
    let mut report = CommandReport::new(cli.command.name(), &cli.out, !cli.no_timings);
    match commands::run(&cli.command, &budgets, &mut report) {
        Ok(()) => {
            emit(&report);
            ExitCode::from(if report.failed() { 1 } else { 0 })
        }
        Err(e) if e.budget_exceeded() => {
            report.verdict("budget", Status::Unknown, e.to_string());
            emit(&report);
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
