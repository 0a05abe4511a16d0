use coherent::corpus::CorpusError;
use coherent::modelstruct::ModelstructError;
use coherent::parser::ParseError;
use coherent::prover::ProverError;
use coherent::semantics::SemanticsError;
use coherent::syncat::SyncatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("cannot write `{path}`: {reason}")]
    Write { path: String, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Syncat(#[from] SyncatError),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Modelstruct(#[from] ModelstructError),
}

impl CliError {
    pub fn budget_exceeded(&self) -> bool {
        matches!(
            self,
            CliError::Semantics(SemanticsError::BudgetExceeded(_))
                | CliError::Modelstruct(ModelstructError::Semantics(SemanticsError::BudgetExceeded(_)))
        )
    }
}
