//! Many-sorted coherent logic: syntax, finite semantics, a chase-based
//! prover, syntactic categories and theory-level gluing.

pub mod builtin;
pub mod corpus;
pub mod modelstruct;
pub mod parser;
pub mod prover;
pub mod semantics;
pub mod syncat;
pub mod syntax;
