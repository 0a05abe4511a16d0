//! Loading theories, morphisms and sequent lists from files.
//!
//! Theory references in `.cohmor` files are either `builtin:NAME` or a path
//! relative to the morphism file. A `.cohcat` file stands for the theory of
//! the free coherent category on it.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::builtin;
use crate::parser::{self, ParseError};
use crate::prover::ProverBudget;
use crate::semantics::TheoryMorphism;
use crate::syncat::{self, free_coherent_category, MorphismReport, SyncatError};
use crate::syntax::Theory;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Syncat(#[from] SyncatError),
    #[error("cannot read `{path}`: {reason}")]
    Io { path: String, reason: String },
    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|e| CorpusError::Io { path: path.display().to_string(), reason: e.to_string() })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// A `.cohthy` theory, or the free theory of a `.cohcat` category.
pub fn load_theory(path: &Path) -> Result<Theory, CorpusError> {
    if path.extension().is_some_and(|e| e == "cohcat") {
        let c = parser::parse_category(&read(path)?)?;
        return Ok(free_coherent_category(&stem(path), &c)?);
    }
    Ok(parser::parse_theory_file(path)?)
}

/// `builtin:NAME`, or a path (relative paths against `base`).
pub fn resolve_theory(reference: &str, base: &Path) -> Result<Theory, String> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        return builtin::by_name(name).ok_or_else(|| format!("no built-in theory `{name}`"));
    }
    let p = Path::new(reference);
    let p: PathBuf = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    load_theory(&p).map_err(|e| e.to_string())
}

/// An unchecked morphism file.
pub fn load_morphism(path: &Path) -> Result<TheoryMorphism, CorpusError> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(parser::parse_morphism_file(path, &mut |r| resolve_theory(r, &base))?)
}

/// A morphism file, with its verification report.
pub fn load_verified(path: &Path, budget: ProverBudget) -> Result<(TheoryMorphism, MorphismReport), CorpusError> {
    Ok(syncat::verify(&load_morphism(path)?, budget)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Proved,
    Refuted,
    /// Proved, with a short derivation.
    Hand,
}

#[derive(Debug, Clone)]
pub struct SequentEntry {
    pub theory: String,
    pub expectation: Expectation,
    pub text: String,
    pub line: usize,
}

/// Lines `THEORY EXPECTATION SEQUENT`; `#` starts a comment line.
pub fn parse_sequent_list(text: &str, path: &str) -> Result<Vec<SequentEntry>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| CorpusError::Line { path: path.to_string(), line: i + 1, message };
        let (theory, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim_start();
        let (tag, text) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
        let theory = theory.to_string();
        let expectation = match tag {
            "proved" => Expectation::Proved,
            "refuted" => Expectation::Refuted,
            "hand" => Expectation::Hand,
            other => return Err(bad(format!("unknown expectation `{other}`"))),
        };
        let text = text.trim().to_string();
        if text.is_empty() {
            return Err(bad("missing sequent".into()));
        }
        out.push(SequentEntry { theory, expectation, text, line: i + 1 });
    }
    Ok(out)
}

/// The theory a sequent list refers to by stem, looked up next to the list.
pub fn theory_by_stem(dir: &Path, name: &str) -> Result<Theory, CorpusError> {
    for ext in ["cohthy", "cohcat"] {
        let p = dir.join(format!("{name}.{ext}"));
        if p.exists() {
            return load_theory(&p);
        }
    }
    Err(CorpusError::Io { path: dir.join(name).display().to_string(), reason: "no such theory".into() })
}
