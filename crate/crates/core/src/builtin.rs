//! The built-in theories: an equivalence relation, its quotient, a monic
//! span, the union of a monic span, and the empty theory.

use crate::parser::parse_theory;
use crate::syntax::Theory;

pub const EQREL: &str = include_str!("../../../corpus/eqrel.cohthy");
pub const AR: &str = include_str!("../../../corpus/ar.cohthy");
pub const AB: &str = include_str!("../../../corpus/ab.cohthy");
pub const COV: &str = include_str!("../../../corpus/cov.cohthy");
pub const EMPTY: &str = include_str!("../../../corpus/empty.cohthy");

fn load(text: &str) -> Theory {
    parse_theory(text).expect("built-in theory parses")
}

pub fn eqrel() -> Theory {
    load(EQREL)
}

pub fn ar() -> Theory {
    load(AR)
}

pub fn ab() -> Theory {
    load(AB)
}

pub fn cov() -> Theory {
    load(COV)
}

pub fn empty() -> Theory {
    load(EMPTY)
}

pub const NAMES: &[&str] = &["eqrel", "ar", "ab", "cov", "empty"];

/// Look up `eqrel`, `builtin:eqrel`, and so on.
pub fn by_name(name: &str) -> Option<Theory> {
    match name.strip_prefix("builtin:").unwrap_or(name) {
        "eqrel" => Some(eqrel()),
        "ar" => Some(ar()),
        "ab" => Some(ab()),
        "cov" => Some(cov()),
        "empty" => Some(empty()),
        _ => None,
    }
}

pub fn all() -> Vec<Theory> {
    NAMES.iter().filter_map(|n| by_name(n)).collect()
}
