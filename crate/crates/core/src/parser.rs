//! Surface syntax for theories (`.cohthy`), finite structures (`.cohstr`)
//! and theory morphisms (`.cohmor`), with rendering back to text.
//!
//! ```text
//! theory AR {
//!   sort A
//!   sort B
//!   fun p : A -> B
//!   rel R : A * A
//!   axiom surj [b:B]: true => exists a:A. b = p(a)
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syncat::FinCat;
use crate::semantics::{FiniteStructure, FuncTable, RelTable, TheoryMorphism, Verification};
use crate::syntax::{
    validate_formula, validate_object, validate_sequent, Axiom, Context, FuncDecl, Formula, FormulaInContext,
    LogicError, RelDecl, Sequent, Signature, Term, Theory,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}-{}", self.file, self.line, self.col_start, self.col_end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: {source}")]
    Validation { span: SourceSpan, source: LogicError },
    #[error("{span}: function `{function}` has no value at {row}")]
    PartialFunctionTable { span: SourceSpan, function: String, row: String },
    #[error("{span}: `{element}` is not an element of sort {sort}")]
    ElementOutOfCarrier { span: SourceSpan, element: String, sort: String },
    #[error("{span}: cannot read `{path}`: {reason}")]
    Io { span: SourceSpan, path: String, reason: String },
}

impl ParseError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::Validation { span, .. }
            | ParseError::PartialFunctionTable { span, .. }
            | ParseError::ElementOutOfCarrier { span, .. }
            | ParseError::Io { span, .. } => span,
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    len: usize,
}

const PUNCT: &[&str] = &["|->", "->", "=>", "{", "}", "(", ")", "[", "]", ",", ":", ";", ".", "*", "=", "&", "|"];

fn unicode_alias(c: char) -> Option<&'static str> {
    Some(match c {
        '∧' => "&",
        '∨' => "|",
        '≈' => "=",
        '⇒' => "=>",
        '↦' => "|->",
        '→' => "->",
        '×' => "*",
        _ => return None,
    })
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(ParseError::Syntax {
                            span: SourceSpan { file: file.into(), line, col_start: start_col, col_end: col },
                            message: "unterminated string".into(),
                        })
                    }
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                        s.push(chars[i + 1]);
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), line, col: start_col, len: col - start_col });
            continue;
        }
        if is_word_char(c) && c != '\'' {
            let mut s = String::new();
            while i < chars.len() && is_word_char(chars[i]) {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Word(s), line, col: start_col, len: col - start_col });
            continue;
        }
        let word_alias = match c {
            '⊤' => Some("true"),
            '⊥' => Some("false"),
            '∃' => Some("exists"),
            _ => None,
        };
        if let Some(w) = word_alias {
            out.push(Token { tok: Tok::Word(w.into()), line, col, len: 1 });
            i += 1;
            col += 1;
            continue;
        }
        if let Some(p) = unicode_alias(c) {
            out.push(Token { tok: Tok::Punct(p), line, col, len: 1 });
            i += 1;
            col += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                out.push(Token { tok: Tok::Punct(p), line, col, len: p.len() });
                i += p.len();
                col += p.len();
            }
            None => {
                return Err(ParseError::Syntax {
                    span: SourceSpan { file: file.into(), line, col_start: col, col_end: col + 1 },
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col, len: 0 });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

const ITEM_KEYWORDS: &[&str] = &["sort", "fun", "rel", "axiom", "include"];
const FORMULA_KEYWORDS: &[&str] = &["true", "false", "exists"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: String,
    dir: Option<PathBuf>,
    depth: usize,
}

impl Parser {
    fn new(text: &str, file: &str, dir: Option<PathBuf>) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text, file)?, pos: 0, file: file.to_string(), dir, depth: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span_of(&self, t: &Token) -> SourceSpan {
        SourceSpan { file: self.file.clone(), line: t.line, col_start: t.col, col_end: t.col + t.len.max(1) }
    }

    fn span(&self) -> SourceSpan {
        self.span_of(&self.toks[self.pos])
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { span: self.span(), message: message.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(v) if v == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.describe()))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{w}`, found {}", self.describe()))
        }
    }

    /// Any word; used for element labels.
    fn word(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.pos += 1;
                Ok(w)
            }
            _ => self.error(format!("expected a name, found {}", self.describe())),
        }
    }

    /// A word that is a legal identifier.
    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Word(w) if !w.starts_with(|c: char| c.is_ascii_digit()) => {
                self.pos += 1;
                Ok(w)
            }
            _ => self.error(format!("expected an identifier, found {}", self.describe())),
        }
    }

    /// An identifier that is not a formula keyword.
    fn name(&mut self) -> Result<String, ParseError> {
        if let Tok::Word(w) = self.peek() {
            if FORMULA_KEYWORDS.contains(&w.as_str()) {
                return self.error(format!("`{w}` is reserved"));
            }
        }
        self.ident()
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected a quoted string, found {}", self.describe())),
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    // -- terms and formulas --------------------------------------------------

    fn term_args(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                args.push(self.term()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let name = self.name()?;
        if self.is_punct("(") {
            Ok(Term::App(name, self.term_args()?))
        } else {
            Ok(Term::Var(name))
        }
    }

    fn context(&mut self) -> Result<Context, ParseError> {
        self.expect_punct("[")?;
        let mut ctx = Context::new();
        if !self.eat_punct("]") {
            loop {
                let v = self.name()?;
                self.expect_punct(":")?;
                let s = self.ident()?;
                ctx.push(&v, &s);
                if self.eat_punct("]") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(ctx)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.conjunction()?;
        if !self.is_punct("|") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_punct("|") {
            parts.push(self.conjunction()?);
        }
        Ok(Formula::Or(parts))
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let first = self.unary()?;
        if !self.is_punct("&") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_punct("&") {
            parts.push(self.unary()?);
        }
        Ok(Formula::And(parts))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.is_word("true") {
            self.pos += 1;
            return Ok(Formula::top());
        }
        if self.is_word("false") {
            self.pos += 1;
            return Ok(Formula::bot());
        }
        if self.is_word("exists") {
            self.pos += 1;
            let mut binders = Vec::new();
            loop {
                let v = self.name()?;
                self.expect_punct(":")?;
                let s = self.ident()?;
                binders.push((v, s));
                if self.eat_punct(".") {
                    break;
                }
                self.expect_punct(",")?;
            }
            let mut body = self.formula()?;
            for (v, s) in binders.into_iter().rev() {
                body = Formula::Exists(v, s, Box::new(body));
            }
            return Ok(body);
        }
        if self.eat_punct("(") {
            let f = self.formula()?;
            self.expect_punct(")")?;
            return Ok(f);
        }
        if self.is_punct("&") || self.is_punct("|") {
            let conj = self.is_punct("&");
            self.pos += 1;
            self.expect_punct("(")?;
            let f = self.formula()?;
            self.expect_punct(")")?;
            return Ok(if conj { Formula::And(vec![f]) } else { Formula::Or(vec![f]) });
        }
        // An atom: `t = u` or `R(t⃗)` or a nullary relation `P`.
        let lhs = self.term()?;
        if self.eat_punct("=") {
            let rhs = self.term()?;
            return Ok(Formula::Eq(lhs, rhs));
        }
        match lhs {
            Term::App(r, args) => Ok(Formula::Rel(r, args)),
            Term::Var(r) => Ok(Formula::Rel(r, Vec::new())),
        }
    }

    fn object(&mut self) -> Result<FormulaInContext, ParseError> {
        let ctx = self.context()?;
        self.expect_punct(".")?;
        let f = self.formula()?;
        Ok(FormulaInContext::new(ctx, f))
    }

    /// `[ctx] lhs => rhs`, either side possibly empty.
    fn sequent_body(&mut self) -> Result<Sequent, ParseError> {
        let ctx = self.context()?;
        self.eat_punct(":");
        let lhs = if self.is_punct("=>") { Formula::top() } else { self.formula()? };
        self.expect_punct("=>")?;
        let rhs = if self.sequent_ends() { Formula::bot() } else { self.formula()? };
        Ok(Sequent::new(ctx, lhs, rhs))
    }

    fn sequent_ends(&self) -> bool {
        match self.peek() {
            Tok::Eof => true,
            Tok::Punct(p) => matches!(*p, "}" | ";"),
            Tok::Word(w) => ITEM_KEYWORDS.contains(&w.as_str()) && !matches!(self.peek_at(1), Tok::Punct("(") | Tok::Punct("=")),
            Tok::Str(_) => false,
        }
    }

    // -- theories -------------------------------------------------------------

    fn sort_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = vec![self.ident()?];
        while self.eat_punct("*") {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn items(&mut self, acc: &mut TheoryAcc, until_brace: bool) -> Result<(), ParseError> {
        loop {
            if until_brace && self.is_punct("}") {
                return Ok(());
            }
            if self.at_eof() {
                return if until_brace { self.error("expected `}`") } else { Ok(()) };
            }
            let start = self.span();
            let kw = self.ident()?;
            match kw.as_str() {
                "sort" => loop {
                    let s = self.ident()?;
                    acc.sorts.push((s, start.clone()));
                    if !self.eat_punct(",") {
                        break;
                    }
                },
                "fun" => {
                    let name = self.ident()?;
                    self.expect_punct(":")?;
                    let args = if self.is_punct("->") { Vec::new() } else { self.sort_list()? };
                    self.expect_punct("->")?;
                    let result = self.ident()?;
                    acc.funcs.push((FuncDecl { name, args, result }, start));
                }
                "rel" => {
                    let name = self.ident()?;
                    let args = if self.eat_punct(":") { self.sort_list()? } else { Vec::new() };
                    acc.rels.push((RelDecl { name, args }, start));
                }
                "axiom" => {
                    let name = self.word()?;
                    let s = self.sequent_body()?;
                    acc.axioms.push((Axiom { name, sequent: s }, start));
                }
                "include" => {
                    let path = self.string()?;
                    self.include(&path, start, acc)?;
                }
                other => {
                    return Err(ParseError::Syntax {
                        span: start,
                        message: format!("expected `sort`, `fun`, `rel`, `axiom` or `include`, found `{other}`"),
                    })
                }
            }
            self.eat_punct(";");
        }
    }

    fn include(&mut self, path: &str, span: SourceSpan, acc: &mut TheoryAcc) -> Result<(), ParseError> {
        if self.depth > 16 {
            return Err(ParseError::Io { span, path: path.into(), reason: "include nesting too deep".into() });
        }
        let full = match &self.dir {
            Some(d) => d.join(path),
            None => PathBuf::from(path),
        };
        let text = std::fs::read_to_string(&full)
            .map_err(|e| ParseError::Io { span: span.clone(), path: path.into(), reason: e.to_string() })?;
        let mut sub = Parser::new(&text, &full.display().to_string(), full.parent().map(Path::to_path_buf))?;
        sub.depth = self.depth + 1;
        // An included file is either a bare item list or a whole theory whose items are spliced.
        if sub.is_word("theory") {
            sub.pos += 1;
            sub.word()?;
            sub.expect_punct("{")?;
            sub.items(acc, true)?;
            sub.expect_punct("}")?;
            if !sub.at_eof() {
                return sub.error("unexpected input after theory");
            }
            Ok(())
        } else {
            sub.items(acc, false)
        }
    }

    fn theory(&mut self) -> Result<Theory, ParseError> {
        self.expect_word("theory")?;
        let name = self.word()?;
        self.expect_punct("{")?;
        let mut acc = TheoryAcc::default();
        self.items(&mut acc, true)?;
        self.expect_punct("}")?;
        if !self.at_eof() {
            return self.error(format!("unexpected {} after theory", self.describe()));
        }
        acc.build(&name)
    }
}

#[derive(Default)]
struct TheoryAcc {
    sorts: Vec<(String, SourceSpan)>,
    funcs: Vec<(FuncDecl, SourceSpan)>,
    rels: Vec<(RelDecl, SourceSpan)>,
    axioms: Vec<(Axiom, SourceSpan)>,
}

impl TheoryAcc {
    fn build(self, name: &str) -> Result<Theory, ParseError> {
        let invalid = |span: &SourceSpan, source: LogicError| ParseError::Validation { span: span.clone(), source };
        let mut sig = Signature::new();
        let mut seen = BTreeSet::new();
        for (s, span) in &self.sorts {
            if !seen.insert(s.clone()) {
                return Err(invalid(span, LogicError::Duplicate { kind: "sort", name: s.clone() }));
            }
            sig.sorts.push(s.clone());
        }
        let check_sorts = |sorts: &[String], span: &SourceSpan, at: &str| -> Result<(), ParseError> {
            for s in sorts {
                if !seen.contains(s) {
                    return Err(invalid(span, LogicError::UnknownSymbol { kind: "sort", name: s.clone(), at: at.into() }));
                }
            }
            Ok(())
        };
        let mut names = BTreeSet::new();
        for (f, span) in &self.funcs {
            let mut all = f.args.clone();
            all.push(f.result.clone());
            check_sorts(&all, span, &f.name)?;
            if !names.insert(("fun", f.name.clone())) {
                return Err(invalid(span, LogicError::Duplicate { kind: "function", name: f.name.clone() }));
            }
            sig.functions.push(f.clone());
        }
        for (r, span) in &self.rels {
            check_sorts(&r.args, span, &r.name)?;
            if !names.insert(("rel", r.name.clone())) {
                return Err(invalid(span, LogicError::Duplicate { kind: "relation", name: r.name.clone() }));
            }
            sig.relations.push(r.clone());
        }
        let mut theory = Theory::new(name, sig);
        let mut ax_names = BTreeSet::new();
        for (ax, span) in self.axioms {
            if !ax_names.insert(ax.name.clone()) {
                return Err(invalid(&span, LogicError::Duplicate { kind: "axiom", name: ax.name }));
            }
            validate_sequent(&theory.signature, &ax.sequent).map_err(|e| invalid(&span, e))?;
            theory.axioms.push(ax);
        }
        theory.signature.check().map_err(|e| invalid(&SourceSpan { file: String::new(), line: 0, col_start: 0, col_end: 0 }, e))?;
        Ok(theory)
    }
}

const INPUT: &str = "<input>";

/// Parse and validate a theory. `include` paths resolve against the
/// current directory.
pub fn parse_theory(text: &str) -> Result<Theory, ParseError> {
    Parser::new(text, INPUT, None)?.theory()
}

/// Parse a theory file; `include` paths resolve against its directory.
pub fn parse_theory_file(path: &Path) -> Result<Theory, ParseError> {
    let text = read(path)?;
    Parser::new(&text, &path.display().to_string(), path.parent().map(Path::to_path_buf))?.theory()
}

fn read(path: &Path) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        span: SourceSpan { file: path.display().to_string(), line: 0, col_start: 0, col_end: 0 },
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Parse `[ctx]. φ` and check it over the signature.
pub fn parse_object(text: &str, sig: &Signature) -> Result<FormulaInContext, ParseError> {
    let mut p = Parser::new(text, INPUT, None)?;
    let span = p.span();
    let o = p.object()?;
    if !p.at_eof() {
        return p.error(format!("unexpected {}", p.describe()));
    }
    validate_object(sig, &o).map_err(|source| ParseError::Validation { span, source })?;
    Ok(o)
}

/// Parse `φ` in the given context.
pub fn parse_formula(text: &str, sig: &Signature, ctx: &Context) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, INPUT, None)?;
    let span = p.span();
    let f = p.formula()?;
    if !p.at_eof() {
        return p.error(format!("unexpected {}", p.describe()));
    }
    validate_formula(sig, ctx, &f).map_err(|source| ParseError::Validation { span, source })?;
    Ok(f)
}

/// Parse `[ctx] φ => ψ`.
pub fn parse_sequent(text: &str, sig: &Signature) -> Result<Sequent, ParseError> {
    let mut p = Parser::new(text, INPUT, None)?;
    let span = p.span();
    let s = p.sequent_body()?;
    if !p.at_eof() {
        return p.error(format!("unexpected {}", p.describe()));
    }
    validate_sequent(sig, &s).map_err(|source| ParseError::Validation { span, source })?;
    Ok(s)
}

// ---------------------------------------------------------------------------
// Structures

enum RawElem {
    Label(String),
    Tuple(Vec<String>),
}

struct RawEntry {
    name: String,
    span: SourceSpan,
    items: Vec<(RawElem, Option<String>, SourceSpan)>,
}

impl Parser {
    fn label(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.word(),
        }
    }

    fn raw_elem(&mut self) -> Result<RawElem, ParseError> {
        if self.eat_punct("(") {
            let mut parts = Vec::new();
            if !self.eat_punct(")") {
                loop {
                    parts.push(self.label()?);
                    if self.eat_punct(")") {
                        break;
                    }
                    self.expect_punct(",")?;
                }
            }
            Ok(RawElem::Tuple(parts))
        } else {
            Ok(RawElem::Label(self.label()?))
        }
    }

    fn structure_entries(&mut self) -> Result<Vec<RawEntry>, ParseError> {
        let wrapped = self.is_word("structure");
        if wrapped {
            self.pos += 1;
            if !self.is_punct("{") {
                self.word()?;
            }
            self.expect_punct("{")?;
        }
        let mut out = Vec::new();
        loop {
            if wrapped && self.eat_punct("}") {
                if !self.at_eof() {
                    return self.error(format!("unexpected {} after structure", self.describe()));
                }
                return Ok(out);
            }
            if self.at_eof() {
                return if wrapped { self.error("expected `}`") } else { Ok(out) };
            }
            let span = self.span();
            let name = self.ident()?;
            self.expect_punct("=")?;
            self.expect_punct("{")?;
            let mut items = Vec::new();
            if !self.eat_punct("}") {
                loop {
                    let s = self.span();
                    let e = self.raw_elem()?;
                    let v = if self.eat_punct("->") { Some(self.label()?) } else { None };
                    items.push((e, v, s));
                    if self.eat_punct("}") {
                        break;
                    }
                    self.expect_punct(",")?;
                }
            }
            self.eat_punct(";");
            out.push(RawEntry { name, span, items });
        }
    }
}

/// Parse a finite structure over `sig`. Missing sorts are empty, missing
/// relations are empty; every function table must be total.
pub fn parse_structure(text: &str, sig: &Signature) -> Result<FiniteStructure, ParseError> {
    let mut p = Parser::new(text, INPUT, None)?;
    let entries = p.structure_entries()?;
    build_structure(entries, sig, &p.span())
}

pub fn parse_structure_file(path: &Path, sig: &Signature) -> Result<FiniteStructure, ParseError> {
    let text = read(path)?;
    let mut p = Parser::new(&text, &path.display().to_string(), None)?;
    let entries = p.structure_entries()?;
    build_structure(entries, sig, &p.span())
}

fn build_structure(entries: Vec<RawEntry>, sig: &Signature, end: &SourceSpan) -> Result<FiniteStructure, ParseError> {
    let syntax = |span: &SourceSpan, message: String| ParseError::Syntax { span: span.clone(), message };
    let mut by_name: BTreeMap<String, RawEntry> = BTreeMap::new();
    for e in entries {
        if sig.function(&e.name).is_none() && sig.relation(&e.name).is_none() && !sig.has_sort(&e.name) {
            return Err(syntax(&e.span, format!("`{}` is not a sort or symbol of the signature", e.name)));
        }
        if by_name.contains_key(&e.name) {
            return Err(syntax(&e.span, format!("`{}` is given twice", e.name)));
        }
        by_name.insert(e.name.clone(), e);
    }
    let mut carriers: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut index: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for s in &sig.sorts {
        let mut labels = Vec::new();
        let mut idx = BTreeMap::new();
        if let Some(e) = by_name.get(s) {
            for (el, v, span) in &e.items {
                let l = match (el, v) {
                    (RawElem::Label(l), None) => l.clone(),
                    _ => return Err(syntax(span, format!("carrier of {s} lists plain elements"))),
                };
                if idx.insert(l.clone(), labels.len()).is_some() {
                    return Err(syntax(span, format!("element `{l}` listed twice")));
                }
                labels.push(l);
            }
        }
        carriers.insert(s.clone(), labels);
        index.insert(s.clone(), idx);
    }
    let lookup = |sort: &str, label: &str, span: &SourceSpan| -> Result<usize, ParseError> {
        index[sort].get(label).copied().ok_or_else(|| ParseError::ElementOutOfCarrier {
            span: span.clone(),
            element: label.to_string(),
            sort: sort.to_string(),
        })
    };
    let tuple = |el: &RawElem, sorts: &[String], span: &SourceSpan| -> Result<Vec<usize>, ParseError> {
        let labels: Vec<String> = match el {
            RawElem::Label(l) => vec![l.clone()],
            RawElem::Tuple(ls) => ls.clone(),
        };
        if labels.len() != sorts.len() {
            return Err(syntax(span, format!("expected {} components, found {}", sorts.len(), labels.len())));
        }
        labels.iter().zip(sorts).map(|(l, s)| lookup(s, l, span)).collect()
    };
    let mut functions = BTreeMap::new();
    for f in &sig.functions {
        let sizes: Vec<usize> = f.args.iter().map(|a| carriers[a].len()).collect();
        let rows: usize = sizes.iter().product();
        let mut values: Vec<Option<usize>> = vec![None; rows];
        let span = by_name.get(&f.name).map(|e| e.span.clone()).unwrap_or_else(|| end.clone());
        if let Some(e) = by_name.get(&f.name) {
            for (el, v, s) in &e.items {
                let v = v.as_ref().ok_or_else(|| syntax(s, format!("function rows of {} need `->`", f.name)))?;
                let args = tuple(el, &f.args, s)?;
                let val = lookup(&f.result, v, s)?;
                let row = crate::semantics::row_index(&args, &sizes);
                match values[row] {
                    Some(old) if old != val => return Err(syntax(s, format!("conflicting rows for {}", f.name))),
                    _ => values[row] = Some(val),
                }
            }
        }
        let mut total = Vec::with_capacity(rows);
        for (row, v) in values.iter().enumerate() {
            match v {
                Some(v) => total.push(*v),
                None => {
                    let args = crate::semantics::row_args(row, &sizes);
                    let labels: Vec<&str> =
                        args.iter().zip(&f.args).map(|(a, s)| carriers[s][*a].as_str()).collect();
                    return Err(ParseError::PartialFunctionTable {
                        span,
                        function: f.name.clone(),
                        row: format!("({})", labels.join(", ")),
                    });
                }
            }
        }
        functions.insert(f.name.clone(), FuncTable { args: f.args.clone(), result: f.result.clone(), values: total });
    }
    let mut relations = BTreeMap::new();
    for r in &sig.relations {
        let mut tuples = BTreeSet::new();
        if let Some(e) = by_name.get(&r.name) {
            for (el, v, s) in &e.items {
                if v.is_some() {
                    return Err(syntax(s, format!("relation {} lists tuples, not rows", r.name)));
                }
                tuples.insert(tuple(el, &r.args, s)?);
            }
        }
        relations.insert(r.name.clone(), RelTable { args: r.args.clone(), tuples });
    }
    Ok(FiniteStructure { carriers, functions, relations })
}

// ---------------------------------------------------------------------------
// Morphisms

/// Parse a `.cohmor` morphism. Theory references are resolved by `resolve`.
/// The result is `Unchecked` unless it is literally an inclusion of axioms.
pub fn parse_morphism(
    text: &str,
    resolve: &mut dyn FnMut(&str) -> Result<Theory, String>,
) -> Result<TheoryMorphism, ParseError> {
    parse_morphism_in(text, INPUT, resolve)
}

pub fn parse_morphism_file(
    path: &Path,
    resolve: &mut dyn FnMut(&str) -> Result<Theory, String>,
) -> Result<TheoryMorphism, ParseError> {
    let text = read(path)?;
    parse_morphism_in(&text, &path.display().to_string(), resolve)
}

fn parse_morphism_in(
    text: &str,
    file: &str,
    resolve: &mut dyn FnMut(&str) -> Result<Theory, String>,
) -> Result<TheoryMorphism, ParseError> {
    let mut p = Parser::new(text, file, None)?;
    p.expect_word("morphism")?;
    let name = p.word()?;
    p.expect_punct(":")?;
    let mut theory_ref = |p: &mut Parser| -> Result<Theory, ParseError> {
        let span = p.span();
        let r = match p.peek() {
            Tok::Str(_) => p.string()?,
            _ => p.word()?,
        };
        resolve(&r).map_err(|reason| ParseError::Io { span, path: r, reason })
    };
    let source = theory_ref(&mut p)?;
    p.expect_punct("->")?;
    let target = theory_ref(&mut p)?;
    p.expect_punct("{")?;
    let mut sort_map = BTreeMap::new();
    let mut function_map = BTreeMap::new();
    let mut relation_map = BTreeMap::new();
    while !p.eat_punct("}") {
        let span = p.span();
        let kind = p.ident()?;
        let sym = p.ident()?;
        p.expect_punct("|->")?;
        let obj = p.object()?;
        let slot = match kind.as_str() {
            "sort" => &mut sort_map,
            "fun" => &mut function_map,
            "rel" => &mut relation_map,
            other => {
                return Err(ParseError::Syntax { span, message: format!("expected `sort`, `fun` or `rel`, found `{other}`") })
            }
        };
        if slot.insert(sym.clone(), obj).is_some() {
            return Err(ParseError::Syntax { span, message: format!("`{sym}` is mapped twice") });
        }
        p.eat_punct(";");
    }
    if !p.at_eof() {
        return p.error(format!("unexpected {} after morphism", p.describe()));
    }
    // Symbols without an explicit image keep their evident one.
    let evident = TheoryMorphism::inclusion(&name, &source, &target);
    for (k, v) in evident.sort_map {
        sort_map.entry(k).or_insert(v);
    }
    for (k, v) in evident.function_map {
        function_map.entry(k).or_insert(v);
    }
    for (k, v) in evident.relation_map {
        relation_map.entry(k).or_insert(v);
    }
    let inherited = source.axioms.iter().all(|a| target.axioms.iter().any(|b| b.sequent == a.sequent));
    let mut m = TheoryMorphism {
        name,
        source,
        target,
        sort_map,
        function_map,
        relation_map,
        verification: Verification::Unchecked,
    };
    let start = SourceSpan { file: file.into(), line: 1, col_start: 1, col_end: 1 };
    m.check_arity().map_err(|source| ParseError::Validation { span: start, source })?;
    if inherited && m.as_renaming().is_some_and(|r| r.sorts.iter().all(|(a, b)| a == b) && r.funcs.iter().all(|(a, b)| a == b) && r.rels.iter().all(|(a, b)| a == b)) {
        m.verification = Verification::Verified;
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Rendering

fn sorts_text(sorts: &[String]) -> String {
    sorts.join(" * ")
}

pub fn render_theory(t: &Theory) -> String {
    let sig = &t.signature;
    if sig.sorts.is_empty() && sig.functions.is_empty() && sig.relations.is_empty() && t.axioms.is_empty() {
        return format!("theory {} {{}}\n", t.name);
    }
    let mut out = format!("theory {} {{\n", t.name);
    for s in &sig.sorts {
        out.push_str(&format!("  sort {s}\n"));
    }
    for f in &sig.functions {
        if f.args.is_empty() {
            out.push_str(&format!("  fun {} : -> {}\n", f.name, f.result));
        } else {
            out.push_str(&format!("  fun {} : {} -> {}\n", f.name, sorts_text(&f.args), f.result));
        }
    }
    for r in &sig.relations {
        if r.args.is_empty() {
            out.push_str(&format!("  rel {}\n", r.name));
        } else {
            out.push_str(&format!("  rel {} : {}\n", r.name, sorts_text(&r.args)));
        }
    }
    for ax in &t.axioms {
        let s = &ax.sequent;
        out.push_str(&format!("  axiom {} {}: {} => {}\n", ax.name, s.context, s.lhs, s.rhs));
    }
    out.push_str("}\n");
    out
}

pub fn render_object(o: &FormulaInContext) -> String {
    o.to_string()
}

fn render_label(l: &str) -> String {
    let plain = !l.is_empty() && l.chars().all(is_word_char) && !l.starts_with('\'');
    if plain {
        l.to_string()
    } else {
        format!("\"{}\"", l.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

fn render_tuple(labels: &[String]) -> String {
    if labels.len() == 1 {
        render_label(&labels[0])
    } else {
        let parts: Vec<String> = labels.iter().map(|l| render_label(l)).collect();
        format!("({})", parts.join(", "))
    }
}

pub fn render_structure(m: &FiniteStructure, sig: &Signature) -> String {
    let mut out = String::from("structure {\n");
    for s in &sig.sorts {
        let labels: Vec<String> = m.carriers[s].iter().map(|l| render_label(l)).collect();
        out.push_str(&format!("  {s} = {{{}}};\n", labels.join(", ")));
    }
    for f in &sig.functions {
        let t = &m.functions[&f.name];
        let sizes = m.sizes(&f.args);
        let rows: Vec<String> = t
            .values
            .iter()
            .enumerate()
            .map(|(row, v)| {
                let args = crate::semantics::row_args(row, &sizes);
                let labels: Vec<String> = args.iter().zip(&f.args).map(|(a, s)| m.carriers[s][*a].clone()).collect();
                format!("{} -> {}", render_tuple(&labels), render_label(&m.carriers[&f.result][*v]))
            })
            .collect();
        out.push_str(&format!("  {} = {{{}}};\n", f.name, rows.join(", ")));
    }
    for r in &sig.relations {
        let tuples: Vec<String> = m.relations[&r.name]
            .tuples
            .iter()
            .map(|t| {
                let labels: Vec<String> = t.iter().zip(&r.args).map(|(a, s)| m.carriers[s][*a].clone()).collect();
                render_tuple(&labels)
            })
            .collect();
        out.push_str(&format!("  {} = {{{}}};\n", r.name, tuples.join(", ")));
    }
    out.push_str("}\n");
    out
}

/// Render a morphism; `source` and `target` are the references written in
/// the header.
pub fn render_morphism(m: &TheoryMorphism, source: &str, target: &str) -> String {
    let mut out = format!("morphism {} : {} -> {} {{\n", m.name, render_label(source), render_label(target));
    for s in &m.source.signature.sorts {
        out.push_str(&format!("  sort {s} |-> {}\n", m.sort_map[s]));
    }
    for f in &m.source.signature.functions {
        out.push_str(&format!("  fun {} |-> {}\n", f.name, m.function_map[&f.name]));
    }
    for r in &m.source.signature.relations {
        out.push_str(&format!("  rel {} |-> {}\n", r.name, m.relation_map[&r.name]));
    }
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------------------
// Finitely presented categories

impl Parser {
    fn category(&mut self) -> Result<FinCat, ParseError> {
        self.expect_word("category")?;
        self.word()?;
        self.expect_punct("{")?;
        let mut c = FinCat::new();
        while !self.eat_punct("}") {
            if self.is_word("object") {
                self.pos += 1;
                let o = self.ident()?;
                if c.objects.contains(&o) {
                    return self.error(format!("object `{o}` declared twice"));
                }
                c = c.with_object(&o);
            } else if self.is_word("arrow") {
                self.pos += 1;
                let f = self.ident()?;
                self.expect_punct(":")?;
                let span = self.span();
                let d = self.ident()?;
                self.expect_punct("->")?;
                let e = self.ident()?;
                if !c.objects.contains(&d) || !c.objects.contains(&e) {
                    return Err(ParseError::Syntax { span, message: format!("arrow `{f}` between undeclared objects") });
                }
                if c.arrows.iter().any(|a| a.name == f) {
                    return self.error(format!("arrow `{f}` declared twice"));
                }
                c = c.with_arrow(&f, &d, &e);
            } else if self.is_word("compose") {
                self.pos += 1;
                let f = self.ident()?;
                self.expect_word("then")?;
                let g = self.ident()?;
                self.expect_punct("=")?;
                let h = self.ident()?;
                c = c.with_composite(&f, &g, &h);
            } else {
                return self.error(format!("expected `object`, `arrow`, `compose` or `}}`, found {}", self.describe()));
            }
        }
        if !self.at_eof() {
            return self.error(format!("unexpected {} after category", self.describe()));
        }
        Ok(c)
    }
}

/// Parse `category N { object X  arrow f : X -> Y  compose f then g = h }`.
/// Identities `id_X` are implicit.
pub fn parse_category(text: &str) -> Result<FinCat, ParseError> {
    Parser::new(text, INPUT, None)?.category()
}

/// JSON export; field names follow the AST types.
pub fn to_json<T: Serialize>(item: &T) -> String {
    serde_json::to_string_pretty(item).expect("AST values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_theory_round_trips() {
        let t = parse_theory("theory Empty {}").unwrap();
        assert!(t.signature.sorts.is_empty() && t.axioms.is_empty());
        assert_eq!(render_theory(&t), "theory Empty {}\n");
    }

    #[test]
    fn surjectivity_renders_in_surface_syntax() {
        let f = Formula::exists("a", "A", Formula::eq(Term::var("b"), Term::app("p", vec![Term::var("a")])));
        assert_eq!(f.to_string(), "exists a:A. b = p(a)");
    }

    #[test]
    fn empty_sides_are_top_and_bottom() {
        let t = parse_theory("theory T { sort A axiom e [a:A]: => axiom f [a:A]: a = a => }").unwrap();
        assert!(t.axioms[0].sequent.lhs.is_top() && t.axioms[0].sequent.rhs.is_bot());
        assert_eq!(t.axioms.len(), 2);
    }

    #[test]
    fn errors_carry_spans() {
        let e = parse_theory("theory T {\n  sort A\n  rel R : A * B\n}").unwrap_err();
        assert_eq!(e.span().line, 3);
        let e = parse_theory("theory T {\n  sort A\n  axiom x [a:A]: true => R(a)\n}").unwrap_err();
        assert!(matches!(e, ParseError::Validation { .. }));
        assert_eq!(e.span().line, 3);
        let e = parse_theory("theory T { sort A $ }").unwrap_err();
        assert_eq!(e.span().col_start, 19);
    }

    #[test]
    fn structure_defaults_and_errors() {
        let sig = Signature::new().with_sort("A").with_relation("R", &["A", "A"]);
        let m = parse_structure("A = {0,1}", &sig).unwrap();
        assert!(m.relations["R"].tuples.is_empty());
        let sig = sig.with_function("f", &["A"], "A");
        let e = parse_structure("A = {0,1}; f = {0 -> 2, 1 -> 0}", &sig).unwrap_err();
        assert!(matches!(e, ParseError::ElementOutOfCarrier { .. }));
        let e = parse_structure("A = {0,1}; f = {0 -> 1}", &sig).unwrap_err();
        assert!(matches!(e, ParseError::PartialFunctionTable { .. }));
    }

    #[test]
    fn singleton_connectives_and_nesting_round_trip() {
        let sig = Signature::new().with_sort("A").with_relation("P", &["A"]).with_relation("Q", &[]);
        let texts = [
            "[a:A]. &(P(a))",
            "[a:A]. |(P(a))",
            "[a:A]. (P(a) & P(a)) & P(a)",
            "[a:A]. (P(a) | Q()) & (exists b:A. P(b))",
            "[a:A]. P(a) & Q() | false",
            "[]. exists a:A, b:A. a = b",
        ];
        for t in texts {
            let o = parse_object(t, &sig).unwrap();
            assert_eq!(parse_object(&o.to_string(), &sig).unwrap(), o, "{t}");
        }
    }
}
