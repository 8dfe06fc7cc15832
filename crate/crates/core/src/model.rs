//! Text models and session scripts.
//!
//! One line-oriented language serves both. A model declares variables,
//! conditionals and priors, optionally split into `step` blocks; a script
//! may additionally retract, query, explain, check, export and assert
//! expectations. `#` starts a comment.
//!
//! ```text
//! variable fire { yes no }
//! conditional smoke=yes | fire=yes : [0.9, 0.9]
//! prior fire=yes : [0.7, 0.9]
//! step refine
//! prior fire=yes : 0.8
//! expect smoke=yes : [0.72, 0.92] tol 5e-4
//! ```

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::{Bound, ClauseOrigin, Engine};
use crate::interval::IntervalProb;
use crate::network::{ConditionalDecl, Network, NetworkError, PriorDecl, StateId, StateRef};

/// The alarm example: two root variables, four children, three steps.
pub const FIRE_MODEL: &str = include_str!("../models/fire.ibn");
/// The same model with an `expect` line for every state after every step.
pub const FIRE_SCRIPT: &str = include_str!("../models/fire_example.ibn");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Dot => "dot",
            ExportFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Variable { name: String, states: Vec<String> },
    Conditional(ConditionalDecl),
    Prior(PriorDecl),
    /// A user clause; `false` marks a negated state.
    Assert { literals: Vec<(bool, StateRef)>, prob: IntervalProb },
    Step(String),
    Load(String),
    Retract(StateRef),
    Explain { state: StateRef, bound: Bound },
    Show(Option<String>),
    Check,
    Export { format: ExportFormat, path: String },
    Expect { state: StateRef, prob: IntervalProb, tol: f64 },
}

impl Statement {
    /// Declarations may appear in model files; everything else is a script
    /// command.
    pub fn is_declaration(&self) -> bool {
        matches!(
            self,
            Statement::Variable { .. }
                | Statement::Conditional(_)
                | Statement::Prior(_)
                | Statement::Assert { .. }
                | Statement::Step(_)
        )
    }

    fn keyword(&self) -> &'static str {
        match self {
            Statement::Variable { .. } => "variable",
            Statement::Conditional(_) => "conditional",
            Statement::Prior(_) => "prior",
            Statement::Assert { .. } => "assert",
            Statement::Step(_) => "step",
            Statement::Load(_) => "load",
            Statement::Retract(_) => "retract",
            Statement::Explain { .. } => "explain",
            Statement::Show(_) => "show",
            Statement::Check => "check",
            Statement::Export { .. } => "export",
            Statement::Expect { .. } => "expect",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub line: usize,
    pub statement: Statement,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub lines: Vec<Located>,
}

impl Document {
    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.lines.iter().map(|l| &l.statement)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

// ---- lexing -------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Sym(char),
    /// Anything else; legal only inside a raw path or label.
    Other(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

const SYMBOLS: &[char] = &['{', '}', '=', '|', '^', ':', '[', ']', ',', '~'];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-' | '+')
}

/// Strips a trailing comment.
fn code_part(line: &str) -> &str {
    line.split_once('#').map_or(line, |(code, _)| code)
}

fn lex(line: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let chars: Vec<char> = code_part(line).chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if SYMBOLS.contains(&c) {
            out.push(Token {
                tok: Tok::Sym(c),
                column: i + 1,
            });
            i += 1;
        } else if is_word_char(c) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Word(chars[start..i].iter().collect()),
                column: start + 1,
            });
        } else {
            out.push(Token {
                tok: Tok::Other(c),
                column: i + 1,
            });
            i += 1;
        }
    }
    out
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    /// Column just past the last token, for errors at end of line.
    end: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn error_at(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        match self.tokens.get(self.pos) {
            Some(Token {
                tok: Tok::Other(c),
                column,
            }) => self.error_at(*column, format!("unexpected character {c:?}")),
            Some(t) => self.error_at(t.column, message),
            None => self.error_at(self.end, message),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn word(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected text at end of line"))
        }
    }

    /// Raw remainder of the line from the current token, comment removed.
    fn rest(&mut self, what: &str) -> Result<String, ParseError> {
        let Some(t) = self.tokens.get(self.pos) else {
            return Err(self.error(format!("expected {what}")));
        };
        let code: String = code_part(self.text).chars().skip(t.column - 1).collect();
        self.pos = self.tokens.len();
        Ok(code.trim().to_string())
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        let column = self.tokens.get(self.pos).map_or(self.end, |t| t.column);
        let w = self.word(what)?;
        w.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.error_at(column, format!("{w:?} is not a number")))
    }

    fn probability(&mut self) -> Result<f64, ParseError> {
        let column = self.tokens.get(self.pos).map_or(self.end, |t| t.column);
        let p = self.number("a probability")?;
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(self.error_at(column, format!("probability {p} is outside [0, 1]")))
        }
    }

    /// `p` or `[lo, hi]` (the comma is optional).
    fn interval(&mut self) -> Result<IntervalProb, ParseError> {
        let column = self.tokens.get(self.pos).map_or(self.end, |t| t.column);
        if self.eat('[') {
            let lo = self.probability()?;
            self.eat(',');
            let hi = self.probability()?;
            self.sym(']')?;
            if lo > hi {
                return Err(self.error_at(column, format!("interval [{lo}, {hi}] has lo > hi")));
            }
            IntervalProb::new(lo, hi).map_err(|e| self.error_at(column, e.to_string()))
        } else {
            let p = self.probability()?;
            IntervalProb::point(p).map_err(|e| self.error_at(column, e.to_string()))
        }
    }

    /// `var=state`
    fn state_ref(&mut self) -> Result<StateRef, ParseError> {
        let v = self.word("a variable name")?;
        self.sym('=')?;
        let s = self.word("a state name")?;
        Ok((v, s))
    }
}

fn parse_line(text: &str, line: usize) -> Result<Option<Statement>, ParseError> {
    let tokens = lex(text);
    if tokens.is_empty() {
        return Ok(None);
    }
    let end = code_part(text).trim_end().chars().count() + 1;
    let mut c = Cursor {
        tokens: &tokens,
        pos: 0,
        line,
        end,
        text,
    };
    let keyword = c.word("a directive")?;
    let stmt = match keyword.as_str() {
        "variable" => {
            let name = c.word("a variable name")?;
            c.sym('{')?;
            let mut states = Vec::new();
            while !c.eat('}') {
                if c.at_end() {
                    return Err(c.error("expected '}'"));
                }
                states.push(c.word("a state name")?);
            }
            if states.is_empty() {
                return Err(c.error_at(tokens[1].column, "a variable needs states"));
            }
            Statement::Variable { name, states }
        }
        "conditional" => {
            let child = c.state_ref()?;
            c.sym('|')?;
            let mut parents = vec![c.state_ref()?];
            while c.eat('^') {
                parents.push(c.state_ref()?);
            }
            c.sym(':')?;
            let prob = c.interval()?;
            Statement::Conditional(ConditionalDecl { child, parents, prob })
        }
        "prior" => {
            let state = c.state_ref()?;
            c.sym(':')?;
            let prob = c.interval()?;
            Statement::Prior(PriorDecl { state, prob })
        }
        "assert" => {
            let mut literals = Vec::new();
            loop {
                let positive = !c.eat('~');
                literals.push((positive, c.state_ref()?));
                if !c.eat('|') {
                    break;
                }
            }
            c.sym(':')?;
            let prob = c.interval()?;
            Statement::Assert { literals, prob }
        }
        "step" => Statement::Step(c.rest("a step label")?),
        "load" => Statement::Load(c.rest("a path")?),
        "retract" => Statement::Retract(c.state_ref()?),
        "explain" => {
            let state = c.state_ref()?;
            let column = c.tokens.get(c.pos).map_or(c.end, |t| t.column);
            let bound = match c.word("'lower' or 'upper'")?.as_str() {
                "lower" => Bound::Lower,
                "upper" => Bound::Upper,
                other => return Err(c.error_at(column, format!("expected 'lower' or 'upper', found {other:?}"))),
            };
            Statement::Explain { state, bound }
        }
        "show" => Statement::Show(if c.at_end() { None } else { Some(c.word("a variable name")?) }),
        "check" => Statement::Check,
        "export" => {
            let column = c.tokens.get(c.pos).map_or(c.end, |t| t.column);
            let format = match c.word("'dot' or 'json'")?.as_str() {
                "dot" => ExportFormat::Dot,
                "json" => ExportFormat::Json,
                other => return Err(c.error_at(column, format!("unknown export format {other:?}"))),
            };
            Statement::Export {
                format,
                path: c.rest("a path")?,
            }
        }
        "expect" => {
            let state = c.state_ref()?;
            c.sym(':')?;
            let prob = c.interval()?;
            let column = c.tokens.get(c.pos).map_or(c.end, |t| t.column);
            if c.word("'tol'")? != "tol" {
                return Err(c.error_at(column, "expected 'tol'"));
            }
            let tol = c.number("a tolerance")?;
            if tol < 0.0 {
                return Err(c.error("tolerance must be non-negative"));
            }
            Statement::Expect { state, prob, tol }
        }
        other => return Err(c.error_at(tokens[0].column, format!("unknown directive {other:?}"))),
    };
    c.finish()?;
    Ok(Some(stmt))
}

/// Parses a script: declarations and commands.
pub fn parse_script(text: &str) -> Result<Document, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(statement) = parse_line(raw, i + 1)? {
            lines.push(Located { line: i + 1, statement });
        }
    }
    Ok(Document { lines })
}

/// Parses a model: declarations and `step` blocks only.
pub fn parse_model(text: &str) -> Result<Document, ParseError> {
    let doc = parse_script(text)?;
    if let Some(l) = doc.lines.iter().find(|l| !l.statement.is_declaration()) {
        return Err(ParseError {
            line: l.line,
            column: 1,
            message: format!("'{}' is a script command, not a model declaration", l.statement.keyword()),
        });
    }
    Ok(doc)
}

// ---- printing -----------------------------------------------------------------

fn print_interval(p: IntervalProb) -> String {
    format!("[{}, {}]", p.lo(), p.hi())
}

fn print_ref((v, s): &StateRef) -> String {
    format!("{v}={s}")
}

/// Canonical text of one statement; parsing it gives the statement back.
pub fn print_statement(s: &Statement) -> String {
    match s {
        Statement::Variable { name, states } => format!("variable {name} {{ {} }}", states.join(" ")),
        Statement::Conditional(c) => {
            let parents: Vec<String> = c.parents.iter().map(print_ref).collect();
            format!(
                "conditional {} | {} : {}",
                print_ref(&c.child),
                parents.join(" ^ "),
                print_interval(c.prob)
            )
        }
        Statement::Prior(p) => format!("prior {} : {}", print_ref(&p.state), print_interval(p.prob)),
        Statement::Assert { literals, prob } => {
            let lits: Vec<String> = literals
                .iter()
                .map(|(pos, r)| format!("{}{}", if *pos { "" } else { "~" }, print_ref(r)))
                .collect();
            format!("assert {} : {}", lits.join(" | "), print_interval(*prob))
        }
        Statement::Step(label) => format!("step {label}"),
        Statement::Load(path) => format!("load {path}"),
        Statement::Retract(r) => format!("retract {}", print_ref(r)),
        Statement::Explain { state, bound } => format!("explain {} {bound}", print_ref(state)),
        Statement::Show(None) => "show".to_string(),
        Statement::Show(Some(v)) => format!("show {v}"),
        Statement::Check => "check".to_string(),
        Statement::Export { format, path } => format!("export {format} {path}"),
        Statement::Expect { state, prob, tol } => {
            format!("expect {} : {} tol {tol}", print_ref(state), print_interval(*prob))
        }
    }
}

pub fn print_document(doc: &Document) -> String {
    let mut out = String::new();
    for s in doc.statements() {
        out.push_str(&print_statement(s));
        out.push('\n');
    }
    out
}

// ---- sessions -----------------------------------------------------------------

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{}: {source}", .file.display())]
    Parse { file: PathBuf, source: ParseError },
    #[error("line {line}: {message}")]
    Input { line: usize, message: String },
    #[error("line {line}: {path}: {source}")]
    Io {
        line: usize,
        path: String,
        source: std::io::Error,
    },
}

/// Outcome of a finished run, mapped to process exit codes 0, 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    ExpectationFailed,
    Contradiction,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::ExpectationFailed => 1,
            RunStatus::Contradiction => 2,
        }
    }
}

/// One network plus the transcript of everything run against it.
pub struct Session {
    network: Network,
    transcript: String,
    base_dir: PathBuf,
    failures: usize,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(".")
    }
}

impl Session {
    /// Relative `load` and `export` paths resolve against `base_dir`.
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Session {
            network: Network::new(),
            transcript: String::new(),
            base_dir: base_dir.into(),
            failures: 0,
        }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn engine(&self) -> &Engine {
        self.network.engine()
    }

    pub fn transcript(&self) -> &str {
        &self.transcript
    }

    /// Drains the transcript, e.g. after each REPL line.
    pub fn take_transcript(&mut self) -> String {
        std::mem::take(&mut self.transcript)
    }

    pub fn expectation_failures(&self) -> usize {
        self.failures
    }

    pub fn status(&self) -> RunStatus {
        if self.failures > 0 {
            RunStatus::ExpectationFailed
        } else if self.engine().contradiction().is_some() || self.engine().check_consistency().is_err() {
            RunStatus::Contradiction
        } else {
            RunStatus::Ok
        }
    }

    pub fn run(&mut self, doc: &Document) -> Result<(), SessionError> {
        for l in &doc.lines {
            self.execute(&l.statement, l.line)?;
        }
        Ok(())
    }

    /// Parses and runs script text.
    pub fn run_text(&mut self, text: &str, file: &Path) -> Result<(), SessionError> {
        let doc = parse_script(text).map_err(|source| SessionError::Parse {
            file: file.to_path_buf(),
            source,
        })?;
        self.run(&doc)
    }

    fn state(&self, r: &StateRef, line: usize) -> Result<StateId, SessionError> {
        self.network.state(&r.0, &r.1).map_err(|e| SessionError::Input {
            line,
            message: e.to_string(),
        })
    }

    /// Contradictions go to the transcript; every other network error aborts.
    fn absorb<T>(&mut self, r: Result<T, NetworkError>, line: usize) -> Result<(), SessionError> {
        match r {
            Ok(_) => Ok(()),
            Err(e) => match e.contradiction() {
                Some(report) => {
                    let text = self.engine().describe_contradiction(report);
                    let _ = writeln!(self.transcript, "line {line}: {text}");
                    Ok(())
                }
                None => Err(SessionError::Input {
                    line,
                    message: e.to_string(),
                }),
            },
        }
    }

    pub fn execute(&mut self, stmt: &Statement, line: usize) -> Result<(), SessionError> {
        match stmt {
            Statement::Variable { name, states } => {
                let states: Vec<&str> = states.iter().map(String::as_str).collect();
                let r = self.network.define_variable(name, &states);
                self.absorb(r, line)
            }
            Statement::Conditional(c) => {
                let child = self.state(&c.child, line)?;
                let parents = c
                    .parents
                    .iter()
                    .map(|p| self.state(p, line))
                    .collect::<Result<Vec<_>, _>>()?;
                let r = self.network.add_conditional(child, &parents, c.prob);
                self.absorb(r, line)
            }
            Statement::Prior(p) => {
                let s = self.state(&p.state, line)?;
                let r = self.network.reset_prior(s, p.prob);
                self.absorb(r, line)
            }
            Statement::Assert { literals, prob } => {
                let lits = literals
                    .iter()
                    .map(|(pos, r)| self.state(r, line).map(|s| (*pos, s)))
                    .collect::<Result<Vec<_>, _>>()?;
                let r = self.network.assert_clause(&lits, *prob);
                self.absorb(r, line)
            }
            Statement::Step(label) => {
                let _ = writeln!(self.transcript, "== step {label} ==");
                Ok(())
            }
            Statement::Load(path) => {
                let full = self.base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|source| SessionError::Io {
                    line,
                    path: path.clone(),
                    source,
                })?;
                let doc = parse_model(&text).map_err(|source| SessionError::Parse { file: full, source })?;
                self.run(&doc)
            }
            Statement::Retract(r) => {
                let s = self.state(r, line)?;
                let r = self.network.retract_prior(s);
                self.absorb(r, line)
            }
            Statement::Explain { state, bound } => {
                let s = self.state(state, line)?;
                let tree = self.network.explain_state(s, *bound);
                let _ = writeln!(self.transcript, "> {}", print_statement(stmt));
                self.transcript.push_str(&tree.render(self.network.engine()));
                Ok(())
            }
            Statement::Show(var) => {
                let _ = writeln!(self.transcript, "> {}", print_statement(stmt));
                let text = match var {
                    Some(v) => {
                        let id = self.network.variable_id(v).ok_or_else(|| SessionError::Input {
                            line,
                            message: NetworkError::UnknownVariable(v.clone()).to_string(),
                        })?;
                        show_variable(&self.network, id.0 as usize)
                    }
                    None => (0..self.network.variables().len())
                        .map(|i| show_variable(&self.network, i))
                        .collect(),
                };
                self.transcript.push_str(&text);
                Ok(())
            }
            Statement::Check => {
                let _ = writeln!(self.transcript, "> check");
                let text = match self.engine().contradiction().cloned().map_or_else(
                    || self.engine().check_consistency(),
                    Err,
                ) {
                    Ok(()) => "OK".to_string(),
                    Err(report) => self.engine().describe_contradiction(&report),
                };
                let _ = writeln!(self.transcript, "{text}");
                Ok(())
            }
            Statement::Export { format, path } => {
                let text = match format {
                    ExportFormat::Dot => to_dot(self.engine()),
                    ExportFormat::Json => to_json(self.engine()),
                };
                let full = self.base_dir.join(path);
                std::fs::write(&full, text).map_err(|source| SessionError::Io {
                    line,
                    path: path.clone(),
                    source,
                })?;
                let _ = writeln!(self.transcript, "> {}", print_statement(stmt));
                Ok(())
            }
            Statement::Expect { state, prob, tol } => {
                let s = self.state(state, line)?;
                let got = self.network.query_state(s);
                let pass = (got.lo() - prob.lo()).abs() <= *tol && (got.hi() - prob.hi()).abs() <= *tol;
                let name = self.network.state_name(s);
                if pass {
                    let _ = writeln!(self.transcript, "ok   {name} {got}");
                } else {
                    self.failures += 1;
                    let _ = writeln!(
                        self.transcript,
                        "FAIL line {line}: {name} {got}, expected {} tol {tol}",
                        prob
                    );
                }
                Ok(())
            }
        }
    }
}

fn show_variable(n: &Network, index: usize) -> String {
    let v = &n.variables()[index];
    let mut out = String::new();
    for (i, &a) in v.atoms.iter().enumerate() {
        let _ = writeln!(out, "{}:{} {}", v.name, v.states[i], n.engine().interval(a));
    }
    out
}

// ---- exporters ----------------------------------------------------------------

/// Shortest decimal up to six places: `0.91`, `1`, `0.0001`.
fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn short_interval(p: IntervalProb) -> String {
    format!("[{} {}]", short(p.lo()), short(p.hi()))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Bipartite graph: propositions as boxes (assumptions with a heavy
/// border), clauses as ovals, solid edges to positive literals and dashed
/// edges to negated ones.
pub fn to_dot(engine: &Engine) -> String {
    let mut out = String::from("graph ibn {\n");
    for a in engine.atoms() {
        let label = format!("{} {}", a.name, short_interval(engine.interval(a.id)));
        let border = if engine.assumption(a.id).is_some() { ", penwidth=3" } else { "" };
        let _ = writeln!(out, "  a{} [shape=box, label=\"{}\"{border}];", a.id.0, dot_escape(&label));
    }
    for rec in engine.clauses() {
        let tag = match &rec.origin {
            ClauseOrigin::Generated { dependency, .. } => format!("cond{dependency} "),
            ClauseOrigin::Sigma { .. } => "sigma ".to_string(),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "  c{} [shape=ellipse, label=\"{tag}{}\"];",
            rec.id.0,
            short_interval(rec.clause.prob())
        );
        for l in rec.clause.literals() {
            let style = if l.positive { "solid" } else { "dashed" };
            let _ = writeln!(out, "  a{} -- c{} [style={style}];", l.atom.0, rec.id.0);
        }
    }
    out.push_str("}\n");
    out
}

pub fn to_json(engine: &Engine) -> String {
    let mut s = serde_json::to_string_pretty(&engine.snapshot()).expect("snapshot serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_three_declarations() {
        let doc = parse_model(
            "variable fire { yes no }\nconditional smoke=yes | fire=yes : [0.9, 0.9]\nprior fire=yes : [0.7, 0.9]\n",
        )
        .unwrap();
        let s: Vec<&Statement> = doc.statements().collect();
        assert_eq!(
            s[0],
            &Statement::Variable {
                name: "fire".into(),
                states: vec!["yes".into(), "no".into()]
            }
        );
        match s[1] {
            Statement::Conditional(c) => {
                assert_eq!(c.child, ("smoke".into(), "yes".into()));
                assert_eq!(c.parents, vec![("fire".to_string(), "yes".to_string())]);
                assert_eq!(c.prob, IntervalProb::point(0.9).unwrap());
            }
            other => panic!("{other:?}"),
        }
        match s[2] {
            Statement::Prior(p) => assert_eq!(p.prob, IntervalProb::new(0.7, 0.9).unwrap()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn point_shorthand_and_conjunctive_parents() {
        let doc = parse_model("conditional alarm=yes | fire=yes ^ tampering=no : 0.99 # row 2").unwrap();
        let Statement::Conditional(c) = &doc.lines[0].statement else { panic!() };
        assert_eq!(c.parents.len(), 2);
        assert_eq!(c.prob, IntervalProb::point(0.99).unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_model("variable x { a b }\nprior x=a : [0.9, 0.7]").unwrap_err();
        assert_eq!((e.line, e.column), (2, 13));
        assert!(e.message.contains("lo > hi"));
        let e = parse_model("frobnicate x").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        let e = parse_model("prior x=a : 1.5").unwrap_err();
        assert_eq!((e.line, e.column), (1, 13));
        let e = parse_model("prior x=a [0.1 0.2]").unwrap_err();
        assert_eq!(e.column, 11);
        let e = parse_model("prior x=a : [0.1").unwrap_err();
        assert_eq!(e.column, 17);
        let e = parse_model("show").unwrap_err();
        assert!(e.message.contains("script command"));
        let e = parse_script("prior x=a : 0.5 extra").unwrap_err();
        assert_eq!(e.column, 17);
        let e = parse_script("variable x $").unwrap_err();
        assert_eq!(e.column, 12);
    }

    #[test]
    fn script_commands() {
        let doc = parse_script(
            "load models/fire.ibn\nretract fire=yes\nexplain smoke=yes lower\nshow\nshow alarm\ncheck\n\
             export dot out/step1.dot\nexpect smoke=yes : [0.722, 0.722] tol 5e-4\nassert ~a=x | b=y : 0.9\nstep two words",
        )
        .unwrap();
        let kinds: Vec<&str> = doc.statements().map(|s| s.keyword()).collect();
        assert_eq!(
            kinds,
            vec!["load", "retract", "explain", "show", "show", "check", "export", "expect", "assert", "step"]
        );
        assert_eq!(doc.lines[0].statement, Statement::Load("models/fire.ibn".into()));
        assert_eq!(doc.lines[9].statement, Statement::Step("two words".into()));
        let Statement::Expect { tol, .. } = doc.lines[7].statement else { panic!() };
        assert_eq!(tol, 5e-4);
    }

    #[test]
    fn print_parse_round_trip_on_bundled_files() {
        for text in [FIRE_MODEL, FIRE_SCRIPT] {
            let doc = parse_script(text).unwrap();
            let again = parse_script(&print_document(&doc)).unwrap();
            assert_eq!(
                doc.statements().collect::<Vec<_>>(),
                again.statements().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn bundled_script_passes() {
        let mut s = Session::default();
        s.run(&parse_script(FIRE_SCRIPT).unwrap()).unwrap();
        assert_eq!(s.status(), RunStatus::Ok, "{}", s.transcript());
        assert_eq!(s.transcript().matches("ok   ").count(), 36);
    }

    #[test]
    fn failing_expectation_sets_status() {
        let mut s = Session::default();
        s.run(
            &parse_script("variable x { a b }\nprior x=a : 0.3\nexpect x=b : 0.6 tol 1e-3\nexpect x=b : 0.7 tol 1e-3")
                .unwrap(),
        )
        .unwrap();
        assert_eq!(s.expectation_failures(), 1);
        assert_eq!(s.status(), RunStatus::ExpectationFailed);
        assert!(s.transcript().contains("FAIL line 3: x:b [0.700000 0.700000]"));
    }

    #[test]
    fn contradiction_then_check_names_both_priors() {
        let mut s = Session::default();
        s.run(&parse_script("variable x { yes no }\nprior x=yes : 0.6\nprior x=no : 0.5\ncheck").unwrap())
            .unwrap();
        assert_eq!(s.status(), RunStatus::Contradiction);
        let t = s.transcript();
        let check = t.split("> check").nth(1).unwrap();
        assert!(check.contains("x:yes [0.600000 0.600000]"), "{t}");
        assert!(check.contains("x:no [0.500000 0.500000]"), "{t}");
        s.run(&parse_script("retract x=no\ncheck").unwrap()).unwrap();
        assert_eq!(s.status(), RunStatus::Ok);
        assert!(s.transcript().trim_end().ends_with("OK"));
    }

    #[test]
    fn unknown_names_abort() {
        let mut s = Session::default();
        let e = s.run(&parse_script("variable x { a b }\nprior x=c : 0.5").unwrap()).unwrap_err();
        assert!(matches!(e, SessionError::Input { line: 2, .. }), "{e}");
    }

    #[test]
    fn dot_of_step_one_contains_cond_oval() {
        let mut s = Session::default();
        let doc = parse_script(FIRE_MODEL).unwrap();
        for l in doc.lines.iter().take_while(|l| !matches!(&l.statement, Statement::Step(x) if x != "1")) {
            s.execute(&l.statement, l.line).unwrap();
        }
        let dot = to_dot(s.engine());
        assert!(dot.contains("label=\"cond0 [0.91 0.93]\""), "{dot}");
        assert!(dot.contains("label=\"fire:yes [0.7 0.9]\", penwidth=3"));
        assert!(dot.contains("style=dashed"));
        assert_eq!(to_dot(&Engine::new()), "graph ibn {\n}\n");
    }

    #[test]
    fn json_round_trip() {
        let mut s = Session::default();
        s.run(&parse_script(FIRE_MODEL).unwrap()).unwrap();
        let text = to_json(s.engine());
        let back: crate::engine::Snapshot = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s.engine().snapshot());
    }

    #[test]
    fn short_numbers() {
        assert_eq!(short(0.91), "0.91");
        assert_eq!(short(1.0), "1");
        assert_eq!(short(0.0), "0");
        assert_eq!(short(0.0001), "0.0001");
        assert_eq!(short(0.9300000000001), "0.93");
    }
}
