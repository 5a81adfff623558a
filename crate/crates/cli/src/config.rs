//! Line-based experiment configuration.
//!
//! ```text
//! [run]
//! command = verify-strichartz
//! [grid]
//! d = 3
//! n = 32
//! L = 32
//! ```
//!
//! `#` starts a comment. Parsing never stops at the first problem: every
//! error is collected with its line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use plate_lab::norms::is_admissible;
use plate_lab::{Exponent, Rational};

/// Allowed keys per section.
const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["command"]),
    ("grid", &["d", "n", "L"]),
    ("time", &["t_end", "m"]),
    ("indices", &["s", "q", "r", "alpha", "beta"]),
    ("ensemble", &["count", "seed"]),
    ("options", &["variant", "potential", "eps", "margin", "terms", "k", "cross_check", "den", "tail_tol", "width"]),
    ("output", &["dir"]),
];

/// Section owning an unqualified key, for command-line overrides.
pub fn section_of(key: &str) -> Option<&'static str> {
    SCHEMA.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Simulate,
    VerifyDispersive,
    VerifyStrichartz,
    KatoPonce,
    GroundState,
    Counterexample,
    AdmissiblePairs,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::VerifyDispersive,
        Command::VerifyStrichartz,
        Command::KatoPonce,
        Command::GroundState,
        Command::Counterexample,
        Command::AdmissiblePairs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::VerifyDispersive => "verify-dispersive",
            Command::VerifyStrichartz => "verify-strichartz",
            Command::KatoPonce => "kato-ponce",
            Command::GroundState => "ground-state",
            Command::Counterexample => "counterexample",
            Command::AdmissiblePairs => "admissible-pairs",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == text)
    }

    /// Sections that must be present.
    fn required(self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["grid", "time"],
            Command::VerifyDispersive => &["grid", "time"],
            Command::VerifyStrichartz => &["grid", "time", "indices", "ensemble"],
            Command::KatoPonce => &["ensemble"],
            Command::GroundState => &["grid"],
            Command::Counterexample => &["grid", "indices"],
            Command::AdmissiblePairs => &["grid"],
        }
    }

    /// Whether the grid block needs `n` and `L` besides `d`.
    fn needs_full_grid(self) -> bool {
        matches!(self, Command::Simulate | Command::VerifyDispersive | Command::VerifyStrichartz)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One configuration problem; `line` is 1-based when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBlock {
    pub d: usize,
    pub n: Option<usize>,
    pub l: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBlock {
    pub t_end: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IndexBlock {
    pub s: Option<Rational>,
    pub q: Option<Exponent>,
    pub r: Option<Exponent>,
    pub alpha: Option<Exponent>,
    pub beta: Option<Exponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleBlock {
    pub count: usize,
    pub seed: u64,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub grid: Option<GridBlock>,
    pub time: Option<TimeBlock>,
    pub indices: IndexBlock,
    pub ensemble: Option<EnsembleBlock>,
    /// Free-form command options, validated by the command.
    pub options: BTreeMap<String, String>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn option(&self, key: &str) -> Option<&str> {
        self.options.get(key).map(String::as_str)
    }
}

type Raw = BTreeMap<String, BTreeMap<String, (String, usize)>>;

fn tokenize(text: &str, errors: &mut Vec<ConfigError>) -> Raw {
    let mut raw: Raw = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(err(Some(ln), format!("malformed section header `{line}`")));
                section = None;
                continue;
            };
            let name = name.trim();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                errors.push(err(Some(ln), format!("unknown section [{name}]")));
                section = None;
                continue;
            }
            raw.entry(name.to_string()).or_default();
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(err(Some(ln), format!("expected `key = value`, got `{line}`")));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.clone() else {
            errors.push(err(Some(ln), format!("key `{key}` outside any section")));
            continue;
        };
        let allowed = SCHEMA.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            errors.push(err(Some(ln), format!("unknown key `{key}` in [{sec}]")));
            continue;
        }
        let entries = raw.entry(sec.clone()).or_default();
        if let Some((_, first)) = entries.get(key) {
            errors.push(err(
                Some(ln),
                format!("duplicate key `{key}` in [{sec}] (lines {first} and {ln})"),
            ));
            continue;
        }
        entries.insert(key.to_string(), (value.to_string(), ln));
    }
    raw
}

struct Fields<'a> {
    raw: &'a Raw,
    errors: &'a mut Vec<ConfigError>,
}

impl Fields<'_> {
    fn get(&self, sec: &str, key: &str) -> Option<&(String, usize)> {
        self.raw.get(sec).and_then(|m| m.get(key))
    }

    fn parse<T>(&mut self, sec: &str, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Option<T> {
        let (v, ln) = self.get(sec, key)?.clone();
        match f(&v) {
            Some(x) => Some(x),
            None => {
                self.errors.push(err(Some(ln), format!("[{sec}] {key} = `{v}` is not {what}")));
                None
            }
        }
    }

    fn require<T>(&mut self, sec: &str, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Option<T> {
        if self.get(sec, key).is_none() {
            self.errors.push(err(None, format!("missing key `{key}` in [{sec}]")));
            return None;
        }
        self.parse(sec, key, what, f)
    }
}

fn positive_usize(s: &str) -> Option<usize> {
    s.parse::<usize>().ok().filter(|&v| v > 0)
}

fn positive_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0)
}

fn exponent(s: &str) -> Option<Exponent> {
    Exponent::parse(s).ok()
}

fn rational(s: &str) -> Option<Rational> {
    plate_lab::exponent::parse_rational(s).ok()
}

/// Parses and validates; returns every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let raw = tokenize(text, &mut errors);
    let mut f = Fields { raw: &raw, errors: &mut errors };

    let command = match f.get("run", "command").cloned() {
        None => {
            f.errors.push(err(None, "missing key `command` in [run]"));
            None
        }
        Some((v, ln)) => {
            let c = Command::parse(&v);
            if c.is_none() {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                f.errors.push(err(Some(ln), format!("unknown command `{v}` (expected one of {})", names.join(", "))));
            }
            c
        }
    };

    let grid = raw.contains_key("grid").then(|| {
        let d = f.require("grid", "d", "a positive integer", positive_usize);
        let n = f.parse("grid", "n", "a positive integer", positive_usize);
        let l = f.parse("grid", "L", "a positive number", positive_f64);
        d.map(|d| GridBlock { d, n, l })
    });
    let grid = grid.flatten();
    let time = raw.contains_key("time").then(|| {
        let t_end = f.require("time", "t_end", "a positive number", positive_f64);
        let m = f.require("time", "m", "an integer >= 2", |s| s.parse::<usize>().ok().filter(|&v| v >= 2));
        Some(TimeBlock { t_end: t_end?, m: m? })
    });
    let time = time.flatten();
    let indices = IndexBlock {
        s: f.parse("indices", "s", "a rational number", rational),
        q: f.parse("indices", "q", "an exponent", exponent),
        r: f.parse("indices", "r", "an exponent", exponent),
        alpha: f.parse("indices", "alpha", "an exponent", exponent),
        beta: f.parse("indices", "beta", "an exponent", exponent),
    };
    let ensemble = raw.contains_key("ensemble").then(|| {
        let count = f.require("ensemble", "count", "a positive integer", positive_usize);
        let seed = f.require("ensemble", "seed", "a non-negative integer", |s| s.parse::<u64>().ok());
        Some(EnsembleBlock { count: count?, seed: seed? })
    });
    let ensemble = ensemble.flatten();
    let options: BTreeMap<String, String> = raw
        .get("options")
        .map(|m| m.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect())
        .unwrap_or_default();
    let output = f.get("output", "dir").map(|(v, _)| PathBuf::from(v));

    if let Some(c) = command {
        for sec in c.required() {
            if !raw.contains_key(*sec) {
                errors.push(err(None, format!("command `{c}` needs a [{sec}] section")));
            }
        }
        if c.needs_full_grid() && raw.contains_key("grid") {
            for key in ["n", "L"] {
                if raw["grid"].get(key).is_none() {
                    errors.push(err(None, format!("command `{c}` needs `{key}` in [grid]")));
                }
            }
        }
        validate_indices(c, grid.as_ref(), &indices, &raw, &mut errors);
    }

    if errors.is_empty() {
        Ok(ExperimentConfig {
            command: command.expect("checked"),
            grid,
            time,
            indices,
            ensemble,
            options,
            output,
        })
    } else {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        Err(errors)
    }
}

fn line_of(raw: &Raw, sec: &str, key: &str) -> Option<usize> {
    raw.get(sec).and_then(|m| m.get(key)).map(|(_, l)| *l)
}

/// Index checks delegated to the library validators, run before any
/// numerical work.
fn validate_indices(c: Command, grid: Option<&GridBlock>, idx: &IndexBlock, raw: &Raw, errors: &mut Vec<ConfigError>) {
    let Some(d) = grid.map(|g| g.d) else { return };
    match c {
        Command::VerifyStrichartz => {
            for (key, v) in [("q", idx.q.is_some()), ("r", idx.r.is_some())] {
                if !v && line_of(raw, "indices", key).is_none() {
                    errors.push(err(None, format!("command `{c}` needs `{key}` in [indices]")));
                }
            }
            if let (Some(q), Some(r)) = (idx.q, idx.r) {
                let v = is_admissible(q, r, d);
                if !v.ok {
                    errors.push(err(
                        line_of(raw, "indices", "q"),
                        format!("(q, r, d) = ({q}, {r}, {d}) is not admissible: {}", v.reason),
                    ));
                }
            }
        }
        Command::Counterexample => {
            for key in ["s", "q", "r", "alpha", "beta"] {
                if line_of(raw, "indices", key).is_none() {
                    errors.push(err(None, format!("command `{c}` needs `{key}` in [indices]")));
                }
            }
            if let (Some(q), Some(r)) = (idx.q, idx.r) {
                let v = is_admissible(q, r, d);
                if !v.ok {
                    errors.push(err(
                        line_of(raw, "indices", "q"),
                        format!("(q, r, d) = ({q}, {r}, {d}) is not admissible: {}", v.reason),
                    ));
                } else if q.is_infinite() {
                    errors.push(err(line_of(raw, "indices", "q"), "the pair (inf, 2) cannot exhibit growth"));
                }
            }
            if let (Some(a), Some(b), Some(s)) = (idx.alpha, idx.beta, idx.s) {
                if let Err(e) = plate_lab::counterexample::admissibility_gap(a, b, s, d) {
                    errors.push(err(line_of(raw, "indices", "alpha"), e.to_string()));
                }
            }
        }
        _ => {}
    }
}
