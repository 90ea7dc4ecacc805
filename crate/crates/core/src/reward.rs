// SPDX-License-Identifier: Apache-2.0

//! Diversity-centric multi-objective reward for one model response:
//! syntax, function, diversity (class counts) and a context term built from
//! the format indicator and the reasoning-length ratio.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::canon::{partition, EquivClassPartition};
use crate::sim::{self, SimOutcome, VectorSuite, Verdict};
use crate::verilog::ast::SyntaxTree;
use crate::verilog::{check_syntax, SyntaxVerdict};

pub const REWARD_SCHEMA: &str = "reward/1";

/// Satisfaction threshold on the live component sum.
pub const DELTA: f64 = 4.0;
/// Number of earlier responses the length ratio averages over.
pub const HISTORY_LEN: usize = 4;
/// Upper clamp of the length ratio.
pub const MAX_LENGTH_RATIO: f64 = 4.0;

const THINK: (&str, &str) = ("<think>", "</think>");
const DESIGN: (&str, &str) = ("<total_design>", "</total_design>");

/// Byte range of a tagged span: `outer` includes the tags, `inner` does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Tagged {
    outer: (usize, usize),
    inner: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelResponse {
    pub raw_text: String,
    pub think_span: Option<String>,
    pub design_span: Option<String>,
    pub candidates: Vec<String>,
    /// Both tag pairs present with the reasoning closed before the design opens.
    pub well_formed: bool,
}

impl ModelResponse {
    /// Characters of the reasoning span, or of the whole text when it is absent.
    pub fn think_length(&self) -> usize {
        match &self.think_span {
            Some(t) => t.chars().count(),
            None => self.raw_text.chars().count(),
        }
    }
}

fn find_pair(text: &str, from: usize, tags: (&str, &str)) -> Option<Tagged> {
    let open = from + text[from..].find(tags.0)?;
    let body = open + tags.0.len();
    let close = body + text[body..].find(tags.1)?;
    Some(Tagged {
        outer: (open, close + tags.1.len()),
        inner: (body, close),
    })
}

pub fn parse_response(raw: &str) -> ModelResponse {
    let think = find_pair(raw, 0, THINK);
    let overlaps = |d: &Tagged| match think {
        Some(t) => d.outer.0 < t.outer.1 && t.outer.0 < d.outer.1,
        None => false,
    };
    let design = match find_pair(raw, 0, DESIGN) {
        Some(d) if overlaps(&d) => think.and_then(|t| find_pair(raw, t.outer.1, DESIGN)),
        other => other,
    };
    let slice = |t: Tagged| raw[t.inner.0..t.inner.1].to_string();
    let well_formed = matches!((think, design), (Some(t), Some(d)) if t.outer.1 <= d.outer.0);
    let search = design.map(|d| &raw[d.inner.0..d.inner.1]).unwrap_or(raw);
    ModelResponse {
        raw_text: raw.to_string(),
        think_span: think.map(slice),
        design_span: design.map(slice),
        candidates: extract_modules(search),
        well_formed,
    }
}

/// Top-level `module ... endmodule` blocks in order. A block opens at the
/// word `module` followed by an identifier and `(`, `#` or `;`; comments are
/// skipped everywhere and string literals inside blocks. Unterminated blocks
/// are dropped.
pub fn extract_modules(text: &str) -> Vec<String> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut i = 0usize;
    while i < b.len() {
        if b[i..].starts_with(b"//") {
            i += text[i..].find('\n').unwrap_or(b.len() - i);
            continue;
        }
        if b[i..].starts_with(b"/*") {
            i += text[i + 2..].find("*/").map(|p| p + 4).unwrap_or(b.len() - i);
            continue;
        }
        if depth > 0 && b[i] == b'"' {
            i += 1;
            while i < b.len() && b[i] != b'"' && b[i] != b'\n' {
                i += if b[i] == b'\\' { 2 } else { 1 };
            }
            i += 1;
            continue;
        }
        if is_ident_start(b[i]) && (i == 0 || !is_ident_char(b[i - 1])) {
            let end = i + b[i..].iter().take_while(|c| is_ident_char(**c)).count();
            let word = &text[i..end];
            if word == "module" && module_header_follows(text, end) {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            } else if word == "endmodule" && depth > 0 {
                depth -= 1;
                if depth == 0 {
                    out.push(text[start..end].to_string());
                }
            }
            i = end;
            continue;
        }
        i += 1;
    }
    out
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$'
}

fn module_header_follows(text: &str, from: usize) -> bool {
    let rest = text[from..].trim_start();
    let b = rest.as_bytes();
    if b.is_empty() || !is_ident_start(b[0]) || rest.len() == text.len() - from {
        return false;
    }
    let n = b.iter().take_while(|c| is_ident_char(**c)).count();
    matches!(rest[n..].trim_start().as_bytes().first(), Some(b'(' | b'#' | b';'))
}

/// The most recent reasoning lengths, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HistoryWindow {
    lengths: VecDeque<usize>,
}

impl HistoryWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>) -> Self {
        let mut h = Self::new();
        lengths.into_iter().for_each(|l| h.push(l));
        h
    }

    pub fn push(&mut self, length: usize) {
        if self.lengths.len() == HISTORY_LEN {
            self.lengths.pop_front();
        }
        self.lengths.push_back(length);
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.lengths.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.lengths.iter().sum::<usize>() as f64 / self.len() as f64)
    }

    /// Reads a JSON-lines file of integers; a missing file is an empty history.
    pub fn load(path: &Path) -> Result<Self, HistoryError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(HistoryError::Io(path.to_path_buf(), e.to_string())),
        };
        let mut h = Self::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: usize = serde_json::from_str(line.trim()).map_err(|_| HistoryError::Line(n + 1))?;
            h.push(v);
        }
        Ok(h)
    }

    pub fn append_to(path: &Path, length: usize) -> Result<(), HistoryError> {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| HistoryError::Io(path.to_path_buf(), e.to_string()))?;
        writeln!(f, "{length}").map_err(|e| HistoryError::Io(path.to_path_buf(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistoryError {
    #[error("history file {0}: {1}")]
    Io(PathBuf, String),
    #[error("history file line {0} is not a non-negative integer")]
    Line(usize),
}

/// How candidates are checked for functional correctness.
#[derive(Debug, Clone, Default)]
pub enum Verification {
    #[default]
    None,
    Vectors {
        suite: VectorSuite,
        top: Option<String>,
    },
    External {
        command: String,
        workdir: PathBuf,
        timeout: Duration,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateVerdict {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub module: Option<String>,
    pub parse: ParseStatus,
    pub sim: SimStatus,
    /// Heterogeneity class among syntactically valid candidates.
    pub class: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// `r_syn` and one verdict per candidate.
pub fn score_syntax(candidates: &[String]) -> (u8, Vec<SyntaxVerdict>) {
    let verdicts: Vec<SyntaxVerdict> = candidates.iter().map(|c| check_syntax(c)).collect();
    (verdicts.iter().any(SyntaxVerdict::passed) as u8, verdicts)
}

/// Source text of candidate `i` followed by every other valid candidate
/// defining a module name not yet present, so submodules resolve.
fn with_library(i: usize, candidates: &[String], syntax: &[SyntaxVerdict]) -> (String, SyntaxTree) {
    let own = syntax[i].tree().expect("only valid candidates are simulated").clone();
    let mut names: BTreeSet<String> = own.modules.iter().map(|m| m.name.name.clone()).collect();
    let mut text = candidates[i].clone();
    let mut tree = own;
    for (j, v) in syntax.iter().enumerate().filter(|(j, _)| *j != i) {
        if let Some(t) = v.tree() {
            let fresh: Vec<_> = t
                .modules
                .iter()
                .filter(|m| !names.contains(&m.name.name))
                .cloned()
                .collect();
            if !fresh.is_empty() && fresh.len() == t.modules.len() {
                names.extend(fresh.iter().map(|m| m.name.name.clone()));
                tree.modules.extend(fresh);
                text.push('\n');
                text.push_str(&candidates[j]);
            }
        }
    }
    (text, tree)
}

/// `r_func` and a status per candidate; invalid candidates are skipped and
/// simulator errors count as failures.
pub fn score_function(
    candidates: &[String],
    syntax: &[SyntaxVerdict],
    verification: &Verification,
) -> (u8, Vec<(SimStatus, Option<String>)>) {
    let statuses: Vec<(SimStatus, Option<String>)> = (0..candidates.len())
        .map(|i| {
            if matches!(verification, Verification::None) || !syntax[i].passed() {
                return (SimStatus::Skipped, None);
            }
            let (text, tree) = with_library(i, candidates, syntax);
            let own_top = syntax[i].tree().map(|t| t.modules[0].name.name.clone());
            let outcome: SimOutcome = match verification {
                Verification::None => unreachable!("handled above"),
                Verification::Vectors { suite, top } => {
                    let top = top.clone().or(own_top);
                    match sim::elaborate(&tree, top.as_deref()) {
                        Ok(d) => sim::run(&d, suite, false),
                        Err(e) => SimOutcome::error(format!("elaboration: {e}")),
                    }
                }
                Verification::External {
                    command,
                    workdir,
                    timeout,
                } => sim::run_external(&text, command, workdir, *timeout),
            };
            match outcome.verdict {
                Verdict::Pass => (SimStatus::Pass, None),
                _ => (SimStatus::Fail, outcome.message),
            }
        })
        .collect();
    let r = statuses.iter().any(|(s, _)| *s == SimStatus::Pass) as u8;
    (r, statuses)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiversityScore {
    pub r_div: u32,
    pub n_c: u32,
    pub n_s: u32,
    /// Class id per candidate; `None` for invalid candidates.
    pub classes: Vec<Option<usize>>,
}

/// Class counts among valid (`n_c`) and functionally passing (`n_s`) candidates.
pub fn score_diversity(syntax: &[SyntaxVerdict], sims: &[SimStatus]) -> DiversityScore {
    let valid: Vec<usize> = (0..syntax.len()).filter(|&i| syntax[i].passed()).collect();
    let trees: Vec<SyntaxTree> = valid
        .iter()
        .map(|&i| syntax[i].tree().cloned().expect("valid"))
        .collect();
    let part: EquivClassPartition = partition(&trees);
    let mut classes = vec![None; syntax.len()];
    for (k, &i) in valid.iter().enumerate() {
        classes[i] = part.class_of(k);
    }
    let passing: BTreeSet<usize> = (0..syntax.len())
        .filter(|&i| sims.get(i) == Some(&SimStatus::Pass))
        .filter_map(|i| classes[i])
        .collect();
    let n_c = part.len() as u32;
    let n_s = passing.len() as u32;
    DiversityScore {
        r_div: n_c + n_s,
        n_c,
        n_s,
        classes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextScore {
    pub r_cont: f64,
    pub l_t: f64,
    pub i_f: i8,
    pub think_length: usize,
}

/// Context reward; pushes the current reasoning length onto `history`.
pub fn score_context(response: &ModelResponse, history: &mut HistoryWindow, i_s: bool) -> ContextScore {
    let length = response.think_length();
    let l_t = match history.mean() {
        Some(mean) => (mean / length.max(1) as f64).clamp(0.0, MAX_LENGTH_RATIO),
        None => 1.0,
    };
    let i_f: i8 = if response.well_formed { 1 } else { -1 };
    let sign = if i_s { 0.5 } else { -0.5 };
    history.push(length);
    ContextScore {
        r_cont: sign * l_t + 0.5 * f64::from(i_f),
        l_t,
        i_f,
        think_length: length,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub syn: f64,
    pub func: f64,
    pub div: f64,
    pub cont: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            syn: 1.0,
            func: 1.0,
            div: 1.0,
            cont: 1.0,
        }
    }
}

/// Supplies component weights per training step.
pub trait WeightSchedule {
    fn weights_at(&self, step: u64, base: Weights) -> Weights;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Two => "2",
            Stage::Three => "3",
        })
    }
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "2" => Ok(Stage::Two),
            "3" => Ok(Stage::Three),
            _ => Err(format!("stage must be 2 or 3, got {s:?}")),
        }
    }
}

/// Which components are live, with static weight multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    pub stage: Stage,
    pub syn: bool,
    pub func: bool,
    pub div: bool,
    pub cont: bool,
    pub weights: Weights,
}

impl StageConfig {
    /// Unverified data: syntax, diversity and context.
    pub fn stage2() -> Self {
        StageConfig {
            stage: Stage::Two,
            syn: true,
            func: false,
            div: true,
            cont: true,
            weights: Weights::default(),
        }
    }

    /// All four components.
    pub fn stage3() -> Self {
        StageConfig {
            stage: Stage::Three,
            func: true,
            ..Self::stage2()
        }
    }

    pub fn preset(stage: Stage) -> Self {
        match stage {
            Stage::Two => Self::stage2(),
            Stage::Three => Self::stage3(),
        }
    }

    pub fn at_step(mut self, schedule: &dyn WeightSchedule, step: u64) -> Self {
        self.weights = schedule.weights_at(step, self.weights);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardBreakdown {
    pub schema: &'static str,
    pub stage: Stage,
    pub r_syn: u8,
    pub r_func: u8,
    pub r_div: u32,
    pub r_cont: f64,
    pub r_total: f64,
    pub n_c: u32,
    pub n_s: u32,
    pub i_s: u8,
    pub i_f: i8,
    pub l_t: f64,
    pub think_length: usize,
    pub per_candidate: Vec<CandidateVerdict>,
}

impl RewardBreakdown {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("breakdown serializes")
    }
}

/// Composes all components for one response; disabled components
/// contribute 0. `history` receives the current reasoning length.
pub fn score(
    raw: &str,
    stage: &StageConfig,
    verification: &Verification,
    history: &mut HistoryWindow,
) -> RewardBreakdown {
    let response = parse_response(raw);
    let cands = &response.candidates;
    let (syn, syntax) = score_syntax(cands);
    let no_check = Verification::None;
    let (func, sims) = score_function(cands, &syntax, if stage.func { verification } else { &no_check });
    let statuses: Vec<SimStatus> = sims.iter().map(|(s, _)| *s).collect();
    let div = score_diversity(&syntax, &statuses);

    let r_syn = if stage.syn { syn } else { 0 };
    let r_func = if stage.func { func } else { 0 };
    let (r_div, n_c, n_s) = if stage.div {
        (div.r_div, div.n_c, div.n_s)
    } else {
        (0, 0, 0)
    };
    let w = stage.weights;
    let live = w.syn * f64::from(r_syn) + w.func * f64::from(r_func) + w.div * f64::from(r_div);
    let i_s = live > DELTA;
    let ctx = score_context(&response, history, i_s);
    let r_cont = if stage.cont { ctx.r_cont } else { 0.0 };

    let per_candidate = (0..cands.len())
        .map(|i| CandidateVerdict {
            index: i,
            module: syntax[i].tree().map(|t| t.modules[0].name.name.clone()),
            parse: if syntax[i].passed() {
                ParseStatus::Pass
            } else {
                ParseStatus::Fail
            },
            sim: sims[i].0,
            class: div.classes[i],
            diagnostic: match &syntax[i] {
                SyntaxVerdict::Fail(d) => d.first().map(|d| format!("{}: {}", d.stage, d.message)),
                SyntaxVerdict::Pass(_) => sims[i].1.clone(),
            },
        })
        .collect();

    RewardBreakdown {
        schema: REWARD_SCHEMA,
        stage: stage.stage,
        r_syn,
        r_func,
        r_div,
        r_cont,
        r_total: live + w.cont * r_cont,
        n_c,
        n_s,
        i_s: i_s as u8,
        i_f: ctx.i_f,
        l_t: ctx.l_t,
        think_length: ctx.think_length,
        per_candidate,
    }
}
