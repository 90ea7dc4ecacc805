// SPDX-License-Identifier: Apache-2.0

//! Benchmark metrics: unbiased pass@k, one-output vs multi-output
//! correctness, per-prompt candidate counts and success rate.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::reward::{parse_response, score_function, score_syntax, SimStatus, Verification};
use crate::sim::{VectorError, VectorSuite, DEFAULT_TIMEOUT};

pub const MANIFEST_SCHEMA: &str = "bench/1";
pub const REPORT_SCHEMA: &str = "eval/1";
/// The larger k reported; capped at the sample count.
pub const TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("pass@k needs 1 <= k <= n, got n={n} k={k}")]
    K { n: usize, k: usize },
    #[error("correct count {c} exceeds sample count {n}")]
    Count { n: usize, c: usize },
    #[error("manifest {0}")]
    Manifest(String),
    #[error(transparent)]
    Vectors(#[from] VectorError),
}

/// `1 - C(n-c, k) / C(n, k)`, computed as a running product.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, MetricsError> {
    if k == 0 || k > n {
        return Err(MetricsError::K { n, k });
    }
    if c > n {
        return Err(MetricsError::Count { n, c });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = ((n - c + 1)..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

/// Correct over generated candidates; 0 when nothing was generated.
pub fn success_rate(correct: usize, generated: usize) -> f64 {
    if generated == 0 {
        0.0
    } else {
        correct as f64 / generated as f64
    }
}

/// Syntax and function verdicts for each candidate of one response.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResponseVerdicts {
    pub syntax: Vec<bool>,
    pub function: Vec<bool>,
}

impl ResponseVerdicts {
    pub fn generated(&self) -> usize {
        self.syntax.len()
    }

    pub fn opoo_syntax(&self) -> bool {
        self.syntax.first().copied().unwrap_or(false)
    }

    pub fn opmo_syntax(&self) -> bool {
        self.syntax.iter().any(|&b| b)
    }

    pub fn opoo_function(&self) -> bool {
        self.function.first().copied().unwrap_or(false)
    }

    pub fn opmo_function(&self) -> bool {
        self.function.iter().any(|&b| b)
    }
}

pub fn classify_response(raw: &str, verification: &Verification) -> ResponseVerdicts {
    let response = parse_response(raw);
    let (_, syntax) = score_syntax(&response.candidates);
    let (_, sims) = score_function(&response.candidates, &syntax, verification);
    ResponseVerdicts {
        syntax: syntax.iter().map(|v| v.passed()).collect(),
        function: sims.iter().map(|(s, _)| *s == SimStatus::Pass).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct PassRates {
    pub opoo_pass_1: f64,
    pub opoo_pass_5: f64,
    pub opmo_pass_1: f64,
    pub opmo_pass_5: f64,
}

impl PassRates {
    fn new(n: usize, opoo: usize, opmo: usize) -> Self {
        let k5 = TOP_K.min(n);
        let p = |c, k| pass_at_k(n, c, k).expect("k and c are within range");
        PassRates {
            opoo_pass_1: p(opoo, 1),
            opoo_pass_5: p(opoo, k5),
            opmo_pass_1: p(opmo, 1),
            opmo_pass_5: p(opmo, k5),
        }
    }

    fn values(&self) -> [f64; 4] {
        [self.opoo_pass_1, self.opoo_pass_5, self.opmo_pass_1, self.opmo_pass_5]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ItemMetrics {
    pub n: usize,
    pub gen_num: f64,
    pub syn_num: f64,
    pub fun_num: f64,
    pub syntax: PassRates,
    pub function: PassRates,
    pub success_rate: f64,
    pub generated: usize,
    pub syntax_correct: usize,
    pub function_correct: usize,
}

/// Metrics over the `n` responses of one prompt.
pub fn item_metrics(responses: &[ResponseVerdicts]) -> ItemMetrics {
    let n = responses.len();
    if n == 0 {
        return ItemMetrics::default();
    }
    let count = |f: fn(&ResponseVerdicts) -> bool| responses.iter().filter(|r| f(r)).count();
    let generated: usize = responses.iter().map(ResponseVerdicts::generated).sum();
    let syntax_correct: usize = responses.iter().map(|r| r.syntax.iter().filter(|&&b| b).count()).sum();
    let function_correct: usize = responses
        .iter()
        .map(|r| r.function.iter().filter(|&&b| b).count())
        .sum();
    ItemMetrics {
        n,
        gen_num: generated as f64 / n as f64,
        syn_num: syntax_correct as f64 / n as f64,
        fun_num: function_correct as f64 / n as f64,
        syntax: PassRates::new(
            n,
            count(ResponseVerdicts::opoo_syntax),
            count(ResponseVerdicts::opmo_syntax),
        ),
        function: PassRates::new(
            n,
            count(ResponseVerdicts::opoo_function),
            count(ResponseVerdicts::opmo_function),
        ),
        success_rate: success_rate(function_correct, generated),
        generated,
        syntax_correct,
        function_correct,
    }
}

pub fn evaluate_item(responses: &[String], verification: &Verification) -> ItemMetrics {
    let verdicts: Vec<ResponseVerdicts> = responses.iter().map(|r| classify_response(r, verification)).collect();
    item_metrics(&verdicts)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct RawManifest {
    schema: Option<String>,
    items: Vec<RawItem>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    id: String,
    #[serde(default)]
    prompt: Option<String>,
    #[serde(default)]
    vectors: Option<String>,
    #[serde(default)]
    external: Option<String>,
    #[serde(default)]
    top: Option<String>,
    n: usize,
}

#[derive(Debug, Clone)]
pub enum Binding {
    Unverified,
    Vectors { suite: VectorSuite, top: Option<String> },
    External(String),
}

#[derive(Debug, Clone)]
pub struct BenchItem {
    pub id: String,
    pub prompt: Option<PathBuf>,
    pub binding: Binding,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct BenchmarkManifest {
    pub items: Vec<BenchItem>,
}

impl BenchmarkManifest {
    /// Parses a manifest; relative paths resolve against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, MetricsError> {
        let raw: RawManifest = serde_json::from_str(text).map_err(|e| MetricsError::Manifest(e.to_string()))?;
        if let Some(s) = &raw.schema {
            if s != MANIFEST_SCHEMA {
                return Err(MetricsError::Manifest(format!(
                    "schema must be \"{MANIFEST_SCHEMA}\", found {s:?}"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        let mut items = Vec::new();
        for it in raw.items {
            if !seen.insert(it.id.clone()) {
                return Err(MetricsError::Manifest(format!("duplicate item id {:?}", it.id)));
            }
            if it.n == 0 {
                return Err(MetricsError::Manifest(format!("item {:?} needs n >= 1", it.id)));
            }
            if it.id.is_empty() || it.id.contains(['/', '\\']) || it.id == ".." {
                return Err(MetricsError::Manifest(format!(
                    "item id {:?} is not a plain name",
                    it.id
                )));
            }
            let binding = match (it.vectors, it.external) {
                (Some(_), Some(_)) => {
                    return Err(MetricsError::Manifest(format!(
                        "item {:?} names both vectors and an external command",
                        it.id
                    )))
                }
                (Some(v), None) => Binding::Vectors {
                    suite: VectorSuite::load(&base.join(v))?,
                    top: it.top,
                },
                (None, Some(cmd)) => Binding::External(cmd),
                (None, None) => Binding::Unverified,
            };
            items.push(BenchItem {
                id: it.id,
                prompt: it.prompt.map(|p| base.join(p)),
                binding,
                n: it.n,
            });
        }
        Ok(BenchmarkManifest { items })
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| MetricsError::Manifest(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemReport {
    pub id: String,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ItemMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Aggregate {
    pub total_items: usize,
    pub complete_items: usize,
    pub gen_num: f64,
    pub syn_num: f64,
    pub fun_num: f64,
    pub syntax: PassRates,
    pub function: PassRates,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema: &'static str,
    pub items: Vec<ItemReport>,
    pub aggregate: Aggregate,
}

impl EvalReport {
    pub fn is_complete(&self) -> bool {
        self.aggregate.complete_items > 0 && self.aggregate.complete_items == self.aggregate.total_items
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table, one row per item plus the mean row.
    pub fn table(&self) -> String {
        let header = [
            "item", "gen", "syn", "fun", "syn.oo@1", "syn.oo@5", "syn.mo@1", "syn.mo@5", "fun.oo@1", "fun.oo@5",
            "fun.mo@1", "fun.mo@5", "success",
        ];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        let row = |name: &str, g: f64, s: f64, f: f64, syn: &PassRates, fun: &PassRates, sr: f64| {
            let mut r = vec![
                name.to_string(),
                format!("{g:.2}"),
                format!("{s:.2}"),
                format!("{f:.2}"),
            ];
            r.extend(
                syn.values()
                    .iter()
                    .chain(fun.values().iter())
                    .map(|v| format!("{v:.3}")),
            );
            r.push(format!("{sr:.3}"));
            r
        };
        for it in &self.items {
            match &it.metrics {
                Some(m) => rows.push(row(
                    &it.id,
                    m.gen_num,
                    m.syn_num,
                    m.fun_num,
                    &m.syntax,
                    &m.function,
                    m.success_rate,
                )),
                None => {
                    let mut r = vec![it.id.clone()];
                    r.extend(std::iter::repeat_n("-".to_string(), header.len() - 1));
                    rows.push(r);
                }
            }
        }
        let a = &self.aggregate;
        rows.push(row(
            "mean",
            a.gen_num,
            a.syn_num,
            a.fun_num,
            &a.syntax,
            &a.function,
            a.success_rate,
        ));
        let widths: Vec<usize> = (0..header.len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in rows {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
        }
        let _ = writeln!(out, "complete items: {}/{}", a.complete_items, a.total_items);
        out
    }
}

/// `sample_<k>.txt` files of one item, ordered by `k`.
fn sample_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut found: Vec<(u64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(k) = name
            .strip_prefix("sample_")
            .and_then(|r| r.strip_suffix(".txt"))
            .and_then(|k| k.parse().ok())
        {
            found.push((k, path));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub timeout: Duration,
    /// Worker threads for items; 0 picks the available parallelism.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            timeout: DEFAULT_TIMEOUT,
            jobs: 0,
        }
    }
}

fn evaluate_one(item: &BenchItem, root: &Path, workdir: &Path, options: &EvalOptions) -> ItemReport {
    let incomplete = |warning: String| ItemReport {
        id: item.id.clone(),
        complete: false,
        warning: Some(warning),
        metrics: None,
    };
    let dir = root.join(&item.id);
    let files = match sample_files(&dir) {
        Ok(f) => f,
        Err(e) => return incomplete(format!("cannot list {}: {e}", dir.display())),
    };
    if files.len() < item.n {
        return incomplete(format!(
            "expected {} samples in {}, found {}",
            item.n,
            dir.display(),
            files.len()
        ));
    }
    let mut responses = Vec::with_capacity(item.n);
    for f in &files[..item.n] {
        match std::fs::read(f) {
            Ok(bytes) => responses.push(String::from_utf8_lossy(&bytes).into_owned()),
            Err(e) => return incomplete(format!("cannot read {}: {e}", f.display())),
        }
    }
    let verification = match &item.binding {
        Binding::Unverified => Verification::None,
        Binding::Vectors { suite, top } => Verification::Vectors {
            suite: suite.clone(),
            top: top.clone(),
        },
        Binding::External(command) => Verification::External {
            command: command.clone(),
            workdir: workdir.to_path_buf(),
            timeout: options.timeout,
        },
    };
    ItemReport {
        id: item.id.clone(),
        complete: true,
        warning: None,
        metrics: Some(evaluate_item(&responses, &verification)),
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

fn aggregate(items: &[ItemReport]) -> Aggregate {
    // Sorted by id so the float sums do not depend on manifest order.
    let mut done: Vec<(&str, &ItemMetrics)> = items
        .iter()
        .filter_map(|i| i.metrics.as_ref().map(|m| (i.id.as_str(), m)))
        .collect();
    done.sort_by(|a, b| a.0.cmp(b.0));
    let k = done.len();
    let avg = |f: &dyn Fn(&ItemMetrics) -> f64| mean(done.iter().map(|(_, m)| f(m)), k);
    let rates = |f: &dyn Fn(&ItemMetrics) -> PassRates| PassRates {
        opoo_pass_1: avg(&|m| f(m).opoo_pass_1),
        opoo_pass_5: avg(&|m| f(m).opoo_pass_5),
        opmo_pass_1: avg(&|m| f(m).opmo_pass_1),
        opmo_pass_5: avg(&|m| f(m).opmo_pass_5),
    };
    Aggregate {
        total_items: items.len(),
        complete_items: k,
        gen_num: avg(&|m| m.gen_num),
        syn_num: avg(&|m| m.syn_num),
        fun_num: avg(&|m| m.fun_num),
        syntax: rates(&|m| m.syntax),
        function: rates(&|m| m.function),
        success_rate: avg(&|m| m.success_rate),
    }
}

/// Evaluates every manifest item against `root/<id>/sample_<k>.txt`.
pub fn evaluate(manifest: &BenchmarkManifest, root: &Path, options: &EvalOptions) -> EvalReport {
    let workdir = tempfile::tempdir().ok();
    let wd = workdir
        .as_ref()
        .map(|d| d.path().to_path_buf())
        .unwrap_or_else(std::env::temp_dir);
    let jobs = match options.jobs {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        j => j,
    }
    .min(manifest.items.len().max(1));
    let mut slots: Vec<Option<ItemReport>> = vec![None; manifest.items.len()];
    std::thread::scope(|s| {
        for (chunk_items, chunk_slots) in manifest
            .items
            .chunks(manifest.items.len().div_ceil(jobs).max(1))
            .zip(slots.chunks_mut(manifest.items.len().div_ceil(jobs).max(1)))
        {
            let wd = &wd;
            s.spawn(move || {
                for (item, slot) in chunk_items.iter().zip(chunk_slots) {
                    *slot = Some(evaluate_one(item, root, wd, options));
                }
            });
        }
    });
    let items: Vec<ItemReport> = slots.into_iter().map(|s| s.expect("every item evaluated")).collect();
    EvalReport {
        schema: REPORT_SCHEMA,
        aggregate: aggregate(&items),
        items,
    }
}
