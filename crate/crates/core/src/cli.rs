// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. `run` returns the process exit code.
//!
//! | subcommand | exit codes |
//! |------------|------------|
//! | parse      | 0 pass, 1 syntax failure, 2 I/O error |
//! | equiv      | 0 equivalent, 1 different, 2 error |
//! | classes    | 0, 2 on I/O error |
//! | sim        | 0 pass, 1 fail, 2 error |
//! | score      | 0, 2 on I/O error |
//! | grpo-demo  | 0, 2 on invalid hyper-parameters |
//! | eval       | 0 complete, 3 partial, 2 unreadable manifest |
//!
//! Usage errors exit 64 and configuration errors exit 78.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::canon::{canonicalize, partition};
use crate::config::AppConfig;
use crate::grpo::{self, DemoConfig, GrpoConfig, ToyPolicy};
use crate::metrics::{self, BenchmarkManifest, EvalOptions};
use crate::reward::{self, HistoryWindow, Stage, StageConfig, Verification};
use crate::sim::{self, SimOutcome, VectorSuite, Verdict};
use crate::verilog::{self, node, FrontendError, SyntaxTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 78;

#[derive(Debug, Parser)]
#[command(
    name = "rtlseek",
    version,
    about = "Verilog structural diversity, simulation, rewards and metrics"
)]
struct Cli {
    /// Flat key=value config file (falls back to $RTLSEEK_CONFIG).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a Verilog file and print its syntax tree as JSON.
    Parse { file: PathBuf },
    /// Decide structural equivalence of two designs.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        /// Report the first differing node when not equivalent.
        #[arg(long)]
        explain: bool,
    },
    /// Partition designs into structural equivalence classes.
    Classes {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Simulate a design against a vector suite or an external command.
    Sim {
        design: PathBuf,
        #[command(flatten)]
        check: CheckArgs,
        /// Write a per-step snapshot of all signals.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Compute the reward breakdown for one model response.
    Score {
        /// Raw model response text.
        response: PathBuf,
        /// Reward stage: 2 skips the functional check, 3 enables it.
        #[arg(long)]
        stage: Option<Stage>,
        #[command(flatten)]
        check: CheckArgs,
        /// JSON-lines history of reasoning lengths; the new length is appended.
        #[arg(long, value_name = "PATH")]
        history: Option<PathBuf>,
    },
    /// Train a toy policy with GRPO and print the learning curve as CSV.
    GrpoDemo(DemoArgs),
    /// Evaluate sampled responses against a benchmark manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        /// Also write the JSON report here.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        /// Worker threads (0 = available parallelism).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Test-vector suite (tv/1 JSON).
    #[arg(long, value_name = "PATH", conflicts_with = "external")]
    vectors: Option<PathBuf>,
    /// External simulator command containing {design}.
    #[arg(long, value_name = "CMD")]
    external: Option<String>,
    /// Top module for vector simulation.
    #[arg(long)]
    top: Option<String>,
    /// External command timeout in seconds.
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Env {
    SingleBest,
    Diversity,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, value_enum, default_value = "single-best")]
    env: Env,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Vocabulary size of the toy policy.
    #[arg(long, default_value_t = 8)]
    vocab: usize,
    /// Rewarded design for the single-best environment.
    #[arg(long, default_value_t = 3)]
    target: usize,
    /// Initial logit of design 0 (others start at 0); defaults to 0 for
    /// single-best and 4 for diversity.
    #[arg(long)]
    init_peak: Option<f64>,
    /// Gradient updates per sampled group.
    #[arg(long, default_value_t = 1)]
    inner_steps: usize,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let config = match AppConfig::resolve(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut io = Io { out, err };
    match cli.command {
        Command::Parse { file } => cmd_parse(&mut io, &file),
        Command::Equiv { a, b, explain } => cmd_equiv(&mut io, &a, &b, explain),
        Command::Classes { files } => cmd_classes(&mut io, &files),
        Command::Sim { design, check, trace } => cmd_sim(&mut io, &config, &design, &check, trace.as_deref()),
        Command::Score {
            response,
            stage,
            check,
            history,
        } => cmd_score(
            &mut io,
            &config,
            &response,
            stage,
            &check,
            history.or(config.history.clone()),
        ),
        Command::GrpoDemo(args) => cmd_demo(&mut io, &config, &args),
        Command::Eval {
            manifest,
            responses,
            json,
            jobs,
        } => cmd_eval(&mut io, &config, &manifest, &responses, json.as_deref(), jobs),
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, code: i32, message: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {message}");
        code
    }

    fn json(&mut self, value: &impl serde::Serialize) {
        let _ = writeln!(
            self.out,
            "{}",
            serde_json::to_string_pretty(value).expect("serializable")
        );
    }
}

enum LoadError {
    Io(String),
    Syntax(FrontendError),
}

fn load_tree(path: &Path) -> Result<(String, SyntaxTree), LoadError> {
    let bytes = std::fs::read(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
    let tokens = verilog::tokenize_bytes(&bytes).map_err(|e| LoadError::Syntax(e.into()))?;
    let tree = verilog::parse(&tokens).map_err(LoadError::Syntax)?;
    Ok((
        String::from_utf8(bytes).expect("tokenizer accepted the bytes as UTF-8"),
        tree,
    ))
}

fn describe(path: &Path, e: &FrontendError) -> String {
    format!("{}:{}: {} error: {e}", path.display(), e.span(), e.stage())
}

fn cmd_parse(io: &mut Io<'_>, file: &Path) -> i32 {
    match load_tree(file) {
        Ok((_, tree)) => {
            let _ = writeln!(io.out, "{}", node::to_json(&tree));
            EXIT_OK
        }
        Err(LoadError::Io(m)) => io.fail(EXIT_ERROR, m),
        Err(LoadError::Syntax(e)) => {
            let _ = writeln!(io.err, "{}", describe(file, &e));
            EXIT_FAIL
        }
    }
}

fn cmd_equiv(io: &mut Io<'_>, a: &Path, b: &Path, explain: bool) -> i32 {
    let load = |p: &Path| match load_tree(p) {
        Ok((_, t)) => Ok(t),
        Err(LoadError::Io(m)) => Err(m),
        Err(LoadError::Syntax(e)) => Err(describe(p, &e)),
    };
    let (ta, tb) = match (load(a), load(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(m), _) | (_, Err(m)) => return io.fail(EXIT_ERROR, m),
    };
    let (ca, cb) = (canonicalize(&ta), canonicalize(&tb));
    let equivalent = ca == cb;
    let mut doc = serde_json::json!({
        "schema": "equiv/1",
        "equivalent": equivalent,
        "digest_a": ca.digest.to_string(),
        "digest_b": cb.digest.to_string(),
    });
    if explain && !equivalent {
        doc["difference"] = ca.shape().first_difference(cb.shape()).into();
    }
    io.json(&doc);
    if equivalent {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn cmd_classes(io: &mut Io<'_>, files: &[PathBuf]) -> i32 {
    let mut valid = Vec::new();
    let mut trees = Vec::new();
    let mut invalid = Vec::new();
    for (i, f) in files.iter().enumerate() {
        match load_tree(f) {
            Ok((_, t)) => {
                valid.push(i);
                trees.push(t);
            }
            Err(LoadError::Io(m)) => return io.fail(EXIT_ERROR, m),
            Err(LoadError::Syntax(e)) => {
                let _ = writeln!(io.err, "{}", describe(f, &e));
                invalid.push(i);
            }
        }
    }
    let part = partition(&trees);
    let remap = |v: &Vec<usize>| v.iter().map(|&k| valid[k]).collect::<Vec<_>>();
    io.json(&serde_json::json!({
        "schema": "classes/1",
        "files": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
        "invalid": invalid,
        "classes": part.classes.iter().map(remap).collect::<Vec<_>>(),
        "representatives": remap(&part.representatives),
    }));
    EXIT_OK
}

fn timeout_of(config: &AppConfig, check: &CheckArgs) -> Result<Duration, String> {
    let secs = check.timeout.unwrap_or(config.sim_timeout_secs);
    if secs > 0.0 && secs.is_finite() {
        Ok(Duration::from_secs_f64(secs))
    } else {
        Err(format!("timeout must be positive, got {secs}"))
    }
}

fn verification(
    config: &AppConfig,
    check: &CheckArgs,
    workdir: &Path,
    fallback_external: bool,
) -> Result<Verification, String> {
    let timeout = timeout_of(config, check)?;
    if let Some(v) = &check.vectors {
        let suite = VectorSuite::load(v).map_err(|e| e.to_string())?;
        return Ok(Verification::Vectors {
            suite,
            top: check.top.clone(),
        });
    }
    let command = check
        .external
        .clone()
        .or_else(|| fallback_external.then(|| config.external_command.clone()).flatten());
    Ok(match command {
        Some(command) => Verification::External {
            command,
            workdir: workdir.to_path_buf(),
            timeout,
        },
        None => Verification::None,
    })
}

fn cmd_sim(io: &mut Io<'_>, config: &AppConfig, design: &Path, check: &CheckArgs, trace: Option<&Path>) -> i32 {
    let workdir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return io.fail(EXIT_ERROR, format!("cannot create a work directory: {e}")),
    };
    let method = match verification(config, check, workdir.path(), true) {
        Ok(m) => m,
        Err(m) => return io.fail(EXIT_ERROR, m),
    };
    let outcome = match &method {
        Verification::None => return io.fail(EXIT_USAGE, "sim needs --vectors or --external"),
        Verification::Vectors { suite, top } => match load_tree(design) {
            Ok((_, tree)) => match sim::elaborate(&tree, top.as_deref()) {
                Ok(d) => sim::run(&d, suite, trace.is_some()),
                Err(e) => SimOutcome::error(format!("elaboration: {e}")),
            },
            Err(LoadError::Io(m)) => return io.fail(EXIT_ERROR, m),
            Err(LoadError::Syntax(e)) => SimOutcome::error(describe(design, &e)),
        },
        Verification::External {
            command,
            workdir,
            timeout,
        } => match std::fs::read_to_string(design) {
            Ok(src) => sim::run_external(&src, command, workdir, *timeout),
            Err(e) => return io.fail(EXIT_ERROR, format!("{}: {e}", design.display())),
        },
    };
    if let (Some(path), Some(doc)) = (trace, outcome.trace_json()) {
        let text = serde_json::to_string_pretty(&doc).expect("trace serializes");
        if let Err(e) = std::fs::write(path, text + "\n") {
            return io.fail(EXIT_ERROR, format!("{}: {e}", path.display()));
        }
    }
    io.json(&outcome.to_json());
    match outcome.verdict {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::SimError => EXIT_ERROR,
    }
}

fn cmd_score(
    io: &mut Io<'_>,
    config: &AppConfig,
    response: &Path,
    stage: Option<Stage>,
    check: &CheckArgs,
    history_path: Option<PathBuf>,
) -> i32 {
    let raw = match std::fs::read(response) {
        Ok(b) => String::from_utf8_lossy(&b).into_owned(),
        Err(e) => return io.fail(EXIT_ERROR, format!("{}: {e}", response.display())),
    };
    let stage = StageConfig::preset(stage.unwrap_or(config.stage));
    let workdir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return io.fail(EXIT_ERROR, format!("cannot create a work directory: {e}")),
    };
    let method = match verification(config, check, workdir.path(), stage.func) {
        Ok(m) => m,
        Err(m) => return io.fail(EXIT_ERROR, m),
    };
    let mut history = match &history_path {
        Some(p) => match HistoryWindow::load(p) {
            Ok(h) => h,
            Err(e) => return io.fail(EXIT_ERROR, e),
        },
        None => HistoryWindow::new(),
    };
    let breakdown = reward::score(&raw, &stage, &method, &mut history);
    if let Some(p) = &history_path {
        if let Err(e) = HistoryWindow::append_to(p, breakdown.think_length) {
            return io.fail(EXIT_ERROR, e);
        }
    }
    let _ = writeln!(io.out, "{}", breakdown.to_json());
    EXIT_OK
}

fn cmd_demo(io: &mut Io<'_>, config: &AppConfig, args: &DemoArgs) -> i32 {
    let grpo_cfg = GrpoConfig {
        group_size: args.group_size.unwrap_or(config.grpo.group_size),
        clip_eps: args.eps.unwrap_or(config.grpo.clip_eps),
        beta: args.beta.unwrap_or(config.grpo.beta),
        adv_eps: config.grpo.adv_eps,
    };
    if let Err(e) = grpo_cfg.validate() {
        return io.fail(EXIT_ERROR, e);
    }
    if args.vocab < 2 || args.target >= args.vocab {
        return io.fail(EXIT_ERROR, "need vocab >= 2 and target < vocab");
    }
    let lr = args.lr.unwrap_or(config.lr);
    if !(lr > 0.0 && lr.is_finite()) {
        return io.fail(EXIT_ERROR, format!("learning rate must be positive, got {lr}"));
    }
    let demo = DemoConfig {
        steps: args.steps,
        lr,
        inner_steps: args.inner_steps,
        seed: args.seed.unwrap_or(config.seed),
    };
    let peak = args.init_peak.unwrap_or(match args.env {
        Env::SingleBest => 0.0,
        Env::Diversity => 4.0,
    });
    let mut logits = vec![0.0; args.vocab];
    logits[0] = peak;
    let policy = ToyPolicy::new(logits);
    let result = match args.env {
        Env::SingleBest => grpo::train_demo(policy, &mut grpo::SingleBest { target: args.target }, &grpo_cfg, &demo),
        Env::Diversity => grpo::train_demo(policy, &mut grpo::Diversity::all_valid(args.vocab), &grpo_cfg, &demo),
    };
    match result {
        Ok(curve) => {
            let _ = write!(io.out, "{}", curve.to_csv());
            EXIT_OK
        }
        Err(e) => io.fail(EXIT_ERROR, e),
    }
}

fn cmd_eval(
    io: &mut Io<'_>,
    config: &AppConfig,
    manifest: &Path,
    responses: &Path,
    json: Option<&Path>,
    jobs: usize,
) -> i32 {
    let m = match BenchmarkManifest::load(manifest) {
        Ok(m) => m,
        Err(e) => return io.fail(EXIT_ERROR, e),
    };
    let options = EvalOptions {
        timeout: Duration::from_secs_f64(config.sim_timeout_secs),
        jobs,
    };
    let report = metrics::evaluate(&m, responses, &options);
    for item in &report.items {
        if let Some(w) = &item.warning {
            let _ = writeln!(io.err, "warning: {}: {w}", item.id);
        }
    }
    if let Some(path) = json {
        if let Err(e) = std::fs::write(path, report.to_json() + "\n") {
            return io.fail(EXIT_ERROR, format!("{}: {e}", path.display()));
        }
    }
    let _ = write!(io.out, "{}", report.table());
    if report.is_complete() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("rtlseek").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&[]).0, EXIT_USAGE);
    }

    #[test]
    fn help_and_version_succeed() {
        let (code, out, _) = call(&["--version"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains(env!("CARGO_PKG_VERSION")));
        assert_eq!(call(&["--help"]).0, EXIT_OK);
        assert_eq!(call(&["sim", "--help"]).0, EXIT_OK);
    }

    #[test]
    fn bad_config_exits_78() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.conf");
        std::fs::write(&cfg, "nonsense = 1\n").unwrap();
        let (code, _, err) = call(&["--config", cfg.to_str().unwrap(), "grpo-demo", "--steps", "1"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("unknown key"));
    }

    #[test]
    fn parse_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("g.v");
        std::fs::write(&good, "module m(input a, output y); assign y = a; endmodule").unwrap();
        let bad = dir.path().join("b.v");
        std::fs::write(&bad, "module m(input a").unwrap();
        let (code, out, _) = call(&["parse", good.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("\"schema\": \"ast/1\""));
        assert_eq!(call(&["parse", bad.to_str().unwrap()]).0, EXIT_FAIL);
        assert_eq!(
            call(&["parse", dir.path().join("missing.v").to_str().unwrap()]).0,
            EXIT_ERROR
        );
    }

    #[test]
    fn demo_prints_csv() {
        let (code, out, _) = call(&["grpo-demo", "--steps", "3", "--seed", "1"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with("step,mean_reward,entropy\n0,"));
        assert_eq!(out.lines().count(), 4);
    }
}
