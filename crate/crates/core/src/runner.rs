//! Running external solvers on an encoding and reconciling their verdicts
//! with the native search.
//!
//! Commands are templates with one `{}` placeholder for the input file,
//! e.g. `z3 -smt2 {}`. They are read from the environment:
//!
//! | variable | kind |
//! |---|---|
//! | `WWTPP_SMT_CMD` | SMT-LIB solver |
//! | `WWTPP_MILP_CMD` | LP-file solver |
//! | `WWTPP_FZN_CMD` | MiniZinc runner |
//! | `WWTPP_SOLVER_TIMEOUT_MS` | timeout for all kinds (default 60000) |
//! | `WWTPP_TMPDIR` | directory for encoding files |

use std::io::{self, Read, Write};
use std::os::unix::process::CommandExt;
use std::path::PathBuf;
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::encoders::{
    encode_lp, encode_minizinc_cumulative, encode_minizinc_naive, encode_smtlib, parse_smt_model,
    EncodeError, Objective, SmtOptions,
};
use crate::model::{Instance, Solution, Status};
use crate::semantics::{verify, VerifyOptions};
use crate::solver::{solve, SolveStats, SolverConfig, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Smt,
    Milp,
    FlatZinc,
}

impl SolverKind {
    pub fn env_var(self) -> &'static str {
        match self {
            SolverKind::Smt => "WWTPP_SMT_CMD",
            SolverKind::Milp => "WWTPP_MILP_CMD",
            SolverKind::FlatZinc => "WWTPP_FZN_CMD",
        }
    }

    /// The encoding a solver of this kind reads by default.
    pub fn default_encoding(self) -> EncodingKind {
        match self {
            SolverKind::Smt => EncodingKind::Smt2,
            SolverKind::Milp => EncodingKind::Lp,
            SolverKind::FlatZinc => EncodingKind::MznNaive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingKind {
    Smt2,
    Lp,
    MznNaive,
    MznCumulative,
}

impl EncodingKind {
    fn solver_kind(self) -> SolverKind {
        match self {
            EncodingKind::Smt2 => SolverKind::Smt,
            EncodingKind::Lp => SolverKind::Milp,
            EncodingKind::MznNaive | EncodingKind::MznCumulative => SolverKind::FlatZinc,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            EncodingKind::Smt2 => ".smt2",
            EncodingKind::Lp => ".lp",
            EncodingKind::MznNaive | EncodingKind::MznCumulative => ".mzn",
        }
    }

    /// Encodes `instance` as the single file handed to the solver.
    pub fn encode(self, instance: &Instance) -> Result<String, EncodeError> {
        match self {
            EncodingKind::Smt2 => encode_smtlib(instance, &SmtOptions::default()),
            EncodingKind::Lp => encode_lp(instance, Objective::None),
            EncodingKind::MznNaive => encode_minizinc_naive(instance).map(|m| m.combined()),
            EncodingKind::MznCumulative => {
                encode_minizinc_cumulative(instance).map(|m| m.combined())
            }
        }
    }
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCommand {
    pub command_template: String,
    pub kind: SolverKind,
    pub timeout: Duration,
}

impl SolverCommand {
    pub fn new(
        command_template: impl Into<String>,
        kind: SolverKind,
        timeout: Duration,
    ) -> Result<Self, RunnerError> {
        let command_template = command_template.into();
        let placeholders = command_template.matches("{}").count();
        if placeholders != 1 {
            return Err(RunnerError::Template(format!(
                "expected one {{}} placeholder, found {placeholders}"
            )));
        }
        let cmd = Self {
            command_template,
            kind,
            timeout,
        };
        cmd.argv("x")?;
        Ok(cmd)
    }

    /// The command for `kind` from the environment, or `None` when its
    /// variable is unset or empty.
    pub fn from_env(kind: SolverKind) -> Option<Result<Self, RunnerError>> {
        let template = std::env::var(kind.env_var())
            .ok()
            .filter(|s| !s.trim().is_empty())?;
        let timeout = match std::env::var("WWTPP_SOLVER_TIMEOUT_MS") {
            Ok(ms) => match ms.trim().parse::<u64>() {
                Ok(ms) => Duration::from_millis(ms),
                Err(_) => {
                    return Some(Err(RunnerError::Template(format!(
                        "WWTPP_SOLVER_TIMEOUT_MS is not a number: {ms}"
                    ))))
                }
            },
            Err(_) => DEFAULT_TIMEOUT,
        };
        Some(Self::new(template, kind, timeout))
    }

    fn argv(&self, path: &str) -> Result<Vec<String>, RunnerError> {
        let words = shell_words::split(&self.command_template)
            .map_err(|e| RunnerError::Template(e.to_string()))?;
        if words.is_empty() {
            return Err(RunnerError::Template("empty command".into()));
        }
        Ok(words.into_iter().map(|w| w.replace("{}", path)).collect())
    }
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("bad solver command: {0}")]
    Template(String),
    #[error("{encoding:?} encoding cannot be read by a {kind:?} solver")]
    Mismatch {
        encoding: EncodingKind,
        kind: SolverKind,
    },
    #[error("cannot encode instance: {0}")]
    Encode(#[from] EncodeError),
    #[error("cannot start {program}: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("native solver: {0}")]
    Native(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalResult {
    pub status: Status,
    /// Present exactly when an SMT solver answered sat.
    pub solution: Option<Solution>,
    /// Why the status is `Unknown`, when it is.
    pub detail: Option<String>,
    pub raw_output: String,
    pub stderr: String,
    pub elapsed: Duration,
    /// `None` when the process was killed.
    pub exit_status: Option<i32>,
    /// The encoding file, when it was kept for inspection.
    pub kept_input: Option<PathBuf>,
}

/// Encodes `instance`, runs the solver on the file and maps its output to
/// a status. The encoding file is removed afterwards unless the run ends
/// in an error or an unknown status, in which case it is kept for
/// inspection and its path is logged.
pub fn run_external(
    instance: &Instance,
    encoding: EncodingKind,
    cmd: &SolverCommand,
) -> Result<ExternalResult, RunnerError> {
    if encoding.solver_kind() != cmd.kind {
        return Err(RunnerError::Mismatch {
            encoding,
            kind: cmd.kind,
        });
    }
    let text = encoding.encode(instance)?;
    run_encoded(instance, &text, encoding, cmd)
}

/// [`run_external`] on an encoding produced elsewhere, e.g. with
/// non-default encoder options. `text` must follow the naming scheme of
/// `encoding` for the model to be read back.
pub fn run_encoded(
    instance: &Instance,
    text: &str,
    encoding: EncodingKind,
    cmd: &SolverCommand,
) -> Result<ExternalResult, RunnerError> {
    if encoding.solver_kind() != cmd.kind {
        return Err(RunnerError::Mismatch {
            encoding,
            kind: cmd.kind,
        });
    }
    let mut builder = tempfile::Builder::new();
    builder.prefix("wwtpp-").suffix(encoding.suffix());
    let mut file = builder.tempfile_in(temp_dir())?;
    file.write_all(text.as_bytes())?;
    file.flush()?;

    let path = file.path().to_string_lossy().into_owned();
    let outcome = execute(&cmd.argv(&path)?, cmd.timeout);
    let mut result = outcome.map(|run| interpret(instance, cmd.kind, run));
    let keep = match &result {
        Ok(r) => r.status == Status::Unknown,
        Err(_) => true,
    };
    if keep {
        match file.keep() {
            Ok((_, kept)) => {
                log::warn!("kept solver input {}", kept.display());
                if let Ok(r) = &mut result {
                    r.kept_input = Some(kept);
                }
            }
            Err(e) => log::warn!("could not keep solver input: {e}"),
        }
    }
    result
}

struct RawRun {
    stdout: String,
    stderr: String,
    elapsed: Duration,
    status: Option<ExitStatus>,
}

fn drain(mut pipe: impl Read + Send + 'static) -> JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn kill_group(child: &Child) {
    // The child leads its own process group, so this also reaches anything
    // it spawned.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
}

fn execute(argv: &[String], timeout: Duration) -> Result<RawRun, RunnerError> {
    let start = Instant::now();
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn()
        .map_err(|source| RunnerError::Spawn {
            program: argv[0].clone(),
            source,
        })?;
    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));

    let deadline = start + timeout;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if Instant::now() >= deadline {
            kill_group(&child);
            child.wait()?;
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let elapsed = start.elapsed();
    // Stragglers left by the solver would keep the pipes open.
    kill_group(&child);
    Ok(RawRun {
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
        elapsed,
        status,
    })
}

fn smt_status(stdout: &str) -> Option<Status> {
    let first = stdout.lines().map(str::trim).find(|l| !l.is_empty())?;
    match first {
        "sat" => Some(Status::Sat),
        "unsat" => Some(Status::Unsat),
        "unknown" | "timeout" => Some(Status::Unknown),
        _ => None,
    }
}

fn flatzinc_status(stdout: &str) -> Option<Status> {
    if stdout.contains("=====UNSATISFIABLE=====") {
        return Some(Status::Unsat);
    }
    if stdout.contains("=====UNKNOWN=====") || stdout.contains("=====ERROR=====") {
        return Some(Status::Unknown);
    }
    let sat = stdout
        .lines()
        .map(str::trim)
        .any(|l| l == "----------" || l == "SATISFIABLE" || l == "=====SATISFIABLE=====");
    sat.then_some(Status::Sat)
}

fn milp_status(stdout: &str) -> Option<Status> {
    let lower = stdout.to_ascii_lowercase();
    if lower.contains("infeasible") {
        Some(Status::Unsat)
    } else if lower.contains("optimal") || lower.contains("feasible") {
        Some(Status::Sat)
    } else {
        None
    }
}

fn interpret(instance: &Instance, kind: SolverKind, run: RawRun) -> ExternalResult {
    let mut result = ExternalResult {
        status: Status::Unknown,
        solution: None,
        detail: None,
        raw_output: run.stdout,
        stderr: run.stderr,
        elapsed: run.elapsed,
        exit_status: run.status.and_then(|s| s.code()),
        kept_input: None,
    };
    if run.status.is_none() {
        result.status = Status::Timeout;
        return result;
    }
    let parsed = match kind {
        SolverKind::Smt => smt_status(&result.raw_output),
        SolverKind::Milp => milp_status(&result.raw_output),
        SolverKind::FlatZinc => flatzinc_status(&result.raw_output),
    };
    match parsed {
        None => result.detail = Some("unrecognized solver output".into()),
        Some(Status::Sat) if kind == SolverKind::Smt => {
            match parse_smt_model(&result.raw_output, instance) {
                Ok(solution) => {
                    result.status = Status::Sat;
                    result.solution = Some(solution);
                }
                Err(e) => result.detail = Some(format!("sat but model unreadable: {e}")),
            }
        }
        Some(Status::Unknown) => result.detail = Some("solver answered unknown".into()),
        Some(status) => result.status = status,
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    /// Both sides decided and differ: a defect in one of them.
    Disagree,
    /// At least one side has no verdict.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementReport {
    pub agreement: Agreement,
    pub native: Status,
    pub external: Status,
    pub native_elapsed: Duration,
    pub external_elapsed: Duration,
    /// Whether each side's witness passed verification, when it had one.
    pub native_witness_ok: Option<bool>,
    pub external_witness_ok: Option<bool>,
    pub external_detail: Option<String>,
}

impl AgreementReport {
    /// Agreement on verdicts and every present witness verified.
    pub fn is_clean(&self) -> bool {
        self.agreement == Agreement::Agree
            && self.native_witness_ok != Some(false)
            && self.external_witness_ok != Some(false)
    }
}

pub fn agreement(native: Status, external: Status) -> Agreement {
    if !native.is_decided() || !external.is_decided() {
        Agreement::Indeterminate
    } else if native == external {
        Agreement::Agree
    } else {
        Agreement::Disagree
    }
}

fn witness_ok(instance: &Instance, solution: Option<&Solution>) -> Option<bool> {
    solution.map(|s| {
        verify(instance, s, VerifyOptions::default())
            .map(|r| r.ok)
            .unwrap_or(false)
    })
}

/// Runs the native search and the external solver on `instance`.
pub fn compare(
    instance: &Instance,
    encoding: EncodingKind,
    cmd: &SolverCommand,
    config: &SolverConfig,
) -> Result<AgreementReport, RunnerError> {
    let (verdict, stats): (_, SolveStats) = solve(instance, config)?;
    let external = run_external(instance, encoding, cmd)?;
    Ok(AgreementReport {
        agreement: agreement(stats.status, external.status),
        native: stats.status,
        external: external.status,
        native_elapsed: stats.elapsed,
        external_elapsed: external.elapsed,
        native_witness_ok: witness_ok(instance, verdict.solution()),
        external_witness_ok: witness_ok(instance, external.solution.as_ref()),
        external_detail: external.detail,
    })
}

/// Where kept encoding files go: `WWTPP_TMPDIR` or the system default.
pub fn temp_dir() -> PathBuf {
    std::env::var_os("WWTPP_TMPDIR")
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Industry;

    fn instance_a() -> Instance {
        Instance::new(4, 4).with_industry(Industry::new("1", 6, 2).with_discharge(1, 2, 3))
    }

    fn sh(script: &str, kind: SolverKind, timeout: Duration) -> SolverCommand {
        SolverCommand::new(
            format!("sh -c {} {{}}", shell_words::quote(script)),
            kind,
            timeout,
        )
        .unwrap()
    }

    #[test]
    fn template_needs_one_placeholder() {
        let t = Duration::from_secs(1);
        assert!(SolverCommand::new("z3 -smt2", SolverKind::Smt, t).is_err());
        assert!(SolverCommand::new("z3 {} {}", SolverKind::Smt, t).is_err());
        assert!(SolverCommand::new("z3 'unclosed {}", SolverKind::Smt, t).is_err());
        let cmd = SolverCommand::new("z3 -smt2 {}", SolverKind::Smt, t).unwrap();
        assert_eq!(
            cmd.argv("/tmp/a b").unwrap(),
            vec!["z3", "-smt2", "/tmp/a b"]
        );
    }

    #[test]
    fn nonexistent_binary_is_a_spawn_error() {
        let cmd = SolverCommand::new(
            "/nonexistent/solver {}",
            SolverKind::Smt,
            Duration::from_secs(1),
        )
        .unwrap();
        assert!(matches!(
            run_external(&instance_a(), EncodingKind::Smt2, &cmd),
            Err(RunnerError::Spawn { .. })
        ));
    }

    #[test]
    fn encoding_must_fit_solver() {
        let cmd = sh("echo sat", SolverKind::Smt, Duration::from_secs(1));
        assert!(matches!(
            run_external(&instance_a(), EncodingKind::Lp, &cmd),
            Err(RunnerError::Mismatch { .. })
        ));
    }

    #[test]
    fn status_markers() {
        assert_eq!(smt_status("unsat\n"), Some(Status::Unsat));
        assert_eq!(smt_status("\nsat\n(\n)"), Some(Status::Sat));
        assert_eq!(smt_status("(error \"x\")"), None);
        assert_eq!(
            flatzinc_status("=====UNSATISFIABLE=====\n"),
            Some(Status::Unsat)
        );
        assert_eq!(flatzinc_status("x = 1;\n----------\n"), Some(Status::Sat));
        assert_eq!(
            flatzinc_status("=====UNKNOWN=====\n"),
            Some(Status::Unknown)
        );
        assert_eq!(flatzinc_status(""), None);
        assert_eq!(milp_status("infeasible\n"), Some(Status::Unsat));
        assert_eq!(milp_status("optimal\nx 1\n"), Some(Status::Sat));
        assert_eq!(milp_status("Model status: Infeasible"), Some(Status::Unsat));
        assert_eq!(milp_status("garbage"), None);
    }

    #[test]
    fn unsat_from_fake_solver() {
        let cmd = sh("echo unsat", SolverKind::Smt, Duration::from_secs(5));
        let r = run_external(&instance_a(), EncodingKind::Smt2, &cmd).unwrap();
        assert_eq!(r.status, Status::Unsat);
        assert_eq!(r.exit_status, Some(0));
        assert!(r.solution.is_none());
    }

    #[test]
    fn sat_without_model_is_unknown() {
        let cmd = sh("echo sat", SolverKind::Smt, Duration::from_secs(5));
        let r = run_external(&instance_a(), EncodingKind::Smt2, &cmd).unwrap();
        assert_eq!(r.status, Status::Unknown);
        assert!(r.detail.unwrap().contains("model"));
    }

    #[test]
    fn unrecognized_output_is_unknown_and_kept() {
        let cmd = sh("echo hello", SolverKind::Milp, Duration::from_secs(5));
        let r = run_external(&instance_a(), EncodingKind::Lp, &cmd).unwrap();
        assert_eq!(r.status, Status::Unknown);
        assert_eq!(r.raw_output, "hello\n");
        let kept = r.kept_input.unwrap();
        assert!(std::fs::read_to_string(&kept)
            .unwrap()
            .starts_with("\\ wwtpp"));
        std::fs::remove_file(kept).unwrap();
    }

    #[test]
    fn timeout_kills_the_process_group() {
        let marker = tempfile::NamedTempFile::new().unwrap();
        let script = format!("sleep 30 & echo $! > {}; wait", marker.path().display());
        let cmd = sh(&script, SolverKind::Smt, Duration::from_millis(300));
        let r = run_external(&instance_a(), EncodingKind::Smt2, &cmd).unwrap();
        assert_eq!(r.status, Status::Timeout);
        assert_eq!(r.exit_status, None);
        assert!(r.elapsed < Duration::from_secs(10));
        let pid: i32 = std::fs::read_to_string(marker.path())
            .unwrap()
            .trim()
            .parse()
            .unwrap();
        std::thread::sleep(Duration::from_millis(100));
        // The grandchild must be gone (or at most a zombie awaiting init).
        let state = std::fs::read_to_string(format!("/proc/{pid}/stat")).unwrap_or_default();
        let alive = state
            .rsplit(')')
            .next()
            .and_then(|s| s.split_whitespace().next())
            .is_some_and(|s| s != "Z");
        assert!(!alive, "sleep {pid} survived: {state}");
    }

    #[test]
    fn agreement_table() {
        use Status::*;
        assert_eq!(agreement(Sat, Sat), Agreement::Agree);
        assert_eq!(agreement(Unsat, Sat), Agreement::Disagree);
        assert_eq!(agreement(Timeout, Sat), Agreement::Indeterminate);
        assert_eq!(agreement(Unsat, Unknown), Agreement::Indeterminate);
    }
}
