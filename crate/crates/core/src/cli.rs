//! The `wwtpp` command line.
//!
//! Verdict-bearing commands exit with 10 (sat, valid, agree), 20 (unsat,
//! invalid, disagree) or 30 (unknown, timeout, indeterminate). Usage and
//! I/O errors exit with 1; `generate`, `encode` and `scan` exit with 0 on
//! success.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::encoders::{
    encode_lp, encode_minizinc_cumulative_with, encode_minizinc_naive, encode_smtlib,
    CumulativeOptions, MiniZincModel, Objective, SmtOptions,
};
use crate::generator::{
    desk_instance, desk_params, generate_random, scan_native, CapacitySweep, GenParams, IntRange,
};
use crate::model::{
    read_instance, read_solution, write_instance, write_solution, Instance, Status,
};
use crate::runner::{compare, Agreement, EncodingKind, SolverCommand, SolverKind, DEFAULT_TIMEOUT};
use crate::semantics::{verify, VerifyOptions};
use crate::solver::{solve, BranchOrder, EmptyOrder, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_POSITIVE: i32 = 10;
pub const EXIT_NEGATIVE: i32 = 20;
pub const EXIT_UNDECIDED: i32 = 30;

#[derive(Debug, Parser)]
#[command(
    name = "wwtpp",
    version,
    about = "Wastewater treatment plant discharge scheduling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Write an instance in a solver input format.
    Encode(EncodeArgs),
    /// Decide feasibility with the native search.
    Solve(SolveArgs),
    /// Check a solution against an instance.
    Verify(VerifyArgs),
    /// Sweep the plant capacity and write per-point verdicts as CSV.
    Scan(ScanArgs),
    /// Compare the native verdict with an external solver.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// 10 industries, 114 discharges, 24-period window, deadline 26.
    Random,
    /// 5 industries, 40 discharges, 12-period window, deadline 13.
    Half,
    /// 8 industries, 94 discharges, 24 periods.
    RealLike,
    /// Tiny instances within reach of exhaustive enumeration.
    Desk,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// JSON file with generator parameters; overrides --preset.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    industries: Option<usize>,
    #[arg(long)]
    discharges: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    /// Inclusive flow range as MIN:MAX.
    #[arg(long, value_parser = parse_range)]
    flow: Option<IntRange>,
    #[arg(long, value_parser = parse_range)]
    duration: Option<IntRange>,
    #[arg(long, value_parser = parse_range)]
    tank_capacity: Option<IntRange>,
    #[arg(long, value_parser = parse_range)]
    tank_flow: Option<IntRange>,
    /// Plant capacity of the written instance. Defaults to 0, except that
    /// an unmodified desk preset gets the capacity of its test corpus.
    #[arg(long)]
    capacity: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Smt2,
    Lp,
    MznNaive,
    MznCumulative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    None,
    MinBufferSum,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    /// Leave out the implied bounds on emptying (SMT-LIB only).
    #[arg(long)]
    no_redundant: bool,
    /// LP objective.
    #[arg(long, value_enum, default_value = "none")]
    objective: ObjectiveArg,
    /// Cumulative model without the per-period emptying consistency rows.
    #[arg(long)]
    no_flush_consistency: bool,
    /// For MiniZinc formats, write the data here and only the model to
    /// --out; otherwise --out gets both.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BranchArg {
    Biggest,
    River,
    Buffer,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmptyArg {
    EmptyFirst,
    HoldFirst,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Wall-clock limit in milliseconds.
    #[arg(long)]
    time_limit: Option<u64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, value_enum, default_value = "biggest")]
    branch: BranchArg,
    #[arg(long, value_enum, default_value = "empty-first")]
    empty_order: EmptyArg,
}

impl SearchArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            time_limit: self.time_limit.map(Duration::from_millis),
            node_limit: self.node_limit,
            branch_order: match self.branch {
                BranchArg::Biggest => BranchOrder::BiggestDischargeFirst,
                BranchArg::River => BranchOrder::RiverFirst,
                BranchArg::Buffer => BranchOrder::BufferFirst,
            },
            empty_order: match self.empty_order {
                EmptyArg::EmptyFirst => EmptyOrder::EmptyFirst,
                EmptyArg::HoldFirst => EmptyOrder::HoldFirst,
            },
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Write the schedule here when one is found.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// Also bound the tank content at the end of the first period.
    #[arg(long)]
    strict_tank_j1: bool,
    /// Also check the implied bounds on emptying.
    #[arg(long)]
    check_redundant: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    lo: u64,
    #[arg(long)]
    hi: u64,
    #[arg(long)]
    step: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Smt,
    Milp,
    Flatzinc,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Solver command with one {} for the input file; defaults to the
    /// kind's environment variable.
    #[arg(long)]
    external: Option<String>,
    #[arg(long, value_enum, default_value = "smt")]
    kind: KindArg,
    /// Encoding handed to the solver; defaults to the kind's native format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// External solver timeout in milliseconds.
    #[arg(long)]
    timeout: Option<u64>,
    #[command(flatten)]
    search: SearchArgs,
}

type CliResult = Result<i32, String>;

fn parse_range(s: &str) -> Result<IntRange, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected MIN:MAX")?;
    let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(IntRange::new(lo, hi))
}

fn read_text(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    read_instance(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Writes `text` to `path` through a temporary file in the same directory
/// and a rename, or to standard output when `path` is `None`.
fn write_output(path: Option<&Path>, text: &str) -> Result<(), String> {
    let Some(path) = path else {
        print!("{text}");
        return std::io::stdout().flush().map_err(|e| e.to_string());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| format!("{}: {e}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::Sat => EXIT_POSITIVE,
        Status::Unsat => EXIT_NEGATIVE,
        Status::Unknown | Status::Timeout => EXIT_UNDECIDED,
    }
}

fn generate(args: GenerateArgs) -> CliResult {
    let seed = args.seed.unwrap_or(0);
    let mut params = match &args.params {
        Some(path) => serde_json::from_str::<GenParams>(&read_text(path)?)
            .map_err(|e| format!("{}: {e}", path.display()))?,
        None => match args.preset {
            Preset::Random => GenParams::random_set(seed),
            Preset::Half => GenParams::half_scale(seed),
            Preset::RealLike => GenParams::real_like(seed),
            Preset::Desk => desk_params(seed),
        },
    };
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = args.$flag { params.$field = v; })*
        };
    }
    set!(industries => industries, discharges => discharges_total, horizon => horizon,
         window => planning_window, flow => flow_range, duration => duration_range,
         tank_capacity => tank_capacity_range, tank_flow => tank_flow_range);
    let desk_default = args.params.is_none()
        && matches!(args.preset, Preset::Desk)
        && params == desk_params(params.seed);
    let instance = if desk_default && args.capacity.is_none() {
        desk_instance(params.seed)
    } else {
        generate_random(&params)
            .map_err(|e| e.to_string())?
            .with_plant_capacity(args.capacity.unwrap_or(0))
    };
    write_output(args.out.as_deref(), &write_instance(&instance))?;
    Ok(EXIT_OK)
}

fn encode(args: EncodeArgs) -> CliResult {
    let instance = load_instance(&args.input)?;
    let mzn = |model: MiniZincModel| -> Result<String, String> {
        match &args.data {
            Some(path) => {
                write_output(Some(path), &model.data)?;
                Ok(model.model)
            }
            None => Ok(model.combined()),
        }
    };
    let text = match args.format {
        Format::Smt2 => encode_smtlib(
            &instance,
            &SmtOptions {
                include_redundant: !args.no_redundant,
                ..SmtOptions::default()
            },
        )
        .map_err(|e| e.to_string())?,
        Format::Lp => encode_lp(
            &instance,
            match args.objective {
                ObjectiveArg::None => Objective::None,
                ObjectiveArg::MinBufferSum => Objective::MinBufferSum,
            },
        )
        .map_err(|e| e.to_string())?,
        Format::MznNaive => mzn(encode_minizinc_naive(&instance).map_err(|e| e.to_string())?)?,
        Format::MznCumulative => mzn(encode_minizinc_cumulative_with(
            &instance,
            CumulativeOptions {
                flush_consistency: !args.no_flush_consistency,
            },
        )
        .map_err(|e| e.to_string())?)?,
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn solve_cmd(args: SolveArgs) -> CliResult {
    let instance = load_instance(&args.input)?;
    let (verdict, stats) = solve(&instance, &args.search.config()).map_err(|e| e.to_string())?;
    println!("{}", stats.status);
    eprintln!(
        "nodes {} backtracks {} time {:.3} ms",
        stats.nodes_explored,
        stats.backtracks,
        stats.elapsed.as_secs_f64() * 1e3
    );
    if let (Some(path), Some(sol)) = (&args.solution, verdict.solution()) {
        write_output(Some(path), &write_solution(sol))?;
    }
    Ok(status_code(stats.status))
}

fn verify_cmd(args: VerifyArgs) -> CliResult {
    let instance = load_instance(&args.input)?;
    let solution = read_solution(&read_text(&args.solution)?)
        .map_err(|e| format!("{}: {e}", args.solution.display()))?;
    let options = VerifyOptions {
        check_redundant: args.check_redundant,
        check_first_period_tank_capacity: args.strict_tank_j1,
    };
    let report = verify(&instance, &solution, options).map_err(|e| e.to_string())?;
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{report}");
    }
    Ok(if report.ok {
        EXIT_POSITIVE
    } else {
        EXIT_NEGATIVE
    })
}

fn scan(args: ScanArgs) -> CliResult {
    let instance = load_instance(&args.input)?;
    let sweep = CapacitySweep::new(args.lo, args.hi, args.step).map_err(|e| e.to_string())?;
    let report = scan_native(&instance, &sweep, &args.search.config(), args.jobs.max(1));
    write_output(args.out.as_deref(), &report.to_csv())?;
    match report.threshold {
        Some(t) => eprintln!("threshold {t}"),
        None => eprintln!("no satisfiable capacity in range"),
    }
    if !report.monotone {
        eprintln!("warning: satisfiable capacity below an unsatisfiable one");
    }
    Ok(EXIT_OK)
}

fn compare_cmd(args: CompareArgs) -> CliResult {
    let instance = load_instance(&args.input)?;
    let kind = match args.kind {
        KindArg::Smt => SolverKind::Smt,
        KindArg::Milp => SolverKind::Milp,
        KindArg::Flatzinc => SolverKind::FlatZinc,
    };
    let encoding = match args.format {
        None => kind.default_encoding(),
        Some(Format::Smt2) => EncodingKind::Smt2,
        Some(Format::Lp) => EncodingKind::Lp,
        Some(Format::MznNaive) => EncodingKind::MznNaive,
        Some(Format::MznCumulative) => EncodingKind::MznCumulative,
    };
    let mut cmd = match &args.external {
        Some(t) => SolverCommand::new(t.clone(), kind, DEFAULT_TIMEOUT),
        None => SolverCommand::from_env(kind)
            .ok_or_else(|| format!("no --external and {} is unset", kind.env_var()))?,
    }
    .map_err(|e| e.to_string())?;
    if let Some(ms) = args.timeout {
        cmd.timeout = Duration::from_millis(ms);
    }
    let report =
        compare(&instance, encoding, &cmd, &args.search.config()).map_err(|e| e.to_string())?;
    let label = match report.agreement {
        Agreement::Agree => "agree",
        Agreement::Disagree => "disagree",
        Agreement::Indeterminate => "indeterminate",
    };
    println!("{label}");
    println!(
        "native {} ({:.3} ms), external {} ({:.3} ms)",
        report.native,
        report.native_elapsed.as_secs_f64() * 1e3,
        report.external,
        report.external_elapsed.as_secs_f64() * 1e3
    );
    for (side, ok) in [
        ("native", report.native_witness_ok),
        ("external", report.external_witness_ok),
    ] {
        if let Some(ok) = ok {
            println!("{side} witness {}", if ok { "valid" } else { "INVALID" });
        }
    }
    if let Some(detail) = &report.external_detail {
        println!("external: {detail}");
    }
    Ok(match report.agreement {
        Agreement::Agree if report.is_clean() => EXIT_POSITIVE,
        Agreement::Agree | Agreement::Disagree => EXIT_NEGATIVE,
        Agreement::Indeterminate => EXIT_UNDECIDED,
    })
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Encode(a) => encode(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Scan(a) => scan(a),
        Command::Compare(a) => compare_cmd(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}
