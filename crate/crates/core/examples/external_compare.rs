//! Runs the native search and an external solver on one instance file and
//! reports whether they agree.
//!
//! `WWTPP_SMT_CMD="z3 -smt2 {}" cargo run --example external_compare -- INSTANCE [smt|milp|flatzinc]`

use wwtpp::model::read_instance;
use wwtpp::runner::{compare, SolverCommand, SolverKind};
use wwtpp::solver::SolverConfig;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .expect("usage: external_compare INSTANCE [smt|milp|flatzinc]");
    let kind = match args.next().as_deref().unwrap_or("smt") {
        "smt" => SolverKind::Smt,
        "milp" => SolverKind::Milp,
        "flatzinc" => SolverKind::FlatZinc,
        other => panic!("unknown solver kind {other}"),
    };
    let Some(cmd) = SolverCommand::from_env(kind) else {
        eprintln!("{} is not set", kind.env_var());
        std::process::exit(1);
    };
    let cmd = cmd.expect("solver command");
    let instance = read_instance(&std::fs::read_to_string(&path).expect("read instance"))
        .expect("parse instance");

    let report = compare(
        &instance,
        kind.default_encoding(),
        &cmd,
        &SolverConfig::default(),
    )
    .expect("compare");
    println!("native   {} in {:?}", report.native, report.native_elapsed);
    println!(
        "external {} in {:?}",
        report.external, report.external_elapsed
    );
    println!(
        "{:?}, witnesses ok: native {:?} external {:?}",
        report.agreement, report.native_witness_ok, report.external_witness_ok
    );
}
