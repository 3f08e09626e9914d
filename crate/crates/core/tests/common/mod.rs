#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use wwtpp::encoders::{
    encode_lp, encode_minizinc_cumulative, encode_minizinc_naive, encode_smtlib, Objective,
    SmtOptions,
};
use wwtpp::generator::desk_instance;
use wwtpp::model::{read_instance, Instance};
use wwtpp::runner::{SolverCommand, SolverKind};
use wwtpp::solver::OracleConfig;

/// Oracle budget for the desk corpus: 5 discharges plus 3 tanks over 7
/// emptying periods.
pub const DESK_ORACLE: OracleConfig = OracleConfig { max_decisions: 26 };

pub fn desk_corpus(seeds: std::ops::Range<u64>) -> Vec<(u64, Instance)> {
    seeds.map(|s| (s, desk_instance(s))).collect()
}

/// The configured command for `kind`, or `None` after printing a notice.
pub fn solver_or_skip(kind: SolverKind, test: &str) -> Option<SolverCommand> {
    match SolverCommand::from_env(kind) {
        Some(cmd) => Some(cmd.expect("solver command from the environment")),
        None => {
            eprintln!("skipping {test}: {} is not set", kind.env_var());
            None
        }
    }
}

/// Column values from the `name value` lines printed by
/// `scripts/highs_lp.py` after `optimal`.
pub fn lp_values(raw: &str) -> HashMap<String, f64> {
    raw.lines()
        .skip(1)
        .filter_map(|l| {
            let (name, value) = l.split_once(' ')?;
            Some((name.to_string(), value.trim().parse().ok()?))
        })
        .collect()
}

/// No tank starts the horizon above its capacity, which the Big-M rows
/// for the second period rule out.
pub fn first_period_fits_tanks(instance: &Instance) -> bool {
    instance.industries.iter().all(|ind| {
        ind.discharges
            .iter()
            .filter(|d| d.start == 1)
            .all(|d| d.flow <= ind.tank_capacity)
    })
}

pub fn all_tanks_drain(instance: &Instance) -> bool {
    instance.industries.iter().all(|i| i.tank_flow > 0)
}

pub const GOLDEN_FIXTURES: [&str; 4] = ["empty", "instance_a", "instance_b", "counting"];

pub fn fixture(name: &str) -> Instance {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    read_instance(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Every encoder output for a fixture, keyed by golden file name.
pub fn golden_artifacts(name: &str) -> Vec<(String, String)> {
    let inst = fixture(name);
    let naive = encode_minizinc_naive(&inst).unwrap();
    let cumulative = encode_minizinc_cumulative(&inst).unwrap();
    vec![
        (
            format!("{name}.smt2"),
            encode_smtlib(&inst, &SmtOptions::default()).unwrap(),
        ),
        (
            format!("{name}.lp"),
            encode_lp(&inst, Objective::None).unwrap(),
        ),
        (format!("{name}.naive.mzn"), naive.model),
        (format!("{name}.naive.dzn"), naive.data),
        (format!("{name}.cumulative.mzn"), cumulative.model),
        (format!("{name}.cumulative.dzn"), cumulative.data),
    ]
}

/// Golden files that are missing or differ from the current encoders.
pub fn golden_mismatches() -> Vec<String> {
    let dir = golden_dir();
    let mut bad = Vec::new();
    for name in GOLDEN_FIXTURES {
        for (file, text) in golden_artifacts(name) {
            match std::fs::read_to_string(dir.join(&file)) {
                Ok(stored) if stored == text => {}
                Ok(_) => bad.push(format!("{file} differs")),
                Err(e) => bad.push(format!("{file}: {e}")),
            }
        }
    }
    bad
}
