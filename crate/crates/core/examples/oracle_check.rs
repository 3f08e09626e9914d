//! Cross-checks the native search against exhaustive enumeration on a
//! range of desk-scale seeds.
//!
//! `cargo run --release --example oracle_check -- [seeds]`

use wwtpp::generator::desk_instance;
use wwtpp::model::Status;
use wwtpp::solver::{oracle_solve_with, solve, OracleConfig, SolverConfig};

fn main() {
    let seeds: u64 = std::env::args()
        .nth(1)
        .map_or(200, |s| s.parse().expect("seed count"));
    let budget = OracleConfig { max_decisions: 26 };
    let (mut sat, mut disagree) = (0, 0);
    for seed in 0..seeds {
        let inst = desk_instance(seed);
        let native = solve(&inst, &SolverConfig::default())
            .expect("valid")
            .0
            .status();
        let oracle = oracle_solve_with(&inst, &budget)
            .expect("within budget")
            .status();
        if native != oracle {
            disagree += 1;
            println!("seed {seed}: native {native}, oracle {oracle}");
        }
        sat += usize::from(oracle == Status::Sat);
    }
    println!("{seeds} instances, {sat} sat, {disagree} disagreements");
}
