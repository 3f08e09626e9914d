//! Builds a two-industry instance in code, solves it, checks the schedule
//! and shows what the checker reports for a tampered copy.
//!
//! `cargo run --example solve_and_verify`

use wwtpp::model::{Industry, Instance, Verdict};
use wwtpp::semantics::{verify, VerifyOptions};
use wwtpp::solver::{solve, SolverConfig};

fn main() {
    let instance = Instance::new(5, 4)
        .with_industry(Industry::new("1", 6, 2).with_discharge(1, 2, 3))
        .with_industry(Industry::new("2", 6, 2).with_discharge(1, 2, 3));

    let (verdict, stats) = solve(&instance, &SolverConfig::default()).expect("valid instance");
    println!("{} after {} nodes", verdict.status(), stats.nodes_explored);
    let Verdict::Sat(schedule) = verdict else {
        return;
    };

    for (i, ind) in instance.industries.iter().enumerate() {
        println!(
            "industry {}: bout {:?} buf {:?}",
            ind.id, schedule.bout[i], schedule.buf[i]
        );
    }
    println!("rerouted: {:?}", schedule.reroute);
    print!(
        "{}",
        verify(&instance, &schedule, VerifyOptions::default()).unwrap()
    );

    let mut tampered = schedule.clone();
    let i = tampered.reroute.iter().position(|&r| r).unwrap_or(0);
    tampered.bout[i][1] = 1;
    print!(
        "{}",
        verify(&instance, &tampered, VerifyOptions::default()).unwrap()
    );
}
