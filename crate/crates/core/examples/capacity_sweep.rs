//! Sweeps the plant capacity of a half-scale random instance and prints the
//! per-point verdicts and the located threshold.
//!
//! `cargo run --release --example capacity_sweep -- [seed] [points]`

use std::time::Duration;

use wwtpp::generator::{generate_random, scan_native, CapacitySweep, GenParams};
use wwtpp::solver::SolverConfig;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let points: u64 = args.next().map_or(40, |s| s.parse().expect("points"));

    let instance = generate_random(&GenParams::half_scale(seed)).expect("placement");
    let sweep = CapacitySweep::bracketing(&instance, points);
    let config = SolverConfig::default().with_time_limit(Duration::from_secs(10));
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = scan_native(&instance, &sweep, &config, jobs);

    print!("{}", report.to_csv());
    match report.threshold {
        Some(t) => println!("threshold {t} (monotone: {})", report.monotone),
        None => println!("no satisfiable capacity in range"),
    }
}
