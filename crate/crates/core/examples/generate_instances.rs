//! Draws one instance from each generator preset and writes them as JSON.
//!
//! `cargo run --example generate_instances -- [seed] [outdir]`

use std::path::PathBuf;

use wwtpp::generator::{desk_instance, generate_random, GenParams};
use wwtpp::model::write_instance;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let outdir = PathBuf::from(args.next().unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&outdir).expect("output directory");

    let presets = [
        ("random", GenParams::random_set(seed)),
        ("half", GenParams::half_scale(seed)),
        ("real-like", GenParams::real_like(seed)),
    ];
    let mut instances: Vec<_> = presets
        .into_iter()
        .map(|(name, p)| (name, generate_random(&p).expect("placement")))
        .collect();
    instances.push(("desk", desk_instance(seed)));

    for (name, inst) in instances {
        let path = outdir.join(format!("{name}-{seed}.json"));
        std::fs::write(&path, write_instance(&inst)).expect("write instance");
        println!(
            "{name:>9}: {} industries, {} discharges, {} periods, peak river load {} -> {}",
            inst.industry_count(),
            inst.discharge_count(),
            inst.periods,
            inst.peak_river_load(),
            path.display()
        );
    }
}
