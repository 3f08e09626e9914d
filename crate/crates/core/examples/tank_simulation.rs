//! Replays fixed reroute and empty/hold decisions through the tank
//! dynamics, then splits each buffered discharge into the pieces used by
//! the cumulative MiniZinc model.
//!
//! `cargo run --example tank_simulation`

use wwtpp::encoders::split_discharge;
use wwtpp::model::{Industry, Instance};
use wwtpp::semantics::simulate_buffers;

fn main() {
    let instance = Instance::new(5, 4)
        .with_industry(Industry::new("1", 6, 2).with_discharge(1, 2, 3))
        .with_industry(Industry::new("2", 6, 2).with_discharge(1, 2, 3));
    let reroute = [false, true];
    let empty = vec![vec![false; 4], vec![false, true, true, true]];

    match simulate_buffers(&instance, &reroute, &empty) {
        Ok(t) => {
            for i in 0..instance.industry_count() {
                println!(
                    "industry {}: bout {:?} buf {:?}",
                    i + 1,
                    t.bout[i],
                    t.buf[i]
                );
            }
        }
        Err(e) => println!("infeasible: {e}"),
    }

    for ind in &instance.industries {
        for d in &ind.discharges {
            let plan =
                split_discharge(d.duration() as u64, d.flow, ind.tank_flow).expect("draining tank");
            let pieces: Vec<u64> = plan.pieces(ind.tank_flow).collect();
            println!(
                "industry {} discharge {}..{}: pieces {pieces:?}",
                ind.id, d.start, d.end
            );
        }
    }
}
