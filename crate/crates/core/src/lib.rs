//! Scheduling industrial discharges into a shared wastewater treatment
//! plant.
//!
//! Each industry either sends a discharge straight to the plant or holds
//! it in its retention tank and empties the tank later at a fixed rate.
//! The plant's per-period capacity must never be exceeded and every tank
//! must be empty at the deadline.
//!
//! - [`model`]: instances, solutions and their JSON files.
//! - [`semantics`]: the constraint checker and tank simulation.
//! - [`solver`]: native depth-first search and an exhaustive oracle.
//! - [`encoders`]: SMT-LIB, LP and MiniZinc encodings.
//! - [`generator`]: random instances and plant-capacity sweeps.
//! - [`runner`]: external solvers and verdict comparison.
//! - [`cli`]: the `wwtpp` command.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod encoders;
pub mod generator;
pub mod model;
pub mod runner;
pub mod semantics;
pub mod solver;
