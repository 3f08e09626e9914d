//! Text encodings of an instance for external solvers: SMT-LIB v2 over
//! linear integer arithmetic, an LP-format integer program with Big-M
//! rows, and two MiniZinc models.
//!
//! Variable names are fixed so that solver output can be mapped back
//! without side files: `c_i_j`, `bout_i_j`, `buf_i_j` (1-based industry
//! and period), plus `r_i_j`, `delta_i_a_b` and `dp1_i_j`..`dp3_i_j` in
//! the LP model.

mod lp;
mod minizinc;
mod smt;

use thiserror::Error;

use crate::model::{validate_instance, Instance, ValidationErrors};

pub use lp::{decode_lp_values, encode_lp, IpVariableMap, Objective};
pub use minizinc::{
    encode_minizinc_cumulative, encode_minizinc_cumulative_with, encode_minizinc_naive,
    split_discharge, CumulativeOptions, MiniZincModel, SplitPlan,
};
pub use smt::{encode_smtlib, parse_smt_model, SmtOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationErrors),
    #[error("industry {industry} has tank flow 0 but discharges that could be buffered")]
    Unsplittable { industry: usize },
    #[error("cannot split a discharge into a tank with flow 0")]
    ZeroTankFlow,
}

/// Failure to map solver output back to a solution.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelParseError {
    #[error("malformed solver output: {0}")]
    Syntax(String),
    #[error("variable {0} missing from model")]
    Missing(String),
    #[error("variable {name} has value {value} outside its domain")]
    Value { name: String, value: String },
    #[error("discharge {discharge} of industry {industry} is split between river and tank")]
    Incoherent { industry: usize, discharge: usize },
}

fn ensure_valid(instance: &Instance) -> Result<(), EncodeError> {
    validate_instance(instance).map_err(EncodeError::InvalidInstance)
}

/// Recovers per-discharge reroute decisions from the values of the river
/// flows of each covered period. `river(i, j)` returns the scheduled flow
/// of industry `i` at 0-based period `j`.
fn reroute_from_flows<F>(instance: &Instance, mut river: F) -> Result<Vec<bool>, ModelParseError>
where
    F: FnMut(usize, usize, u64) -> Result<u64, ModelParseError>,
{
    let mut reroute = Vec::with_capacity(instance.discharge_count());
    for (i, ind) in instance.industries.iter().enumerate() {
        for (q, d) in ind.discharges.iter().enumerate() {
            let mut sent = 0;
            for j in d.start - 1..d.end {
                if river(i, j, d.flow)? == d.flow {
                    sent += 1;
                }
            }
            match sent {
                0 => reroute.push(true),
                n if n == d.duration() => reroute.push(false),
                _ => {
                    return Err(ModelParseError::Incoherent {
                        industry: i + 1,
                        discharge: q + 1,
                    })
                }
            }
        }
    }
    Ok(reroute)
}
