//! Feasibility semantics: a literal checker for the time-indexed constraints
//! and a forward buffer simulator.
//!
//! The constraint families are numbered after the time-indexed model:
//!
//! | family | meaning |
//! |--------|---------|
//! | C1     | plant load `sum_i c_ij + Bout_ij <= PlantCapacity` in every period |
//! | C2     | `Buf_i1 = d_i1 - c_i1` |
//! | C3     | `Buf_ij = Buf_i,j-1 - Bout_ij + d_ij - c_ij` for `j >= 2` |
//! | C4     | `Buf_ij <= TankCapacity_i` for `2 <= j <= m-1` |
//! | C5     | `Buf_im = 0` |
//! | C6     | `Bout_i1 = 0` |
//! | C7-C9  | `Bout_ij` is 0, or the full rate with enough stored, or the whole remainder when it fits the rate |
//! | C10    | a discharge goes entirely to the river or entirely to the tank |
//! | C11    | `0 <= Bout_ij <= TankFlow_i` (implied) |
//! | C12    | `Bout_ij <= Buf_i,j-1` (implied) |
//!
//! C10 holds by construction because [`Solution::reroute`] is per discharge.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{build_grid, DischargeGrid, Industry, Instance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConstraintFamily {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    #[serde(rename = "C7-C9")]
    C7To9,
    C10,
    C11,
    C12,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::C1 => "C1",
            Self::C2 => "C2",
            Self::C3 => "C3",
            Self::C4 => "C4",
            Self::C5 => "C5",
            Self::C6 => "C6",
            Self::C7To9 => "C7-C9",
            Self::C10 => "C10",
            Self::C11 => "C11",
            Self::C12 => "C12",
        };
        f.write_str(s)
    }
}

/// A failed constraint instance. `industry` and `period` are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint_family: ConstraintFamily,
    pub industry: Option<usize>,
    pub period: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint_family)?;
        match (self.industry, self.period) {
            (Some(i), Some(j)) => write!(f, " at industry {i}, period {j}")?,
            (Some(i), None) => write!(f, " at industry {i}")?,
            (None, Some(j)) => write!(f, " at period {j}")?,
            (None, None) => {}
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, family: ConstraintFamily, industry: usize, period: usize) -> bool {
        self.violations.iter().any(|v| {
            v.constraint_family == family
                && v.industry == Some(industry)
                && v.period == Some(period)
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return writeln!(f, "valid");
        }
        writeln!(f, "invalid: {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Also check the implied bounds C11 and C12.
    pub check_redundant: bool,
    /// Also require `Buf_i1 <= TankCapacity_i`, which C4 leaves out.
    pub check_first_period_tank_capacity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

fn check_matrix(name: &str, rows: &[Vec<u64>], k: usize, m: usize) -> Result<(), SemanticsError> {
    if rows.len() != k {
        return Err(SemanticsError::DimensionMismatch(format!(
            "{name} has {} rows, expected {k}",
            rows.len()
        )));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(SemanticsError::DimensionMismatch(format!(
            "{name} row {} has {} columns, expected {m}",
            i + 1,
            row.len()
        )));
    }
    Ok(())
}

fn check_reroute(instance: &Instance, reroute: &[bool]) -> Result<(), SemanticsError> {
    let n = instance.discharge_count();
    if reroute.len() != n {
        return Err(SemanticsError::DimensionMismatch(format!(
            "reroute has {} entries, expected {n}",
            reroute.len()
        )));
    }
    Ok(())
}

/// The `c_ij` matrix implied by per-discharge reroute decisions.
pub fn river_flows(instance: &Instance, reroute: &[bool]) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0; instance.periods]; instance.industry_count()];
    for r in instance.discharge_refs() {
        if !reroute[r.flat] {
            let d = r.discharge;
            for cell in &mut c[r.industry][d.start - 1..d.end] {
                *cell = d.flow;
            }
        }
    }
    c
}

/// Checks a solution against every constraint family and reports all
/// failures.
pub fn verify(
    instance: &Instance,
    solution: &Solution,
    options: VerifyOptions,
) -> Result<VerificationReport, SemanticsError> {
    let k = instance.industry_count();
    let m = instance.periods;
    check_reroute(instance, &solution.reroute)?;
    check_matrix("bout", &solution.bout, k, m)?;
    check_matrix("buf", &solution.buf, k, m)?;
    if m == 0 {
        return Err(SemanticsError::DimensionMismatch(
            "instance has no periods".into(),
        ));
    }

    let grid = build_grid(instance);
    let c = river_flows(instance, &solution.reroute);
    let mut out = Vec::new();
    let mut push = |family, industry: Option<usize>, period: Option<usize>, detail: String| {
        out.push(Violation {
            constraint_family: family,
            industry: industry.map(|i| i + 1),
            period: period.map(|t| t + 1),
            detail,
        })
    };

    for t in 0..m {
        let load: u128 = (0..k)
            .map(|i| c[i][t] as u128 + solution.bout[i][t] as u128)
            .sum();
        if load > instance.plant_capacity as u128 {
            push(
                ConstraintFamily::C1,
                None,
                Some(t),
                format!(
                    "plant load {load} exceeds capacity {}",
                    instance.plant_capacity
                ),
            );
        }
    }

    for (i, ind) in instance.industries.iter().enumerate() {
        let d = &grid.rows[i];
        let bout = &solution.bout[i];
        let buf = &solution.buf[i];
        let tf = ind.tank_flow as i128;
        let tc = ind.tank_capacity as i128;

        let first = d[0] as i128 - c[i][0] as i128;
        if buf[0] as i128 != first {
            push(
                ConstraintFamily::C2,
                Some(i),
                Some(0),
                format!("buffer {} but inflow is {first}", buf[0]),
            );
        }
        for t in 1..m {
            let expected = buf[t - 1] as i128 - bout[t] as i128 + d[t] as i128 - c[i][t] as i128;
            if buf[t] as i128 != expected {
                push(
                    ConstraintFamily::C3,
                    Some(i),
                    Some(t),
                    format!("buffer {} but balance gives {expected}", buf[t]),
                );
            }
        }
        let window_start = if options.check_first_period_tank_capacity {
            0
        } else {
            1
        };
        for t in window_start..m.saturating_sub(1) {
            if buf[t] as i128 > tc {
                push(
                    ConstraintFamily::C4,
                    Some(i),
                    Some(t),
                    format!("buffer {} exceeds tank capacity {tc}", buf[t]),
                );
            }
        }
        if buf[m - 1] != 0 {
            push(
                ConstraintFamily::C5,
                Some(i),
                Some(m - 1),
                format!("buffer holds {} at the deadline", buf[m - 1]),
            );
        }
        if bout[0] != 0 {
            push(
                ConstraintFamily::C6,
                Some(i),
                Some(0),
                format!("emptied {} in the first period", bout[0]),
            );
        }
        for t in 1..m {
            let out_flow = bout[t] as i128;
            let prev = buf[t - 1] as i128;
            let idle = out_flow == 0;
            let full_rate = out_flow == tf && prev >= tf;
            let remainder = out_flow == prev && prev <= tf;
            if !(idle || full_rate || remainder) {
                push(
                    ConstraintFamily::C7To9,
                    Some(i),
                    Some(t),
                    format!("emptied {out_flow} with {prev} stored and rate {tf}"),
                );
            }
            if options.check_redundant {
                if out_flow > tf {
                    push(
                        ConstraintFamily::C11,
                        Some(i),
                        Some(t),
                        format!("emptied {out_flow} above rate {tf}"),
                    );
                }
                if out_flow > prev {
                    push(
                        ConstraintFamily::C12,
                        Some(i),
                        Some(t),
                        format!("emptied {out_flow} with only {prev} stored"),
                    );
                }
            }
        }
    }
    Ok(VerificationReport::from_violations(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    TankCapacity,
    NotEmptyAtDeadline,
}

impl fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TankCapacity => "tank capacity",
            Self::NotEmptyAtDeadline => "not empty at deadline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Dimension(#[from] SemanticsError),
    /// First breach found; `industry` and `period` are 1-based.
    #[error("infeasible at industry {industry}, period {period}: {reason}")]
    InfeasibleAt {
        industry: usize,
        period: usize,
        reason: InfeasibleReason,
    },
}

/// `Bout` and `Buf` matrices produced by [`simulate_buffers`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferTrajectory {
    pub bout: Vec<Vec<u64>>,
    pub buf: Vec<Vec<u64>>,
}

impl BufferTrajectory {
    pub fn into_solution(self, reroute: Vec<bool>) -> Solution {
        Solution {
            reroute,
            bout: self.bout,
            buf: self.buf,
        }
    }
}

/// Runs one tank forward. `inflow[t]` is `d - c` in period `t + 1`; `empty[t]`
/// asks for emptying at the forced rate. Fails fast with the 0-based period
/// of the first breach.
pub(crate) fn simulate_tank(
    industry: &Industry,
    inflow: &[u64],
    empty: &[bool],
) -> Result<(Vec<u64>, Vec<u64>), (usize, InfeasibleReason)> {
    let m = inflow.len();
    let mut bout = vec![0; m];
    let mut buf = vec![0; m];
    let mut level = 0u64;
    for t in 0..m {
        if t > 0 && empty[t] {
            bout[t] = industry.tank_flow.min(level);
        }
        level = level - bout[t] + inflow[t];
        buf[t] = level;
        if t >= 1 && t + 1 < m && level > industry.tank_capacity {
            return Err((t, InfeasibleReason::TankCapacity));
        }
    }
    if level != 0 {
        return Err((m - 1, InfeasibleReason::NotEmptyAtDeadline));
    }
    Ok((bout, buf))
}

pub(crate) fn buffered_inflow(
    grid: &DischargeGrid,
    river: &[Vec<u64>],
    industry: usize,
) -> Vec<u64> {
    grid.rows[industry]
        .iter()
        .zip(&river[industry])
        .map(|(d, c)| d - c)
        .collect()
}

/// Deterministic forward simulation of every tank under fixed reroute and
/// empty/hold decisions. Emptying always takes `min(TankFlow, Buf_prev)`,
/// which covers both non-idle branches of C7-C9. The plant load is not
/// checked here.
pub fn simulate_buffers(
    instance: &Instance,
    reroute: &[bool],
    empty_decision: &[Vec<bool>],
) -> Result<BufferTrajectory, SimulationError> {
    let k = instance.industry_count();
    let m = instance.periods;
    check_reroute(instance, reroute)?;
    if empty_decision.len() != k || empty_decision.iter().any(|r| r.len() != m) {
        return Err(
            SemanticsError::DimensionMismatch(format!("empty_decision must be {k} x {m}")).into(),
        );
    }
    let grid = build_grid(instance);
    let river = river_flows(instance, reroute);
    let mut traj = BufferTrajectory {
        bout: Vec::with_capacity(k),
        buf: Vec::with_capacity(k),
    };
    for (i, ind) in instance.industries.iter().enumerate() {
        let inflow = buffered_inflow(&grid, &river, i);
        let (bout, buf) =
            simulate_tank(ind, &inflow, &empty_decision[i]).map_err(|(t, reason)| {
                SimulationError::InfeasibleAt {
                    industry: i + 1,
                    period: t + 1,
                    reason,
                }
            })?;
        traj.bout.push(bout);
        traj.buf.push(buf);
    }
    Ok(traj)
}
