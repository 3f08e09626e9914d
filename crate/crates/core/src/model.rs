//! Instances, solutions and their on-disk format.
//!
//! Periods are 1-based in every user-facing place (discharge spans, report
//! locations, file formats). Matrices such as [`DischargeGrid`] rows or
//! [`Solution::bout`] are plain vectors, so period `j` lives at index `j - 1`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A scheduled discharge: constant `flow` during periods `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Discharge {
    pub start: usize,
    pub end: usize,
    pub flow: u64,
}

impl Discharge {
    pub fn new(start: usize, end: usize, flow: u64) -> Self {
        Self { start, end, flow }
    }

    pub fn duration(&self) -> usize {
        self.end + 1 - self.start
    }

    /// Total volume sent to the tank when the discharge is rerouted.
    pub fn volume(&self) -> u64 {
        self.flow * self.duration() as u64
    }

    pub fn covers(&self, period: usize) -> bool {
        self.start <= period && period <= self.end
    }
}

/// An industry with its retention tank and planned discharges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Industry {
    pub id: String,
    pub tank_capacity: u64,
    /// Emptying rate of the tank, in flow units per period.
    pub tank_flow: u64,
    pub discharges: Vec<Discharge>,
}

impl Industry {
    pub fn new(id: impl Into<String>, tank_capacity: u64, tank_flow: u64) -> Self {
        Self {
            id: id.into(),
            tank_capacity,
            tank_flow,
            discharges: Vec::new(),
        }
    }

    pub fn with_discharge(mut self, start: usize, end: usize, flow: u64) -> Self {
        self.discharges.push(Discharge::new(start, end, flow));
        self
    }

    pub fn total_volume(&self) -> u64 {
        self.discharges.iter().map(Discharge::volume).sum()
    }
}

/// A problem instance: one plant, `periods` unit time periods, and the
/// industries sharing the plant. Period `periods` is the overall deadline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub plant_capacity: u64,
    pub periods: usize,
    pub industries: Vec<Industry>,
}

/// Position of a discharge inside an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DischargeRef {
    /// Industry index (0-based).
    pub industry: usize,
    /// Index within the industry's discharge list (0-based).
    pub local: usize,
    /// Index in the industry-major flattening used by [`Solution::reroute`].
    pub flat: usize,
    pub discharge: Discharge,
}

impl Instance {
    pub fn new(plant_capacity: u64, periods: usize) -> Self {
        Self {
            plant_capacity,
            periods,
            industries: Vec::new(),
        }
    }

    pub fn with_industry(mut self, industry: Industry) -> Self {
        self.industries.push(industry);
        self
    }

    /// Same discharges and tanks, different plant capacity.
    pub fn with_plant_capacity(&self, plant_capacity: u64) -> Self {
        Self {
            plant_capacity,
            ..self.clone()
        }
    }

    pub fn industry_count(&self) -> usize {
        self.industries.len()
    }

    pub fn discharge_count(&self) -> usize {
        self.industries.iter().map(|ind| ind.discharges.len()).sum()
    }

    /// All discharges in industry-major order.
    pub fn discharge_refs(&self) -> Vec<DischargeRef> {
        let mut out = Vec::with_capacity(self.discharge_count());
        for (i, ind) in self.industries.iter().enumerate() {
            for (local, d) in ind.discharges.iter().enumerate() {
                out.push(DischargeRef {
                    industry: i,
                    local,
                    flat: out.len(),
                    discharge: *d,
                });
            }
        }
        out
    }

    pub fn total_volume(&self) -> u64 {
        self.industries.iter().map(Industry::total_volume).sum()
    }

    /// Largest per-period plant load when every discharge goes to the river.
    /// Any capacity at or above this value admits the identity schedule.
    pub fn peak_river_load(&self) -> u64 {
        let grid = build_grid(self);
        (0..self.periods)
            .map(|t| grid.rows.iter().map(|row| row[t]).sum::<u64>())
            .max()
            .unwrap_or(0)
    }
}

/// The `d_ij` matrix: scheduled flow per industry and period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DischargeGrid {
    pub periods: usize,
    /// One row per industry; `rows[i][j - 1]` is the flow in period `j`.
    pub rows: Vec<Vec<u64>>,
}

impl DischargeGrid {
    /// Flow of industry `industry` (0-based) in `period` (1-based).
    pub fn flow(&self, industry: usize, period: usize) -> u64 {
        self.rows[industry][period - 1]
    }

    pub fn row_total(&self, industry: usize) -> u64 {
        self.rows[industry].iter().sum()
    }
}

/// Expands the discharge lists of a valid instance into the flow grid.
pub fn build_grid(instance: &Instance) -> DischargeGrid {
    let rows = instance
        .industries
        .iter()
        .map(|ind| {
            let mut row = vec![0; instance.periods];
            for d in &ind.discharges {
                for cell in &mut row[d.start - 1..d.end] {
                    *cell = d.flow;
                }
            }
            row
        })
        .collect();
    DischargeGrid {
        periods: instance.periods,
        rows,
    }
}

/// A candidate schedule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    /// One entry per discharge, industry-major; `true` sends the whole
    /// discharge to the industry's tank.
    pub reroute: Vec<bool>,
    /// `bout[i][j - 1]`: flow emptied from tank `i` during period `j`.
    pub bout: Vec<Vec<u64>>,
    /// `buf[i][j - 1]`: volume held by tank `i` at the end of period `j`.
    pub buf: Vec<Vec<u64>>,
}

impl Solution {
    /// The identity schedule: everything to the river, tanks unused.
    pub fn all_river(instance: &Instance) -> Self {
        let k = instance.industry_count();
        Self {
            reroute: vec![false; instance.discharge_count()],
            bout: vec![vec![0; instance.periods]; k],
            buf: vec![vec![0; instance.periods]; k],
        }
    }
}

/// Outcome of a feasibility decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Solution),
    Unsat,
    Unknown(String),
    Timeout,
}

impl Verdict {
    pub fn status(&self) -> Status {
        match self {
            Verdict::Sat(_) => Status::Sat,
            Verdict::Unsat => Status::Unsat,
            Verdict::Unknown(_) => Status::Unknown,
            Verdict::Timeout => Status::Timeout,
        }
    }

    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Verdict::Sat(sol) => Some(sol),
            _ => None,
        }
    }
}

/// A verdict without its payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
    Timeout,
}

impl Status {
    /// Sat and Unsat are decisions; Unknown and Timeout are not.
    pub fn is_decided(self) -> bool {
        matches!(self, Status::Sat | Status::Unsat)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Sat => "sat",
            Status::Unsat => "unsat",
            Status::Unknown => "unknown",
            Status::Timeout => "timeout",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One broken instance invariant. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceViolation {
    pub industry: Option<usize>,
    pub discharge: Option<usize>,
    pub reason: String,
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.industry, self.discharge) {
            (Some(i), Some(d)) => write!(f, "industry {i}, discharge {d}: {}", self.reason),
            (Some(i), None) => write!(f, "industry {i}: {}", self.reason),
            _ => f.write_str(&self.reason),
        }
    }
}

/// Non-empty list of instance violations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationErrors(pub Vec<InstanceViolation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

impl ValidationErrors {
    pub fn iter(&self) -> impl Iterator<Item = &InstanceViolation> {
        self.0.iter()
    }
}

/// Checks every instance, industry and discharge invariant, collecting all
/// failures.
pub fn validate_instance(instance: &Instance) -> Result<(), ValidationErrors> {
    let mut out = Vec::new();
    let m = instance.periods;
    if m == 0 {
        out.push(InstanceViolation {
            industry: None,
            discharge: None,
            reason: "periods must be at least 1".into(),
        });
    }
    let mut ids = HashSet::new();
    for (i, ind) in instance.industries.iter().enumerate() {
        let at = |d: Option<usize>, reason: String| InstanceViolation {
            industry: Some(i + 1),
            discharge: d.map(|d| d + 1),
            reason,
        };
        if !ids.insert(ind.id.as_str()) {
            out.push(at(None, format!("duplicate industry id `{}`", ind.id)));
        }
        for (n, d) in ind.discharges.iter().enumerate() {
            if d.flow == 0 {
                out.push(at(Some(n), "zero flow".into()));
            }
            if d.start == 0 {
                out.push(at(Some(n), "start must be at least 1".into()));
            }
            if d.start > d.end {
                out.push(at(
                    Some(n),
                    format!("start {} after end {}", d.start, d.end),
                ));
            }
            if d.end > m {
                out.push(at(
                    Some(n),
                    format!("end exceeds horizon ({} > {m})", d.end),
                ));
            }
        }
        for n in 1..ind.discharges.len() {
            if ind.discharges[n].start < ind.discharges[n - 1].start {
                out.push(at(Some(n), "discharges not sorted by start".into()));
            }
        }
        for a in 0..ind.discharges.len() {
            for b in a + 1..ind.discharges.len() {
                let (x, y) = (ind.discharges[a], ind.discharges[b]);
                let lo = x.start.max(y.start);
                let hi = x.end.min(y.end);
                if lo <= hi && x.start <= x.end && y.start <= y.end {
                    out.push(at(
                        Some(b),
                        format!("overlap at period {lo} with discharge {}", a + 1),
                    ));
                }
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(ValidationErrors(out))
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{field}: non-negative required (got {value})")]
    Negative { field: String, value: i64 },
    #[error("invalid instance: {0}")]
    Invalid(#[from] ValidationErrors),
}

// Wire structs use signed integers so that negative values get a precise
// error instead of a generic type mismatch.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    plant_capacity: i64,
    periods: i64,
    industries: Vec<RawIndustry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndustry {
    id: String,
    tank_capacity: i64,
    tank_flow: i64,
    discharges: Vec<RawDischarge>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDischarge {
    start: i64,
    end: i64,
    flow: i64,
}

fn non_negative(field: impl FnOnce() -> String, value: i64) -> Result<u64, ModelError> {
    u64::try_from(value).map_err(|_| ModelError::Negative {
        field: field(),
        value,
    })
}

/// Parses and validates an instance document.
pub fn read_instance(text: &str) -> Result<Instance, ModelError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    let mut instance = Instance {
        plant_capacity: non_negative(|| "plant_capacity".into(), raw.plant_capacity)?,
        periods: non_negative(|| "periods".into(), raw.periods)? as usize,
        industries: Vec::with_capacity(raw.industries.len()),
    };
    for (i, ri) in raw.industries.into_iter().enumerate() {
        let mut ind = Industry {
            tank_capacity: non_negative(
                || format!("industries[{i}].tank_capacity"),
                ri.tank_capacity,
            )?,
            tank_flow: non_negative(|| format!("industries[{i}].tank_flow"), ri.tank_flow)?,
            id: ri.id,
            discharges: Vec::with_capacity(ri.discharges.len()),
        };
        for (n, rd) in ri.discharges.into_iter().enumerate() {
            let field = |name: &str| format!("industries[{i}].discharges[{n}].{name}");
            ind.discharges.push(Discharge {
                start: non_negative(|| field("start"), rd.start)? as usize,
                end: non_negative(|| field("end"), rd.end)? as usize,
                flow: non_negative(|| field("flow"), rd.flow)?,
            });
        }
        instance.industries.push(ind);
    }
    validate_instance(&instance)?;
    Ok(instance)
}

pub fn write_instance(instance: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(instance).expect("instance serializes");
    text.push('\n');
    text
}

pub fn read_solution(text: &str) -> Result<Solution, ModelError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_solution(solution: &Solution) -> String {
    let mut text = serde_json::to_string_pretty(solution).expect("solution serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reasons(instance: &Instance) -> Vec<String> {
        validate_instance(instance)
            .err()
            .map(|e| e.0.into_iter().map(|v| v.reason).collect())
            .unwrap_or_default()
    }

    #[test]
    fn empty_instance_is_valid() {
        assert!(validate_instance(&Instance::new(0, 1)).is_ok());
    }

    #[test]
    fn zero_periods_rejected() {
        assert_eq!(
            reasons(&Instance::new(3, 0)),
            vec!["periods must be at least 1"]
        );
    }

    #[test]
    fn overlapping_discharges_rejected() {
        let inst = Instance::new(10, 6).with_industry(
            Industry::new("a", 5, 1)
                .with_discharge(1, 3, 2)
                .with_discharge(3, 5, 2),
        );
        let r = reasons(&inst);
        assert_eq!(r.len(), 1);
        assert!(r[0].starts_with("overlap at period 3"), "{r:?}");
    }

    #[test]
    fn end_beyond_horizon_rejected() {
        let inst =
            Instance::new(10, 24).with_industry(Industry::new("a", 5, 1).with_discharge(2, 30, 1));
        let r = reasons(&inst);
        assert_eq!(r.len(), 1);
        assert!(r[0].starts_with("end exceeds horizon"), "{r:?}");
    }

    #[test]
    fn zero_flow_and_bad_span_rejected() {
        let inst = Instance::new(10, 5).with_industry(
            Industry::new("a", 5, 1)
                .with_discharge(0, 1, 1)
                .with_discharge(4, 3, 0),
        );
        let r = reasons(&inst);
        assert!(r.contains(&"zero flow".to_string()));
        assert!(r.contains(&"start must be at least 1".to_string()));
        assert!(r.iter().any(|s| s.starts_with("start 4 after end 3")));
    }

    #[test]
    fn unsorted_and_duplicate_ids_rejected() {
        let inst = Instance::new(10, 5)
            .with_industry(
                Industry::new("a", 5, 1)
                    .with_discharge(4, 4, 1)
                    .with_discharge(1, 1, 1),
            )
            .with_industry(Industry::new("a", 5, 1));
        let r = reasons(&inst);
        assert!(r.contains(&"discharges not sorted by start".to_string()));
        assert!(r.contains(&"duplicate industry id `a`".to_string()));
    }

    #[test]
    fn grid_expansion() {
        let one =
            Instance::new(0, 4).with_industry(Industry::new("a", 0, 0).with_discharge(1, 2, 3));
        assert_eq!(build_grid(&one).rows, vec![vec![3, 3, 0, 0]]);

        let none = Instance::new(0, 3).with_industry(Industry::new("a", 0, 0));
        assert_eq!(build_grid(&none).rows, vec![vec![0, 0, 0]]);

        let two = Instance::new(0, 3)
            .with_industry(Industry::new("a", 0, 0).with_discharge(1, 1, 5))
            .with_industry(Industry::new("b", 0, 0).with_discharge(2, 3, 2));
        let grid = build_grid(&two);
        assert_eq!(grid.rows, vec![vec![5, 0, 0], vec![0, 2, 2]]);
        assert_eq!(grid.flow(1, 2), 2);
        assert_eq!(grid.row_total(1), two.industries[1].total_volume());
    }

    #[test]
    fn negative_field_is_named() {
        let text = r#"{"plant_capacity": 4, "periods": 3, "industries": [
            {"id": "a", "tank_capacity": 2, "tank_flow": -1, "discharges": []}]}"#;
        let err = read_instance(text).unwrap_err();
        assert!(matches!(err, ModelError::Negative { .. }));
        let msg = err.to_string();
        assert!(msg.contains("industries[0].tank_flow"), "{msg}");
        assert!(msg.contains("non-negative required"), "{msg}");
    }

    #[test]
    fn unknown_field_is_named() {
        let text = r#"{"plant_capacity": 4, "periods": 3, "industries": [], "horizon": 9}"#;
        let msg = read_instance(text).unwrap_err().to_string();
        assert!(msg.contains("unknown field `horizon`"), "{msg}");
    }

    #[test]
    fn read_runs_validation() {
        let text = r#"{"plant_capacity": 4, "periods": 3, "industries": [
            {"id": "a", "tank_capacity": 2, "tank_flow": 1, "discharges": [{"start": 1, "end": 5, "flow": 1}]}]}"#;
        assert!(matches!(read_instance(text), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn two_industry_round_trip() {
        let inst = Instance::new(7, 5)
            .with_industry(
                Industry::new("north", 6, 2)
                    .with_discharge(1, 2, 3)
                    .with_discharge(4, 5, 1),
            )
            .with_industry(Industry::new("south", 4, 4).with_discharge(2, 2, 9));
        assert_eq!(read_instance(&write_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn solution_round_trip_and_strictness() {
        let sol = Solution {
            reroute: vec![true, false],
            bout: vec![vec![0, 2]],
            buf: vec![vec![2, 0]],
        };
        assert_eq!(read_solution(&write_solution(&sol)).unwrap(), sol);
        assert!(read_solution(r#"{"reroute": [], "bout": [], "buf": [], "c": []}"#).is_err());
    }
}
