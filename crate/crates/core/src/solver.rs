//! Native feasibility search and an exhaustive oracle.
//!
//! The search walks periods in order. In each period it first decides, for
//! every discharge starting there, river or tank; then, for every tank holding
//! water, whether to empty it at the forced rate `min(TankFlow, Buf_prev)` or
//! hold. Branches are cut when:
//!
//! - a river placement would overload the plant in any period it spans,
//! - the emptying decisions overload the plant in the current period,
//! - a tank cannot stay within capacity or reach empty by the deadline even
//!   when drained at full rate from now on (committed inflows only),
//! - the volume still to be processed exceeds what the plant can take in the
//!   remaining periods,
//! - a tank was held although its emptying would still have fitted the
//!   period's plant load. Emptying earlier never hurts later periods (the
//!   buffer and every future `Bout` can only shrink), so only maximal sets of
//!   emptied tanks need exploring.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{
    build_grid, validate_instance, DischargeRef, Instance, Solution, Status, ValidationErrors,
    Verdict,
};
use crate::semantics::{buffered_inflow, river_flows, simulate_tank, verify, VerifyOptions};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BranchOrder {
    RiverFirst,
    BufferFirst,
    /// Within a period, larger volumes are decided first, river first.
    #[default]
    BiggestDischargeFirst,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EmptyOrder {
    #[default]
    EmptyFirst,
    HoldFirst,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverConfig {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub branch_order: BranchOrder,
    pub empty_order: EmptyOrder,
}

impl SolverConfig {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes_explored: u64,
    pub backtracks: u64,
    pub elapsed: Duration,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("invalid instance: {0}")]
    InvalidInstance(#[from] ValidationErrors),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("oracle budget exceeded: {needed} binary decisions, budget {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Found,
    Fail,
    Stop,
}

#[derive(Debug, Clone, Copy)]
enum StopReason {
    Time,
    Nodes,
}

struct Search {
    m: usize,
    k: usize,
    plant: u64,
    tank_flow: Vec<u64>,
    tank_capacity: Vec<u64>,
    discharges: Vec<DischargeRef>,
    /// Discharge indices starting in each period, in branching order.
    by_start: Vec<Vec<usize>>,
    river_first: bool,
    empty_first: bool,
    /// Scheduled volume in periods `t..m`, summed over industries.
    suffix_volume: Vec<u64>,

    reroute: Vec<bool>,
    river_load: Vec<u64>,
    inflow: Vec<Vec<u64>>,
    bout: Vec<Vec<u64>>,
    buf: Vec<Vec<u64>>,
    /// Amount a held tank would have emptied, per period.
    held: Vec<Vec<u64>>,
    load: u64,

    nodes: u64,
    backtracks: u64,
    started: Instant,
    deadline: Option<Instant>,
    node_limit: Option<u64>,
    stop: Option<StopReason>,
}

impl Search {
    fn new(instance: &Instance, config: &SolverConfig) -> Self {
        let m = instance.periods;
        let k = instance.industry_count();
        let discharges = instance.discharge_refs();
        let mut by_start = vec![Vec::new(); m];
        for r in &discharges {
            by_start[r.discharge.start - 1].push(r.flat);
        }
        if config.branch_order == BranchOrder::BiggestDischargeFirst {
            for list in &mut by_start {
                list.sort_by_key(|&d| (std::cmp::Reverse(discharges[d].discharge.volume()), d));
            }
        }
        let grid = build_grid(instance);
        let mut suffix_volume = vec![0; m + 1];
        for t in (0..m).rev() {
            suffix_volume[t] = suffix_volume[t + 1] + grid.rows.iter().map(|r| r[t]).sum::<u64>();
        }
        let started = Instant::now();
        Search {
            m,
            k,
            plant: instance.plant_capacity,
            tank_flow: instance.industries.iter().map(|i| i.tank_flow).collect(),
            tank_capacity: instance
                .industries
                .iter()
                .map(|i| i.tank_capacity)
                .collect(),
            reroute: vec![false; discharges.len()],
            discharges,
            by_start,
            river_first: config.branch_order != BranchOrder::BufferFirst,
            empty_first: config.empty_order == EmptyOrder::EmptyFirst,
            suffix_volume,
            river_load: vec![0; m],
            inflow: vec![vec![0; m]; k],
            bout: vec![vec![0; m]; k],
            buf: vec![vec![0; m]; k],
            held: vec![vec![0; m]; k],
            load: 0,
            nodes: 0,
            backtracks: 0,
            started,
            deadline: config.time_limit.map(|d| started + d),
            node_limit: config.node_limit,
            stop: None,
        }
    }

    /// Counts a node; returns false when a limit is hit.
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if let Some(limit) = self.node_limit {
            if self.nodes > limit {
                self.stop = Some(StopReason::Nodes);
                return false;
            }
        }
        if let Some(deadline) = self.deadline {
            if self.nodes.is_multiple_of(64) && Instant::now() >= deadline {
                self.stop = Some(StopReason::Time);
                return false;
            }
        }
        true
    }

    fn stored_before(&self, i: usize, t: usize) -> u64 {
        if t == 0 {
            0
        } else {
            self.buf[i][t - 1]
        }
    }

    /// Drains tank `i` at full rate from period `from` on, using committed
    /// inflows only, and checks the resulting lower bound on its content.
    fn tank_bounds_ok(&self, i: usize, from: usize) -> bool {
        let tf = self.tank_flow[i];
        let tc = self.tank_capacity[i];
        let mut level = self.stored_before(i, from);
        for s in from..self.m {
            if s >= 1 {
                level = level.saturating_sub(tf);
            }
            level += self.inflow[i][s];
            if s >= 1 && s + 2 <= self.m && level > tc {
                return false;
            }
        }
        level == 0
    }

    fn volume_bound_ok(&self, t: usize) -> bool {
        let stored: u64 = (0..self.k).map(|i| self.stored_before(i, t)).sum();
        (stored + self.suffix_volume[t]) as u128 <= self.plant as u128 * (self.m - t) as u128
    }

    fn period(&mut self, t: usize) -> Flow {
        if !self.volume_bound_ok(t) {
            return Flow::Fail;
        }
        self.discharge_step(t, 0)
    }

    fn place_river(&mut self, d: usize) -> bool {
        let dis = self.discharges[d].discharge;
        let span = dis.start - 1..dis.end;
        if self.river_load[span.clone()]
            .iter()
            .any(|&l| l + dis.flow > self.plant)
        {
            return false;
        }
        for l in &mut self.river_load[span] {
            *l += dis.flow;
        }
        true
    }

    fn unplace_river(&mut self, d: usize) {
        let dis = self.discharges[d].discharge;
        for l in &mut self.river_load[dis.start - 1..dis.end] {
            *l -= dis.flow;
        }
    }

    fn set_buffered(&mut self, d: usize, on: bool) {
        let r = self.discharges[d];
        for v in &mut self.inflow[r.industry][r.discharge.start - 1..r.discharge.end] {
            if on {
                *v += r.discharge.flow;
            } else {
                *v -= r.discharge.flow;
            }
        }
        self.reroute[d] = on;
    }

    fn discharge_step(&mut self, t: usize, idx: usize) -> Flow {
        if idx == self.by_start[t].len() {
            self.load = self.river_load[t];
            return self.tank_step(t, 0);
        }
        let d = self.by_start[t][idx];
        let order = if self.river_first {
            [false, true]
        } else {
            [true, false]
        };
        for to_tank in order {
            if !self.tick() {
                return Flow::Stop;
            }
            let flow = if to_tank {
                self.set_buffered(d, true);
                let r = if self.tank_bounds_ok(self.discharges[d].industry, t) {
                    self.discharge_step(t, idx + 1)
                } else {
                    Flow::Fail
                };
                // On success the witness is read from the state; keep it.
                if r != Flow::Found {
                    self.set_buffered(d, false);
                }
                r
            } else if self.place_river(d) {
                let r = self.discharge_step(t, idx + 1);
                if r != Flow::Found {
                    self.unplace_river(d);
                }
                r
            } else {
                Flow::Fail
            };
            match flow {
                Flow::Fail => self.backtracks += 1,
                done => return done,
            }
        }
        Flow::Fail
    }

    fn tank_step(&mut self, t: usize, i: usize) -> Flow {
        if i == self.k {
            return self.end_period(t);
        }
        let amount = if t == 0 {
            0
        } else {
            self.tank_flow[i].min(self.buf[i][t - 1])
        };
        if amount == 0 {
            self.bout[i][t] = 0;
            self.held[i][t] = 0;
            return self.tank_step(t, i + 1);
        }
        let order = if self.empty_first {
            [true, false]
        } else {
            [false, true]
        };
        for empty in order {
            if !self.tick() {
                return Flow::Stop;
            }
            let flow = if empty {
                if self.load + amount <= self.plant {
                    self.bout[i][t] = amount;
                    self.held[i][t] = 0;
                    let saved = self.load;
                    self.load += amount;
                    let r = self.tank_step(t, i + 1);
                    self.load = saved;
                    r
                } else {
                    Flow::Fail
                }
            } else {
                self.bout[i][t] = 0;
                self.held[i][t] = amount;
                let saved = self.load;
                let r = self.tank_step(t, i + 1);
                self.load = saved;
                r
            };
            match flow {
                Flow::Fail => self.backtracks += 1,
                Flow::Found => {
                    self.bout[i][t] = if empty { amount } else { 0 };
                    return Flow::Found;
                }
                Flow::Stop => return Flow::Stop,
            }
        }
        Flow::Fail
    }

    fn end_period(&mut self, t: usize) -> Flow {
        for i in 0..self.k {
            if self.held[i][t] > 0 && self.load + self.held[i][t] <= self.plant {
                return Flow::Fail;
            }
        }
        for i in 0..self.k {
            let level = self.stored_before(i, t) - self.bout[i][t] + self.inflow[i][t];
            self.buf[i][t] = level;
            if t >= 1 && t + 2 <= self.m && level > self.tank_capacity[i] {
                return Flow::Fail;
            }
        }
        if t + 1 == self.m {
            return if self.buf.iter().all(|row| row[t] == 0) {
                Flow::Found
            } else {
                Flow::Fail
            };
        }
        if !(0..self.k).all(|i| self.tank_bounds_ok(i, t + 1)) {
            return Flow::Fail;
        }
        self.period(t + 1)
    }

    fn solution(&self) -> Solution {
        Solution {
            reroute: self.reroute.clone(),
            bout: self.bout.clone(),
            buf: self.buf.clone(),
        }
    }
}

/// Decides feasibility of `instance` by depth-first search with pruning.
pub fn solve(
    instance: &Instance,
    config: &SolverConfig,
) -> Result<(Verdict, SolveStats), SolverError> {
    if config.time_limit == Some(Duration::ZERO) {
        return Err(SolverError::InvalidConfig("time limit must be positive"));
    }
    if config.node_limit == Some(0) {
        return Err(SolverError::InvalidConfig("node limit must be positive"));
    }
    validate_instance(instance)?;

    let mut search = Search::new(instance, config);
    let flow = search.period(0);
    let verdict = match flow {
        Flow::Found => Verdict::Sat(search.solution()),
        Flow::Fail => Verdict::Unsat,
        Flow::Stop => match search.stop {
            Some(StopReason::Nodes) => Verdict::Unknown("node limit reached".into()),
            _ => Verdict::Timeout,
        },
    };
    let stats = SolveStats {
        nodes_explored: search.nodes,
        backtracks: search.backtracks,
        elapsed: search.started.elapsed(),
        status: verdict.status(),
    };
    Ok((verdict, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Maximum of `discharges + industries * (periods - 1)`.
    pub max_decisions: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_decisions: 24 }
    }
}

/// Number of binary decisions the oracle enumerates for `instance`.
pub fn oracle_decisions(instance: &Instance) -> usize {
    instance.discharge_count() + instance.industry_count() * instance.periods.saturating_sub(1)
}

/// Ground truth by enumeration with the default budget.
pub fn oracle_solve(instance: &Instance) -> Result<Verdict, SolverError> {
    oracle_solve_with(instance, &OracleConfig::default())
}

/// Enumerates every reroute vector and every empty/hold matrix.
///
/// Tanks only interact through the plant load, so each tank's assignments
/// are simulated on their own first; the cross product of the surviving
/// (distinct) tank trajectories is then checked against the plant capacity,
/// and the first full assignment accepted by [`verify`] is returned.
pub fn oracle_solve_with(
    instance: &Instance,
    config: &OracleConfig,
) -> Result<Verdict, SolverError> {
    validate_instance(instance)?;
    let needed = oracle_decisions(instance);
    if needed > config.max_decisions {
        return Err(SolverError::BudgetExceeded {
            needed,
            budget: config.max_decisions,
        });
    }
    let m = instance.periods;
    let grid = build_grid(instance);

    // Per industry: distinct (reroute bits, load row, bout row, buf row).
    type TankOption = (Vec<bool>, Vec<u64>, Vec<u64>, Vec<u64>);
    let mut options: Vec<Vec<TankOption>> = Vec::new();
    for (i, ind) in instance.industries.iter().enumerate() {
        let n = ind.discharges.len();
        let mut seen = std::collections::HashSet::new();
        let mut list = Vec::new();
        for reroute_bits in 0u64..(1 << n) {
            let local: Vec<bool> = (0..n).map(|b| reroute_bits >> b & 1 == 1).collect();
            // River flows of this industry alone.
            let mut single = instance.clone();
            single.industries = vec![ind.clone()];
            let river = river_flows(&single, &local);
            let mut single_grid = grid.clone();
            single_grid.rows = vec![grid.rows[i].clone()];
            let inflow = buffered_inflow(&single_grid, &river, 0);
            for empty_bits in 0u64..(1 << (m - 1)) {
                let mut empty = vec![false; m];
                for (t, e) in empty.iter_mut().enumerate().skip(1) {
                    *e = empty_bits >> (t - 1) & 1 == 1;
                }
                if let Ok((bout, buf)) = simulate_tank(ind, &inflow, &empty) {
                    let load: Vec<u64> = (0..m).map(|t| river[0][t] + bout[t]).collect();
                    if seen.insert((local.clone(), bout.clone())) {
                        list.push((local.clone(), load, bout, buf));
                    }
                }
            }
        }
        if list.is_empty() {
            return Ok(Verdict::Unsat);
        }
        options.push(list);
    }

    let k = options.len();
    let mut pick = vec![0usize; k];
    loop {
        let fits = (0..m).all(|t| {
            let load: u128 = (0..k).map(|i| options[i][pick[i]].1[t] as u128).sum();
            load <= instance.plant_capacity as u128
        });
        if fits {
            let sol = Solution {
                reroute: (0..k).flat_map(|i| options[i][pick[i]].0.clone()).collect(),
                bout: (0..k).map(|i| options[i][pick[i]].2.clone()).collect(),
                buf: (0..k).map(|i| options[i][pick[i]].3.clone()).collect(),
            };
            let report = verify(instance, &sol, VerifyOptions::default())
                .expect("oracle builds well-formed solutions");
            assert!(report.ok, "oracle witness rejected: {report}");
            return Ok(Verdict::Sat(sol));
        }
        // Odometer over the per-industry lists.
        let mut i = 0;
        loop {
            if i == k {
                return Ok(Verdict::Unsat);
            }
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}
