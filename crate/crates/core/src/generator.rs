//! Random instance families and plant-capacity sweeps.
//!
//! Generated instances keep `plant_capacity = 0`; a sweep fixes the
//! discharges and tanks and varies only the capacity, which is how the
//! unsatisfiable-to-satisfiable transition is located.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Discharge, Industry, Instance, Status};
use crate::solver::{solve, SolveStats, SolverConfig};

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub min: u64,
    pub max: u64,
}

impl IntRange {
    pub const fn new(min: u64, max: u64) -> Self {
        Self { min, max }
    }

    fn draw(&self, rng: &mut impl Rng) -> u64 {
        rng.gen_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub industries: usize,
    pub discharges_total: usize,
    pub horizon: usize,
    /// Discharges lie within periods `1..=planning_window`.
    pub planning_window: usize,
    pub flow_range: IntRange,
    pub duration_range: IntRange,
    pub tank_capacity_range: IntRange,
    pub tank_flow_range: IntRange,
    pub seed: u64,
}

impl GenParams {
    /// Shape of the published random set: 10 industries, 114 discharges in a
    /// 24-period window, deadline 26.
    pub fn random_set(seed: u64) -> Self {
        Self {
            industries: 10,
            discharges_total: 114,
            horizon: 26,
            planning_window: 24,
            flow_range: IntRange::new(100, 600),
            duration_range: IntRange::new(1, 2),
            tank_capacity_range: IntRange::new(400, 1500),
            tank_flow_range: IntRange::new(100, 400),
            seed,
        }
    }

    /// A synthetic stand-in with the shape of the published real set
    /// (8 industries, 94 discharges, 24 periods); not the real data.
    pub fn real_like(seed: u64) -> Self {
        Self {
            industries: 8,
            discharges_total: 94,
            horizon: 24,
            planning_window: 24,
            ..Self::random_set(seed)
        }
    }

    /// The random-set shape at half scale: 5 industries, 40 discharges,
    /// 12-period window, deadline 13.
    pub fn half_scale(seed: u64) -> Self {
        Self {
            industries: 5,
            discharges_total: 40,
            horizon: 13,
            planning_window: 12,
            ..Self::random_set(seed)
        }
    }

    fn check(&self) -> Result<(), GenError> {
        let bad = |msg: &str| Err(GenError::InvalidParams(msg.to_string()));
        for (name, r) in [
            ("flow_range", self.flow_range),
            ("duration_range", self.duration_range),
            ("tank_capacity_range", self.tank_capacity_range),
            ("tank_flow_range", self.tank_flow_range),
        ] {
            if r.min > r.max {
                return Err(GenError::InvalidParams(format!("{name} is empty")));
            }
        }
        if self.flow_range.min == 0 {
            return bad("flow_range must exclude 0");
        }
        if self.duration_range.min == 0 {
            return bad("duration_range must exclude 0");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.planning_window > self.horizon {
            return bad("planning_window exceeds horizon");
        }
        if self.industries == 0 && self.discharges_total > 0 {
            return bad("discharges need at least one industry");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("cannot place {count} disjoint discharges for industry {industry} in a {window}-period window")]
    Placement {
        industry: usize,
        count: usize,
        window: usize,
    },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

const PLACEMENT_ROUNDS: usize = 1000;

/// Draws `count` disjoint discharges inside `1..=window`. Durations are
/// resampled until they fit; the free periods are then split uniformly at
/// random into gaps.
fn place_discharges(
    rng: &mut ChaCha8Rng,
    params: &GenParams,
    industry: usize,
    count: usize,
) -> Result<Vec<Discharge>, GenError> {
    let window = params.planning_window;
    let fail = GenError::Placement {
        industry,
        count,
        window,
    };
    if count == 0 {
        return Ok(Vec::new());
    }
    if params.duration_range.min.saturating_mul(count as u64) > window as u64 {
        return Err(fail);
    }
    for _ in 0..PLACEMENT_ROUNDS {
        let durations: Vec<usize> = (0..count)
            .map(|_| params.duration_range.draw(rng) as usize)
            .collect();
        let busy: usize = durations.iter().sum();
        if busy > window {
            continue;
        }
        let free = window - busy;
        let mut picks = sample(rng, free + count, count).into_vec();
        picks.sort_unstable();
        let mut out = Vec::with_capacity(count);
        let mut before = 0;
        for (n, (&pick, &dur)) in picks.iter().zip(&durations).enumerate() {
            let start = pick - n + before + 1;
            out.push(Discharge::new(
                start,
                start + dur - 1,
                params.flow_range.draw(rng),
            ));
            before += dur;
        }
        return Ok(out);
    }
    Err(fail)
}

/// Generates an instance; a pure function of `params`.
pub fn generate_random(params: &GenParams) -> Result<Instance, GenError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let k = params.industries;
    let mut instance = Instance::new(0, params.horizon);
    for i in 0..k {
        let count = params.discharges_total / k + usize::from(i < params.discharges_total % k);
        let mut ind = Industry::new(
            format!("ind{}", i + 1),
            params.tank_capacity_range.draw(&mut rng),
            params.tank_flow_range.draw(&mut rng),
        );
        ind.discharges = place_discharges(&mut rng, params, i + 1, count)?;
        instance.industries.push(ind);
    }
    Ok(instance)
}

/// Parameters of a desk-scale instance small enough for the exhaustive
/// oracle: at most 3 industries, 8 periods and 5 discharges.
pub fn desk_params(seed: u64) -> GenParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_de5c);
    let industries = rng.gen_range(1..=3);
    let horizon = rng.gen_range(2..=8);
    let planning_window = rng.gen_range(1..=horizon);
    let discharges_total = rng.gen_range(0..=5.min(industries * planning_window));
    GenParams {
        industries,
        discharges_total,
        horizon,
        planning_window,
        flow_range: IntRange::new(1, 6),
        duration_range: IntRange::new(1, 3),
        tank_capacity_range: IntRange::new(0, 12),
        tank_flow_range: IntRange::new(0, 5),
        seed,
    }
}

/// A desk-scale instance with a plant capacity drawn between 0 and one
/// above the all-river peak load.
pub fn desk_instance(seed: u64) -> Instance {
    let mut params = desk_params(seed);
    loop {
        match generate_random(&params) {
            Ok(inst) => {
                let cap = desk_capacity(seed, &inst);
                return inst.with_plant_capacity(cap);
            }
            // Durations too long for the window: shrink them.
            Err(_) => params.duration_range = IntRange::new(1, 1),
        }
    }
}

/// The plant capacity [`desk_instance`] assigns to `instance` for `seed`.
pub fn desk_capacity(seed: u64, instance: &Instance) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.gen_range(0..=instance.peak_river_load() + 1)
}

/// Capacities `lo, lo + step, ...` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacitySweep {
    pub lo: u64,
    pub hi: u64,
    pub step: u64,
}

impl CapacitySweep {
    pub fn new(lo: u64, hi: u64, step: u64) -> Result<Self, GenError> {
        if step == 0 {
            return Err(GenError::InvalidSweep("step must be positive".into()));
        }
        if lo > hi {
            return Err(GenError::InvalidSweep(format!("lo {lo} above hi {hi}")));
        }
        Ok(Self { lo, hi, step })
    }

    /// A sweep from 0 with about `points` steps whose last point is at or
    /// above the all-river peak load, where every instance is Sat.
    pub fn bracketing(instance: &Instance, points: u64) -> Self {
        let peak = instance.peak_river_load();
        let step = peak.div_ceil(points.max(1)).max(1);
        let hi = peak.div_ceil(step) * step;
        Self { lo: 0, hi, step }
    }

    pub fn capacities(&self) -> impl Iterator<Item = u64> {
        let (lo, hi, step) = (self.lo, self.hi, self.step);
        (0..)
            .map(move |n| lo + n * step)
            .take_while(move |&c| c <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanPoint {
    pub capacity: u64,
    pub status: Status,
    pub elapsed: Duration,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    /// Sorted by capacity.
    pub points: Vec<ScanPoint>,
    /// Smallest scanned capacity decided Sat.
    pub threshold: Option<u64>,
    /// No decided Sat point lies below a decided Unsat point.
    pub monotone: bool,
}

impl ScanReport {
    pub fn from_points(mut points: Vec<ScanPoint>) -> Self {
        points.sort_by_key(|p| p.capacity);
        let threshold = points
            .iter()
            .find(|p| p.status == Status::Sat)
            .map(|p| p.capacity);
        let last_unsat = points
            .iter()
            .filter(|p| p.status == Status::Unsat)
            .map(|p| p.capacity)
            .max();
        let monotone = match (threshold, last_unsat) {
            (Some(sat), Some(unsat)) => sat > unsat,
            _ => true,
        };
        Self {
            points,
            threshold,
            monotone,
        }
    }

    /// Number of status changes between consecutive decided points.
    pub fn switches(&self) -> usize {
        let decided: Vec<Status> = self
            .points
            .iter()
            .map(|p| p.status)
            .filter(|s| s.is_decided())
            .collect();
        decided.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Exactly one Unsat-to-Sat switch among decided points.
    pub fn has_unique_threshold(&self) -> bool {
        self.monotone && self.threshold.is_some() && self.switches() == 1
    }

    /// One row per point: `capacity,verdict,ms,nodes`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["capacity", "verdict", "ms", "nodes"])
            .expect("in-memory write");
        for p in &self.points {
            w.write_record([
                p.capacity.to_string(),
                p.status.to_string(),
                format!("{:.3}", p.elapsed.as_secs_f64() * 1e3),
                p.nodes.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }
}

/// Solves `instance` at every capacity of `sweep` with `jobs` workers.
/// `solve_fn` receives the instance with the capacity set and the per-point
/// limit.
pub fn scan_capacity<F>(
    instance: &Instance,
    sweep: &CapacitySweep,
    per_point_limit: Option<Duration>,
    jobs: usize,
    solve_fn: F,
) -> ScanReport
where
    F: Fn(&Instance, Option<Duration>) -> SolveStats + Sync,
{
    let caps: Vec<u64> = sweep.capacities().collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(caps.len()));
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, caps.len().max(1)) {
            scope.spawn(|| loop {
                let n = next.fetch_add(1, Ordering::Relaxed);
                let Some(&capacity) = caps.get(n) else { break };
                let stats = solve_fn(&instance.with_plant_capacity(capacity), per_point_limit);
                results
                    .lock()
                    .expect("no poisoned workers")
                    .push(ScanPoint {
                        capacity,
                        status: stats.status,
                        elapsed: stats.elapsed,
                        nodes: stats.nodes_explored,
                    });
            });
        }
    });
    ScanReport::from_points(results.into_inner().expect("no poisoned workers"))
}

/// [`scan_capacity`] with the native solver; `config.time_limit` is the
/// per-point limit.
pub fn scan_native(
    instance: &Instance,
    sweep: &CapacitySweep,
    config: &SolverConfig,
    jobs: usize,
) -> ScanReport {
    scan_capacity(instance, sweep, config.time_limit, jobs, |inst, limit| {
        let config = SolverConfig {
            time_limit: limit,
            ..config.clone()
        };
        solve(inst, &config).expect("sweep instances are valid").1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn bracketing_reaches_the_peak_load() {
        for seed in 0..50 {
            let inst = desk_instance(seed);
            let sweep = CapacitySweep::bracketing(&inst, 7);
            let last = sweep.capacities().last().unwrap();
            assert!(last >= inst.peak_river_load(), "seed {seed}");
            assert!(sweep.capacities().count() <= 8);
        }
    }

    #[test]
    fn random_set_shape() {
        let inst = generate_random(&GenParams::random_set(7)).unwrap();
        assert_eq!(inst.discharge_count(), 114);
        assert_eq!(inst.industry_count(), 10);
        assert_eq!(inst.periods, 26);
        assert!(validate_instance(&inst).is_ok());
        assert!(inst
            .industries
            .iter()
            .flat_map(|i| &i.discharges)
            .all(|d| d.end <= 24));
    }

    #[test]
    fn same_seed_same_instance() {
        let p = GenParams::half_scale(42);
        assert_eq!(generate_random(&p).unwrap(), generate_random(&p).unwrap());
        let q = GenParams::half_scale(43);
        assert_ne!(generate_random(&p).unwrap(), generate_random(&q).unwrap());
    }

    #[test]
    fn pigeonhole_placement_fails() {
        let p = GenParams {
            industries: 1,
            discharges_total: 3,
            horizon: 2,
            planning_window: 2,
            duration_range: IntRange::new(1, 1),
            ..GenParams::random_set(1)
        };
        assert_eq!(
            generate_random(&p),
            Err(GenError::Placement {
                industry: 1,
                count: 3,
                window: 2
            })
        );
    }

    #[test]
    fn bad_params_rejected() {
        let mut p = GenParams::half_scale(0);
        p.planning_window = 20;
        assert!(matches!(
            generate_random(&p),
            Err(GenError::InvalidParams(_))
        ));
        let mut p = GenParams::half_scale(0);
        p.flow_range = IntRange::new(5, 4);
        assert!(matches!(
            generate_random(&p),
            Err(GenError::InvalidParams(_))
        ));
    }

    #[test]
    fn desk_instances_are_valid_and_small() {
        for seed in 0..300 {
            let inst = desk_instance(seed);
            assert!(validate_instance(&inst).is_ok());
            assert!(inst.industry_count() <= 3 && inst.periods <= 8);
            assert!(inst.discharge_count() <= 5);
        }
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        assert!(CapacitySweep::new(5, 4, 1).is_err());
        assert!(CapacitySweep::new(0, 4, 0).is_err());
        let caps: Vec<u64> = CapacitySweep::new(3, 10, 3).unwrap().capacities().collect();
        assert_eq!(caps, vec![3, 6, 9]);
    }

    fn point(capacity: u64, status: Status) -> ScanPoint {
        ScanPoint {
            capacity,
            status,
            elapsed: Duration::ZERO,
            nodes: 0,
        }
    }

    #[test]
    fn report_threshold_and_monotonicity() {
        let r = ScanReport::from_points(vec![
            point(30, Status::Sat),
            point(10, Status::Unsat),
            point(20, Status::Timeout),
            point(40, Status::Sat),
        ]);
        assert_eq!(r.threshold, Some(30));
        assert!(r.monotone);
        assert!(r.has_unique_threshold());

        let bad = ScanReport::from_points(vec![point(10, Status::Sat), point(20, Status::Unsat)]);
        assert!(!bad.monotone);
        assert!(!bad.has_unique_threshold());
    }

    #[test]
    fn csv_layout() {
        let r = ScanReport::from_points(vec![point(5, Status::Unsat), point(6, Status::Sat)]);
        assert_eq!(
            r.to_csv(),
            "capacity,verdict,ms,nodes\n5,unsat,0.000,0\n6,sat,0.000,0\n"
        );
    }
}
