use std::fmt::{Display, Write};

use super::{ensure_valid, EncodeError};
use crate::model::{build_grid, Instance};

/// A MiniZinc model and its data file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniZincModel {
    pub model: String,
    pub data: String,
}

impl MiniZincModel {
    /// Model and data in one self-contained `.mzn` text.
    pub fn combined(&self) -> String {
        format!("{}\n% data\n{}", self.model, self.data)
    }
}

/// A discharge of volume `duration * flow` cut into `n` unit pieces of the
/// tank flow plus one remainder piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitPlan {
    pub n: u64,
    pub remainder: u64,
}

impl SplitPlan {
    /// Piece sizes in arrival order, omitting an empty remainder.
    pub fn pieces(&self, tank_flow: u64) -> impl Iterator<Item = u64> {
        let rest = (self.remainder > 0).then_some(self.remainder);
        std::iter::repeat_n(tank_flow, self.n as usize).chain(rest)
    }
}

pub fn split_discharge(duration: u64, flow: u64, tank_flow: u64) -> Result<SplitPlan, EncodeError> {
    if tank_flow == 0 {
        return Err(EncodeError::ZeroTankFlow);
    }
    let volume = duration * flow;
    Ok(SplitPlan {
        n: volume / tank_flow,
        remainder: volume % tank_flow,
    })
}

fn list<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    let body: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", body.join(", "))
}

fn common_data(w: &mut String, instance: &Instance) {
    let _ = writeln!(w, "k = {};", instance.industry_count());
    let _ = writeln!(w, "m = {};", instance.periods);
    let _ = writeln!(w, "plant_capacity = {};", instance.plant_capacity);
    let _ = writeln!(
        w,
        "tank_capacity = {};",
        list(instance.industries.iter().map(|i| i.tank_capacity))
    );
    let _ = writeln!(
        w,
        "tank_flow = {};",
        list(instance.industries.iter().map(|i| i.tank_flow))
    );
    let max_volume = instance
        .industries
        .iter()
        .map(|i| i.total_volume())
        .max()
        .unwrap_or(0);
    let _ = writeln!(w, "max_volume = {max_volume};");
}

const NAIVE_MODEL: &str = "\
% wwtpp time-indexed model: plain finite-domain constraints, no globals
int: k;
int: m;
int: plant_capacity;
array[1..k] of int: tank_capacity;
array[1..k] of int: tank_flow;
array[1..k, 1..m] of int: d;
int: n_discharges;
array[1..n_discharges] of int: dis_industry;
array[1..n_discharges] of int: dis_start;
array[1..n_discharges] of int: dis_end;
int: max_volume;

% river flow; fixed to 0 where nothing is discharged
array[1..k, 1..m] of var 0..max_volume: c;
array[1..k, 1..m] of var 0..max_volume: bout;
array[1..k, 1..m] of var 0..max_volume: buf;

constraint forall(i in 1..k, j in 1..m where d[i, j] = 0)(c[i, j] = 0);

% plant capacity
constraint forall(j in 1..m)(sum(i in 1..k)(c[i, j] + bout[i, j]) <= plant_capacity);

% buffer balance
constraint forall(i in 1..k)(buf[i, 1] = d[i, 1] - c[i, 1]);
constraint forall(i in 1..k, j in 2..m)(
  buf[i, j] = buf[i, j - 1] - bout[i, j] + d[i, j] - c[i, j]);

% tank capacity
constraint forall(i in 1..k, j in 2..m - 1)(buf[i, j] <= tank_capacity[i]);

% tanks empty at the deadline
constraint forall(i in 1..k)(buf[i, m] = 0);

% no emptying in the first period
constraint forall(i in 1..k)(bout[i, 1] = 0);

% emptying is idle, at full rate, or the remainder
constraint forall(i in 1..k, j in 2..m)(
  bout[i, j] = 0
  \\/ (bout[i, j] = tank_flow[i] /\\ buf[i, j - 1] >= tank_flow[i])
  \\/ (bout[i, j] = buf[i, j - 1] /\\ buf[i, j - 1] <= tank_flow[i]));

% each discharge goes entirely to the river or to the tank
constraint forall(q in 1..n_discharges)(
  forall(j in dis_start[q]..dis_end[q])(c[dis_industry[q], j] = 0)
  \\/ forall(j in dis_start[q]..dis_end[q])(c[dis_industry[q], j] = d[dis_industry[q], j]));

% implied bounds on emptying
constraint forall(i in 1..k, j in 2..m)(
  bout[i, j] <= tank_flow[i] /\\ bout[i, j] <= buf[i, j - 1]);

solve satisfy;
";

/// The time-indexed model with default labeling and no global constraints.
pub fn encode_minizinc_naive(instance: &Instance) -> Result<MiniZincModel, EncodeError> {
    ensure_valid(instance)?;
    let grid = build_grid(instance);
    let mut data = String::new();
    let w = &mut data;
    common_data(w, instance);
    let cells = grid.rows.iter().flatten();
    let _ = writeln!(
        w,
        "d = array2d(1..{}, 1..{}, {});",
        instance.industry_count(),
        instance.periods,
        list(cells)
    );
    let refs = instance.discharge_refs();
    let _ = writeln!(w, "n_discharges = {};", refs.len());
    let _ = writeln!(
        w,
        "dis_industry = {};",
        list(refs.iter().map(|d| d.industry + 1))
    );
    let _ = writeln!(
        w,
        "dis_start = {};",
        list(refs.iter().map(|d| d.discharge.start))
    );
    let _ = writeln!(
        w,
        "dis_end = {};",
        list(refs.iter().map(|d| d.discharge.end))
    );
    Ok(MiniZincModel {
        model: NAIVE_MODEL.to_string(),
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CumulativeOptions {
    /// Require the pieces flushed from a tank in one period to add up to
    /// nothing or to the legal emptying amount given the tank's content.
    /// Without it, several remainders can leave a tank in the same period,
    /// which the time-indexed model forbids.
    pub flush_consistency: bool,
}

impl Default for CumulativeOptions {
    fn default() -> Self {
        Self {
            flush_consistency: true,
        }
    }
}

const CUMULATIVE_MODEL: &str = "\
% wwtpp cumulative model: buffered discharges cut into unit pieces
include \"cumulative.mzn\";

int: k;
int: m;
int: plant_capacity;
array[1..k] of int: tank_capacity;
array[1..k] of int: tank_flow;
int: max_volume;
int: n_discharges;
array[1..n_discharges] of int: dis_industry;
array[1..n_discharges] of int: dis_start;
array[1..n_discharges] of int: dis_duration;
array[1..n_discharges] of int: dis_flow;
% discharges ending at the deadline cannot be emptied in time
array[1..n_discharges] of bool: dis_must_river;
int: n_pieces;
array[1..n_pieces] of int: piece_discharge;
array[1..n_pieces] of int: piece_size;
% first period after the piece has fully arrived in the tank
array[1..n_pieces] of int: piece_release;

array[1..n_discharges] of var bool: river;
array[1..n_pieces] of var 0..max_volume: req;
% Flush times. A piece occupies the tank from the start of its discharge
% until the period before its flush. A flush in the period the piece
% arrives would let water leave before it is stored, so flushes range from
% the release period to the deadline.
array[1..n_pieces] of var 1..m: flush;

constraint forall(q in 1..n_discharges where dis_must_river[q])(river[q]);

% a piece requires nothing exactly when its discharge goes to the river
constraint forall(p in 1..n_pieces)(
  (req[p] = 0 <-> river[piece_discharge[p]])
  /\\ (req[p] = 0 \\/ req[p] = piece_size[p]));

constraint forall(p in 1..n_pieces)(flush[p] >= piece_release[p]);

% plant capacity: river discharges plus flushed pieces
constraint cumulative(
  dis_start ++ flush,
  dis_duration ++ [1 | p in 1..n_pieces],
  [dis_flow[q] * bool2int(river[q]) | q in 1..n_discharges] ++ req,
  plant_capacity);

% tank output rate and tank capacity
constraint forall(i in 1..k)(
  let { set of int: P = {p | p in 1..n_pieces where dis_industry[piece_discharge[p]] = i} } in
  cumulative([flush[p] | p in P], [1 | p in P], [req[p] | p in P], tank_flow[i])
  /\\ cumulative(
    [dis_start[piece_discharge[p]] | p in P],
    [flush[p] - dis_start[piece_discharge[p]] | p in P],
    [req[p] | p in P],
    tank_capacity[i]));

% equal pieces of one discharge are interchangeable
constraint forall(p in 1..n_pieces - 1 where
    piece_discharge[p] = piece_discharge[p + 1] /\\ piece_size[p] = piece_size[p + 1])(
  flush[p] <= flush[p + 1]);
";

const FLUSH_CONSISTENCY: &str = "
% the pieces leaving a tank in one period form a legal emptying step
array[1..k, 0..m] of var 0..max_volume: stored;
constraint forall(i in 1..k)(stored[i, 0] = 0);
constraint forall(i in 1..k, t in 1..m)(
  let {
    var int: out = sum(p in 1..n_pieces where dis_industry[piece_discharge[p]] = i)(
      req[p] * bool2int(flush[p] = t));
    int: tf = tank_flow[i];
  } in
  stored[i, t] = stored[i, t - 1] - out
    + sum(q in 1..n_discharges where
        dis_industry[q] = i /\\ dis_start[q] <= t /\\ t < dis_start[q] + dis_duration[q])(
      dis_flow[q] * (1 - bool2int(river[q])))
  /\\ (out = 0 \\/ out = min(tf, stored[i, t - 1])));
";

/// The cumulative model with default options.
pub fn encode_minizinc_cumulative(instance: &Instance) -> Result<MiniZincModel, EncodeError> {
    encode_minizinc_cumulative_with(instance, CumulativeOptions::default())
}

/// The cumulative model. Each discharge that can still be emptied before
/// the deadline is split by [`split_discharge`]; remainders are never
/// merged across discharges.
pub fn encode_minizinc_cumulative_with(
    instance: &Instance,
    options: CumulativeOptions,
) -> Result<MiniZincModel, EncodeError> {
    ensure_valid(instance)?;
    let m = instance.periods;
    let refs = instance.discharge_refs();

    struct Piece {
        discharge: usize,
        size: u64,
        release: usize,
    }
    let mut pieces = Vec::new();
    for (q, r) in refs.iter().enumerate() {
        let dis = r.discharge;
        if dis.end >= m {
            continue;
        }
        let tank_flow = instance.industries[r.industry].tank_flow;
        let plan = split_discharge(dis.duration() as u64, dis.flow, tank_flow).map_err(|_| {
            EncodeError::Unsplittable {
                industry: r.industry + 1,
            }
        })?;
        let mut arrived = 0;
        for size in plan.pieces(tank_flow) {
            arrived += size;
            let ready = dis.start - 1 + arrived.div_ceil(dis.flow) as usize;
            pieces.push(Piece {
                discharge: q + 1,
                size,
                release: ready + 1,
            });
        }
    }

    let mut data = String::new();
    let w = &mut data;
    common_data(w, instance);
    let _ = writeln!(w, "n_discharges = {};", refs.len());
    let _ = writeln!(
        w,
        "dis_industry = {};",
        list(refs.iter().map(|d| d.industry + 1))
    );
    let _ = writeln!(
        w,
        "dis_start = {};",
        list(refs.iter().map(|d| d.discharge.start))
    );
    let _ = writeln!(
        w,
        "dis_duration = {};",
        list(refs.iter().map(|d| d.discharge.duration()))
    );
    let _ = writeln!(
        w,
        "dis_flow = {};",
        list(refs.iter().map(|d| d.discharge.flow))
    );
    let _ = writeln!(
        w,
        "dis_must_river = {};",
        list(refs.iter().map(|d| d.discharge.end >= m))
    );
    let _ = writeln!(w, "n_pieces = {};", pieces.len());
    let _ = writeln!(
        w,
        "piece_discharge = {};",
        list(pieces.iter().map(|p| p.discharge))
    );
    let _ = writeln!(w, "piece_size = {};", list(pieces.iter().map(|p| p.size)));
    let _ = writeln!(
        w,
        "piece_release = {};",
        list(pieces.iter().map(|p| p.release))
    );

    let mut model = CUMULATIVE_MODEL.to_string();
    if options.flush_consistency {
        model.push_str(FLUSH_CONSISTENCY);
    }
    model.push_str("\nsolve satisfy;\n");
    Ok(MiniZincModel { model, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Industry;

    #[test]
    fn split_examples() {
        assert_eq!(
            split_discharge(3, 4, 5).unwrap(),
            SplitPlan { n: 2, remainder: 2 }
        );
        assert_eq!(
            split_discharge(2, 5, 5).unwrap(),
            SplitPlan { n: 2, remainder: 0 }
        );
        assert_eq!(
            split_discharge(1, 3, 5).unwrap(),
            SplitPlan { n: 0, remainder: 3 }
        );
        assert_eq!(split_discharge(1, 3, 0), Err(EncodeError::ZeroTankFlow));
    }

    #[test]
    fn pieces_skip_empty_remainder() {
        let sizes: Vec<u64> = SplitPlan { n: 2, remainder: 0 }.pieces(5).collect();
        assert_eq!(sizes, vec![5, 5]);
    }

    fn volume_twelve() -> Instance {
        Instance::new(20, 6).with_industry(Industry::new("a", 20, 5).with_discharge(1, 3, 4))
    }

    #[test]
    fn volume_twelve_gives_three_pieces() {
        let mz = encode_minizinc_cumulative(&volume_twelve()).unwrap();
        assert!(mz.data.contains("n_pieces = 3;\n"));
        assert!(mz.data.contains("piece_size = [5, 5, 2];\n"));
        // 4 per period arrives: 5 is complete after period 2, 10 after 3.
        assert!(mz.data.contains("piece_release = [3, 4, 4];\n"));
    }

    #[test]
    fn deadline_discharges_have_no_pieces() {
        let inst =
            Instance::new(20, 3).with_industry(Industry::new("a", 20, 0).with_discharge(2, 3, 4));
        let mz = encode_minizinc_cumulative(&inst).unwrap();
        assert!(mz.data.contains("dis_must_river = [true];\n"));
        assert!(mz.data.contains("n_pieces = 0;\n"));
    }

    #[test]
    fn zero_rate_tank_is_unsplittable() {
        let inst =
            Instance::new(20, 4).with_industry(Industry::new("a", 20, 0).with_discharge(1, 1, 4));
        assert_eq!(
            encode_minizinc_cumulative(&inst),
            Err(EncodeError::Unsplittable { industry: 1 })
        );
    }

    #[test]
    fn flush_consistency_is_optional() {
        let inst = volume_twelve();
        let with = encode_minizinc_cumulative(&inst).unwrap();
        let without = encode_minizinc_cumulative_with(
            &inst,
            CumulativeOptions {
                flush_consistency: false,
            },
        )
        .unwrap();
        assert!(with.model.contains("stored[i, t]"));
        assert!(!without.model.contains("stored["));
        assert_eq!(with.data, without.data);
    }

    #[test]
    fn naive_data_for_empty_instance() {
        let mz = encode_minizinc_naive(&Instance::new(5, 2)).unwrap();
        assert_eq!(
            mz.data,
            "k = 0;\nm = 2;\nplant_capacity = 5;\ntank_capacity = [];\ntank_flow = [];\n\
             max_volume = 0;\nd = array2d(1..0, 1..2, []);\nn_discharges = 0;\n\
             dis_industry = [];\ndis_start = [];\ndis_end = [];\n"
        );
        assert!(!mz.model.contains("include"));
    }

    #[test]
    fn combined_appends_data() {
        let mz = encode_minizinc_naive(&volume_twelve()).unwrap();
        let all = mz.combined();
        assert!(all.starts_with(&mz.model));
        assert!(all.ends_with(&mz.data));
    }
}
