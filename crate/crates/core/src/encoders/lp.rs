use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use super::{ensure_valid, reroute_from_flows, EncodeError, ModelParseError};
use crate::model::{build_grid, Instance, Solution};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Objective {
    /// Pure feasibility; no objective section.
    #[default]
    None,
    /// Minimize the total buffer content over all tanks and periods.
    MinBufferSum,
}

/// Column names of the integer program. Keys are 0-based; names are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpVariableMap {
    /// `r_i_j`, only where `d_ij > 0`: 1 when the flow goes to the river.
    pub r: BTreeMap<(usize, usize), String>,
    /// `delta_i_a_b`, one per discharge, industry-major.
    pub delta: Vec<String>,
    /// `[dp1_i_j, dp2_i_j, dp3_i_j]` for periods 2..m.
    pub dp: BTreeMap<(usize, usize), [String; 3]>,
    pub bout: Vec<Vec<String>>,
    pub buf: Vec<Vec<String>>,
}

impl IpVariableMap {
    pub fn new(instance: &Instance) -> Self {
        let grid = build_grid(instance);
        let k = instance.industry_count();
        let m = instance.periods;
        let mut r = BTreeMap::new();
        let mut dp = BTreeMap::new();
        for i in 0..k {
            for j in 0..m {
                if grid.rows[i][j] > 0 {
                    r.insert((i, j), format!("r_{}_{}", i + 1, j + 1));
                }
                if j > 0 {
                    dp.insert(
                        (i, j),
                        [1, 2, 3].map(|n| format!("dp{n}_{}_{}", i + 1, j + 1)),
                    );
                }
            }
        }
        let delta = instance
            .discharge_refs()
            .iter()
            .map(|d| {
                format!(
                    "delta_{}_{}_{}",
                    d.industry + 1,
                    d.discharge.start,
                    d.discharge.end
                )
            })
            .collect();
        let grid_names = |prefix: &str| -> Vec<Vec<String>> {
            (0..k)
                .map(|i| {
                    (0..m)
                        .map(|j| format!("{prefix}_{}_{}", i + 1, j + 1))
                        .collect()
                })
                .collect()
        };
        Self {
            r,
            delta,
            dp,
            bout: grid_names("bout"),
            buf: grid_names("buf"),
        }
    }

    /// All zero-one columns, in declaration order.
    pub fn binaries(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.r.values().map(String::as_str).collect();
        out.extend(self.delta.iter().map(String::as_str));
        for names in self.dp.values() {
            out.extend(names.iter().map(String::as_str));
        }
        out
    }

    /// All general integer columns, in declaration order.
    pub fn generals(&self) -> Vec<&str> {
        self.bout
            .iter()
            .chain(&self.buf)
            .flatten()
            .map(String::as_str)
            .collect()
    }
}

/// A linear row `sum(coef * name) <op> rhs`.
struct Row {
    name: String,
    terms: Vec<(i128, String)>,
    op: &'static str,
    rhs: i128,
}

impl Row {
    fn new(name: String, op: &'static str, rhs: i128) -> Self {
        Self {
            name,
            terms: Vec::new(),
            op,
            rhs,
        }
    }

    fn term(mut self, coef: i128, name: &str) -> Self {
        if coef != 0 {
            self.terms.push((coef, name.to_string()));
        }
        self
    }

    fn render(&self, w: &mut String) {
        let tail = format!(" {} {}", self.op, self.rhs);
        self.render_with(w, &tail);
    }

    /// Writes the name and terms, wrapping long rows, followed by `tail`.
    fn render_with(&self, w: &mut String, tail: &str) {
        let mut line = format!(" {}:", self.name);
        for (n, (coef, name)) in self.terms.iter().enumerate() {
            let sign = if *coef < 0 {
                "-"
            } else if n == 0 {
                ""
            } else {
                "+"
            };
            let abs = coef.unsigned_abs();
            let piece = match (sign, abs) {
                ("", 1) => format!(" {name}"),
                ("", _) => format!(" {abs} {name}"),
                (_, 1) => format!(" {sign} {name}"),
                _ => format!(" {sign} {abs} {name}"),
            };
            if line.len() + piece.len() > 200 {
                w.push_str(&line);
                w.push('\n');
                line = "  ".to_string();
            }
            line.push_str(&piece);
        }
        if self.terms.is_empty() {
            line.push_str(" 0");
        }
        let _ = writeln!(w, "{line}{tail}");
    }
}

/// Encodes the integer program in LP file format. Disjunctions become
/// Big-M rows with the tank flow and tank capacity as constants, so the
/// bounds `0 <= bout <= TankFlow` and `bout <= buf(previous)` are always
/// present.
pub fn encode_lp(instance: &Instance, objective: Objective) -> Result<String, EncodeError> {
    ensure_valid(instance)?;
    let vars = IpVariableMap::new(instance);
    let grid = build_grid(instance);
    let k = instance.industry_count();
    let m = instance.periods;
    let mut rows: Vec<Row> = Vec::new();

    // Without industries there is no plant load to bound.
    let load_periods = if k == 0 { 0 } else { m };
    for j in 0..load_periods {
        let mut row = Row::new(
            format!("cap_{}", j + 1),
            "<=",
            instance.plant_capacity as i128,
        );
        for i in 0..k {
            if let Some(r) = vars.r.get(&(i, j)) {
                row = row.term(grid.rows[i][j] as i128, r);
            }
            row = row.term(1, &vars.bout[i][j]);
        }
        rows.push(row);
    }

    for i in 0..k {
        for j in 0..m {
            let d = grid.rows[i][j] as i128;
            let mut row =
                Row::new(format!("bal_{}_{}", i + 1, j + 1), "=", d).term(1, &vars.buf[i][j]);
            if j > 0 {
                row = row.term(-1, &vars.buf[i][j - 1]).term(1, &vars.bout[i][j]);
            }
            if let Some(r) = vars.r.get(&(i, j)) {
                row = row.term(d, r);
            }
            rows.push(row);
        }
    }

    for (i, ind) in instance.industries.iter().enumerate() {
        for j in 1..m.saturating_sub(1) {
            rows.push(
                Row::new(
                    format!("tank_{}_{}", i + 1, j + 1),
                    "<=",
                    ind.tank_capacity as i128,
                )
                .term(1, &vars.buf[i][j]),
            );
        }
        rows.push(Row::new(format!("empty_{}", i + 1), "=", 0).term(1, &vars.buf[i][m - 1]));
        rows.push(Row::new(format!("first_{}", i + 1), "=", 0).term(1, &vars.bout[i][0]));
    }

    for (dref, delta) in instance.discharge_refs().iter().zip(&vars.delta) {
        let i = dref.industry;
        let dis = dref.discharge;
        let len = dis.duration() as i128;
        let tag = format!("{}_{}_{}", i + 1, dis.start, dis.end);
        let mut upper = Row::new(format!("all_{tag}"), "<=", len);
        let mut lower = Row::new(format!("none_{tag}"), "<=", -len);
        for j in dis.start - 1..dis.end {
            upper = upper.term(1, &vars.r[&(i, j)]);
            lower = lower.term(-1, &vars.r[&(i, j)]);
        }
        rows.push(upper.term(len, delta));
        rows.push(lower.term(-len, delta));
    }

    for (&(i, j), [dp1, dp2, dp3]) in &vars.dp {
        let ind = &instance.industries[i];
        let tf = ind.tank_flow as i128;
        let tc = ind.tank_capacity as i128;
        let tag = format!("{}_{}", i + 1, j + 1);
        let (bout, prev) = (&vars.bout[i][j], &vars.buf[i][j - 1]);
        rows.push(
            Row::new(format!("cover_{tag}"), ">=", 1)
                .term(1, dp1)
                .term(1, dp2)
                .term(1, dp3),
        );
        rows.push(
            Row::new(format!("idle_{tag}"), "<=", tf)
                .term(1, bout)
                .term(tf, dp1),
        );
        rows.push(
            Row::new(format!("rate_{tag}"), "<=", 0)
                .term(tf, dp2)
                .term(-1, bout),
        );
        rows.push(
            Row::new(format!("stock_{tag}"), "<=", 0)
                .term(-1, prev)
                .term(tf, dp2),
        );
        rows.push(
            Row::new(format!("rest_{tag}"), "<=", tc)
                .term(1, prev)
                .term(-1, bout)
                .term(tc, dp3),
        );
        rows.push(
            Row::new(format!("low_{tag}"), "<=", tc + tf)
                .term(1, prev)
                .term(tc, dp3),
        );
        rows.push(
            Row::new(format!("prev_{tag}"), "<=", 0)
                .term(1, bout)
                .term(-1, prev),
        );
    }

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        "\\ wwtpp: {k} industries, {m} periods, plant capacity {}",
        instance.plant_capacity
    );
    if objective == Objective::MinBufferSum {
        let mut obj = Row::new("obj".into(), "", 0);
        for name in vars.buf.iter().flatten() {
            obj = obj.term(1, name);
        }
        let _ = writeln!(w, "Minimize");
        obj.render_with(w, "");
    }
    let _ = writeln!(w, "Subject To");
    for row in &rows {
        row.render(w);
    }
    let _ = writeln!(w, "Bounds");
    for (i, ind) in instance.industries.iter().enumerate() {
        for j in 1..m {
            let _ = writeln!(w, " 0 <= {} <= {}", vars.bout[i][j], ind.tank_flow);
        }
    }
    let _ = writeln!(w, "Binaries");
    for name in vars.binaries() {
        let _ = writeln!(w, " {name}");
    }
    let _ = writeln!(w, "Generals");
    for name in vars.generals() {
        let _ = writeln!(w, " {name}");
    }
    let _ = writeln!(w, "End");
    Ok(out)
}

/// Rebuilds a solution from column values reported by a MILP solver for a
/// model produced by [`encode_lp`]. Values are rounded to the nearest
/// integer.
pub fn decode_lp_values(
    instance: &Instance,
    values: &HashMap<String, f64>,
) -> Result<Solution, ModelParseError> {
    let vars = IpVariableMap::new(instance);
    let get = |name: &str| -> Result<u64, ModelParseError> {
        let v = *values
            .get(name)
            .ok_or_else(|| ModelParseError::Missing(name.to_string()))?;
        let rounded = v.round();
        if !rounded.is_finite() || rounded < 0.0 || (v - rounded).abs() > 1e-6 {
            return Err(ModelParseError::Value {
                name: name.to_string(),
                value: v.to_string(),
            });
        }
        Ok(rounded as u64)
    };
    let reroute = reroute_from_flows(instance, |i, j, flow| {
        let name = &vars.r[&(i, j)];
        match get(name)? {
            0 => Ok(0),
            1 => Ok(flow),
            v => Err(ModelParseError::Value {
                name: name.clone(),
                value: v.to_string(),
            }),
        }
    })?;
    let matrix = |names: &Vec<Vec<String>>| -> Result<Vec<Vec<u64>>, ModelParseError> {
        names
            .iter()
            .map(|row| row.iter().map(|n| get(n)).collect())
            .collect()
    };
    Ok(Solution {
        reroute,
        bout: matrix(&vars.bout)?,
        buf: matrix(&vars.buf)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Industry;

    fn counting_fixture() -> Instance {
        Instance::new(10, 2).with_industry(Industry::new("a", 5, 3).with_discharge(1, 2, 4))
    }

    #[test]
    fn counting_example_has_six_binaries() {
        let vars = IpVariableMap::new(&counting_fixture());
        assert_eq!(
            vars.binaries(),
            vec![
                "r_1_1",
                "r_1_2",
                "delta_1_1_2",
                "dp1_1_2",
                "dp2_1_2",
                "dp3_1_2"
            ]
        );
        let text = encode_lp(&counting_fixture(), Objective::None).unwrap();
        let binaries = text
            .split("Binaries\n")
            .nth(1)
            .unwrap()
            .split("Generals")
            .next()
            .unwrap();
        assert_eq!(binaries.lines().count(), 6);
    }

    #[test]
    fn rows_match_the_big_m_pattern() {
        let text = encode_lp(&counting_fixture(), Objective::None).unwrap();
        for row in [
            " cap_1: 4 r_1_1 + bout_1_1 <= 10",
            " bal_1_1: buf_1_1 + 4 r_1_1 = 4",
            " bal_1_2: buf_1_2 - buf_1_1 + bout_1_2 + 4 r_1_2 = 4",
            " all_1_1_2: r_1_1 + r_1_2 + 2 delta_1_1_2 <= 2",
            " none_1_1_2: - r_1_1 - r_1_2 - 2 delta_1_1_2 <= -2",
            " cover_1_2: dp1_1_2 + dp2_1_2 + dp3_1_2 >= 1",
            " idle_1_2: bout_1_2 + 3 dp1_1_2 <= 3",
            " rate_1_2: 3 dp2_1_2 - bout_1_2 <= 0",
            " stock_1_2: - buf_1_1 + 3 dp2_1_2 <= 0",
            " rest_1_2: buf_1_1 - bout_1_2 + 5 dp3_1_2 <= 5",
            " low_1_2: buf_1_1 + 5 dp3_1_2 <= 8",
            " prev_1_2: bout_1_2 - buf_1_1 <= 0",
            " 0 <= bout_1_2 <= 3",
        ] {
            assert!(text.contains(&format!("{row}\n")), "missing {row:?}");
        }
        assert!(!text.contains("Minimize"));
    }

    #[test]
    fn buffer_objective() {
        let text = encode_lp(&counting_fixture(), Objective::MinBufferSum).unwrap();
        assert!(text.contains("Minimize\n obj: buf_1_1 + buf_1_2\nSubject To\n"));
    }

    #[test]
    fn empty_instance() {
        let text = encode_lp(&Instance::new(3, 2), Objective::None).unwrap();
        assert_eq!(
            text,
            "\\ wwtpp: 0 industries, 2 periods, plant capacity 3\nSubject To\nBounds\nBinaries\nGenerals\nEnd\n"
        );
    }

    #[test]
    fn long_rows_wrap() {
        let mut inst = Instance::new(10, 2);
        for n in 0..40 {
            inst = inst.with_industry(Industry::new(format!("i{n}"), 5, 3).with_discharge(1, 1, 1));
        }
        let text = encode_lp(&inst, Objective::None).unwrap();
        assert!(text.lines().all(|l| l.len() <= 210));
    }

    #[test]
    fn decode_round_trip() {
        let inst = counting_fixture();
        let mut values: HashMap<String, f64> = HashMap::new();
        for (name, v) in [
            ("r_1_1", 1.0),
            ("r_1_2", 1.0),
            ("bout_1_1", 0.0),
            ("bout_1_2", 0.0),
            ("buf_1_1", 0.0),
            ("buf_1_2", -0.0),
        ] {
            values.insert(name.into(), v);
        }
        let sol = decode_lp_values(&inst, &values).unwrap();
        assert_eq!(sol, Solution::all_river(&inst));
        values.insert("r_1_2".into(), 0.0);
        assert!(matches!(
            decode_lp_values(&inst, &values),
            Err(ModelParseError::Incoherent { .. })
        ));
        values.insert("r_1_2".into(), 0.5);
        assert!(matches!(
            decode_lp_values(&inst, &values),
            Err(ModelParseError::Value { .. })
        ));
    }
}
