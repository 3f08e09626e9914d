use std::collections::HashMap;
use std::fmt::Write;
use std::sync::OnceLock;

use regex::Regex;

use super::{ensure_valid, reroute_from_flows, EncodeError, ModelParseError};
use crate::model::{build_grid, Instance, Solution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtOptions {
    /// Emit the implied bounds on `bout` (rate cap and previous content).
    pub include_redundant: bool,
    pub logic_name: String,
}

impl Default for SmtOptions {
    fn default() -> Self {
        Self {
            include_redundant: true,
            logic_name: "QF_LIA".to_string(),
        }
    }
}

fn c(i: usize, j: usize) -> String {
    format!("c_{}_{}", i + 1, j + 1)
}

fn bout(i: usize, j: usize) -> String {
    format!("bout_{}_{}", i + 1, j + 1)
}

fn buf(i: usize, j: usize) -> String {
    format!("buf_{}_{}", i + 1, j + 1)
}

/// `(op a b ...)`, with the unit for no arguments and the bare argument
/// for one.
fn nary(op: &str, unit: &str, args: &[String]) -> String {
    match args {
        [] => unit.to_string(),
        [one] => one.clone(),
        _ => format!("({op} {})", args.join(" ")),
    }
}

/// Encodes the time-indexed model as an SMT-LIB v2 script.
pub fn encode_smtlib(instance: &Instance, options: &SmtOptions) -> Result<String, EncodeError> {
    ensure_valid(instance)?;
    let k = instance.industry_count();
    let m = instance.periods;
    let grid = build_grid(instance);
    let d = |i: usize, j: usize| grid.rows[i][j];
    // The buffered part of the inflow, absent when nothing is discharged.
    let inflow = |i: usize, j: usize| (d(i, j) > 0).then(|| format!("(- {} {})", d(i, j), c(i, j)));

    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        "; wwtpp: {k} industries, {m} periods, plant capacity {}",
        instance.plant_capacity
    )
    .unwrap();
    writeln!(w, "(set-option :produce-models true)").unwrap();
    writeln!(w, "(set-logic {})", options.logic_name).unwrap();

    for i in 0..k {
        for j in 0..m {
            if d(i, j) > 0 {
                writeln!(w, "(declare-fun {} () Int)", c(i, j)).unwrap();
            }
        }
    }
    for i in 0..k {
        for j in 0..m {
            writeln!(w, "(declare-fun {} () Int)", bout(i, j)).unwrap();
        }
    }
    for i in 0..k {
        for j in 0..m {
            writeln!(w, "(declare-fun {} () Int)", buf(i, j)).unwrap();
        }
    }

    writeln!(w, "; plant capacity").unwrap();
    for j in 0..m {
        let mut terms = Vec::new();
        for i in 0..k {
            if d(i, j) > 0 {
                terms.push(c(i, j));
            }
            terms.push(bout(i, j));
        }
        writeln!(
            w,
            "(assert (<= {} {}))",
            nary("+", "0", &terms),
            instance.plant_capacity
        )
        .unwrap();
    }

    writeln!(w, "; buffer balance").unwrap();
    for i in 0..k {
        writeln!(
            w,
            "(assert (= {} {}))",
            buf(i, 0),
            inflow(i, 0).unwrap_or_else(|| "0".into())
        )
        .unwrap();
        for j in 1..m {
            let kept = format!("(- {} {})", buf(i, j - 1), bout(i, j));
            let rhs = match inflow(i, j) {
                Some(added) => format!("(+ {kept} {added})"),
                None => kept,
            };
            writeln!(w, "(assert (= {} {rhs}))", buf(i, j)).unwrap();
        }
    }

    writeln!(w, "; tank capacity").unwrap();
    for (i, ind) in instance.industries.iter().enumerate() {
        for j in 1..m.saturating_sub(1) {
            writeln!(w, "(assert (<= {} {}))", buf(i, j), ind.tank_capacity).unwrap();
        }
    }

    writeln!(w, "; tanks empty at the deadline").unwrap();
    for i in 0..k {
        writeln!(w, "(assert (= {} 0))", buf(i, m - 1)).unwrap();
    }

    writeln!(w, "; no emptying in the first period").unwrap();
    for i in 0..k {
        writeln!(w, "(assert (= {} 0))", bout(i, 0)).unwrap();
    }

    writeln!(w, "; emptying is idle, at full rate, or the remainder").unwrap();
    for (i, ind) in instance.industries.iter().enumerate() {
        let tf = ind.tank_flow;
        for j in 1..m {
            let (o, b) = (bout(i, j), buf(i, j - 1));
            writeln!(
                w,
                "(assert (or (= {o} 0) (and (= {o} {tf}) (>= {b} {tf})) (and (= {o} {b}) (<= {b} {tf}))))"
            )
            .unwrap();
        }
    }

    writeln!(
        w,
        "; each discharge goes entirely to the river or to the tank"
    )
    .unwrap();
    for (i, ind) in instance.industries.iter().enumerate() {
        for dis in &ind.discharges {
            let span = dis.start - 1..dis.end;
            let zero: Vec<String> = span.clone().map(|j| format!("(= {} 0)", c(i, j))).collect();
            let full: Vec<String> = span
                .map(|j| format!("(= {} {})", c(i, j), dis.flow))
                .collect();
            writeln!(
                w,
                "(assert (or {} {}))",
                nary("and", "true", &zero),
                nary("and", "true", &full)
            )
            .unwrap();
        }
    }

    if options.include_redundant {
        writeln!(w, "; implied bounds on emptying").unwrap();
        for (i, ind) in instance.industries.iter().enumerate() {
            for j in 1..m {
                let o = bout(i, j);
                writeln!(w, "(assert (and (<= 0 {o}) (<= {o} {})))", ind.tank_flow).unwrap();
            }
        }
        for i in 0..k {
            for j in 1..m {
                writeln!(w, "(assert (<= {} {}))", bout(i, j), buf(i, j - 1)).unwrap();
            }
        }
    }

    writeln!(w, "(check-sat)").unwrap();
    writeln!(w, "(get-model)").unwrap();
    Ok(out)
}

fn define_fun_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\(\s*define-fun\s+([^\s()]+)\s+\(\s*\)\s+Int\s+(\(\s*-\s*\d+\s*\)|-?\d+)\s*\)")
            .expect("static regex")
    })
}

fn parse_int(raw: &str) -> Option<i128> {
    let compact: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    match compact.strip_prefix("(-").and_then(|s| s.strip_suffix(')')) {
        Some(abs) => abs.parse::<i128>().ok().map(|v| -v),
        None => compact.parse().ok(),
    }
}

/// Rebuilds a solution from a `(get-model)` response to a script produced
/// by [`encode_smtlib`]. A leading `sat` line is allowed.
pub fn parse_smt_model(text: &str, instance: &Instance) -> Result<Solution, ModelParseError> {
    let body = text.trim_start();
    let body = body.strip_prefix("sat").unwrap_or(body);
    if !body.trim_start().starts_with('(') && instance.industry_count() > 0 {
        return Err(ModelParseError::Syntax("no model in solver output".into()));
    }
    if body.matches('(').count() != body.matches(')').count() {
        return Err(ModelParseError::Syntax("unbalanced parentheses".into()));
    }

    let mut values: HashMap<String, String> = HashMap::new();
    for cap in define_fun_re().captures_iter(body) {
        values.insert(cap[1].to_string(), cap[2].to_string());
    }
    let lookup = |name: String| -> Result<u64, ModelParseError> {
        let raw = values
            .get(&name)
            .ok_or_else(|| ModelParseError::Missing(name.clone()))?;
        parse_int(raw)
            .and_then(|v| u64::try_from(v).ok())
            .ok_or(ModelParseError::Value {
                name,
                value: raw.clone(),
            })
    };

    let reroute = reroute_from_flows(instance, |i, j, flow| {
        let name = c(i, j);
        let v = lookup(name.clone())?;
        if v == 0 || v == flow {
            Ok(v)
        } else {
            Err(ModelParseError::Value {
                name,
                value: v.to_string(),
            })
        }
    })?;
    let k = instance.industry_count();
    let m = instance.periods;
    let matrix = |f: fn(usize, usize) -> String| -> Result<Vec<Vec<u64>>, ModelParseError> {
        (0..k)
            .map(|i| (0..m).map(|j| lookup(f(i, j))).collect())
            .collect()
    };
    Ok(Solution {
        reroute,
        bout: matrix(bout)?,
        buf: matrix(buf)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Industry;
    use crate::semantics::{verify, VerifyOptions};

    fn counting_fixture() -> Instance {
        Instance::new(10, 2).with_industry(Industry::new("a", 5, 3).with_discharge(1, 2, 4))
    }

    fn instance_b() -> Instance {
        Instance::new(5, 4)
            .with_industry(Industry::new("1", 6, 2).with_discharge(1, 2, 3))
            .with_industry(Industry::new("2", 6, 2).with_discharge(1, 2, 3))
    }

    #[test]
    fn counting_example_declares_six_integers() {
        let text = encode_smtlib(&counting_fixture(), &SmtOptions::default()).unwrap();
        assert_eq!(text.matches("(declare-fun ").count(), 6);
        assert!(text.contains("(assert (= buf_1_1 (- 4 c_1_1)))"));
        assert!(text
            .contains("(assert (or (and (= c_1_1 0) (= c_1_2 0)) (and (= c_1_1 4) (= c_1_2 4))))"));
        assert!(text.ends_with("(check-sat)\n(get-model)\n"));
    }

    #[test]
    fn empty_instance_has_only_vacuous_capacity_rows() {
        let text = encode_smtlib(&Instance::new(7, 3), &SmtOptions::default()).unwrap();
        assert!(!text.contains("declare-fun"));
        assert_eq!(text.matches("(assert ").count(), 3);
        assert!(text.contains("(assert (<= 0 7))"));
    }

    #[test]
    fn redundant_rows_are_optional() {
        let inst = counting_fixture();
        let with = encode_smtlib(&inst, &SmtOptions::default()).unwrap();
        let without = encode_smtlib(
            &inst,
            &SmtOptions {
                include_redundant: false,
                ..SmtOptions::default()
            },
        )
        .unwrap();
        assert!(with.contains("(assert (and (<= 0 bout_1_2) (<= bout_1_2 3)))"));
        assert!(with.contains("(assert (<= bout_1_2 buf_1_1))"));
        assert!(!without.contains("(<= bout_1_2 buf_1_1)"));
    }

    #[test]
    fn zero_flow_cells_drop_the_inflow_term() {
        let inst =
            Instance::new(9, 3).with_industry(Industry::new("a", 5, 3).with_discharge(2, 2, 4));
        let text = encode_smtlib(&inst, &SmtOptions::default()).unwrap();
        assert!(text.contains("(assert (= buf_1_1 0))"));
        assert!(text.contains("(assert (= buf_1_3 (- buf_1_2 bout_1_3)))"));
        assert!(text.contains("(assert (or (= c_1_2 0) (= c_1_2 4)))"));
    }

    #[test]
    fn invalid_instance_rejected() {
        let inst = Instance::new(9, 0);
        assert!(matches!(
            encode_smtlib(&inst, &SmtOptions::default()),
            Err(EncodeError::InvalidInstance(_))
        ));
    }

    fn model_text(pairs: &[(&str, i64)]) -> String {
        let mut s = String::from("sat\n(\n");
        for (name, v) in pairs {
            let value = if *v < 0 {
                format!("(- {})", -v)
            } else {
                v.to_string()
            };
            s.push_str(&format!("  (define-fun {name} () Int\n    {value})\n"));
        }
        s.push_str(")\n");
        s
    }

    #[test]
    fn parses_instance_b_witness() {
        let text = model_text(&[
            ("c_1_1", 3),
            ("c_1_2", 3),
            ("c_2_1", 0),
            ("c_2_2", 0),
            ("bout_1_1", 0),
            ("bout_1_2", 0),
            ("bout_1_3", 0),
            ("bout_1_4", 0),
            ("bout_2_1", 0),
            ("bout_2_2", 2),
            ("bout_2_3", 2),
            ("bout_2_4", 2),
            ("buf_1_1", 0),
            ("buf_1_2", 0),
            ("buf_1_3", 0),
            ("buf_1_4", 0),
            ("buf_2_1", 3),
            ("buf_2_2", 4),
            ("buf_2_3", 2),
            ("buf_2_4", 0),
        ]);
        let inst = instance_b();
        let sol = parse_smt_model(&text, &inst).unwrap();
        assert_eq!(sol.reroute, vec![false, true]);
        assert_eq!(sol.buf[1], vec![3, 4, 2, 0]);
        assert!(verify(&inst, &sol, VerifyOptions::default()).unwrap().ok);
    }

    #[test]
    fn split_span_is_incoherent() {
        let text = model_text(&[("c_1_1", 4), ("c_1_2", 0)]);
        assert_eq!(
            parse_smt_model(&text, &counting_fixture()),
            Err(ModelParseError::Incoherent {
                industry: 1,
                discharge: 1
            })
        );
    }

    #[test]
    fn missing_and_negative_values() {
        let inst = counting_fixture();
        let text = model_text(&[("c_1_1", 0), ("c_1_2", 0)]);
        assert_eq!(
            parse_smt_model(&text, &inst),
            Err(ModelParseError::Missing("bout_1_1".into()))
        );
        let text = model_text(&[("c_1_1", 0), ("c_1_2", 0), ("bout_1_1", -1)]);
        assert!(matches!(
            parse_smt_model(&text, &inst),
            Err(ModelParseError::Value { .. })
        ));
    }

    #[test]
    fn empty_model_for_empty_instance() {
        let sol = parse_smt_model("sat\n(\n)\n", &Instance::new(3, 2)).unwrap();
        assert_eq!(sol, Solution::default());
    }

    #[test]
    fn unbalanced_output_rejected() {
        assert!(matches!(
            parse_smt_model("sat\n((define-fun c_1_1 () Int 0)", &counting_fixture()),
            Err(ModelParseError::Syntax(_))
        ));
    }
}
