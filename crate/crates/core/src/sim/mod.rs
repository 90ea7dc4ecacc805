// SPDX-License-Identifier: Apache-2.0

//! Built-in two-state cycle simulator for the Verilog subset, driven by
//! JSON test-vector suites, plus a hook for external simulators.

mod elaborate;
mod engine;
mod external;
mod ir;
pub mod vectors;

use std::collections::BTreeMap;

use serde::Serialize;

pub use elaborate::{elaborate, ElaborationError, PortInfo, SimDesign, MAX_DEPTH};
pub use engine::{run, Simulator};
pub use external::{run_external, DEFAULT_TIMEOUT, DESIGN_PLACEHOLDER};
pub use ir::{IndexMap, Signal};
pub use vectors::{ResetSpec, VectorError, VectorStep, VectorSuite};

pub const OUTCOME_SCHEMA: &str = "sim/1";
pub const TRACE_SCHEMA: &str = "trace/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("{0}")]
    Bind(String),
    #[error("value {value} does not fit the {width}-bit signal `{signal}`")]
    Range { signal: String, value: u128, width: u32 },
    #[error("combinational logic did not settle within {0} iterations")]
    SettleOverflow(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    SimError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub step: usize,
    pub signal: String,
    pub expected: u128,
    pub actual: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub values: BTreeMap<String, u128>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip)]
    pub trace: Option<Vec<TraceStep>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stdout: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<String>,
}

impl SimOutcome {
    fn base(verdict: Verdict) -> Self {
        SimOutcome {
            verdict,
            first_failure: None,
            message: None,
            trace: None,
            stdout: None,
            stderr: None,
        }
    }

    pub fn pass(trace: Option<Vec<TraceStep>>) -> Self {
        SimOutcome {
            trace,
            ..Self::base(Verdict::Pass)
        }
    }

    pub fn fail(failure: Failure, trace: Option<Vec<TraceStep>>) -> Self {
        SimOutcome {
            message: Some(format!(
                "step {}: `{}` expected {} got {}",
                failure.step, failure.signal, failure.expected, failure.actual
            )),
            first_failure: Some(failure),
            trace,
            ..Self::base(Verdict::Fail)
        }
    }

    pub fn fail_without_step(trace: Option<Vec<TraceStep>>) -> Self {
        SimOutcome {
            trace,
            ..Self::base(Verdict::Fail)
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        SimOutcome {
            message: Some(message.into()),
            ..Self::base(Verdict::SimError)
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `{"schema":"sim/1",...}` without the trace.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("outcome serializes");
        v.as_object_mut()
            .expect("outcome is an object")
            .insert("schema".into(), OUTCOME_SCHEMA.into());
        v
    }

    pub fn trace_json(&self) -> Option<serde_json::Value> {
        self.trace
            .as_ref()
            .map(|t| serde_json::json!({ "schema": TRACE_SCHEMA, "steps": t }))
    }
}

/// Parses, elaborates and runs in one call; front-end and elaboration
/// failures become `sim_error` outcomes.
pub fn simulate(source: &str, suite: &VectorSuite, top: Option<&str>, trace: bool) -> SimOutcome {
    let tree = match crate::verilog::parse_source(source) {
        Ok(t) => t,
        Err(e) => return SimOutcome::error(format!("{} error: {e}", e.stage())),
    };
    match elaborate(&tree, top) {
        Ok(d) => run(&d, suite, trace),
        Err(e) => SimOutcome::error(format!("elaboration: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verilog::parse_source;

    fn design(src: &str) -> SimDesign {
        elaborate(&parse_source(src).unwrap(), None).unwrap()
    }

    const AND: &str = "module g(input a, input b, output y); assign y = a & b; endmodule";

    fn and_steps(wrong_at: Option<usize>) -> VectorSuite {
        let steps = (0..4u128)
            .map(|i| {
                let (a, b) = (i >> 1, i & 1);
                let mut y = a & b;
                if wrong_at == Some(i as usize) {
                    y ^= 1;
                }
                VectorStep::new([("a", a), ("b", b)], [("y", y)])
            })
            .collect();
        VectorSuite::combinational(steps)
    }

    #[test]
    fn and_gate_truth_table() {
        let d = design(AND);
        assert_eq!(d.clocked_count(), 0);
        assert!(run(&d, &and_steps(None), false).passed());
    }

    #[test]
    fn wrong_expectation_reports_step() {
        let o = run(&design(AND), &and_steps(Some(2)), false);
        assert_eq!(o.verdict, Verdict::Fail);
        assert_eq!(
            o.first_failure,
            Some(Failure {
                step: 2,
                signal: "y".into(),
                expected: 1,
                actual: 0
            })
        );
    }

    #[test]
    fn combinational_cycle_is_rejected() {
        let tree =
            parse_source("module c(output y); wire a, b; assign a = b; assign b = a; assign y = a; endmodule").unwrap();
        match elaborate(&tree, None) {
            Err(ElaborationError::CombinationalCycle(names)) => assert_eq!(names, vec!["a", "b"]),
            other => panic!("expected a cycle, got {other:?}"),
        }
    }

    #[test]
    fn bit_level_dependencies_are_not_cycles() {
        let d = design(
            "module s(input a, output [1:0] y); wire [1:0] t; assign t[0] = a; assign t[1] = t[0]; assign y = t; endmodule",
        );
        let suite = VectorSuite::combinational(vec![VectorStep::new([("a", 1)], [("y", 3)])]);
        assert!(run(&d, &suite, false).passed());
    }

    const COUNTER: &str = "module counter(input clk, input rst, output reg [3:0] q);
        always @(posedge clk) if (rst) q <= 4'd0; else q <= q + 1'b1;
    endmodule";

    #[test]
    fn counter_counts_and_wraps() {
        let d = design(COUNTER);
        assert_eq!(d.clocked_count(), 1);
        let mut reference = 0u128;
        let steps = (0..20)
            .map(|_| {
                reference = (reference + 1) % 16;
                VectorStep::new([], [("q", reference)])
            })
            .collect();
        let suite = VectorSuite {
            clock: Some("clk".into()),
            reset: Some(ResetSpec {
                signal: "rst".into(),
                active: 1,
                cycles: 2,
            }),
            steps,
        };
        let o = run(&d, &suite, true);
        assert!(o.passed(), "{o:?}");
        assert_eq!(o.trace.unwrap().len(), 20);
    }

    #[test]
    fn non_blocking_shift_register_moves_one_stage_per_edge() {
        let d = design(
            "module sr(input clk, input d, output reg s1, output reg s2);
                always @(posedge clk) begin s1 <= d; s2 <= s1; end
            endmodule",
        );
        let suite = VectorSuite {
            clock: Some("clk".into()),
            reset: None,
            steps: vec![
                VectorStep::new([("d", 1)], [("s1", 1), ("s2", 0)]),
                VectorStep::new([("d", 0)], [("s1", 0), ("s2", 1)]),
                VectorStep::new([], [("s1", 0), ("s2", 0)]),
            ],
        };
        assert!(run(&d, &suite, false).passed());
    }

    #[test]
    fn blocking_assignments_see_earlier_updates() {
        let d = design(
            "module b(input clk, input x, output reg a, output reg c);
                always @(posedge clk) begin a = x; c = a; end
            endmodule",
        );
        let suite = VectorSuite {
            clock: Some("clk".into()),
            reset: None,
            steps: vec![VectorStep::new([("x", 1)], [("a", 1), ("c", 1)])],
        };
        assert!(run(&d, &suite, false).passed());
    }

    #[test]
    fn async_reset_fires_on_its_own_edge() {
        let d = design(
            "module r(input clk, input rst_n, input d, output reg q);
                always @(posedge clk or negedge rst_n) if (!rst_n) q <= 0; else q <= d;
            endmodule",
        );
        let suite = VectorSuite {
            clock: Some("clk".into()),
            reset: None,
            steps: vec![
                VectorStep::new([("rst_n", 1), ("d", 1)], [("q", 1)]),
                VectorStep::new([("rst_n", 0)], [("q", 0)]).settle(),
            ],
        };
        assert!(run(&d, &suite, false).passed(), "{:?}", run(&d, &suite, false));
    }

    #[test]
    fn hierarchy_and_parameters_flatten() {
        let d = design(
            "module inv #(parameter W = 1) (input [W-1:0] a, output [W-1:0] y); assign y = ~a; endmodule
             module top(input [7:0] a, output [7:0] y); inv #(.W(8)) u(.a(a), .y(y)); endmodule",
        );
        assert_eq!(d.top(), "top");
        let suite = VectorSuite::combinational(vec![VectorStep::new([("a", 0x0F)], [("y", 0xF0)])]);
        assert!(run(&d, &suite, false).passed());
        assert!(d.signals().iter().any(|s| s.name == "u.a" && s.width == 8));
    }

    #[test]
    fn context_width_keeps_carry() {
        let d = design("module a(input [3:0] x, input [3:0] y, output [4:0] s); assign s = x + y; endmodule");
        let suite = VectorSuite::combinational(vec![VectorStep::new([("x", 15), ("y", 1)], [("s", 16)])]);
        assert!(run(&d, &suite, false).passed());
    }

    #[test]
    fn case_and_concat_targets() {
        let d = design(
            "module mux(input [1:0] s, input [3:0] d, output reg y, output [1:0] hi, output [1:0] lo);
                always @* case (s) 2'd0: y = d[0]; 2'd1: y = d[1]; 2'd2: y = d[2]; default: y = d[3]; endcase
                assign {hi, lo} = {d, ~d} >> 4;
            endmodule",
        );
        let suite = VectorSuite::combinational(
            (0..4)
                .map(|s| {
                    VectorStep::new(
                        [("s", s), ("d", 0b1010)],
                        [("y", (0b1010 >> s) & 1), ("hi", 2), ("lo", 2)],
                    )
                })
                .collect(),
        );
        let o = run(&d, &suite, false);
        assert!(o.passed(), "{o:?}");
    }

    #[test]
    fn gate_primitives_evaluate() {
        let d = design("module g(input a, input b, output y, output n); nand (y, a, b); not u(n, a); endmodule");
        let suite = VectorSuite::combinational(vec![
            VectorStep::new([("a", 1), ("b", 1)], [("y", 0), ("n", 0)]),
            VectorStep::new([("a", 0), ("b", 1)], [("y", 1), ("n", 1)]),
        ]);
        assert!(run(&d, &suite, false).passed());
    }

    #[test]
    fn bind_errors_are_sim_errors() {
        let d = design(AND);
        let bad_name = VectorSuite::combinational(vec![VectorStep::new([("q", 1)], [])]);
        assert_eq!(run(&d, &bad_name, false).verdict, Verdict::SimError);
        let too_big = VectorSuite::combinational(vec![VectorStep::new([("a", 2)], [])]);
        assert_eq!(run(&d, &too_big, false).verdict, Verdict::SimError);
    }

    #[test]
    fn oscillating_latch_overflows() {
        let d = design("module o(input en, output reg q); always @* if (en) q = ~q; endmodule");
        let suite = VectorSuite::combinational(vec![VectorStep::new([("en", 1)], [])]);
        let o = run(&d, &suite, false);
        assert_eq!(o.verdict, Verdict::SimError);
        assert!(o.message.unwrap().contains("settle"));
    }

    #[test]
    fn recursion_and_unknown_modules_fail() {
        let t = parse_source("module a(input x); a u(.x(x)); endmodule").unwrap();
        assert!(matches!(elaborate(&t, Some("a")), Err(ElaborationError::Recursion(_))));
        let t = parse_source("module a(input x); b u(.x(x)); endmodule").unwrap();
        assert!(matches!(
            elaborate(&t, None),
            Err(ElaborationError::UnresolvedInstance { .. })
        ));
    }
}
