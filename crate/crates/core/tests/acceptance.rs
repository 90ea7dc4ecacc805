// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria, one line of output each. Runs without the libtest
//! harness so the summary is always printed.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtlseek::canon::structurally_equivalent;
use rtlseek::grpo::{
    advantages, gradient, policy_objective, train_demo, DemoConfig, Diversity, GrpoConfig, SampledGroup, SingleBest,
    ToyPolicy,
};
use rtlseek::metrics::{evaluate, pass_at_k, BenchmarkManifest, EvalOptions, ItemMetrics};
use rtlseek::reward::{score, HistoryWindow, StageConfig, Verification};
use rtlseek::sim::{elaborate, simulate, Simulator, VectorStep, VectorSuite, Verdict};
use rtlseek::verilog::parse_source;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture present")
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn and2() -> Verification {
    Verification::Vectors {
        suite: VectorSuite::load(&fixture("and2.tv.json")).unwrap(),
        top: None,
    }
}

fn reward_exactness() -> Outcome {
    let start = Instant::now();
    let mut history = HistoryWindow::from_lengths([37]);
    let b = score(&read("reward_exact.txt"), &StageConfig::stage3(), &and2(), &mut history);
    let got = (
        b.r_syn, b.r_func, b.n_c, b.n_s, b.r_div, b.i_s, b.l_t, b.r_cont, b.r_total,
    );
    let want = (1, 1, 3, 2, 5, 1, 1.0, 1.0, 8.0);
    check(got == want, || format!("got {got:?}, want {want:?}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("r_total = {}", b.r_total))
}

fn delta_boundary() -> Outcome {
    let mut sums = Vec::new();
    for (name, sum, i_s) in [("delta_four.txt", 4, 0), ("delta_five.txt", 5, 1)] {
        let b = score(&read(name), &StageConfig::stage3(), &and2(), &mut HistoryWindow::new());
        let live = u32::from(b.r_syn) + u32::from(b.r_func) + b.r_div;
        check(live == sum && b.i_s == i_s, || {
            format!("{name}: component sum {live}, i_s {}", b.i_s)
        })?;
        sums.push(format!("sum {live} -> i_s {}", b.i_s));
    }
    Ok(sums.join(", "))
}

const ADDER_BEHAVIORAL: &str = "module add4(input [3:0] a, input [3:0] b, output [4:0] s);
  assign s = a + b;
endmodule";

const ADDER_STRUCTURAL: &str = "module add4(input [3:0] a, input [3:0] b, output [4:0] s);
  wire [4:0] c;
  assign c[0] = 1'b0;
  fa f0(a[0], b[0], c[0], s[0], c[1]);
  fa f1(a[1], b[1], c[1], s[1], c[2]);
  fa f2(a[2], b[2], c[2], s[2], c[3]);
  fa f3(a[3], b[3], c[3], s[3], c[4]);
  assign s[4] = c[4];
endmodule
module fa(input a, input b, input ci, output s, output co);
  assign s = a ^ b ^ ci;
  assign co = (a & b) | (ci & (a ^ b));
endmodule";

fn fsm(idle: &str, busy: &str, done: &str, width: u32) -> String {
    let hi = width - 1;
    format!(
        "module ctl(input clk, input rst, input go, output fin);
  localparam IDLE = {idle}, BUSY = {busy}, DONE = {done};
  reg [{hi}:0] st;
  always @(posedge clk)
    if (rst) st <= IDLE;
    else case (st)
      IDLE: if (go) st <= BUSY;
      BUSY: st <= DONE;
      default: st <= IDLE;
    endcase
  assign fin = st == DONE;
endmodule"
    )
}

fn equivalence_suite() -> Outcome {
    let base = "module m(input a, input b, input c, output y, output z);
  wire t;
  assign t = a & b;
  assign y = t | c;
  assign z = ~t;
endmodule";
    let seq = "module r(input clk, input [3:0] d, output reg [3:0] q, output reg [3:0] p);
  always @(posedge clk) begin
    q <= d;
    p <= q;
  end
endmodule";
    let blocking = "module s(input [3:0] d, output reg [3:0] x, output reg [3:0] w);
  always @* begin
    x = d + 4'd1;
    w = x ^ 4'b1010;
  end
endmodule";
    let hier = "module top(input [7:0] i, output [7:0] o);
  wire [7:0] n;
  inv u0(.a(i), .y(n));
  assign o = n;
endmodule
module inv(input [7:0] a, output [7:0] y);
  assign y = ~a;
endmodule";

    let same: Vec<(&str, String, String)> = vec![
        (
            "net renaming",
            base.into(),
            base.replace(" t;", " tmp;")
                .replace("t =", "tmp =")
                .replace("t |", "tmp |")
                .replace("~t", "~tmp"),
        ),
        (
            "port and module renaming",
            base.into(),
            "module other(input p, input q, input r, output u, output v);
  wire t;
  assign t = p & q;
  assign u = t | r;
  assign v = ~t;
endmodule"
                .into(),
        ),
        (
            "assign reordering",
            base.into(),
            "module m(input a, input b, input c, output y, output z);
  assign z = ~t;
  assign y = t | c;
  wire t;
  assign t = a & b;
endmodule"
                .into(),
        ),
        (
            "comments and whitespace",
            base.into(),
            format!("// header\n{}", base.replace("\n  ", "\n\t /* x */ ")),
        ),
        (
            "literal radix",
            blocking.into(),
            blocking.replace("4'd1", "4'b0001").replace("4'b1010", "4'hA"),
        ),
        (
            "literal underscores and case",
            blocking.into(),
            blocking.replace("4'b1010", "4'B10_10").replace("4'd1", "4'h1"),
        ),
        (
            "always block reordering",
            seq.replace(
                "begin\n    q <= d;\n    p <= q;\n  end",
                "q <= d;\n  always @(posedge clk) p <= q;",
            ),
            seq.replace(
                "begin\n    q <= d;\n    p <= q;\n  end",
                "p <= q;\n  always @(posedge clk) q <= d;",
            ),
        ),
        (
            "register renaming",
            seq.into(),
            seq.replace('q', "stage1").replace(" p", " stage2"),
        ),
        (
            "module order in hierarchy",
            hier.into(),
            "module inv(input [7:0] a, output [7:0] y);
  assign y = ~a;
endmodule
module top(input [7:0] i, output [7:0] o);
  wire [7:0] n;
  inv u0(.a(i), .y(n));
  assign o = n;
endmodule"
                .into(),
        ),
        (
            "named versus positional connections",
            hier.into(),
            hier.replace("inv u0(.a(i), .y(n));", "inv u0(i, n);"),
        ),
    ];
    let different: Vec<(&str, String, String)> = vec![
        ("and versus or", base.into(), base.replace("a & b", "a | b")),
        (
            "xor versus xnor",
            blocking.into(),
            blocking.replace("x ^ 4'b1010", "x ~^ 4'b1010"),
        ),
        (
            "plus versus minus",
            blocking.into(),
            blocking.replace("d + 4'd1", "d - 4'd1"),
        ),
        (
            "swapped dependent blocking statements",
            blocking.into(),
            blocking.replace(
                "x = d + 4'd1;\n    w = x ^ 4'b1010;",
                "w = x ^ 4'b1010;\n    x = d + 4'd1;",
            ),
        ),
        (
            "behavioral versus structural adder",
            ADDER_BEHAVIORAL.into(),
            ADDER_STRUCTURAL.into(),
        ),
        (
            "binary versus one-hot state encoding",
            fsm("2'd0", "2'd1", "2'd2", 2),
            fsm("3'b001", "3'b010", "3'b100", 3),
        ),
        (
            "binary versus gray state encoding",
            fsm("2'd0", "2'd1", "2'd2", 2),
            fsm("2'd0", "2'd1", "2'd3", 2),
        ),
        ("blocking versus nonblocking", seq.into(), seq.replace("<=", "=")),
        ("different constant", blocking.into(), blocking.replace("4'd1", "4'd2")),
        (
            "extra inversion",
            hier.into(),
            hier.replace("assign o = n;", "assign o = ~n;"),
        ),
    ];

    let mut wrong = Vec::new();
    for (expect, pairs) in [(true, &same), (false, &different)] {
        for (label, a, b) in pairs {
            let ta = parse_source(a).map_err(|e| format!("{label}: {e}"))?;
            let tb = parse_source(b).map_err(|e| format!("{label} (variant): {e}\n{b}"))?;
            if structurally_equivalent(&ta, &tb) != expect {
                wrong.push(*label);
            }
        }
    }
    let total = same.len() + different.len();
    check(total == 20 && wrong.is_empty(), || format!("misjudged: {wrong:?}"))?;
    Ok(format!("{}/{total} pairs", total - wrong.len()))
}

struct Combinational {
    name: &'static str,
    source: &'static str,
    inputs: &'static [(&'static str, u32)],
    outputs: &'static [&'static str],
    model: fn(&[u128]) -> Vec<u128>,
}

const COMBINATIONAL: &[Combinational] = &[
    Combinational {
        name: "adder",
        source: ADDER_STRUCTURAL,
        inputs: &[("a", 4), ("b", 4)],
        outputs: &["s"],
        model: |v| vec![v[0] + v[1]],
    },
    Combinational {
        name: "alu",
        source: "module alu(input [1:0] op, input [3:0] a, input [3:0] b, output reg [3:0] y, output z);
  always @* begin
    case (op)
      2'd0: y = a + b;
      2'd1: y = a - b;
      2'd2: y = a & b;
      default: y = a ^ b;
    endcase
  end
  assign z = y == 4'd0;
endmodule",
        inputs: &[("op", 2), ("a", 4), ("b", 4)],
        outputs: &["y", "z"],
        model: |v| {
            let y = match v[0] {
                0 => v[1] + v[2],
                1 => v[1].wrapping_sub(v[2]),
                2 => v[1] & v[2],
                _ => v[1] ^ v[2],
            } & 0xf;
            vec![y, u128::from(y == 0)]
        },
    },
    Combinational {
        name: "mux4",
        source:
            "module mux4(input [1:0] s, input [1:0] a, input [1:0] b, input [1:0] c, input [1:0] d, output [1:0] y);
  assign y = s[1] ? (s[0] ? d : c) : (s[0] ? b : a);
endmodule",
        inputs: &[("s", 2), ("a", 2), ("b", 2), ("c", 2), ("d", 2)],
        outputs: &["y"],
        model: |v| vec![v[1 + v[0] as usize]],
    },
    Combinational {
        name: "compare",
        source: "module cmp(input [4:0] a, input [4:0] b, output lt, output eq, output gt);
  assign lt = a < b;
  assign eq = a == b;
  assign gt = a > b;
endmodule",
        inputs: &[("a", 5), ("b", 5)],
        outputs: &["lt", "eq", "gt"],
        model: |v| {
            vec![
                u128::from(v[0] < v[1]),
                u128::from(v[0] == v[1]),
                u128::from(v[0] > v[1]),
            ]
        },
    },
    Combinational {
        name: "priority",
        source: "module prio(input [7:0] r, output reg [2:0] idx, output any);
  always @* begin
    idx = 3'd0;
    if (r[1]) idx = 3'd1;
    if (r[2]) idx = 3'd2;
    if (r[3]) idx = 3'd3;
    if (r[4]) idx = 3'd4;
    if (r[5]) idx = 3'd5;
    if (r[6]) idx = 3'd6;
    if (r[7]) idx = 3'd7;
  end
  assign any = |r;
endmodule",
        inputs: &[("r", 8)],
        outputs: &["idx", "any"],
        model: |v| {
            vec![
                if v[0] == 0 {
                    0
                } else {
                    127 - u128::from(v[0].leading_zeros())
                },
                u128::from(v[0] != 0),
            ]
        },
    },
    Combinational {
        name: "gates",
        source: "module g(input [2:0] x, output p, output q, output r);
  wire n;
  nand g0(n, x[0], x[1]);
  xor g1(p, n, x[2]);
  nor g2(q, x[0], x[1], x[2]);
  not g3(r, p);
endmodule",
        inputs: &[("x", 3)],
        outputs: &["p", "q", "r"],
        model: |v| {
            let b = |i: u32| (v[0] >> i) & 1;
            let p = (1 - (b(0) & b(1))) ^ b(2);
            vec![p, 1 - (b(0) | b(1) | b(2)), 1 - p]
        },
    },
];

fn truth_table(c: &Combinational) -> Result<usize, String> {
    let tree = parse_source(c.source).map_err(|e| format!("{}: {e}", c.name))?;
    let design = elaborate(&tree, None).map_err(|e| format!("{}: {e}", c.name))?;
    let bits: u32 = c.inputs.iter().map(|i| i.1).sum();
    if bits > 10 {
        return Err(format!("{} has {bits} input bits", c.name));
    }
    let mut sim = Simulator::new(&design);
    for v in 0u128..(1 << bits) {
        let mut shift = 0;
        let mut values = Vec::new();
        for &(name, w) in c.inputs {
            let x = (v >> shift) & ((1 << w) - 1);
            shift += w;
            sim.set(name, x).map_err(|e| e.to_string())?;
            values.push(x);
        }
        sim.propagate().map_err(|e| e.to_string())?;
        let want = (c.model)(&values);
        for (name, w) in c.outputs.iter().zip(want) {
            let got = sim.get(name).map_err(|e| e.to_string())?;
            if got != w {
                return Err(format!("{}: inputs {values:?}: `{name}` = {got}, want {w}", c.name));
            }
        }
    }
    Ok(1 << bits)
}

fn clocked_suite(steps: Vec<VectorStep>) -> VectorSuite {
    VectorSuite {
        clock: Some("clk".into()),
        reset: None,
        steps,
    }
}

fn step(inputs: &[(&str, u128)], expected: &[(&str, u128)]) -> VectorStep {
    let map = |m: &[(&str, u128)]| m.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    VectorStep {
        inputs: map(inputs),
        expected: map(expected),
        settle_only: false,
    }
}

fn counter_and_shift_register() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let counter = "module counter(input clk, input rst, input en, output reg [3:0] q);
  always @(posedge clk)
    if (rst) q <= 4'd0;
    else if (en) q <= q + 4'd1;
endmodule";
    let mut q = 0u128;
    let mut steps = Vec::new();
    for i in 0..50 {
        let rst = u128::from(i == 0 || rng.random_ratio(1, 12));
        let en = u128::from(rng.random_ratio(4, 5));
        q = if rst == 1 { 0 } else { (q + en) % 16 };
        steps.push(step(&[("rst", rst), ("en", en)], &[("q", q)]));
    }
    let out = simulate(counter, &clocked_suite(steps), None, false);
    check(out.verdict == Verdict::Pass, || format!("counter: {:?}", out.message))?;

    let shift = "module shift2(input clk, input d, output reg s1, output reg s2);
  always @(posedge clk) begin
    s1 <= d;
    s2 <= s1;
  end
endmodule";
    let mut s1 = 0u128;
    let mut steps = Vec::new();
    for _ in 0..50 {
        let d = u128::from(rng.random_bool(0.5));
        let s2 = s1;
        s1 = d;
        steps.push(step(&[("d", d)], &[("s1", s1), ("s2", s2)]));
    }
    let out = simulate(shift, &clocked_suite(steps), None, false);
    check(out.verdict == Verdict::Pass, || {
        format!("shift register: {:?}", out.message)
    })
}

fn simulator_oracle() -> Outcome {
    let start = Instant::now();
    let mut vectors = 0;
    for c in COMBINATIONAL {
        vectors += truth_table(c)?;
    }
    counter_and_shift_register()?;
    within(start, Duration::from_secs(10))?;
    Ok(format!(
        "{} designs, {vectors} vectors; counter and shift register over 50 steps",
        COMBINATIONAL.len()
    ))
}

/// Distance from the nearest clip boundary, over all ratios of the group.
fn kink_distance(policy: &ToyPolicy, group: &SampledGroup, eps: f64) -> f64 {
    let lp = policy.log_probs();
    group
        .actions
        .iter()
        .zip(&group.logprob_old)
        .map(|(&a, old)| {
            let r = (lp[a] - old).exp();
            (r - (1.0 - eps)).abs().min((r - (1.0 + eps)).abs())
        })
        .fold(f64::INFINITY, f64::min)
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-6;
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 100 {
        let vocab = rng.random_range(2..=8);
        let g = rng.random_range(2..=16);
        let logits: Vec<f64> = (0..vocab).map(|_| rng.random_range(-2.0..2.0)).collect();
        let policy = ToyPolicy {
            reference: logits.iter().map(|l| l + rng.random_range(-1.0..1.0)).collect(),
            logits,
        };
        let old = ToyPolicy::new(policy.logits.iter().map(|l| l + rng.random_range(-0.4..0.4)).collect()).log_probs();
        let cfg = GrpoConfig {
            group_size: g,
            clip_eps: rng.random_range(0.1..0.3),
            beta: rng.random_range(0.0..0.2),
            ..GrpoConfig::default()
        };
        let actions = policy.sample(g, &mut rng);
        let rewards: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
        let group = SampledGroup {
            logprob_old: actions.iter().map(|&a| old[a]).collect(),
            advantages: advantages(&rewards, cfg.adv_eps),
            actions,
            rewards,
        };
        if kink_distance(&policy, &group, cfg.clip_eps) < 1e-3 {
            continue;
        }
        let analytic = gradient(&policy, &group, &cfg);
        for (j, &exact) in analytic.iter().enumerate() {
            let at = |delta: f64| {
                let mut p = policy.clone();
                p.logits[j] += delta;
                policy_objective(&p, &group, &cfg).unwrap()
            };
            let numeric = (at(h) - at(-h)) / (2.0 * h);
            let err = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-4);
            worst = worst.max(err);
        }
        checked += 1;
    }
    check(worst < 1e-5, || format!("max relative error {worst:.3e}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("{checked} configurations, max relative error {worst:.2e}"))
}

fn grpo_dynamics() -> Outcome {
    let start = Instant::now();
    let cfg = GrpoConfig::default();
    let demo = DemoConfig::default();
    let curve =
        train_demo(ToyPolicy::uniform(8), &mut SingleBest { target: 3 }, &cfg, &demo).map_err(|e| e.to_string())?;
    let p_target = curve.final_policy.probs()[3];
    check(p_target > 0.9, || {
        format!("single-best target probability {p_target:.3}")
    })?;

    let mut peaked = vec![0.0; 8];
    peaked[0] = 4.0;
    let steps = 300;
    let (mut rising, mut mean_curve) = (0, vec![0.0; steps]);
    for seed in 0..10 {
        let demo = DemoConfig {
            steps,
            seed,
            ..DemoConfig::default()
        };
        let curve = train_demo(
            ToyPolicy::new(peaked.clone()),
            &mut Diversity::all_valid(8),
            &cfg,
            &demo,
        )
        .map_err(|e| e.to_string())?;
        if curve.final_policy.entropy() > curve.points[0].entropy {
            rising += 1;
        }
        for (m, p) in mean_curve.iter_mut().zip(&curve.points) {
            *m += p.mean_reward / 10.0;
        }
    }
    let quarter = steps / 4;
    let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (first, last) = (avg(&mean_curve[..quarter]), avg(&mean_curve[steps - quarter..]));
    check(rising >= 9, || format!("entropy rose in {rising}/10 seeds"))?;
    check(last > first, || format!("reward quartiles {first:.3} -> {last:.3}"))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "p(target) = {p_target:.3}; entropy rose in {rising}/10 seeds; reward quartiles {first:.3} -> {last:.3}"
    ))
}

fn pass_at_k_oracle() -> Outcome {
    let mut cases = 0;
    for n in 1..=10usize {
        for c in 0..=n {
            for k in 1..=n {
                // Samples 0..c are correct; count k-subsets holding at least one.
                let (mut hit, mut total) = (0u32, 0u32);
                for mask in 0u32..(1 << n) {
                    if mask.count_ones() as usize == k {
                        total += 1;
                        hit += u32::from(mask & ((1 << c) - 1) != 0);
                    }
                }
                let brute = f64::from(hit) / f64::from(total);
                let fast = pass_at_k(n, c, k).map_err(|e| e.to_string())?;
                check((fast - brute).abs() <= 1e-12, || {
                    format!("n={n} c={c} k={k}: {fast} vs {brute}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (n, c, k) triples"))
}

fn metrics_consistency() -> Outcome {
    let manifest = BenchmarkManifest::load(&fixture("manifest.json")).map_err(|e| e.to_string())?;
    let options = EvalOptions {
        timeout: Duration::from_secs(10),
        jobs: 0,
    };
    let report = evaluate(&manifest, &fixture("responses"), &options);
    check(report.is_complete(), || "fixture report is partial".into())?;
    let invariant = |m: &ItemMetrics, label: &str| -> Result<(), String> {
        let pairs = [
            (m.syntax.opoo_pass_1, m.syntax.opmo_pass_1),
            (m.syntax.opoo_pass_5, m.syntax.opmo_pass_5),
            (m.function.opoo_pass_1, m.function.opmo_pass_1),
            (m.function.opoo_pass_5, m.function.opmo_pass_5),
        ];
        check(pairs.iter().all(|(oo, mo)| mo >= oo), || {
            format!("{label}: OPMO below OPOO")
        })?;
        check(m.fun_num <= m.syn_num && m.syn_num <= m.gen_num, || {
            format!("{label}: counts out of order")
        })?;
        let ratio = m.function_correct as f64 / m.generated as f64;
        check(m.success_rate == ratio, || {
            format!("{label}: success rate {} vs {ratio}", m.success_rate)
        })
    };
    for item in &report.items {
        invariant(item.metrics.as_ref().unwrap(), &item.id)?;
    }
    let a = &report.aggregate;
    check(a.fun_num <= a.syn_num && a.syn_num <= a.gen_num, || {
        "aggregate counts out of order".into()
    })?;
    check(a.function.opmo_pass_1 >= a.function.opoo_pass_1, || {
        "aggregate OPMO below OPOO".into()
    })?;
    Ok(format!(
        "{} items; gen {:.2} >= syn {:.2} >= fun {:.2}",
        report.items.len(),
        a.gen_num,
        a.syn_num,
        a.fun_num
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rtlseek"))
        .args(args)
        .env_remove("RTLSEEK_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(out.stdout)
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |p: PathBuf| p.to_str().unwrap().to_owned();
    let (response, vectors) = (path(fixture("reward_exact.txt")), path(fixture("and2.tv.json")));
    let (manifest, responses) = (path(fixture("manifest.json")), path(fixture("responses")));
    let mut runs = Vec::new();
    for i in 0..3 {
        // A fresh history per run so each invocation sees the same window.
        let history = dir.path().join(format!("history{i}.jsonl"));
        std::fs::copy(fixture("history.jsonl"), &history).map_err(|e| e.to_string())?;
        let report = dir.path().join(format!("report{i}.json"));
        let scored = run_cli(&[
            "score",
            &response,
            "--stage",
            "3",
            "--vectors",
            &vectors,
            "--history",
            &path(history),
        ])?;
        let table = run_cli(&[
            "eval",
            "--manifest",
            &manifest,
            "--responses",
            &responses,
            "--json",
            &path(report.clone()),
        ])?;
        let json = std::fs::read(&report).map_err(|e| e.to_string())?;
        runs.push((scored, table, json));
    }
    check(runs.windows(2).all(|w| w[0] == w[1]), || {
        "outputs differ between runs".into()
    })?;
    let total: usize = runs[0].0.len() + runs[0].1.len() + runs[0].2.len();
    Ok(format!("3 runs, {total} bytes identical"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("reward exactness", reward_exactness),
        ("satisfaction threshold boundary", delta_boundary),
        ("structural equivalence suite", equivalence_suite),
        ("simulator oracle", simulator_oracle),
        ("GRPO gradient check", gradient_check),
        ("GRPO dynamics", grpo_dynamics),
        ("pass@k oracle", pass_at_k_oracle),
        ("metrics consistency", metrics_consistency),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({ms} ms): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({ms} ms): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
