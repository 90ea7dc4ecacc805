// SPDX-License-Identifier: Apache-2.0

//! Two-state cycle engine: combinational settling to a fixpoint, edge
//! detection for clocked processes and two-phase non-blocking commits.

use std::collections::BTreeMap;

use crate::verilog::ast::{Direction, Edge};
use crate::verilog::consteval::mask;

use super::elaborate::SimDesign;
use super::ir::{SigId, Write};
use super::vectors::VectorSuite;
use super::{Failure, SimError, SimOutcome, TraceStep};

/// Mutable state for one run over an elaborated design.
#[derive(Debug, Clone)]
pub struct Simulator<'d> {
    design: &'d SimDesign,
    values: Vec<u128>,
    /// Last observed LSB of each edge-event signal.
    last: Vec<u128>,
    cap: usize,
}

impl<'d> Simulator<'d> {
    pub fn new(design: &'d SimDesign) -> Self {
        let n = design.signals.len();
        Simulator {
            design,
            values: vec![0; n],
            last: vec![0; n],
            cap: n + 1,
        }
    }

    fn sig(&self, name: &str) -> Result<SigId, SimError> {
        self.design
            .signals
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| SimError::Bind(format!("no signal named `{name}`")))
    }

    /// Drives an input port without propagating.
    pub fn set(&mut self, name: &str, value: u128) -> Result<(), SimError> {
        let port = self
            .design
            .port(name)
            .filter(|p| p.direction == Direction::Input)
            .ok_or_else(|| SimError::Bind(format!("`{name}` is not an input port of `{}`", self.design.top)))?;
        let w = self.design.widths[port.sig];
        if value & !mask(w) != 0 {
            return Err(SimError::Range {
                signal: name.to_string(),
                value,
                width: w,
            });
        }
        self.values[port.sig] = value;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<u128, SimError> {
        Ok(self.values[self.sig(name)?])
    }

    pub fn snapshot(&self) -> BTreeMap<String, u128> {
        self.design
            .signals
            .iter()
            .zip(&self.values)
            .map(|(s, v)| (s.name.clone(), *v))
            .collect()
    }

    fn settle(&mut self) -> Result<(), SimError> {
        let widths = &self.design.widths;
        let mut nba = Vec::new();
        for _ in 0..self.cap.max(1) {
            let before = self.values.clone();
            for p in &self.design.comb {
                p.exec(&mut self.values, widths, &mut nba);
                nba.drain(..).for_each(|w: Write| w.apply(&mut self.values));
            }
            if before == self.values {
                return Ok(());
            }
        }
        Err(SimError::SettleOverflow(self.cap))
    }

    /// Settles, then fires clocked processes whose events occurred until
    /// no further edges appear.
    pub fn propagate(&mut self) -> Result<(), SimError> {
        for _ in 0..self.cap.max(1) {
            self.settle()?;
            let mut fired = Vec::new();
            for (i, p) in self.design.clocked.iter().enumerate() {
                let hit = p.events.iter().any(|&(edge, s)| {
                    let (old, new) = (self.last[s] & 1, self.values[s] & 1);
                    match edge {
                        Edge::Posedge => old == 0 && new == 1,
                        Edge::Negedge => old == 1 && new == 0,
                    }
                });
                if hit {
                    fired.push(i);
                }
            }
            for p in &self.design.clocked {
                for &(_, s) in &p.events {
                    self.last[s] = self.values[s];
                }
            }
            if fired.is_empty() {
                return Ok(());
            }
            let mut nba = Vec::new();
            for i in fired {
                self.design.clocked[i]
                    .body
                    .exec(&mut self.values, &self.design.widths, &mut nba);
            }
            nba.iter().for_each(|w| w.apply(&mut self.values));
        }
        Err(SimError::SettleOverflow(self.cap))
    }
}

fn bind(design: &SimDesign, suite: &VectorSuite) -> Result<(), SimError> {
    let input = |name: &str| {
        design
            .port(name)
            .filter(|p| p.direction == Direction::Input)
            .map(|p| design.widths[p.sig])
            .ok_or_else(|| SimError::Bind(format!("`{name}` is not an input port of `{}`", design.top)))
    };
    let output = |name: &str| {
        design
            .port(name)
            .filter(|p| p.direction == Direction::Output)
            .map(|p| design.widths[p.sig])
            .ok_or_else(|| SimError::Bind(format!("`{name}` is not an output port of `{}`", design.top)))
    };
    let fits = |name: &str, value: u128, width: u32| {
        if value & !mask(width) != 0 {
            Err(SimError::Range {
                signal: name.to_string(),
                value,
                width,
            })
        } else {
            Ok(())
        }
    };
    if let Some(c) = &suite.clock {
        input(c)?;
    }
    if let Some(r) = &suite.reset {
        input(&r.signal)?;
    }
    for step in &suite.steps {
        for (k, v) in &step.inputs {
            fits(k, *v, input(k)?)?;
        }
        for (k, v) in &step.expected {
            fits(k, *v, output(k)?)?;
        }
    }
    Ok(())
}

/// Runs `suite` against a fresh copy of the design state.
pub fn run(design: &SimDesign, suite: &VectorSuite, trace: bool) -> SimOutcome {
    let mut steps = trace.then(Vec::new);
    match drive(design, suite, steps.as_mut()) {
        Ok(None) => SimOutcome::pass(steps),
        Ok(Some(f)) => SimOutcome::fail(f, steps),
        Err(e) => {
            let mut o = SimOutcome::error(e.to_string());
            o.trace = steps;
            o
        }
    }
}

fn drive(
    design: &SimDesign,
    suite: &VectorSuite,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<Option<Failure>, SimError> {
    bind(design, suite)?;
    let mut sim = Simulator::new(design);
    sim.propagate()?;
    let clock = suite.clock.as_deref();
    let pulse = |sim: &mut Simulator<'_>, clk: &str| -> Result<(), SimError> {
        sim.set(clk, 1)?;
        sim.propagate()?;
        sim.set(clk, 0)?;
        sim.propagate()
    };
    if let Some(r) = &suite.reset {
        sim.set(&r.signal, r.active as u128)?;
        sim.propagate()?;
        for _ in 0..r.cycles {
            if let Some(clk) = clock {
                pulse(&mut sim, clk)?;
            }
        }
        sim.set(&r.signal, (r.active ^ 1) as u128)?;
        sim.propagate()?;
    }
    for (index, step) in suite.steps.iter().enumerate() {
        for (k, v) in &step.inputs {
            sim.set(k, *v)?;
        }
        sim.propagate()?;
        let edge = clock.filter(|_| !step.settle_only);
        if let Some(clk) = edge {
            sim.set(clk, 1)?;
            sim.propagate()?;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceStep {
                step: index,
                values: sim.snapshot(),
            });
        }
        for (k, expected) in &step.expected {
            let actual = sim.get(k)?;
            if actual != *expected {
                return Ok(Some(Failure {
                    step: index,
                    signal: k.clone(),
                    expected: *expected,
                    actual,
                }));
            }
        }
        if let Some(clk) = edge {
            sim.set(clk, 0)?;
            sim.propagate()?;
        }
    }
    Ok(None)
}
