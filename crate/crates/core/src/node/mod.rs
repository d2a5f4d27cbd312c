//! Junction flow solvers executed as event-driven hybrid systems.
//!
//! Both solvers share the same continuous dynamics: every unfinished
//! movement `(i, j)` claims downstream space at its oriented priority
//! `p_{i,j}`, scaled down by the lane share blocked by queues of the same
//! input. Rates are constant between events, so the next event time is
//! found in closed form and the state jumps straight to it.

use std::fmt;

use crate::error::{Error, Result};
use crate::fd::MiddleState;
use crate::flows::FlowArray;
use crate::interval::{union_measure, RestrictionMap};

pub mod first_order;
pub mod second_order;

pub use first_order::{NodeProblem, NodeSolution};
pub use second_order::{Downstream, NodeProblem2, NodeSolution2};

/// Hard cap on solver iterations.
pub const ITERATION_GUARD: usize = 10_000;

/// Events closer than this (relative to `max(1, t)`) fire together.
pub const EVENT_TOLERANCE: f64 = 1e-12;

/// Tolerance on split-ratio sums.
pub const SPLIT_TOLERANCE: f64 = 1e-9;

/// The demand side of a node problem, shared by both orders.
#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    /// `S_i^c`, veh per step, indexed `[i][c]`.
    pub demands: Vec<Vec<f64>>,
    /// `β^c_{i,j}`, indexed `[i][j][c]`.
    pub splits: Vec<Vec<Vec<f64>>>,
    /// `p_i > 0`.
    pub priorities: Vec<f64>,
    /// `F_i`, veh per step; when absent the input's total demand is used.
    pub capacities: Option<Vec<f64>>,
    pub restrictions: RestrictionMap,
}

impl Junction {
    pub fn inputs(&self) -> usize {
        self.demands.len()
    }

    pub fn outputs(&self) -> usize {
        self.splits.first().map_or(0, |s| s.len())
    }

    pub fn commodities(&self) -> usize {
        self.demands.first().map_or(0, |d| d.len())
    }

    pub fn input_demand(&self, i: usize) -> f64 {
        self.demands[i].iter().sum()
    }

    /// `S^c_{i,j} = β^c_{i,j} S_i^c`.
    pub fn directed_demands(&self) -> FlowArray {
        let mut out = FlowArray::zeros(self.inputs(), self.outputs(), self.commodities());
        for i in 0..self.inputs() {
            for j in 0..self.outputs() {
                for c in 0..self.commodities() {
                    out[(i, j, c)] = self.splits[i][j][c] * self.demands[i][c];
                }
            }
        }
        out
    }

    /// Effective `F_i`.
    pub fn capacity(&self, i: usize) -> f64 {
        match &self.capacities {
            Some(caps) => caps[i],
            None => self.input_demand(i),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, c) = (self.inputs(), self.outputs(), self.commodities());
        if m == 0 || n == 0 || c == 0 {
            return Err(Error::Dimension(format!(
                "node needs at least one input, output and commodity (got {m}, {n}, {c})"
            )));
        }
        if self.demands.iter().any(|d| d.len() != c) {
            return Err(Error::Dimension("demand rows differ in commodity count".into()));
        }
        if self.splits.len() != m
            || self
                .splits
                .iter()
                .any(|row| row.len() != n || row.iter().any(|s| s.len() != c))
        {
            return Err(Error::Dimension(format!("split ratios must be {m} x {n} x {c}")));
        }
        if self.priorities.len() != m {
            return Err(Error::Dimension(format!("expected {m} priorities")));
        }
        if let Some(caps) = &self.capacities {
            if caps.len() != m {
                return Err(Error::Dimension(format!("expected {m} capacities")));
            }
        }
        self.restrictions.check_dimensions(m, n)?;

        for i in 0..m {
            let p = self.priorities[i];
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!(
                    "priority of input {i} must be positive, got {p}"
                )));
            }
            for (cc, s) in self.demands[i].iter().enumerate() {
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::invalid(format!(
                        "demand ({i}, {cc}) must be finite and nonnegative"
                    )));
                }
            }
            for cc in 0..c {
                let mut sum = 0.0;
                for j in 0..n {
                    let b = self.splits[i][j][cc];
                    if !(0.0..=1.0).contains(&b) {
                        return Err(Error::invalid(format!("split ({i}, {j}, {cc}) = {b} outside [0, 1]")));
                    }
                    sum += b;
                }
                if self.demands[i][cc] > 0.0 && (sum - 1.0).abs() > SPLIT_TOLERANCE {
                    return Err(Error::invalid(format!(
                        "split ratios of input {i}, commodity {cc} sum to {sum}"
                    )));
                }
            }
            if let Some(caps) = &self.capacities {
                let f = caps[i];
                let s = self.input_demand(i);
                if !(f.is_finite() && f >= 0.0) {
                    return Err(Error::invalid(format!(
                        "capacity of input {i} must be finite and nonnegative"
                    )));
                }
                if s > f * (1.0 + 1e-9) + 1e-300 {
                    return Err(Error::invalid(format!(
                        "demand {s} of input {i} exceeds its capacity {f}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Discrete transition that ends a solver iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Event {
    /// Output `j` used up its supply.
    OutputFilled(usize),
    /// Output `j` reached jam density.
    OutputJammed(usize),
    /// Movement `(i, j)` served all of its demand.
    MovementExhausted(usize, usize),
    /// Input `i` reached its time limit `T_i`.
    TimeLimit(usize),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::OutputFilled(j) => write!(f, "fill:{j}"),
            Event::OutputJammed(j) => write!(f, "jam:{j}"),
            Event::MovementExhausted(i, j) => write!(f, "exhaust:{i}>{j}"),
            Event::TimeLimit(i) => write!(f, "limit:{i}"),
        }
    }
}

impl std::str::FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognized event '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |x: &str| x.parse::<usize>().map_err(|_| bad());
        match kind {
            "fill" => Ok(Event::OutputFilled(num(rest)?)),
            "jam" => Ok(Event::OutputJammed(num(rest)?)),
            "limit" => Ok(Event::TimeLimit(num(rest)?)),
            "exhaust" => {
                let (i, j) = rest.split_once('>').ok_or_else(bad)?;
                Ok(Event::MovementExhausted(num(i)?, num(j)?))
            }
            _ => Err(bad()),
        }
    }
}

/// Per-output record of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    /// Supply still available when the iteration starts (`None` once filled).
    pub supply: Option<f64>,
    /// Total inflow rate during the iteration.
    pub rate: f64,
    /// Per-commodity inflow during the iteration.
    pub inflow: Vec<f64>,
    /// j-upstream middle state (second order, outputs with inflow only).
    pub middle: Option<MiddleState>,
    /// Per-commodity downstream densities after the iteration (second order).
    pub densities: Option<Vec<f64>>,
}

impl OutputRecord {
    pub fn inflow_total(&self) -> f64 {
        self.inflow.iter().sum()
    }
}

/// One iteration of the event loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Iteration {
    pub k: usize,
    /// Start time `t(k)`.
    pub time: f64,
    pub dt: f64,
    pub rates: FlowArray,
    pub events: Vec<Event>,
    /// `μ(k+1)`: inputs that stopped sending.
    pub finished: Vec<usize>,
    /// `ν(k+1)`: outputs that stopped receiving.
    pub filled: Vec<usize>,
    pub outputs: Vec<OutputRecord>,
}

/// Mutable state shared by both solvers.
#[derive(Debug, Clone)]
pub(crate) struct Engine<'a> {
    junction: &'a Junction,
    pub(crate) directed: FlowArray,
    oriented_priority: Vec<f64>,
    pub(crate) time_limit: Vec<f64>,
    pub(crate) flows: FlowArray,
    pub(crate) time: f64,
    pub(crate) finished: Vec<bool>,
    pub(crate) filled: Vec<bool>,
    exhausted: Vec<bool>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(junction: &'a Junction) -> Self {
        let (m, n, c) = (junction.inputs(), junction.outputs(), junction.commodities());
        let directed = junction.directed_demands();
        let mut oriented_priority = vec![0.0; m * n];
        let mut exhausted = vec![false; m * n];
        let mut time_limit = vec![0.0; m];
        let mut finished = vec![false; m];
        for i in 0..m {
            let total = junction.input_demand(i);
            time_limit[i] = junction.capacity(i) / junction.priorities[i];
            finished[i] = total <= 0.0;
            for j in 0..n {
                let sij = directed.movement_total(i, j);
                if total > 0.0 {
                    oriented_priority[i * n + j] = junction.priorities[i] * sij / total;
                }
                exhausted[i * n + j] = sij <= 0.0;
            }
        }
        Self {
            junction,
            directed,
            oriented_priority,
            time_limit,
            flows: FlowArray::zeros(m, n, c),
            time: 0.0,
            finished,
            filled: vec![false; n],
            exhausted,
        }
    }

    /// Resets the state to the given flows and sets; movements whose
    /// flows reached their demand count as exhausted.
    pub(crate) fn restore(&mut self, flows: &FlowArray, filled: &[bool], finished: &[bool], time: f64) {
        let n = self.n();
        self.flows = flows.clone();
        self.filled = filled.to_vec();
        self.finished = finished.to_vec();
        self.time = time;
        for i in 0..self.junction.inputs() {
            for j in 0..n {
                let done = self
                    .directed
                    .movement(i, j)
                    .iter()
                    .zip(flows.movement(i, j))
                    .all(|(s, f)| f >= s);
                self.exhausted[i * n + j] = done;
            }
        }
    }

    fn n(&self) -> usize {
        self.junction.outputs()
    }

    pub(crate) fn is_exhausted(&self, i: usize, j: usize) -> bool {
        self.exhausted[i * self.n() + j]
    }

    /// Unserved demand of movement `(i, j)`.
    fn remaining(&self, i: usize, j: usize) -> f64 {
        if self.is_exhausted(i, j) {
            return 0.0;
        }
        self.directed
            .movement(i, j)
            .iter()
            .zip(self.flows.movement(i, j))
            .map(|(s, f)| (s - f).max(0.0))
            .sum()
    }

    /// Flow rates of the current mode.
    pub(crate) fn rates(&self) -> FlowArray {
        let (m, n) = (self.junction.inputs(), self.n());
        let mut rates = FlowArray::zeros(m, n, self.junction.commodities());
        let mut blocking = Vec::with_capacity(n);
        for i in (0..m).filter(|&i| !self.finished[i]) {
            for j in (0..n).filter(|&j| !self.filled[j] && !self.is_exhausted(i, j)) {
                blocking.clear();
                for jq in (0..n).filter(|&jq| jq != j && self.filled[jq]) {
                    if self.is_exhausted(i, jq) {
                        continue;
                    }
                    if let Some(iv) = self.junction.restrictions.get(i, jq, j) {
                        blocking.push(iv);
                    }
                }
                let open = 1.0 - union_measure(&blocking);
                if open <= 0.0 {
                    continue;
                }
                let rate = self.oriented_priority[i * n + j] * open;
                let rem: Vec<f64> = self
                    .directed
                    .movement(i, j)
                    .iter()
                    .zip(self.flows.movement(i, j))
                    .map(|(s, f)| (s - f).max(0.0))
                    .collect();
                let total: f64 = rem.iter().sum();
                if total <= 0.0 {
                    continue;
                }
                for (slot, r) in rates.movement_mut(i, j).iter_mut().zip(&rem) {
                    *slot = rate * r / total;
                }
            }
        }
        rates
    }

    /// Inputs that have nothing left to send join `μ`.
    pub(crate) fn retire_idle_inputs(&mut self, rates: &FlowArray) {
        let n = self.n();
        for i in 0..self.junction.inputs() {
            if self.finished[i] {
                continue;
            }
            let all_done = (0..n).all(|j| self.is_exhausted(i, j));
            let idle = (0..n).all(|j| rates.movement_total(i, j) <= 0.0);
            if all_done || idle {
                self.finished[i] = true;
            }
        }
    }

    /// Movement-exhaustion and time-limit candidates `(dt, event)`.
    pub(crate) fn demand_candidates(&self, rates: &FlowArray, out: &mut Vec<(f64, Event)>) {
        let n = self.n();
        for i in 0..self.junction.inputs() {
            if self.finished[i] {
                continue;
            }
            for j in 0..n {
                let r = rates.movement_total(i, j);
                if r > 0.0 {
                    out.push((self.remaining(i, j) / r, Event::MovementExhausted(i, j)));
                }
            }
            out.push(((self.time_limit[i] - self.time).max(0.0), Event::TimeLimit(i)));
        }
    }

    /// Moves flows forward by `dt` at constant `rates`.
    pub(crate) fn advance(&mut self, rates: &FlowArray, dt: f64) {
        for (f, r) in self.flows.values_mut().iter_mut().zip(rates.values()) {
            *f += r * dt;
        }
        self.time += dt;
    }

    /// Applies a fired demand-side event; returns false for output events.
    pub(crate) fn apply_demand_event(&mut self, event: Event) -> bool {
        match event {
            Event::MovementExhausted(i, j) => {
                let n = self.n();
                self.exhausted[i * n + j] = true;
                let target = self.directed.movement(i, j).to_vec();
                self.flows.movement_mut(i, j).copy_from_slice(&target);
                true
            }
            Event::TimeLimit(i) => {
                self.finished[i] = true;
                true
            }
            _ => false,
        }
    }

    pub(crate) fn finished_list(&self) -> Vec<usize> {
        self.finished
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.then_some(i))
            .collect()
    }

    pub(crate) fn filled_list(&self) -> Vec<usize> {
        self.filled
            .iter()
            .enumerate()
            .filter_map(|(j, d)| d.then_some(j))
            .collect()
    }
}

/// Smallest candidate and every candidate that ties with it.
pub(crate) fn select_events(candidates: &[(f64, Event)], now: f64) -> Option<(f64, Vec<Event>)> {
    let dt = candidates
        .iter()
        .map(|c| c.0)
        .filter(|d| d.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !dt.is_finite() {
        return None;
    }
    let slack = EVENT_TOLERANCE * (now + dt).abs().max(1.0);
    let mut fired: Vec<Event> = candidates.iter().filter(|c| c.0 <= dt + slack).map(|c| c.1).collect();
    fired.sort();
    fired.dedup();
    Some((dt, fired))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_text_round_trip() {
        for e in [
            Event::OutputFilled(3),
            Event::OutputJammed(0),
            Event::MovementExhausted(1, 2),
            Event::TimeLimit(4),
        ] {
            assert_eq!(e.to_string().parse::<Event>().unwrap(), e);
        }
        assert!("bogus:1".parse::<Event>().is_err());
    }

    #[test]
    fn split_sum_is_validated() {
        let j = Junction {
            demands: vec![vec![10.0]],
            splits: vec![vec![vec![0.5], vec![0.4]]],
            priorities: vec![1.0],
            capacities: None,
            restrictions: RestrictionMap::new(),
        };
        assert!(j.validate().is_err());
    }

    #[test]
    fn priorities_must_be_positive() {
        let j = Junction {
            demands: vec![vec![10.0]],
            splits: vec![vec![vec![1.0]]],
            priorities: vec![0.0],
            capacities: None,
            restrictions: RestrictionMap::new(),
        };
        assert!(j.validate().is_err());
    }
}
