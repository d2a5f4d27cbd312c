//! Constraint-by-constraint verification of node solutions.
//!
//! The checker never calls the solvers. Given a problem and a candidate
//! flow array it evaluates nonnegativity, demand, supply, conservation,
//! commodity proportionality, partial FIFO, the supply constraint
//! interaction rule (SCIR) and an activity test, and reports the worst
//! violation of each family.
//!
//! # Partial FIFO
//!
//! Movement `(i, j)` is bounded by
//! `F_{i,j} (1 - A(⋃ η_{j',j} × [τ_{j'}, 1]))`, where the union runs over
//! the queue movements `j'` of input `i` (unserved demand into a saturated
//! output) and `τ_{j'}` is the queue's onset as a fraction of the input's
//! time window. Onsets are reconstructed from the flows themselves: each
//! movement of `i` is replayed at capacity `F_{i,j}`, slowed by the lanes
//! already covered by started queues, until it reaches its final flow. For
//! a queue that was never obstructed `τ_{j'} = f_{i,j'}/F_{i,j'}`, which
//! is the textbook constraint; that literal form is reported as an
//! advisory because it ignores obstruction of the blocking queue itself.
//!
//! # SCIR
//!
//! `W_i` holds the outputs with demand from `i` that are saturated and on
//! which no other input received more priority-normalized flow.

use std::fmt;

use crate::error::{Error, Result};
use crate::fd::{middle_state_for_speed, supply_from_middle};
use crate::flows::FlowArray;
use crate::interval::{rectangle_union_area, union_measure, RestrictionInterval};
use crate::node::{Junction, NodeProblem, NodeProblem2, NodeSolution2};

/// Tolerances used by the checker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute flow tolerance, applied after normalizing by `max(S, R, 1)`.
    pub absolute: f64,
    /// Tolerance on commodity shares within a movement.
    pub proportionality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            absolute: 1e-9,
            proportionality: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Nonnegativity,
    Demand,
    Supply,
    Conservation,
    Proportionality,
    Fifo,
    Scir,
    Activity,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Nonnegativity,
        Family::Demand,
        Family::Supply,
        Family::Conservation,
        Family::Proportionality,
        Family::Fifo,
        Family::Scir,
        Family::Activity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Nonnegativity => "nonnegativity",
            Family::Demand => "demand",
            Family::Supply => "supply",
            Family::Conservation => "conservation",
            Family::Proportionality => "proportionality",
            Family::Fifo => "fifo",
            Family::Scir => "scir",
            Family::Activity => "activity",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one constraint family, or of an advisory check.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub name: &'static str,
    pub checked: usize,
    /// Worst violation, normalized.
    pub worst: f64,
    /// Where the worst violation occurred.
    pub location: Option<String>,
    pub pass: bool,
}

impl FamilyReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            worst: 0.0,
            location: None,
            pass: true,
        }
    }

    fn record(&mut self, violation: f64, location: impl FnOnce() -> String) {
        self.checked += 1;
        let v = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation.max(0.0)
        };
        if v > self.worst {
            self.worst = v;
            self.location = Some(location());
        }
    }

    fn fail(&mut self, location: impl FnOnce() -> String) {
        self.record(f64::INFINITY, location);
    }

    fn finish(mut self, tol: f64) -> Self {
        self.pass = self.worst <= tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub families: Vec<(Family, FamilyReport)>,
    /// Informational checks that do not affect [`ConstraintReport::passed`].
    pub advisories: Vec<FamilyReport>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(|(_, r)| r.pass)
    }

    pub fn family(&self, family: Family) -> &FamilyReport {
        &self
            .families
            .iter()
            .find(|(f, _)| *f == family)
            .expect("every family is reported")
            .1
    }

    pub fn failures(&self) -> Vec<Family> {
        self.families.iter().filter(|(_, r)| !r.pass).map(|(f, _)| *f).collect()
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |f: &mut fmt::Formatter<'_>, tag: &str, r: &FamilyReport| {
            write!(
                f,
                "{tag} {:<18} {} checked={} worst={:.3e}",
                r.name,
                if r.pass { "pass" } else { "FAIL" },
                r.checked,
                r.worst
            )?;
            if let (false, Some(loc)) = (r.pass, &r.location) {
                write!(f, " at {loc}")?;
            }
            writeln!(f)
        };
        for (_, r) in &self.families {
            line(f, "constraint", r)?;
        }
        for r in &self.advisories {
            line(f, "advisory  ", r)?;
        }
        writeln!(f, "overall {}", if self.passed() { "pass" } else { "FAIL" })
    }
}

/// Checks a first-order solution. A solver trace, when given, is used for
/// the conservation family.
pub fn check_first_order(
    problem: &NodeProblem,
    flows: &FlowArray,
    trace: Option<&[crate::node::Iteration]>,
    tol: &Tolerances,
) -> Result<ConstraintReport> {
    let junction = &problem.junction;
    check_shape(junction, flows)?;
    if problem.supplies.len() != junction.outputs() {
        return Err(Error::Dimension("supply count".into()));
    }
    let scale = scale(junction, &problem.supplies);
    let eps = tol.absolute * scale;
    let n = junction.outputs();

    let mut supply = FamilyReport::new("supply");
    let mut saturated = vec![false; n];
    for (j, r) in problem.supplies.iter().enumerate() {
        let total = flows.output_total(j);
        supply.record((total - r) / scale, || format!("output {j}"));
        saturated[j] = r.is_finite() && total >= r - eps;
    }

    let mut conservation = FamilyReport::new("conservation");
    conservation_common(flows, scale, &mut conservation);
    if let Some(trace) = trace {
        trace_conservation(flows, trace, scale, &mut conservation);
    }

    let view = View {
        junction,
        flows,
        saturated,
        eps,
    };
    let mut literal = FamilyReport::new("fifo-literal");
    let (fifo, activity) = view.fifo_and_activity(true, scale, &mut literal);
    let scir = view.scir(&problem.supplies, scale);

    Ok(assemble(
        [
            view.nonnegativity(scale),
            view.demand(scale),
            supply,
            conservation,
            view.proportionality(),
            fifo,
            scir,
            activity,
        ],
        vec![literal],
        tol,
    ))
}

/// Checks a second-order solution against its own trace.
pub fn check_second_order(
    problem: &NodeProblem2,
    solution: &NodeSolution2,
    tol: &Tolerances,
) -> Result<ConstraintReport> {
    let junction = &problem.junction;
    let flows = &solution.flows;
    check_shape(junction, flows)?;
    let (n, nc) = (junction.outputs(), junction.commodities());
    if problem.outputs.len() != n || solution.densities.len() != n {
        return Err(Error::Dimension("downstream link count".into()));
    }
    if solution.trace.is_empty() && flows.total() > 0.0 {
        return Err(Error::TraceRequired);
    }
    let commodities = &problem.commodities;

    let exit_speeds = problem
        .outputs
        .iter()
        .map(|d| d.exit_speed(commodities))
        .collect::<Result<Vec<_>>>()?;

    // full supply of the initial mixture bounds the flow scale
    let mut scale_supplies = Vec::with_capacity(n);
    for (j, d) in problem.outputs.iter().enumerate() {
        let w = commodities.max_property();
        let v = exit_speeds[j].unwrap_or_else(|| d.fd.free_speed(w));
        let m = middle_state_for_speed(w, v, &d.fd)?;
        scale_supplies.push(supply_from_middle(&m, &d.fd) * problem.step);
    }
    let scale = scale(junction, &scale_supplies);
    let eps = tol.absolute * scale;

    let mut supply = FamilyReport::new("supply");
    let mut conservation = FamilyReport::new("conservation");
    let mut budget = vec![1.0f64; n];
    let mut exhausted_budget = vec![false; n];
    for it in &solution.trace {
        if it.outputs.len() != n {
            supply.fail(|| format!("iteration {} has {} output records", it.k, it.outputs.len()));
            continue;
        }
        for (j, rec) in it.outputs.iter().enumerate() {
            let inflow = rec.inflow_total();
            if inflow <= 0.0 {
                continue;
            }
            if rec.inflow.len() != nc {
                supply.fail(|| format!("iteration {} output {j}: commodity count", it.k));
                continue;
            }
            let fd = &problem.outputs[j].fd;
            let w = commodities.weighted_property(&rec.inflow).expect("positive inflow");
            let v = exit_speeds[j].unwrap_or_else(|| fd.free_speed(w));
            let full = supply_from_middle(&middle_state_for_speed(w, v, fd)?, fd) * problem.step;
            let remaining = budget[j] * full;
            let at = || format!("iteration {} output {j}", it.k);
            match rec.supply {
                Some(r) => supply.record((r - remaining).abs() / scale, at),
                None => supply.fail(at),
            }
            supply.record((inflow - remaining) / scale, at);
            if full > 0.0 {
                budget[j] = (budget[j] - inflow / full).max(0.0);
            }
            if it.events.contains(&crate::node::Event::OutputFilled(j)) || budget[j] * full <= eps {
                exhausted_budget[j] = true;
            }
        }
    }

    conservation_common(flows, scale, &mut conservation);
    trace_conservation(flows, &solution.trace, scale, &mut conservation);
    let mut saturated = exhausted_budget;
    for (j, d) in problem.outputs.iter().enumerate() {
        let rho_max = d.fd.jam_density();
        let mut total = 0.0;
        for c in 0..nc {
            let expected = d.state.densities[c] + flows.output_commodity(j, c) / d.state.length;
            let got = solution.densities[j].get(c).copied().unwrap_or(f64::NAN);
            total += got;
            conservation.record((got - expected).abs() * d.state.length / scale, || {
                format!("density of output {j}, commodity {c}")
            });
        }
        supply.record((total - rho_max) * d.state.length / scale, || {
            format!("jam density of output {j}")
        });
        saturated[j] |= total >= rho_max * (1.0 - crate::node::second_order::JAM_TOLERANCE);
    }

    let mut cumulative = FamilyReport::new("supply-cumulative");
    for (j, d) in problem.outputs.iter().enumerate() {
        let inflow: Vec<f64> = (0..nc).map(|c| flows.output_commodity(j, c)).collect();
        let Some(w) = commodities.weighted_property(&inflow) else {
            continue;
        };
        let v = exit_speeds[j].unwrap_or_else(|| d.fd.free_speed(w));
        let r = supply_from_middle(&middle_state_for_speed(w, v, &d.fd)?, &d.fd) * problem.step;
        cumulative.record((flows.output_total(j) - r) / scale, || format!("output {j}"));
    }

    let view = View {
        junction,
        flows,
        saturated,
        eps,
    };
    let realized: Vec<f64> = (0..n).map(|j| flows.output_total(j)).collect();
    let mut literal = FamilyReport::new("fifo-literal");
    let (fifo, activity) = view.fifo_and_activity(false, scale, &mut literal);
    let scir = view.scir(&realized, scale);

    Ok(assemble(
        [
            view.nonnegativity(scale),
            view.demand(scale),
            supply,
            conservation,
            view.proportionality(),
            fifo,
            scir,
            activity,
        ],
        vec![literal, cumulative],
        tol,
    ))
}

fn assemble(reports: [FamilyReport; 8], advisories: Vec<FamilyReport>, tol: &Tolerances) -> ConstraintReport {
    let families = Family::ALL
        .into_iter()
        .zip(reports)
        .map(|(f, r)| {
            let t = if f == Family::Proportionality {
                tol.proportionality
            } else {
                tol.absolute
            };
            (f, r.finish(t))
        })
        .collect();
    let advisories = advisories.into_iter().map(|r| r.finish(tol.absolute)).collect();
    ConstraintReport { families, advisories }
}

fn check_shape(junction: &Junction, flows: &FlowArray) -> Result<()> {
    junction.validate()?;
    let shape = (junction.inputs(), junction.outputs(), junction.commodities());
    if flows.shape() != shape {
        return Err(Error::Dimension(format!(
            "flows have shape {:?}, problem has {:?}",
            flows.shape(),
            shape
        )));
    }
    Ok(())
}

fn scale(junction: &Junction, supplies: &[f64]) -> f64 {
    let s = junction.demands.iter().flatten().copied().fold(0.0, f64::max);
    let r = supplies.iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max);
    s.max(r).max(1.0)
}

fn conservation_common(flows: &FlowArray, scale: f64, report: &mut FamilyReport) {
    let (m, n, nc) = flows.shape();
    for c in 0..nc {
        let out: f64 = (0..m).map(|i| flows.input_commodity(i, c)).sum();
        let into: f64 = (0..n).map(|j| flows.output_commodity(j, c)).sum();
        report.record((out - into).abs() / scale, || format!("commodity {c}"));
    }
    if let Some((i, j, c, _)) = flows.iter().find(|x| !x.3.is_finite()) {
        report.fail(|| format!("non-finite flow ({i}, {j}, {c})"));
    }
}

fn trace_conservation(flows: &FlowArray, trace: &[crate::node::Iteration], scale: f64, report: &mut FamilyReport) {
    let (m, n, nc) = flows.shape();
    let mut moved = FlowArray::zeros(m, n, nc);
    let mut received = vec![vec![0.0; nc]; n];
    for it in trace {
        if it.rates.shape() != flows.shape() {
            report.fail(|| format!("iteration {} rate shape", it.k));
            return;
        }
        for (slot, r) in moved.values_mut().iter_mut().zip(it.rates.values()) {
            *slot += r * it.dt;
        }
        for (j, rec) in it.outputs.iter().enumerate().take(n) {
            for (c, q) in rec.inflow.iter().enumerate().take(nc) {
                received[j][c] += q;
            }
        }
    }
    for (i, j, c, f) in flows.iter() {
        report.record((moved[(i, j, c)] - f).abs() / scale, || {
            format!("trace total of ({i}, {j}, {c})")
        });
    }
    for (j, got) in received.iter().enumerate() {
        for (c, q) in got.iter().enumerate() {
            report.record((q - flows.output_commodity(j, c)).abs() / scale, || {
                format!("trace inflow of output {j}, commodity {c}")
            });
        }
    }
}

/// Queue onset of one movement in the replay.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Onset {
    /// Reached its final flow at this fraction of the time window.
    Reached(f64),
    /// Fully blocked at this fraction before reaching its final flow.
    Blocked(f64),
    /// Still moving when the window closed.
    Unreached,
}

struct View<'a> {
    junction: &'a Junction,
    flows: &'a FlowArray,
    saturated: Vec<bool>,
    eps: f64,
}

impl View<'_> {
    fn directed(&self, i: usize, j: usize) -> f64 {
        (0..self.junction.commodities())
            .map(|c| self.junction.splits[i][j][c] * self.junction.demands[i][c])
            .sum()
    }

    fn movement_capacity(&self, i: usize, j: usize) -> f64 {
        let total = self.junction.input_demand(i);
        if total <= 0.0 {
            return 0.0;
        }
        self.junction.capacity(i) * self.directed(i, j) / total
    }

    fn oriented_priority(&self, i: usize, j: usize) -> f64 {
        let total = self.junction.input_demand(i);
        if total <= 0.0 {
            return 0.0;
        }
        self.junction.priorities[i] * self.directed(i, j) / total
    }

    fn is_queue(&self, i: usize, j: usize) -> bool {
        let s = self.directed(i, j);
        s > 0.0 && self.saturated[j] && self.flows.movement_total(i, j) < s - self.eps
    }

    fn nonnegativity(&self, scale: f64) -> FamilyReport {
        let mut r = FamilyReport::new("nonnegativity");
        for (i, j, c, f) in self.flows.iter() {
            r.record(-f / scale, || format!("({i}, {j}, {c})"));
        }
        r
    }

    fn demand(&self, scale: f64) -> FamilyReport {
        let mut r = FamilyReport::new("demand");
        for (i, j, c, f) in self.flows.iter() {
            let s = self.junction.splits[i][j][c] * self.junction.demands[i][c];
            r.record((f - s) / scale, || format!("({i}, {j}, {c})"));
        }
        for i in 0..self.junction.inputs() {
            for c in 0..self.junction.commodities() {
                let sent = self.flows.input_commodity(i, c);
                r.record((sent - self.junction.demands[i][c]) / scale, || {
                    format!("input {i}, commodity {c}")
                });
            }
        }
        r
    }

    fn proportionality(&self) -> FamilyReport {
        let mut r = FamilyReport::new("proportionality");
        let nc = self.junction.commodities();
        for i in 0..self.junction.inputs() {
            for j in 0..self.junction.outputs() {
                let total = self.flows.movement_total(i, j);
                let s = self.directed(i, j);
                if total <= self.eps || s <= 0.0 {
                    continue;
                }
                for c in 0..nc {
                    let want = self.junction.splits[i][j][c] * self.junction.demands[i][c] / s;
                    let got = self.flows[(i, j, c)] / total;
                    r.record((got - want).abs(), || format!("({i}, {j}, {c})"));
                }
            }
        }
        r
    }

    /// Replays the movements of input `i` to recover queue onsets.
    fn onsets(&self, i: usize) -> Vec<Onset> {
        let n = self.junction.outputs();
        let caps: Vec<f64> = (0..n).map(|j| self.movement_capacity(i, j)).collect();
        let targets: Vec<f64> = (0..n).map(|j| self.flows.movement_total(i, j).max(0.0)).collect();
        let queue: Vec<bool> = (0..n).map(|j| self.is_queue(i, j)).collect();

        let mut onset = vec![Onset::Unreached; n];
        let mut moved = vec![0.0; n];
        let mut running: Vec<bool> = (0..n).map(|j| caps[j] > 0.0).collect();
        for j in 0..n {
            if targets[j] <= self.eps {
                onset[j] = Onset::Reached(0.0);
                running[j] = false;
            }
        }
        let mut s = 0.0;
        let mut blockers = Vec::with_capacity(n);
        for _ in 0..=2 * n {
            let open: Vec<f64> = (0..n)
                .map(|j| {
                    blockers.clear();
                    for jq in (0..n).filter(|&jq| jq != j && queue[jq]) {
                        if matches!(onset[jq], Onset::Reached(t) if t <= s) {
                            if let Some(iv) = self.junction.restrictions.get(i, jq, j) {
                                blockers.push(iv);
                            }
                        }
                    }
                    1.0 - union_measure(&blockers)
                })
                .collect();
            for j in 0..n {
                if running[j] && open[j] <= 0.0 {
                    running[j] = false;
                    onset[j] = Onset::Blocked(s);
                }
            }
            let step = (0..n)
                .filter(|&j| running[j])
                .map(|j| (targets[j] - moved[j]).max(0.0) / (caps[j] * open[j]))
                .fold(f64::INFINITY, f64::min);
            if !step.is_finite() {
                break;
            }
            let step = step.min(1.0 - s);
            for j in (0..n).filter(|&j| running[j]) {
                moved[j] += caps[j] * open[j] * step;
            }
            s += step;
            for j in 0..n {
                if running[j] && targets[j] - moved[j] <= self.eps {
                    running[j] = false;
                    onset[j] = Onset::Reached(s);
                }
            }
            if s >= 1.0 {
                break;
            }
        }
        onset
    }

    /// FIFO bound of every movement of input `i`: (loose, tight) areas.
    fn blocked_areas(&self, i: usize, j: usize, onsets: &[Onset]) -> (f64, f64) {
        let n = self.junction.outputs();
        let mut certain = Vec::new();
        let mut possible = Vec::new();
        for jq in (0..n).filter(|&jq| jq != j && self.is_queue(i, jq)) {
            let Some(iv) = self.junction.restrictions.get(i, jq, j) else {
                continue;
            };
            match onsets[jq] {
                Onset::Reached(t) => {
                    certain.push((iv, t));
                    possible.push((iv, t));
                }
                Onset::Blocked(t) => possible.push((iv, t)),
                Onset::Unreached => {}
            }
        }
        (rectangle_union_area(&certain), rectangle_union_area(&possible))
    }

    fn fifo_and_activity(
        &self,
        per_commodity: bool,
        scale: f64,
        literal: &mut FamilyReport,
    ) -> (FamilyReport, FamilyReport) {
        let (m, n, nc) = self.flows.shape();
        let mut fifo = FamilyReport::new("fifo");
        let mut activity = FamilyReport::new("activity");
        for i in 0..m {
            let onsets = self.onsets(i);
            for j in 0..n {
                let cap = self.movement_capacity(i, j);
                let s = self.directed(i, j);
                let f = self.flows.movement_total(i, j);
                let (loose, tight) = self.blocked_areas(i, j, &onsets);
                let upper = cap * (1.0 - loose);
                let lower = cap * (1.0 - tight);
                if per_commodity && s > 0.0 {
                    for c in 0..nc {
                        let share = self.junction.splits[i][j][c] * self.junction.demands[i][c] / s;
                        fifo.record((self.flows[(i, j, c)] - upper * share) / scale, || {
                            format!("({i}, {j}, {c})")
                        });
                    }
                } else {
                    fifo.record((f - upper) / scale, || format!("({i}, {j})"));
                }

                let rects: Vec<(RestrictionInterval, f64)> = (0..n)
                    .filter(|&jq| jq != j)
                    .filter_map(|jq| {
                        let iv = self.junction.restrictions.get(i, jq, j)?;
                        let cq = self.movement_capacity(i, jq);
                        (cq > 0.0).then(|| (iv, self.flows.movement_total(i, jq) / cq))
                    })
                    .collect();
                literal.record((f - cap * (1.0 - rectangle_union_area(&rects))) / scale, || {
                    format!("({i}, {j})")
                });

                if s <= 0.0 || f >= s - self.eps {
                    continue;
                }
                let restricted = self.saturated[j] || (f >= lower - self.eps && f <= upper + self.eps);
                activity.record(
                    if restricted {
                        0.0
                    } else {
                        (s.min(upper) - f).max(0.0) / scale
                    },
                    || format!("({i}, {j}) is not restricted by supply, FIFO or capacity"),
                );
            }
        }
        (fifo, activity)
    }

    fn scir(&self, supplies: &[f64], scale: f64) -> FamilyReport {
        let (m, n, _) = self.flows.shape();
        let mut r = FamilyReport::new("scir");
        let ratio = |i: usize, j: usize| {
            let p = self.oriented_priority(i, j);
            if p > 0.0 {
                self.flows.movement_total(i, j) / p
            } else {
                0.0
            }
        };
        for i in 0..m {
            let w: Vec<usize> = (0..n)
                .filter(|&j| self.directed(i, j) > 0.0 && self.saturated[j])
                .filter(|&j| {
                    let mine = ratio(i, j);
                    (0..m)
                        .filter(|&k| k != i && self.oriented_priority(k, j) > 0.0)
                        .all(|k| self.flows.movement_total(k, j) <= self.oriented_priority(k, j) * mine + self.eps)
                })
                .collect();
            let sent = self.flows.input_total(i);
            let unserved = self.junction.input_demand(i) - sent;
            if unserved > self.eps {
                r.record(if w.is_empty() { unserved / scale } else { 0.0 }, || {
                    format!("input {i} is short of its demand with no restricting output")
                });
            }
            for &j in &w {
                let total_p: f64 = (0..m).map(|k| self.oriented_priority(k, j)).sum();
                let share = self.oriented_priority(i, j) / total_p * supplies[j];
                r.record((share - self.flows.movement_total(i, j)) / scale, || {
                    format!("({i}, {j}) below its priority share")
                });
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::RestrictionMap;

    fn single(demands: Vec<f64>, splits: Vec<Vec<f64>>, supplies: Vec<f64>, fifo: bool) -> NodeProblem {
        let (m, n) = (demands.len(), supplies.len());
        NodeProblem {
            junction: Junction {
                demands: demands.into_iter().map(|s| vec![s]).collect(),
                splits: splits
                    .into_iter()
                    .map(|row| row.into_iter().map(|b| vec![b]).collect())
                    .collect(),
                priorities: vec![1.0; m],
                capacities: None,
                restrictions: if fifo {
                    RestrictionMap::full_fifo(m, n)
                } else {
                    RestrictionMap::new()
                },
            },
            supplies,
        }
    }

    fn flows(values: &[&[f64]]) -> FlowArray {
        let mut f = FlowArray::zeros(values.len(), values[0].len(), 1);
        for (i, row) in values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                f[(i, j, 0)] = *v;
            }
        }
        f
    }

    fn check(p: &NodeProblem, f: &FlowArray) -> ConstraintReport {
        check_first_order(p, f, None, &Tolerances::default()).unwrap()
    }

    #[test]
    fn exact_one_to_one_passes() {
        let p = single(vec![10.0], vec![vec![1.0]], vec![4.0], false);
        assert!(check(&p, &flows(&[&[4.0]])).passed());
    }

    #[test]
    fn idle_flow_fails_activity() {
        let p = single(vec![10.0], vec![vec![1.0]], vec![4.0], false);
        let r = check(&p, &flows(&[&[0.0]]));
        assert!(r.failures().contains(&Family::Activity));
        assert!(r.family(Family::Supply).pass && r.family(Family::Demand).pass);
    }

    #[test]
    fn merge_leftover_satisfies_scir() {
        let p = single(vec![3.0, 10.0], vec![vec![1.0], vec![1.0]], vec![12.0], false);
        let r = check(&p, &flows(&[&[3.0], &[9.0]]));
        assert!(r.passed(), "{r}");
        let bad = check(
            &single(vec![10.0, 10.0], vec![vec![1.0], vec![1.0]], vec![12.0], false),
            &flows(&[&[8.0], &[4.0]]),
        );
        assert_eq!(bad.failures(), vec![Family::Scir]);
    }

    #[test]
    fn fifo_diverge() {
        let p = single(vec![10.0], vec![vec![0.5, 0.5]], vec![2.0, 10.0], true);
        assert!(check(&p, &flows(&[&[2.0, 2.0]])).passed());
        let r = check(&p, &flows(&[&[2.0, 3.0]]));
        assert!(r.failures().contains(&Family::Fifo));
    }

    #[test]
    fn replay_handles_obstructed_queue() {
        // (0,0) queues at 0.2 and covers half of (0,1)'s lanes; (0,1)
        // queues later still, and (0,2) sees both
        let mut p = single(vec![30.0], vec![vec![1.0 / 3.0; 3]], vec![2.0, 4.0, 100.0], false);
        let r = &mut p.junction.restrictions;
        r.insert(0, 0, 1, RestrictionInterval::new(0.0, 0.5).unwrap()).unwrap();
        r.insert(0, 0, 2, RestrictionInterval::new(0.0, 0.5).unwrap()).unwrap();
        r.insert(0, 1, 2, RestrictionInterval::new(0.5, 1.0).unwrap()).unwrap();
        let sol = crate::node::first_order::solve(&p).unwrap();
        let rep = check_first_order(&p, &sol.flows, Some(&sol.trace), &Tolerances::default()).unwrap();
        assert!(rep.passed(), "{rep}");
    }
}
