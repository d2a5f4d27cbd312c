//! First-order node solver with fixed output supplies.

use crate::error::{Error, Result};
use crate::flows::FlowArray;

use super::{select_events, Engine, Event, Iteration, Junction, OutputRecord, ITERATION_GUARD};

/// A junction with fixed supplies `R_j` (veh per step; `f64::INFINITY` for none).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeProblem {
    pub junction: Junction,
    pub supplies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSolution {
    pub flows: FlowArray,
    pub trace: Vec<Iteration>,
}

impl NodeProblem {
    pub fn validate(&self) -> Result<()> {
        self.junction.validate()?;
        if self.supplies.len() != self.junction.outputs() {
            return Err(Error::Dimension(format!(
                "expected {} supplies, got {}",
                self.junction.outputs(),
                self.supplies.len()
            )));
        }
        if let Some(r) = self.supplies.iter().find(|r| r.is_nan() || **r < 0.0) {
            return Err(Error::invalid(format!("supply must be nonnegative, got {r}")));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<NodeSolution> {
        solve(self)
    }
}

fn engine_at<'a>(
    problem: &'a NodeProblem,
    flows: &FlowArray,
    filled: &[bool],
    finished: &[bool],
    time: f64,
) -> Engine<'a> {
    let mut engine = Engine::new(&problem.junction);
    engine.restore(flows, filled, finished, time);
    engine
}

/// Rates `ḟ` of the mode given by the current flows and the sets `ν`, `μ`.
pub fn flow_rates(problem: &NodeProblem, flows: &FlowArray, filled: &[bool], finished: &[bool]) -> FlowArray {
    engine_at(problem, flows, filled, finished, 0.0).rates()
}

/// Length of the current iteration and the events that end it; `None`
/// once every rate is zero.
pub fn next_event_time(
    problem: &NodeProblem,
    flows: &FlowArray,
    rates: &FlowArray,
    filled: &[bool],
    finished: &[bool],
    t0: f64,
) -> Option<(f64, Vec<Event>)> {
    if rates.total() <= 0.0 {
        return None;
    }
    let engine = engine_at(problem, flows, filled, finished, t0);
    let mut candidates = Vec::new();
    fill_candidates(problem, &engine, rates, &mut candidates);
    engine.demand_candidates(rates, &mut candidates);
    select_events(&candidates, t0)
}

fn fill_candidates(problem: &NodeProblem, engine: &Engine, rates: &FlowArray, out: &mut Vec<(f64, Event)>) {
    for (j, r) in problem.supplies.iter().enumerate() {
        let rate = rates.output_total(j);
        if engine.filled[j] || rate <= 0.0 || r.is_infinite() {
            continue;
        }
        let left = (r - engine.flows.output_total(j)).max(0.0);
        out.push((left / rate, Event::OutputFilled(j)));
    }
}

pub fn solve(problem: &NodeProblem) -> Result<NodeSolution> {
    problem.validate()?;
    let junction = &problem.junction;
    let n = junction.outputs();
    let mut engine = Engine::new(junction);
    for j in 0..n {
        engine.filled[j] = problem.supplies[j] <= 0.0;
    }

    let mut trace = Vec::new();
    let mut candidates = Vec::new();
    loop {
        let k = trace.len();
        if k >= ITERATION_GUARD {
            return Err(Error::NonTermination {
                limit: ITERATION_GUARD,
                iteration: k,
                time: engine.time,
            });
        }
        let rates = engine.rates();
        engine.retire_idle_inputs(&rates);
        if rates.total() <= 0.0 {
            break;
        }

        candidates.clear();
        fill_candidates(problem, &engine, &rates, &mut candidates);
        engine.demand_candidates(&rates, &mut candidates);
        let Some((dt, events)) = select_events(&candidates, engine.time) else {
            break;
        };

        let start = engine.time;
        let was_filled = engine.filled.clone();
        let before: Vec<f64> = (0..n).map(|j| engine.flows.output_total(j)).collect();
        engine.advance(&rates, dt);
        for &event in &events {
            if let Event::OutputFilled(j) = event {
                engine.filled[j] = true;
            } else {
                engine.apply_demand_event(event);
            }
        }

        let outputs = (0..n)
            .map(|j| {
                let inflow: Vec<f64> = (0..junction.commodities())
                    .map(|c| rates.output_commodity(j, c) * dt)
                    .collect();
                let supply = (!was_filled[j]).then(|| (problem.supplies[j] - before[j]).max(0.0));
                OutputRecord {
                    supply,
                    rate: rates.output_total(j),
                    inflow,
                    middle: None,
                    densities: None,
                }
            })
            .collect();

        trace.push(Iteration {
            k,
            time: start,
            dt,
            rates,
            events,
            finished: engine.finished_list(),
            filled: engine.filled_list(),
            outputs,
        });
    }

    Ok(NodeSolution {
        flows: engine.flows,
        trace,
    })
}
