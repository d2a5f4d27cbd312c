//! Second-order node solver: output supplies follow the mixture of
//! vehicles entering each output link.
//!
//! Each output keeps a remaining-supply fraction `φ_j`, starting at 1. At
//! every mode switch the full supply `R_j^full` is recomputed from the
//! j-upstream middle state of the current inflow mixture, and the supply
//! left for the coming interval is `φ_j R_j^full`. Inflow during an
//! interval consumes `inflow / R_j^full` of the fraction. An output also
//! closes if its density reaches jam.

use crate::error::{Error, Result};
use crate::fd::{
    downstream_speed, middle_state_for_speed, supply_from_middle, Commodities, FundamentalDiagram, LinkState,
    MiddleState,
};
use crate::flows::FlowArray;

use super::{select_events, Engine, Event, Iteration, Junction, OutputRecord, ITERATION_GUARD};

/// Relative distance to `ρ_max` at which an output counts as jammed.
pub const JAM_TOLERANCE: f64 = 1e-9;

/// An output link as seen from the node.
#[derive(Debug, Clone, PartialEq)]
pub struct Downstream {
    pub state: LinkState,
    pub fd: FundamentalDiagram,
}

impl Downstream {
    /// Exit speed `v_j` of the queued vehicles; `None` for an empty link.
    pub fn exit_speed(&self, commodities: &Commodities) -> Result<Option<f64>> {
        if self.state.total_density() <= 0.0 {
            return Ok(None);
        }
        downstream_speed(&self.state, commodities, &self.fd, commodities.min_property()).map(Some)
    }

    pub fn is_jammed(&self) -> bool {
        self.state.total_density() >= self.fd.jam_density() * (1.0 - JAM_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeProblem2 {
    /// Demands and capacities in vehicles per step; capacities are required.
    pub junction: Junction,
    pub commodities: Commodities,
    pub outputs: Vec<Downstream>,
    /// Duration the supplies are scaled by (the simulation time step).
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSolution2 {
    pub flows: FlowArray,
    /// Final `ρ_j^c`.
    pub densities: Vec<Vec<f64>>,
    pub trace: Vec<Iteration>,
    /// Final `w_j`; `None` for links that stayed empty.
    pub properties: Vec<Option<f64>>,
}

impl NodeProblem2 {
    pub fn validate(&self) -> Result<()> {
        self.junction.validate()?;
        if self.junction.capacities.is_none() {
            return Err(Error::invalid("second-order node problems need input capacities"));
        }
        if self.junction.commodities() != self.commodities.len() {
            return Err(Error::Dimension(format!(
                "demands list {} commodities, property table has {}",
                self.junction.commodities(),
                self.commodities.len()
            )));
        }
        if self.outputs.len() != self.junction.outputs() {
            return Err(Error::Dimension(format!(
                "expected {} downstream links, got {}",
                self.junction.outputs(),
                self.outputs.len()
            )));
        }
        for d in &self.outputs {
            d.state.validate(&self.commodities, &d.fd)?;
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid(format!("step must be positive, got {}", self.step)));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<NodeSolution2> {
        solve(self)
    }
}

/// j-upstream middle state of an inflow mixture entering a link whose
/// vehicles exit at `exit_speed` (`None`: empty link, no restriction).
pub fn upstream_middle_state(
    inflow: &[f64],
    exit_speed: Option<f64>,
    commodities: &Commodities,
    fd: &FundamentalDiagram,
) -> Result<Option<MiddleState>> {
    let Some(w) = commodities.weighted_property(inflow) else {
        return Ok(None);
    };
    let v = exit_speed.unwrap_or_else(|| fd.free_speed(w));
    middle_state_for_speed(w, v, fd).map(Some)
}

/// Supply rate implied by a middle state.
pub fn recompute_supply(middle: &MiddleState, fd: &FundamentalDiagram) -> f64 {
    supply_from_middle(middle, fd)
}

pub fn solve(problem: &NodeProblem2) -> Result<NodeSolution2> {
    problem.validate()?;
    let junction = &problem.junction;
    let (n, nc) = (junction.outputs(), junction.commodities());
    let commodities = &problem.commodities;

    let exit_speeds = problem
        .outputs
        .iter()
        .map(|d| d.exit_speed(commodities))
        .collect::<Result<Vec<_>>>()?;
    let mut downstream: Vec<Downstream> = problem.outputs.clone();
    let mut budget = vec![1.0f64; n];

    let mut engine = Engine::new(junction);
    for (j, d) in downstream.iter().enumerate() {
        engine.filled[j] = d.is_jammed() || exit_speeds[j] == Some(0.0);
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
        let numerical = |e: Error| Error::Numerical {
            iteration: k,
            source: Box::new(e),
        };

        let rates = engine.rates();
        engine.retire_idle_inputs(&rates);
        if rates.total() <= 0.0 {
            break;
        }

        candidates.clear();
        let mut middles = vec![None; n];
        let mut full = vec![0.0; n];
        for j in (0..n).filter(|&j| !engine.filled[j]) {
            let rate = rates.output_total(j);
            if rate <= 0.0 {
                continue;
            }
            let inflow: Vec<f64> = (0..nc).map(|c| rates.output_commodity(j, c)).collect();
            let fd = &downstream[j].fd;
            let middle = upstream_middle_state(&inflow, exit_speeds[j], commodities, fd)
                .map_err(numerical)?
                .expect("positive inflow has a mixture");
            full[j] = recompute_supply(&middle, fd) * problem.step;
            middles[j] = Some(middle);
            candidates.push((budget[j] * full[j] / rate, Event::OutputFilled(j)));
            let room = (fd.jam_density() - downstream[j].state.total_density()).max(0.0);
            candidates.push((room * downstream[j].state.length / rate, Event::OutputJammed(j)));
        }
        engine.demand_candidates(&rates, &mut candidates);
        let Some((dt, mut events)) = select_events(&candidates, engine.time) else {
            break;
        };

        let start = engine.time;
        let was_filled = engine.filled.clone();
        engine.advance(&rates, dt);

        let mut outputs = Vec::with_capacity(n);
        for j in 0..n {
            let inflow: Vec<f64> = (0..nc).map(|c| rates.output_commodity(j, c) * dt).collect();
            let total: f64 = inflow.iter().sum();
            let supply = middles[j].map(|_| budget[j] * full[j]);
            let link = &mut downstream[j];
            for (rho, q) in link.state.densities.iter_mut().zip(&inflow) {
                *rho += q / link.state.length;
            }
            if full[j] > 0.0 {
                budget[j] = (budget[j] - total / full[j]).max(0.0);
            }
            if events.contains(&Event::OutputFilled(j)) {
                budget[j] = 0.0;
            }
            if !was_filled[j] && link.is_jammed() && !events.contains(&Event::OutputJammed(j)) {
                events.push(Event::OutputJammed(j));
            }
            outputs.push(OutputRecord {
                supply,
                rate: rates.output_total(j),
                inflow,
                middle: middles[j],
                densities: Some(link.state.densities.clone()),
            });
        }
        events.sort();
        for &event in &events {
            match event {
                Event::OutputFilled(j) | Event::OutputJammed(j) => engine.filled[j] = true,
                other => {
                    engine.apply_demand_event(other);
                }
            }
        }

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

    // snapping exhausted movements can shift flows by rounding; keep the
    // stored density consistent with the delivered vehicles
    for (j, link) in downstream.iter_mut().enumerate() {
        for c in 0..nc {
            let delivered = engine.flows.output_commodity(j, c);
            link.state.densities[c] = problem.outputs[j].state.densities[c] + delivered / link.state.length;
        }
    }

    let properties = downstream
        .iter()
        .map(|d| commodities.weighted_property(&d.state.densities))
        .collect();
    Ok(NodeSolution2 {
        flows: engine.flows,
        densities: downstream.into_iter().map(|d| d.state.densities).collect(),
        trace,
        properties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::supply_1to1;
    use crate::interval::RestrictionMap;

    fn gs() -> FundamentalDiagram {
        FundamentalDiagram::greenshields(100.0)
    }

    #[test]
    fn middle_state_of_mixed_inflow() {
        let c = Commodities::from_slice(&[10.0, 30.0]);
        let m = upstream_middle_state(&[1.0, 1.0], None, &c, &gs()).unwrap().unwrap();
        assert_eq!(m.property, 20.0);
        let m = upstream_middle_state(&[3.0, 1.0], Some(10.0), &c, &gs())
            .unwrap()
            .unwrap();
        assert_eq!(m.property, 15.0);
        assert_eq!(m.speed, 10.0);
        assert!((m.density - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(recompute_supply(&m, &gs()), 375.0);
        assert!(upstream_middle_state(&[0.0, 0.0], None, &c, &gs()).unwrap().is_none());
    }

    #[test]
    fn supply_examples() {
        let c = Commodities::from_slice(&[40.0]);
        let jam = upstream_middle_state(&[1.0], Some(0.0), &c, &gs()).unwrap().unwrap();
        assert_eq!(recompute_supply(&jam, &gs()), 0.0);
        let free = upstream_middle_state(&[1.0], None, &c, &gs()).unwrap().unwrap();
        assert_eq!(recompute_supply(&free, &gs()), 1000.0);
    }

    fn one_to_one(s: f64, w: f64, downstream: Vec<f64>) -> NodeProblem2 {
        let props = vec![w, 40.0];
        NodeProblem2 {
            junction: Junction {
                demands: vec![vec![s, 0.0]],
                splits: vec![vec![vec![1.0, 1.0]]],
                priorities: vec![1.0],
                capacities: Some(vec![gs().capacity(w)]),
                restrictions: RestrictionMap::new(),
            },
            commodities: Commodities::from_slice(&props),
            outputs: vec![Downstream {
                state: LinkState::new(downstream, 1e6),
                fd: gs(),
            }],
            step: 1.0,
        }
    }

    #[test]
    fn one_to_one_matches_boundary_flux() {
        for (s, rho) in [(200.0, 75.0), (400.0, 75.0), (100.0, 95.0), (500.0, 0.0)] {
            let p = one_to_one(s, 20.0, vec![0.0, rho]);
            let sol = solve(&p).unwrap();
            let down = LinkState::new(vec![0.0, rho], 1.0);
            let r = supply_1to1(20.0, &down, &p.commodities, &gs()).unwrap();
            assert!((sol.flows.total() - s.min(r)).abs() < 1e-9 * r.max(1.0), "{s} {rho}");
        }
    }

    #[test]
    fn jammed_output_receives_nothing() {
        let p = one_to_one(100.0, 20.0, vec![0.0, 100.0]);
        let sol = solve(&p).unwrap();
        assert_eq!(sol.flows.total(), 0.0);
    }

    #[test]
    fn density_update_conserves_vehicles() {
        let mut p = one_to_one(300.0, 20.0, vec![0.0, 10.0]);
        p.outputs[0].state.length = 50.0;
        let sol = solve(&p).unwrap();
        let d: f64 = sol.densities[0].iter().sum::<f64>() - 10.0;
        assert!((d * 50.0 - sol.flows.total()).abs() < 1e-9);
        assert!(sol.densities[0].iter().sum::<f64>() <= 100.0 * (1.0 + 1e-12));
    }

    #[test]
    fn short_link_jams_before_supply_runs_out() {
        let mut p = one_to_one(300.0, 20.0, vec![0.0, 90.0]);
        p.outputs[0].state.length = 0.5;
        let sol = solve(&p).unwrap();
        assert!((sol.densities[0].iter().sum::<f64>() - 100.0).abs() < 1e-9);
        assert!(sol.trace.iter().any(|it| it.events.contains(&Event::OutputJammed(0))));
    }

    #[test]
    fn exhausting_trucks_raises_remaining_supply() {
        let p = NodeProblem2 {
            junction: Junction {
                demands: vec![vec![30.0, 0.0], vec![0.0, 2000.0]],
                splits: vec![vec![vec![1.0, 1.0]], vec![vec![1.0, 1.0]]],
                priorities: vec![3.0, 1.0],
                capacities: Some(vec![30.0, 2000.0]),
                restrictions: RestrictionMap::new(),
            },
            commodities: Commodities::from_slice(&[15.0, 30.0, 40.0]),
            outputs: vec![Downstream {
                state: LinkState::new(vec![0.0, 0.0, 75.0], 1e9),
                fd: gs(),
            }],
            step: 1.0,
        }
        .reshape_commodities();
        let sol = solve(&p).unwrap();
        let r0 = sol.trace[0].outputs[0].supply.unwrap();
        let r1 = sol.trace[1].outputs[0].supply.unwrap();
        assert!((r0 - 468.75).abs() < 1e-9);
        assert!(r1 > r0);
        assert!(sol.trace[0].events.contains(&Event::MovementExhausted(0, 0)));
    }

    impl NodeProblem2 {
        /// Pads demand rows with zero for the downstream-only commodity.
        fn reshape_commodities(mut self) -> Self {
            let c = self.commodities.len();
            for row in &mut self.junction.demands {
                row.resize(c, 0.0);
            }
            for row in &mut self.junction.splits {
                for s in row {
                    s.resize(c, 1.0);
                }
            }
            self
        }
    }
}
