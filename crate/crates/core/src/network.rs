//! Godunov finite-volume simulation of a road network.
//!
//! Links are split into equal cells. Each step computes every boundary
//! flux from the pre-step state: cell-to-cell boundaries inside a link use
//! the 1-to-1 flux `min(S, R)`, sources and sinks use their profiles, and
//! junctions pose a node problem in vehicles per step. Cells are then
//! updated by the net flux divided by their length.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fd::{demand, supply_1to1, Commodities, FundamentalDiagram, LinkState};
use crate::flows::FlowArray;
use crate::interval::RestrictionMap;
use crate::node::{Downstream, Junction, NodeProblem, NodeProblem2};

/// Which node solver junctions use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Order {
    First,
    #[default]
    Second,
}

impl Order {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Order::First),
            2 => Some(Order::Second),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

/// Piecewise-constant time series; each value holds from its time on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Profile {
    points: Vec<(f64, f64)>,
}

impl Profile {
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { points }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(vec![(0.0, value)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, t: f64, value: f64) {
        self.points.push((t, value));
        self.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    /// Value in force at `t`; `None` before the first point.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let k = self.points.partition_point(|p| p.0 <= t);
        (k > 0).then(|| self.points[k - 1].1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub cells: usize,
    /// Index into [`Network::diagrams`].
    pub diagram: usize,
    /// Capacity override (veh/time); the diagram's `F(w)` otherwise.
    pub capacity: Option<f64>,
}

impl Link {
    pub fn cell_length(&self) -> f64 {
        self.length / self.cells as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    Sink,
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    /// Incoming link indices, in declaration order.
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    /// `p_i` per input.
    pub priorities: Vec<f64>,
    /// `β^c_{i,j}` indexed `[i][j][c]`.
    pub splits: Vec<Vec<Vec<f64>>>,
    pub restrictions: RestrictionMap,
    /// Per-commodity inflow demand (veh/time) for sources.
    pub demand: Vec<Profile>,
    /// Receiving capacity (veh/time) for sinks; unlimited when empty.
    pub supply: Profile,
}

impl Node {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            priorities: Vec::new(),
            splits: Vec::new(),
            restrictions: RestrictionMap::new(),
            demand: Vec::new(),
            supply: Profile::default(),
        }
    }

    pub fn kind(&self) -> NodeKind {
        if self.inputs.is_empty() {
            NodeKind::Source
        } else if self.outputs.is_empty() {
            NodeKind::Sink
        } else {
            NodeKind::Junction
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub commodity_ids: Vec<String>,
    pub commodities: Commodities,
    pub diagram_ids: Vec<String>,
    pub diagrams: Vec<FundamentalDiagram>,
    pub links: Vec<Link>,
    pub nodes: Vec<Node>,
}

impl Network {
    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn junctions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].kind() == NodeKind::Junction)
    }

    pub fn diagram(&self, link: usize) -> &FundamentalDiagram {
        &self.diagrams[self.links[link].diagram]
    }

    /// Largest stable time step: `min L_cell / (κ max_c V(0, w^c))`, with
    /// `κ` the diagram's wave factor.
    pub fn cfl_bound(&self) -> f64 {
        let w = self.commodities.max_property();
        self.links
            .iter()
            .map(|l| {
                let fd = &self.diagrams[l.diagram];
                l.cell_length() / (fd.free_speed(w) * fd.wave_factor())
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let nc = self.commodities.len();
        if self.commodity_ids.len() != nc || self.diagram_ids.len() != self.diagrams.len() {
            return Err(Error::Dimension(
                "id tables do not match the commodity and diagram tables".into(),
            ));
        }
        for l in &self.links {
            let entity = || format!("link {}", l.id);
            if !(l.length.is_finite() && l.length > 0.0) {
                return Err(Error::semantic(entity(), "length must be positive"));
            }
            if l.cells == 0 {
                return Err(Error::semantic(entity(), "needs at least one cell"));
            }
            if l.diagram >= self.diagrams.len() || l.from >= self.nodes.len() || l.to >= self.nodes.len() {
                return Err(Error::semantic(entity(), "dangling reference"));
            }
            if l.from == l.to {
                return Err(Error::semantic(entity(), "starts and ends at the same node"));
            }
            if let Some(c) = l.capacity {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::semantic(entity(), "capacity must be finite and nonnegative"));
                }
            }
        }
        for node in &self.nodes {
            let entity = || format!("node {}", node.id);
            let (m, n) = (node.inputs.len(), node.outputs.len());
            match node.kind() {
                NodeKind::Source if n != 1 => {
                    return Err(Error::semantic(entity(), "a source must feed exactly one link"));
                }
                NodeKind::Sink if m != 1 => {
                    return Err(Error::semantic(entity(), "a sink must drain exactly one link"));
                }
                _ => {}
            }
            if node.kind() == NodeKind::Source {
                if node.demand.len() != nc {
                    return Err(Error::semantic(entity(), "needs one demand profile per commodity"));
                }
                if node
                    .demand
                    .iter()
                    .flat_map(|p| p.points())
                    .any(|&(t, v)| !(t.is_finite() && v.is_finite() && v >= 0.0))
                {
                    return Err(Error::semantic(entity(), "demand must be finite and nonnegative"));
                }
            } else if !node.demand.iter().all(Profile::is_empty) {
                return Err(Error::semantic(entity(), "only sources take demand profiles"));
            }
            if node.kind() != NodeKind::Sink && !node.supply.is_empty() {
                return Err(Error::semantic(entity(), "only sinks take supply profiles"));
            }
            if node
                .supply
                .points()
                .iter()
                .any(|&(t, v)| !(t.is_finite() && v >= 0.0 && !v.is_nan()))
            {
                return Err(Error::semantic(entity(), "supply must be nonnegative"));
            }
            if node.kind() != NodeKind::Junction {
                continue;
            }
            if node.priorities.len() != m || node.priorities.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::semantic(entity(), "priorities must be positive"));
            }
            if node.splits.len() != m
                || node
                    .splits
                    .iter()
                    .any(|r| r.len() != n || r.iter().any(|s| s.len() != nc))
            {
                return Err(Error::semantic(entity(), "split table has the wrong shape"));
            }
            for i in 0..m {
                for c in 0..nc {
                    let sum: f64 = (0..n).map(|j| node.splits[i][j][c]).sum();
                    if (0..n).any(|j| !(0.0..=1.0).contains(&node.splits[i][j][c]))
                        || (sum - 1.0).abs() > crate::node::SPLIT_TOLERANCE
                    {
                        return Err(Error::semantic(
                            entity(),
                            format!(
                                "split ratios from link {} for commodity {} sum to {sum}",
                                self.links[node.inputs[i]].id, self.commodity_ids[c]
                            ),
                        ));
                    }
                }
            }
            node.restrictions
                .check_dimensions(m, n)
                .map_err(|e| Error::semantic(entity(), e.to_string()))?;
        }
        Ok(())
    }
}

/// A network together with its initial state and run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    /// Initial `ρ^c` per link, cell.
    pub initial: Vec<Vec<Vec<f64>>>,
    pub dt: f64,
    pub horizon: f64,
    pub order: Order,
    /// Record output every this many steps.
    pub output_every: usize,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        let net = &self.network;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::semantic("run", "dt must be positive"));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::semantic("run", "horizon must be nonnegative"));
        }
        if self.output_every == 0 {
            return Err(Error::semantic("run", "output cadence must be at least one step"));
        }
        check_cfl(net, self.dt)?;
        if self.initial.len() != net.links.len() {
            return Err(Error::semantic("initial", "one state per link is required"));
        }
        for (l, cells) in self.initial.iter().enumerate() {
            let link = &net.links[l];
            let entity = || format!("link {}", link.id);
            if cells.len() != link.cells {
                return Err(Error::semantic(entity(), "initial state has the wrong cell count"));
            }
            for (k, rho) in cells.iter().enumerate() {
                let state = LinkState::new(rho.clone(), link.cell_length());
                state
                    .validate(&net.commodities, net.diagram(l))
                    .map_err(|e| Error::semantic(entity(), format!("cell {k}: {e}")))?;
            }
        }
        Ok(())
    }
}

fn check_cfl(net: &Network, dt: f64) -> Result<()> {
    let bound = net.cfl_bound();
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, bound });
    }
    Ok(())
}

/// Per-commodity densities `[link][cell][commodity]`.
pub type Densities = Vec<Vec<Vec<f64>>>;

/// One recorded boundary flow in vehicles over a step.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    /// End time of the step.
    pub t: f64,
    pub node: usize,
    /// Incoming link; `None` for a source.
    pub input: Option<usize>,
    /// Outgoing link; `None` for a sink.
    pub output: Option<usize>,
    pub commodity: usize,
    pub value: f64,
}

/// Cumulative vehicle balance per commodity at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub entered: Vec<f64>,
    pub exited: Vec<f64>,
    pub stored: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOutput {
    pub times: Vec<f64>,
    pub densities: Vec<Densities>,
    pub flows: Vec<FlowRecord>,
    pub ledger: Vec<LedgerRow>,
}

/// A junction's node problem at one step.
#[derive(Debug, Clone, PartialEq)]
pub enum JunctionProblem {
    First(NodeProblem),
    Second(NodeProblem2),
}

/// Boundary fluxes of one step, in vehicles.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFluxes {
    /// Per junction node index, its movement flows.
    pub junctions: BTreeMap<usize, FlowArray>,
    /// Per source node index, per-commodity inflow.
    pub sources: BTreeMap<usize, Vec<f64>>,
    /// Per sink node index, per-commodity outflow.
    pub sinks: BTreeMap<usize, Vec<f64>>,
}

/// Explicit time stepper over a validated scenario.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    pub densities: Densities,
    pub time: f64,
    pub steps_taken: usize,
    pub entered: Vec<f64>,
    pub exited: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let nc = scenario.network.commodities.len();
        Ok(Self {
            scenario,
            densities: scenario.initial.clone(),
            time: 0.0,
            steps_taken: 0,
            entered: vec![0.0; nc],
            exited: vec![0.0; nc],
        })
    }

    fn net(&self) -> &Network {
        &self.scenario.network
    }

    fn cell(&self, link: usize, cell: usize) -> LinkState {
        LinkState::new(self.densities[link][cell].clone(), self.net().links[link].cell_length())
    }

    fn cell_demand(&self, link: usize, cell: usize) -> Result<f64> {
        let net = self.net();
        demand(&self.cell(link, cell), &net.commodities, net.diagram(link))
    }

    /// Receiving flow of a cell for vehicles of the given property.
    fn cell_supply(&self, link: usize, cell: usize, property: f64) -> Result<f64> {
        let net = self.net();
        supply_1to1(property, &self.cell(link, cell), &net.commodities, net.diagram(link))
    }

    /// Per-commodity split of a total flow in proportion to cell densities.
    fn split_by_density(&self, link: usize, cell: usize, total: f64) -> Vec<f64> {
        let rho = &self.densities[link][cell];
        let sum: f64 = rho.iter().sum();
        if sum <= 0.0 || total <= 0.0 {
            return vec![0.0; rho.len()];
        }
        rho.iter().map(|r| total * r / sum).collect()
    }

    /// Vehicles stored per commodity.
    pub fn stored(&self) -> Vec<f64> {
        let net = self.net();
        let mut out = vec![0.0; net.commodities.len()];
        for (l, cells) in self.densities.iter().enumerate() {
            let len = net.links[l].cell_length();
            for rho in cells {
                for (o, r) in out.iter_mut().zip(rho) {
                    *o += r * len;
                }
            }
        }
        out
    }

    /// Node problem that junction `node` poses for the current state.
    pub fn junction_problem(&self, node: usize) -> Result<JunctionProblem> {
        let net = self.net();
        let entry = &net.nodes[node];
        if entry.kind() != NodeKind::Junction {
            return Err(Error::invalid(format!("node {} is not a junction", entry.id)));
        }
        let dt = self.scenario.dt;
        let commodities = &net.commodities;
        let nc = commodities.len();
        let mut demands = Vec::with_capacity(entry.inputs.len());
        let mut capacities = Vec::with_capacity(entry.inputs.len());
        for &l in &entry.inputs {
            let last = net.links[l].cells - 1;
            let state = self.cell(l, last);
            let fd = net.diagram(l);
            let w = commodities
                .weighted_property(&state.densities)
                .unwrap_or_else(|| commodities.max_property());
            let cap = net.links[l].capacity.unwrap_or_else(|| fd.capacity(w)) * dt;
            let total = (self.cell_demand(l, last)? * dt).min(cap);
            demands.push(self.split_by_density(l, last, total));
            capacities.push(cap);
        }
        let junction = Junction {
            demands,
            splits: entry.splits.clone(),
            priorities: entry.priorities.iter().map(|p| p * dt).collect(),
            capacities: Some(capacities),
            restrictions: entry.restrictions.clone(),
        };
        match self.scenario.order {
            Order::First => {
                let directed = junction.directed_demands();
                let mut supplies = Vec::with_capacity(entry.outputs.len());
                for (j, &l) in entry.outputs.iter().enumerate() {
                    let weights: Vec<f64> = (0..nc).map(|c| directed.output_commodity(j, c)).collect();
                    let w = commodities
                        .weighted_property(&weights)
                        .unwrap_or_else(|| commodities.max_property());
                    supplies.push(self.cell_supply(l, 0, w)? * dt);
                }
                Ok(JunctionProblem::First(NodeProblem { junction, supplies }))
            }
            Order::Second => {
                let outputs = entry
                    .outputs
                    .iter()
                    .map(|&l| Downstream {
                        state: self.cell(l, 0),
                        fd: net.diagram(l).clone(),
                    })
                    .collect();
                Ok(JunctionProblem::Second(NodeProblem2 {
                    junction,
                    commodities: commodities.clone(),
                    outputs,
                    step: dt,
                }))
            }
        }
    }

    /// Computes every boundary flux from the current state.
    pub fn fluxes(&self) -> Result<(StepFluxes, Vec<Vec<Vec<f64>>>)> {
        let net = self.net();
        let dt = self.scenario.dt;
        let nc = net.commodities.len();
        let t = self.time;

        // internal[l][k] = flux across the downstream face of cell k
        let mut internal: Vec<Vec<Vec<f64>>> = Vec::with_capacity(net.links.len());
        for (l, link) in net.links.iter().enumerate() {
            let mut faces = Vec::with_capacity(link.cells.saturating_sub(1));
            for k in 0..link.cells - 1 {
                let up = self.cell(l, k);
                let flux = match up.net_property(&net.commodities) {
                    Ok(w) => {
                        let s = self.cell_demand(l, k)?;
                        s.min(self.cell_supply(l, k + 1, w)?) * dt
                    }
                    Err(Error::EmptyLink) => 0.0,
                    Err(e) => return Err(e),
                };
                faces.push(self.split_by_density(l, k, flux));
            }
            internal.push(faces);
        }

        let mut out = StepFluxes {
            junctions: BTreeMap::new(),
            sources: BTreeMap::new(),
            sinks: BTreeMap::new(),
        };
        for (n, node) in net.nodes.iter().enumerate() {
            match node.kind() {
                NodeKind::Source => {
                    let l = node.outputs[0];
                    let d: Vec<f64> = node.demand.iter().map(|p| p.value_at(t).unwrap_or(0.0)).collect();
                    let total: f64 = d.iter().sum();
                    let flow = match net.commodities.weighted_property(&d) {
                        Some(w) => total.min(self.cell_supply(l, 0, w)?) * dt,
                        None => 0.0,
                    };
                    let per: Vec<f64> = if total > 0.0 {
                        d.iter().map(|x| flow * x / total).collect()
                    } else {
                        vec![0.0; nc]
                    };
                    out.sources.insert(n, per);
                }
                NodeKind::Sink => {
                    let l = node.inputs[0];
                    let last = net.links[l].cells - 1;
                    let r = node.supply.value_at(t).unwrap_or(f64::INFINITY);
                    let flow = self.cell_demand(l, last)?.min(r) * dt;
                    out.sinks.insert(n, self.split_by_density(l, last, flow));
                }
                NodeKind::Junction => {
                    let flows = match self.junction_problem(n)? {
                        JunctionProblem::First(p) => p.solve()?.flows,
                        JunctionProblem::Second(p) => p.solve()?.flows,
                    };
                    out.junctions.insert(n, flows);
                }
            }
        }
        Ok((out, internal))
    }

    /// Advances one step and returns its boundary fluxes.
    pub fn step(&mut self) -> Result<StepFluxes> {
        check_cfl(self.net(), self.scenario.dt)?;
        let (fluxes, internal) = self.fluxes()?;
        let net = &self.scenario.network;
        let nc = net.commodities.len();

        // net[l][k][c] in vehicles
        let mut delta: Vec<Vec<Vec<f64>>> = net.links.iter().map(|l| vec![vec![0.0; nc]; l.cells]).collect();
        for (l, faces) in internal.iter().enumerate() {
            for (k, q) in faces.iter().enumerate() {
                for c in 0..nc {
                    delta[l][k][c] -= q[c];
                    delta[l][k + 1][c] += q[c];
                }
            }
        }
        for (&n, per) in &fluxes.sources {
            let l = net.nodes[n].outputs[0];
            for c in 0..nc {
                delta[l][0][c] += per[c];
                self.entered[c] += per[c];
            }
        }
        for (&n, per) in &fluxes.sinks {
            let l = net.nodes[n].inputs[0];
            let last = net.links[l].cells - 1;
            for c in 0..nc {
                delta[l][last][c] -= per[c];
                self.exited[c] += per[c];
            }
        }
        for (&n, flows) in &fluxes.junctions {
            let node = &net.nodes[n];
            for (i, j, c, v) in flows.iter() {
                let up = node.inputs[i];
                let down = node.outputs[j];
                delta[up][net.links[up].cells - 1][c] -= v;
                delta[down][0][c] += v;
            }
        }

        for (l, cells) in self.densities.iter_mut().enumerate() {
            let len = net.links[l].cell_length();
            for (rho, d) in cells.iter_mut().zip(&delta[l]) {
                for (r, q) in rho.iter_mut().zip(d) {
                    *r += q / len;
                }
            }
        }
        self.steps_taken += 1;
        self.time = self.steps_taken as f64 * self.scenario.dt;
        Ok(fluxes)
    }

    fn ledger_row(&self) -> LedgerRow {
        LedgerRow {
            t: self.time,
            entered: self.entered.clone(),
            exited: self.exited.clone(),
            stored: self.stored(),
        }
    }
}

/// Runs the scenario over its horizon.
pub fn run(scenario: &Scenario) -> Result<SimOutput> {
    let mut sim = Simulator::new(scenario)?;
    let mut out = SimOutput::default();
    out.times.push(0.0);
    out.densities.push(sim.densities.clone());
    out.ledger.push(sim.ledger_row());

    let steps = scenario.steps();
    let net = &scenario.network;
    for s in 1..=steps {
        let fluxes = sim.step()?;
        if s % scenario.output_every != 0 && s != steps {
            continue;
        }
        let t = sim.time;
        let first = out.flows.len();
        for (&n, per) in &fluxes.sources {
            for (c, v) in per.iter().enumerate() {
                out.flows.push(FlowRecord {
                    t,
                    node: n,
                    input: None,
                    output: Some(net.nodes[n].outputs[0]),
                    commodity: c,
                    value: *v,
                });
            }
        }
        for (&n, flows) in &fluxes.junctions {
            let node = &net.nodes[n];
            for (i, j, c, v) in flows.iter() {
                out.flows.push(FlowRecord {
                    t,
                    node: n,
                    input: Some(node.inputs[i]),
                    output: Some(node.outputs[j]),
                    commodity: c,
                    value: v,
                });
            }
        }
        for (&n, per) in &fluxes.sinks {
            for (c, v) in per.iter().enumerate() {
                out.flows.push(FlowRecord {
                    t,
                    node: n,
                    input: Some(net.nodes[n].inputs[0]),
                    output: None,
                    commodity: c,
                    value: *v,
                });
            }
        }
        out.flows[first..].sort_by_key(|r| r.node);
        out.times.push(t);
        out.densities.push(sim.densities.clone());
        out.ledger.push(sim.ledger_row());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// source -> a -> sink with one commodity.
    fn corridor(cells: usize, rho: f64, demand: f64) -> Scenario {
        let mut nodes = vec![Node::new("src"), Node::new("snk")];
        nodes[0].outputs.push(0);
        nodes[0].demand.push(Profile::constant(demand));
        nodes[1].inputs.push(0);
        Scenario {
            network: Network {
                commodity_ids: vec!["car".into()],
                commodities: Commodities::from_slice(&[25.0]),
                diagram_ids: vec!["gs".into()],
                diagrams: vec![FundamentalDiagram::greenshields(100.0)],
                links: vec![Link {
                    id: "a".into(),
                    from: 0,
                    to: 1,
                    length: 100.0 * cells as f64,
                    cells,
                    diagram: 0,
                    capacity: None,
                }],
                nodes,
            },
            initial: vec![vec![vec![rho]; cells]],
            dt: 2.0,
            horizon: 20.0,
            order: Order::Second,
            output_every: 1,
        }
    }

    #[test]
    fn cfl_bound_examples() {
        let mut s = corridor(4, 0.0, 0.0);
        assert_eq!(s.network.cfl_bound(), 4.0);
        s.network.links[0].length /= 2.0;
        assert_eq!(s.network.cfl_bound(), 2.0);
        s.network.commodities = Commodities::from_slice(&[25.0, 50.0]);
        s.network.commodity_ids.push("fast".into());
        assert_eq!(s.network.cfl_bound(), 1.0);
    }

    #[test]
    fn refuses_unstable_step() {
        let mut s = corridor(4, 0.0, 0.0);
        s.dt = 5.0;
        assert!(matches!(Simulator::new(&s), Err(Error::Cfl { .. })));
    }

    #[test]
    fn empty_network_stays_empty() {
        let s = corridor(4, 0.0, 0.0);
        let out = run(&s).unwrap();
        assert!(out.densities.iter().flatten().flatten().flatten().all(|r| *r == 0.0));
        assert!(out.flows.iter().all(|f| f.value == 0.0));
    }

    #[test]
    fn uniform_state_is_stationary() {
        let s = corridor(5, 20.0, 20.0 * 25.0 * 0.8);
        let out = run(&s).unwrap();
        for cells in out.densities.last().unwrap() {
            for rho in cells {
                assert!((rho[0] - 20.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn profile_lookup() {
        let p = Profile::new(vec![(5.0, 2.0), (0.0, 1.0)]);
        assert_eq!(p.value_at(-1.0), None);
        assert_eq!(p.value_at(0.0), Some(1.0));
        assert_eq!(p.value_at(7.0), Some(2.0));
    }
}
