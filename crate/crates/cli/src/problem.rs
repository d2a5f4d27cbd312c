//! Node problems read from either a node file or a one-junction scenario.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gsom_core::io::{self, NodeIds};
use gsom_core::network::JunctionProblem;
use gsom_core::{NodeProblem, NodeProblem2, Order, Scenario, Simulator};

pub enum Problem {
    First(NodeProblem),
    Second(NodeProblem2),
}

pub struct Loaded {
    pub problem: Problem,
    pub ids: NodeIds,
}

/// The first word of the first non-comment line.
fn magic(text: &str) -> Option<&str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .and_then(|l| l.split_whitespace().next())
}

pub fn is_scenario(text: &str) -> bool {
    magic(text) == Some(io::scenario::MAGIC)
}

/// Reads a scenario, applying overrides before validation.
pub fn scenario(path: &Path, order: Option<Order>, dt: Option<f64>) -> Result<Scenario> {
    let text = io::read_file(path)?;
    scenario_from_text(path, &text, order, dt)
}

fn scenario_from_text(path: &Path, text: &str, order: Option<Order>, dt: Option<f64>) -> Result<Scenario> {
    let mut s = io::parse_unvalidated(&path.display().to_string(), text)?;
    if let Some(order) = order {
        s.order = order;
    }
    if let Some(dt) = dt {
        s.dt = dt;
    }
    s.validate()?;
    Ok(s)
}

pub fn load(path: &Path, order: Option<Order>, dt: Option<f64>) -> Result<Loaded> {
    let text = io::read_file(path)?;
    if is_scenario(&text) {
        return from_scenario(&scenario_from_text(path, &text, order, dt)?);
    }
    let file = io::parse_node_file(&path.display().to_string(), &text)?;
    let ids = NodeIds {
        inputs: file.input_ids.clone(),
        outputs: file.output_ids.clone(),
        commodities: file.commodity_ids.clone(),
    };
    let problem = match order.unwrap_or(file.order) {
        Order::First => Problem::First(file.first_order()?),
        Order::Second => Problem::Second(file.second_order()?),
    };
    Ok(Loaded { problem, ids })
}

fn from_scenario(s: &Scenario) -> Result<Loaded> {
    let net = &s.network;
    let junctions: Vec<usize> = net.junctions().collect();
    let [node] = junctions[..] else {
        bail!(
            "scenario has {} junctions; solve-node needs exactly one",
            junctions.len()
        );
    };
    let sim = Simulator::new(s)?;
    let entry = &net.nodes[node];
    let link_ids = |ls: &[usize]| ls.iter().map(|&l| net.links[l].id.clone()).collect();
    let ids = NodeIds {
        inputs: link_ids(&entry.inputs),
        outputs: link_ids(&entry.outputs),
        commodities: net.commodity_ids.clone(),
    };
    let problem = match sim
        .junction_problem(node)
        .with_context(|| format!("building the problem at node {}", entry.id))?
    {
        JunctionProblem::First(p) => Problem::First(p),
        JunctionProblem::Second(p) => Problem::Second(p),
    };
    Ok(Loaded { problem, ids })
}
