//! The `gsom-node` standalone node-problem format.
//!
//! ```text
//! gsom-node 1
//! [settings]       order 1|2 | step X
//! [commodities]    id w
//! [diagrams]       id greenshields rho_max | id table rho_max x:phi ...
//! [inputs]         id priority capacity|-
//! [outputs]        id supply|inf|- length|- diagram|-
//! [demands]        input commodity value
//! [splits]         input output commodity beta
//! [restrictions]   input blocker blocked y z
//! [downstream]     output commodity density
//! ```
//!
//! Demands, capacities and supplies are vehicles per step. An output with
//! a length and a diagram carries a downstream link state, which the
//! second-order solver needs; for first order such an output's supply,
//! when not given, is the 1-to-1 supply of its downstream link for the
//! demand-weighted property heading to it.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fd::{supply_1to1, Commodities, LinkState};
use crate::interval::{RestrictionInterval, RestrictionMap};
use crate::network::Order;
use crate::node::{Downstream, Junction, NodeProblem, NodeProblem2};

use super::text::Document;
use super::{declare, lookup, parse_diagram, read_file};

pub const MAGIC: &str = "gsom-node";
pub const VERSION: u32 = 1;

const SECTIONS: [&str; 9] = [
    "settings",
    "commodities",
    "diagrams",
    "inputs",
    "outputs",
    "demands",
    "splits",
    "restrictions",
    "downstream",
];

#[derive(Debug, Clone, PartialEq)]
pub struct NodeFile {
    pub order: Order,
    pub step: f64,
    pub commodity_ids: Vec<String>,
    pub input_ids: Vec<String>,
    pub output_ids: Vec<String>,
    pub commodities: Commodities,
    /// Capacities are filled in only when every input declares one.
    pub junction: Junction,
    pub supplies: Vec<Option<f64>>,
    pub downstream: Vec<Option<Downstream>>,
}

impl NodeFile {
    pub fn first_order(&self) -> Result<NodeProblem> {
        let directed = self.junction.directed_demands();
        let nc = self.commodities.len();
        let mut supplies = Vec::with_capacity(self.output_ids.len());
        for (j, id) in self.output_ids.iter().enumerate() {
            let r = match (&self.supplies[j], &self.downstream[j]) {
                (Some(r), _) => *r,
                (None, Some(d)) => {
                    let weights: Vec<f64> = (0..nc).map(|c| directed.output_commodity(j, c)).collect();
                    let w = self
                        .commodities
                        .weighted_property(&weights)
                        .unwrap_or_else(|| self.commodities.max_property());
                    supply_1to1(w, &d.state, &self.commodities, &d.fd)? * self.step
                }
                (None, None) => {
                    return Err(Error::semantic(
                        format!("output {id}"),
                        "needs a supply or a downstream link for first order",
                    ))
                }
            };
            supplies.push(r);
        }
        let problem = NodeProblem {
            junction: self.junction.clone(),
            supplies,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn second_order(&self) -> Result<NodeProblem2> {
        let mut outputs = Vec::with_capacity(self.output_ids.len());
        for (j, id) in self.output_ids.iter().enumerate() {
            if self.supplies[j].is_some() {
                return Err(Error::semantic(
                    format!("output {id}"),
                    "second-order supplies are computed; give '-' instead of a value",
                ));
            }
            match &self.downstream[j] {
                Some(d) => outputs.push(d.clone()),
                None => {
                    return Err(Error::semantic(
                        format!("output {id}"),
                        "needs a length and a diagram for second order",
                    ))
                }
            }
        }
        let mut junction = self.junction.clone();
        if junction.capacities.is_none() {
            junction.capacities = Some((0..junction.inputs()).map(|i| junction.input_demand(i)).collect());
        }
        let problem = NodeProblem2 {
            junction,
            commodities: self.commodities.clone(),
            outputs,
            step: self.step,
        };
        problem.validate()?;
        Ok(problem)
    }
}

pub fn load_node_file(path: &Path) -> Result<NodeFile> {
    let text = read_file(path)?;
    parse_node_file(&path.display().to_string(), &text)
}

pub fn parse_node_file(path: &str, text: &str) -> Result<NodeFile> {
    let doc = Document::parse(path, text, MAGIC, VERSION)?;
    doc.expect_sections(&SECTIONS)?;

    let mut order = Order::First;
    let mut step = 1.0;
    for row in doc.rows("settings") {
        doc.arity(row, 2, 2)?;
        match doc.str(row, 0) {
            "order" => {
                order = doc
                    .count(row, 1)
                    .ok()
                    .and_then(|n| Order::from_number(n as u8))
                    .ok_or_else(|| doc.error(row, 1, "order must be 1 or 2"))?
            }
            "step" => {
                step = doc.number(row, 1)?;
                if step <= 0.0 {
                    return Err(doc.error(row, 1, "step must be positive"));
                }
            }
            other => return Err(doc.error(row, 0, format!("unknown setting '{other}'"))),
        }
    }

    let mut commodity_ids = Vec::new();
    let mut properties = Vec::new();
    for row in doc.rows("commodities") {
        doc.arity(row, 2, 2)?;
        declare(&doc, row, &mut commodity_ids, "commodity")?;
        let w = doc.number(row, 1)?;
        if w <= 0.0 {
            return Err(doc.error(row, 1, "property must be positive"));
        }
        properties.push(w);
    }
    let commodities = Commodities::new(properties).map_err(|e| Error::semantic("commodities", e.to_string()))?;
    let nc = commodities.len();

    let mut diagram_ids = Vec::new();
    let mut diagrams = Vec::new();
    for row in doc.rows("diagrams") {
        declare(&doc, row, &mut diagram_ids, "diagram")?;
        diagrams.push(parse_diagram(&doc, row)?);
    }

    let mut input_ids = Vec::new();
    let mut priorities = Vec::new();
    let mut caps = Vec::new();
    for row in doc.rows("inputs") {
        doc.arity(row, 2, 3)?;
        declare(&doc, row, &mut input_ids, "input")?;
        priorities.push(doc.number(row, 1)?);
        caps.push(doc.optional_number(row, 2, false)?);
    }
    let m = input_ids.len();

    let mut output_ids = Vec::new();
    let mut supplies = Vec::new();
    let mut downstream = Vec::new();
    for row in doc.rows("outputs") {
        doc.arity(row, 1, 4)?;
        declare(&doc, row, &mut output_ids, "output")?;
        supplies.push(doc.optional_number(row, 1, true)?);
        let length = doc.optional_number(row, 2, false)?;
        let diagram = match row.fields.get(3).map(|f| f.text.as_str()) {
            None | Some("-") => None,
            Some(_) => Some(lookup(&doc, row, 3, &diagram_ids, "diagram")?),
        };
        downstream.push(match (length, diagram) {
            (Some(length), Some(d)) => Some(Downstream {
                state: LinkState::new(vec![0.0; nc], length),
                fd: diagrams[d].clone(),
            }),
            (None, None) => None,
            _ => return Err(doc.error(row, 2, "a downstream link needs both a length and a diagram")),
        });
    }
    let n = output_ids.len();
    if m == 0 || n == 0 {
        return Err(Error::semantic("node", "needs at least one input and one output"));
    }

    let mut demands = vec![vec![0.0; nc]; m];
    for row in doc.rows("demands") {
        doc.arity(row, 3, 3)?;
        let i = lookup(&doc, row, 0, &input_ids, "input")?;
        let c = lookup(&doc, row, 1, &commodity_ids, "commodity")?;
        demands[i][c] = doc.number(row, 2)?;
    }

    let mut splits = vec![vec![vec![if n == 1 { 1.0 } else { 0.0 }; nc]; n]; m];
    for row in doc.rows("splits") {
        doc.arity(row, 4, 4)?;
        let i = lookup(&doc, row, 0, &input_ids, "input")?;
        let j = lookup(&doc, row, 1, &output_ids, "output")?;
        let c = lookup(&doc, row, 2, &commodity_ids, "commodity")?;
        splits[i][j][c] = doc.number(row, 3)?;
    }

    let mut restrictions = RestrictionMap::new();
    for row in doc.rows("restrictions") {
        doc.arity(row, 5, 5)?;
        let i = lookup(&doc, row, 0, &input_ids, "input")?;
        let a = lookup(&doc, row, 1, &output_ids, "output")?;
        let b = lookup(&doc, row, 2, &output_ids, "output")?;
        let entity = format!("input {}", input_ids[i]);
        let iv = RestrictionInterval::new(doc.number(row, 3)?, doc.number(row, 4)?)
            .map_err(|e| Error::semantic(&entity, format!("line {}: {e}", row.line)))?;
        restrictions
            .insert(i, a, b, iv)
            .map_err(|e| Error::semantic(&entity, format!("line {}: {e}", row.line)))?;
    }

    for row in doc.rows("downstream") {
        doc.arity(row, 3, 3)?;
        let j = lookup(&doc, row, 0, &output_ids, "output")?;
        let c = lookup(&doc, row, 1, &commodity_ids, "commodity")?;
        let rho = doc.number(row, 2)?;
        match &mut downstream[j] {
            Some(d) => d.state.densities[c] = rho,
            None => return Err(doc.error(row, 0, format!("output '{}' has no downstream link", output_ids[j]))),
        }
    }
    for (j, d) in downstream.iter().enumerate() {
        if let Some(d) = d {
            d.state
                .validate(&commodities, &d.fd)
                .map_err(|e| Error::semantic(format!("output {}", output_ids[j]), e.to_string()))?;
        }
    }

    let capacities = caps
        .iter()
        .all(Option::is_some)
        .then(|| caps.iter().flatten().copied().collect());
    if capacities.is_none() && caps.iter().any(Option::is_some) {
        return Err(Error::semantic("inputs", "give a capacity for every input or for none"));
    }
    let junction = Junction {
        demands,
        splits,
        priorities,
        capacities,
        restrictions,
    };
    junction
        .validate()
        .map_err(|e| Error::semantic("node", e.to_string()))?;

    Ok(NodeFile {
        order,
        step,
        commodity_ids,
        input_ids,
        output_ids,
        commodities,
        junction,
        supplies,
        downstream,
    })
}
