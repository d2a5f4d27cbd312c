//! The `gsom-scenario` network format.
//!
//! ```text
//! gsom-scenario 1
//! [commodities]        id w
//! [diagrams]           id greenshields rho_max | id table rho_max x:phi ...
//! [links]              id from to length cells diagram [capacity]
//! [priorities]         node link p
//! [splits]             node in out commodity beta
//! [restrictions]       node in blocker blocked y z
//! [initial]            link cells commodity density   (cells: * | k | a:b)
//! [demand]             node commodity t value
//! [supply]             node t value
//! [run]                dt X | horizon X | order 1|2 | output_every N
//! ```
//!
//! Nodes are the link endpoints, numbered by first appearance. A node
//! without incoming links is a source and one without outgoing links a
//! sink. Priorities default to 1, a junction with one outgoing link sends
//! everything there, densities default to 0, sink supply to unlimited and
//! `dt` to the CFL bound.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fd::Commodities;
use crate::interval::RestrictionInterval;
use crate::network::{Link, Network, Node, NodeKind, Order, Profile, Scenario};

use super::text::{format_number, Document, Row};
use super::{declare, format_diagram, lookup, parse_diagram, read_file};

pub const MAGIC: &str = "gsom-scenario";
pub const VERSION: u32 = 1;

const SECTIONS: [&str; 10] = [
    "commodities",
    "diagrams",
    "links",
    "priorities",
    "splits",
    "restrictions",
    "initial",
    "demand",
    "supply",
    "run",
];

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = read_file(path)?;
    parse_scenario(&path.display().to_string(), &text)
}

pub fn parse_scenario(path: &str, text: &str) -> Result<Scenario> {
    let scenario = parse_unvalidated(path, text)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Parses and resolves references without the run-level checks, so that
/// settings such as `dt` can be overridden before validating.
pub fn parse_unvalidated(path: &str, text: &str) -> Result<Scenario> {
    let doc = Document::parse(path, text, MAGIC, VERSION)?;
    doc.expect_sections(&SECTIONS)?;

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

    let mut link_ids = Vec::new();
    let mut node_ids: Vec<String> = Vec::new();
    let mut links = Vec::new();
    for row in doc.rows("links") {
        doc.arity(row, 6, 7)?;
        declare(&doc, row, &mut link_ids, "link")?;
        let mut node = |k: usize| {
            let id = doc.str(row, k);
            match node_ids.iter().position(|x| x == id) {
                Some(n) => n,
                None => {
                    node_ids.push(id.to_string());
                    node_ids.len() - 1
                }
            }
        };
        let from = node(1);
        let to = node(2);
        let length = doc.number(row, 3)?;
        let cells = doc.count(row, 4)?;
        let diagram = lookup(&doc, row, 5, &diagram_ids, "diagram")?;
        let capacity = doc.optional_number(row, 6, false)?;
        links.push(Link {
            id: link_ids.last().cloned().unwrap_or_default(),
            from,
            to,
            length,
            cells,
            diagram,
            capacity,
        });
    }

    let mut nodes: Vec<Node> = node_ids.iter().map(Node::new).collect();
    for (l, link) in links.iter().enumerate() {
        nodes[link.from].outputs.push(l);
        nodes[link.to].inputs.push(l);
    }
    for node in &mut nodes {
        let (m, n) = (node.inputs.len(), node.outputs.len());
        match node.kind() {
            NodeKind::Junction => {
                node.priorities = vec![1.0; m];
                node.splits = vec![vec![vec![if n == 1 { 1.0 } else { 0.0 }; nc]; n]; m];
            }
            NodeKind::Source => node.demand = vec![Profile::default(); nc],
            NodeKind::Sink => {}
        }
    }

    let node_of = |row: &Row| lookup(&doc, row, 0, &node_ids, "node");
    let input_of = |row: &Row, k: usize, node: &Node| -> Result<usize> {
        let l = lookup(&doc, row, k, &link_ids, "link")?;
        node.inputs.iter().position(|&x| x == l).ok_or_else(|| {
            doc.error(
                row,
                k,
                format!("link '{}' does not enter node '{}'", link_ids[l], node.id),
            )
        })
    };
    let output_of = |row: &Row, k: usize, node: &Node| -> Result<usize> {
        let l = lookup(&doc, row, k, &link_ids, "link")?;
        node.outputs.iter().position(|&x| x == l).ok_or_else(|| {
            doc.error(
                row,
                k,
                format!("link '{}' does not leave node '{}'", link_ids[l], node.id),
            )
        })
    };
    let junction_of = |row: &Row, nodes: &[Node]| -> Result<usize> {
        let n = node_of(row)?;
        if nodes[n].kind() != NodeKind::Junction {
            return Err(doc.error(row, 0, format!("node '{}' is not a junction", node_ids[n])));
        }
        Ok(n)
    };

    for row in doc.rows("priorities") {
        doc.arity(row, 3, 3)?;
        let n = junction_of(row, &nodes)?;
        let i = input_of(row, 1, &nodes[n])?;
        nodes[n].priorities[i] = doc.number(row, 2)?;
    }

    let mut seen = std::collections::BTreeSet::new();
    for row in doc.rows("splits") {
        doc.arity(row, 5, 5)?;
        let n = junction_of(row, &nodes)?;
        let i = input_of(row, 1, &nodes[n])?;
        let j = output_of(row, 2, &nodes[n])?;
        let c = lookup(&doc, row, 3, &commodity_ids, "commodity")?;
        if !seen.insert((n, i, j, c)) {
            return Err(doc.error(row, 0, "duplicate split entry"));
        }
        nodes[n].splits[i][j][c] = doc.number(row, 4)?;
    }

    for row in doc.rows("restrictions") {
        doc.arity(row, 6, 6)?;
        let n = junction_of(row, &nodes)?;
        let i = input_of(row, 1, &nodes[n])?;
        let a = output_of(row, 2, &nodes[n])?;
        let b = output_of(row, 3, &nodes[n])?;
        let (y, z) = (doc.number(row, 4)?, doc.number(row, 5)?);
        let entity = format!("node {}", node_ids[n]);
        let iv =
            RestrictionInterval::new(y, z).map_err(|e| Error::semantic(&entity, format!("line {}: {e}", row.line)))?;
        nodes[n]
            .restrictions
            .insert(i, a, b, iv)
            .map_err(|e| Error::semantic(&entity, format!("line {}: {e}", row.line)))?;
    }

    let mut initial: Vec<Vec<Vec<f64>>> = links.iter().map(|l| vec![vec![0.0; nc]; l.cells]).collect();
    for row in doc.rows("initial") {
        doc.arity(row, 4, 4)?;
        let l = lookup(&doc, row, 0, &link_ids, "link")?;
        let cells = cell_range(&doc, row, 1, links[l].cells)?;
        let c = lookup(&doc, row, 2, &commodity_ids, "commodity")?;
        let rho = doc.number(row, 3)?;
        for k in cells {
            initial[l][k][c] = rho;
        }
    }

    for row in doc.rows("demand") {
        doc.arity(row, 4, 4)?;
        let n = node_of(row)?;
        if nodes[n].kind() != NodeKind::Source {
            return Err(doc.error(row, 0, format!("node '{}' is not a source", node_ids[n])));
        }
        let c = lookup(&doc, row, 1, &commodity_ids, "commodity")?;
        let (t, v) = (doc.number(row, 2)?, doc.number(row, 3)?);
        nodes[n].demand[c].push(t, v);
    }

    for row in doc.rows("supply") {
        doc.arity(row, 3, 3)?;
        let n = node_of(row)?;
        if nodes[n].kind() != NodeKind::Sink {
            return Err(doc.error(row, 0, format!("node '{}' is not a sink", node_ids[n])));
        }
        let (t, v) = (doc.number(row, 1)?, doc.number_or_inf(row, 2)?);
        nodes[n].supply.push(t, v);
    }

    let network = Network {
        commodity_ids,
        commodities,
        diagram_ids,
        diagrams,
        links,
        nodes,
    };

    let mut dt = None;
    let mut horizon = None;
    let mut order = Order::default();
    let mut output_every = 1;
    for row in doc.rows("run") {
        doc.arity(row, 2, 2)?;
        match doc.str(row, 0) {
            "dt" => dt = Some(doc.number(row, 1)?),
            "horizon" => horizon = Some(doc.number(row, 1)?),
            "order" => {
                order = doc
                    .count(row, 1)
                    .ok()
                    .and_then(|n| Order::from_number(n as u8))
                    .ok_or_else(|| doc.error(row, 1, "order must be 1 or 2"))?
            }
            "output_every" => output_every = doc.count(row, 1)?,
            other => return Err(doc.error(row, 0, format!("unknown run setting '{other}'"))),
        }
    }
    let horizon = horizon.ok_or_else(|| Error::semantic("run", "horizon is required"))?;
    let dt = dt.unwrap_or_else(|| network.cfl_bound());

    let scenario = Scenario {
        network,
        initial,
        dt,
        horizon,
        order,
        output_every,
    };
    Ok(scenario)
}

fn cell_range(doc: &Document, row: &Row, k: usize, cells: usize) -> Result<std::ops::Range<usize>> {
    let text = doc.str(row, k);
    let bad = || doc.error(row, k, format!("'{text}' is not a cell, a:b range or *"));
    let range = if text == "*" {
        0..cells
    } else if let Some((a, b)) = text.split_once(':') {
        let a: usize = a.parse().map_err(|_| bad())?;
        let b: usize = b.parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        a..b + 1
    } else {
        let a: usize = text.parse().map_err(|_| bad())?;
        a..a + 1
    };
    if range.end > cells {
        return Err(doc.error(row, k, format!("cell range {text} exceeds the link's {cells} cells")));
    }
    Ok(range)
}

/// Serializes a scenario; parsing the result gives back an equal scenario
/// when nodes are numbered by first appearance in the link table.
pub fn write_scenario(s: &Scenario) -> String {
    let net = &s.network;
    let num = format_number;
    let node = |n: usize| net.nodes[n].id.as_str();
    let link = |l: usize| net.links[l].id.as_str();
    let mut out = format!("{MAGIC} {VERSION}\n");

    out.push_str("\n[commodities]\n");
    for (id, w) in net.commodity_ids.iter().zip(net.commodities.properties()) {
        out.push_str(&format!("{id} {}\n", num(*w)));
    }
    out.push_str("\n[diagrams]\n");
    for (id, fd) in net.diagram_ids.iter().zip(&net.diagrams) {
        out.push_str(&format!("{id} {}\n", format_diagram(fd)));
    }
    out.push_str("\n[links]\n");
    for l in &net.links {
        out.push_str(&format!(
            "{} {} {} {} {} {}",
            l.id,
            node(l.from),
            node(l.to),
            num(l.length),
            l.cells,
            net.diagram_ids[l.diagram]
        ));
        if let Some(c) = l.capacity {
            out.push_str(&format!(" {}", num(c)));
        }
        out.push('\n');
    }

    let junctions: Vec<&Node> = net.nodes.iter().filter(|n| n.kind() == NodeKind::Junction).collect();
    out.push_str("\n[priorities]\n");
    for n in &junctions {
        for (i, p) in n.priorities.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", n.id, link(n.inputs[i]), num(*p)));
        }
    }
    out.push_str("\n[splits]\n");
    for n in &junctions {
        for (i, row) in n.splits.iter().enumerate() {
            for (j, per) in row.iter().enumerate() {
                for (c, b) in per.iter().enumerate() {
                    if *b != 0.0 {
                        out.push_str(&format!(
                            "{} {} {} {} {}\n",
                            n.id,
                            link(n.inputs[i]),
                            link(n.outputs[j]),
                            net.commodity_ids[c],
                            num(*b)
                        ));
                    }
                }
            }
        }
    }
    out.push_str("\n[restrictions]\n");
    for n in &junctions {
        for ((i, a, b), iv) in n.restrictions.iter() {
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                n.id,
                link(n.inputs[i]),
                link(n.outputs[a]),
                link(n.outputs[b]),
                num(iv.lo()),
                num(iv.hi())
            ));
        }
    }
    out.push_str("\n[initial]\n");
    for (l, cells) in s.initial.iter().enumerate() {
        for (k, rho) in cells.iter().enumerate() {
            for (c, r) in rho.iter().enumerate() {
                if *r != 0.0 {
                    out.push_str(&format!("{} {k} {} {}\n", link(l), net.commodity_ids[c], num(*r)));
                }
            }
        }
    }
    out.push_str("\n[demand]\n");
    for n in &net.nodes {
        for (c, profile) in n.demand.iter().enumerate() {
            for (t, v) in profile.points() {
                out.push_str(&format!("{} {} {} {}\n", n.id, net.commodity_ids[c], num(*t), num(*v)));
            }
        }
    }
    out.push_str("\n[supply]\n");
    for n in &net.nodes {
        for (t, v) in n.supply.points() {
            out.push_str(&format!("{} {} {}\n", n.id, num(*t), num(*v)));
        }
    }
    out.push_str(&format!(
        "\n[run]\ndt {}\nhorizon {}\norder {}\noutput_every {}\n",
        num(s.dt),
        num(s.horizon),
        s.order.number(),
        s.output_every
    ));
    out
}
