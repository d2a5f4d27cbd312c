//! CSV result tables for simulations, node solutions and solver traces.
//!
//! Numbers are written with 17 significant digits, so reading a table back
//! gives the same bits. Lists inside a cell are `;`-joined and an absent
//! value is an empty cell.

use crate::error::{Error, Result};
use crate::fd::MiddleState;
use crate::flows::FlowArray;
use crate::network::{Network, SimOutput};
use crate::node::{Event, Iteration, OutputRecord};

use super::text::parse_error;

/// Ids naming the inputs, outputs and commodities of one node problem.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeIds {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub commodities: Vec<String>,
}

impl NodeIds {
    /// `in0, in1, ...`, `out0, ...`, `c0, ...`.
    pub fn numbered(inputs: usize, outputs: usize, commodities: usize) -> Self {
        let ids = |p: &str, k: usize| (0..k).map(|x| format!("{p}{x}")).collect();
        Self {
            inputs: ids("in", inputs),
            outputs: ids("out", outputs),
            commodities: ids("c", commodities),
        }
    }

    pub fn event_text(&self, event: &Event) -> String {
        match *event {
            Event::OutputFilled(j) => format!("fill:{}", self.outputs[j]),
            Event::OutputJammed(j) => format!("jam:{}", self.outputs[j]),
            Event::MovementExhausted(i, j) => format!("exhaust:{}>{}", self.inputs[i], self.outputs[j]),
            Event::TimeLimit(i) => format!("limit:{}", self.inputs[i]),
        }
    }

    pub fn parse_event(&self, text: &str) -> Option<Event> {
        let (kind, rest) = text.split_once(':')?;
        let find = |ids: &[String], x: &str| ids.iter().position(|id| id == x);
        match kind {
            "fill" => find(&self.outputs, rest).map(Event::OutputFilled),
            "jam" => find(&self.outputs, rest).map(Event::OutputJammed),
            "limit" => find(&self.inputs, rest).map(Event::TimeLimit),
            "exhaust" => {
                let (i, j) = rest.split_once('>')?;
                Some(Event::MovementExhausted(
                    find(&self.inputs, i)?,
                    find(&self.outputs, j)?,
                ))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub t: f64,
    pub link: String,
    pub cell: usize,
    pub commodity: String,
    pub value: f64,
}

/// One row of a node flow table.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRow {
    pub input: String,
    pub output: String,
    pub commodity: String,
    pub value: f64,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn list(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(";")
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut push = |r: &[String]| w.write_record(r).expect("writing to memory");
    push(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for r in rows {
        push(&r);
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 fields")
}

pub fn densities_csv(out: &SimOutput, network: &Network) -> String {
    let mut rows = Vec::new();
    for (t, snapshot) in out.times.iter().zip(&out.densities) {
        for (l, cells) in snapshot.iter().enumerate() {
            for (k, cell) in cells.iter().enumerate() {
                for (c, v) in cell.iter().enumerate() {
                    rows.push(vec![
                        num(*t),
                        network.links[l].id.clone(),
                        k.to_string(),
                        network.commodity_ids[c].clone(),
                        num(*v),
                    ]);
                }
            }
        }
    }
    table(&["t", "link", "cell", "commodity", "value"], rows)
}

pub fn flows_csv(out: &SimOutput, network: &Network) -> String {
    let link = |l: Option<usize>| l.map_or_else(|| "-".to_string(), |l| network.links[l].id.clone());
    let rows = out.flows.iter().map(|r| {
        vec![
            num(r.t),
            network.nodes[r.node].id.clone(),
            link(r.input),
            link(r.output),
            network.commodity_ids[r.commodity].clone(),
            num(r.value),
        ]
    });
    table(&["t", "node", "input", "output", "commodity", "value"], rows)
}

pub fn ledger_csv(out: &SimOutput, network: &Network) -> String {
    let mut rows = Vec::new();
    for row in &out.ledger {
        for (c, id) in network.commodity_ids.iter().enumerate() {
            rows.push(vec![
                num(row.t),
                id.clone(),
                num(row.entered[c]),
                num(row.exited[c]),
                num(row.stored[c]),
            ]);
        }
    }
    table(&["t", "commodity", "entered", "exited", "stored"], rows)
}

pub fn node_flows_csv(flows: &FlowArray, ids: &NodeIds) -> String {
    let rows = flows.iter().map(|(i, j, c, v)| {
        vec![
            ids.inputs[i].clone(),
            ids.outputs[j].clone(),
            ids.commodities[c].clone(),
            num(v),
        ]
    });
    table(&["input", "output", "commodity", "value"], rows)
}

pub fn node_densities_csv(densities: &[Vec<f64>], ids: &NodeIds) -> String {
    let mut rows = Vec::new();
    for (j, d) in densities.iter().enumerate() {
        for (c, v) in d.iter().enumerate() {
            rows.push(vec![ids.outputs[j].clone(), ids.commodities[c].clone(), num(*v)]);
        }
    }
    table(&["output", "commodity", "value"], rows)
}

const TRACE_HEADER: [&str; 15] = [
    "k",
    "t",
    "dt",
    "events",
    "finished_inputs",
    "filled_outputs",
    "output",
    "supply",
    "rate",
    "w_minus",
    "v_minus",
    "rho_minus",
    "density",
    "inflow",
    "rates",
];

/// One row per iteration and output; `rates` lists the movement rates
/// into that output, input-major then commodity.
pub fn trace_csv(trace: &[Iteration], ids: &NodeIds) -> String {
    let mut rows = Vec::new();
    for it in trace {
        let events = list(it.events.iter().map(|e| ids.event_text(e)));
        let finished = list(it.finished.iter().map(|&i| ids.inputs[i].clone()));
        let filled = list(it.filled.iter().map(|&j| ids.outputs[j].clone()));
        let (m, _, nc) = it.rates.shape();
        for (j, rec) in it.outputs.iter().enumerate() {
            let mid = rec.middle;
            let rates = (0..m).flat_map(|i| (0..nc).map(move |c| (i, c)));
            rows.push(vec![
                it.k.to_string(),
                num(it.time),
                num(it.dt),
                events.clone(),
                finished.clone(),
                filled.clone(),
                ids.outputs[j].clone(),
                opt(rec.supply),
                num(rec.rate),
                opt(mid.map(|s| s.property)),
                opt(mid.map(|s| s.speed)),
                opt(mid.map(|s| s.density)),
                rec.densities
                    .as_ref()
                    .map(|d| list(d.iter().map(|v| num(*v))))
                    .unwrap_or_default(),
                list(rec.inflow.iter().map(|v| num(*v))),
                list(rates.map(|(i, c)| num(it.rates[(i, j, c)]))),
            ]);
        }
    }
    table(&TRACE_HEADER, rows)
}

/// Parsed CSV records with their line numbers, after checking the header.
struct Records<'a> {
    path: &'a str,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl<'a> Records<'a> {
    fn read(path: &'a str, text: &str, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let got = reader.headers().map_err(|e| parse_error(path, 1, 1, e.to_string()))?;
        if got.iter().ne(header.iter().copied()) {
            return Err(parse_error(
                path,
                1,
                1,
                format!("expected header '{}'", header.join(",")),
            ));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let line = |e: &csv::Error| e.position().map_or(0, |p| p.line() as usize);
            let record = record.map_err(|e| parse_error(path, line(&e), 1, e.to_string()))?;
            let at = record.position().map_or(0, |p| p.line() as usize);
            rows.push((at, record));
        }
        Ok(Self { path, rows })
    }

    fn field<'r>(&self, _line: usize, r: &'r csv::StringRecord, k: usize) -> &'r str {
        r.get(k).unwrap_or("")
    }

    fn error(&self, line: usize, k: usize, message: impl Into<String>) -> Error {
        parse_error(self.path, line, k + 1, message)
    }

    fn number(&self, line: usize, r: &csv::StringRecord, k: usize) -> Result<f64> {
        let text = self.field(line, r, k);
        text.parse()
            .map_err(|_| self.error(line, k, format!("'{text}' is not a number")))
    }

    fn optional(&self, line: usize, r: &csv::StringRecord, k: usize) -> Result<Option<f64>> {
        if self.field(line, r, k).is_empty() {
            Ok(None)
        } else {
            self.number(line, r, k).map(Some)
        }
    }

    fn numbers(&self, line: usize, r: &csv::StringRecord, k: usize) -> Result<Vec<f64>> {
        let text = self.field(line, r, k);
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(';')
            .map(|x| {
                x.parse()
                    .map_err(|_| self.error(line, k, format!("'{x}' is not a number")))
            })
            .collect()
    }

    fn index(&self, line: usize, r: &csv::StringRecord, k: usize, ids: &[String], what: &str) -> Result<usize> {
        let text = self.field(line, r, k);
        ids.iter()
            .position(|x| x == text)
            .ok_or_else(|| self.error(line, k, format!("unknown {what} '{text}'")))
    }

    fn indices(&self, line: usize, r: &csv::StringRecord, k: usize, ids: &[String], what: &str) -> Result<Vec<usize>> {
        let text = self.field(line, r, k);
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(';')
            .map(|x| {
                ids.iter()
                    .position(|id| id == x)
                    .ok_or_else(|| self.error(line, k, format!("unknown {what} '{x}'")))
            })
            .collect()
    }
}

pub fn read_densities(path: &str, text: &str) -> Result<Vec<DensityRow>> {
    let t = Records::read(path, text, &["t", "link", "cell", "commodity", "value"])?;
    t.rows
        .iter()
        .map(|(line, r)| {
            let line = *line;
            let cell = t.field(line, r, 2);
            Ok(DensityRow {
                t: t.number(line, r, 0)?,
                link: t.field(line, r, 1).to_string(),
                cell: cell
                    .parse()
                    .map_err(|_| t.error(line, 2, format!("'{cell}' is not a cell index")))?,
                commodity: t.field(line, r, 3).to_string(),
                value: t.number(line, r, 4)?,
            })
        })
        .collect()
}

/// Reads a node flow table; movements it does not list are zero.
pub fn read_flows(path: &str, text: &str, ids: &NodeIds) -> Result<FlowArray> {
    let t = Records::read(path, text, &["input", "output", "commodity", "value"])?;
    let mut flows = FlowArray::zeros(ids.inputs.len(), ids.outputs.len(), ids.commodities.len());
    for (line, r) in &t.rows {
        let line = *line;
        let i = t.index(line, r, 0, &ids.inputs, "input")?;
        let j = t.index(line, r, 1, &ids.outputs, "output")?;
        let c = t.index(line, r, 2, &ids.commodities, "commodity")?;
        flows[(i, j, c)] = t.number(line, r, 3)?;
    }
    Ok(flows)
}

/// Reads a node density table; every output and commodity must be listed.
pub fn read_node_densities(path: &str, text: &str, ids: &NodeIds) -> Result<Vec<Vec<f64>>> {
    let t = Records::read(path, text, &["output", "commodity", "value"])?;
    let mut out = vec![vec![f64::NAN; ids.commodities.len()]; ids.outputs.len()];
    for (line, r) in &t.rows {
        let line = *line;
        let j = t.index(line, r, 0, &ids.outputs, "output")?;
        let c = t.index(line, r, 1, &ids.commodities, "commodity")?;
        out[j][c] = t.number(line, r, 2)?;
    }
    for (j, row) in out.iter().enumerate() {
        if let Some(c) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::semantic(
                format!("output {}", ids.outputs[j]),
                format!("no density for commodity {}", ids.commodities[c]),
            ));
        }
    }
    Ok(out)
}

pub fn read_flow_rows(path: &str, text: &str) -> Result<Vec<FlowRow>> {
    let t = Records::read(path, text, &["input", "output", "commodity", "value"])?;
    t.rows
        .iter()
        .map(|(line, r)| {
            Ok(FlowRow {
                input: t.field(*line, r, 0).to_string(),
                output: t.field(*line, r, 1).to_string(),
                commodity: t.field(*line, r, 2).to_string(),
                value: t.number(*line, r, 3)?,
            })
        })
        .collect()
}

pub fn read_trace(path: &str, text: &str, ids: &NodeIds) -> Result<Vec<Iteration>> {
    let t = Records::read(path, text, &TRACE_HEADER)?;
    let (m, n, nc) = (ids.inputs.len(), ids.outputs.len(), ids.commodities.len());
    let mut trace: Vec<Iteration> = Vec::new();
    for (line, r) in &t.rows {
        let line = *line;
        let kf = t.field(line, r, 0);
        let k: usize = kf
            .parse()
            .map_err(|_| t.error(line, 0, format!("'{kf}' is not an iteration")))?;
        if trace.last().is_none_or(|it| it.k != k) {
            let events = t.field(line, r, 3);
            let events = if events.is_empty() {
                Vec::new()
            } else {
                events
                    .split(';')
                    .map(|e| {
                        ids.parse_event(e)
                            .ok_or_else(|| t.error(line, 3, format!("unrecognized event '{e}'")))
                    })
                    .collect::<Result<_>>()?
            };
            trace.push(Iteration {
                k,
                time: t.number(line, r, 1)?,
                dt: t.number(line, r, 2)?,
                rates: FlowArray::zeros(m, n, nc),
                events,
                finished: t.indices(line, r, 4, &ids.inputs, "input")?,
                filled: t.indices(line, r, 5, &ids.outputs, "output")?,
                outputs: Vec::new(),
            });
        }
        let it = trace.last_mut().expect("pushed above");
        let j = t.index(line, r, 6, &ids.outputs, "output")?;
        if j != it.outputs.len() {
            return Err(t.error(
                line,
                6,
                format!(
                    "expected output '{}'",
                    ids.outputs.get(it.outputs.len()).map_or("", |s| s)
                ),
            ));
        }
        let middle = match (
            t.optional(line, r, 9)?,
            t.optional(line, r, 10)?,
            t.optional(line, r, 11)?,
        ) {
            (Some(property), Some(speed), Some(density)) => Some(MiddleState {
                property,
                speed,
                density,
            }),
            (None, None, None) => None,
            _ => return Err(t.error(line, 9, "middle state needs w, v and rho together")),
        };
        let densities = t.numbers(line, r, 12)?;
        let inflow = t.numbers(line, r, 13)?;
        let rates = t.numbers(line, r, 14)?;
        if inflow.len() != nc {
            return Err(t.error(line, 13, format!("expected {nc} inflow values")));
        }
        if rates.len() != m * nc {
            return Err(t.error(line, 14, format!("expected {} rate values", m * nc)));
        }
        for (x, v) in rates.into_iter().enumerate() {
            it.rates[(x / nc, j, x % nc)] = v;
        }
        it.outputs.push(OutputRecord {
            supply: t.optional(line, r, 7)?,
            rate: t.number(line, r, 8)?,
            inflow,
            middle,
            densities: (!densities.is_empty()).then_some(densities),
        });
    }
    if let Some(it) = trace.iter().find(|it| it.outputs.len() != n) {
        return Err(Error::semantic(
            "trace",
            format!("iteration {} lists {} of {n} outputs", it.k, it.outputs.len()),
        ));
    }
    Ok(trace)
}
