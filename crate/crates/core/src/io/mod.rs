//! Scenario and node-problem files, and CSV result tables.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fd::{FundamentalDiagram, PiecewiseLinear};

pub mod csv;
pub mod node_file;
pub mod scenario;
pub mod text;

pub use self::csv::{
    densities_csv, flows_csv, ledger_csv, node_densities_csv, node_flows_csv, read_densities, read_flow_rows,
    read_flows, read_node_densities, read_trace, trace_csv, DensityRow, FlowRow, NodeIds,
};
pub use node_file::{load_node_file, parse_node_file, NodeFile};
pub use scenario::{load_scenario, parse_scenario, parse_unvalidated, write_scenario};

use text::{format_number, Document, Row};

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// A diagram row: `id greenshields RHO_MAX` or `id table RHO_MAX x:phi ...`.
fn parse_diagram(doc: &Document, row: &Row) -> Result<FundamentalDiagram> {
    if row.fields.len() < 3 {
        return Err(doc.error(row, row.fields.len(), "expected 'id family rho_max [x:phi ...]'"));
    }
    let rho_max = doc.number(row, 2)?;
    if rho_max <= 0.0 {
        return Err(doc.error(row, 2, "jam density must be positive"));
    }
    match doc.str(row, 1) {
        "greenshields" => {
            doc.arity(row, 3, 3)?;
            Ok(FundamentalDiagram::greenshields(rho_max))
        }
        "table" => {
            let mut points = Vec::new();
            for k in 3..row.fields.len() {
                let text = doc.str(row, k);
                let pair = text
                    .split_once(':')
                    .and_then(|(x, y)| Some((x.parse::<f64>().ok()?, y.parse::<f64>().ok()?)))
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .ok_or_else(|| doc.error(row, k, format!("'{text}' is not an x:phi pair")))?;
                points.push(pair);
            }
            PiecewiseLinear::new(rho_max, &points)
                .map(FundamentalDiagram::Table)
                .map_err(|e| doc.error(row, 3, e.to_string()))
        }
        other => Err(doc.error(row, 1, format!("unknown diagram family '{other}'"))),
    }
}

fn format_diagram(fd: &FundamentalDiagram) -> String {
    match fd {
        FundamentalDiagram::Greenshields(g) => format!("greenshields {}", format_number(g.rho_max)),
        FundamentalDiagram::Table(t) => {
            let pts = t.points();
            let mut out = format!("table {}", format_number(fd.jam_density()));
            for (x, y) in &pts[1..pts.len() - 1] {
                out.push_str(&format!(" {}:{}", format_number(*x), format_number(*y)));
            }
            out
        }
    }
}

/// Looks up an id, reporting an unknown one at its field.
fn lookup(doc: &Document, row: &Row, k: usize, ids: &[String], what: &str) -> Result<usize> {
    let id = doc.str(row, k);
    ids.iter()
        .position(|x| x == id)
        .ok_or_else(|| doc.error(row, k, format!("unknown {what} '{id}'")))
}

/// Registers a new id, rejecting duplicates.
fn declare(doc: &Document, row: &Row, ids: &mut Vec<String>, what: &str) -> Result<()> {
    let id = doc.str(row, 0);
    if id.contains([',', ';', ':', '>', '"']) {
        return Err(doc.error(row, 0, format!("id '{id}' may not contain , ; : > or \"")));
    }
    if ids.iter().any(|x| x == id) {
        return Err(doc.error(row, 0, format!("duplicate {what} '{id}'")));
    }
    ids.push(id.to_string());
    Ok(())
}
