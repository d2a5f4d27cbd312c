//! `gsom`: solve node problems, simulate networks and check solutions.
//!
//! Exit status is 0 on success, 1 for invalid input or a failed check,
//! 2 for numerical failures and 3 for I/O errors.

mod problem;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gsom_core::io::{self, NodeIds};
use gsom_core::{check_first_order, check_second_order, Iteration, NodeSolution2, Order, Tolerances};

use problem::Problem;

#[derive(Parser, Debug)]
#[command(
    name = "gsom",
    version,
    about = "Generic second-order traffic node models on networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print nothing but errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Also print per-iteration or per-step detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one node problem and write flows.csv and trace.csv.
    SolveNode {
        /// A gsom-node file or a scenario with exactly one junction.
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a network simulation and write densities.csv, flows.csv and ledger.csv.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check a node solution against every constraint family.
    Check {
        /// The node problem, as given to solve-node.
        problem: PathBuf,
        /// A solve-node output directory, or its flows.csv.
        solution: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Absolute tolerance, relative to the largest demand or supply.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print the CFL bound of a scenario and test its time step.
    Cfl {
        scenario: PathBuf,
        /// Time step to test instead of the scenario's own.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Validate a scenario or node file without running it.
    Validate { file: PathBuf },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Model order, overriding the file.
    #[arg(long, value_parser = parse_order)]
    order: Option<Order>,
    /// Time step, overriding the scenario.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "GSOM_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

fn parse_order(s: &str) -> std::result::Result<Order, String> {
    s.parse::<u8>()
        .ok()
        .and_then(Order::from_number)
        .ok_or_else(|| format!("order must be 1 or 2, got '{s}'"))
}

struct Printer {
    quiet: bool,
    verbose: bool,
}

impl Printer {
    fn say(&self, text: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", text.as_ref());
        }
    }

    fn detail(&self, text: impl AsRef<str>) {
        if self.verbose {
            println!("{}", text.as_ref());
        }
    }
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = Printer {
        quiet: cli.quiet,
        verbose: cli.verbose > 0,
    };
    match run(cli.command, &out) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<gsom_core::Error>()) {
        Some(err) if err.is_io() => 3,
        Some(err) if err.is_numerical() => 2,
        _ if e.chain().any(|c| c.is::<std::io::Error>()) => 3,
        _ => 1,
    }
}

fn run(command: Command, out: &Printer) -> Result<Status> {
    match command {
        Command::SolveNode { file, run, out: dir } => solve_node(&file, &run, &dir.out, out),
        Command::Simulate {
            scenario,
            run,
            out: dir,
        } => simulate(&scenario, &run, &dir.out, out),
        Command::Check {
            problem,
            solution,
            run,
            tol,
        } => check(&problem, &solution, &run, tol, out),
        Command::Cfl { scenario, dt } => cfl(&scenario, dt, out),
        Command::Validate { file } => validate(&file, out),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| gsom_core::Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    io::write_file(&dir.join(name), contents)?;
    Ok(())
}

fn print_trace(trace: &[Iteration], ids: &NodeIds, out: &Printer) {
    for it in trace {
        let events: Vec<String> = it.events.iter().map(|e| ids.event_text(e)).collect();
        out.detail(format!(
            "iteration {} t={} dt={} events={}",
            it.k,
            it.time,
            it.dt,
            events.join(";")
        ));
        for (j, rec) in it.outputs.iter().enumerate() {
            let supply = rec.supply.map_or_else(|| "-".to_string(), |r| r.to_string());
            out.detail(format!("  {} supply={} rate={}", ids.outputs[j], supply, rec.rate));
        }
    }
}

fn solve_node(file: &Path, run: &RunArgs, dir: &Path, out: &Printer) -> Result<Status> {
    let loaded = problem::load(file, run.order, run.dt)?;
    let ids = &loaded.ids;
    let (flows, trace) = match &loaded.problem {
        Problem::First(p) => {
            let sol = p.solve()?;
            (sol.flows, sol.trace)
        }
        Problem::Second(p) => {
            let sol = p.solve()?;
            write(dir, "densities.csv", &io::node_densities_csv(&sol.densities, ids))?;
            (sol.flows, sol.trace)
        }
    };
    write(dir, "flows.csv", &io::node_flows_csv(&flows, ids))?;
    write(dir, "trace.csv", &io::trace_csv(&trace, ids))?;
    print_trace(&trace, ids, out);
    for (i, j, c, v) in flows.iter() {
        if v > 0.0 {
            out.say(format!(
                "{} -> {} {} {}",
                ids.inputs[i], ids.outputs[j], ids.commodities[c], v
            ));
        }
    }
    out.say(format!("{} iterations, total flow {}", trace.len(), flows.total()));
    Ok(Status::Ok)
}

fn simulate(file: &Path, run: &RunArgs, dir: &Path, out: &Printer) -> Result<Status> {
    let scenario = problem::scenario(file, run.order, run.dt)?;
    let result = gsom_core::network::run(&scenario)?;
    let net = &scenario.network;
    write(dir, "densities.csv", &io::densities_csv(&result, net))?;
    write(dir, "flows.csv", &io::flows_csv(&result, net))?;
    write(dir, "ledger.csv", &io::ledger_csv(&result, net))?;
    for row in &result.ledger {
        out.detail(format!("t={} stored={:?}", row.t, row.stored));
    }
    out.say(format!(
        "{} steps of dt={} to t={}",
        scenario.steps(),
        scenario.dt,
        result.times.last().copied().unwrap_or(0.0)
    ));
    if let Some(last) = result.ledger.last() {
        for (c, id) in net.commodity_ids.iter().enumerate() {
            out.say(format!(
                "{id}: entered {} exited {} stored {}",
                last.entered[c], last.exited[c], last.stored[c]
            ));
        }
    }
    Ok(Status::Ok)
}

fn sibling(dir: &Path, name: &str) -> Option<PathBuf> {
    let p = dir.join(name);
    p.exists().then_some(p)
}

fn read(path: &Path) -> Result<String> {
    Ok(io::read_file(path)?)
}

fn check(problem_path: &Path, solution: &Path, run: &RunArgs, tol: f64, out: &Printer) -> Result<Status> {
    if !(tol > 0.0 && tol.is_finite()) {
        bail!("--tol must be positive");
    }
    let tol = Tolerances {
        absolute: tol,
        proportionality: tol,
    };
    let loaded = problem::load(problem_path, run.order, run.dt)?;
    let ids = &loaded.ids;
    let (dir, flows_path) = if solution.is_dir() {
        (solution.to_path_buf(), solution.join("flows.csv"))
    } else {
        (
            solution.parent().map(Path::to_path_buf).unwrap_or_default(),
            solution.to_path_buf(),
        )
    };
    let label = |p: &Path| p.display().to_string();
    let flows = io::read_flows(&label(&flows_path), &read(&flows_path)?, ids)?;
    let trace = match sibling(&dir, "trace.csv") {
        Some(p) => Some(io::read_trace(&label(&p), &read(&p)?, ids)?),
        None => None,
    };
    let report = match &loaded.problem {
        Problem::First(p) => check_first_order(p, &flows, trace.as_deref(), &tol)?,
        Problem::Second(p) => {
            let path = sibling(&dir, "densities.csv")
                .with_context(|| format!("second-order check needs densities.csv in {}", dir.display()))?;
            let densities = io::read_node_densities(&label(&path), &read(&path)?, ids)?;
            let properties = densities.iter().map(|d| p.commodities.weighted_property(d)).collect();
            let solution = NodeSolution2 {
                flows,
                densities,
                trace: trace.unwrap_or_default(),
                properties,
            };
            check_second_order(p, &solution, &tol)?
        }
    };
    out.say(report.to_string().trim_end());
    Ok(if report.passed() { Status::Ok } else { Status::Failed })
}

fn cfl(file: &Path, dt: Option<f64>, out: &Printer) -> Result<Status> {
    let text = read(file)?;
    let s = io::parse_unvalidated(&file.display().to_string(), &text)?;
    let bound = s.network.cfl_bound();
    let dt = dt.unwrap_or(s.dt);
    let ok = dt > 0.0 && dt <= bound;
    out.say(format!("cfl bound {bound}"));
    out.say(format!("dt {dt} {}", if ok { "ok" } else { "violates the bound" }));
    Ok(if ok { Status::Ok } else { Status::Failed })
}

fn validate(file: &Path, out: &Printer) -> Result<Status> {
    let text = read(file)?;
    let name = file.display().to_string();
    if problem::is_scenario(&text) {
        let s = io::parse_scenario(&name, &text)?;
        let net = &s.network;
        out.say(format!(
            "{name}: ok, {} links, {} nodes, {} commodities, {} steps",
            net.links.len(),
            net.nodes.len(),
            net.commodities.len(),
            s.steps()
        ));
    } else {
        let f = io::parse_node_file(&name, &text)?;
        match f.order {
            Order::First => drop(f.first_order()?),
            Order::Second => drop(f.second_order()?),
        }
        out.say(format!(
            "{name}: ok, {} inputs, {} outputs, {} commodities",
            f.input_ids.len(),
            f.output_ids.len(),
            f.commodity_ids.len()
        ));
    }
    Ok(Status::Ok)
}
