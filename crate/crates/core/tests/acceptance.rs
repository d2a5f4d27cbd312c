//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::fmt::Write as _;
use std::time::Instant;

use gsom_core::checker::{check_first_order, Family, Tolerances};
use gsom_core::fd::{supply_1to1, Commodities};
use gsom_core::interval::RestrictionMap;
use gsom_core::io::parse_scenario;
use gsom_core::network::{run, Scenario, Simulator};
use gsom_core::node::{Event, Junction, NodeProblem, NodeProblem2};
use gsom_core::{Error, FlowArray};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Iteration counts seen across every random corpus.
#[derive(Default)]
struct Bound {
    runs: usize,
    over: usize,
    nonterminating: usize,
    worst_ratio: f64,
}

impl Bound {
    fn record(&mut self, m: usize, n: usize, iterations: usize) {
        let bound = m * n + m + n;
        self.runs += 1;
        self.over += usize::from(iterations > bound);
        self.worst_ratio = self.worst_ratio.max(iterations as f64 / bound as f64);
    }

    fn failed<T>(&mut self, r: &gsom_core::Result<T>) {
        if matches!(r, Err(Error::NonTermination { .. })) {
            self.nonterminating += 1;
        }
    }
}

fn scale(p: &Junction) -> f64 {
    p.demands.iter().flatten().fold(1.0f64, |a, &b| a.max(b))
}

fn oracle_first_order(bound: &mut Bound) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut failures, mut errors) = (0, 0);
    let n = 1000;
    for _ in 0..n {
        let p = common::first_order(&mut rng);
        let sol = p.solve();
        bound.failed(&sol);
        let Ok(sol) = sol else {
            errors += 1;
            continue;
        };
        bound.record(p.junction.inputs(), p.junction.outputs(), sol.trace.len());
        let report = check_first_order(&p, &sol.flows, Some(&sol.trace), &Tolerances::default());
        if !report.is_ok_and(|r| r.passed()) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && errors == 0 && secs < 10.0,
        format!("{n} problems, {failures} failed checks, {errors} solver errors, {secs:.2} s"),
    )
}

fn single(demands: Vec<f64>, splits: Vec<Vec<f64>>, supplies: Vec<f64>, fifo: bool) -> NodeProblem {
    let m = demands.len();
    let n = supplies.len();
    let mut restrictions = RestrictionMap::new();
    if fifo {
        restrictions = RestrictionMap::full_fifo(m, n);
    }
    NodeProblem {
        junction: Junction {
            demands: demands.into_iter().map(|s| vec![s]).collect(),
            splits: splits
                .into_iter()
                .map(|row| row.into_iter().map(|b| vec![b]).collect())
                .collect(),
            priorities: vec![1.0; m],
            capacities: None,
            restrictions,
        },
        supplies,
    }
}

fn flows(rows: &[&[f64]]) -> FlowArray {
    let mut f = FlowArray::zeros(rows.len(), rows[0].len(), 1);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            f[(i, j, 0)] = *v;
        }
    }
    f
}

fn analytic_cases() -> Outcome {
    let cases = [
        (
            "1x1",
            single(vec![10.0], vec![vec![1.0]], vec![4.0], false),
            flows(&[&[4.0]]),
        ),
        (
            "merge",
            single(vec![3.0, 10.0], vec![vec![1.0], vec![1.0]], vec![12.0], false),
            flows(&[&[3.0], &[9.0]]),
        ),
        (
            "fifo-diverge",
            single(vec![10.0], vec![vec![0.5, 0.5]], vec![2.0, 10.0], true),
            flows(&[&[2.0, 2.0]]),
        ),
    ];
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for (name, p, expected) in &cases {
        let diff = p.solve().map_or(f64::INFINITY, |s| s.flows.max_abs_diff(expected));
        worst = worst.max(diff);
        let _ = write!(detail, "{name} {diff:.1e} ");
    }
    outcome(worst <= 1e-12, format!("{}(limit 1e-12)", detail))
}

fn supply_constrained_merge<R: Rng>(rng: &mut R) -> NodeProblem {
    loop {
        let m = rng.gen_range(2..=4);
        let c = rng.gen_range(1..=3);
        let mut junction = common::junction(rng, m, 1, c);
        junction.capacities = None;
        for row in &mut junction.demands {
            for s in row.iter_mut() {
                *s += 1.0;
            }
        }
        let total: f64 = junction.demands.iter().flatten().sum();
        let p = NodeProblem {
            junction,
            supplies: vec![total * rng.gen_range(0.05..0.5)],
        };
        let sol = p.solve().expect("valid merge");
        let constrained = (0..m).all(|i| sol.flows.input_total(i) < p.junction.input_demand(i) - 1e-9);
        if constrained {
            return p;
        }
    }
}

fn invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = supply_constrained_merge(&mut rng);
        let base = p.solve().unwrap().flows;
        for lambda in [2.0, 10.0] {
            let mut q = p.clone();
            for row in &mut q.junction.demands {
                for s in row.iter_mut() {
                    *s *= lambda;
                }
            }
            worst = worst.max(q.solve().unwrap().flows.max_abs_diff(&base));
        }
    }
    outcome(
        worst <= 1e-9,
        format!("100 merges, lambda 2 and 10, worst change {worst:.2e} (limit 1e-9)"),
    )
}

/// Downstream links long enough that one step cannot jam them before
/// their supply binds.
fn second_order_cfl<R: Rng>(rng: &mut R, p: &mut NodeProblem2) {
    let w = p.commodities.max_property();
    for d in &mut p.outputs {
        d.state.length = w * p.step * rng.gen_range(1.0..20.0);
    }
}

fn second_order_reduction(bound: &mut Bound) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut errors) = (0.0f64, 0);
    for _ in 0..200 {
        let mut p = common::second_order(&mut rng);
        let w = (rng.gen_range(10.0f64..40.0) * 4.0).round() / 4.0;
        p.commodities = Commodities::new(vec![w; p.commodities.len()]).unwrap();
        second_order_cfl(&mut rng, &mut p);
        let sol = p.solve();
        bound.failed(&sol);
        let Ok(sol) = sol else {
            errors += 1;
            continue;
        };
        bound.record(p.junction.inputs(), p.junction.outputs(), sol.trace.len());
        let supplies = p
            .outputs
            .iter()
            .map(|d| supply_1to1(w, &d.state, &p.commodities, &d.fd).unwrap() * p.step)
            .collect();
        let first = NodeProblem {
            junction: p.junction.clone(),
            supplies,
        };
        let f1 = first.solve().unwrap().flows;
        worst = worst.max(sol.flows.max_abs_diff(&f1) / scale(&p.junction));
    }
    outcome(
        worst <= 1e-9 && errors == 0,
        format!("200 problems, worst relative difference {worst:.2e} (limit 1e-9), {errors} errors"),
    )
}

fn one_to_one(bound: &mut Bound) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut errors) = (0.0f64, 0);
    let mut binding = 0;
    for _ in 0..200 {
        let mut p = loop {
            let p = common::second_order(&mut rng);
            if p.junction.inputs() == 1 && p.junction.outputs() == 1 {
                break p;
            }
        };
        second_order_cfl(&mut rng, &mut p);
        let sol = p.solve();
        bound.failed(&sol);
        let Ok(sol) = sol else {
            errors += 1;
            continue;
        };
        bound.record(1, 1, sol.trace.len());
        let s = p.junction.input_demand(0);
        let expected = match p.commodities.weighted_property(&p.junction.demands[0]) {
            Some(w) => {
                let d = &p.outputs[0];
                let r = supply_1to1(w, &d.state, &p.commodities, &d.fd).unwrap() * p.step;
                binding += usize::from(r < s);
                s.min(r)
            }
            None => 0.0,
        };
        worst = worst.max((sol.flows.total() - expected).abs() / s.max(1.0));
    }
    outcome(
        worst <= 1e-9 && errors == 0,
        format!("200 problems ({binding} supply-bound), worst relative difference {worst:.2e} (limit 1e-9)"),
    )
}

fn supply_direction() -> Outcome {
    let f = gsom_core::io::parse_node_file("truck_merge.node", include_str!("../../../demos/truck_merge.node"))
        .expect("demo file parses");
    let sol = f.second_order().unwrap().solve().unwrap();
    let k = sol
        .trace
        .iter()
        .position(|it| it.events.contains(&Event::MovementExhausted(0, 0)));
    let supply = |k: usize| sol.trace.get(k).and_then(|it| it.outputs[0].supply);
    match k.and_then(|k| Some((supply(k)?, supply(k + 1)?))) {
        Some((before, after)) => outcome(
            after > before,
            format!("R before truck exhaustion {before:.4}, after {after:.4}"),
        ),
        None => outcome(false, "no truck exhaustion with a following iteration"),
    }
}

fn termination(bound: &Bound) -> Outcome {
    outcome(
        bound.over == 0 && bound.nonterminating == 0 && bound.runs > 0,
        format!(
            "{} solves, {} over M*N+M+N, {} non-terminating, worst iterations/bound {:.2}",
            bound.runs, bound.over, bound.nonterminating, bound.worst_ratio
        ),
    )
}

fn property_totals(s: &Scenario, vehicles: &[f64]) -> f64 {
    vehicles
        .iter()
        .zip(s.network.commodities.properties())
        .map(|(v, w)| v * w)
        .sum()
}

fn network_conservation() -> Outcome {
    let s = parse_scenario("corridor.scn", include_str!("../../../demos/corridor.scn")).expect("demo scenario");
    let started = Instant::now();
    let out = run(&s).unwrap();
    let secs = started.elapsed().as_secs_f64();

    let mut sim = Simulator::new(&s).unwrap();
    let initial = sim.stored();
    let mut range_violations = 0;
    for _ in 0..s.steps() {
        sim.step().unwrap();
        for (l, cells) in sim.densities.iter().enumerate() {
            let rho_max = s.network.diagram(l).jam_density();
            for cell in cells {
                let total: f64 = cell.iter().sum();
                if cell.iter().any(|&r| r < 0.0) || total > rho_max * (1.0 + 1e-12) {
                    range_violations += 1;
                }
            }
        }
    }
    let last = out.ledger.last().unwrap();
    let mut worst = 0.0f64;
    for (c, start) in initial.iter().enumerate() {
        let residual = start + last.entered[c] - last.exited[c] - last.stored[c];
        worst = worst.max(residual.abs() / (start + last.entered[c]).max(1e-300));
    }
    let before = property_totals(&s, &initial) + property_totals(&s, &last.entered);
    let after = property_totals(&s, &last.exited) + property_totals(&s, &last.stored);
    let prop = (before - after).abs() / before;
    let steps = s.steps();
    outcome(
        worst <= 1e-9 && prop <= 1e-9 && range_violations == 0 && secs < 5.0 && steps == 1000,
        format!(
            "{steps} steps, vehicle residual {worst:.1e}, property residual {prop:.1e}, \
             {range_violations} density range violations, {secs:.2} s"
        ),
    )
}

/// Position where `field` first crosses `level` between cell centres.
fn crossing(field: &[f64], level: f64, dx: f64) -> Option<f64> {
    field.windows(2).enumerate().find_map(|(k, w)| {
        let (a, b) = (w[0] - level, w[1] - level);
        (a * b <= 0.0 && a != b).then(|| (k as f64 + 0.5 + a / (a - b)) * dx)
    })
}

fn single_link(commodities: &str, cells: &str, demand: &str, supply: &str, horizon: f64) -> Scenario {
    let text = format!(
        "gsom-scenario 1\n[commodities]\n{commodities}[diagrams]\ngs greenshields 100\n\
         [links]\nroad s t 2000 200 gs\n[initial]\n{cells}[demand]\n{demand}[supply]\n{supply}\
         [run]\nhorizon {horizon}\norder 2\noutput_every 1000000\n"
    );
    parse_scenario("riemann", &text).expect("riemann scenario")
}

fn shock_speed() -> Outcome {
    // free 20 veh/km at w = 30 behind a jam; shock speed (0 - 480) / (100 - 20)
    let horizon = 100.0;
    let s = single_link(
        "car 30\n",
        "road 0:99 car 20\nroad 100:199 car 100\n",
        "s car 0 480\n",
        "t 0 0\n",
        horizon,
    );
    let out = run(&s).unwrap();
    let last = out.densities.last().unwrap();
    let rho: Vec<f64> = last[0].iter().map(|c| c.iter().sum()).collect();
    let dx = 10.0;
    let expected = 1000.0 + (0.0 - 480.0) / (100.0 - 20.0) * out.times.last().unwrap();
    match crossing(&rho, 60.0, dx) {
        Some(x) => outcome(
            (x - expected).abs() <= dx,
            format!(
                "shock at {x:.2}, Rankine-Hugoniot {expected:.2}, error {:.2} (limit one cell, {dx})",
                (x - expected).abs()
            ),
        ),
        None => outcome(false, "no shock found"),
    }
}

fn contact_speed() -> Outcome {
    // same density 30, w = 30 behind w = 25; the w front moves with the
    // downstream speed V(30, 25) = 17.5
    let s = single_link(
        "fast 30\nslow 25\n",
        "road 0:39 fast 30\nroad 40:199 slow 30\n",
        "s fast 0 630\ns slow 0 0\n",
        "",
        40.0,
    );
    let mut sim = Simulator::new(&s).unwrap();
    let dx = 10.0;
    let front = |sim: &Simulator| {
        let w: Vec<f64> = sim.densities[0]
            .iter()
            .map(|c| (30.0 * c[0] + 25.0 * c[1]) / (c[0] + c[1]))
            .collect();
        crossing(&w, 27.5, dx)
    };
    let mut samples = Vec::new();
    for step in 1..=s.steps() {
        sim.step().unwrap();
        if step == s.steps() / 4 || step == s.steps() {
            samples.push((sim.time, front(&sim)));
        }
    }
    let v = 25.0 * (1.0 - 30.0 / 100.0);
    match samples[..] {
        [(t0, Some(x0)), (t1, Some(x1))] => {
            let measured = (x1 - x0) / (t1 - t0);
            let rel = (measured - v).abs() / v;
            outcome(
                rel <= 0.05,
                format!(
                    "front speed {measured:.3}, V = {v:.3}, error {:.2}% (limit 5%)",
                    rel * 100.0
                ),
            )
        }
        _ => outcome(false, "front not found"),
    }
}

fn mutations() -> Outcome {
    let one = |f: f64| (single(vec![10.0], vec![vec![1.0]], vec![4.0], false), flows(&[&[f]]));
    let mut cases: Vec<(Family, NodeProblem, FlowArray)> = Vec::new();

    let (p, _) = one(0.0);
    let d = single(vec![10.0], vec![vec![0.5, 0.5]], vec![10.0, 10.0], false);
    cases.push((Family::Nonnegativity, d, flows(&[&[5.0, -0.5]])));
    let mut unlimited = p.clone();
    unlimited.supplies = vec![f64::INFINITY];
    cases.push((Family::Demand, unlimited, flows(&[&[11.0]])));
    cases.push((Family::Supply, p.clone(), flows(&[&[5.0]])));

    let two = NodeProblem {
        junction: Junction {
            demands: vec![vec![6.0, 2.0]],
            splits: vec![vec![vec![1.0, 1.0]]],
            priorities: vec![1.0],
            capacities: None,
            restrictions: RestrictionMap::new(),
        },
        supplies: vec![4.0],
    };
    let mut swapped = FlowArray::zeros(1, 1, 2);
    swapped[(0, 0, 0)] = 1.0;
    swapped[(0, 0, 1)] = 3.0;
    cases.push((Family::Proportionality, two, swapped));

    let fifo = single(vec![10.0], vec![vec![0.5, 0.5]], vec![2.0, 10.0], true);
    cases.push((Family::Fifo, fifo, flows(&[&[2.0, 3.0]])));
    let merge = single(vec![10.0, 10.0], vec![vec![1.0], vec![1.0]], vec![12.0], false);
    cases.push((Family::Scir, merge, flows(&[&[8.0], &[4.0]])));
    cases.push((Family::Activity, p, flows(&[&[0.0]])));

    let mut missed = Vec::new();
    for (family, problem, mutated) in &cases {
        let exact = problem.solve().unwrap();
        let clean = check_first_order(problem, &exact.flows, Some(&exact.trace), &Tolerances::default()).unwrap();
        let report = check_first_order(problem, mutated, None, &Tolerances::default()).unwrap();
        if !clean.passed() || report.family(*family).pass {
            missed.push(family.name());
        }
    }
    outcome(
        missed.is_empty(),
        format!(
            "{} mutations flagged by their family, missed: [{}]",
            cases.len() - missed.len(),
            missed.join(", ")
        ),
    )
}

fn main() {
    let mut bound = Bound::default();
    let results = [
        ("first-order oracle agreement", oracle_first_order(&mut bound)),
        ("analytic merges and diverges", analytic_cases()),
        ("invariance principle", invariance()),
        ("second-order reduction", second_order_reduction(&mut bound)),
        ("1-to-1 equivalence", one_to_one(&mut bound)),
        ("supply recomputation direction", supply_direction()),
        ("termination bound", termination(&bound)),
        ("network conservation", network_conservation()),
        ("shock speed", shock_speed()),
        ("contact advection", contact_speed()),
        ("checker mutation robustness", mutations()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {:<32} {}  {}",
            k + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
