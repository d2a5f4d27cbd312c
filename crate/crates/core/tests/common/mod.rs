#![allow(dead_code, clippy::needless_range_loop)]

use gsom_core::fd::{Commodities, FundamentalDiagram, LinkState};
use gsom_core::interval::{RestrictionInterval, RestrictionMap};
use gsom_core::node::{Downstream, Junction, NodeProblem, NodeProblem2};
use rand::Rng;

fn round(x: f64) -> f64 {
    (x * 4.0).round() / 4.0
}

fn splits<R: Rng>(rng: &mut R, n: usize, c: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; c]; n];
    for cc in 0..c {
        let weights: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(0.1..1.0)
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            out[rng.gen_range(0..n)][cc] = 1.0;
            continue;
        }
        for j in 0..n {
            out[j][cc] = weights[j] / total;
        }
    }
    out
}

fn restrictions<R: Rng>(rng: &mut R, m: usize, n: usize) -> RestrictionMap {
    let mut map = RestrictionMap::new();
    let mode = rng.gen_range(0..3);
    for i in 0..m {
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                let iv = match mode {
                    0 => continue,
                    1 => RestrictionInterval::FULL,
                    _ => {
                        if rng.gen_bool(0.4) {
                            continue;
                        }
                        let x: f64 = rng.gen_range(0.0..1.0);
                        let y: f64 = rng.gen_range(0.0..1.0);
                        RestrictionInterval::new(x.min(y), x.max(y)).unwrap()
                    }
                };
                map.insert(i, a, b, iv).unwrap();
            }
        }
    }
    map
}

pub fn junction<R: Rng>(rng: &mut R, m: usize, n: usize, c: usize) -> Junction {
    let demands: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..c)
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        0.0
                    } else {
                        round(rng.gen_range(0.0..40.0))
                    }
                })
                .collect()
        })
        .collect();
    let capacities = rng.gen_bool(0.5).then(|| {
        demands
            .iter()
            .map(|d| d.iter().sum::<f64>() * rng.gen_range(1.0..2.0))
            .collect()
    });
    Junction {
        splits: (0..m).map(|_| splits(rng, n, c)).collect(),
        priorities: (0..m).map(|_| round(rng.gen_range(0.25..5.0))).collect(),
        capacities,
        restrictions: restrictions(rng, m, n),
        demands,
    }
}

pub fn first_order<R: Rng>(rng: &mut R) -> NodeProblem {
    let m = rng.gen_range(1..=4);
    let n = rng.gen_range(1..=4);
    let c = rng.gen_range(1..=3);
    let junction = junction(rng, m, n, c);
    let supplies = (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => f64::INFINITY,
            _ => round(rng.gen_range(0.0..60.0)),
        })
        .collect();
    NodeProblem { junction, supplies }
}

pub fn second_order<R: Rng>(rng: &mut R) -> NodeProblem2 {
    let m = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=3);
    let c = rng.gen_range(1..=3);
    let commodities = Commodities::new((0..c).map(|_| round(rng.gen_range(10.0..40.0))).collect()).unwrap();
    let fd = FundamentalDiagram::greenshields(100.0);
    let mut junction = junction(rng, m, n, c);
    // demands in the range a step can deliver against a supply of a few hundred
    for row in &mut junction.demands {
        for s in row.iter_mut() {
            *s *= 10.0;
        }
    }
    junction.capacities = Some(
        junction
            .demands
            .iter()
            .map(|d| d.iter().sum::<f64>() * rng.gen_range(1.0..2.0))
            .collect(),
    );
    let outputs = (0..n)
        .map(|_| {
            let mut densities = vec![0.0; c];
            if !rng.gen_bool(0.2) {
                let total = rng.gen_range(0.0..100.0);
                let shares: Vec<f64> = (0..c).map(|_| rng.gen_range(0.0..1.0)).collect();
                let sum: f64 = shares.iter().sum::<f64>().max(1e-9);
                for (d, s) in densities.iter_mut().zip(&shares) {
                    *d = total * s / sum;
                }
            }
            Downstream {
                state: LinkState::new(densities, rng.gen_range(1.0..20.0)),
                fd: fd.clone(),
            }
        })
        .collect();
    NodeProblem2 {
        junction,
        commodities,
        outputs,
        step: 1.0,
    }
}

/// A random scenario file: a chain of junctions with optional on- and
/// off-ramps, random diagrams, splits, restrictions and initial states.
pub fn scenario_text<R: Rng>(rng: &mut R, order: u8) -> String {
    use std::fmt::Write;
    let nc = rng.gen_range(1..=3);
    let ws: Vec<f64> = (0..nc).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut s = String::from("gsom-scenario 1\n[commodities]\n");
    for (c, w) in ws.iter().enumerate() {
        writeln!(s, "c{c} {w}").unwrap();
    }
    s.push_str("[diagrams]\ngs greenshields 1\n");
    let (x, y) = (rng.gen_range(0.2..0.5), rng.gen_range(0.55..0.9));
    let (x2, y2) = (rng.gen_range(0.6..0.9), rng.gen_range(0.05..0.5));
    writeln!(s, "tb table {} {x}:{y} {x2}:{y2}", rng.gen_range(0.5..2.0)).unwrap();

    let k = rng.gen_range(1..=3);
    let mut links: Vec<(String, String, String)> = Vec::new();
    let mut sources = 1;
    let mut sinks = 1;
    links.push(("l0".into(), "s0".into(), "j0".into()));
    let mut outs = vec![1usize; k];
    for j in 0..k {
        if rng.gen_bool(0.5) {
            links.push((format!("l{}", links.len()), format!("s{sources}"), format!("j{j}")));
            sources += 1;
        }
        if rng.gen_bool(0.5) {
            links.push((format!("l{}", links.len()), format!("j{j}"), format!("t{sinks}")));
            sinks += 1;
            outs[j] += 1;
        }
        let to = if j + 1 < k { format!("j{}", j + 1) } else { "t0".into() };
        links.push((format!("l{}", links.len()), format!("j{j}"), to));
    }

    s.push_str("[links]\n");
    let mut cells = Vec::new();
    for (id, from, to) in &links {
        let n = rng.gen_range(1..=6);
        cells.push(n);
        let diagram = if rng.gen_bool(0.7) { "gs" } else { "tb" };
        let cap = if rng.gen_bool(0.2) {
            format!(" {}", rng.gen_range(0.05..0.5))
        } else {
            String::new()
        };
        writeln!(
            s,
            "{id} {from} {to} {} {n} {diagram}{cap}",
            rng.gen_range(2.0..10.0) * n as f64
        )
        .unwrap();
    }

    s.push_str("[priorities]\n");
    for (id, _, to) in &links {
        if to.starts_with('j') && rng.gen_bool(0.5) {
            writeln!(s, "{to} {id} {}", rng.gen_range(0.5..3.0)).unwrap();
        }
    }
    s.push_str("[splits]\n[restrictions]\n");
    let mut splits = String::new();
    let mut restrictions = String::new();
    for j in 0..k {
        if outs[j] < 2 {
            continue;
        }
        let node = format!("j{j}");
        let ins: Vec<&String> = links.iter().filter(|l| l.2 == node).map(|l| &l.0).collect();
        let outl: Vec<&String> = links.iter().filter(|l| l.1 == node).map(|l| &l.0).collect();
        for i in &ins {
            for c in 0..nc {
                let b: f64 = rng.gen_range(0.0..1.0);
                writeln!(splits, "{node} {i} {} c{c} {b}", outl[0]).unwrap();
                writeln!(splits, "{node} {i} {} c{c} {}", outl[1], 1.0 - b).unwrap();
            }
            if rng.gen_bool(0.5) {
                let (a, z) = (rng.gen_range(0.0..0.5), rng.gen_range(0.5..1.0));
                writeln!(restrictions, "{node} {i} {} {} {a} {z}", outl[0], outl[1]).unwrap();
            }
        }
    }
    s = s.replace(
        "[splits]\n[restrictions]\n",
        &format!("[splits]\n{splits}[restrictions]\n{restrictions}"),
    );

    s.push_str("[initial]\n");
    for ((id, _, _), n) in links.iter().zip(&cells) {
        for cell in 0..*n {
            if rng.gen_bool(0.6) {
                // the table diagram may have a jam density as low as 0.5
                let total = rng.gen_range(0.0..0.45);
                let c = rng.gen_range(0..nc);
                writeln!(s, "{id} {cell} c{c} {total}").unwrap();
            }
        }
    }
    s.push_str("[demand]\n");
    for src in 0..sources {
        for c in 0..nc {
            writeln!(s, "s{src} c{c} 0 {}", rng.gen_range(0.0..0.2)).unwrap();
            if rng.gen_bool(0.3) {
                writeln!(
                    s,
                    "s{src} c{c} {} {}",
                    rng.gen_range(1.0..20.0),
                    rng.gen_range(0.0..0.2)
                )
                .unwrap();
            }
        }
    }
    s.push_str("[supply]\n");
    for t in 0..sinks {
        if rng.gen_bool(0.5) {
            writeln!(s, "t{t} 0 {}", rng.gen_range(0.0..0.3)).unwrap();
        }
    }
    writeln!(
        s,
        "[run]\nhorizon {}\norder {order}\noutput_every {}",
        rng.gen_range(5.0..40.0),
        rng.gen_range(1..4)
    )
    .unwrap();
    s
}
