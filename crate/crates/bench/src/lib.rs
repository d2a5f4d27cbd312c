//! Seeded problem sets for the benchmarks in `benches/`.

use gsom_core::fd::{Commodities, FundamentalDiagram, LinkState};
use gsom_core::interval::{RestrictionInterval, RestrictionMap};
use gsom_core::node::{Downstream, Junction, NodeProblem, NodeProblem2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn junction<R: Rng>(rng: &mut R, m: usize, n: usize, c: usize) -> Junction {
    let mut restrictions = RestrictionMap::new();
    for i in 0..m {
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                let x: f64 = rng.gen_range(0.0..0.5);
                let iv = RestrictionInterval::new(x, x + rng.gen_range(0.0..0.5)).expect("ordered");
                restrictions.insert(i, a, b, iv).expect("distinct outputs");
            }
        }
    }
    let demands: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..c).map(|_| rng.gen_range(1.0..40.0)).collect())
        .collect();
    let splits = (0..m)
        .map(|_| {
            let weights: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..c).map(|_| rng.gen_range(0.1..1.0)).collect())
                .collect();
            (0..n)
                .map(|j| {
                    (0..c)
                        .map(|k| weights[j][k] / weights.iter().map(|w| w[k]).sum::<f64>())
                        .collect()
                })
                .collect()
        })
        .collect();
    Junction {
        capacities: Some(demands.iter().map(|d| d.iter().sum::<f64>() * 1.5).collect()),
        demands,
        splits,
        priorities: (0..m).map(|_| rng.gen_range(0.5..5.0)).collect(),
        restrictions,
    }
}

/// `count` first-order problems with `m` inputs, `n` outputs and `c`
/// commodities under partial FIFO restrictions.
pub fn first_order(count: usize, m: usize, n: usize, c: usize, seed: u64) -> Vec<NodeProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let junction = junction(&mut rng, m, n, c);
            let total: f64 = junction.demands.iter().flatten().sum();
            let supplies = (0..n).map(|_| rng.gen_range(0.1..0.6) * total).collect();
            NodeProblem { junction, supplies }
        })
        .collect()
}

/// Second-order counterparts on Greenshields downstream links.
pub fn second_order(count: usize, m: usize, n: usize, c: usize, seed: u64) -> Vec<NodeProblem2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut junction = junction(&mut rng, m, n, c);
            for row in &mut junction.demands {
                for s in row.iter_mut() {
                    *s *= 10.0;
                }
            }
            if let Some(caps) = &mut junction.capacities {
                for f in caps.iter_mut() {
                    *f *= 10.0;
                }
            }
            let commodities = Commodities::new((0..c).map(|_| rng.gen_range(10.0..40.0)).collect()).expect("positive");
            let outputs = (0..n)
                .map(|_| Downstream {
                    state: LinkState::new((0..c).map(|_| rng.gen_range(0.0..25.0)).collect(), 50.0),
                    fd: FundamentalDiagram::greenshields(100.0),
                })
                .collect();
            NodeProblem2 {
                junction,
                commodities,
                outputs,
                step: 1.0,
            }
        })
        .collect()
}
