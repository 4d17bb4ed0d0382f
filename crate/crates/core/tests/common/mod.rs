#![allow(dead_code)]

use alphabp::model::{Domain, Graph, IsingModel, PairwiseMrf};
use alphabp::randgen::{standard_normal, stream, Purpose};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream(seed, Purpose::Graph, 99)
}

pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|t| (rng.random_range(0..t), t)).collect();
    Graph::new(n, edges).unwrap()
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in s + 1..n {
            if rng.random::<f64>() < p {
                edges.push((s, t));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: f64) -> Graph {
    let tree = random_tree(rng, n);
    let mut edges: Vec<_> = tree.edges().to_vec();
    for s in 0..n {
        for t in s + 1..n {
            if tree.edge_id(s, t).is_none() && rng.random::<f64>() < extra {
                edges.push((s, t));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Log-potentials drawn uniformly from `[-scale, scale]`.
pub fn random_mrf(rng: &mut ChaCha8Rng, graph: Graph, k: usize, scale: f64) -> PairwiseMrf {
    let domain = if k == 2 {
        Domain::binary()
    } else {
        Domain::new((0..k as i64).collect()).unwrap()
    };
    let n = graph.num_nodes();
    let unary: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(-scale..=scale)).collect())
        .collect();
    let pairwise: Vec<Vec<Vec<f64>>> = (0..graph.num_edges())
        .map(|_| {
            (0..k)
                .map(|_| (0..k).map(|_| rng.random_range(-scale..=scale)).collect())
                .collect()
        })
        .collect();
    PairwiseMrf::from_log_potentials(graph, domain, &unary, &pairwise).unwrap()
}

pub fn random_ising(rng: &mut ChaCha8Rng, graph: Graph, sigma: f64) -> IsingModel {
    let n = graph.num_nodes();
    let mut j = DMatrix::zeros(n, n);
    for &(s, t) in graph.edges() {
        let v = sigma * standard_normal(rng);
        j[(s, t)] = v;
        j[(t, s)] = v;
    }
    let b = DVector::from_fn(n, |_, _| sigma * standard_normal(rng));
    IsingModel::new(graph, j, b).unwrap()
}

/// All assignments of `n` variables with `k` states, first variable fastest.
pub fn assignments(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..k.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let x = code % k;
                code /= k;
                x
            })
            .collect()
    })
}

pub fn spins(states: &[usize]) -> Vec<i64> {
    states.iter().map(|&x| if x == 1 { 1 } else { -1 }).collect()
}

/// Brute-force marginals from the linear-scale potentials.
pub fn brute_marginals(mrf: &PairwiseMrf) -> Vec<Vec<f64>> {
    let n = mrf.num_nodes();
    let k = mrf.num_states();
    let mut acc = vec![vec![0.0; k]; n];
    for x in assignments(n, k) {
        let mut w: f64 = (0..n).map(|s| mrf.unary(s, x[s])).product();
        for &(s, t) in mrf.graph().edges() {
            w *= mrf.pairwise(s, t, x[s], x[t]);
        }
        for s in 0..n {
            acc[s][x[s]] += w;
        }
    }
    acc.into_iter()
        .map(|v| {
            let z: f64 = v.iter().sum();
            v.into_iter().map(|a| a / z).collect()
        })
        .collect()
}
