//! Seeded Erdős–Rényi graphs and Gaussian Ising parameters.
//!
//! Every random draw comes from a ChaCha8 stream selected by
//! `(seed, purpose, index)`, so graph and potential sampling never share a
//! stream and each trial of an experiment can be replayed on its own.
//! Gaussian variates use the cosine branch of Box–Muller, one variate per
//! pair of uniforms: `sqrt(-2 ln(1 - u1)) cos(2π u2)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convergence::{certify, theta_from_ising};
use crate::error::{Error, Result};
use crate::inference::AlphaAssignment;
use crate::model::{Graph, IsingModel};

/// Stream selector within a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Graph = 1,
    Potential = 2,
    MessageInit = 3,
    Channel = 4,
    Symbols = 5,
    Noise = 6,
}

/// Independent generator for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 8) | purpose as u64);
    rng
}

/// SplitMix64 finalizer over `seed + (index + 1)·φ`; used to give each
/// trial or retry its own seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub gamma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// Includes each of the `n(n-1)/2` pairs independently with probability
/// `gamma`, visiting pairs in lexicographic order.
pub fn erdos_renyi(spec: &GraphSpec) -> Result<Graph> {
    if !(0.0..=1.0).contains(&spec.gamma) {
        return Err(Error::Parameter(format!(
            "edge probability must lie in [0, 1], got {}",
            spec.gamma
        )));
    }
    let mut rng = stream(spec.seed, Purpose::Graph, 0);
    let mut edges = Vec::new();
    for s in 0..spec.n {
        for t in s + 1..spec.n {
            if rng.random::<f64>() < spec.gamma {
                edges.push((s, t));
            }
        }
    }
    Graph::new(spec.n, edges)
}

/// `J_st ~ N(0, σ²)` on edges, `b_s ~ N(0, (σ/4)²)`, zero diagonal.
///
/// A coupling is drawn for every pair in lexicographic order and kept only
/// where the graph has an edge, so nested graphs sampled from one seed share
/// their common couplings.
pub fn sample_ising(graph: &Graph, spec: &PotentialSpec) -> Result<IsingModel> {
    if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
        return Err(Error::Parameter(format!(
            "sigma must be positive, got {}",
            spec.sigma
        )));
    }
    let n = graph.num_nodes();
    let mut rng = stream(spec.seed, Purpose::Potential, 0);
    let mut j = DMatrix::zeros(n, n);
    for s in 0..n {
        for t in s + 1..n {
            let z = standard_normal(&mut rng);
            if graph.edge_id(s, t).is_some() {
                j[(s, t)] = spec.sigma * z;
                j[(t, s)] = spec.sigma * z;
            }
        }
    }
    let b = DVector::from_fn(n, |_, _| spec.sigma / 4.0 * standard_normal(&mut rng));
    IsingModel::new(graph.clone(), j, b)
}

/// A sample accepted by [`sample_certified`].
#[derive(Debug, Clone)]
pub struct CertifiedSample {
    pub graph: Graph,
    pub model: IsingModel,
    /// Number of rejected draws before this one.
    pub retries: usize,
    pub lambda_star: f64,
}

/// Redraws `(graph, model)` until `λ*(M) < 1` for the broadcast `alpha`.
///
/// Attempt 0 uses the given seeds; attempt `a > 0` uses
/// `derive_seed(seed, a)` for both the graph and the potentials.
pub fn sample_certified(
    graph_spec: &GraphSpec,
    potential_spec: &PotentialSpec,
    alpha: f64,
    max_retries: usize,
) -> Result<CertifiedSample> {
    if max_retries == 0 {
        return Err(Error::Parameter("max_retries must be at least 1".into()));
    }
    let mut last_lambda = f64::NAN;
    for attempt in 0..max_retries {
        let (gs, ps) = if attempt == 0 {
            (*graph_spec, *potential_spec)
        } else {
            let a = attempt as u64;
            (
                GraphSpec {
                    seed: derive_seed(graph_spec.seed, a),
                    ..*graph_spec
                },
                PotentialSpec {
                    seed: derive_seed(potential_spec.seed, a),
                    ..*potential_spec
                },
            )
        };
        let graph = erdos_renyi(&gs)?;
        let model = sample_ising(&graph, &ps)?;
        let cert = certify(
            &theta_from_ising(&model),
            &AlphaAssignment::uniform(&graph, alpha),
            &graph,
        )?;
        last_lambda = cert.lambda_star;
        if cert.theorem1_holds {
            return Ok(CertifiedSample {
                graph,
                model,
                retries: attempt,
                lambda_star: cert.lambda_star,
            });
        }
    }
    Err(Error::SamplingExhausted {
        attempts: max_retries,
        last_lambda,
    })
}

/// Generation parameters recorded alongside a written model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub gamma: f64,
    pub sigma: f64,
    pub seed: u64,
    pub connected: bool,
}
