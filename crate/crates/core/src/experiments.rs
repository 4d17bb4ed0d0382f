//! Synthetic-graph experiments: certificate sweeps over the potential scale
//! and message-error trajectories.

use rayon::prelude::*;
use serde::Serialize;

use crate::convergence::{certify, theta_from_ising};
use crate::error::{Error, Result};
use crate::inference::{alpha_bp_step, init_messages, AlphaAssignment, MessageState};
use crate::model::{ising_to_mrf, IsingModel};
use crate::randgen::{
    derive_seed, erdos_renyi, sample_certified, sample_ising, GraphSpec, PotentialSpec,
};

/// Default number of nodes for the synthetic experiments.
pub const DEFAULT_NODES: usize = 16;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: usize,
    pub gammas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub trials: usize,
    pub lambda_mean: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Standard error of the mean.
    pub lambda_se: f64,
}

/// Seed of trial `k`; both the graph and the potentials derive from it.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64)
}

/// Mean, min and max of `λ*` per `(γ, α, σ)`, rows ordered by γ, then α,
/// then σ. Trial `k` reuses the same uniforms at every grid point, so the
/// curves are paired across `γ` and `σ`.
pub fn sweep_sigma(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.gammas.is_empty() || config.alphas.is_empty() || config.sigmas.is_empty() {
        return Err(Error::Parameter("sweep grids must be nonempty".into()));
    }
    if config.trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    let mut rows = Vec::new();
    for &gamma in &config.gammas {
        let graphs = (0..config.trials)
            .map(|k| {
                erdos_renyi(&GraphSpec {
                    n: config.n,
                    gamma,
                    seed: trial_seed(config.seed, k),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for &alpha in &config.alphas {
            for &sigma in &config.sigmas {
                let lambdas = graphs
                    .par_iter()
                    .enumerate()
                    .map(|(k, g)| {
                        let model = sample_ising(
                            g,
                            &PotentialSpec {
                                sigma,
                                seed: trial_seed(config.seed, k),
                            },
                        )?;
                        let cert = certify(
                            &theta_from_ising(&model),
                            &AlphaAssignment::uniform(g, alpha),
                            g,
                        )?;
                        Ok(cert.lambda_star)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let t = lambdas.len() as f64;
                let mean = lambdas.iter().sum::<f64>() / t;
                let var = if lambdas.len() > 1 {
                    lambdas.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (t - 1.0)
                } else {
                    0.0
                };
                rows.push(SweepRow {
                    gamma,
                    alpha,
                    sigma,
                    trials: config.trials,
                    lambda_mean: mean,
                    lambda_min: lambdas.iter().cloned().fold(f64::INFINITY, f64::min),
                    lambda_max: lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    lambda_se: (var / t).sqrt(),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub n: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub trials: usize,
    pub iters: usize,
    pub seed: u64,
    pub require_certified: bool,
    pub max_retries: usize,
}

impl TrajectoryConfig {
    pub fn new(n: usize, gamma: f64, alpha: f64, sigma: f64, trials: usize, iters: usize, seed: u64) -> Self {
        Self {
            n,
            gamma,
            alpha,
            sigma,
            trials,
            iters,
            seed,
            require_certified: false,
            max_retries: 1000,
        }
    }
}

/// Full message history of one trial.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub model: IsingModel,
    pub lambda_star: f64,
    /// `‖m⁽ⁿ⁾ - m*‖₂ / ‖m*‖₂` for `n = 0..=iters`, with `m* = m⁽ⁱᵗᵉʳˢ⁾`.
    pub errors: Vec<f64>,
    /// `max |m⁽ⁿ⁺¹⁾ - m⁽ⁿ⁾|` for `n = 0..iters`.
    pub residuals: Vec<f64>,
    /// `‖z⁽ⁿ⁺¹⁾ - z⁽ⁿ⁾‖₂` in log-ratio coordinates, binary models only.
    pub z_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub err_min: f64,
    pub err_mean: f64,
    pub err_max: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    pub rows: Vec<TrajectoryRow>,
    pub trials: Vec<TrialTrace>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn log_ratios(state: &MessageState) -> Vec<f64> {
    (0..state.num_messages())
        .map(|d| {
            let m = state.message(d);
            (m[1] / m[0]).ln()
        })
        .collect()
}

fn run_trial(config: &TrajectoryConfig, k: usize) -> Result<TrialTrace> {
    let seed = trial_seed(config.seed, k);
    let gs = GraphSpec {
        n: config.n,
        gamma: config.gamma,
        seed,
    };
    let ps = PotentialSpec {
        sigma: config.sigma,
        seed,
    };
    let (graph, model, lambda_star) = if config.require_certified {
        let s = sample_certified(&gs, &ps, config.alpha, config.max_retries)?;
        (s.graph, s.model, s.lambda_star)
    } else {
        let graph = erdos_renyi(&gs)?;
        let model = sample_ising(&graph, &ps)?;
        let cert = certify(
            &theta_from_ising(&model),
            &AlphaAssignment::uniform(&graph, config.alpha),
            &graph,
        )?;
        (graph, model, cert.lambda_star)
    };
    let mrf = ising_to_mrf(&model);
    let alphas = AlphaAssignment::uniform(&graph, config.alpha);
    let mut history = vec![init_messages(&mrf)];
    for _ in 0..config.iters {
        let next = alpha_bp_step(&mrf, &alphas, history.last().unwrap())?;
        history.push(next);
    }
    let target = history.last().unwrap().values();
    let scale = norm(target);
    let errors = history
        .iter()
        .map(|m| {
            if scale == 0.0 {
                return 0.0;
            }
            let diff: Vec<f64> = m.values().iter().zip(target).map(|(a, b)| a - b).collect();
            norm(&diff) / scale
        })
        .collect();
    let residuals = history.windows(2).map(|w| w[1].max_abs_diff(&w[0])).collect();
    let z: Vec<Vec<f64>> = history.iter().map(log_ratios).collect();
    let z_residuals = z
        .windows(2)
        .map(|w| {
            let diff: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
            norm(&diff)
        })
        .collect();
    Ok(TrialTrace {
        model,
        lambda_star,
        errors,
        residuals,
        z_residuals,
    })
}

/// Runs exactly `iters` synchronous α-BP sweeps from uniform messages on
/// each sampled model and summarizes the normalized error per iteration.
pub fn trajectory(config: &TrajectoryConfig) -> Result<TrajectoryRun> {
    if config.iters < 2 {
        return Err(Error::Parameter("trajectories need at least 2 iterations".into()));
    }
    if config.trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|k| run_trial(config, k))
        .collect::<Result<Vec<_>>>()?;
    let t = trials.len() as f64;
    let rows = (0..=config.iters)
        .map(|n| {
            let errs = trials.iter().map(|tr| tr.errors[n]);
            TrajectoryRow {
                iteration: n,
                err_min: errs.clone().fold(f64::INFINITY, f64::min),
                err_mean: errs.clone().sum::<f64>() / t,
                err_max: errs.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(TrajectoryRun { rows, trials })
}
