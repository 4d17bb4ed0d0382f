//! Real-valued MIMO detection over BPSK symbols.
//!
//! `y = Hx + e`, `x ∈ {-1, +1}^N`, `e ~ N(0, σ_w² I)`. The posterior is a
//! fully connected pairwise MRF; detectors are compared by symbol error
//! rate on common random draws.
//!
//! Conventions: `H` has i.i.d. `N(0, 1)` entries and is redrawn every trial
//! unless `fresh_channel` is off; the SNR axis is `10 log10(N / σ_w²)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{
    edge_appearance_probabilities, exact_map, map_decision, mean_field_run, run_alpha_bp,
    run_damped_bp, run_trw, AlphaAssignment, BeliefResult, RunConfig,
};
use crate::model::{DiscreteDistribution, Domain, Graph, PairwiseMrf};
use crate::randgen::{derive_seed, standard_normal, stream, Purpose};

/// Largest system size for which exhaustive MAP detection is allowed.
pub const MAX_MAP_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub h: DMatrix<f64>,
    pub sigma_w: f64,
}

impl LinearModel {
    pub fn new(h: DMatrix<f64>, sigma_w: f64) -> Result<Self> {
        if !(sigma_w > 0.0 && sigma_w.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise standard deviation must be positive, got {sigma_w}"
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("channel matrix has non-finite entries".into()));
        }
        Ok(Self { h, sigma_w })
    }

    pub fn num_inputs(&self) -> usize {
        self.h.ncols()
    }

    fn check_observation(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.h.nrows() {
            return Err(Error::Structure(format!(
                "observation has {} entries, channel has {} rows",
                y.len(),
                self.h.nrows()
            )));
        }
        Ok(())
    }
}

/// Posterior `p(x|y) ∝ exp{-‖Hx - y‖² / (2σ_w²)}` as a pairwise MRF with
/// `φ_i(x_i) = exp{-S_ii x_i²/(2σ_w²) + ⟨h_i, y⟩ x_i/σ_w²}` and
/// `φ_ij(x_i, x_j) = exp{-x_i S_ij x_j / σ_w²}`, `S = HᵀH`.
pub fn mimo_posterior_mrf(model: &LinearModel, y: &DVector<f64>) -> Result<PairwiseMrf> {
    model.check_observation(y)?;
    let n = model.num_inputs();
    let var = model.sigma_w * model.sigma_w;
    let s = model.h.transpose() * &model.h;
    let hty = model.h.transpose() * y;
    let spins = [-1.0, 1.0];
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| s[(i, j)] != 0.0)
        .collect();
    let graph = Graph::new(n, edges)?;
    let log_unary: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            spins
                .iter()
                .map(|x| -s[(i, i)] * x * x / (2.0 * var) + hty[i] * x / var)
                .collect()
        })
        .collect();
    let log_pairwise: Vec<Vec<Vec<f64>>> = graph
        .edges()
        .iter()
        .map(|&(i, j)| {
            spins
                .iter()
                .map(|xi| spins.iter().map(|xj| -xi * s[(i, j)] * xj / var).collect())
                .collect()
        })
        .collect();
    PairwiseMrf::from_log_potentials(graph, Domain::binary(), &log_unary, &log_pairwise)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmseResult {
    pub mu_hat: DVector<f64>,
    pub sigma_hat: DMatrix<f64>,
    pub decision: Vec<i64>,
}

/// `μ̂ = (HᵀH + σ_w² I)⁻¹ Hᵀy`, `Σ̂ = (HᵀH + σ_w² I)⁻¹ σ_w`, and the
/// nearest-symbol decision (ties go to -1).
pub fn mmse_estimate(model: &LinearModel, y: &DVector<f64>) -> Result<MmseResult> {
    model.check_observation(y)?;
    let n = model.num_inputs();
    let var = model.sigma_w * model.sigma_w;
    let gram = model.h.transpose() * &model.h + DMatrix::identity(n, n) * var;
    let chol = gram.cholesky().ok_or_else(|| Error::Numerical {
        message: "HᵀH + σ²I is not positive definite".into(),
        last_value: f64::NAN,
    })?;
    let mu_hat = chol.solve(&(model.h.transpose() * y));
    let sigma_hat = chol.inverse() * model.sigma_w;
    let decision = mu_hat.iter().map(|&m| if m > 0.0 { 1 } else { -1 }).collect();
    Ok(MmseResult {
        mu_hat,
        sigma_hat,
        decision,
    })
}

/// Two-point prior `p̂_i(x) ∝ exp{-(x - μ̂_i)² / (2 Σ̂_ii)}` on `{-1, +1}`.
pub fn mmse_prior_beliefs(result: &MmseResult) -> Result<Vec<DiscreteDistribution>> {
    (0..result.mu_hat.len())
        .map(|i| {
            let var = result.sigma_hat[(i, i)];
            if !(var > 0.0) {
                return Err(Error::Numerical {
                    message: format!("posterior variance of symbol {i} is not positive"),
                    last_value: var,
                });
            }
            let mu = result.mu_hat[i];
            let logs = [-(-1.0 - mu).powi(2) / (2.0 * var), -(1.0 - mu).powi(2) / (2.0 * var)];
            Ok(DiscreteDistribution::from_log_weights(&logs))
        })
        .collect()
}

/// Multiplies each unary potential by an external prior factor.
pub fn augment_with_prior(mrf: &PairwiseMrf, priors: &[DiscreteDistribution]) -> Result<PairwiseMrf> {
    if priors.len() != mrf.num_nodes() {
        return Err(Error::Structure(format!(
            "{} priors for {} nodes",
            priors.len(),
            mrf.num_nodes()
        )));
    }
    let mut logs = Vec::with_capacity(priors.len());
    for (i, p) in priors.iter().enumerate() {
        if p.len() != mrf.num_states() {
            return Err(Error::Structure(format!("prior {i} has the wrong support size")));
        }
        p.check_positive(&format!("prior of node {i}"))?;
        logs.push(p.values().iter().map(|v| v.ln()).collect::<Vec<_>>());
    }
    Ok(mrf.with_log_unary_factors(&logs))
}

/// Detector identifiers accepted by [`ser_experiment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Map,
    Mmse,
    Bp,
    AlphaBp(f64),
    AlphaBpMmse(f64),
    MeanField,
    Damped(f64),
    Trw,
}

impl Algorithm {
    /// Alpha reported in the SER table, where one applies.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Algorithm::Bp => Some(1.0),
            Algorithm::AlphaBp(a) | Algorithm::AlphaBpMmse(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Map => write!(f, "map"),
            Algorithm::Mmse => write!(f, "mmse"),
            Algorithm::Bp => write!(f, "bp"),
            Algorithm::AlphaBp(a) => write!(f, "alpha-bp:{a}"),
            Algorithm::AlphaBpMmse(a) => write!(f, "alpha-bp-mmse:{a}"),
            Algorithm::MeanField => write!(f, "mf"),
            Algorithm::Damped(g) => write!(f, "damped:{g}"),
            Algorithm::Trw => write!(f, "trw"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let value = |default: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a
                    .parse::<f64>()
                    .map_err(|_| Error::Parameter(format!("bad numeric argument in '{s}'"))),
                None => default.ok_or_else(|| Error::Parameter(format!("'{s}' needs a value"))),
            }
        };
        let no_arg = |alg: Algorithm| -> Result<Algorithm> {
            match arg {
                None => Ok(alg),
                Some(_) => Err(Error::Parameter(format!("'{name}' takes no argument"))),
            }
        };
        match name {
            "map" => no_arg(Algorithm::Map),
            "mmse" => no_arg(Algorithm::Mmse),
            "bp" => no_arg(Algorithm::Bp),
            "mf" => no_arg(Algorithm::MeanField),
            "trw" => no_arg(Algorithm::Trw),
            "alpha-bp" => Ok(Algorithm::AlphaBp(value(None)?)),
            "alpha-bp-mmse" => Ok(Algorithm::AlphaBpMmse(value(None)?)),
            "damped" => {
                let g = value(Some(0.5))?;
                crate::inference::check_damping(g)?;
                Ok(Algorithm::Damped(g))
            }
            _ => Err(Error::Parameter(format!("unknown algorithm '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SerConfig {
    pub n: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    /// Redraw `H` every trial; otherwise a single channel is used throughout.
    pub fresh_channel: bool,
    pub run: RunConfig,
}

impl SerConfig {
    pub fn new(n: usize, snr_db: Vec<f64>, trials: usize, algorithms: Vec<Algorithm>, seed: u64) -> Self {
        Self {
            n,
            snr_db,
            trials,
            algorithms,
            seed,
            fresh_channel: true,
            run: RunConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("at least one trial is required".into()));
        }
        if self.n == 0 {
            return Err(Error::Parameter("the system needs at least one symbol".into()));
        }
        if self.algorithms.contains(&Algorithm::Map) && self.n > MAX_MAP_SIZE {
            return Err(Error::Capacity(format!(
                "exhaustive MAP over 2^{} hypotheses exceeds the limit of N = {MAX_MAP_SIZE}",
                self.n
            )));
        }
        self.run.validate()
    }
}

/// Noise standard deviation for an SNR given in dB.
pub fn sigma_for_snr(n: usize, snr_db: f64) -> f64 {
    (n as f64 / 10f64.powf(snr_db / 10.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerPoint {
    pub snr_db: f64,
    pub algorithm: String,
    pub alpha: Option<f64>,
    pub trials: usize,
    pub symbol_errors: u64,
    pub ser: f64,
}

/// Per-trial symbol-error counts, `errors[snr][algorithm][trial]`.
#[derive(Debug, Clone)]
pub struct SerTable {
    pub n: usize,
    pub snr_db: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub errors: Vec<Vec<Vec<u32>>>,
}

impl SerTable {
    /// Aggregated rows, SNR-major then algorithm order.
    pub fn points(&self) -> Vec<SerPoint> {
        let mut out = Vec::new();
        for (i, &snr) in self.snr_db.iter().enumerate() {
            for (a, alg) in self.algorithms.iter().enumerate() {
                let trials = self.errors[i][a].len();
                let symbol_errors: u64 = self.errors[i][a].iter().map(|&e| e as u64).sum();
                out.push(SerPoint {
                    snr_db: snr,
                    algorithm: alg.to_string(),
                    alpha: alg.alpha(),
                    trials,
                    symbol_errors,
                    ser: symbol_errors as f64 / (trials * self.n) as f64,
                });
            }
        }
        out
    }
}

/// One channel realization with its transmitted symbols and unit-variance noise.
#[derive(Debug, Clone)]
pub struct Draw {
    pub h: DMatrix<f64>,
    pub x: Vec<i64>,
    pub noise: DVector<f64>,
}

/// Draw for trial `trial`; identical across SNR points so curves are paired.
pub fn draw_trial(n: usize, seed: u64, trial: usize, fresh_channel: bool) -> Draw {
    let trial_seed = derive_seed(seed, trial as u64);
    let mut ch = if fresh_channel {
        stream(trial_seed, Purpose::Channel, 0)
    } else {
        stream(seed, Purpose::Channel, 0)
    };
    let h = DMatrix::from_fn(n, n, |_, _| standard_normal(&mut ch));
    let mut sym = stream(trial_seed, Purpose::Symbols, 0);
    let x = (0..n).map(|_| if sym.random::<bool>() { 1 } else { -1 }).collect();
    let mut nz = stream(trial_seed, Purpose::Noise, 0);
    let noise = DVector::from_fn(n, |_, _| standard_normal(&mut nz));
    Draw { h, x, noise }
}

/// Runs one detector on one observation and returns its decisions.
pub fn detect(
    algorithm: Algorithm,
    model: &LinearModel,
    y: &DVector<f64>,
    run: &RunConfig,
) -> Result<Vec<i64>> {
    let posterior = || mimo_posterior_mrf(model, y);
    let decide = |mrf: &PairwiseMrf, result: Result<BeliefResult>| -> Result<Vec<i64>> {
        match result {
            Ok(r) => Ok(map_decision(mrf, &r.marginals)),
            // fall back to the local evidence alone when messages collapse
            Err(Error::DegenerateMessage { .. }) => Ok((0..mrf.num_nodes())
                .map(|s| if mrf.log_unary(s, 1) > mrf.log_unary(s, 0) { 1 } else { -1 })
                .collect()),
            Err(e) => Err(e),
        }
    };
    match algorithm {
        Algorithm::Map => exact_map(&posterior()?),
        Algorithm::Mmse => Ok(mmse_estimate(model, y)?.decision),
        Algorithm::Bp => {
            let mrf = posterior()?;
            let a = AlphaAssignment::uniform(mrf.graph(), 1.0);
            decide(&mrf, run_alpha_bp(&mrf, &a, run))
        }
        Algorithm::AlphaBp(alpha) => {
            let mrf = posterior()?;
            let a = AlphaAssignment::uniform(mrf.graph(), alpha);
            decide(&mrf, run_alpha_bp(&mrf, &a, run))
        }
        Algorithm::AlphaBpMmse(alpha) => {
            let prior = mmse_prior_beliefs(&mmse_estimate(model, y)?)?;
            let mrf = augment_with_prior(&posterior()?, &prior)?;
            let a = AlphaAssignment::uniform(mrf.graph(), alpha);
            decide(&mrf, run_alpha_bp(&mrf, &a, run))
        }
        Algorithm::MeanField => {
            let mrf = posterior()?;
            decide(&mrf, mean_field_run(&mrf, run))
        }
        Algorithm::Damped(gamma) => {
            let mrf = posterior()?;
            decide(&mrf, run_damped_bp(&mrf, gamma, run))
        }
        Algorithm::Trw => {
            let mrf = posterior()?;
            let mu = edge_appearance_probabilities(mrf.graph())?;
            decide(&mrf, run_trw(&mrf, &mu, run))
        }
    }
}

/// Monte Carlo SER table. Every algorithm in a trial sees the same `(H, x, y)`.
pub fn ser_trials(config: &SerConfig) -> Result<SerTable> {
    config.validate()?;
    let n = config.n;
    // per trial: errors[snr][algorithm]
    let per_trial: Vec<Vec<Vec<u32>>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<Vec<u32>>> {
            let draw = draw_trial(n, config.seed, trial, config.fresh_channel);
            let x = DVector::from_iterator(n, draw.x.iter().map(|&v| v as f64));
            let clean = &draw.h * &x;
            config
                .snr_db
                .iter()
                .map(|&snr| {
                    let sigma_w = sigma_for_snr(n, snr);
                    let y = &clean + &draw.noise * sigma_w;
                    let model = LinearModel::new(draw.h.clone(), sigma_w)?;
                    config
                        .algorithms
                        .iter()
                        .map(|&alg| {
                            let decision = detect(alg, &model, &y, &config.run)?;
                            Ok(decision.iter().zip(&draw.x).filter(|(a, b)| a != b).count() as u32)
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut errors = vec![vec![Vec::with_capacity(config.trials); config.algorithms.len()]; config.snr_db.len()];
    for trial in &per_trial {
        for (i, row) in trial.iter().enumerate() {
            for (a, &e) in row.iter().enumerate() {
                errors[i][a].push(e);
            }
        }
    }
    Ok(SerTable {
        n,
        snr_db: config.snr_db.clone(),
        algorithms: config.algorithms.clone(),
        errors,
    })
}

pub fn ser_experiment(config: &SerConfig) -> Result<Vec<SerPoint>> {
    Ok(ser_trials(config)?.points())
}
