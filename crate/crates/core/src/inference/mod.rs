//! Message passing on pairwise MRFs: alpha-BP, its baselines (standard,
//! damped and tree-reweighted BP, mean field) and brute-force oracles.
//!
//! All message-passing schedules here are parallel-synchronous: every
//! directed edge is updated from the previous iterate, then the whole state
//! is swapped. Messages are renormalized to sum to one after every update.

mod alpha_bp;
mod exact;
mod mean_field;
mod trw;

pub use alpha_bp::{
    alpha_bp_step, bp_step, damped_bp_step, run_alpha_bp, run_bp, run_damped_bp,
};
pub use exact::{exact_map, exact_marginals, MAX_ENUMERATION};
pub use mean_field::{mean_field_free_energy, mean_field_run};
pub use trw::{edge_appearance_probabilities, run_trw, trw_beliefs, trw_step, EdgeAppearance};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Graph, PairwiseMrf};
use crate::randgen;

/// Smallest entry a message may take before normalization.
pub const MESSAGE_FLOOR: f64 = 1e-300;
/// A normalized message entry below this is reported as degenerate.
pub const DEGENERATE_THRESHOLD: f64 = 1e-100;

/// One normalized message `m_ts(·)` per directed edge, stored flat in the
/// graph's directed-edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    num_states: usize,
    values: Vec<f64>,
}

impl MessageState {
    pub fn from_values(num_states: usize, values: Vec<f64>) -> Result<Self> {
        if num_states == 0 || !values.len().is_multiple_of(num_states) {
            return Err(Error::Structure(format!(
                "{} message entries do not split into vectors of length {num_states}",
                values.len()
            )));
        }
        Ok(Self { num_states, values })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_messages(&self) -> usize {
        self.values.len() / self.num_states
    }

    /// Message on directed edge `d`.
    pub fn message(&self, d: usize) -> &[f64] {
        &self.values[d * self.num_states..(d + 1) * self.num_states]
    }

    /// All entries, directed edge major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.ln()).collect()
    }

    /// Normalizes each block of unnormalized log-weights into a message,
    /// applying the floor and the degeneracy check.
    pub(crate) fn from_log_blocks(graph: &Graph, num_states: usize, log_blocks: &[f64]) -> Result<Self> {
        let mut values = vec![0.0; log_blocks.len()];
        for (d, (block, out)) in log_blocks
            .chunks(num_states)
            .zip(values.chunks_mut(num_states))
            .enumerate()
        {
            let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (o, &l) in out.iter_mut().zip(block) {
                *o = (l - max).exp().max(MESSAGE_FLOOR);
                total += *o;
            }
            for o in out.iter_mut() {
                *o /= total;
            }
            if !max.is_finite() || out.iter().any(|&v| !(v >= DEGENERATE_THRESHOLD)) {
                let (from, to) = graph.directed(d);
                return Err(Error::DegenerateMessage { from, to });
            }
        }
        Ok(Self { num_states, values })
    }
}

/// Uniform messages on every directed edge.
pub fn init_messages(mrf: &PairwiseMrf) -> MessageState {
    let k = mrf.num_states();
    MessageState {
        num_states: k,
        values: vec![1.0 / k as f64; mrf.graph().num_directed() * k],
    }
}

/// Uniform messages perturbed by seeded multiplicative noise in `[1, 2)`.
pub fn init_messages_noisy(mrf: &PairwiseMrf, seed: u64) -> MessageState {
    let k = mrf.num_states();
    let mut rng = randgen::stream(seed, randgen::Purpose::MessageInit, 0);
    let mut values: Vec<f64> = (0..mrf.graph().num_directed() * k)
        .map(|_| 1.0 + rng.random::<f64>())
        .collect();
    for block in values.chunks_mut(k) {
        let total: f64 = block.iter().sum();
        block.iter_mut().for_each(|v| *v /= total);
    }
    MessageState {
        num_states: k,
        values,
    }
}

/// Per-undirected-edge alpha; `α_ts = α_st` holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaAssignment {
    per_edge: Vec<f64>,
}

impl AlphaAssignment {
    pub fn uniform(graph: &Graph, alpha: f64) -> Self {
        Self {
            per_edge: vec![alpha; graph.num_edges()],
        }
    }

    pub fn per_edge(graph: &Graph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.num_edges() {
            return Err(Error::Structure(format!(
                "{} alpha values for {} edges",
                values.len(),
                graph.num_edges()
            )));
        }
        if let Some(a) = values.iter().find(|a| !a.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be finite, got {a}")));
        }
        Ok(Self { per_edge: values })
    }

    /// Alpha on undirected edge id `e`.
    pub fn get(&self, e: usize) -> f64 {
        self.per_edge[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.per_edge
    }

    pub fn len(&self) -> usize {
        self.per_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_edge.is_empty()
    }
}

/// Linear interpolation of a broadcast alpha across iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub num_iterations: usize,
}

impl AnnealSchedule {
    pub fn new(alpha_start: f64, alpha_end: f64, num_iterations: usize) -> Result<Self> {
        if num_iterations < 2 {
            return Err(Error::Parameter(
                "an anneal schedule spans at least two iterations".into(),
            ));
        }
        if !alpha_start.is_finite() || !alpha_end.is_finite() {
            return Err(Error::Parameter("anneal endpoints must be finite".into()));
        }
        Ok(Self {
            alpha_start,
            alpha_end,
            num_iterations,
        })
    }

    /// Alpha used at (0-based) iteration `n`; held at `alpha_end` past the schedule.
    pub fn alpha_at(&self, n: usize) -> f64 {
        let last = self.num_iterations - 1;
        if n >= last {
            return self.alpha_end;
        }
        let frac = n as f64 / last as f64;
        self.alpha_start + (self.alpha_end - self.alpha_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub max_iterations: usize,
    /// Stop once the max-norm message change drops below this.
    pub tolerance: f64,
    /// Product-form damping exponent on the old message.
    pub damping: Option<f64>,
    pub anneal: Option<AnnealSchedule>,
    /// Seeds multiplicative noise on the initial messages when set.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-6,
            damping: None,
            anneal: None,
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if let Some(g) = self.damping {
            check_damping(g)?;
        }
        Ok(())
    }
}

pub(crate) fn check_damping(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("damping must lie in (0, 1), got {gamma}")))
    }
}

/// Outcome of an inference run.
#[derive(Debug, Clone, Serialize)]
pub struct BeliefResult {
    pub converged: bool,
    #[serde(rename = "iterations")]
    pub iterations_used: usize,
    #[serde(rename = "residuals")]
    pub residual_trace: Vec<f64>,
    pub marginals: Vec<DiscreteDistribution>,
    #[serde(skip)]
    pub final_messages: Option<MessageState>,
}

impl BeliefResult {
    /// `{"converged", "iterations", "residuals", "marginals"}` as pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("belief results always serialize")
    }
}

/// `q_s ∝ φ_s(x_s) Π_{w∈N(s)} m_ws(x_s)`.
pub fn node_beliefs(mrf: &PairwiseMrf, state: &MessageState) -> Vec<DiscreteDistribution> {
    let graph = mrf.graph();
    let k = mrf.num_states();
    (0..mrf.num_nodes())
        .map(|s| {
            let logs: Vec<f64> = (0..k)
                .map(|x| {
                    mrf.log_unary(s, x)
                        + graph
                            .in_edges(s)
                            .map(|d| state.message(d)[x].ln())
                            .sum::<f64>()
                })
                .collect();
            DiscreteDistribution::from_log_weights(&logs)
        })
        .collect()
}

/// Per-node argmax as labels; the lowest state index wins ties.
pub fn map_decision(mrf: &PairwiseMrf, beliefs: &[DiscreteDistribution]) -> Vec<i64> {
    beliefs
        .iter()
        .map(|b| mrf.domain().label(b.argmax()))
        .collect()
}

/// Shared fixed-point driver. `step(state, n)` produces iterate `n + 1`.
pub(crate) fn iterate<S, B>(
    mrf: &PairwiseMrf,
    config: &RunConfig,
    mut step: S,
    beliefs: B,
) -> Result<BeliefResult>
where
    S: FnMut(&MessageState, usize) -> Result<MessageState>,
    B: Fn(&MessageState) -> Vec<DiscreteDistribution>,
{
    config.validate()?;
    let mut state = match config.seed {
        Some(seed) => init_messages_noisy(mrf, seed),
        None => init_messages(mrf),
    };
    if state.is_empty() {
        return Ok(BeliefResult {
            converged: true,
            iterations_used: 0,
            residual_trace: Vec::new(),
            marginals: beliefs(&state),
            final_messages: Some(state),
        });
    }
    let settle_after = config.anneal.map_or(0, |a| a.num_iterations - 1);
    let mut trace = Vec::new();
    let mut converged = false;
    for n in 0..config.max_iterations {
        let mut next = step(&state, n)?;
        if let Some(gamma) = config.damping {
            next = geometric_blend(mrf.graph(), &state, &next, gamma)?;
        }
        let residual = next.max_abs_diff(&state);
        trace.push(residual);
        state = next;
        if residual < config.tolerance && n >= settle_after {
            converged = true;
            break;
        }
    }
    Ok(BeliefResult {
        converged,
        iterations_used: trace.len(),
        residual_trace: trace,
        marginals: beliefs(&state),
        final_messages: Some(state),
    })
}

/// `old^γ · new^{1-γ}`, renormalized.
pub(crate) fn geometric_blend(
    graph: &Graph,
    old: &MessageState,
    new: &MessageState,
    gamma: f64,
) -> Result<MessageState> {
    let logs: Vec<f64> = old
        .values
        .iter()
        .zip(&new.values)
        .map(|(a, b)| gamma * a.ln() + (1.0 - gamma) * b.ln())
        .collect();
    MessageState::from_log_blocks(graph, old.num_states, &logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    #[test]
    fn init_is_uniform() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let bin = init_messages(&PairwiseMrf::uniform(g.clone(), Domain::binary()));
        assert_eq!(bin.num_messages(), 4);
        assert!(bin.values().iter().all(|&v| v == 0.5));
        let tri = init_messages(&PairwiseMrf::uniform(g, Domain::new(vec![0, 1, 2]).unwrap()));
        assert!(tri.values().iter().all(|&v| v == 1.0 / 3.0));
        let empty = init_messages(&PairwiseMrf::uniform(Graph::empty(4), Domain::binary()));
        assert!(empty.is_empty());
    }

    #[test]
    fn noisy_init_is_normalized_and_seeded() {
        let mrf = PairwiseMrf::uniform(Graph::complete(4), Domain::new(vec![0, 1, 2]).unwrap());
        let a = init_messages_noisy(&mrf, 3);
        assert_eq!(a, init_messages_noisy(&mrf, 3));
        assert_ne!(a, init_messages_noisy(&mrf, 4));
        for d in 0..a.num_messages() {
            assert!((a.message(d).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn anneal_endpoints() {
        let s = AnnealSchedule::new(1.0, 0.5, 11).unwrap();
        assert_eq!(s.alpha_at(0), 1.0);
        assert_eq!(s.alpha_at(10), 0.5);
        assert_eq!(s.alpha_at(50), 0.5);
        assert!((s.alpha_at(5) - 0.75).abs() < 1e-15);
        let mut prev = s.alpha_at(0);
        for n in 1..12 {
            assert!(s.alpha_at(n) <= prev);
            prev = s.alpha_at(n);
        }
        assert!(AnnealSchedule::new(1.0, 0.5, 1).is_err());
    }

    #[test]
    fn beliefs_of_uniform_and_isolated_nodes() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let mrf = PairwiseMrf::from_potentials(
            g,
            Domain::binary(),
            &[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 3.0]],
            &[vec![vec![2.0, 1.0], vec![1.0, 2.0]]],
        )
        .unwrap();
        let b = node_beliefs(&mrf, &init_messages(&mrf));
        assert_eq!(b[0].values(), &[0.5, 0.5]);
        assert!((b[2].values()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn map_decision_tie_breaks_low() {
        let mrf = PairwiseMrf::uniform(Graph::empty(3), Domain::binary());
        let beliefs = vec![
            DiscreteDistribution::new(vec![0.9, 0.1]),
            DiscreteDistribution::new(vec![0.5, 0.5]),
            DiscreteDistribution::new(vec![0.2, 0.8]),
        ];
        assert_eq!(map_decision(&mrf, &beliefs), vec![-1, -1, 1]);
    }

    #[test]
    fn config_validation() {
        let bad_tol = RunConfig {
            tolerance: 0.0,
            ..RunConfig::default()
        };
        assert!(bad_tol.validate().is_err());
        let bad_damp = RunConfig {
            damping: Some(1.0),
            ..RunConfig::default()
        };
        assert!(matches!(bad_damp.validate(), Err(Error::Parameter(_))));
    }

    #[test]
    fn degenerate_block_is_flagged() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let r = MessageState::from_log_blocks(&g, 2, &[0.0, -400.0, 0.0, 0.0]);
        assert!(matches!(r, Err(Error::DegenerateMessage { from: 0, to: 1 })));
        let ok = MessageState::from_log_blocks(&g, 2, &[0.0, -40.0, 0.0, 0.0]).unwrap();
        assert!((ok.message(1)[0] - 0.5).abs() < 1e-15);
    }
}
