//! Tree-reweighted BP and spanning-tree edge appearance probabilities.

use nalgebra::DMatrix;

use super::alpha_bp::log_sum_exp;
use super::{iterate, BeliefResult, MessageState, RunConfig};
use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Graph, PairwiseMrf};

/// Probability `μ_st` that each undirected edge lies in a uniformly drawn
/// spanning tree, indexed by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAppearance {
    per_edge: Vec<f64>,
}

impl EdgeAppearance {
    /// User-supplied weights; each must lie in `(0, 1]`.
    pub fn new(graph: &Graph, per_edge: Vec<f64>) -> Result<Self> {
        if per_edge.len() != graph.num_edges() {
            return Err(Error::Structure(format!(
                "{} appearance probabilities for {} edges",
                per_edge.len(),
                graph.num_edges()
            )));
        }
        if let Some(m) = per_edge.iter().find(|&&m| !(m > 0.0 && m <= 1.0)) {
            return Err(Error::Parameter(format!(
                "edge appearance probability {m} is outside (0, 1]"
            )));
        }
        Ok(Self { per_edge })
    }

    pub fn uniform(graph: &Graph, mu: f64) -> Result<Self> {
        Self::new(graph, vec![mu; graph.num_edges()])
    }

    pub fn get(&self, e: usize) -> f64 {
        self.per_edge[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.per_edge
    }
}

/// Matrix-tree route: `μ_st` equals the effective resistance between `s`
/// and `t` with unit conductances, read off the inverse of the Laplacian
/// grounded at the last node.
pub fn edge_appearance_probabilities(graph: &Graph) -> Result<EdgeAppearance> {
    let n = graph.num_nodes();
    if n == 0 || !graph.is_connected() {
        return Err(Error::Structure(
            "edge appearance probabilities need a connected graph".into(),
        ));
    }
    if graph.num_edges() == 0 {
        return Ok(EdgeAppearance { per_edge: Vec::new() });
    }
    let m = n - 1;
    let mut lap = DMatrix::<f64>::zeros(m, m);
    for &(s, t) in graph.edges() {
        for &(a, b) in &[(s, t), (t, s)] {
            if a < m {
                lap[(a, a)] += 1.0;
                if b < m {
                    lap[(a, b)] -= 1.0;
                }
            }
        }
    }
    let inv = lap
        .cholesky()
        .ok_or_else(|| Error::Numerical {
            message: "grounded Laplacian is not positive definite".into(),
            last_value: f64::NAN,
        })?
        .inverse();
    let entry = |a: usize, b: usize| if a < m && b < m { inv[(a, b)] } else { 0.0 };
    let per_edge = graph
        .edges()
        .iter()
        .map(|&(s, t)| entry(s, s) + entry(t, t) - 2.0 * entry(s, t))
        .collect();
    Ok(EdgeAppearance { per_edge })
}

/// One synchronous TRW sweep:
/// `m_ts(x_s) ∝ Σ_{x_t} φ_st^{1/μ_st} φ_t Π_{w∈N(t)∖s} m_wt^{μ_wt} / m_st^{1-μ_st}`.
pub fn trw_step(mrf: &PairwiseMrf, mu: &EdgeAppearance, state: &MessageState) -> Result<MessageState> {
    let graph = mrf.graph();
    if mu.per_edge.len() != graph.num_edges() {
        return Err(Error::Structure("appearance probabilities do not match the graph".into()));
    }
    if let Some(m) = mu.per_edge.iter().find(|&&m| m == 0.0) {
        return Err(Error::Parameter(format!("edge appearance probability {m} is zero")));
    }
    let k = mrf.num_states();
    let log_m = state.log_values();
    // Σ_{w∈N(t)} μ_wt log m_wt
    let mut weighted = vec![0.0; mrf.num_nodes() * k];
    for d in 0..graph.num_directed() {
        let (_, dst) = graph.directed(d);
        let w = mu.get(graph.undirected_of(d));
        for x in 0..k {
            weighted[dst * k + x] += w * log_m[d * k + x];
        }
    }
    let mut out = vec![0.0; log_m.len()];
    let mut terms = vec![0.0; k];
    for d in 0..graph.num_directed() {
        let (t, _) = graph.directed(d);
        let rev = graph.reverse(d);
        let weight = mu.get(graph.undirected_of(d));
        for x_s in 0..k {
            for (x_t, term) in terms.iter_mut().enumerate() {
                // μ_st log m_st from the cavity and (1 - μ_st) log m_st from the divisor
                *term = mrf.log_pairwise_directed(d, x_t, x_s) / weight
                    + mrf.log_unary(t, x_t)
                    + weighted[t * k + x_t]
                    - log_m[rev * k + x_t];
            }
            out[d * k + x_s] = log_sum_exp(&terms);
        }
    }
    MessageState::from_log_blocks(graph, k, &out)
}

/// TRW node beliefs `q_s ∝ φ_s Π_{w∈N(s)} m_ws^{μ_ws}`.
pub fn trw_beliefs(mrf: &PairwiseMrf, mu: &EdgeAppearance, state: &MessageState) -> Vec<DiscreteDistribution> {
    let graph = mrf.graph();
    let k = mrf.num_states();
    (0..mrf.num_nodes())
        .map(|s| {
            let logs: Vec<f64> = (0..k)
                .map(|x| {
                    mrf.log_unary(s, x)
                        + graph
                            .in_edges(s)
                            .map(|d| mu.get(graph.undirected_of(d)) * state.message(d)[x].ln())
                            .sum::<f64>()
                })
                .collect();
            DiscreteDistribution::from_log_weights(&logs)
        })
        .collect()
}

pub fn run_trw(mrf: &PairwiseMrf, mu: &EdgeAppearance, config: &RunConfig) -> Result<BeliefResult> {
    iterate(
        mrf,
        config,
        |state, _| trw_step(mrf, mu, state),
        |state| trw_beliefs(mrf, mu, state),
    )
}
