use super::{
    check_damping, geometric_blend, iterate, node_beliefs, AlphaAssignment, BeliefResult,
    MessageState, RunConfig,
};
use crate::error::{Error, Result};
use crate::model::PairwiseMrf;

fn check_state(mrf: &PairwiseMrf, state: &MessageState) -> Result<()> {
    if state.num_states() != mrf.num_states()
        || state.num_messages() != mrf.graph().num_directed()
    {
        return Err(Error::Structure(format!(
            "message state holds {} messages of size {}, model needs {} of size {}",
            state.num_messages(),
            state.num_states(),
            mrf.graph().num_directed(),
            mrf.num_states()
        )));
    }
    Ok(())
}

/// Sum over all incoming log-messages, per node and state.
fn incoming_log_totals(mrf: &PairwiseMrf, log_m: &[f64]) -> Vec<f64> {
    let k = mrf.num_states();
    let graph = mrf.graph();
    let mut totals = vec![0.0; mrf.num_nodes() * k];
    for d in 0..graph.num_directed() {
        let (_, dst) = graph.directed(d);
        for x in 0..k {
            totals[dst * k + x] += log_m[d * k + x];
        }
    }
    totals
}

/// One synchronous alpha-BP sweep with per-edge alphas:
///
/// `m_ts(x_s) ∝ m_ts(x_s)^{1-α} Σ_{x_t} φ_ts(x_t,x_s)^α m_st(x_t)^{1-α} φ_t(x_t) Π_{w∈N(t)∖s} m_wt(x_t)`
pub fn alpha_bp_step(
    mrf: &PairwiseMrf,
    alphas: &AlphaAssignment,
    state: &MessageState,
) -> Result<MessageState> {
    check_state(mrf, state)?;
    let graph = mrf.graph();
    if alphas.len() != graph.num_edges() {
        return Err(Error::Structure(format!(
            "{} alpha values for {} edges",
            alphas.len(),
            graph.num_edges()
        )));
    }
    let k = mrf.num_states();
    let log_m = state.log_values();
    let totals = incoming_log_totals(mrf, &log_m);
    let mut out = vec![0.0; log_m.len()];
    let mut terms = vec![0.0; k];
    for d in 0..graph.num_directed() {
        let (t, _s) = graph.directed(d);
        let rev = graph.reverse(d);
        let alpha = alphas.get(graph.undirected_of(d));
        // cavity over x_t: φ_t · m_st^{1-α} · Π_{w≠s} m_wt = φ_t · Π_w m_wt · m_st^{-α}
        for x_s in 0..k {
            for (x_t, term) in terms.iter_mut().enumerate() {
                *term = alpha * mrf.log_pairwise_directed(d, x_t, x_s)
                    + mrf.log_unary(t, x_t)
                    + totals[t * k + x_t]
                    - alpha * log_m[rev * k + x_t];
            }
            out[d * k + x_s] = (1.0 - alpha) * log_m[d * k + x_s] + log_sum_exp(&terms);
        }
    }
    MessageState::from_log_blocks(graph, k, &out)
}

/// Standard sum-product sweep `m_ts(x_s) ∝ Σ_{x_t} φ_st(x_s,x_t) φ_t(x_t) Π_{w∈N(t)∖s} m_wt(x_t)`.
pub fn bp_step(mrf: &PairwiseMrf, state: &MessageState) -> Result<MessageState> {
    check_state(mrf, state)?;
    let graph = mrf.graph();
    let k = mrf.num_states();
    let mut out = vec![0.0; state.values().len()];
    let mut terms = vec![0.0; k];
    for d in 0..graph.num_directed() {
        let (t, s) = graph.directed(d);
        for x_s in 0..k {
            for (x_t, term) in terms.iter_mut().enumerate() {
                let mut cavity = mrf.log_unary(t, x_t);
                for w in graph.in_edges(t) {
                    if graph.directed(w).0 != s {
                        cavity += state.message(w)[x_t].ln();
                    }
                }
                *term = mrf.log_pairwise(s, t, x_s, x_t) + cavity;
            }
            out[d * k + x_s] = log_sum_exp(&terms);
        }
    }
    MessageState::from_log_blocks(graph, k, &out)
}

/// Damped BP: `m^new ∝ m^γ · (BP update)^{1-γ}`.
pub fn damped_bp_step(mrf: &PairwiseMrf, gamma: f64, state: &MessageState) -> Result<MessageState> {
    check_damping(gamma)?;
    let updated = bp_step(mrf, state)?;
    geometric_blend(mrf.graph(), state, &updated, gamma)
}

/// Iterates alpha-BP to a fixed point (or `max_iterations`) and returns node beliefs.
///
/// With `config.anneal` set, the broadcast alpha of the schedule replaces
/// `alphas` at every iteration and the run is not declared converged before
/// the schedule has reached its final value.
pub fn run_alpha_bp(
    mrf: &PairwiseMrf,
    alphas: &AlphaAssignment,
    config: &RunConfig,
) -> Result<BeliefResult> {
    let graph = mrf.graph();
    iterate(
        mrf,
        config,
        |state, n| match config.anneal {
            Some(schedule) => {
                let a = AlphaAssignment::uniform(graph, schedule.alpha_at(n));
                alpha_bp_step(mrf, &a, state)
            }
            None => alpha_bp_step(mrf, alphas, state),
        },
        |state| node_beliefs(mrf, state),
    )
}

/// Standard loopy BP driven by [`bp_step`].
pub fn run_bp(mrf: &PairwiseMrf, config: &RunConfig) -> Result<BeliefResult> {
    iterate(mrf, config, |state, _| bp_step(mrf, state), |state| {
        node_beliefs(mrf, state)
    })
}

/// Damped BP run; `gamma` overrides any damping in `config`.
pub fn run_damped_bp(mrf: &PairwiseMrf, gamma: f64, config: &RunConfig) -> Result<BeliefResult> {
    check_damping(gamma)?;
    let config = RunConfig {
        damping: None,
        ..config.clone()
    };
    iterate(
        mrf,
        &config,
        |state, _| damped_bp_step(mrf, gamma, state),
        |state| node_beliefs(mrf, state),
    )
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
