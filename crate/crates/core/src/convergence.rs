//! Spectral convergence certificate for alpha-BP on binary symmetric models.
//!
//! For spins with `φ_st = exp{θ_st x_s x_t}` and `φ_s ∝ exp{θ_s x_s}`, the
//! message log-ratios `z_ts = log m_ts(+1)/m_ts(-1)` evolve as
//!
//! ```text
//! z_ts ← (1-α_ts) z_ts + H(Δ_ts; 2 α_ts θ_ts)
//! Δ_ts = 2θ_t + (1-α_ts) z_st + Σ_{w∈N(t)∖s} z_wt
//! H(μ; κ) = log((e^{μ+κ} + 1) / (e^μ + e^κ))
//! ```
//!
//! and successive differences obey `|z⁽ⁿ⁺¹⁾ - z⁽ⁿ⁾| ≤ M |z⁽ⁿ⁾ - z⁽ⁿ⁻¹⁾|`
//! elementwise, with the nonnegative matrix `M(α, θ)` indexed by directed
//! edges. Any operator norm of `M` below one makes the update a contraction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{AlphaAssignment, MessageState};
use crate::model::{Graph, IsingModel, PairwiseMrf};

/// Default relative tolerance for [`largest_singular_value`].
pub const DEFAULT_SVD_TOL: f64 = 1e-10;
/// Power-iteration budget.
pub const MAX_POWER_ITERATIONS: usize = 10_000;

/// Symmetric binary potentials: `θ_ts(x_t, x_s) = θ_ts x_t x_s`, `θ_s(x_s) = θ_s x_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaParams {
    /// Per undirected edge id.
    pub theta_edge: Vec<f64>,
    /// Per node.
    pub theta_node: Vec<f64>,
}

/// `θ_ts = -2 J_ts`, `θ_s = -b_s`. The diagonal of `J` only contributes a
/// constant on spins and is ignored.
pub fn theta_from_ising(model: &IsingModel) -> ThetaParams {
    ThetaParams {
        theta_edge: model
            .graph()
            .edges()
            .iter()
            .map(|&(s, t)| -2.0 * model.j()[(s, t)])
            .collect(),
        theta_node: model.b().iter().map(|b| -b).collect(),
    }
}

/// Extracts `θ` from a binary MRF whose log-potentials are symmetric up to
/// an additive constant; anything else is a structural error.
pub fn theta_from_mrf(mrf: &PairwiseMrf) -> Result<ThetaParams> {
    if !mrf.domain().is_binary() {
        return Err(Error::Structure(
            "the certificate is defined for the (-1, +1) domain only".into(),
        ));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    let mut theta_edge = Vec::with_capacity(mrf.graph().num_edges());
    for (e, &(s, t)) in mrf.graph().edges().iter().enumerate() {
        let l = |a, b| mrf.log_pairwise_edge(e, a, b);
        if !close(l(0, 0), l(1, 1)) || !close(l(0, 1), l(1, 0)) {
            return Err(Error::Structure(format!(
                "pairwise potential on ({s}, {t}) is not of the form exp(θ x_s x_t)"
            )));
        }
        theta_edge.push((l(1, 1) - l(0, 1)) / 2.0);
    }
    let theta_node = (0..mrf.num_nodes())
        .map(|s| (mrf.log_unary(s, 1) - mrf.log_unary(s, 0)) / 2.0)
        .collect();
    Ok(ThetaParams {
        theta_edge,
        theta_node,
    })
}

/// Dense `|E⃗| × |E⃗|` matrix over directed edges in the graph's
/// lexicographic `(source, target)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMatrix {
    dim: usize,
    data: Vec<f64>,
    index: Vec<(usize, usize)>,
}

impl ConvergenceMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at row `(t→s)`, column `(u→v)` by directed index.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Directed edge of each row/column.
    pub fn index(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn from_dense(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Structure(format!(
                "{} entries do not form a {dim}x{dim} matrix",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite matrix entry {v}")));
        }
        Ok(Self {
            dim,
            data,
            index: Vec::new(),
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.dim.max(1))
            .take(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul_transpose_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (r, &vr) in v.iter().enumerate() {
            if vr != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(r)) {
                    *o += a * vr;
                }
            }
        }
        out
    }

    /// Principal submatrices on the connected components of the nonzero
    /// pattern, in order of their smallest index.
    pub fn blocks(&self) -> Vec<ConvergenceMatrix> {
        let mut label = vec![usize::MAX; self.dim];
        let mut groups = Vec::new();
        for root in 0..self.dim {
            if label[root] != usize::MAX {
                continue;
            }
            let id = groups.len();
            label[root] = id;
            let mut members = vec![root];
            let mut stack = vec![root];
            while let Some(i) = stack.pop() {
                for j in 0..self.dim {
                    if label[j] == usize::MAX && (self.get(i, j) != 0.0 || self.get(j, i) != 0.0) {
                        label[j] = id;
                        members.push(j);
                        stack.push(j);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }
        if groups.len() == 1 {
            return vec![self.clone()];
        }
        groups
            .into_iter()
            .map(|g| ConvergenceMatrix {
                dim: g.len(),
                data: g.iter().flat_map(|&r| g.iter().map(move |&c| (r, c))).map(|(r, c)| self.get(r, c)).collect(),
                index: if self.index.is_empty() { Vec::new() } else { g.iter().map(|&r| self.index[r]).collect() },
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_l1(&self) -> f64 {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.get(r, c).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_linf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn check_sizes(theta: &ThetaParams, alphas: &AlphaAssignment, graph: &Graph) -> Result<()> {
    if theta.theta_edge.len() != graph.num_edges()
        || theta.theta_node.len() != graph.num_nodes()
        || alphas.len() != graph.num_edges()
    {
        return Err(Error::Structure(format!(
            "parameters ({} edge θ, {} node θ, {} α) do not match a graph with {} nodes and {} edges",
            theta.theta_edge.len(),
            theta.theta_node.len(),
            alphas.len(),
            graph.num_nodes(),
            graph.num_edges()
        )));
    }
    Ok(())
}

/// Row `(t→s)`: `|1-α_ts|` on itself, `|1-α_ts| tanh|α_ts θ_ts|` on `(s→t)`,
/// `tanh|α_ts θ_ts|` on every `(u→t)` with `u ∈ N(t)∖s`, zero elsewhere.
pub fn build_m_matrix(
    theta: &ThetaParams,
    alphas: &AlphaAssignment,
    graph: &Graph,
) -> Result<ConvergenceMatrix> {
    check_sizes(theta, alphas, graph)?;
    let dim = graph.num_directed();
    let mut data = vec![0.0; dim * dim];
    for d in 0..dim {
        let (t, _) = graph.directed(d);
        let e = graph.undirected_of(d);
        let alpha = alphas.get(e);
        let keep = (1.0 - alpha).abs();
        let coupling = (alpha * theta.theta_edge[e]).abs().tanh();
        let rev = graph.reverse(d);
        let row = &mut data[d * dim..(d + 1) * dim];
        row[d] = keep;
        row[rev] = keep * coupling;
        for u in graph.in_edges(t) {
            if u != rev {
                row[u] = coupling;
            }
        }
    }
    Ok(ConvergenceMatrix {
        dim,
        data,
        index: graph.directed_edges().to_vec(),
    })
}

/// Largest singular value by power iteration on `MᵀM`, starting from the
/// normalized all-ones vector and stopping once successive estimates agree
/// to relative tolerance `tol`.
///
/// The iteration runs separately on each irreducible diagonal block of `M`
/// (one per connected component of the underlying graph) and returns the
/// largest result.
pub fn largest_singular_value(m: &ConvergenceMatrix, tol: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for block in m.blocks() {
        best = best.max(power_iteration(&block, tol)?);
    }
    Ok(best)
}

/// Like [`largest_singular_value`], but a block whose top two singular
/// values are too close for the iteration budget is resolved by a dense SVD.
pub fn spectral_norm(m: &ConvergenceMatrix, tol: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for block in m.blocks() {
        let sigma = match power_iteration(&block, tol) {
            Ok(s) => s,
            Err(Error::Numerical { .. }) => {
                let d = block.dim;
                DMatrix::from_row_slice(d, d, &block.data).singular_values().max()
            }
            Err(e) => return Err(e),
        };
        best = best.max(sigma);
    }
    Ok(best)
}

fn power_iteration(m: &ConvergenceMatrix, tol: f64) -> Result<f64> {
    if m.dim == 0 {
        return Ok(0.0);
    }
    let mut v = vec![1.0 / (m.dim as f64).sqrt(); m.dim];
    let mut prev = f64::NAN;
    let mut sigma = 0.0;
    for _ in 0..MAX_POWER_ITERATIONS {
        let w = m.mul_vec(&v);
        sigma = norm2(&w);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        if (sigma - prev).abs() <= tol * sigma {
            return Ok(sigma);
        }
        prev = sigma;
        let u = m.mul_transpose_vec(&w);
        let un = norm2(&u);
        v = u.into_iter().map(|x| x / un).collect();
    }
    Err(Error::Numerical {
        message: format!("power iteration did not reach relative tolerance {tol}"),
        last_value: sigma,
    })
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Spectral and induced-norm convergence measures of `M(α, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda_star: f64,
    #[serde(rename = "l1")]
    pub l1_norm: f64,
    #[serde(rename = "linf")]
    pub linf_norm: f64,
    #[serde(rename = "theorem1")]
    pub theorem1_holds: bool,
    #[serde(rename = "corollary_l1")]
    pub corollary_l1_holds: bool,
    #[serde(rename = "corollary_linf")]
    pub corollary_linf_holds: bool,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates always serialize")
    }
}

/// `max_{u→v} |1-α_uv| + |1-α_vu| tanh|α_vu θ_vu| + Σ_{w∈N(v)∖u} tanh|α_vw θ_vw|`
pub fn column_norm_bound(theta: &ThetaParams, alphas: &AlphaAssignment, graph: &Graph) -> f64 {
    let tanh_edge = |e: usize| (alphas.get(e) * theta.theta_edge[e]).abs().tanh();
    (0..graph.num_directed())
        .map(|d| {
            let (u, v) = graph.directed(d);
            let e = graph.undirected_of(d);
            let keep = (1.0 - alphas.get(e)).abs();
            let others: f64 = graph
                .neighbors(v)
                .iter()
                .filter(|&&w| w != u)
                .map(|&w| tanh_edge(graph.edge_id(v, w).expect("neighbor")))
                .sum();
            keep + keep * tanh_edge(e) + others
        })
        .fold(0.0, f64::max)
}

/// `max_{t→s} |1-α_ts| (1 + tanh|α_ts θ_ts|) + (|N(t)| - 1) tanh|α_ts θ_ts|`
pub fn row_norm_bound(theta: &ThetaParams, alphas: &AlphaAssignment, graph: &Graph) -> f64 {
    (0..graph.num_directed())
        .map(|d| {
            let (t, _) = graph.directed(d);
            let e = graph.undirected_of(d);
            let a = alphas.get(e);
            let th = (a * theta.theta_edge[e]).abs().tanh();
            (1.0 - a).abs() * (1.0 + th) + (graph.degree(t) as f64 - 1.0) * th
        })
        .fold(0.0, f64::max)
}

/// Evaluates the spectral condition and both induced-norm conditions.
pub fn certify(theta: &ThetaParams, alphas: &AlphaAssignment, graph: &Graph) -> Result<Certificate> {
    let m = build_m_matrix(theta, alphas, graph)?;
    let lambda_star = spectral_norm(&m, DEFAULT_SVD_TOL)?;
    let l1_norm = column_norm_bound(theta, alphas, graph);
    let linf_norm = row_norm_bound(theta, alphas, graph);
    Ok(Certificate {
        lambda_star,
        l1_norm,
        linf_norm,
        theorem1_holds: lambda_star < 1.0,
        corollary_l1_holds: l1_norm < 1.0,
        corollary_linf_holds: linf_norm < 1.0,
    })
}

/// Log-ratios `z_ts` in directed-edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRatioState {
    pub z: Vec<f64>,
}

impl LogRatioState {
    pub fn zeros(graph: &Graph) -> Self {
        Self {
            z: vec![0.0; graph.num_directed()],
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// `z_ts = log(m_ts(+1) / m_ts(-1))`.
pub fn messages_to_logratio(state: &MessageState) -> Result<LogRatioState> {
    if state.num_states() != 2 {
        return Err(Error::Structure("log-ratios need binary messages".into()));
    }
    Ok(LogRatioState {
        z: (0..state.num_messages())
            .map(|d| {
                let m = state.message(d);
                m[1].ln() - m[0].ln()
            })
            .collect(),
    })
}

/// Inverse of [`messages_to_logratio`]: `(1/(1+e^z), e^z/(1+e^z))`.
pub fn logratio_to_messages(z: &LogRatioState) -> MessageState {
    let values = z
        .z
        .iter()
        .flat_map(|&zi| {
            let plus = sigmoid(zi);
            [sigmoid(-zi), plus]
        })
        .collect();
    MessageState::from_values(2, values).expect("two entries per message")
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// `H(μ; κ) = log((e^{μ+κ} + 1) / (e^μ + e^κ))`.
pub fn h_aux(mu: f64, kappa: f64) -> f64 {
    softplus(mu + kappa) - log_add_exp(mu, kappa)
}

/// `G(μ; κ) = ∂H/∂μ = sinh κ / (cosh κ + cosh μ)`, evaluated as a
/// difference of logistic functions.
pub fn g_aux(mu: f64, kappa: f64) -> f64 {
    sigmoid(mu + kappa) - sigmoid(mu - kappa)
}

/// One synchronous step of the log-ratio dynamics.
pub fn z_update(
    theta: &ThetaParams,
    alphas: &AlphaAssignment,
    graph: &Graph,
    z: &LogRatioState,
) -> Result<LogRatioState> {
    check_sizes(theta, alphas, graph)?;
    if z.len() != graph.num_directed() {
        return Err(Error::Structure(format!(
            "{} log-ratios for {} directed edges",
            z.len(),
            graph.num_directed()
        )));
    }
    let mut totals = vec![0.0; graph.num_nodes()];
    for (d, &zd) in z.z.iter().enumerate() {
        totals[graph.directed(d).1] += zd;
    }
    let next = (0..graph.num_directed())
        .map(|d| {
            let (t, _) = graph.directed(d);
            let e = graph.undirected_of(d);
            let alpha = alphas.get(e);
            let z_st = z.z[graph.reverse(d)];
            let delta = 2.0 * theta.theta_node[t] + totals[t] - alpha * z_st;
            (1.0 - alpha) * z.z[d] + h_aux(delta, 2.0 * alpha * theta.theta_edge[e])
        })
        .collect();
    Ok(LogRatioState { z: next })
}

/// `z⁽⁰⁾, ..., z⁽ⁿ⁾` under [`z_update`].
pub fn z_trajectory(
    theta: &ThetaParams,
    alphas: &AlphaAssignment,
    graph: &Graph,
    start: LogRatioState,
    steps: usize,
) -> Result<Vec<LogRatioState>> {
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(start);
    for _ in 0..steps {
        let next = z_update(theta, alphas, graph, trace.last().expect("nonempty"))?;
        trace.push(next);
    }
    Ok(trace)
}

/// Additive slack used by [`contraction_check`].
pub const CONTRACTION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub steps_checked: usize,
    /// Largest `|Δz⁽ⁿ⁺¹⁾|_i - (M|Δz⁽ⁿ⁾|)_i` seen; nonpositive when the bound is tight-or-slack everywhere.
    pub max_excess: f64,
    /// Entries exceeding the bound by more than the slack.
    pub violations: usize,
}

/// Checks `|z⁽ⁿ⁺¹⁾ - z⁽ⁿ⁾| ≤ M |z⁽ⁿ⁾ - z⁽ⁿ⁻¹⁾|` elementwise along a trace.
pub fn contraction_check(
    theta: &ThetaParams,
    alphas: &AlphaAssignment,
    graph: &Graph,
    trace: &[LogRatioState],
) -> Result<ContractionReport> {
    if trace.len() < 3 {
        return Err(Error::Parameter(
            "a contraction check needs at least three iterates".into(),
        ));
    }
    let m = build_m_matrix(theta, alphas, graph)?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut violations = 0;
    for w in trace.windows(3) {
        let prev: Vec<f64> = w[1].z.iter().zip(&w[0].z).map(|(a, b)| (a - b).abs()).collect();
        let bound = m.mul_vec(&prev);
        for (i, b) in bound.iter().enumerate() {
            let excess = (w[2].z[i] - w[1].z[i]).abs() - b;
            max_excess = max_excess.max(excess);
            if excess > CONTRACTION_SLACK {
                violations += 1;
            }
        }
    }
    Ok(ContractionReport {
        steps_checked: trace.len() - 2,
        max_excess,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn chain(j: [f64; 2]) -> IsingModel {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = j[0];
        m[(1, 0)] = j[0];
        m[(1, 2)] = j[1];
        m[(2, 1)] = j[1];
        IsingModel::from_matrix(m, DVector::zeros(3)).unwrap()
    }

    #[test]
    fn theta_mapping_signs() {
        let mut j = DMatrix::zeros(2, 2);
        j[(0, 1)] = 0.3;
        j[(1, 0)] = 0.3;
        let model = IsingModel::from_matrix(j, DVector::from_vec(vec![0.5, 0.0])).unwrap();
        let th = theta_from_ising(&model);
        assert!((th.theta_edge[0] + 0.6).abs() < 1e-15);
        assert!((th.theta_node[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_theta_matrix_is_scaled_identity() {
        let g = Graph::complete(4);
        let th = ThetaParams {
            theta_edge: vec![0.0; g.num_edges()],
            theta_node: vec![0.0; 4],
        };
        let m = build_m_matrix(&th, &AlphaAssignment::uniform(&g, 0.3), &g).unwrap();
        for r in 0..m.dim() {
            for c in 0..m.dim() {
                let want = if r == c { 0.7 } else { 0.0 };
                assert!((m.get(r, c) - want).abs() < 1e-15);
            }
        }
        assert!((largest_singular_value(&m, 1e-12).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn chain_matrix_hand_entries() {
        let model = chain([0.4, 0.2]);
        // θ = -2J = (-0.8, -0.4); α = 0.5 → |αθ| = (0.4, 0.2)
        let th = theta_from_ising(&model);
        let g = model.graph();
        let m = build_m_matrix(&th, &AlphaAssignment::uniform(g, 0.5), g).unwrap();
        let idx = |s, t| g.directed_index(s, t).unwrap();
        let (a, b) = (0.4f64.tanh(), 0.2f64.tanh());
        // directed order: 0→1, 1→0, 1→2, 2→1
        assert_eq!(m.index(), &[(0, 1), (1, 0), (1, 2), (2, 1)]);
        let expect = [
            ((0, 1), (0, 1), 0.5),
            ((0, 1), (1, 0), 0.5 * a),
            ((1, 0), (1, 0), 0.5),
            ((1, 0), (0, 1), 0.5 * a),
            ((1, 0), (2, 1), a),
            ((1, 2), (1, 2), 0.5),
            ((1, 2), (2, 1), 0.5 * b),
            ((1, 2), (0, 1), b),
            ((2, 1), (2, 1), 0.5),
            ((2, 1), (1, 2), 0.5 * b),
        ];
        let mut nonzero = 0;
        for r in 0..4 {
            for c in 0..4 {
                if m.get(r, c) != 0.0 {
                    nonzero += 1;
                }
            }
        }
        assert_eq!(nonzero, expect.len());
        for ((rs, rt), (cs, ct), v) in expect {
            assert!((m.get(idx(rs, rt), idx(cs, ct)) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha_one_keeps_only_cavity_entries() {
        let model = chain([0.4, -0.3]);
        let th = theta_from_ising(&model);
        let g = model.graph();
        let m = build_m_matrix(&th, &AlphaAssignment::uniform(g, 1.0), g).unwrap();
        for d in 0..m.dim() {
            assert_eq!(m.get(d, d), 0.0);
            assert_eq!(m.get(d, g.reverse(d)), 0.0);
        }
        let idx = |s, t| g.directed_index(s, t).unwrap();
        assert!((m.get(idx(1, 2), idx(0, 1)) - 0.6f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_on_small_matrices() {
        let id = ConvergenceMatrix::from_dense(3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        assert!((largest_singular_value(&id, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let d = ConvergenceMatrix::from_dense(2, vec![3., 0., 0., 1.]).unwrap();
        assert!((largest_singular_value(&d, 1e-12).unwrap() - 3.0).abs() < 1e-9);
        let zero = ConvergenceMatrix::from_dense(2, vec![0.0; 4]).unwrap();
        assert_eq!(largest_singular_value(&zero, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn single_edge_alpha_one_certifies_trivially() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let th = ThetaParams {
            theta_edge: vec![2.0],
            theta_node: vec![0.1, -0.3],
        };
        let c = certify(&th, &AlphaAssignment::uniform(&g, 1.0), &g).unwrap();
        assert_eq!(c.lambda_star, 0.0);
        assert_eq!(c.l1_norm, 0.0);
        assert_eq!(c.linf_norm, 0.0);
        assert!(c.theorem1_holds && c.corollary_l1_holds && c.corollary_linf_holds);
    }

    #[test]
    fn certificate_json_keys() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let th = ThetaParams {
            theta_edge: vec![0.0],
            theta_node: vec![0.0; 2],
        };
        let c = certify(&th, &AlphaAssignment::uniform(&g, 0.5), &g).unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        for key in ["lambda_star", "l1", "linf", "theorem1", "corollary_l1", "corollary_linf"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["theorem1"], true);
    }

    #[test]
    fn logratio_basics() {
        let m = MessageState::from_values(2, vec![0.5, 0.5, 0.25, 0.75]).unwrap();
        let z = messages_to_logratio(&m).unwrap();
        assert_eq!(z.z[0], 0.0);
        assert!((z.z[1] - 3f64.ln()).abs() < 1e-15);
        let back = logratio_to_messages(&z);
        assert!(back.max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn h_and_g_special_values() {
        assert_eq!(h_aux(3.7, 0.0), 0.0);
        assert!(h_aux(0.0, 1.3).abs() < 1e-15);
        assert!((g_aux(0.0, 1.2) - 0.6f64.tanh()).abs() < 1e-15);
        // large arguments stay finite
        assert!((h_aux(900.0, 1.0) - 1.0).abs() < 1e-9);
        assert!(h_aux(-900.0, 800.0).is_finite());
        assert!(g_aux(1e4, 3.0).abs() < 1e-100);
    }

    #[test]
    fn zero_theta_dynamics_scale_by_one_minus_alpha() {
        let g = Graph::complete(3);
        let th = ThetaParams {
            theta_edge: vec![0.0; 3],
            theta_node: vec![0.0; 3],
        };
        let a = AlphaAssignment::uniform(&g, 0.3);
        let z = LogRatioState {
            z: (0..6).map(|i| i as f64 - 2.5).collect(),
        };
        let next = z_update(&th, &a, &g, &z).unwrap();
        for (n, o) in next.z.iter().zip(&z.z) {
            assert!((n - 0.7 * o).abs() < 1e-15);
        }
        // without fields, zero is a fixed point
        let th = ThetaParams {
            theta_edge: vec![0.5, -1.0, 0.2],
            theta_node: vec![0.0; 3],
        };
        let fixed = z_update(&th, &a, &g, &LogRatioState::zeros(&g)).unwrap();
        assert!(fixed.z.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn contraction_on_zero_theta_is_tight() {
        let g = Graph::complete(3);
        let th = ThetaParams {
            theta_edge: vec![0.0; 3],
            theta_node: vec![0.0; 3],
        };
        let a = AlphaAssignment::uniform(&g, 0.4);
        let start = LogRatioState {
            z: vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0],
        };
        let trace = z_trajectory(&th, &a, &g, start, 6).unwrap();
        let report = contraction_check(&th, &a, &g, &trace).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.max_excess.abs() < 1e-14);
        assert!(contraction_check(&th, &a, &g, &trace[..2]).is_err());
    }

    #[test]
    fn theta_from_mrf_rejects_asymmetric_tables() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let mrf = PairwiseMrf::from_potentials(
            g,
            crate::model::Domain::binary(),
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &[vec![vec![2.0, 1.0], vec![1.0, 3.0]]],
        )
        .unwrap();
        assert!(matches!(theta_from_mrf(&mrf), Err(Error::Structure(_))));
        let ising = chain([0.3, -0.2]);
        let th = theta_from_mrf(&crate::model::ising_to_mrf(&ising)).unwrap();
        let direct = theta_from_ising(&ising);
        for (a, b) in th.theta_edge.iter().zip(&direct.theta_edge) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
