//! Discrete pairwise Markov random fields and the Ising special case.
//!
//! Potentials are held in log space. All public accessors that return a
//! potential on the linear scale exponentiate on the way out, so a stored
//! entry is always strictly positive.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered finite label set. State index `i` refers to `labels[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    labels: Vec<i64>,
}

impl Domain {
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Domain(format!(
                "a domain needs at least two labels, got {}",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::Domain(format!("duplicate label {a}")));
            }
        }
        Ok(Self { labels })
    }

    /// The spin domain `(-1, +1)`; index 0 is `-1`.
    pub fn binary() -> Self {
        Self {
            labels: vec![-1, 1],
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> i64 {
        self.labels[index]
    }

    pub fn index_of(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn is_binary(&self) -> bool {
        self.labels == [-1, 1]
    }
}

/// Simple undirected graph with a fixed directed-edge index.
///
/// Undirected edges are stored as `(s, t)` with `s < t`, sorted
/// lexicographically; edge ids follow that order. Directed edges are indexed
/// lexicographically by `(source, target)`, so the out-edges of node `t`
/// occupy a contiguous block ordered like `neighbors(t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    neighbor_edge: Vec<Vec<usize>>,
    out_offset: Vec<usize>,
    directed: Vec<(usize, usize)>,
    directed_edge: Vec<usize>,
    reverse: Vec<usize>,
}

impl Graph {
    pub fn new<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::Structure(format!(
                    "edge ({a}, {b}) references a node outside 0..{num_nodes}"
                )));
            }
            if a == b {
                return Err(Error::Structure(format!("self-loop on node {a}")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Structure(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut neighbors = vec![Vec::new(); num_nodes];
        let mut neighbor_edge = vec![Vec::new(); num_nodes];
        for (e, &(s, t)) in canon.iter().enumerate() {
            neighbors[s].push(t);
            neighbor_edge[s].push(e);
            neighbors[t].push(s);
            neighbor_edge[t].push(e);
        }
        for v in 0..num_nodes {
            let mut pairs: Vec<(usize, usize)> = neighbors[v]
                .iter()
                .copied()
                .zip(neighbor_edge[v].iter().copied())
                .collect();
            pairs.sort_unstable();
            neighbors[v] = pairs.iter().map(|p| p.0).collect();
            neighbor_edge[v] = pairs.iter().map(|p| p.1).collect();
        }

        let mut out_offset = Vec::with_capacity(num_nodes + 1);
        let mut directed = Vec::with_capacity(2 * canon.len());
        let mut directed_edge = Vec::with_capacity(2 * canon.len());
        for v in 0..num_nodes {
            out_offset.push(directed.len());
            for (k, &w) in neighbors[v].iter().enumerate() {
                directed.push((v, w));
                directed_edge.push(neighbor_edge[v][k]);
            }
        }
        out_offset.push(directed.len());

        let mut graph = Self {
            num_nodes,
            edges: canon,
            neighbors,
            neighbor_edge,
            out_offset,
            directed,
            directed_edge,
            reverse: Vec::new(),
        };
        graph.reverse = (0..graph.directed.len())
            .map(|d| {
                let (src, dst) = graph.directed[d];
                graph
                    .directed_index(dst, src)
                    .expect("adjacency is symmetric")
            })
            .collect();
        Ok(graph)
    }

    /// Graph with no edges.
    pub fn empty(num_nodes: usize) -> Self {
        Self::new(num_nodes, std::iter::empty()).expect("edgeless graph is valid")
    }

    pub fn complete(num_nodes: usize) -> Self {
        let edges = (0..num_nodes).flat_map(|s| (s + 1..num_nodes).map(move |t| (s, t)));
        Self::new(num_nodes, edges).expect("complete graph is valid")
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_directed(&self) -> usize {
        self.directed.len()
    }

    /// Undirected edges in id order, each as `(s, t)` with `s < t`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn edge_id(&self, s: usize, t: usize) -> Option<usize> {
        let k = self.neighbors.get(s)?.binary_search(&t).ok()?;
        Some(self.neighbor_edge[s][k])
    }

    /// `(source, target)` of directed edge `d`.
    pub fn directed(&self, d: usize) -> (usize, usize) {
        self.directed[d]
    }

    pub fn directed_edges(&self) -> &[(usize, usize)] {
        &self.directed
    }

    pub fn directed_index(&self, source: usize, target: usize) -> Option<usize> {
        let k = self.neighbors.get(source)?.binary_search(&target).ok()?;
        Some(self.out_offset[source] + k)
    }

    /// Undirected edge id underlying directed edge `d`.
    pub fn undirected_of(&self, d: usize) -> usize {
        self.directed_edge[d]
    }

    /// Index of the reversed directed edge.
    pub fn reverse(&self, d: usize) -> usize {
        self.reverse[d]
    }

    /// Directed indices of the edges leaving `node`, ordered like `neighbors(node)`.
    pub fn out_edges(&self, node: usize) -> std::ops::Range<usize> {
        self.out_offset[node]..self.out_offset[node + 1]
    }

    /// Directed indices of the edges entering `node`, ordered like `neighbors(node)`.
    pub fn in_edges(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges(node).map(move |d| self.reverse[d])
    }

    /// Connected-component label per node (labels are dense, in order of first node).
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        let mut stack = Vec::new();
        for root in 0..self.num_nodes {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = next;
            stack.push(root);
            while let Some(v) = stack.pop() {
                for &w in &self.neighbors[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// True when the graph is connected and has exactly `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.num_nodes > 0 && self.num_edges() + 1 == self.num_nodes && self.is_connected()
    }
}

/// Nonnegative vector over a domain, used for marginals, beliefs and priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteDistribution(Vec<f64>);

impl DiscreteDistribution {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn uniform(size: usize) -> Self {
        Self(vec![1.0 / size as f64; size])
    }

    /// Normalizes a vector of log-weights with a shifted exponent.
    pub fn from_log_weights(log_weights: &[f64]) -> Self {
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut values: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = values.iter().sum();
        values.iter_mut().for_each(|v| *v /= total);
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn normalized(&self) -> Self {
        let total = self.sum();
        Self(self.0.iter().map(|v| v / total).collect())
    }

    /// Index of the largest entry; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub(crate) fn check_positive(&self, what: &str) -> Result<()> {
        match self.0.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            Some(i) => Err(Error::Domain(format!(
                "{what}: entry {i} = {} is not strictly positive",
                self.0[i]
            ))),
            None => Ok(()),
        }
    }
}

impl From<Vec<f64>> for DiscreteDistribution {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Pairwise MRF `p(x) ∝ Π_s φ_s(x_s) Π_(s,t) φ_st(x_s, x_t)` over a finite domain.
#[derive(Debug, Clone)]
pub struct PairwiseMrf {
    graph: Graph,
    domain: Domain,
    // node-major, `num_nodes * k`
    log_unary: Vec<f64>,
    // edge-major, `num_edges * k * k`, entry `[e][x_s * k + x_t]` for canonical (s, t)
    log_pairwise: Vec<f64>,
}

impl PairwiseMrf {
    /// Builds from log-potentials. `log_unary[s][x]` and, for each edge id
    /// `e = (s, t)` with `s < t`, `log_pairwise[e][x_s][x_t]`.
    pub fn from_log_potentials(
        graph: Graph,
        domain: Domain,
        log_unary: &[Vec<f64>],
        log_pairwise: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let k = domain.size();
        if log_unary.len() != graph.num_nodes() {
            return Err(Error::Structure(format!(
                "expected {} unary tables, got {}",
                graph.num_nodes(),
                log_unary.len()
            )));
        }
        if log_pairwise.len() != graph.num_edges() {
            return Err(Error::Structure(format!(
                "expected {} pairwise tables, got {}",
                graph.num_edges(),
                log_pairwise.len()
            )));
        }
        let mut unary = Vec::with_capacity(graph.num_nodes() * k);
        for (s, row) in log_unary.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Structure(format!(
                    "unary table of node {s} has {} entries, domain has {k}",
                    row.len()
                )));
            }
            unary.extend_from_slice(row);
        }
        let mut pairwise = Vec::with_capacity(graph.num_edges() * k * k);
        for (e, table) in log_pairwise.iter().enumerate() {
            if table.len() != k || table.iter().any(|r| r.len() != k) {
                return Err(Error::Structure(format!(
                    "pairwise table of edge {:?} is not {k}x{k}",
                    graph.edges()[e]
                )));
            }
            for row in table {
                pairwise.extend_from_slice(row);
            }
        }
        if let Some(v) = unary.iter().chain(pairwise.iter()).find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "log-potential {v} does not correspond to a positive finite potential"
            )));
        }
        Ok(Self {
            graph,
            domain,
            log_unary: unary,
            log_pairwise: pairwise,
        })
    }

    /// Builds from linear-scale potentials; every entry must be strictly positive.
    pub fn from_potentials(
        graph: Graph,
        domain: Domain,
        unary: &[Vec<f64>],
        pairwise: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let check = |v: f64| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v.ln())
            } else {
                Err(Error::Domain(format!("potential entry {v} is not strictly positive")))
            }
        };
        let log_unary = unary
            .iter()
            .map(|row| row.iter().map(|&v| check(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let log_pairwise = pairwise
            .iter()
            .map(|table| {
                table
                    .iter()
                    .map(|row| row.iter().map(|&v| check(v)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_log_potentials(graph, domain, &log_unary, &log_pairwise)
    }

    /// All potentials equal to one.
    pub fn uniform(graph: Graph, domain: Domain) -> Self {
        let k = domain.size();
        Self {
            log_unary: vec![0.0; graph.num_nodes() * k],
            log_pairwise: vec![0.0; graph.num_edges() * k * k],
            graph,
            domain,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_states(&self) -> usize {
        self.domain.size()
    }

    pub fn log_unary(&self, node: usize, x: usize) -> f64 {
        self.log_unary[node * self.domain.size() + x]
    }

    pub fn unary(&self, node: usize, x: usize) -> f64 {
        self.log_unary(node, x).exp()
    }

    /// `log φ_st(x_s, x_t)`; either orientation of an edge may be queried.
    ///
    /// Panics if `(s, t)` is not an edge.
    pub fn log_pairwise(&self, s: usize, t: usize, x_s: usize, x_t: usize) -> f64 {
        let e = self
            .graph
            .edge_id(s, t)
            .unwrap_or_else(|| panic!("({s}, {t}) is not an edge"));
        if s < t {
            self.log_pairwise_edge(e, x_s, x_t)
        } else {
            self.log_pairwise_edge(e, x_t, x_s)
        }
    }

    pub fn pairwise(&self, s: usize, t: usize, x_s: usize, x_t: usize) -> f64 {
        self.log_pairwise(s, t, x_s, x_t).exp()
    }

    /// Log-potential of edge id `e` in its canonical `(low, high)` orientation.
    pub fn log_pairwise_edge(&self, e: usize, x_low: usize, x_high: usize) -> f64 {
        let k = self.domain.size();
        self.log_pairwise[e * k * k + x_low * k + x_high]
    }

    /// `log φ_st(x_s, x_t)` where `(s, t) = graph.directed(d)`.
    #[inline]
    pub(crate) fn log_pairwise_directed(&self, d: usize, x_src: usize, x_dst: usize) -> f64 {
        let (src, dst) = self.graph.directed(d);
        let e = self.graph.undirected_of(d);
        if src < dst {
            self.log_pairwise_edge(e, x_src, x_dst)
        } else {
            self.log_pairwise_edge(e, x_dst, x_src)
        }
    }

    /// Same model with every unary log-potential shifted by `log_factor[s][x]`.
    pub(crate) fn with_log_unary_factors(&self, log_factor: &[Vec<f64>]) -> Self {
        let k = self.domain.size();
        let mut out = self.clone();
        for (s, row) in log_factor.iter().enumerate() {
            for (x, &l) in row.iter().enumerate() {
                out.log_unary[s * k + x] += l;
            }
        }
        out
    }

    /// Unnormalized log-probability of an assignment given as state indices.
    pub fn log_score_indices(&self, states: &[usize]) -> f64 {
        let k = self.domain.size();
        let mut score: f64 = states
            .iter()
            .enumerate()
            .map(|(s, &x)| self.log_unary[s * k + x])
            .sum();
        for (e, &(s, t)) in self.graph.edges().iter().enumerate() {
            score += self.log_pairwise[e * k * k + states[s] * k + states[t]];
        }
        score
    }

    /// Converts a label assignment into state indices.
    pub fn states_of(&self, assignment: &[i64]) -> Result<Vec<usize>> {
        if assignment.len() != self.num_nodes() {
            return Err(Error::Domain(format!(
                "assignment has length {}, model has {} nodes",
                assignment.len(),
                self.num_nodes()
            )));
        }
        assignment
            .iter()
            .map(|&label| {
                self.domain
                    .index_of(label)
                    .ok_or_else(|| Error::Domain(format!("label {label} is not in the domain")))
            })
            .collect()
    }
}

/// `Σ_s log φ_s(x_s) + Σ_(s,t) log φ_st(x_s, x_t)` for a label assignment.
pub fn mrf_log_score(mrf: &PairwiseMrf, assignment: &[i64]) -> Result<f64> {
    let states = mrf.states_of(assignment)?;
    Ok(mrf.log_score_indices(&states))
}

/// Binary Ising model `p(x) ∝ exp{-xᵀJx - bᵀx}` on `x ∈ {-1, +1}^N`.
#[derive(Debug, Clone)]
pub struct IsingModel {
    graph: Graph,
    j: DMatrix<f64>,
    b: DVector<f64>,
}

impl IsingModel {
    /// Builds from an explicit edge set; `j` must be symmetric and vanish off
    /// the edge set (the diagonal is unrestricted).
    pub fn new(graph: Graph, j: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = graph.num_nodes();
        if j.nrows() != n || j.ncols() != n || b.len() != n {
            return Err(Error::Structure(format!(
                "J is {}x{} and b has {} entries for a {n}-node graph",
                j.nrows(),
                j.ncols(),
                b.len()
            )));
        }
        for s in 0..n {
            for t in 0..n {
                if j[(s, t)] != j[(t, s)] {
                    return Err(Error::Structure(format!(
                        "J is not symmetric at ({s}, {t}): {} vs {}",
                        j[(s, t)],
                        j[(t, s)]
                    )));
                }
                if s != t && j[(s, t)] != 0.0 && graph.edge_id(s, t).is_none() {
                    return Err(Error::Structure(format!(
                        "J[{s},{t}] = {} but ({s}, {t}) is not an edge",
                        j[(s, t)]
                    )));
                }
            }
        }
        if let Some(v) = j.iter().chain(b.iter()).find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite Ising parameter {v}")));
        }
        Ok(Self { graph, j, b })
    }

    /// Builds with the edge set taken from the off-diagonal nonzero pattern of `j`.
    pub fn from_matrix(j: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::Structure("J must be square".into()));
        }
        let n = j.nrows();
        let edges: Vec<_> = (0..n)
            .flat_map(|s| (s + 1..n).map(move |t| (s, t)))
            .filter(|&(s, t)| j[(s, t)] != 0.0 || j[(t, s)] != 0.0)
            .collect();
        Self::new(Graph::new(n, edges)?, j, b)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// `-xᵀJx - bᵀx` for a spin assignment.
    pub fn energy_exponent(&self, spins: &[i64]) -> f64 {
        let x = DVector::from_iterator(spins.len(), spins.iter().map(|&v| v as f64));
        -(x.transpose() * &self.j * &x)[(0, 0)] - self.b.dot(&x)
    }
}

/// Pairwise MRF with `φ_st(x_s, x_t) = e^{-2 J_st x_s x_t}` and `φ_s(x_s) = e^{-b_s x_s}`.
///
/// The `e^{-J_ss}` factor is assignment-independent on spins and is dropped.
pub fn ising_to_mrf(model: &IsingModel) -> PairwiseMrf {
    let domain = Domain::binary();
    let spins = [-1.0, 1.0];
    let log_unary: Vec<Vec<f64>> = (0..model.num_nodes())
        .map(|s| spins.iter().map(|x| -model.b[s] * x).collect())
        .collect();
    let log_pairwise: Vec<Vec<Vec<f64>>> = model
        .graph
        .edges()
        .iter()
        .map(|&(s, t)| {
            let coupling = model.j[(s, t)];
            spins
                .iter()
                .map(|xs| spins.iter().map(|xt| -2.0 * coupling * xs * xt).collect())
                .collect()
        })
        .collect();
    PairwiseMrf::from_log_potentials(model.graph.clone(), domain, &log_unary, &log_pairwise)
        .expect("Ising parameters are validated at construction")
}
