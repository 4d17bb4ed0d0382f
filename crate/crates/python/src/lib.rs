//! Python module `alphabp`.

use alphabp::convergence::{certify as certify_model, theta_from_ising, theta_from_mrf};
use alphabp::inference::{
    edge_appearance_probabilities, exact_map as map_assignment, exact_marginals as marginals_of,
    mean_field_run, run_alpha_bp, run_damped_bp, run_trw, AnnealSchedule, BeliefResult,
    RunConfig,
};
use alphabp::io::{ising_to_json, mrf_to_json, parse_model, ModelFile};
use alphabp::mimo::{ser_experiment, Algorithm, SerConfig};
use alphabp::model::{DiscreteDistribution, IsingModel};
use alphabp::randgen::{erdos_renyi, sample_certified, sample_ising, GraphSpec, PotentialSpec};
use alphabp::{AlphaAssignment, Error};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical { .. } | Error::DegenerateMessage { .. } | Error::SamplingExhausted { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A pairwise model: Ising (spins ±1) or a general discrete MRF.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: ModelFile,
}

#[pymethods]
impl PyModel {
    /// Ising model from `(s, t, J_st)` couplings and per-node fields `b`.
    #[staticmethod]
    fn ising(n: usize, couplings: Vec<(usize, usize, f64)>, fields: Vec<f64>) -> PyResult<Self> {
        let edges = couplings.iter().map(|&(s, t, _)| (s, t));
        let graph = alphabp::Graph::new(n, edges).map_err(to_py)?;
        let mut j = DMatrix::zeros(n, n);
        for &(s, t, v) in &couplings {
            j[(s, t)] = v;
            j[(t, s)] = v;
        }
        let b = DVector::from_vec(fields);
        let model = IsingModel::new(graph, j, b).map_err(to_py)?;
        Ok(Self {
            inner: ModelFile::Ising { model, provenance: None },
        })
    }

    /// Parses the JSON model format used by the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_model(text).map_err(to_py)?,
        })
    }

    /// Erdős–Rényi graph with Gaussian couplings and fields of scale `sigma`.
    #[staticmethod]
    #[pyo3(signature = (n, gamma, sigma, seed=0))]
    fn random(n: usize, gamma: f64, sigma: f64, seed: u64) -> PyResult<Self> {
        let graph = erdos_renyi(&GraphSpec { n, gamma, seed }).map_err(to_py)?;
        let model = sample_ising(&graph, &PotentialSpec { sigma, seed }).map_err(to_py)?;
        Ok(Self {
            inner: ModelFile::Ising { model, provenance: None },
        })
    }

    /// Redraws random models until the convergence certificate holds at `alpha`.
    /// Returns `(model, retries, lambda_star)`.
    #[staticmethod]
    #[pyo3(signature = (n, gamma, sigma, alpha, seed=0, max_retries=1000))]
    fn random_certified(
        n: usize,
        gamma: f64,
        sigma: f64,
        alpha: f64,
        seed: u64,
        max_retries: usize,
    ) -> PyResult<(Self, usize, f64)> {
        let s = sample_certified(&GraphSpec { n, gamma, seed }, &PotentialSpec { sigma, seed }, alpha, max_retries)
            .map_err(to_py)?;
        let model = Self {
            inner: ModelFile::Ising {
                model: s.model,
                provenance: None,
            },
        };
        Ok((model, s.retries, s.lambda_star))
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.to_mrf().num_nodes()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.to_mrf().graph().edges().to_vec()
    }

    fn to_json(&self) -> String {
        match &self.inner {
            ModelFile::Ising { model, provenance } => ising_to_json(model, *provenance),
            ModelFile::General(mrf) => mrf_to_json(mrf),
        }
    }

    fn __repr__(&self) -> String {
        let kind = if self.inner.ising().is_some() { "ising" } else { "general" };
        format!("Model({kind}, nodes={}, edges={})", self.num_nodes(), self.edges().len())
    }
}

#[pyclass(name = "Certificate", frozen, get_all)]
struct PyCertificate {
    lambda_star: f64,
    l1: f64,
    linf: f64,
    theorem1: bool,
    corollary_l1: bool,
    corollary_linf: bool,
}

#[pymethods]
impl PyCertificate {
    fn __repr__(&self) -> String {
        format!(
            "Certificate(lambda_star={}, l1={}, linf={}, theorem1={})",
            self.lambda_star,
            self.l1,
            self.linf,
            py_bool(self.theorem1)
        )
    }
}

#[pyclass(name = "BeliefResult", frozen, get_all)]
struct PyBeliefResult {
    converged: bool,
    iterations: usize,
    residuals: Vec<f64>,
    marginals: Vec<Vec<f64>>,
}

impl From<BeliefResult> for PyBeliefResult {
    fn from(r: BeliefResult) -> Self {
        Self {
            converged: r.converged,
            iterations: r.iterations_used,
            residuals: r.residual_trace,
            marginals: r.marginals.iter().map(|m| m.values().to_vec()).collect(),
        }
    }
}

#[pymethods]
impl PyBeliefResult {
    fn __repr__(&self) -> String {
        format!("BeliefResult(converged={}, iterations={})", py_bool(self.converged), self.iterations)
    }
}

#[pyclass(name = "SerPoint", frozen, get_all)]
struct PySerPoint {
    snr_db: f64,
    algorithm: String,
    alpha: Option<f64>,
    trials: usize,
    symbol_errors: u64,
    ser: f64,
}

/// Convergence certificate of α-BP with a uniform `alpha` on a binary model.
#[pyfunction]
fn certify(model: &PyModel, alpha: f64) -> PyResult<PyCertificate> {
    let (theta, graph) = match &model.inner {
        ModelFile::Ising { model, .. } => (theta_from_ising(model), model.graph().clone()),
        ModelFile::General(mrf) => (theta_from_mrf(mrf).map_err(to_py)?, mrf.graph().clone()),
    };
    let c = certify_model(&theta, &AlphaAssignment::uniform(&graph, alpha), &graph).map_err(to_py)?;
    Ok(PyCertificate {
        lambda_star: c.lambda_star,
        l1: c.l1_norm,
        linf: c.linf_norm,
        theorem1: c.theorem1_holds,
        corollary_l1: c.corollary_l1_holds,
        corollary_linf: c.corollary_linf_holds,
    })
}

/// Runs one of `bp`, `alpha-bp`, `damped`, `mf`, `trw` or `exact`.
///
/// `anneal=(start, end)` moves α linearly over `max_iter` sweeps (alpha-bp only).
#[pyfunction]
#[pyo3(signature = (model, algo="bp", alpha=None, gamma=0.5, max_iter=200, tol=1e-6, anneal=None, seed=None))]
#[allow(clippy::too_many_arguments)]
fn infer(
    model: &PyModel,
    algo: &str,
    alpha: Option<f64>,
    gamma: f64,
    max_iter: usize,
    tol: f64,
    anneal: Option<(f64, f64)>,
    seed: Option<u64>,
) -> PyResult<PyBeliefResult> {
    let mrf = model.inner.to_mrf();
    let mut config = RunConfig {
        max_iterations: max_iter,
        tolerance: tol,
        seed,
        ..RunConfig::default()
    };
    if anneal.is_some() && algo != "alpha-bp" {
        return Err(PyValueError::new_err("anneal applies to alpha-bp only"));
    }
    let result = match algo {
        "exact" => BeliefResult {
            converged: true,
            iterations_used: 0,
            residual_trace: Vec::new(),
            marginals: marginals_of(&mrf).map_err(to_py)?,
            final_messages: None,
        },
        "bp" => run_alpha_bp(&mrf, &AlphaAssignment::uniform(mrf.graph(), 1.0), &config).map_err(to_py)?,
        "alpha-bp" => {
            if let Some((a, b)) = anneal {
                config.anneal = Some(AnnealSchedule::new(a, b, max_iter).map_err(to_py)?);
            }
            let a = alpha
                .or(anneal.map(|(a, _)| a))
                .ok_or_else(|| PyValueError::new_err("alpha-bp needs alpha or anneal"))?;
            run_alpha_bp(&mrf, &AlphaAssignment::uniform(mrf.graph(), a), &config).map_err(to_py)?
        }
        "damped" => run_damped_bp(&mrf, gamma, &config).map_err(to_py)?,
        "mf" => mean_field_run(&mrf, &config).map_err(to_py)?,
        "trw" => {
            let mu = edge_appearance_probabilities(mrf.graph()).map_err(to_py)?;
            run_trw(&mrf, &mu, &config).map_err(to_py)?
        }
        other => return Err(PyValueError::new_err(format!("unknown algorithm '{other}'"))),
    };
    Ok(result.into())
}

/// Exact marginals by enumeration.
#[pyfunction]
fn exact_marginals(model: &PyModel) -> PyResult<Vec<Vec<f64>>> {
    let m = marginals_of(&model.inner.to_mrf()).map_err(to_py)?;
    Ok(m.iter().map(|d| d.values().to_vec()).collect())
}

/// Most probable joint assignment, as domain labels.
#[pyfunction]
fn exact_map(model: &PyModel) -> PyResult<Vec<i64>> {
    map_assignment(&model.inner.to_mrf()).map_err(to_py)
}

fn distribution(v: Vec<f64>) -> DiscreteDistribution {
    DiscreteDistribution::new(v)
}

#[pyfunction]
fn alpha_divergence(p: Vec<f64>, q: Vec<f64>, alpha: f64) -> PyResult<f64> {
    alphabp::alpha_divergence(&distribution(p), &distribution(q), alpha).map_err(to_py)
}

#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    alphabp::kl_divergence(&distribution(p), &distribution(q)).map_err(to_py)
}

/// Monte Carlo symbol error rates of BPSK detection over an `n x n` Gaussian channel.
///
/// `algorithms` take the command-line spellings, e.g. `"map"`, `"mmse"`,
/// `"alpha-bp:0.5"`, `"alpha-bp-mmse:0.5"`.
#[pyfunction]
#[pyo3(signature = (n, snr_db, trials, algorithms, seed=7, fixed_channel=false))]
fn mimo_ser(
    n: usize,
    snr_db: Vec<f64>,
    trials: usize,
    algorithms: Vec<String>,
    seed: u64,
    fixed_channel: bool,
) -> PyResult<Vec<PySerPoint>> {
    let algorithms = algorithms
        .iter()
        .map(|a| a.parse::<Algorithm>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let mut config = SerConfig::new(n, snr_db, trials, algorithms, seed);
    config.fresh_channel = !fixed_channel;
    let points = ser_experiment(&config).map_err(to_py)?;
    Ok(points
        .into_iter()
        .map(|p| PySerPoint {
            snr_db: p.snr_db,
            algorithm: p.algorithm,
            alpha: p.alpha,
            trials: p.trials,
            symbol_errors: p.symbol_errors,
            ser: p.ser,
        })
        .collect())
}

#[pymodule]
#[pyo3(name = "alphabp")]
fn alphabp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyBeliefResult>()?;
    m.add_class::<PySerPoint>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(exact_marginals, m)?)?;
    m.add_function(wrap_pyfunction!(exact_map, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(mimo_ser, m)?)?;
    Ok(())
}
