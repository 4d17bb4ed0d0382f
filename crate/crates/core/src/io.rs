//! JSON model files.
//!
//! Ising form:
//! `{"n": 3, "domain": [-1, 1], "edges": [[0, 1]], "J": [[0, 1, 0.4]], "b": [0.1, 0, 0]}`.
//! An entry `[s, t, v]` sets both `J_st` and `J_ts`. `edges` may be omitted,
//! in which case the edge set is read from `J`.
//!
//! General form: `{"n", "domain", "unary": [[...], ...], "pairwise": [[s, t, [[...], ...]], ...]}`
//! with linear-scale potentials; the table of `[s, t, table]` is indexed
//! `table[x_s][x_t]`.
//!
//! Either form may carry a `"provenance"` object recording how it was generated.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ising_to_mrf, Domain, Graph, IsingModel, PairwiseMrf};
use crate::randgen::Provenance;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize)>>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    j: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unary: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairwise: Option<Vec<(usize, usize, Vec<Vec<f64>>)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

#[derive(Debug, Clone)]
pub enum ModelFile {
    Ising {
        model: IsingModel,
        provenance: Option<Provenance>,
    },
    General(PairwiseMrf),
}

impl ModelFile {
    pub fn to_mrf(&self) -> PairwiseMrf {
        match self {
            ModelFile::Ising { model, .. } => ising_to_mrf(model),
            ModelFile::General(mrf) => mrf.clone(),
        }
    }

    pub fn ising(&self) -> Option<&IsingModel> {
        match self {
            ModelFile::Ising { model, .. } => Some(model),
            ModelFile::General(_) => None,
        }
    }
}

fn check_node(n: usize, s: usize, what: &str) -> Result<()> {
    if s >= n {
        return Err(Error::Structure(format!("{what} refers to node {s} but n = {n}")));
    }
    Ok(())
}

fn ising_from_raw(raw: &RawModel) -> Result<IsingModel> {
    if let Some(d) = &raw.domain {
        if d.as_slice() != [-1, 1] {
            return Err(Error::Domain(format!("Ising models use the domain [-1, 1], got {d:?}")));
        }
    }
    let n = raw.n;
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(s, t, v) in raw.j.as_deref().unwrap_or(&[]) {
        check_node(n, s, "J entry")?;
        check_node(n, t, "J entry")?;
        let key = (s.min(t), s.max(t));
        if let Some(&old) = entries.get(&key) {
            if old != v {
                return Err(Error::Structure(format!(
                    "J entry ({s}, {t}) given twice with different values {old} and {v}"
                )));
            }
        }
        entries.insert(key, v);
    }
    let edges: Vec<(usize, usize)> = match &raw.edges {
        Some(e) => e.clone(),
        None => entries.keys().filter(|(s, t)| s != t).cloned().collect(),
    };
    let graph = Graph::new(n, edges)?;
    let mut j = DMatrix::zeros(n, n);
    for (&(s, t), &v) in &entries {
        j[(s, t)] = v;
        j[(t, s)] = v;
    }
    let b = match &raw.b {
        Some(b) if b.len() != n => {
            return Err(Error::Structure(format!("b has {} entries for n = {n}", b.len())))
        }
        Some(b) => DVector::from_column_slice(b),
        None => DVector::zeros(n),
    };
    IsingModel::new(graph, j, b)
}

fn general_from_raw(raw: &RawModel) -> Result<PairwiseMrf> {
    let domain = Domain::new(
        raw.domain
            .clone()
            .ok_or_else(|| Error::Structure("general models must list their domain".into()))?,
    )?;
    let n = raw.n;
    let k = domain.size();
    let unary = match &raw.unary {
        Some(u) => u.clone(),
        None => vec![vec![1.0; k]; n],
    };
    let mut tables: BTreeMap<(usize, usize), Vec<Vec<f64>>> = BTreeMap::new();
    for (s, t, table) in raw.pairwise.as_deref().unwrap_or(&[]) {
        let (s, t) = (*s, *t);
        check_node(n, s, "pairwise entry")?;
        check_node(n, t, "pairwise entry")?;
        if table.len() != k || table.iter().any(|r| r.len() != k) {
            return Err(Error::Structure(format!("pairwise table ({s}, {t}) is not {k}x{k}")));
        }
        let canonical = if s <= t {
            table.clone()
        } else {
            (0..k).map(|a| (0..k).map(|b| table[b][a]).collect()).collect()
        };
        let key = (s.min(t), s.max(t));
        if tables.insert(key, canonical).is_some() {
            return Err(Error::Structure(format!("edge ({s}, {t}) has two pairwise tables")));
        }
    }
    let graph = Graph::new(n, tables.keys().cloned())?;
    if let Some(edges) = &raw.edges {
        let listed = Graph::new(n, edges.iter().cloned())?;
        if listed.edges() != graph.edges() {
            return Err(Error::Structure("edges do not match the pairwise tables".into()));
        }
    }
    let pairwise: Vec<Vec<Vec<f64>>> = graph.edges().iter().map(|e| tables[e].clone()).collect();
    PairwiseMrf::from_potentials(graph, domain, &unary, &pairwise)
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    let raw: RawModel = serde_json::from_str(text)?;
    let general = raw.unary.is_some() || raw.pairwise.is_some();
    let ising = raw.j.is_some() || raw.b.is_some();
    match (general, ising) {
        (true, true) => Err(Error::Structure(
            "a model file holds either J/b or unary/pairwise tables, not both".into(),
        )),
        (true, false) => Ok(ModelFile::General(general_from_raw(&raw)?)),
        (false, _) => {
            let binary = raw.domain.as_deref().is_none_or(|d| d == [-1, 1]);
            if !ising && !binary {
                Ok(ModelFile::General(general_from_raw(&raw)?))
            } else {
                Ok(ModelFile::Ising {
                    model: ising_from_raw(&raw)?,
                    provenance: raw.provenance,
                })
            }
        }
    }
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn ising_to_json(model: &IsingModel, provenance: Option<Provenance>) -> String {
    let n = model.num_nodes();
    let mut j: Vec<(usize, usize, f64)> = (0..n)
        .filter(|&s| model.j()[(s, s)] != 0.0)
        .map(|s| (s, s, model.j()[(s, s)]))
        .collect();
    j.extend(model.graph().edges().iter().map(|&(s, t)| (s, t, model.j()[(s, t)])));
    j.sort_by_key(|&(s, t, _)| (s, t));
    let raw = RawModel {
        n,
        domain: Some(vec![-1, 1]),
        edges: Some(model.graph().edges().to_vec()),
        j: Some(j),
        b: Some(model.b().iter().cloned().collect()),
        provenance,
        ..Default::default()
    };
    serde_json::to_string_pretty(&raw).expect("model serialization cannot fail")
}

pub fn mrf_to_json(mrf: &PairwiseMrf) -> String {
    let k = mrf.num_states();
    let raw = RawModel {
        n: mrf.num_nodes(),
        domain: Some(mrf.domain().labels().to_vec()),
        edges: Some(mrf.graph().edges().to_vec()),
        unary: Some(
            (0..mrf.num_nodes())
                .map(|s| (0..k).map(|x| mrf.unary(s, x)).collect())
                .collect(),
        ),
        pairwise: Some(
            mrf.graph()
                .edges()
                .iter()
                .map(|&(s, t)| {
                    let table = (0..k).map(|a| (0..k).map(|b| mrf.pairwise(s, t, a, b)).collect()).collect();
                    (s, t, table)
                })
                .collect(),
        ),
        ..Default::default()
    };
    serde_json::to_string_pretty(&raw).expect("model serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ising_round_trip() {
        let text = r#"{"n": 3, "domain": [-1, 1], "edges": [[0, 1], [1, 2]],
                       "J": [[0, 1, 0.4], [2, 1, 0.2]], "b": [0.1, 0.0, -0.3]}"#;
        let file = parse_model(text).unwrap();
        let model = file.ising().unwrap();
        assert_eq!(model.j()[(1, 2)], 0.2);
        assert_eq!(model.j()[(2, 1)], 0.2);
        let again = parse_model(&ising_to_json(model, None)).unwrap();
        assert_eq!(again.ising().unwrap().j(), model.j());
        assert_eq!(again.ising().unwrap().b(), model.b());
    }

    #[test]
    fn edges_inferred_from_j() {
        let file = parse_model(r#"{"n": 4, "J": [[0, 3, -1.0]]}"#).unwrap();
        assert_eq!(file.ising().unwrap().graph().edges(), &[(0, 3)]);
    }

    #[test]
    fn rejects_malformed() {
        let dup_edge = r#"{"n": 2, "edges": [[0, 1], [1, 0]], "J": [[0, 1, 0.1]]}"#;
        assert!(matches!(parse_model(dup_edge), Err(Error::Structure(_))));
        let asym = r#"{"n": 2, "J": [[0, 1, 0.1], [1, 0, 0.2]]}"#;
        assert!(matches!(parse_model(asym), Err(Error::Structure(_))));
        let off_edge = r#"{"n": 3, "edges": [[0, 1]], "J": [[1, 2, 0.1]]}"#;
        assert!(parse_model(off_edge).is_err());
        let range = r#"{"n": 2, "J": [[0, 5, 0.1]]}"#;
        assert!(parse_model(range).is_err());
        assert!(parse_model("{\"n\": 2, \"bogus\": 1}").is_err());
    }

    #[test]
    fn general_tables_are_oriented() {
        let text = r#"{"n": 2, "domain": [0, 1, 2],
                       "unary": [[1, 2, 3], [1, 1, 1]],
                       "pairwise": [[1, 0, [[1, 2, 3], [4, 5, 6], [7, 8, 9]]]]}"#;
        let ModelFile::General(mrf) = parse_model(text).unwrap() else {
            panic!("expected a general model");
        };
        // table[x_1][x_0]
        assert!((mrf.pairwise(1, 0, 0, 2) - 3.0).abs() < 1e-12);
        assert!((mrf.pairwise(0, 1, 2, 0) - 3.0).abs() < 1e-12);
        let again = match parse_model(&mrf_to_json(&mrf)).unwrap() {
            ModelFile::General(m) => m,
            _ => unreachable!(),
        };
        assert!((again.pairwise(0, 1, 2, 0) - 3.0).abs() < 1e-12);
    }
}
