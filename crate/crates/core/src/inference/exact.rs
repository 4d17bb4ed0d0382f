use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, PairwiseMrf};

/// Largest joint state space the brute-force routines will enumerate.
pub const MAX_ENUMERATION: u64 = 1 << 24;

fn state_space(mrf: &PairwiseMrf) -> Result<u64> {
    let k = mrf.num_states() as u64;
    let mut total: u64 = 1;
    for _ in 0..mrf.num_nodes() {
        total = total.saturating_mul(k);
        if total > MAX_ENUMERATION {
            return Err(Error::Capacity(format!(
                "{}^{} joint states exceed the enumeration guard of {MAX_ENUMERATION}",
                k,
                mrf.num_nodes()
            )));
        }
    }
    Ok(total)
}

/// Visits every assignment in lexicographic order of state indices
/// (node 0 most significant).
fn for_each_assignment(mrf: &PairwiseMrf, count: u64, mut visit: impl FnMut(&[usize], f64)) {
    let n = mrf.num_nodes();
    let k = mrf.num_states();
    let mut states = vec![0usize; n];
    for code in 0..count {
        if code > 0 {
            // odometer increment, last node fastest
            let mut i = n;
            while i > 0 {
                i -= 1;
                states[i] += 1;
                if states[i] < k {
                    break;
                }
                states[i] = 0;
            }
        }
        visit(&states, mrf.log_score_indices(&states));
    }
}

/// Exact marginals by full enumeration with a running log-sum-exp.
pub fn exact_marginals(mrf: &PairwiseMrf) -> Result<Vec<DiscreteDistribution>> {
    let count = state_space(mrf)?;
    let n = mrf.num_nodes();
    let k = mrf.num_states();
    let mut shift = f64::NEG_INFINITY;
    let mut acc = vec![0.0; n * k];
    for_each_assignment(mrf, count, |states, score| {
        if score > shift {
            let rescale = (shift - score).exp();
            acc.iter_mut().for_each(|a| *a *= rescale);
            shift = score;
        }
        let w = (score - shift).exp();
        for (s, &x) in states.iter().enumerate() {
            acc[s * k + x] += w;
        }
    });
    Ok(acc
        .chunks(k)
        .map(|c| DiscreteDistribution::new(c.to_vec()).normalized())
        .collect())
}

/// Exhaustive maximizer of the joint score; the lexicographically smallest
/// assignment wins ties. Returned as labels.
pub fn exact_map(mrf: &PairwiseMrf) -> Result<Vec<i64>> {
    let count = state_space(mrf)?;
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0usize; mrf.num_nodes()];
    for_each_assignment(mrf, count, |states, score| {
        if score > best {
            best = score;
            arg.copy_from_slice(states);
        }
    });
    Ok(arg.iter().map(|&x| mrf.domain().label(x)).collect())
}
