//! Alpha- and KL-divergences between positive, possibly unnormalized,
//! discrete measures.

use crate::error::{Error, Result};
use crate::model::DiscreteDistribution;

fn check_pair(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::Domain(format!(
            "distributions have different supports ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    p.check_positive("p")?;
    q.check_positive("q")
}

/// `KL(p‖q) = Σ p log(p/q) + Σ (q - p)`.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_pair(p, q)?;
    Ok(p
        .values()
        .iter()
        .zip(q.values())
        .map(|(&a, &b)| a * (a / b).ln() + b - a)
        .sum())
}

/// `D_α(p‖q) = Σ [α p + (1-α) q - p^α q^{1-α}] / (α(1-α))`.
///
/// `α = 1` and `α = 0` return the limits `KL(p‖q)` and `KL(q‖p)`.
pub fn alpha_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_pair(p, q)?;
    if !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be finite, got {alpha}")));
    }
    if alpha == 1.0 {
        return kl_divergence(p, q);
    }
    if alpha == 0.0 {
        return kl_divergence(q, p);
    }
    let num: f64 = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b - a.powf(alpha) * b.powf(1.0 - alpha))
        .sum();
    Ok(num / (alpha * (1.0 - alpha)))
}
