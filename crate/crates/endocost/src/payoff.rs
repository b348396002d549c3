//! Coupled payoff, endogenous costs, and interaction-enriched rewards.
//!
//! All three operations are pure. Edge sums run in the graph's sorted edge
//! order and accumulate in the scalar type, so results are deterministic
//! across platforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::scalar::Scalar;

const SUM_TOLERANCE: f64 = 1e-12;
const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// A point on the N-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<S: Scalar> {
    weights: Vec<S>,
}

impl<S: Scalar> Allocation<S> {
    /// Nonnegative weights summing to 1. A sum off by at most 1e-9 is
    /// renormalized; anything worse is an error.
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidAllocation("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(Error::InvalidAllocation(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: S = weights.iter().copied().sum();
        let err = (sum - S::one()).abs().to_f64_lossy();
        if err <= SUM_TOLERANCE {
            return Ok(Self { weights });
        }
        if err <= RENORMALIZE_TOLERANCE {
            let weights = weights.into_iter().map(|w| w / sum).collect();
            return Ok(Self { weights });
        }
        Err(Error::InvalidAllocation(format!(
            "weights sum to {sum}, off by {err} > {RENORMALIZE_TOLERANCE}"
        )))
    }

    pub fn uniform(n: usize) -> Self {
        let w = S::one() / S::from_usize_exact(n);
        Self {
            weights: vec![w; n],
        }
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }
}

/// Per-module intrinsic values, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector<S: Scalar> {
    values: Vec<S>,
}

impl<S: Scalar> ValueVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidValue("empty value vector".into()));
        }
        if values
            .iter()
            .any(|v| !v.is_finite() || *v < S::zero() || *v > S::one())
        {
            return Err(Error::InvalidValue("values must lie in [0, 1]".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// `r_i = v_i + lambda * sum over out-edges of W_ij a_j`.
    #[default]
    OutEdge,
    /// True partial derivative of the payoff over ordered edges:
    /// `r_i = v_i + lambda * sum_j (W_ij + W_ji) a_j`.
    ExactGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector<S: Scalar> {
    pub rewards: Vec<S>,
    pub mode: RewardMode,
}

fn check_dims<S: Scalar>(
    a: &Allocation<S>,
    v: &ValueVector<S>,
    g: &InteractionGraph<S>,
) -> Result<()> {
    if a.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: a.n(),
        });
    }
    if v.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: v.n(),
        });
    }
    Ok(())
}

/// Realized payoff: direct term plus coupled interaction term, edges summed
/// in sorted order.
pub fn payoff<S: Scalar>(
    a: &Allocation<S>,
    v: &ValueVector<S>,
    g: &InteractionGraph<S>,
) -> Result<S> {
    check_dims(a, v, g)?;
    let w = a.weights();
    let mut direct = S::zero();
    for (ai, vi) in w.iter().zip(v.values()) {
        direct += *ai * *vi;
    }
    let mut coupled = S::zero();
    for &(i, j) in g.edges() {
        coupled += g.weight(i, j) * w[i] * w[j];
    }
    Ok(direct + g.lambda() * coupled)
}

/// Endogenous per-module cost, out-edge convention: `c_i = -v_i - lambda *
/// sum over out-edges of W_ij a_j`.
pub fn endogenous_cost<S: Scalar>(
    a: &Allocation<S>,
    v: &ValueVector<S>,
    g: &InteractionGraph<S>,
) -> Result<Vec<S>> {
    let r = reward(a, v, g, RewardMode::OutEdge)?;
    Ok(r.rewards.into_iter().map(|x| -x).collect())
}

/// Interaction-enriched reward, the marginal contribution signal fed to the
/// competitive allocator.
pub fn reward<S: Scalar>(
    a: &Allocation<S>,
    v: &ValueVector<S>,
    g: &InteractionGraph<S>,
    mode: RewardMode,
) -> Result<RewardVector<S>> {
    check_dims(a, v, g)?;
    let w = a.weights();
    let mut coupled = vec![S::zero(); g.n()];
    for &(i, j) in g.edges() {
        coupled[i] += g.weight(i, j) * w[j];
        if mode == RewardMode::ExactGradient {
            coupled[j] += g.weight(i, j) * w[i];
        }
    }
    let rewards = v
        .values()
        .iter()
        .zip(&coupled)
        .map(|(vi, ci)| *vi + g.lambda() * *ci)
        .collect();
    Ok(RewardVector { rewards, mode })
}
