//! Value-sequence generators and the variation tracker.
//!
//! Every generator is a deterministic function of (spec, n, horizon, seed);
//! the same inputs reproduce a bit-identical sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::payoff::ValueVector;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// A fixed value vector: explicit `values`, or drawn once uniformly from
    /// `[value_floor, 1]^N`.
    Stationary {
        #[serde(default)]
        values: Option<Vec<f64>>,
        #[serde(default)]
        value_floor: f64,
    },
    /// Switches between `e_1` and `e_2` every `phase_len` rounds
    /// (default `T/2`, i.e. a single switch).
    Alternating {
        #[serde(default)]
        phase_len: Option<u64>,
    },
    /// `v_t = clamp(v_{t-1} + drift * zeta_t, 0, 1)`, zeta i.i.d. uniform on
    /// `[-1, 1]^N`.
    BoundedDrift { drift: f64 },
    /// `v_{t,i} = 1/2 + delta * xi_{t,i}` with Rademacher `xi`; the direct
    /// values carry no information about the interaction-determined optimum.
    InteractionDominant { delta: f64 },
}

impl EnvironmentSpec {
    pub fn label(&self) -> &'static str {
        match self {
            EnvironmentSpec::Stationary { .. } => "stationary",
            EnvironmentSpec::Alternating { .. } => "alternating",
            EnvironmentSpec::BoundedDrift { .. } => "bounded-drift",
            EnvironmentSpec::InteractionDominant { .. } => "interaction-dominant",
        }
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, EnvironmentSpec::Stationary { .. })
    }
}

/// Sequential value generator for one run. `next_value` must be called with
/// `t = 1, 2, ..., T` in order.
#[derive(Debug, Clone)]
pub struct Environment<S: Scalar> {
    spec: EnvironmentSpec,
    n: usize,
    horizon: u64,
    rng: ChaCha8Rng,
    expected_t: u64,
    fixed: Option<Vec<S>>,
    prev: Option<Vec<S>>,
}

impl<S: Scalar> Environment<S> {
    pub fn new(spec: &EnvironmentSpec, n: usize, horizon: u64, seed: u64) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if n < 2 {
            return Err(Error::InvalidSize(format!("module count {n} < 2")));
        }
        match spec {
            EnvironmentSpec::Stationary {
                values,
                value_floor,
            } => {
                if let Some(values) = values {
                    if values.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: values.len(),
                        });
                    }
                }
                if !(0.0..=1.0).contains(value_floor) {
                    return Err(Error::Config("value_floor must lie in [0, 1]".into()));
                }
            }
            EnvironmentSpec::Alternating { phase_len } => {
                if phase_len == &Some(0) {
                    return Err(Error::Config("phase_len must be >= 1".into()));
                }
            }
            EnvironmentSpec::BoundedDrift { drift } => {
                if !drift.is_finite() || *drift < 0.0 {
                    return Err(Error::Config("drift must be finite and >= 0".into()));
                }
            }
            EnvironmentSpec::InteractionDominant { delta } => {
                if !(0.0..=0.5).contains(delta) {
                    return Err(Error::Config("delta must lie in [0, 0.5]".into()));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fixed = match spec {
            EnvironmentSpec::Stationary {
                values,
                value_floor,
            } => Some(match values {
                Some(values) => {
                    let v: Vec<S> = values.iter().map(|x| S::from_real(*x)).collect();
                    ValueVector::new(v.clone())?;
                    if values.iter().any(|x| x < value_floor) {
                        return Err(Error::Config(
                            "explicit stationary values fall below value_floor".into(),
                        ));
                    }
                    v
                }
                None => (0..n)
                    .map(|_| S::from_real(rng.gen_range(*value_floor..=1.0)))
                    .collect(),
            }),
            _ => None,
        };
        Ok(Self {
            spec: spec.clone(),
            n,
            horizon,
            rng,
            expected_t: 1,
            fixed,
            prev: None,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    /// Value vector for round `t`; rounds must be consumed in order.
    pub fn next_value(&mut self, t: u64) -> Result<ValueVector<S>> {
        if t < 1 || t > self.horizon {
            return Err(Error::RoundOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        if t != self.expected_t {
            return Err(Error::Config(format!(
                "values must be drawn sequentially: expected round {}, got {t}",
                self.expected_t
            )));
        }
        self.expected_t += 1;
        let values: Vec<S> = match &self.spec {
            EnvironmentSpec::Stationary { .. } => {
                self.fixed.clone().expect("stationary values drawn at init")
            }
            EnvironmentSpec::Alternating { phase_len } => {
                let phase = phase_len.unwrap_or_else(|| (self.horizon / 2).max(1));
                let on_first = ((t - 1) / phase) % 2 == 0;
                let mut v = vec![S::zero(); self.n];
                v[if on_first { 0 } else { 1 }] = S::one();
                v
            }
            EnvironmentSpec::BoundedDrift { drift } => {
                let prev = match &self.prev {
                    Some(prev) => prev.clone(),
                    None => (0..self.n)
                        .map(|_| S::from_real(self.rng.gen_range(0.0..=1.0)))
                        .collect(),
                };
                prev.iter()
                    .map(|p| {
                        let step = drift * self.rng.gen_range(-1.0..=1.0);
                        S::from_real((p.to_f64_lossy() + step).clamp(0.0, 1.0))
                    })
                    .collect()
            }
            EnvironmentSpec::InteractionDominant { delta } => (0..self.n)
                .map(|_| {
                    let xi: f64 = if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    S::from_real(0.5 + delta * xi)
                })
                .collect(),
        };
        self.prev = Some(values.clone());
        ValueVector::new(values)
    }
}

/// Running sup-norm variation `V_t = sum_{s<=t} ||v_s - v_{s-1}||_inf`.
#[derive(Debug, Clone, Default)]
pub struct VariationTracker<S: Scalar> {
    total: Option<S>,
}

impl<S: Scalar> VariationTracker<S> {
    pub fn new() -> Self {
        Self { total: None }
    }

    pub fn update(&mut self, prev: &ValueVector<S>, cur: &ValueVector<S>) -> Result<()> {
        if prev.n() != cur.n() {
            return Err(Error::DimensionMismatch {
                expected: prev.n(),
                got: cur.n(),
            });
        }
        let inf_norm = prev
            .values()
            .iter()
            .zip(cur.values())
            .map(|(a, b)| (*a - *b).abs())
            .fold(S::zero(), S::max);
        self.total = Some(self.total.unwrap_or_else(S::zero) + inf_norm);
        Ok(())
    }

    pub fn total(&self) -> S {
        self.total.unwrap_or_else(S::zero)
    }
}
