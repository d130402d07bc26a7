use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};

/// Utility family used by the shortfall risk measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityKind {
    /// `u(x) = x`
    Linear,
    /// `u(x) = 1 - exp(-rate * x)`
    Exponential { rate: f64 },
    /// `u(x) = gain * x` for `x >= 0`, `loss * x` otherwise.
    PiecewiseLinear { gain: f64, loss: f64 },
    /// `u(x) = x + a * x^3`; increasing for `a >= 0` but not star-shaped when `a > 0`.
    Cubic { a: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utility {
    #[serde(flatten)]
    pub kind: UtilityKind,
    #[serde(default)]
    pub declared_star_shaped: bool,
}

/// Outcome of the grid audit of a utility's invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityAudit {
    pub increasing: bool,
    pub zero_at_origin: bool,
    /// `None` when star-shapedness was not declared.
    pub star_shaped: Option<bool>,
}

impl UtilityAudit {
    pub fn passed(&self) -> bool {
        self.increasing && self.zero_at_origin && self.star_shaped != Some(false)
    }
}

impl Utility {
    pub fn new(kind: UtilityKind, declared_star_shaped: bool) -> Self {
        Self { kind, declared_star_shaped }
    }

    pub fn exponential(rate: f64) -> Self {
        Self::new(UtilityKind::Exponential { rate }, true)
    }

    pub fn linear() -> Self {
        Self::new(UtilityKind::Linear, true)
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            UtilityKind::Linear => x,
            UtilityKind::Exponential { rate } => -(-rate * x).exp_m1(),
            UtilityKind::PiecewiseLinear { gain, loss } => {
                if x >= 0.0 {
                    gain * x
                } else {
                    loss * x
                }
            }
            UtilityKind::Cubic { a } => x + a * x * x * x,
        }
    }

    /// Grid audit: strictly increasing on `[-10, 10]`, `u(0) = 0`, and if
    /// declared, `u(lambda x) / lambda` non-increasing in `lambda` on a
    /// `(lambda, x)` grid.
    pub fn audit(&self) -> UtilityAudit {
        let xs: Vec<f64> = (-200..=200).map(|k| k as f64 * 0.05).collect();
        let increasing = xs.windows(2).all(|w| self.value(w[1]) > self.value(w[0]));
        let zero_at_origin = self.value(0.0).abs() <= 1e-12;
        let star_shaped = self.declared_star_shaped.then(|| {
            let lambdas: Vec<f64> = (1..=60).map(|k| k as f64 * 0.1).collect();
            xs.iter().all(|&x| {
                lambdas.windows(2).all(|w| {
                    let a = self.value(w[0] * x) / w[0];
                    let b = self.value(w[1] * x) / w[1];
                    b <= a + 1e-12 * (1.0 + a.abs())
                })
            })
        });
        UtilityAudit { increasing, zero_at_origin, star_shaped }
    }

    pub fn validate(&self) -> Result<()> {
        let bad_param = match self.kind {
            UtilityKind::Exponential { rate } => !(rate.is_finite() && rate > 0.0),
            UtilityKind::PiecewiseLinear { gain, loss } => !(gain > 0.0 && loss > 0.0),
            UtilityKind::Cubic { a } => !a.is_finite(),
            UtilityKind::Linear => false,
        };
        if bad_param {
            return Err(RiskError::Parameter(format!("invalid utility parameters: {:?}", self.kind)));
        }
        let audit = self.audit();
        if !audit.passed() {
            return Err(RiskError::InvalidInput(format!("utility fails its invariant checks: {audit:?}")));
        }
        Ok(())
    }
}
