use serde::{Deserialize, Serialize};

use super::tree::ScenarioTree;
use super::variable::RandomVariable;
use crate::error::{Result, RiskError};

/// Payoff description as found in model files: explicit leaf values, or a
/// functional of the driver path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayoffSpec {
    Leaves {
        leaf_values: Vec<f64>,
    },
    Functional {
        functional: PathFunctional,
        #[serde(default)]
        params: FunctionalParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFunctional {
    /// `B_T`, the sum of the path increments.
    OfTerminalSum,
    /// `max_k B_k` over the path including `B_0 = 0`.
    OfPathMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    /// `max(s - strike, 0)`
    Call,
    /// `max(strike - s, 0)`
    Put,
    /// `1{s > strike}`
    Digital,
}

/// Payoff value is `scale * transform(statistic) + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalParams {
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub strike: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub shift: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for FunctionalParams {
    fn default() -> Self {
        Self { transform: Transform::Identity, strike: 0.0, scale: 1.0, shift: 0.0 }
    }
}

impl FunctionalParams {
    pub fn apply(&self, s: f64) -> f64 {
        let v = match self.transform {
            Transform::Identity => s,
            Transform::Call => (s - self.strike).max(0.0),
            Transform::Put => (self.strike - s).max(0.0),
            Transform::Digital => {
                if s > self.strike {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.scale * v + self.shift
    }
}

impl PathFunctional {
    pub fn statistic(&self, path: &[f64]) -> f64 {
        match self {
            PathFunctional::OfTerminalSum => *path.last().unwrap_or(&0.0),
            PathFunctional::OfPathMax => path.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl PayoffSpec {
    pub fn terminal_sum(params: FunctionalParams) -> Self {
        PayoffSpec::Functional { functional: PathFunctional::OfTerminalSum, params }
    }

    pub fn realize(&self, tree: &ScenarioTree) -> Result<RandomVariable> {
        match self {
            PayoffSpec::Leaves { leaf_values } => {
                let x = RandomVariable::new(leaf_values.clone())?;
                x.check(tree)?;
                Ok(x)
            }
            PayoffSpec::Functional { functional, params } => {
                if !tree.has_increments() {
                    return Err(RiskError::Mismatch("path functionals need a tree with increments".into()));
                }
                let vals = (0..tree.leaf_count())
                    .map(|leaf| {
                        let path = tree.path_values(leaf).expect("tree has increments");
                        params.apply(functional.statistic(&path))
                    })
                    .collect();
                RandomVariable::new(vals)
            }
        }
    }
}
