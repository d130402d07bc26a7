use serde::{Deserialize, Serialize};

use super::tree::ScenarioTree;
use crate::error::{Result, RiskError};

/// A terminal-measurable payoff: one value per leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomVariable(Vec<f64>);

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RiskError::InvalidInput(format!("payoff value at leaf {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn constant(tree: &ScenarioTree, c: f64) -> Self {
        Self(vec![c; tree.leaf_count()])
    }

    pub fn zeros(tree: &ScenarioTree) -> Self {
        Self::constant(tree, 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, tree: &ScenarioTree) -> Result<()> {
        if self.0.len() != tree.leaf_count() {
            return Err(RiskError::Mismatch(format!(
                "payoff has {} values but the tree has {} leaves",
                self.0.len(),
                tree.leaf_count()
            )));
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(RiskError::InvalidInput("payoff has non-finite values".into()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.0.len(), other.0.len(), "payoff length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    /// `X + lift(m)` for a profile `m`.
    pub fn add_profile(&self, tree: &ScenarioTree, m: &Profile) -> Self {
        self.combine_profile(tree, m, |x, a| x + a)
    }

    /// `lift(alpha) * X` for a profile `alpha`.
    pub fn mul_profile(&self, tree: &ScenarioTree, alpha: &Profile) -> Self {
        self.combine_profile(tree, alpha, |x, a| a * x)
    }

    fn combine_profile(&self, tree: &ScenarioTree, p: &Profile, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self.0.clone();
        for (i, &a) in p.values().iter().enumerate() {
            for leaf in tree.leaf_range(p.level(), i) {
                out[leaf] = f(out[leaf], a);
            }
        }
        Self(out)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self <= other` leafwise.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// A level-`t` measurable quantity: one value per node of level `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    level: usize,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(level: usize, values: Vec<f64>) -> Self {
        Self { level, values }
    }

    pub fn constant(tree: &ScenarioTree, level: usize, c: f64) -> Self {
        Self::new(level, vec![c; tree.node_count(level)])
    }

    pub fn check(&self, tree: &ScenarioTree) -> Result<()> {
        tree.check_level(self.level)?;
        if self.values.len() != tree.node_count(self.level) {
            return Err(RiskError::Mismatch(format!(
                "profile has {} values but level {} has {} nodes",
                self.values.len(),
                self.level,
                tree.node_count(self.level)
            )));
        }
        Ok(())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.level, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.level, other.level, "profile level mismatch");
        Self::new(self.level, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Scalar value of a level-0 profile.
    pub fn root(&self) -> f64 {
        self.values[0]
    }
}

/// A node-indexed process: one value per node of every level it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedProcess {
    levels: Vec<Vec<f64>>,
}

impl AdaptedProcess {
    pub fn new(levels: Vec<Vec<f64>>) -> Self {
        Self { levels }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn at(&self, level: usize) -> &[f64] {
        &self.levels[level]
    }

    pub fn profile(&self, level: usize) -> Profile {
        Profile::new(level, self.levels[level].clone())
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }
}
