use serde::{Deserialize, Serialize};

use super::tree::{ScenarioTree, STOCHASTIC_TOL};
use crate::error::{Result, RiskError};

/// Alternative transition probabilities, one row per non-leaf node
/// (`transitions[level][node][child]`). The density with respect to the
/// reference measure along a path is the product of the row ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureChange {
    transitions: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    equivalent: Option<bool>,
}

impl MeasureChange {
    /// Builds and validates a measure change against `tree`.
    pub fn new(tree: &ScenarioTree, transitions: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let mut mc = Self { transitions, equivalent: None };
        mc.validate(tree)?;
        mc.equivalent = Some(mc.compute_equivalent());
        Ok(mc)
    }

    /// The reference measure P itself.
    pub fn reference(tree: &ScenarioTree) -> Self {
        let transitions = (0..tree.depth())
            .map(|l| (0..tree.node_count(l)).map(|i| tree.transition_probs(l, i).to_vec()).collect())
            .collect();
        Self { transitions, equivalent: Some(true) }
    }

    /// Point mass on the path to `leaf`; rows off the path keep the reference transitions.
    pub fn point_mass_path(tree: &ScenarioTree, leaf: usize) -> Self {
        let mut mc = Self::reference(tree);
        let n = tree.depth();
        for l in 0..n {
            let anc = tree.ancestor_of_leaf(leaf, l);
            let target = tree.ancestor_of_leaf(leaf, l + 1);
            let ch = tree.children(l, anc);
            let row = &mut mc.transitions[l][anc];
            for (k, c) in ch.enumerate() {
                row[k] = if c == target { 1.0 } else { 0.0 };
            }
        }
        mc.equivalent = Some(mc.compute_equivalent());
        mc
    }

    /// Shape, sign and row-sum checks against `tree`; also reconciles the `equivalent` flag.
    pub fn validate(&self, tree: &ScenarioTree) -> Result<()> {
        if self.transitions.len() != tree.depth() {
            return Err(RiskError::Mismatch(format!(
                "measure change covers {} levels, tree has {}",
                self.transitions.len(),
                tree.depth()
            )));
        }
        for (l, rows) in self.transitions.iter().enumerate() {
            if rows.len() != tree.node_count(l) {
                return Err(RiskError::Mismatch(format!("measure change level {l} has {} rows", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != tree.children(l, i).len() {
                    return Err(RiskError::Mismatch(format!("measure change row ({l}, {i}) has wrong width")));
                }
                if row.iter().any(|&q| !(q.is_finite() && q >= 0.0)) {
                    return Err(RiskError::InvalidInput(format!("measure change row ({l}, {i}) has a negative entry")));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(RiskError::InvalidInput(format!("measure change row ({l}, {i}) sums to {s}")));
                }
            }
        }
        if let Some(flag) = self.equivalent {
            if flag != self.compute_equivalent() {
                return Err(RiskError::InvalidInput("measure change `equivalent` flag disagrees with its transitions".into()));
            }
        }
        Ok(())
    }

    fn compute_equivalent(&self) -> bool {
        self.transitions.iter().flatten().flatten().all(|&q| q > 0.0)
    }

    /// True iff every transition probability is strictly positive.
    pub fn is_equivalent(&self) -> bool {
        self.equivalent.unwrap_or_else(|| self.compute_equivalent())
    }

    pub fn row(&self, level: usize, index: usize) -> &[f64] {
        &self.transitions[level][index]
    }

    pub fn transitions(&self) -> &[Vec<Vec<f64>>] {
        &self.transitions
    }

    /// Density dQ/dP of every leaf.
    pub fn leaf_density(&self, tree: &ScenarioTree) -> Vec<f64> {
        let mut dens = vec![1.0];
        for l in 0..tree.depth() {
            let mut next = vec![0.0; tree.node_count(l + 1)];
            for (i, &d) in dens.iter().enumerate() {
                let p = tree.transition_probs(l, i);
                for (k, c) in tree.children(l, i).enumerate() {
                    next[c] = d * self.transitions[l][i][k] / p[k];
                }
            }
            dens = next;
        }
        dens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_equivalent() {
        let t = ScenarioTree::binomial(3, 1.0).unwrap();
        let p = MeasureChange::reference(&t);
        assert!(p.is_equivalent());
        assert!(p.validate(&t).is_ok());
        assert!(p.leaf_density(&t).iter().all(|&d| (d - 1.0).abs() < 1e-15));
    }

    #[test]
    fn point_mass_not_equivalent() {
        let t = ScenarioTree::binomial(2, 1.0).unwrap();
        let q = MeasureChange::point_mass_path(&t, 2);
        assert!(!q.is_equivalent());
        let d = q.leaf_density(&t);
        assert_eq!(d, vec![0.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn rejects_bad_rows() {
        let t = ScenarioTree::binomial(1, 1.0).unwrap();
        assert!(MeasureChange::new(&t, vec![vec![vec![0.7, 0.2]]]).is_err());
        assert!(MeasureChange::new(&t, vec![vec![vec![1.2, -0.2]]]).is_err());
        assert!(MeasureChange::new(&t, vec![vec![vec![1.0]]]).is_err());
        let ok = MeasureChange::new(&t, vec![vec![vec![1.0, 0.0]]]).unwrap();
        assert!(!ok.is_equivalent());
    }

    #[test]
    fn inconsistent_flag_rejected() {
        let t = ScenarioTree::binomial(1, 1.0).unwrap();
        let json = r#"{"transitions": [[[1.0, 0.0]]], "equivalent": true}"#;
        let mc: MeasureChange = serde_json::from_str(json).unwrap();
        assert!(mc.validate(&t).is_err());
    }
}
