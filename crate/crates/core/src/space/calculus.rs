//! Conditional expectations, conditional essential extrema and embeddings on
//! scenario trees.

use serde::{Deserialize, Serialize};

use super::measure::MeasureChange;
use super::tree::ScenarioTree;
use super::variable::{Profile, RandomVariable};
use crate::error::{Result, RiskError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Sup,
    Inf,
}

/// Runs `step` backwards from the leaves to `level`. `step(level, node, child_values)`
/// returns the value at `(level, node)` from the values of its children.
pub fn backward<F>(tree: &ScenarioTree, terminal: &[f64], level: usize, mut step: F) -> Result<Profile>
where
    F: FnMut(usize, usize, &[f64]) -> Result<f64>,
{
    tree.check_level(level)?;
    let mut vals = terminal.to_vec();
    for l in (level..tree.depth()).rev() {
        let mut next = Vec::with_capacity(tree.node_count(l));
        for i in 0..tree.node_count(l) {
            next.push(step(l, i, &vals[tree.children(l, i)])?);
        }
        vals = next;
    }
    Ok(Profile::new(level, vals))
}

/// `E_Q[X | F_t]` (or under the reference measure when `q` is `None`).
pub fn cond_expect(tree: &ScenarioTree, x: &RandomVariable, t: usize, q: Option<&MeasureChange>) -> Result<Profile> {
    x.check(tree)?;
    if let Some(q) = q {
        q.validate(tree)?;
    }
    backward(tree, x.values(), t, |l, i, child| {
        let probs = match q {
            Some(q) => q.row(l, i),
            None => tree.transition_probs(l, i),
        };
        Ok(probs.iter().zip(child).map(|(p, v)| p * v).sum())
    })
}

/// Conditional essential supremum or infimum: max/min over the subtree's leaves.
pub fn cond_ess_extrema(tree: &ScenarioTree, x: &RandomVariable, t: usize, which: Extremum) -> Result<Profile> {
    x.check(tree)?;
    tree.check_level(t)?;
    let vals = (0..tree.node_count(t))
        .map(|i| {
            let leaves = &x.values()[tree.leaf_range(t, i)];
            match which {
                Extremum::Sup => leaves.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Extremum::Inf => leaves.iter().copied().fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    Ok(Profile::new(t, vals))
}

/// Embeds a level-`s` profile as a terminal variable constant on level-`s` subtrees.
pub fn lift(tree: &ScenarioTree, profile: &Profile) -> Result<RandomVariable> {
    profile.check(tree)?;
    let mut out = vec![0.0; tree.leaf_count()];
    for (i, &v) in profile.values().iter().enumerate() {
        out[tree.leaf_range(profile.level(), i)].fill(v);
    }
    RandomVariable::new(out).map_err(|_| RiskError::Numeric("non-finite profile value".into()))
}

/// Conditional law of the leaves below `(level, node)`: returns the conditional
/// probability of each leaf in `tree.leaf_range(level, node)`.
pub fn subtree_law(tree: &ScenarioTree, level: usize, node: usize, q: Option<&MeasureChange>) -> Vec<f64> {
    let mut probs = vec![1.0];
    let mut first = node;
    for l in level..tree.depth() {
        let last = first + probs.len();
        let mut next = Vec::new();
        for (k, i) in (first..last).enumerate() {
            let row = match q {
                Some(q) => q.row(l, i),
                None => tree.transition_probs(l, i),
            };
            next.extend(row.iter().map(|p| probs[k] * p));
        }
        first = tree.children(l, first).start;
        probs = next;
    }
    probs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_period() -> ScenarioTree {
        ScenarioTree::binomial(1, 1.0).unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        let t = ScenarioTree::binomial(3, 1.0).unwrap();
        let x = RandomVariable::constant(&t, 2.5);
        for lvl in 0..=3 {
            let p = cond_expect(&t, &x, lvl, None).unwrap();
            assert!(p.values().iter().all(|&v| (v - 2.5).abs() < 1e-15));
            let s = cond_ess_extrema(&t, &x, lvl, Extremum::Sup).unwrap();
            assert!(s.values().iter().all(|&v| v == 2.5));
        }
    }

    #[test]
    fn two_leaf_expectation() {
        let t = one_period();
        let x = RandomVariable::new(vec![4.0, -2.0]).unwrap();
        assert_eq!(cond_expect(&t, &x, 0, None).unwrap().root(), 1.0);
        assert_eq!(cond_ess_extrema(&t, &x, 0, Extremum::Sup).unwrap().root(), 4.0);
        assert_eq!(cond_ess_extrema(&t, &x, 0, Extremum::Inf).unwrap().root(), -2.0);
    }

    #[test]
    fn lift_structure() {
        let t = ScenarioTree::binomial(2, 1.0).unwrap();
        let p = Profile::new(1, vec![3.0, -1.0]);
        assert_eq!(lift(&t, &p).unwrap().values(), &[3.0, 3.0, -1.0, -1.0]);
        let root = Profile::new(0, vec![7.0]);
        assert_eq!(lift(&t, &root).unwrap().values(), &[7.0; 4]);
        let x = RandomVariable::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let leaves = Profile::new(2, x.values().to_vec());
        assert_eq!(lift(&t, &leaves).unwrap(), x);
    }

    #[test]
    fn level_out_of_range() {
        let t = one_period();
        let x = RandomVariable::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(cond_expect(&t, &x, 2, None), Err(RiskError::LevelOutOfRange { .. })));
        assert!(cond_ess_extrema(&t, &x, 5, Extremum::Inf).is_err());
    }

    #[test]
    fn subtree_law_matches_reference() {
        let t = ScenarioTree::from_transitions(1.0, &[vec![vec![0.3, 0.7]], vec![vec![0.5, 0.5], vec![0.1, 0.2, 0.7]]]).unwrap();
        let law = subtree_law(&t, 0, 0, None);
        let want = [0.15, 0.15, 0.07, 0.14, 0.49];
        for (a, b) in law.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(subtree_law(&t, 1, 1, None), vec![0.1, 0.2, 0.7]);
        let full = t.leaf_probabilities();
        for (a, b) in law.iter().zip(full) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn changed_measure() {
        let t = one_period();
        let q = MeasureChange::new(&t, vec![vec![vec![0.25, 0.75]]]).unwrap();
        let x = RandomVariable::new(vec![4.0, -2.0]).unwrap();
        assert_eq!(cond_expect(&t, &x, 0, Some(&q)).unwrap().root(), -0.5);
    }
}
