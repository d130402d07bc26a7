//! Seeded generators for random trees, payoffs, profiles and measure changes.
//! Shared by the falsifiers and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::space::{MeasureChange, Profile, RandomVariable, ScenarioTree};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random explicit tree with `levels` periods and 1..=`max_branching` children
/// per node (at least two children at the root).
pub fn random_tree(rng: &mut SeededRng, levels: usize, max_branching: usize) -> ScenarioTree {
    let max_branching = max_branching.max(2);
    let mut rows = Vec::with_capacity(levels);
    let mut width = 1;
    for l in 0..levels {
        let mut level_rows = Vec::with_capacity(width);
        let mut next_width = 0;
        for _ in 0..width {
            let k = if l == 0 { rng.random_range(2..=max_branching) } else { rng.random_range(1..=max_branching) };
            level_rows.push(random_simplex(rng, k, 0.05));
            next_width += k;
        }
        rows.push(level_rows);
        width = next_width;
    }
    ScenarioTree::from_transitions(1.0 / levels as f64, &rows).expect("random rows are stochastic")
}

/// Strictly positive probability vector of length `k`, each entry at least
/// `floor / k` before normalization. The last entry absorbs rounding so the
/// row sums to one.
pub fn random_simplex(rng: &mut SeededRng, k: usize, floor: f64) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let raw: Vec<f64> = (0..k).map(|_| floor / k as f64 + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let head: f64 = row[..k - 1].iter().sum();
    row[k - 1] = 1.0 - head;
    row
}

pub fn random_payoff(rng: &mut SeededRng, tree: &ScenarioTree, scale: f64) -> RandomVariable {
    let vals = (0..tree.leaf_count()).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
    RandomVariable::new(vals).expect("finite")
}

pub fn random_profile(rng: &mut SeededRng, tree: &ScenarioTree, level: usize, lo: f64, hi: f64) -> Profile {
    let vals = (0..tree.node_count(level)).map(|_| rng.random_range(lo..=hi)).collect();
    Profile::new(level, vals)
}

/// Equivalent measure change with random strictly positive rows.
pub fn random_equivalent_measure(rng: &mut SeededRng, tree: &ScenarioTree) -> MeasureChange {
    let rows = (0..tree.depth())
        .map(|l| (0..tree.node_count(l)).map(|i| random_simplex(rng, tree.children(l, i).len(), 0.05)).collect())
        .collect();
    MeasureChange::new(tree, rows).expect("random rows are stochastic")
}
