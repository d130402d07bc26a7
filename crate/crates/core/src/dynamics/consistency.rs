use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::measures::RiskMeasureSpec;
use crate::space::{lift, RandomVariable, ScenarioTree};

/// Nesting check `rho_t(-rho_s(X)) = rho_t(X)` for one `(t, s)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyEntry {
    pub t: usize,
    pub s: usize,
    /// Largest nodewise gap.
    pub gap: f64,
    /// Node attaining the gap.
    pub node: usize,
    pub direct: f64,
    pub composed: f64,
}

pub fn check_time_consistency(spec: &RiskMeasureSpec, tree: &ScenarioTree, x: &RandomVariable, t: usize, s: usize) -> Result<ConsistencyEntry> {
    if t > s || s > tree.depth() {
        return Err(RiskError::LevelOutOfRange { level: s.max(t), max: tree.depth() });
    }
    let inner = spec.evaluate(tree, x, s)?;
    let composed = spec.evaluate(tree, &lift(tree, &inner.neg())?, t)?;
    let direct = spec.evaluate(tree, x, t)?;
    let (node, gap) = composed
        .values()
        .iter()
        .zip(direct.values())
        .map(|(a, b)| (a - b).abs())
        .enumerate()
        .fold((0, 0.0), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
    Ok(ConsistencyEntry { t, s, gap, node, direct: direct.values()[node], composed: composed.values()[node] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyWitness {
    /// Payoff reproducing the gap on re-evaluation.
    pub leaf_values: Vec<f64>,
    pub entry: ConsistencyEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub spec: String,
    pub pairs: Vec<(usize, usize)>,
    pub payoffs: usize,
    pub max_gap: f64,
    pub tolerance: f64,
    pub consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ConsistencyWitness>,
}

/// All pairs `0 <= t <= s <= N` over the given payoffs; the witness is the
/// first payoff attaining the largest gap.
pub fn consistency_report(spec: &RiskMeasureSpec, tree: &ScenarioTree, payoffs: &[RandomVariable], tol: f64) -> Result<ConsistencyReport> {
    let n = tree.depth();
    let pairs: Vec<(usize, usize)> = (0..=n).flat_map(|t| (t..=n).map(move |s| (t, s))).collect();
    let mut max_gap: f64 = 0.0;
    let mut witness = None;
    for x in payoffs {
        for &(t, s) in &pairs {
            let e = check_time_consistency(spec, tree, x, t, s)?;
            if e.gap > max_gap {
                max_gap = e.gap;
                if e.gap > tol {
                    witness = Some(ConsistencyWitness { leaf_values: x.values().to_vec(), entry: e });
                }
            }
        }
    }
    Ok(ConsistencyReport {
        spec: spec.name().into(),
        pairs,
        payoffs: payoffs.len(),
        max_gap,
        tolerance: tol,
        consistent: max_gap <= tol,
        witness,
    })
}

/// Exhaustive search over payoffs with leaf values on `grid` for the largest
/// gap at `(t, s)`. Returns `None` when no gap exceeds `tol`.
pub fn find_inconsistency(
    spec: &RiskMeasureSpec,
    tree: &ScenarioTree,
    grid: &[f64],
    t: usize,
    s: usize,
    tol: f64,
) -> Result<Option<ConsistencyWitness>> {
    let leaves = tree.leaf_count();
    let total = (grid.len() as u128).checked_pow(leaves as u32).filter(|&c| c <= 1 << 24);
    let Some(total) = total else {
        return Err(RiskError::InvalidInput(format!("grid search over {} values on {leaves} leaves is too large", grid.len())));
    };
    let mut best: Option<ConsistencyWitness> = None;
    let mut digits = vec![0usize; leaves];
    for _ in 0..total {
        let x = RandomVariable::new(digits.iter().map(|&d| grid[d]).collect())?;
        let e = check_time_consistency(spec, tree, &x, t, s)?;
        if e.gap > tol && best.as_ref().is_none_or(|b| e.gap > b.entry.gap) {
            best = Some(ConsistencyWitness { leaf_values: x.into_values(), entry: e });
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < grid.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(best)
}
