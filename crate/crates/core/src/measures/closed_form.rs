//! Node-wise evaluators for the closed-form measures: conditional and robust
//! VaR, entropic, and utility-based shortfall.

use super::utility::Utility;
use crate::error::{Result, RiskError};
use crate::space::{subtree_law, MeasureChange, Profile, RandomVariable, ScenarioTree};

/// Default absolute tolerance of the shortfall bisection.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;
pub const MAX_BISECTION_ITERS: usize = 200;

/// Cumulative probabilities within this slack of `lambda` count as `<= lambda`.
const QUANTILE_SLACK: f64 = 1e-12;

pub(crate) fn per_node<F>(tree: &ScenarioTree, t: usize, f: F) -> Result<Profile>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    tree.check_level(t)?;
    let vals = (0..tree.node_count(t)).into_par_iter().map(&f).collect::<Result<Vec<f64>>>()?;
    Ok(Profile::new(t, vals))
}

fn check_equivalent(tree: &ScenarioTree, q: Option<&MeasureChange>) -> Result<()> {
    if let Some(q) = q {
        q.validate(tree)?;
        if !q.is_equivalent() {
            return Err(RiskError::InvalidInput("scenario measure must be equivalent to the reference measure".into()));
        }
    }
    Ok(())
}

/// Left quantile `sup{c : Q[X < c] <= lambda}` of a finite law, found by a
/// sorted sweep: the smallest atom whose cumulative mass exceeds `lambda`.
pub fn left_quantile(values: &[f64], probs: &[f64], lambda: f64) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let v = values[order[k]];
        // absorb every atom sharing this value
        while k < order.len() && values[order[k]] == v {
            cum += probs[order[k]];
            k += 1;
        }
        if cum > lambda + QUANTILE_SLACK {
            return v;
        }
    }
    values[order[order.len() - 1]]
}

/// Conditional value at risk: least `m` with `Q[X + m < 0 | node] <= lambda`.
pub fn var_conditional(
    tree: &ScenarioTree,
    x: &RandomVariable,
    t: usize,
    lambda: f64,
    q: Option<&MeasureChange>,
) -> Result<Profile> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(RiskError::Parameter(format!("VaR level must lie in (0, 1), got {lambda}")));
    }
    x.check(tree)?;
    check_equivalent(tree, q)?;
    per_node(tree, t, |i| {
        let law = subtree_law(tree, t, i, q);
        let vals = &x.values()[tree.leaf_range(t, i)];
        Ok(-left_quantile(vals, &law, lambda))
    })
}

/// Nodewise maximum of conditional VaR over a finite list of scenario measures.
pub fn robust_var(
    tree: &ScenarioTree,
    x: &RandomVariable,
    t: usize,
    lambda: f64,
    scenarios: &[MeasureChange],
) -> Result<Profile> {
    let (first, rest) = scenarios
        .split_first()
        .ok_or_else(|| RiskError::InvalidInput("robust VaR needs at least one scenario".into()))?;
    let mut acc = var_conditional(tree, x, t, lambda, Some(first))?;
    for q in rest {
        let v = var_conditional(tree, x, t, lambda, Some(q))?;
        acc = acc.zip_with(&v, f64::max);
    }
    Ok(acc)
}

/// `(1/gamma) ln E_Q[exp(-gamma X) | node]`, shifted by the subtree maximum of
/// `-gamma X` before exponentiating.
pub fn entropic(
    tree: &ScenarioTree,
    x: &RandomVariable,
    t: usize,
    gamma: f64,
    q: Option<&MeasureChange>,
) -> Result<Profile> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(RiskError::Parameter(format!("entropic gamma must be positive, got {gamma}")));
    }
    x.check(tree)?;
    if let Some(q) = q {
        q.validate(tree)?;
    }
    per_node(tree, t, |i| {
        let law = subtree_law(tree, t, i, q);
        let vals = &x.values()[tree.leaf_range(t, i)];
        let shift = vals
            .iter()
            .zip(&law)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&v, _)| -gamma * v)
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = vals.iter().zip(&law).map(|(&v, &p)| p * (-gamma * v - shift).exp()).sum();
        let out = (shift + s.ln()) / gamma;
        if out.is_finite() {
            Ok(out)
        } else {
            Err(RiskError::Numeric(format!("entropic evaluation overflowed at node ({t}, {i})")))
        }
    })
}

/// Least `m` with `E[u(m + X) | node] >= 0`, by bisection to absolute tolerance `tol`.
/// The returned value is the feasible end of the final bracket.
pub fn utility_shortfall(
    tree: &ScenarioTree,
    x: &RandomVariable,
    t: usize,
    utility: &Utility,
    tol: f64,
) -> Result<Profile> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(RiskError::Parameter(format!("bisection tolerance must be positive, got {tol}")));
    }
    utility.validate()?;
    x.check(tree)?;
    per_node(tree, t, |i| {
        let law = subtree_law(tree, t, i, None);
        let vals = &x.values()[tree.leaf_range(t, i)];
        let expected = |m: f64| -> f64 { vals.iter().zip(&law).map(|(&v, &p)| p * utility.value(m + v)).sum() };
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let (mut lo, mut hi) = (-max - 1.0, -min + 1.0);
        if !(expected(lo) < 0.0 && expected(hi) >= 0.0) {
            return Err(RiskError::Bracket { node: i });
        }
        let mut iters = 0;
        while hi - lo > tol && iters < MAX_BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if expected(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            iters += 1;
        }
        Ok(hi)
    })
}
