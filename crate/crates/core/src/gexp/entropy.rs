//! Entropic risk via the quadratic driver, its logarithmic oracle, conditional
//! relative entropy and the variational identity.

use serde::{Deserialize, Serialize};

use super::bsde::{solve_bsde, ComparisonStatus};
use super::generator::{Generator, GeneratorSpec};
use crate::error::{Result, RiskError};
use crate::space::{backward, cond_expect, subtree_law, MeasureChange, Profile, RandomVariable, ScenarioTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropicRoutes {
    /// Quadratic-driver solution with terminal `-xi`.
    pub bsde: Profile,
    /// `(1/gamma) ln E_g[exp(-gamma xi) | F_t]` from the base driver.
    pub oracle: Profile,
    pub gap: f64,
    pub bsde_comparison: ComparisonStatus,
    pub oracle_comparison: ComparisonStatus,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(RiskError::Parameter(format!("gamma must be positive, got {gamma}")))
    }
}

/// Evaluates both routes of the entropic driver equation at level `t`.
pub fn entropic_bsde(tree: &ScenarioTree, gamma: f64, base: &Generator, xi: &RandomVariable, t: usize) -> Result<EntropicRoutes> {
    check_gamma(gamma)?;
    tree.check_level(t)?;
    let flags = base.flags();
    if !(flags.positively_homogeneous && flags.normalized) {
        return Err(RiskError::Parameter("the logarithmic oracle needs a normalized, positively homogeneous base driver".into()));
    }
    let quad = Generator::quadratic_entropic(gamma, base.spec.clone());
    let direct = solve_bsde(tree, &quad, &xi.neg())?;

    // Positive homogeneity lets the exponentials be rescaled by the largest one.
    let shift = xi.values().iter().map(|v| -gamma * v).fold(f64::NEG_INFINITY, f64::max);
    let scaled = xi.map(|v| (-gamma * v - shift).exp());
    let inner = solve_bsde(tree, base, &scaled)?;
    let u = inner.y_at(t);
    if let Some(i) = u.values().iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(RiskError::Numeric(format!("inner solution not positive at node ({t}, {i})")));
    }
    let oracle = u.map(|v| (v.ln() + shift) / gamma);
    let bsde = direct.y_at(t);
    let gap = bsde.max_abs_diff(&oracle);
    Ok(EntropicRoutes { bsde, oracle, gap, bsde_comparison: direct.comparison, oracle_comparison: inner.comparison })
}

/// Base driver used when no other is given.
pub fn zero_base() -> Generator {
    GeneratorSpec::Zero.into()
}

/// Checks `R << Q` row by row on levels at or below `t`.
fn check_abs_continuity(tree: &ScenarioTree, r: &MeasureChange, q: &MeasureChange, t: usize) -> Result<()> {
    for l in t..tree.depth() {
        for i in 0..tree.node_count(l) {
            if r.row(l, i).iter().zip(q.row(l, i)).any(|(&a, &b)| a > 0.0 && b == 0.0) {
                return Err(RiskError::AbsoluteContinuity { level: l, node: i });
            }
        }
    }
    Ok(())
}

/// `H_t(R | Q) = E_Q[D ln D | F_t]` with `D` the density of `R` against `Q`
/// conditioned on the level-`t` node.
pub fn relative_entropy(tree: &ScenarioTree, r: &MeasureChange, q: &MeasureChange, t: usize) -> Result<Profile> {
    r.validate(tree)?;
    q.validate(tree)?;
    tree.check_level(t)?;
    check_abs_continuity(tree, r, q, t)?;
    let vals = (0..tree.node_count(t))
        .map(|i| {
            let lr = subtree_law(tree, t, i, Some(r));
            let lq = subtree_law(tree, t, i, Some(q));
            lr.iter().zip(&lq).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).ln()).sum()
        })
        .collect();
    Ok(Profile::new(t, vals))
}

/// The maximizer `dR*/dQ ∝ exp(-gamma xi)`, as transition rows built from
/// log-sum-exp node potentials.
pub fn entropic_maximizer(tree: &ScenarioTree, q: &MeasureChange, xi: &RandomVariable, gamma: f64) -> Result<MeasureChange> {
    check_gamma(gamma)?;
    q.validate(tree)?;
    xi.check(tree)?;
    let n = tree.depth();
    // log E_Q[exp(-gamma xi) | node] on every level
    let mut logs = vec![Vec::new(); n + 1];
    logs[n] = xi.values().iter().map(|v| -gamma * v).collect();
    for l in (0..n).rev() {
        logs[l] = (0..tree.node_count(l))
            .map(|i| {
                let ch = &logs[l + 1][tree.children(l, i)];
                let row = q.row(l, i);
                let m = ch.iter().zip(row).filter(|(_, &p)| p > 0.0).map(|(&v, _)| v).fold(f64::NEG_INFINITY, f64::max);
                m + ch.iter().zip(row).map(|(&v, &p)| p * (v - m).exp()).sum::<f64>().ln()
            })
            .collect();
    }
    let rows = (0..n)
        .map(|l| {
            (0..tree.node_count(l))
                .map(|i| {
                    let row = q.row(l, i);
                    let mut out: Vec<f64> =
                        tree.children(l, i).zip(row).map(|(c, &p)| p * (logs[l + 1][c] - logs[l][i]).exp()).collect();
                    // renormalize away the rounding of the exponentials
                    let s: f64 = out.iter().sum();
                    out.iter_mut().for_each(|v| *v /= s);
                    out
                })
                .collect()
        })
        .collect();
    MeasureChange::new(tree, rows)
}

/// `(1/gamma) ln E_Q[exp(-gamma xi) | F_t] - (E_R[-xi | F_t] - H_t(R | Q) / gamma)`:
/// non-negative for every `R << Q`, zero at the maximizer.
pub fn variational_gap(
    tree: &ScenarioTree,
    q: &MeasureChange,
    r: &MeasureChange,
    xi: &RandomVariable,
    gamma: f64,
    t: usize,
) -> Result<Profile> {
    let lhs = crate::measures::entropic(tree, xi, t, gamma, Some(q))?;
    let er = cond_expect(tree, &xi.neg(), t, Some(r))?;
    let h = relative_entropy(tree, r, q, t)?;
    let rhs = er.zip_with(&h, |e, h| e - h / gamma);
    Ok(lhs.zip_with(&rhs, |a, b| a - b))
}

/// Chain-rule form of the relative entropy: local divergence of each row plus
/// the expected divergence of the children under `R`.
pub fn relative_entropy_chain(tree: &ScenarioTree, r: &MeasureChange, q: &MeasureChange, t: usize) -> Result<Profile> {
    check_abs_continuity(tree, r, q, t)?;
    let zeros = vec![0.0; tree.leaf_count()];
    backward(tree, &zeros, t, |l, i, child| {
        let (rr, qq) = (r.row(l, i), q.row(l, i));
        Ok(rr.iter().zip(qq).zip(child).filter(|((&a, _), _)| a > 0.0).map(|((&a, &b), &h)| a * ((a / b).ln() + h)).sum())
    })
}
