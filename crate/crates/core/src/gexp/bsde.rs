//! Explicit backward scheme for the driver equation on binomial trees and the
//! max-min recursion over bounded drift changes.

use serde::{Deserialize, Serialize};

use super::generator::Generator;
use crate::error::{Result, RiskError};
use crate::space::{AdaptedProcess, Profile, RandomVariable, ScenarioTree, TreeKind};

/// Inflation applied to the realized `|Z|` range before bounding the slope.
pub const SLOPE_INFLATION: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonStatus {
    Verified,
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsdeSolution {
    pub y: AdaptedProcess,
    /// One value per non-leaf node.
    pub z: AdaptedProcess,
    /// `1 - sqrt(dt) * L` with `L` bounding `|dg/dz|` on the realized `Z` range.
    pub slope_margin: f64,
    pub comparison: ComparisonStatus,
}

impl BsdeSolution {
    pub fn y_at(&self, level: usize) -> Profile {
        self.y.profile(level)
    }

    /// Fails with a comparison error when the one-step monotonicity gate is not met.
    pub fn require_comparison(&self) -> Result<()> {
        match self.comparison {
            ComparisonStatus::Verified => Ok(()),
            ComparisonStatus::Unverified => Err(RiskError::ComparisonNotGuaranteed { margin: self.slope_margin }),
        }
    }
}

pub(crate) fn require_binomial(tree: &ScenarioTree) -> Result<()> {
    if tree.kind() == TreeKind::Binomial {
        Ok(())
    } else {
        Err(RiskError::Mismatch("driver equations need a binomial tree".into()))
    }
}

/// One explicit step: returns `(Y_n, Z_n)` from the down and up child values.
#[inline]
pub(crate) fn bsde_step(gen: &Generator, t: f64, dt: f64, down: f64, up: f64) -> (f64, f64) {
    let sq = dt.sqrt();
    let z = (up - down) / (2.0 * sq);
    (0.5 * (up + down) + gen.eval(t, z) * dt, z)
}

pub(crate) fn slope_margin(gen: &Generator, dt: f64, max_abs_z: f64) -> f64 {
    1.0 - dt.sqrt() * gen.slope_bound(SLOPE_INFLATION * max_abs_z)
}

/// Solves `Y_n = E[Y_{n+1} | n] + g(t_n, Z_n) dt` backwards from `terminal`.
pub fn solve_bsde(tree: &ScenarioTree, gen: &Generator, terminal: &RandomVariable) -> Result<BsdeSolution> {
    require_binomial(tree)?;
    gen.validate()?;
    terminal.check(tree)?;
    let n = tree.depth();
    let dt = tree.dt();
    let mut ys = vec![Vec::new(); n + 1];
    let mut zs = vec![Vec::new(); n];
    ys[n] = terminal.values().to_vec();
    let mut max_z: f64 = 0.0;
    for l in (0..n).rev() {
        let t = tree.time(l);
        let (y, z): (Vec<f64>, Vec<f64>) = (0..tree.node_count(l))
            .map(|i| {
                let c = tree.children(l, i);
                bsde_step(gen, t, dt, ys[l + 1][c.start], ys[l + 1][c.start + 1])
            })
            .unzip();
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(RiskError::Numeric(format!("driver recursion left the reals at node ({l}, {bad})")));
        }
        max_z = z.iter().fold(max_z, |m, v| m.max(v.abs()));
        ys[l] = y;
        zs[l] = z;
    }
    let margin = slope_margin(gen, dt, max_z);
    let comparison = if margin > 0.0 { ComparisonStatus::Verified } else { ComparisonStatus::Unverified };
    Ok(BsdeSolution { y: AdaptedProcess::new(ys), z: AdaptedProcess::new(zs), slope_margin: margin, comparison })
}

/// Risk profile `E_g[-xi | F_t]`.
pub fn g_risk(gen: &Generator, tree: &ScenarioTree, xi: &RandomVariable, t: usize) -> Result<Profile> {
    tree.check_level(t)?;
    Ok(solve_bsde(tree, gen, &xi.neg())?.y_at(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxminMode {
    Sup,
    Inf,
    Alpha(f64),
}

pub(crate) fn check_kappa(kappa: f64, dt: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(RiskError::Parameter(format!("kappa must be positive, got {kappa}")));
    }
    if kappa * dt.sqrt() > 1.0 {
        return Err(RiskError::Parameter(format!("kappa * sqrt(dt) = {} exceeds 1", kappa * dt.sqrt())));
    }
    Ok(())
}

/// Best or worst one-step expectation over drifts `theta in {-kappa, +kappa}`,
/// with up-probability `(1 + theta sqrt(dt)) / 2`.
#[inline]
pub(crate) fn maxmin_step(kappa: f64, dt: f64, down: f64, up: f64, sup: bool) -> f64 {
    let sq = dt.sqrt();
    let e = |theta: f64| {
        let pu = 0.5 * (1.0 + theta * sq);
        pu * up + (1.0 - pu) * down
    };
    let (a, b) = (e(kappa), e(-kappa));
    if sup {
        a.max(b)
    } else {
        a.min(b)
    }
}

fn maxmin_one(tree: &ScenarioTree, kappa: f64, xi: &RandomVariable, t: usize, sup: bool) -> Result<Profile> {
    let dt = tree.dt();
    crate::space::backward(tree, xi.values(), t, |_, _, c| Ok(maxmin_step(kappa, dt, c[0], c[1], sup)))
}

/// `ess sup` / `ess inf` of `E_theta[xi | F_t]` over drifts bounded by `kappa`,
/// or their `alpha` mixture.
pub fn maxmin_dp(tree: &ScenarioTree, kappa: f64, xi: &RandomVariable, t: usize, mode: MaxminMode) -> Result<Profile> {
    require_binomial(tree)?;
    check_kappa(kappa, tree.dt())?;
    xi.check(tree)?;
    tree.check_level(t)?;
    match mode {
        MaxminMode::Sup => maxmin_one(tree, kappa, xi, t, true),
        MaxminMode::Inf => maxmin_one(tree, kappa, xi, t, false),
        MaxminMode::Alpha(alpha) => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(RiskError::Parameter(format!("alpha must lie in [0, 1], got {alpha}")));
            }
            let hi = maxmin_one(tree, kappa, xi, t, true)?;
            let lo = maxmin_one(tree, kappa, xi, t, false)?;
            Ok(hi.zip_with(&lo, |h, l| alpha * h + (1.0 - alpha) * l))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_payoff, random_profile, rng};
    use crate::space::cond_expect;

    #[test]
    fn zero_driver_is_conditional_expectation() {
        let t = ScenarioTree::binomial(5, 1.0).unwrap();
        let mut r = rng(3);
        let x = random_payoff(&mut r, &t, 2.0);
        let s = solve_bsde(&t, &Generator::zero(), &x).unwrap();
        for l in 0..=5 {
            assert!(s.y_at(l).max_abs_diff(&cond_expect(&t, &x, l, None).unwrap()) <= 1e-12);
        }
        assert_eq!(s.y.at(5), x.values());
    }

    #[test]
    fn abs_one_step() {
        let t = ScenarioTree::binomial(1, 0.04).unwrap();
        let x = RandomVariable::new(vec![-1.0, 1.0]).unwrap();
        let s = solve_bsde(&t, &Generator::abs(0.5), &x).unwrap();
        assert!((s.z.at(0)[0] - 5.0).abs() < 1e-12);
        assert!((s.y.at(0)[0] - 0.1).abs() < 1e-12);
        assert_eq!(s.comparison, ComparisonStatus::Verified);
    }

    #[test]
    fn zero_terminal_stays_zero() {
        let t = ScenarioTree::binomial(4, 1.0).unwrap();
        let s = solve_bsde(&t, &Generator::quartic_quadratic(), &RandomVariable::zeros(&t)).unwrap();
        assert!(s.y.levels().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn translation_exact() {
        let t = ScenarioTree::binomial(4, 1.0).unwrap();
        let mut r = rng(9);
        let g = Generator::asymmetric(0.2, 0.6);
        for lvl in 0..4 {
            let x = random_payoff(&mut r, &t, 1.0);
            let m = random_profile(&mut r, &t, lvl, -1.0, 1.0);
            let lhs = g_risk(&g, &t, &x.add_profile(&t, &m), lvl).unwrap();
            let rhs = g_risk(&g, &t, &x, lvl).unwrap().zip_with(&m, |a, b| a - b);
            assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }
    }

    #[test]
    fn margin_flags_coarse_steps() {
        let t = ScenarioTree::binomial(1, 1.0).unwrap();
        let x = RandomVariable::new(vec![-5.0, 5.0]).unwrap();
        let s = solve_bsde(&t, &Generator::quartic_quadratic(), &x).unwrap();
        assert_eq!(s.comparison, ComparisonStatus::Unverified);
        assert!(s.require_comparison().is_err());
    }

    #[test]
    fn explicit_tree_rejected() {
        let t = ScenarioTree::from_transitions(1.0, &[vec![vec![0.5, 0.5]]]).unwrap();
        let x = RandomVariable::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(solve_bsde(&t, &Generator::zero(), &x), Err(RiskError::Mismatch(_))));
    }

    #[test]
    fn maxmin_one_step() {
        let t = ScenarioTree::binomial(1, 0.04).unwrap();
        let x = RandomVariable::new(vec![-1.0, 1.0]).unwrap();
        let sup = maxmin_dp(&t, 0.5, &x, 0, MaxminMode::Sup).unwrap().root();
        let inf = maxmin_dp(&t, 0.5, &x, 0, MaxminMode::Inf).unwrap().root();
        let mid = maxmin_dp(&t, 0.5, &x, 0, MaxminMode::Alpha(0.5)).unwrap().root();
        assert!((sup - 0.1).abs() < 1e-12);
        assert!((inf + 0.1).abs() < 1e-12);
        assert!(mid.abs() < 1e-12);
        assert!(maxmin_dp(&t, 6.0, &x, 0, MaxminMode::Sup).is_err());
    }

    #[test]
    fn maxmin_constant() {
        let t = ScenarioTree::binomial(3, 1.0).unwrap();
        let x = RandomVariable::constant(&t, 2.0);
        for mode in [MaxminMode::Sup, MaxminMode::Inf, MaxminMode::Alpha(0.3)] {
            let v = maxmin_dp(&t, 0.4, &x, 1, mode).unwrap();
            assert!(v.values().iter().all(|&a| (a - 2.0).abs() < 1e-15));
        }
    }
}
