//! Searches for star-shapedness violations of driver-induced risk measures.

use serde::{Deserialize, Serialize};

use super::bsde::g_risk;
use super::generator::{check_generator, Generator};
use crate::error::Result;
use crate::sampling::{random_payoff, random_profile, SeededRng};
use crate::space::{RandomVariable, ScenarioTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarViolation {
    pub z: f64,
    pub alpha: f64,
    pub dt: f64,
    /// Payoff on the one-step tree, leaves ordered (down, up).
    pub xi: Vec<f64>,
    /// `rho(alpha xi)`
    pub lhs: f64,
    /// `alpha rho(xi)`
    pub rhs: f64,
    pub margin: f64,
}

/// One-step search: every grid point where the driver fails `g(a z) >= a g(z)`
/// is turned into a payoff with `Z = z` on a one-step tree of step `dt`, and
/// the risk values are compared directly. Returns the largest violation.
pub fn find_star_violation(gen: &Generator, z_grid: &[f64], alpha_grid: &[f64], dt: f64) -> Result<Option<StarViolation>> {
    let tree = ScenarioTree::binomial(1, dt)?;
    let sq = dt.sqrt();
    let mut best: Option<StarViolation> = None;
    // the grid audit narrows the search but is not trusted for the verdict
    let report = check_generator(gen, &[0.0], z_grid, alpha_grid)?;
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    if let Some(w) = report.check("star_shaped").and_then(|c| c.witness.clone()) {
        candidates.push((w.z[0], w.alpha.unwrap_or(1.0)));
    }
    candidates.extend(z_grid.iter().flat_map(|&z| alpha_grid.iter().map(move |&a| (z, a))));
    for (z, alpha) in candidates {
        // terminal -xi = (-z sqrt(dt), z sqrt(dt)) makes Z_0 = z
        let xi = RandomVariable::new(vec![z * sq, -z * sq])?;
        let lhs = g_risk(gen, &tree, &xi.scale(alpha), 0)?.root();
        let rhs = alpha * g_risk(gen, &tree, &xi, 0)?.root();
        let margin = rhs - lhs;
        if margin > 1e-12 * (1.0 + rhs.abs()) && best.as_ref().is_none_or(|b| margin > b.margin) {
            best = Some(StarViolation { z, alpha, dt, xi: xi.into_values(), lhs, rhs, margin });
        }
    }
    Ok(best)
}

/// Counts violations of `rho(alpha xi) >= alpha rho(xi)` over seeded samples
/// with level-`t` profiles `alpha >= 1`. Returns `(violations, worst margin)`.
pub fn star_sample_violations(
    gen: &Generator,
    tree: &ScenarioTree,
    rng: &mut SeededRng,
    samples: usize,
    payoff_scale: f64,
    alpha_max: f64,
) -> Result<(usize, f64)> {
    use rand::Rng;
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = rng.random_range(0..tree.depth());
        let xi = random_payoff(rng, tree, payoff_scale);
        let alpha = random_profile(rng, tree, t, 1.0, alpha_max);
        let lhs = g_risk(gen, tree, &xi.mul_profile(tree, &alpha), t)?;
        let base = g_risk(gen, tree, &xi, t)?;
        for ((l, b), a) in lhs.values().iter().zip(base.values()).zip(alpha.values()) {
            let m = a * b - l;
            if m > 1e-12 * (1.0 + l.abs()) {
                count += 1;
                worst = worst.max(m);
            }
        }
    }
    Ok((count, worst))
}
