//! Step-refinement studies of the driver scheme against closed-form or
//! exact discrete oracles.
//!
//! Payoffs that depend on the driver path only through its terminal value are
//! solved on the recombining lattice of terminal states, which gives the same
//! root value as the full tree (the scheme is Markov in `B`) while allowing
//! step counts far beyond the tree size cap.

use serde::{Deserialize, Serialize};

use super::bsde::{bsde_step, check_kappa, g_risk, maxmin_dp, maxmin_step, slope_margin, MaxminMode};
use super::entropy::entropic_bsde;
use super::generator::{Generator, GeneratorSpec};
use crate::error::{Result, RiskError};
use crate::space::{FunctionalParams, PathFunctional, PayoffSpec, ScenarioTree};

/// Largest step count accepted by the lattice solver.
pub const MAX_LATTICE_STEPS: usize = 1 << 14;

/// Terminal states of an `n`-step lattice: `B_T = (2j - n) sqrt(dt)` for `j` ups.
pub fn lattice_terminal(n: usize, horizon: f64, params: &FunctionalParams) -> Vec<f64> {
    let sq = (horizon / n as f64).sqrt();
    (0..=n).map(|j| params.apply((2.0 * j as f64 - n as f64) * sq)).collect()
}

/// Backward recursion on the recombining lattice; `step(level, down, up)`.
pub fn lattice_backward(terminal: Vec<f64>, mut step: impl FnMut(usize, f64, f64) -> f64) -> f64 {
    let n = terminal.len() - 1;
    let mut v = terminal;
    for l in (0..n).rev() {
        for j in 0..=l {
            v[j] = step(l, v[j], v[j + 1]);
        }
        v.truncate(l + 1);
    }
    v[0]
}

/// Root value and slope margin of the driver scheme on the lattice.
pub fn lattice_bsde(gen: &Generator, horizon: f64, terminal: Vec<f64>) -> Result<(f64, f64)> {
    let n = terminal.len() - 1;
    if n == 0 || n > MAX_LATTICE_STEPS {
        return Err(RiskError::Size { levels: n, cap: MAX_LATTICE_STEPS });
    }
    let dt = horizon / n as f64;
    let mut max_z: f64 = 0.0;
    let y = lattice_backward(terminal, |l, d, u| {
        let (y, z) = bsde_step(gen, l as f64 * dt, dt, d, u);
        max_z = max_z.max(z.abs());
        y
    });
    if !y.is_finite() {
        return Err(RiskError::Numeric("lattice recursion left the reals".into()));
    }
    Ok((y, slope_margin(gen, dt, max_z)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    pub oracle: f64,
    pub abs_error: f64,
    /// Previous row's error over this row's error.
    pub ratio: Option<f64>,
    pub slope_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub generator: Generator,
    pub gamma: Option<f64>,
    pub oracle: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,value,abs_error,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|v| format!("{v:.17e}")).unwrap_or_default();
            s.push_str(&format!("{},{:.17e},{:.17e},{}\n", r.n, r.value, r.abs_error, ratio));
        }
        s
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].abs_error < w[0].abs_error)
    }

    pub fn min_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::min)
    }

    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_error).fold(0.0, f64::max)
    }
}

/// Risk value at the root and its oracle for one step count.
fn study_point(gen: &Generator, payoff: &PayoffSpec, n: usize, horizon: f64, gamma: Option<f64>) -> Result<(f64, f64, f64)> {
    if let PayoffSpec::Functional { functional: PathFunctional::OfTerminalSum, params } = payoff {
        let xi = lattice_terminal(n, horizon, params);
        let dt = horizon / n as f64;
        return match gamma {
            Some(g) => {
                let quad = Generator::quadratic_entropic(g, gen.spec.clone());
                let (v, margin) = lattice_bsde(&quad, horizon, xi.iter().map(|x| -x).collect())?;
                let shift = xi.iter().map(|x| -g * x).fold(f64::NEG_INFINITY, f64::max);
                let (u, _) = lattice_bsde(gen, horizon, xi.iter().map(|x| (-g * x - shift).exp()).collect())?;
                if u.is_nan() || u <= 0.0 {
                    return Err(RiskError::Numeric("inner lattice solution not positive".into()));
                }
                Ok((v, (u.ln() + shift) / g, margin))
            }
            None => {
                let (v, margin) = lattice_bsde(gen, horizon, xi.iter().map(|x| -x).collect())?;
                let oracle = match &gen.spec {
                    GeneratorSpec::Zero => lattice_backward(xi.iter().map(|x| -x).collect(), |_, d, u| 0.5 * (d + u)),
                    GeneratorSpec::Abs { kappa } => {
                        check_kappa(*kappa, dt)?;
                        lattice_backward(xi.iter().map(|x| -x).collect(), |_, d, u| maxmin_step(*kappa, dt, d, u, true))
                    }
                    _ => return Err(no_oracle(gen)),
                };
                Ok((v, oracle, margin))
            }
        };
    }
    let tree = ScenarioTree::binomial(n, horizon)?;
    let x = payoff.realize(&tree)?;
    match gamma {
        Some(g) => {
            let r = entropic_bsde(&tree, g, gen, &x, 0)?;
            let quad = Generator::quadratic_entropic(g, gen.spec.clone());
            let margin = super::bsde::solve_bsde(&tree, &quad, &x.neg())?.slope_margin;
            Ok((r.bsde.root(), r.oracle.root(), margin))
        }
        None => {
            let sol = super::bsde::solve_bsde(&tree, gen, &x.neg())?;
            let v = sol.y_at(0).root();
            let oracle = match &gen.spec {
                GeneratorSpec::Zero => g_risk(gen, &tree, &x, 0)?.root(),
                GeneratorSpec::Abs { kappa } => maxmin_dp(&tree, *kappa, &x.neg(), 0, MaxminMode::Sup)?.root(),
                _ => return Err(no_oracle(gen)),
            };
            Ok((v, oracle, sol.slope_margin))
        }
    }
}

fn no_oracle(gen: &Generator) -> RiskError {
    RiskError::Parameter(format!("no oracle for {:?} without an entropic gamma", gen.spec))
}

/// Errors of the driver scheme against its oracle over increasing step counts.
/// With `gamma`, the value is the quadratic-driver route and the oracle the
/// logarithmic route over `gen`; without, the oracle is the linear expectation
/// (`zero`) or the max-min recursion (`abs`).
pub fn convergence_study(
    gen: &Generator,
    payoff: &PayoffSpec,
    n_list: &[usize],
    horizon: f64,
    gamma: Option<f64>,
) -> Result<ConvergenceTable> {
    if n_list.is_empty() {
        return Err(RiskError::InvalidInput("empty step list".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(RiskError::Parameter(format!("horizon must be positive, got {horizon}")));
    }
    gen.validate()?;
    if gamma.is_some() {
        let f = gen.flags();
        if !(f.positively_homogeneous && f.normalized) {
            return Err(RiskError::Parameter("entropic study needs a normalized, positively homogeneous base driver".into()));
        }
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (value, oracle, margin) = study_point(gen, payoff, n, horizon, gamma)?;
        let abs_error = (value - oracle).abs();
        let ratio = rows.last().map(|p| p.abs_error / abs_error);
        rows.push(ConvergenceRow { n, value, oracle, abs_error, ratio, slope_margin: margin });
    }
    let oracle = match (gamma, &gen.spec) {
        (Some(_), GeneratorSpec::Zero) => "entropic closed form",
        (Some(_), _) => "logarithmic route over the base driver",
        (None, GeneratorSpec::Zero) => "linear expectation",
        _ => "max-min recursion",
    };
    Ok(ConvergenceTable { generator: gen.clone(), gamma, oracle: oracle.into(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Transform;

    fn terminal_sum() -> PayoffSpec {
        PayoffSpec::terminal_sum(FunctionalParams::default())
    }

    #[test]
    fn lattice_matches_full_tree() {
        let params = FunctionalParams { transform: Transform::Call, strike: 0.1, scale: 1.0, shift: 0.0 };
        let payoff = PayoffSpec::terminal_sum(params);
        for gen in [Generator::quartic_quadratic(), Generator::asymmetric(0.3, 0.8), Generator::quadratic_entropic(1.0, GeneratorSpec::Zero)] {
            for n in 1..=8 {
                let tree = ScenarioTree::binomial(n, 1.0).unwrap();
                let x = payoff.realize(&tree).unwrap();
                let full = g_risk(&gen, &tree, &x, 0).unwrap().root();
                let (lat, _) = lattice_bsde(&gen, 1.0, lattice_terminal(n, 1.0, &params).iter().map(|v| -v).collect()).unwrap();
                assert!((full - lat).abs() < 1e-12, "{gen:?} n={n}");
            }
        }
    }

    #[test]
    fn zero_driver_has_no_error() {
        let t = convergence_study(&Generator::zero(), &terminal_sum(), &[2, 4, 8, 16], 1.0, None).unwrap();
        assert!(t.rows.iter().all(|r| r.abs_error == 0.0 || r.abs_error < 1e-15));
    }

    #[test]
    fn abs_driver_matches_maxmin() {
        let call = PayoffSpec::terminal_sum(FunctionalParams { transform: Transform::Put, strike: 0.0, scale: 1.0, shift: 0.0 });
        let t = convergence_study(&Generator::abs(0.8), &call, &[4, 8, 16, 64], 1.0, None).unwrap();
        assert!(t.max_error() <= 1e-12);
        let max = PayoffSpec::Functional { functional: PathFunctional::OfPathMax, params: FunctionalParams::default() };
        let t = convergence_study(&Generator::abs(0.8), &max, &[2, 4, 8], 1.0, None).unwrap();
        assert!(t.max_error() <= 1e-12);
    }

    #[test]
    fn pure_entropic_first_order() {
        let t = convergence_study(&Generator::zero(), &terminal_sum(), &[4, 8, 16, 32], 1.0, Some(1.0)).unwrap();
        assert!(t.strictly_decreasing(), "{t:?}");
        assert!(t.min_ratio().unwrap() >= 1.3);
        // closed form on the tree: (N / gamma) ln cosh(gamma sqrt(dt))
        for r in &t.rows {
            let dt = 1.0 / r.n as f64;
            let closed = r.n as f64 * dt.sqrt().cosh().ln();
            assert!((r.oracle - closed).abs() < 1e-12);
            assert!((r.value - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_shape() {
        let t = convergence_study(&Generator::zero(), &terminal_sum(), &[4, 8], 1.0, Some(1.0)).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "N,value,abs_error,ratio");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn missing_oracle() {
        assert!(convergence_study(&Generator::quartic_quadratic(), &terminal_sum(), &[4], 1.0, None).is_err());
    }
}
