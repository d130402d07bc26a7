//! Concrete dynamic risk measures and the randomized axiom falsifier.

mod axioms;
mod closed_form;
mod utility;

pub use axioms::{check_axioms, Axiom, AxiomOutcome, AxiomReport, AxiomStatus, AxiomWitness, FalsifierConfig};
pub use closed_form::{
    entropic, left_quantile, robust_var, utility_shortfall, var_conditional, DEFAULT_BISECTION_TOL, MAX_BISECTION_ITERS,
};
pub(crate) use closed_form::per_node;
pub use utility::{Utility, UtilityAudit, UtilityKind};

use serde::{Deserialize, Serialize};

use crate::envelope::{member_eval, EnvelopeMemberSpec};
use crate::error::{Result, RiskError};
use crate::gexp::{g_risk, maxmin_dp, Generator, MaxminMode};
use crate::space::{cond_ess_extrema, cond_expect, Extremum, MeasureChange, Profile, RandomVariable, ScenarioTree, TreeKind};

fn default_tol() -> f64 {
    DEFAULT_BISECTION_TOL
}

/// A dynamic risk measure `rho_t`, tagged by `type` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RiskMeasureSpec {
    ConditionalVar {
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<MeasureChange>,
    },
    RobustVar {
        lambda: f64,
        scenarios: Vec<MeasureChange>,
    },
    Entropic {
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<MeasureChange>,
    },
    UtilityShortfall {
        utility: Utility,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// `-E_Q[X | F_t]`; the reference measure when `q` is omitted.
    Linear {
        #[serde(default, alias = "Q", skip_serializing_if = "Option::is_none")]
        q: Option<MeasureChange>,
    },
    /// `-ess inf X` given `F_t`.
    WorstCase,
    /// `E_g[-X | F_t]`.
    GExpectation { generator: Generator },
    /// `alpha sup + (1 - alpha) inf` of `E_theta[-X | F_t]` over drifts `|theta| <= kappa`.
    AlphaMaxmin { kappa: f64, alpha: f64 },
    /// `X -> rho(X + Z)`.
    Shifted {
        inner: Box<RiskMeasureSpec>,
        #[serde(alias = "Z")]
        z: RandomVariable,
    },
    EnvelopeMember(EnvelopeMemberSpec),
    /// Nodewise minimum of the members.
    Envelope { members: Vec<RiskMeasureSpec> },
    /// Nodewise maximum of the members.
    SupOfFamily { members: Vec<RiskMeasureSpec> },
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(RiskError::Parameter(format!("VaR level must lie in (0, 1), got {lambda}")))
    }
}

fn fold_members(
    members: &[RiskMeasureSpec],
    tree: &ScenarioTree,
    x: &RandomVariable,
    t: usize,
    f: fn(f64, f64) -> f64,
) -> Result<Profile> {
    let (first, rest) = members.split_first().ok_or_else(|| RiskError::InvalidInput("empty member list".into()))?;
    let mut acc = first.evaluate(tree, x, t)?;
    for m in rest {
        acc = acc.zip_with(&m.evaluate(tree, x, t)?, f);
    }
    Ok(acc)
}

impl RiskMeasureSpec {
    pub fn linear() -> Self {
        RiskMeasureSpec::Linear { q: None }
    }

    pub fn conditional_var(lambda: f64) -> Self {
        RiskMeasureSpec::ConditionalVar { lambda, base: None }
    }

    pub fn entropic(gamma: f64) -> Self {
        RiskMeasureSpec::Entropic { gamma, base: None }
    }

    pub fn utility_shortfall(utility: Utility) -> Self {
        RiskMeasureSpec::UtilityShortfall { utility, tol: DEFAULT_BISECTION_TOL }
    }

    pub fn g_expectation(generator: Generator) -> Self {
        RiskMeasureSpec::GExpectation { generator }
    }

    /// Short label of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            RiskMeasureSpec::ConditionalVar { .. } => "conditional_var",
            RiskMeasureSpec::RobustVar { .. } => "robust_var",
            RiskMeasureSpec::Entropic { .. } => "entropic",
            RiskMeasureSpec::UtilityShortfall { .. } => "utility_shortfall",
            RiskMeasureSpec::Linear { .. } => "linear",
            RiskMeasureSpec::WorstCase => "worst_case",
            RiskMeasureSpec::GExpectation { .. } => "g_expectation",
            RiskMeasureSpec::AlphaMaxmin { .. } => "alpha_maxmin",
            RiskMeasureSpec::Shifted { .. } => "shifted",
            RiskMeasureSpec::EnvelopeMember(_) => "envelope_member",
            RiskMeasureSpec::Envelope { .. } => "envelope",
            RiskMeasureSpec::SupOfFamily { .. } => "sup_of_family",
        }
    }

    /// Absolute error the evaluator may carry beyond rounding (bisection tolerance).
    pub fn numeric_slack(&self) -> f64 {
        match self {
            RiskMeasureSpec::UtilityShortfall { tol, .. } => *tol,
            RiskMeasureSpec::Shifted { inner, .. } => inner.numeric_slack(),
            RiskMeasureSpec::Envelope { members } | RiskMeasureSpec::SupOfFamily { members } => {
                members.iter().map(Self::numeric_slack).fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }

    /// The only level the measure is defined at, for anchored members.
    pub fn fixed_level(&self) -> Option<usize> {
        match self {
            RiskMeasureSpec::EnvelopeMember(m) => Some(m.t),
            RiskMeasureSpec::Shifted { inner, .. } => inner.fixed_level(),
            RiskMeasureSpec::Envelope { members } | RiskMeasureSpec::SupOfFamily { members } => {
                members.iter().find_map(Self::fixed_level)
            }
            _ => None,
        }
    }

    /// Parameter and shape checks against `tree`.
    pub fn validate(&self, tree: &ScenarioTree) -> Result<()> {
        match self {
            RiskMeasureSpec::ConditionalVar { lambda, base } => {
                check_lambda(*lambda)?;
                if let Some(q) = base {
                    q.validate(tree)?;
                }
            }
            RiskMeasureSpec::RobustVar { lambda, scenarios } => {
                check_lambda(*lambda)?;
                if scenarios.is_empty() {
                    return Err(RiskError::InvalidInput("robust VaR needs at least one scenario".into()));
                }
                for q in scenarios {
                    q.validate(tree)?;
                }
            }
            RiskMeasureSpec::Entropic { gamma, base } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(RiskError::Parameter(format!("entropic gamma must be positive, got {gamma}")));
                }
                if let Some(q) = base {
                    q.validate(tree)?;
                }
            }
            RiskMeasureSpec::UtilityShortfall { utility, tol } => {
                if !(tol.is_finite() && *tol > 0.0) {
                    return Err(RiskError::Parameter(format!("bisection tolerance must be positive, got {tol}")));
                }
                utility.validate()?;
            }
            RiskMeasureSpec::Linear { q } => {
                if let Some(q) = q {
                    q.validate(tree)?;
                }
            }
            RiskMeasureSpec::WorstCase => {}
            RiskMeasureSpec::GExpectation { generator } => {
                if tree.kind() != TreeKind::Binomial {
                    return Err(RiskError::Mismatch("g-expectations need a binomial tree".into()));
                }
                generator.validate()?;
            }
            RiskMeasureSpec::AlphaMaxmin { kappa, alpha } => {
                if tree.kind() != TreeKind::Binomial {
                    return Err(RiskError::Mismatch("alpha-maxmin needs a binomial tree".into()));
                }
                if !(0.0..=1.0).contains(alpha) {
                    return Err(RiskError::Parameter(format!("alpha must lie in [0, 1], got {alpha}")));
                }
                if !(kappa.is_finite() && *kappa > 0.0) || kappa * tree.dt().sqrt() > 1.0 {
                    return Err(RiskError::Parameter(format!("kappa = {kappa} out of range for dt = {}", tree.dt())));
                }
            }
            RiskMeasureSpec::Shifted { inner, z } => {
                z.check(tree)?;
                inner.validate(tree)?;
            }
            RiskMeasureSpec::EnvelopeMember(m) => {
                m.anchor.check(tree)?;
                tree.check_level(m.t)?;
            }
            RiskMeasureSpec::Envelope { members } | RiskMeasureSpec::SupOfFamily { members } => {
                if members.is_empty() {
                    return Err(RiskError::InvalidInput("empty member list".into()));
                }
                for m in members {
                    m.validate(tree)?;
                }
            }
        }
        Ok(())
    }

    /// `rho_t(X)` as a level-`t` profile.
    pub fn evaluate(&self, tree: &ScenarioTree, x: &RandomVariable, t: usize) -> Result<Profile> {
        tree.check_level(t)?;
        x.check(tree)?;
        let out = match self {
            RiskMeasureSpec::ConditionalVar { lambda, base } => var_conditional(tree, x, t, *lambda, base.as_ref())?,
            RiskMeasureSpec::RobustVar { lambda, scenarios } => robust_var(tree, x, t, *lambda, scenarios)?,
            RiskMeasureSpec::Entropic { gamma, base } => entropic(tree, x, t, *gamma, base.as_ref())?,
            RiskMeasureSpec::UtilityShortfall { utility, tol } => utility_shortfall(tree, x, t, utility, *tol)?,
            RiskMeasureSpec::Linear { q } => cond_expect(tree, x, t, q.as_ref())?.neg(),
            RiskMeasureSpec::WorstCase => cond_ess_extrema(tree, x, t, Extremum::Inf)?.neg(),
            RiskMeasureSpec::GExpectation { generator } => g_risk(generator, tree, x, t)?,
            RiskMeasureSpec::AlphaMaxmin { kappa, alpha } => maxmin_dp(tree, *kappa, &x.neg(), t, MaxminMode::Alpha(*alpha))?,
            RiskMeasureSpec::Shifted { inner, z } => {
                z.check(tree)?;
                inner.evaluate(tree, &x.add(z), t)?
            }
            RiskMeasureSpec::EnvelopeMember(m) => member_eval(m, tree, x, t)?,
            RiskMeasureSpec::Envelope { members } => fold_members(members, tree, x, t, f64::min)?,
            RiskMeasureSpec::SupOfFamily { members } => fold_members(members, tree, x, t, f64::max)?,
        };
        if let Some(i) = out.values().iter().position(|v| !v.is_finite()) {
            return Err(RiskError::Numeric(format!("{} is not finite at node ({t}, {i})", self.name())));
        }
        Ok(out)
    }
}
