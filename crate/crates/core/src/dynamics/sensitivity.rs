use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::measures::RiskMeasureSpec;
use crate::sampling::{random_payoff, rng};
use crate::space::{cond_expect, MeasureChange, RandomVariable, ScenarioTree};

/// Scales `k = 1, 2, 4, ..., 2^RAY_DOUBLINGS` along each ray.
pub const RAY_DOUBLINGS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityVerdict {
    SensitiveEvidence,
    InsensitiveWitness,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTest {
    /// Single-leaf events tested; larger events follow by monotonicity.
    pub events: usize,
    /// Leaves where `rho_t(-1_B)` does not exceed `rho_t(0)` at the ancestor node.
    pub failing_leaves: Vec<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayWitness {
    /// Direction `d`, already translated to be acceptable.
    pub direction: Vec<f64>,
    /// `E_Q~[k d]` for every tested scale.
    pub expectations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySearch {
    pub directions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<RayWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub spec: String,
    pub t: usize,
    pub seed: u64,
    pub atom_test: AtomTest,
    pub ray_search: RaySearch,
    pub verdict: SensitivityVerdict,
    /// Which reading of the verdict applies to this spec.
    pub regime: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    pub budget: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl SensitivityConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self { budget, seed, tolerance: 1e-9 }
    }
}

fn is_coherent(spec: &RiskMeasureSpec) -> bool {
    match spec {
        RiskMeasureSpec::Linear { .. } | RiskMeasureSpec::WorstCase => true,
        RiskMeasureSpec::AlphaMaxmin { alpha, .. } => *alpha == 1.0,
        RiskMeasureSpec::GExpectation { generator } => {
            let f = generator.flags();
            f.convex && f.positively_homogeneous && f.normalized
        }
        RiskMeasureSpec::SupOfFamily { members } => members.iter().all(is_coherent),
        _ => false,
    }
}

/// Atom test on single-leaf events and a seeded ray search for acceptable
/// directions whose `Q~`-expectation descends without bound.
pub fn check_sensitivity(
    spec: &RiskMeasureSpec,
    tree: &ScenarioTree,
    t: usize,
    qtilde: &MeasureChange,
    cfg: &SensitivityConfig,
) -> Result<SensitivityReport> {
    qtilde.validate(tree)?;
    if !qtilde.is_equivalent() {
        return Err(RiskError::InvalidInput("the reference scenario must be equivalent".into()));
    }
    tree.check_level(t)?;
    let base = spec.evaluate(tree, &RandomVariable::zeros(tree), t)?;

    let mut failing = Vec::new();
    for leaf in 0..tree.leaf_count() {
        let mut v = vec![0.0; tree.leaf_count()];
        v[leaf] = -1.0;
        let r = spec.evaluate(tree, &RandomVariable::new(v)?, t)?;
        let node = tree.ancestor_of_leaf(leaf, t);
        if r.values()[node] <= base.values()[node] + cfg.tolerance {
            failing.push(leaf);
        }
    }
    let atom_test = AtomTest { events: tree.leaf_count(), passed: failing.is_empty(), failing_leaves: failing };

    let mut g = rng(cfg.seed);
    let mut ray = RaySearch { directions: 0, witness: None };
    for _ in 0..cfg.budget {
        let d = random_payoff(&mut g, tree, 1.0);
        let d = d.add_profile(tree, &spec.evaluate(tree, &d, t)?);
        ray.directions += 1;
        let mut expectations = Vec::with_capacity(RAY_DOUBLINGS as usize + 1);
        let mut accepted = true;
        for p in 0..=RAY_DOUBLINGS {
            let k = (1u64 << p) as f64;
            let kd = d.scale(k);
            let r = spec.evaluate(tree, &kd, t)?;
            if r.max() > cfg.tolerance * k.max(1.0) {
                accepted = false;
                break;
            }
            expectations.push(cond_expect(tree, &kd, 0, Some(qtilde))?.root());
        }
        let descending = expectations.windows(2).last().is_some_and(|w| w[1] <= w[0] - 1.0);
        if accepted && descending {
            ray.witness = Some(RayWitness { direction: d.into_values(), expectations });
            break;
        }
    }

    let verdict = if ray.witness.is_some() {
        SensitivityVerdict::InsensitiveWitness
    } else if atom_test.passed {
        SensitivityVerdict::SensitiveEvidence
    } else {
        SensitivityVerdict::Inconclusive
    };
    let regime = if is_coherent(spec) {
        "coherent: the atom test is a complete certificate"
    } else {
        "not known coherent: atom test and ray search give evidence only"
    };
    Ok(SensitivityReport { spec: spec.name().into(), t, seed: cfg.seed, atom_test, ray_search: ray, verdict, regime: regime.into() })
}
