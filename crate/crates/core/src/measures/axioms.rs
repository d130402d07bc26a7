//! Randomized falsification of the axioms of a dynamic risk measure.
//!
//! Each axiom gets `budget` samples: structured corner cases first (constants,
//! negative indicators of single leaves and their pairwise mixtures), then
//! seeded random payoffs and level-`t` profiles. The first violating sample is
//! reported with its margin.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RiskMeasureSpec;
use crate::sampling::{random_payoff, random_profile, rng, SeededRng};
use crate::space::{Profile, RandomVariable, ScenarioTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axiom {
    /// Monotonicity: `X <= Y` implies `rho(X) >= rho(Y)`.
    A1,
    /// Translation: `rho(X + m) = rho(X) - m` for level-`t` `m`.
    A2,
    /// Normalization: `rho(0) = 0`.
    A3,
    /// Conditional convexity with level-`t` weights in `[0, 1]`.
    A4,
    /// Positive homogeneity with level-`t` `alpha >= 0`.
    A5,
    /// Star-shapedness: `rho(alpha X) >= alpha rho(X)` for level-`t` `alpha >= 1`.
    A6,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4, Axiom::A5, Axiom::A6];

    pub fn parse(s: &str) -> Option<Axiom> {
        Self::ALL.into_iter().find(|a| format!("{a:?}").eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifierConfig {
    pub budget: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Levels to sample; defaults to `0..N` (or the anchored level).
    pub levels: Option<Vec<usize>>,
    /// Largest absolute payoff value of random samples.
    pub payoff_scale: f64,
}

impl FalsifierConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self { budget, seed, tolerance: 1e-9, levels: None, payoff_scale: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomStatus {
    /// No witness within the budget.
    Pass,
    Fail,
    /// The measure could not be evaluated on a sample.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomWitness {
    pub t: usize,
    pub node: usize,
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
    /// Amount by which the required relation fails.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomOutcome {
    pub axiom: Axiom,
    pub status: AxiomStatus,
    pub samples: usize,
    /// Largest signed violation seen (non-positive when every sample held).
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<AxiomWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub spec: String,
    pub seed: u64,
    pub budget: usize,
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn outcome(&self, axiom: Axiom) -> Option<&AxiomOutcome> {
        self.outcomes.iter().find(|o| o.axiom == axiom)
    }

    pub fn passed(&self, axiom: Axiom) -> bool {
        self.outcome(axiom).is_some_and(|o| o.status == AxiomStatus::Pass)
    }

    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status == AxiomStatus::Pass)
    }
}

/// What the sample must satisfy at every node.
#[derive(Clone, Copy)]
enum Relation {
    /// `lhs >= rhs`
    Ge,
    /// `lhs <= rhs`
    Le,
    /// `lhs == rhs`
    Eq,
}

struct Sample {
    t: usize,
    x: RandomVariable,
    y: Option<RandomVariable>,
    alpha: Option<Profile>,
    m: Option<Profile>,
}

/// Negative indicators of single leaves, then constants.
fn corner_payoffs(tree: &ScenarioTree) -> Vec<RandomVariable> {
    let n = tree.leaf_count();
    let mut out = vec![RandomVariable::zeros(tree), RandomVariable::constant(tree, 1.0), RandomVariable::constant(tree, -1.0)];
    for leaf in 0..n.min(16) {
        let mut v = vec![0.0; n];
        v[leaf] = -1.0;
        out.push(RandomVariable::new(v).expect("finite"));
    }
    out
}

struct Sampler<'a> {
    tree: &'a ScenarioTree,
    levels: Vec<usize>,
    corners: Vec<RandomVariable>,
    scale: f64,
    rng: SeededRng,
}

impl Sampler<'_> {
    fn level(&mut self, i: usize) -> usize {
        self.levels[i % self.levels.len()]
    }

    fn payoff(&mut self) -> RandomVariable {
        // a quarter of the samples sit on the coarse integer grid {-2, ..., 2}
        if self.rng.random_range(0..4) == 0 {
            let v = (0..self.tree.leaf_count()).map(|_| self.rng.random_range(-2i32..=2) as f64).collect();
            RandomVariable::new(v).expect("finite")
        } else {
            let s = self.scale * self.rng.random_range(0.05..=1.0);
            random_payoff(&mut self.rng, self.tree, s)
        }
    }

    fn profile(&mut self, t: usize, lo: f64, hi: f64) -> Profile {
        random_profile(&mut self.rng, self.tree, t, lo, hi)
    }

    /// Corner pair `k` among the unordered pairs of corner payoffs.
    fn corner_pair(&self, k: usize) -> Option<(RandomVariable, RandomVariable)> {
        let n = self.corners.len();
        let mut k = k;
        for i in 0..n {
            let row = n - i - 1;
            if k < row {
                return Some((self.corners[i].clone(), self.corners[i + 1 + k].clone()));
            }
            k -= row;
        }
        None
    }

    fn sample(&mut self, axiom: Axiom, i: usize) -> Sample {
        let t = self.level(i);
        let c = |v: f64| Profile::constant(self.tree, t, v);
        let corner = self.corners.get(i).cloned();
        match axiom {
            Axiom::A1 => {
                let x = corner.unwrap_or_else(|| self.payoff());
                let bump = random_payoff(&mut self.rng, self.tree, self.scale).map(|v| v.max(0.0));
                Sample { t, y: Some(x.add(&bump)), x, alpha: None, m: None }
            }
            Axiom::A2 => {
                let (x, m) = match corner {
                    Some(x) => (x, c(1.0)),
                    None => (self.payoff(), self.profile(t, -self.scale, self.scale)),
                };
                Sample { t, x, y: None, alpha: None, m: Some(m) }
            }
            Axiom::A3 => Sample { t, x: RandomVariable::zeros(self.tree), y: None, alpha: None, m: None },
            Axiom::A4 => {
                let (x, y, a) = match self.corner_pair(i) {
                    Some((x, y)) => (x, y, c(0.5)),
                    None => {
                        let x = self.payoff();
                        let y = self.payoff();
                        let a = self.profile(t, 0.0, 1.0);
                        (x, y, a)
                    }
                };
                Sample { t, x, y: Some(y), alpha: Some(a), m: None }
            }
            Axiom::A5 | Axiom::A6 => {
                let lo = if axiom == Axiom::A5 { 0.0 } else { 1.0 };
                let (x, a) = match corner {
                    Some(x) => (x, c(lo + 1.0)),
                    None => (self.payoff(), self.profile(t, lo, 3.0)),
                };
                Sample { t, x, y: None, alpha: Some(a), m: None }
            }
        }
    }
}

/// `(lhs, rhs, relation, extra slack)` profiles for one sample.
fn sides(spec: &RiskMeasureSpec, tree: &ScenarioTree, axiom: Axiom, s: &Sample) -> crate::Result<(Profile, Profile, Relation)> {
    let rho = |x: &RandomVariable| spec.evaluate(tree, x, s.t);
    Ok(match axiom {
        Axiom::A1 => (rho(&s.x)?, rho(s.y.as_ref().expect("pair"))?, Relation::Ge),
        Axiom::A2 => {
            let m = s.m.as_ref().expect("cash");
            let lhs = rho(&s.x.add_profile(tree, m))?;
            (lhs, rho(&s.x)?.zip_with(m, |a, b| a - b), Relation::Eq)
        }
        Axiom::A3 => (rho(&s.x)?, Profile::constant(tree, s.t, 0.0), Relation::Eq),
        Axiom::A4 => {
            let (y, a) = (s.y.as_ref().expect("pair"), s.alpha.as_ref().expect("weight"));
            let one_minus = a.map(|v| 1.0 - v);
            let mix = s.x.mul_profile(tree, a).add(&y.mul_profile(tree, &one_minus));
            let (rx, ry) = (rho(&s.x)?, rho(y)?);
            let rhs = Profile::new(
                s.t,
                rx.values().iter().zip(ry.values()).zip(a.values()).map(|((p, q), w)| w * p + (1.0 - w) * q).collect(),
            );
            (rho(&mix)?, rhs, Relation::Le)
        }
        Axiom::A5 | Axiom::A6 => {
            let a = s.alpha.as_ref().expect("scale");
            let lhs = rho(&s.x.mul_profile(tree, a))?;
            let rhs = rho(&s.x)?.zip_with(a, |r, w| w * r);
            (lhs, rhs, if axiom == Axiom::A5 { Relation::Eq } else { Relation::Ge })
        }
    })
}

fn run_axiom(spec: &RiskMeasureSpec, tree: &ScenarioTree, axiom: Axiom, cfg: &FalsifierConfig, sampler: &mut Sampler) -> AxiomOutcome {
    let mut outcome = AxiomOutcome { axiom, status: AxiomStatus::Pass, samples: 0, margin: f64::NEG_INFINITY, witness: None, error: None };
    let samples = if axiom == Axiom::A3 { sampler.levels.len() } else { cfg.budget };
    let slack = spec.numeric_slack();
    for i in 0..samples {
        let s = sampler.sample(axiom, i);
        outcome.samples += 1;
        let (lhs, rhs, rel) = match sides(spec, tree, axiom, &s) {
            Ok(v) => v,
            Err(e) => {
                outcome.status = AxiomStatus::Error;
                outcome.error = Some(e.to_string());
                return outcome;
            }
        };
        let weight = s.alpha.as_ref().map_or(1.0, |a| a.values().iter().fold(1.0f64, |m, v| m.max(v.abs())));
        for (node, (&l, &r)) in lhs.values().iter().zip(rhs.values()).enumerate() {
            let violation = match rel {
                Relation::Ge => r - l,
                Relation::Le => l - r,
                Relation::Eq => (l - r).abs(),
            };
            outcome.margin = outcome.margin.max(violation);
            let allowed = cfg.tolerance * 1f64.max(l.abs()).max(r.abs()) + 4.0 * slack * weight;
            if violation > allowed {
                outcome.status = AxiomStatus::Fail;
                outcome.witness = Some(AxiomWitness {
                    t: s.t,
                    node,
                    x: s.x.values().to_vec(),
                    y: s.y.as_ref().map(|y| y.values().to_vec()),
                    alpha: s.alpha.as_ref().map(|a| a.values().to_vec()),
                    m: s.m.as_ref().map(|m| m.values().to_vec()),
                    lhs: l,
                    rhs: r,
                    margin: violation,
                });
                outcome.margin = violation;
                return outcome;
            }
        }
    }
    outcome
}

/// Falsifies the requested axioms of `spec` on `tree`. Never fails: evaluation
/// errors are reported per axiom.
pub fn check_axioms(spec: &RiskMeasureSpec, tree: &ScenarioTree, which: &[Axiom], cfg: &FalsifierConfig) -> AxiomReport {
    let levels = match (&cfg.levels, spec.fixed_level()) {
        (Some(l), _) if !l.is_empty() => l.clone(),
        (_, Some(t)) => vec![t],
        _ => (0..tree.depth()).collect(),
    };
    let mut sampler =
        Sampler { tree, levels, corners: corner_payoffs(tree), scale: cfg.payoff_scale, rng: rng(cfg.seed) };
    let mut outcomes: Vec<AxiomOutcome> = Vec::new();
    let mut which = which.to_vec();
    which.sort();
    which.dedup();
    for axiom in which {
        if cfg.budget == 0 {
            outcomes.push(AxiomOutcome {
                axiom,
                status: AxiomStatus::Error,
                samples: 0,
                margin: 0.0,
                witness: None,
                error: Some("budget must be at least 1".into()),
            });
            continue;
        }
        if let Some(&bad) = sampler.levels.iter().find(|&&l| l > tree.depth()) {
            outcomes.push(AxiomOutcome {
                axiom,
                status: AxiomStatus::Error,
                samples: 0,
                margin: 0.0,
                witness: None,
                error: Some(format!("level {bad} out of range")),
            });
            continue;
        }
        outcomes.push(run_axiom(spec, tree, axiom, cfg, &mut sampler));
    }
    AxiomReport { spec: spec.name().into(), seed: cfg.seed, budget: cfg.budget, outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Utility;

    fn three_atom() -> ScenarioTree {
        ScenarioTree::from_transitions(1.0, &[vec![vec![0.25, 0.25, 0.5]]]).unwrap()
    }

    #[test]
    fn linear_passes_everything() {
        let t = crate::sampling::random_tree(&mut rng(1), 3, 3);
        let r = check_axioms(&RiskMeasureSpec::linear(), &t, &Axiom::ALL, &FalsifierConfig::new(200, 7));
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn var_fails_convexity_with_witness() {
        let t = three_atom();
        let r = check_axioms(&RiskMeasureSpec::conditional_var(0.3), &t, &[Axiom::A4], &FalsifierConfig::new(100, 1));
        let o = r.outcome(Axiom::A4).unwrap();
        assert_eq!(o.status, AxiomStatus::Fail);
        let w = o.witness.as_ref().unwrap();
        assert!(w.lhs > w.rhs);
        // replay the witness
        let spec = RiskMeasureSpec::conditional_var(0.3);
        let x = RandomVariable::new(w.x.clone()).unwrap();
        let y = RandomVariable::new(w.y.clone().unwrap()).unwrap();
        let a = Profile::new(w.t, w.alpha.clone().unwrap());
        let mix = x.mul_profile(&t, &a).add(&y.mul_profile(&t, &a.map(|v| 1.0 - v)));
        assert_eq!(spec.evaluate(&t, &mix, w.t).unwrap().values()[w.node], w.lhs);
    }

    #[test]
    fn entropic_not_homogeneous() {
        let t = three_atom();
        let r = check_axioms(&RiskMeasureSpec::entropic(1.0), &t, &[Axiom::A5, Axiom::A4], &FalsifierConfig::new(100, 2));
        assert!(r.passed(Axiom::A4));
        assert_eq!(r.outcome(Axiom::A5).unwrap().status, AxiomStatus::Fail);
    }

    #[test]
    fn shortfall_monetary_within_tolerance() {
        let t = three_atom();
        let spec = RiskMeasureSpec::utility_shortfall(Utility::exponential(0.7));
        let r = check_axioms(&spec, &t, &[Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A6], &FalsifierConfig::new(100, 4));
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn zero_budget_is_reported() {
        let t = three_atom();
        let r = check_axioms(&RiskMeasureSpec::WorstCase, &t, &[Axiom::A1], &FalsifierConfig::new(0, 0));
        assert_eq!(r.outcomes[0].status, AxiomStatus::Error);
    }

    #[test]
    fn reports_are_reproducible() {
        let t = crate::sampling::random_tree(&mut rng(3), 3, 2);
        let spec = RiskMeasureSpec::conditional_var(0.3);
        let cfg = FalsifierConfig::new(300, 11);
        let a = serde_json::to_string(&check_axioms(&spec, &t, &Axiom::ALL, &cfg)).unwrap();
        let b = serde_json::to_string(&check_axioms(&spec, &t, &Axiom::ALL, &cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn axiom_names() {
        assert_eq!(Axiom::parse("a4"), Some(Axiom::A4));
        assert_eq!(Axiom::parse("A7"), None);
        assert_eq!(serde_json::to_string(&Axiom::A6).unwrap(), "\"A6\"");
    }
}
