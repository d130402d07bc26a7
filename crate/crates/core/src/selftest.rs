//! Canonical example suite behind `riskenv selftest`.
//!
//! Every case recomputes its expected value from first principles. Cases are
//! seeded, so a given seed always produces the same report.

use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::{execute, Command, GlobalArgs, Model, ModelFile};
use crate::dynamics::{check_sensitivity, consistency_report, find_inconsistency, SensitivityConfig, SensitivityVerdict};
use crate::envelope::{
    dual_check, member_eval, penalty, shift_measure, sup_of_family, verify_attainment, CheckStatus, EnvelopeMemberSpec, MemberKind,
};
use crate::error::Result;
use crate::gexp::{
    check_generator, convergence_study, default_grids, entropic_bsde, entropic_maximizer, g_risk, maxmin_dp, relative_entropy, solve_bsde,
    variational_gap, zero_base, Generator, MaxminMode,
};
use crate::measures::{check_axioms, Axiom, AxiomStatus, FalsifierConfig, RiskMeasureSpec, Utility};
use crate::sampling::{random_equivalent_measure, random_payoff, random_tree, rng};
use crate::space::{
    cond_ess_extrema, cond_expect, lift, Extremum, FunctionalParams, MeasureChange, PayoffSpec, Profile, RandomVariable, ScenarioTree,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub id: String,
    pub module: String,
    pub passed: bool,
    pub detail: String,
}

type Outcome = Result<(bool, String)>;
type CaseFn = fn(u64) -> Outcome;

fn rv(v: &[f64]) -> RandomVariable {
    RandomVariable::new(v.to_vec()).expect("finite values")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn one_step() -> ScenarioTree {
    ScenarioTree::binomial(1, 1.0).expect("valid tree")
}

fn three_atom() -> ScenarioTree {
    ScenarioTree::from_transitions(1.0, &[vec![vec![0.25, 0.25, 0.5]]]).expect("valid tree")
}

fn ln3() -> f64 {
    3f64.ln()
}

fn terminal_sum() -> PayoffSpec {
    PayoffSpec::terminal_sum(FunctionalParams::default())
}

const CASES: &[(&str, &str, CaseFn)] = &[
    ("space", "binomial_one_step_shape", |_| {
        let t = one_step();
        let inc: Vec<_> = (0..2).map(|i| t.increment(1, i).unwrap_or(f64::NAN)).collect();
        Ok((t.node_count(0) == 1 && t.leaf_count() == 2 && inc == [-1.0, 1.0], format!("increments {inc:?}")))
    }),
    ("space", "binomial_two_steps_shape", |_| {
        let t = ScenarioTree::binomial(2, 1.0)?;
        Ok((t.leaf_count() == 4 && t.dt() == 0.5, format!("leaves {}, dt {}", t.leaf_count(), t.dt())))
    }),
    ("space", "binomial_ten_steps_paths", |_| {
        let t = ScenarioTree::binomial(10, 1.0)?;
        let step = 0.1f64.sqrt();
        let mut worst: f64 = 0.0;
        let mut steps_ok = true;
        for leaf in 0..t.leaf_count() {
            let mut sum = 0.0;
            for lvl in 1..=10 {
                let inc = t.increment(lvl, t.ancestor_of_leaf(leaf, lvl)).unwrap_or(f64::NAN);
                steps_ok &= close(inc.abs(), step, 1e-15);
                sum += inc;
            }
            let end = *t.path_values(leaf).unwrap_or_default().last().unwrap_or(&f64::NAN);
            worst = worst.max((end - sum).abs());
        }
        let total: f64 = t.leaf_probabilities().iter().sum();
        Ok((t.leaf_count() == 1024 && steps_ok && worst <= 1e-12 && close(total, 1.0, 1e-12), format!("path error {worst:e}, mass {total}")))
    }),
    ("space", "cond_expect_of_constant", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let x = RandomVariable::constant(&t, 3.5);
        let mut ok = true;
        for lvl in 0..=3 {
            ok &= cond_expect(&t, &x, lvl, None)?.values().iter().all(|&v| close(v, 3.5, 1e-12));
        }
        Ok((ok, "constant 3.5 at every level".into()))
    }),
    ("space", "cond_expect_two_leaves", |_| {
        let v = cond_expect(&one_step(), &rv(&[4.0, -2.0]), 0, None)?.root();
        Ok((v == 1.0, format!("value {v}")))
    }),
    ("space", "tower_property", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 4, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let mut worst: f64 = 0.0;
        for s in 0..=4 {
            let inner = lift(&t, &cond_expect(&t, &x, s, None)?)?;
            for lvl in 0..=s {
                worst = worst.max(cond_expect(&t, &inner, lvl, None)?.max_abs_diff(&cond_expect(&t, &x, lvl, None)?));
            }
        }
        Ok((worst <= 1e-12, format!("max gap {worst:e}")))
    }),
    ("space", "ess_extrema_of_constant", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let x = RandomVariable::constant(&t, -1.25);
        let mut ok = true;
        for lvl in 0..=3 {
            for e in [Extremum::Sup, Extremum::Inf] {
                ok &= cond_ess_extrema(&t, &x, lvl, e)?.values().iter().all(|&v| v == -1.25);
            }
        }
        Ok((ok, "constant -1.25".into()))
    }),
    ("space", "ess_extrema_two_leaves", |_| {
        let t = one_step();
        let x = rv(&[4.0, -2.0]);
        let (s, i) = (cond_ess_extrema(&t, &x, 0, Extremum::Sup)?.root(), cond_ess_extrema(&t, &x, 0, Extremum::Inf)?.root());
        Ok((s == 4.0 && i == -2.0, format!("sup {s}, inf {i}")))
    }),
    ("space", "ess_extrema_bracket_expectation", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let mut ok = true;
        for lvl in 0..=3 {
            let lo = cond_ess_extrema(&t, &x, lvl, Extremum::Inf)?;
            let mid = cond_expect(&t, &x, lvl, None)?;
            let hi = cond_ess_extrema(&t, &x, lvl, Extremum::Sup)?;
            for i in 0..mid.len() {
                ok &= lo.values()[i] <= mid.values()[i] + 1e-12 && mid.values()[i] <= hi.values()[i] + 1e-12;
            }
        }
        Ok((ok, "inf <= E <= sup nodewise".into()))
    }),
    ("space", "lift_from_root", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let x = lift(&t, &Profile::new(0, vec![0.75]))?;
        Ok((x.values().iter().all(|&v| v == 0.75) && x.len() == t.leaf_count(), "constant leaf variable".into()))
    }),
    ("space", "lift_from_leaves", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 1.0);
        let y = lift(&t, &Profile::new(3, x.values().to_vec()))?;
        Ok((x == y, "identity".into()))
    }),
    ("space", "lift_two_steps", |_| {
        let t = ScenarioTree::binomial(2, 1.0)?;
        let x = lift(&t, &Profile::new(1, vec![0.3, -0.7]))?;
        Ok((x.values() == [0.3, 0.3, -0.7, -0.7], format!("{:?}", x.values())))
    }),
    ("measures", "linear_is_negative_expectation", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let mut worst: f64 = 0.0;
        for lvl in 0..=3 {
            worst = worst.max(RiskMeasureSpec::linear().evaluate(&t, &x, lvl)?.max_abs_diff(&cond_expect(&t, &x, lvl, None)?.neg()));
        }
        Ok((worst <= 1e-12, format!("max gap {worst:e}")))
    }),
    ("measures", "worst_case_two_leaves", |_| {
        let v = RiskMeasureSpec::WorstCase.evaluate(&one_step(), &rv(&[4.0, -2.0]), 0)?.root();
        Ok((v == 2.0, format!("value {v}")))
    }),
    ("measures", "var_of_constant", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let mut ok = true;
        for lambda in [0.05, 0.3, 0.9] {
            let p = RiskMeasureSpec::conditional_var(lambda).evaluate(&t, &RandomVariable::constant(&t, 1.5), 1)?;
            ok &= p.values().iter().all(|&v| v == -1.5);
        }
        Ok((ok, "-c for every level".into()))
    }),
    ("measures", "var_three_atoms", |_| {
        let v = RiskMeasureSpec::conditional_var(0.3).evaluate(&three_atom(), &rv(&[-1.0, 0.0, 1.0]), 0)?.root();
        Ok((v == 0.0, format!("value {v}")))
    }),
    ("measures", "robust_var_single_scenario", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let robust = RiskMeasureSpec::RobustVar { lambda: 0.3, scenarios: vec![MeasureChange::reference(&t)] };
        let d = robust.evaluate(&t, &x, 1)?.max_abs_diff(&RiskMeasureSpec::conditional_var(0.3).evaluate(&t, &x, 1)?);
        Ok((d == 0.0, format!("gap {d:e}")))
    }),
    ("measures", "robust_var_dominates", |_| {
        let t = one_step();
        let q = MeasureChange::new(&t, vec![vec![vec![0.9, 0.1]]])?;
        let x = rv(&[-1.0, 1.0]);
        let robust = RiskMeasureSpec::RobustVar { lambda: 0.6, scenarios: vec![MeasureChange::reference(&t), q] };
        let (r, v) = (robust.evaluate(&t, &x, 0)?.root(), RiskMeasureSpec::conditional_var(0.6).evaluate(&t, &x, 0)?.root());
        Ok((r >= v && r == 1.0, format!("robust {r}, reference {v}")))
    }),
    ("measures", "robust_var_star_shaped", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let scenarios = (0..3).map(|_| random_equivalent_measure(&mut g, &t)).collect();
        let r = check_axioms(&RiskMeasureSpec::RobustVar { lambda: 0.3, scenarios }, &t, &[Axiom::A6], &FalsifierConfig::new(300, seed));
        Ok((r.passed(Axiom::A6), format!("margin {:e}", r.outcome(Axiom::A6).map_or(f64::NAN, |o| o.margin))))
    }),
    ("measures", "entropic_of_constant", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let p = RiskMeasureSpec::entropic(2.0).evaluate(&t, &RandomVariable::constant(&t, 0.4), 1)?;
        Ok((p.values().iter().all(|&v| close(v, -0.4, 1e-12)), "-c".into()))
    }),
    ("measures", "entropic_two_leaves", |_| {
        let v = RiskMeasureSpec::entropic(1.0).evaluate(&one_step(), &rv(&[0.0, -ln3()]), 0)?.root();
        Ok((close(v, 2f64.ln(), 1e-12), format!("value {v}")))
    }),
    ("measures", "entropic_convex", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let r = check_axioms(&RiskMeasureSpec::entropic(1.0), &t, &[Axiom::A4], &FalsifierConfig::new(500, seed));
        Ok((r.passed(Axiom::A4), format!("margin {:e}", r.outcome(Axiom::A4).map_or(f64::NAN, |o| o.margin))))
    }),
    ("measures", "shortfall_linear_utility", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let d = RiskMeasureSpec::utility_shortfall(Utility::linear()).evaluate(&t, &x, 1)?.max_abs_diff(&cond_expect(&t, &x, 1, None)?.neg());
        Ok((d <= 1e-9, format!("gap {d:e}")))
    }),
    ("measures", "shortfall_exponential_utility", |_| {
        let v = RiskMeasureSpec::utility_shortfall(Utility::exponential(1.0)).evaluate(&one_step(), &rv(&[0.0, -ln3()]), 0)?.root();
        Ok((close(v, 2f64.ln(), 1e-9), format!("value {v}")))
    }),
    ("measures", "shortfall_of_constant", |_| {
        let t = ScenarioTree::binomial(2, 1.0)?;
        let p = RiskMeasureSpec::utility_shortfall(Utility::exponential(0.5)).evaluate(&t, &RandomVariable::constant(&t, 0.8), 1)?;
        Ok((p.values().iter().all(|&v| close(v, -0.8, 1e-9)), format!("{:?}", p.values())))
    }),
    ("measures", "entropic_passes_monetary_convex_axioms", |seed| {
        let t = random_tree(&mut rng(seed), 4, 2);
        let which = [Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4];
        let r = check_axioms(&RiskMeasureSpec::entropic(1.0), &t, &which, &FalsifierConfig::new(1000, seed));
        Ok((r.all_passed(), format!("{} axioms", r.outcomes.len())))
    }),
    ("measures", "var_convexity_witness", |seed| {
        let r = check_axioms(&RiskMeasureSpec::conditional_var(0.3), &three_atom(), &[Axiom::A4], &FalsifierConfig::new(200, seed));
        let o = r.outcome(Axiom::A4);
        let ok = o.is_some_and(|o| o.status == AxiomStatus::Fail && o.witness.is_some());
        Ok((ok, format!("witness margin {:e}", o.map_or(f64::NAN, |o| o.margin))))
    }),
    ("measures", "linear_passes_all_axioms", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let r = check_axioms(&RiskMeasureSpec::linear(), &t, &Axiom::ALL, &FalsifierConfig::new(300, seed));
        Ok((r.all_passed(), "A1..A6".into()))
    }),
    ("envelope", "monetary_member_two_leaves", |_| {
        let v = member_eval(&EnvelopeMemberSpec::new(MemberKind::Monetary, rv(&[1.0, -2.0]), 0), &one_step(), &rv(&[0.5, 0.0]), 0)?.root();
        Ok((v == 0.5, format!("value {v}")))
    }),
    ("envelope", "star_member_two_leaves", |_| {
        let t = one_step();
        let v = member_eval(&EnvelopeMemberSpec::new(MemberKind::Star, rv(&[2.0, -1.0]), 0), &t, &rv(&[1.0, -0.5]), 0)?.root();
        let grid = (0..=10_000)
            .map(|k| {
                let a = k as f64 * 1e-4;
                (a * 2.0 - 1.0).max(-a + 0.5)
            })
            .fold(f64::INFINITY, f64::min);
        Ok((close(v, 0.0, 1e-12) && v <= grid + 1e-12, format!("value {v}, grid {grid}")))
    }),
    ("envelope", "star_member_at_zero", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let z = random_payoff(&mut g, &t, 2.0);
        let z = z.sub(&lift(&t, &cond_ess_extrema(&t, &z, 1, Extremum::Sup)?)?);
        let p = member_eval(&EnvelopeMemberSpec::new(MemberKind::Star, z, 1), &t, &RandomVariable::zeros(&t), 1)?;
        Ok((p.values().iter().all(|&v| v.abs() <= 1e-12), format!("max {:e}", p.max())))
    }),
    ("envelope", "envelope_singleton", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let m = RiskMeasureSpec::entropic(1.5);
        let d = RiskMeasureSpec::Envelope { members: vec![m.clone()] }.evaluate(&t, &x, 1)?.max_abs_diff(&m.evaluate(&t, &x, 1)?);
        Ok((d == 0.0, format!("gap {d:e}")))
    }),
    ("envelope", "envelope_two_monetary_members", |_| {
        let members = [rv(&[1.0, -2.0]), rv(&[0.0, 0.0])]
            .into_iter()
            .map(|z| RiskMeasureSpec::EnvelopeMember(EnvelopeMemberSpec::new(MemberKind::Monetary, z, 0)))
            .collect();
        let v = RiskMeasureSpec::Envelope { members }.evaluate(&one_step(), &rv(&[0.5, 0.0]), 0)?.root();
        Ok((v == 0.0, format!("value {v}")))
    }),
    ("envelope", "attainment_entropic_monetary", |seed| {
        let t = one_step();
        let x = rv(&[0.0, -ln3()]);
        let r = verify_attainment(&RiskMeasureSpec::entropic(1.0), MemberKind::Monetary, &t, &x, 0, 50, seed)?;
        let l2 = 2f64.ln();
        let anchor = x.add(&lift(&t, &r.value)?);
        let ok = r.status == CheckStatus::Pass
            && close(r.value.root(), l2, 1e-12)
            && close(anchor.values()[0], l2, 1e-12)
            && close(anchor.values()[1], l2 - ln3(), 1e-12);
        Ok((ok, format!("value {}, gap {:e}", r.value.root(), r.attainment_gap)))
    }),
    ("envelope", "attainment_worst_case_star", |seed| {
        let mut g = rng(seed);
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let t = random_tree(&mut g, 3, 3);
            let x = random_payoff(&mut g, &t, 2.0);
            for lvl in 0..2 {
                let r = verify_attainment(&RiskMeasureSpec::WorstCase, MemberKind::Star, &t, &x, lvl, 50, seed)?;
                ok &= r.status == CheckStatus::Pass;
                worst = worst.max(r.attainment_gap);
            }
        }
        Ok((ok, format!("max gap {worst:e}")))
    }),
    ("envelope", "attainment_var_monetary", |seed| {
        let t = three_atom();
        let spec = RiskMeasureSpec::conditional_var(0.3);
        let x = rv(&[-1.0, 0.5, 2.0]);
        let r = verify_attainment(&spec, MemberKind::Monetary, &t, &x, 0, 50, seed)?;
        let anchor = x.add(&lift(&t, &r.value)?);
        let member = RiskMeasureSpec::EnvelopeMember(EnvelopeMemberSpec::new(MemberKind::Monetary, anchor, 0));
        let member_convex = check_axioms(&member, &t, &[Axiom::A4], &FalsifierConfig::new(200, seed)).passed(Axiom::A4);
        let source_convex = check_axioms(&spec, &t, &[Axiom::A4], &FalsifierConfig::new(200, seed)).passed(Axiom::A4);
        Ok((r.status == CheckStatus::Pass && member_convex && !source_convex, format!("member convex {member_convex}, source convex {source_convex}")))
    }),
    ("envelope", "penalty_of_zero", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let q = random_equivalent_measure(&mut g, &t);
        let p = penalty(&t, &RandomVariable::zeros(&t), &q, 1)?.0;
        Ok((p.values().iter().all(|&v| v == 0.0), "zero".into()))
    }),
    ("envelope", "penalty_two_leaves", |_| {
        let t = one_step();
        let v = penalty(&t, &rv(&[1.0, -2.0]), &MeasureChange::reference(&t), 0)?.0.root();
        Ok((v == 0.5, format!("value {v}")))
    }),
    ("envelope", "duality_two_leaves", |seed| {
        let r = dual_check(&one_step(), &rv(&[1.0, -2.0]), &rv(&[0.5, 0.0]), 0, 50, seed)?;
        let ok = r.status == CheckStatus::Pass && r.primal.root() == 0.5 && r.dual.root() == 0.5 && r.maximizer_leaves == [0];
        Ok((ok, format!("primal {}, dual {}, leaves {:?}", r.primal.root(), r.dual.root(), r.maximizer_leaves)))
    }),
    ("envelope", "duality_anchor_equals_payoff", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let r = dual_check(&t, &x, &x, 1, 50, seed)?;
        Ok((r.status == CheckStatus::Pass && r.primal.values().iter().all(|&v| v == 0.0), format!("gap {:e}", r.max_gap)))
    }),
    ("envelope", "duality_random_three_steps", |seed| {
        let mut g = rng(seed);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for _ in 0..10 {
            let t = random_tree(&mut g, 3, 3);
            let z = random_payoff(&mut g, &t, 2.0);
            let x = random_payoff(&mut g, &t, 2.0);
            for lvl in 0..3 {
                let r = dual_check(&t, &z, &x, lvl, 20, seed)?;
                ok &= r.status == CheckStatus::Pass && r.max_gap <= 1e-12;
                worst = worst.max(r.max_gap);
            }
        }
        Ok((ok, format!("max gap {worst:e}")))
    }),
    ("envelope", "family_of_linear", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let d = sup_of_family(&[RiskMeasureSpec::linear()], &t, &x, 1)?.value.max_abs_diff(&cond_expect(&t, &x, 1, None)?.neg());
        Ok((d <= 1e-12, format!("gap {d:e}")))
    }),
    ("envelope", "family_dominated_by_worst_case", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let fam = sup_of_family(&[RiskMeasureSpec::linear(), RiskMeasureSpec::WorstCase], &t, &x, 1)?.value;
        let d = fam.max_abs_diff(&RiskMeasureSpec::WorstCase.evaluate(&t, &x, 1)?);
        Ok((d == 0.0, format!("gap {d:e}")))
    }),
    ("envelope", "shift_by_zero", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let inner = RiskMeasureSpec::entropic(1.0);
        let d = shift_measure(inner.clone(), RandomVariable::zeros(&t)).evaluate(&t, &x, 0)?.max_abs_diff(&inner.evaluate(&t, &x, 0)?);
        Ok((d == 0.0, format!("gap {d:e}")))
    }),
    ("envelope", "shifted_entropic_envelope_star_shaped", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let inner = RiskMeasureSpec::Envelope { members: vec![RiskMeasureSpec::entropic(1.0), RiskMeasureSpec::entropic(2.0)] };
        let spec = shift_measure(inner, RandomVariable::zeros(&t));
        let r = check_axioms(&spec, &t, &[Axiom::A6], &FalsifierConfig::new(1000, seed));
        Ok((r.passed(Axiom::A6), format!("margin {:e}", r.outcome(Axiom::A6).map_or(f64::NAN, |o| o.margin))))
    }),
    ("gexp", "zero_driver_is_expectation", |seed| {
        let t = ScenarioTree::binomial(4, 1.0)?;
        let x = random_payoff(&mut rng(seed), &t, 2.0);
        let sol = solve_bsde(&t, &Generator::zero(), &x)?;
        let mut worst: f64 = 0.0;
        for lvl in 0..=4 {
            worst = worst.max(sol.y_at(lvl).max_abs_diff(&cond_expect(&t, &x, lvl, None)?));
        }
        Ok((worst <= 1e-12, format!("max gap {worst:e}")))
    }),
    ("gexp", "abs_driver_one_step", |_| {
        let t = ScenarioTree::binomial(1, 0.04)?;
        let xi = rv(&[1.0, -1.0]);
        let v = g_risk(&Generator::abs(0.5), &t, &xi, 0)?.root();
        let z = solve_bsde(&t, &Generator::abs(0.5), &xi.neg())?.z.at(0)[0];
        Ok((close(v, 0.1, 1e-12) && close(z.abs(), 5.0, 1e-12), format!("value {v}, z {z}")))
    }),
    ("gexp", "g_risk_of_constant", |_| {
        let t = ScenarioTree::binomial(3, 1.0)?;
        let mut ok = true;
        for gen in [Generator::abs(0.4), Generator::asymmetric(0.2, 0.5), Generator::quartic_quadratic()] {
            ok &= g_risk(&gen, &t, &RandomVariable::constant(&t, 0.6), 1)?.values().iter().all(|&v| close(v, -0.6, 1e-12));
        }
        Ok((ok, "-c".into()))
    }),
    ("gexp", "quartic_quadratic_star_shaped_at_fixed_scale", |seed| {
        let t = ScenarioTree::binomial(4, 1.0)?;
        let gen = Generator::quartic_quadratic();
        let mut g = rng(seed);
        let mut worst = f64::INFINITY;
        for _ in 0..50 {
            let xi = random_payoff(&mut g, &t, 0.1);
            for lvl in 0..4 {
                let lhs = g_risk(&gen, &t, &xi.scale(1.7), lvl)?;
                let rhs = g_risk(&gen, &t, &xi, lvl)?.map(|v| 1.7 * v);
                worst = worst.min(lhs.zip_with(&rhs, |a, b| a - b).min());
            }
        }
        Ok((worst >= -1e-12, format!("min margin {worst:e}")))
    }),
    ("gexp", "abs_generator_flags", |_| {
        let (tg, zg, ag) = default_grids();
        let gen = Generator::abs(0.5);
        let r = check_generator(&gen, &tg, &zg, &ag)?;
        let observed = |p: &str| r.check(p).is_some_and(|c| c.observed);
        let ok = r.consistent() && gen.flags().lipschitz_k == Some(0.5) && observed("positively_homogeneous") && observed("convex") && observed("star_shaped");
        Ok((ok, format!("sampled K {}", r.sampled_lipschitz_k)))
    }),
    ("gexp", "asymmetric_generator_flags", |_| {
        let (tg, zg, ag) = default_grids();
        let r = check_generator(&Generator::asymmetric(0.2, 0.5), &tg, &zg, &ag)?;
        let observed = |p: &str| r.check(p).is_some_and(|c| c.observed);
        Ok((r.consistent() && observed("star_shaped") && observed("concave"), "star-shaped, concave".into()))
    }),
    ("gexp", "maxmin_one_step", |_| {
        let t = ScenarioTree::binomial(1, 0.04)?;
        let xi = rv(&[1.0, -1.0]);
        let s = maxmin_dp(&t, 0.5, &xi, 0, MaxminMode::Sup)?.root();
        let i = maxmin_dp(&t, 0.5, &xi, 0, MaxminMode::Inf)?.root();
        let m = maxmin_dp(&t, 0.5, &xi, 0, MaxminMode::Alpha(0.5))?.root();
        Ok((close(s, 0.1, 1e-12) && close(i, -0.1, 1e-12) && close(m, 0.0, 1e-12), format!("sup {s}, inf {i}, mid {m}")))
    }),
    ("gexp", "maxmin_sup_matches_abs_driver", |seed| {
        let mut g = rng(seed);
        let mut worst: f64 = 0.0;
        for n in 1..=10 {
            let t = ScenarioTree::binomial(n, 1.0)?;
            let xi = random_payoff(&mut g, &t, 2.0);
            let sol = solve_bsde(&t, &Generator::abs(0.3), &xi)?;
            for lvl in 0..=n {
                worst = worst.max(maxmin_dp(&t, 0.3, &xi, lvl, MaxminMode::Sup)?.max_abs_diff(&sol.y_at(lvl)));
            }
        }
        Ok((worst <= 1e-12, format!("max gap {worst:e}")))
    }),
    ("gexp", "maxmin_of_constant", |_| {
        let t = ScenarioTree::binomial(3, 1.0)?;
        let mut ok = true;
        for mode in [MaxminMode::Sup, MaxminMode::Inf, MaxminMode::Alpha(0.3)] {
            ok &= maxmin_dp(&t, 0.4, &RandomVariable::constant(&t, 2.0), 1, mode)?.values().iter().all(|&v| close(v, 2.0, 1e-12));
        }
        Ok((ok, "xi".into()))
    }),
    ("gexp", "entropic_oracle_closed_form", |seed| {
        let t = ScenarioTree::binomial(4, 1.0)?;
        let xi = random_payoff(&mut rng(seed), &t, 1.0);
        let mut worst: f64 = 0.0;
        for lvl in 0..=4 {
            let r = entropic_bsde(&t, 1.0, &zero_base(), &xi, lvl)?;
            worst = worst.max(r.oracle.max_abs_diff(&crate::measures::entropic(&t, &xi, lvl, 1.0, None)?));
        }
        Ok((worst <= 1e-12, format!("max gap {worst:e}")))
    }),
    ("gexp", "entropic_routes_on_constant", |_| {
        let t = ScenarioTree::binomial(3, 1.0)?;
        let r = entropic_bsde(&t, 1.0, &Generator::asymmetric(0.2, 0.5), &RandomVariable::constant(&t, 0.9), 0)?;
        Ok((close(r.bsde.root(), -0.9, 1e-12) && close(r.oracle.root(), -0.9, 1e-12), format!("bsde {}, oracle {}", r.bsde.root(), r.oracle.root())))
    }),
    ("gexp", "asymmetric_route_gap_shrinks", |_| {
        let table = convergence_study(&Generator::asymmetric(0.2, 0.5), &terminal_sum(), &[4, 8, 16], 1.0, Some(1.0))?;
        let errs: Vec<_> = table.rows.iter().map(|r| r.abs_error).collect();
        Ok((table.strictly_decreasing(), format!("errors {errs:?}")))
    }),
    ("gexp", "relative_entropy_of_self", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let q = random_equivalent_measure(&mut g, &t);
        let mut ok = true;
        for lvl in 0..=3 {
            ok &= relative_entropy(&t, &q, &q, lvl)?.values().iter().all(|&v| v.abs() <= 1e-15);
        }
        Ok((ok, "zero".into()))
    }),
    ("gexp", "relative_entropy_one_step", |_| {
        let t = one_step();
        let r = MeasureChange::new(&t, vec![vec![vec![0.75, 0.25]]])?;
        let v = relative_entropy(&t, &r, &MeasureChange::reference(&t), 0)?.root();
        let expect = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        Ok((close(v, expect, 1e-12) && close(v, 0.1308, 1e-4), format!("value {v}")))
    }),
    ("gexp", "variational_identity", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let q = random_equivalent_measure(&mut g, &t);
        let xi = random_payoff(&mut g, &t, 2.0);
        let best = entropic_maximizer(&t, &q, &xi, 1.5)?;
        let mut at_max: f64 = 0.0;
        let mut sampled = f64::INFINITY;
        for lvl in 0..=3 {
            at_max = at_max.max(variational_gap(&t, &q, &best, &xi, 1.5, lvl)?.values().iter().fold(0.0, |a, v| a.max(v.abs())));
            for _ in 0..10 {
                let r = random_equivalent_measure(&mut g, &t);
                sampled = sampled.min(variational_gap(&t, &q, &r, &xi, 1.5, lvl)?.min());
            }
        }
        Ok((at_max <= 1e-9 && sampled >= -1e-12, format!("gap at maximizer {at_max:e}, min sampled gap {sampled:e}")))
    }),
    ("gexp", "convergence_zero_driver", |_| {
        let table = convergence_study(&Generator::zero(), &terminal_sum(), &[4, 8, 16, 32], 1.0, None)?;
        Ok((table.max_error() <= 1e-12, format!("max error {:e}", table.max_error())))
    }),
    ("gexp", "convergence_pure_entropic", |_| {
        let table = convergence_study(&Generator::zero(), &terminal_sum(), &[4, 8, 16, 32], 1.0, Some(1.0))?;
        let ratio = table.min_ratio().unwrap_or(0.0);
        Ok((table.strictly_decreasing() && ratio >= 1.3, format!("min ratio {ratio}")))
    }),
    ("gexp", "convergence_abs_driver", |_| {
        let table = convergence_study(&Generator::abs(0.5), &terminal_sum(), &[4, 8, 16, 32], 1.0, None)?;
        Ok((table.max_error() <= 1e-12, format!("max error {:e}", table.max_error())))
    }),
    ("dynamics", "linear_time_consistent", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let q = random_equivalent_measure(&mut g, &t);
        let xs: Vec<_> = (0..20).map(|_| random_payoff(&mut g, &t, 2.0)).collect();
        let r = consistency_report(&RiskMeasureSpec::Linear { q: Some(q) }, &t, &xs, 1e-12)?;
        Ok((r.consistent, format!("max gap {:e}", r.max_gap)))
    }),
    ("dynamics", "var_inconsistency_witness", |_| {
        let t = ScenarioTree::binomial(2, 1.0)?;
        let w = find_inconsistency(&RiskMeasureSpec::conditional_var(0.3), &t, &[-2.0, -1.0, 0.0, 1.0, 2.0], 0, 1, 1e-6)?;
        Ok(match w {
            Some(w) => (w.entry.gap > 0.0, format!("payoff {:?}, gap {}", w.leaf_values, w.entry.gap)),
            None => (false, "no witness".into()),
        })
    }),
    ("dynamics", "linear_sensitive", |seed| {
        let t = ScenarioTree::binomial(3, 1.0)?;
        let r = check_sensitivity(&RiskMeasureSpec::linear(), &t, 0, &MeasureChange::reference(&t), &SensitivityConfig::new(50, seed))?;
        Ok((r.verdict == SensitivityVerdict::SensitiveEvidence && r.atom_test.passed, format!("{:?}", r.verdict)))
    }),
    ("dynamics", "worst_case_atom_test", |seed| {
        let t = random_tree(&mut rng(seed), 3, 3);
        let mut ok = true;
        for leaf in 0..t.leaf_count() {
            let mut v = vec![0.0; t.leaf_count()];
            v[leaf] = -1.0;
            let r = RiskMeasureSpec::WorstCase.evaluate(&t, &rv(&v), 1)?;
            ok &= r.values()[t.ancestor_of_leaf(leaf, 1)] == 1.0;
        }
        let rep = check_sensitivity(&RiskMeasureSpec::WorstCase, &t, 1, &MeasureChange::reference(&t), &SensitivityConfig::new(20, seed))?;
        Ok((ok && rep.atom_test.passed, format!("{} events", rep.atom_test.events)))
    }),
    ("cli", "eval_entropic", |_| {
        let rep = run_cli(two_leaf_model(json!({"e": {"type": "entropic", "gamma": 1.0}}), json!([0.0, -ln3()]), None), eval())?;
        let v = first_profile(&rep.report.results, "profile");
        Ok((close(v, 2f64.ln(), 1e-12), format!("value {v}")))
    }),
    ("cli", "eval_var_three_atoms", |_| {
        let model = json!({
            "tree": {"explicit": three_atom().to_document()},
            "payoffs": {"x": {"leaf_values": [-1.0, 0.0, 1.0]}},
            "measures": {"var": {"type": "conditional_var", "lambda": 0.3}},
        });
        let v = first_profile(&run_cli(model, eval())?.report.results, "profile");
        Ok((v == 0.0, format!("value {v}")))
    }),
    ("cli", "eval_zero_payoff", |_| {
        let model = json!({
            "tree": {"binomial": {"steps": 2, "horizon": 1.0}},
            "payoffs": {"zero": {"leaf_values": [0.0, 0.0, 0.0, 0.0]}},
            "measures": {
                "lin": {"type": "linear"}, "worst": {"type": "worst_case"},
                "var": {"type": "conditional_var", "lambda": 0.3}, "ent": {"type": "entropic", "gamma": 2.0},
                "g": {"type": "g_expectation", "generator": {"name": "example41"}},
            },
        });
        let rep = run_cli(model, eval())?.report;
        let rows = rep.results.as_array().cloned().unwrap_or_default();
        let ok = rows.len() == 5 && rows.iter().all(|r| r["profile"].as_array().is_some_and(|p| p.iter().all(|v| v.as_f64() == Some(0.0))));
        Ok((ok, format!("{} measures", rows.len())))
    }),
    ("cli", "envelope_attainment_examples", |seed| {
        let mut g = rng(seed);
        let t = random_tree(&mut g, 3, 3);
        let x = random_payoff(&mut g, &t, 2.0);
        let envelope = |kind: &str| Command::Envelope { measure: None, payoff: None, kind: Some(kind.into()) };
        let a = run_cli(two_leaf_model(json!({"e": {"type": "entropic", "gamma": 1.0}}), json!([0.0, -ln3()]), None), envelope("monetary"))?;
        let wc = json!({
            "tree": {"explicit": t.to_document()},
            "payoffs": {"x": {"leaf_values": x.values()}},
            "measures": {"worst": {"type": "worst_case"}},
            "params": {"t": 1, "seed": seed, "budget": 50},
        });
        let b = run_cli(wc, envelope("star"))?;
        let var = json!({
            "tree": {"explicit": three_atom().to_document()},
            "payoffs": {"x": {"leaf_values": [-1.0, 0.5, 2.0]}},
            "measures": {"var": {"type": "conditional_var", "lambda": 0.3}},
            "params": {"seed": seed, "budget": 50},
        });
        let c = run_cli(var, envelope("monetary"))?;
        let ok = [&a, &b, &c].iter().all(|o| o.report.passed);
        Ok((ok, format!("entropic {}, worst case {}, var {}", a.report.passed, b.report.passed, c.report.passed)))
    }),
    ("cli", "bsde_abs_one_step", |_| {
        let model = json!({
            "tree": {"binomial": {"steps": 1, "horizon": 0.04}},
            "payoffs": {"xi": {"leaf_values": [1.0, -1.0]}},
            "generators": {"abs": {"name": "abs", "kappa": 0.5}},
        });
        let rep = run_cli(model, Command::Bsde { generator: None, payoff: None })?;
        let v = first_profile(&rep.report.results, "value");
        Ok((close(v, 0.1, 1e-12) && rep.report.passed, format!("value {v}")))
    }),
    ("cli", "convergence_pure_entropic", |_| {
        let model = json!({
            "tree": {"binomial": {"steps": 1, "horizon": 1.0}},
            "payoffs": {"sum": {"functional": "of_terminal_sum"}},
            "generators": {"zero": {"name": "zero"}},
            "params": {"gamma": 1.0, "N_list": [4, 8, 16, 32]},
        });
        let o = run_cli(model, Command::Convergence { generator: None, payoff: None, n_list: None, gamma: None, horizon: None, csv: None })?;
        let header = o.csv.as_deref().is_some_and(|c| c.contains("N,value,abs_error,ratio"));
        Ok((o.report.passed && header, "monotone error column".into()))
    }),
    ("cli", "axioms_var_witness", |seed| {
        let model = json!({
            "tree": {"explicit": three_atom().to_document()},
            "measures": {"var": {"type": "conditional_var", "lambda": 0.3}},
            "params": {"seed": seed, "budget": 200},
        });
        let o = run_cli(model, Command::Axioms { measure: None, axioms: Some(vec!["A4".into()]) })?;
        let emitted = o.report.checks.iter().any(|c| !c.passed && c.detail.is_some());
        Ok((!o.report.passed && emitted, "A4 witness emitted".into()))
    }),
];

fn two_leaf_model(measures: Value, payoff: Value, params: Option<Value>) -> Value {
    let mut m = json!({
        "tree": {"binomial": {"steps": 1, "horizon": 1.0}},
        "payoffs": {"x": {"leaf_values": payoff}},
        "measures": measures,
    });
    if let Some(p) = params {
        m["params"] = p;
    }
    m
}

fn eval() -> Command {
    Command::Eval { measure: None, payoff: None }
}

fn run_cli(model: Value, cmd: Command) -> Result<crate::cli::Outcome> {
    let file: ModelFile = serde_json::from_value(model)?;
    execute(&Model::from_file(file)?, &cmd, &GlobalArgs::default())
}

fn first_profile(results: &Value, key: &str) -> f64 {
    results[0][key][0].as_f64().unwrap_or(f64::NAN)
}

/// Runs every case with the given seed.
pub fn run(seed: u64) -> Vec<CaseResult> {
    CASES
        .iter()
        .map(|(module, id, f)| {
            let (passed, detail) = f(seed).unwrap_or_else(|e| (false, format!("error: {e}")));
            CaseResult { id: format!("{module}/{id}"), module: (*module).into(), passed, detail }
        })
        .collect()
}

pub fn case_count() -> usize {
    CASES.len()
}
