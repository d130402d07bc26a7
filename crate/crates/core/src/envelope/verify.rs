//! Checks tying a source measure to its envelope representation: attainment
//! at the canonical anchor, domination by acceptable anchors, penalty duality
//! and the intersection identity for suprema of families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::member::{member_eval, EnvelopeMemberSpec, MemberKind};
use crate::error::{Result, RiskError};
use crate::measures::RiskMeasureSpec;
use crate::sampling::{random_equivalent_measure, random_payoff, random_profile, rng};
use crate::space::{cond_expect, lift, subtree_law, MeasureChange, Profile, RandomVariable, ScenarioTree};

/// Tolerance for attainment, domination and anchor acceptability.
pub const ATTAINMENT_TOL: f64 = 1e-9;
/// Tolerance for the penalty duality identity.
pub const DUALITY_TOL: f64 = 1e-12;
/// Largest subtree enumerated exhaustively in the duality check.
pub const VERTEX_ENUMERATION_CAP: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The source is not of the class the check assumed.
    ContractViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeWitness {
    pub node: usize,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttainmentReport {
    pub check: String,
    pub kind: MemberKind,
    pub t: usize,
    pub status: CheckStatus,
    pub value: Profile,
    /// Largest `rho_t(Z0)` over the nodes; at most the tolerance for a valid source.
    pub anchor_acceptability: f64,
    /// Largest `|member(Z0) - rho_t(X)|` over the nodes.
    pub attainment_gap: f64,
    pub anchors_tested: usize,
    /// Smallest `member(Z) - rho_t(X)` seen over random acceptable anchors.
    pub domination_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<NodeWitness>,
}

fn worst_node(lhs: &Profile, rhs: &Profile, f: impl Fn(f64, f64) -> f64) -> (usize, f64) {
    lhs.values()
        .iter()
        .zip(rhs.values())
        .map(|(&a, &b)| f(a, b))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
}

/// Checks that the member anchored at `Z0 = X + lift(rho_t(X))` reproduces
/// `rho_t(X)`, and that `budget` random anchors acceptable for the source
/// dominate it.
pub fn verify_attainment(
    source: &RiskMeasureSpec,
    kind: MemberKind,
    tree: &ScenarioTree,
    x: &RandomVariable,
    t: usize,
    budget: usize,
    seed: u64,
) -> Result<AttainmentReport> {
    let r = source.evaluate(tree, x, t)?;
    let z0 = x.add(&lift(tree, &r)?);
    let acc0 = source.evaluate(tree, &z0, t)?;
    let acceptability = acc0.max();
    let mut report = AttainmentReport {
        check: "attainment".into(),
        kind,
        t,
        status: CheckStatus::Pass,
        value: r.clone(),
        anchor_acceptability: acceptability,
        attainment_gap: 0.0,
        anchors_tested: 0,
        domination_margin: f64::INFINITY,
        witness: None,
    };
    if acceptability > ATTAINMENT_TOL {
        let (node, v) = worst_node(&acc0, &acc0, |a, _| a);
        report.status = CheckStatus::ContractViolation;
        report.witness = Some(NodeWitness {
            node,
            lhs: v,
            rhs: 0.0,
            anchor: Some(z0.into_values()),
            detail: Some("canonical anchor is not acceptable".into()),
        });
        return Ok(report);
    }
    let m0 = member_eval(&EnvelopeMemberSpec::new(kind, z0.clone(), t), tree, x, t)?;
    let (node, gap) = worst_node(&m0, &r, |a, b| (a - b).abs());
    report.attainment_gap = gap;
    if gap > ATTAINMENT_TOL * (1.0 + r.values()[node].abs()) {
        report.status = CheckStatus::Fail;
        report.witness = Some(NodeWitness {
            node,
            lhs: m0.values()[node],
            rhs: r.values()[node],
            anchor: Some(z0.into_values()),
            detail: Some("member at the canonical anchor differs from the source".into()),
        });
        return Ok(report);
    }

    let mut g = rng(seed);
    let scale = x.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for _ in 0..budget {
        let s = scale * g.random_range(0.2..=2.0);
        let w = random_payoff(&mut g, tree, s);
        let cushion = random_profile(&mut g, tree, t, 0.0, scale);
        let rw = source.evaluate(tree, &w, t)?;
        let z = w.add(&lift(tree, &rw.zip_with(&cushion, |a, b| a + b))?);
        if source.evaluate(tree, &z, t)?.max() > ATTAINMENT_TOL {
            continue;
        }
        report.anchors_tested += 1;
        let mz = member_eval(&EnvelopeMemberSpec::new(kind, z.clone(), t), tree, x, t)?;
        let (node, v) = worst_node(&r, &mz, |a, b| a - b);
        report.domination_margin = report.domination_margin.min(-v);
        if v > ATTAINMENT_TOL * (1.0 + r.values()[node].abs()) {
            report.status = CheckStatus::Fail;
            report.witness = Some(NodeWitness {
                node,
                lhs: mz.values()[node],
                rhs: r.values()[node],
                anchor: Some(z.into_values()),
                detail: Some("acceptable anchor undercuts the source".into()),
            });
            return Ok(report);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub check: String,
    pub t: usize,
    pub status: CheckStatus,
    pub primal: Profile,
    pub dual: Profile,
    /// Largest `|primal - dual|` over the nodes.
    pub max_gap: f64,
    /// Per node, the leaf (0-based) whose point-mass path attains the dual.
    pub maximizer_leaves: Vec<usize>,
    pub vertices_evaluated: usize,
    /// Fraction of vertex measures evaluated (1 when enumeration is exhaustive).
    pub coverage: f64,
    pub interior_samples: usize,
    /// Largest `dual value at an interior Q - primal`; must be non-positive.
    pub interior_excess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<NodeWitness>,
}

/// Value of `E_Q[-X | n] - E_Q[-Z | n]` at node `(t, node)` for the scenario `q`.
fn dual_value(tree: &ScenarioTree, z: &RandomVariable, x: &RandomVariable, t: usize, node: usize, q: &MeasureChange) -> f64 {
    let law = subtree_law(tree, t, node, Some(q));
    let r = tree.leaf_range(t, node);
    let ex: f64 = law.iter().zip(&x.values()[r.clone()]).map(|(p, v)| p * -v).sum();
    let ez: f64 = law.iter().zip(&z.values()[r]).map(|(p, v)| p * -v).sum();
    ex - ez
}

/// Compares the monetary member at `Z` with the maximum over vertex scenarios
/// (point masses on single paths) of expected loss minus penalty, and checks
/// that `budget` random interior scenarios stay below it.
pub fn dual_check(tree: &ScenarioTree, z: &RandomVariable, x: &RandomVariable, t: usize, budget: usize, seed: u64) -> Result<DualReport> {
    if budget == 0 {
        return Err(RiskError::InvalidInput("duality check needs a positive budget".into()));
    }
    let primal = member_eval(&EnvelopeMemberSpec::new(MemberKind::Monetary, z.clone(), t), tree, x, t)?;
    let mut g = rng(seed);
    let nodes = tree.node_count(t);
    let mut dual = vec![f64::NEG_INFINITY; nodes];
    let mut arg = vec![0usize; nodes];
    let mut evaluated = 0usize;
    let mut total = 0usize;
    for (i, (d, a)) in dual.iter_mut().zip(arg.iter_mut()).enumerate() {
        let leaves = tree.leaf_range(t, i);
        total += leaves.len();
        let chosen: Vec<usize> = if leaves.len() <= VERTEX_ENUMERATION_CAP {
            leaves.collect()
        } else {
            (0..budget.min(leaves.len())).map(|_| g.random_range(leaves.clone())).collect()
        };
        for leaf in chosen {
            let q = MeasureChange::point_mass_path(tree, leaf);
            let v = dual_value(tree, z, x, t, i, &q);
            evaluated += 1;
            if v > *d {
                *d = v;
                *a = leaf;
            }
        }
    }
    let dual = Profile::new(t, dual);
    let (node, max_gap) = worst_node(&primal, &dual, |a, b| (a - b).abs());
    let mut report = DualReport {
        check: "penalty_duality".into(),
        t,
        status: CheckStatus::Pass,
        primal: primal.clone(),
        dual: dual.clone(),
        max_gap,
        maximizer_leaves: arg,
        vertices_evaluated: evaluated,
        coverage: evaluated as f64 / total as f64,
        interior_samples: 0,
        interior_excess: f64::NEG_INFINITY,
        witness: None,
    };
    if max_gap > DUALITY_TOL * (1.0 + primal.values()[node].abs()) {
        report.status = CheckStatus::Fail;
        report.witness = Some(NodeWitness {
            node,
            lhs: primal.values()[node],
            rhs: dual.values()[node],
            anchor: None,
            detail: Some("vertex dual differs from the member value".into()),
        });
        return Ok(report);
    }
    for _ in 0..budget {
        let q = random_equivalent_measure(&mut g, tree);
        let ex = cond_expect(tree, &x.neg(), t, Some(&q))?;
        let pen = super::member::penalty(tree, z, &q, t)?.0;
        let v = ex.zip_with(&pen, |a, b| a - b);
        report.interior_samples += 1;
        let (node, excess) = worst_node(&v, &primal, |a, b| a - b);
        report.interior_excess = report.interior_excess.max(excess);
        if excess > DUALITY_TOL * (1.0 + primal.values()[node].abs()) {
            report.status = CheckStatus::Fail;
            report.witness = Some(NodeWitness {
                node,
                lhs: primal.values()[node],
                rhs: v.values()[node],
                anchor: None,
                detail: Some("interior scenario exceeds the member value".into()),
            });
            return Ok(report);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySup {
    pub value: Profile,
    /// `sup_lambda rho_lambda(0)` per node; finite on finite families.
    pub gate: Profile,
}

/// Nodewise maximum over a finite family, with the finiteness gate at zero.
pub fn sup_of_family(members: &[RiskMeasureSpec], tree: &ScenarioTree, x: &RandomVariable, t: usize) -> Result<FamilySup> {
    let (first, rest) = members.split_first().ok_or_else(|| RiskError::InvalidInput("empty family".into()))?;
    let zero = RandomVariable::zeros(tree);
    let mut value = first.evaluate(tree, x, t)?;
    let mut gate = first.evaluate(tree, &zero, t)?;
    for m in rest {
        value = value.zip_with(&m.evaluate(tree, x, t)?, f64::max);
        gate = gate.zip_with(&m.evaluate(tree, &zero, t)?, f64::max);
    }
    Ok(FamilySup { value, gate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub check: String,
    pub status: CheckStatus,
    pub value: Profile,
    /// Largest `rho_lambda(X + sup)` over members and nodes: must be `<= 0`.
    pub acceptability: f64,
    /// Smallest, over nodes, of `max_lambda rho_lambda(X + sup - delta)`: must be `> 0`.
    pub minimality: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<NodeWitness>,
}

/// Checks that the family supremum is the least cash making `X` acceptable
/// for every member at once.
pub fn verify_intersection(members: &[RiskMeasureSpec], tree: &ScenarioTree, x: &RandomVariable, t: usize, delta: f64) -> Result<IntersectionReport> {
    let sup = sup_of_family(members, tree, x, t)?.value;
    let cushioned = x.add(&lift(tree, &sup)?);
    let short = x.add(&lift(tree, &sup.map(|v| v - delta))?);
    let mut acc = Profile::constant(tree, t, f64::NEG_INFINITY);
    let mut fail = Profile::constant(tree, t, f64::NEG_INFINITY);
    for m in members {
        acc = acc.zip_with(&m.evaluate(tree, &cushioned, t)?, f64::max);
        fail = fail.zip_with(&m.evaluate(tree, &short, t)?, f64::max);
    }
    let acceptability = acc.max();
    let minimality = fail.min();
    let mut report =
        IntersectionReport { check: "intersection".into(), status: CheckStatus::Pass, value: sup, acceptability, minimality, delta, witness: None };
    if acceptability > ATTAINMENT_TOL {
        let (node, v) = worst_node(&acc, &acc, |a, _| a);
        report.status = CheckStatus::Fail;
        report.witness = Some(NodeWitness { node, lhs: v, rhs: 0.0, anchor: None, detail: Some("not acceptable for every member".into()) });
    } else if minimality <= 0.0 {
        let (node, v) = worst_node(&fail, &fail, |a, _| -a);
        report.status = CheckStatus::Fail;
        report.witness = Some(NodeWitness { node, lhs: -v, rhs: 0.0, anchor: None, detail: Some("less cash is already acceptable".into()) });
    }
    Ok(report)
}

/// `X -> rho(X + Z)`.
pub fn shift_measure(inner: RiskMeasureSpec, z: RandomVariable) -> RiskMeasureSpec {
    RiskMeasureSpec::Shifted { inner: Box::new(inner), z }
}
