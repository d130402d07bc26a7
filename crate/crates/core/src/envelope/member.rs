use serde::{Deserialize, Serialize};

use super::hull::UpperEnvelope;
use crate::error::{Result, RiskError};
use crate::measures::per_node;
use crate::space::{cond_expect, MeasureChange, Profile, RandomVariable, ScenarioTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    /// Acceptance set `{X >= Z}` translated by cash.
    Monetary,
    /// `{X >= a Z}` for some level-`t` `a` in `[0, 1]`.
    Star,
    /// `{X >= a Z}` for some level-`t` `a >= 0`.
    Cone,
}

/// A risk measure whose acceptance set is generated by the anchor `Z` at level `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeMemberSpec {
    pub kind: MemberKind,
    #[serde(alias = "Z")]
    pub anchor: RandomVariable,
    pub t: usize,
}

impl EnvelopeMemberSpec {
    pub fn new(kind: MemberKind, anchor: RandomVariable, t: usize) -> Self {
        Self { kind, anchor, t }
    }
}

/// Minimizer and value of `a -> max_k (a z_k - x_k)` over the member's `a` range.
pub fn member_minimizer(kind: MemberKind, z: &[f64], x: &[f64]) -> Option<(f64, f64)> {
    match kind {
        MemberKind::Monetary => {
            let v = z.iter().zip(x).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
            Some((1.0, v))
        }
        MemberKind::Star | MemberKind::Cone => {
            let intercepts: Vec<f64> = x.iter().map(|v| -v).collect();
            let env = UpperEnvelope::new(z, &intercepts);
            let hi = if kind == MemberKind::Star { 1.0 } else { f64::INFINITY };
            env.minimize(0.0, hi)
        }
    }
}

/// Level-`t` value of the member measure: the least cash making `X` acceptable.
pub fn member_eval(member: &EnvelopeMemberSpec, tree: &ScenarioTree, x: &RandomVariable, t: usize) -> Result<Profile> {
    if member.t != t {
        return Err(RiskError::Mismatch(format!("member anchored at level {}, evaluated at level {t}", member.t)));
    }
    member.anchor.check(tree)?;
    x.check(tree)?;
    per_node(tree, t, |i| {
        let r = tree.leaf_range(t, i);
        member_minimizer(member.kind, &member.anchor.values()[r.clone()], &x.values()[r])
            .map(|(_, v)| v)
            .ok_or(RiskError::DegenerateAnchor { node: i })
    })
}

/// Nodewise minimum over a non-empty list of members sharing `t`.
pub fn lower_envelope(members: &[EnvelopeMemberSpec], tree: &ScenarioTree, x: &RandomVariable, t: usize) -> Result<Profile> {
    let (first, rest) = members.split_first().ok_or_else(|| RiskError::InvalidInput("empty envelope".into()))?;
    let mut acc = member_eval(first, tree, x, t)?;
    for m in rest {
        acc = acc.zip_with(&member_eval(m, tree, x, t)?, f64::min);
    }
    Ok(acc)
}

/// Penalty of the monetary member at `Z` for the scenario `Q`: `E_Q[-Z | F_t]`.
/// Always finite on a finite tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PenaltyValue(pub Profile);

pub fn penalty(tree: &ScenarioTree, z: &RandomVariable, q: &MeasureChange, t: usize) -> Result<PenaltyValue> {
    Ok(PenaltyValue(cond_expect(tree, &z.neg(), t, Some(q))?))
}
