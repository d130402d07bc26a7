//! Acceptance-set envelopes: members generated by an anchor, their lower
//! envelopes, and the identities linking them to a source measure.

mod hull;
mod member;
mod verify;

pub use hull::UpperEnvelope;
pub use member::{lower_envelope, member_eval, member_minimizer, penalty, EnvelopeMemberSpec, MemberKind, PenaltyValue};
pub use verify::{
    dual_check, shift_measure, sup_of_family, verify_attainment, verify_intersection, AttainmentReport, CheckStatus, DualReport,
    FamilySup, IntersectionReport, NodeWitness, ATTAINMENT_TOL, DUALITY_TOL, VERTEX_ENUMERATION_CAP,
};
