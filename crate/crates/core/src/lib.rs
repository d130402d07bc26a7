//! Dynamic risk measures on finite scenario trees.
//!
//! The crate evaluates monetary, star-shaped and convex dynamic risk measures
//! on finite filtered probability spaces, builds the acceptance-set lower
//! envelopes that represent them, solves discrete backward equations for
//! g-expectations, and ships randomized falsifiers for the axioms and
//! identities that tie these objects together.

pub mod cli;
pub mod dynamics;
pub mod envelope;
pub mod error;
pub mod gexp;
pub mod measures;
pub mod sampling;
pub mod selftest;
pub mod space;

pub use error::{Result, RiskError};
