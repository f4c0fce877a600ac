//! Finite-model machinery for checking human-robot purpose alignment.
//!
//! The crate models humans and robots as layered perceptual pipelines over
//! finite domains: world states are sensed into observations, observations are
//! abstracted into encoding-space points, and utility-bearing subsets of
//! encoding spaces form *purposes*. Purposes ground into domain-specific
//! *goals* (observation sets) and *state goals* (state sets). On top of this
//! the crate provides:
//!
//! - arbitration rules for choosing among intended purposes ([`arbitration`]),
//! - goal-conditioned tabular learning and subgoal chains ([`competence`]),
//! - decision procedures for six alignment cases, each checked both through
//!   set-algebraic conditions and through simulation, with an audit that
//!   cross-validates the two ([`alignment`]),
//! - actual-causality checks (existence, counterfactual dependence,
//!   minimality) ([`causality`]),
//! - a scenario file format, a scripted home-robot scenario, and report
//!   emission ([`scenario`]).

pub mod alignment;
pub mod arbitration;
pub mod causality;
pub mod competence;
pub mod grounding;
pub mod perception;
pub mod purposes;
pub mod scenario;
pub mod world;
