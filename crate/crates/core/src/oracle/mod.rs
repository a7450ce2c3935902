//! Predicate proposers and classifiers.

pub mod scripted;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use serde::{Deserialize, Serialize};

use crate::formal::{Predicate, Skill, Transition, World};
use crate::{Error, Result};

pub use scripted::{kitchen_distractors, Distractor, FluentModel, KitchenFluents, PoolClassifier, ScriptedProposer};

/// Default arity cap for invented predicates.
pub const MU_MAX: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConflictKind {
    Precondition,
    Effect,
}

impl ConflictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConflictKind::Precondition => "precondition",
            ConflictKind::Effect => "effect",
        }
    }
}

/// A conflicting (success, failure) pair handed to a proposer.
#[derive(Clone, Copy, Debug)]
pub struct ProposalRequest<'a> {
    pub world: &'a World,
    pub skill: &'a Skill,
    pub success: &'a Transition,
    pub failure: &'a Transition,
    pub existing: &'a [Predicate],
    pub rejected: &'a BTreeSet<String>,
    pub kind: ConflictKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proposal {
    Candidate(Predicate),
    /// The proposer has nothing new for this conflict.
    Exhausted,
}

pub trait Proposer {
    fn propose(&mut self, request: &ProposalRequest<'_>) -> Result<Proposal>;
}

impl<P: Proposer + ?Sized> Proposer for Box<P> {
    fn propose(&mut self, request: &ProposalRequest<'_>) -> Result<Proposal> {
        (**self).propose(request)
    }
}

impl<P: Proposer + ?Sized> Proposer for &mut P {
    fn propose(&mut self, request: &ProposalRequest<'_>) -> Result<Proposal> {
        (**self).propose(request)
    }
}

/// Every parameter type of `p` is a supertype-or-equal of some parameter
/// type of `skill`.
pub fn within_skill_params(world: &World, skill: &Skill, p: &Predicate) -> bool {
    p.params.iter().all(|t| skill.params.iter().any(|s| world.hierarchy.is_subtype(s, t)))
}

/// Checks the proposer contract: arity cap, known types, skill-parameter
/// subset, and a fresh name.
pub fn check_proposal(request: &ProposalRequest<'_>, p: &Predicate, mu_max: usize) -> Result<()> {
    p.check(&request.world.hierarchy, mu_max)?;
    if !within_skill_params(request.world, request.skill, p) {
        return Err(Error::Oracle(alloc::format!(
            "{} uses a parameter type outside {}'s parameters",
            p.signature(),
            request.skill.name
        )));
    }
    if request.existing.iter().any(|e| e.name == p.name) || request.rejected.contains(&p.name) {
        return Err(Error::Oracle(alloc::format!("{} was already proposed", p.name)));
    }
    Ok(())
}
