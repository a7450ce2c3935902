//! Deterministic stand-in for a foundation model: proposes predicates from
//! a hidden fluent pool and classifies them exactly.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{within_skill_params, ConflictKind, Proposal, ProposalRequest, Proposer};
use crate::env::kitchen::{self, KitchenState};
use crate::formal::{ground_predicate, Classifier, GroundAtom, Predicate, SkillInstance, StateHandle, World};
use crate::{Error, Result};

/// Ground truth for a pool of predicates over an environment's states.
pub trait FluentModel {
    fn pool(&self) -> Vec<Predicate>;
    fn eval_batch(&self, atoms: &[GroundAtom], state: &StateHandle) -> Result<Vec<bool>>;
}

/// Kitchen fluents read from the hidden state carried in the handle.
#[derive(Clone, Debug)]
pub struct KitchenFluents {
    pub world: World,
}

impl FluentModel for KitchenFluents {
    fn pool(&self) -> Vec<Predicate> {
        kitchen::fluent_pool()
    }

    fn eval_batch(&self, atoms: &[GroundAtom], state: &StateHandle) -> Result<Vec<bool>> {
        let s = KitchenState::from_handle(state)?;
        atoms.iter().map(|a| s.fluent(&self.world, a)).collect()
    }
}

/// Predicate whose every grounding has the same constant value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distractor {
    pub predicate: Predicate,
    pub value: bool,
}

pub fn kitchen_distractors() -> Vec<Distractor> {
    let d = |name, ty, sem, value| Distractor { predicate: Predicate::new(name, &[ty], sem), value };
    alloc::vec![
        d("is_fragile", "pickupable", "the item would break if dropped", false),
        d("is_red", "item", "the item is red", false),
        d("looks_fresh", "item", "the item looks fresh", true),
        d("near_window", "station", "the station stands next to a window", true),
    ]
}

/// Exact classifier over a fluent pool plus constant distractors.
#[derive(Clone, Debug)]
pub struct PoolClassifier<F> {
    pub fluents: F,
    pub distractors: Vec<Distractor>,
}

impl<F: FluentModel> PoolClassifier<F> {
    pub fn new(fluents: F, distractors: Vec<Distractor>) -> Self {
        PoolClassifier { fluents, distractors }
    }
}

impl<F: FluentModel> Classifier for PoolClassifier<F> {
    fn evaluate_batch(&mut self, _vocab: &[Predicate], atoms: &[GroundAtom], state: &StateHandle) -> Result<Vec<bool>> {
        let pool: BTreeSet<String> = self.fluents.pool().into_iter().map(|p| p.name).collect();
        let mut out = alloc::vec![false; atoms.len()];
        let mut hidden = Vec::new();
        let mut slots = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            if let Some(d) = self.distractors.iter().find(|d| d.predicate.name == a.predicate) {
                out[i] = d.value;
            } else if pool.contains(&a.predicate) {
                hidden.push(a.clone());
                slots.push(i);
            } else {
                return Err(Error::Classifier { atom: alloc::format!("{a}"), reason: "unknown predicate".into() });
            }
        }
        if !hidden.is_empty() {
            for (i, v) in slots.into_iter().zip(self.fluents.eval_batch(&hidden, state)?) {
                out[i] = v;
            }
        }
        Ok(out)
    }
}

/// Argument of a ground atom seen through a skill instance: a position in
/// the instance's argument list, or an object outside it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Arg(usize),
    Const(String),
}

fn lift(atom: &GroundAtom, inst: &SkillInstance) -> Vec<Slot> {
    atom.args
        .iter()
        .map(|o| match inst.args.iter().position(|a| a == o) {
            Some(i) => Slot::Arg(i),
            None => Slot::Const(o.clone()),
        })
        .collect()
}

/// Proposer backed by a hidden pool. With probability `noise` it offers a
/// distractor instead of a discriminating predicate.
#[derive(Clone, Debug)]
pub struct ScriptedProposer<F> {
    pub fluents: F,
    pub distractors: Vec<Distractor>,
    pub noise: f64,
    rng: ChaCha8Rng,
}

impl<F: FluentModel> ScriptedProposer<F> {
    pub fn new(fluents: F, distractors: Vec<Distractor>, noise: f64, seed: u64) -> Self {
        ScriptedProposer { fluents, distractors, noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Lifted true-atom sets of `p` on the two contrasted states.
    fn lifted_truth(
        &self,
        world: &World,
        p: &Predicate,
        sides: [(&StateHandle, &SkillInstance); 2],
    ) -> Result<[BTreeSet<Vec<Slot>>; 2]> {
        let atoms = ground_predicate(&world.hierarchy, p, &world.objects);
        let mut out = [BTreeSet::new(), BTreeSet::new()];
        if atoms.is_empty() {
            return Ok(out);
        }
        for (k, (state, inst)) in sides.into_iter().enumerate() {
            let truth = self.fluents.eval_batch(&atoms, state)?;
            out[k] = atoms.iter().zip(truth).filter(|(_, t)| *t).map(|(a, _)| lift(a, inst)).collect();
        }
        Ok(out)
    }

    /// First pool predicate (by name) whose truth differs on the contrasted
    /// states: atoms over skill arguments first, then atoms that also
    /// mention other objects.
    pub fn discriminator(&self, req: &ProposalRequest<'_>) -> Result<Option<Predicate>> {
        let (si, sj) = match req.kind {
            ConflictKind::Precondition => (&req.success.before, &req.failure.before),
            ConflictKind::Effect => (&req.success.after, &req.failure.after),
        };
        let sides = [(si, &req.success.instance), (sj, &req.failure.instance)];
        let mut pool = self.fluents.pool();
        pool.sort_by(|a, b| a.name.cmp(&b.name));
        let mut fallback = None;
        for p in pool {
            if req.existing.iter().any(|e| e.name == p.name)
                || req.rejected.contains(&p.name)
                || !within_skill_params(req.world, req.skill, &p)
            {
                continue;
            }
            let [a, b] = self.lifted_truth(req.world, &p, sides)?;
            let only_args = |s: &Vec<Slot>| s.iter().all(|x| matches!(x, Slot::Arg(_)));
            if a.symmetric_difference(&b).any(only_args) {
                return Ok(Some(p));
            }
            if fallback.is_none() && a != b {
                fallback = Some(p);
            }
        }
        Ok(fallback)
    }

    fn distractor(&self, req: &ProposalRequest<'_>) -> Option<Predicate> {
        let mut ds: Vec<&Distractor> = self.distractors.iter().collect();
        ds.sort_by(|a, b| a.predicate.name.cmp(&b.predicate.name));
        ds.into_iter()
            .map(|d| &d.predicate)
            .find(|p| {
                !req.existing.iter().any(|e| e.name == p.name)
                    && !req.rejected.contains(&p.name)
                    && within_skill_params(req.world, req.skill, p)
            })
            .cloned()
    }
}

impl<F: FluentModel> Proposer for ScriptedProposer<F> {
    fn propose(&mut self, req: &ProposalRequest<'_>) -> Result<Proposal> {
        if self.noise > 0.0 && self.rng.random::<f64>() < self.noise {
            if let Some(d) = self.distractor(req) {
                return Ok(Proposal::Candidate(d));
            }
        }
        Ok(match self.discriminator(req)? {
            Some(p) => Proposal::Candidate(p),
            None => Proposal::Exhausted,
        })
    }
}
