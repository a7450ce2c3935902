//! Predicate invention: detect success/failure pairs the vocabulary cannot
//! tell apart, ask a proposer for a candidate, and keep it only if it
//! scores above the threshold and separates the pair.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::formal::{alpha_holds, AbstractState, Abstractor, Classifier, Dataset, Model, Predicate, World};
use crate::operators::{learn_operators_where, OperatorOptions};
use crate::oracle::{check_proposal, ConflictKind, Proposal, ProposalRequest, Proposer};
use crate::{Error, Result};

pub type Abstractions = [(AbstractState, AbstractState)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InventOptions {
    pub threshold: f64,
    pub attempt_cap: usize,
    pub mu_max: usize,
    pub operators: OperatorOptions,
}

impl Default for InventOptions {
    fn default() -> Self {
        InventOptions { threshold: 0.6, attempt_cap: 8, mu_max: crate::oracle::MU_MAX, operators: OperatorOptions::default() }
    }
}

/// A (success, failure) pair of transition ids of one skill.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub success: usize,
    pub failure: usize,
}

fn effect_is_empty(abs: &Abstractions, id: usize) -> bool {
    abs[id].0.atoms == abs[id].1.atoms
}

/// Conflicting pairs of one kind, ordered by (success id, failure id).
///
/// Precondition: the predicted initiation indicator agrees on both
/// before-states while the outcomes differ. Effect: the success produced no
/// abstract change, exactly like the failure.
pub fn find_conflicts(
    world: &World,
    dataset: &Dataset,
    abs: &Abstractions,
    model: &Model,
    kind: ConflictKind,
) -> Vec<Conflict> {
    let mut out = Vec::new();
    for skill in &world.skills {
        out.extend(skill_conflicts(world, dataset, abs, model, &skill.name, kind));
    }
    out.sort();
    out
}

pub fn skill_conflicts(
    world: &World,
    dataset: &Dataset,
    abs: &Abstractions,
    model: &Model,
    skill: &str,
    kind: ConflictKind,
) -> Vec<Conflict> {
    let ts: Vec<_> = dataset.of_skill(skill).collect();
    let mut out = Vec::new();
    match kind {
        ConflictKind::Precondition => {
            let alpha: BTreeMap<usize, bool> =
                ts.iter().map(|t| (t.id, alpha_holds(model, world, &t.instance, &abs[t.id].0))).collect();
            for s in ts.iter().filter(|t| t.success) {
                for f in ts.iter().filter(|t| !t.success) {
                    if alpha[&s.id] == alpha[&f.id] {
                        out.push(Conflict { kind, success: s.id, failure: f.id });
                    }
                }
            }
        }
        ConflictKind::Effect => {
            for s in ts.iter().filter(|t| t.success && effect_is_empty(abs, t.id)) {
                for f in ts.iter().filter(|t| !t.success) {
                    out.push(Conflict { kind, success: s.id, failure: f.id });
                }
            }
        }
    }
    out
}

fn conflict_open(world: &World, dataset: &Dataset, abs: &Abstractions, model: &Model, c: &Conflict) -> bool {
    let t = |id: usize| &dataset.transitions[id];
    match c.kind {
        ConflictKind::Precondition => {
            let a = |id: usize| alpha_holds(model, world, &t(id).instance, &abs[id].0);
            a(c.success) == a(c.failure)
        }
        ConflictKind::Effect => effect_is_empty(abs, c.success),
    }
}

/// Fraction of the skill's transitions the model explains, judged on
/// preconditions or on effects. `None` when the skill has no transitions.
pub fn skill_score(
    world: &World,
    dataset: &Dataset,
    abs: &Abstractions,
    model: &Model,
    skill: &str,
    kind: ConflictKind,
) -> Option<f64> {
    let mut valid = 0usize;
    let mut total = 0usize;
    for t in dataset.of_skill(skill) {
        total += 1;
        let (before, after) = &abs[t.id];
        let groundings = model
            .operators_for(skill)
            .flat_map(|(i, op)| op.bindings_for(world, &t.instance).into_iter().map(move |b| op.ground(i, &b)));
        let ok = match kind {
            ConflictKind::Precondition => {
                let any = groundings.into_iter().any(|g| before.satisfies(&g.pre).unwrap_or(false));
                any == t.success
            }
            ConflictKind::Effect => {
                !t.success
                    || groundings.into_iter().any(|g| {
                        before.satisfies(&g.pre).unwrap_or(false)
                            && before.apply(&g).is_ok_and(|s| s.atoms == after.atoms)
                    })
            }
        };
        valid += usize::from(ok);
    }
    (total > 0).then(|| valid as f64 / total as f64)
}

fn skill_model(world: &World, dataset: &Dataset, abs: &Abstractions, preds: &[Predicate], skill: &str, opts: &OperatorOptions) -> Model {
    Model::new(preds.to_vec(), learn_operators_where(world, dataset, abs, preds, opts, |s| s == skill))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum InventEvent {
    Conflict { skill: String, conflict: Conflict },
    Exhausted { skill: String, conflict: Conflict },
    Scored { skill: String, kind: ConflictKind, predicate: Predicate, score: f64, resolved: bool, accepted: bool },
    Invalid { skill: String, predicate: String, reason: String },
    Dropped { predicate: String, reason: String },
}

/// Per-skill invention loop. Returns the extended vocabulary; rejected
/// names are added to `rejected` under the skill they were proposed for.
#[allow(clippy::too_many_arguments)]
pub fn invent(
    world: &World,
    dataset: &Dataset,
    predicates: Vec<Predicate>,
    rejected: &mut BTreeMap<String, BTreeSet<String>>,
    proposer: &mut dyn Proposer,
    classifier: &mut dyn Classifier,
    abstractor: &mut Abstractor,
    opts: &InventOptions,
    events: &mut Vec<InventEvent>,
) -> Result<Vec<Predicate>> {
    let mut preds = predicates;
    preds.sort();
    let mut attempts: BTreeMap<String, usize> = BTreeMap::new();
    let mut skipped: BTreeSet<Conflict> = BTreeSet::new();
    for _pass in 0..4 {
        let mut changed = false;
        for skill in &world.skills {
            loop {
                let used = attempts.entry(skill.name.clone()).or_default();
                if *used >= opts.attempt_cap {
                    break;
                }
                let abs = abstractor.abstract_dataset(classifier, &preds, dataset)?;
                let model = skill_model(world, dataset, &abs, &preds, &skill.name, &opts.operators);
                let kinds = if model.operators.is_empty() {
                    [ConflictKind::Effect, ConflictKind::Precondition]
                } else {
                    [ConflictKind::Precondition, ConflictKind::Effect]
                };
                let Some(conflict) = kinds.iter().find_map(|&k| {
                    skill_conflicts(world, dataset, &abs, &model, &skill.name, k)
                        .into_iter()
                        .find(|c| !skipped.contains(c))
                }) else {
                    break;
                };
                events.push(InventEvent::Conflict { skill: skill.name.clone(), conflict });
                let no_rejections = BTreeSet::new();
                let rej = rejected.get(&skill.name).unwrap_or(&no_rejections);
                let req = ProposalRequest {
                    world,
                    skill,
                    success: &dataset.transitions[conflict.success],
                    failure: &dataset.transitions[conflict.failure],
                    existing: &preds,
                    rejected: rej,
                    kind: conflict.kind,
                };
                let cand = match proposer.propose(&req)? {
                    Proposal::Exhausted => {
                        events.push(InventEvent::Exhausted { skill: skill.name.clone(), conflict });
                        skipped.insert(conflict);
                        continue;
                    }
                    Proposal::Candidate(p) => p,
                };
                *attempts.get_mut(&skill.name).unwrap() += 1;
                if let Err(e) = check_proposal(&req, &cand, opts.mu_max) {
                    events.push(InventEvent::Invalid { skill: skill.name.clone(), predicate: cand.name.clone(), reason: e.to_string() });
                    if !preds.iter().any(|p| p.name == cand.name) {
                        rejected.entry(skill.name.clone()).or_default().insert(cand.name);
                    }
                    continue;
                }
                let mut extended = preds.clone();
                extended.push(cand.clone());
                extended.sort();
                let abs2 = match abstractor.abstract_dataset(classifier, &extended, dataset) {
                    Ok(a) => a,
                    Err(e @ Error::Classifier { .. }) => {
                        events.push(InventEvent::Invalid { skill: skill.name.clone(), predicate: cand.name.clone(), reason: e.to_string() });
                        rejected.entry(skill.name.clone()).or_default().insert(cand.name);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let model2 = skill_model(world, dataset, &abs2, &extended, &skill.name, &opts.operators);
                let score = skill_score(world, dataset, &abs2, &model2, &skill.name, conflict.kind).unwrap_or(0.0);
                let resolved = !conflict_open(world, dataset, &abs2, &model2, &conflict);
                let accepted = score > opts.threshold && resolved;
                events.push(InventEvent::Scored {
                    skill: skill.name.clone(),
                    kind: conflict.kind,
                    predicate: cand.clone(),
                    score,
                    resolved,
                    accepted,
                });
                if accepted {
                    log::debug!("accepted {} for {} (score {score:.3})", cand.name, skill.name);
                    preds = extended;
                    changed = true;
                } else {
                    rejected.entry(skill.name.clone()).or_default().insert(cand.name);
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(preds)
}

/// True when every grounding of `p` takes one and the same value on every
/// state of the dataset (including predicates with no groundings).
pub fn is_tautological(
    dataset: &Dataset,
    p: &Predicate,
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
) -> Result<bool> {
    let universe = abstractor.universe(core::slice::from_ref(p))?;
    if universe.is_empty() {
        return Ok(true);
    }
    let mut seen = BTreeSet::new();
    for s in dataset.states() {
        let a = abstractor.abstract_state(classifier, core::slice::from_ref(p), s)?;
        if a.atoms.is_empty() {
            seen.insert(false);
        } else if a.atoms.len() == universe.len() {
            seen.insert(true);
        } else {
            return Ok(false);
        }
        if seen.len() > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn all_scores(
    world: &World,
    dataset: &Dataset,
    preds: &[Predicate],
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
    opts: &OperatorOptions,
) -> Result<BTreeMap<(String, ConflictKind), f64>> {
    let abs = abstractor.abstract_dataset(classifier, preds, dataset)?;
    let model = Model::new(preds.to_vec(), crate::operators::learn_operators(world, dataset, &abs, preds, opts));
    let mut out = BTreeMap::new();
    for s in &world.skills {
        for k in [ConflictKind::Precondition, ConflictKind::Effect] {
            if let Some(v) = skill_score(world, dataset, &abs, &model, &s.name, k) {
                out.insert((s.name.clone(), k), v);
            }
        }
    }
    Ok(out)
}

/// True when some successful transition flips a grounding of `p`.
pub fn is_changed_by_skills(
    dataset: &Dataset,
    p: &Predicate,
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
) -> Result<bool> {
    let one = core::slice::from_ref(p);
    for t in dataset.transitions.iter().filter(|t| t.success) {
        let before = abstractor.abstract_state(classifier, one, &t.before)?;
        let after = abstractor.abstract_state(classifier, one, &t.after)?;
        if before.atoms != after.atoms {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Drops tautological predicates, then (in name order) every static
/// predicate whose removal lowers no skill's precondition or effect score.
/// Predicates some skill changes are kept: they carry effects and goals.
pub fn reevaluate(
    world: &World,
    dataset: &Dataset,
    predicates: Vec<Predicate>,
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
    opts: &OperatorOptions,
    events: &mut Vec<InventEvent>,
) -> Result<Vec<Predicate>> {
    if dataset.is_empty() {
        return Ok(predicates);
    }
    let mut preds = Vec::new();
    for p in predicates {
        if is_tautological(dataset, &p, abstractor, classifier)? {
            events.push(InventEvent::Dropped { predicate: p.name.clone(), reason: "tautological".into() });
        } else {
            preds.push(p);
        }
    }
    preds.sort();
    let names: Vec<String> = preds.iter().map(|p| p.name.clone()).collect();
    for name in names {
        let p = preds.iter().find(|p| p.name == name).unwrap().clone();
        if is_changed_by_skills(dataset, &p, abstractor, classifier)? {
            continue;
        }
        let full = all_scores(world, dataset, &preds, abstractor, classifier, opts)?;
        let without: Vec<Predicate> = preds.iter().filter(|p| p.name != name).cloned().collect();
        let reduced = all_scores(world, dataset, &without, abstractor, classifier, opts)?;
        let earns = full.iter().any(|(k, v)| reduced.get(k).is_some_and(|r| r < v));
        if !earns {
            events.push(InventEvent::Dropped { predicate: name, reason: "no score contribution".into() });
            preds = without;
        }
    }
    Ok(preds)
}
