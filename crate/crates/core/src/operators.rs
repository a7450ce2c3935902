//! Operator learning: cluster successful transitions by lifted effect,
//! intersect their abstract before-states, and type parameters at the
//! lowest level consistent with every bound object.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::formal::{
    AbstractState, Abstractor, Classifier, Dataset, GroundAtom, LiftedAtom, Literal, Model, Operator, Param,
    Predicate, SkillInstance, Transition, World,
};
use crate::Result;

/// Extra objects beyond this many are ordered by name instead of by the
/// lexicographically smallest lifting.
const MAX_PERMUTED_EXTRAS: usize = 5;
/// Cap on role-based extra parameters per operator.
const MAX_ROLE_PARAMS: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorOptions {
    /// Also admit parameters for objects filling a common role in the
    /// members' before-states (not only objects in effects).
    pub extra_precondition_params: bool,
}

/// Object-agnostic effect of a successful transition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EffectKey {
    pub add: Vec<LiftedAtom>,
    pub delete: Vec<LiftedAtom>,
    /// For each skill argument, the index of its first occurrence.
    pub equalities: Vec<usize>,
    /// Number of effect objects that are not skill arguments.
    pub extras: usize,
}

impl EffectKey {
    pub fn is_empty(&self) -> bool {
        self.add.is_empty() && self.delete.is_empty()
    }
}

fn lift_atoms(atoms: &[&GroundAtom], binding: &[String]) -> Vec<LiftedAtom> {
    let mut v: Vec<LiftedAtom> = atoms
        .iter()
        .map(|a| LiftedAtom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|o| binding.iter().position(|b| b == o).expect("bound object")).collect(),
        })
        .collect();
    v.sort();
    v
}

fn for_each_permutation(items: &mut Vec<String>, k: usize, f: &mut dyn FnMut(&[String])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        for_each_permutation(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Canonical lifted effect of a successful transition and the binding of
/// its variables: skill arguments first, then extra effect objects in the
/// order that yields the smallest lifted effect.
pub fn lifted_effect_key(inst: &SkillInstance, before: &AbstractState, after: &AbstractState) -> (EffectKey, Vec<String>) {
    let add: Vec<&GroundAtom> = after.atoms.difference(&before.atoms).collect();
    let del: Vec<&GroundAtom> = before.atoms.difference(&after.atoms).collect();
    let equalities: Vec<usize> =
        inst.args.iter().map(|a| inst.args.iter().position(|b| b == a).unwrap()).collect();
    let mut extras: Vec<String> = add
        .iter()
        .chain(&del)
        .flat_map(|a| a.args.iter())
        .filter(|o| !inst.args.contains(o))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = extras.len();
    let mut best: Option<(Vec<LiftedAtom>, Vec<LiftedAtom>, Vec<String>)> = None;
    let mut consider = |order: &[String]| {
        let mut binding = inst.args.clone();
        binding.extend(order.iter().cloned());
        let cand = (lift_atoms(&add, &binding), lift_atoms(&del, &binding), binding);
        if best.as_ref().is_none_or(|b| (&cand.0, &cand.1) < (&b.0, &b.1)) {
            best = Some(cand);
        }
    };
    if n <= MAX_PERMUTED_EXTRAS {
        for_each_permutation(&mut extras, 0, &mut consider);
    } else {
        consider(&extras);
    }
    let (add, delete, binding) = best.expect("at least one ordering");
    (EffectKey { add, delete, equalities, extras: n }, binding)
}

/// A cluster member: transition id and the binding of the operator variables.
pub type Member = (usize, Vec<String>);

/// Successful transitions grouped by skill and lifted effect.
pub fn cluster(dataset: &Dataset, abs: &[(AbstractState, AbstractState)]) -> BTreeMap<(String, EffectKey), Vec<Member>> {
    cluster_where(dataset, abs, |_| true)
}

fn cluster_where(
    dataset: &Dataset,
    abs: &[(AbstractState, AbstractState)],
    keep: impl Fn(&Transition) -> bool,
) -> BTreeMap<(String, EffectKey), Vec<Member>> {
    let mut out: BTreeMap<(String, EffectKey), Vec<Member>> = BTreeMap::new();
    for t in dataset.transitions.iter().filter(|t| t.success && keep(t)) {
        let (b, a) = &abs[t.id];
        let (key, binding) = lifted_effect_key(&t.instance, b, a);
        out.entry((t.instance.skill.clone(), key)).or_default().push((t.id, binding));
    }
    out
}

/// Lowest types consistent with every object bound to a variable.
fn lowest_types<'a>(world: &World, objects: impl Iterator<Item = &'a String>) -> BTreeSet<String> {
    let mut common: Option<BTreeSet<String>> = None;
    for o in objects {
        let c = world.object(o).map(|o| o.type_closure(&world.hierarchy)).unwrap_or_default();
        common = Some(match common {
            None => c,
            Some(prev) => prev.intersection(&c).cloned().collect(),
        });
    }
    let common = common.unwrap_or_default();
    if common.is_empty() {
        return [String::from(crate::formal::ROOT_TYPE)].into();
    }
    world.hierarchy.minimal(&common)
}

fn param_fits(world: &World, p: &Param, ty: &str) -> bool {
    p.types.iter().any(|t| world.hierarchy.is_subtype(t, ty))
}

/// Every lifted atom over `params` whose variables fit the predicate's types.
pub fn candidate_atoms(world: &World, predicates: &[Predicate], params: &[Param]) -> Vec<LiftedAtom> {
    let mut out = Vec::new();
    for p in predicates {
        let domains: Vec<Vec<usize>> = p
            .params
            .iter()
            .map(|ty| (0..params.len()).filter(|&v| param_fits(world, &params[v], ty)).collect())
            .collect();
        if domains.iter().any(|d| d.is_empty()) {
            continue;
        }
        let mut idx = alloc::vec![0usize; domains.len()];
        'outer: loop {
            out.push(LiftedAtom { predicate: p.name.clone(), args: idx.iter().zip(&domains).map(|(&i, d)| d[i]).collect() });
            let mut pos = domains.len();
            loop {
                if pos == 0 {
                    break 'outer;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < domains[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    out
}

/// Role signature: a before-state atom with exactly one argument that is
/// not yet bound, the hole marked by `None`.
type Role = (String, Vec<Option<usize>>);

fn roles(state: &AbstractState, binding: &[String]) -> BTreeMap<Role, Option<String>> {
    let mut out: BTreeMap<Role, Option<String>> = BTreeMap::new();
    for a in &state.atoms {
        let unbound: Vec<&String> = a.args.iter().filter(|o| !binding.contains(o)).collect();
        if unbound.len() != 1 {
            continue;
        }
        let sig = (a.predicate.clone(), a.args.iter().map(|o| binding.iter().position(|b| b == o)).collect());
        let filler = unbound[0].clone();
        out.entry(sig)
            .and_modify(|f| {
                if f.as_ref() != Some(&filler) {
                    *f = None;
                }
            })
            .or_insert(Some(filler));
    }
    out
}

fn add_role_params(abs: &[(AbstractState, AbstractState)], members: &mut [Member]) {
    let mut common: Option<BTreeSet<Role>> = None;
    for (id, binding) in members.iter() {
        let r: BTreeSet<Role> =
            roles(&abs[*id].0, binding).into_iter().filter(|(_, f)| f.is_some()).map(|(s, _)| s).collect();
        common = Some(match common {
            None => r,
            Some(c) => c.intersection(&r).cloned().collect(),
        });
    }
    let common: Vec<Role> = common.unwrap_or_default().into_iter().take(MAX_ROLE_PARAMS).collect();
    for (id, binding) in members.iter_mut() {
        let r = roles(&abs[*id].0, binding);
        for sig in &common {
            binding.push(r[sig].clone().expect("unique filler"));
        }
    }
}

/// Builds one operator from a cluster.
pub fn learn_cluster(
    world: &World,
    abs: &[(AbstractState, AbstractState)],
    predicates: &[Predicate],
    skill: &str,
    key: &EffectKey,
    members: &[Member],
    name: String,
) -> Operator {
    let nvars = members[0].1.len();
    let params: Vec<Param> =
        (0..nvars).map(|v| Param { types: lowest_types(world, members.iter().map(|(_, b)| &b[v])) }).collect();
    let mut preconditions = BTreeSet::new();
    for atom in candidate_atoms(world, predicates, &params) {
        let truth: BTreeSet<bool> = members.iter().map(|(id, b)| abs[*id].0.holds(&atom.ground(b))).collect();
        if truth.len() == 1 {
            preconditions.insert(Literal { atom, positive: truth.contains(&true) });
        }
    }
    let mut inequalities = BTreeSet::new();
    for i in 0..nvars {
        for j in i + 1..nvars {
            let distinct = members.iter().all(|(_, b)| b[i] != b[j]);
            let compatible = world
                .objects
                .iter()
                .any(|o| o.fits_all(&world.hierarchy, &params[i].types) && o.fits_all(&world.hierarchy, &params[j].types));
            if distinct && compatible {
                inequalities.insert((i, j));
            }
        }
    }
    Operator {
        name,
        skill: skill.into(),
        skill_arity: key.equalities.len(),
        params,
        preconditions,
        inequalities,
        add: key.add.iter().cloned().collect(),
        delete: key.delete.iter().cloned().collect(),
        provenance: members.iter().map(|(id, _)| *id).collect(),
    }
}

/// Operators for every non-empty effect cluster, named `<Skill>_<n>` with
/// `n` counting clusters in key order.
pub fn learn_operators(
    world: &World,
    dataset: &Dataset,
    abs: &[(AbstractState, AbstractState)],
    predicates: &[Predicate],
    opts: &OperatorOptions,
) -> Vec<Operator> {
    learn_operators_where(world, dataset, abs, predicates, opts, |_| true)
}

/// As `learn_operators`, restricted to skills accepted by `keep`.
pub fn learn_operators_where(
    world: &World,
    dataset: &Dataset,
    abs: &[(AbstractState, AbstractState)],
    predicates: &[Predicate],
    opts: &OperatorOptions,
    keep: impl Fn(&str) -> bool,
) -> Vec<Operator> {
    let clusters = cluster_where(dataset, abs, |t| keep(&t.instance.skill));
    let mut out = Vec::new();
    for (seq, ((skill, key), mut members)) in clusters.into_iter().enumerate() {
        if key.is_empty() {
            continue;
        }
        if opts.extra_precondition_params {
            add_role_params(abs, &mut members);
        }
        let name = alloc::format!("{skill}_{seq}");
        out.push(learn_cluster(world, abs, predicates, &skill, &key, &members, name));
    }
    out
}

/// Re-abstracts the dataset and learns a fresh model.
pub fn model_rebuild(
    world: &World,
    dataset: &Dataset,
    predicates: &[Predicate],
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
    opts: &OperatorOptions,
) -> Result<Model> {
    let abs = abstractor.abstract_dataset(classifier, predicates, dataset)?;
    Ok(Model::new(predicates.to_vec(), learn_operators(world, dataset, &abs, predicates, opts)))
}
