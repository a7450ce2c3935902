use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use super::{Dataset, ObjectRef, StateHandle, TypeHierarchy, World};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub params: Vec<String>,
    #[serde(default)]
    pub semantics: String,
}

impl Predicate {
    pub fn new(name: &str, params: &[&str], semantics: &str) -> Self {
        Predicate {
            name: name.to_string(),
            params: params.iter().map(|t| t.to_string()).collect(),
            semantics: semantics.to_string(),
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// `name(?type0, ?type1)` signature used in prompts and logs.
    pub fn signature(&self) -> String {
        let mut s = self.name.clone();
        s.push('(');
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push('?');
            s.push_str(p);
        }
        s.push(')');
        s
    }

    pub fn check(&self, h: &TypeHierarchy, mu_max: usize) -> Result<()> {
        if self.arity() > mu_max {
            return Err(Error::config(alloc::format!("{} exceeds arity cap {mu_max}", self.signature())));
        }
        for t in &self.params {
            h.check(t)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        GroundAtom { predicate: predicate.to_string(), args: args.iter().map(|a| a.to_string()).collect() }
    }

    /// Parses the `name(a, b)` form produced by `Display`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let open = s.find('(')?;
        let inner = s[open + 1..].strip_suffix(')')?;
        let name = s[..open].trim();
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') {
            return None;
        }
        let args: Vec<String> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(|a| a.trim().to_string()).collect()
        };
        if args.iter().any(|a| a.is_empty() || a.contains(['(', ')'])) {
            return None;
        }
        Some(GroundAtom { predicate: name.to_string(), args })
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundLiteral {
    pub atom: GroundAtom,
    pub positive: bool,
}

impl GroundLiteral {
    pub fn pos(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: true }
    }

    pub fn neg(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: false }
    }
}

/// Closed-world abstract state: atoms absent from `atoms` are false.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractState {
    pub atoms: BTreeSet<GroundAtom>,
    pub universe: Arc<BTreeSet<GroundAtom>>,
}

impl AbstractState {
    pub fn empty() -> Self {
        AbstractState { atoms: BTreeSet::new(), universe: Arc::new(BTreeSet::new()) }
    }

    pub fn holds(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }

    fn known(&self, atom: &GroundAtom) -> Result<()> {
        if self.universe.contains(atom) {
            Ok(())
        } else {
            Err(Error::VocabularyMismatch(atom.to_string()))
        }
    }

    /// Ground precondition test. Every atom must belong to the universe.
    pub fn satisfies(&self, pre: &GroundPreconditions) -> Result<bool> {
        let mut ok = pre.neq.iter().all(|(a, b)| a != b);
        for a in &pre.pos {
            self.known(a)?;
            ok &= self.atoms.contains(a);
        }
        for a in &pre.neg {
            self.known(a)?;
            ok &= !self.atoms.contains(a);
        }
        Ok(ok)
    }

    /// `(atoms \ del) ∪ add`, failing if the preconditions do not hold.
    pub fn apply(&self, op: &super::GroundOperator) -> Result<AbstractState> {
        if !self.satisfies(&op.pre)? {
            return Err(Error::Inapplicable(op.to_string()));
        }
        let mut atoms = self.atoms.clone();
        for a in &op.del {
            self.known(a)?;
            atoms.remove(a);
        }
        for a in &op.add {
            self.known(a)?;
            atoms.insert(a.clone());
        }
        Ok(AbstractState { atoms, universe: self.universe.clone() })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundPreconditions {
    pub pos: Vec<GroundAtom>,
    pub neg: Vec<GroundAtom>,
    pub neq: Vec<(String, String)>,
}

/// Every assignment of objects to the constrained variables, each variable
/// drawing from the objects that fit all of its types. Lexicographic by
/// variable index, then object name.
pub fn valid_bindings(
    h: &TypeHierarchy,
    constraints: &[BTreeSet<String>],
    objects: &[ObjectRef],
) -> Vec<Vec<String>> {
    let mut domains: Vec<Vec<&str>> = Vec::with_capacity(constraints.len());
    for c in constraints {
        let mut d: Vec<&str> =
            objects.iter().filter(|o| o.fits_all(h, c)).map(|o| o.name.as_str()).collect();
        d.sort_unstable();
        d.dedup();
        if d.is_empty() {
            return Vec::new();
        }
        domains.push(d);
    }
    let mut out = Vec::new();
    let mut idx = alloc::vec![0usize; domains.len()];
    loop {
        out.push(idx.iter().zip(&domains).map(|(&i, d)| d[i].to_string()).collect());
        let mut pos = domains.len();
        loop {
            if pos == 0 {
                return out;
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

pub fn predicate_constraints(p: &Predicate) -> Vec<BTreeSet<String>> {
    p.params.iter().map(|t| [t.clone()].into()).collect()
}

/// All type-valid groundings of one predicate.
pub fn ground_predicate(h: &TypeHierarchy, p: &Predicate, objects: &[ObjectRef]) -> Vec<GroundAtom> {
    valid_bindings(h, &predicate_constraints(p), objects)
        .into_iter()
        .map(|args| GroundAtom { predicate: p.name.clone(), args })
        .collect()
}

/// The grounded predicate set for `predicates` over `objects`.
pub fn ground_predicates(
    h: &TypeHierarchy,
    predicates: &[Predicate],
    objects: &[ObjectRef],
) -> Result<BTreeSet<GroundAtom>> {
    let mut out = BTreeSet::new();
    for p in predicates {
        for t in &p.params {
            h.check(t)?;
        }
        out.extend(ground_predicate(h, p, objects));
    }
    Ok(out)
}

/// Truth-value oracle for ground atoms on low-level states.
pub trait Classifier {
    /// One verdict per entry of `atoms`. `vocab` carries the definitions of
    /// every predicate mentioned in `atoms`.
    fn evaluate_batch(&mut self, vocab: &[Predicate], atoms: &[GroundAtom], state: &StateHandle)
        -> Result<Vec<bool>>;
}

impl<C: Classifier + ?Sized> Classifier for &mut C {
    fn evaluate_batch(&mut self, vocab: &[Predicate], atoms: &[GroundAtom], state: &StateHandle) -> Result<Vec<bool>> {
        (**self).evaluate_batch(vocab, atoms, state)
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn evaluate_batch(&mut self, vocab: &[Predicate], atoms: &[GroundAtom], state: &StateHandle) -> Result<Vec<bool>> {
        (**self).evaluate_batch(vocab, atoms, state)
    }
}

/// Uncached abstraction Γ.
pub fn abstract_state(
    world: &World,
    predicates: &[Predicate],
    state: &StateHandle,
    classifier: &mut dyn Classifier,
) -> Result<AbstractState> {
    Abstractor::new(world.clone()).abstract_state(classifier, predicates, state)
}

/// Γ with memoisation keyed by (state id, predicate).
#[derive(Clone, Debug)]
pub struct Abstractor {
    world: World,
    groundings: BTreeMap<Predicate, Arc<Vec<GroundAtom>>>,
    verdicts: BTreeMap<(u64, Predicate), Arc<Vec<GroundAtom>>>,
    universes: BTreeMap<Vec<Predicate>, Arc<BTreeSet<GroundAtom>>>,
}

impl Abstractor {
    pub fn new(world: World) -> Self {
        Abstractor { world, groundings: BTreeMap::new(), verdicts: BTreeMap::new(), universes: BTreeMap::new() }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    fn grounding(&mut self, p: &Predicate) -> Result<Arc<Vec<GroundAtom>>> {
        if let Some(g) = self.groundings.get(p) {
            return Ok(g.clone());
        }
        for t in &p.params {
            self.world.hierarchy.check(t)?;
        }
        let g = Arc::new(ground_predicate(&self.world.hierarchy, p, &self.world.objects));
        self.groundings.insert(p.clone(), g.clone());
        Ok(g)
    }

    pub fn universe(&mut self, predicates: &[Predicate]) -> Result<Arc<BTreeSet<GroundAtom>>> {
        let mut key = predicates.to_vec();
        key.sort();
        if let Some(u) = self.universes.get(&key) {
            return Ok(u.clone());
        }
        let mut u = BTreeSet::new();
        for p in &key {
            u.extend(self.grounding(p)?.iter().cloned());
        }
        let u = Arc::new(u);
        self.universes.insert(key, u.clone());
        Ok(u)
    }

    pub fn abstract_state(
        &mut self,
        classifier: &mut dyn Classifier,
        predicates: &[Predicate],
        state: &StateHandle,
    ) -> Result<AbstractState> {
        let missing: Vec<&Predicate> =
            predicates.iter().filter(|p| !self.verdicts.contains_key(&(state.id, (*p).clone()))).collect();
        if !missing.is_empty() {
            let mut atoms = Vec::new();
            let mut spans = Vec::new();
            for p in &missing {
                let g = self.grounding(p)?;
                spans.push((atoms.len(), g.len()));
                atoms.extend(g.iter().cloned());
            }
            let vocab: Vec<Predicate> = missing.iter().map(|p| (*p).clone()).collect();
            let verdicts = if atoms.is_empty() {
                Vec::new()
            } else {
                classifier.evaluate_batch(&vocab, &atoms, state)?
            };
            if verdicts.len() != atoms.len() {
                return Err(Error::Classifier {
                    atom: atoms.first().map(|a| a.to_string()).unwrap_or_default(),
                    reason: alloc::format!("expected {} verdicts, got {}", atoms.len(), verdicts.len()),
                });
            }
            for (p, (start, len)) in missing.into_iter().zip(spans) {
                let truth: Vec<GroundAtom> =
                    (start..start + len).filter(|&i| verdicts[i]).map(|i| atoms[i].clone()).collect();
                self.verdicts.insert((state.id, p.clone()), Arc::new(truth));
            }
        }
        let mut out = BTreeSet::new();
        for p in predicates {
            out.extend(self.verdicts[&(state.id, p.clone())].iter().cloned());
        }
        Ok(AbstractState { atoms: out, universe: self.universe(predicates)? })
    }

    /// (Γ(before), Γ(after)) for every transition, indexed by position.
    pub fn abstract_dataset(
        &mut self,
        classifier: &mut dyn Classifier,
        predicates: &[Predicate],
        dataset: &Dataset,
    ) -> Result<Vec<(AbstractState, AbstractState)>> {
        dataset
            .transitions
            .iter()
            .map(|t| {
                let b = self.abstract_state(classifier, predicates, &t.before)?;
                let a = self.abstract_state(classifier, predicates, &t.after)?;
                Ok((b, a))
            })
            .collect()
    }
}
