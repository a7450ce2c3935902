use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use super::{AbstractState, GroundAtom, GroundPreconditions, Predicate, SkillInstance, World};
use crate::{Error, Result};

/// Predicate applied to operator variables (indices into `Operator::params`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LiftedAtom {
    pub predicate: String,
    pub args: Vec<usize>,
}

impl LiftedAtom {
    pub fn new(predicate: &str, args: &[usize]) -> Self {
        LiftedAtom { predicate: predicate.to_string(), args: args.to_vec() }
    }

    pub fn ground(&self, binding: &[String]) -> GroundAtom {
        GroundAtom { predicate: self.predicate.clone(), args: self.args.iter().map(|&v| binding[v].clone()).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: LiftedAtom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: LiftedAtom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: LiftedAtom) -> Self {
        Literal { atom, positive: false }
    }
}

/// Operator variable typed by a nonempty set of types; an object binds
/// to it when it is a subtype of every listed type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Param {
    pub types: BTreeSet<String>,
}

impl Param {
    pub fn of(ty: &str) -> Self {
        Param { types: [ty.to_string()].into() }
    }

    /// Type used for naming the variable.
    pub fn primary(&self) -> &str {
        self.types.iter().next().map_or(super::ROOT_TYPE, String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operator {
    pub name: String,
    pub skill: String,
    /// Number of leading parameters bound to the skill's arguments.
    pub skill_arity: usize,
    pub params: Vec<Param>,
    pub preconditions: BTreeSet<Literal>,
    pub inequalities: BTreeSet<(usize, usize)>,
    pub add: BTreeSet<LiftedAtom>,
    pub delete: BTreeSet<LiftedAtom>,
    #[serde(default)]
    pub provenance: Vec<usize>,
}

impl Operator {
    pub fn var_name(&self, i: usize) -> String {
        alloc::format!("?{}_p{}", self.params[i].primary(), i)
    }

    /// Structural invariants. `learned` additionally requires provenance.
    pub fn validate(&self, learned: bool) -> Result<()> {
        let n = self.params.len();
        let bad = |what: &str| Err(Error::config(alloc::format!("operator {}: {what}", self.name)));
        if self.skill_arity > n {
            return bad("skill arity exceeds parameter count");
        }
        let vars_ok = self.preconditions.iter().map(|l| &l.atom).chain(&self.add).chain(&self.delete).all(|a| a.args.iter().all(|&v| v < n));
        if !vars_ok || self.inequalities.iter().any(|&(a, b)| a >= n || b >= n || a == b) {
            return bad("variable out of range");
        }
        if self.add.intersection(&self.delete).next().is_some() {
            return bad("add and delete effects overlap");
        }
        if self.params.iter().any(|p| p.types.is_empty()) {
            return bad("untyped parameter");
        }
        if learned && self.provenance.is_empty() {
            return bad("empty provenance");
        }
        Ok(())
    }

    pub fn ground(&self, index: usize, binding: &[String]) -> GroundOperator {
        let g = |s: &mut dyn Iterator<Item = &LiftedAtom>| -> Vec<GroundAtom> { s.map(|a| a.ground(binding)).collect() };
        GroundOperator {
            operator: index,
            name: self.name.clone(),
            skill: self.skill.clone(),
            skill_arity: self.skill_arity,
            args: binding.to_vec(),
            pre: GroundPreconditions {
                pos: g(&mut self.preconditions.iter().filter(|l| l.positive).map(|l| &l.atom)),
                neg: g(&mut self.preconditions.iter().filter(|l| !l.positive).map(|l| &l.atom)),
                neq: self.inequalities.iter().map(|&(a, b)| (binding[a].clone(), binding[b].clone())).collect(),
            },
            add: g(&mut self.add.iter()),
            del: g(&mut self.delete.iter()),
        }
    }

    fn respects_inequalities(&self, binding: &[String]) -> bool {
        self.inequalities.iter().all(|&(a, b)| binding[a] != binding[b])
    }

    /// Every type-valid binding that satisfies the inequality constraints.
    pub fn bindings(&self, world: &World) -> Vec<Vec<String>> {
        let cons: Vec<BTreeSet<String>> = self.params.iter().map(|p| p.types.clone()).collect();
        super::valid_bindings(&world.hierarchy, &cons, &world.objects)
            .into_iter()
            .filter(|b| self.respects_inequalities(b))
            .collect()
    }

    /// Bindings whose leading variables are the instance's arguments.
    pub fn bindings_for(&self, world: &World, inst: &SkillInstance) -> Vec<Vec<String>> {
        if inst.skill != self.skill || inst.args.len() != self.skill_arity {
            return Vec::new();
        }
        for (a, p) in inst.args.iter().zip(&self.params) {
            match world.object(a) {
                Some(o) if o.fits_all(&world.hierarchy, &p.types) => {}
                _ => return Vec::new(),
            }
        }
        let cons: Vec<BTreeSet<String>> = self.params[self.skill_arity..].iter().map(|p| p.types.clone()).collect();
        super::valid_bindings(&world.hierarchy, &cons, &world.objects)
            .into_iter()
            .map(|rest| {
                let mut b = inst.args.clone();
                b.extend(rest);
                b
            })
            .filter(|b| self.respects_inequalities(b))
            .collect()
    }

    pub fn predicates(&self) -> BTreeSet<&str> {
        self.preconditions
            .iter()
            .map(|l| &l.atom)
            .chain(&self.add)
            .chain(&self.delete)
            .map(|a| a.predicate.as_str())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundOperator {
    pub operator: usize,
    pub name: String,
    pub skill: String,
    pub skill_arity: usize,
    pub args: Vec<String>,
    pub pre: GroundPreconditions,
    pub add: Vec<GroundAtom>,
    pub del: Vec<GroundAtom>,
}

impl GroundOperator {
    pub fn instance(&self) -> SkillInstance {
        SkillInstance { skill: self.skill.clone(), args: self.args[..self.skill_arity].to_vec() }
    }
}

impl fmt::Display for GroundOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        f.write_str(")")
    }
}

/// Learned model: vocabulary, operators, and per-skill rejection memory.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub predicates: Vec<Predicate>,
    pub operators: Vec<Operator>,
    #[serde(default)]
    pub rejected: BTreeMap<String, BTreeSet<String>>,
}

impl Model {
    pub fn new(predicates: Vec<Predicate>, operators: Vec<Operator>) -> Self {
        let mut m = Model { predicates, operators, rejected: BTreeMap::new() };
        m.predicates.sort();
        m
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn operators_for<'a>(&'a self, skill: &'a str) -> impl Iterator<Item = (usize, &'a Operator)> + 'a {
        self.operators.iter().enumerate().filter(move |(_, o)| o.skill == skill)
    }

    pub fn has_operators(&self, skill: &str) -> bool {
        self.operators.iter().any(|o| o.skill == skill)
    }

    pub fn rejected_names(&self) -> BTreeSet<&str> {
        self.rejected.values().flatten().map(String::as_str).collect()
    }

    /// Model invariants: operators well-formed and closed over the vocabulary.
    pub fn validate(&self, learned: bool) -> Result<()> {
        let names: BTreeSet<&str> = self.predicates.iter().map(|p| p.name.as_str()).collect();
        if names.len() != self.predicates.len() {
            return Err(Error::config("duplicate predicate name"));
        }
        for op in &self.operators {
            op.validate(learned)?;
            if let Some(p) = op.predicates().into_iter().find(|p| !names.contains(p)) {
                return Err(Error::config(alloc::format!("operator {} uses unknown predicate {p}", op.name)));
            }
        }
        Ok(())
    }

    /// Sets each operator's skill arity from the world's skill table.
    pub fn bind_arities(&mut self, world: &World) -> Result<()> {
        for op in &mut self.operators {
            let s = world
                .skill(&op.skill)
                .ok_or_else(|| Error::config(alloc::format!("operator {} names unknown skill {}", op.name, op.skill)))?;
            if s.arity() > op.params.len() {
                return Err(Error::config(alloc::format!("operator {} has fewer params than {}", op.name, s.name)));
            }
            op.skill_arity = s.arity();
        }
        Ok(())
    }
}

/// Predicted initiation: some grounding of some operator of the skill has
/// satisfied preconditions. True when the skill has no operators.
pub fn alpha_holds(model: &Model, world: &World, inst: &SkillInstance, state: &AbstractState) -> bool {
    if !model.has_operators(&inst.skill) {
        return true;
    }
    model.operators_for(&inst.skill).any(|(i, op)| {
        op.bindings_for(world, inst).iter().any(|b| state.satisfies(&op.ground(i, b).pre).unwrap_or(false))
    })
}

/// Predicted termination: some grounding's `(Pre⁺ \ Eff⁻) ∪ Eff⁺` holds in
/// `after` and none of its `Eff⁻` does. True when the skill has no operators.
pub fn zeta_holds(model: &Model, world: &World, inst: &SkillInstance, after: &AbstractState) -> bool {
    if !model.has_operators(&inst.skill) {
        return true;
    }
    model.operators_for(&inst.skill).any(|(i, op)| {
        op.bindings_for(world, inst).iter().any(|b| {
            let g = op.ground(i, b);
            g.pre.pos.iter().filter(|a| !g.del.contains(a)).chain(&g.add).all(|a| after.holds(a))
                && g.del.iter().all(|a| !after.holds(a))
        })
    })
}
