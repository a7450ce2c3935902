use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use super::TypeHierarchy;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectRef {
    pub name: String,
    pub types: BTreeSet<String>,
}

impl ObjectRef {
    pub fn new(name: &str, types: &[&str]) -> Self {
        ObjectRef { name: name.to_string(), types: types.iter().map(|t| t.to_string()).collect() }
    }

    /// True when some declared type of the object is a subtype of `ty`.
    pub fn fits(&self, h: &TypeHierarchy, ty: &str) -> bool {
        self.types.iter().any(|t| h.is_subtype(t, ty))
    }

    pub fn fits_all<'a>(&self, h: &TypeHierarchy, tys: impl IntoIterator<Item = &'a String>) -> bool {
        tys.into_iter().all(|t| self.fits(h, t))
    }

    pub fn type_closure(&self, h: &TypeHierarchy) -> BTreeSet<String> {
        h.closure(&self.types)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Skill {
    pub name: String,
    pub params: Vec<String>,
}

impl Skill {
    pub fn new(name: &str, params: &[&str]) -> Self {
        Skill { name: name.to_string(), params: params.iter().map(|t| t.to_string()).collect() }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SkillInstance {
    pub skill: String,
    pub args: Vec<String>,
}

impl SkillInstance {
    pub fn new(skill: &str, args: &[&str]) -> Self {
        SkillInstance { skill: skill.to_string(), args: args.iter().map(|a| a.to_string()).collect() }
    }
}

impl fmt::Display for SkillInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.skill)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        f.write_str(")")
    }
}

/// Opaque reference to a low-level state. Equality is by `id`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateHandle {
    pub id: u64,
    pub payload: Arc<str>,
}

impl StateHandle {
    /// Handle whose id is the FNV-1a hash of the payload.
    pub fn from_payload(payload: impl Into<Arc<str>>) -> Self {
        let payload = payload.into();
        StateHandle { id: fnv1a(payload.as_bytes()), payload }
    }
}

impl PartialEq for StateHandle {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for StateHandle {}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: usize,
    pub episode: usize,
    pub before: StateHandle,
    pub instance: SkillInstance,
    pub after: StateHandle,
    pub success: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub transitions: Vec<Transition>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `t`, renumbering it and tagging it with `episode`.
    pub fn record(&mut self, mut t: Transition, episode: usize) -> &Transition {
        t.id = self.transitions.len();
        t.episode = episode;
        self.transitions.push(t);
        self.transitions.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn of_skill<'a>(&'a self, skill: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.instance.skill == skill)
    }

    pub fn next_episode(&self) -> usize {
        self.transitions.last().map_or(0, |t| t.episode + 1)
    }

    /// Distinct states in first-seen order.
    pub fn states(&self) -> Vec<&StateHandle> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for t in &self.transitions {
            for s in [&t.before, &t.after] {
                if seen.insert(s.id) {
                    out.push(s);
                }
            }
        }
        out
    }
}

/// The fixed vocabulary of a setting: type hierarchy, objects and skills.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    pub hierarchy: TypeHierarchy,
    pub objects: Vec<ObjectRef>,
    pub skills: Vec<Skill>,
}

impl World {
    /// Validates names and types; objects and skills are sorted by name.
    pub fn new(hierarchy: TypeHierarchy, mut objects: Vec<ObjectRef>, mut skills: Vec<Skill>) -> Result<Self> {
        objects.sort();
        skills.sort();
        for w in objects.windows(2) {
            if w[0].name == w[1].name {
                return Err(Error::config(alloc::format!("object `{}` declared twice", w[0].name)));
            }
        }
        for o in &objects {
            if o.types.is_empty() {
                return Err(Error::config(alloc::format!("object `{}` has no type", o.name)));
            }
            for t in &o.types {
                hierarchy.check(t)?;
            }
        }
        for s in &skills {
            for t in &s.params {
                hierarchy.check(t)?;
            }
        }
        Ok(World { hierarchy, objects, skills })
    }

    pub fn object(&self, name: &str) -> Option<&ObjectRef> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn skill(&self, name: &str) -> Option<&Skill> {
        self.skills.iter().find(|s| s.name == name)
    }

    /// Checks the instance's arity and argument types.
    pub fn validate_instance(&self, inst: &SkillInstance) -> Result<()> {
        let skill = self
            .skill(&inst.skill)
            .ok_or_else(|| Error::config(alloc::format!("unknown skill `{}`", inst.skill)))?;
        if skill.arity() != inst.args.len() {
            return Err(Error::config(alloc::format!("{inst}: expected {} arguments", skill.arity())));
        }
        for (a, ty) in inst.args.iter().zip(&skill.params) {
            let o = self.object(a).ok_or_else(|| Error::config(alloc::format!("unknown object `{a}`")))?;
            if !o.fits(&self.hierarchy, ty) {
                return Err(Error::config(alloc::format!("{inst}: `{a}` is not a {ty}")));
            }
        }
        Ok(())
    }

    /// Every type-valid instance of `skill`, in binding order.
    pub fn instances(&self, skill: &Skill) -> Vec<SkillInstance> {
        let cons: Vec<BTreeSet<String>> = skill.params.iter().map(|t| [t.clone()].into()).collect();
        super::valid_bindings(&self.hierarchy, &cons, &self.objects)
            .into_iter()
            .map(|args| SkillInstance { skill: skill.name.clone(), args })
            .collect()
    }

    pub fn all_instances(&self) -> Vec<SkillInstance> {
        self.skills.iter().flat_map(|s| self.instances(s)).collect()
    }
}
