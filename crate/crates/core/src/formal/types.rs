use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Name of the implicit top type.
pub const ROOT_TYPE: &str = "object";

/// Subtype partial order over type names.
///
/// Types can only be added under parents that already exist, so the edge set
/// is acyclic and every type reaches the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, BTreeSet<String>>,
}

impl Default for TypeHierarchy {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeHierarchy {
    pub fn new() -> Self {
        let mut parents = BTreeMap::new();
        parents.insert(ROOT_TYPE.to_string(), BTreeSet::new());
        TypeHierarchy { parents }
    }

    /// Adds `name` below `parents` (the root when empty).
    pub fn add(&mut self, name: &str, parents: &[&str]) -> Result<()> {
        if self.parents.contains_key(name) {
            return Err(Error::config(alloc::format!("type `{name}` declared twice")));
        }
        let mut set = BTreeSet::new();
        for p in parents {
            if !self.contains(p) {
                return Err(Error::UnknownType(p.to_string()));
            }
            set.insert(p.to_string());
        }
        if set.is_empty() {
            set.insert(ROOT_TYPE.to_string());
        }
        self.parents.insert(name.to_string(), set);
        Ok(())
    }

    pub fn with(mut self, name: &str, parents: &[&str]) -> Result<Self> {
        self.add(name, parents)?;
        Ok(self)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.parents.contains_key(name)
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.parents.keys().map(String::as_str)
    }

    pub fn parents(&self, name: &str) -> impl Iterator<Item = &str> {
        self.parents.get(name).into_iter().flatten().map(String::as_str)
    }

    pub fn check(&self, name: &str) -> Result<()> {
        if self.contains(name) {
            Ok(())
        } else {
            Err(Error::UnknownType(name.to_string()))
        }
    }

    /// `name` together with all of its ancestors.
    pub fn ancestors(&self, name: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = alloc::vec![name];
        while let Some(t) = stack.pop() {
            if out.insert(t.to_string()) {
                stack.extend(self.parents(t));
            }
        }
        out
    }

    /// Reflexive, transitive subtype test.
    pub fn is_subtype(&self, child: &str, parent: &str) -> bool {
        if child == parent || parent == ROOT_TYPE {
            return self.contains(child);
        }
        let mut stack = alloc::vec![child];
        let mut seen = BTreeSet::new();
        while let Some(t) = stack.pop() {
            if t == parent {
                return true;
            }
            if seen.insert(t) {
                stack.extend(self.parents(t));
            }
        }
        false
    }

    /// Upward closure of a set of types.
    pub fn closure<'a>(&self, types: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in types {
            out.extend(self.ancestors(t));
        }
        out
    }

    /// Elements of `types` with no proper subtype inside `types`.
    pub fn minimal(&self, types: &BTreeSet<String>) -> BTreeSet<String> {
        types
            .iter()
            .filter(|t| !types.iter().any(|u| u != *t && self.is_subtype(u, t)))
            .cloned()
            .collect()
    }

    /// Depth of a type: length of the longest path to the root.
    pub fn depth(&self, name: &str) -> usize {
        self.parents(name).map(|p| 1 + self.depth(p)).max().unwrap_or(0)
    }

    /// Types sorted so that parents precede children, ties by name.
    pub fn topological(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.types().collect();
        v.sort_by_key(|t| (self.depth(t), *t));
        v
    }
}
