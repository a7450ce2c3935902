use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{AbstractState, GroundAtom, GroundLiteral, ObjectRef, StateHandle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskTag {
    Easy,
    Hard,
    Impossible,
}

impl TaskTag {
    pub const ALL: [TaskTag; 3] = [TaskTag::Easy, TaskTag::Hard, TaskTag::Impossible];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskTag::Easy => "easy",
            TaskTag::Hard => "hard",
            TaskTag::Impossible => "impossible",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    /// Explicit ground literals over the model vocabulary.
    Literals(Vec<GroundLiteral>),
    /// Goal observation; its positive abstract atoms must all hold.
    State(StateHandle),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanningTask {
    pub name: String,
    pub tag: TaskTag,
    pub initial: StateHandle,
    pub objects: Vec<ObjectRef>,
    pub goal: Goal,
    /// Environment fluents checked for ground-truth success.
    #[serde(default)]
    pub relevant_fluents: Option<Vec<GroundLiteral>>,
}

/// Goal condition in abstract space.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractGoal {
    pub pos: Vec<GroundAtom>,
    pub neg: Vec<GroundAtom>,
    /// A positive goal atom lies outside the grounded vocabulary.
    pub unreachable: bool,
}

impl AbstractGoal {
    /// Goal from literals, interpreted against `universe`. Positive atoms
    /// outside the universe can never hold; negative ones always do.
    pub fn from_literals(lits: &[GroundLiteral], state: &AbstractState) -> Self {
        let mut g = AbstractGoal::default();
        for l in lits {
            let known = state.universe.contains(&l.atom);
            match (l.positive, known) {
                (true, true) => g.pos.push(l.atom.clone()),
                (true, false) => g.unreachable = true,
                (false, true) => g.neg.push(l.atom.clone()),
                (false, false) => {}
            }
        }
        g.pos.sort();
        g.pos.dedup();
        g.neg.sort();
        g.neg.dedup();
        g
    }

    pub fn from_state(goal: &AbstractState) -> Self {
        AbstractGoal { pos: goal.atoms.iter().cloned().collect(), neg: Vec::new(), unreachable: false }
    }

    pub fn holds(&self, state: &AbstractState) -> bool {
        !self.unreachable && self.pos.iter().all(|a| state.holds(a)) && self.neg.iter().all(|a| !state.holds(a))
    }
}
