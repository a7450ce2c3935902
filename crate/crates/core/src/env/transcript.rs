//! Replay of recorded transitions, for regression runs without a simulator
//! or a foundation model.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::Environment;
use crate::formal::{Classifier, GroundAtom, Predicate, SkillInstance, StateHandle, Transition, World};
use crate::{Error, Result};

/// One recorded transition plus the classifier verdicts seen on its states,
/// keyed by the atom's `name(a, b)` form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub transition: Transition,
    #[serde(default)]
    pub before_verdicts: BTreeMap<String, bool>,
    #[serde(default)]
    pub after_verdicts: BTreeMap<String, bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub steps: Vec<TranscriptStep>,
}

impl Transcript {
    /// Verdict table merged over all steps, by state id.
    pub fn verdicts(&self) -> BTreeMap<u64, BTreeMap<String, bool>> {
        let mut out: BTreeMap<u64, BTreeMap<String, bool>> = BTreeMap::new();
        for s in &self.steps {
            let t = &s.transition;
            out.entry(t.before.id).or_default().extend(s.before_verdicts.iter().map(|(k, v)| (k.clone(), *v)));
            out.entry(t.after.id).or_default().extend(s.after_verdicts.iter().map(|(k, v)| (k.clone(), *v)));
        }
        out
    }

    /// Recorded instance sequence of each episode, in episode order.
    pub fn episodes(&self) -> Vec<Vec<SkillInstance>> {
        let mut out: BTreeMap<usize, Vec<SkillInstance>> = BTreeMap::new();
        for s in &self.steps {
            out.entry(s.transition.episode).or_default().push(s.transition.instance.clone());
        }
        out.into_values().collect()
    }

    pub fn classifier(&self) -> TranscriptClassifier {
        TranscriptClassifier { verdicts: self.verdicts() }
    }
}

/// Environment that answers from a transcript. `reset` ignores its seed and
/// moves to the start state of the next recorded episode.
#[derive(Clone, Debug)]
pub struct TranscriptEnv {
    world: World,
    starts: Vec<StateHandle>,
    index: BTreeMap<(u64, SkillInstance), Transition>,
    cursor: usize,
    current: StateHandle,
}

impl TranscriptEnv {
    pub fn new(world: World, transcript: &Transcript) -> Result<Self> {
        let mut starts: BTreeMap<usize, StateHandle> = BTreeMap::new();
        let mut index = BTreeMap::new();
        for s in &transcript.steps {
            let t = &s.transition;
            starts.entry(t.episode).or_insert_with(|| t.before.clone());
            index.insert((t.before.id, t.instance.clone()), t.clone());
        }
        let starts: Vec<StateHandle> = starts.into_values().collect();
        let current = starts.first().cloned().ok_or_else(|| Error::ReplayMiss("empty transcript".into()))?;
        Ok(TranscriptEnv { world, starts, index, cursor: 0, current })
    }
}

impl Environment for TranscriptEnv {
    fn world(&self) -> &World {
        &self.world
    }

    fn reset(&mut self, _seed: u64) -> Result<StateHandle> {
        let s = self
            .starts
            .get(self.cursor)
            .cloned()
            .ok_or_else(|| Error::ReplayMiss(alloc::format!("no recorded episode {}", self.cursor)))?;
        self.cursor += 1;
        self.current = s.clone();
        Ok(s)
    }

    fn observe(&self) -> StateHandle {
        self.current.clone()
    }

    fn execute(&mut self, instance: &SkillInstance) -> Result<Transition> {
        let t = self
            .index
            .get(&(self.current.id, instance.clone()))
            .cloned()
            .ok_or_else(|| Error::ReplayMiss(alloc::format!("{instance} from state {:016x}", self.current.id)))?;
        self.current = t.after.clone();
        Ok(t)
    }

    fn restore(&mut self, state: &StateHandle) -> Result<()> {
        self.current = state.clone();
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TranscriptClassifier {
    verdicts: BTreeMap<u64, BTreeMap<String, bool>>,
}

impl Classifier for TranscriptClassifier {
    fn evaluate_batch(&mut self, _vocab: &[Predicate], atoms: &[GroundAtom], state: &StateHandle) -> Result<Vec<bool>> {
        let table = self.verdicts.get(&state.id);
        atoms
            .iter()
            .map(|a| {
                let key = a.to_string();
                table.and_then(|t| t.get(&key)).copied().ok_or_else(|| Error::Classifier {
                    atom: key,
                    reason: alloc::format!("no recorded verdict on state {:016x}", state.id),
                })
            })
            .collect()
    }
}
