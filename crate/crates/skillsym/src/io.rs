//! File formats: transcript JSONL, task JSON, dataset snapshots.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use skillsym_core::env::kitchen::{Kitchen, KitchenState};
use skillsym_core::env::transcript::{Transcript, TranscriptStep};
use skillsym_core::env::Environment;
use skillsym_core::{
    Classifier, Dataset, Goal, GroundAtom, GroundLiteral, PlanningTask, Predicate, StateHandle, TaskTag, World,
};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse { path: path.display().to_string(), line: e.line(), msg: e.to_string() })
}

pub fn to_jsonl<'a, T: Serialize + 'a>(items: impl IntoIterator<Item = &'a T>) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IoError> {
    let f = std::fs::File::open(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|source| IoError::Io { path: path.display().to_string(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_transcript(path: &Path) -> Result<Transcript, IoError> {
    Ok(Transcript { steps: read_jsonl(path)? })
}

pub fn write_transcript(path: &Path, t: &Transcript) -> Result<(), IoError> {
    let mut f = std::fs::File::create(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })?;
    f.write_all(to_jsonl(&t.steps).as_bytes()).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Wraps a classifier and keeps every verdict it returns, by state id.
pub struct RecordingClassifier<C> {
    pub inner: C,
    pub verdicts: BTreeMap<u64, BTreeMap<String, bool>>,
}

impl<C> RecordingClassifier<C> {
    pub fn new(inner: C) -> Self {
        RecordingClassifier { inner, verdicts: BTreeMap::new() }
    }

    /// The dataset with every recorded verdict attached to its states.
    pub fn transcript(&self, dataset: &Dataset) -> Transcript {
        let table = |s: &StateHandle| self.verdicts.get(&s.id).cloned().unwrap_or_default();
        Transcript {
            steps: dataset
                .transitions
                .iter()
                .map(|t| TranscriptStep {
                    transition: t.clone(),
                    before_verdicts: table(&t.before),
                    after_verdicts: table(&t.after),
                })
                .collect(),
        }
    }
}

impl<C: Classifier> Classifier for RecordingClassifier<C> {
    fn evaluate_batch(
        &mut self,
        vocab: &[Predicate],
        atoms: &[GroundAtom],
        state: &StateHandle,
    ) -> skillsym_core::Result<Vec<bool>> {
        let v = self.inner.evaluate_batch(vocab, atoms, state)?;
        let table = self.verdicts.entry(state.id).or_default();
        for (a, b) in atoms.iter().zip(&v) {
            table.insert(a.to_string(), *b);
        }
        Ok(v)
    }
}

/// One entry of a task file. `initial` is the environment's own state
/// encoding (for the kitchen, a `KitchenState`); goal literals are written
/// `name(a, b)` or `!name(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub tag: TaskTag,
    pub initial: serde_json::Value,
    pub goal: Vec<String>,
}

pub fn parse_literal(s: &str) -> Option<GroundLiteral> {
    let s = s.trim();
    let (positive, body) = match s.strip_prefix('!') {
        Some(b) => (false, b),
        None => (true, s),
    };
    Some(GroundLiteral { atom: GroundAtom::parse(body)?, positive })
}

pub fn literal_text(l: &GroundLiteral) -> String {
    if l.positive {
        l.atom.to_string()
    } else {
        format!("!{}", l.atom)
    }
}

impl TaskSpec {
    pub fn from_task(t: &PlanningTask) -> Result<Self, IoError> {
        let Goal::Literals(lits) = &t.goal else {
            return Err(IoError::Invalid(format!("task {} has a state goal", t.name)));
        };
        let initial = serde_json::from_str(&t.initial.payload).unwrap_or(serde_json::Value::String(t.initial.payload.to_string()));
        Ok(TaskSpec { name: t.name.clone(), tag: t.tag, initial, goal: lits.iter().map(literal_text).collect() })
    }

    /// Kitchen task; goal literals double as the ground-truth check.
    pub fn to_kitchen_task(&self, world: &World) -> Result<PlanningTask, IoError> {
        let state: KitchenState = serde_json::from_value(self.initial.clone())
            .map_err(|e| IoError::Invalid(format!("task {}: bad kitchen state: {e}", self.name)))?;
        let mut lits = Vec::new();
        for g in &self.goal {
            let l = parse_literal(g).ok_or_else(|| IoError::Invalid(format!("task {}: bad literal {g:?}", self.name)))?;
            if let Some(o) = l.atom.args.iter().find(|o| world.object(o).is_none()) {
                return Err(IoError::Invalid(format!("task {}: unknown object {o}", self.name)));
            }
            lits.push(l);
        }
        Ok(PlanningTask {
            name: self.name.clone(),
            tag: self.tag,
            initial: state.handle(),
            objects: world.objects.clone(),
            goal: Goal::Literals(lits.clone()),
            relevant_fluents: Some(lits),
        })
    }
}

pub fn read_kitchen_tasks(path: &Path, kitchen: &Kitchen) -> Result<Vec<PlanningTask>, IoError> {
    let specs: Vec<TaskSpec> = read_json(path)?;
    specs.iter().map(|s| s.to_kitchen_task(kitchen.world())).collect()
}
