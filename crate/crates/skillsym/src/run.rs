//! Learning, evaluation and experiment runs with their on-disk artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skillsym_core::env::kitchen::Kitchen;
use skillsym_core::env::tasks::kitchen_suite;
use skillsym_core::env::transcript::{Transcript, TranscriptEnv};
use skillsym_core::env::{derive_seed, Environment};
use skillsym_core::explore::{collect, ExplorerKind, GenerationContext, RandomGenerator, ReplayGenerator, ScriptedGenerator, SequenceSource};
use skillsym_core::invent::InventEvent;
use skillsym_core::learn::{IterationStats, LearnEvent, Learner};
use skillsym_core::oracle::{kitchen_distractors, KitchenFluents, PoolClassifier, Proposer, ScriptedProposer};
use skillsym_core::plan::{abstract_goal, evaluate, EvalReport};
use skillsym_core::theory::{check_consistency, check_soundness, empirical_d_compl, ConsistencyReport, SoundnessReport};
use skillsym_core::{Abstractor, Classifier, Dataset, Error as CoreError, Model, PlanningTask, TaskTag, World};

use crate::config::{Config, EnvKind, OracleKind};
use crate::fm::{ChatClient, ChatConfig, FmClassifier, FmGenerator, FmProposer, Prompting};
use crate::io::{self, IoError, RecordingClassifier};
use crate::pddl::{self, PddlError};
use crate::template::Templates;

/// A failed run, classified by exit code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Oracle(String),
    #[error("{0}")]
    Environment(String),
    #[error("{0}")]
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Oracle(_) => 3,
            Failure::Environment(_) => 4,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Config(_) | CoreError::UnknownType(_) => Failure::Config(msg),
            CoreError::Oracle(_) | CoreError::Classifier { .. } => Failure::Oracle(msg),
            CoreError::Environment(_) | CoreError::ReplayMiss(_) => Failure::Environment(msg),
            CoreError::VocabularyMismatch(_) | CoreError::Inapplicable(_) => Failure::Internal(msg),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<PddlError> for Failure {
    fn from(e: PddlError) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Environment, sequence source, proposer and classifier for a config.
pub struct Components {
    pub world: World,
    pub env: Box<dyn Environment>,
    pub generator: Box<dyn SequenceSource>,
    pub proposer: Box<dyn Proposer>,
    pub classifier: RecordingClassifier<Box<dyn Classifier>>,
}

fn prompting(cfg: &Config) -> Result<Prompting, Failure> {
    let chat = ChatConfig::from_env().map_err(|e| Failure::Config(e.to_string()))?;
    let templates = match &cfg.prompts {
        Some(dir) => Templates::with_overrides(dir).map_err(|e| Failure::Config(e.to_string()))?,
        None => Templates::default(),
    };
    Ok(Prompting::new(ChatClient::new(&chat), templates))
}

pub fn components(cfg: &Config) -> Result<Components, Failure> {
    let (world, env, transcript): (World, Box<dyn Environment>, Option<Transcript>) = match cfg.env {
        EnvKind::Kitchen => {
            let k = Kitchen::new();
            (k.world().clone(), Box::new(k), None)
        }
        EnvKind::Transcript => {
            let path = cfg.transcript.as_ref().ok_or_else(|| Failure::Config("missing transcript path".into()))?;
            let t = io::read_transcript(path)?;
            let world: World = match &cfg.world {
                Some(p) => io::read_json(p)?,
                None => Kitchen::new().world().clone(),
            };
            (world.clone(), Box::new(TranscriptEnv::new(world, &t)?), Some(t))
        }
    };
    let fluents = KitchenFluents { world: world.clone() };
    let pool = || PoolClassifier::new(fluents.clone(), kitchen_distractors());
    let generator: Box<dyn SequenceSource> = match (&transcript, cfg.explorer, cfg.oracle) {
        (Some(t), _, _) => Box::new(ReplayGenerator::new(t.episodes())),
        (None, ExplorerKind::Random, _) => Box::new(RandomGenerator::new(cfg.seed)),
        (None, _, OracleKind::Fm) => Box::new(FmGenerator { prompting: prompting(cfg)? }),
        (None, _, OracleKind::Scripted) => Box::new(ScriptedGenerator::new(Kitchen::new(), cfg.seed).with_critic(Box::new(pool()))),
    };
    let proposer: Box<dyn Proposer> = match cfg.oracle {
        OracleKind::Scripted => Box::new(ScriptedProposer::new(fluents.clone(), kitchen_distractors(), cfg.noise, cfg.seed)),
        OracleKind::Fm => Box::new(FmProposer { prompting: prompting(cfg)? }),
    };
    let classifier: Box<dyn Classifier> = match (&transcript, cfg.oracle) {
        (Some(t), OracleKind::Scripted) => Box::new(t.classifier()),
        (None, OracleKind::Scripted) => Box::new(pool()),
        (_, OracleKind::Fm) => Box::new(FmClassifier::new(prompting(cfg)?, world.clone())),
    };
    Ok(Components { world, env, generator, proposer, classifier: RecordingClassifier::new(classifier) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    /// Soundness after each completed iteration.
    pub soundness: Vec<SoundnessReport>,
    pub consistency: ConsistencyReport,
    pub d_compl_train: f64,
    /// Against transitions collected with a disjoint seed (kitchen only).
    pub d_compl_heldout: Option<f64>,
    pub heldout_transitions: usize,
}

pub struct LearnOutcome {
    pub config: Config,
    pub world: World,
    pub model: Model,
    pub dataset: Dataset,
    pub events: Vec<LearnEvent>,
    pub stats: Vec<IterationStats>,
    pub theory: TheoryReport,
    pub eval: Option<Vec<EvalReport>>,
    pub tasks: Vec<PlanningTask>,
    pub transcript: Transcript,
    /// The error that ended the run early, if any.
    pub fault: Option<Failure>,
    components: Components,
}

pub const HELDOUT_EPISODES: usize = 5;
const HELDOUT_STREAM: u64 = 0x4845_4c44;

/// Transitions from fresh kitchen episodes, seeded apart from training.
pub fn heldout_dataset(cfg: &Config, world: &World, model: &Model) -> Result<Dataset, Failure> {
    let seed = derive_seed(cfg.seed, HELDOUT_STREAM);
    let mut env = Kitchen::new();
    let mut gen = ScriptedGenerator::new(Kitchen::new(), seed);
    let mut data = Dataset::new();
    for e in 0..HELDOUT_EPISODES {
        let initial = env.reset(derive_seed(seed, e as u64))?;
        let ctx = GenerationContext { world, model, dataset: &data, initial: &initial, steps: cfg.steps };
        let seq = gen.generate(&ctx, 1)?.remove(0);
        let (_, err) = collect(&mut env, &seq, &mut data, e);
        if let Some(err) = err {
            return Err(err.into());
        }
    }
    Ok(data)
}

fn load_tasks(cfg: &Config) -> Result<Vec<PlanningTask>, Failure> {
    let k = Kitchen::new();
    match &cfg.tasks {
        Some(p) => Ok(io::read_kitchen_tasks(p, &k)?),
        None => Ok(kitchen_suite(&k)),
    }
}

/// Evaluates `model` `cfg.repeats` times on the configured tasks.
pub fn evaluate_model(
    cfg: &Config,
    model: &Model,
    classifier: &mut dyn Classifier,
    tasks: &[PlanningTask],
) -> Result<Vec<EvalReport>, Failure> {
    if cfg.env != EnvKind::Kitchen {
        return Err(Failure::Config("task evaluation needs the kitchen simulator".into()));
    }
    let mut env = Kitchen::new();
    let world = env.world().clone();
    let mut out = Vec::new();
    for _ in 0..cfg.repeats {
        let mut abs = Abstractor::new(world.clone());
        out.push(evaluate(&mut env, model, &mut abs, classifier, tasks, cfg.budget, cfg.node_cap)?);
    }
    Ok(out)
}

/// Runs the learning loop, the theory checks and (on the kitchen) the
/// task evaluation. Faults after the first iteration are kept in
/// `fault`; the partial results are still returned.
pub fn learn(cfg: &Config) -> Result<LearnOutcome, Failure> {
    cfg.validate().map_err(Failure::Config)?;
    let mut c = components(cfg)?;
    let mut soundness = Vec::new();
    let mut fault = None;
    let (model, dataset, events, stats, consistency, d_train) = {
        let Components { env, generator, proposer, classifier, .. } = &mut c;
        let mut l = Learner::new(cfg.learn(), env.as_mut(), generator.as_mut(), proposer.as_mut(), classifier)?;
        while !l.done() {
            let r = l.step().map(|_| ());
            let abs = l.abstractions()?;
            if l.stats.len() > soundness.len() {
                soundness.push(check_soundness(&l.model, &l.world, &l.dataset, &abs));
            }
            if let Err(e) = r {
                fault = Some(Failure::from(e));
                break;
            }
        }
        let abs = l.abstractions()?;
        let consistency = check_consistency(&l.model, &l.world, &l.dataset, &abs);
        let d = empirical_d_compl(&l.model, &l.world, &l.dataset, &abs);
        (l.model.clone(), l.dataset.clone(), l.events.clone(), l.stats.clone(), consistency, d)
    };
    let world = c.world.clone();
    let (mut d_held, mut held_n) = (None, 0);
    let mut eval = None;
    let mut tasks = Vec::new();
    if cfg.env == EnvKind::Kitchen && fault.is_none() {
        let held = heldout_dataset(cfg, &world, &model)?;
        let abs = Abstractor::new(world.clone()).abstract_dataset(&mut c.classifier, &model.predicates, &held)?;
        d_held = Some(empirical_d_compl(&model, &world, &held, &abs));
        held_n = held.len();
        tasks = load_tasks(cfg)?;
        eval = Some(evaluate_model(cfg, &model, &mut c.classifier, &tasks)?);
    }
    let transcript = c.classifier.transcript(&dataset);
    Ok(LearnOutcome {
        config: cfg.clone(),
        world,
        model,
        dataset,
        events,
        stats,
        theory: TheoryReport { soundness, consistency, d_compl_train: d_train, d_compl_heldout: d_held, heldout_transitions: held_n },
        eval,
        tasks,
        transcript,
        fault,
        components: c,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub iteration: usize,
    pub skill: String,
    pub kind: String,
    pub predicate: String,
    pub semantics: String,
    pub score: f64,
    pub resolved: bool,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropEntry {
    pub iteration: usize,
    pub predicate: String,
    pub reason: String,
}

/// Every scored candidate, every drop, and the final vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateLedger {
    pub scored: Vec<LedgerEntry>,
    pub dropped: Vec<DropEntry>,
    pub rejected: BTreeMap<String, Vec<String>>,
    pub final_predicates: Vec<String>,
}

pub fn ledger(model: &Model, events: &[LearnEvent]) -> PredicateLedger {
    let mut scored = Vec::new();
    let mut dropped = Vec::new();
    for e in events {
        if let LearnEvent::Invention { iteration, detail } = e {
            match detail {
                InventEvent::Scored { skill, kind, predicate, score, resolved, accepted } => scored.push(LedgerEntry {
                    iteration: *iteration,
                    skill: skill.clone(),
                    kind: kind.as_str().into(),
                    predicate: predicate.signature(),
                    semantics: predicate.semantics.clone(),
                    score: *score,
                    resolved: *resolved,
                    accepted: *accepted,
                }),
                InventEvent::Dropped { predicate, reason } => {
                    dropped.push(DropEntry { iteration: *iteration, predicate: predicate.clone(), reason: reason.clone() })
                }
                _ => {}
            }
        }
    }
    PredicateLedger {
        scored,
        dropped,
        rejected: model.rejected.iter().map(|(k, v)| (k.clone(), v.iter().cloned().collect())).collect(),
        final_predicates: model.predicates.iter().map(|p| p.signature()).collect(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    pub fn of(xs: &[f64]) -> Spread {
        if xs.is_empty() {
            return Spread::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Spread { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TagSpread {
    /// Tasks of the tag in each run.
    pub tasks: usize,
    pub solved_pct: Spread,
    pub mean_pb: Spread,
}

/// Per-tag mean and population standard deviation over several reports.
pub fn aggregate(reports: &[EvalReport]) -> BTreeMap<TaskTag, TagSpread> {
    let mut out = BTreeMap::new();
    for tag in TaskTag::ALL {
        let present: Vec<_> = reports.iter().filter_map(|r| r.summary.get(&tag)).collect();
        if present.is_empty() {
            continue;
        }
        let solved: Vec<f64> = present.iter().map(|s| s.solved_pct).collect();
        let pb: Vec<f64> = present.iter().map(|s| s.mean_pb).collect();
        out.insert(tag, TagSpread { tasks: present[0].tasks, solved_pct: Spread::of(&solved), mean_pb: Spread::of(&pb) });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub runs: Vec<EvalReport>,
    pub aggregate: BTreeMap<TaskTag, TagSpread>,
}

pub fn report_file(runs: Vec<EvalReport>) -> ReportFile {
    ReportFile { aggregate: aggregate(&runs), runs }
}

pub fn report_text(r: &ReportFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<11} {:>6} {:>16} {:>14}", "category", "tasks", "solved %", "mean PB");
    for (tag, a) in &r.aggregate {
        let _ = writeln!(
            s,
            "{:<11} {:>6} {:>8.1} ± {:<5.1} {:>6.2} ± {:<5.2}",
            tag.as_str(),
            a.tasks,
            a.solved_pct.mean,
            a.solved_pct.std,
            a.mean_pb.mean,
            a.mean_pb.std
        );
    }
    if let Some(first) = r.runs.first() {
        let _ = writeln!(s, "\ntask            tag         solved  tried  found  note");
        for t in &first.tasks {
            let _ = writeln!(
                s,
                "{:<15} {:<11} {:<7} {:>5} {:>6}  {}",
                t.name,
                t.tag.as_str(),
                if t.solved { "yes" } else { "no" },
                t.plans_tried,
                t.plans_found,
                t.note
            );
        }
    }
    s
}

pub fn theory_text(t: &TheoryReport) -> String {
    let mut s = String::new();
    for (i, r) in t.soundness.iter().enumerate() {
        let _ = writeln!(s, "soundness iter {i}: {} ({} operators, {} violations)", pass(r.pass), r.checked, r.violations.len());
        for v in &r.violations {
            let _ = writeln!(s, "  {}: {}", v.operator, v.reason);
        }
    }
    let c = &t.consistency;
    let _ = writeln!(s, "consistency: {} ({} mismatches, {} exempt)", pass(c.pass), c.mismatches.len(), c.exempt.len());
    for m in &c.mismatches {
        let _ = writeln!(s, "  transition {} {} {:?}", m.transition, m.skill, m.side);
    }
    let _ = writeln!(s, "d_compl (training): {:.4}", t.d_compl_train);
    if let Some(d) = t.d_compl_heldout {
        let _ = writeln!(s, "d_compl (held-out, {} transitions): {d:.4}", t.heldout_transitions);
    }
    s
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

/// Problem files for every task, against the model's vocabulary.
pub fn problems(
    world: &World,
    model: &Model,
    tasks: &[PlanningTask],
    classifier: &mut dyn Classifier,
) -> Result<Vec<(String, String)>, Failure> {
    let mut abs = Abstractor::new(world.clone());
    let mut out = Vec::new();
    for t in tasks {
        let init = abs.abstract_state(classifier, &model.predicates, &t.initial)?;
        let goal = abstract_goal(t, &init, &model.predicates, &mut abs, classifier)?;
        let text = pddl::emit_problem(&t.name, world, model, &init, &goal)?;
        out.push((format!("problem_{}.pddl", pddl::sanitize(&t.name)), text));
    }
    Ok(out)
}

fn mkdir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))
}

/// Writes the run directory.
pub fn write_learn_artifacts(dir: &Path, out: &mut LearnOutcome) -> Result<(), Failure> {
    mkdir(dir)?;
    io::write_json(&dir.join("config.json"), &out.config)?;
    let mut start = 0;
    for s in &out.stats {
        let slice = &out.dataset.transitions[start..s.transitions];
        io::write_text(&dir.join(format!("dataset_{:02}.jsonl", s.iteration)), &io::to_jsonl(slice))?;
        start = s.transitions;
    }
    io::write_text(&dir.join("events.jsonl"), &io::to_jsonl(&out.events))?;
    io::write_json(&dir.join("learning_curve.json"), &out.stats)?;
    io::write_json(&dir.join("predicates.json"), &ledger(&out.model, &out.events))?;
    io::write_json(&dir.join("model.json"), &out.model)?;
    io::write_json(&dir.join("world.json"), &out.world)?;
    io::write_text(&dir.join("domain.pddl"), &pddl::emit_domain(&out.model, &out.world.hierarchy)?)?;
    io::write_json(&dir.join("theory.json"), &out.theory)?;
    io::write_text(&dir.join("theory.txt"), &theory_text(&out.theory))?;
    if let Some(runs) = &out.eval {
        let r = report_file(runs.clone());
        io::write_json(&dir.join("report.json"), &r)?;
        io::write_text(&dir.join("report.txt"), &report_text(&r))?;
    }
    if out.config.record_transcript {
        io::write_transcript(&dir.join("transcript.jsonl"), &out.transcript)?;
    }
    if out.config.export_pddl && !out.tasks.is_empty() {
        let files = problems(&out.world, &out.model, &out.tasks, &mut out.components.classifier)?;
        for (name, text) in files {
            io::write_text(&dir.join(name), &text)?;
        }
    }
    Ok(())
}

/// Loads a model and evaluates it; the classifier follows `cfg.oracle`.
pub fn eval_model_file(cfg: &Config, model_path: &Path) -> Result<ReportFile, Failure> {
    cfg.validate().map_err(Failure::Config)?;
    let model: Model = io::read_json(model_path)?;
    let mut c = components(cfg)?;
    let tasks = load_tasks(cfg)?;
    let runs = evaluate_model(cfg, &model, &mut c.classifier, &tasks)?;
    Ok(report_file(runs))
}

/// Domain plus problem files for a saved model.
pub fn export_model_file(cfg: &Config, model_path: &Path, dir: &Path) -> Result<(), Failure> {
    let model: Model = io::read_json(model_path)?;
    let mut c = components(cfg)?;
    mkdir(dir)?;
    io::write_text(&dir.join("domain.pddl"), &pddl::emit_domain(&model, &c.world.hierarchy)?)?;
    if cfg.env == EnvKind::Kitchen {
        let tasks = load_tasks(cfg)?;
        for (name, text) in problems(&c.world, &model, &tasks, &mut c.classifier)? {
            io::write_text(&dir.join(name), &text)?;
        }
    }
    Ok(())
}

/// Summary of an experiment over consecutive seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub seeds: Vec<u64>,
    pub soundness_pass: Vec<bool>,
    pub consistency_pass: Vec<bool>,
    pub aggregate: BTreeMap<TaskTag, TagSpread>,
    pub faults: Vec<Option<String>>,
}

/// `cfg.repeats` learning runs on seeds `seed, seed+1, ...`, one thread
/// each; each run writes `seed_<n>/` and the summary goes to `dir`.
pub fn experiment(cfg: &Config, dir: &Path) -> Result<ExperimentSummary, Failure> {
    cfg.validate().map_err(Failure::Config)?;
    let seeds: Vec<u64> = (0..cfg.repeats as u64).map(|i| cfg.seed + i).collect();
    type Row = (bool, bool, Option<String>, Vec<EvalReport>);
    let results: Vec<Result<Row, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let c = Config { seed, repeats: 1, ..cfg.clone() };
                s.spawn(move || {
                    let mut out = learn(&c)?;
                    write_learn_artifacts(&dir.join(format!("seed_{seed}")), &mut out)?;
                    Ok((
                        out.theory.soundness.iter().all(|s| s.pass),
                        out.theory.consistency.pass,
                        out.fault.as_ref().map(|f| f.to_string()),
                        out.eval.take().unwrap_or_default(),
                    ))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Failure::Internal("worker panicked".into())))).collect()
    });
    let mut reports = Vec::new();
    let mut summary = ExperimentSummary {
        seeds: seeds.clone(),
        soundness_pass: Vec::new(),
        consistency_pass: Vec::new(),
        aggregate: BTreeMap::new(),
        faults: Vec::new(),
    };
    for r in results {
        let (sound, consistent, fault, evals) = r?;
        summary.soundness_pass.push(sound);
        summary.consistency_pass.push(consistent);
        summary.faults.push(fault);
        reports.extend(evals);
    }
    summary.aggregate = aggregate(&reports);
    mkdir(dir)?;
    io::write_json(&dir.join("summary.json"), &summary)?;
    let r = ReportFile { runs: Vec::new(), aggregate: summary.aggregate.clone() };
    io::write_text(&dir.join("summary.txt"), &report_text(&r))?;
    Ok(summary)
}
