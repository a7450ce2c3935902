//! The outer learning loop: propose sequences, execute the chosen one,
//! invent predicates, re-evaluate the vocabulary, relearn operators.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::env::{derive_seed, Environment};
use crate::explore::{chainability, collect, coverage, pareto_select, ExplorerKind, GenerationContext, ScoredSequence, SequenceSource};
use crate::formal::{Abstractor, Classifier, Dataset, Model, Predicate, World};
use crate::invent::{find_conflicts, invent, reevaluate, InventEvent, InventOptions};
use crate::operators::{model_rebuild, OperatorOptions};
use crate::oracle::{ConflictKind, Proposer, MU_MAX};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub iterations: usize,
    pub batch: usize,
    pub steps: usize,
    pub threshold: f64,
    pub seed: u64,
    pub explorer: ExplorerKind,
    pub extra_precondition_params: bool,
    pub attempt_cap: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            iterations: 5,
            batch: 5,
            steps: 15,
            threshold: 0.6,
            seed: 0,
            explorer: ExplorerKind::Pareto,
            extra_precondition_params: false,
            attempt_cap: 8,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.steps == 0 {
            return Err(crate::Error::config("batch and steps must be positive"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(crate::Error::config("threshold must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn invent_options(&self) -> InventOptions {
        InventOptions {
            threshold: self.threshold,
            attempt_cap: self.attempt_cap,
            mu_max: MU_MAX,
            operators: OperatorOptions { extra_precondition_params: self.extra_precondition_params },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LearnEvent {
    SequenceChosen { iteration: usize, index: usize, coverage: f64, chainability: f64, sequence: Vec<String> },
    Collected { iteration: usize, transitions: usize, fault: Option<String> },
    Invention { iteration: usize, detail: InventEvent },
    OperatorsLearned { iteration: usize, operators: Vec<String> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub transitions: usize,
    pub predicates: usize,
    pub operators: usize,
    pub open_conflicts: usize,
    pub added: Vec<String>,
    pub dropped: Vec<String>,
}

/// Learner state across iterations. Components are borrowed so callers
/// keep ownership of the environment and oracles.
pub struct Learner<'a> {
    pub config: LearnConfig,
    pub world: World,
    pub env: &'a mut dyn Environment,
    pub generator: &'a mut dyn SequenceSource,
    pub proposer: &'a mut dyn Proposer,
    pub classifier: &'a mut dyn Classifier,
    pub abstractor: Abstractor,
    pub dataset: Dataset,
    pub model: Model,
    pub events: Vec<LearnEvent>,
    pub stats: Vec<IterationStats>,
    iteration: usize,
}

impl<'a> Learner<'a> {
    pub fn new(
        config: LearnConfig,
        env: &'a mut dyn Environment,
        generator: &'a mut dyn SequenceSource,
        proposer: &'a mut dyn Proposer,
        classifier: &'a mut dyn Classifier,
    ) -> Result<Self> {
        config.validate()?;
        let world = env.world().clone();
        Ok(Learner {
            config,
            abstractor: Abstractor::new(world.clone()),
            world,
            env,
            generator,
            proposer,
            classifier,
            dataset: Dataset::new(),
            model: Model::default(),
            events: Vec::new(),
            stats: Vec::new(),
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn done(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    /// The abstraction of the whole dataset under the current vocabulary.
    pub fn abstractions(&mut self) -> Result<Vec<(crate::formal::AbstractState, crate::formal::AbstractState)>> {
        self.abstractor.abstract_dataset(self.classifier, &self.model.predicates, &self.dataset)
    }

    /// Runs one iteration. An environment fault ends the episode early; the
    /// transitions gathered before it are kept and the error is returned
    /// after the model is rebuilt.
    pub fn step(&mut self) -> Result<&IterationStats> {
        let it = self.iteration;
        let episode = self.dataset.next_episode();
        let initial = self.env.reset(derive_seed(self.config.seed, episode as u64))?;
        let batch = {
            let ctx = GenerationContext {
                world: &self.world,
                model: &self.model,
                dataset: &self.dataset,
                initial: &initial,
                steps: self.config.steps,
            };
            self.generator.generate(&ctx, self.config.batch)?
        };
        let start = self.abstractor.abstract_state(self.classifier, &self.model.predicates, &initial)?;
        let scored: Vec<ScoredSequence> = batch
            .iter()
            .enumerate()
            .map(|(index, seq)| ScoredSequence {
                coverage: coverage(&self.world, &self.dataset, seq),
                chainability: chainability(&self.model, &self.world, seq, &start),
                sequence: seq.clone(),
                index,
            })
            .collect();
        let chosen = match self.config.explorer {
            ExplorerKind::Pareto => pareto_select(&scored),
            ExplorerKind::Random | ExplorerKind::First => scored.first(),
        }
        .cloned();
        let mut fault = None;
        if let Some(c) = chosen {
            self.events.push(LearnEvent::SequenceChosen {
                iteration: it,
                index: c.index,
                coverage: c.coverage,
                chainability: c.chainability,
                sequence: c.sequence.iter().map(|i| i.to_string()).collect(),
            });
            let (n, err) = collect(self.env, &c.sequence, &mut self.dataset, episode);
            self.events.push(LearnEvent::Collected { iteration: it, transitions: n, fault: err.as_ref().map(|e| e.to_string()) });
            fault = err;
        }

        let opts = self.config.invent_options();
        let before: BTreeSet<String> = self.model.predicates.iter().map(|p| p.name.clone()).collect();
        let mut rejected = core::mem::take(&mut self.model.rejected);
        let mut ev = Vec::new();
        let result = invent(
            &self.world,
            &self.dataset,
            self.model.predicates.clone(),
            &mut rejected,
            self.proposer,
            self.classifier,
            &mut self.abstractor,
            &opts,
            &mut ev,
        )
        .and_then(|preds| {
            reevaluate(&self.world, &self.dataset, preds, &mut self.abstractor, self.classifier, &opts.operators, &mut ev)
        });
        self.events.extend(ev.into_iter().map(|detail| LearnEvent::Invention { iteration: it, detail }));
        let preds: Vec<Predicate> = match result {
            Ok(p) => p,
            Err(e) => {
                self.model.rejected = rejected;
                return Err(e);
            }
        };
        let mut model = model_rebuild(&self.world, &self.dataset, &preds, &mut self.abstractor, self.classifier, &opts.operators)?;
        model.rejected = rejected;
        self.model = model;
        self.events.push(LearnEvent::OperatorsLearned {
            iteration: it,
            operators: self.model.operators.iter().map(|o| o.name.clone()).collect(),
        });

        let after: BTreeSet<String> = self.model.predicates.iter().map(|p| p.name.clone()).collect();
        let abs = self.abstractions()?;
        let open = [ConflictKind::Precondition, ConflictKind::Effect]
            .iter()
            .map(|&k| find_conflicts(&self.world, &self.dataset, &abs, &self.model, k).len())
            .sum();
        self.stats.push(IterationStats {
            iteration: it,
            transitions: self.dataset.len(),
            predicates: self.model.predicates.len(),
            operators: self.model.operators.len(),
            open_conflicts: open,
            added: after.difference(&before).cloned().collect(),
            dropped: before.difference(&after).cloned().collect(),
        });
        self.iteration += 1;
        if let Some(e) = fault {
            return Err(e);
        }
        Ok(self.stats.last().unwrap())
    }

    /// Runs the remaining iterations.
    pub fn run(&mut self) -> Result<&Model> {
        while !self.done() {
            self.step()?;
        }
        Ok(&self.model)
    }

    /// Predicates ever rejected, per skill.
    pub fn rejected(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.model.rejected
    }
}
