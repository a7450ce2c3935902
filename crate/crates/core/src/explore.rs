//! Active data collection: candidate skill sequences scored by coverage
//! (entropy gain over consecutive skill pairs) and chainability (distance of
//! the predicted success ratio from one half), chosen from the Pareto front.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, Simulator};
use crate::formal::{alpha_holds, AbstractState, Abstractor, Classifier, Dataset, Model, SkillInstance, StateHandle, World};
use crate::{Error, Result};

/// Counts of consecutive skill pairs, indexed by skill name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCountMatrix {
    skills: Vec<String>,
    counts: BTreeMap<(String, String), u64>,
    total: u64,
}

impl PairCountMatrix {
    pub fn new(skills: impl IntoIterator<Item = String>) -> Self {
        let mut skills: Vec<String> = skills.into_iter().collect();
        skills.sort();
        skills.dedup();
        PairCountMatrix { skills, counts: BTreeMap::new(), total: 0 }
    }

    /// Pairs of consecutive transitions within each episode.
    pub fn from_dataset(world: &World, dataset: &Dataset) -> Self {
        let mut m = Self::new(world.skills.iter().map(|s| s.name.clone()));
        for w in dataset.transitions.windows(2) {
            if w[0].episode == w[1].episode {
                m.add(&w[0].instance.skill, &w[1].instance.skill);
            }
        }
        m
    }

    pub fn add(&mut self, a: &str, b: &str) {
        *self.counts.entry((a.into(), b.into())).or_default() += 1;
        self.total += 1;
    }

    pub fn add_sequence(&mut self, seq: &[SkillInstance]) {
        for w in seq.windows(2) {
            self.add(&w[0].skill, &w[1].skill);
        }
    }

    pub fn get(&self, a: &str, b: &str) -> u64 {
        self.counts.get(&(a.into(), b.into())).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn entropy(&self) -> f64 {
        entropy(self.counts.values().copied())
    }

    /// All cells with the minimal count, in name order.
    pub fn least_explored(&self) -> Vec<(String, String)> {
        let mut cells = Vec::new();
        for a in &self.skills {
            for b in &self.skills {
                cells.push((self.get(a, b), a.clone(), b.clone()));
            }
        }
        let Some(min) = cells.iter().map(|c| c.0).min() else { return Vec::new() };
        cells.into_iter().filter(|c| c.0 == min).map(|(_, a, b)| (a, b)).collect()
    }
}

/// Shannon entropy (natural log) of a count vector; 0 when empty.
pub fn entropy(counts: impl Iterator<Item = u64> + Clone) -> f64 {
    let total: u64 = counts.clone().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    -counts.filter(|&c| c > 0).map(|c| {
        let p = c as f64 / t;
        p * libm::log(p)
    }).sum::<f64>()
}

/// Entropy gain from adding the sequence's consecutive pairs to the
/// dataset's pair counts.
pub fn coverage(world: &World, dataset: &Dataset, seq: &[SkillInstance]) -> f64 {
    let q = PairCountMatrix::from_dataset(world, dataset);
    let mut q2 = q.clone();
    q2.add_sequence(seq);
    q2.entropy() - q.entropy()
}

/// Simulates the sequence through the model from `initial` and returns
/// `|executable / len − 0.5|`. A step counts as executable when some
/// grounding of one of its skill's operators is satisfied; the first such
/// grounding (operator order, then binding order) is applied.
pub fn chainability(model: &Model, world: &World, seq: &[SkillInstance], initial: &AbstractState) -> f64 {
    if seq.is_empty() {
        return 0.5;
    }
    let mut state = initial.clone();
    let mut exec = 0usize;
    for inst in seq {
        let next = model.operators_for(&inst.skill).find_map(|(i, op)| {
            op.bindings_for(world, inst).into_iter().find_map(|b| {
                let g = op.ground(i, &b);
                state.apply(&g).ok()
            })
        });
        if let Some(s) = next {
            state = s;
            exec += 1;
        }
    }
    libm::fabs(exec as f64 / seq.len() as f64 - 0.5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub sequence: Vec<SkillInstance>,
    pub coverage: f64,
    pub chainability: f64,
    /// Position in the generated batch.
    pub index: usize,
}

/// `a` strictly dominates `b`: no worse on both axes, better on one.
pub fn dominates(a: &ScoredSequence, b: &ScoredSequence) -> bool {
    a.coverage >= b.coverage
        && a.chainability <= b.chainability
        && (a.coverage > b.coverage || a.chainability < b.chainability)
}

/// Indices of the non-dominated candidates.
pub fn pareto_front(scored: &[ScoredSequence]) -> Vec<usize> {
    (0..scored.len()).filter(|&i| !scored.iter().any(|o| dominates(o, &scored[i]))).collect()
}

/// Front member with maximal coverage; ties by lower chainability, then
/// by generation index.
pub fn pareto_select(scored: &[ScoredSequence]) -> Option<&ScoredSequence> {
    pareto_front(scored).into_iter().map(|i| &scored[i]).min_by(|a, b| {
        b.coverage
            .total_cmp(&a.coverage)
            .then(a.chainability.total_cmp(&b.chainability))
            .then(a.index.cmp(&b.index))
    })
}

/// What a sequence source may look at when proposing.
#[derive(Clone, Copy, Debug)]
pub struct GenerationContext<'a> {
    pub world: &'a World,
    pub model: &'a Model,
    pub dataset: &'a Dataset,
    pub initial: &'a StateHandle,
    pub steps: usize,
}

pub trait SequenceSource {
    fn generate(&mut self, ctx: &GenerationContext<'_>, n: usize) -> Result<Vec<Vec<SkillInstance>>>;
}

impl<S: SequenceSource + ?Sized> SequenceSource for alloc::boxed::Box<S> {
    fn generate(&mut self, ctx: &GenerationContext<'_>, n: usize) -> Result<Vec<Vec<SkillInstance>>> {
        (**self).generate(ctx, n)
    }
}

/// Probability per step that the scripted generator picks an instance it
/// expects to fail.
pub const VIOLATION_RATE: f64 = 0.3;

/// Sequence generator that consults a simulator as its commonsense prior.
/// Each sequence embeds one least-explored skill pair and never repeats an
/// instance back to back. Other steps either violate a precondition of the
/// least-failed skill or work towards executing the least-succeeded skill.
pub struct ScriptedGenerator<S> {
    pub prior: S,
    pub violation_rate: f64,
    rng: ChaCha8Rng,
    critic: Option<(alloc::boxed::Box<dyn Classifier>, Option<Abstractor>)>,
}

/// Depth bound of the setup search that makes a target skill executable.
pub const SETUP_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    ok: usize,
    failed: usize,
}

impl<S: Simulator> ScriptedGenerator<S> {
    pub fn new(prior: S, seed: u64) -> Self {
        ScriptedGenerator { prior, violation_rate: VIOLATION_RATE, rng: ChaCha8Rng::seed_from_u64(seed), critic: None }
    }

    /// Lets the generator read states through the model's vocabulary, so
    /// violations favour failures the current model predicts executable.
    pub fn with_critic(mut self, classifier: alloc::boxed::Box<dyn Classifier>) -> Self {
        self.critic = Some((classifier, None));
        self
    }

    /// Instances whose real outcome (`success`) contradicts the model's
    /// initiation prediction.
    fn surprising<'c>(
        &mut self,
        ctx: &GenerationContext<'_>,
        state: &StateHandle,
        candidates: &[&'c SkillInstance],
        success: bool,
    ) -> Result<Vec<&'c SkillInstance>> {
        let Some((clf, abs)) = self.critic.as_mut() else { return Ok(Vec::new()) };
        let abs = abs.get_or_insert_with(|| Abstractor::new(ctx.world.clone()));
        let a = abs.abstract_state(clf.as_mut(), &ctx.model.predicates, state)?;
        Ok(candidates.iter().copied().filter(|i| alpha_holds(ctx.model, ctx.world, i, &a) != success).collect())
    }

    fn split<'c>(&self, candidates: &'c [SkillInstance], state: &StateHandle, prev: Option<&SkillInstance>) -> Result<(Vec<&'c SkillInstance>, Vec<&'c SkillInstance>)> {
        let mut ok = Vec::new();
        let mut bad = Vec::new();
        for c in candidates.iter().filter(|c| Some(*c) != prev) {
            if self.prior.simulate(state, c)?.0 {
                ok.push(c);
            } else {
                bad.push(c);
            }
        }
        Ok((ok, bad))
    }

    fn pick(
        &mut self,
        candidates: &[SkillInstance],
        state: &StateHandle,
        prev: Option<&SkillInstance>,
        want_success: bool,
    ) -> Result<Option<SkillInstance>> {
        let (ok, bad) = self.split(candidates, state, prev)?;
        let (first, second) = if want_success { (ok, bad) } else { (bad, ok) };
        let pool = if first.is_empty() { second } else { first };
        Ok(pool.choose(&mut self.rng).map(|c| (*c).clone()))
    }

    /// Breadth-first search through the prior for the shortest prefix of
    /// successful steps after which some instance of `skill` succeeds.
    fn setup(&self, all: &[SkillInstance], state: &StateHandle, skill: &str, max_len: usize) -> Result<Option<Vec<SkillInstance>>> {
        let targets: Vec<&SkillInstance> = all.iter().filter(|i| i.skill == skill).collect();
        let mut seen = alloc::collections::BTreeSet::from([state.id]);
        let mut frontier = alloc::vec![(state.clone(), Vec::<SkillInstance>::new())];
        for depth in 0..=SETUP_DEPTH.min(max_len.saturating_sub(1)) {
            let mut next = Vec::new();
            for (s, path) in &frontier {
                for t in &targets {
                    if self.prior.simulate(s, t)?.0 && path.last() != Some(*t) {
                        let mut p = path.clone();
                        p.push((*t).clone());
                        return Ok(Some(p));
                    }
                }
                if depth == SETUP_DEPTH {
                    continue;
                }
                for i in all {
                    let (ok, n) = self.prior.simulate(s, i)?;
                    if ok && path.last() != Some(i) && seen.insert(n.id) {
                        let mut p = path.clone();
                        p.push(i.clone());
                        next.push((n, p));
                    }
                }
            }
            frontier = next;
        }
        Ok(None)
    }

    fn tally(dataset: &Dataset) -> BTreeMap<String, Tally> {
        let mut t: BTreeMap<String, Tally> = BTreeMap::new();
        for tr in &dataset.transitions {
            let e = t.entry(tr.instance.skill.clone()).or_default();
            if tr.success {
                e.ok += 1;
            } else {
                e.failed += 1;
            }
        }
        t
    }

    /// Skill names with the fewest recorded outcomes of one kind.
    fn rarest(world: &World, tally: &BTreeMap<String, Tally>, success: bool) -> Vec<String> {
        let count = |s: &str| tally.get(s).map_or(0, |t| if success { t.ok } else { t.failed });
        let min = world.skills.iter().map(|s| count(&s.name)).min().unwrap_or(0);
        world.skills.iter().filter(|s| count(&s.name) == min).map(|s| s.name.clone()).collect()
    }

    fn one(&mut self, ctx: &GenerationContext<'_>, pair: &(String, String)) -> Result<Vec<SkillInstance>> {
        let all = ctx.world.all_instances();
        let of = |s: &str| -> Vec<SkillInstance> { all.iter().filter(|i| i.skill == s).cloned().collect() };
        let (first, second) = (of(&pair.0), of(&pair.1));
        let steps = ctx.steps.max(2);
        let at = self.rng.random_range(0..steps - 1);
        let mut tally = Self::tally(ctx.dataset);
        let mut state = ctx.initial.clone();
        let mut seq: Vec<SkillInstance> = Vec::with_capacity(steps);
        let mut queued: Vec<SkillInstance> = Vec::new();
        for i in 0..steps {
            let prev = seq.last();
            let choice = if i == at {
                queued.clear();
                self.pick(&first, &state, prev, true)?
            } else if i == at + 1 {
                self.pick(&second, &state, prev, true)?
            } else if !queued.is_empty() && i < at {
                Some(queued.remove(0))
            } else if self.rng.random::<f64>() < self.violation_rate {
                queued.clear();
                let (_, all_bad) = self.split(&all, &state, prev)?;
                let surprising = self.surprising(ctx, &state, &all_bad, false)?;
                let skill = Self::rarest(ctx.world, &tally, false).choose(&mut self.rng).cloned().unwrap_or_default();
                let own = of(&skill);
                let (_, bad) = self.split(&own, &state, prev)?;
                let pool = if surprising.is_empty() { bad } else { surprising };
                match pool.choose(&mut self.rng) {
                    Some(c) => Some((*c).clone()),
                    None => self.pick(&all, &state, prev, false)?,
                }
            } else if let Some(c) = (!queued.is_empty()).then(|| queued.remove(0)) {
                Some(c)
            } else if let Some(c) = {
                let (all_ok, _) = self.split(&all, &state, prev)?;
                let surprising = self.surprising(ctx, &state, &all_ok, true)?;
                surprising.choose(&mut self.rng).map(|c| (*c).clone())
            } {
                queued.clear();
                Some(c)
            } else {
                let budget = if i < at { at - i } else { steps - i };
                let skill = Self::rarest(ctx.world, &tally, true).choose(&mut self.rng).cloned().unwrap_or_default();
                match self.setup(&all, &state, &skill, budget)? {
                    Some(mut path) if path.first() != prev => {
                        let head = path.remove(0);
                        queued = path;
                        Some(head)
                    }
                    _ => self.pick(&all, &state, prev, true)?,
                }
            };
            let inst = choice.ok_or_else(|| Error::config("no skill instance fits the sequence constraints"))?;
            let (ok, next) = self.prior.simulate(&state, &inst)?;
            let e = tally.entry(inst.skill.clone()).or_default();
            if ok {
                e.ok += 1;
            } else {
                e.failed += 1;
            }
            state = next;
            seq.push(inst);
        }
        Ok(seq)
    }
}

impl<S: Simulator> SequenceSource for ScriptedGenerator<S> {
    fn generate(&mut self, ctx: &GenerationContext<'_>, n: usize) -> Result<Vec<Vec<SkillInstance>>> {
        let least = crate::explore::PairCountMatrix::from_dataset(ctx.world, ctx.dataset).least_explored();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let pair = least.choose(&mut self.rng).cloned().ok_or_else(|| Error::config("world has no skills"))?;
            out.push(self.one(ctx, &pair)?);
        }
        Ok(out)
    }
}

/// Uniformly random skills with uniformly random valid arguments.
#[derive(Clone, Debug)]
pub struct RandomGenerator {
    rng: ChaCha8Rng,
}

impl RandomGenerator {
    pub fn new(seed: u64) -> Self {
        RandomGenerator { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl SequenceSource for RandomGenerator {
    fn generate(&mut self, ctx: &GenerationContext<'_>, n: usize) -> Result<Vec<Vec<SkillInstance>>> {
        let per_skill: Vec<Vec<SkillInstance>> =
            ctx.world.skills.iter().map(|s| ctx.world.instances(s)).filter(|v| !v.is_empty()).collect();
        if per_skill.is_empty() {
            return Err(Error::config("no skill has a valid instance"));
        }
        Ok((0..n)
            .map(|_| {
                (0..ctx.steps)
                    .map(|_| per_skill.choose(&mut self.rng).unwrap().choose(&mut self.rng).unwrap().clone())
                    .collect()
            })
            .collect())
    }
}

/// Replays recorded episodes, one per call, ignoring `n`.
#[derive(Clone, Debug)]
pub struct ReplayGenerator {
    episodes: Vec<Vec<SkillInstance>>,
    cursor: usize,
}

impl ReplayGenerator {
    pub fn new(episodes: Vec<Vec<SkillInstance>>) -> Self {
        ReplayGenerator { episodes, cursor: 0 }
    }
}

impl SequenceSource for ReplayGenerator {
    fn generate(&mut self, _ctx: &GenerationContext<'_>, _n: usize) -> Result<Vec<Vec<SkillInstance>>> {
        let e = self
            .episodes
            .get(self.cursor)
            .cloned()
            .ok_or_else(|| Error::ReplayMiss(alloc::format!("no recorded episode {}", self.cursor)))?;
        self.cursor += 1;
        Ok(alloc::vec![e])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplorerKind {
    /// Score a batch and take the Pareto choice.
    #[default]
    Pareto,
    /// Uniform random skills (baseline).
    Random,
    /// First generated sequence without scoring (baseline).
    First,
}

/// Executes every step regardless of failures. On an environment fault the
/// episode stops and the transitions recorded so far are kept.
pub fn collect(
    env: &mut dyn Environment,
    seq: &[SkillInstance],
    dataset: &mut Dataset,
    episode: usize,
) -> (usize, Option<Error>) {
    let mut n = 0;
    for inst in seq {
        match env.execute(inst) {
            Ok(t) => {
                dataset.record(t, episode);
                n += 1;
            }
            Err(e) => return (n, Some(e)),
        }
    }
    (n, None)
}
