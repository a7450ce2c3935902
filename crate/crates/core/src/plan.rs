//! Grounded planning over a learned model: exact top-K enumeration of
//! shortest plans and the Solved %/PB evaluation protocol.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::formal::{AbstractGoal, AbstractState, Abstractor, Classifier, Goal, GroundAtom, GroundOperator, Model, PlanningTask, TaskTag, World};
use crate::{Error, Result};

/// Default number of candidate plans per task.
pub const DEFAULT_K: usize = 10;
/// Default cap on the number of abstract states a search may visit.
pub const DEFAULT_NODE_CAP: usize = 200_000;

/// Every type-valid grounding of every operator that satisfies its
/// inequality constraints, in operator then binding order.
pub fn ground_all(model: &Model, world: &World) -> Vec<GroundOperator> {
    let mut out = Vec::new();
    for (i, op) in model.operators.iter().enumerate() {
        for b in op.bindings(world) {
            out.push(op.ground(i, &b));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundProblem {
    pub initial: AbstractState,
    pub actions: Vec<GroundOperator>,
    pub goal: AbstractGoal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    /// Indices into the problem's action list.
    pub actions: Vec<usize>,
}

impl Plan {
    pub fn cost(&self) -> usize {
        self.actions.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopK {
    /// Up to k plans ordered by (length, action indices). Empty means the
    /// goal is unreachable in the abstract space.
    Plans(Vec<Plan>),
    /// The reachable space exceeded the node cap; solvability is unknown.
    BudgetExceeded,
}

type Bits = Vec<u64>;

fn bit(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn disjoint(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & y == 0)
}

struct Compiled {
    /// Index of the skill instance this action executes.
    instance: usize,
    specificity: usize,
    pos: Bits,
    neg: Bits,
    add: Bits,
    del: Bits,
}

/// Reachable abstract state graph; goal states are not expanded.
struct Graph {
    states: Vec<Bits>,
    goal: Vec<bool>,
    edges: Vec<Vec<(usize, usize)>>,
}

fn build_graph(p: &GroundProblem, node_cap: usize) -> Option<Graph> {
    let index: BTreeMap<&GroundAtom, usize> = p.initial.universe.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let words = index.len().div_ceil(64).max(1);
    let mask = |atoms: &[GroundAtom], strict: bool| -> Option<Bits> {
        let mut b = alloc::vec![0u64; words];
        for a in atoms {
            match index.get(a) {
                Some(&i) => set(&mut b, i),
                None if strict => return None,
                None => {}
            }
        }
        Some(b)
    };
    let mut acts: Vec<(usize, Compiled)> = Vec::new();
    let mut instances: BTreeMap<crate::formal::SkillInstance, usize> = BTreeMap::new();
    for (i, a) in p.actions.iter().enumerate() {
        let n = instances.len();
        let instance = *instances.entry(a.instance()).or_insert(n);
        let specificity = a.pre.pos.len() + a.pre.neg.len();
        if a.pre.neq.iter().any(|(x, y)| x == y) {
            continue;
        }
        let (Some(pos), Some(add)) = (mask(&a.pre.pos, true), mask(&a.add, true)) else { continue };
        let neg = mask(&a.pre.neg, false).unwrap();
        let del = mask(&a.del, false).unwrap();
        acts.push((i, Compiled { instance, specificity, pos, neg, add, del }));
    }
    let gpos = mask(&p.goal.pos, true)?;
    let gneg = mask(&p.goal.neg, false).unwrap();
    let is_goal = |s: &Bits| subset(&gpos, s) && disjoint(&gneg, s);
    let init = mask(&p.initial.atoms.iter().cloned().collect::<Vec<_>>(), false).unwrap();
    let mut ids: BTreeMap<Bits, usize> = BTreeMap::new();
    let mut g = Graph { states: Vec::new(), goal: Vec::new(), edges: Vec::new() };
    ids.insert(init.clone(), 0);
    g.goal.push(is_goal(&init));
    g.states.push(init);
    g.edges.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        if g.goal[s] {
            continue;
        }
        let st = &g.states[s];
        let applicable: Vec<&(usize, Compiled)> =
            acts.iter().filter(|(_, c)| subset(&c.pos, st) && disjoint(&c.neg, st)).collect();
        let mut best: BTreeMap<usize, usize> = BTreeMap::new();
        for (_, c) in &applicable {
            let b = best.entry(c.instance).or_insert(0);
            *b = (*b).max(c.specificity);
        }
        let mut out = Vec::new();
        for (ai, c) in applicable {
            if c.specificity < best[&c.instance] {
                continue;
            }
            let st = &g.states[s];
            let next: Bits = st.iter().zip(&c.del).zip(&c.add).map(|((x, d), a)| (x & !d) | a).collect();
            let id = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    if g.states.len() >= node_cap {
                        return None;
                    }
                    let id = g.states.len();
                    ids.insert(next.clone(), id);
                    g.goal.push(is_goal(&next));
                    g.states.push(next);
                    g.edges.push(Vec::new());
                    queue.push_back(id);
                    id
                }
            };
            out.push((*ai, id));
        }
        g.edges[s] = out;
    }
    Some(g)
}

fn dfs(g: &Graph, layers: &[Bits], s: usize, r: usize, path: &mut Vec<usize>, out: &mut Vec<Plan>, k: usize) {
    if out.len() >= k {
        return;
    }
    if r == 0 {
        out.push(Plan { actions: path.clone() });
        return;
    }
    for &(a, n) in &g.edges[s] {
        if bit(&layers[r - 1], n) {
            path.push(a);
            dfs(g, layers, n, r - 1, path, out, k);
            path.pop();
            if out.len() >= k {
                return;
            }
        }
    }
}

/// The k first plans in (length, action index sequence) order, where a plan
/// reaches the goal only at its last state.
///
/// Layer `r` holds the states from which the goal is first reached in
/// exactly `r` steps; plans of length `r` are then enumerated depth-first
/// in action order, every branch guaranteed to complete. Once the layer
/// sequence repeats without containing the initial state, no longer plan
/// exists.
pub fn solve_topk(problem: &GroundProblem, k: usize, node_cap: usize) -> TopK {
    if k == 0 || problem.goal.unreachable {
        return TopK::Plans(Vec::new());
    }
    let Some(g) = build_graph(problem, node_cap) else {
        return if problem.goal.pos.iter().any(|a| !problem.initial.universe.contains(a)) {
            TopK::Plans(Vec::new())
        } else {
            TopK::BudgetExceeded
        };
    };
    let n = g.states.len();
    let words = n.div_ceil(64);
    let mut layer0 = alloc::vec![0u64; words];
    for (i, &goal) in g.goal.iter().enumerate() {
        if goal {
            set(&mut layer0, i);
        }
    }
    let mut layers = alloc::vec![layer0];
    let mut seen: BTreeMap<Bits, usize> = BTreeMap::new();
    let mut plans = Vec::new();
    loop {
        let r = layers.len() - 1;
        if bit(&layers[r], 0) {
            let mut path = Vec::new();
            dfs(&g, &layers, 0, r, &mut path, &mut plans, k);
            if plans.len() >= k {
                break;
            }
        }
        if let Some(&first) = seen.get(&layers[r]) {
            // Layers repeat with period r - first from here on.
            if !(first..r).any(|t| bit(&layers[t], 0)) {
                break;
            }
        } else {
            seen.insert(layers[r].clone(), r);
        }
        let prev = &layers[r];
        let mut next = alloc::vec![0u64; words];
        for s in 0..n {
            if !g.goal[s] && g.edges[s].iter().any(|&(_, t)| bit(prev, t)) {
                set(&mut next, s);
            }
        }
        if next.iter().all(|w| *w == 0) {
            break;
        }
        layers.push(next);
    }
    TopK::Plans(plans)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub name: String,
    pub tag: TaskTag,
    pub solved: bool,
    /// Plans tried (1-based index of the succeeding plan, or k on failure).
    pub plans_tried: usize,
    pub plans_found: usize,
    pub note: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TagSummary {
    pub tasks: usize,
    pub solved: usize,
    pub solved_pct: f64,
    pub mean_pb: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub tasks: Vec<TaskResult>,
    pub summary: BTreeMap<TaskTag, TagSummary>,
}

impl EvalReport {
    pub fn new(k: usize, tasks: Vec<TaskResult>) -> Self {
        let mut summary = BTreeMap::new();
        for tag in TaskTag::ALL {
            let ts: Vec<&TaskResult> = tasks.iter().filter(|t| t.tag == tag).collect();
            if ts.is_empty() {
                continue;
            }
            let solved = ts.iter().filter(|t| t.solved).count();
            summary.insert(
                tag,
                TagSummary {
                    tasks: ts.len(),
                    solved,
                    solved_pct: 100.0 * solved as f64 / ts.len() as f64,
                    mean_pb: ts.iter().map(|t| t.plans_tried as f64).sum::<f64>() / ts.len() as f64,
                },
            );
        }
        EvalReport { k, tasks, summary }
    }

    pub fn tag(&self, tag: TaskTag) -> TagSummary {
        self.summary.get(&tag).cloned().unwrap_or_default()
    }
}

pub fn abstract_goal(
    task: &PlanningTask,
    initial: &AbstractState,
    predicates: &[crate::formal::Predicate],
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
) -> Result<AbstractGoal> {
    Ok(match &task.goal {
        Goal::Literals(l) => AbstractGoal::from_literals(l, initial),
        Goal::State(s) => AbstractGoal::from_state(&abstractor.abstract_state(classifier, predicates, s)?),
    })
}

/// How many model plans are requested per execution slot; plans differing
/// only in the binding of non-argument parameters collapse to one.
pub const CANDIDATE_FACTOR: usize = 5;

/// The first `k` plans with pairwise different skill-instance sequences.
pub fn distinct_executions(problem: &GroundProblem, plans: Vec<Plan>, k: usize) -> Vec<Plan> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in plans {
        let key: Vec<crate::formal::SkillInstance> = p.actions.iter().map(|&a| problem.actions[a].instance()).collect();
        if seen.insert(key) {
            out.push(p);
            if out.len() == k {
                break;
            }
        }
    }
    out
}

/// Runs one task: plan in the model, then execute candidates in order
/// until the environment confirms the goal.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_task(
    env: &mut dyn Environment,
    model: &Model,
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
    actions: &[GroundOperator],
    task: &PlanningTask,
    k: usize,
    node_cap: usize,
) -> Result<TaskResult> {
    let world = env.world().clone();
    let mut result =
        TaskResult { name: task.name.clone(), tag: task.tag, solved: false, plans_tried: k, plans_found: 0, note: String::new() };
    let initial = abstractor.abstract_state(classifier, &model.predicates, &task.initial)?;
    let goal = abstract_goal(task, &initial, &model.predicates, abstractor, classifier)?;
    let problem = GroundProblem { initial, actions: actions.to_vec(), goal };
    let plans = match solve_topk(&problem, k.saturating_mul(CANDIDATE_FACTOR), node_cap) {
        TopK::Plans(p) => distinct_executions(&problem, p, k),
        TopK::BudgetExceeded => {
            result.note = "planner budget exceeded".into();
            return Ok(result);
        }
    };
    result.plans_found = plans.len();
    if task.tag == TaskTag::Impossible {
        result.solved = plans.is_empty();
        result.plans_tried = if result.solved { 0 } else { k };
        result.note = if result.solved { "no plan".into() } else { "planner returned a plan".into() };
        return Ok(result);
    }
    if plans.is_empty() {
        result.note = "no plan".into();
        return Ok(result);
    }
    for (i, plan) in plans.iter().enumerate() {
        env.restore(&task.initial)?;
        let mut ok = true;
        for &a in &plan.actions {
            let inst = actions[a].instance();
            world.validate_instance(&inst)?;
            if !env.execute(&inst)?.success {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let reached = match env.ground_truth_check(task) {
            Some(r) => r?,
            None => {
                let s = abstractor.abstract_state(classifier, &model.predicates, &env.observe())?;
                problem.goal.holds(&s)
            }
        };
        if reached {
            result.solved = true;
            result.plans_tried = i + 1;
            result.note = alloc::format!("plan {} of length {}", i + 1, plan.cost());
            return Ok(result);
        }
    }
    result.note = "no candidate plan reached the goal".into();
    Ok(result)
}

/// Evaluates every task; environment faults fail the task with a note.
pub fn evaluate(
    env: &mut dyn Environment,
    model: &Model,
    abstractor: &mut Abstractor,
    classifier: &mut dyn Classifier,
    tasks: &[PlanningTask],
    k: usize,
    node_cap: usize,
) -> Result<EvalReport> {
    let world = env.world().clone();
    let actions = ground_all(model, &world);
    let mut results = Vec::new();
    for task in tasks {
        match evaluate_task(env, model, abstractor, classifier, &actions, task, k, node_cap) {
            Ok(r) => results.push(r),
            Err(e @ (Error::Environment(_) | Error::ReplayMiss(_))) => results.push(TaskResult {
                name: task.name.clone(),
                tag: task.tag,
                solved: false,
                plans_tried: k,
                plans_found: 0,
                note: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(EvalReport::new(k, results))
}

/// Plans of `problem` replayed through `apply`, for validation.
pub fn replay(problem: &GroundProblem, plan: &Plan) -> Result<AbstractState> {
    let mut s = problem.initial.clone();
    for &a in &plan.actions {
        s = s.apply(&problem.actions[a])?;
    }
    Ok(s)
}

/// Distinct objects mentioned by a task's goal literals.
pub fn goal_objects(task: &PlanningTask) -> BTreeSet<String> {
    match &task.goal {
        Goal::Literals(l) => l.iter().flat_map(|l| l.atom.args.iter().map(|a| a.to_string())).collect(),
        Goal::State(_) => BTreeSet::new(),
    }
}
