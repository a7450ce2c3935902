use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use skillsym_core::env::kitchen::{fluent_pool, reachable_states, Kitchen};
use skillsym_core::env::tasks::kitchen_suite;
use skillsym_core::env::Environment;
use skillsym_core::operators::{model_rebuild, OperatorOptions};
use skillsym_core::oracle::{KitchenFluents, PoolClassifier};
use skillsym_core::plan::*;
use skillsym_core::*;

fn kitchen_world() -> World {
    Kitchen::new().world().clone()
}

fn op(name: &str, skill: &str, params: &[&str]) -> Operator {
    Operator {
        name: name.into(),
        skill: skill.into(),
        skill_arity: params.len().min(2),
        params: params.iter().map(|t| Param::of(t)).collect(),
        preconditions: BTreeSet::new(),
        inequalities: BTreeSet::new(),
        add: BTreeSet::new(),
        delete: BTreeSet::new(),
        provenance: vec![0],
    }
}

#[test]
fn ground_all_counts() {
    let w = kitchen_world();
    let one = op("Hold_0", "Pick", &["pickupable"]);
    assert_eq!(ground_all(&Model::new(vec![], vec![one]), &w).len(), 4);

    let mut two = op("Stack_0", "Stack", &["pickupable", "pickupable"]);
    assert_eq!(ground_all(&Model::new(vec![], vec![two.clone()]), &w).len(), 16);
    two.inequalities.insert((0, 1));
    let g = ground_all(&Model::new(vec![], vec![two]), &w);
    assert_eq!(g.len(), 12);
    assert!(g.iter().all(|a| a.args[0] != a.args[1]));
}

// --- random nullary problems versus a brute-force enumerator ----------

#[derive(Clone, Debug)]
struct Act {
    skill: usize,
    pos: Vec<usize>,
    neg: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
}

const ATOMS: usize = 5;

fn atom(i: usize) -> GroundAtom {
    GroundAtom::new(&format!("p{i}"), &[])
}

fn problem(init: &BTreeSet<usize>, acts: &[Act], goal: &[usize]) -> GroundProblem {
    let universe: Arc<BTreeSet<GroundAtom>> = Arc::new((0..ATOMS).map(atom).collect());
    let v = |x: &[usize]| x.iter().map(|&i| atom(i)).collect::<Vec<_>>();
    GroundProblem {
        initial: AbstractState { atoms: init.iter().map(|&i| atom(i)).collect(), universe },
        actions: acts
            .iter()
            .enumerate()
            .map(|(i, a)| GroundOperator {
                operator: i,
                name: format!("a{i}"),
                skill: format!("S{}", a.skill),
                skill_arity: 0,
                args: vec![],
                pre: GroundPreconditions { pos: v(&a.pos), neg: v(&a.neg), neq: vec![] },
                add: v(&a.add),
                del: v(&a.del),
            })
            .collect(),
        goal: AbstractGoal { pos: v(goal), neg: vec![], unreachable: false },
    }
}

/// Successor actions of a state under the planner's rule: among actions of
/// one skill instance, only those with the most precondition literals.
fn applicable(acts: &[Act], s: &BTreeSet<usize>) -> Vec<usize> {
    let ok: Vec<usize> = (0..acts.len())
        .filter(|&i| acts[i].pos.iter().all(|p| s.contains(p)) && acts[i].neg.iter().all(|p| !s.contains(p)))
        .collect();
    let spec = |i: usize| acts[i].pos.len() + acts[i].neg.len();
    ok.iter()
        .copied()
        .filter(|&i| ok.iter().all(|&j| acts[j].skill != acts[i].skill || spec(j) <= spec(i)))
        .collect()
}

fn step(a: &Act, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut n: BTreeSet<usize> = s.iter().copied().filter(|x| !a.del.contains(x)).collect();
    n.extend(a.add.iter().copied());
    n
}

/// Every plan up to `max_len` in (length, index sequence) order; a plan
/// stops the first time the goal holds.
fn brute(init: &BTreeSet<usize>, acts: &[Act], goal: &[usize], max_len: usize) -> Vec<Vec<usize>> {
    let is_goal = |s: &BTreeSet<usize>| goal.iter().all(|g| s.contains(g));
    let mut out = Vec::new();
    for len in 0..=max_len {
        let mut frontier = vec![(init.clone(), Vec::<usize>::new())];
        for _ in 0..len {
            let mut next = Vec::new();
            for (s, path) in frontier {
                if is_goal(&s) {
                    continue;
                }
                for a in applicable(acts, &s) {
                    let mut p = path.clone();
                    p.push(a);
                    next.push((step(&acts[a], &s), p));
                }
            }
            frontier = next;
        }
        let mut tier: Vec<Vec<usize>> = frontier.into_iter().filter(|(s, _)| is_goal(s)).map(|(_, p)| p).collect();
        tier.sort();
        out.extend(tier);
    }
    out
}

fn reachable_goal(init: &BTreeSet<usize>, acts: &[Act], goal: &[usize]) -> bool {
    let mut seen = BTreeSet::from([init.clone()]);
    let mut stack = vec![init.clone()];
    while let Some(s) = stack.pop() {
        if goal.iter().all(|g| s.contains(g)) {
            return true;
        }
        for a in applicable(acts, &s) {
            let n = step(&acts[a], &s);
            if seen.insert(n.clone()) {
                stack.push(n);
            }
        }
    }
    false
}

fn act_strategy() -> impl Strategy<Value = Act> {
    let idx = || prop::collection::vec(0..ATOMS, 0..3);
    (0usize..3, idx(), idx(), idx(), idx()).prop_map(|(skill, pos, neg, add, del)| {
        let neg: Vec<usize> = neg.into_iter().filter(|n| !pos.contains(n)).collect();
        let del: Vec<usize> = del.into_iter().filter(|d| !add.contains(d)).collect();
        Act { skill, pos, neg, add, del }
    })
}

const MAX_LEN: usize = 6;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn topk_matches_brute_force(
        init in prop::collection::btree_set(0..ATOMS, 0..ATOMS),
        acts in prop::collection::vec(act_strategy(), 1..7),
        goal in prop::collection::vec(0..ATOMS, 1..3),
        k in 1usize..12,
    ) {
        let p = problem(&init, &acts, &goal);
        let TopK::Plans(plans) = solve_topk(&p, k, DEFAULT_NODE_CAP) else { panic!("tiny problem over budget") };
        let got: Vec<Vec<usize>> = plans.iter().map(|p| p.actions.clone()).collect();
        let bf: Vec<Vec<usize>> = brute(&init, &acts, &goal, MAX_LEN).into_iter().take(k).collect();
        if bf.len() == k {
            prop_assert_eq!(&got, &bf);
        } else {
            prop_assert_eq!(&got[..bf.len().min(got.len())], &bf[..]);
            prop_assert!(got[bf.len()..].iter().all(|p| p.len() > MAX_LEN));
        }
        prop_assert_eq!(got.is_empty(), !reachable_goal(&init, &acts, &goal));
        for w in plans.windows(2) {
            prop_assert!(w[0].cost() <= w[1].cost());
        }
        let goal_abs = AbstractGoal { pos: goal.iter().map(|&g| atom(g)).collect(), neg: vec![], unreachable: false };
        for plan in &plans {
            let end = replay(&p, plan).unwrap();
            prop_assert!(goal_abs.holds(&end));
        }
        prop_assert_eq!(solve_topk(&p, k, DEFAULT_NODE_CAP), TopK::Plans(plans));
    }
}

#[test]
fn trivial_and_impossible_problems() {
    let acts = vec![Act { skill: 0, pos: vec![], neg: vec![], add: vec![1], del: vec![] }];
    let done = problem(&[0].into(), &acts, &[0]);
    assert_eq!(solve_topk(&done, 10, DEFAULT_NODE_CAP), TopK::Plans(vec![Plan { actions: vec![] }]));
    let never = problem(&[0].into(), &acts, &[2]);
    assert_eq!(solve_topk(&never, 10, DEFAULT_NODE_CAP), TopK::Plans(vec![]));
    let mut outside = problem(&[0].into(), &acts, &[1]);
    outside.goal.unreachable = true;
    assert_eq!(solve_topk(&outside, 10, DEFAULT_NODE_CAP), TopK::Plans(vec![]));
    let reach = problem(&BTreeSet::new(), &acts, &[1]);
    assert_eq!(solve_topk(&reach, 10, 1), TopK::BudgetExceeded);
    assert_eq!(solve_topk(&reach, 10, DEFAULT_NODE_CAP), TopK::Plans(vec![Plan { actions: vec![0] }]));
}

/// The model learned from every transition of the reachable kitchen under
/// the full fluent pool: nothing an expert could add is missing from the
/// data.
fn exhaustive_model() -> (Kitchen, Model, Abstractor, PoolClassifier<KitchenFluents>) {
    let k = Kitchen::new();
    let w = k.world().clone();
    let mut d = Dataset::new();
    let instances = w.all_instances();
    for s in reachable_states(&w, k.state()) {
        let before = s.handle();
        for i in &instances {
            let mut n = s.clone();
            let ok = n.step(&w, i);
            let after = if ok { n.handle() } else { before.clone() };
            d.record(Transition { id: 0, episode: 0, before: before.clone(), instance: i.clone(), after, success: ok }, 0);
        }
    }
    let mut clf = PoolClassifier::new(KitchenFluents { world: w.clone() }, vec![]);
    let mut ab = Abstractor::new(w.clone());
    let m = model_rebuild(&w, &d, &fluent_pool(), &mut ab, &mut clf, &OperatorOptions::default()).unwrap();
    (k, m, ab, clf)
}

#[test]
fn exhaustive_model_solves_the_easy_suite() {
    let (mut k, m, mut ab, mut clf) = exhaustive_model();
    let tasks = kitchen_suite(&k);
    let r = evaluate(&mut k, &m, &mut ab, &mut clf, &tasks, DEFAULT_K, DEFAULT_NODE_CAP).unwrap();
    let easy = r.tag(TaskTag::Easy);
    assert_eq!((easy.tasks, easy.solved, easy.mean_pb), (20, 20, 1.0));
    let imp = r.tag(TaskTag::Impossible);
    assert_eq!((imp.tasks, imp.solved), (5, 5));
    for t in r.tasks.iter().filter(|t| !t.solved) {
        assert_eq!(t.plans_tried, DEFAULT_K, "{}", t.name);
    }

    // every easy plan found is valid and not longer than the true optimum
    let w = k.world().clone();
    let actions = ground_all(&m, &w);
    for t in tasks.iter().filter(|t| t.tag == TaskTag::Easy) {
        let initial = ab.abstract_state(&mut clf, &m.predicates, &t.initial).unwrap();
        let goal = abstract_goal(t, &initial, &m.predicates, &mut ab, &mut clf).unwrap();
        let p = GroundProblem { initial, actions: actions.clone(), goal };
        let TopK::Plans(plans) = solve_topk(&p, 3, DEFAULT_NODE_CAP) else { panic!() };
        assert!(!plans.is_empty(), "{}", t.name);
        for plan in &plans {
            assert!(p.goal.holds(&replay(&p, plan).unwrap()));
        }
    }
}

#[test]
fn empty_model_fails_with_full_budget() {
    let mut k = Kitchen::new();
    let w = k.world().clone();
    let mut clf = PoolClassifier::new(KitchenFluents { world: w.clone() }, vec![]);
    let m = Model::default();
    let tasks = kitchen_suite(&k);
    let r = evaluate(&mut k, &m, &mut Abstractor::new(w), &mut clf, &tasks, DEFAULT_K, DEFAULT_NODE_CAP).unwrap();
    assert_eq!(r.tag(TaskTag::Easy).solved, 0);
    assert_eq!(r.tag(TaskTag::Easy).mean_pb, DEFAULT_K as f64);
    assert_eq!(r.tag(TaskTag::Impossible).solved, 5);
}

#[test]
fn distinct_executions_collapse_extra_bindings() {
    let w = kitchen_world();
    let mut o = op("Pick_0", "Pick", &["pickupable", "station", "pickupable"]);
    o.skill_arity = 2;
    let actions = ground_all(&Model::new(vec![], vec![o]), &w);
    let p = GroundProblem { initial: AbstractState::empty(), actions: actions.clone(), goal: AbstractGoal::default() };
    let plans: Vec<Plan> = (0..actions.len()).map(|a| Plan { actions: vec![a] }).collect();
    let d = distinct_executions(&p, plans, 100);
    assert_eq!(d.len(), 12, "4 pickupables × 3 stations");
}
