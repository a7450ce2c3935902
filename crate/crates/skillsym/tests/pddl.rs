use std::collections::BTreeSet;

use proptest::prelude::*;
use skillsym::pddl::{self, PddlError};
use skillsym_core::plan::ground_all;
use skillsym_core::{
    AbstractGoal, AbstractState, GroundAtom, LiftedAtom, Literal, Model, ObjectRef, Operator, Param, Predicate,
    TypeHierarchy, World,
};

const CUT_7: &str = "(:action Cut_7
 :parameters (?cuttable_p0 - cuttable
              ?pickupable_p1 - pickupable
              ?pickupable_p2 - pickupable
              ?pickupable_p6 - pickupable
              ?robot_p5 - robot
              ?station_p4 - station)
 :precondition (and
    (not (= ?pickupable_p1 ?pickupable_p2))
    (not (= ?pickupable_p1 ?pickupable_p6))
    (not (= ?pickupable_p2 ?pickupable_p6))
    (gripper_empty ?robot_p5)
    (on_cutting_board ?cuttable_p0)
    (on_station ?cuttable_p0 ?station_p4)
    (top_most ?cuttable_p0)
    (not (cut_into_pieces ?cuttable_p0))
    (not (holding ?robot_p5 ?cuttable_p0))
    (not (holding ?robot_p5 ?pickupable_p1))
    (not (holding ?robot_p5 ?pickupable_p2))
    (not (stacked_on ?pickupable_p6 ?cuttable_p0)))
 :effect (and
    (cut_into_pieces ?cuttable_p0)))";

const EXPERT_CUT: &str = "(:action Cut
 :parameters (?robot - robot
              ?cuttable - cuttable
              ?board - cuttingboard)
 :precondition (and
    (hand_empty)
    (obj_free ?cuttable)
    (is_on_station ?cuttable ?board)
    (not (is_cut ?cuttable)))
 :effect (and
    (is_cut ?cuttable)))";

#[test]
fn learned_cut_listing_parses() {
    let (op, h, preds) = pddl::parse_action(CUT_7).unwrap();
    assert_eq!(op.name, "Cut_7");
    assert_eq!(op.skill, "Cut");
    assert_eq!(op.params.len(), 6);
    assert_eq!(op.inequalities.len(), 3);
    assert_eq!(op.preconditions.len() + op.inequalities.len(), 12);
    assert_eq!(op.preconditions.iter().filter(|l| !l.positive).count(), 5);
    assert_eq!(op.add.len(), 1);
    assert!(op.delete.is_empty());
    assert!(h.contains("robot"));
    assert_eq!(preds.len(), 7);
}

#[test]
fn expert_cut_listing_parses() {
    let (op, _, _) = pddl::parse_action(EXPERT_CUT).unwrap();
    assert_eq!(op.params.len(), 3);
    assert_eq!(op.skill, "Cut");
    assert_eq!(op.preconditions.len(), 4);
    assert_eq!(op.add.len(), 1);
}

#[test]
fn syntax_errors_carry_positions() {
    let e = pddl::parse_domain("(define (domain d)\n  (:predicates (p ?x))\n  )\n)").unwrap_err();
    assert_eq!(e, PddlError::Syntax { line: 4, col: 1, msg: "unbalanced `)`".into() });
    let e = pddl::parse_domain("(define (domain d)\n  (:predicates (p ?x)\n").unwrap_err();
    assert!(matches!(e, PddlError::Syntax { line: 2, col: 3, .. }), "{e:?}");
}

#[test]
fn unsupported_requirements_and_constructs() {
    let e = pddl::parse_domain("(define (domain d) (:requirements :strips :adl))").unwrap_err();
    assert_eq!(e, PddlError::Unsupported("requirement :adl".into()));
    let e = pddl::parse_domain("(define (domain d) (:types a - (either b c)))").unwrap_err();
    assert!(matches!(e, PddlError::Unsupported(_)));
    let e = pddl::parse_action("(:action a :parameters (?x) :effect (when (p ?x) (q ?x)))").unwrap_err();
    assert!(matches!(e, PddlError::Unsupported(_)));
}

#[test]
fn empty_model_emits_valid_domain() {
    let text = pddl::emit_domain(&Model::default(), &TypeHierarchy::new()).unwrap();
    assert_eq!(
        text,
        "(define (domain skillsym)\n  (:requirements :strips :typing :negative-preconditions :equality)\n  (:types)\n  (:predicates)\n)\n"
    );
    let d = pddl::parse_domain(&text).unwrap();
    assert!(d.model.predicates.is_empty() && d.model.operators.is_empty());
}

#[test]
fn collisions_are_reported() {
    let m = Model::new(vec![Predicate::new("On", &[], ""), Predicate::new("on", &[], "")], vec![]);
    let e = pddl::emit_domain(&m, &TypeHierarchy::new()).unwrap_err();
    assert_eq!(e, PddlError::Collision("predicate On, on -> on".into()));
    let m = Model::new(vec![Predicate::new("has_type_x", &[], "")], vec![]);
    assert!(matches!(pddl::emit_domain(&m, &TypeHierarchy::new()), Err(PddlError::Collision(_))));
}

fn multi_type_fixture() -> (World, Model) {
    let h = TypeHierarchy::new().with("item", &[]).unwrap().with("cookable", &["item"]).unwrap().with("cuttable", &["item"]).unwrap();
    let world = World::new(
        h,
        vec![ObjectRef::new("odd", &["cookable", "cuttable"]), ObjectRef::new("patty", &["cookable"])],
        vec![],
    )
    .unwrap();
    let op = Operator {
        name: "Prep_0".into(),
        skill: "Prep".into(),
        skill_arity: 0,
        params: vec![Param { types: ["cookable".to_string(), "cuttable".to_string()].into() }],
        preconditions: BTreeSet::new(),
        inequalities: BTreeSet::new(),
        add: [LiftedAtom { predicate: "ready".into(), args: vec![0] }].into(),
        delete: BTreeSet::new(),
        provenance: vec![],
    };
    (world, Model::new(vec![Predicate::new("ready", &["item"], "prepared")], vec![op]))
}

#[test]
fn multi_typed_object_uses_dominant_type_and_membership_facts() {
    let (world, model) = multi_type_fixture();
    let domain = pddl::emit_domain(&model, &world.hierarchy).unwrap();
    assert!(domain.contains("   :parameters (?cookable_p0 - cookable)\n   :precondition (and\n      (has_type_cuttable ?cookable_p0))"));
    let goal = AbstractGoal { pos: vec![GroundAtom::new("ready", &["odd"])], neg: vec![], unreachable: false };
    let text = pddl::emit_problem("t", &world, &model, &AbstractState::empty(), &goal).unwrap();
    assert_eq!(
        text,
        "(define (problem t)\n  (:domain skillsym)\n  (:objects\n    odd patty - cookable)\n  (:init\n    (has_type_cuttable odd))\n  (:goal (and\n    (ready odd)))\n)\n"
    );
    let p = pddl::parse_problem(&text).unwrap();
    assert_eq!(p.objects, [("odd".to_string(), "cookable".to_string()), ("patty".into(), "cookable".into())]);
    assert_eq!(p.init, [GroundAtom::new("has_type_cuttable", &["odd"])]);
    let d = pddl::parse_domain(&domain).unwrap();
    assert_eq!(d.model.operators, model.operators);
}

#[test]
fn problem_errors_and_empty_goal() {
    let (world, model) = multi_type_fixture();
    let bad = AbstractGoal { pos: vec![GroundAtom::new("ready", &["ghost"])], neg: vec![], unreachable: false };
    assert!(matches!(pddl::emit_problem("t", &world, &model, &AbstractState::empty(), &bad), Err(PddlError::Invalid(_))));
    let text = pddl::emit_problem("t", &world, &model, &AbstractState::empty(), &AbstractGoal::default()).unwrap();
    assert!(text.ends_with("  (:goal (and))\n)\n"));
    let p = pddl::parse_problem(&text).unwrap();
    assert!(p.goal_pos.is_empty() && p.goal_neg.is_empty());
}

#[test]
fn kitchen_task_problem_round_trips() {
    use skillsym_core::env::kitchen::{fluent_pool, Kitchen};
    use skillsym_core::env::tasks::kitchen_suite;
    use skillsym_core::env::Environment;
    use skillsym_core::oracle::{kitchen_distractors, KitchenFluents, PoolClassifier};
    let k = Kitchen::new();
    let world = k.world().clone();
    let model = Model::new(fluent_pool(), vec![]);
    let mut clf = PoolClassifier::new(KitchenFluents { world: world.clone() }, kitchen_distractors());
    let tasks: Vec<_> = kitchen_suite(&k).into_iter().filter(|t| t.name == "easy_06").collect();
    let (name, text) = skillsym::run::problems(&world, &model, &tasks, &mut clf).unwrap().remove(0);
    assert_eq!(name, "problem_easy_06.pddl");
    let p = pddl::parse_problem(&text).unwrap();
    assert_eq!(p.name, "easy_06");
    assert_eq!(p.goal_pos, [GroundAtom::new("cooked", &["patty"]), GroundAtom::new("cut", &["lettuce"])]);
    assert!(p.init.contains(&GroundAtom::new("gripper_empty", &[])));
    assert_eq!(p.objects.len(), world.objects.len());
}

// Random models over a random tree of types.

#[derive(Debug, Clone)]
struct Case {
    world: World,
    model: Model,
}

fn type_name(i: usize) -> String {
    format!("t{i}")
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..5)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(0usize..100, n)))
        .prop_flat_map(|(n, parents)| {
            let mut h = TypeHierarchy::new();
            for (i, p) in parents.iter().enumerate() {
                let parent = if i == 0 || p % (i + 1) == i { "object".to_string() } else { type_name(p % i) };
                h.add(&type_name(i), &[&parent]).unwrap();
            }
            let types: Vec<String> = std::iter::once("object".to_string()).chain((0..n).map(type_name)).collect();
            let pick = proptest::sample::select(types.clone());
            let preds = proptest::collection::vec(proptest::collection::vec(pick.clone(), 0..3), 0..5);
            let objects = proptest::collection::vec(proptest::collection::btree_set(pick.clone(), 1..3), 0..4);
            let params = proptest::collection::vec(proptest::collection::btree_set(pick, 1..3), 0..4);
            let ops = proptest::collection::vec(
                (0usize..3, params, proptest::collection::vec((0usize..100, proptest::collection::vec(0usize..100, 2), any::<u8>()), 0..8)),
                0..4,
            );
            (Just(h), preds, objects, ops)
        })
        .prop_map(|(h, preds, objects, ops)| {
            let predicates: Vec<Predicate> = preds
                .iter()
                .enumerate()
                .map(|(i, ps)| {
                    let refs: Vec<&str> = ps.iter().map(String::as_str).collect();
                    Predicate::new(&format!("p{i}"), &refs, &format!("meaning of p{i}"))
                })
                .collect();
            let objects: Vec<ObjectRef> = objects
                .iter()
                .enumerate()
                .map(|(i, ts)| ObjectRef { name: format!("o{i}"), types: ts.iter().filter(|t| *t != "object").cloned().collect() })
                .map(|mut o| {
                    if o.types.is_empty() {
                        o.types.insert("object".into());
                    }
                    o
                })
                .collect();
            let mut operators = Vec::new();
            for (j, (skill, params, lits)) in ops.into_iter().enumerate() {
                let params: Vec<Param> = params.into_iter().map(|types| Param { types }).collect();
                let mut op = Operator {
                    name: format!("S{skill}_{j}"),
                    skill: format!("S{skill}"),
                    skill_arity: 0,
                    params,
                    preconditions: BTreeSet::new(),
                    inequalities: BTreeSet::new(),
                    add: BTreeSet::new(),
                    delete: BTreeSet::new(),
                    provenance: vec![],
                };
                let n = op.params.len();
                for (p, args, role) in lits {
                    if n >= 2 && role % 7 == 0 {
                        let (a, b) = (args[0] % n, args[1] % n);
                        if a != b {
                            op.inequalities.insert((a.min(b), a.max(b)));
                        }
                        continue;
                    }
                    if predicates.is_empty() {
                        continue;
                    }
                    let pr = &predicates[p % predicates.len()];
                    if pr.arity() > 0 && n == 0 {
                        continue;
                    }
                    let atom = LiftedAtom { predicate: pr.name.clone(), args: (0..pr.arity()).map(|k| args[k] % n).collect() };
                    match role % 4 {
                        0 => op.add.insert(atom),
                        1 => op.delete.insert(atom),
                        r => op.preconditions.insert(Literal { atom, positive: r == 2 }),
                    };
                }
                operators.push(op);
            }
            let world = World::new(h, objects, vec![]).unwrap();
            Case { world, model: Model::new(predicates, operators) }
        })
}

fn ground_set(model: &Model, world: &World) -> BTreeSet<String> {
    ground_all(model, world)
        .into_iter()
        .map(|g| format!("{} {:?} {:?} {:?} {:?}", g.name, g.args, g.pre, g.add, g.del))
        .collect()
}

fn by_name(ops: &[Operator]) -> Vec<Operator> {
    let mut v = ops.to_vec();
    v.sort_by(|a, b| a.name.cmp(&b.name));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn round_trip_preserves_ground_actions(c in case()) {
        let text = pddl::emit_domain(&c.model, &c.world.hierarchy).unwrap();
        let d = pddl::parse_domain(&text).unwrap();
        prop_assert_eq!(&d.model.predicates, &c.model.predicates);
        prop_assert_eq!(by_name(&d.model.operators), by_name(&c.model.operators));
        let types: BTreeSet<&str> = c.world.hierarchy.types().collect();
        prop_assert_eq!(d.hierarchy.types().collect::<BTreeSet<_>>(), types.clone());
        for t in types {
            prop_assert_eq!(d.hierarchy.parents(t).collect::<Vec<_>>(), c.world.hierarchy.parents(t).collect::<Vec<_>>());
        }
        prop_assert_eq!(ground_set(&d.model, &c.world), ground_set(&c.model, &c.world));
        prop_assert_eq!(pddl::emit_domain(&d.model, &d.hierarchy).unwrap(), text);
    }
}
