use std::collections::BTreeSet;

use skillsym_core::env::kitchen::{fluent_pool, reachable_states, Kitchen, KitchenState};
use skillsym_core::env::Environment;
use skillsym_core::oracle::*;
use skillsym_core::*;

struct Pair {
    world: World,
    success: Transition,
    failure: Transition,
}

/// Pick(patty, table) from the canonical layout succeeds; Pick(lettuce,
/// table) right after fails because the gripper is occupied.
fn pick_pair() -> Pair {
    let mut k = Kitchen::new();
    let success = k.execute(&SkillInstance::new("Pick", &["patty", "table"])).unwrap();
    let failure = k.execute(&SkillInstance::new("Pick", &["lettuce", "table"])).unwrap();
    assert!(success.success && !failure.success);
    Pair { world: k.world().clone(), success, failure }
}

fn request<'a>(p: &'a Pair, existing: &'a [Predicate], rejected: &'a BTreeSet<String>, kind: ConflictKind) -> ProposalRequest<'a> {
    ProposalRequest {
        world: &p.world,
        skill: p.world.skill("Pick").unwrap(),
        success: &p.success,
        failure: &p.failure,
        existing,
        rejected,
        kind,
    }
}

fn proposer(noise: f64, seed: u64) -> ScriptedProposer<KitchenFluents> {
    ScriptedProposer::new(KitchenFluents { world: Kitchen::new().world().clone() }, kitchen_distractors(), noise, seed)
}

fn name(p: Proposal) -> String {
    match p {
        Proposal::Candidate(p) => p.name,
        Proposal::Exhausted => "<exhausted>".into(),
    }
}

#[test]
fn proposer_walks_the_pool_in_name_order() {
    let pair = pick_pair();
    let none = BTreeSet::new();
    let mut prop = proposer(0.0, 0);
    assert_eq!(name(prop.propose(&request(&pair, &[], &none, ConflictKind::Precondition)).unwrap()), "gripper_empty");

    let ge = vec![Predicate::new("gripper_empty", &[], "")];
    assert_eq!(name(prop.propose(&request(&pair, &ge, &none, ConflictKind::Precondition)).unwrap()), "holding");

    let rejected: BTreeSet<String> = ["holding".to_string(), "on_station".to_string()].into();
    assert_eq!(name(prop.propose(&request(&pair, &ge, &rejected, ConflictKind::Precondition)).unwrap()), "<exhausted>");
}

#[test]
fn noisy_proposer_offers_distractors() {
    let pair = pick_pair();
    let none = BTreeSet::new();
    let mut prop = proposer(1.0, 3);
    let got = name(prop.propose(&request(&pair, &[], &none, ConflictKind::Precondition)).unwrap());
    assert_eq!(got, "is_fragile");
    let distractors: BTreeSet<String> = kitchen_distractors().into_iter().map(|d| d.predicate.name).collect();
    for seed in 0..20 {
        let mut prop = proposer(1.0, seed);
        assert!(distractors.contains(&name(prop.propose(&request(&pair, &[], &none, ConflictKind::Precondition)).unwrap())));
    }
}

#[test]
fn effect_conflicts_contrast_after_states() {
    // Both after-states are the same hidden state (patty in hand), so
    // gripper_empty cannot separate them. holding(?x) does, once read
    // relative to each instance's first argument.
    let pair = pick_pair();
    let none = BTreeSet::new();
    let prop = proposer(0.0, 0);
    let d = prop.discriminator(&request(&pair, &[], &none, ConflictKind::Effect)).unwrap().unwrap();
    assert_eq!(d.name, "holding");
}

#[test]
fn proposals_respect_the_contract() {
    let pair = pick_pair();
    let none = BTreeSet::new();
    for noise in [0.0, 0.5, 1.0] {
        for seed in 0..10 {
            let mut prop = proposer(noise, seed);
            let mut existing = Vec::new();
            while let Proposal::Candidate(p) = prop.propose(&request(&pair, &existing, &none, ConflictKind::Precondition)).unwrap() {
                check_proposal(&request(&pair, &existing, &none, ConflictKind::Precondition), &p, MU_MAX).unwrap();
                existing.push(p);
            }
        }
    }
}

#[test]
fn noiseless_proposer_is_a_pure_function() {
    let pair = pick_pair();
    let none = BTreeSet::new();
    let a: Vec<String> = (0..5).map(|s| name(proposer(0.0, s).propose(&request(&pair, &[], &none, ConflictKind::Precondition)).unwrap())).collect();
    assert!(a.iter().all(|x| x == &a[0]));
}

#[test]
fn classifier_examples() {
    let mut k = Kitchen::new();
    let world = k.world().clone();
    let mut clf = PoolClassifier::new(KitchenFluents { world: world.clone() }, kitchen_distractors());
    let s0 = k.observe();
    assert_eq!(clf.evaluate_batch(&[], &[GroundAtom::new("gripper_empty", &[])], &s0).unwrap(), vec![true]);
    let t = k.execute(&SkillInstance::new("Pick", &["patty", "table"])).unwrap();
    assert_eq!(clf.evaluate_batch(&[], &[GroundAtom::new("holding", &["patty"])], &t.after).unwrap(), vec![true]);
    for s in [&s0, &t.after] {
        assert_eq!(clf.evaluate_batch(&[], &[GroundAtom::new("is_red", &["patty"])], s).unwrap(), vec![false]);
    }
    assert!(clf.evaluate_batch(&[], &[GroundAtom::new("tasty", &["patty"])], &s0).is_err());
}

/// Fluent truth read straight from the hidden state's fields.
fn direct(s: &KitchenState, a: &GroundAtom) -> bool {
    let x = |i: usize| a.args[i].as_str();
    let in_stack = |o: &str, st: &str| s.stacks.get(st).is_some_and(|v| v.iter().any(|i| i == o));
    match a.predicate.as_str() {
        "cooked" => s.cooked.contains(x(0)),
        "cut" => s.cut.contains(x(0)),
        "gripper_empty" => s.holding.is_none(),
        "holding" => s.holding.as_deref() == Some(x(0)),
        "on_cutting_board" => in_stack(x(0), "cutting_board"),
        "on_station" => in_stack(x(0), x(1)),
        "on_stove" => in_stack(x(0), "stove"),
        "topmost" => s.stacks.values().any(|v| v.last().map(String::as_str) == Some(x(0))),
        p => panic!("unexpected {p}"),
    }
}

#[test]
fn classifier_matches_hidden_state_everywhere() {
    let k = Kitchen::new();
    let world = k.world().clone();
    let mut clf = PoolClassifier::new(KitchenFluents { world: world.clone() }, kitchen_distractors());
    let atoms: Vec<GroundAtom> = ground_predicates(&world.hierarchy, &fluent_pool(), &world.objects).unwrap().into_iter().collect();
    let mut checked = 0;
    for s in reachable_states(&world, k.state()) {
        let got = clf.evaluate_batch(&fluent_pool(), &atoms, &s.handle()).unwrap();
        for (a, v) in atoms.iter().zip(got) {
            assert_eq!(v, direct(&s, a), "{a} on {}", s.to_json());
            checked += 1;
        }
    }
    assert_eq!(checked, 2400 * 25);
}
