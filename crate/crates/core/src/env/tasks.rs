//! Kitchen evaluation suite: easy (optimal ≤ 7 steps), hard (≤ 15) and
//! impossible tasks. Goals use the hidden fluent vocabulary.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::kitchen::{Kitchen, KitchenState, STATIONS};
use crate::formal::{Goal, GroundAtom, GroundLiteral, PlanningTask, TaskTag};

fn layout(stacks: [&[&str]; 3]) -> KitchenState {
    let mut s = KitchenState::default();
    for (st, items) in STATIONS.iter().zip(stacks) {
        s.stacks.insert(st.to_string(), items.iter().map(|i| i.to_string()).collect());
    }
    s
}

/// Named layouts; stacks listed as [cutting_board, stove, table], bottom first.
pub fn layouts() -> Vec<(&'static str, KitchenState)> {
    alloc::vec![
        ("l0", layout([&[], &[], &["bottom_bun", "top_bun", "lettuce", "patty"]])),
        ("l1", layout([&["patty"], &["lettuce"], &["bottom_bun", "top_bun"]])),
        ("l2", layout([&[], &[], &["top_bun", "patty", "lettuce", "bottom_bun"]])),
        ("l3", layout([&["lettuce"], &["bottom_bun", "top_bun"], &["patty"]])),
        ("l4", layout([&["bottom_bun"], &["top_bun"], &["lettuce", "patty"]])),
    ]
}

fn parse_goal(goal: &str) -> Vec<GroundLiteral> {
    goal.split('&')
        .map(|l| {
            let l = l.trim();
            let (positive, body) = match l.strip_prefix('!') {
                Some(b) => (false, b),
                None => (true, l),
            };
            GroundLiteral { atom: GroundAtom::parse(body).expect("static goal"), positive }
        })
        .collect()
}

const EASY: [(&str, &str); 20] = [
    ("l0", "holding(patty)"),
    ("l0", "cooked(patty)"),
    ("l0", "on_station(patty, stove)"),
    ("l0", "cut(lettuce)"),
    ("l0", "on_station(lettuce, cutting_board)"),
    ("l0", "holding(lettuce)"),
    ("l0", "cooked(patty) & cut(lettuce)"),
    ("l1", "cooked(patty)"),
    ("l1", "cut(lettuce)"),
    ("l1", "on_station(lettuce, table)"),
    ("l1", "topmost(bottom_bun)"),
    ("l2", "holding(bottom_bun)"),
    ("l2", "on_station(lettuce, cutting_board)"),
    ("l3", "cut(lettuce)"),
    ("l3", "cooked(patty)"),
    ("l3", "cooked(patty) & cut(lettuce)"),
    ("l4", "cooked(patty)"),
    ("l4", "on_station(top_bun, table)"),
    ("l4", "cut(lettuce)"),
    ("l4", "on_station(patty, stove) & on_station(lettuce, cutting_board)"),
];

const HARD: [(&str, &str); 10] = [
    ("l0", "cooked(patty) & cut(lettuce) & on_station(patty, table) & on_station(lettuce, table)"),
    ("l0", "cooked(patty) & cut(lettuce) & on_station(patty, table) & topmost(top_bun)"),
    ("l1", "cooked(patty) & cut(lettuce) & on_station(patty, table) & on_station(lettuce, table)"),
    ("l2", "cooked(patty) & cut(lettuce)"),
    ("l2", "cooked(patty) & cut(lettuce) & on_station(patty, table) & gripper_empty()"),
    ("l3", "cooked(patty) & cut(lettuce) & on_station(bottom_bun, table) & on_station(patty, table)"),
    ("l4", "cooked(patty) & cut(lettuce) & on_station(patty, table) & on_station(lettuce, table) & gripper_empty()"),
    ("l4", "cooked(patty) & cut(lettuce) & on_station(bottom_bun, table) & on_station(top_bun, table)"),
    ("l2", "on_station(bottom_bun, stove) & on_station(top_bun, cutting_board) & cooked(patty)"),
    ("l0", "cooked(patty) & cut(lettuce) & on_station(bottom_bun, stove) & on_station(top_bun, stove)"),
];

const IMPOSSIBLE: [(&str, &str); 5] = [
    ("l0", "cut(patty)"),
    ("l0", "cooked(lettuce)"),
    ("l1", "cooked(top_bun)"),
    ("l0", "holding(patty) & holding(lettuce)"),
    ("l3", "gripper_empty() & holding(patty)"),
];

/// The full kitchen suite (20 easy, 10 hard, 5 impossible).
pub fn kitchen_suite(kitchen: &Kitchen) -> Vec<PlanningTask> {
    use crate::env::Environment;
    let layouts = layouts();
    let mut out = Vec::new();
    for (tag, list) in [(TaskTag::Easy, &EASY[..]), (TaskTag::Hard, &HARD[..]), (TaskTag::Impossible, &IMPOSSIBLE[..])] {
        for (i, (l, goal)) in list.iter().enumerate() {
            let state = &layouts.iter().find(|(n, _)| n == l).unwrap().1;
            let lits = parse_goal(goal);
            out.push(PlanningTask {
                name: alloc::format!("{}_{:02}", tag.as_str(), i),
                tag,
                initial: state.handle(),
                objects: kitchen.world().objects.clone(),
                goal: Goal::Literals(lits.clone()),
                relevant_fluents: Some(lits),
            });
        }
    }
    out
}

pub fn describe(task: &PlanningTask) -> String {
    match &task.goal {
        Goal::Literals(l) => l
            .iter()
            .map(|l| if l.positive { l.atom.to_string() } else { alloc::format!("!{}", l.atom) })
            .collect::<Vec<_>>()
            .join(" & "),
        Goal::State(s) => alloc::format!("state {:016x}", s.id),
    }
}
