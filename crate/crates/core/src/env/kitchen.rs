//! Deterministic burger-kitchen simulator.
//!
//! Stations hold LIFO stacks of items. The gripper holds at most one item.
//! Pick and Place name the station explicitly so every causally relevant
//! object is a skill argument.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Simulator};
use crate::formal::{
    GroundAtom, GroundLiteral, ObjectRef, PlanningTask, Predicate, Skill, SkillInstance, StateHandle, Transition,
    TypeHierarchy, World,
};
use crate::{Error, Result};

pub const CUTTING_BOARD: &str = "cutting_board";
pub const STOVE: &str = "stove";
pub const TABLE: &str = "table";
pub const STATIONS: [&str; 3] = [CUTTING_BOARD, STOVE, TABLE];
/// Each station has its own subtype so learned operators can be typed down
/// to the station a conditional behavior needs.
pub const STATION_TYPES: [(&str, &str); 3] = [(CUTTING_BOARD, "cuttingboard"), (STOVE, "stovetop"), (TABLE, "tabletop")];

/// Every item the kitchen knows, bottom-to-top in the canonical layout.
pub const ITEMS: [(&str, &[&str]); 4] = [
    ("bottom_bun", &["pickupable"]),
    ("top_bun", &["pickupable"]),
    ("lettuce", &["pickupable", "cuttable"]),
    ("patty", &["pickupable", "cookable"]),
];

pub fn hierarchy() -> TypeHierarchy {
    let mut h = TypeHierarchy::new();
    for (t, parents) in [
        ("item", &[][..]),
        ("station", &[][..]),
        ("pickupable", &["item"][..]),
        ("cookable", &["pickupable"][..]),
        ("cuttable", &["pickupable"][..]),
        ("cuttingboard", &["station"][..]),
        ("stovetop", &["station"][..]),
        ("tabletop", &["station"][..]),
    ] {
        h.add(t, parents).expect("static hierarchy");
    }
    h
}

pub fn skills() -> Vec<Skill> {
    alloc::vec![
        Skill::new("Cook", &["cookable", "station"]),
        Skill::new("Cut", &["cuttable", "station"]),
        Skill::new("Pick", &["pickupable", "station"]),
        Skill::new("Place", &["pickupable", "station"]),
        Skill::new("Stack", &["pickupable", "pickupable"]),
    ]
}

/// The hidden fluent vocabulary. Names double as task goal vocabulary.
pub fn fluent_pool() -> Vec<Predicate> {
    alloc::vec![
        Predicate::new("cooked", &["cookable"], "the cookable has been cooked"),
        Predicate::new("cut", &["cuttable"], "the cuttable has been cut into pieces"),
        Predicate::new("gripper_empty", &[], "the robot gripper holds nothing"),
        Predicate::new("holding", &["pickupable"], "the robot gripper holds the item"),
        Predicate::new("on_cutting_board", &["cuttable"], "the cuttable rests in the cutting board stack"),
        Predicate::new("on_station", &["pickupable", "station"], "the item rests in the station's stack"),
        Predicate::new("on_stove", &["cookable"], "the cookable rests in the stove stack"),
        Predicate::new("topmost", &["pickupable"], "nothing is stacked on top of the item"),
    ]
}

/// Hidden simulator state. Fields are declared in key order so the JSON
/// encoding is canonical.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KitchenState {
    pub cooked: BTreeSet<String>,
    pub cut: BTreeSet<String>,
    pub holding: Option<String>,
    /// Station name → items bottom to top.
    pub stacks: BTreeMap<String, Vec<String>>,
}

impl KitchenState {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kitchen state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Environment(alloc::format!("bad kitchen state: {e}")))
    }

    pub fn handle(&self) -> StateHandle {
        StateHandle::from_payload(self.to_json())
    }

    pub fn from_handle(h: &StateHandle) -> Result<Self> {
        Self::from_json(&h.payload)
    }

    pub fn location(&self, item: &str) -> Option<&str> {
        self.stacks.iter().find(|(_, s)| s.iter().any(|o| o == item)).map(|(st, _)| st.as_str())
    }

    pub fn is_topmost(&self, item: &str) -> bool {
        self.stacks.values().any(|s| s.last().is_some_and(|o| o == item))
    }

    fn topmost_on(&self, item: &str, station: &str) -> bool {
        self.stacks.get(station).and_then(|s| s.last()).is_some_and(|o| o == item)
    }

    fn in_stack(&self, item: &str, station: &str) -> bool {
        self.stacks.get(station).is_some_and(|s| s.iter().any(|o| o == item))
    }

    /// Applies the ground-truth rules; returns false (and leaves the state
    /// untouched) when the skill fails.
    pub fn step(&mut self, world: &World, inst: &SkillInstance) -> bool {
        if world.validate_instance(inst).is_err() {
            return false;
        }
        let a = |i: usize| inst.args[i].as_str();
        let empty = self.holding.is_none();
        match inst.skill.as_str() {
            "Pick" if empty && self.topmost_on(a(0), a(1)) => {
                self.stacks.get_mut(a(1)).unwrap().pop();
                self.holding = Some(a(0).to_string());
            }
            "Place" if self.holding.as_deref() == Some(a(0)) => {
                self.stacks.entry(a(1).to_string()).or_default().push(a(0).to_string());
                self.holding = None;
            }
            "Stack" if a(0) != a(1) && self.holding.as_deref() == Some(a(0)) && self.is_topmost(a(1)) => {
                let st = self.location(a(1)).unwrap().to_string();
                self.stacks.get_mut(&st).unwrap().push(a(0).to_string());
                self.holding = None;
            }
            "Cut" if empty && a(1) == CUTTING_BOARD && self.topmost_on(a(0), a(1)) && !self.cut.contains(a(0)) => {
                self.cut.insert(a(0).to_string());
            }
            "Cook" if empty && a(1) == STOVE && self.topmost_on(a(0), a(1)) && !self.cooked.contains(a(0)) => {
                self.cooked.insert(a(0).to_string());
            }
            _ => return false,
        }
        true
    }

    /// Truth of a hidden fluent. Type-invalid atoms are false.
    pub fn fluent(&self, world: &World, atom: &GroundAtom) -> Result<bool> {
        let mut objs = Vec::with_capacity(atom.args.len());
        for a in &atom.args {
            objs.push(world.object(a).ok_or_else(|| Error::config(alloc::format!("unknown object `{a}` in {atom}")))?);
        }
        let pred = fluent_pool()
            .into_iter()
            .find(|p| p.name == atom.predicate)
            .ok_or_else(|| Error::config(alloc::format!("unknown fluent `{}`", atom.predicate)))?;
        if pred.arity() != objs.len() || !objs.iter().zip(&pred.params).all(|(o, t)| o.fits(&world.hierarchy, t)) {
            return Ok(false);
        }
        let x = |i: usize| atom.args[i].as_str();
        Ok(match atom.predicate.as_str() {
            "cooked" => self.cooked.contains(x(0)),
            "cut" => self.cut.contains(x(0)),
            "gripper_empty" => self.holding.is_none(),
            "holding" => self.holding.as_deref() == Some(x(0)),
            "on_cutting_board" => self.in_stack(x(0), CUTTING_BOARD),
            "on_station" => self.in_stack(x(0), x(1)),
            "on_stove" => self.in_stack(x(0), STOVE),
            "topmost" => self.is_topmost(x(0)),
            _ => unreachable!(),
        })
    }

    pub fn literals_hold(&self, world: &World, lits: &[GroundLiteral]) -> Result<bool> {
        for l in lits {
            if self.fluent(world, &l.atom)? != l.positive {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every state reachable in one successful step, with its instance.
    pub fn successors(&self, world: &World) -> Vec<(SkillInstance, KitchenState)> {
        self.successors_among(world, &world.all_instances())
    }

    fn successors_among(&self, world: &World, instances: &[SkillInstance]) -> Vec<(SkillInstance, KitchenState)> {
        let mut out = Vec::new();
        for inst in instances {
            let mut s = self.clone();
            if s.step(world, inst) {
                out.push((inst.clone(), s));
            }
        }
        out
    }
}

/// Breadth-first search over hidden states for a shortest skill sequence
/// reaching `goal`. `None` when the goal is unreachable within `max_depth`.
pub fn shortest_solution(
    world: &World,
    start: &KitchenState,
    goal: &[GroundLiteral],
    max_depth: usize,
) -> Result<Option<Vec<SkillInstance>>> {
    if start.literals_hold(world, goal)? {
        return Ok(Some(Vec::new()));
    }
    let instances = world.all_instances();
    let mut parent: BTreeMap<KitchenState, (KitchenState, SkillInstance)> = BTreeMap::new();
    let mut seen: BTreeSet<KitchenState> = [start.clone()].into();
    let mut queue: VecDeque<(KitchenState, usize)> = [(start.clone(), 0)].into();
    while let Some((s, d)) = queue.pop_front() {
        if d == max_depth {
            continue;
        }
        for (inst, n) in s.successors_among(world, &instances) {
            if !seen.insert(n.clone()) {
                continue;
            }
            parent.insert(n.clone(), (s.clone(), inst));
            if n.literals_hold(world, goal)? {
                let mut plan = Vec::new();
                let mut cur = n;
                while let Some((p, i)) = parent.get(&cur) {
                    plan.push(i.clone());
                    cur = p.clone();
                }
                plan.reverse();
                return Ok(Some(plan));
            }
            queue.push_back((n, d + 1));
        }
    }
    Ok(None)
}

/// All hidden states reachable from `start`.
pub fn reachable_states(world: &World, start: &KitchenState) -> Vec<KitchenState> {
    let instances = world.all_instances();
    let mut seen: BTreeSet<KitchenState> = [start.clone()].into();
    let mut queue: VecDeque<KitchenState> = [start.clone()].into();
    while let Some(s) = queue.pop_front() {
        for (_, n) in s.successors_among(world, &instances) {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen.into_iter().collect()
}

#[derive(Clone, Debug)]
pub struct Kitchen {
    world: World,
    state: KitchenState,
}

impl Default for Kitchen {
    fn default() -> Self {
        Self::new()
    }
}

impl Kitchen {
    pub fn new() -> Self {
        Self::with_items(&ITEMS.map(|(n, _)| n)).expect("full item set")
    }

    /// Kitchen restricted to a subset of `ITEMS`.
    pub fn with_items(items: &[&str]) -> Result<Self> {
        let mut objects = Vec::new();
        for name in items {
            let (n, types) = ITEMS
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::config(alloc::format!("unknown kitchen item `{name}`")))?;
            objects.push(ObjectRef::new(n, types));
        }
        objects.extend(STATION_TYPES.map(|(s, t)| ObjectRef::new(s, &[t])));
        let world = World::new(hierarchy(), objects, skills())?;
        let mut k = Kitchen { world, state: KitchenState::default() };
        k.state = k.layout(0);
        Ok(k)
    }

    fn items(&self) -> Vec<&str> {
        ITEMS
            .iter()
            .map(|(n, _)| *n)
            .filter(|n| self.world.object(n).is_some())
            .collect()
    }

    /// Seed 0: every item on the table in canonical order. Other seeds:
    /// items shuffled across stations.
    pub fn layout(&self, seed: u64) -> KitchenState {
        let mut s = KitchenState::default();
        for st in STATIONS {
            s.stacks.insert(st.to_string(), Vec::new());
        }
        let mut items = self.items();
        if seed == 0 {
            s.stacks.insert(TABLE.to_string(), items.iter().map(|i| i.to_string()).collect());
            return s;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        items.shuffle(&mut rng);
        for i in items {
            let st = STATIONS[rng.random_range(0..STATIONS.len())];
            s.stacks.get_mut(st).unwrap().push(i.to_string());
        }
        s
    }

    pub fn state(&self) -> &KitchenState {
        &self.state
    }

    pub fn set_state(&mut self, s: KitchenState) {
        self.state = s;
    }
}

impl Environment for Kitchen {
    fn world(&self) -> &World {
        &self.world
    }

    fn reset(&mut self, seed: u64) -> Result<StateHandle> {
        self.state = self.layout(seed);
        Ok(self.state.handle())
    }

    fn observe(&self) -> StateHandle {
        self.state.handle()
    }

    fn execute(&mut self, instance: &SkillInstance) -> Result<Transition> {
        let before = self.state.handle();
        let success = self.state.step(&self.world, instance);
        let after = if success { self.state.handle() } else { before.clone() };
        Ok(Transition { id: 0, episode: 0, before, instance: instance.clone(), after, success })
    }

    fn restore(&mut self, state: &StateHandle) -> Result<()> {
        self.state = KitchenState::from_handle(state)?;
        Ok(())
    }

    fn ground_truth_check(&self, task: &PlanningTask) -> Option<Result<bool>> {
        let lits = task.relevant_fluents.as_deref().unwrap_or(&[]);
        Some(self.state.literals_hold(&self.world, lits))
    }
}

impl Simulator for Kitchen {
    fn simulate(&self, state: &StateHandle, instance: &SkillInstance) -> Result<(bool, StateHandle)> {
        let mut s = KitchenState::from_handle(state)?;
        let ok = s.step(&self.world, instance);
        Ok((ok, if ok { s.handle() } else { state.clone() }))
    }
}
