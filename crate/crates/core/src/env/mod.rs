//! Environment contract and implementations.

pub mod kitchen;
pub mod tasks;
pub mod transcript;

use crate::formal::{PlanningTask, SkillInstance, StateHandle, Transition, World};
use crate::{Error, Result};

pub use kitchen::{Kitchen, KitchenState};
pub use transcript::{Transcript, TranscriptEnv, TranscriptStep};

/// A black-box world the learner can act in.
///
/// `execute` must be deterministic given the hidden state and the instance,
/// and a failed execution must leave the hidden state unchanged.
pub trait Environment {
    fn world(&self) -> &World;
    fn reset(&mut self, seed: u64) -> Result<StateHandle>;
    fn observe(&self) -> StateHandle;
    fn execute(&mut self, instance: &SkillInstance) -> Result<Transition>;

    /// Loads a previously observed state.
    fn restore(&mut self, _state: &StateHandle) -> Result<()> {
        Err(Error::Environment("restore is not supported".into()))
    }

    /// Ground-truth goal test, when the environment can provide one.
    fn ground_truth_check(&self, _task: &PlanningTask) -> Option<Result<bool>> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for &mut E {
    fn world(&self) -> &World {
        (**self).world()
    }
    fn reset(&mut self, seed: u64) -> Result<StateHandle> {
        (**self).reset(seed)
    }
    fn observe(&self) -> StateHandle {
        (**self).observe()
    }
    fn execute(&mut self, instance: &SkillInstance) -> Result<Transition> {
        (**self).execute(instance)
    }
    fn restore(&mut self, state: &StateHandle) -> Result<()> {
        (**self).restore(state)
    }
    fn ground_truth_check(&self, task: &PlanningTask) -> Option<Result<bool>> {
        (**self).ground_truth_check(task)
    }
}

/// Side-effect-free model of an environment's dynamics, used by scripted
/// sequence generators as a stand-in for commonsense about the skills.
pub trait Simulator {
    fn simulate(&self, state: &StateHandle, instance: &SkillInstance) -> Result<(bool, StateHandle)>;
}

/// SplitMix64 step, used to derive per-episode seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x6a09_e667_f3bc_c909);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
