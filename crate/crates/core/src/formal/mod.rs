//! Types, objects, skills, predicates, abstraction and operators.

mod atom;
mod operator;
mod skill;
mod task;
mod types;

pub use atom::*;
pub use operator::*;
pub use skill::*;
pub use task::*;
pub use types::*;
