pub mod config;
pub mod fm;
pub mod io;
pub mod pddl;
pub mod run;
pub mod template;
