//! Learning symbolic models of black-box, object-typed skills.
//!
//! The crate is `no_std` (with `alloc`). Everything that touches files,
//! sockets or the process environment lives in the `skillsym` crate.

#![no_std]

extern crate alloc;

pub mod env;
pub mod error;
pub mod explore;
pub mod formal;
pub mod invent;
pub mod learn;
pub mod operators;
pub mod oracle;
pub mod plan;
pub mod theory;

pub use error::{Error, Result};
pub use formal::*;
