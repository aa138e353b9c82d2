//! SSA intermediate representation.

pub mod dom;
pub mod dump;
pub mod ssa_check;
pub mod types;

pub use dom::DomTree;
pub use dump::{dump_instr, dump_module};
pub use ssa_check::{check_module, SsaError};
pub use types::*;
