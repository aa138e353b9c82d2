use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::StatementId;

/// A storage cell: a plain state variable (`key == None`) or one mapping entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StorageKey {
    pub slot: u16,
    pub key: Option<u64>,
}

/// Contract storage. Zero-valued cells are never stored, so equal states compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Storage {
    cells: BTreeMap<StorageKey, u64>,
}

impl Storage {
    pub fn get(&self, k: StorageKey) -> u64 {
        self.cells.get(&k).copied().unwrap_or(0)
    }

    pub fn set(&mut self, k: StorageKey, v: u64) {
        if v == 0 {
            self.cells.remove(&k);
        } else {
            self.cells.insert(k, v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StorageKey, &u64)> {
        self.cells.iter()
    }

    pub fn from_initial(init: &[(u16, u64)]) -> Self {
        let mut s = Storage::default();
        for (slot, v) in init {
            s.set(
                StorageKey {
                    slot: *slot,
                    key: None,
                },
                *v,
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event: u16,
    pub name: String,
    pub args: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Status {
    Returned(Option<u64>),
    Reverted(String),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Returned(None) => write!(f, "ok"),
            Status::Returned(Some(v)) => write!(f, "ok ({v})"),
            Status::Reverted(m) => write!(f, "revert \"{m}\""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecResult {
    pub status: Status,
    pub storage: Storage,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxInput {
    pub function: String,
    pub args: Vec<u64>,
    pub sender: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("no external function matches `{0}`")]
    UnknownFunction(String),
    #[error("`{function}` takes {expected} arguments, got {got}")]
    ArityMismatch {
        function: String,
        expected: usize,
        got: usize,
    },
    #[error("jump at {offset:#06x} to {target:#x}, which is not a JUMPDEST")]
    InvalidJump { offset: u32, target: u64 },
    #[error("stack underflow at {0:#06x}")]
    StackUnderflow(u32),
    #[error("stack overflow at {0:#06x}")]
    StackOverflow(u32),
    #[error("execution ran off the code or hit undecodable bytes at {0:#06x}")]
    BadCode(u32),
}

/// Statement-level trace of the reference interpreter.
pub type StatementTrace = Vec<StatementId>;
