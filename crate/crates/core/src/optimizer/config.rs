use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassKind {
    ConstFold,
    Dce,
    Inline,
    Unroll,
    Reorder,
    CfgRestructure,
    ZkInstrument,
}

impl PassKind {
    pub const ALL: [PassKind; 7] = [
        PassKind::ConstFold,
        PassKind::Dce,
        PassKind::Inline,
        PassKind::Unroll,
        PassKind::Reorder,
        PassKind::CfgRestructure,
        PassKind::ZkInstrument,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PassKind::ConstFold => "const_fold",
            PassKind::Dce => "dce",
            PassKind::Inline => "inline",
            PassKind::Unroll => "unroll",
            PassKind::Reorder => "reorder",
            PassKind::CfgRestructure => "cfg_restructure",
            PassKind::ZkInstrument => "zk_instrument",
        }
    }
}

impl fmt::Display for PassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown pass `{0}`")]
    UnknownPass(String),
    #[error("pass `{0}` listed twice")]
    Duplicate(PassKind),
    #[error("zk_instrument must be the last pass")]
    ZkNotLast,
}

impl FromStr for PassKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PassKind::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| ConfigError::UnknownPass(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassConfig {
    pub passes: Vec<PassKind>,
    pub unroll_max_trips: u32,
    pub inline_max_instrs: usize,
    pub mapping_enabled: bool,
}

impl Default for PassConfig {
    fn default() -> Self {
        PassConfig {
            passes: vec![
                PassKind::Inline,
                PassKind::ConstFold,
                PassKind::Unroll,
                PassKind::Dce,
                PassKind::CfgRestructure,
                PassKind::Reorder,
                PassKind::ZkInstrument,
            ],
            unroll_max_trips: 8,
            inline_max_instrs: 40,
            mapping_enabled: true,
        }
    }
}

impl PassConfig {
    pub fn none() -> Self {
        PassConfig {
            passes: Vec::new(),
            ..Default::default()
        }
    }

    pub fn only(passes: &[PassKind]) -> Self {
        PassConfig {
            passes: passes.to_vec(),
            ..Default::default()
        }
    }

    /// Parses a comma-separated pass list such as `inline,const_fold,dce`.
    pub fn parse_list(list: &str) -> Result<Vec<PassKind>, ConfigError> {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (i, p) in self.passes.iter().enumerate() {
            if self.passes[..i].contains(p) {
                return Err(ConfigError::Duplicate(*p));
            }
            if *p == PassKind::ZkInstrument && i + 1 != self.passes.len() {
                return Err(ConfigError::ZkNotLast);
            }
        }
        Ok(())
    }
}
