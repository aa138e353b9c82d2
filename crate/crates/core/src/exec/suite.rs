use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    twin_execute, Accuracy, ExecResult, Status, Storage, StorageKey, TwinError, TwinRun, TxInput,
};
use crate::backend::StorageSlot;
use crate::pipeline::Compilation;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed tx suite: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown storage location `{0}`")]
    UnknownStorage(String),
    #[error("tx {index}: {source}")]
    Twin { index: usize, source: TwinError },
    #[error("accuracy needs a mapping table; compile with mapping enabled")]
    NoTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedStatus {
    Ok,
    Revert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedEvent {
    pub name: String,
    #[serde(default)]
    pub args: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    pub status: ExpectedStatus,
    #[serde(default, rename = "return", skip_serializing_if = "Option::is_none")]
    pub ret: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Named cells (`count`, `hasVoted[7]`) that must hold these values afterwards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<BTreeMap<String, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<ExpectedEvent>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxSpec {
    pub function: String,
    #[serde(default)]
    pub args: Vec<u64>,
    #[serde(default)]
    pub sender: u64,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

impl TxSpec {
    pub fn input(&self) -> TxInput {
        TxInput {
            function: self.function.clone(),
            args: self.args.clone(),
            sender: self.sender,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SuiteFile {
    List(Vec<TxSpec>),
    Full {
        #[serde(default)]
        initial_storage: BTreeMap<String, u64>,
        transactions: Vec<TxSpec>,
    },
}

/// Transactions run in order; storage carries over from one to the next.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TxSuite {
    pub initial_storage: BTreeMap<String, u64>,
    pub transactions: Vec<TxSpec>,
}

impl TxSuite {
    pub fn parse(text: &str) -> Result<Self, SuiteError> {
        Ok(match serde_json::from_str(text)? {
            SuiteFile::List(transactions) => TxSuite {
                transactions,
                ..Default::default()
            },
            SuiteFile::Full {
                initial_storage,
                transactions,
            } => TxSuite {
                initial_storage,
                transactions,
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Deployment state: state initializers, then the suite's overrides.
    pub fn initial(
        &self,
        layout: &[StorageSlot],
        init: &[(u16, u64)],
    ) -> Result<Storage, SuiteError> {
        let mut s = Storage::from_initial(init);
        for (name, v) in &self.initial_storage {
            s.set(parse_location(name, layout)?, *v);
        }
        Ok(s)
    }
}

/// `name` or `name[key]`.
pub fn parse_location(name: &str, layout: &[StorageSlot]) -> Result<StorageKey, SuiteError> {
    let unknown = || SuiteError::UnknownStorage(name.to_string());
    let (var, key) = match name.split_once('[') {
        Some((v, rest)) => {
            let k = rest.strip_suffix(']').ok_or_else(unknown)?;
            (v, Some(parse_word(k).ok_or_else(unknown)?))
        }
        None => (name, None),
    };
    let slot = layout
        .iter()
        .position(|s| s.name == var && s.mapping == key.is_some())
        .ok_or_else(unknown)?;
    Ok(StorageKey {
        slot: slot as u16,
        key,
    })
}

fn parse_word(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16).ok(),
        None => s.parse().ok(),
    }
}

pub fn location_name(k: StorageKey, layout: &[StorageSlot]) -> String {
    let var = layout
        .get(k.slot as usize)
        .map_or_else(|| format!("slot{}", k.slot), |s| s.name.clone());
    match k.key {
        Some(key) => format!("{var}[{key}]"),
        None => var,
    }
}

pub fn named_storage(s: &Storage, layout: &[StorageSlot]) -> BTreeMap<String, u64> {
    s.iter()
        .map(|(k, v)| (location_name(*k, layout), *v))
        .collect()
}

/// Human-readable differences between an outcome and its expectation.
pub fn check_expectation(
    e: &Expectation,
    r: &ExecResult,
    layout: &[StorageSlot],
) -> Result<Vec<String>, SuiteError> {
    let mut out = Vec::new();
    match (&r.status, e.status) {
        (Status::Returned(v), ExpectedStatus::Ok) => {
            if let Some(want) = e.ret {
                if *v != Some(want) {
                    out.push(format!("returned {v:?}, expected {want}"));
                }
            }
        }
        (Status::Reverted(msg), ExpectedStatus::Revert) => {
            if let Some(want) = &e.reason {
                if msg != want {
                    out.push(format!("reverted \"{msg}\", expected \"{want}\""));
                }
            }
        }
        (got, want) => out.push(format!("status {got}, expected {want:?}")),
    }
    for (name, want) in e.storage.iter().flatten() {
        let got = r.storage.get(parse_location(name, layout)?);
        if got != *want {
            out.push(format!("{name} = {got}, expected {want}"));
        }
    }
    if let Some(want) = &e.events {
        let got: Vec<ExpectedEvent> = r
            .events
            .iter()
            .map(|ev| ExpectedEvent {
                name: ev.name.clone(),
                args: ev.args.clone(),
            })
            .collect();
        if &got != want {
            out.push(format!("events {got:?}, expected {want:?}"));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TxOutcome {
    pub index: usize,
    pub run: TwinRun,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteRun {
    pub outcomes: Vec<TxOutcome>,
    pub accuracy: Accuracy,
    /// External functions that no transaction calls.
    pub coverage_gaps: Vec<String>,
}

impl SuiteRun {
    pub fn discrepancies(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.run.agrees()).count()
    }

    pub fn expectation_failures(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| !o.mismatches.is_empty())
            .count()
    }
}

pub fn run_suite(c: &Compilation, suite: &TxSuite) -> Result<SuiteRun, SuiteError> {
    let table = c.table.as_ref().ok_or(SuiteError::NoTable)?;
    let layout = &c.program.storage;
    let mut storage = suite.initial(layout, &c.program.initial_storage)?;
    let mut out = SuiteRun::default();
    for (index, spec) in suite.transactions.iter().enumerate() {
        let run = twin_execute(
            &c.unit,
            &c.registry,
            &c.program,
            table,
            &storage,
            &spec.input(),
        )
        .map_err(|source| SuiteError::Twin { index, source })?;
        let mismatches = match &spec.expect {
            Some(e) => check_expectation(e, &run.vm, layout)?,
            None => Vec::new(),
        };
        out.accuracy.add(&run.accuracy);
        storage = run.vm.storage.clone();
        out.outcomes.push(TxOutcome {
            index,
            run,
            mismatches,
        });
    }
    for f in c.program.functions.iter().filter(|f| f.external) {
        let hit = suite.transactions.iter().any(|t| {
            c.program
                .find_function(&spec_with_arity(&t.function, t.args.len()))
                .is_some_and(|g| g == f)
        });
        if !hit {
            out.coverage_gaps
                .push(format!("{}.{}", f.contract, f.key()));
        }
    }
    Ok(out)
}

fn spec_with_arity(f: &str, argc: usize) -> String {
    if f.contains('/') {
        f.to_string()
    } else {
        format!("{f}/{argc}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::PassConfig;
    use crate::pipeline::compile;

    const SRC: &str = "contract V {
    mapping(address => bool) hasVoted;
    uint count = 5;
    event Voted(address who);
    function vote() external {
        require(!hasVoted[msg.sender], \"Already voted\");
        hasVoted[msg.sender] = true;
        count = count + 1;
        emit Voted(msg.sender);
    }
    function peek() external returns (uint) { return count; }
}
";

    #[test]
    fn suite_runs_with_carried_storage() {
        let c = compile(SRC, "v.msol", &PassConfig::default()).unwrap();
        let suite = TxSuite::parse(
            r#"{"initial_storage": {"hasVoted[9]": 1}, "transactions": [
                {"function": "vote", "sender": 7, "expect": {"status": "ok",
                    "storage": {"count": 6, "hasVoted[7]": 1}, "events": [{"name": "Voted", "args": [7]}]}},
                {"function": "vote", "sender": 7, "expect": {"status": "revert", "reason": "Already voted"}},
                {"function": "vote", "sender": 9, "expect": {"status": "revert", "reason": "Already voted"}}
            ]}"#,
        )
        .unwrap();
        let r = run_suite(&c, &suite).unwrap();
        assert_eq!(r.discrepancies(), 0);
        assert_eq!(
            r.expectation_failures(),
            0,
            "{:?}",
            r.outcomes.iter().map(|o| &o.mismatches).collect::<Vec<_>>()
        );
        assert_eq!(r.coverage_gaps, vec!["V.peek/0".to_string()]);
    }

    #[test]
    fn list_form_and_mismatch_reporting() {
        let c = compile(SRC, "v.msol", &PassConfig::none()).unwrap();
        let suite =
            TxSuite::parse(r#"[{"function": "peek", "expect": {"status": "ok", "return": 4}}]"#)
                .unwrap();
        let r = run_suite(&c, &suite).unwrap();
        assert_eq!(
            r.outcomes[0].mismatches,
            vec!["returned Some(5), expected 4".to_string()]
        );
        assert!(matches!(
            parse_location("nope", &c.program.storage),
            Err(SuiteError::UnknownStorage(_))
        ));
        let k = parse_location("hasVoted[0x10]", &c.program.storage).unwrap();
        assert_eq!(location_name(k, &c.program.storage), "hasVoted[16]");
    }
}
