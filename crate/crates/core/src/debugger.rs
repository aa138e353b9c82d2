//! Source-level traces of transactions replayed against a compiled artifact.

use serde::Serialize;
use thiserror::Error;

use crate::artifact::{Artifact, ArtifactError};
use crate::exec::{
    check_expectation, reconstruct, ExecError, Status, SuiteError, TraceError, TraceRecord,
    TxSuite, Vm,
};
use crate::frontend::{analyze, build_statement_registry, FrontendError};

#[derive(Debug, Error)]
pub enum DebugError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("tx {index}: {source}")]
    Exec { index: usize, source: ExecError },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("tx index {index} out of range; the suite has {len} transactions")]
    Index { index: usize, len: usize },
}

/// A reconstructed statement, with its location and text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceLine {
    pub statement: u32,
    pub span: String,
    pub line: usize,
    pub column: usize,
    pub text: String,
    pub zk_constraint: Option<u32>,
    pub instructions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxTrace {
    pub index: usize,
    pub function: String,
    pub status: Status,
    pub trace: Vec<TraceLine>,
    /// On revert: the statement that was executing.
    pub failing: Option<TraceLine>,
    pub unmapped_instructions: usize,
    pub mismatches: Vec<String>,
}

fn line(r: &TraceRecord, source: &str) -> TraceLine {
    let (line, column) = r.span.line_col(source);
    TraceLine {
        statement: r.statement,
        span: r.span.to_string(),
        line,
        column,
        text: r
            .span
            .snippet(source)
            .lines()
            .next()
            .unwrap_or("")
            .trim()
            .to_string(),
        zk_constraint: r.zk_constraint,
        instructions: r.instructions,
    }
}

/// Replays the suite on the artifact's bytecode (storage carries over) and lifts each
/// transaction's offset trace through the artifact's own mapping table.
pub fn trace_transactions(
    a: &Artifact,
    suite: &TxSuite,
    only: Option<usize>,
) -> Result<Vec<TxTrace>, DebugError> {
    if let Some(index) = only {
        if index >= suite.transactions.len() {
            return Err(DebugError::Index {
                index,
                len: suite.transactions.len(),
            });
        }
    }
    let src = a.source()?;
    let unit = analyze(&src.content, 0)?;
    let reg = build_statement_registry(&unit);
    let program = a.program()?;
    let table = a.table();
    let vm = Vm::new(&program).map_err(|source| DebugError::Exec { index: 0, source })?;
    let mut storage = suite.initial(&program.storage, &program.initial_storage)?;
    let mut out = Vec::new();
    for (index, spec) in suite.transactions.iter().enumerate() {
        if only.is_some_and(|i| index > i) {
            break;
        }
        let run = vm
            .run(&storage, &spec.input())
            .map_err(|source| DebugError::Exec { index, source })?;
        if only.is_none_or(|i| i == index) {
            let rec = reconstruct(&table, &reg, program.code.len(), &run.offsets)?;
            let trace: Vec<TraceLine> = rec.records.iter().map(|r| line(r, &src.content)).collect();
            let failing = match run.result.status {
                Status::Reverted(_) => trace.last().cloned(),
                Status::Returned(_) => None,
            };
            let mismatches = match &spec.expect {
                Some(e) => check_expectation(e, &run.result, &program.storage)?,
                None => Vec::new(),
            };
            out.push(TxTrace {
                index,
                function: spec.function.clone(),
                status: run.result.status.clone(),
                trace,
                failing,
                unmapped_instructions: rec.unmapped,
                mismatches,
            });
        }
        storage = run.result.storage;
    }
    Ok(out)
}

pub fn render_trace(t: &TxTrace) -> String {
    let mut s = format!("tx {} {} -> {}\n", t.index, t.function, t.status);
    for l in &t.trace {
        let zk = l
            .zk_constraint
            .map(|k| format!("  [zk {k}]"))
            .unwrap_or_default();
        s.push_str(&format!(
            "  {:>4}:{:<3} {:<14} {}{}\n",
            l.line, l.column, l.span, l.text, zk
        ));
    }
    if let (Some(f), Status::Reverted(msg)) = (&t.failing, &t.status) {
        let zk = f
            .zk_constraint
            .map(|k| format!(", zk constraint {k}"))
            .unwrap_or_default();
        s.push_str(&format!(
            "  reverted \"{msg}\" at {}:{} ({}{zk}): {}\n",
            f.line, f.column, f.span, f.text
        ));
    }
    for m in &t.mismatches {
        s.push_str(&format!("  expectation: {m}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::PassConfig;
    use crate::pipeline::compile;

    #[test]
    fn revert_names_the_require() {
        let src = "contract C { uint x; function f(uint a) external { x = a; require(a > 3, \"too small\"); } }";
        let c = compile(src, "c.msol", &PassConfig::default()).unwrap();
        let a = Artifact::from_compilation(&c, false);
        let suite =
            TxSuite::parse(r#"[{"function": "f", "args": [9]}, {"function": "f", "args": [1]}]"#)
                .unwrap();
        let all = trace_transactions(&a, &suite, None).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all[0].failing.is_none());
        let t = trace_transactions(&a, &suite, Some(1)).unwrap();
        assert_eq!(t.len(), 1);
        let f = t[0].failing.as_ref().unwrap();
        assert!(f.text.starts_with("require(a > 3"));
        assert_eq!(f.zk_constraint, Some(1));
        assert!(render_trace(&t[0]).contains("reverted \"too small\""));
        assert!(matches!(
            trace_transactions(&a, &suite, Some(2)),
            Err(DebugError::Index { .. })
        ));
    }
}
