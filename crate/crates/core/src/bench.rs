//! Corpus-level accuracy and overhead reports.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::Fixture;
use crate::exec::{
    measure_overhead, run_suite, Accuracy, OverheadError, OverheadReport, SuiteError,
};
use crate::optimizer::{PassConfig, PassKind};
use crate::pipeline::{compile, CompileError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{name}: {source}")]
    Compile { name: String, source: CompileError },
    #[error("{name}: {source}")]
    Suite { name: String, source: SuiteError },
    #[error(transparent)]
    Overhead(#[from] OverheadError),
}

/// Named pass configurations the corpus is checked under.
pub fn config_matrix() -> Vec<(String, PassConfig)> {
    let mut out = vec![("no-opt".to_string(), PassConfig::none())];
    for p in [
        PassKind::ConstFold,
        PassKind::Dce,
        PassKind::Reorder,
        PassKind::CfgRestructure,
        PassKind::Inline,
        PassKind::Unroll,
        PassKind::ZkInstrument,
    ] {
        out.push((p.name().to_string(), PassConfig::only(&[p])));
    }
    out.push(("default".to_string(), PassConfig::default()));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureAccuracy {
    pub name: String,
    pub accuracy_pct: f64,
    pub statement_pct: f64,
    pub unmapped_pct: f64,
    pub counts: Accuracy,
    pub transactions: usize,
    /// Transactions where the interpreter and the VM disagree.
    pub discrepancies: usize,
    pub expectation_failures: Vec<String>,
    pub coverage_gaps: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AccuracyReport {
    pub config: String,
    pub fixtures: Vec<FixtureAccuracy>,
    pub aggregate_pct: f64,
    pub aggregate: Accuracy,
    /// How matches are decided.
    pub oracle: &'static str,
}

impl AccuracyReport {
    pub fn min_fixture_pct(&self) -> f64 {
        self.fixtures
            .iter()
            .map(|f| f.accuracy_pct)
            .fold(100.0, f64::min)
    }

    pub fn discrepancies(&self) -> usize {
        self.fixtures.iter().map(|f| f.discrepancies).sum()
    }

    pub fn expectation_failures(&self) -> usize {
        self.fixtures
            .iter()
            .map(|f| f.expectation_failures.len())
            .sum()
    }
}

pub const ORACLE: &str = "twin execution: reference interpreter statement trace vs VM trace lifted through the mapping table, aligned by LCS";

pub fn fixture_accuracy(fx: &Fixture, config: &PassConfig) -> Result<FixtureAccuracy, BenchError> {
    let c = compile(&fx.source, &fx.file_name(), config).map_err(|source| BenchError::Compile {
        name: fx.name.clone(),
        source,
    })?;
    let run = run_suite(&c, &fx.suite).map_err(|source| BenchError::Suite {
        name: fx.name.clone(),
        source,
    })?;
    let expectation_failures = run
        .outcomes
        .iter()
        .flat_map(|o| {
            o.mismatches
                .iter()
                .map(move |m| format!("tx {}: {m}", o.index))
        })
        .collect();
    Ok(FixtureAccuracy {
        name: fx.name.clone(),
        accuracy_pct: 100.0 * run.accuracy.ratio(),
        statement_pct: 100.0 * run.accuracy.statement_ratio(),
        unmapped_pct: 100.0 * run.accuracy.unmapped_ratio(),
        counts: run.accuracy,
        transactions: run.outcomes.len(),
        discrepancies: run.discrepancies(),
        expectation_failures,
        coverage_gaps: run.coverage_gaps,
    })
}

pub fn measure_accuracy(
    fixtures: &[Fixture],
    label: &str,
    config: &PassConfig,
) -> Result<AccuracyReport, BenchError> {
    let per: Vec<FixtureAccuracy> = fixtures
        .par_iter()
        .map(|fx| fixture_accuracy(fx, config))
        .collect::<Result<_, _>>()?;
    let mut aggregate = Accuracy::default();
    for f in &per {
        aggregate.add(&f.counts);
    }
    Ok(AccuracyReport {
        config: label.to_string(),
        aggregate_pct: 100.0 * aggregate.ratio(),
        aggregate,
        fixtures: per,
        oracle: ORACLE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub accuracy: Vec<AccuracyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overhead: Option<OverheadReport>,
}

/// Accuracy under no-opt and default, plus overhead under the default passes.
pub fn bench(fixtures: &[Fixture], reps: usize, timing: bool) -> Result<BenchReport, BenchError> {
    let accuracy = vec![
        measure_accuracy(fixtures, "no-opt", &PassConfig::none())?,
        measure_accuracy(fixtures, "default", &PassConfig::default())?,
    ];
    let overhead = if timing {
        let sources: Vec<(String, String)> = fixtures
            .iter()
            .map(|f| (f.file_name(), f.source.clone()))
            .collect();
        Some(measure_overhead(&sources, &PassConfig::default(), reps)?)
    } else {
        None
    };
    Ok(BenchReport { accuracy, overhead })
}

pub fn render_accuracy(r: &AccuracyReport) -> String {
    let mut s = format!("accuracy [{}]\n", r.config);
    s.push_str(&format!(
        "{:<20} {:>9} {:>9} {:>9} {:>5} {:>5}\n",
        "fixture", "instr%", "stmt%", "unmap%", "txs", "diff"
    ));
    for f in &r.fixtures {
        s.push_str(&format!(
            "{:<20} {:>9.2} {:>9.2} {:>9.2} {:>5} {:>5}\n",
            f.name,
            f.accuracy_pct,
            f.statement_pct,
            f.unmapped_pct,
            f.transactions,
            f.discrepancies
        ));
        for e in &f.expectation_failures {
            s.push_str(&format!("  expectation: {e}\n"));
        }
        for g in &f.coverage_gaps {
            s.push_str(&format!("  warning: {g} never called\n"));
        }
    }
    s.push_str(&format!(
        "aggregate {:.2}% ({} of {} mapped instruction events)\n",
        r.aggregate_pct, r.aggregate.matched_instructions, r.aggregate.mapped_instructions
    ));
    s
}

pub fn render_overhead(r: &OverheadReport) -> String {
    let mut s = format!("overhead (median of {} reps)\n", r.repetitions);
    s.push_str(&format!(
        "{:<22} {:>10} {:>10} {:>9} {:>6}\n",
        "source", "off_us", "on_us", "over%", "same"
    ));
    for o in &r.sources {
        s.push_str(&format!(
            "{:<22} {:>10.1} {:>10.1} {:>9.2} {:>6}{}\n",
            o.name,
            o.off_us,
            o.on_us,
            o.overhead_pct,
            o.bytecode_identical,
            if o.clock_resolution_warning {
                "  (below clock resolution)"
            } else {
                ""
            }
        ));
    }
    let sh = &r.stage_shares_pct;
    s.push_str(&format!(
        "aggregate {:.2}%; stage split frontend+lowering {:.1}%, passes {:.1}%, backend+mapgen {:.1}%\n",
        r.aggregate_pct, sh.frontend_lowering_us, sh.passes_us, sh.backend_mapgen_us
    ));
    s
}
