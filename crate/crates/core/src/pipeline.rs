//! End-to-end compilation driver with per-stage timing.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::backend::{emit, BytecodeProgram, EmitError, OffsetLog};
use crate::frontend::{
    analyze, build_statement_registry, FrontendError, ResolvedUnit, StatementRegistry,
};
use crate::ir::IrModule;
use crate::lowering::{lower, LowerOptions, TypeError};
use crate::mapgen::{
    build_table, validate_structural, validate_syntactic, MapgenError, ValidationReport,
};
use crate::model::{FileInfo, MappingTable};
use crate::optimizer::{run_pipeline, PassConfig, PassReport, PipelineError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Mapgen(#[from] MapgenError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub frontend_lowering: Duration,
    pub passes: Duration,
    pub backend_mapgen: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.frontend_lowering + self.passes + self.backend_mapgen
    }
}

#[derive(Debug, Clone)]
pub struct Compilation {
    pub file: FileInfo,
    pub source: String,
    pub unit: ResolvedUnit,
    pub registry: StatementRegistry,
    pub module: IrModule,
    pub report: PassReport,
    pub program: BytecodeProgram,
    pub log: OffsetLog,
    /// Absent when mapping is disabled.
    pub table: Option<MappingTable>,
    pub config: PassConfig,
    pub timings: StageTimings,
}

impl Compilation {
    /// Runs both validators; an absent table validates trivially.
    pub fn validate(&self) -> ValidationReport {
        let Some(t) = &self.table else {
            return ValidationReport::default();
        };
        validate_syntactic(t).merge(validate_structural(
            t,
            &self.registry,
            &self.module,
            &self.program,
        ))
    }
}

pub fn compile(source: &str, name: &str, config: &PassConfig) -> Result<Compilation, CompileError> {
    let t0 = Instant::now();
    let unit = analyze(source, 0)?;
    let registry = build_statement_registry(&unit);
    let module = lower(
        &unit,
        &registry,
        LowerOptions {
            provenance: config.mapping_enabled,
        },
    )?;
    let t1 = Instant::now();
    let out = run_pipeline(module, config, &registry.spans)?;
    let t2 = Instant::now();
    let (program, log) = emit(&out.module)?;
    let file = FileInfo {
        name: name.to_string(),
        length: source.len() as u32,
    };
    let table = if config.mapping_enabled {
        Some(build_table(&log, &out.module, vec![file.clone()])?)
    } else {
        None
    };
    let t3 = Instant::now();
    Ok(Compilation {
        file,
        source: source.to_string(),
        unit,
        registry,
        module: out.module,
        report: out.report,
        program,
        log,
        table,
        config: config.clone(),
        timings: StageTimings {
            frontend_lowering: t1 - t0,
            passes: t2 - t1,
            backend_mapgen: t3 - t2,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "contract C { uint x; function f(uint a) external { x = a + 1; } }";

    #[test]
    fn mapping_toggle_keeps_bytecode() {
        let on = compile(SRC, "c.sol", &PassConfig::default()).unwrap();
        let off = compile(
            SRC,
            "c.sol",
            &PassConfig {
                mapping_enabled: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(on.program, off.program);
        assert!(on.table.as_ref().is_some_and(|t| !t.is_empty()));
        assert!(off.table.is_none());
        assert!(on.validate().is_clean());
    }

    #[test]
    fn errors_surface_by_stage() {
        assert!(matches!(
            compile("contract {", "x", &PassConfig::none()),
            Err(CompileError::Frontend(_))
        ));
        let bad = "contract C { function f() external returns (uint) { } }";
        assert!(matches!(
            compile(bad, "x", &PassConfig::none()),
            Err(CompileError::Type(_))
        ));
    }
}
