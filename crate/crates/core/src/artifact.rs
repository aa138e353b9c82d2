//! The `.zkb.json` container.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BytecodeProgram, EventEntry, FunctionEntry, StorageSlot};
use crate::mapgen::{validate_structural, validate_syntactic, RichSourceMap, ValidationReport};
use crate::model::{encode_compressed, FileInfo, MappingTable};
use crate::optimizer::PassConfig;
use crate::pipeline::{compile, Compilation, CompileError};

pub const ARTIFACT_VERSION: u32 = 1;
pub const ARTIFACT_EXTENSION: &str = "zkb.json";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("malformed artifact: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bytecode_hex is not lowercase hex: {0}")]
    Hex(#[from] hex::FromHexError),
    #[error("unsupported artifact version {0}")]
    Version(u32),
    #[error("artifact carries {0} source files; exactly one is supported")]
    SourceCount(usize),
    #[error("embedded source no longer compiles: {0}")]
    Recompile(#[from] CompileError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub name: String,
    pub content: String,
}

/// Stage durations in microseconds. Left out when comparing artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub frontend_lowering_us: u64,
    pub passes_us: u64,
    pub backend_mapgen_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub version: u32,
    pub source_files: Vec<SourceFile>,
    pub bytecode_hex: String,
    pub function_table: Vec<FunctionEntry>,
    pub string_table: Vec<String>,
    pub event_table: Vec<EventEntry>,
    pub sourcemap: RichSourceMap,
    pub sourcemap_compressed: String,
    pub storage_layout: Vec<StorageSlot>,
    pub initial_storage: Vec<(u16, u64)>,
    pub pipeline: PassConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingRecord>,
}

impl Artifact {
    pub fn from_compilation(c: &Compilation, with_timing: bool) -> Self {
        let table = c.table.clone().unwrap_or_else(|| MappingTable {
            files: vec![c.file.clone()],
            ..Default::default()
        });
        let p = &c.program;
        Artifact {
            version: ARTIFACT_VERSION,
            source_files: vec![SourceFile {
                name: c.file.name.clone(),
                content: c.source.clone(),
            }],
            bytecode_hex: hex::encode(&p.code),
            function_table: p.functions.clone(),
            string_table: p.strings.clone(),
            event_table: p.events.clone(),
            sourcemap: RichSourceMap::from(&table),
            sourcemap_compressed: encode_compressed(&table),
            storage_layout: p.storage.clone(),
            initial_storage: p.initial_storage.clone(),
            pipeline: c.config.clone(),
            timings: with_timing.then_some(TimingRecord {
                frontend_lowering_us: c.timings.frontend_lowering.as_micros() as u64,
                passes_us: c.timings.passes.as_micros() as u64,
                backend_mapgen_us: c.timings.backend_mapgen.as_micros() as u64,
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let a: Artifact = serde_json::from_str(text)?;
        if a.version != ARTIFACT_VERSION {
            return Err(ArtifactError::Version(a.version));
        }
        Ok(a)
    }

    pub fn program(&self) -> Result<BytecodeProgram, ArtifactError> {
        Ok(BytecodeProgram {
            code: hex::decode(&self.bytecode_hex)?,
            functions: self.function_table.clone(),
            strings: self.string_table.clone(),
            events: self.event_table.clone(),
            storage: self.storage_layout.clone(),
            initial_storage: self.initial_storage.clone(),
        })
    }

    pub fn table(&self) -> MappingTable {
        MappingTable::from(self.sourcemap.clone())
    }

    pub fn files(&self) -> Vec<FileInfo> {
        self.sourcemap.files.clone()
    }

    pub fn source(&self) -> Result<&SourceFile, ArtifactError> {
        match self.source_files.as_slice() {
            [one] => Ok(one),
            many => Err(ArtifactError::SourceCount(many.len())),
        }
    }

    /// Rebuilds AST, registry and IR from the embedded source with the recorded pass configuration.
    pub fn recompile(&self) -> Result<Compilation, ArtifactError> {
        let src = self.source()?;
        Ok(compile(&src.content, &src.name, &self.pipeline)?)
    }

    /// Checks the stored table and bytecode, not a freshly generated one.
    pub fn validate(&self) -> Result<ValidationReport, ArtifactError> {
        let c = self.recompile()?;
        let table = self.table();
        let program = self.program()?;
        Ok(validate_syntactic(&table).merge(validate_structural(
            &table,
            &c.registry,
            &c.module,
            &program,
        )))
    }

    /// The container without timing fields, for byte comparison.
    pub fn without_timing(&self) -> Self {
        Artifact {
            timings: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SourceSpan;

    const SRC: &str =
        "contract C { uint x; function f(uint a) external { require(a > 1, \"small\"); x = a; } }";

    #[test]
    fn round_trip_and_layout() {
        let c = compile(SRC, "c.msol", &PassConfig::default()).unwrap();
        let a = Artifact::from_compilation(&c, true);
        let text = a.to_json();
        for field in [
            "\"version\"",
            "\"source_files\"",
            "\"bytecode_hex\"",
            "\"function_table\"",
            "\"string_table\"",
            "\"event_table\"",
            "\"sourcemap\"",
            "\"sourcemap_compressed\"",
        ] {
            assert!(text.contains(field), "{field}");
        }
        assert!(!a.bytecode_hex.starts_with("0x"));
        assert_eq!(a.bytecode_hex, a.bytecode_hex.to_lowercase());
        let back = Artifact::from_json(&text).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.program().unwrap(), c.program);
        assert_eq!(back.table(), c.table.clone().unwrap());
        assert!(back.validate().unwrap().is_clean());
        assert_eq!(
            a.without_timing().to_json(),
            Artifact::from_compilation(&c, false).to_json()
        );
    }

    #[test]
    fn corrupted_table_fails_validation() {
        let c = compile(SRC, "c.msol", &PassConfig::default()).unwrap();
        let mut a = Artifact::from_compilation(&c, false);
        let e = &mut a.sourcemap.entries[3];
        let span = SourceSpan::new(e.s + 1, e.l, e.f);
        e.s = span.start;
        assert!(!a.validate().unwrap().is_clean());
        a.version = 9;
        assert!(matches!(
            Artifact::from_json(&a.to_json()),
            Err(ArtifactError::Version(9))
        ));
    }
}
