//! Reference interpreter, bytecode VM, trace reconstruction and the twin-execution oracle.

mod accuracy;
mod interp;
mod overhead;
mod state;
mod suite;
mod trace;
mod vm;

pub use accuracy::{lcs_pairs, score, Accuracy};
pub use interp::{find_external, interpret_source, interpret_with_limit, INTERP_STEP_LIMIT};
pub use overhead::{
    measure_overhead, OverheadError, OverheadReport, SourceOverhead, StageSplit, CLOCK_RESOLUTION,
    DEFAULT_REPETITIONS,
};
pub use state::{
    EventRecord, ExecError, ExecResult, StatementTrace, Status, Storage, StorageKey, TxInput,
};
pub use suite::{
    check_expectation, location_name, named_storage, parse_location, run_suite, Expectation,
    ExpectedEvent, ExpectedStatus, SuiteError, SuiteRun, TxOutcome, TxSpec, TxSuite,
};
pub use trace::{collapse, reconstruct, ReconstructedTrace, TraceError, TraceRecord};
pub use vm::{Vm, VmRun, MAX_STACK, VM_STEP_LIMIT};

use thiserror::Error;

use crate::backend::BytecodeProgram;
use crate::frontend::{ResolvedUnit, StatementRegistry};
use crate::model::MappingTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwinError {
    #[error("interpreter: {0}")]
    Interp(ExecError),
    #[error("vm: {0}")]
    Vm(ExecError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Outcome of running one transaction on both engines.
#[derive(Debug, Clone)]
pub struct TwinRun {
    pub reference: ExecResult,
    pub vm: ExecResult,
    pub reference_trace: StatementTrace,
    pub reconstructed: ReconstructedTrace,
    pub accuracy: Accuracy,
}

impl TwinRun {
    /// Both engines agree on status, storage and events.
    pub fn agrees(&self) -> bool {
        self.reference == self.vm
    }
}

pub fn twin_execute(
    unit: &ResolvedUnit,
    reg: &StatementRegistry,
    program: &BytecodeProgram,
    table: &MappingTable,
    storage: &Storage,
    tx: &TxInput,
) -> Result<TwinRun, TwinError> {
    let (reference, reference_trace) =
        interpret_source(unit, storage, tx).map_err(TwinError::Interp)?;
    let vm = Vm::new(program).map_err(TwinError::Vm)?;
    let run = vm.run(storage, tx).map_err(TwinError::Vm)?;
    let reconstructed = reconstruct(table, reg, program.code.len(), &run.offsets)?;
    let accuracy = score(&reference_trace, &reconstructed);
    Ok(TwinRun {
        reference,
        vm: run.result,
        reference_trace,
        reconstructed,
        accuracy,
    })
}
