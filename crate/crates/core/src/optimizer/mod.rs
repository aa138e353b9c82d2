//! Pass manager and the transformation passes.

mod cfg;
mod config;
mod const_fold;
mod dce;
mod inline;
mod reorder;
mod unroll;
mod zk;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

pub use cfg::cfg_restructure;
pub use config::{ConfigError, PassConfig, PassKind};
pub use const_fold::const_fold;
pub use dce::{dce, remove_unreachable_blocks};
pub use inline::inline;
pub use reorder::reorder;
pub use unroll::unroll;
pub use zk::zk_instrument;

use crate::ir::{check_module, DomTree, IrModule, SsaError};
use crate::model::{Confidence, SpanSet};

/// Read-only inputs shared by every pass.
pub struct PassCtx<'a> {
    pub spans: &'a SpanSet,
    pub mapping: bool,
    pub unroll_max_trips: u32,
    pub inline_max_instrs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PassStats {
    pub pass: String,
    pub created: usize,
    pub deleted: usize,
    pub moved: usize,
    pub downgraded: usize,
    /// Deleted instructions that carried a source span; they will have no mapping entry.
    pub unmapped: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PassReport {
    pub passes: Vec<PassStats>,
}

impl PassReport {
    pub fn total_created(&self) -> usize {
        self.passes.iter().map(|p| p.created).sum()
    }

    pub fn total_deleted(&self) -> usize {
        self.passes.iter().map(|p| p.deleted).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("after pass {pass}: {source}")]
    Ssa { pass: PassKind, source: SsaError },
    #[error("pass {pass} resurrected ir_id %{id}")]
    Resurrected { pass: PassKind, id: u32 },
}

pub struct PipelineOutput {
    pub module: IrModule,
    pub report: PassReport,
    /// Dominator tree per function of the final module.
    pub dominators: Vec<DomTree>,
}

pub fn run_pass(kind: PassKind, m: &mut IrModule, ctx: &PassCtx) -> usize {
    match kind {
        PassKind::ConstFold => const_fold(m, ctx),
        PassKind::Dce => dce(m, ctx),
        PassKind::Inline => inline(m, ctx),
        PassKind::Unroll => unroll(m, ctx),
        PassKind::Reorder => reorder(m, ctx),
        PassKind::CfgRestructure => cfg_restructure(m, ctx),
        PassKind::ZkInstrument => zk_instrument(m, ctx),
    }
}

pub fn run_pipeline(
    mut m: IrModule,
    config: &PassConfig,
    spans: &SpanSet,
) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let ctx = PassCtx {
        spans,
        mapping: config.mapping_enabled,
        unroll_max_trips: config.unroll_max_trips,
        inline_max_instrs: config.inline_max_instrs,
    };
    let mut report = PassReport::default();
    let mut graveyard: BTreeSet<u32> = BTreeSet::new();
    for &kind in &config.passes {
        let before: BTreeMap<u32, (bool, Confidence)> = m
            .instrs()
            .map(|i| (i.id, (i.prov.primary_span.is_some(), i.prov.confidence)))
            .collect();
        let moved = run_pass(kind, &mut m, &ctx);
        check_module(&m).map_err(|source| PipelineError::Ssa { pass: kind, source })?;
        let mut stats = PassStats {
            pass: kind.name().to_string(),
            moved,
            ..Default::default()
        };
        let mut after_ids = BTreeSet::new();
        for i in m.instrs() {
            after_ids.insert(i.id);
            match before.get(&i.id) {
                None => {
                    if graveyard.contains(&i.id) {
                        return Err(PipelineError::Resurrected {
                            pass: kind,
                            id: i.id,
                        });
                    }
                    stats.created += 1;
                }
                Some((_, conf)) => {
                    if *conf == Confidence::Exact && i.prov.confidence == Confidence::Approximate {
                        stats.downgraded += 1;
                    }
                }
            }
        }
        for (id, (had_span, _)) in &before {
            if !after_ids.contains(id) {
                stats.deleted += 1;
                graveyard.insert(*id);
                if *had_span {
                    stats.unmapped.push(*id);
                }
            }
        }
        report.passes.push(stats);
    }
    let dominators = m.functions.iter().map(DomTree::compute).collect();
    Ok(PipelineOutput {
        module: m,
        report,
        dominators,
    })
}
