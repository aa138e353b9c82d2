use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::optimizer::PassConfig;
use crate::pipeline::{compile, CompileError, StageTimings};

pub const DEFAULT_REPETITIONS: usize = 10;
/// Below this, the off-mode median is too small to time reliably.
pub const CLOCK_RESOLUTION: Duration = Duration::from_millis(1);

#[derive(Debug, Error)]
pub enum OverheadError {
    #[error("at least 3 repetitions are needed, got {0}")]
    TooFewRepetitions(usize),
    #[error("{name}: {source}")]
    Compile { name: String, source: CompileError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageSplit {
    pub frontend_lowering_us: f64,
    pub passes_us: f64,
    pub backend_mapgen_us: f64,
}

impl StageSplit {
    fn total(&self) -> f64 {
        self.frontend_lowering_us + self.passes_us + self.backend_mapgen_us
    }

    /// Percent share of each stage.
    pub fn shares(&self) -> StageSplit {
        let t = self.total().max(f64::MIN_POSITIVE);
        StageSplit {
            frontend_lowering_us: 100.0 * self.frontend_lowering_us / t,
            passes_us: 100.0 * self.passes_us / t,
            backend_mapgen_us: 100.0 * self.backend_mapgen_us / t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceOverhead {
    pub name: String,
    pub off_us: f64,
    pub on_us: f64,
    pub overhead_pct: f64,
    pub stages_on: StageSplit,
    pub stages_off: StageSplit,
    pub bytecode_identical: bool,
    pub clock_resolution_warning: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OverheadReport {
    pub repetitions: usize,
    pub sources: Vec<SourceOverhead>,
    /// Mean of per-source overheads, in percent.
    pub aggregate_pct: f64,
    /// Stage shares of mapping-on compile time, summed over sources.
    pub stage_shares_pct: StageSplit,
}

impl OverheadReport {
    pub fn all_bytecode_identical(&self) -> bool {
        self.sources.iter().all(|s| s.bytecode_identical)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn us(d: Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

fn median_split(runs: &[StageTimings]) -> StageSplit {
    StageSplit {
        frontend_lowering_us: median(runs.iter().map(|t| us(t.frontend_lowering)).collect()),
        passes_us: median(runs.iter().map(|t| us(t.passes)).collect()),
        backend_mapgen_us: median(runs.iter().map(|t| us(t.backend_mapgen)).collect()),
    }
}

/// Times each source with mapping off and on (same passes otherwise), alternating per repetition.
pub fn measure_overhead(
    sources: &[(String, String)],
    config: &PassConfig,
    reps: usize,
) -> Result<OverheadReport, OverheadError> {
    if reps < 3 {
        return Err(OverheadError::TooFewRepetitions(reps));
    }
    let on_cfg = PassConfig {
        mapping_enabled: true,
        ..config.clone()
    };
    let off_cfg = PassConfig {
        mapping_enabled: false,
        ..config.clone()
    };
    let mut report = OverheadReport {
        repetitions: reps,
        ..Default::default()
    };
    let mut shares_acc = StageSplit::default();
    for (name, src) in sources {
        let run = |cfg: &PassConfig| {
            compile(src, name, cfg).map_err(|source| OverheadError::Compile {
                name: name.clone(),
                source,
            })
        };
        // Warm-up, also used for the byte comparison.
        let on0 = run(&on_cfg)?;
        let off0 = run(&off_cfg)?;
        let mut on = Vec::with_capacity(reps);
        let mut off = Vec::with_capacity(reps);
        for _ in 0..reps {
            off.push(run(&off_cfg)?.timings);
            on.push(run(&on_cfg)?.timings);
        }
        let on_us = median(on.iter().map(|t| us(t.total())).collect());
        let off_us = median(off.iter().map(|t| us(t.total())).collect());
        let stages_on = median_split(&on);
        shares_acc.frontend_lowering_us += stages_on.frontend_lowering_us;
        shares_acc.passes_us += stages_on.passes_us;
        shares_acc.backend_mapgen_us += stages_on.backend_mapgen_us;
        report.sources.push(SourceOverhead {
            name: name.clone(),
            off_us,
            on_us,
            overhead_pct: 100.0 * (on_us - off_us) / off_us.max(f64::MIN_POSITIVE),
            stages_on,
            stages_off: median_split(&off),
            bytecode_identical: on0.program.code == off0.program.code,
            clock_resolution_warning: off_us < us(CLOCK_RESOLUTION),
        });
    }
    if !report.sources.is_empty() {
        report.aggregate_pct = report.sources.iter().map(|s| s.overhead_pct).sum::<f64>()
            / report.sources.len() as f64;
    }
    report.stage_shares_pct = shares_acc.shares();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn reports_identical_bytecode() {
        let src = (
            "a.msol".to_string(),
            "contract A { uint x; function f(uint a) external { x = a * 2; } }".to_string(),
        );
        let r = measure_overhead(std::slice::from_ref(&src), &PassConfig::default(), 3).unwrap();
        assert!(r.all_bytecode_identical());
        assert!(matches!(
            measure_overhead(&[src], &PassConfig::default(), 2),
            Err(OverheadError::TooFewRepetitions(2))
        ));
    }
}
