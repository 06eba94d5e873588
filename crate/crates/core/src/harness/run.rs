//! Monte Carlo orchestration and result aggregation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::protocol::{CompiledProtocol, DeviceParams, ProtocolStep};
use super::stats::Estimate;
use crate::error::{Error, Result};
use crate::readout::ReadoutRecord;
use crate::rng::StreamFactory;
use crate::state::{Qubit, Spin};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shots are handed to workers in fixed blocks of this many.
const BLOCK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Keep every per-shot readout record.
    pub collect_records: bool,
}

/// Declared-outcome statistics for one measurement step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSummary {
    pub step: usize,
    pub qubit: Qubit,
    pub up: Estimate,
    pub down: Estimate,
    /// Shots where the measurement was switched off.
    pub none: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub code_version: String,
    pub master_seed: u64,
    pub device: DeviceParams,
    pub protocol: Vec<ProtocolStep>,
    /// The detector noise level is a modelling assumption, not a device value.
    pub assumptions: Vec<String>,
}

/// Aggregate over all shots of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub shots: u64,
    /// Keys look like `q1=up,q2=down`, in measurement order.
    pub outcome_counts: BTreeMap<String, u64>,
    pub outcome_probabilities: BTreeMap<String, Estimate>,
    pub measurements: Vec<MeasurementSummary>,
    pub metadata: RunMetadata,
}

impl RunResult {
    /// Summary of the `index`-th measurement that targets `qubit`.
    pub fn measurement(&self, qubit: Qubit, index: usize) -> Option<&MeasurementSummary> {
        self.measurements.iter().filter(|m| m.qubit == qubit).nth(index)
    }

    /// Fraction of shots whose first measurement of `qubit` declared `|↑⟩`.
    pub fn up_fraction(&self, qubit: Qubit) -> f64 {
        self.measurement(qubit, 0).map_or(f64::NAN, |m| m.up.p)
    }

    /// Stable-key-order JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("RunResult serializes")
    }
}

#[derive(Debug, Default)]
struct Tally {
    outcomes: BTreeMap<Vec<Option<Spin>>, u64>,
    records: Vec<(u64, ReadoutRecord)>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (k, v) in other.outcomes {
            *self.outcomes.entry(k).or_default() += v;
        }
        self.records.extend(other.records);
        self
    }
}

/// Execute `shots` independent shots of `steps`.
pub fn run_protocol(steps: &[ProtocolStep], device: &DeviceParams, shots: u64, master_seed: u64) -> Result<RunResult> {
    run_protocol_with(steps, device, shots, master_seed, &RunOptions::default()).map(|(r, _)| r)
}

/// Like [`run_protocol`]; also returns per-shot records `(shot, record)` when
/// `options.collect_records` is set.
pub fn run_protocol_with(
    steps: &[ProtocolStep],
    device: &DeviceParams,
    shots: u64,
    master_seed: u64,
    options: &RunOptions,
) -> Result<(RunResult, Vec<(u64, ReadoutRecord)>)> {
    if shots == 0 {
        return Err(Error::Config("shots must be >= 1".into()));
    }
    let compiled = CompiledProtocol::new(steps, device)?;
    let factory = StreamFactory::new(master_seed);
    let collect = options.collect_records;

    let run_block = |block: u64| -> Result<Tally> {
        let mut tally = Tally::default();
        let end = ((block + 1) * BLOCK).min(shots);
        for shot in block * BLOCK..end {
            let outcome = compiled
                .run_shot(|step| factory.stream(shot, step))
                .map_err(|e| Error::Shot {
                    shot,
                    source: Box::new(e),
                })?;
            *tally.outcomes.entry(outcome.declared).or_default() += 1;
            if collect {
                tally.records.extend(outcome.records.into_iter().map(|r| (shot, r)));
            }
        }
        Ok(tally)
    };

    let blocks = shots.div_ceil(BLOCK);
    let execute = || -> Result<Tally> {
        // Blocks are returned in index order, so records stay sorted by shot
        // and the first error reported is from the lowest failing block.
        let parts: Vec<Result<Tally>> = (0..blocks).into_par_iter().map(run_block).collect();
        parts.into_iter().try_fold(Tally::default(), |acc, part| Ok(acc.merge(part?)))
    };
    let tally = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(execute)?,
        None => execute()?,
    };

    let result = summarize(&compiled, steps, device, shots, master_seed, &tally);
    Ok((result, tally.records))
}

fn outcome_key(measurements: &[(usize, Qubit)], declared: &[Option<Spin>]) -> String {
    measurements
        .iter()
        .zip(declared)
        .map(|((_, q), d)| format!("q{}={}", q.label(), d.map_or("none", Spin::symbol)))
        .collect::<Vec<_>>()
        .join(",")
}

fn summarize(
    compiled: &CompiledProtocol,
    steps: &[ProtocolStep],
    device: &DeviceParams,
    shots: u64,
    master_seed: u64,
    tally: &Tally,
) -> RunResult {
    let meas = compiled.measurements();
    let mut outcome_counts = BTreeMap::new();
    for (declared, &count) in &tally.outcomes {
        *outcome_counts.entry(outcome_key(meas, declared)).or_default() += count;
    }
    let outcome_probabilities = outcome_counts
        .iter()
        .map(|(k, &c)| (k.clone(), Estimate::wilson(c, shots)))
        .collect();
    let measurements = meas
        .iter()
        .enumerate()
        .map(|(m, &(step, qubit))| {
            let mut counts = [0u64; 3];
            for (declared, &c) in &tally.outcomes {
                let slot = match declared[m] {
                    Some(Spin::Up) => 0,
                    Some(Spin::Down) => 1,
                    None => 2,
                };
                counts[slot] += c;
            }
            MeasurementSummary {
                step,
                qubit,
                up: Estimate::wilson(counts[0], shots),
                down: Estimate::wilson(counts[1], shots),
                none: counts[2],
            }
        })
        .collect();
    RunResult {
        shots,
        outcome_counts,
        outcome_probabilities,
        measurements,
        metadata: RunMetadata {
            code_version: CODE_VERSION.to_string(),
            master_seed,
            device: device.clone(),
            protocol: steps.to_vec(),
            assumptions: vec![format!(
                "detector noise_sigma_at_1us = {} is assumed, not measured",
                device.detector.noise_sigma_at_1us
            )],
        },
    }
}

/// Per-shot CSV, one row per measurement.
pub fn records_csv(records: &[(u64, ReadoutRecord)]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(crate::readout::RECORD_CSV_HEADER);
    out.push('\n');
    for (shot, r) in records {
        out.push_str(&crate::readout::record_csv_row(*shot, r));
        out.push('\n');
    }
    out
}

/// First-order dephasing error per gate, `gate_duration / T2`.
pub fn error_per_gate_budget(gate_duration: f64, t2: f64) -> Result<f64> {
    crate::error::require_positive("gate_duration", gate_duration)?;
    crate::error::require_positive("T2", t2)?;
    Ok(gate_duration / t2)
}
