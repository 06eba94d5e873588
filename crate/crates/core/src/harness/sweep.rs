//! One-parameter sweeps over an experiment document.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use super::run::{run_protocol_with, RunOptions, RunResult};
use super::stats::Estimate;
use crate::error::{Error, Result};
use crate::rng::StreamFactory;
use crate::state::Spin;

pub const SWEEP_CSV_HEADER: &str = "parameter,value,p_estimate,ci_low,ci_high,shots";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Path into the document, e.g. `protocol[2].esr_burst.duration` or
    /// `device.qubits[0].T2`.
    pub parameter: String,
    /// Values substituted at `parameter`, in order. Same syntax as the document.
    pub values: Vec<Value>,
    /// Shots per point; defaults to `run.shots`.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub observe: Observable,
}

/// Which probability the sweep CSV reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observable {
    /// Index into the protocol's measurements, in order of appearance.
    #[serde(default)]
    pub measurement: usize,
    #[serde(default = "default_outcome")]
    pub outcome: Spin,
}

fn default_outcome() -> Spin {
    Spin::Up
}

impl Default for Observable {
    fn default() -> Self {
        Observable {
            measurement: 0,
            outcome: Spin::Up,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: Value,
    pub estimate: Estimate,
    pub result: RunResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Segment>> {
    let bad = |why: &str| Error::Config(format!("sweep parameter `{path}`: {why}"));
    let mut out = Vec::new();
    for part in path.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if !name.is_empty() {
            out.push(Segment::Key(name.to_string()));
        }
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(|| bad("unclosed `[`"))?;
            let idx = rest[1..close].parse().map_err(|_| bad("index is not an integer"))?;
            out.push(Segment::Index(idx));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(bad("unexpected text after `]`"));
            }
        }
        if name.is_empty() && !part.starts_with('[') {
            return Err(bad("empty segment"));
        }
    }
    if out.is_empty() {
        return Err(bad("empty path"));
    }
    Ok(out)
}

/// Replace the value at `path`. The leaf key may be absent (an optional field);
/// every intermediate node must exist.
fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let segments = parse_path(path)?;
    let missing = |i: usize| Error::Config(format!("sweep parameter `{path}` does not resolve at segment {}", i + 1));
    let (last, inner) = segments.split_last().expect("non-empty path");
    let mut node = doc;
    for (i, seg) in inner.iter().enumerate() {
        node = match seg {
            Segment::Key(k) => node.get_mut(k.as_str()),
            Segment::Index(n) => node.get_mut(*n),
        }
        .ok_or_else(|| missing(i))?;
    }
    match last {
        Segment::Key(k) => {
            let obj = node.as_object_mut().ok_or_else(|| missing(inner.len()))?;
            obj.insert(k.clone(), value);
        }
        Segment::Index(n) => {
            *node.get_mut(*n).ok_or_else(|| missing(inner.len()))? = value;
        }
    }
    Ok(())
}

/// Document with `value` substituted at `parameter`, parsed and validated.
pub fn sweep_point_config(base: &Value, parameter: &str, value: &Value) -> Result<ExperimentConfig> {
    if parameter == "schema_version" || parameter.starts_with("sweep") {
        return Err(Error::Config(format!("sweep parameter `{parameter}` cannot be swept")));
    }
    let mut doc = base.clone();
    set_path(&mut doc, parameter, value.clone())?;
    ExperimentConfig::from_value(doc).map_err(|e| Error::Config(format!("sweep parameter `{parameter}` = {value}: {e}")))
}

/// Run the base document once per sweep value. Point `i` uses seed
/// `derived_seed(i)` of `master_seed`.
pub fn run_sweep(base: &Value, sweep: &SweepSpec, master_seed: u64, options: &RunOptions) -> Result<Vec<SweepPoint>> {
    if sweep.values.is_empty() {
        return Err(Error::Config("sweep values must be non-empty".into()));
    }
    // Resolve every point before spending time on any of them.
    let configs = sweep
        .values
        .iter()
        .map(|v| {
            let config = sweep_point_config(base, &sweep.parameter, v)?;
            let steps = config.validate()?;
            Ok((config, steps))
        })
        .collect::<Result<Vec<_>>>()?;
    let seeds = StreamFactory::new(master_seed);
    let run_options = RunOptions {
        collect_records: false,
        ..*options
    };
    configs
        .into_iter()
        .zip(&sweep.values)
        .enumerate()
        .map(|(i, ((config, steps), value))| {
            let shots = sweep.shots.unwrap_or(config.run.shots);
            let (result, _) = run_protocol_with(&steps, &config.device, shots, seeds.derived_seed(i as u64), &run_options)?;
            let m = result.measurements.get(sweep.observe.measurement).ok_or_else(|| {
                Error::Config(format!(
                    "sweep observes measurement {} but the protocol has {}",
                    sweep.observe.measurement,
                    result.measurements.len()
                ))
            })?;
            let estimate = match sweep.observe.outcome {
                Spin::Up => m.up,
                Spin::Down => m.down,
            };
            Ok(SweepPoint {
                value: value.clone(),
                estimate,
                result,
            })
        })
        .collect()
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn sweep_csv(parameter: &str, points: &[SweepPoint]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SWEEP_CSV_HEADER.split(',')).expect("in-memory write");
    for p in points {
        w.write_record([
            parameter.to_string(),
            value_text(&p.value),
            p.estimate.p.to_string(),
            p.estimate.ci_low.to_string(),
            p.estimate.ci_high.to_string(),
            p.estimate.trials.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
