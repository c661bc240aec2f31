//! JSONL traces and summary JSON.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{analyze, Analysis, RunOutput};
use super::scenario::{parse_language, Scenario};
use super::HarnessError;
use crate::genmeta::{Aux, Flag, Mode, Priority};
use crate::langs::NatSet;
use crate::metrics::{GameTrace, StepRecord};
use crate::rational::{serde_opt_rat, Rational};

pub const TRACE_SCHEMA: &str = "limitgen-trace/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub scenario: String,
    pub claim: String,
    pub seed: u64,
    pub horizon: u64,
    pub generator: String,
    pub mode: Mode,
    pub target: String,
    /// Collection members in index order.
    pub languages: Vec<String>,
}

impl TraceHeader {
    pub fn new(scenario: &Scenario, out: &RunOutput) -> Self {
        Self {
            schema: TRACE_SCHEMA.into(),
            scenario: scenario.name.clone(),
            claim: scenario.claim.clone(),
            seed: scenario.seed,
            horizon: scenario.horizon,
            generator: out.summary.generator.clone(),
            mode: out.summary.mode,
            target: scenario.target.to_string(),
            languages: scenario.collection.languages().map(|(_, l)| l.to_string()).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    n: u64,
    x: u64,
    is_noise: bool,
    sigma: u64,
    repeat: bool,
    order: Vec<(usize, Priority)>,
    j: usize,
    indices: Vec<usize>,
    closure: Option<String>,
    element: Option<u64>,
    flags: Vec<Flag>,
    aux: Aux,
    valid: bool,
    #[serde(with = "serde_opt_rat")]
    set_density: Option<Rational>,
}

impl From<&StepRecord> for Row {
    fn from(s: &StepRecord) -> Self {
        Self {
            n: s.n,
            x: s.x,
            is_noise: s.noise,
            sigma: s.sigma,
            repeat: s.repeat,
            order: s.order.clone(),
            j: s.j,
            indices: s.indices.clone(),
            closure: s.closure.as_ref().map(NatSet::to_string),
            element: s.element,
            flags: s.flags.clone(),
            aux: s.aux.clone(),
            valid: s.valid,
            set_density: s.set_density,
        }
    }
}

fn trace_err(line: usize, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Trace(format!("line {line}: {msg}"))
}

pub fn write_trace(w: impl Write, header: &TraceHeader, trace: &GameTrace) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(w);
    serde_json::to_writer(&mut w, header).map_err(|e| HarnessError::Trace(e.to_string()))?;
    w.write_all(b"\n")?;
    for s in &trace.steps {
        serde_json::to_writer(&mut w, &Row::from(s)).map_err(|e| HarnessError::Trace(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(r: impl std::io::Read) -> Result<(TraceHeader, GameTrace), HarnessError> {
    let mut lines = BufReader::new(r).lines();
    let first = lines.next().ok_or_else(|| trace_err(1, "empty trace"))??;
    let header: TraceHeader = serde_json::from_str(&first).map_err(|e| trace_err(1, e))?;
    if header.schema != TRACE_SCHEMA {
        return Err(trace_err(1, format!("unsupported schema `{}`", header.schema)));
    }
    let mut trace = GameTrace::default();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| trace_err(k + 2, e))?;
        let closure = match &row.closure {
            Some(c) => Some(parse_language(c).map_err(|e| trace_err(k + 2, format!("closure: {e}")))?),
            None => None,
        };
        trace.steps.push(StepRecord {
            n: row.n,
            x: row.x,
            noise: row.is_noise,
            sigma: row.sigma,
            repeat: row.repeat,
            order: row.order,
            j: row.j,
            indices: row.indices,
            closure,
            element: row.element,
            flags: row.flags,
            aux: row.aux,
            valid: row.valid,
            set_density: row.set_density,
        });
    }
    Ok((header, trace))
}

/// Recomputes the analysis of a persisted trace.
pub fn reanalyze(header: &TraceHeader, trace: &GameTrace) -> Result<Analysis, HarnessError> {
    let target = parse_language(&header.target)?;
    let mut t = trace.clone();
    Ok(analyze(&mut t, &target, header.mode))
}

pub fn summary_json(out: &RunOutput) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(&out.summary).map_err(|e| HarnessError::Trace(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Written {
    pub trace: PathBuf,
    pub summary: PathBuf,
}

/// Writes `<name>.trace.jsonl` and `<name>.summary.json` into `dir`.
pub fn persist(dir: &Path, scenario: &Scenario, out: &RunOutput) -> Result<Written, HarnessError> {
    fs::create_dir_all(dir)?;
    let trace = dir.join(format!("{}.trace.jsonl", scenario.name));
    let summary = dir.join(format!("{}.summary.json", scenario.name));
    write_trace(fs::File::create(&trace)?, &TraceHeader::new(scenario, out), &out.trace)?;
    fs::write(&summary, summary_json(out)?)?;
    Ok(Written { trace, summary })
}
