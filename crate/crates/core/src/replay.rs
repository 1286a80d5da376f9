//! Replay logs: JSON Lines, self-contained and bit-stable.
//!
//! The first line is a meta record embedding the scenario (so logs can be
//! rendered and mined without the original file); every following line is
//! one cycle record with a fixed field order, suitable for hashing.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bus::Message;
use crate::error::{Error, Result};
use crate::kernel::{Command, Diagnostic, StageChange};
use crate::world::{BrigadeId, BuildingId, Position, Scenario};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogMeta {
    pub scenario_path: String,
    pub seed: u64,
    pub strategy: String,
    pub cycles_cap: u32,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrigadeSnapshot {
    pub id: BrigadeId,
    pub pos: Position,
    pub water: f64,
    pub health: f64,
    pub incapacitated: bool,
}

/// One simulated cycle. Field order is the wire order; do not reorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u32,
    pub commands: BTreeMap<BrigadeId, Command>,
    pub diagnostics: Vec<Diagnostic>,
    pub ignitions: Vec<BuildingId>,
    pub stage_changes: Vec<StageChange>,
    /// Messages delivered to agents this cycle (accepted the cycle before).
    pub messages: Vec<Message>,
    /// Water each brigade actually poured onto each target this cycle.
    pub water_applied: Vec<(BrigadeId, BuildingId, f64)>,
    pub brigades: Vec<BrigadeSnapshot>,
    pub score: f64,
}

pub struct LogWriter<W: Write> {
    out: W,
}

impl<W: Write> LogWriter<W> {
    pub fn new(mut out: W, meta: &LogMeta) -> Result<LogWriter<W>> {
        let line = serde_json::to_string(meta).map_err(|e| Error::Replay(e.to_string()))?;
        writeln!(out, "{line}")?;
        Ok(LogWriter { out })
    }

    pub fn record(&mut self, rec: &CycleRecord) -> Result<()> {
        let line = serde_json::to_string(rec).map_err(|e| Error::Replay(e.to_string()))?;
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_log(path: &Path) -> Result<(LogMeta, Vec<CycleRecord>)> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let meta_line = lines
        .next()
        .ok_or_else(|| Error::Replay("log is empty".into()))??;
    let mut meta: LogMeta =
        serde_json::from_str(&meta_line).map_err(|e| Error::Replay(format!("bad meta line: {e}")))?;
    meta.scenario = crate::world::load_scenario(&serde_json::to_string(&meta.scenario).unwrap())
        .map_err(|e| Error::Replay(format!("embedded scenario invalid: {e}")))?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CycleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Replay(format!("bad record on line {}: {e}", i + 2)))?;
        records.push(rec);
    }
    Ok((meta, records))
}

/// Recompute the burnt-ratio trace from ignition and stage-change records
/// alone. This is the independent check that a log tells the same story as
/// the scores written into it.
pub fn recompute_scores(meta: &LogMeta, records: &[CycleRecord]) -> Vec<f64> {
    let n = meta.scenario.buildings.len();
    let mut max_stage = vec![0u8; n];
    for &b in &meta.scenario.ignitions {
        max_stage[b.index()] = 1;
    }
    let mut out = Vec::with_capacity(records.len());
    for rec in records {
        for &b in &rec.ignitions {
            max_stage[b.index()] = max_stage[b.index()].max(1);
        }
        for c in &rec.stage_changes {
            if (1..=3).contains(&c.to) {
                max_stage[c.building.index()] = max_stage[c.building.index()].max(c.to);
            }
        }
        let total: f64 = max_stage.iter().map(|&s| s as f64 / 3.0).sum();
        out.push(total / n as f64);
    }
    out
}
