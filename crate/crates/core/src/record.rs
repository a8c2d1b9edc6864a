//! Per-run metric traces.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::oracles::OracleCounters;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    #[default]
    Ok,
    /// At least one inner solve since the previous row hit its budget and
    /// the best point was used.
    CondgSoftFail,
}

impl RowFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::CondgSoftFail => "condg_soft_fail",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(RowFlag::Ok),
            "condg_soft_fail" => Some(RowFlag::CondgSoftFail),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub solver: String,
    pub epoch: u64,
    pub t: u64,
    pub gqo: u64,
    pub fqo: u64,
    pub lo: u64,
    pub elapsed_ns: u64,
    pub objective: f64,
    /// Filled in once a reference optimum is known.
    pub subopt: Option<f64>,
    pub flag: RowFlag,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub solver: String,
    pub rows: Vec<RecordRow>,
    /// Largest singular-pair residual seen by any nuclear-ball oracle call.
    pub max_lo_residual: Option<f64>,
    pub soft_failures: u64,
    pub final_point: Vec<f64>,
}

impl RunRecord {
    pub fn new(solver: impl Into<String>) -> Self {
        Self { solver: solver.into(), ..Default::default() }
    }

    pub fn push(&mut self, epoch: u64, t: u64, counters: OracleCounters, elapsed_ns: u64, objective: f64, flag: RowFlag) {
        self.rows.push(RecordRow {
            solver: self.solver.clone(),
            epoch,
            t,
            gqo: counters.gqo,
            fqo: counters.fqo,
            lo: counters.lo,
            elapsed_ns,
            objective,
            subopt: None,
            flag,
        });
    }

    pub fn note_residual(&mut self, r: Option<f64>) {
        if let Some(r) = r {
            self.max_lo_residual = Some(self.max_lo_residual.map_or(r, |m| m.max(r)));
        }
    }

    /// Sets every row's suboptimality to `objective − reference`.
    pub fn fill_subopt(&mut self, reference: f64) {
        for r in &mut self.rows {
            r.subopt = Some(r.objective - reference);
        }
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.rows.last().map(|r| r.objective)
    }

    /// First row whose objective is within `target` of `reference`.
    pub fn first_reaching(&self, reference: f64, target: f64) -> Option<&RecordRow> {
        self.rows.iter().find(|r| r.objective - reference <= target)
    }
}

/// Wall-clock source that reads zero unless enabled, so traces stay
/// bit-identical by default.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    start: Option<Instant>,
}

impl Clock {
    pub fn new(enabled: bool) -> Self {
        Self { start: enabled.then(Instant::now) }
    }

    pub fn elapsed_ns(&self) -> u64 {
        self.start.map_or(0, |s| s.elapsed().as_nanos().min(u64::MAX as u128) as u64)
    }
}
