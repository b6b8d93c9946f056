use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{serde_float, Scalar};

/// Why the search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Budget,
    PslrReached,
    Plateau,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Budget => "budget",
            Termination::PslrReached => "pslr-reached",
            Termination::Plateau => "plateau",
        })
    }
}

/// One search iteration. `candidate_pslr_db` is `None` when no feasible candidate could be
/// proposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IterationRecord<T: Scalar> {
    pub iteration: usize,
    #[serde(with = "serde_float::option")]
    pub candidate_pslr_db: Option<T>,
    #[serde(with = "serde_float")]
    pub best_pslr_db: T,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace<T: Scalar> {
    pub seed: u64,
    pub initial_pslr_db: T,
    pub records: Vec<IterationRecord<T>>,
    pub termination: Termination,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase", bound = "")]
enum Line<T: Scalar> {
    Header {
        seed: u64,
        #[serde(with = "serde_float")]
        initial_pslr_db: T,
    },
    Iteration(IterationRecord<T>),
    Summary {
        termination: Termination,
        iterations: usize,
        improvements: usize,
        #[serde(with = "serde_float")]
        best_pslr_db: T,
    },
}

/// Headline numbers of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary<T> {
    pub iterations: usize,
    pub termination: Termination,
    pub initial_pslr_db: T,
    pub final_pslr_db: T,
    pub improvements: usize,
}

impl<T: Scalar> fmt::Display for TraceSummary<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} iterations, {}", self.iterations, self.termination)?;
        writeln!(f, "initial PSLR: {:.4} dB", self.initial_pslr_db.as_f64())?;
        writeln!(f, "final PSLR: {:.4} dB", self.final_pslr_db.as_f64())?;
        write!(f, "improvements: {}", self.improvements)
    }
}

impl<T: Scalar> OptimizerTrace<T> {
    pub fn best_pslr_db(&self) -> T {
        self.records.last().map_or(self.initial_pslr_db, |r| r.best_pslr_db)
    }

    pub fn improvements(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    pub fn summary(&self) -> TraceSummary<T> {
        TraceSummary {
            iterations: self.records.len(),
            termination: self.termination,
            initial_pslr_db: self.initial_pslr_db,
            final_pslr_db: self.best_pslr_db(),
            improvements: self.improvements(),
        }
    }

    /// Checks numbering, monotone best values and consistency of accepted records.
    pub fn validate(&self) -> Result<()> {
        let mut best = self.initial_pslr_db;
        for (i, r) in self.records.iter().enumerate() {
            if r.iteration != i + 1 {
                return Err(Error::InvalidTrace(format!("record {} has iteration {}", i + 1, r.iteration)));
            }
            if r.best_pslr_db < best {
                return Err(Error::InvalidTrace(format!(
                    "best PSLR decreases at iteration {} ({} < {best})",
                    r.iteration, r.best_pslr_db
                )));
            }
            let consistent = if r.accepted {
                r.candidate_pslr_db == Some(r.best_pslr_db) && r.best_pslr_db > best
            } else {
                r.best_pslr_db == best
            };
            if !consistent {
                return Err(Error::InvalidTrace(format!("iteration {} is inconsistent with its predecessor", r.iteration)));
            }
            best = r.best_pslr_db;
        }
        Ok(())
    }

    /// One JSON object per line: a header, every iteration, then a summary.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut put = |line: &Line<T>| -> std::io::Result<()> {
            serde_json::to_writer(&mut w, line)?;
            w.write_all(b"\n")
        };
        put(&Line::Header { seed: self.seed, initial_pslr_db: self.initial_pslr_db })?;
        for r in &self.records {
            put(&Line::Iteration(*r))?;
        }
        put(&Line::Summary {
            termination: self.termination,
            iterations: self.records.len(),
            improvements: self.improvements(),
            best_pslr_db: self.best_pslr_db(),
        })
    }

    /// Parses and validates a trace written by [`OptimizerTrace::write_jsonl`]. A missing
    /// summary line means the trace was truncated and is rejected.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut records = Vec::new();
        let mut summary = None;
        for (no, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidTrace(format!("line {}: {e}", no + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            if summary.is_some() {
                return Err(Error::InvalidTrace(format!("line {}: content after the summary", no + 1)));
            }
            let parsed: Line<T> =
                serde_json::from_str(&line).map_err(|e| Error::InvalidTrace(format!("line {}: {e}", no + 1)))?;
            match parsed {
                Line::Header { seed, initial_pslr_db } if header.is_none() && no == 0 => {
                    header = Some((seed, initial_pslr_db))
                }
                Line::Header { .. } => {
                    return Err(Error::InvalidTrace(format!("line {}: unexpected header", no + 1)))
                }
                Line::Iteration(_) | Line::Summary { .. } if header.is_none() => {
                    return Err(Error::InvalidTrace("missing header".into()))
                }
                Line::Iteration(rec) => records.push(rec),
                Line::Summary { termination, iterations, improvements, best_pslr_db } => {
                    summary = Some((termination, iterations, improvements, best_pslr_db))
                }
            }
        }
        let (seed, initial_pslr_db) = header.ok_or_else(|| Error::InvalidTrace("empty trace".into()))?;
        let (termination, iterations, improvements, best) =
            summary.ok_or_else(|| Error::InvalidTrace("truncated trace: no summary record".into()))?;
        let trace = Self { seed, initial_pslr_db, records, termination };
        trace.validate()?;
        if iterations != trace.records.len() || improvements != trace.improvements() {
            return Err(Error::InvalidTrace(format!(
                "summary claims {iterations} iterations and {improvements} improvements, found {} and {}",
                trace.records.len(),
                trace.improvements()
            )));
        }
        let same = best == trace.best_pslr_db() || (best.is_nan() && trace.best_pslr_db().is_nan());
        if !same {
            return Err(Error::InvalidTrace("summary best PSLR disagrees with the records".into()));
        }
        Ok(trace)
    }
}
