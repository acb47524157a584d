//! Raw per-arm detection records, matched pairs, and the event-stream file
//! format.
//!
//! An event-stream file is line-delimited JSON. The first line is a header
//! naming the arm and its alphabet sizes; every following line is one event:
//!
//! ```text
//! {"arm":"A","num_settings":2,"num_outcomes":2}
//! {"t":0.0,"setting":1,"outcome":0}
//! {"t":1e-6,"setting":0,"outcome":1}
//! ```
//!
//! Times are written in shortest round-trip decimal form, so a record read
//! back is bit-identical to the one written.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::coincidence::{MatchDiagnostics, MatchPolicy};
use crate::{Dims, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::A => f.write_str("A"),
            Arm::B => f.write_str("B"),
        }
    }
}

/// One detection on one arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    #[serde(rename = "t")]
    pub time: f64,
    pub setting: usize,
    pub outcome: usize,
}

/// Header line of an event-stream file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmHeader {
    pub arm: Arm,
    pub num_settings: usize,
    pub num_outcomes: usize,
}

/// All events recorded on one arm, sorted by time.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmRecord {
    header: ArmHeader,
    events: Vec<DetectionEvent>,
}

impl ArmRecord {
    /// Validates every event against the header bounds and stable-sorts by
    /// time.
    pub fn new(header: ArmHeader, mut events: Vec<DetectionEvent>) -> Result<Self> {
        if header.num_settings == 0 {
            return Err(Error::invalid("num_settings must be at least 1"));
        }
        if header.num_outcomes < 2 {
            return Err(Error::invalid("num_outcomes must be at least 2"));
        }
        for (i, ev) in events.iter().enumerate() {
            check_event(&header, ev).map_err(|message| Error::Invalid(format!("event {i}: {message}")))?;
        }
        sort_by_time(&mut events);
        Ok(ArmRecord { header, events })
    }

    /// Builds a record from events already known to be valid and sorted.
    pub(crate) fn from_sorted_unchecked(header: ArmHeader, events: Vec<DetectionEvent>) -> Self {
        debug_assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
        ArmRecord { header, events }
    }

    pub fn header(&self) -> ArmHeader {
        self.header
    }

    pub fn arm(&self) -> Arm {
        self.header.arm
    }

    pub fn num_settings(&self) -> usize {
        self.header.num_settings
    }

    pub fn num_outcomes(&self) -> usize {
        self.header.num_outcomes
    }

    pub fn events(&self) -> &[DetectionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<DetectionEvent> {
        self.events
    }
}

fn check_event(header: &ArmHeader, ev: &DetectionEvent) -> std::result::Result<(), String> {
    if !ev.time.is_finite() {
        return Err(format!("non-finite time {}", ev.time));
    }
    if ev.setting >= header.num_settings {
        return Err(format!("setting {} out of range (num_settings = {})", ev.setting, header.num_settings));
    }
    if ev.outcome >= header.num_outcomes {
        return Err(format!("outcome {} out of range (num_outcomes = {})", ev.outcome, header.num_outcomes));
    }
    Ok(())
}

pub(crate) fn sort_by_time(events: &mut [DetectionEvent]) {
    events.sort_by(|x, y| x.time.total_cmp(&y.time));
}

/// Reads an event-stream file.
///
/// With `declared` set, the file header must agree with it; an entirely
/// empty stream then yields an empty record. Blank lines are skipped.
pub fn read_arm_record<R: BufRead>(reader: R, declared: Option<ArmHeader>) -> Result<ArmRecord> {
    let mut header: Option<ArmHeader> = None;
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match header {
            None => {
                let h: ArmHeader = serde_json::from_str(text).map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad header: {e}"),
                })?;
                if let Some(d) = declared {
                    if d != h {
                        return Err(Error::DimensionMismatch(format!(
                            "header declares arm {} with S={}, d={}; expected arm {} with S={}, d={}",
                            h.arm, h.num_settings, h.num_outcomes, d.arm, d.num_settings, d.num_outcomes
                        )));
                    }
                }
                if h.num_settings == 0 || h.num_outcomes < 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "header needs num_settings >= 1 and num_outcomes >= 2".into(),
                    });
                }
                header = Some(h);
            }
            Some(ref h) => {
                let ev: DetectionEvent = serde_json::from_str(text).map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
                check_event(h, &ev).map_err(|message| Error::Parse { line: line_no, message })?;
                events.push(ev);
            }
        }
    }
    let header = header.or(declared).ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header line".into(),
    })?;
    sort_by_time(&mut events);
    Ok(ArmRecord { header, events })
}

pub fn write_arm_record<W: Write>(record: &ArmRecord, mut sink: W) -> Result<()> {
    serde_json::to_writer(&mut sink, &record.header).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    for ev in &record.events {
        serde_json::to_writer(&mut sink, ev).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// One time-matched four-tuple `(A, a, B, b)` with the raw timestamps and the
/// positions of the two events in their arm records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidencePair {
    pub outcome_a: usize,
    pub setting_a: usize,
    pub outcome_b: usize,
    pub setting_b: usize,
    pub time_a: f64,
    pub time_b: f64,
    pub index_a: usize,
    pub index_b: usize,
}

impl CoincidencePair {
    pub fn delta(&self) -> f64 {
        (self.time_a - self.time_b).abs()
    }
}

/// Result of matching two arm records.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSet {
    pub tau: f64,
    pub policy: MatchPolicy,
    pub dims: Dims,
    pub pairs: Vec<CoincidencePair>,
    pub diagnostics: MatchDiagnostics,
}
