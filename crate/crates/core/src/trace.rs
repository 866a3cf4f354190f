//! Recorded runs.
//!
//! A trace is a header plus one record per event. Each record carries the
//! event, every holding that changed (in full), the new unallocated pool when
//! it changed, and what was recalled. The state after step `k` is the state
//! after step `k - 1` with those holdings replaced, so the records are
//! snapshots stored as differences.
//!
//! On disk a trace is line-delimited JSON: a header line, one line per step,
//! and an end line carrying the step count so that truncation is detected.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::rat::{self, Rat};
use crate::valuation::{Valuation, ValuationRecord};
use crate::{Algorithm, PlayerId};

pub const TRACE_FORMAT: &str = "fairdyn-trace";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Holding {
    Set(Arc<IntervalSet>),
    Size(Rat),
}

impl Holding {
    pub fn as_set(&self) -> Option<&Arc<IntervalSet>> {
        match self {
            Holding::Set(s) => Some(s),
            Holding::Size(_) => None,
        }
    }

    pub fn as_size(&self) -> Option<&Rat> {
        match self {
            Holding::Size(r) => Some(r),
            Holding::Set(_) => None,
        }
    }
}

impl Serialize for Holding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Holding::Set(set) => set.serialize(s),
            Holding::Size(r) => s.serialize_str(&rat::format(r)),
        }
    }
}

impl<'de> Deserialize<'de> for Holding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Set(IntervalSet),
            Size(String),
        }
        match Raw::deserialize(d)? {
            Raw::Set(s) => Ok(Holding::Set(Arc::new(s))),
            Raw::Size(s) => rat::parse(&s)
                .map(Holding::Size)
                .ok_or_else(|| D::Error::custom(format!("invalid size {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Arrival { player: PlayerId, valuation: Valuation },
    Departure { player: PlayerId },
}

impl Event {
    pub fn player(&self) -> PlayerId {
        match self {
            Event::Arrival { player, .. } | Event::Departure { player } => *player,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub step: usize,
    pub event: Event,
    /// Holdings after the step, for every player whose holding changed.
    pub changes: Vec<(PlayerId, Holding)>,
    /// New unallocated pool, when it changed.
    pub unallocated: Option<Arc<IntervalSet>>,
    pub recall: Option<(PlayerId, Holding)>,
}

/// Algorithm parameters recorded with a trace.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunParams {
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub d: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub c: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub eta: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<String>,
}

mod opt_rat {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::rat::{self, Rat};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&rat::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        match Option::<String>::deserialize(d)? {
            Some(s) => rat::parse(&s)
                .map(Some)
                .ok_or_else(|| D::Error::custom(format!("invalid rational {s:?}"))),
            None => Ok(None),
        }
    }
}

/// Recorded when an adaptive construction cannot continue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltCertificate {
    pub arrivals: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub n_max: usize,
    pub params: RunParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halt: Option<HaltCertificate>,
}

impl TraceHeader {
    pub fn new(algorithm: Algorithm, n_max: usize, params: RunParams) -> Self {
        Self {
            format: TRACE_FORMAT.into(),
            version: VERSION,
            algorithm,
            n_max,
            params,
            halt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EventTag {
    Arrival,
    Departure,
}

#[derive(Serialize, Deserialize)]
struct ChangeLine {
    player: PlayerId,
    holding: Holding,
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    step: usize,
    event: EventTag,
    player: PlayerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valuation: Option<ValuationRecord>,
    changes: Vec<ChangeLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unallocated: Option<IntervalSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    recall: Option<ChangeLine>,
}

#[derive(Serialize, Deserialize)]
struct EndLine {
    end: String,
    steps: usize,
}

/// Full state reconstructed at some step.
#[derive(Clone, Debug, Default)]
pub struct Snapshot {
    pub step: usize,
    pub holdings: Vec<Holding>,
    pub live: Vec<bool>,
    pub valuations: Vec<Valuation>,
    pub unallocated: Option<Arc<IntervalSet>>,
}

impl Snapshot {
    pub fn arrivals(&self) -> usize {
        self.holdings.len()
    }

    pub fn live_players(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.live
            .iter()
            .enumerate()
            .filter(|(_, &l)| l)
            .map(|(i, _)| PlayerId::from_index(i))
    }

    /// Applies one step's differences.
    pub fn apply(&mut self, step: &TraceStep) -> Result<()> {
        match &step.event {
            Event::Arrival { player, valuation } => {
                if player.0 != self.holdings.len() + 1 {
                    return Err(Error::Schema {
                        line: step.step,
                        detail: format!("arrival of player {player} out of order"),
                    });
                }
                let empty = match valuation {
                    Valuation::Density(_) => Holding::Set(Arc::new(IntervalSet::empty())),
                    Valuation::Demand(_) => Holding::Size(Rat::default()),
                };
                self.holdings.push(empty);
                self.live.push(true);
                self.valuations.push(valuation.clone());
            }
            Event::Departure { player } => {
                if player.0 == 0 || player.0 > self.holdings.len() {
                    return Err(Error::Schema {
                        line: step.step,
                        detail: format!("departure of unknown player {player}"),
                    });
                }
                self.live[player.index()] = false;
            }
        }
        for (p, h) in &step.changes {
            if p.0 == 0 || p.0 > self.holdings.len() {
                return Err(Error::Schema {
                    line: step.step,
                    detail: format!("change for unknown player {p}"),
                });
            }
            self.holdings[p.index()] = h.clone();
        }
        if let Some(u) = &step.unallocated {
            self.unallocated = Some(u.clone());
        }
        self.step = step.step;
        Ok(())
    }
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Self {
            header,
            steps: Vec::new(),
        }
    }

    /// State after the first `k` steps.
    pub fn snapshot(&self, k: usize) -> Result<Snapshot> {
        let mut snap = Snapshot {
            unallocated: self
                .header
                .algorithm
                .is_interval()
                .then(|| Arc::new(IntervalSet::full())),
            ..Snapshot::default()
        };
        for step in self.steps.iter().take(k) {
            snap.apply(step)?;
        }
        Ok(snap)
    }

    /// Valuations in arrival order.
    pub fn valuations(&self) -> Vec<Valuation> {
        self.steps
            .iter()
            .filter_map(|s| match &s.event {
                Event::Arrival { valuation, .. } => Some(valuation.clone()),
                Event::Departure { .. } => None,
            })
            .collect()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        for step in &self.steps {
            let (tag, valuation) = match &step.event {
                Event::Arrival { valuation, .. } => (EventTag::Arrival, Some(valuation.to_record())),
                Event::Departure { .. } => (EventTag::Departure, None),
            };
            let line = StepLine {
                step: step.step,
                event: tag,
                player: step.event.player(),
                valuation,
                changes: step
                    .changes
                    .iter()
                    .map(|(p, h)| ChangeLine {
                        player: *p,
                        holding: h.clone(),
                    })
                    .collect(),
                unallocated: step.unallocated.as_ref().map(|u| (**u).clone()),
                recall: step.recall.as_ref().map(|(p, h)| ChangeLine {
                    player: *p,
                    holding: h.clone(),
                }),
            };
            serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(
            &mut w,
            &EndLine {
                end: TRACE_FORMAT.into(),
                steps: self.steps.len(),
            },
        )
        .map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let schema = |line: usize, detail: String| Error::Schema { line, detail };
        let mut lines = r.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| schema(1, "empty trace file".into()))?;
        let header: TraceHeader =
            serde_json::from_str(&first?).map_err(|e| schema(1, e.to_string()))?;
        if header.format != TRACE_FORMAT || header.version != VERSION {
            return Err(schema(1, "not a version 1 trace".into()));
        }
        let mut trace = Trace::new(header);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(end) = serde_json::from_str::<EndLine>(&line) {
                if end.end != TRACE_FORMAT || end.steps != trace.steps.len() {
                    return Err(schema(line_no, "step count mismatch".into()));
                }
                return Ok(trace);
            }
            let raw: StepLine =
                serde_json::from_str(&line).map_err(|e| schema(line_no, e.to_string()))?;
            let event = match raw.event {
                EventTag::Arrival => {
                    let record = raw
                        .valuation
                        .ok_or_else(|| schema(line_no, "arrival without valuation".into()))?;
                    let valuation = record
                        .to_valuation()
                        .map_err(|e| schema(line_no, e.to_string()))?;
                    Event::Arrival {
                        player: raw.player,
                        valuation,
                    }
                }
                EventTag::Departure => Event::Departure { player: raw.player },
            };
            trace.steps.push(TraceStep {
                step: raw.step,
                event,
                changes: raw
                    .changes
                    .into_iter()
                    .map(|c| (c.player, c.holding))
                    .collect(),
                unallocated: raw.unallocated.map(Arc::new),
                recall: raw.recall.map(|c| (c.player, c.holding)),
            });
        }
        Err(schema(0, "trace truncated: missing end record".into()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}
