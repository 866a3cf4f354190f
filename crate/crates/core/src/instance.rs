//! Static instances: a bounded sequence of arrivals and departures.
//!
//! File layout is line-delimited JSON. The first line is a header
//! `{"n_max":..,"family":..,"seed":..,"params":{..}}`; each further line is
//! either `{"arrive":<valuation record>}` or `{"depart":<player>}`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::valuation::{Valuation, ValuationRecord};
use crate::PlayerId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceEvent {
    Arrival(Valuation),
    Departure(PlayerId),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub n_max: usize,
    pub events: Vec<InstanceEvent>,
    pub meta: InstanceMeta,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    n_max: usize,
    #[serde(flatten)]
    meta: InstanceMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EventLine {
    Arrive(ValuationRecord),
    Depart(PlayerId),
}

/// Kinds of valuation an instance carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValuationKind {
    Density,
    Demand,
    Mixed,
    Empty,
}

impl Instance {
    /// Arrivals only, `n_max` equal to their count.
    pub fn from_valuations(valuations: Vec<Valuation>, meta: InstanceMeta) -> Self {
        Self {
            n_max: valuations.len(),
            events: valuations.into_iter().map(InstanceEvent::Arrival).collect(),
            meta,
        }
    }

    pub fn arrivals(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, InstanceEvent::Arrival(_)))
            .count()
    }

    pub fn valuations(&self) -> impl Iterator<Item = &Valuation> {
        self.events.iter().filter_map(|e| match e {
            InstanceEvent::Arrival(v) => Some(v),
            InstanceEvent::Departure(_) => None,
        })
    }

    pub fn kind(&self) -> ValuationKind {
        let (mut dens, mut dem) = (false, false);
        for v in self.valuations() {
            match v {
                Valuation::Density(_) => dens = true,
                Valuation::Demand(_) => dem = true,
            }
        }
        match (dens, dem) {
            (true, true) => ValuationKind::Mixed,
            (true, false) => ValuationKind::Density,
            (false, true) => ValuationKind::Demand,
            (false, false) => ValuationKind::Empty,
        }
    }

    /// Checks that departures name live players and arrivals fit `n_max`.
    pub fn validate(&self) -> Result<()> {
        let mut live: Vec<bool> = Vec::new();
        for (k, e) in self.events.iter().enumerate() {
            let line = k + 2;
            match e {
                InstanceEvent::Arrival(_) => {
                    live.push(true);
                    if live.len() > self.n_max {
                        return Err(Error::Schema {
                            line,
                            detail: format!("more than n_max = {} arrivals", self.n_max),
                        });
                    }
                }
                InstanceEvent::Departure(p) => {
                    if p.0 == 0 || p.0 > live.len() || !live[p.index()] {
                        return Err(Error::Schema {
                            line,
                            detail: format!("departure of player {p} who is not present"),
                        });
                    }
                    live[p.index()] = false;
                }
            }
        }
        Ok(())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = HeaderLine {
            n_max: self.n_max,
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut w, &header).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        for e in &self.events {
            let line = match e {
                InstanceEvent::Arrival(v) => EventLine::Arrive(v.to_record()),
                InstanceEvent::Departure(p) => EventLine::Depart(*p),
            };
            serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let schema = |line: usize, detail: String| Error::Schema { line, detail };
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| schema(1, "empty instance file".into()))??;
        let header: HeaderLine =
            serde_json::from_str(&first).map_err(|e| schema(1, e.to_string()))?;
        let mut events = Vec::new();
        for (k, line) in lines.enumerate() {
            let line_no = k + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ev: EventLine =
                serde_json::from_str(&line).map_err(|e| schema(line_no, e.to_string()))?;
            events.push(match ev {
                EventLine::Arrive(rec) => InstanceEvent::Arrival(
                    rec.to_valuation()
                        .map_err(|e| schema(line_no, e.to_string()))?,
                ),
                EventLine::Depart(p) => InstanceEvent::Departure(p),
            });
        }
        let inst = Instance {
            n_max: header.n_max,
            events,
            meta: header.meta,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}
