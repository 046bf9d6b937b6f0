//! Timestamped arrival records and their CSV form
//! (`timestamp,system_id,item_count` with a header row).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub timestamp: f64,
    pub system_id: String,
    pub item_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub events: Vec<TraceEvent>,
}

impl EventTrace {
    /// Validates every event and orders them by timestamp. The sort is
    /// stable, so events sharing a timestamp keep their relative order.
    pub fn new(mut events: Vec<TraceEvent>) -> Result<Self> {
        for (i, e) in events.iter().enumerate() {
            if !(e.timestamp.is_finite() && e.timestamp >= 0.0) {
                return Err(Error::invalid(
                    format!("events[{i}].timestamp"),
                    format!("{} must be finite and >= 0", e.timestamp),
                ));
            }
            if e.item_count == 0 {
                return Err(Error::invalid(format!("events[{i}].item_count"), "must be >= 1"));
            }
        }
        events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(EventTrace { events })
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// Sum of `item_count` over all events.
    pub fn total_items(&self) -> u64 {
        self.events.iter().map(|e| e.item_count).sum()
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let events = rdr.deserialize().collect::<std::result::Result<Vec<TraceEvent>, _>>()?;
        EventTrace::new(events)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        wtr.write_record(["timestamp", "system_id", "item_count"])?;
        for e in &self.events {
            wtr.serialize(e)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }
}
