//! Long-format event records.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// One raw measurement: a variable observed for a sample at a point in
/// time. Times are fractional hours since the sample's start.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub sample_id: String,
    pub time: f64,
    pub variable: String,
    pub value: f64,
}

impl EventRecord {
    fn validate(&self, path: &str, line: usize) -> Result<()> {
        if !self.time.is_finite() || self.time < 0.0 {
            return Err(Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("time must be a finite non-negative number, got {}", self.time),
            });
        }
        if !self.value.is_finite() {
            return Err(Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("value must be finite, got {}", self.value),
            });
        }
        Ok(())
    }
}

/// All events of one sample, sorted by time (stable for equal times).
#[derive(Debug, Clone)]
pub struct SampleEvents {
    pub sample_id: String,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Deserialize)]
struct LongRow {
    sample_id: String,
    time: f64,
    variable: String,
    value: f64,
}

/// Load a long CSV with header `sample_id,time,variable,value`.
///
/// Events are grouped by sample (groups ordered by first appearance in
/// the file) and sorted by time within each group. Rows that fail to
/// parse are reported with their line number. An empty file yields an
/// empty dataset.
pub fn load_long_csv(path: impl AsRef<Path>) -> Result<Vec<SampleEvents>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;

    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<EventRecord>> =
        std::collections::HashMap::new();

    for (i, row) in reader.deserialize::<LongRow>().enumerate() {
        // Header is line 1, first data row line 2.
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            path: display.clone(),
            line,
            msg: e.to_string(),
        })?;
        let record = EventRecord {
            sample_id: row.sample_id,
            time: row.time,
            variable: row.variable,
            value: row.value,
        };
        record.validate(&display, line)?;
        if !groups.contains_key(&record.sample_id) {
            order.push(record.sample_id.clone());
        }
        groups
            .entry(record.sample_id.clone())
            .or_default()
            .push(record);
    }

    Ok(order
        .into_iter()
        .map(|sample_id| {
            let mut events = groups.remove(&sample_id).unwrap_or_default();
            events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
            SampleEvents { sample_id, events }
        })
        .collect())
}

/// Load an outcomes CSV mapping sample id to a {0,1} label. The header
/// must contain a `sample_id`-like id column first and the label column
/// is matched by name (`label` or `In-hospital_death`).
pub fn load_outcomes(path: impl AsRef<Path>) -> Result<Vec<(String, u8)>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("label") || h == "In-hospital_death")
        .ok_or_else(|| Error::Data(format!("{display}: no label column in {headers:?}")))?;

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row?;
        let id = row
            .get(0)
            .ok_or_else(|| Error::Parse {
                path: display.clone(),
                line,
                msg: "missing id column".into(),
            })?
            .to_string();
        let raw = row.get(label_col).unwrap_or("");
        let label: u8 = raw.trim().parse().map_err(|_| Error::Parse {
            path: display.clone(),
            line,
            msg: format!("label must be 0 or 1, got {raw:?}"),
        })?;
        if label > 1 {
            return Err(Error::Parse {
                path: display,
                line,
                msg: format!("label must be 0 or 1, got {label}"),
            });
        }
        out.push((id, label));
    }
    Ok(out)
}
