//! PhysioNet 2012 challenge record files.
//!
//! Per-record text files with header `Time,Parameter,Value`, times as
//! `HH:MM` since ICU admission (hours may exceed 24). The first rows at
//! `00:00` carry general descriptors (RecordID, Age, Gender, Height,
//! ICUType, admission weight), emitted here as events at time 0. Values
//! outside a per-variable plausibility range are dropped and counted.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

use super::events::{EventRecord, SampleEvents};

/// The 39 modeled variables, in canonical order.
pub const FEATURES: [&str; 39] = [
    "ALP",
    "ALT",
    "AST",
    "Albumin",
    "BUN",
    "Bilirubin",
    "Cholesterol",
    "Creatinine",
    "DiasABP",
    "FiO2",
    "GCS",
    "Glucose",
    "HCO3",
    "HCT",
    "HR",
    "K",
    "Lactate",
    "MAP",
    "MechVent",
    "Mg",
    "NIDiasABP",
    "NIMAP",
    "NISysABP",
    "Na",
    "PaCO2",
    "PaO2",
    "Platelets",
    "RespRate",
    "SaO2",
    "SysABP",
    "Temp",
    "Urine",
    "WBC",
    "pH",
    "Age",
    "Gender",
    "Height",
    "ICUType",
    "AdmissionWeight",
];

pub fn feature_list() -> Vec<String> {
    FEATURES.iter().map(|s| s.to_string()).collect()
}

/// Per-variable plausible value ranges; values outside are dropped.
/// Variables without an entry pass through.
#[derive(Debug, Clone)]
pub struct PlausibilityFilter {
    ranges: HashMap<String, (f64, f64)>,
}

const DEFAULT_FILTERS: &str = include_str!("../../data/physionet_filters.csv");

impl PlausibilityFilter {
    /// The table shipped with the crate.
    pub fn default_table() -> Self {
        Self::from_csv_str(DEFAULT_FILTERS, "builtin physionet_filters.csv")
            .expect("builtin filter table parses")
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn from_csv_str(text: &str, label: &str) -> Result<Self> {
        let mut ranges = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let parse_err = |msg: String| Error::Parse {
                path: label.to_string(),
                line: i + 1,
                msg,
            };
            if parts.len() != 3 {
                return Err(parse_err(format!("expected variable,min,max, got {line:?}")));
            }
            let min: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad min {:?}", parts[1])))?;
            let max: f64 = parts[2]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad max {:?}", parts[2])))?;
            ranges.insert(parts[0].trim().to_string(), (min, max));
        }
        Ok(PlausibilityFilter { ranges })
    }

    pub fn allows(&self, variable: &str, value: f64) -> bool {
        match self.ranges.get(variable) {
            Some((min, max)) => value >= *min && value <= *max,
            None => true,
        }
    }
}

/// Counts of values dropped by the plausibility filter, per variable.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct DropReport {
    pub dropped: BTreeMap<String, usize>,
}

impl DropReport {
    pub fn total(&self) -> usize {
        self.dropped.values().sum()
    }

    pub fn merge(&mut self, other: DropReport) {
        for (k, v) in other.dropped {
            *self.dropped.entry(k).or_insert(0) += v;
        }
    }
}

/// `HH:MM` to fractional hours; `HH` may exceed 24.
fn parse_clock(text: &str) -> Option<f64> {
    let (h, m) = text.split_once(':')?;
    let hours: u32 = h.trim().parse().ok()?;
    let minutes: u32 = m.trim().parse().ok()?;
    if minutes >= 60 {
        return None;
    }
    Some(hours as f64 + minutes as f64 / 60.0)
}

/// Load one record file. Returns the record's events (sorted by time)
/// and the per-variable drop counts.
pub fn load_physionet_record(
    path: impl AsRef<Path>,
    filter: &PlausibilityFilter,
) -> Result<(SampleEvents, DropReport)> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)?;

    let fallback_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "unknown".to_string());
    let mut record_id: Option<String> = None;
    let mut events: Vec<EventRecord> = Vec::new();
    let mut report = DropReport::default();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || (i == 0 && trimmed.starts_with("Time")) {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                path: display.clone(),
                line,
                msg: format!("expected Time,Parameter,Value, got {trimmed:?}"),
            });
        }
        let time = parse_clock(parts[0]).ok_or_else(|| Error::Parse {
            path: display.clone(),
            line,
            msg: format!("malformed time field {:?}", parts[0]),
        })?;
        let parameter = parts[1].trim();
        if parameter.is_empty() {
            continue;
        }
        if parameter == "RecordID" {
            record_id = Some(parts[2].trim().to_string());
            continue;
        }
        let value: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
            path: display.clone(),
            line,
            msg: format!("bad value {:?} for {parameter}", parts[2]),
        })?;

        // Admission weight is the Weight descriptor charted at time 0;
        // later Weight rows stay a separate time series variable.
        let variable = if parameter == "Weight" && time == 0.0 {
            "AdmissionWeight".to_string()
        } else {
            parameter.to_string()
        };

        if !filter.allows(&variable, value) {
            *report.dropped.entry(variable).or_insert(0) += 1;
            continue;
        }
        events.push(EventRecord {
            sample_id: String::new(),
            time,
            variable,
            value,
        });
    }

    let sample_id = record_id.unwrap_or(fallback_id);
    for e in &mut events {
        e.sample_id = sample_id.clone();
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
    Ok((SampleEvents { sample_id, events }, report))
}

/// Load every record file in a directory (files sorted by name for
/// determinism), aggregating the drop report.
pub fn load_physionet_dir(
    dir: impl AsRef<Path>,
    filter: &PlausibilityFilter,
) -> Result<(Vec<SampleEvents>, DropReport)> {
    let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "txt").unwrap_or(false))
        .collect();
    paths.sort();

    let mut groups = Vec::with_capacity(paths.len());
    let mut report = DropReport::default();
    for path in paths {
        let (group, r) = load_physionet_record(&path, filter)?;
        report.merge(r);
        groups.push(group);
    }
    Ok((groups, report))
}
