pub mod compare;
pub mod evaluate;
pub mod explain;
pub mod prepare;
pub mod synth;
pub mod train;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use irnn_core::datapipe::{load_long_csv, load_outcomes, SampleEvents};
use irnn_core::{Error, Result};

/// Frozen test holdout written by `prepare`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SplitsFile {
    pub schema_version: u32,
    pub seed: u64,
    pub test_fraction: f64,
    pub trainval_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// A prepared dataset directory: events, labels, and the holdout.
pub struct PreparedData {
    pub groups: Vec<SampleEvents>,
    pub labels: HashMap<String, u8>,
    pub splits: SplitsFile,
    pub feature_names: Vec<String>,
}

impl PreparedData {
    pub fn load(dir: &Path) -> Result<PreparedData> {
        let events_path = dir.join("events.csv");
        if !events_path.exists() {
            return Err(Error::Data(format!(
                "prepared dataset not found: missing {}",
                events_path.display()
            )));
        }
        let groups = load_long_csv(&events_path)?;
        let labels: HashMap<String, u8> =
            load_outcomes(dir.join("outcomes.csv"))?.into_iter().collect();
        let splits_path = dir.join("splits.json");
        if !splits_path.exists() {
            return Err(Error::Data(format!(
                "missing {}; run `irnn prepare` first",
                splits_path.display()
            )));
        }
        let splits: SplitsFile = serde_json::from_str(&std::fs::read_to_string(splits_path)?)?;

        // Deterministic feature list: every variable, sorted.
        let mut feature_names: Vec<String> = groups
            .iter()
            .flat_map(|g| g.events.iter().map(|e| e.variable.clone()))
            .collect();
        feature_names.sort();
        feature_names.dedup();

        Ok(PreparedData {
            groups,
            labels,
            splits,
            feature_names,
        })
    }

    pub fn partition(&self) -> (Vec<SampleEvents>, Vec<SampleEvents>) {
        let test: std::collections::HashSet<&str> =
            self.splits.test_ids.iter().map(|s| s.as_str()).collect();
        let mut trainval = Vec::new();
        let mut test_groups = Vec::new();
        for g in &self.groups {
            if test.contains(g.sample_id.as_str()) {
                test_groups.push(g.clone());
            } else {
                trainval.push(g.clone());
            }
        }
        (trainval, test_groups)
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Weight/stats file pairs inside a training output directory, ordered
/// by seed index.
pub fn seed_files(weights: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    if weights.is_file() {
        let stats = weights
            .to_string_lossy()
            .replace("weights", "stats")
            .into();
        return Ok(vec![(weights.to_path_buf(), stats)]);
    }
    let mut pairs = Vec::new();
    let mut names: Vec<String> = std::fs::read_dir(weights)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().to_string()))
        .filter(|n| n.starts_with("weights_") && n.ends_with(".json"))
        .collect();
    names.sort();
    for name in names {
        let stats_name = name.replace("weights_", "stats_");
        pairs.push((weights.join(&name), weights.join(stats_name)));
    }
    if pairs.is_empty() {
        return Err(Error::Data(format!(
            "no weights_*.json files under {}",
            weights.display()
        )));
    }
    Ok(pairs)
}
