use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use irnn_core::datapipe::physionet::{self, PlausibilityFilter};
use irnn_core::datapipe::{load_long_csv, load_outcomes, split_stratified, SampleEvents};
use irnn_core::{Error, Result};

use crate::manifest::{finalize, RunManifest};

use super::{ensure_out_dir, SplitsFile};

#[derive(Args)]
pub struct PrepareArgs {
    /// Directory with events.csv + outcomes.csv (long format).
    #[arg(long, conflicts_with = "physionet")]
    data: Option<PathBuf>,

    /// Directory of PhysioNet-2012 per-record .txt files.
    #[arg(long, requires = "outcomes")]
    physionet: Option<PathBuf>,

    /// Outcomes CSV for --physionet (record id to in-hospital death).
    #[arg(long)]
    outcomes: Option<PathBuf>,

    /// Override the plausibility filter table (variable,min,max CSV).
    #[arg(long)]
    filters: Option<PathBuf>,

    /// Seed for the stratified test holdout.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Fraction of samples held out for testing.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,

    #[arg(long)]
    out: PathBuf,
}

#[derive(serde::Serialize)]
struct PrepareReport {
    schema_version: u32,
    n_samples: usize,
    n_events: usize,
    n_skipped_empty: usize,
    dropped_by_filter: std::collections::BTreeMap<String, usize>,
}

pub fn run(args: PrepareArgs) -> Result<()> {
    let (mut groups, labels, dropped, source): (
        Vec<SampleEvents>,
        HashMap<String, u8>,
        _,
        String,
    ) = match (&args.data, &args.physionet) {
        (Some(dir), None) => {
            let groups = load_long_csv(dir.join("events.csv"))?;
            let labels: HashMap<String, u8> =
                load_outcomes(dir.join("outcomes.csv"))?.into_iter().collect();
            (
                groups,
                labels,
                Default::default(),
                dir.display().to_string(),
            )
        }
        (None, Some(dir)) => {
            let filter = match &args.filters {
                Some(path) => PlausibilityFilter::from_csv_path(path)?,
                None => PlausibilityFilter::default_table(),
            };
            let (groups, report) = physionet::load_physionet_dir(dir, &filter)?;
            let outcomes_path = args.outcomes.as_ref().expect("clap requires outcomes");
            let labels: HashMap<String, u8> =
                load_outcomes(outcomes_path)?.into_iter().collect();
            (groups, labels, report.dropped, dir.display().to_string())
        }
        _ => {
            return Err(Error::Config(
                "exactly one of --data or --physionet is required".into(),
            ))
        }
    };

    // Samples left with no events cannot be built into grids.
    let before = groups.len();
    groups.retain(|g| !g.events.is_empty());
    let n_skipped_empty = before - groups.len();

    if groups.is_empty() {
        return Err(Error::Data("no usable samples after preparation".into()));
    }
    let label_vec: Vec<u8> = groups
        .iter()
        .map(|g| {
            labels
                .get(g.sample_id.as_str())
                .copied()
                .ok_or_else(|| Error::Data(format!("no label for sample {}", g.sample_id)))
        })
        .collect::<Result<Vec<u8>>>()?;

    let parts = split_stratified(
        &label_vec,
        &[1.0 - args.test_fraction, args.test_fraction],
        args.seed,
    )?;
    let splits = SplitsFile {
        schema_version: 1,
        seed: args.seed,
        test_fraction: args.test_fraction,
        trainval_ids: parts[0].iter().map(|&i| groups[i].sample_id.clone()).collect(),
        test_ids: parts[1].iter().map(|&i| groups[i].sample_id.clone()).collect(),
    };

    ensure_out_dir(&args.out)?;
    let mut events = String::from("sample_id,time,variable,value\n");
    let mut n_events = 0usize;
    for g in &groups {
        for e in &g.events {
            writeln!(events, "{},{},{},{}", e.sample_id, e.time, e.variable, e.value)
                .expect("write to string");
            n_events += 1;
        }
    }
    std::fs::write(args.out.join("events.csv"), events)?;

    let mut outcomes = String::from("sample_id,label\n");
    for (g, label) in groups.iter().zip(&label_vec) {
        writeln!(outcomes, "{},{}", g.sample_id, label).expect("write to string");
    }
    std::fs::write(args.out.join("outcomes.csv"), outcomes)?;
    std::fs::write(
        args.out.join("splits.json"),
        serde_json::to_string_pretty(&splits)?,
    )?;
    let report = PrepareReport {
        schema_version: 1,
        n_samples: groups.len(),
        n_events,
        n_skipped_empty,
        dropped_by_filter: dropped,
    };
    std::fs::write(
        args.out.join("prepare_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    let mut manifest = RunManifest::new(
        "prepare",
        serde_json::json!({
            "seed": args.seed,
            "test_fraction": args.test_fraction,
            "source": source,
        }),
        &args.out,
    );
    manifest.seeds.push(args.seed);
    finalize(
        manifest,
        &args.out,
        &[
            args.out.join("events.csv"),
            args.out.join("outcomes.csv"),
            args.out.join("splits.json"),
            args.out.join("prepare_report.json"),
        ],
    )?;

    println!(
        "prepared {} samples ({} test, {} train/val) into {}",
        groups.len(),
        splits.test_ids.len(),
        splits.trainval_ids.len(),
        args.out.display()
    );
    Ok(())
}
