use std::path::PathBuf;

use clap::Args;

use irnn_core::config::KvConfig;
use irnn_core::model::{IrnnConfig, ModelKind};
use irnn_core::train::{
    mean_std, run_protocol_split, ModelRow, ProtocolConfig, SeedRun, TrainConfig, CLIP_GRID,
    LR_GRID,
};
use irnn_core::{Error, Result};

use crate::manifest::{finalize, RunManifest};

use super::{ensure_out_dir, PreparedData};

#[derive(Args)]
pub struct TrainArgs {
    /// Prepared dataset directory (events.csv, outcomes.csv, splits.json).
    #[arg(long)]
    data: PathBuf,

    /// Model kind: irnn, gru_forward, gru_simple or logistic.
    #[arg(long)]
    model: String,

    /// Training config (flat key=value).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed for split/init/shuffle streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of train/validation split seeds.
    #[arg(long, default_value_t = 5)]
    seeds: u64,

    /// Validation fraction of the train/val pool.
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,

    /// Fixed padded sequence length.
    #[arg(long, default_value_t = 150)]
    max_len: usize,

    /// Explore the learning-rate × clip grid per seed instead of the
    /// configured point (cost: grid-size× longer).
    #[arg(long, default_value_t = false)]
    grid: bool,

    #[arg(long)]
    out: PathBuf,
}

#[derive(serde::Serialize)]
struct SeedSummary {
    seed: u64,
    best_epoch: usize,
    epochs_run: usize,
    val_auc: f64,
    test: irnn_core::metrics::EvalReport,
}

#[derive(serde::Serialize)]
struct TrainSummary {
    schema_version: u32,
    model: String,
    param_count: usize,
    n_seeds: u64,
    test_auc_mean: f64,
    test_auc_std: f64,
    row: ModelRow,
    seeds: Vec<SeedSummary>,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let kind: ModelKind = args.model.parse()?;
    let kv = match &args.config {
        Some(path) => KvConfig::load(path)?,
        None => KvConfig::default(),
    };
    let mut train_cfg = TrainConfig::from_kv(&kv)?;
    train_cfg.seed = args.seed;
    let irnn = IrnnConfig {
        mu_diagonal: kv.get_or("mu_diagonal", true)?,
        mu_static: kv.get_or("mu_static", false)?,
        gamma_diagonal: kv.get_or("gamma_diagonal", true)?,
    };

    let data = PreparedData::load(&args.data)?;
    let (trainval, test) = data.partition();
    if args.seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()));
    }

    let proto = ProtocolConfig {
        test_fraction: data.splits.test_fraction,
        val_fraction: args.val_fraction,
        n_seeds: args.seeds,
        master_seed: args.seed,
        max_len: args.max_len,
        train: train_cfg,
        irnn,
    };

    let seeds: Vec<SeedRun> = if args.grid {
        run_grid_protocol(kind, &trainval, &test, &data, &proto)?
    } else {
        run_protocol_split(kind, &trainval, &test, &data.labels, &data.feature_names, &proto)?
    };

    ensure_out_dir(&args.out)?;
    let mut artifacts = Vec::new();
    let mut summaries = Vec::new();
    for (k, run) in seeds.iter().enumerate() {
        let weights = args.out.join(format!("weights_{k}.json"));
        let stats = args.out.join(format!("stats_{k}.json"));
        let history = args.out.join(format!("history_{k}.csv"));
        run.model.save(&weights)?;
        run.stats.save(&stats)?;
        run.history.write_csv(&history)?;
        artifacts.extend([weights, stats, history]);
        summaries.push(SeedSummary {
            seed: run.seed,
            best_epoch: run.history.epochs[run.history.best_epoch].epoch,
            epochs_run: run.history.epochs.len(),
            val_auc: run.history.best_val_auc(),
            test: run.test_report.clone(),
        });
    }

    let reports: Vec<&irnn_core::metrics::EvalReport> =
        seeds.iter().map(|s| &s.test_report).collect();
    let row = ModelRow::from_reports(kind, &reports);
    let aucs: Vec<f64> = reports.iter().map(|r| r.auc).collect();
    let (test_auc_mean, test_auc_std) = mean_std(&aucs);
    let param_count = seeds[0].model.param_count();
    let summary = TrainSummary {
        schema_version: 1,
        model: kind.name().to_string(),
        param_count,
        n_seeds: args.seeds,
        test_auc_mean,
        test_auc_std,
        row,
        seeds: summaries,
    };
    let summary_path = args.out.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    artifacts.push(summary_path);

    let mut manifest = RunManifest::new(
        "train",
        serde_json::json!({
            "train": proto.train,
            "irnn": proto.irnn,
            "model": kind.name(),
            "seeds": args.seeds,
            "val_fraction": args.val_fraction,
            "max_len": args.max_len,
            "grid": args.grid,
        }),
        &args.out,
    );
    manifest.model_kind = Some(kind.name().to_string());
    manifest.seeds = seeds.iter().map(|s| s.seed).collect();
    manifest.input("data", &args.data);
    if let Some(cfg) = &args.config {
        manifest.input("config", cfg);
    }
    finalize(manifest, &args.out, &artifacts)?;

    println!(
        "{kind}: test AUC {:.3} ({:.3}) over {} seeds -> {}",
        test_auc_mean,
        test_auc_std,
        args.seeds,
        args.out.display()
    );
    Ok(())
}

/// Grid variant: each seed explores lr × clip on its own validation
/// split and keeps the winning cell's model.
fn run_grid_protocol(
    kind: ModelKind,
    trainval: &[irnn_core::datapipe::SampleEvents],
    test: &[irnn_core::datapipe::SampleEvents],
    data: &PreparedData,
    proto: &ProtocolConfig,
) -> Result<Vec<SeedRun>> {
    use irnn_core::datapipe::{build_dataset, fit_norm_stats, split_stratified};
    use irnn_core::metrics::EvalReport;
    use irnn_core::train::grid_search;
    use rayon::prelude::*;

    let trainval_labels: Vec<u8> = trainval
        .iter()
        .map(|g| data.labels[g.sample_id.as_str()])
        .collect();
    let mut out = Vec::new();
    for k in 0..proto.n_seeds {
        let seed = proto.master_seed + 1 + k;
        let parts = split_stratified(
            &trainval_labels,
            &[1.0 - proto.val_fraction, proto.val_fraction],
            seed,
        )?;
        let train_groups: Vec<_> = parts[0].iter().map(|&i| trainval[i].clone()).collect();
        let val_groups: Vec<_> = parts[1].iter().map(|&i| trainval[i].clone()).collect();
        let stats = fit_norm_stats(&train_groups, &data.feature_names, proto.max_len)?;
        let (train_ds, _) = build_dataset(&train_groups, &data.labels, &stats)?;
        let (val_ds, _) = build_dataset(&val_groups, &data.labels, &stats)?;
        let (test_ds, _) = build_dataset(test, &data.labels, &stats)?;

        let base = TrainConfig {
            seed,
            ..proto.train
        };
        let (_, model, history, _) = grid_search(
            kind, proto.irnn, &train_ds, &val_ds, &base, &LR_GRID, &CLIP_GRID,
        )?;
        let test_scores: Vec<f64> = test_ds
            .samples
            .par_iter()
            .map(|s| model.final_logit(s))
            .collect::<Result<Vec<f64>>>()?;
        let test_report = EvalReport::from_scores(&test_scores, &test_ds.labels())?;
        out.push(SeedRun {
            seed,
            model,
            stats,
            history,
            test_report,
            test_scores,
        });
    }
    Ok(out)
}
