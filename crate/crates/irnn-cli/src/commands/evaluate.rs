use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use irnn_core::datapipe::{build_dataset, NormStats};
use irnn_core::metrics::EvalReport;
use irnn_core::model::Model;
use irnn_core::train::{mean_std, ModelRow};
use irnn_core::{Error, Result};

use crate::manifest::{finalize, RunManifest};

use super::{ensure_out_dir, seed_files, PreparedData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalSplit {
    Test,
    Trainval,
    All,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Training output directory (weights_*.json + stats_*.json) or a
    /// single weights file.
    #[arg(long)]
    weights: PathBuf,

    /// Prepared dataset directory.
    #[arg(long)]
    data: PathBuf,

    /// Which split to evaluate.
    #[arg(long, value_enum, default_value_t = EvalSplit::Test)]
    split: EvalSplit,

    #[arg(long)]
    out: PathBuf,
}

#[derive(serde::Serialize)]
struct EvaluationFile {
    schema_version: u32,
    model: String,
    split: String,
    reports: Vec<EvalReport>,
    auc_mean: f64,
    auc_std: f64,
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let data = PreparedData::load(&args.data)?;
    let (trainval, test) = data.partition();
    let (groups, split_name) = match args.split {
        EvalSplit::Test => (test, "test"),
        EvalSplit::Trainval => {
            eprintln!(
                "provenance warning: evaluating on the train/validation split; \
                 these samples were seen during training or model selection"
            );
            (trainval, "trainval")
        }
        EvalSplit::All => {
            eprintln!(
                "provenance warning: evaluating on all samples including the \
                 training split"
            );
            (data.groups.clone(), "all")
        }
    };
    if groups.is_empty() {
        return Err(Error::Data(format!("{split_name} split is empty")));
    }

    let pairs = seed_files(&args.weights)?;
    let mut reports = Vec::new();
    let mut model_name = String::new();
    for (weights_path, stats_path) in &pairs {
        let model = Model::load(weights_path)?;
        let stats = NormStats::load(stats_path)?;
        model_name = model.kind().name().to_string();
        let (ds, _) = build_dataset(&groups, &data.labels, &stats)?;
        let scores: Vec<f64> = ds
            .samples
            .par_iter()
            .map(|s| model.final_logit(s))
            .collect::<Result<Vec<f64>>>()?;
        reports.push(EvalReport::from_scores(&scores, &ds.labels())?);
    }

    let aucs: Vec<f64> = reports.iter().map(|r| r.auc).collect();
    let (auc_mean, auc_std) = mean_std(&aucs);
    ensure_out_dir(&args.out)?;
    let eval_path = args.out.join("evaluation.json");
    std::fs::write(
        &eval_path,
        serde_json::to_string_pretty(&EvaluationFile {
            schema_version: 1,
            model: model_name.clone(),
            split: split_name.to_string(),
            reports: reports.clone(),
            auc_mean,
            auc_std,
        })?,
    )?;

    // Comparison-table row: model, AUC mean (std), PPV, Sp.
    let kind = model_name.parse()?;
    let row = ModelRow::from_reports(kind, &reports.iter().collect::<Vec<_>>());
    let row_path = args.out.join("comparison_row.csv");
    std::fs::write(
        &row_path,
        format!("model,auc,ppv,specificity\n{}\n", row.to_csv_row()),
    )?;

    let mut manifest = RunManifest::new(
        "evaluate",
        serde_json::json!({ "split": split_name, "n_weight_sets": pairs.len() }),
        &args.out,
    );
    manifest.model_kind = Some(model_name);
    manifest.input("weights", &args.weights);
    manifest.input("data", &args.data);
    finalize(manifest, &args.out, &[eval_path, row_path])?;

    println!("{}", row.to_csv_row());
    Ok(())
}
