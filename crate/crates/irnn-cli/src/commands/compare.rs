use std::path::PathBuf;

use clap::Args;

use irnn_core::{Error, Result};

use crate::manifest::{finalize, RunManifest};

use super::ensure_out_dir;

#[derive(Args)]
pub struct CompareArgs {
    /// summary.json files produced by `irnn train`.
    #[arg(required = true)]
    summaries: Vec<PathBuf>,

    #[arg(long)]
    out: PathBuf,
}

#[derive(serde::Deserialize)]
struct SummaryRow {
    model: String,
    row: RowFields,
}

#[derive(serde::Deserialize)]
struct RowFields {
    auc_mean: f64,
    auc_std: f64,
    ppv_mean: f64,
    ppv_std: f64,
    sp_mean: f64,
    sp_std: f64,
}

/// Assemble training summaries into one `model, AUC, PPV, Sp` table,
/// sorted by descending mean AUC.
pub fn run(args: CompareArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.summaries {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let summary: SummaryRow = serde_json::from_str(&text)?;
        rows.push(summary);
    }
    rows.sort_by(|a, b| {
        b.row
            .auc_mean
            .partial_cmp(&a.row.auc_mean)
            .expect("finite AUC")
    });

    let mut table = String::from("model,auc,ppv,specificity\n");
    for s in &rows {
        table.push_str(&format!(
            "{},{:.3} ({:.3}),{:.3} ({:.3}),{:.3} ({:.3})\n",
            s.model,
            s.row.auc_mean,
            s.row.auc_std,
            s.row.ppv_mean,
            s.row.ppv_std,
            s.row.sp_mean,
            s.row.sp_std
        ));
    }

    ensure_out_dir(&args.out)?;
    let path = args.out.join("comparison.csv");
    std::fs::write(&path, &table)?;

    let mut manifest = RunManifest::new(
        "compare",
        serde_json::json!({ "n_models": rows.len() }),
        &args.out,
    );
    for (i, p) in args.summaries.iter().enumerate() {
        manifest.input(&format!("summary_{i}"), p);
    }
    finalize(manifest, &args.out, &[path])?;

    print!("{table}");
    Ok(())
}
