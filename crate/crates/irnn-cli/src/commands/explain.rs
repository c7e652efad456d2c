use std::path::PathBuf;

use clap::Args;

use irnn_core::datapipe::{build_dataset, NormStats};
use irnn_core::explain::{
    decay_curve, global_importance, local_trace, risk_curve, PoolingMode, RiskCurveOptions,
};
use irnn_core::model::Model;
use irnn_core::{Error, Result};

use crate::manifest::{finalize, RunManifest};

use super::{ensure_out_dir, PreparedData};

#[derive(Args)]
pub struct ExplainArgs {
    /// Weights file (one seed's model).
    #[arg(long)]
    weights: PathBuf,

    /// Normalization stats file (defaults to the weights path with
    /// `weights` replaced by `stats`).
    #[arg(long)]
    stats: Option<PathBuf>,

    /// Prepared dataset directory.
    #[arg(long)]
    data: PathBuf,

    /// Export the contribution trace of one sample.
    #[arg(long)]
    sample_id: Option<String>,

    /// Export the ranked global feature importances.
    #[arg(long, default_value_t = false)]
    global: bool,

    /// Export per-feature risk curves.
    #[arg(long, default_value_t = false)]
    risk_curves: bool,

    /// Export per-feature decay-rate curves.
    #[arg(long, default_value_t = false)]
    decay: bool,

    /// Equal-frequency bins for risk curves.
    #[arg(long, default_value_t = 20)]
    bins: usize,

    /// Add a locally-weighted linear smooth to risk curves.
    #[arg(long, default_value_t = false)]
    smooth: bool,

    /// Pool risk-curve points per timestep instead of per sample.
    #[arg(long, default_value_t = false)]
    per_timestep: bool,

    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: ExplainArgs) -> Result<()> {
    if args.sample_id.is_none() && !args.global && !args.risk_curves && !args.decay {
        return Err(Error::Config(
            "nothing to export: pass --sample-id, --global, --risk-curves or --decay".into(),
        ));
    }
    let model = Model::load(&args.weights)?;
    let stats_path = args.stats.clone().unwrap_or_else(|| {
        PathBuf::from(args.weights.to_string_lossy().replace("weights", "stats"))
    });
    let stats = NormStats::load(&stats_path)?;
    let data = PreparedData::load(&args.data)?;
    let (dataset, _) = build_dataset(&data.groups, &data.labels, &stats)?;

    ensure_out_dir(&args.out)?;
    let mut artifacts = Vec::new();

    if let Some(id) = &args.sample_id {
        let sample = dataset
            .samples
            .iter()
            .find(|s| &s.sample_id == id)
            .ok_or_else(|| Error::Data(format!("sample {id} not found")))?;
        let trace = local_trace(&model, sample, &dataset.feature_names)?;
        let path = args.out.join(format!("trace_{id}.csv"));
        trace.write_csv(&path)?;
        artifacts.push(path);
    }

    if args.global {
        let gi = global_importance(&model, &dataset)?;
        let path = args.out.join("importance.json");
        gi.save(&path)?;
        artifacts.push(path);
    }

    if args.risk_curves {
        let options = RiskCurveOptions {
            n_bins: args.bins,
            smooth: args.smooth,
            pooling: if args.per_timestep {
                PoolingMode::PerTimestep
            } else {
                PoolingMode::LastObserved
            },
            ..RiskCurveOptions::default()
        };
        for d in 0..dataset.n_features() {
            match risk_curve(&model, &dataset, &stats, d, &options) {
                Ok(curve) => {
                    let path = args
                        .out
                        .join(format!("risk_{}.json", dataset.feature_names[d]));
                    curve.save(&path)?;
                    artifacts.push(path);
                }
                // A feature can be absent from this split; keep going.
                Err(Error::Data(msg)) => eprintln!("skipping risk curve: {msg}"),
                Err(other) => return Err(other),
            }
        }
    }

    if args.decay {
        let Model::Irnn(params) = &model else {
            return Err(Error::Unsupported(format!(
                "decay curves need the additive model, got {}",
                model.kind()
            )));
        };
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let curves: Vec<_> = (0..params.d)
            .map(|d| decay_curve(params, &stats, d, &grid))
            .collect::<Result<Vec<_>>>()?;
        let path = args.out.join("decay_curves.json");
        std::fs::write(&path, serde_json::to_string_pretty(&curves)?)?;
        artifacts.push(path);
    }

    let mut manifest = RunManifest::new(
        "explain",
        serde_json::json!({
            "sample_id": args.sample_id,
            "global": args.global,
            "risk_curves": args.risk_curves,
            "decay": args.decay,
            "bins": args.bins,
            "smooth": args.smooth,
            "per_timestep": args.per_timestep,
        }),
        &args.out,
    );
    manifest.model_kind = Some(model.kind().name().to_string());
    manifest.input("weights", &args.weights);
    manifest.input("stats", &stats_path);
    manifest.input("data", &args.data);
    finalize(manifest, &args.out, &artifacts)?;

    println!(
        "wrote {} explanation artifact(s) to {}",
        artifacts.len(),
        args.out.display()
    );
    Ok(())
}
