use std::path::PathBuf;

use clap::Args;

use irnn_core::config::KvConfig;
use irnn_core::synthgen::{generate, GeneratorConfig};
use irnn_core::Result;

use crate::manifest::{finalize, RunManifest};

use super::ensure_out_dir;

#[derive(Args)]
pub struct SynthArgs {
    /// Generator config (flat key=value); defaults to the benchmark.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,

    /// Sample count (overrides the config file).
    #[arg(long)]
    n_samples: Option<usize>,

    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: SynthArgs) -> Result<()> {
    let kv = match &args.config {
        Some(path) => KvConfig::load(path)?,
        None => KvConfig::default(),
    };
    let mut config = GeneratorConfig::from_kv(&kv)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.n_samples {
        config.n_samples = n;
    }
    config.validate()?;

    let dataset = generate(&config)?;
    ensure_out_dir(&args.out)?;
    dataset.write_dir(&args.out)?;

    let mut manifest =
        RunManifest::new("synth", serde_json::to_value(&config)?, &args.out);
    manifest.seeds.push(config.seed);
    if let Some(path) = &args.config {
        manifest.input("config", path);
    }
    finalize(
        manifest,
        &args.out,
        &[
            args.out.join("events.csv"),
            args.out.join("outcomes.csv"),
            args.out.join("truth.json"),
        ],
    )?;

    let prevalence = dataset.truth.labels.iter().map(|l| *l as f64).sum::<f64>()
        / dataset.truth.labels.len() as f64;
    println!(
        "wrote {} samples ({} events, prevalence {:.3}) to {}",
        config.n_samples,
        dataset.groups.iter().map(|g| g.events.len()).sum::<usize>(),
        prevalence,
        args.out.display()
    );
    Ok(())
}
