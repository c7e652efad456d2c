//! Synthetic irregular time series with known risk functions.
//!
//! Per feature, observation times follow a homogeneous Poisson process
//! over the horizon and the latent value follows a mean-reverting
//! (Ornstein–Uhlenbeck) process sampled exactly at those times. The
//! label is Bernoulli in the sigmoid of a known additive log-odds:
//! per-feature risk functions of the last observed latent value plus an
//! optional trend term in one feature's observed slope. The generator
//! is the ground truth the explanation artifacts are checked against.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::config::KvConfig;
use crate::datapipe::{EventRecord, SampleEvents};
use crate::error::{Error, Result};
use crate::ndcore::sigmoid;
use crate::rng::{stream_rng, Stream};

/// Ground-truth per-feature risk shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskKind {
    Null,
    /// `scale · v`
    Linear { scale: f64 },
    /// `scale · (v² − 1)`, centered for a unit-variance latent.
    UShaped { scale: f64 },
    /// `scale · tanh(1.5 · v)`
    Saturating { scale: f64 },
}

impl RiskKind {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            RiskKind::Null => 0.0,
            RiskKind::Linear { scale } => scale * v,
            RiskKind::UShaped { scale } => scale * (v * v - 1.0),
            RiskKind::Saturating { scale } => scale * (1.5 * v).tanh(),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, RiskKind::Null)
    }

    /// Monotone non-decreasing in the value (what risk-curve recovery
    /// is checked against).
    pub fn is_monotone_signal(&self) -> bool {
        matches!(self, RiskKind::Linear { .. } | RiskKind::Saturating { .. })
    }

    fn parse(text: &str) -> Result<RiskKind> {
        let (kind, scale) = match text.split_once(':') {
            Some((k, s)) => {
                let scale: f64 = s.trim().parse().map_err(|_| {
                    Error::Config(format!("bad risk scale in {text:?}"))
                })?;
                (k.trim(), scale)
            }
            None => (text.trim(), 1.0),
        };
        match kind {
            "null" => Ok(RiskKind::Null),
            "linear" => Ok(RiskKind::Linear { scale }),
            "u" | "u_shaped" => Ok(RiskKind::UShaped { scale }),
            "saturating" => Ok(RiskKind::Saturating { scale }),
            other => Err(Error::Config(format!(
                "unknown risk kind {other:?}; expected null, linear, u, saturating"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub d: usize,
    pub n_samples: usize,
    pub horizon_hours: f64,
    /// Expected observations per hour, per feature.
    pub rates: Vec<f64>,
    /// Mean-reversion speed θ per feature.
    pub mean_reversion: Vec<f64>,
    /// Diffusion scale σ per feature (stationary std is σ/√(2θ)).
    pub noise_scale: Vec<f64>,
    pub risk: Vec<RiskKind>,
    /// Labels additionally depend on this feature's observed slope.
    pub trend_feature: Option<usize>,
    pub trend_coef: f64,
    pub intercept: f64,
    pub temperature: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    /// The benchmark configuration: 8 features over a 6 hour horizon,
    /// four carrying signal (linear / U-shaped / saturating / trend) and
    /// four null, 20 000 samples.
    pub fn default_benchmark() -> GeneratorConfig {
        let theta = 0.4;
        GeneratorConfig {
            d: 8,
            n_samples: 20_000,
            horizon_hours: 6.0,
            rates: vec![1.0, 1.0, 1.0, 2.5, 0.5, 0.5, 0.5, 0.5],
            mean_reversion: vec![theta; 8],
            noise_scale: vec![(2.0 * theta).sqrt(); 8],
            risk: vec![
                RiskKind::Linear { scale: 1.0 },
                RiskKind::UShaped { scale: 1.3 },
                RiskKind::Saturating { scale: 1.5 },
                RiskKind::Null, // trend feature
                RiskKind::Null,
                RiskKind::Null,
                RiskKind::Null,
                RiskKind::Null,
            ],
            trend_feature: Some(3),
            trend_coef: 5.0,
            intercept: -1.3,
            temperature: 1.0,
            seed: 0,
        }
    }

    /// No-signal control: all risks null, no trend term, balanced labels.
    pub fn null_control(n_samples: usize) -> GeneratorConfig {
        let theta = 0.4;
        GeneratorConfig {
            d: 4,
            n_samples,
            horizon_hours: 6.0,
            rates: vec![1.5, 1.0, 0.5, 2.0],
            mean_reversion: vec![theta; 4],
            noise_scale: vec![(2.0 * theta).sqrt(); 4],
            risk: vec![RiskKind::Null; 4],
            trend_feature: None,
            trend_coef: 0.0,
            intercept: 0.0,
            temperature: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if !(self.horizon_hours > 0.0) {
            return Err(Error::Config(format!(
                "horizon_hours must be positive, got {}",
                self.horizon_hours
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        for (name, list) in [
            ("rates", &self.rates),
            ("mean_reversion", &self.mean_reversion),
            ("noise_scale", &self.noise_scale),
        ] {
            if list.len() != self.d {
                return Err(Error::Config(format!(
                    "{name} must list {} entries, got {}",
                    self.d,
                    list.len()
                )));
            }
            if !list.iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} entries must be positive")));
            }
        }
        if self.risk.len() != self.d {
            return Err(Error::Config(format!(
                "risk must list {} entries, got {}",
                self.d,
                self.risk.len()
            )));
        }
        if let Some(tf) = self.trend_feature {
            if tf >= self.d {
                return Err(Error::Config(format!(
                    "trend_feature {tf} out of range for d = {}",
                    self.d
                )));
            }
        }
        Ok(())
    }

    /// Read overrides from a flat key-value config on top of the
    /// benchmark defaults. `risk` entries use `kind[:scale]` syntax.
    pub fn from_kv(kv: &KvConfig) -> Result<GeneratorConfig> {
        let base = GeneratorConfig::default_benchmark();
        let d: usize = kv.get_or("d", base.d)?;
        let theta_default = 0.4;
        let homogeneous = |key: &str, default: f64| -> Result<Vec<f64>> {
            // Either a per-feature list or one value for all features.
            match kv.get_list::<f64>(key)? {
                Some(list) if list.len() == 1 => Ok(vec![list[0]; d]),
                Some(list) => Ok(list),
                None => Ok(vec![default; d]),
            }
        };
        let risk = match kv.raw("risk") {
            None if d == base.d => base.risk.clone(),
            None => vec![RiskKind::Null; d],
            Some(text) => text
                .split(',')
                .map(RiskKind::parse)
                .collect::<Result<Vec<_>>>()?,
        };
        let trend_feature = match kv.raw("trend_feature") {
            None => base.trend_feature.filter(|_| d == base.d),
            Some("none") => None,
            Some(v) => Some(v.parse().map_err(|_| {
                Error::Config(format!("invalid value for `trend_feature`: {v:?}"))
            })?),
        };
        let cfg = GeneratorConfig {
            d,
            n_samples: kv.get_or("n_samples", base.n_samples)?,
            horizon_hours: kv.get_or("horizon_hours", base.horizon_hours)?,
            rates: homogeneous("rates", 1.0)?,
            mean_reversion: homogeneous("mean_reversion", theta_default)?,
            noise_scale: homogeneous("noise_scale", (2.0 * theta_default).sqrt())?,
            risk,
            trend_feature,
            trend_coef: kv.get_or("trend_coef", base.trend_coef)?,
            intercept: kv.get_or("intercept", base.intercept)?,
            temperature: kv.get_or("temperature", base.temperature)?,
            seed: kv.get_or("seed", base.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn feature_names(&self) -> Vec<String> {
        (0..self.d).map(|i| format!("f{i}")).collect()
    }
}

/// Ground truth recorded next to a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub schema_version: u32,
    pub config: GeneratorConfig,
    pub sample_ids: Vec<String>,
    /// True log-odds per sample (before the temperature).
    pub log_odds: Vec<f64>,
    pub labels: Vec<u8>,
}

/// A generated dataset in the long-event representation.
pub struct SynthDataset {
    pub groups: Vec<SampleEvents>,
    pub labels: HashMap<String, u8>,
    pub truth: TruthSidecar,
}

/// Evaluate the configured risk function of feature `d` on a value
/// grid, in the latent (≈ normalized) units the model sees.
pub fn true_risk(config: &GeneratorConfig, d: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if d >= config.d {
        return Err(Error::Contract(format!(
            "feature index {d} out of range for d = {}",
            config.d
        )));
    }
    Ok(grid.iter().map(|v| config.risk[d].eval(*v)).collect())
}

/// Generate the dataset. Deterministic per seed: each sample draws from
/// its own derived stream, so generation order (or parallelism) cannot
/// change the data.
pub fn generate(config: &GeneratorConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut groups = Vec::with_capacity(config.n_samples);
    let mut labels = HashMap::with_capacity(config.n_samples);
    let mut sample_ids = Vec::with_capacity(config.n_samples);
    let mut log_odds_all = Vec::with_capacity(config.n_samples);
    let mut label_vec = Vec::with_capacity(config.n_samples);

    let width = (config.n_samples as f64).log10().ceil().max(1.0) as usize;
    for i in 0..config.n_samples {
        let mut rng = stream_rng(config.seed, Stream::SynthSample(i as u64));
        let sample_id = format!("s{i:0width$}");

        let mut events: Vec<EventRecord> = Vec::new();
        let mut log_odds = config.intercept;
        for d in 0..config.d {
            let (times, values) = simulate_feature(config, d, &mut rng);
            let last = values.last().copied();
            log_odds += config.risk[d].eval(last.unwrap_or(0.0));
            if config.trend_feature == Some(d) && times.len() >= 2 {
                let dt = times[times.len() - 1] - times[0];
                if dt > 0.0 {
                    let slope = (values[values.len() - 1] - values[0]) / dt;
                    log_odds += config.trend_coef * slope;
                }
            }
            for (t, v) in times.iter().zip(&values) {
                events.push(EventRecord {
                    sample_id: sample_id.clone(),
                    time: *t,
                    variable: format!("f{d}"),
                    value: *v,
                });
            }
        }
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));

        let p = sigmoid(log_odds / config.temperature);
        let label = rng.random_bool(p) as u8;

        labels.insert(sample_id.clone(), label);
        sample_ids.push(sample_id.clone());
        log_odds_all.push(log_odds);
        label_vec.push(label);
        groups.push(SampleEvents { sample_id, events });
    }

    Ok(SynthDataset {
        groups,
        labels,
        truth: TruthSidecar {
            schema_version: 1,
            config: config.clone(),
            sample_ids,
            log_odds: log_odds_all,
            labels: label_vec,
        },
    })
}

/// Poisson observation times and the exactly-sampled OU latent at those
/// times. The latent starts from its stationary distribution.
fn simulate_feature(
    config: &GeneratorConfig,
    d: usize,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    let rate = config.rates[d];
    let theta = config.mean_reversion[d];
    let sigma = config.noise_scale[d];
    let stationary_var = sigma * sigma / (2.0 * theta);

    let gap = Exp::new(rate).expect("rate > 0");
    let mut times = Vec::new();
    let mut t = gap.sample(rng);
    while t <= config.horizon_hours {
        times.push(t);
        t += gap.sample(rng);
    }

    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut values = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut x = unit.sample(rng) * stationary_var.sqrt();
    for t in &times {
        let dt = t - prev_t;
        let shrink = (-theta * dt).exp();
        let var = stationary_var * (1.0 - shrink * shrink);
        x = x * shrink + unit.sample(rng) * var.sqrt();
        values.push(x);
        prev_t = *t;
    }
    (times, values)
}

impl SynthDataset {
    /// Write `events.csv`, `outcomes.csv` and `truth.json` into a
    /// directory in the formats the data pipeline consumes.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;

        let mut events = String::from("sample_id,time,variable,value\n");
        for group in &self.groups {
            for e in &group.events {
                writeln!(events, "{},{},{},{}", e.sample_id, e.time, e.variable, e.value)
                    .expect("write to string");
            }
        }
        std::fs::write(dir.join("events.csv"), events)?;

        let mut outcomes = String::from("sample_id,label\n");
        for (id, label) in self.truth.sample_ids.iter().zip(&self.truth.labels) {
            writeln!(outcomes, "{id},{label}").expect("write to string");
        }
        std::fs::write(dir.join("outcomes.csv"), outcomes)?;

        std::fs::write(
            dir.join("truth.json"),
            serde_json::to_string_pretty(&self.truth)?,
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> GeneratorConfig {
        GeneratorConfig {
            d: 2,
            n_samples: 50,
            horizon_hours: 6.0,
            rates: vec![1.0, 2.0],
            mean_reversion: vec![0.4, 0.4],
            noise_scale: vec![0.894, 0.894],
            risk: vec![RiskKind::Linear { scale: 1.0 }, RiskKind::Null],
            trend_feature: None,
            trend_coef: 0.0,
            intercept: 0.0,
            temperature: 1.0,
            seed: 9,
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let cfg = small_config();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.truth.labels, b.truth.labels);
        for (ga, gb) in a.groups.iter().zip(&b.groups) {
            assert_eq!(ga.events.len(), gb.events.len());
            for (ea, eb) in ga.events.iter().zip(&gb.events) {
                assert_eq!(ea.time.to_bits(), eb.time.to_bits());
                assert_eq!(ea.value.to_bits(), eb.value.to_bits());
            }
        }
        let mut cfg2 = cfg;
        cfg2.seed = 10;
        let c = generate(&cfg2).unwrap();
        assert_ne!(a.truth.log_odds, c.truth.log_odds);
    }

    #[test]
    fn near_zero_temperature_makes_labels_deterministic() {
        let mut cfg = small_config();
        cfg.temperature = 1e-6;
        let ds = generate(&cfg).unwrap();
        for (lo, label) in ds.truth.log_odds.iter().zip(&ds.truth.labels) {
            if lo.abs() > 1e-3 {
                assert_eq!(*label, (*lo > 0.0) as u8);
            }
        }
    }

    #[test]
    fn poisson_rate_yields_expected_observation_count() {
        let mut cfg = small_config();
        cfg.n_samples = 1000;
        cfg.rates = vec![1.0, 1.0];
        let ds = generate(&cfg).unwrap();
        let total: usize = ds
            .groups
            .iter()
            .map(|g| g.events.iter().filter(|e| e.variable == "f0").count())
            .sum();
        // Sum of 1000 Poisson(6) draws: mean 6000, std √6000 ≈ 77.5.
        let mean = total as f64 / 1000.0;
        assert!(
            (mean - 6.0).abs() < 3.0 * (6000.0_f64).sqrt() / 1000.0,
            "mean observations per sample = {mean}"
        );
    }

    #[test]
    fn prevalence_tracks_the_sigmoid_of_log_odds() {
        let mut cfg = small_config();
        cfg.n_samples = 2000;
        cfg.intercept = -1.0;
        let ds = generate(&cfg).unwrap();
        let expected: f64 = ds
            .truth
            .log_odds
            .iter()
            .map(|lo| sigmoid(lo / cfg.temperature))
            .sum::<f64>();
        let var: f64 = ds
            .truth
            .log_odds
            .iter()
            .map(|lo| {
                let p = sigmoid(lo / cfg.temperature);
                p * (1.0 - p)
            })
            .sum::<f64>();
        let got: f64 = ds.truth.labels.iter().map(|l| *l as f64).sum();
        assert!(
            (got - expected).abs() <= 3.0 * var.sqrt(),
            "labels {got} vs expected {expected} ± {}",
            3.0 * var.sqrt()
        );
    }

    #[test]
    fn true_risk_shapes() {
        let cfg = small_config();
        let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let linear = true_risk(&cfg, 0, &grid).unwrap();
        assert_eq!(linear, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let null = true_risk(&cfg, 1, &grid).unwrap();
        assert_eq!(null, vec![0.0; 5]);

        let u = RiskKind::UShaped { scale: 1.0 };
        assert_eq!(u.eval(-2.0), u.eval(2.0));
        assert!(u.eval(0.0) < u.eval(2.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = small_config();
        cfg.d = 0;
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));

        let mut cfg = small_config();
        cfg.rates = vec![1.0];
        assert!(generate(&cfg).is_err());

        let mut cfg = small_config();
        cfg.trend_feature = Some(5);
        assert!(generate(&cfg).is_err());

        let mut cfg = small_config();
        cfg.temperature = 0.0;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn written_dataset_round_trips_through_the_pipeline() {
        let cfg = small_config();
        let ds = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.write_dir(dir.path()).unwrap();

        let groups = crate::datapipe::load_long_csv(dir.path().join("events.csv")).unwrap();
        let outcomes =
            crate::datapipe::load_outcomes(dir.path().join("outcomes.csv")).unwrap();
        // Samples with zero events overall drop out of the CSV; all
        // others must round-trip exactly.
        let nonempty = ds.groups.iter().filter(|g| !g.events.is_empty()).count();
        assert_eq!(groups.len(), nonempty);
        assert_eq!(outcomes.len(), cfg.n_samples);
        let by_id: HashMap<&str, &SampleEvents> = ds
            .groups
            .iter()
            .map(|g| (g.sample_id.as_str(), g))
            .collect();
        for g in &groups {
            let orig = by_id[g.sample_id.as_str()];
            assert_eq!(g.events.len(), orig.events.len());
            for (a, b) in g.events.iter().zip(&orig.events) {
                assert_eq!(a.time.to_bits(), b.time.to_bits());
                assert_eq!(a.value.to_bits(), b.value.to_bits());
                assert_eq!(a.variable, b.variable);
            }
        }
    }
}
