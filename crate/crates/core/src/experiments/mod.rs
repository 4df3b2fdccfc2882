//! Episode execution, parameter sweeps and aggregation.

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buyers::{theta_grid, BuyerSpec, BuyerStrategy, PolicyBuyer, ThresholdBuyer, TruthfulBuyer};
use crate::error::{Error, Result};
use crate::model::{
    benchmark_rate, buyer_surplus, realized_benchmark_rate, seller_revenue, Discount, EpisodeResult, Price,
    Transcript, ValueModel,
};
use crate::seed::{mix64, stream_rng, SELLER_STREAM, VALUE_STREAM};
use crate::sellers::{SellerSpec, SellerTransducer};
use crate::solver::{solve_best_response, SolverOptions};

mod chart;
mod output;

pub use chart::{render_chart, render_chart_svg};
pub use output::{
    fmt_float, read_csv, rows_to_csv, summaries_to_csv, write_csv, write_summary_csv, CsvContents, ROW_HEADER,
    SUMMARY_HEADER,
};

/// Which per-round benchmark regret is measured against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkMode {
    /// Monopoly revenue of the value model.
    #[default]
    Model,
    /// Best fixed price in hindsight on the realized values.
    Realized,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeOptions {
    pub solver: SolverOptions,
    pub benchmark: BenchmarkMode,
}

/// Plays one episode.
///
/// The seller draws from stream `mix64(seed, 0)` and buyer values from
/// stream `mix64(seed, 1)`.
pub fn run_episode(
    seller: &SellerSpec,
    buyer: &BuyerSpec,
    vm: &ValueModel,
    gamma: Discount,
    horizon: u32,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<(Transcript, EpisodeResult)> {
    let transcript = match buyer {
        BuyerSpec::Truthful => play(seller, &mut TruthfulBuyer, vm, horizon, seed)?,
        BuyerSpec::Threshold(theta) => play(seller, &mut ThresholdBuyer::new(*theta), vm, horizon, seed)?,
        BuyerSpec::ThresholdOpt => {
            let (theta, _) = optimize_threshold(seller, vm, gamma, horizon, seed)?;
            play(seller, &mut ThresholdBuyer::new(theta), vm, horizon, seed)?
        }
        BuyerSpec::BestResponse => {
            let v = vm
                .as_fixed()
                .ok_or_else(|| Error::invalid("bestresponse buyer needs a fixed value model"))?;
            let initial = seller.build(horizon)?;
            let report = solve_best_response(&initial, v, gamma, &options.solver)?;
            let mut b = PolicyBuyer::new(Arc::new(report.policy), initial)?;
            play(seller, &mut b, vm, horizon, seed)?
        }
    };
    let result = score(&transcript, seller, buyer, vm, gamma, seed, options.benchmark);
    Ok((transcript, result))
}

fn play<B: BuyerStrategy>(
    seller: &SellerSpec,
    buyer: &mut B,
    vm: &ValueModel,
    horizon: u32,
    seed: u64,
) -> Result<Transcript> {
    let mut s = seller.build(horizon)?;
    let mut seller_rng = stream_rng(seed, SELLER_STREAM);
    let mut value_rng = stream_rng(seed, VALUE_STREAM);
    let mut tr = Transcript::new(horizon);
    for t in 1..=horizon {
        let value = vm.sample(&mut value_rng);
        let price = s.offer(t, &mut seller_rng)?;
        let accepted = buyer.decide(t, price, value, &tr)?;
        s.update(t, price, accepted);
        tr.push(price, accepted, value)?;
    }
    Ok(tr)
}

fn score(
    tr: &Transcript,
    seller: &SellerSpec,
    buyer: &BuyerSpec,
    vm: &ValueModel,
    gamma: Discount,
    seed: u64,
    mode: BenchmarkMode,
) -> EpisodeResult {
    let revenue = seller_revenue(tr);
    let rate = match mode {
        BenchmarkMode::Model => benchmark_rate(vm).1,
        BenchmarkMode::Realized => {
            let values: Vec<f64> = tr.records().iter().map(|r| r.value).collect();
            realized_benchmark_rate(&values)
        }
    };
    EpisodeResult {
        revenue,
        surplus: buyer_surplus(tr, gamma),
        benchmark_rate: rate,
        regret: tr.horizon() as f64 * rate - revenue,
        horizon: tr.horizon(),
        gamma,
        seed,
        seller: seller.to_string(),
        buyer: buyer.to_string(),
    }
}

/// Threshold from [`theta_grid`] maximizing the buyer's realized surplus,
/// every candidate replayed on the same seed; ties go to the lower theta.
pub fn optimize_threshold(
    seller: &SellerSpec,
    vm: &ValueModel,
    gamma: Discount,
    horizon: u32,
    seed: u64,
) -> Result<(Price, f64)> {
    let mut best: Option<(Price, f64)> = None;
    for theta in theta_grid() {
        let tr = play(seller, &mut ThresholdBuyer::new(theta), vm, horizon, seed)?;
        let surplus = buyer_surplus(&tr, gamma);
        if best.is_none_or(|(_, s)| surplus > s) {
            best = Some((theta, surplus));
        }
    }
    Ok(best.expect("theta grid is non-empty"))
}

/// A sweep definition, read from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seller: String,
    pub buyer: String,
    pub value_model: String,
    pub gammas: Vec<f64>,
    pub horizons: Vec<u32>,
    pub replications: u32,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub benchmark: BenchmarkMode,
}

/// An [`ExperimentConfig`] with every field parsed and checked.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub seller: SellerSpec,
    pub buyer: BuyerSpec,
    pub value_model: ValueModel,
    pub gammas: Vec<Discount>,
    pub horizons: Vec<u32>,
    pub replications: u32,
    pub base_seed: u64,
    pub benchmark: BenchmarkMode,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("config", e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.gammas.is_empty() || self.horizons.is_empty() {
            return Err(Error::invalid("gammas and horizons must be non-empty"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.horizons.contains(&0) {
            return Err(Error::invalid("every horizon must be at least 1"));
        }
        Ok(ResolvedConfig {
            seller: SellerSpec::parse(&self.seller)?,
            buyer: BuyerSpec::parse(&self.buyer)?,
            value_model: ValueModel::parse(&self.value_model)?,
            gammas: self.gammas.iter().map(|g| Discount::new(*g)).collect::<Result<_>>()?,
            horizons: self.horizons.clone(),
            replications: self.replications,
            base_seed: self.base_seed,
            benchmark: self.benchmark,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seller: String,
    pub buyer: String,
    pub gamma: f64,
    pub horizon: u32,
    pub value_model: String,
    pub seed: u64,
    pub revenue: f64,
    pub surplus: f64,
    pub benchmark_rate: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

struct Job {
    row: usize,
    gamma: Discount,
    horizon: u32,
    seed: u64,
}

/// Runs every `(gamma, T, replication)` cell of the config.
///
/// Row `i` (counting `gamma`-major, then `T`, then replication) uses seed
/// `mix64(base_seed, i)`. Fully deterministic cells run once. Output order
/// does not depend on `jobs`.
pub fn run_sweep(config: &ResolvedConfig, jobs: Option<usize>, solver: SolverOptions) -> Result<SweepOutput> {
    let mut plan = Vec::new();
    let mut warnings = Vec::new();
    for (gi, gamma) in config.gammas.iter().enumerate() {
        for (ti, &horizon) in config.horizons.iter().enumerate() {
            let cell = gi * config.horizons.len() + ti;
            let deterministic =
                config.seller.build(horizon)?.is_deterministic() && config.value_model.as_fixed().is_some();
            let reps = if deterministic && config.replications > 1 {
                warnings.push(format!(
                    "gamma={gamma} T={horizon}: configuration is deterministic, running once instead of {} replications",
                    config.replications
                ));
                1
            } else {
                config.replications
            };
            for r in 0..reps {
                let row = cell * config.replications as usize + r as usize;
                plan.push(Job {
                    row,
                    gamma: *gamma,
                    horizon,
                    seed: mix64(config.base_seed, row as u64),
                });
            }
        }
    }

    let options = EpisodeOptions {
        solver,
        benchmark: config.benchmark,
    };
    let run = |job: &Job| -> Result<SweepRow> {
        let (_, res) = run_episode(
            &config.seller,
            &config.buyer,
            &config.value_model,
            job.gamma,
            job.horizon,
            job.seed,
            &options,
        )
        .map_err(|e| Error::Row {
            row: job.row,
            source: Box::new(e),
        })?;
        Ok(SweepRow {
            seller: res.seller,
            buyer: res.buyer,
            gamma: job.gamma.get(),
            horizon: job.horizon,
            value_model: config.value_model.to_string(),
            seed: job.seed,
            revenue: res.revenue,
            surplus: res.surplus,
            benchmark_rate: res.benchmark_rate,
            regret: res.regret,
        })
    };

    let results: Vec<Result<SweepRow>> = match jobs {
        Some(1) => plan.iter().map(run).collect(),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = jobs {
                builder = builder.num_threads(n);
            }
            let pool = builder.build().map_err(|e| Error::invalid(e.to_string()))?;
            pool.install(|| plan.par_iter().map(run).collect())
        }
    };
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput { rows, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    /// Mean and `sample stddev / sqrt(n)`; a single sample has zero error.
    pub fn of(xs: &[f64]) -> Stat {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Stat { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Stat {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seller: String,
    pub buyer: String,
    pub gamma: f64,
    pub horizon: u32,
    pub n: usize,
    pub regret: Stat,
    pub revenue: Stat,
    pub surplus: Stat,
}

/// Groups rows by `(seller, buyer, gamma, T)` in order of first appearance.
pub fn summarize(rows: &[SweepRow]) -> Result<Vec<Summary>> {
    if rows.is_empty() {
        return Err(Error::invalid("nothing to summarize"));
    }
    let mut groups: Vec<(&SweepRow, Vec<&SweepRow>)> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(head, _)| {
            head.seller == row.seller
                && head.buyer == row.buyer
                && head.gamma == row.gamma
                && head.horizon == row.horizon
        }) {
            Some((_, members)) => members.push(row),
            None => groups.push((row, vec![row])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(head, members)| {
            let col = |f: fn(&SweepRow) -> f64| members.iter().map(|r| f(r)).collect::<Vec<_>>();
            Summary {
                seller: head.seller.clone(),
                buyer: head.buyer.clone(),
                gamma: head.gamma,
                horizon: head.horizon,
                n: members.len(),
                regret: Stat::of(&col(|r| r.regret)),
                revenue: Stat::of(&col(|r| r.revenue)),
                surplus: Stat::of(&col(|r| r.surplus)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn episode(seller: &str, buyer: &str, value: &str, gamma: f64, t: u32, seed: u64) -> (Transcript, EpisodeResult) {
        run_episode(
            &SellerSpec::parse(seller).unwrap(),
            &BuyerSpec::parse(buyer).unwrap(),
            &ValueModel::parse(value).unwrap(),
            Discount::new(gamma).unwrap(),
            t,
            seed,
            &EpisodeOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn fixed_price_episode() {
        for seed in [0, 1, 99] {
            let (_, r) = episode("fixed:0.4", "truthful", "fixed:0.7", 1.0, 5, seed);
            assert!((r.revenue - 2.0).abs() < 1e-12);
            assert!((r.surplus - 1.5).abs() < 1e-12);
            assert!((r.regret - 1.5).abs() < 1e-12);
        }
        let (_, r) = episode("fixed:0.9", "truthful", "fixed:0.7", 1.0, 5, 0);
        assert_eq!(r.revenue, 0.0);
    }

    #[test]
    fn binary_search_episode() {
        let (tr, r) = episode("binsearch", "truthful", "fixed:0.7", 1.0, 3, 4);
        assert_eq!(tr.prices(), vec![0.5, 0.75, 0.625]);
        assert_eq!(r.revenue, 1.125);
    }

    #[test]
    fn episodes_are_reproducible() {
        let a = episode("exp3:5,0.2", "truthful", "uniform:0.2,0.5,0.9", 0.9, 200, 17);
        let b = episode("exp3:5,0.2", "truthful", "uniform:0.2,0.5,0.9", 0.9, 200, 17);
        assert_eq!(a.0.to_csv(), b.0.to_csv());
        let c = episode("exp3:5,0.2", "truthful", "uniform:0.2,0.5,0.9", 0.9, 200, 18);
        assert_ne!(a.0.to_csv(), c.0.to_csv());
    }

    #[test]
    fn best_response_episode_matches_solver() {
        let (_, r) = episode("binsearch", "bestresponse", "fixed:0.7", 1.0, 3, 0);
        assert!((r.surplus - 0.775).abs() < 1e-12);
        assert!((r.revenue - 0.625).abs() < 1e-12);
        let err = run_episode(
            &SellerSpec::BinarySearch,
            &BuyerSpec::BestResponse,
            &ValueModel::uniform(vec![0.2, 0.8]).unwrap(),
            Discount::NONE,
            3,
            0,
            &EpisodeOptions::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn realized_benchmark_option() {
        let opts = EpisodeOptions {
            benchmark: BenchmarkMode::Realized,
            ..Default::default()
        };
        let (tr, r) = run_episode(
            &SellerSpec::parse("fixed:0.5").unwrap(),
            &BuyerSpec::Truthful,
            &ValueModel::uniform(vec![0.25, 0.75]).unwrap(),
            Discount::NONE,
            50,
            3,
            &opts,
        )
        .unwrap();
        let values: Vec<f64> = tr.records().iter().map(|x| x.value).collect();
        assert_eq!(r.benchmark_rate, realized_benchmark_rate(&values));
        assert!((r.regret - (50.0 * r.benchmark_rate - r.revenue)).abs() < 1e-9);
    }

    fn config(seller: &str, reps: u32) -> ResolvedConfig {
        ExperimentConfig {
            seller: seller.into(),
            buyer: "truthful".into(),
            value_model: "uniform:0.3,0.6,0.9".into(),
            gammas: vec![0.5, 0.9],
            horizons: vec![20, 40],
            replications: reps,
            base_seed: 11,
            output: None,
            benchmark: BenchmarkMode::Model,
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn sweep_layout() {
        let out = run_sweep(&config("ucb:4", 3), Some(1), SolverOptions::default()).unwrap();
        assert_eq!(out.rows.len(), 12);
        assert_eq!(out.rows[0].seed, mix64(11, 0));
        assert_eq!(out.rows[5].seed, mix64(11, 5));
        assert_eq!((out.rows[3].gamma, out.rows[3].horizon), (0.5, 40));
        assert_eq!((out.rows[6].gamma, out.rows[6].horizon), (0.9, 20));
        let again = run_sweep(&config("ucb:4", 3), Some(4), SolverOptions::default()).unwrap();
        assert_eq!(out.rows, again.rows);
        assert_eq!(summarize(&out.rows).unwrap().len(), 4);
    }

    #[test]
    fn deterministic_cells_run_once() {
        let mut cfg = config("fixed:0.4", 3);
        cfg.value_model = ValueModel::fixed(0.7).unwrap();
        let out = run_sweep(&cfg, None, SolverOptions::default()).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert_eq!(out.warnings.len(), 4);
        assert!(summarize(&out.rows).unwrap().iter().all(|s| s.revenue.stderr == 0.0));
    }

    #[test]
    fn sweep_errors_identify_the_row() {
        let cfg = ExperimentConfig {
            seller: "binsearch".into(),
            buyer: "bestresponse".into(),
            value_model: "fixed:0.5".into(),
            gammas: vec![0.5],
            horizons: vec![3, 30],
            replications: 1,
            base_seed: 0,
            output: None,
            benchmark: BenchmarkMode::Model,
        };
        let err = run_sweep(&cfg.resolve().unwrap(), Some(1), SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 1, .. }), "{err}");
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok = r#"{"seller":"binsearch","buyer":"truthful","value_model":"fixed:0.7",
                     "gammas":[1.0],"horizons":[3],"replications":1,"base_seed":5}"#;
        assert!(ExperimentConfig::from_json(ok).unwrap().resolve().is_ok());
        let bad = ok.replace("\"base_seed\":5", "\"base_seed\":5,\"colour\":1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let empty = ok.replace("[1.0]", "[]");
        assert!(ExperimentConfig::from_json(&empty).unwrap().resolve().is_err());
    }

    #[test]
    fn summary_arithmetic() {
        let row = |regret| SweepRow {
            seller: "s".into(),
            buyer: "b".into(),
            gamma: 1.0,
            horizon: 2,
            value_model: "fixed:1".into(),
            seed: 0,
            revenue: 1.0,
            surplus: 0.0,
            benchmark_rate: 1.0,
            regret,
        };
        let s = summarize(&[row(1.0), row(3.0)]).unwrap();
        assert_eq!(s[0].regret, Stat { mean: 2.0, stderr: 1.0 });
        assert_eq!(s[0].revenue.stderr, 0.0);
        assert_eq!(summarize(&[row(4.0)]).unwrap()[0].regret.stderr, 0.0);
        assert!(summarize(&[]).is_err());
    }
}
