//! Evaluation harness: coefficient of determination and range-normalized
//! RMSE, reproducible 5-fold cross-validation plans, R² binning, wall-clock
//! budget experiments, parameter sweeps, and comparison-table emission.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::train::{train_with_budget, GradientModel, TrainConfig, TrainingSet};

/// `R² = 1 − Σ(y−ŷ)² / Σ(y−ȳ)²`. Constant targets are an error.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() || y.len() < 2 {
        return Err(Error::DimensionMismatch {
            context: "r_squared inputs",
            expected: y.len().max(2),
            got: yhat.len(),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedVariance);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// RMSE divided by the target range `max(y) − min(y)`.
pub fn nrmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "nrmse inputs",
            expected: y.len().max(1),
            got: yhat.len(),
        });
    }
    let (min, max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    if range <= 0.0 {
        return Err(Error::ZeroRange);
    }
    let mse: f64 =
        y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt() / range)
}

/// A reproducible K-fold partition.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Test-fold membership, one index list per fold.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Training indices for one fold: every case outside the test fold.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (f, members) in self.folds.iter().enumerate() {
            if f != fold {
                out.extend_from_slice(members);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Seeded shuffle followed by contiguous chunking into K folds whose sizes
/// differ by at most one.
pub fn kfold_plan(n_cases: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if n_cases < k {
        return Err(Error::Config(format!("cannot split {n_cases} cases into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n_cases).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n_cases / k;
    let extra = n_cases % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0usize;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(FoldPlan { k, seed, folds })
}

/// Histogram of R² scores over the ranges (<0.7), [0.7,0.8), [0.8,0.9),
/// [0.9,∞).
pub fn bin_r2(scores: &[f64]) -> [usize; 4] {
    let mut counts = [0usize; 4];
    for &s in scores {
        let bin = if s < 0.7 {
            0
        } else if s < 0.8 {
            1
        } else if s < 0.9 {
            2
        } else {
            3
        };
        counts[bin] += 1;
    }
    counts
}

/// Fraction of scores at or above 0.7 (the complement of the first bin).
pub fn fraction_above_threshold(counts: &[usize; 4], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.0 - counts[0] as f64 / n as f64
}

/// One evaluation row: model, fold, accuracy, cost.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRecord {
    pub model_id: String,
    pub fold: usize,
    /// R² pooled over all (case, station) pairs of the fold's test set.
    pub r2_pooled: f64,
    /// Mean of per-case R² over the fold's test set.
    pub r2_per_case_mean: f64,
    pub nrmse: f64,
    pub parameter_count: usize,
    pub train_secs: f64,
    pub infer_ms_per_sample: f64,
    pub config_digest: String,
}

/// Fold-averaged summary of a set of records.
#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub model_id: String,
    pub n_folds: usize,
    pub mean_r2_pooled: f64,
    pub mean_r2_per_case: f64,
    pub mean_nrmse: f64,
    pub mean_train_secs: f64,
    pub mean_infer_ms_per_sample: f64,
    pub parameter_count: usize,
}

/// Means across folds for each distinct model id, in first-seen order.
pub fn summarize(records: &[EvalRecord]) -> Vec<EvalSummary> {
    let mut ids: Vec<&str> = Vec::new();
    for r in records {
        if !ids.contains(&r.model_id.as_str()) {
            ids.push(&r.model_id);
        }
    }
    ids.iter()
        .map(|id| {
            let rows: Vec<&EvalRecord> =
                records.iter().filter(|r| r.model_id == *id).collect();
            let n = rows.len() as f64;
            EvalSummary {
                model_id: (*id).to_string(),
                n_folds: rows.len(),
                mean_r2_pooled: rows.iter().map(|r| r.r2_pooled).sum::<f64>() / n,
                mean_r2_per_case: rows.iter().map(|r| r.r2_per_case_mean).sum::<f64>() / n,
                mean_nrmse: rows.iter().map(|r| r.nrmse).sum::<f64>() / n,
                mean_train_secs: rows.iter().map(|r| r.train_secs).sum::<f64>() / n,
                mean_infer_ms_per_sample: rows.iter().map(|r| r.infer_ms_per_sample).sum::<f64>()
                    / n,
                parameter_count: rows.first().map(|r| r.parameter_count).unwrap_or(0),
            }
        })
        .collect()
}

/// Writes records as UTF-8 CSV with a header row, one row per record.
pub fn write_records_csv(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "model_id",
        "fold",
        "r2_pooled",
        "r2_per_case_mean",
        "nrmse",
        "parameter_count",
        "train_secs",
        "infer_ms_per_sample",
        "config_digest",
    ])?;
    for r in records {
        w.write_record([
            r.model_id.clone(),
            r.fold.to_string(),
            r.r2_pooled.to_string(),
            r.r2_per_case_mean.to_string(),
            r.nrmse.to_string(),
            r.parameter_count.to_string(),
            r.train_secs.to_string(),
            r.infer_ms_per_sample.to_string(),
            r.config_digest.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Monotonic time source; injectable so budget experiments can be tested
/// deterministically.
pub trait Clock {
    fn now_secs(&self) -> f64;
}

/// Wall-clock time from a fixed origin.
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now_secs(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// One point of an error-vs-time curve.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetPoint {
    pub budget_secs: f64,
    pub one_minus_r2: f64,
    pub epochs_run: usize,
    /// Set when the budget was smaller than a single optimizer step.
    pub single_step: bool,
}

/// Trains a fresh model from scratch for each wall-clock budget (no
/// warm-starting) and evaluates `1 − R²` with the provided scorer on the
/// fixed held-out split. Budgets must be positive and ascending.
pub fn budget_run<M, F, S>(
    make_model: F,
    data: &TrainingSet,
    config: &TrainConfig,
    budgets: &[f64],
    score_r2: S,
    clock: &dyn Clock,
) -> Result<Vec<BudgetPoint>>
where
    M: GradientModel,
    F: Fn() -> M,
    S: Fn(&M) -> Result<f64>,
{
    if budgets.is_empty() {
        return Err(Error::Config("budget list is empty".into()));
    }
    if budgets.iter().any(|&b| b <= 0.0) || budgets.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("budgets must be positive and ascending".into()));
    }
    let mut curve = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut model = make_model();
        let start = clock.now_secs();
        let history = train_with_budget(&mut model, data, config, Some(budget))?;
        let elapsed = clock.now_secs() - start;
        let r2 = score_r2(&model)?;
        curve.push(BudgetPoint {
            budget_secs: budget,
            one_minus_r2: 1.0 - r2,
            epochs_run: history.epochs_run,
            single_step: history.epochs_run <= 1 && elapsed > budget,
        });
    }
    Ok(curve)
}

/// One point of an error-vs-parameters curve.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub label: String,
    pub parameter_count: usize,
    pub one_minus_r2: f64,
}

/// Trains one model per size knob under a fixed protocol and records its true
/// instantiated parameter count against test error.
pub fn param_sweep_run<M, F, S>(
    knobs: &[(String, F)],
    data: &TrainingSet,
    config: &TrainConfig,
    score_r2: S,
) -> Result<Vec<SweepPoint>>
where
    M: GradientModel,
    F: Fn() -> M,
    S: Fn(&M) -> Result<f64>,
{
    if knobs.is_empty() {
        return Err(Error::Config("parameter sweep has no size knobs".into()));
    }
    let mut out = Vec::with_capacity(knobs.len());
    for (label, make_model) in knobs {
        let mut model = make_model();
        let params = model.param_len();
        crate::train::train(&mut model, data, config)?;
        let r2 = score_r2(&model)?;
        out.push(SweepPoint {
            label: label.clone(),
            parameter_count: params,
            one_minus_r2: 1.0 - r2,
        });
    }
    Ok(out)
}

/// Long-format CSV for plot tooling: one row per curve point.
pub fn write_budget_csv(path: &Path, model_id: &str, points: &[BudgetPoint]) -> Result<()> {
    let exists = path.exists();
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if !exists {
        w.write_record(["model_id", "budget_secs", "one_minus_r2", "epochs_run", "single_step"])?;
    }
    for p in points {
        w.write_record([
            model_id.to_string(),
            p.budget_secs.to_string(),
            p.one_minus_r2.to_string(),
            p.epochs_run.to_string(),
            p.single_step.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, model_id: &str, points: &[SweepPoint]) -> Result<()> {
    let exists = path.exists();
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if !exists {
        w.write_record(["model_id", "label", "parameter_count", "one_minus_r2"])?;
    }
    for p in points {
        w.write_record([
            model_id.to_string(),
            p.label.clone(),
            p.parameter_count.to_string(),
            p.one_minus_r2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Median per-sample inference latency in milliseconds over `repeats` full
/// passes of the inputs (monotonic clock).
pub fn measure_inference_ms<F>(inputs: &[Vec<f64>], repeats: usize, mut predict: F) -> f64
where
    F: FnMut(&[f64]),
{
    let repeats = repeats.max(1);
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        for x in inputs {
            predict(x);
        }
        times.push(start.elapsed().as_secs_f64() * 1e3 / inputs.len().max(1) as f64);
    }
    times.sort_by(|a, b| a.total_cmp(b));
    times[times.len() / 2]
}
