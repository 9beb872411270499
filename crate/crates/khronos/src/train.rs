//! Gradient-based training: HF-weighted MSE, warmup-cosine learning-rate
//! schedule, Adam with bias correction, a deterministic epoch loop with
//! optional wall-clock budget, and a Cartesian hyperparameter sweep driver.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

/// A differentiable model exposing its parameters as a flat slice.
///
/// Forward and backprop are pure given immutable parameters; the trainer is
/// the single writer.
pub trait GradientModel {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn param_len(&self) -> usize;
    fn param_data(&self) -> &[f64];
    fn param_data_mut(&mut self) -> &mut [f64];
    fn forward_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
    /// Accumulates dL/dparams for one sample into `grad`, given
    /// `upstream = dL/dout`.
    fn backprop_into(&self, x: &[f64], upstream: &[f64], grad: &mut [f64]) -> Result<()>;
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub peak_lr: f64,
    pub epochs: usize,
    /// None = full batch.
    pub batch_size: Option<usize>,
    /// Sample weight applied to HF-derived rows wherever they appear.
    pub w_hf: f64,
    pub seed: u64,
    /// Fraction of total steps spent in linear warmup.
    pub warmup_fraction: f64,
}

impl TrainConfig {
    pub fn new(peak_lr: f64, epochs: usize, seed: u64) -> Self {
        Self { peak_lr, epochs, batch_size: None, w_hf: 10.0, seed, warmup_fraction: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr > 0.0) {
            return Err(Error::Config(format!("peak_lr must be > 0, got {}", self.peak_lr)));
        }
        if self.w_hf < 0.0 {
            return Err(Error::Config("w_hf must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Config("warmup_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Weighted mean-squared error:
/// `Σ_s w_s · mean_m (pred_sm - target_sm)² / Σ_s w_s`.
pub fn weighted_mse<P, T>(pred: &[P], target: &[T], weights: &[f64]) -> Result<f64>
where
    P: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    if pred.len() != target.len() || pred.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            context: "weighted_mse rows",
            expected: pred.len(),
            got: target.len().min(weights.len()),
        });
    }
    let w_sum: f64 = weights.iter().sum();
    if w_sum <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let mut acc = 0.0;
    for ((p, t), &w) in pred.iter().zip(target).zip(weights) {
        let p = p.as_ref();
        let t = t.as_ref();
        if p.len() != t.len() {
            return Err(Error::DimensionMismatch {
                context: "weighted_mse columns",
                expected: p.len(),
                got: t.len(),
            });
        }
        let mse: f64 = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            / p.len() as f64;
        acc += w * mse;
    }
    Ok(acc / w_sum)
}

/// Learning rate at a given step: linear warmup from 0 to `peak_lr` over
/// `warmup_fraction * total_steps`, then cosine decay to 0 at `total_steps`.
pub fn lr_at(config: &TrainConfig, step: usize, total_steps: usize) -> f64 {
    if total_steps == 0 {
        return config.peak_lr;
    }
    let warmup = (config.warmup_fraction * total_steps as f64).floor() as usize;
    if step < warmup {
        config.peak_lr * step as f64 / warmup as f64
    } else if step >= total_steps {
        0.0
    } else {
        let progress = (step - warmup) as f64 / (total_steps - warmup) as f64;
        config.peak_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
    }
}

/// Adam accumulator state shaped like the parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Rejects non-finite gradient entries.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            context: "adam_step",
            expected: params.len(),
            got: grads.len().min(state.m.len()),
        });
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);
    for i in 0..params.len() {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Normalized training samples with per-sample weights.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TrainingSet {
    pub fn uniform(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Self {
        let n = inputs.len();
        Self { inputs, targets, weights: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn validate(&self, in_dim: usize, out_dim: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Data("training set is empty".into()));
        }
        if self.targets.len() != self.len() || self.weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "training set rows",
                expected: self.len(),
                got: self.targets.len().min(self.weights.len()),
            });
        }
        for x in &self.inputs {
            if x.len() != in_dim {
                return Err(Error::DimensionMismatch {
                    context: "training input width",
                    expected: in_dim,
                    got: x.len(),
                });
            }
        }
        for t in &self.targets {
            if t.len() != out_dim {
                return Err(Error::DimensionMismatch {
                    context: "training target width",
                    expected: out_dim,
                    got: t.len(),
                });
            }
        }
        Ok(())
    }
}

/// Per-epoch record of the training trajectory.
#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub epoch_loss: Vec<f64>,
    pub epoch_lr: Vec<f64>,
    pub wall_secs: f64,
    /// Number of completed epochs (may be short of the configured count when
    /// a wall-clock budget stops training early).
    pub epochs_run: usize,
}

impl TrainHistory {
    pub fn final_loss(&self) -> f64 {
        self.epoch_loss.last().copied().unwrap_or(f64::NAN)
    }

    /// CSV with columns `epoch,loss,lr`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "loss", "lr"])?;
        for (e, (loss, lr)) in self.epoch_loss.iter().zip(&self.epoch_lr).enumerate() {
            w.write_record([e.to_string(), loss.to_string(), lr.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run summary mirroring the loss-history CSV.
#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub final_loss: f64,
    pub wall_clock_secs: f64,
    pub parameter_count: usize,
    pub seed: u64,
    pub epochs_run: usize,
}

pub fn write_summary(path: &Path, summary: &TrainSummary) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), summary)?;
    Ok(())
}

/// Trains a model on the given set. Deterministic given (seed, config,
/// dataset): full-batch by default, mini-batches with a seeded shuffle when
/// `batch_size` is set. Returns the per-epoch loss history.
pub fn train<M: GradientModel>(
    model: &mut M,
    data: &TrainingSet,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    train_with_budget(model, data, config, None)
}

/// [`train`] with an optional wall-clock budget in seconds. The budget is
/// checked at epoch boundaries after at least one epoch has completed.
pub fn train_with_budget<M: GradientModel>(
    model: &mut M,
    data: &TrainingSet,
    config: &TrainConfig,
    budget_secs: Option<f64>,
) -> Result<TrainHistory> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    config.validate()?;
    data.validate(model.input_dim(), model.output_dim())?;
    let started = Instant::now();

    let n = data.len();
    let out_dim = model.output_dim();
    let w_total: f64 = data.weights.iter().sum();
    if w_total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }

    let batch = config.batch_size.unwrap_or(n).max(1).min(n);
    let n_batches = n.div_ceil(batch);
    let total_steps = config.epochs * n_batches;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; model.param_len()];
    let mut pred = vec![0.0; out_dim];
    let mut state = AdamState::new(model.param_len());
    let mut history = TrainHistory::default();

    let mut step = 0usize;
    'epochs: for epoch in 0..config.epochs {
        if config.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss_acc = 0.0;
        let mut last_lr = 0.0;
        for chunk in order.chunks(batch) {
            let lr = lr_at(config, step, total_steps);
            last_lr = lr;
            step += 1;
            grad.iter_mut().for_each(|g| *g = 0.0);
            let w_batch: f64 = chunk.iter().map(|&s| data.weights[s]).sum();
            if w_batch <= 0.0 {
                continue;
            }
            let mut batch_loss = 0.0;
            for &s in chunk {
                let x = &data.inputs[s];
                let t = &data.targets[s];
                let w = data.weights[s];
                model.forward_into(x, &mut pred)?;
                let mut sample_se = 0.0;
                let mut upstream = vec![0.0; out_dim];
                for m in 0..out_dim {
                    let e = pred[m] - t[m];
                    sample_se += e * e;
                    upstream[m] = 2.0 * w * e / (out_dim as f64 * w_batch);
                }
                batch_loss += w * sample_se / out_dim as f64;
                model.backprop_into(x, &upstream, &mut grad)?;
            }
            batch_loss /= w_batch;
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss: batch_loss });
            }
            // Loss contribution weighted by batch mass so the epoch number
            // equals the full weighted MSE for full-batch runs.
            epoch_loss_acc += batch_loss * w_batch;
            adam_step(model.param_data_mut(), &grad, &mut state, lr)?;
        }
        let epoch_loss = epoch_loss_acc / w_total;
        if !epoch_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss: epoch_loss });
        }
        history.epoch_loss.push(epoch_loss);
        history.epoch_lr.push(last_lr);
        history.epochs_run = epoch + 1;
        if let Some(limit) = budget_secs {
            if started.elapsed().as_secs_f64() >= limit {
                break 'epochs;
            }
        }
    }
    history.wall_secs = started.elapsed().as_secs_f64();
    Ok(history)
}

/// One axis of a hyperparameter grid.
#[derive(Debug, Clone)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(name: &str, values: &[f64]) -> Self {
        Self { name: name.into(), values: values.to_vec() }
    }
}

/// A scored point of the sweep; `values` follow the axis order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub values: Vec<f64>,
    pub score: f64,
}

/// Evaluates every Cartesian combination of the axes (or a seeded random
/// subsample of `budget` combinations) and returns them sorted by ascending
/// score. Deterministic given the seed.
pub fn grid_sweep<F>(
    space: &[SweepAxis],
    budget: Option<usize>,
    seed: u64,
    mut eval: F,
) -> Result<Vec<SweepResult>>
where
    F: FnMut(&[f64]) -> f64,
{
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if space.is_empty() {
        return Err(Error::Config("sweep space has no axes".into()));
    }
    for axis in space {
        if axis.values.is_empty() {
            return Err(Error::Config(format!("sweep axis {:?} has no candidate values", axis.name)));
        }
    }
    let total: usize = space.iter().map(|a| a.values.len()).product();
    let chosen: Vec<usize> = match budget {
        Some(b) if b < total => {
            let mut all: Vec<usize> = (0..total).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            all.shuffle(&mut rng);
            let mut picked = all[..b].to_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..total).collect(),
    };

    let mut results = Vec::with_capacity(chosen.len());
    for flat in chosen {
        let mut rem = flat;
        let mut values = Vec::with_capacity(space.len());
        // Lexicographic decode: the last axis varies fastest.
        for axis in space.iter().rev() {
            let k = axis.values.len();
            values.push(axis.values[rem % k]);
            rem /= k;
        }
        values.reverse();
        let score = eval(&values);
        results.push(SweepResult { values, score });
    }
    results.sort_by(|a, b| a.score.total_cmp(&b.score));
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KernelConfig, KhronosModel, KhronosParams};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weighted_mse_examples() {
        let pred = vec![vec![1.0, 2.0]];
        assert_eq!(weighted_mse(&pred, &pred.clone(), &[1.0]).unwrap(), 0.0);

        // One sample, one output, error 2 -> 4.
        let p = vec![vec![3.0]];
        let t = vec![vec![1.0]];
        assert_eq!(weighted_mse(&p, &t, &[1.0]).unwrap(), 4.0);

        // Errors 1 and 0 with weights 10 and 1 -> 10/11.
        let p = vec![vec![1.0], vec![5.0]];
        let t = vec![vec![0.0], vec![5.0]];
        let v = weighted_mse(&p, &t, &[10.0, 1.0]).unwrap();
        assert!((v - 10.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_mse_rejects_zero_weights() {
        let p = vec![vec![1.0]];
        let t = vec![vec![0.0]];
        match weighted_mse(&p, &t, &[0.0]) {
            Err(Error::DegenerateWeights) => {}
            other => panic!("expected degenerate weights, got {other:?}"),
        }
    }

    #[test]
    fn weighted_mse_zero_iff_equal_on_weighted_rows() {
        let p = vec![vec![1.0], vec![9.0]];
        let t = vec![vec![1.0], vec![2.0]];
        // Second row has zero weight, so its error does not count.
        assert_eq!(weighted_mse(&p, &t, &[1.0, 0.0]).unwrap(), 0.0);
        assert!(weighted_mse(&p, &t, &[1.0, 1.0]).unwrap() > 0.0);
    }

    #[test]
    fn schedule_shape() {
        let cfg = TrainConfig { warmup_fraction: 0.1, ..TrainConfig::new(0.02, 100, 0) };
        let total = 1000;
        let warmup = 100;
        assert_eq!(lr_at(&cfg, 0, total), 0.0);
        assert_eq!(lr_at(&cfg, warmup, total), 0.02);
        assert!(lr_at(&cfg, total, total).abs() < 1e-12);
        // Midpoint of the decay phase -> peak/2.
        let mid = warmup + (total - warmup) / 2;
        assert!((lr_at(&cfg, mid, total) - 0.01).abs() < 1e-9);
        for step in 0..=total {
            let lr = lr_at(&cfg, step, total);
            assert!((0.0..=0.02 + 1e-15).contains(&lr));
        }
    }

    #[test]
    fn adam_zero_gradients_leave_params() {
        let mut params = vec![1.0, -2.0, 3.0];
        let before = params.clone();
        let mut state = AdamState::new(3);
        for _ in 0..5 {
            adam_step(&mut params, &[0.0, 0.0, 0.0], &mut state, 0.1).unwrap();
        }
        assert_eq!(params, before);
    }

    #[test]
    fn adam_first_step_approx_signed_lr() {
        let mut params = vec![0.0, 0.0];
        let mut state = AdamState::new(2);
        adam_step(&mut params, &[10.0, -7.0], &mut state, 0.01).unwrap();
        // Bias-corrected first step: -lr * g/(|g| + eps') ~ -lr*sign(g).
        assert!((params[0] + 0.01).abs() < 1e-6);
        assert!((params[1] - 0.01).abs() < 1e-6);
    }

    #[test]
    fn adam_second_moment_grows() {
        let mut params = vec![0.0];
        let mut state = AdamState::new(1);
        adam_step(&mut params, &[2.0], &mut state, 0.01).unwrap();
        let v1 = state.v[0];
        adam_step(&mut params, &[2.0], &mut state, 0.01).unwrap();
        assert!(state.v[0] > v1);
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut params = vec![0.0];
        let mut state = AdamState::new(1);
        match adam_step(&mut params, &[f64::NAN], &mut state, 0.01) {
            Err(Error::NonFiniteGradient { index: 0 }) => {}
            other => panic!("expected non-finite gradient, got {other:?}"),
        }
    }

    #[test]
    fn adam_zero_lr_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let before = params.clone();
        let mut state = AdamState::new(16);
        for _ in 0..20 {
            let grads: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            adam_step(&mut params, &grads, &mut state, 0.0).unwrap();
        }
        assert_eq!(params, before);
    }

    fn toy_set(n: usize, seed: u64) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let targets: Vec<Vec<f64>> =
            inputs.iter().map(|x| vec![(x[0] * 3.0).sin() * 0.5 + x[1] * 0.2]).collect();
        TrainingSet::uniform(inputs, targets)
    }

    fn toy_model(seed: u64) -> KhronosModel {
        KhronosModel::init(KernelConfig::new(2, 4, 2, 1).unwrap(), seed)
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_set(64, 0);
        let cfg = TrainConfig::new(5e-3, 40, 7);
        let mut a = toy_model(3);
        let ha = train(&mut a, &data, &cfg).unwrap();
        let mut b = toy_model(3);
        let hb = train(&mut b, &data, &cfg).unwrap();
        assert_eq!(ha.epoch_loss, hb.epoch_loss);
        assert_eq!(a.params().data(), b.params().data());
    }

    #[test]
    fn minibatch_training_is_deterministic() {
        let data = toy_set(64, 0);
        let cfg = TrainConfig { batch_size: Some(16), ..TrainConfig::new(5e-3, 20, 7) };
        let mut a = toy_model(3);
        let ha = train(&mut a, &data, &cfg).unwrap();
        let mut b = toy_model(3);
        let hb = train(&mut b, &data, &cfg).unwrap();
        assert_eq!(ha.epoch_loss, hb.epoch_loss);
    }

    #[test]
    fn training_reduces_loss() {
        let data = toy_set(128, 4);
        let cfg = TrainConfig::new(1e-2, 200, 11);
        let mut model = toy_model(5);
        let history = train(&mut model, &data, &cfg).unwrap();
        assert!(history.final_loss() <= history.epoch_loss[0]);
    }

    #[test]
    fn constant_target_converges_via_bias() {
        let inputs: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64 / 31.0]).collect();
        let targets = vec![vec![0.7]; 32];
        let data = TrainingSet::uniform(inputs, targets);
        let mut model = KhronosModel::init(KernelConfig::new(1, 3, 2, 1).unwrap(), 2);
        let cfg = TrainConfig::new(2e-2, 400, 1);
        let history = train(&mut model, &data, &cfg).unwrap();
        assert!(
            history.final_loss() < 1e-4 * history.epoch_loss[0].max(1.0),
            "final {} vs initial {}",
            history.final_loss(),
            history.epoch_loss[0]
        );
    }

    #[test]
    fn epoch_loss_matches_weighted_mse_full_batch() {
        // The recorded epoch loss is the weighted MSE of predictions *before*
        // that epoch's update, matching the public loss function.
        let data = toy_set(16, 9);
        let model = toy_model(1);
        let preds: Vec<Vec<f64>> =
            data.inputs.iter().map(|x| model.forward(x).unwrap()).collect();
        let expect = weighted_mse(&preds, &data.targets, &data.weights).unwrap();
        let mut trained = model.clone();
        let cfg = TrainConfig::new(1e-3, 1, 0);
        let history = train(&mut trained, &data, &cfg).unwrap();
        assert!((history.epoch_loss[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn budget_stops_early_but_runs_at_least_one_epoch() {
        let data = toy_set(64, 2);
        let cfg = TrainConfig::new(1e-3, 100_000, 0);
        let mut model = toy_model(0);
        let history = train_with_budget(&mut model, &data, &cfg, Some(0.0)).unwrap();
        assert_eq!(history.epochs_run, 1);
    }

    #[test]
    fn hf_weighting_pulls_fit_toward_heavy_samples() {
        // Two conflicting constant targets; the heavily weighted one wins.
        let inputs = vec![vec![0.3], vec![0.7]];
        let targets = vec![vec![1.0], vec![-1.0]];
        let mut data = TrainingSet::uniform(inputs, targets);
        data.weights = vec![10.0, 1.0];
        let mut model = KhronosModel::init(KernelConfig::new(1, 1, 1, 1).unwrap(), 0);
        // Zero out the kernel path so only the shared bias can move.
        let c = model.config();
        *model.params_mut() = KhronosParams::zeros(c);
        let cfg = TrainConfig::new(5e-2, 600, 0);
        train(&mut model, &data, &cfg).unwrap();
        let y = model.forward(&[0.5]).unwrap()[0];
        // Weighted optimum of the bias-only model: (10*1 - 1*1)/11.
        assert!((y - 9.0 / 11.0).abs() < 1e-3, "y = {y}");
    }

    #[test]
    fn sweep_enumerates_cartesian_product() {
        let axes = vec![
            SweepAxis::new("a", &[1.0, 2.0, 3.0]),
            SweepAxis::new("b", &[10.0, 20.0, 30.0, 40.0]),
        ];
        let mut seen = Vec::new();
        let results = grid_sweep(&axes, None, 0, |v| {
            seen.push(v.to_vec());
            v[0] + v[1]
        })
        .unwrap();
        assert_eq!(results.len(), 12);
        assert_eq!(seen.len(), 12);
        // Sorted ascending by score.
        assert!(results.windows(2).all(|w| w[0].score <= w[1].score));
        assert_eq!(results[0].values, vec![1.0, 10.0]);
    }

    #[test]
    fn sweep_single_axis_sorted() {
        let axes = vec![SweepAxis::new("x", &[3.0, 1.0, 2.0])];
        let results = grid_sweep(&axes, None, 0, |v| v[0]).unwrap();
        let scores: Vec<f64> = results.iter().map(|r| r.score).collect();
        assert_eq!(scores, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn sweep_khronos_lf_axes_enumerate_256() {
        // Four axes of four candidates each.
        let axes = vec![
            SweepAxis::new("elements", &[3.0, 5.0, 8.0, 12.0]),
            SweepAxis::new("rank", &[4.0, 5.0, 10.0, 15.0]),
            SweepAxis::new("peak_lr", &[0.001, 0.003, 0.005, 0.008]),
            SweepAxis::new("epochs", &[1000.0, 1500.0, 2500.0, 4500.0]),
        ];
        let mut count = 0usize;
        grid_sweep(&axes, None, 0, |_| {
            count += 1;
            0.0
        })
        .unwrap();
        assert_eq!(count, 256);
    }

    #[test]
    fn sweep_budget_subsample_is_deterministic() {
        let axes = vec![
            SweepAxis::new("a", &[1.0, 2.0, 3.0, 4.0]),
            SweepAxis::new("b", &[1.0, 2.0, 3.0, 4.0]),
        ];
        let r1 = grid_sweep(&axes, Some(5), 42, |v| v[0] * v[1]).unwrap();
        let r2 = grid_sweep(&axes, Some(5), 42, |v| v[0] * v[1]).unwrap();
        assert_eq!(r1.len(), 5);
        let v1: Vec<Vec<f64>> = r1.iter().map(|r| r.values.clone()).collect();
        let v2: Vec<Vec<f64>> = r2.iter().map(|r| r.values.clone()).collect();
        assert_eq!(v1, v2);
    }

    #[test]
    fn sweep_rejects_empty_axis() {
        let axes = vec![SweepAxis::new("a", &[])];
        assert!(grid_sweep(&axes, None, 0, |_| 0.0).is_err());
    }

    #[test]
    fn zero_epochs_leave_model_untouched() {
        let data = toy_set(8, 0);
        let mut model = toy_model(6);
        let before = model.params().data().to_vec();
        let cfg = TrainConfig::new(1e-3, 0, 0);
        let history = train(&mut model, &data, &cfg).unwrap();
        assert!(history.epoch_loss.is_empty());
        assert_eq!(model.params().data(), &before[..]);
    }
}
