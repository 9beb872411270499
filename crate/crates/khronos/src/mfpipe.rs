//! Multi-fidelity delta-learning pipeline: input assembly for the LF and
//! residual models, residual targets, additive composition, the Case 1–3
//! dataset protocol, a synthetic paired LF/HF benchmark generator, and the
//! dataset directory format.
//!
//! The surrogate is built in two stages: an LF model maps geometry and
//! operating conditions to the LF pressure-coefficient field; a residual
//! model, trained on `Δ = y_HF − ŷ_LF→HF` over the HF-labelled subset,
//! receives the LF input with the normalized LF prediction appended and its
//! output is added to the LF prediction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::NormStats;
use crate::model::{KernelConfig, KhronosModel};
use crate::mlp::MlpModel;
use crate::train::{train, TrainConfig, TrainHistory, TrainingSet};

/// Number of Cp prediction stations used throughout the pipeline.
pub const N_CP_STATIONS: usize = 81;
/// Number of geometry features in the y-only layout.
pub const N_GEOM_FEATURES: usize = 16;

/// Cosine-spaced chordwise stations on [0, 1], clustered at both the leading
/// and trailing edges.
pub fn station_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|m| 0.5 * (1.0 - (std::f64::consts::PI * m as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// One paired case: geometry features, operating scalars, the LF Cp field,
/// and (when available) the HF Cp field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfCase {
    pub features: Vec<f64>,
    pub u: f64,
    pub aoa: f64,
    pub cp_lf: Vec<f64>,
    pub cp_hf: Option<Vec<f64>>,
}

impl MfCase {
    /// Raw (unnormalized) LF input row: features, then U, then AoA.
    pub fn raw_input(&self) -> Vec<f64> {
        let mut row = self.features.clone();
        row.push(self.u);
        row.push(self.aoa);
        row
    }
}

/// A dataset with its train/test split and HF-labelled subset.
#[derive(Debug, Clone)]
pub struct MfDataset {
    pub cases: Vec<MfCase>,
    pub stations: Vec<f64>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub hf_ratio: f64,
    pub hf_indices: Vec<usize>,
    pub split_seed: u64,
}

/// Fraction of cases held out for testing.
pub const TEST_FRACTION: f64 = 0.2;

/// Splits cases into a fixed test set (round(0.2 n), independent of the HF
/// ratio for a given seed) and draws the HF-labelled subset from the training
/// split by a seeded shuffle: |hf| = round(ratio * |train|).
pub fn build_cases(
    cases: Vec<MfCase>,
    stations: Vec<f64>,
    hf_ratio: f64,
    seed: u64,
) -> Result<MfDataset> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if cases.len() < 10 {
        return Err(Error::Config(format!(
            "need at least 10 cases to build a split, got {}",
            cases.len()
        )));
    }
    if !(0.0..=1.0).contains(&hf_ratio) {
        return Err(Error::Config(format!("hf_ratio must lie in [0, 1], got {hf_ratio}")));
    }
    for (i, case) in cases.iter().enumerate() {
        if case.cp_lf.len() != stations.len() {
            return Err(Error::DimensionMismatch {
                context: "case LF station count",
                expected: stations.len(),
                got: case.cp_lf.len(),
            });
        }
        if let Some(hf) = &case.cp_hf {
            if hf.len() != stations.len() {
                return Err(Error::DimensionMismatch {
                    context: "case HF station count",
                    expected: stations.len(),
                    got: hf.len(),
                });
            }
        }
        if case.features.is_empty() {
            return Err(Error::Data(format!("case {i} has no geometry features")));
        }
    }

    let n = cases.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut rng);
    let n_test = (TEST_FRACTION * n as f64).round() as usize;
    let mut test: Vec<usize> = permutation[..n_test].to_vec();
    let mut train: Vec<usize> = permutation[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();

    // HF subset: seeded shuffle of the training indices (only cases that
    // actually carry HF labels are eligible).
    let mut eligible: Vec<usize> =
        train.iter().copied().filter(|&i| cases[i].cp_hf.is_some()).collect();
    eligible.shuffle(&mut rng);
    let n_hf = (hf_ratio * train.len() as f64).round() as usize;
    if n_hf > eligible.len() {
        return Err(Error::Config(format!(
            "hf_ratio {hf_ratio} requires {n_hf} HF-labelled training cases, only {} available",
            eligible.len()
        )));
    }
    let mut hf_indices: Vec<usize> = eligible[..n_hf].to_vec();
    hf_indices.sort_unstable();

    Ok(MfDataset { cases, stations, train, test, hf_ratio, hf_indices, split_seed: seed })
}

/// Normalized LF input: the raw row [features, U, AoA] mapped through the
/// training-split min-max statistics. Length = N_geom_features + 2.
pub fn assemble_lf_input(
    features: &[f64],
    u: f64,
    aoa: f64,
    stats: &NormStats,
) -> Result<Vec<f64>> {
    if stats.dim() != features.len() + 2 {
        return Err(Error::DimensionMismatch {
            context: "lf input stats",
            expected: features.len() + 2,
            got: stats.dim(),
        });
    }
    let mut row = Vec::with_capacity(features.len() + 2);
    row.extend_from_slice(features);
    row.push(u);
    row.push(aoa);
    stats.apply(&row)
}

/// Residual-model input: the LF input with the normalized LF prediction
/// appended. Length = d_LF + N_Cp.
pub fn assemble_delta_input(x_lf: &[f64], lf_pred_normalized: &[f64]) -> Result<Vec<f64>> {
    if lf_pred_normalized.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "delta input LF field",
            expected: 1,
            got: 0,
        });
    }
    let mut x = Vec::with_capacity(x_lf.len() + lf_pred_normalized.len());
    x.extend_from_slice(x_lf);
    x.extend_from_slice(lf_pred_normalized);
    Ok(x)
}

/// Residual targets `Δ = y_HF − ŷ_LF→HF`, elementwise per case and station.
pub fn compute_residuals<Y, P>(y_hf: &[Y], lf_pred: &[P]) -> Result<Vec<Vec<f64>>>
where
    Y: AsRef<[f64]>,
    P: AsRef<[f64]>,
{
    if y_hf.len() != lf_pred.len() {
        return Err(Error::DimensionMismatch {
            context: "residual cases",
            expected: y_hf.len(),
            got: lf_pred.len(),
        });
    }
    y_hf.iter()
        .zip(lf_pred)
        .map(|(y, p)| {
            let y = y.as_ref();
            let p = p.as_ref();
            if y.len() != p.len() {
                return Err(Error::DimensionMismatch {
                    context: "residual stations",
                    expected: y.len(),
                    got: p.len(),
                });
            }
            Ok(y.iter().zip(p).map(|(a, b)| a - b).collect())
        })
        .collect()
}

/// Either surrogate family behind one prediction interface.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Khronos(KhronosModel),
    Mlp(MlpModel),
}

impl AnyModel {
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            AnyModel::Khronos(m) => m.predict(x),
            AnyModel::Mlp(m) => m.predict(x),
        }
    }

    /// Forward pass in normalized output space (inputs are already
    /// pipeline-normalized).
    pub fn forward_normalized(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            AnyModel::Khronos(m) => m.forward(x),
            AnyModel::Mlp(m) => m.forward(x),
        }
    }

    pub fn output_norm(&self) -> &NormStats {
        match self {
            AnyModel::Khronos(m) => m.output_norm(),
            AnyModel::Mlp(m) => m.output_norm(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            AnyModel::Khronos(m) => m.config().param_count(),
            AnyModel::Mlp(m) => crate::mlp::mlp_param_count(m.widths()),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            AnyModel::Khronos(m) => m.config().dim,
            AnyModel::Mlp(m) => m.widths()[0],
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            AnyModel::Khronos(m) => m.save(path),
            AnyModel::Mlp(m) => m.save(path),
        }
    }

    /// Loads either checkpoint kind by peeking at its `kind` field.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let probe: serde_json::Value = serde_json::from_str(&text)?;
        match probe.get("kind").and_then(|k| k.as_str()) {
            Some("khronos") => Ok(AnyModel::Khronos(KhronosModel::load(path)?)),
            Some("mlp") => Ok(AnyModel::Mlp(MlpModel::load(path)?)),
            other => Err(Error::Data(format!("unknown checkpoint kind {other:?}"))),
        }
    }
}

/// A trained multi-fidelity surrogate. Case 1 surrogates carry no residual
/// model: their prediction is the LF model's.
#[derive(Debug, Clone)]
pub struct MfSurrogate {
    pub lf: AnyModel,
    pub delta: Option<AnyModel>,
    /// Min-max statistics for the raw [features, U, AoA] row.
    pub input_stats: NormStats,
}

/// LF prediction, raw residual-model output, and their sum.
#[derive(Debug, Clone)]
pub struct MfParts {
    pub lf: Vec<f64>,
    pub delta: Option<Vec<f64>>,
    pub mf: Vec<f64>,
}

impl MfSurrogate {
    pub fn assemble(&self, case: &MfCase) -> Result<Vec<f64>> {
        assemble_lf_input(&case.features, case.u, case.aoa, &self.input_stats)
    }

    /// Prediction from an assembled (normalized) LF input.
    pub fn predict_mf(&self, x_lf: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict_mf_parts(x_lf)?.mf)
    }

    /// Like [`Self::predict_mf`], exposing the LF and residual components.
    pub fn predict_mf_parts(&self, x_lf: &[f64]) -> Result<MfParts> {
        let lf_norm = self.lf.forward_normalized(x_lf)?;
        let lf = self.lf.output_norm().invert(&lf_norm);
        match &self.delta {
            None => Ok(MfParts { mf: lf.clone(), lf, delta: None }),
            Some(delta_model) => {
                let x_delta = assemble_delta_input(x_lf, &lf_norm)?;
                let correction = delta_model.predict(&x_delta)?;
                let mf: Vec<f64> =
                    lf.iter().zip(&correction).map(|(a, b)| a + b).collect();
                Ok(MfParts { lf, delta: Some(correction), mf })
            }
        }
    }

    pub fn predict_case(&self, case: &MfCase) -> Result<Vec<f64>> {
        let x = self.assemble(case)?;
        self.predict_mf(&x)
    }
}

/// Which architecture backs the two pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFamily {
    Khronos,
    Mlp,
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "khronos" => Ok(ModelFamily::Khronos),
            "mlp" => Ok(ModelFamily::Mlp),
            other => Err(Error::Config(format!("unknown model family {other:?}"))),
        }
    }
}

/// Two-stage pipeline configuration with the selected per-family sizes.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub family: ModelFamily,
    pub khronos_lf_grid: usize,
    pub khronos_lf_rank: usize,
    pub khronos_delta_grid: usize,
    pub khronos_delta_rank: usize,
    pub mlp_lf_hidden: Vec<usize>,
    pub mlp_delta_hidden: Vec<usize>,
    pub lf_train: TrainConfig,
    pub delta_train: TrainConfig,
}

impl PipelineConfig {
    /// Selected hyperparameters: LF k=3 r=4 (peak lr 3e-3, 1000 epochs),
    /// residual k=3 r=6 (peak lr 1e-3, 1500 epochs).
    pub fn khronos_defaults(seed: u64) -> Self {
        Self {
            family: ModelFamily::Khronos,
            khronos_lf_grid: 3,
            khronos_lf_rank: 4,
            khronos_delta_grid: 3,
            khronos_delta_rank: 6,
            mlp_lf_hidden: vec![256; 4],
            mlp_delta_hidden: vec![128; 4],
            lf_train: TrainConfig::new(3e-3, 1000, seed),
            delta_train: TrainConfig::new(1e-3, 1500, seed.wrapping_add(1)),
        }
    }

    /// Selected MLP baseline: four hidden layers of width 256 (LF) / 128
    /// (residual), same schedule family.
    pub fn mlp_defaults(seed: u64) -> Self {
        Self {
            family: ModelFamily::Mlp,
            lf_train: TrainConfig::new(3e-3, 3500, seed),
            delta_train: TrainConfig::new(1e-3, 4000, seed.wrapping_add(1)),
            ..Self::khronos_defaults(seed)
        }
    }

    fn make_lf(&self, d_in: usize, n_out: usize, seed: u64) -> Result<AnyModel> {
        Ok(match self.family {
            ModelFamily::Khronos => AnyModel::Khronos(KhronosModel::init(
                KernelConfig::new(d_in, self.khronos_lf_grid, self.khronos_lf_rank, n_out)?,
                seed,
            )),
            ModelFamily::Mlp => {
                let mut widths = vec![d_in];
                widths.extend_from_slice(&self.mlp_lf_hidden);
                widths.push(n_out);
                AnyModel::Mlp(MlpModel::init(&widths, seed)?)
            }
        })
    }

    fn make_delta(&self, d_in: usize, n_out: usize, seed: u64) -> Result<AnyModel> {
        Ok(match self.family {
            ModelFamily::Khronos => AnyModel::Khronos(KhronosModel::init(
                KernelConfig::new(d_in, self.khronos_delta_grid, self.khronos_delta_rank, n_out)?,
                seed,
            )),
            ModelFamily::Mlp => {
                let mut widths = vec![d_in];
                widths.extend_from_slice(&self.mlp_delta_hidden);
                widths.push(n_out);
                AnyModel::Mlp(MlpModel::init(&widths, seed)?)
            }
        })
    }
}

/// Training artifacts for the two stages.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub lf_history: TrainHistory,
    pub delta_history: Option<TrainHistory>,
    pub n_hf_cases: usize,
}

fn train_any(model: &mut AnyModel, set: &TrainingSet, cfg: &TrainConfig) -> Result<TrainHistory> {
    match model {
        AnyModel::Khronos(m) => train(m, set, cfg),
        AnyModel::Mlp(m) => train(m, set, cfg),
    }
}

/// Trains the full pipeline on a dataset: the LF stage on every training
/// case's LF field, and (when the dataset has an HF subset) the residual
/// stage on `Δ = y_HF − ŷ_LF→HF` in physical Cp space.
pub fn train_mf_surrogate(
    dataset: &MfDataset,
    config: &PipelineConfig,
) -> Result<(MfSurrogate, PipelineReport)> {
    if dataset.train.is_empty() {
        return Err(Error::Data("dataset has no training cases".into()));
    }
    let raw_rows: Vec<Vec<f64>> =
        dataset.train.iter().map(|&i| dataset.cases[i].raw_input()).collect();
    let input_stats = NormStats::fit(&raw_rows)?;

    let n_out = dataset.stations.len();
    let d_lf = raw_rows[0].len();

    // Stage 1: LF model on normalized LF targets.
    let lf_targets_raw: Vec<Vec<f64>> =
        dataset.train.iter().map(|&i| dataset.cases[i].cp_lf.clone()).collect();
    let lf_out_stats = NormStats::fit(&lf_targets_raw)?;
    let lf_inputs: Vec<Vec<f64>> = dataset
        .train
        .iter()
        .map(|&i| {
            let c = &dataset.cases[i];
            assemble_lf_input(&c.features, c.u, c.aoa, &input_stats)
        })
        .collect::<Result<_>>()?;
    let lf_targets = lf_out_stats.apply_rows(&lf_targets_raw)?;
    let mut lf_model = config.make_lf(d_lf, n_out, config.lf_train.seed)?;
    match &mut lf_model {
        AnyModel::Khronos(m) => m.set_output_norm(lf_out_stats.clone())?,
        AnyModel::Mlp(m) => m.set_output_norm(lf_out_stats.clone())?,
    }
    let lf_history = train_any(
        &mut lf_model,
        &TrainingSet::uniform(lf_inputs.clone(), lf_targets),
        &config.lf_train,
    )?;

    // Stage 2: residual model over the HF-labelled subset.
    let hf_cases: Vec<usize> = dataset.hf_indices.clone();
    let delta = if hf_cases.is_empty() {
        None
    } else {
        let mut y_hf = Vec::with_capacity(hf_cases.len());
        let mut lf_pred = Vec::with_capacity(hf_cases.len());
        let mut x_delta = Vec::with_capacity(hf_cases.len());
        for &i in &hf_cases {
            let c = &dataset.cases[i];
            let hf = c.cp_hf.as_ref().ok_or_else(|| {
                Error::Data(format!("case {i} selected for HF training but has no HF labels"))
            })?;
            let x_lf = assemble_lf_input(&c.features, c.u, c.aoa, &input_stats)?;
            let lf_norm = lf_model.forward_normalized(&x_lf)?;
            let pred = lf_model.output_norm().invert(&lf_norm);
            x_delta.push(assemble_delta_input(&x_lf, &lf_norm)?);
            y_hf.push(hf.clone());
            lf_pred.push(pred);
        }
        let residuals = compute_residuals(&y_hf, &lf_pred)?;
        let delta_out_stats = NormStats::fit(&residuals)?;
        let delta_targets = delta_out_stats.apply_rows(&residuals)?;
        let d_delta = d_lf + n_out;
        let mut delta_model = config.make_delta(d_delta, n_out, config.delta_train.seed)?;
        match &mut delta_model {
            AnyModel::Khronos(m) => m.set_output_norm(delta_out_stats)?,
            AnyModel::Mlp(m) => m.set_output_norm(delta_out_stats)?,
        }
        let history = train_any(
            &mut delta_model,
            &TrainingSet::uniform(x_delta, delta_targets),
            &config.delta_train,
        )?;
        Some((delta_model, history))
    };

    let (delta_model, delta_history) = match delta {
        Some((m, h)) => (Some(m), Some(h)),
        None => (None, None),
    };
    Ok((
        MfSurrogate { lf: lf_model, delta: delta_model, input_stats },
        PipelineReport { lf_history, delta_history, n_hf_cases: hf_cases.len() },
    ))
}

/// LF bias profile of the synthetic benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BiasProfile {
    /// LF equals HF bit-exactly.
    None,
    /// LF = HF + constant shift.
    Offset(f64),
    /// The leading-edge suction peak is attenuated in the LF field
    /// (multiplicative damping of the peak contribution).
    SuctionDamped,
}

impl BiasProfile {
    pub fn parse(name: &str, shift: f64) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "none" => Ok(BiasProfile::None),
            "offset" => Ok(BiasProfile::Offset(shift)),
            "suction-damped" | "suction_damped" => Ok(BiasProfile::SuctionDamped),
            other => Err(Error::Config(format!("unknown bias profile {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BiasProfile::None => "none",
            BiasProfile::Offset(_) => "offset",
            BiasProfile::SuctionDamped => "suction-damped",
        }
    }
}

/// A generated benchmark: paired cases plus the shared station grid.
#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub cases: Vec<MfCase>,
    pub stations: Vec<f64>,
    pub bias: BiasProfile,
    pub seed: u64,
}

/// Fraction of the suction-peak contribution removed from the LF field by
/// the suction-damped profile.
pub const SUCTION_DAMPING: f64 = 0.55;

/// Smooth leading-edge stagnation spike, 1 at the nose.
fn stagnation_shape(t: f64) -> f64 {
    (1.0 - t) * (-t / 0.02).exp()
}

/// Unit-height suction-peak shape, maximal near 6% chord and negligible
/// beyond the front quarter chord.
fn peak_shape(t: f64) -> f64 {
    (t / 0.06) * (1.0 - t / 0.06).exp()
}

fn hf_field(stations: &[f64], features: &[f64], u: f64, aoa: f64) -> (Vec<f64>, f64) {
    let n_feat = features.len() as f64;
    let u_n = (u - 20.0) / 40.0;
    let a_n = (aoa + 5.0) / 20.0;
    let g_mean: f64 = features.iter().sum::<f64>() / n_feat;
    let g_slope: f64 = features
        .iter()
        .enumerate()
        .map(|(i, f)| f * (std::f64::consts::PI * (i as f64 + 0.5) / n_feat).cos())
        .sum::<f64>()
        / n_feat;
    let peak_depth = 0.9 + 2.0 * a_n + 0.4 * u_n + 1.5 * g_mean;
    let cp = stations
        .iter()
        .map(|&t| {
            stagnation_shape(t) - peak_depth * peak_shape(t)
                + 0.35 * (t - 0.4) * (0.5 + a_n)
                + 0.4 * g_mean * (std::f64::consts::PI * t).sin()
                + 0.3 * g_slope * (2.0 * std::f64::consts::PI * t).sin()
                + 0.15 * (3.0 * t).cos() * (u_n - 0.5)
        })
        .collect();
    (cp, peak_depth)
}

/// Generates `n_cases` paired LF/HF cases: smooth random control-point-like
/// feature profiles, operating scalars U ∈ [20, 60] m/s and AoA ∈ [-5, 15]
/// degrees, an analytic HF Cp field with a leading-edge suction peak, and an
/// LF field derived from it by the chosen bias profile. Deterministic given
/// the seed.
pub fn synth_benchmark(
    n_cases: usize,
    n_stations: usize,
    bias: BiasProfile,
    seed: u64,
) -> Result<SynthBundle> {
    use rand::Rng;
    use rand::SeedableRng;

    if n_cases == 0 {
        return Err(Error::Config("need at least 1 case".into()));
    }
    if n_stations < 2 {
        return Err(Error::Config("need at least 2 stations".into()));
    }
    let stations = station_grid(n_stations);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(n_cases);
    for _ in 0..n_cases {
        // Smooth random perturbation of a thickness-like base profile.
        let modes: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let features: Vec<f64> = (0..N_GEOM_FEATURES)
            .map(|i| {
                let s = (i as f64 + 0.5) / N_GEOM_FEATURES as f64;
                let base = 0.12 * (std::f64::consts::PI * s).sin();
                let bump: f64 = modes
                    .iter()
                    .enumerate()
                    .map(|(h, a)| {
                        a / (h + 1) as f64
                            * (std::f64::consts::PI * (h + 1) as f64 * s).sin()
                    })
                    .sum();
                base + 0.08 * bump
            })
            .collect();
        let u = rng.random_range(20.0..60.0);
        let aoa = rng.random_range(-5.0..15.0);
        let (cp_hf, peak_depth) = hf_field(&stations, &features, u, aoa);
        let cp_lf: Vec<f64> = match bias {
            BiasProfile::None => cp_hf.clone(),
            BiasProfile::Offset(shift) => cp_hf.iter().map(|c| c + shift).collect(),
            BiasProfile::SuctionDamped => stations
                .iter()
                .zip(&cp_hf)
                .map(|(&t, c)| c + SUCTION_DAMPING * peak_depth * peak_shape(t))
                .collect(),
        };
        cases.push(MfCase { features, u, aoa, cp_lf, cp_hf: Some(cp_hf) });
    }
    Ok(SynthBundle { cases, stations, bias, seed })
}

// ---------------------------------------------------------------------------
// Dataset directory format: manifest JSON + per-case CSVs.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ManifestCase {
    id: usize,
    file: String,
    features: Vec<f64>,
    u: f64,
    aoa: f64,
    has_hf: bool,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    n_cases: usize,
    n_stations: usize,
    stations: Vec<f64>,
    bias_profile: String,
    seed: u64,
    cases: Vec<ManifestCase>,
}

/// Writes a bundle as `manifest.json` plus `cases/case_NNNN.csv`
/// (columns `station,cp_lf,cp_hf`; the HF column is empty for LF-only cases).
pub fn write_dataset(dir: &Path, bundle: &SynthBundle) -> Result<()> {
    std::fs::create_dir_all(dir.join("cases"))?;
    let mut manifest_cases = Vec::with_capacity(bundle.cases.len());
    for (id, case) in bundle.cases.iter().enumerate() {
        let file = format!("cases/case_{id:04}.csv");
        let mut w = csv::Writer::from_path(dir.join(&file))?;
        w.write_record(["station", "cp_lf", "cp_hf"])?;
        for (s, &station) in bundle.stations.iter().enumerate() {
            let hf = case.cp_hf.as_ref().map(|v| v[s].to_string()).unwrap_or_default();
            w.write_record([station.to_string(), case.cp_lf[s].to_string(), hf])?;
        }
        w.flush()?;
        manifest_cases.push(ManifestCase {
            id,
            file,
            features: case.features.clone(),
            u: case.u,
            aoa: case.aoa,
            has_hf: case.cp_hf.is_some(),
        });
    }
    let manifest = Manifest {
        version: 1,
        n_cases: bundle.cases.len(),
        n_stations: bundle.stations.len(),
        stations: bundle.stations.clone(),
        bias_profile: bundle.bias.name().into(),
        seed: bundle.seed,
        cases: manifest_cases,
    };
    let file = std::fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &manifest)?;
    Ok(())
}

/// Reads a dataset directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<SynthBundle> {
    let file = std::fs::File::open(dir.join("manifest.json"))?;
    let manifest: Manifest = serde_json::from_reader(std::io::BufReader::new(file))?;
    let mut cases = Vec::with_capacity(manifest.cases.len());
    for entry in &manifest.cases {
        let path = dir.join(&entry.file);
        let mut reader = csv::ReaderBuilder::new().from_path(&path)?;
        let mut cp_lf = Vec::with_capacity(manifest.n_stations);
        let mut cp_hf = Vec::with_capacity(manifest.n_stations);
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = (i + 2) as u64;
            let lf: f64 = record
                .get(1)
                .ok_or_else(|| Error::Parse { line, msg: "missing cp_lf".into() })?
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse { line, msg: e.to_string() })?;
            cp_lf.push(lf);
            let hf_text = record.get(2).unwrap_or("");
            if !hf_text.is_empty() {
                cp_hf.push(hf_text.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?);
            }
        }
        if cp_lf.len() != manifest.n_stations {
            return Err(Error::Data(format!(
                "{}: expected {} stations, found {}",
                path.display(),
                manifest.n_stations,
                cp_lf.len()
            )));
        }
        let cp_hf = if entry.has_hf {
            if cp_hf.len() != manifest.n_stations {
                return Err(Error::Data(format!(
                    "{}: HF column incomplete ({} of {})",
                    path.display(),
                    cp_hf.len(),
                    manifest.n_stations
                )));
            }
            Some(cp_hf)
        } else {
            None
        };
        cases.push(MfCase {
            features: entry.features.clone(),
            u: entry.u,
            aoa: entry.aoa,
            cp_lf,
            cp_hf,
        });
    }
    let bias = match manifest.bias_profile.as_str() {
        "none" => BiasProfile::None,
        "offset" => BiasProfile::Offset(0.0),
        "suction-damped" => BiasProfile::SuctionDamped,
        other => return Err(Error::Data(format!("unknown bias profile {other:?} in manifest"))),
    };
    Ok(SynthBundle { cases, stations: manifest.stations, bias, seed: manifest.seed })
}
