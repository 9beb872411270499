//! Scratch calibration probe (not part of the deliverable).

use std::time::Instant;

use khronos::eval::{nrmse, r_squared};
use khronos::mfpipe::{
    build_cases, synth_benchmark, train_mf_surrogate, BiasProfile, PipelineConfig,
};
use khronos::model::{KernelConfig, KhronosModel};
use khronos::mlp::MlpModel;
use khronos::train::{train, GradientModel, TrainConfig, TrainingSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy_target(x: f64, y: f64) -> [f64; 2] {
    use std::f64::consts::TAU;
    [
        (TAU * x).sin() * (TAU * y).sin()
            + (2.0 * TAU * x).sin() * (2.0 * TAU * y).sin()
            + (3.0 * TAU * x).sin() * (3.0 * TAU * y).sin(),
        (TAU * x).cos() * (TAU * y).cos()
            + (2.0 * TAU * x).cos() * (2.0 * TAU * y).cos()
            + (3.0 * TAU * x).sin() * (3.0 * TAU * y).sin(),
    ]
}

fn toy_set(n: usize, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random_range(0.0..1.0);
        let y = rng.random_range(0.0..1.0);
        inputs.push(vec![x, y]);
        targets.push(toy_target(x, y).to_vec());
    }
    TrainingSet::uniform(inputs, targets)
}

fn flat_nrmse(targets: &[Vec<f64>], preds: &[Vec<f64>]) -> f64 {
    let y: Vec<f64> = targets.iter().flatten().copied().collect();
    let p: Vec<f64> = preds.iter().flatten().copied().collect();
    nrmse(&y, &p).unwrap()
}

fn probe_toy() {
    for (epochs, lr) in [(1500usize, 1e-2), (3000, 1e-2), (3000, 2e-2), (5000, 1e-2)] {
        let start = Instant::now();
        let data = toy_set(3000, 42);
        let mut model = KhronosModel::init(KernelConfig::new(2, 30, 5, 2).unwrap(), 7);
        let cfg = TrainConfig::new(lr, epochs, 11);
        let hist = train(&mut model, &data, &cfg).unwrap();
        let fresh = toy_set(3000, 43);
        let preds: Vec<Vec<f64>> = fresh.inputs.iter().map(|x| model.forward(x).unwrap()).collect();
        let train_preds: Vec<Vec<f64>> =
            data.inputs.iter().map(|x| model.forward(x).unwrap()).collect();
        println!(
            "toy epochs={epochs} lr={lr}: {:.1}s final_loss={:.3e} nrmse_train={:.4} nrmse_fresh={:.4}",
            start.elapsed().as_secs_f64(),
            hist.final_loss(),
            flat_nrmse(&data.targets, &train_preds),
            flat_nrmse(&fresh.targets, &preds),
        );
    }
}

fn pooled(ds: &khronos::mfpipe::MfDataset, pred: impl Fn(&khronos::mfpipe::MfCase) -> Vec<f64>) -> f64 {
    let mut y = Vec::new();
    let mut p = Vec::new();
    for &i in &ds.test {
        let case = &ds.cases[i];
        y.extend_from_slice(case.cp_hf.as_ref().unwrap());
        p.extend(pred(case));
    }
    r_squared(&y, &p).unwrap()
}

fn probe_mf_gain() {
    let bundle = synth_benchmark(500, 81, BiasProfile::SuctionDamped, 123).unwrap();
    for (lf_epochs, d_epochs, lf_rank, d_rank) in
        [(1000usize, 1500usize, 4usize, 6usize), (600, 800, 4, 6), (1000, 1500, 8, 6)]
    {
        let start = Instant::now();
        let ds1 = build_cases(bundle.cases.clone(), bundle.stations.clone(), 0.0, 9).unwrap();
        let ds2 = build_cases(bundle.cases.clone(), bundle.stations.clone(), 0.1, 9).unwrap();
        let mut cfg = PipelineConfig::khronos_defaults(5);
        cfg.khronos_lf_rank = lf_rank;
        cfg.khronos_delta_rank = d_rank;
        cfg.lf_train.epochs = lf_epochs;
        cfg.delta_train.epochs = d_epochs;
        let (case1, _) = train_mf_surrogate(&ds1, &cfg).unwrap();
        let (case2, _) = train_mf_surrogate(&ds2, &cfg).unwrap();
        let r2_lf = pooled(&ds1, |c| case1.predict_case(c).unwrap());
        let r2_mf = pooled(&ds2, |c| case2.predict_case(c).unwrap());
        println!(
            "mf-gain lf_epochs={lf_epochs} d_epochs={d_epochs} ranks=({lf_rank},{d_rank}): {:.0}s R2_LF={:.4} R2_MF={:.4} gain={:.4}",
            start.elapsed().as_secs_f64(),
            r2_lf,
            r2_mf,
            r2_mf - r2_lf
        );
    }
}

fn probe_identity() {
    // bias none, delta trained on exactly-zero residuals.
    let bundle = synth_benchmark(200, 81, BiasProfile::None, 321).unwrap();
    let ds = build_cases(bundle.cases.clone(), bundle.stations.clone(), 0.1, 9).unwrap();
    let mut cfg = PipelineConfig::khronos_defaults(5);
    cfg.lf_train.epochs = 400;
    cfg.delta_train.epochs = 300;
    let (surrogate, _) = train_mf_surrogate(&ds, &cfg).unwrap();
    // Max |delta| over test set relative to LF output range.
    let mut max_rel: f64 = 0.0;
    let range = {
        let stats = surrogate.lf.output_norm();
        stats
            .maxs()
            .iter()
            .zip(stats.mins())
            .map(|(a, b)| a - b)
            .fold(0.0f64, f64::max)
    };
    for &i in &ds.test {
        let x = surrogate.assemble(&ds.cases[i]).unwrap();
        let parts = surrogate.predict_mf_parts(&x).unwrap();
        if let Some(d) = parts.delta {
            for v in d {
                max_rel = max_rel.max(v.abs() / range);
            }
        }
    }
    println!("identity(real residuals): max|delta|/range = {max_rel:.3e}");
}

fn probe_matched_budget() {
    let bundle = synth_benchmark(300, 81, BiasProfile::None, 77).unwrap();
    let ds = build_cases(bundle.cases.clone(), bundle.stations.clone(), 0.0, 9).unwrap();
    // Train single-fidelity models on HF targets.
    let raw: Vec<Vec<f64>> = ds.train.iter().map(|&i| ds.cases[i].raw_input()).collect();
    let stats = khronos::fields::NormStats::fit(&raw).unwrap();
    let targets_raw: Vec<Vec<f64>> =
        ds.train.iter().map(|&i| ds.cases[i].cp_hf.clone().unwrap()).collect();
    let out_stats = khronos::fields::NormStats::fit(&targets_raw).unwrap();
    let inputs: Vec<Vec<f64>> = ds
        .train
        .iter()
        .map(|&i| {
            let c = &ds.cases[i];
            khronos::mfpipe::assemble_lf_input(&c.features, c.u, c.aoa, &stats).unwrap()
        })
        .collect();
    let targets = out_stats.apply_rows(&targets_raw).unwrap();
    let set = TrainingSet::uniform(inputs, targets);
    let test_inputs: Vec<Vec<f64>> = ds
        .test
        .iter()
        .map(|&i| {
            let c = &ds.cases[i];
            khronos::mfpipe::assemble_lf_input(&c.features, c.u, c.aoa, &stats).unwrap()
        })
        .collect();
    let test_y: Vec<f64> = ds
        .test
        .iter()
        .flat_map(|&i| ds.cases[i].cp_hf.clone().unwrap())
        .collect();

    let eval_model = |m: &dyn Fn(&[f64]) -> Vec<f64>| -> (f64, f64) {
        let mut preds = Vec::new();
        for x in &test_inputs {
            preds.extend(out_stats.invert(&m(x)));
        }
        (r_squared(&test_y, &preds).unwrap(), nrmse(&test_y, &preds).unwrap())
    };

    // KHRONOS capacity ladder.
    for (k_grid, rank, epochs, lr) in [
        (5usize, 12usize, 1500usize, 5e-3),
        (8, 12, 1500, 5e-3),
        (5, 16, 2000, 5e-3),
        (8, 16, 2000, 5e-3),
    ] {
        let start = Instant::now();
        let mut k = KhronosModel::init(KernelConfig::new(18, k_grid, rank, 81).unwrap(), 3);
        let cfg = TrainConfig::new(lr, epochs, 1);
        train(&mut k, &set, &cfg).unwrap();
        let (r2, nr) = eval_model(&|x| k.forward(x).unwrap());
        println!(
            "khronos k={k_grid} r={rank} epochs={epochs}: {:.1}s params={} R2={:.4} NRMSE={:.4}",
            start.elapsed().as_secs_f64(),
            k.param_len(),
            r2,
            nr
        );
    }
    // MLP at cheaper settings.
    for epochs in [60usize, 120] {
        let start = Instant::now();
        let mut m = MlpModel::init(&[18, 256, 256, 256, 256, 81], 3).unwrap();
        let cfg = TrainConfig::new(3e-3, epochs, 1);
        train(&mut m, &set, &cfg).unwrap();
        let (r2, nr) = eval_model(&|x| m.forward(x).unwrap());
        println!(
            "mlp epochs={epochs}: {:.1}s params={} R2={:.4} NRMSE={:.4}",
            start.elapsed().as_secs_f64(),
            m.param_len(),
            r2,
            nr
        );
    }
}

fn probe_feature_path() {
    // Can the separable model learn a single-coordinate feature term?
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 300;
    let d = 18;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        // 81 outputs, mixture of (x16, x17) smooth terms plus one feature term.
        let t_grid: Vec<f64> = (0..81).map(|m| m as f64 / 80.0).collect();
        let y: Vec<f64> = t_grid
            .iter()
            .map(|&t| {
                (1.0 - t) * (-t / 0.02).exp() - (0.9 + 2.0 * x[16]) * (t / 0.06864) * (1.0 - t / 0.06864).exp()
                    + 0.35 * (t - 0.4) * (0.5 + x[17])
                    + 0.5 * (x[4] - 0.5) * (std::f64::consts::PI * t).sin()
                    + 0.3 * (x[11] - 0.5) * (2.0 * std::f64::consts::PI * t).sin()
            })
            .collect();
        inputs.push(x);
        targets.push(y);
    }
    let set = TrainingSet::uniform(inputs.clone(), targets.clone());
    for (k_grid, rank, epochs, lr) in
        [(3usize, 8usize, 1500usize, 5e-3), (3, 8, 3000, 1e-2), (3, 12, 3000, 2e-2)]
    {
        let start = Instant::now();
        let mut k = KhronosModel::init(KernelConfig::new(d, k_grid, rank, 81).unwrap(), 3);
        let cfg = TrainConfig::new(lr, epochs, 1);
        train(&mut k, &set, &cfg).unwrap();
        let preds: Vec<Vec<f64>> = inputs.iter().map(|x| k.forward(x).unwrap()).collect();
        println!(
            "featpath k={k_grid} r={rank} epochs={epochs} lr={lr}: {:.1}s NRMSE={:.4}",
            start.elapsed().as_secs_f64(),
            flat_nrmse(&targets, &preds),
        );
    }
}

fn probe_high_lr() {
    let bundle = synth_benchmark(300, 81, BiasProfile::None, 77).unwrap();
    let ds = build_cases(bundle.cases.clone(), bundle.stations.clone(), 0.0, 9).unwrap();
    let raw: Vec<Vec<f64>> = ds.train.iter().map(|&i| ds.cases[i].raw_input()).collect();
    let stats = khronos::fields::NormStats::fit(&raw).unwrap();
    let targets_raw: Vec<Vec<f64>> =
        ds.train.iter().map(|&i| ds.cases[i].cp_hf.clone().unwrap()).collect();
    let out_stats = khronos::fields::NormStats::fit(&targets_raw).unwrap();
    let inputs: Vec<Vec<f64>> = ds
        .train
        .iter()
        .map(|&i| {
            let c = &ds.cases[i];
            khronos::mfpipe::assemble_lf_input(&c.features, c.u, c.aoa, &stats).unwrap()
        })
        .collect();
    let targets = out_stats.apply_rows(&targets_raw).unwrap();
    let set = TrainingSet::uniform(inputs, targets);
    let test_inputs: Vec<Vec<f64>> = ds
        .test
        .iter()
        .map(|&i| {
            let c = &ds.cases[i];
            khronos::mfpipe::assemble_lf_input(&c.features, c.u, c.aoa, &stats).unwrap()
        })
        .collect();
    let test_y: Vec<f64> = ds
        .test
        .iter()
        .flat_map(|&i| ds.cases[i].cp_hf.clone().unwrap())
        .collect();
    for (epochs, lr) in [(3000usize, 2e-2), (6000, 2e-2), (6000, 5e-2)] {
        let start = Instant::now();
        let mut k = KhronosModel::init(KernelConfig::new(18, 3, 12, 81).unwrap(), 3);
        let cfg = TrainConfig::new(lr, epochs, 1);
        train(&mut k, &set, &cfg).unwrap();
        let mut preds = Vec::new();
        for x in &test_inputs {
            preds.extend(out_stats.invert(&k.forward(x).unwrap()));
        }
        println!(
            "highlr epochs={epochs} lr={lr}: {:.1}s R2={:.10} NRMSE={:.10}",
            start.elapsed().as_secs_f64(),
            r_squared(&test_y, &preds).unwrap(),
            nrmse(&test_y, &preds).unwrap()
        );
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "toy" => probe_toy(),
        "gain" => probe_mf_gain(),
        "identity" => probe_identity(),
        "budget" => probe_matched_budget(),
        "featpath" => probe_feature_path(),
        "highlr" => probe_high_lr(),
        _ => {
            probe_toy();
            probe_mf_gain();
            probe_identity();
            probe_matched_budget();
        }
    }
}
