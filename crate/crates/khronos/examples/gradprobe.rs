//! Scratch diagnostics (not part of the deliverable).
use khronos::mfpipe::{build_cases, synth_benchmark, BiasProfile};
use khronos::model::{KernelConfig, KhronosModel};
use khronos::train::{train, TrainConfig, TrainingSet};

fn main() {
    let bundle = synth_benchmark(300, 81, BiasProfile::None, 77).unwrap();
    let ds = build_cases(bundle.cases.clone(), bundle.stations.clone(), 0.0, 9).unwrap();
    let raw: Vec<Vec<f64>> = ds.train.iter().map(|&i| ds.cases[i].raw_input()).collect();
    let stats = khronos::fields::NormStats::fit(&raw).unwrap();
    let targets_raw: Vec<Vec<f64>> =
        ds.train.iter().map(|&i| ds.cases[i].cp_hf.clone().unwrap()).collect();
    let out_stats = khronos::fields::NormStats::fit(&targets_raw).unwrap();
    let inputs: Vec<Vec<f64>> = ds.train.iter().map(|&i| {
        let c = &ds.cases[i];
        khronos::mfpipe::assemble_lf_input(&c.features, c.u, c.aoa, &stats).unwrap()
    }).collect();
    let targets = out_stats.apply_rows(&targets_raw).unwrap();
    let set = TrainingSet::uniform(inputs.clone(), targets);

    let d = 18;
    let config = KernelConfig::new(d, 3, 8, 81).unwrap();
    let mut model = KhronosModel::init(config, 3);
    let cfg = TrainConfig::new(5e-3, 800, 1);
    let hist = train(&mut model, &set, &cfg).unwrap();
    println!("loss[0]={:.4e} loss[end]={:.4e}", hist.epoch_loss[0], hist.final_loss());
    print!("gammas: ");
    for i in 0..d {
        print!("{:.2} ", model.params().gamma(i));
    }
    println!();
    // Mode products on a few samples.
    for x in inputs.iter().take(3) {
        let p = model.params();
        print!("sample products: ");
        for j in 0..8 {
            let mut prod = 1.0;
            for i in 0..d {
                let gamma = p.gamma(i);
                let mut atom = 0.0;
                for (s, &g) in model.grid().iter().enumerate() {
                    atom += p.alpha(i, s, j)
                        * khronos::splines::quadratic_kernel((x[i] - g).abs() * gamma);
                }
                prod *= atom;
            }
            print!("{prod:.2e} ");
        }
        println!();
    }
    // Head magnitudes
    let p = model.params();
    let mut hmax: f64 = 0.0;
    for j in 0..8 {
        for m in 0..81 {
            hmax = hmax.max(p.head(j, m).abs());
        }
    }
    let mut amax: f64 = 0.0;
    for i in 0..d {
        for s in 0..3 {
            for j in 0..8 {
                amax = amax.max(p.alpha(i, s, j).abs());
            }
        }
    }
    println!("max|head|={hmax:.3} max|alpha|={amax:.3} bias[40]={:.3}", p.bias(40));
}
