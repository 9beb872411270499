//! Dense feedforward baseline: rectifier hidden layers, identity output,
//! manual backpropagation, fan-in-scaled uniform initialization, and the
//! shared checkpoint JSON convention.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::NormStats;
use crate::train::GradientModel;

/// Parameter count for a stack of affine layers:
/// `Σ (fan_in * fan_out + fan_out)`.
pub fn mlp_param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Fully connected network with ReLU hidden activations.
///
/// Parameters are stored flat, layer by layer: weights row-major
/// `[out][in]`, then biases.
#[derive(Debug, Clone)]
pub struct MlpModel {
    widths: Vec<usize>,
    params: Vec<f64>,
    input_norm: NormStats,
    output_norm: NormStats,
}

impl MlpModel {
    /// He-style initialization: weights uniform in ±sqrt(6/fan_in), biases 0.
    pub fn init(widths: &[usize], seed: u64) -> Result<Self> {
        use rand::Rng;
        use rand::SeedableRng;
        if widths.len() < 2 {
            return Err(Error::Config(format!(
                "an MLP needs at least input and output widths, got {}",
                widths.len()
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; mlp_param_count(widths)];
        let mut off = 0usize;
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            for value in params.iter_mut().skip(off).take(fan_in * fan_out) {
                *value = rng.random_range(-bound..bound);
            }
            off += fan_in * fan_out + fan_out; // biases stay zero
        }
        Ok(Self {
            input_norm: NormStats::identity(widths[0]),
            output_norm: NormStats::identity(widths[widths.len() - 1]),
            widths: widths.to_vec(),
            params,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_norm(&self) -> &NormStats {
        &self.input_norm
    }

    pub fn output_norm(&self) -> &NormStats {
        &self.output_norm
    }

    pub fn set_input_norm(&mut self, stats: NormStats) -> Result<()> {
        if stats.dim() != self.widths[0] {
            return Err(Error::DimensionMismatch {
                context: "mlp input normalization",
                expected: self.widths[0],
                got: stats.dim(),
            });
        }
        self.input_norm = stats;
        Ok(())
    }

    pub fn set_output_norm(&mut self, stats: NormStats) -> Result<()> {
        let out = self.widths[self.widths.len() - 1];
        if stats.dim() != out {
            return Err(Error::DimensionMismatch {
                context: "mlp output normalization",
                expected: out,
                got: stats.dim(),
            });
        }
        self.output_norm = stats;
        Ok(())
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.widths
            .windows(2)
            .take(layer)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Weight (row-major) and bias slices of one layer.
    fn layer(&self, layer: usize) -> (&[f64], &[f64]) {
        let off = self.layer_offset(layer);
        let (fan_in, fan_out) = (self.widths[layer], self.widths[layer + 1]);
        let w = &self.params[off..off + fan_in * fan_out];
        let b = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
        (w, b)
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Forward pass in normalized space, returning all post-activation
    /// layer values (index 0 is the input itself).
    fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.widths[0] {
            return Err(Error::DimensionMismatch {
                context: "mlp forward input",
                expected: self.widths[0],
                got: x.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.widths.len());
        acts.push(x.to_vec());
        for layer in 0..self.n_layers() {
            let (w, b) = self.layer(layer);
            let fan_in = self.widths[layer];
            let fan_out = self.widths[layer + 1];
            let prev = &acts[layer];
            let mut next = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut z = b[o];
                for (wi, xi) in row.iter().zip(prev) {
                    z += wi * xi;
                }
                next[o] = if layer + 1 < self.n_layers() { z.max(0.0) } else { z };
            }
            acts.push(next);
        }
        Ok(acts)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.pop().unwrap())
    }

    /// Exact backpropagation; accumulates dL/dparams into `grad`.
    pub fn backward_into(&self, x: &[f64], upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        let out_dim = self.widths[self.widths.len() - 1];
        if upstream.len() != out_dim {
            return Err(Error::DimensionMismatch {
                context: "mlp backward upstream",
                expected: out_dim,
                got: upstream.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                context: "mlp gradient buffer",
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let acts = self.forward_trace(x)?;
        let mut delta = upstream.to_vec();
        for layer in (0..self.n_layers()).rev() {
            let (w, _) = self.layer(layer);
            let off = self.layer_offset(layer);
            let fan_in = self.widths[layer];
            let fan_out = self.widths[layer + 1];
            let prev = &acts[layer];
            // Hidden activations are rectified; mask dead units.
            if layer + 1 < self.n_layers() {
                for (d, &a) in delta.iter_mut().zip(&acts[layer + 1]) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let bias_off = off + fan_in * fan_out;
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grad[bias_off + o] += d;
                let row = off + o * fan_in;
                for i in 0..fan_in {
                    grad[row + i] += d * prev[i];
                }
            }
            if layer > 0 {
                let mut next_delta = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    for (nd, wi) in next_delta.iter_mut().zip(row) {
                        *nd += d * wi;
                    }
                }
                delta = next_delta;
            }
        }
        Ok(())
    }

    pub fn predict(&self, x_raw: &[f64]) -> Result<Vec<f64>> {
        let xn = self.input_norm.apply(x_raw)?;
        let yn = self.forward(&xn)?;
        Ok(self.output_norm.invert(&yn))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut layers = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (w, b) = self.layer(l);
            layers.push(MlpLayerFile { weights: w.to_vec(), biases: b.to_vec() });
        }
        let doc = MlpCheckpoint {
            kind: "mlp".into(),
            widths: self.widths.clone(),
            input_min: self.input_norm.mins().to_vec(),
            input_max: self.input_norm.maxs().to_vec(),
            output_min: self.output_norm.mins().to_vec(),
            output_max: self.output_norm.maxs().to_vec(),
            layers,
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &doc)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let doc: MlpCheckpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        if doc.kind != "mlp" {
            return Err(Error::Data(format!("checkpoint kind {:?} is not an mlp", doc.kind)));
        }
        let mut model = Self::init(&doc.widths, 0)?;
        let mut flat = Vec::with_capacity(model.params.len());
        for layer in &doc.layers {
            flat.extend_from_slice(&layer.weights);
            flat.extend_from_slice(&layer.biases);
        }
        if flat.len() != model.params.len() {
            return Err(Error::Data(format!(
                "checkpoint holds {} parameters, widths imply {}",
                flat.len(),
                model.params.len()
            )));
        }
        model.params = flat;
        model.set_input_norm(NormStats::from_bounds(doc.input_min, doc.input_max)?)?;
        model.set_output_norm(NormStats::from_bounds(doc.output_min, doc.output_max)?)?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct MlpLayerFile {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MlpCheckpoint {
    kind: String,
    widths: Vec<usize>,
    input_min: Vec<f64>,
    input_max: Vec<f64>,
    output_min: Vec<f64>,
    output_max: Vec<f64>,
    layers: Vec<MlpLayerFile>,
}

impl GradientModel for MlpModel {
    fn input_dim(&self) -> usize {
        self.widths[0]
    }

    fn output_dim(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    fn param_len(&self) -> usize {
        self.params.len()
    }

    fn param_data(&self) -> &[f64] {
        &self.params
    }

    fn param_data_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let y = self.forward(x)?;
        out.copy_from_slice(&y);
        Ok(())
    }

    fn backprop_into(&self, x: &[f64], upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        self.backward_into(x, upstream, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_count_examples() {
        // (2,3,1): 2*3+3 + 3*1+1.
        assert_eq!(mlp_param_count(&[2, 3, 1]), 13);
        // Stated LF baseline widths; hand-derived from the formula:
        // 18*256+256 + 3*(256*256+256) + 256*81+81.
        assert_eq!(mlp_param_count(&[18, 256, 256, 256, 256, 81]), 223_057);
    }

    #[test]
    fn param_count_unit_increment() {
        // Adding one unit to the last hidden layer changes the count by
        // fan_in + 1 + fan_out.
        let a = mlp_param_count(&[10, 20, 30, 5]);
        let b = mlp_param_count(&[10, 20, 31, 5]);
        assert_eq!(b - a, 20 + 1 + 5);
    }

    #[test]
    fn zero_weights_return_output_bias() {
        let mut model = MlpModel::init(&[3, 4, 2], 0).unwrap();
        model.params.iter_mut().for_each(|p| *p = 0.0);
        let n = model.params.len();
        model.params[n - 2] = 0.7;
        model.params[n - 1] = -0.3;
        let y = model.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(y, vec![0.7, -0.3]);
    }

    #[test]
    fn hand_computed_1_1_1_network() {
        // y = w2 * relu(w1 x + b1) + b2 with w1=2, b1=-1, w2=3, b2=0.5.
        let mut model = MlpModel::init(&[1, 1, 1], 0).unwrap();
        model.params.copy_from_slice(&[2.0, -1.0, 3.0, 0.5]);
        let y = model.forward(&[2.0]).unwrap();
        assert_eq!(y, vec![3.0 * (2.0 * 2.0 - 1.0) + 0.5]);
        // Negative pre-activation rectifies to zero.
        let y = model.forward(&[0.0]).unwrap();
        assert_eq!(y, vec![0.5]);
    }

    #[test]
    fn all_negative_preactivations_give_bias() {
        let mut model = MlpModel::init(&[2, 3, 2], 1).unwrap();
        // Force strongly negative hidden biases.
        let off = 2 * 3;
        for b in model.params[off..off + 3].iter_mut() {
            *b = -100.0;
        }
        let n = model.params.len();
        model.params[n - 2] = 1.25;
        model.params[n - 1] = -4.0;
        let y = model.forward(&[0.1, 0.1]).unwrap();
        assert_eq!(y, vec![1.25, -4.0]);
    }

    #[test]
    fn backward_zero_upstream_is_zero() {
        let model = MlpModel::init(&[4, 8, 3], 2).unwrap();
        let mut grad = vec![0.0; model.param_len()];
        model.backward_into(&[0.1, 0.5, -0.2, 0.9], &[0.0, 0.0, 0.0], &mut grad).unwrap();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn output_bias_gradient_equals_upstream() {
        let model = MlpModel::init(&[4, 8, 3], 2).unwrap();
        let mut grad = vec![0.0; model.param_len()];
        let upstream = [0.4, -0.6, 1.1];
        model.backward_into(&[0.1, 0.5, -0.2, 0.9], &upstream, &mut grad).unwrap();
        let n = grad.len();
        assert_eq!(&grad[n - 3..], &upstream);
    }

    fn finite_diff(model: &MlpModel, x: &[f64], upstream: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let loss = |m: &MlpModel| -> f64 {
            m.forward(x).unwrap().iter().zip(upstream).map(|(y, u)| y * u).sum()
        };
        (0..model.params.len())
            .map(|i| {
                let mut plus = model.clone();
                plus.params[i] += h;
                let mut minus = model.clone();
                minus.params[i] -= h;
                (loss(&plus) - loss(&minus)) / (2.0 * h)
            })
            .collect()
    }

    /// Smallest |pre-activation| over the hidden layers; used to keep
    /// finite-difference probes away from the rectifier kink.
    fn min_abs_preactivation(model: &MlpModel, x: &[f64]) -> f64 {
        let mut prev = x.to_vec();
        let mut min_abs = f64::INFINITY;
        for layer in 0..model.n_layers() - 1 {
            let (w, b) = model.layer(layer);
            let fan_in = model.widths[layer];
            let fan_out = model.widths[layer + 1];
            let mut next = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let z: f64 = b[o] + row.iter().zip(&prev).map(|(a, b)| a * b).sum::<f64>();
                min_abs = min_abs.min(z.abs());
                next[o] = z.max(0.0);
            }
            prev = next;
        }
        min_abs
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let widths = vec![
                rng.random_range(1..5usize),
                rng.random_range(2..9),
                rng.random_range(2..9),
                rng.random_range(1..4),
            ];
            let model = MlpModel::init(&widths, trial).unwrap();
            // Sample inputs away from rectifier kinks so central differences
            // stay one-sided.
            let x: Vec<f64> = loop {
                let candidate: Vec<f64> =
                    (0..widths[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
                if min_abs_preactivation(&model, &candidate) > 1e-4 {
                    break candidate;
                }
            };
            let upstream: Vec<f64> =
                (0..widths[3]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut grad = vec![0.0; model.param_len()];
            model.backward_into(&x, &upstream, &mut grad).unwrap();
            let numeric = finite_diff(&model, &x, &upstream);
            for (idx, (&a, &n)) in grad.iter().zip(&numeric).enumerate() {
                let tol = 1e-5 * a.abs().max(n.abs()) + 1e-9;
                assert!(
                    (a - n).abs() <= tol,
                    "trial {trial}: grad[{idx}] analytic {a} vs numeric {n}"
                );
            }
        }
    }

    #[test]
    fn first_layer_positive_homogeneity() {
        // With zero biases, scaling the input by λ > 0 scales first-layer
        // pre-activations by λ.
        let mut model = MlpModel::init(&[3, 5, 2], 9).unwrap();
        let off = 3 * 5;
        for b in model.params[off..off + 5].iter_mut() {
            *b = 0.0;
        }
        let x = [0.3, -0.8, 0.5];
        let lambda = 2.5;
        let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let (w, _) = model.layer(0);
        for o in 0..5 {
            let row = &w[o * 3..(o + 1) * 3];
            let z: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            let zs: f64 = row.iter().zip(&scaled).map(|(a, b)| a * b).sum();
            assert!((zs - lambda * z).abs() < 1e-12);
        }
    }

    #[test]
    fn init_is_seeded() {
        let a = MlpModel::init(&[4, 6, 2], 5).unwrap();
        let b = MlpModel::init(&[4, 6, 2], 5).unwrap();
        assert_eq!(a.params, b.params);
        // Biases start at zero.
        let off = 4 * 6;
        assert!(a.params[off..off + 6].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mlp.json");
        let mut model = MlpModel::init(&[3, 7, 2], 13).unwrap();
        model
            .set_output_norm(NormStats::from_bounds(vec![-2.0, 0.0], vec![3.0, 1.0]).unwrap())
            .unwrap();
        model.save(&path).unwrap();
        let loaded = MlpModel::load(&path).unwrap();
        assert_eq!(model.params, loaded.params);
        assert_eq!(model.widths, loaded.widths);
        let x = [0.2, 0.8, 0.5];
        assert_eq!(model.predict(&x).unwrap(), loaded.predict(&x).unwrap());
    }

    #[test]
    fn rejects_degenerate_widths() {
        assert!(MlpModel::init(&[4], 0).is_err());
        assert!(MlpModel::init(&[4, 0, 2], 0).is_err());
    }
}
