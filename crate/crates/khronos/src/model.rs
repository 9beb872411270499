//! The KHRONOS surrogate: a rank-r separable expansion of compact quadratic
//! spline atoms with a learnable positive scaling per input dimension, shared
//! product modes across output heads, analytic gradients, and a JSON
//! checkpoint format.
//!
//! For input x ∈ [0,1]^d, grid points g_1..g_k and outputs m = 1..n_out:
//!
//! ```text
//! y_m = bias_m + Σ_j head[j][m] · Π_i ( Σ_s alpha[i][s][j] · ψ(|x_i - g_s| · γ_i) )
//! ```
//!
//! where ψ is the cardinal quadratic B-spline and γ_i = softplus(ρ_i) > 0.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::NormStats;
use crate::splines::{quadratic_kernel, quadratic_kernel_deriv};
use crate::train::GradientModel;

/// Shape of a separable kernel expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Input dimensionality d.
    pub dim: usize,
    /// Grid points per dimension k.
    pub grid_points: usize,
    /// Rank r of the separable expansion.
    pub rank: usize,
    /// Output dimensionality.
    pub n_out: usize,
}

impl KernelConfig {
    pub fn new(dim: usize, grid_points: usize, rank: usize, n_out: usize) -> Result<Self> {
        if dim < 1 || grid_points < 1 || rank < 1 || n_out < 1 {
            return Err(Error::Config(format!(
                "kernel config fields must all be >= 1, got d={dim}, k={grid_points}, r={rank}, n_out={n_out}"
            )));
        }
        Ok(Self { dim, grid_points, rank, n_out })
    }

    /// Uniform grid on [0, 1] including both endpoints; the single point 0.5
    /// when k = 1.
    pub fn grid(&self) -> Vec<f64> {
        let k = self.grid_points;
        if k == 1 {
            vec![0.5]
        } else {
            (0..k).map(|s| s as f64 / (k - 1) as f64).collect()
        }
    }

    /// Total number of trainable scalars: d·k·r + d + r·n_out + n_out.
    pub fn param_count(&self) -> usize {
        self.dim * self.grid_points * self.rank
            + self.dim
            + self.rank * self.n_out
            + self.n_out
    }
}

/// Flat parameter block for a [`KernelConfig`], in the documented index order:
/// alphas row-major `[dim][grid][rank]`, then raw gammas (one per dimension,
/// mapped through softplus), then head row-major `[rank][n_out]`, then bias.
#[derive(Debug, Clone, PartialEq)]
pub struct KhronosParams {
    config: KernelConfig,
    data: Vec<f64>,
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inverse of softplus; valid for y > 0.
#[inline]
fn softplus_inv(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

impl KhronosParams {
    pub fn zeros(config: KernelConfig) -> Self {
        Self { data: vec![0.0; config.param_count()], config }
    }

    pub fn config(&self) -> KernelConfig {
        self.config
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn alpha_idx(&self, i: usize, s: usize, j: usize) -> usize {
        (i * self.config.grid_points + s) * self.config.rank + j
    }

    #[inline]
    fn gamma_off(&self) -> usize {
        self.config.dim * self.config.grid_points * self.config.rank
    }

    #[inline]
    fn head_off(&self) -> usize {
        self.gamma_off() + self.config.dim
    }

    #[inline]
    fn bias_off(&self) -> usize {
        self.head_off() + self.config.rank * self.config.n_out
    }

    #[inline]
    pub fn alpha(&self, i: usize, s: usize, j: usize) -> f64 {
        self.data[self.alpha_idx(i, s, j)]
    }

    pub fn set_alpha(&mut self, i: usize, s: usize, j: usize, v: f64) {
        let idx = self.alpha_idx(i, s, j);
        self.data[idx] = v;
    }

    /// Unconstrained scaling parameter ρ_i.
    #[inline]
    pub fn raw_gamma(&self, i: usize) -> f64 {
        self.data[self.gamma_off() + i]
    }

    pub fn set_raw_gamma(&mut self, i: usize, v: f64) {
        let off = self.gamma_off();
        self.data[off + i] = v;
    }

    /// Effective positive scaling γ_i = softplus(ρ_i).
    #[inline]
    pub fn gamma(&self, i: usize) -> f64 {
        softplus(self.raw_gamma(i))
    }

    /// Sets ρ_i so that γ_i equals the given positive value.
    pub fn set_effective_gamma(&mut self, i: usize, gamma: f64) {
        self.set_raw_gamma(i, softplus_inv(gamma));
    }

    #[inline]
    pub fn head(&self, j: usize, m: usize) -> f64 {
        self.data[self.head_off() + j * self.config.n_out + m]
    }

    pub fn set_head(&mut self, j: usize, m: usize, v: f64) {
        let idx = self.head_off() + j * self.config.n_out + m;
        self.data[idx] = v;
    }

    #[inline]
    pub fn bias(&self, m: usize) -> f64 {
        self.data[self.bias_off() + m]
    }

    pub fn set_bias(&mut self, m: usize, v: f64) {
        let idx = self.bias_off() + m;
        self.data[idx] = v;
    }

    /// Slices of the four blocks in index order (alphas, gammas, head, bias).
    pub fn blocks(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let g = self.gamma_off();
        let h = self.head_off();
        let b = self.bias_off();
        (&self.data[..g], &self.data[g..h], &self.data[h..b], &self.data[b..])
    }
}

/// A separable kernel-expansion model together with its input/output
/// normalization statistics.
#[derive(Debug, Clone)]
pub struct KhronosModel {
    config: KernelConfig,
    grid: Vec<f64>,
    params: KhronosParams,
    input_norm: NormStats,
    output_norm: NormStats,
}

impl KhronosModel {
    /// Builds a model with seeded random initialization:
    /// alphas ~ 1 + U(-0.5, 0.5)/sqrt(k), head ~ U(-1/sqrt(r), 1/sqrt(r)),
    /// bias = 0, effective γ = k-1 for k >= 2, else 1.
    ///
    /// With γ = k-1 the kernels form a partition of unity on the interior,
    /// so alphas centered at 1 give every atom a value near 1 and keep the
    /// d-fold mode products O(1) at any input dimensionality. Zero-centered
    /// alphas would shrink the products geometrically with d (≈1e-21 at
    /// d = 18), leaving every gradient far below Adam's epsilon so that only
    /// the bias can train. Normalization defaults to identity on [0, 1].
    pub fn init(config: KernelConfig, seed: u64) -> Self {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut params = KhronosParams::zeros(config);
        let alpha_scale = 1.0 / (config.grid_points as f64).sqrt();
        for i in 0..config.dim {
            for s in 0..config.grid_points {
                for j in 0..config.rank {
                    params.set_alpha(i, s, j, 1.0 + rng.random_range(-0.5..0.5) * alpha_scale);
                }
            }
        }
        let gamma_eff = if config.grid_points >= 2 {
            (config.grid_points - 1) as f64
        } else {
            1.0
        };
        for i in 0..config.dim {
            params.set_effective_gamma(i, gamma_eff);
        }
        let head_bound = 1.0 / (config.rank as f64).sqrt();
        for j in 0..config.rank {
            for m in 0..config.n_out {
                params.set_head(j, m, rng.random_range(-head_bound..head_bound));
            }
        }
        Self::from_params(config, params)
    }

    pub fn from_params(config: KernelConfig, params: KhronosParams) -> Self {
        assert_eq!(params.config(), config);
        Self {
            config,
            grid: config.grid(),
            params,
            input_norm: NormStats::identity(config.dim),
            output_norm: NormStats::identity(config.n_out),
        }
    }

    pub fn config(&self) -> KernelConfig {
        self.config
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn params(&self) -> &KhronosParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut KhronosParams {
        &mut self.params
    }

    pub fn input_norm(&self) -> &NormStats {
        &self.input_norm
    }

    pub fn output_norm(&self) -> &NormStats {
        &self.output_norm
    }

    pub fn set_input_norm(&mut self, stats: NormStats) -> Result<()> {
        if stats.dim() != self.config.dim {
            return Err(Error::DimensionMismatch {
                context: "input normalization",
                expected: self.config.dim,
                got: stats.dim(),
            });
        }
        self.input_norm = stats;
        Ok(())
    }

    pub fn set_output_norm(&mut self, stats: NormStats) -> Result<()> {
        if stats.dim() != self.config.n_out {
            return Err(Error::DimensionMismatch {
                context: "output normalization",
                expected: self.config.n_out,
                got: stats.dim(),
            });
        }
        self.output_norm = stats;
        Ok(())
    }

    /// Atom values for every (dimension, rank) pair at the given normalized
    /// input: `atoms[i*r + j] = Σ_s alpha[i][s][j] ψ(|x_i - g_s| γ_i)`.
    fn atoms_into(&self, x: &[f64], atoms: &mut [f64]) {
        let d = self.config.dim;
        let k = self.config.grid_points;
        let r = self.config.rank;
        for i in 0..d {
            let gamma = self.params.gamma(i);
            for j in 0..r {
                atoms[i * r + j] = 0.0;
            }
            for s in 0..k {
                let psi = quadratic_kernel((x[i] - self.grid[s]).abs() * gamma);
                if psi == 0.0 {
                    continue;
                }
                for j in 0..r {
                    atoms[i * r + j] += self.params.alpha(i, s, j) * psi;
                }
            }
        }
    }

    /// Forward pass in normalized space. Inputs slightly outside [0, 1] are
    /// accepted; the compact kernels simply decay there.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.config.dim {
            return Err(Error::DimensionMismatch {
                context: "khronos forward input",
                expected: self.config.dim,
                got: x.len(),
            });
        }
        let d = self.config.dim;
        let r = self.config.rank;
        let n_out = self.config.n_out;
        let mut atoms = vec![0.0; d * r];
        self.atoms_into(x, &mut atoms);
        let mut out = vec![0.0; n_out];
        let mut factors = vec![0.0; d];
        for j in 0..r {
            for i in 0..d {
                factors[i] = atoms[i * r + j];
            }
            // Reduce in value order so permuting input dimensions (with their
            // parameter slices) leaves the output bit-identical.
            factors.sort_unstable_by(f64::total_cmp);
            let mut prod = 1.0;
            for &f in &factors {
                prod *= f;
            }
            for m in 0..n_out {
                out[m] += self.params.head(j, m) * prod;
            }
        }
        for m in 0..n_out {
            out[m] += self.params.bias(m);
        }
        Ok(out)
    }

    /// Exact analytic gradients of a scalar loss with respect to every
    /// parameter, given `upstream[m] = dL/dy_m`. Returns a parameter-shaped
    /// gradient block.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<KhronosParams> {
        let mut grad = KhronosParams::zeros(self.config);
        self.backward_into(x, upstream, grad.data_mut())?;
        Ok(grad)
    }

    /// Accumulates gradients into a flat buffer laid out like
    /// [`KhronosParams`].
    pub fn backward_into(&self, x: &[f64], upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        if x.len() != self.config.dim {
            return Err(Error::DimensionMismatch {
                context: "khronos backward input",
                expected: self.config.dim,
                got: x.len(),
            });
        }
        if upstream.len() != self.config.n_out {
            return Err(Error::DimensionMismatch {
                context: "khronos backward upstream",
                expected: self.config.n_out,
                got: upstream.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                context: "khronos gradient buffer",
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let d = self.config.dim;
        let k = self.config.grid_points;
        let r = self.config.rank;
        let n_out = self.config.n_out;
        let p = &self.params;

        // Per-dimension kernel responses and their gamma sensitivities.
        let mut psi = vec![0.0; d * k];
        let mut dpsi_dgamma = vec![0.0; d * k]; // psi'(|x-g| gamma) * |x-g|
        for i in 0..d {
            let gamma = p.gamma(i);
            for s in 0..k {
                let dist = (x[i] - self.grid[s]).abs();
                psi[i * k + s] = quadratic_kernel(dist * gamma);
                dpsi_dgamma[i * k + s] = quadratic_kernel_deriv(dist * gamma) * dist;
            }
        }

        let mut atoms = vec![0.0; d * r];
        for i in 0..d {
            for j in 0..r {
                let mut acc = 0.0;
                for s in 0..k {
                    acc += p.alpha(i, s, j) * psi[i * k + s];
                }
                atoms[i * r + j] = acc;
            }
        }

        // Mode products and partial products excluding one dimension.
        // prefix[i] = Π_{i' < i} atoms[i'], suffix[i] = Π_{i' > i} atoms[i'].
        let mut prefix = vec![0.0; d + 1];
        let mut suffix = vec![0.0; d + 1];
        let gamma_off = p.gamma_off();
        let head_off = p.head_off();
        let bias_off = p.bias_off();

        for m in 0..n_out {
            grad[bias_off + m] += upstream[m];
        }

        for j in 0..r {
            // dL/dP_j through the head weights.
            let mut g_mode = 0.0;
            for m in 0..n_out {
                g_mode += upstream[m] * p.head(j, m);
            }

            prefix[0] = 1.0;
            for i in 0..d {
                prefix[i + 1] = prefix[i] * atoms[i * r + j];
            }
            suffix[d] = 1.0;
            for i in (0..d).rev() {
                suffix[i] = suffix[i + 1] * atoms[i * r + j];
            }
            let mode_product = prefix[d];

            for m in 0..n_out {
                grad[head_off + j * n_out + m] += upstream[m] * mode_product;
            }

            if g_mode == 0.0 {
                continue;
            }
            for i in 0..d {
                let others = prefix[i] * suffix[i + 1]; // Π_{i' != i} atoms
                if others == 0.0 {
                    continue;
                }
                let scale = g_mode * others;
                let sigma = sigmoid(p.raw_gamma(i));
                let mut datom_dgamma = 0.0;
                for s in 0..k {
                    grad[(i * k + s) * r + j] += scale * psi[i * k + s];
                    datom_dgamma += p.alpha(i, s, j) * dpsi_dgamma[i * k + s];
                }
                grad[gamma_off + i] += scale * datom_dgamma * sigma;
            }
        }
        Ok(())
    }

    /// Prediction from raw inputs: min-max normalize, forward, denormalize
    /// outputs.
    pub fn predict(&self, x_raw: &[f64]) -> Result<Vec<f64>> {
        let xn = self.input_norm.apply(x_raw)?;
        let yn = self.forward(&xn)?;
        Ok(self.output_norm.invert(&yn))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let (alphas, gammas, head, bias) = self.params.blocks();
        let doc = Checkpoint {
            kind: "khronos".into(),
            config: self.config,
            input_min: self.input_norm.mins().to_vec(),
            input_max: self.input_norm.maxs().to_vec(),
            output_min: self.output_norm.mins().to_vec(),
            output_max: self.output_norm.maxs().to_vec(),
            alphas: alphas.to_vec(),
            gammas: gammas.to_vec(),
            head: head.to_vec(),
            bias: bias.to_vec(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &doc)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let doc: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        if doc.kind != "khronos" {
            return Err(Error::Data(format!(
                "checkpoint kind {:?} is not a khronos model",
                doc.kind
            )));
        }
        let config = doc.config;
        let expected = config.param_count();
        let total = doc.alphas.len() + doc.gammas.len() + doc.head.len() + doc.bias.len();
        if total != expected {
            return Err(Error::Data(format!(
                "checkpoint holds {total} parameters, config implies {expected}"
            )));
        }
        let mut data = Vec::with_capacity(expected);
        data.extend_from_slice(&doc.alphas);
        data.extend_from_slice(&doc.gammas);
        data.extend_from_slice(&doc.head);
        data.extend_from_slice(&doc.bias);
        let params = KhronosParams { config, data };
        let mut model = Self::from_params(config, params);
        model.set_input_norm(NormStats::from_bounds(doc.input_min, doc.input_max)?)?;
        model.set_output_norm(NormStats::from_bounds(doc.output_min, doc.output_max)?)?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    kind: String,
    config: KernelConfig,
    input_min: Vec<f64>,
    input_max: Vec<f64>,
    output_min: Vec<f64>,
    output_max: Vec<f64>,
    alphas: Vec<f64>,
    gammas: Vec<f64>,
    head: Vec<f64>,
    bias: Vec<f64>,
}

impl GradientModel for KhronosModel {
    fn input_dim(&self) -> usize {
        self.config.dim
    }

    fn output_dim(&self) -> usize {
        self.config.n_out
    }

    fn param_len(&self) -> usize {
        self.params.len()
    }

    fn param_data(&self) -> &[f64] {
        self.params.data()
    }

    fn param_data_mut(&mut self) -> &mut [f64] {
        self.params.data_mut()
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

    fn small_config() -> KernelConfig {
        KernelConfig::new(3, 3, 2, 2).unwrap()
    }

    #[test]
    fn grid_layout() {
        let c = KernelConfig::new(2, 1, 1, 1).unwrap();
        assert_eq!(c.grid(), vec![0.5]);
        let c = KernelConfig::new(2, 5, 1, 1).unwrap();
        let g = c.grid();
        assert_eq!(g.first(), Some(&0.0));
        assert_eq!(g.last(), Some(&1.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn param_count_examples() {
        // d=2,k=3,r=2,n_out=1 -> 12 + 2 + 2 + 1
        assert_eq!(KernelConfig::new(2, 3, 2, 1).unwrap().param_count(), 17);
        // d=18,k=3,r=4,n_out=81 -> 216 + 18 + 324 + 81
        assert_eq!(KernelConfig::new(18, 3, 4, 81).unwrap().param_count(), 639);
    }

    #[test]
    fn param_count_linear_in_dim() {
        let base = KernelConfig::new(5, 4, 3, 7).unwrap();
        let doubled = KernelConfig::new(10, 4, 3, 7).unwrap();
        let per_dim = 4 * 3 + 1;
        assert_eq!(doubled.param_count() - base.param_count(), 5 * per_dim);
    }

    #[test]
    fn param_count_matches_instantiated_scalars() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = KernelConfig::new(
                rng.random_range(1..8),
                rng.random_range(1..10),
                rng.random_range(1..6),
                rng.random_range(1..5),
            )
            .unwrap();
            let model = KhronosModel::init(c, 0);
            assert_eq!(model.params().len(), c.param_count());
        }
    }

    #[test]
    fn forward_zero_alphas_returns_bias() {
        let c = KernelConfig::new(4, 3, 2, 3).unwrap();
        let mut params = KhronosParams::zeros(c);
        for m in 0..3 {
            params.set_bias(m, 0.25 * (m as f64 + 1.0));
        }
        for j in 0..2 {
            for m in 0..3 {
                params.set_head(j, m, 1.7);
            }
        }
        let model = KhronosModel::from_params(c, params);
        let y = model.forward(&[0.1, 0.5, 0.9, 0.3]).unwrap();
        assert_eq!(y, vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn forward_hand_example() {
        // d=1, k=1 (grid {0.5}), r=1, effective gamma 1, alpha 2, head 1,
        // bias 0, x = 0.5 -> 2 * psi(0) = 1.5.
        let c = KernelConfig::new(1, 1, 1, 1).unwrap();
        let mut params = KhronosParams::zeros(c);
        params.set_alpha(0, 0, 0, 2.0);
        params.set_effective_gamma(0, 1.0);
        params.set_head(0, 0, 1.0);
        let model = KhronosModel::from_params(c, params);
        let y = model.forward(&[0.5]).unwrap();
        assert!((y[0] - 1.5).abs() < 1e-15, "y = {}", y[0]);
    }

    #[test]
    fn init_is_deterministic_and_zero_bias() {
        let c = small_config();
        let a = KhronosModel::init(c, 99);
        let b = KhronosModel::init(c, 99);
        assert_eq!(a.params().data(), b.params().data());
        let other = KhronosModel::init(c, 100);
        assert_ne!(a.params().data(), other.params().data());
        for m in 0..c.n_out {
            assert_eq!(a.params().bias(m), 0.0);
        }
        let gamma_eff = (c.grid_points - 1) as f64;
        for i in 0..c.dim {
            assert!((a.params().gamma(i) - gamma_eff).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_at_init_respects_interval_bound() {
        // |y_m| <= |bias| + Σ_j |head_jm| Π_i (Σ_s |alpha| * 0.75)
        let c = KernelConfig::new(3, 4, 3, 2).unwrap();
        let model = KhronosModel::init(c, 5);
        let p = model.params();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x: Vec<f64> = (0..c.dim).map(|_| rng.random_range(0.0..1.0)).collect();
            let y = model.forward(&x).unwrap();
            for m in 0..c.n_out {
                let mut bound = p.bias(m).abs();
                for j in 0..c.rank {
                    let mut prod = 1.0;
                    for i in 0..c.dim {
                        let mut abs_sum = 0.0;
                        for s in 0..c.grid_points {
                            abs_sum += p.alpha(i, s, j).abs() * 0.75;
                        }
                        prod *= abs_sum;
                    }
                    bound += p.head(j, m).abs() * prod;
                }
                assert!(y[m].is_finite());
                assert!(y[m].abs() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn backward_zero_upstream_gives_zero_gradient() {
        let model = KhronosModel::init(small_config(), 1);
        let grad = model.backward(&[0.2, 0.5, 0.8], &[0.0, 0.0]).unwrap();
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_bias_gradient_is_upstream() {
        let model = KhronosModel::init(small_config(), 1);
        let up = [0.3, -1.2];
        let grad = model.backward(&[0.2, 0.5, 0.8], &up).unwrap();
        for (m, &u) in up.iter().enumerate() {
            assert_eq!(grad.bias(m), u);
        }
    }

    /// Central-difference oracle for the full parameter gradient.
    fn finite_diff_grad(model: &KhronosModel, x: &[f64], upstream: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let n = model.params().len();
        let mut out = vec![0.0; n];
        let loss = |m: &KhronosModel| -> f64 {
            let y = m.forward(x).unwrap();
            y.iter().zip(upstream).map(|(yi, ui)| yi * ui).sum()
        };
        for idx in 0..n {
            let mut plus = model.clone();
            plus.params_mut().data_mut()[idx] += h;
            let mut minus = model.clone();
            minus.params_mut().data_mut()[idx] -= h;
            out[idx] = (loss(&plus) - loss(&minus)) / (2.0 * h);
        }
        out
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..20 {
            let c = KernelConfig::new(
                rng.random_range(1..5),
                rng.random_range(1..5),
                rng.random_range(1..4),
                rng.random_range(1..4),
            )
            .unwrap();
            let mut model = KhronosModel::init(c, trial);
            // Random bias so the bias path is exercised too.
            for m in 0..c.n_out {
                model.params_mut().set_bias(m, rng.random_range(-0.5..0.5));
            }
            let x: Vec<f64> = (0..c.dim).map(|_| rng.random_range(0.05..0.95)).collect();
            let upstream: Vec<f64> = (0..c.n_out).map(|_| rng.random_range(-1.0..1.0)).collect();
            let analytic = model.backward(&x, &upstream).unwrap();
            let numeric = finite_diff_grad(&model, &x, &upstream);
            for (idx, (&a, &n)) in analytic.data().iter().zip(&numeric).enumerate() {
                // 1e-5 relative with an absolute floor covering the
                // finite-difference cancellation noise (~eps/2h).
                let tol = 1e-5 * a.abs().max(n.abs()) + 1e-9;
                assert!(
                    (a - n).abs() <= tol,
                    "trial {trial}: grad[{idx}] analytic {a} vs numeric {n}"
                );
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        // Swapping two input dimensions together with their alpha/gamma slices
        // leaves the output bit-identical.
        let c = KernelConfig::new(4, 3, 3, 2).unwrap();
        let model = KhronosModel::init(c, 8);
        let x = [0.15, 0.4, 0.65, 0.9];
        let y = model.forward(&x).unwrap();

        let (a, b) = (1usize, 3usize);
        let mut swapped = model.clone();
        for s in 0..c.grid_points {
            for j in 0..c.rank {
                let va = model.params().alpha(a, s, j);
                let vb = model.params().alpha(b, s, j);
                swapped.params_mut().set_alpha(a, s, j, vb);
                swapped.params_mut().set_alpha(b, s, j, va);
            }
        }
        let ga = model.params().raw_gamma(a);
        let gb = model.params().raw_gamma(b);
        swapped.params_mut().set_raw_gamma(a, gb);
        swapped.params_mut().set_raw_gamma(b, ga);

        let mut xs = x;
        xs.swap(a, b);
        let ys = swapped.forward(&xs).unwrap();
        assert_eq!(y, ys);
    }

    #[test]
    fn rank_extension_with_zero_head_is_exact() {
        let c = KernelConfig::new(3, 4, 2, 2).unwrap();
        let model = KhronosModel::init(c, 21);
        let c_big = KernelConfig::new(3, 4, 3, 2).unwrap();
        let mut big = KhronosParams::zeros(c_big);
        for i in 0..c.dim {
            for s in 0..c.grid_points {
                for j in 0..c.rank {
                    big.set_alpha(i, s, j, model.params().alpha(i, s, j));
                }
                // The extra mode gets arbitrary alphas; its head column is 0.
                big.set_alpha(i, s, c.rank, 0.37);
            }
            big.set_raw_gamma(i, model.params().raw_gamma(i));
        }
        for j in 0..c.rank {
            for m in 0..c.n_out {
                big.set_head(j, m, model.params().head(j, m));
            }
        }
        for m in 0..c.n_out {
            big.set_bias(m, model.params().bias(m));
        }
        let bigger = KhronosModel::from_params(c_big, big);
        let x = [0.3, 0.55, 0.75];
        assert_eq!(model.forward(&x).unwrap(), bigger.forward(&x).unwrap());
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let model = KhronosModel::init(small_config(), 0);
        assert!(model.forward(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let c = KernelConfig::new(5, 4, 3, 6).unwrap();
        let mut model = KhronosModel::init(c, 77);
        model
            .set_input_norm(NormStats::from_bounds(vec![0.0; 5], vec![2.0; 5]).unwrap())
            .unwrap();
        model
            .set_output_norm(
                NormStats::from_bounds(vec![-1.0; 6], vec![1.5; 6]).unwrap(),
            )
            .unwrap();
        model.save(&path).unwrap();
        let loaded = KhronosModel::load(&path).unwrap();
        assert_eq!(model.params().data(), loaded.params().data());
        assert_eq!(model.input_norm().mins(), loaded.input_norm().mins());
        assert_eq!(model.output_norm().maxs(), loaded.output_norm().maxs());
        let x = [0.77, 1.3, 0.2, 1.9, 0.4];
        assert_eq!(model.predict(&x).unwrap(), loaded.predict(&x).unwrap());
    }

    #[test]
    fn softplus_inverse_roundtrip() {
        for g in [0.1, 1.0, 2.0, 29.0, 63.0] {
            assert!((softplus(softplus_inv(g)) - g).abs() < 1e-9);
        }
    }
}
