use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::spectral::power_iteration;
use super::{AdamState, Direction, NeuralError};

/// Shape of a multilayer perceptron: `hidden_layers` blocks of
/// dense → [batch norm] → ReLU, then a dense layer to `output_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub batch_norm: bool,
    pub spectral_norm: bool,
    pub output_dim: usize,
}

impl MlpSpec {
    /// Test-function network: no batch norm.
    pub fn test_function(input_dim: usize, hidden_layers: usize, hidden_width: usize) -> Self {
        MlpSpec {
            input_dim,
            hidden_layers,
            hidden_width,
            batch_norm: false,
            spectral_norm: true,
            output_dim: 1,
        }
    }

    /// Regressor network: batch norm before every ReLU.
    pub fn regressor(input_dim: usize, hidden_layers: usize, hidden_width: usize) -> Self {
        MlpSpec {
            input_dim,
            hidden_layers,
            hidden_width,
            batch_norm: true,
            spectral_norm: true,
            output_dim: 1,
        }
    }

    fn validate(&self) -> Result<(), NeuralError> {
        if self.input_dim == 0 || self.output_dim != 1 {
            return Err(NeuralError::InvalidSpec(format!(
                "input_dim must be positive and output_dim 1, got {} and {}",
                self.input_dim, self.output_dim
            )));
        }
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(NeuralError::InvalidSpec("hidden_width must be positive".into()));
        }
        Ok(())
    }
}

/// Batch-norm bookkeeping constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchNormConfig {
    /// Share of the old running statistic kept at each update.
    pub momentum: f64,
    pub eps: f64,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        BatchNormConfig {
            momentum: 0.9,
            eps: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dense {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    /// Left singular vector estimate carried between power iterations.
    pub power_u: Array1<f64>,
    /// Current `σ̂` (1 when spectral normalization is off).
    pub sigma: f64,
}

impl Dense {
    fn effective_weight(&self) -> Array2<f64> {
        if self.sigma == 1.0 {
            self.weight.clone()
        } else {
            &self.weight / self.sigma
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub dense: Vec<Dense>,
    pub norms: Vec<BatchNorm>,
    pub bn: BatchNormConfig,
}

/// Intermediate values of one forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    training: bool,
    weights: Vec<Array2<f64>>,
    inputs: Vec<Array2<f64>>,
    pre_relu: Vec<Array2<f64>>,
    xhat: Vec<Array2<f64>>,
    inv_std: Vec<Array1<f64>>,
    batch_mean: Vec<Array1<f64>>,
    batch_var: Vec<Array1<f64>>,
}

/// Gradients with the same layout as the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weight: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
    pub gamma: Vec<Array1<f64>>,
    pub beta: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weight.iter().zip(&self.bias) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        for (g, b) in self.gamma.iter().zip(&self.beta) {
            out.extend(g.iter());
            out.extend(b.iter());
        }
        out
    }
}

const INIT_POWER_ITERATIONS: usize = 15;

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn column_sums(a: &Array2<f64>) -> Array1<f64> {
    let width = a.ncols();
    let mut out = vec![0.0; width];
    for row in a.outer_iter() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Array1::from(out)
}

/// Per-column mean and population variance of a standard-layout matrix.
fn column_moments(a: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    let (n, width) = a.dim();
    let data = a.as_slice().expect("standard layout");
    let mut mean = vec![0.0; width];
    for row in data.chunks_exact(width) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; width];
    for row in data.chunks_exact(width) {
        for j in 0..width {
            let c = row[j] - mean[j];
            var[j] += c * c;
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    (Array1::from(mean), Array1::from(var))
}

impl Mlp {
    /// He-style uniform fan-in initialization. With spectral normalization
    /// the power vectors are converged for a few iterations up front.
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, bn: BatchNormConfig, rng: &mut R) -> Result<Self, NeuralError> {
        spec.validate()?;
        let mut dims = vec![spec.input_dim];
        dims.extend(std::iter::repeat_n(spec.hidden_width, spec.hidden_layers));
        dims.push(spec.output_dim);
        let mut dense = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let wb = if spec.batch_norm { 1.0 / (fan_in as f64).sqrt() } else { (6.0 / fan_in as f64).sqrt() };
            let bb = 1.0 / (fan_in as f64).sqrt();
            let weight = Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-wb..wb));
            let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bb..bb));
            let u: Array1<f64> = Array1::from_shape_fn(fan_out, |_| StandardNormal.sample(rng));
            let norm = u.dot(&u).sqrt().max(1e-12);
            dense.push(Dense {
                weight,
                bias,
                power_u: u / norm,
                sigma: 1.0,
            });
        }
        let norms = if spec.batch_norm {
            (0..spec.hidden_layers)
                .map(|_| BatchNorm {
                    gamma: Array1::ones(spec.hidden_width),
                    beta: Array1::zeros(spec.hidden_width),
                    running_mean: Array1::zeros(spec.hidden_width),
                    running_var: Array1::ones(spec.hidden_width),
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut mlp = Mlp { spec, dense, norms, bn };
        mlp.refresh_spectral(INIT_POWER_ITERATIONS);
        Ok(mlp)
    }

    /// Runs `iterations` power-iteration steps per layer and stores the new
    /// `σ̂`. No-op without spectral normalization.
    pub fn refresh_spectral(&mut self, iterations: usize) {
        if !self.spec.spectral_norm {
            return;
        }
        for d in &mut self.dense {
            d.sigma = power_iteration(d.weight.view(), &mut d.power_u, iterations);
        }
    }

    /// Weight matrices as used in the forward pass (`W / σ̂`).
    pub fn effective_weights(&self) -> Vec<Array2<f64>> {
        self.dense.iter().map(Dense::effective_weight).collect()
    }

    pub fn num_params(&self) -> usize {
        let d: usize = self.dense.iter().map(|d| d.weight.len() + d.bias.len()).sum();
        let b: usize = self.norms.iter().map(|n| n.gamma.len() + n.beta.len()).sum();
        d + b
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for d in &self.dense {
            out.extend(d.weight.iter());
            out.extend(d.bias.iter());
        }
        for n in &self.norms {
            out.extend(n.gamma.iter());
            out.extend(n.beta.iter());
        }
        out
    }

    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut it = flat.iter().copied();
        for d in &mut self.dense {
            d.weight.iter_mut().for_each(|x| *x = it.next().unwrap());
            d.bias.iter_mut().for_each(|x| *x = it.next().unwrap());
        }
        for n in &mut self.norms {
            n.gamma.iter_mut().for_each(|x| *x = it.next().unwrap());
            n.beta.iter_mut().for_each(|x| *x = it.next().unwrap());
        }
    }

    pub fn forward(&self, batch: ArrayView2<'_, f64>, training: bool) -> Result<Array1<f64>, NeuralError> {
        self.forward_cached(batch, training).map(|(out, _)| out)
    }

    /// Forward pass. In training mode batch norm uses the batch statistics,
    /// otherwise the running ones.
    pub fn forward_cached(
        &self,
        batch: ArrayView2<'_, f64>,
        training: bool,
    ) -> Result<(Array1<f64>, ForwardCache), NeuralError> {
        if batch.ncols() != self.spec.input_dim {
            return Err(NeuralError::ShapeMismatch {
                expected: self.spec.input_dim,
                got: batch.ncols(),
            });
        }
        let eps = self.bn.eps;
        let hidden = self.spec.hidden_layers;
        let mut cache = ForwardCache {
            training,
            weights: self.effective_weights(),
            inputs: Vec::with_capacity(hidden + 1),
            pre_relu: Vec::with_capacity(hidden),
            xhat: Vec::new(),
            inv_std: Vec::new(),
            batch_mean: Vec::new(),
            batch_var: Vec::new(),
        };
        let mut h = batch.to_owned();
        for l in 0..hidden {
            let mut a = standard(h.dot(&cache.weights[l].t()));
            let width = a.ncols();
            let bias = self.dense[l].bias.as_slice().expect("contiguous");
            for row in a.as_slice_mut().expect("standard layout").chunks_exact_mut(width) {
                row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
            }
            if self.spec.batch_norm {
                let norm = &self.norms[l];
                let (mean, var) = if training {
                    column_moments(&a)
                } else {
                    (norm.running_mean.clone(), norm.running_var.clone())
                };
                let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
                let mut xhat = a.clone();
                let (m, s) = (mean.as_slice().unwrap(), inv_std.as_slice().unwrap());
                let (gm, bt) = (norm.gamma.as_slice().unwrap(), norm.beta.as_slice().unwrap());
                let rows = xhat
                    .as_slice_mut()
                    .unwrap()
                    .chunks_exact_mut(width)
                    .zip(a.as_slice_mut().unwrap().chunks_exact_mut(width));
                for (xr, ar) in rows {
                    let per_col = m.iter().zip(s).zip(gm.iter().zip(bt));
                    for ((xv, av), ((&mj, &sj), (&g, &b))) in xr.iter_mut().zip(ar.iter_mut()).zip(per_col) {
                        let x = (*av - mj) * sj;
                        *xv = x;
                        *av = x * g + b;
                    }
                }
                cache.xhat.push(xhat);
                cache.inv_std.push(inv_std);
                cache.batch_mean.push(mean);
                cache.batch_var.push(var);
            }
            cache.inputs.push(h);
            h = a.mapv(|v| v.max(0.0));
            cache.pre_relu.push(a);
        }
        let mut out = h.dot(&cache.weights[hidden].t());
        out += &self.dense[hidden].bias;
        cache.inputs.push(h);
        Ok((out.column(0).to_owned(), cache))
    }

    /// Reverse pass: gradients of a scalar loss given `d loss / d output`.
    /// `σ̂` is treated as a constant.
    pub fn backward(&self, cache: &ForwardCache, dout: ArrayView1<'_, f64>) -> MlpGrads {
        let hidden = self.spec.hidden_layers;
        let n = dout.len() as f64;
        let mut weight = vec![Array2::zeros((0, 0)); hidden + 1];
        let mut bias = vec![Array1::zeros(0); hidden + 1];
        let mut gamma = vec![Array1::zeros(0); self.norms.len()];
        let mut beta = vec![Array1::zeros(0); self.norms.len()];

        let mut d = dout.to_owned().insert_axis(Axis(1));
        for l in (0..=hidden).rev() {
            if l < hidden {
                d = standard(d);
                let width = d.ncols();
                let pre = cache.pre_relu[l].as_slice().expect("standard layout");
                d.as_slice_mut()
                    .unwrap()
                    .iter_mut()
                    .zip(pre)
                    .for_each(|(g, &a)| {
                        if a <= 0.0 {
                            *g = 0.0
                        }
                    });
                if self.spec.batch_norm {
                    let gm = self.norms[l].gamma.as_slice().unwrap();
                    let xhat = cache.xhat[l].as_slice().unwrap();
                    let inv_std = cache.inv_std[l].as_slice().unwrap();
                    let mut g_gamma = vec![0.0; width];
                    let mut g_beta = vec![0.0; width];
                    let ds = d.as_slice_mut().unwrap();
                    for (dr, xr) in ds.chunks_exact(width).zip(xhat.chunks_exact(width)) {
                        for ((gg, gb), (&dv, &xv)) in g_gamma.iter_mut().zip(g_beta.iter_mut()).zip(dr.iter().zip(xr)) {
                            *gg += dv * xv;
                            *gb += dv;
                        }
                    }
                    // dxhat = d * gamma, so its sums follow from the ones above
                    let sum_dxhat: Vec<f64> = (0..width).map(|j| g_beta[j] * gm[j]).collect();
                    let sum_dxhat_xhat: Vec<f64> = (0..width).map(|j| g_gamma[j] * gm[j]).collect();
                    if cache.training {
                        let scale: Vec<f64> = inv_std.iter().map(|s| s / n).collect();
                        for (dr, xr) in ds.chunks_exact_mut(width).zip(xhat.chunks_exact(width)) {
                            let per_col = gm.iter().zip(&sum_dxhat).zip(sum_dxhat_xhat.iter().zip(&scale));
                            for ((dv, &xv), ((&g, &sd), (&sdx, &sc))) in dr.iter_mut().zip(xr).zip(per_col) {
                                *dv = (*dv * g * n - sd - xv * sdx) * sc;
                            }
                        }
                    } else {
                        for dr in ds.chunks_exact_mut(width) {
                            for (dv, (&g, &s)) in dr.iter_mut().zip(gm.iter().zip(inv_std)) {
                                *dv *= g * s;
                            }
                        }
                    }
                    gamma[l] = Array1::from(g_gamma);
                    beta[l] = Array1::from(g_beta);
                }
            }
            let w_eff = &cache.weights[l];
            let dw_eff = d.t().dot(&cache.inputs[l]);
            weight[l] = dw_eff / self.dense[l].sigma;
            bias[l] = column_sums(&d);
            if l > 0 {
                d = d.dot(w_eff);
            }
        }
        MlpGrads {
            weight,
            bias,
            gamma,
            beta,
        }
    }

    /// Value and parameter gradients of `loss(outputs)`, where `loss`
    /// returns its value and its derivative with respect to each output.
    pub fn gradients<F>(
        &self,
        batch: ArrayView2<'_, f64>,
        training: bool,
        loss: F,
    ) -> Result<(f64, MlpGrads), NeuralError>
    where
        F: FnOnce(ArrayView1<'_, f64>) -> (f64, Array1<f64>),
    {
        let (out, cache) = self.forward_cached(batch, training)?;
        let (value, dout) = loss(out.view());
        if dout.len() != out.len() {
            return Err(NeuralError::ShapeMismatch {
                expected: out.len(),
                got: dout.len(),
            });
        }
        Ok((value, self.backward(&cache, dout.view())))
    }

    /// Blends the batch statistics of a training-mode pass into the running
    /// statistics.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        let m = self.bn.momentum;
        for (norm, (mean, var)) in self
            .norms
            .iter_mut()
            .zip(cache.batch_mean.iter().zip(&cache.batch_var))
        {
            norm.running_mean = &norm.running_mean * m + mean * (1.0 - m);
            norm.running_var = &norm.running_var * m + var * (1.0 - m);
        }
    }

    /// One Adam step on every trainable parameter.
    pub fn adam_step(&mut self, state: &mut AdamState, grads: &MlpGrads, direction: Direction) {
        let mut p = self.params_flat();
        state.update(&mut p, &grads.flat(), direction);
        self.load_flat(&p);
    }
}
