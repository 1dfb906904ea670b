//! Neural conditional dependence.
//!
//! For test functions `f(x, z)`, `g(y, z)` and regressors `h(z)`, `l(z)`
//! fitted to them, the statistic is the squared residual correlation
//!
//! ```text
//! ρ̂²(f − h, g − l) = cov² / ((var_a + ε)(var_b + ε))
//! ```
//!
//! maximized over the test functions. Training alternates `T_r` descent
//! steps on each regressor's squared error with one ascent step on `ρ̂²`,
//! repeated `T_t` times, all full-batch Adam.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::graph::{pdag_to_dag, Cpdag, Dag, GraphError, NodeSet};
use crate::measures::{check_query, ConditionalDependence, MeasureContext, MeasureError};
use crate::neural::{AdamConfig, AdamState, BatchNormConfig, Direction, Mlp, MlpSpec};
use crate::rng::{derive_seed, rng_from};
use crate::search::{run_ges, GesConfig, GesTrace, SearchError};

/// Hidden depth and width of a network; input size comes from the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub depth: usize,
    pub width: usize,
}

/// Tuned settings by data regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Sparse graphs, expected degree 2.
    Sparse,
    /// Dense graphs, expected degree 8.
    Dense,
    /// Multi-dimensional nodes.
    MultiDim,
    /// Gene-regulatory style data.
    GeneNetwork,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NcdConfig {
    pub test_fn: NetShape,
    pub regressor: NetShape,
    pub lr: f64,
    pub outer_steps: usize,
    pub inner_steps: usize,
    pub tau: f64,
    pub correlation_epsilon: f64,
    /// Standard deviation of every network input column. Smaller values
    /// make the Lipschitz networks smoother over the data.
    pub input_scale: f64,
    pub seed: u64,
    /// Independent searches; the one with the lowest global score wins.
    pub restarts: usize,
    /// Let the search reuse the score of `(y, x | z)` for `(x, y | z)`.
    pub share_reversed: bool,
}

impl Default for NcdConfig {
    fn default() -> Self {
        NcdConfig::preset(Preset::Sparse)
    }
}

impl NcdConfig {
    pub fn preset(preset: Preset) -> Self {
        let (depth, width, tau) = match preset {
            Preset::Sparse => (3, 40, 0.005),
            Preset::Dense => (3, 80, 0.0001),
            Preset::MultiDim => (3, 50, 0.01),
            Preset::GeneNetwork => (4, 100, 0.3),
        };
        NcdConfig {
            test_fn: NetShape { depth: 2, width: 20 },
            regressor: NetShape { depth, width },
            lr: 0.01,
            outer_steps: 20,
            inner_steps: 5,
            tau,
            correlation_epsilon: 1e-8,
            input_scale: 1.0,
            seed: 0,
            restarts: 2,
            share_reversed: true,
        }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        let bad = |m: String| Err(MeasureError::InvalidQuery(m));
        if self.outer_steps == 0 || self.inner_steps == 0 {
            return bad("outer_steps and inner_steps must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return bad(format!("input_scale must be positive, got {}", self.input_scale));
        }
        if !(self.correlation_epsilon >= 0.0) {
            return bad("correlation_epsilon must be nonnegative".into());
        }
        if self.test_fn.width == 0 || self.regressor.width == 0 {
            return bad("network widths must be positive".into());
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

fn centered(v: ArrayView1<'_, f64>) -> Array1<f64> {
    let m = v.mean().unwrap_or(0.0);
    v.mapv(|x| x - m)
}

/// `ρ̂²(f − h, g − l)` with `epsilon` added to both variances.
pub fn residual_correlation(
    f: ArrayView1<'_, f64>,
    h: ArrayView1<'_, f64>,
    g: ArrayView1<'_, f64>,
    l: ArrayView1<'_, f64>,
    epsilon: f64,
) -> f64 {
    let a = &f - &h;
    let b = &g - &l;
    correlation_with_grad(a.view(), b.view(), epsilon).0
}

/// `ρ̂²(a, b)` and its gradients with respect to `a` and `b`.
pub fn correlation_with_grad(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, eps: f64) -> (f64, Array1<f64>, Array1<f64>) {
    let n = a.len() as f64;
    let ac = centered(a);
    let bc = centered(b);
    let c = ac.dot(&bc) / n;
    let va = ac.dot(&ac) / n + eps;
    let vb = bc.dot(&bc) / n + eps;
    let rho = (c * c / (va * vb)).clamp(0.0, 1.0);
    let da = &bc * (2.0 * c / (n * va * vb)) - &ac * (2.0 * rho / (n * va));
    let db = &ac * (2.0 * c / (n * va * vb)) - &bc * (2.0 * rho / (n * vb));
    (rho, da, db)
}

fn standardize(mut m: Array2<f64>) -> Array2<f64> {
    for mut col in m.axis_iter_mut(Axis(1)) {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|x| (x - mean) / sd);
        } else {
            col.fill(0.0);
        }
    }
    m
}

fn hstack(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("same row count")
}

/// A trained score together with the `ρ̂²` value seen at each outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct NcdOutcome {
    pub score: f64,
    pub trajectory: Vec<f64>,
}

/// Fits the standardized target and maps predictions back to the target's
/// scale, so tiny-variance test-function outputs are as easy to fit as
/// unit-scale ones.
struct Regressor {
    net: Mlp,
    adam: AdamState,
    shift: f64,
    scale: f64,
}

impl Regressor {
    fn new(spec: MlpSpec, config: &NcdConfig, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Self, MeasureError> {
        let net = Mlp::new(spec, BatchNormConfig::default(), rng)?;
        let adam = AdamState::new(net.num_params(), config.adam());
        Ok(Regressor {
            net,
            adam,
            shift: 0.0,
            scale: 1.0,
        })
    }

    fn fit(&mut self, inputs: &Array2<f64>, target: &Array1<f64>, steps: usize) -> Result<(), MeasureError> {
        let n = target.len() as f64;
        self.shift = target.sum() / n;
        let sd = (target.mapv(|v| (v - self.shift).powi(2)).sum() / n).sqrt();
        self.scale = if sd > 0.0 { sd } else { 1.0 };
        let standardized = target.mapv(|v| (v - self.shift) / self.scale);
        for _ in 0..steps {
            self.fit_step(inputs, &standardized)?;
        }
        Ok(())
    }

    fn fit_step(&mut self, inputs: &Array2<f64>, target: &Array1<f64>) -> Result<(), MeasureError> {
        self.net.refresh_spectral(1);
        let (out, cache) = self.net.forward_cached(inputs.view(), true)?;
        let n = out.len() as f64;
        let dout = (&out - target) * (2.0 / n);
        let grads = self.net.backward(&cache, dout.view());
        self.net.update_running_stats(&cache);
        self.net.adam_step(&mut self.adam, &grads, Direction::Descend);
        Ok(())
    }

    fn predict(&self, inputs: &Array2<f64>) -> Result<Array1<f64>, MeasureError> {
        Ok(self.net.forward(inputs.view(), true)? * self.scale + self.shift)
    }
}

/// Core estimator over explicit column blocks. `x`, `y` and `z` are the
/// row-aligned columns of the three variable groups; `z` may have no
/// columns, in which case the regressors reduce to the sample mean.
pub fn ncd_train(
    x: &Array2<f64>,
    y: &Array2<f64>,
    z: &Array2<f64>,
    config: &NcdConfig,
    seed: u64,
) -> Result<NcdOutcome, MeasureError> {
    config.validate()?;
    let n = x.nrows();
    if n < 4 {
        return Err(MeasureError::TooFewSamples { need: 4, got: n });
    }
    let c = config.input_scale;
    let z = standardize(z.clone()) * c;
    let xz = hstack(&(standardize(x.clone()) * c), &z);
    let yz = hstack(&(standardize(y.clone()) * c), &z);
    let conditional = z.ncols() > 0;
    let eps = config.correlation_epsilon;

    let mut rng = rng_from(seed);
    let tf = config.test_fn;
    let mut f = Mlp::new(MlpSpec::test_function(xz.ncols(), tf.depth, tf.width), BatchNormConfig::default(), &mut rng)?;
    let mut g = Mlp::new(MlpSpec::test_function(yz.ncols(), tf.depth, tf.width), BatchNormConfig::default(), &mut rng)?;
    let mut regressors = if conditional {
        let rs = MlpSpec::regressor(z.ncols(), config.regressor.depth, config.regressor.width);
        Some((Regressor::new(rs, config, &mut rng)?, Regressor::new(rs, config, &mut rng)?))
    } else {
        None
    };
    let mut adam_f = AdamState::new(f.num_params(), config.adam());
    let mut adam_g = AdamState::new(g.num_params(), config.adam());

    let fitted = |regs: &Option<(Regressor, Regressor)>, fv: &Array1<f64>, gv: &Array1<f64>| -> Result<(Array1<f64>, Array1<f64>), MeasureError> {
        match regs {
            Some((h, l)) => Ok((h.predict(&z)?, l.predict(&z)?)),
            None => Ok((
                Array1::from_elem(n, fv.mean().unwrap_or(0.0)),
                Array1::from_elem(n, gv.mean().unwrap_or(0.0)),
            )),
        }
    };

    let mut trajectory = Vec::with_capacity(config.outer_steps);
    for step in 0..config.outer_steps {
        if let Some((h, l)) = regressors.as_mut() {
            h.fit(&z, &f.forward(xz.view(), true)?, config.inner_steps)?;
            l.fit(&z, &g.forward(yz.view(), true)?, config.inner_steps)?;
        }
        f.refresh_spectral(1);
        g.refresh_spectral(1);
        let (fv, f_cache) = f.forward_cached(xz.view(), true)?;
        let (gv, g_cache) = g.forward_cached(yz.view(), true)?;
        let (hv, lv) = fitted(&regressors, &fv, &gv)?;
        let a = &fv - &hv;
        let b = &gv - &lv;
        let (rho, da, db) = correlation_with_grad(a.view(), b.view(), eps);
        if !rho.is_finite() || da.iter().chain(db.iter()).any(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite { step });
        }
        trajectory.push(rho);
        let grad_f = f.backward(&f_cache, da.view());
        let grad_g = g.backward(&g_cache, db.view());
        f.adam_step(&mut adam_f, &grad_f, Direction::Ascend);
        g.adam_step(&mut adam_g, &grad_g, Direction::Ascend);
    }

    let fv = f.forward(xz.view(), true)?;
    let gv = g.forward(yz.view(), true)?;
    if let Some((h, l)) = regressors.as_mut() {
        h.fit(&z, &fv, config.inner_steps)?;
        l.fit(&z, &gv, config.inner_steps)?;
    }
    let (hv, lv) = fitted(&regressors, &fv, &gv)?;
    let score = residual_correlation(fv.view(), hv.view(), gv.view(), lv.view(), eps);
    if !score.is_finite() {
        return Err(MeasureError::NonFinite { step: config.outer_steps });
    }
    Ok(NcdOutcome { score, trajectory })
}

/// `Ŝ(x, y | z)` on the context's dataset, seeded by the context seed.
/// Variables may span several columns.
pub fn ncd_score(ctx: &MeasureContext<'_>, x: usize, y: usize, z: NodeSet, config: &NcdConfig) -> Result<f64, MeasureError> {
    ncd_score_detailed(ctx, x, y, z, config).map(|o| o.score)
}

/// [`ncd_score`] with the training trajectory.
pub fn ncd_score_detailed(
    ctx: &MeasureContext<'_>,
    x: usize,
    y: usize,
    z: NodeSet,
    config: &NcdConfig,
) -> Result<NcdOutcome, MeasureError> {
    let data = ctx.dataset;
    check_query(data.num_vars(), x, y, z)?;
    ncd_train(&data.gather(&[x])?, &data.gather(&[y])?, &data.gather(&z.to_vec())?, config, ctx.seed)
}

/// The estimator as a search measure. Each query is trained from its own
/// seed derived from `(config.seed, x, y, z)`.
#[derive(Debug, Clone)]
pub struct NcdMeasure {
    data: Dataset,
    config: NcdConfig,
}

impl NcdMeasure {
    pub fn new(data: &Dataset, config: NcdConfig) -> Result<Self, MeasureError> {
        config.validate()?;
        Ok(NcdMeasure {
            data: data.clone(),
            config,
        })
    }

    pub fn config(&self) -> &NcdConfig {
        &self.config
    }

    pub fn query_seed(&self, x: usize, y: usize, z: NodeSet) -> u64 {
        derive_seed(self.config.seed, &[x as u64, y as u64, z.bits()])
    }
}

impl ConditionalDependence for NcdMeasure {
    fn num_vars(&self) -> usize {
        self.data.num_vars()
    }

    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
        let ctx = MeasureContext::new(&self.data, self.query_seed(x, y, z));
        ncd_score(&ctx, x, y, z, &self.config)
    }

    fn is_symmetric(&self) -> bool {
        self.config.share_reversed
    }
}

const GLOBAL_TAG: u64 = 0x6c6f_6261_6c00;
const RESTART_TAG: u64 = 0x7265_7374_6172;

/// `S_g(G) = (1/d) Σ_i Ŝ(X_i, Nd_i \ Pa_i | Pa_i)`, where `Nd_i` are the
/// non-descendants of `i`. Terms with nothing to test against are 0.
pub fn global_score(data: &Dataset, dag: &Dag, config: &NcdConfig) -> Result<f64, MeasureError> {
    let d = dag.node_count();
    if d != data.num_vars() {
        return Err(MeasureError::InvalidQuery(format!(
            "graph has {d} nodes but the dataset has {} variables",
            data.num_vars()
        )));
    }
    let terms: Vec<Result<f64, MeasureError>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let pa = dag.parents(i);
            let rest = dag.non_descendants(i).difference(pa);
            if rest.is_empty() {
                return Ok(0.0);
            }
            let seed = derive_seed(config.seed, &[GLOBAL_TAG, i as u64]);
            ncd_train(
                &data.gather(&[i])?,
                &data.gather(&rest.to_vec())?,
                &data.gather(&pa.to_vec())?,
                config,
                seed,
            )
            .map(|o| o.score)
        })
        .collect();
    let mut sum = 0.0;
    for t in terms {
        sum += t?;
    }
    Ok(sum / d as f64)
}

#[derive(Debug, thiserror::Error)]
pub enum DiscoveryError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub seed: u64,
    pub cpdag: Cpdag,
    pub trace: GesTrace,
    pub global_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcdDiscovery {
    pub best: usize,
    pub restarts: Vec<RestartOutcome>,
}

impl NcdDiscovery {
    pub fn cpdag(&self) -> &Cpdag {
        &self.restarts[self.best].cpdag
    }

    pub fn trace(&self) -> &GesTrace {
        &self.restarts[self.best].trace
    }
}

/// Runs the search `config.restarts` times with independent seeds and
/// keeps the result whose DAG extension has the lowest global score.
/// With a single restart the global score is skipped and reported as NaN.
pub fn discover(data: &Dataset, config: &NcdConfig, max_aux_size: Option<usize>) -> Result<NcdDiscovery, DiscoveryError> {
    config.validate()?;
    let count = config.restarts.max(1);
    let mut restarts = Vec::with_capacity(count);
    for r in 0..count {
        let seed = if r == 0 {
            config.seed
        } else {
            derive_seed(config.seed, &[RESTART_TAG, r as u64])
        };
        let cfg = NcdConfig { seed, ..*config };
        let measure = NcdMeasure::new(data, cfg)?;
        let ges = GesConfig {
            tau: config.tau,
            max_aux_size,
            seed,
        };
        let (cpdag, trace) = run_ges(&measure, &ges)?;
        let global_score = if count > 1 {
            global_score(data, &pdag_to_dag(&cpdag)?, &cfg)?
        } else {
            f64::NAN
        };
        restarts.push(RestartOutcome {
            seed,
            cpdag,
            trace,
            global_score,
        });
    }
    let mut best = 0;
    for (i, r) in restarts.iter().enumerate() {
        if r.global_score < restarts[best].global_score {
            best = i;
        }
    }
    Ok(NcdDiscovery { best, restarts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from(seed);
        Array2::from_shape_fn((n, cols), |_| StandardNormal.sample(&mut rng))
    }

    fn quick() -> NcdConfig {
        NcdConfig {
            regressor: NetShape { depth: 2, width: 16 },
            ..NcdConfig::default()
        }
    }

    #[test]
    fn three_point_residual_correlation() {
        let f = array![1.0, 2.0, 3.0];
        let g = array![1.0, 1.0, 2.0];
        let zero = Array1::zeros(3);
        let r = residual_correlation(f.view(), zero.view(), g.view(), zero.view(), 0.0);
        assert!((r - 0.75).abs() < 1e-12, "{r}");
    }

    #[test]
    fn identical_residuals_correlate_perfectly() {
        let f = array![0.5, -1.0, 2.0, 0.25];
        let h = array![0.1, 0.2, 0.3, 0.4];
        let r = residual_correlation(f.view(), h.view(), f.view(), h.view(), 1e-12);
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_residual_gives_zero() {
        let f = array![1.0, 1.0, 1.0, 1.0];
        let g = array![0.3, -0.2, 0.9, 0.1];
        let zero = Array1::zeros(4);
        let r = residual_correlation(f.view(), zero.view(), g.view(), zero.view(), 1e-8);
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn correlation_gradient_matches_finite_differences() {
        let mut rng = rng_from(3);
        let a: Array1<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Array1<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, da, db) = correlation_with_grad(a.view(), b.view(), 1e-8);
        for i in 0..9 {
            let mut up = a.clone();
            up[i] += 1e-6;
            let mut down = a.clone();
            down[i] -= 1e-6;
            let num = (correlation_with_grad(up.view(), b.view(), 1e-8).0
                - correlation_with_grad(down.view(), b.view(), 1e-8).0)
                / 2e-6;
            assert!((num - da[i]).abs() < 1e-6);
            let mut up = b.clone();
            up[i] += 1e-6;
            let mut down = b.clone();
            down[i] -= 1e-6;
            let num = (correlation_with_grad(a.view(), up.view(), 1e-8).0
                - correlation_with_grad(a.view(), down.view(), 1e-8).0)
                / 2e-6;
            assert!((num - db[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn independent_noise_scores_low() {
        let v = gaussian(1000, 3, 1);
        let data = Dataset::unnamed(v).unwrap();
        let ctx = MeasureContext::new(&data, 7);
        let s = ncd_score(&ctx, 0, 1, NodeSet::singleton(2), &NcdConfig::default()).unwrap();
        assert!(s < 0.05, "{s}");
        let s = ncd_score(&ctx, 0, 1, NodeSet::EMPTY, &NcdConfig::default()).unwrap();
        assert!(s < 0.05, "{s}");
    }

    #[test]
    fn noisy_copy_scores_high() {
        let mut v = gaussian(1000, 3, 2);
        let noise = gaussian(1000, 1, 3);
        for i in 0..1000 {
            v[[i, 1]] = v[[i, 0]] + 0.1 * noise[[i, 0]];
        }
        let data = Dataset::unnamed(v).unwrap();
        let ctx = MeasureContext::new(&data, 1);
        let s = ncd_score(&ctx, 0, 1, NodeSet::singleton(2), &quick()).unwrap();
        assert!(s > 0.5, "{s}");
    }

    #[test]
    fn exact_copy_approaches_one() {
        let x = gaussian(500, 1, 4);
        let z = Array2::zeros((500, 0));
        let out = ncd_train(&x, &x, &z, &quick(), 5).unwrap();
        assert!(out.score > 0.95 && out.score <= 1.0, "{}", out.score);
    }

    #[test]
    fn trajectory_mostly_increases_on_dependent_data() {
        let (mut ups, mut steps) = (0, 0);
        for seed in 0..5 {
            let x = gaussian(1000, 1, 8 + seed);
            let noise = gaussian(1000, 1, 100 + seed);
            let z = gaussian(1000, 1, 200 + seed);
            let y = x.mapv(f64::tanh) + noise * 0.3 + &z * 0.5;
            let out = ncd_train(&x, &y, &z, &NcdConfig::default(), seed).unwrap();
            // plateau jitter below 0.005 is not a decrease
            ups += out.trajectory.windows(2).filter(|w| w[1] >= w[0] - 0.005).count();
            steps += out.trajectory.len() - 1;
        }
        assert!(ups as f64 >= 0.8 * steps as f64, "{ups}/{steps}");
    }

    #[test]
    fn multi_column_variables_are_supported() {
        let x = gaussian(300, 2, 11);
        let y = gaussian(300, 3, 12);
        let z = gaussian(300, 2, 13);
        let out = ncd_train(&x, &y, &z, &quick(), 1).unwrap();
        assert!((0.0..=1.0).contains(&out.score));
    }

    #[test]
    fn measure_is_deterministic_per_query() {
        let data = Dataset::unnamed(gaussian(200, 3, 5)).unwrap();
        let m = NcdMeasure::new(&data, quick()).unwrap();
        let a = m.score(0, 1, NodeSet::singleton(2)).unwrap();
        let b = m.score(0, 1, NodeSet::singleton(2)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let c = m.score(1, 0, NodeSet::singleton(2)).unwrap();
        assert!((0.0..=1.0).contains(&c));
        assert_ne!(m.query_seed(0, 1, NodeSet::EMPTY), m.query_seed(1, 0, NodeSet::EMPTY));
    }

    #[test]
    fn too_few_rows_are_rejected() {
        let x = gaussian(3, 1, 0);
        let z = Array2::zeros((3, 0));
        assert_eq!(ncd_train(&x, &x, &z, &quick(), 0), Err(MeasureError::TooFewSamples { need: 4, got: 3 }));
    }

    #[test]
    fn bad_config_is_rejected() {
        let x = gaussian(10, 1, 0);
        let z = Array2::zeros((10, 0));
        for cfg in [NcdConfig { outer_steps: 0, ..quick() }, NcdConfig { input_scale: 0.0, ..quick() }] {
            assert!(matches!(ncd_train(&x, &x, &z, &cfg, 0), Err(MeasureError::InvalidQuery(_))));
        }
    }

    #[test]
    fn global_score_prefers_the_true_chain() {
        let n = 600;
        let mut v = gaussian(n, 3, 20);
        for i in 0..n {
            v[[i, 1]] = v[[i, 0]].tanh() * 2.0 + 0.3 * v[[i, 1]];
            v[[i, 2]] = v[[i, 1]].powi(2) + 0.3 * v[[i, 2]];
        }
        let data = Dataset::unnamed(v).unwrap();
        let chain = Dag::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let empty = Dag::new(3).unwrap();
        let cfg = quick();
        let s_chain = global_score(&data, &chain, &cfg).unwrap();
        let s_empty = global_score(&data, &empty, &cfg).unwrap();
        assert!(s_chain < s_empty, "{s_chain} vs {s_empty}");
    }

    #[test]
    fn global_score_on_independent_data_and_single_node() {
        let data = Dataset::unnamed(gaussian(1000, 3, 21)).unwrap();
        let s = global_score(&data, &Dag::new(3).unwrap(), &quick()).unwrap();
        assert!(s < 0.05, "{s}");
        let one = Dataset::unnamed(gaussian(50, 1, 22)).unwrap();
        assert_eq!(global_score(&one, &Dag::new(1).unwrap(), &quick()).unwrap(), 0.0);
    }

    #[test]
    fn dependent_pair_discovery_finds_one_edge() {
        let mut v = gaussian(400, 2, 30);
        for i in 0..400 {
            v[[i, 1]] = v[[i, 0]].powi(3) + 0.2 * v[[i, 1]];
        }
        let data = Dataset::unnamed(v).unwrap();
        let cfg = NcdConfig { tau: 0.05, ..quick() };
        let found = discover(&data, &cfg, None).unwrap();
        assert_eq!(found.restarts.len(), 2);
        let g = found.cpdag();
        assert!(g.has_undirected(0, 1));
        assert!(found.restarts.iter().all(|r| r.global_score.is_finite()));
    }

    #[test]
    fn presets_carry_tuned_values() {
        let p = |x| NcdConfig::preset(x);
        assert_eq!((p(Preset::Sparse).regressor, p(Preset::Sparse).tau), (NetShape { depth: 3, width: 40 }, 0.005));
        assert_eq!((p(Preset::Dense).regressor, p(Preset::Dense).tau), (NetShape { depth: 3, width: 80 }, 0.0001));
        assert_eq!((p(Preset::MultiDim).regressor, p(Preset::MultiDim).tau), (NetShape { depth: 3, width: 50 }, 0.01));
        assert_eq!(
            (p(Preset::GeneNetwork).regressor, p(Preset::GeneNetwork).tau),
            (NetShape { depth: 4, width: 100 }, 0.3)
        );
        let d = NcdConfig::default();
        assert_eq!((d.outer_steps, d.inner_steps, d.lr, d.test_fn), (20, 5, 0.01, NetShape { depth: 2, width: 20 }));
    }
}
