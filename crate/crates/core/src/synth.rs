//! Ground-truth graphs and synthetic data.
//!
//! Post-nonlinear models follow `X_i = g2(g1(Pa_i) + N_i)`:
//!
//! * PNL-GP: `g1` is a Gaussian-process draw over the parent vector, `g2`
//!   the logistic sigmoid, `N_i ~ Laplace(0, b_i)` with `b_i ~ U[0, 1]`,
//!   roots `~ U[-1, 1]`.
//! * PNL-MULT: `X_i = (Σ Pa_i) · exp(N_i)` with `N_i ~ |N(0, σ_i²)|`,
//!   `σ_i² ~ U[0, 1]`, roots `~ U[0, 2]`.
//!
//! A linear-Gaussian model is included for smoke tests.

use std::collections::HashMap;
use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, Dataset};
use crate::graph::{Dag, GraphError};
use crate::rng::{derive_seed, rng_from};

/// Largest sample size drawn by exact kernel factorization.
pub const GP_EXACT_MAX_ROWS: usize = 2000;
/// Cosine features used above [`GP_EXACT_MAX_ROWS`].
pub const GP_RANDOM_FEATURES: usize = 2048;
const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("kernel matrix factorization failed even with jitter {jitter:e}")]
    FactorizationFailure { jitter: f64 },
    #[error("parent sum of node {node} is not positive at row {row}")]
    NonPositiveSum { node: usize, row: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    PnlGp,
    PnlMult,
    LinearGauss,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::PnlGp => "pnl-gp",
            Model::PnlMult => "pnl-mult",
            Model::LinearGauss => "linear-gauss",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pnl-gp" => Ok(Model::PnlGp),
            "pnl-mult" => Ok(Model::PnlMult),
            "linear-gauss" => Ok(Model::LinearGauss),
            other => Err(format!("unknown model `{other}` (expected pnl-gp, pnl-mult or linear-gauss)")),
        }
    }
}

/// A structural causal model instance: which generator, over which graph,
/// how many rows, from which seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmSpec {
    pub model: Model,
    pub dag: Dag,
    pub n: usize,
    pub seed: u64,
}

impl ScmSpec {
    /// Draws the dataset. The linear model uses weights of magnitude
    /// `[0.5, 2]` and unit noise.
    pub fn generate(&self) -> Result<Dataset, SynthError> {
        match self.model {
            Model::PnlGp => sample_pnl_gp(&self.dag, self.n, self.seed),
            Model::PnlMult => sample_pnl_mult(&self.dag, self.n, self.seed),
            Model::LinearGauss => sample_linear_gauss(&self.dag, self.n, self.seed, (0.5, 2.0), 1.0),
        }
    }
}

/// Erdős–Rényi DAG: a uniform random node ordering, then every forward
/// pair independently with probability `expected_degree / (d - 1)`.
pub fn sample_er_dag(d: usize, expected_degree: f64, seed: u64) -> Result<Dag, SynthError> {
    if d < 2 {
        return Err(SynthError::InvalidArgument(format!("need at least 2 nodes, got {d}")));
    }
    if !(expected_degree > 0.0 && expected_degree <= (d - 1) as f64) {
        return Err(SynthError::InvalidArgument(format!(
            "expected degree must lie in (0, {}], got {expected_degree}",
            d - 1
        )));
    }
    let mut rng = rng_from(seed);
    let p = expected_degree / (d - 1) as f64;
    let mut order: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut dag = Dag::new(d)?;
    for i in 0..d {
        for j in (i + 1)..d {
            if rng.random_bool(p) {
                dag.add_edge(order[i], order[j])?;
            }
        }
    }
    Ok(dag)
}

fn se_kernel(a: &[f64], b: &[f64], bandwidth: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * bandwidth * bandwidth)).exp()
}

/// One joint draw of a zero-mean squared-exponential Gaussian process at the
/// rows of `inputs`. Repeated rows receive identical values.
pub fn sample_gp_function(inputs: ArrayView2<'_, f64>, bandwidth: f64, seed: u64) -> Result<Array1<f64>, SynthError> {
    if inputs.ncols() == 0 {
        return Err(SynthError::InvalidArgument("GP inputs need at least one column".into()));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(SynthError::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let mut rng = rng_from(seed);
    let n = inputs.nrows();
    let mut unique: Vec<Vec<f64>> = Vec::new();
    let mut index_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut slot = Vec::with_capacity(n);
    for row in inputs.outer_iter() {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        let next = unique.len();
        let idx = *index_of.entry(key).or_insert_with(|| {
            unique.push(row.to_vec());
            next
        });
        slot.push(idx);
    }
    let values = if unique.len() <= GP_EXACT_MAX_ROWS {
        gp_exact(&unique, bandwidth, &mut rng)?
    } else {
        gp_random_features(&unique, bandwidth, &mut rng)
    };
    Ok(slot.into_iter().map(|i| values[i]).collect())
}

fn gp_exact<R: Rng + ?Sized>(points: &[Vec<f64>], bandwidth: f64, rng: &mut R) -> Result<Vec<f64>, SynthError> {
    let m = points.len();
    let kernel = DMatrix::from_fn(m, m, |i, j| se_kernel(&points[i], &points[j], bandwidth));
    let eps: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
    let mut jitter = JITTER_START;
    loop {
        let mut k = kernel.clone();
        for i in 0..m {
            k[(i, i)] += jitter;
        }
        if let Some(chol) = k.cholesky() {
            let l = chol.l();
            let e = nalgebra::DVector::from_vec(eps);
            return Ok((l * e).iter().copied().collect());
        }
        jitter *= 10.0;
        if jitter > JITTER_MAX * 1.000001 {
            return Err(SynthError::FactorizationFailure { jitter: JITTER_MAX });
        }
    }
}

fn gp_random_features<R: Rng + ?Sized>(points: &[Vec<f64>], bandwidth: f64, rng: &mut R) -> Vec<f64> {
    let p = points[0].len();
    let d = GP_RANDOM_FEATURES;
    let freq = Normal::new(0.0, 1.0 / bandwidth).expect("positive bandwidth");
    let omegas: Vec<Vec<f64>> = (0..d).map(|_| (0..p).map(|_| freq.sample(rng)).collect()).collect();
    let phases: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let weights: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let scale = (2.0 / d as f64).sqrt();
    points
        .iter()
        .map(|u| {
            let mut s = 0.0;
            for k in 0..d {
                let dot: f64 = omegas[k].iter().zip(u).map(|(w, x)| w * x).sum();
                s += weights[k] * (dot + phases[k]).cos();
            }
            scale * s
        })
        .collect()
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Laplace(0, b) by inverse CDF.
fn sample_laplace<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

fn parent_matrix(values: &Array2<f64>, parents: &[usize]) -> Array2<f64> {
    let mut m = Array2::zeros((values.nrows(), parents.len()));
    for (k, &p) in parents.iter().enumerate() {
        m.column_mut(k).assign(&values.column(p));
    }
    m
}

fn check_rows(n: usize) -> Result<(), SynthError> {
    if n < 2 {
        return Err(SynthError::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    Ok(())
}

/// PNL-GP data over `dag`.
pub fn sample_pnl_gp(dag: &Dag, n: usize, seed: u64) -> Result<Dataset, SynthError> {
    check_rows(n)?;
    let d = dag.node_count();
    let mut values = Array2::zeros((n, d));
    for node in dag.topological_order() {
        let mut rng = rng_from(derive_seed(seed, &[node as u64]));
        let parents = dag.parents(node).to_vec();
        if parents.is_empty() {
            for i in 0..n {
                values[[i, node]] = rng.random_range(-1.0..=1.0);
            }
            continue;
        }
        let b: f64 = rng.random();
        let inputs = parent_matrix(&values, &parents);
        let g = sample_gp_function(inputs.view(), 1.0, derive_seed(seed, &[node as u64, 1]))?;
        for i in 0..n {
            values[[i, node]] = sigmoid(g[i] + sample_laplace(b, &mut rng));
        }
    }
    Ok(Dataset::unnamed(values)?)
}

/// PNL-MULT data over `dag`.
pub fn sample_pnl_mult(dag: &Dag, n: usize, seed: u64) -> Result<Dataset, SynthError> {
    sample_pnl_mult_scaled(dag, n, seed, 1.0)
}

/// PNL-MULT with every noise term multiplied by `noise_scale`. A scale of 0
/// makes each child the plain sum of its parents.
pub fn sample_pnl_mult_scaled(dag: &Dag, n: usize, seed: u64, noise_scale: f64) -> Result<Dataset, SynthError> {
    check_rows(n)?;
    let d = dag.node_count();
    let mut values = Array2::zeros((n, d));
    for node in dag.topological_order() {
        let mut rng = rng_from(derive_seed(seed, &[node as u64]));
        let parents = dag.parents(node).to_vec();
        if parents.is_empty() {
            for i in 0..n {
                values[[i, node]] = rng.random_range(0.0..=2.0);
            }
            continue;
        }
        let var: f64 = rng.random();
        let noise = Normal::new(0.0, var.sqrt()).expect("finite variance");
        for i in 0..n {
            let sum: f64 = parents.iter().map(|&p| values[[i, p]]).sum();
            if sum <= 0.0 {
                return Err(SynthError::NonPositiveSum { node, row: i });
            }
            let e = noise_scale * noise.sample(&mut rng).abs();
            values[[i, node]] = (sum.ln() + e).exp();
        }
    }
    Ok(Dataset::unnamed(values)?)
}

/// Linear-Gaussian data: `X_i = Σ w_ji X_j + ε_i`, `|w| ~ U[lo, hi]` with a
/// random sign, `ε ~ N(0, noise_sd²)`. Roots are standard normal.
pub fn sample_linear_gauss(
    dag: &Dag,
    n: usize,
    seed: u64,
    coeff_range: (f64, f64),
    noise_sd: f64,
) -> Result<Dataset, SynthError> {
    check_rows(n)?;
    let (lo, hi) = coeff_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(SynthError::InvalidArgument(format!(
            "coefficient range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(SynthError::InvalidArgument(format!("noise_sd must be nonnegative, got {noise_sd}")));
    }
    let d = dag.node_count();
    let mut values = Array2::zeros((n, d));
    for node in dag.topological_order() {
        let mut rng = rng_from(derive_seed(seed, &[node as u64]));
        let weights: Vec<(usize, f64)> = dag
            .parents(node)
            .iter()
            .map(|p| {
                let mag = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                (p, if rng.random_bool(0.5) { mag } else { -mag })
            })
            .collect();
        let sd = if weights.is_empty() { 1.0 } else { noise_sd };
        for i in 0..n {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let mut v = sd * eps;
            for &(p, w) in &weights {
                v += w * values[[i, p]];
            }
            values[[i, node]] = v;
        }
    }
    Ok(Dataset::unnamed(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeSet;
    use crate::measures::{gauss_partial_corr, rcd, MeasureContext};
    use ndarray::array;

    #[test]
    fn two_node_graph_with_degree_one_always_has_an_edge() {
        for seed in 0..50 {
            assert_eq!(sample_er_dag(2, 1.0, seed).unwrap().edge_count(), 1);
        }
    }

    #[test]
    fn er_edge_count_matches_binomial_mean() {
        let counts: Vec<f64> = (0..1000)
            .map(|s| sample_er_dag(10, 2.0, s).unwrap().edge_count() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        // Binomial(45, 2/9): mean 10, sd sqrt(45 * 2/9 * 7/9) ≈ 2.79
        let se = (45.0f64 * 2.0 / 9.0 * 7.0 / 9.0).sqrt() / (1000f64).sqrt();
        assert!((mean - 10.0).abs() < 0.5, "{mean}");
        assert!((mean - 10.0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn er_rejects_bad_arguments() {
        assert!(sample_er_dag(1, 0.5, 0).is_err());
        assert!(sample_er_dag(5, 0.0, 0).is_err());
        assert!(sample_er_dag(5, 4.5, 0).is_err());
    }

    #[test]
    fn identical_inputs_get_identical_values() {
        let u = array![[0.3], [0.3], [1.7], [0.3]];
        let f = sample_gp_function(u.view(), 1.0, 4).unwrap();
        assert_eq!(f[0], f[1]);
        assert_eq!(f[0], f[3]);
    }

    #[test]
    fn gp_marginals_have_unit_variance_and_far_points_decorrelate() {
        let u = Array2::from_shape_fn((3, 1), |(i, _)| [0.0, 0.2, 25.0][i]);
        let draws: Vec<Array1<f64>> = (0..500).map(|s| sample_gp_function(u.view(), 1.0, s).unwrap()).collect();
        let moments = |a: usize, b: usize| {
            let ma = draws.iter().map(|d| d[a]).sum::<f64>() / 500.0;
            let mb = draws.iter().map(|d| d[b]).sum::<f64>() / 500.0;
            let c = draws.iter().map(|d| (d[a] - ma) * (d[b] - mb)).sum::<f64>() / 500.0;
            let va = draws.iter().map(|d| (d[a] - ma).powi(2)).sum::<f64>() / 500.0;
            let vb = draws.iter().map(|d| (d[b] - mb).powi(2)).sum::<f64>() / 500.0;
            (va, c / (va * vb).sqrt())
        };
        let (var0, near) = moments(0, 1);
        let (_, far) = moments(0, 2);
        assert!((var0 - 1.0).abs() < 0.1 * 1.5, "{var0}");
        assert!(near > 0.9, "{near}");
        assert!(far.abs() < 0.1, "{far}");
    }

    #[test]
    fn random_features_approximate_the_kernel() {
        // mean over seeds of f(u) f(v) estimates k(u, v)
        let n = GP_EXACT_MAX_ROWS + 1;
        let mut u = Array2::zeros((n, 1));
        for i in 0..n {
            u[[i, 0]] = i as f64 * 1e-3;
        }
        let (a, b) = (0, 1000); // distance 1 → k = exp(-1/2)
        let reps = 300;
        let mut prod = 0.0;
        let mut sq = 0.0;
        for s in 0..reps {
            let f = sample_gp_function(u.view(), 1.0, s).unwrap();
            prod += f[a] * f[b];
            sq += f[a] * f[a];
        }
        let k = prod / reps as f64;
        let v = sq / reps as f64;
        assert!((v - 1.0).abs() < 0.2, "{v}");
        assert!((k - (-0.5f64).exp()).abs() < 0.15, "{k}");
    }

    #[test]
    fn pnl_gp_ranges() {
        let dag = Dag::from_edges(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let data = sample_pnl_gp(&dag, 300, 3).unwrap();
        let v = data.values();
        for i in 0..300 {
            for root in [0, 3] {
                assert!((-1.0..=1.0).contains(&v[[i, root]]));
            }
            for child in [1, 2] {
                assert!(v[[i, child]] > 0.0 && v[[i, child]] < 1.0);
            }
        }
    }

    #[test]
    fn pnl_gp_without_edges_is_independent() {
        let dag = Dag::new(3).unwrap();
        let data = sample_pnl_gp(&dag, 2000, 8).unwrap();
        let ctx = MeasureContext::new(&data, 1);
        for (x, y) in [(0, 1), (1, 2), (0, 2), (2, 0)] {
            assert!(rcd(&ctx, x, y, NodeSet::EMPTY).unwrap() < 0.05);
        }
    }

    #[test]
    fn pnl_mult_is_positive_and_noise_free_child_copies_parent() {
        let dag = Dag::from_edges(2, [(0, 1)]).unwrap();
        let data = sample_pnl_mult(&dag, 500, 2).unwrap();
        assert!(data.values().iter().all(|&v| v > 0.0));
        let exact = sample_pnl_mult_scaled(&dag, 200, 9, 0.0).unwrap();
        let v = exact.values();
        for i in 0..200 {
            assert!((v[[i, 1]] - v[[i, 0]]).abs() <= 1e-15 * v[[i, 0]].abs().max(1.0));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let dag = sample_er_dag(6, 2.0, 1).unwrap();
        for model in [Model::PnlGp, Model::PnlMult, Model::LinearGauss] {
            let spec = ScmSpec { model, dag: dag.clone(), n: 100, seed: 5 };
            assert_eq!(spec.generate().unwrap().values(), spec.generate().unwrap().values());
        }
    }

    #[test]
    fn linear_gauss_without_edges_is_standard_normal() {
        let data = sample_linear_gauss(&Dag::new(2).unwrap(), 5000, 1, (0.5, 2.0), 1.0).unwrap();
        let col = data.values().column(0).to_owned();
        let mean = col.mean().unwrap();
        let var = col.var(0.0);
        assert!(mean.abs() < 0.05 && (var - 1.0).abs() < 0.06, "{mean} {var}");
    }

    #[test]
    fn linear_chain_with_tiny_noise_is_nearly_collinear() {
        let dag = Dag::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let data = sample_linear_gauss(&dag, 500, 2, (1.0, 1.0), 1e-4).unwrap();
        let ctx = MeasureContext::new(&data, 0);
        assert!(gauss_partial_corr(&ctx, 0, 1, NodeSet::EMPTY).unwrap() > 0.999);
    }

    #[test]
    fn linear_diamond_separations_are_recovered() {
        // 0 → 1, 0 → 2, 1 → 3, 2 → 3
        let dag = Dag::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let data = sample_linear_gauss(&dag, 5000, 11, (0.5, 1.5), 1.0).unwrap();
        let ctx = MeasureContext::new(&data, 0);
        let s = |v: &[usize]| v.iter().collect::<NodeSet>();
        for (x, y, z) in [(1, 2, s(&[0])), (0, 3, s(&[1, 2]))] {
            let r = gauss_partial_corr(&ctx, x, y, z).unwrap();
            assert!(r < 0.02, "{x} {y} {z:?}: {r}");
        }
        for (x, y, z) in [(1, 2, s(&[0, 3])), (0, 1, s(&[])), (1, 3, s(&[0]))] {
            let r = gauss_partial_corr(&ctx, x, y, z).unwrap();
            assert!(r > 0.02, "{x} {y} {z:?}: {r}");
        }
    }

    #[test]
    fn model_names_round_trip() {
        for m in [Model::PnlGp, Model::PnlMult, Model::LinearGauss] {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("gp".parse::<Model>().is_err());
    }
}
