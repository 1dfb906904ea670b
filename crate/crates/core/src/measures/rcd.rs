//! Rank-based conditional dependence coefficient.
//!
//! For a scalar response `Y`, predictors `X` and a conditioning vector `Z`:
//!
//! ```text
//!          Σ_i [ min(R_i, R_M(i)) − min(R_i, R_N(i)) ]
//! T_n  =  ---------------------------------------------
//!               Σ_i [ R_i − min(R_i, R_N(i)) ]
//! ```
//!
//! where `R_i = #{j : y_j ≤ y_i}`, `N(i)` is the nearest neighbor of `z_i`
//! and `M(i)` the nearest neighbor of `(x_i, z_i)`. With an empty `Z` the
//! unconditional form is used:
//!
//! ```text
//! T_n = Σ_i [ n·min(R_i, R_M(i)) − L_i² ] / Σ_i L_i (n − L_i),   L_i = #{j : y_j ≥ y_i}
//! ```
//!
//! with `M(i)` the nearest neighbor of `x_i`.

use ndarray::{concatenate, Axis};

use super::{check_query, nearest_neighbors, ConditionalDependence, MeasureContext, MeasureError};
use crate::dataset::Dataset;
use crate::graph::NodeSet;
use crate::rng::{derive_seed, rng_from};

/// `(R_i, L_i)` for every row.
fn ranks(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = y.len();
    let r = y
        .iter()
        .map(|v| sorted.partition_point(|s| s <= v) as f64)
        .collect();
    let l = y
        .iter()
        .map(|v| (n - sorted.partition_point(|s| s < v)) as f64)
        .collect();
    (r, l)
}

/// The unclamped statistic. Finite samples can push it slightly below 0.
pub fn rcd_raw(ctx: &MeasureContext<'_>, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
    let data = ctx.dataset;
    check_query(data.num_vars(), x, y, z)?;
    let n = data.rows();
    if n < 3 {
        return Err(MeasureError::TooFewSamples { need: 3, got: n });
    }
    let dim = data.dim_of(y)?;
    if dim != 1 {
        return Err(MeasureError::NotScalar { var: y, dim });
    }
    let ys: Vec<f64> = data.columns_of(y)?.column(0).to_vec();
    let (r, l) = ranks(&ys);
    let mut rng = rng_from(derive_seed(ctx.seed, &[x as u64, y as u64, z.bits()]));
    let xs = data.columns_of(x)?;
    let nf = n as f64;

    let (num, den) = if z.is_empty() {
        let m = nearest_neighbors(xs, &mut rng);
        let num: f64 = (0..n).map(|i| nf * r[i].min(r[m[i]]) - l[i] * l[i]).sum();
        let den: f64 = l.iter().map(|li| li * (nf - li)).sum();
        (num, den)
    } else {
        let zs = data.gather(&z.to_vec())?;
        let nz = nearest_neighbors(zs.view(), &mut rng);
        let xz = concatenate(Axis(1), &[xs, zs.view()]).expect("same row count");
        let m = nearest_neighbors(xz.view(), &mut rng);
        let num: f64 = (0..n)
            .map(|i| r[i].min(r[m[i]]) - r[i].min(r[nz[i]]))
            .sum();
        let den: f64 = (0..n).map(|i| r[i] - r[i].min(r[nz[i]])).sum();
        (num, den)
    };
    if den == 0.0 {
        return Err(MeasureError::DegenerateDenominator);
    }
    Ok(num / den)
}

/// The statistic clamped to `[0, 1]`.
pub fn rcd(ctx: &MeasureContext<'_>, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
    rcd_raw(ctx, x, y, z).map(|t| t.clamp(0.0, 1.0))
}

/// [`rcd`] bound to a dataset. Columns are standardized once up front so
/// nearest-neighbor distances do not depend on measurement units; a
/// degenerate denominator is scored as independence (0).
#[derive(Debug, Clone)]
pub struct RcdMeasure {
    data: Dataset,
    seed: u64,
}

impl RcdMeasure {
    pub fn new(data: &Dataset, seed: u64) -> Self {
        RcdMeasure {
            data: data.standardized(),
            seed,
        }
    }
}

impl ConditionalDependence for RcdMeasure {
    fn num_vars(&self) -> usize {
        self.data.num_vars()
    }

    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
        match rcd(&MeasureContext::new(&self.data, self.seed), x, y, z) {
            Err(MeasureError::DegenerateDenominator) => Ok(0.0),
            other => other,
        }
    }
}
