//! Squared Gaussian partial correlation, a cheap smoke-test measure.

use nalgebra::{DMatrix, DVector};

use super::{check_query, ConditionalDependence, MeasureContext, MeasureError};
use crate::dataset::Dataset;
use crate::graph::NodeSet;

fn residuals(design: &DMatrix<f64>, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, target: &DVector<f64>) -> DVector<f64> {
    let beta = chol.solve(&(design.transpose() * target));
    target - design * beta
}

/// Squared sample correlation of the residuals of `x` and `y` after least
/// squares regression on `[1, z]`.
pub fn gauss_partial_corr(ctx: &MeasureContext<'_>, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
    let data = ctx.dataset;
    check_query(data.num_vars(), x, y, z)?;
    for v in [x, y] {
        let dim = data.dim_of(v)?;
        if dim != 1 {
            return Err(MeasureError::NotScalar { var: v, dim });
        }
    }
    let zs = data.gather(&z.to_vec())?;
    let n = data.rows();
    let k = zs.ncols();
    if n <= k + 2 {
        return Err(MeasureError::TooFewSamples { need: k + 3, got: n });
    }
    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { zs[[i, j - 1]] });
    let gram = design.transpose() * &design;
    let chol = gram.cholesky().ok_or(MeasureError::SingularDesign)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if !(lo > hi * 1e-7) {
        return Err(MeasureError::SingularDesign);
    }
    let col = |v: usize| -> Result<DVector<f64>, MeasureError> {
        let c = data.columns_of(v)?;
        Ok(DVector::from_iterator(n, c.column(0).iter().copied()))
    };
    let rx = residuals(&design, &chol, &col(x)?);
    let ry = residuals(&design, &chol, &col(y)?);
    let (mx, my) = (rx.mean(), ry.mean());
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let (a, b) = (rx[i] - mx, ry[i] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(0.0);
    }
    Ok((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone)]
pub struct PartialCorrelation {
    data: Dataset,
}

impl PartialCorrelation {
    pub fn new(data: &Dataset) -> Self {
        PartialCorrelation { data: data.clone() }
    }
}

impl ConditionalDependence for PartialCorrelation {
    fn num_vars(&self) -> usize {
        self.data.num_vars()
    }

    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
        gauss_partial_corr(&MeasureContext::new(&self.data, 0), x, y, z)
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_columns_give_one() {
        let d = Dataset::unnamed(array![[1.0, 1.0], [2.0, 2.0], [4.0, 4.0], [3.5, 3.5]]).unwrap();
        let r = gauss_partial_corr(&MeasureContext::new(&d, 0), 0, 1, NodeSet::EMPTY).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_point_hand_example_matches_recursion() {
        // rho_xy.z = (r_xy - r_xz r_yz) / sqrt((1 - r_xz²)(1 - r_yz²))
        let x = [1.0, 2.0, 4.0, 3.0];
        let y = [2.0, 1.0, 5.0, 5.0];
        let z = [0.0, 1.0, 1.0, 3.0];
        let corr = |a: &[f64], b: &[f64]| {
            let ma = a.iter().sum::<f64>() / 4.0;
            let mb = b.iter().sum::<f64>() / 4.0;
            let c: f64 = a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum();
            let va: f64 = a.iter().map(|p| (p - ma).powi(2)).sum();
            let vb: f64 = b.iter().map(|q| (q - mb).powi(2)).sum();
            c / (va * vb).sqrt()
        };
        let (rxy, rxz, ryz) = (corr(&x, &y), corr(&x, &z), corr(&y, &z));
        let partial = (rxy - rxz * ryz) / ((1.0 - rxz * rxz) * (1.0 - ryz * ryz)).sqrt();
        let mut v = Array2::zeros((4, 3));
        for i in 0..4 {
            v[[i, 0]] = x[i];
            v[[i, 1]] = y[i];
            v[[i, 2]] = z[i];
        }
        let d = Dataset::unnamed(v).unwrap();
        let got = gauss_partial_corr(&MeasureContext::new(&d, 0), 0, 1, NodeSet::singleton(2)).unwrap();
        assert!((got - partial * partial).abs() < 1e-12, "{got} vs {}", partial * partial);
    }

    #[test]
    fn gaussian_chain_is_separated_by_middle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 5000;
        let mut v = Array2::zeros((n, 3));
        for i in 0..n {
            let e: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            v[[i, 0]] = e[0];
            v[[i, 1]] = 0.8 * v[[i, 0]] + e[1];
            v[[i, 2]] = -0.9 * v[[i, 1]] + e[2];
        }
        let d = Dataset::unnamed(v).unwrap();
        let ctx = MeasureContext::new(&d, 0);
        assert!(gauss_partial_corr(&ctx, 0, 2, NodeSet::singleton(1)).unwrap() < 0.02);
        assert!(gauss_partial_corr(&ctx, 0, 2, NodeSet::EMPTY).unwrap() > 0.1);
    }

    #[test]
    fn collinear_conditioning_set_is_singular() {
        let d = Dataset::unnamed(array![
            [1.0, 2.0, 1.0, 2.0],
            [2.0, 1.0, 2.0, 4.0],
            [3.0, 5.0, 3.0, 6.0],
            [4.0, 2.0, 4.0, 8.0],
            [5.0, 7.0, 5.0, 10.0]
        ])
        .unwrap();
        let ctx = MeasureContext::new(&d, 0);
        let z: NodeSet = [2usize, 3].iter().collect();
        assert_eq!(gauss_partial_corr(&ctx, 0, 1, z), Err(MeasureError::SingularDesign));
    }
}
