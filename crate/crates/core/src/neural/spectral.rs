use ndarray::{Array1, Array2, ArrayView2};

/// Lower bound on the singular value estimate; keeps the zero matrix finite.
pub const SIGMA_FLOOR: f64 = 1e-12;

fn normalize(mut v: Array1<f64>) -> Array1<f64> {
    let norm = v.dot(&v).sqrt().max(1e-12);
    v /= norm;
    v
}

/// Power-iteration estimate of the largest singular value of `weight`.
///
/// `power_u` (length = rows) is updated in place so callers can carry it
/// across steps. Returns `σ̂`.
pub fn power_iteration(weight: ArrayView2<'_, f64>, power_u: &mut Array1<f64>, iterations: usize) -> f64 {
    let mut v = normalize(weight.t().dot(power_u));
    for _ in 0..iterations {
        v = normalize(weight.t().dot(power_u));
        *power_u = normalize(weight.dot(&v));
    }
    power_u.dot(&weight.dot(&v)).max(SIGMA_FLOOR)
}

/// `weight / σ̂` together with the updated power vector and `σ̂`.
pub fn spectral_normalize(
    weight: ArrayView2<'_, f64>,
    power_u: &Array1<f64>,
    iterations: usize,
) -> (Array2<f64>, Array1<f64>, f64) {
    assert!(iterations >= 1, "spectral normalization needs at least one power iteration");
    let mut u = power_u.clone();
    let sigma = power_iteration(weight, &mut u, iterations);
    (weight.mapv(|w| w / sigma), u, sigma)
}
