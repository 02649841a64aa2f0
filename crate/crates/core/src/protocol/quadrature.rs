use std::f64::consts::PI;

/// Nodes and weights that average any trigonometric polynomial of degree
/// `<= 3` in `phi` exactly over a zero-mean Gaussian of width `sigma`.
///
/// The nodes are equispaced on the circle; the weights are the Fourier
/// series of the wrapped Gaussian truncated at the same degree, so some may
/// be negative for large `sigma`. Every detection probability in a trial
/// depends on the residual phase through `e^{i phi n_D}` with `n_D <= 2`, so
/// degree 2 suffices.
pub fn phase_quadrature(sigma: f64) -> Vec<(f64, f64)> {
    const NODES: usize = 7;
    const DEGREE: usize = 3;
    (0..NODES)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / NODES as f64;
            let series: f64 = (1..=DEGREE)
                .map(|k| {
                    let k = k as f64;
                    (-(k * k) * sigma * sigma / 2.0).exp() * (k * phi).cos()
                })
                .sum();
            (phi, (1.0 + 2.0 * series) / NODES as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_gaussian_moments() {
        for sigma in [0.0, 0.1, 0.35, 1.0, 3.0] {
            let q = phase_quadrature(sigma);
            let total: f64 = q.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14);
            for k in 1..=3 {
                let kf = k as f64;
                let c: f64 = q.iter().map(|(p, w)| w * (kf * p).cos()).sum();
                let s: f64 = q.iter().map(|(p, w)| w * (kf * p).sin()).sum();
                assert!((c - (-kf * kf * sigma * sigma / 2.0).exp()).abs() < 1e-13);
                assert!(s.abs() < 1e-13);
            }
        }
    }
}
