//! Trigonometric differentiation of periodic samples.
//!
//! Samples are assumed to sit at equidistant parameters `2πi/N`; derivatives
//! are taken with respect to that parameter.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// `order`-th derivative of the trigonometric interpolant of `values`.
///
/// For even `N` the Nyquist mode is dropped in odd-order derivatives so the
/// result stays real.
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);

    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        if n.is_multiple_of(2) && k == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let factor = Complex64::new(0.0, freq).powu(order);
        *c *= factor;
    }

    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}
