//! Uniform mid-point ADC model.

use crate::linalg::{c, CVec};

use super::config::AdcBits;

/// Quantizes one real value with `2^bits` levels of step `step`.
///
/// Thresholds sit at `u_i = (−N_q/2 + i)Δ` and each cell `(u_{i−1}, u_i]`
/// maps to its mid-point. Values beyond the outer thresholds clamp to the
/// extreme levels.
pub fn quantize_scalar(x: f64, bits: u32, step: f64) -> f64 {
    let n_q = (1u64 << bits) as f64;
    let i = (x / step + n_q / 2.0).ceil().clamp(1.0, n_q);
    (-n_q / 2.0 + i - 0.5) * step
}

/// Elementwise quantizer on real and imaginary parts. `Inf` is the identity.
pub fn quantize_uniform(y: &CVec, bits: AdcBits, step: f64) -> CVec {
    match bits {
        AdcBits::Inf => y.clone(),
        AdcBits::Finite(b) => y.map(|z| c(quantize_scalar(z.re, b, step), quantize_scalar(z.im, b, step))),
    }
}

/// Step that spans `[−range, range]` with `2^bits` cells.
pub fn step_for_range(range: f64, bits: u32) -> f64 {
    2.0 * range / (1u64 << bits) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    // Walks the threshold list instead of using the closed-form index.
    fn reference(x: f64, bits: u32, step: f64) -> f64 {
        let n = 1i64 << bits;
        let u = |i: i64| (-(n as f64) / 2.0 + i as f64) * step;
        for i in 1..n {
            if x <= u(i) {
                return (u(i - 1) + u(i)) / 2.0;
            }
        }
        (u(n - 1) + u(n)) / 2.0
    }

    #[test]
    fn infinite_resolution_is_identity() {
        let y = CVec::from_vec(vec![c(0.123456789, -7.5), c(1e-300, 3e10)]);
        assert_eq!(quantize_uniform(&y, AdcBits::Inf, 0.1), y);
    }

    #[test]
    fn one_bit_keeps_the_sign() {
        let y = CVec::from_vec(vec![c(2.3, -0.01), c(-5.0, 0.4)]);
        let q = quantize_uniform(&y, AdcBits::Finite(1), 0.8);
        assert_eq!(q[0], c(0.4, -0.4));
        assert_eq!(q[1], c(-0.4, 0.4));
    }

    #[test]
    fn three_bits_match_the_threshold_walk() {
        let step = 0.37;
        for k in -2000..=2000 {
            let x = k as f64 * 0.00137;
            assert!(
                (quantize_scalar(x, 3, step) - reference(x, 3, step)).abs() < 1e-12,
                "x = {x}"
            );
        }
    }

    #[test]
    fn levels_are_clamped() {
        assert_eq!(quantize_scalar(1e9, 2, 1.0), 1.5);
        assert_eq!(quantize_scalar(-1e9, 2, 1.0), -1.5);
        assert_eq!(step_for_range(2.0, 2), 1.0);
    }
}
