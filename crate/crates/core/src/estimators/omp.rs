//! Orthogonal matching pursuit over the columns of `Φ̃`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, CMat, CVec, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmpConfig {
    /// Stop once the residual energy changes by less than this between
    /// iterations (or falls below it). Usually the noise variance.
    pub epsilon_t: f64,
    pub max_iters: usize,
    /// Correlate against unit-norm columns instead of raw columns.
    pub normalize: bool,
}

impl Default for OmpConfig {
    fn default() -> Self {
        Self {
            epsilon_t: 1e-10,
            max_iters: 1000,
            normalize: true,
        }
    }
}

impl OmpConfig {
    pub fn with_epsilon(epsilon_t: f64) -> Self {
        Self {
            epsilon_t,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_t > 0.0) || self.max_iters == 0 {
            return Err(Error::Config("OMP needs epsilon_t > 0 and max_iters >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Sparse beamspace estimate.
    pub h_b: CVec,
    /// Selected column indices, in selection order.
    pub support: Vec<usize>,
    /// `‖r_i‖²` for `i = 0, 1, …` (entry 0 is `‖y‖²`).
    pub residual_energies: Vec<f64>,
    /// `max_iters` (or the column budget) ran out before the stopping rule.
    pub truncated: bool,
}

/// Runs OMP on `y ≈ Φ̃ h_b`.
///
/// Each iteration picks the column most correlated with the residual,
/// refits all selected coefficients by least squares and updates the
/// residual. The loop stops when `|‖r_{i−1}‖² − ‖r_i‖²| < ε_t` (with
/// `‖r_{−1}‖² = 0`) or when `‖r_i‖² < ε_t`.
pub fn estimate_omp(y: &CVec, phi: &CMat, config: &OmpConfig) -> Result<OmpResult> {
    config.validate()?;
    let (m, g) = phi.shape();
    if y.len() != m {
        return Err(Error::Dimension(format!("y has length {}, Φ̃ has {m} rows", y.len())));
    }
    let inv_norms: Vec<f64> = (0..g)
        .map(|j| {
            let n = phi.column(j).norm();
            if n == 0.0 {
                0.0
            } else if config.normalize {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();

    let mut residual = y.clone();
    let mut energies = vec![norm_sq(y)];
    let mut support: Vec<usize> = Vec::new();
    let mut selected = vec![false; g];
    let mut coeffs = CVec::zeros(0);
    let budget = config.max_iters.min(m).min(g);

    let stop = |prev: f64, cur: f64| (prev - cur).abs() < config.epsilon_t || cur < config.epsilon_t;
    let mut done = stop(0.0, energies[0]);
    while !done && support.len() < budget {
        let corr = phi.ad_mul(&residual);
        let best = (0..g)
            .filter(|&j| !selected[j])
            .map(|j| (j, corr[j].norm() * inv_norms[j]))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((j, score)) = best else { break };
        if score == 0.0 {
            break;
        }
        support.push(j);
        selected[j] = true;

        let sub = CMat::from_fn(m, support.len(), |r, k| phi[(r, support[k])]);
        coeffs = sub
            .clone()
            .svd(true, true)
            .solve(y, 1e-12)
            .map_err(|e| Error::numerical(support.len(), e))?;
        residual = y - &sub * &coeffs;
        let energy = norm_sq(&residual);
        let prev = *energies.last().unwrap();
        energies.push(energy);
        done = stop(prev, energy);
    }

    let mut h_b = CVec::from_element(g, ZERO);
    for (k, &j) in support.iter().enumerate() {
        h_b[j] = coeffs[k];
    }
    Ok(OmpResult {
        h_b,
        support,
        residual_energies: energies,
        truncated: !done,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, complex_gaussian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_atom_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = complex_gaussian(&mut rng, 20, 50, 1.0);
        let coef = c(0.3, -1.2);
        let y = phi.column(7) * coef;
        let out = estimate_omp(&y, &phi, &OmpConfig::default()).unwrap();
        assert_eq!(out.support, vec![7]);
        assert!((out.h_b[7] - coef).norm() < 1e-10);
        assert!(!out.truncated);
    }

    #[test]
    fn zero_observation_never_enters_the_loop() {
        let phi = CMat::identity(4, 6);
        let out = estimate_omp(&CVec::zeros(4), &phi, &OmpConfig::default()).unwrap();
        assert!(out.support.is_empty());
        assert_eq!(out.h_b, CVec::zeros(6));
        assert_eq!(out.residual_energies, vec![0.0]);
    }

    #[test]
    fn residual_energy_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = complex_gaussian(&mut rng, 30, 80, 1.0);
        let y = complex_gaussian(&mut rng, 30, 1, 1.0).column(0).into_owned();
        let out = estimate_omp(&y, &phi, &OmpConfig::with_epsilon(1e-3)).unwrap();
        for w in out.residual_energies.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn iteration_cap_sets_truncation_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = complex_gaussian(&mut rng, 30, 80, 1.0);
        let y = complex_gaussian(&mut rng, 30, 1, 1.0).column(0).into_owned();
        let cfg = OmpConfig {
            epsilon_t: 1e-12,
            max_iters: 3,
            normalize: true,
        };
        let out = estimate_omp(&y, &phi, &cfg).unwrap();
        assert_eq!(out.support.len(), 3);
        assert!(out.truncated);
    }
}
