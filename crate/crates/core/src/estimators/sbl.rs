//! Sparse Bayesian learning by expectation maximization.
//!
//! Each beamspace coefficient has a zero-mean complex Gaussian prior with
//! its own variance `γ_i`. One EM iteration with `Γ = diag(γ)` computes
//!
//! ```text
//! E-step:  R_b = (Φ̃^H R_v⁻¹ Φ̃ + Γ⁻¹)⁻¹,   μ_b = R_b Φ̃^H R_v⁻¹ y
//! M-step:  γ_i = R_b(i,i) + (1/M) Σ_m |μ_b(i,m)|²
//! ```
//!
//! for `M` measurement vectors sharing one support (`M = 1` is plain BL).
//! When there are fewer measurements than coefficients the E-step runs in
//! the measurement domain via the Woodbury identity:
//!
//! ```text
//! R_y = R_v + Φ̃ Γ Φ̃^H,   μ_b = Γ Φ̃^H R_y⁻¹ y,   R_b = Γ − Γ Φ̃^H R_y⁻¹ Φ̃ Γ
//! ```

use serde::{Deserialize, Serialize};

use crate::beamspace::SensingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{chol_logdet, cholesky, hermitian_part, real, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionPath {
    /// Measurement domain when `rows < cols`, coefficient domain otherwise.
    #[default]
    Auto,
    Measurement,
    Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlConfig {
    /// Convergence threshold on `‖Γ^{(j)} − Γ^{(j−1)}‖_F`.
    pub epsilon: f64,
    pub k_max: usize,
    /// Hyperparameters are clipped from below at this value.
    pub gamma_floor: f64,
    pub path: InversionPath,
    /// Keep `γ`, `μ_b` and the evidence of every iteration.
    pub record_trace: bool,
    /// Form the full posterior covariance at the end (`G × G`).
    pub full_covariance: bool,
}

impl Default for BlConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            k_max: 50,
            gamma_floor: 1e-12,
            path: InversionPath::Auto,
            record_trace: false,
            full_covariance: false,
        }
    }
}

impl BlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.k_max == 0 || !(self.gamma_floor > 0.0) {
            return Err(Error::Config(
                "BL needs epsilon > 0, k_max >= 1 and gamma_floor > 0".into(),
            ));
        }
        Ok(())
    }
}

/// EM iterate after convergence (or after `k_max` iterations).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterState {
    pub gamma_hat: Vec<f64>,
    /// Posterior mean, `G × M`.
    pub mu_b: CMat,
    /// Diagonal of the posterior covariance.
    pub r_b_diag: Vec<f64>,
    /// Full posterior covariance, if requested.
    pub r_b: Option<CMat>,
    /// Number of EM updates performed.
    pub iteration: usize,
    /// `−log det R_y − (1/M) Σ_m y_m^H R_y⁻¹ y_m` at `gamma_hat`
    /// (constant dropped).
    pub loglik: f64,
    pub converged: bool,
}

/// One EM iteration: the hyperparameters used by its E-step, the posterior
/// mean they produce and their evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct BlIteration {
    pub gamma: Vec<f64>,
    pub mu_b: CMat,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlOutput {
    /// Beamspace estimate, `G × M` (the final posterior mean).
    pub h_b: CMat,
    pub state: HyperparameterState,
    pub trace: Vec<BlIteration>,
}

struct EStep {
    mu: CMat,
    r_b_diag: Vec<f64>,
    loglik: f64,
}

/// Precomputed quantities for the coefficient-domain path.
struct CoefficientDomain {
    /// `Φ̃^H R_v⁻¹ Φ̃`.
    info: CMat,
    /// `Φ̃^H R_v⁻¹ Y`.
    projected: CMat,
    /// `Y^H R_v⁻¹ Y` summed over columns, and `log det R_v`.
    y_quad: f64,
    logdet_rv: f64,
}

fn measurement_estep<S: SensingMatrix + ?Sized>(
    phi: &S,
    r_v: &CMat,
    y: &CMat,
    gamma: &[f64],
    iteration: usize,
) -> Result<(EStep, CMat)> {
    let r_y = hermitian_part(&(phi.weighted_gram(gamma) + r_v));
    let chol = cholesky(&r_y).ok_or_else(|| Error::numerical(iteration, "R_y is not positive definite"))?;
    let b = hermitian_part(&chol.inverse());
    let m = y.ncols();
    let mut mu = CMat::zeros(gamma.len(), m);
    let mut quad = 0.0;
    for col in 0..m {
        let yc = y.column(col).into_owned();
        let by: CVec = &b * &yc;
        quad += yc.dotc(&by).re;
        let mut back = phi.apply_adjoint(&by);
        for (v, &g) in back.iter_mut().zip(gamma) {
            *v *= g;
        }
        mu.set_column(col, &back);
    }
    let q = phi.quadratic_diag(&b);
    let r_b_diag = gamma.iter().zip(&q).map(|(&g, &qi)| g - g * g * qi).collect();
    let loglik = -chol_logdet(&chol) - quad / m as f64;
    Ok((EStep { mu, r_b_diag, loglik }, b))
}

fn coefficient_estep(pre: &CoefficientDomain, gamma: &[f64], m: usize, iteration: usize) -> Result<(EStep, CMat)> {
    let mut j = pre.info.clone();
    for (i, &g) in gamma.iter().enumerate() {
        j[(i, i)] += real(1.0 / g);
    }
    let chol = cholesky(&hermitian_part(&j))
        .ok_or_else(|| Error::numerical(iteration, "posterior precision is not positive definite"))?;
    let r_b = hermitian_part(&chol.inverse());
    let mu = &r_b * &pre.projected;
    // log det R_y = log det R_v + log det Γ + log det J
    let logdet_gamma: f64 = gamma.iter().map(|g| g.ln()).sum();
    let logdet_ry = pre.logdet_rv + logdet_gamma + chol_logdet(&chol);
    // y^H R_y⁻¹ y = y^H R_v⁻¹ y − (Φ̃^H R_v⁻¹ y)^H R_b (Φ̃^H R_v⁻¹ y)
    let mut quad = pre.y_quad;
    for col in 0..m {
        quad -= pre.projected.column(col).dotc(&mu.column(col)).re;
    }
    let r_b_diag = r_b.diagonal().iter().map(|z| z.re).collect();
    Ok((
        EStep {
            mu,
            r_b_diag,
            loglik: -logdet_ry - quad / m as f64,
        },
        r_b,
    ))
}

fn use_measurement_path<S: SensingMatrix + ?Sized>(phi: &S, path: InversionPath) -> bool {
    match path {
        InversionPath::Auto => phi.nrows() < phi.ncols(),
        InversionPath::Measurement => true,
        InversionPath::Coefficient => false,
    }
}

/// Multiple-measurement-vector sparse Bayesian learning on the columns of
/// `y` (`rows(Φ̃) × M`).
pub fn estimate_mbl<S: SensingMatrix + ?Sized>(y: &CMat, phi: &S, r_v: &CMat, config: &BlConfig) -> Result<BlOutput> {
    config.validate()?;
    let (rows, g) = (phi.nrows(), phi.ncols());
    if y.nrows() != rows || y.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "Y is {}×{}, Φ̃ has {rows} rows",
            y.nrows(),
            y.ncols()
        )));
    }
    if r_v.shape() != (rows, rows) {
        return Err(Error::Dimension(format!("R_v must be {rows}×{rows}")));
    }
    let m = y.ncols();
    let measurement = use_measurement_path(phi, config.path);

    let coefficient = if measurement {
        None
    } else {
        let chol = cholesky(r_v).ok_or_else(|| Error::Rank("R_v is not positive definite".into()))?;
        let dense = phi.to_dense();
        let weighted = chol.solve(&dense); // R_v⁻¹ Φ̃
        let ry = chol.solve(y);
        let y_quad = (0..m).map(|c| y.column(c).dotc(&ry.column(c)).re).sum();
        Some(CoefficientDomain {
            info: hermitian_part(&dense.ad_mul(&weighted)),
            projected: weighted.ad_mul(y),
            y_quad,
            logdet_rv: chol_logdet(&chol),
        })
    };
    let estep = |gamma: &[f64], iteration: usize| -> Result<(EStep, CMat)> {
        match &coefficient {
            None => measurement_estep(phi, r_v, y, gamma, iteration),
            Some(pre) => coefficient_estep(pre, gamma, m, iteration),
        }
    };

    let mut gamma = vec![1.0; g];
    let mut trace = Vec::new();
    let mut iteration = 0;
    let mut converged = false;
    while iteration < config.k_max {
        let (step, _) = estep(&gamma, iteration)?;
        let mut next = Vec::with_capacity(g);
        for i in 0..g {
            let power: f64 = (0..m).map(|c| step.mu[(i, c)].norm_sqr()).sum::<f64>() / m as f64;
            next.push((step.r_b_diag[i] + power).max(config.gamma_floor));
        }
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::numerical(iteration, "non-finite hyperparameter update"));
        }
        let change: f64 = next
            .iter()
            .zip(&gamma)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if config.record_trace {
            trace.push(BlIteration {
                gamma: std::mem::take(&mut gamma),
                mu_b: step.mu,
                loglik: step.loglik,
            });
        }
        gamma = next;
        iteration += 1;
        if change <= config.epsilon {
            converged = true;
            break;
        }
    }

    let (last, extra) = estep(&gamma, iteration)?;
    let r_b = if config.full_covariance {
        Some(if measurement {
            full_posterior_covariance(phi, &gamma, &extra)
        } else {
            extra
        })
    } else {
        None
    };
    Ok(BlOutput {
        h_b: last.mu.clone(),
        state: HyperparameterState {
            gamma_hat: gamma,
            mu_b: last.mu,
            r_b_diag: last.r_b_diag,
            r_b,
            iteration,
            loglik: last.loglik,
            converged,
        },
        trace,
    })
}

/// `Γ − Γ Φ̃^H B Φ̃ Γ` with `B = R_y⁻¹`.
fn full_posterior_covariance<S: SensingMatrix + ?Sized>(phi: &S, gamma: &[f64], b: &CMat) -> CMat {
    let mut pg = phi.to_dense();
    for (j, &g) in gamma.iter().enumerate() {
        pg.column_mut(j).scale_mut(g);
    }
    let mut r_b = -(pg.ad_mul(&(b * &pg)));
    for (i, &g) in gamma.iter().enumerate() {
        r_b[(i, i)] += real(g);
    }
    hermitian_part(&r_b)
}

/// Single-measurement sparse Bayesian learning; identical to
/// [`estimate_mbl`] with one column.
pub fn estimate_bl<S: SensingMatrix + ?Sized>(y: &CVec, phi: &S, r_v: &CMat, config: &BlConfig) -> Result<BlOutput> {
    let y = CMat::from_column_slice(y.len(), 1, y.as_slice());
    estimate_mbl(&y, phi, r_v, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamspace::KroneckerSensing;
    use crate::linalg::{c, complex_gaussian, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn column(m: &CMat) -> CVec {
        m.column(0).into_owned()
    }

    fn traced() -> BlConfig {
        BlConfig {
            record_trace: true,
            ..Default::default()
        }
    }

    #[test]
    fn zero_observation_decays_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = complex_gaussian(&mut rng, 8, 20, 1.0);
        let r_v = CMat::identity(8, 8) * real(0.1);
        let out = estimate_bl(&CVec::zeros(8), &phi, &r_v, &traced()).unwrap();
        assert!(out.h_b.iter().all(|z| z.norm() == 0.0));
        for w in out.trace.windows(2) {
            for (a, b) in w[1].gamma.iter().zip(&w[0].gamma) {
                assert!(a <= b);
            }
        }
        assert!(out.state.gamma_hat.iter().all(|&g| g < 1.0));
    }

    #[test]
    fn noiseless_single_atom_concentrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = complex_gaussian(&mut rng, 12, 30, 1.0);
        let y = phi.column(4) * c(1.5, -0.5);
        let r_v = CMat::identity(12, 12) * real(1e-10);
        let cfg = BlConfig {
            k_max: 500,
            ..Default::default()
        };
        let out = estimate_bl(&y, &phi, &r_v, &cfg).unwrap();
        let total: f64 = out.h_b.iter().map(|z| z.norm_sqr()).sum();
        let off: f64 = total - out.h_b[(4, 0)].norm_sqr();
        assert!(off < 1e-6 * total, "off-support fraction {}", off / total);
    }

    #[test]
    fn evidence_is_non_decreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = complex_gaussian(&mut rng, 16, 40, 1.0);
        let mut h = CVec::zeros(40);
        h[3] = c(1.0, 0.5);
        h[17] = c(-0.7, 0.2);
        let y = &phi * &h + column(&complex_gaussian(&mut rng, 16, 1, 0.01));
        let r_v = CMat::identity(16, 16) * real(0.01);
        let out = estimate_bl(&y, &phi, &r_v, &traced()).unwrap();
        let mut ll: Vec<f64> = out.trace.iter().map(|t| t.loglik).collect();
        ll.push(out.state.loglik);
        for w in ll.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn both_inversion_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = complex_gaussian(&mut rng, 10, 24, 1.0);
        let y = column(&complex_gaussian(&mut rng, 10, 1, 1.0));
        let r_v = CMat::identity(10, 10) * real(0.2);
        let run = |path| {
            let cfg = BlConfig {
                path,
                full_covariance: true,
                k_max: 20,
                ..Default::default()
            };
            estimate_bl(&y, &phi, &r_v, &cfg).unwrap()
        };
        let a = run(InversionPath::Measurement);
        let b = run(InversionPath::Coefficient);
        assert!(rel_err(&a.h_b, &b.h_b) < 1e-8);
        assert!(rel_err(a.state.r_b.as_ref().unwrap(), b.state.r_b.as_ref().unwrap()) < 1e-8);
        assert!((a.state.loglik - b.state.loglik).abs() < 1e-8 * a.state.loglik.abs());
    }

    #[test]
    fn single_column_mbl_is_bl() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = complex_gaussian(&mut rng, 10, 24, 1.0);
        let y = complex_gaussian(&mut rng, 10, 1, 1.0);
        let r_v = CMat::identity(10, 10) * real(0.2);
        let bl = estimate_bl(&column(&y), &phi, &r_v, &traced()).unwrap();
        let mbl = estimate_mbl(&y, &phi, &r_v, &traced()).unwrap();
        assert_eq!(bl, mbl);
    }

    #[test]
    fn repeated_columns_match_single_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi = complex_gaussian(&mut rng, 10, 24, 1.0);
        let y = complex_gaussian(&mut rng, 10, 1, 1.0);
        let batch = CMat::from_fn(10, 4, |i, _| y[(i, 0)]);
        let r_v = CMat::identity(10, 10) * real(0.2);
        let one = estimate_mbl(&y, &phi, &r_v, &BlConfig::default()).unwrap();
        let four = estimate_mbl(&batch, &phi, &r_v, &BlConfig::default()).unwrap();
        for col in 0..4 {
            let diff = (four.h_b.column(col) - one.h_b.column(0)).norm();
            assert!(diff < 1e-10 * one.h_b.norm());
        }
    }

    #[test]
    fn structured_operator_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tx = complex_gaussian(&mut rng, 3, 5, 1.0);
        let rx = complex_gaussian(&mut rng, 4, 6, 1.0);
        let k = KroneckerSensing::new(tx, rx);
        let dense = k.to_dense();
        let y = column(&complex_gaussian(&mut rng, 12, 1, 1.0));
        let r_v = CMat::identity(12, 12) * real(0.1);
        let a = estimate_bl(&y, &k, &r_v, &BlConfig::default()).unwrap();
        let b = estimate_bl(&y, &dense, &r_v, &BlConfig::default()).unwrap();
        assert!(rel_err(&a.h_b, &b.h_b) < 1e-9);
        assert_eq!(a.state.iteration, b.state.iteration);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = BlConfig {
            k_max: 0,
            ..Default::default()
        };
        let phi = CMat::identity(2, 3);
        assert!(estimate_bl(&CVec::zeros(2), &phi, &CMat::identity(2, 2), &cfg).is_err());
    }
}
