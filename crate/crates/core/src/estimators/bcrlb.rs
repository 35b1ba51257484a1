//! Bayesian Cramér–Rao lower bound for beamspace estimation.
//!
//! With prior `h_b ~ CN(0, Γ)` the Bayesian information is
//! `J_B = Φ̃^H R_v⁻¹ Φ̃ + Γ⁻¹`, and `Tr J_B⁻¹` lower-bounds the beamspace
//! MSE. `Tr Ψ J_B⁻¹ Ψ^H` is the matching bound on `‖Ĥ − H‖_F²`.

use crate::beamspace::SensingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, hermitian_part, hpd_inverse, real, vec_of, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct CrlbResult {
    /// Bayesian Fisher information, `G × G`. Empty when only the traces
    /// were computed.
    pub j_b: CMat,
    /// `Tr J_B⁻¹`.
    pub mse_bound_beamspace: f64,
    /// `Tr Ψ J_B⁻¹ Ψ^H`.
    pub mse_bound_channel: f64,
}

fn check_gamma(gamma: &[f64], g: usize) -> Result<()> {
    if gamma.len() != g {
        return Err(Error::Dimension(format!("γ has length {}, expected {g}", gamma.len())));
    }
    if !gamma.iter().all(|&x| x > 0.0 && x.is_finite()) {
        return Err(Error::Domain("oracle γ entries must be positive".into()));
    }
    Ok(())
}

/// Assembles `J_B` explicitly and inverts it.
pub fn bcrlb(phi: &CMat, r_v: &CMat, gamma: &[f64], psi: &CMat) -> Result<CrlbResult> {
    check_gamma(gamma, phi.ncols())?;
    let rv_chol = cholesky(r_v).ok_or_else(|| Error::Rank("R_v is not positive definite".into()))?;
    let mut j_b = hermitian_part(&phi.ad_mul(&rv_chol.solve(phi)));
    for (i, &g) in gamma.iter().enumerate() {
        j_b[(i, i)] += real(1.0 / g);
    }
    let j_inv = hpd_inverse(&j_b).ok_or_else(|| Error::numerical(0, "Bayesian information matrix is singular"))?;
    let beam: f64 = j_inv.diagonal().iter().map(|z| z.re).sum();
    let chan: f64 = (psi * &j_inv * psi.adjoint()).diagonal().iter().map(|z| z.re).sum();
    Ok(CrlbResult {
        j_b,
        mse_bound_beamspace: beam,
        mse_bound_channel: chan,
    })
}

/// Both bounds through the measurement-domain identity
/// `J_B⁻¹ = Γ − Γ Φ̃^H (R_v + Φ̃ Γ Φ̃^H)⁻¹ Φ̃ Γ`, without forming `J_B`.
pub fn bcrlb_traces<S: SensingMatrix + ?Sized>(phi: &S, r_v: &CMat, gamma: &[f64], psi: &CMat) -> Result<CrlbResult> {
    check_gamma(gamma, phi.ncols())?;
    let r_y = hermitian_part(&(phi.weighted_gram(gamma) + r_v));
    let b = hpd_inverse(&r_y).ok_or_else(|| Error::numerical(0, "R_y is not positive definite"))?;
    let q = phi.quadratic_diag(&b);
    let beam: f64 = gamma.iter().zip(&q).map(|(&g, &qi)| g - g * g * qi).sum();

    // Tr ΨΓΨ^H − Tr K B K^H with K = Ψ Γ Φ̃^H
    let prior: f64 = gamma
        .iter()
        .enumerate()
        .map(|(i, &g)| g * psi.column(i).norm_squared())
        .sum();
    let mut psi_gamma = psi.clone();
    for (j, &g) in gamma.iter().enumerate() {
        psi_gamma.column_mut(j).scale_mut(g);
    }
    let k = &psi_gamma * phi.to_dense().adjoint();
    let kb = &k * &b;
    let reduction: f64 = kb.iter().zip(k.iter()).map(|(a, b)| (a * b.conj()).re).sum();
    Ok(CrlbResult {
        j_b: CMat::zeros(0, 0),
        mse_bound_beamspace: beam,
        mse_bound_channel: prior - reduction,
    })
}

/// Per-trial oracle prior `γ_i = |h_b(i)|² + floor` from the
/// minimum-norm beamspace projection `h_b = Ψ† vec(H)`.
pub fn oracle_gamma(psi_pinv: &CMat, h: &CMat, floor: f64) -> Vec<f64> {
    (psi_pinv * vec_of(h)).iter().map(|z| z.norm_sqr() + floor).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prior_only_information() {
        let phi = CMat::zeros(4, 3);
        let gamma = [0.5, 1.5, 2.0];
        let psi = CMat::identity(3, 3);
        let out = bcrlb(&phi, &CMat::identity(4, 4), &gamma, &psi).unwrap();
        assert!((out.mse_bound_beamspace - 4.0).abs() < 1e-12);
        assert!((out.j_b[(0, 0)].re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bound_vanishes_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = complex_gaussian(&mut rng, 12, 5, 1.0);
        let r_v = CMat::identity(12, 12) * real(1e-12);
        let psi = CMat::identity(5, 5);
        let out = bcrlb(&phi, &r_v, &[1.0; 5], &psi).unwrap();
        assert!(out.mse_bound_beamspace < 1e-9);
    }

    #[test]
    fn explicit_and_woodbury_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = complex_gaussian(&mut rng, 8, 20, 1.0);
        let psi = complex_gaussian(&mut rng, 6, 20, 1.0);
        let r_v = CMat::identity(8, 8) * real(0.3);
        let gamma: Vec<f64> = (0..20).map(|i| 0.05 + 0.1 * (i % 5) as f64).collect();
        let a = bcrlb(&phi, &r_v, &gamma, &psi).unwrap();
        let b = bcrlb_traces(&phi, &r_v, &gamma, &psi).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        assert!(rel(b.mse_bound_beamspace, a.mse_bound_beamspace) < 1e-9);
        assert!(rel(b.mse_bound_channel, a.mse_bound_channel) < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let phi = CMat::identity(2, 2);
        let psi = CMat::identity(2, 2);
        assert!(bcrlb(&phi, &CMat::identity(2, 2), &[1.0, 0.0], &psi).is_err());
    }
}
