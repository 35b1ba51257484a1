//! Least-squares and linear-MMSE estimation of `vec(H)` from `y = Φ vec(H) + v`.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, frob_sq, hpd_inverse, pinv, CMat, CVec};

/// Relative singular-value cutoff of the LS pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Minimum-norm least squares with a precomputed pseudo-inverse.
#[derive(Debug, Clone)]
pub struct LsEstimator {
    pub pinv: CMat,
}

impl LsEstimator {
    pub fn new(phi: &CMat) -> Self {
        Self {
            pinv: pinv(phi, PINV_CUTOFF),
        }
    }

    pub fn estimate(&self, y: &CVec) -> CVec {
        &self.pinv * y
    }
}

/// `ĥ = Φ† y`.
pub fn estimate_ls(y: &CVec, phi: &CMat) -> CVec {
    LsEstimator::new(phi).estimate(y)
}

/// Linear MMSE estimator `(R_h⁻¹ + Φ^H R_v⁻¹ Φ)⁻¹ Φ^H R_v⁻¹`, stored as a
/// single matrix.
#[derive(Debug, Clone)]
pub struct MmseEstimator {
    pub gain: CMat,
}

impl MmseEstimator {
    pub fn new(phi: &CMat, r_h: &CMat, r_v: &CMat) -> Result<Self> {
        if r_h.nrows() != phi.ncols() || r_v.nrows() != phi.nrows() {
            return Err(Error::Dimension(format!(
                "Φ is {}×{}, R_h is {}×{}, R_v is {}×{}",
                phi.nrows(),
                phi.ncols(),
                r_h.nrows(),
                r_h.ncols(),
                r_v.nrows(),
                r_v.ncols()
            )));
        }
        let r_h_inv =
            hpd_inverse(r_h).ok_or_else(|| Error::Rank("prior covariance R_h is not positive definite".into()))?;
        let r_v_chol =
            cholesky(r_v).ok_or_else(|| Error::Rank("noise covariance R_v is not positive definite".into()))?;
        // Φ^H R_v⁻¹ = (R_v⁻¹ Φ)^H
        let weighted = r_v_chol.solve(phi).adjoint();
        let info = r_h_inv + &weighted * phi;
        let info_chol =
            cholesky(&info).ok_or_else(|| Error::numerical(0, "MMSE information matrix is not positive definite"))?;
        Ok(Self {
            gain: info_chol.solve(&weighted),
        })
    }

    pub fn estimate(&self, y: &CVec) -> CVec {
        &self.gain * y
    }
}

pub fn estimate_mmse(y: &CVec, phi: &CMat, r_h: &CMat, r_v: &CMat) -> Result<CVec> {
    Ok(MmseEstimator::new(phi, r_h, r_v)?.estimate(y))
}

/// `‖Ĥ − H‖_F² / ‖H‖_F²`.
pub fn nmse(h_hat: &CMat, h: &CMat) -> Result<f64> {
    if h_hat.shape() != h.shape() {
        return Err(Error::Dimension(format!(
            "estimate is {:?}, truth is {:?}",
            h_hat.shape(),
            h.shape()
        )));
    }
    let energy = frob_sq(h);
    if energy == 0.0 {
        return Err(Error::Domain("NMSE is undefined for a zero channel".into()));
    }
    Ok(frob_sq(&(h_hat - h)) / energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian, real};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn col(m: CMat) -> CVec {
        m.column(0).into_owned()
    }

    #[test]
    fn ls_recovers_invertible_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = complex_gaussian(&mut rng, 6, 6, 1.0);
        let h = col(complex_gaussian(&mut rng, 6, 1, 1.0));
        let h_hat = estimate_ls(&(&phi * &h), &phi);
        assert!((&h_hat - &h).norm() < 1e-8 * h.norm());
        assert_eq!(estimate_ls(&CVec::zeros(6), &phi), CVec::zeros(6));
    }

    #[test]
    fn ls_underdetermined_fits_data_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = complex_gaussian(&mut rng, 4, 9, 1.0);
        let y = col(complex_gaussian(&mut rng, 4, 1, 1.0));
        let h_hat = estimate_ls(&y, &phi);
        assert!((&phi * h_hat - &y).norm() < 1e-12);
    }

    #[test]
    fn mmse_scalar_wiener() {
        let one = CMat::identity(1, 1);
        let y = CVec::from_element(1, real(2.0));
        let h = estimate_mmse(&y, &one, &one, &one).unwrap();
        assert!((h[0] - real(1.0)).norm() < 1e-15);
    }

    #[test]
    fn mmse_approaches_ls_for_flat_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = complex_gaussian(&mut rng, 10, 4, 1.0);
        let y = col(complex_gaussian(&mut rng, 10, 1, 1.0));
        let r_h = CMat::identity(4, 4) * real(1e9);
        let r_v = CMat::identity(10, 10);
        let mmse = estimate_mmse(&y, &phi, &r_h, &r_v).unwrap();
        let ls = estimate_ls(&y, &phi);
        assert!((&mmse - &ls).norm() / ls.norm() < 1e-3);
    }

    #[test]
    fn mmse_shrinks_to_zero_for_huge_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = complex_gaussian(&mut rng, 5, 3, 1.0);
        let y = col(complex_gaussian(&mut rng, 5, 1, 1.0));
        let r_v = CMat::identity(5, 5) * real(1e12);
        let h = estimate_mmse(&y, &phi, &CMat::identity(3, 3), &r_v).unwrap();
        assert!(h.norm() < 1e-10);
    }

    #[test]
    fn mmse_rejects_singular_prior() {
        let phi = CMat::identity(2, 2);
        let r_h = CMat::zeros(2, 2);
        assert!(matches!(
            MmseEstimator::new(&phi, &r_h, &CMat::identity(2, 2)),
            Err(Error::Rank(_))
        ));
    }

    #[test]
    fn nmse_reference_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = complex_gaussian(&mut rng, 3, 4, 1.0);
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        assert!((nmse(&CMat::zeros(3, 4), &h).unwrap() - 1.0).abs() < 1e-15);
        assert!((nmse(&(&h * real(2.0)), &h).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(nmse(&h, &CMat::zeros(3, 4)), Err(Error::Domain(_))));
    }
}
