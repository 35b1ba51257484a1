//! Dense complex linear-algebra helpers shared by the estimators and the
//! transceiver design.
//!
//! Everything is built on `nalgebra` with `Complex64` scalars. Matrices are
//! stored column-major, which is also the vectorization order used for
//! `vec(·)` throughout the crate.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`]: reshapes a vector into a `rows × cols` matrix.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm_sq(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * real(0.5)
}

pub fn diag_real(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| real(x))))
}

pub fn cholesky(m: &CMat) -> Option<Cholesky<Complex64, Dyn>> {
    m.clone().cholesky()
}

/// Inverse of a Hermitian positive-definite matrix, re-symmetrized.
pub fn hpd_inverse(m: &CMat) -> Option<CMat> {
    cholesky(m).map(|ch| hermitian_part(&ch.inverse()))
}

/// `log det` of the matrix factored by `ch`.
pub fn chol_logdet(ch: &Cholesky<Complex64, Dyn>) -> f64 {
    ch.l_dirty().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum()
}

/// Thin SVD with singular values sorted in descending order.
/// Returns `(U, s, V)` such that `m = U diag(s) V^H`.
pub fn svd_sorted(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^H").adjoint();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u_sorted = CMat::from_fn(u.nrows(), order.len(), |i, k| u[(i, order[k])]);
    let v_sorted = CMat::from_fn(v.nrows(), order.len(), |i, k| v[(i, order[k])]);
    let s_sorted = order.iter().map(|&k| s[k]).collect();
    (u_sorted, s_sorted, v_sorted)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(m: &CMat, rel_cutoff: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > rel_cutoff * smax).count(),
        _ => 0,
    }
}

/// Moore–Penrose pseudo-inverse; singular values below `rel_cutoff · σ_max`
/// are treated as zero.
pub fn pinv(m: &CMat, rel_cutoff: f64) -> CMat {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return CMat::zeros(cols, rows);
    }
    let (u, s, v) = svd_sorted(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut out = CMat::zeros(cols, rows);
    if smax == 0.0 {
        return out;
    }
    for (k, &sk) in s.iter().enumerate() {
        if sk <= rel_cutoff * smax {
            break;
        }
        let vk = v.column(k);
        let uk = u.column(k);
        out += (vk * uk.adjoint()) * real(1.0 / sk);
    }
    out
}

/// Principal square root of a Hermitian PSD matrix via its eigendecomposition.
pub fn psd_sqrt(m: &CMat) -> CMat {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let q = &eig.eigenvectors;
    let d: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    q * diag_real(&d) * q.adjoint()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// i.i.d. `CN(0, variance)` entries, drawn in column-major order.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMat {
    let scale = (variance / 2.0).sqrt();
    let mut out = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            out[(i, j)] = c(scale * re, scale * im);
        }
    }
    out
}

/// Relative Frobenius distance `‖a − b‖_F / ‖b‖_F` (absolute when `b = 0`).
pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    let num = frob_sq(&(a - b)).sqrt();
    let den = frob_sq(b).sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
