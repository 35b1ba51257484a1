//! Precoder and combiner design, spectral efficiency and QPSK bit error rate.
//!
//! The fully-digital reference uses water-filling over the right singular
//! vectors of `H` and the linear MMSE combiner. The hybrid design picks its
//! analog beams directly from the strongest beamspace coefficients and fits
//! the baseband stages by least squares (precoder) and weighted least
//! squares (combiner).

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    c, chol_logdet, cholesky, complex_gaussian, frob_sq, hermitian_part, pinv, rank, real, svd_sorted, CMat, CVec,
};

/// Relative singular-value cutoff for rank decisions.
const RANK_CUTOFF: f64 = 1e-10;

/// Water-filling precoder `F_opt = V₁ P^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    /// `N_T × N_S`.
    pub f_opt: CMat,
    /// Per-stream powers `p_i`.
    pub powers: Vec<f64>,
    /// Water level `λ`.
    pub lambda: f64,
    /// Leading `N_S` singular values of `H`.
    pub singular_values: Vec<f64>,
}

/// Water-filling levels `p_i = max(0, λ − t_i)` with `Σ p_i = budget`.
///
/// `λ` is bracketed in `[0, max t_i + budget]` and bisected; the final
/// level is recomputed in closed form over the active set so the budget is
/// met to rounding.
pub fn water_fill(thresholds: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let used = |lambda: f64| thresholds.iter().map(|&t| (lambda - t).max(0.0)).sum::<f64>();
    let t_max = thresholds.iter().copied().fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, t_max + budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    let active: Vec<f64> = thresholds.iter().copied().filter(|&t| t < lambda).collect();
    if !active.is_empty() {
        lambda = (budget + active.iter().sum::<f64>()) / active.len() as f64;
    }
    let powers = thresholds.iter().map(|&t| (lambda - t).max(0.0)).collect();
    (powers, lambda)
}

/// Fully-digital precoder with water-filling over `N_S` streams and total
/// power `P_T·N_S`.
pub fn fully_digital_precoder(h: &CMat, n_s: usize, p_t: f64, noise_var: f64) -> Result<WaterFilling> {
    if n_s == 0 {
        return Err(Error::Validation("need at least one stream".into()));
    }
    let r = rank(h, RANK_CUTOFF);
    if n_s > r {
        return Err(Error::Rank(format!("{n_s} streams requested but rank(H) = {r}")));
    }
    let (_, s, v) = svd_sorted(h);
    let s: Vec<f64> = s[..n_s].to_vec();
    let thresholds: Vec<f64> = s.iter().map(|&x| noise_var / (x * x)).collect();
    let (powers, lambda) = water_fill(&thresholds, p_t * n_s as f64);
    let mut f_opt = v.columns(0, n_s).into_owned();
    for (i, &p) in powers.iter().enumerate() {
        f_opt.column_mut(i).scale_mut(p.sqrt());
    }
    Ok(WaterFilling {
        f_opt,
        powers,
        lambda,
        singular_values: s,
    })
}

/// Linear MMSE combiner and output covariance for precoder `f`:
///
/// ```text
/// W_M  = H F (F^H H^H H F + N_S σ² I)⁻¹
/// R_yy = (1/N_S)(H F F^H H^H + N_S σ² I)
/// ```
pub fn mmse_combiner(h: &CMat, f: &CMat, noise_var: f64, n_s: usize) -> Result<(CMat, CMat)> {
    if !(noise_var > 0.0) {
        return Err(Error::Domain(
            "the MMSE combiner needs a positive noise variance".into(),
        ));
    }
    let hf = h * f;
    let ns = n_s as f64;
    let mut inner = hf.ad_mul(&hf);
    for i in 0..inner.nrows() {
        inner[(i, i)] += real(ns * noise_var);
    }
    let chol = cholesky(&hermitian_part(&inner))
        .ok_or_else(|| Error::numerical(0, "MMSE combiner matrix is not positive definite"))?;
    // W_M = HF·inner⁻¹ = (inner⁻¹ (HF)^H)^H
    let w_m = chol.solve(&hf.adjoint()).adjoint();
    let mut r_yy = &hf * hf.adjoint();
    for i in 0..r_yy.nrows() {
        r_yy[(i, i)] += real(ns * noise_var);
    }
    Ok((w_m, hermitian_part(&(r_yy / real(ns)))))
}

/// The four stages of a transceiver: `x̂ = W_BB^H W_RF^H (H F_RF F_BB x + n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridStages {
    pub f_rf: CMat,
    pub f_bb: CMat,
    pub w_rf: CMat,
    pub w_bb: CMat,
}

impl HybridStages {
    /// Fully-digital transceiver expressed with identity baseband stages.
    pub fn digital(f: CMat, w: CMat) -> Self {
        let (ns_t, ns_r) = (f.ncols(), w.ncols());
        Self {
            f_rf: f,
            f_bb: CMat::identity(ns_t, ns_t),
            w_rf: w,
            w_bb: CMat::identity(ns_r, ns_r),
        }
    }

    pub fn precoder(&self) -> CMat {
        &self.f_rf * &self.f_bb
    }

    pub fn combiner(&self) -> CMat {
        &self.w_rf * &self.w_bb
    }

    pub fn n_streams(&self) -> usize {
        self.f_bb.ncols()
    }
}

/// Analog beam indices chosen from the beamspace estimate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RfBeams {
    /// AoD grid indices (columns of `A_T`).
    pub tx: Vec<usize>,
    /// AoA grid indices (columns of `A_R`).
    pub rx: Vec<usize>,
}

/// Scans `|ĥ_b|` in descending order and maps each index `s` to its AoA
/// row `k = s mod G_R` and AoD column `j = ⌊s / G_R⌋`, keeping the first
/// `n_rf` distinct indices per side.
pub fn select_rf_beams(h_b: &CVec, g_r: usize, n_rf: usize) -> Result<RfBeams> {
    if g_r == 0 || h_b.len() % g_r != 0 {
        return Err(Error::Dimension(format!(
            "beamspace length {} is not a multiple of G_R = {g_r}",
            h_b.len()
        )));
    }
    let mut order: Vec<usize> = (0..h_b.len()).collect();
    order.sort_by(|&a, &b| h_b[b].norm_sqr().total_cmp(&h_b[a].norm_sqr()));
    let (mut tx, mut rx) = (Vec::with_capacity(n_rf), Vec::with_capacity(n_rf));
    for s in order {
        let (k, j) = (s % g_r, s / g_r);
        if tx.len() < n_rf && !tx.contains(&j) {
            tx.push(j);
        }
        if rx.len() < n_rf && !rx.contains(&k) {
            rx.push(k);
        }
        if tx.len() == n_rf && rx.len() == n_rf {
            return Ok(RfBeams { tx, rx });
        }
    }
    Err(Error::Rank(format!(
        "beamspace grid offers only {} AoD and {} AoA indices for {n_rf} RF chains",
        tx.len(),
        rx.len()
    )))
}

fn columns_of(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])])
}

/// `F_RF` from the chosen beams and `F_BB = F_RF† F_opt`, rescaled so that
/// `‖F_RF F_BB‖_F² = P_T·N_S`.
pub fn hybrid_precoder(a_t: &CMat, beams: &[usize], f_opt: &CMat, p_t: f64) -> Result<(CMat, CMat)> {
    let n_s = f_opt.ncols();
    let f_rf = columns_of(a_t, beams);
    let r = rank(&f_rf, RANK_CUTOFF);
    if r < n_s {
        return Err(Error::Rank(format!(
            "analog precoder has rank {r} < {n_s} streams; use a larger grid or fewer streams"
        )));
    }
    let mut f_bb = pinv(&f_rf, RANK_CUTOFF) * f_opt;
    let energy = frob_sq(&(&f_rf * &f_bb));
    if energy > 0.0 {
        f_bb *= real((p_t * n_s as f64 / energy).sqrt());
    }
    Ok((f_rf, f_bb))
}

/// `W_RF` from the chosen beams and the weighted-LS baseband combiner
/// `W_BB = (W_RF^H R_yy W_RF)⁻¹ W_RF^H R_yy W_M`.
pub fn hybrid_combiner(a_r: &CMat, beams: &[usize], r_yy: &CMat, w_m: &CMat) -> Result<(CMat, CMat)> {
    let w_rf = columns_of(a_r, beams);
    let weighted = w_rf.ad_mul(r_yy);
    let gram = hermitian_part(&(&weighted * &w_rf));
    let chol = cholesky(&gram).ok_or_else(|| Error::Rank("analog combiner columns are linearly dependent".into()))?;
    let w_bb = chol.solve(&(weighted * w_m));
    Ok((w_rf, w_bb))
}

/// Hybrid stages from a beamspace estimate with the fully-digital
/// references `F_opt`, `W_M` and `R_yy` already computed.
#[allow(clippy::too_many_arguments)]
pub fn hybrid_from_beamspace(
    h_b: &CVec,
    a_t: &CMat,
    a_r: &CMat,
    n_rf: usize,
    f_opt: &CMat,
    r_yy: &CMat,
    w_m: &CMat,
    p_t: f64,
) -> Result<HybridStages> {
    let beams = select_rf_beams(h_b, a_r.ncols(), n_rf)?;
    let (f_rf, f_bb) = hybrid_precoder(a_t, &beams.tx, f_opt, p_t)?;
    let (w_rf, w_bb) = hybrid_combiner(a_r, &beams.rx, r_yy, w_m)?;
    Ok(HybridStages { f_rf, f_bb, w_rf, w_bb })
}

/// Everything a hybrid link design produces.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverDesign {
    pub hybrid: HybridStages,
    pub water_filling: WaterFilling,
    /// MMSE combiner and output covariance for the hybrid precoder.
    pub w_m: CMat,
    pub r_yy: CMat,
    pub beams: RfBeams,
}

/// End-to-end hybrid design from channel knowledge `h` (true or
/// reconstructed) and beamspace coefficients `h_b`.
///
/// The combiner targets are computed for the hybrid precoder actually
/// transmitted, `F = F_RF F_BB`.
#[allow(clippy::too_many_arguments)]
pub fn design_hybrid(
    h: &CMat,
    h_b: &CVec,
    a_t: &CMat,
    a_r: &CMat,
    n_rf: usize,
    n_s: usize,
    p_t: f64,
    noise_var: f64,
) -> Result<TransceiverDesign> {
    let water_filling = fully_digital_precoder(h, n_s, p_t, noise_var)?;
    let beams = select_rf_beams(h_b, a_r.ncols(), n_rf)?;
    let (f_rf, f_bb) = hybrid_precoder(a_t, &beams.tx, &water_filling.f_opt, p_t)?;
    let (w_m, r_yy) = mmse_combiner(h, &(&f_rf * &f_bb), noise_var, n_s)?;
    let (w_rf, w_bb) = hybrid_combiner(a_r, &beams.rx, &r_yy, &w_m)?;
    Ok(TransceiverDesign {
        hybrid: HybridStages { f_rf, f_bb, w_rf, w_bb },
        water_filling,
        w_m,
        r_yy,
        beams,
    })
}

/// Fully-digital reference: water-filling precoder and MMSE combiner.
pub fn design_digital(h: &CMat, n_s: usize, p_t: f64, noise_var: f64) -> Result<HybridStages> {
    let wf = fully_digital_precoder(h, n_s, p_t, noise_var)?;
    let (w_m, _) = mmse_combiner(h, &wf.f_opt, noise_var, n_s)?;
    Ok(HybridStages::digital(wf.f_opt, w_m))
}

/// Achievable spectral efficiency
/// `log₂ det(I + (1/N_S) R_n⁻¹ H_eq H_eq^H)` in bits/s/Hz, with
/// `H_eq = W^H H F` and `R_n = σ² W^H W`.
pub fn ase(h: &CMat, stages: &HybridStages, noise_var: f64) -> Result<f64> {
    let w = stages.combiner();
    let f = stages.precoder();
    let n_s = stages.n_streams() as f64;
    let h_eq = w.ad_mul(&(h * f));
    let r_n = hermitian_part(&(w.ad_mul(&w) * real(noise_var)));
    let noise = cholesky(&r_n).ok_or_else(|| Error::Rank("effective noise covariance is singular".into()))?;
    let total = hermitian_part(&(&r_n + &h_eq * h_eq.adjoint() / real(n_s)));
    let signal = cholesky(&total).ok_or_else(|| Error::numerical(0, "output covariance is not positive definite"))?;
    let nats = chol_logdet(&signal) - chol_logdet(&noise);
    Ok((nats / std::f64::consts::LN_2).max(0.0))
}

/// Bit error rate of Gray-coded QPSK over `n_symbols` stream vectors.
///
/// Symbols are `((1−2b₀) + j(1−2b₁)) / √(2N_S)` so `E{x x^H} = I/N_S`;
/// each combiner output is sliced by the signs of its real and imaginary
/// parts.
pub fn ber_qpsk<R: Rng + ?Sized>(
    h: &CMat,
    stages: &HybridStages,
    noise_var: f64,
    n_symbols: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_symbols == 0 {
        return Err(Error::Validation("need at least one symbol".into()));
    }
    let n_s = stages.n_streams();
    let amp = 1.0 / (2.0 * n_s as f64).sqrt();
    let mut bits = vec![false; 2 * n_s * n_symbols];
    for b in bits.iter_mut() {
        *b = rng.random_bool(0.5);
    }
    let bit = |col: usize, stream: usize, q: usize| bits[(col * n_s + stream) * 2 + q];
    let x = CMat::from_fn(n_s, n_symbols, |i, col| {
        let re = if bit(col, i, 0) { -amp } else { amp };
        let im = if bit(col, i, 1) { -amp } else { amp };
        c(re, im)
    });
    let mut y = h * (stages.precoder() * x);
    if noise_var > 0.0 {
        y += complex_gaussian(rng, h.nrows(), n_symbols, noise_var);
    }
    let z = stages.combiner().ad_mul(&y);
    let mut errors = 0usize;
    for col in 0..n_symbols {
        for i in 0..n_s {
            let v = z[(i, col)];
            errors += usize::from((v.re < 0.0) != bit(col, i, 0));
            errors += usize::from((v.im < 0.0) != bit(col, i, 1));
        }
    }
    Ok(errors as f64 / bits.len() as f64)
}
