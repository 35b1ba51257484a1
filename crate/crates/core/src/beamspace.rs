//! Angular dictionaries, pilot sounding design and the equivalent sensing
//! operator of the compressed channel-estimation model
//!
//! ```text
//! y = Φ vec(H) + v = Φ Ψ h_b + v = Φ̃ h_b + v
//! Φ  = (X_p^T F_RF^T) ⊗ (W_BB^H W_RF^H)
//! Ψ  = A_T^* ⊗ A_R
//! Φ̃ = (X_p^T F_RF^T A_T^*) ⊗ (W_BB^H W_RF^H A_R)
//! ```
//!
//! Vectorization is column-major throughout, so beamspace index
//! `s = j·G_R + k` (0-based) addresses AoA grid point `k` and AoD grid
//! point `j`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{array_response, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{c, complex_gaussian, kron, real, unvec, vec_of, CMat, CVec, ZERO};

/// Directional-cosine grid `cos φ_i = 2i/G − 1`, `i = 0..G−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    pub cosines: Vec<f64>,
    pub angles: Vec<f64>,
}

impl AngularGrid {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

pub fn make_grid(g: usize) -> Result<AngularGrid> {
    if g == 0 {
        return Err(Error::Validation("grid size must be at least 1".into()));
    }
    let cosines: Vec<f64> = (0..g).map(|i| 2.0 * i as f64 / g as f64 - 1.0).collect();
    let angles = cosines.iter().map(|&x| x.acos()).collect();
    Ok(AngularGrid { cosines, angles })
}

/// `N × G` dictionary whose columns are array responses at the grid angles.
pub fn build_dictionary(grid: &AngularGrid, geom: &ArrayGeometry) -> CMat {
    let mut a = CMat::zeros(geom.n_elements, grid.len());
    for (i, &phi) in grid.angles.iter().enumerate() {
        a.set_column(i, &array_response(geom, phi));
    }
    a
}

/// Unitary DFT matrix, `F(i,k) = e^{−j2π ik/N} / √N`.
pub fn dft_matrix(n: usize) -> CMat {
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |i, k| {
        let t = -2.0 * PI * ((i * k) % n) as f64 / n as f64;
        c(0.0, t).exp() * scale
    })
}

/// Rounds every entry's phase to the nearest of `2^bits` uniformly spaced
/// values, keeping its magnitude. Models low-resolution analog phase
/// shifters in the sounding stage.
pub fn round_phases(m: &CMat, bits: u32) -> CMat {
    let step = 2.0 * PI / f64::from(1u32 << bits.min(31));
    m.map(|z| {
        let phase = (z.arg() / step).round() * step;
        Complex64::from_polar(z.norm(), phase)
    })
}

/// Unitary freedom `U` in the pilot and combiner blocks `U [I; 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockBasis {
    /// `U = I`: each frame drives a subset of the RF beams.
    Identity,
    /// `U = DFT_{N_RF}`: each frame mixes all beams of its block, so the
    /// unobserved direction of every block is spread over its beams.
    #[default]
    Dft,
}

/// Block-diagonal stack of `U [I; 0]` blocks of size `rows × cols`.
fn stacked_blocks(blocks: usize, rows: usize, cols: usize, basis: BlockBasis) -> CMat {
    let u = match basis {
        BlockBasis::Identity => CMat::identity(rows, rows),
        BlockBasis::Dft => dft_matrix(rows),
    };
    let block = u.columns(0, cols).into_owned();
    let mut out = CMat::zeros(blocks * rows, blocks * cols);
    for b in 0..blocks {
        out.view_mut((b * rows, b * cols), (rows, cols)).copy_from(&block);
    }
    out
}

/// RF/baseband training matrices of the frame-based sounding.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingDesign {
    /// `N_T × N_T` unitary RF precoder, constant modulus.
    pub f_rf: CMat,
    /// `N_R × N_R` unitary RF combiner, constant modulus.
    pub w_rf: CMat,
    /// `N_T × M_T` block-diagonal pilot matrix.
    pub x_p: CMat,
    /// `N_R × M_R` block-diagonal baseband combiner.
    pub w_bb: CMat,
    pub n_t: usize,
    pub n_r: usize,
    pub n_rf: usize,
    pub m_t: usize,
    pub m_r: usize,
    /// Number of transmit frames, `N_T / N_RF`.
    pub n_f: usize,
    /// Number of receive frames, `N_R / N_RF`.
    pub n_c: usize,
}

/// Minimum-coherence sounding design: DFT RF stages and pilot/combiner
/// blocks `U [I; 0]` (unit singular values) with `U` a DFT matrix.
pub fn design_sounding(n_t: usize, n_r: usize, n_rf: usize, m_t: usize, m_r: usize) -> Result<SoundingDesign> {
    design_sounding_with(n_t, n_r, n_rf, m_t, m_r, BlockBasis::Dft)
}

/// [`design_sounding`] with an explicit choice of the block unitary.
pub fn design_sounding_with(
    n_t: usize,
    n_r: usize,
    n_rf: usize,
    m_t: usize,
    m_r: usize,
    basis: BlockBasis,
) -> Result<SoundingDesign> {
    let cfg = |m: String| Err(Error::Config(m));
    if n_rf == 0 || n_t == 0 || n_r == 0 || m_t == 0 || m_r == 0 {
        return cfg("sounding dimensions must be positive".into());
    }
    if n_t % n_rf != 0 || n_r % n_rf != 0 {
        return cfg(format!("N_RF = {n_rf} must divide N_T = {n_t} and N_R = {n_r}"));
    }
    let (n_f, n_c) = (n_t / n_rf, n_r / n_rf);
    if m_t % n_f != 0 || m_r % n_c != 0 {
        return cfg(format!(
            "N_F = {n_f} must divide M_T = {m_t} and N_C = {n_c} must divide M_R = {m_r}"
        ));
    }
    if m_t > n_t || m_r > n_r {
        return cfg(format!(
            "pilot dimensions ({m_t}, {m_r}) exceed array sizes ({n_t}, {n_r})"
        ));
    }
    Ok(SoundingDesign {
        f_rf: dft_matrix(n_t),
        w_rf: dft_matrix(n_r),
        x_p: stacked_blocks(n_f, n_rf, m_t / n_f, basis),
        w_bb: stacked_blocks(n_c, n_rf, m_r / n_c, basis),
        n_t,
        n_r,
        n_rf,
        m_t,
        m_r,
        n_f,
        n_c,
    })
}

impl SoundingDesign {
    /// The `i`-th `N_RF × (M_T/N_F)` pilot block.
    pub fn pilot_block(&self, i: usize) -> CMat {
        let cols = self.m_t / self.n_f;
        self.x_p.view((i * self.n_rf, i * cols), (self.n_rf, cols)).into_owned()
    }

    /// The `i`-th `N_RF × (M_R/N_C)` baseband combiner block.
    pub fn combiner_block(&self, i: usize) -> CMat {
        let cols = self.m_r / self.n_c;
        self.w_bb
            .view((i * self.n_rf, i * cols), (self.n_rf, cols))
            .into_owned()
    }

    /// `X_p^T F_RF^T`, `M_T × N_T`.
    pub fn tx_training(&self) -> CMat {
        self.x_p.transpose() * self.f_rf.transpose()
    }

    /// `W_BB^H W_RF^H`, `M_R × N_R`.
    pub fn rx_training(&self) -> CMat {
        self.w_bb.adjoint() * self.w_rf.adjoint()
    }

    /// Antenna-domain sensing matrix `Φ = (X_p^T F_RF^T) ⊗ (W_BB^H W_RF^H)`.
    pub fn antenna_sensing(&self) -> CMat {
        kron(&self.tx_training(), &self.rx_training())
    }

    /// Noise covariance `σ²[I_{M_T} ⊗ (W_BB^H W_RF^H W_RF W_BB)]`.
    pub fn noise_covariance(&self, noise_var: f64) -> CMat {
        let rx = self.rx_training();
        let inner = &rx * rx.adjoint() * real(noise_var);
        kron(&CMat::identity(self.m_t, self.m_t), &inner)
    }

    /// Replaces the RF stages by phase-rounded versions (`bits` per shifter).
    pub fn with_rounded_phases(mut self, bits: u32) -> Self {
        self.f_rf = round_phases(&self.f_rf, bits);
        self.w_rf = round_phases(&self.w_rf, bits);
        self
    }
}

/// Total coherence of a matrix and its Frobenius upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence {
    /// `Σ_{i≠j} |m_i^H m_j|²`.
    pub total: f64,
    /// `‖M^H M‖_F² ≥ total`.
    pub bound: f64,
}

pub fn total_coherence(m: &CMat) -> Result<Coherence> {
    if m.ncols() < 2 {
        return Err(Error::Validation("total coherence needs at least two columns".into()));
    }
    let gram = m.adjoint() * m;
    let bound: f64 = gram.iter().map(|z| z.norm_sqr()).sum();
    let diag: f64 = gram.diagonal().iter().map(|z| z.norm_sqr()).sum();
    Ok(Coherence {
        total: bound - diag,
        bound,
    })
}

/// Linear operator interface for a sensing matrix. Implemented densely for
/// [`CMat`] and with Kronecker structure for [`KroneckerSensing`]; the
/// sparse Bayesian estimators only need the products below.
pub trait SensingMatrix: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `Φ x`.
    fn apply(&self, x: &CVec) -> CVec;
    /// `Φ^H y`.
    fn apply_adjoint(&self, y: &CVec) -> CVec;
    /// `Φ diag(γ) Φ^H`.
    fn weighted_gram(&self, gamma: &[f64]) -> CMat;
    /// `diag(Φ^H B Φ)` (real part) for Hermitian `B`.
    fn quadratic_diag(&self, b: &CMat) -> Vec<f64>;
    fn to_dense(&self) -> CMat;
}

impl SensingMatrix for CMat {
    fn nrows(&self) -> usize {
        CMat::nrows(self)
    }

    fn ncols(&self) -> usize {
        CMat::ncols(self)
    }

    fn apply(&self, x: &CVec) -> CVec {
        self * x
    }

    fn apply_adjoint(&self, y: &CVec) -> CVec {
        self.ad_mul(y)
    }

    fn weighted_gram(&self, gamma: &[f64]) -> CMat {
        let mut scaled = self.clone();
        for (j, &g) in gamma.iter().enumerate() {
            scaled.column_mut(j).scale_mut(g);
        }
        scaled * self.adjoint()
    }

    fn quadratic_diag(&self, b: &CMat) -> Vec<f64> {
        let bp = b * self;
        (0..CMat::ncols(self))
            .map(|j| self.column(j).dotc(&bp.column(j)).re)
            .collect()
    }

    fn to_dense(&self) -> CMat {
        self.clone()
    }
}

/// `Φ̃ = tx ⊗ rx` without forming the product.
///
/// Column `j·G_R + k` of `Φ̃` is `tx[:, j] ⊗ rx[:, k]`; row `a·M_R + b`
/// pairs transmit frame slot `a` with receive slot `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerSensing {
    /// `M_T × G_T`.
    pub tx: CMat,
    /// `M_R × G_R`.
    pub rx: CMat,
    // Pairwise products, row index p + q·M: tx_pairs[(a,a'), j] =
    // tx[a,j]·conj(tx[a',j]); likewise for rx.
    tx_pairs: CMat,
    rx_pairs: CMat,
}

fn pair_products(m: &CMat) -> CMat {
    let (rows, cols) = m.shape();
    CMat::from_fn(rows * rows, cols, |pq, j| {
        let (p, q) = (pq % rows, pq / rows);
        m[(p, j)] * m[(q, j)].conj()
    })
}

impl KroneckerSensing {
    pub fn new(tx: CMat, rx: CMat) -> Self {
        let tx_pairs = pair_products(&tx);
        let rx_pairs = pair_products(&rx);
        Self {
            tx,
            rx,
            tx_pairs,
            rx_pairs,
        }
    }

    fn dims(&self) -> (usize, usize, usize, usize) {
        (self.tx.nrows(), self.rx.nrows(), self.tx.ncols(), self.rx.ncols())
    }
}

impl SensingMatrix for KroneckerSensing {
    fn nrows(&self) -> usize {
        self.tx.nrows() * self.rx.nrows()
    }

    fn ncols(&self) -> usize {
        self.tx.ncols() * self.rx.ncols()
    }

    fn apply(&self, x: &CVec) -> CVec {
        let (_, _, gt, gr) = self.dims();
        let xm = unvec(x, gr, gt);
        vec_of(&(&self.rx * xm * self.tx.transpose()))
    }

    fn apply_adjoint(&self, y: &CVec) -> CVec {
        let (mt, mr, _, _) = self.dims();
        let ym = unvec(y, mr, mt);
        vec_of(&(self.rx.ad_mul(&ym) * self.tx.map(|z| z.conj())))
    }

    fn weighted_gram(&self, gamma: &[f64]) -> CMat {
        let (mt, mr, gt, gr) = self.dims();
        let g = CMat::from_fn(gr, gt, |k, j| real(gamma[j * gr + k]));
        // rx_weighted[(b,b'), j] = (rx diag(γ_{·j}) rx^H)[b, b']
        let rx_weighted = &self.rx_pairs * g;
        // four[(a,a'), (b,b')] = Σ_j tx[a,j] conj(tx[a',j]) C_j[b,b']
        let four = &self.tx_pairs * rx_weighted.transpose();
        let m = mt * mr;
        let mut out = CMat::zeros(m, m);
        for bb in 0..mr * mr {
            let (b, b2) = (bb % mr, bb / mr);
            for aa in 0..mt * mt {
                let (a, a2) = (aa % mt, aa / mt);
                out[(a * mr + b, a2 * mr + b2)] = four[(aa, bb)];
            }
        }
        out
    }

    fn quadratic_diag(&self, b: &CMat) -> Vec<f64> {
        let (mt, mr, gt, gr) = self.dims();
        // four[(a,a'), (b,b')] = B[a·M_R + b, a'·M_R + b']
        let four = CMat::from_fn(mt * mt, mr * mr, |aa, bb| {
            let (a, a2) = (aa % mt, aa / mt);
            let (r, r2) = (bb % mr, bb / mr);
            b[(a * mr + r, a2 * mr + r2)]
        });
        // D[j,k] = Σ conj(tx[a,j]) tx[a',j] B4 conj(rx[b,k]) rx[b',k]
        //        = (tx_pairs^H · B4 · conj(rx_pairs))[j,k]
        let d = self.tx_pairs.ad_mul(&(four * self.rx_pairs.map(|z| z.conj())));
        let mut out = vec![0.0; gt * gr];
        for j in 0..gt {
            for k in 0..gr {
                out[j * gr + k] = d[(j, k)].re;
            }
        }
        out
    }

    fn to_dense(&self) -> CMat {
        kron(&self.tx, &self.rx)
    }
}

/// Equivalent beamspace sensing operator with its dictionary and noise
/// covariance.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    /// `Φ̃`, `M_T M_R × G_R G_T`.
    pub phi_tilde: CMat,
    /// Structured form of `Φ̃`.
    pub structured: KroneckerSensing,
    /// `Ψ = A_T^* ⊗ A_R`, `N_R N_T × G_R G_T`.
    pub psi: CMat,
    /// `R_v`, `M_T M_R × M_T M_R`.
    pub r_v: CMat,
    pub noise_var: f64,
    pub a_t: CMat,
    pub a_r: CMat,
}

pub fn sensing_operator(design: &SoundingDesign, a_t: &CMat, a_r: &CMat, noise_var: f64) -> Result<SensingOperator> {
    if a_t.nrows() != design.n_t || a_r.nrows() != design.n_r {
        return Err(Error::Dimension(format!(
            "dictionaries have {} and {} rows, design expects N_T = {} and N_R = {}",
            a_t.nrows(),
            a_r.nrows(),
            design.n_t,
            design.n_r
        )));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::Domain(format!(
            "noise variance must be nonnegative, got {noise_var}"
        )));
    }
    let tx = design.tx_training() * a_t.map(|z| z.conj());
    let rx = design.rx_training() * a_r;
    let structured = KroneckerSensing::new(tx, rx);
    Ok(SensingOperator {
        phi_tilde: structured.to_dense(),
        structured,
        psi: kron(&a_t.map(|z| z.conj()), a_r),
        r_v: design.noise_covariance(noise_var),
        noise_var,
        a_t: a_t.clone(),
        a_r: a_r.clone(),
    })
}

impl SensingOperator {
    /// Same operator at a different noise level.
    pub fn with_noise_var(&self, design: &SoundingDesign, noise_var: f64) -> Self {
        let mut out = self.clone();
        out.r_v = design.noise_covariance(noise_var);
        out.noise_var = noise_var;
        out
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.a_r.ncols(), self.a_t.ncols())
    }
}

/// Noiseless pilot observation `Φ vec(H)`.
pub fn noiseless_sounding(h: &CMat, design: &SoundingDesign) -> CVec {
    vec_of(&(design.rx_training() * (h * &design.f_rf * &design.x_p)))
}

/// Received pilot vector `y = vec(W_BB^H W_RF^H (H F_RF X_p + Ṽ))` with
/// `Ṽ` white of variance `noise_var`.
pub fn simulate_sounding<R: Rng + ?Sized>(h: &CMat, design: &SoundingDesign, noise_var: f64, rng: &mut R) -> CVec {
    let noise = complex_gaussian(rng, design.n_r, design.m_t, noise_var);
    let received = h * &design.f_rf * &design.x_p + noise;
    vec_of(&(design.rx_training() * received))
}

/// `m` independent soundings of the same channel, one per column.
pub fn simulate_sounding_batch<R: Rng + ?Sized>(
    h: &CMat,
    design: &SoundingDesign,
    noise_var: f64,
    m: usize,
    rng: &mut R,
) -> CMat {
    let mut out = CMat::from_element(design.m_t * design.m_r, m, ZERO);
    for col in 0..m {
        out.set_column(col, &simulate_sounding(h, design, noise_var, rng));
    }
    out
}

/// `Ĥ = A_R unvec(h_b) A_T^H`.
pub fn beamspace_to_channel(h_b: &CVec, a_r: &CMat, a_t: &CMat) -> Result<CMat> {
    let (gr, gt) = (a_r.ncols(), a_t.ncols());
    if h_b.len() != gr * gt {
        return Err(Error::Dimension(format!(
            "beamspace vector has length {}, expected G_R·G_T = {}",
            h_b.len(),
            gr * gt
        )));
    }
    Ok(a_r * unvec(h_b, gr, gt) * a_t.adjoint())
}

/// Grid indices `(AoA row k, AoD column j)` of beamspace index `s`.
pub fn beamspace_index(s: usize, g_r: usize) -> (usize, usize) {
    (s % g_r, s / g_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob_sq, hermitian_part, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_lambda(n: usize) -> ArrayGeometry {
        ArrayGeometry::new(n, 0.5, 1.0).unwrap()
    }

    #[test]
    fn grid_of_four() {
        let g = make_grid(4).unwrap();
        assert_eq!(g.cosines, vec![-1.0, -0.5, 0.0, 0.5]);
        assert!((g.angles[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_empty_grids() {
        assert_eq!(make_grid(1).unwrap().cosines, vec![-1.0]);
        assert!(make_grid(0).is_err());
    }

    #[test]
    fn grid_spacing_system_one() {
        let g = make_grid(36).unwrap();
        assert_eq!(g.len(), 36);
        for w in g.cosines.windows(2) {
            assert!((w[1] - w[0] - 2.0 / 36.0).abs() < 1e-15);
        }
    }

    #[test]
    fn semi_unitary_dictionary() {
        for (n, g) in [(16, 20), (32, 36)] {
            let a = build_dictionary(&make_grid(g).unwrap(), &half_lambda(n));
            let gap = &a * a.adjoint() - CMat::identity(n, n) * real(g as f64 / n as f64);
            assert!(frob_sq(&gap).sqrt() < 1e-10, "N = {n}, G = {g}");
        }
    }

    #[test]
    fn square_dictionary_is_unitary() {
        let a = build_dictionary(&make_grid(8).unwrap(), &half_lambda(8));
        assert!(rel_err(&(a.adjoint() * &a), &CMat::identity(8, 8)) < 1e-10);
    }

    #[test]
    fn system_two_design_dimensions() {
        let d = design_sounding(16, 16, 4, 12, 12).unwrap();
        assert_eq!((d.n_f, d.n_c), (4, 4));
        assert_eq!(d.pilot_block(0).shape(), (4, 3));
        assert_eq!(d.x_p.shape(), (16, 12));
        assert_eq!(d.w_bb.shape(), (16, 12));
        for i in 0..4 {
            let s = crate::linalg::singular_values(&d.pilot_block(i));
            assert!(s.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn bad_divisibility_is_a_config_error() {
        assert!(matches!(design_sounding(16, 16, 5, 12, 12), Err(Error::Config(_))));
        assert!(matches!(design_sounding(16, 16, 4, 10, 12), Err(Error::Config(_))));
    }

    #[test]
    fn rf_stages_are_constant_modulus() {
        let d = design_sounding(32, 32, 8, 24, 24).unwrap();
        let target = 1.0 / 32f64.sqrt();
        assert!(d.f_rf.iter().all(|z| (z.norm() - target).abs() < 1e-15));
        assert!(d.w_rf.iter().all(|z| (z.norm() - target).abs() < 1e-15));
    }

    #[test]
    fn lemma_design_gives_white_noise() {
        let d = design_sounding(16, 16, 4, 12, 12).unwrap();
        let rv = d.noise_covariance(0.3);
        assert!(rel_err(&rv, &(CMat::identity(144, 144) * real(0.3))) < 1e-14);
    }

    #[test]
    fn coherence_edge_cases() {
        let eye = CMat::identity(3, 3);
        assert_eq!(total_coherence(&eye).unwrap().total, 0.0);
        let twin = CMat::from_element(2, 2, real(1.0 / 2f64.sqrt()));
        assert!((total_coherence(&twin).unwrap().total - 2.0).abs() < 1e-14);
        assert!(total_coherence(&CMat::identity(3, 1)).is_err());
    }

    #[test]
    fn coherence_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = complex_gaussian(&mut rng, 6, 9, 1.0);
        let mut brute = 0.0;
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    brute += m.column(i).dotc(&m.column(j)).norm_sqr();
                }
            }
        }
        let c = total_coherence(&m).unwrap();
        assert!((c.total - brute).abs() / brute < 1e-12);
        assert!(c.bound >= c.total);
    }

    fn system_two_operator(noise_var: f64) -> (SoundingDesign, SensingOperator) {
        let d = design_sounding(16, 16, 4, 12, 12).unwrap();
        let a = build_dictionary(&make_grid(20).unwrap(), &half_lambda(16));
        let op = sensing_operator(&d, &a, &a, noise_var).unwrap();
        (d, op)
    }

    #[test]
    fn sensing_matrix_factorizations_agree() {
        let (d, op) = system_two_operator(1.0);
        assert_eq!(op.phi_tilde.shape(), (144, 400));
        let via_psi = d.antenna_sensing() * &op.psi;
        assert!(rel_err(&via_psi, &op.phi_tilde) < 1e-12);
    }

    #[test]
    fn structured_products_match_dense() {
        let (_, op) = system_two_operator(1.0);
        let k = &op.structured;
        let dense = &op.phi_tilde;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = complex_gaussian(&mut rng, 400, 1, 1.0).column(0).into_owned();
        let y = complex_gaussian(&mut rng, 144, 1, 1.0).column(0).into_owned();
        let to_m = |v: CVec| CMat::from_column_slice(v.len(), 1, v.as_slice());
        assert!(rel_err(&to_m(k.apply(&x)), &to_m(dense.apply(&x))) < 1e-12);
        assert!(rel_err(&to_m(k.apply_adjoint(&y)), &to_m(dense.apply_adjoint(&y))) < 1e-12);

        let gamma: Vec<f64> = (0..400).map(|i| 0.1 + (i % 7) as f64).collect();
        assert!(rel_err(&k.weighted_gram(&gamma), &dense.weighted_gram(&gamma)) < 1e-12);

        let r = complex_gaussian(&mut rng, 144, 144, 1.0);
        let b = hermitian_part(&(&r * r.adjoint()));
        let fast = k.quadratic_diag(&b);
        let slow = dense.quadratic_diag(&b);
        let err: f64 = fast.iter().zip(&slow).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = slow.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err / norm < 1e-12);
    }

    #[test]
    fn noiseless_sounding_matches_sensing_model() {
        let (d, op) = system_two_operator(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h_b = complex_gaussian(&mut rng, 400, 1, 1.0).column(0).into_owned();
        let h = beamspace_to_channel(&h_b, &op.a_r, &op.a_t).unwrap();
        let y = simulate_sounding(&h, &d, 0.0, &mut rng);
        let expected = &op.phi_tilde * &h_b;
        assert!((&y - &expected).norm() < 1e-10 * expected.norm());
        assert_eq!(y, noiseless_sounding(&h, &d));
    }

    #[test]
    fn beamspace_round_trip_through_psi() {
        let (_, op) = system_two_operator(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h_b = complex_gaussian(&mut rng, 400, 1, 1.0).column(0).into_owned();
        let h = beamspace_to_channel(&h_b, &op.a_r, &op.a_t).unwrap();
        let via_psi = &op.psi * &h_b;
        assert!((vec_of(&h) - &via_psi).norm() < 1e-12 * via_psi.norm());
        assert!(beamspace_to_channel(&CVec::zeros(399), &op.a_r, &op.a_t).is_err());
    }

    #[test]
    fn one_hot_beamspace_is_one_outer_product() {
        let (_, op) = system_two_operator(1.0);
        let s = 3 * 20 + 5;
        let (k, j) = beamspace_index(s, 20);
        assert_eq!((k, j), (5, 3));
        let mut h_b = CVec::zeros(400);
        h_b[s] = real(1.0);
        let h = beamspace_to_channel(&h_b, &op.a_r, &op.a_t).unwrap();
        let expected = op.a_r.column(k) * op.a_t.column(j).adjoint();
        assert!(rel_err(&h, &expected) < 1e-14);
        assert_eq!(beamspace_index(0, 20), (0, 0));
    }

    #[test]
    fn phase_rounding_at_full_resolution_is_identity_for_dft() {
        let f = dft_matrix(16);
        assert!(rel_err(&round_phases(&f, 4), &f) < 1e-12);
        let coarse = round_phases(&f, 1);
        assert!(coarse.iter().all(|z| (z.norm() - 0.25).abs() < 1e-15));
    }
}
