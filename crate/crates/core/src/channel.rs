//! Clustered LoS/NLoS channel realizations on uniform linear arrays.
//!
//! A realization is one LoS cluster plus `N_NLoS` reflected clusters, each
//! made of `N_ray` diffused rays around the cluster's mean angles:
//!
//! ```text
//! H = √(N_T N_R / N_ray)          Σ_LoS  α e^{jψ} G_t G_r a_r(φ^r) a_t(φ^t)^H
//!   + √(N_T N_R / (N_NLoS N_ray)) Σ_NLoS α e^{jψ} G_t G_r a_r(φ^r) a_t(φ^t)^H
//! ```

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::absorption::{self, consts::C, AbsorptionModel, SurfaceSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, frob_sq, CMat, CVec};

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    /// Inter-element spacing, m.
    pub spacing_m: f64,
    /// Carrier wavelength, m.
    pub wavelength_m: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, spacing_m: f64, wavelength_m: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::Validation("array needs at least one element".into()));
        }
        if !(spacing_m > 0.0 && wavelength_m > 0.0) {
            return Err(Error::Validation(
                "array spacing and wavelength must be positive".into(),
            ));
        }
        Ok(Self {
            n_elements,
            spacing_m,
            wavelength_m,
        })
    }

    /// Array at carrier `f_hz` with spacing given in wavelengths.
    pub fn at_frequency(n_elements: usize, f_hz: f64, spacing_in_wavelengths: f64) -> Result<Self> {
        if !(f_hz > 0.0) {
            return Err(Error::Domain(format!("carrier must be positive, got {f_hz}")));
        }
        let lambda = C / f_hz;
        Self::new(n_elements, spacing_in_wavelengths * lambda, lambda)
    }

    /// λ/2-spaced array, the spacing assumed by the angular dictionaries.
    pub fn half_wavelength(n_elements: usize, f_hz: f64) -> Result<Self> {
        Self::at_frequency(n_elements, f_hz, 0.5)
    }
}

/// Unit-norm response `(1/√N) exp(−j 2π/λ · k d cos φ)`, `k = 0..N−1`.
pub fn array_response(geom: &ArrayGeometry, phi: f64) -> CVec {
    let n = geom.n_elements;
    let step = -2.0 * PI / geom.wavelength_m * geom.spacing_m * phi.cos();
    let scale = 1.0 / (n as f64).sqrt();
    CVec::from_iterator(n, (0..n).map(|k| c(0.0, step * k as f64).exp() * scale))
}

/// How antenna gains quoted in dB enter the amplitude sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainConvention {
    /// `10^{dB/20}` per side.
    Amplitude,
    /// `10^{dB/10}` per side.
    #[default]
    Power,
}

impl GainConvention {
    pub fn linear(self, db: f64) -> f64 {
        match self {
            GainConvention::Amplitude => 10f64.powf(db / 20.0),
            GainConvention::Power => 10f64.powf(db / 10.0),
        }
    }
}

/// Free-space spreading loss `(c / 4π f d)²`.
pub fn spreading_loss(f_hz: f64, d_m: f64) -> Result<f64> {
    if !(f_hz > 0.0) {
        return Err(Error::Domain(format!("carrier must be positive, got {f_hz}")));
    }
    if !(d_m > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d_m}")));
    }
    Ok((C / (4.0 * PI * f_hz * d_m)).powi(2))
}

/// `|α| = √(L_spread · L_abs)` with `L_abs = e^{−k_abs d}`.
pub fn los_gain_magnitude(f_hz: f64, d_m: f64, k_abs: f64) -> Result<f64> {
    if !(k_abs >= 0.0) {
        return Err(Error::Domain(format!("k_abs must be nonnegative, got {k_abs}")));
    }
    Ok((spreading_loss(f_hz, d_m)? * (-k_abs * d_m).exp()).sqrt())
}

/// `|α| = |∏Γ| · √(L_spread · L_abs)` for a path with the given bounces.
pub fn nlos_gain_magnitude(f_hz: f64, d_m: f64, k_abs: f64, bounce_gammas: &[f64]) -> Result<f64> {
    if let Some(g) = bounce_gammas.iter().find(|g| !(g.abs() <= 1.0)) {
        return Err(Error::Domain(format!(
            "reflection coefficient magnitude exceeds one: {g}"
        )));
    }
    let gamma = absorption::equivalent_reflection(bounce_gammas);
    Ok(gamma.abs() * los_gain_magnitude(f_hz, d_m, k_abs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterKind {
    LoS,
    NLoS,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub aod: f64,
    pub aoa: f64,
    pub gain_mag: f64,
    /// Phase in `(−π, π]`.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCluster {
    pub kind: ClusterKind,
    /// 0 for the LoS cluster.
    pub reflection_order: usize,
    pub mean_aod: f64,
    pub mean_aoa: f64,
    pub rays: Vec<Ray>,
}

/// Channel block of an experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub f_hz: f64,
    pub d_m: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub spacing_in_wavelengths: f64,
    pub n_nlos: usize,
    pub n_ray: usize,
    /// Reflection order of each NLoS cluster; length must equal `n_nlos`.
    pub nlos_orders: Vec<usize>,
    /// Transmit and receive antenna gains, dB.
    pub gains_db: [f64; 2],
    pub gain_convention: GainConvention,
    /// Reflecting media the NLoS bounces are drawn from. Empty means the
    /// bundled indoor materials.
    pub surfaces: Vec<SurfaceSpec>,
    /// Standard deviation of ray angles around the cluster mean, rad.
    pub angle_spread_rad: f64,
    /// Scalar absorption coefficient replacing the catalog, 1/m.
    pub k_abs_override: Option<f64>,
    /// Line catalog CSV used instead of the bundled sample.
    pub catalog_path: Option<String>,
    /// Seed for a fixed channel shared by every trial.
    pub seed: Option<u64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            f_hz: 0.3e12,
            d_m: 10.0,
            n_tx: 16,
            n_rx: 16,
            spacing_in_wavelengths: 0.5,
            n_nlos: 4,
            n_ray: 1,
            nlos_orders: vec![1, 1, 1, 2],
            gains_db: [25.0, 25.0],
            gain_convention: GainConvention::Power,
            surfaces: Vec::new(),
            angle_spread_rad: 0.1,
            k_abs_override: None,
            catalog_path: None,
            seed: None,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.f_hz > 0.0) {
            return bad("channel.f_hz must be positive");
        }
        if !(self.d_m > 0.0) {
            return bad("channel.d_m must be positive");
        }
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("channel.n_tx and channel.n_rx must be at least 1");
        }
        if !(self.spacing_in_wavelengths > 0.0) {
            return bad("channel.spacing_in_wavelengths must be positive");
        }
        if self.n_ray == 0 {
            return bad("channel.n_ray must be at least 1");
        }
        if self.nlos_orders.len() != self.n_nlos {
            return Err(Error::Config(format!(
                "channel.nlos_orders has {} entries but n_nlos = {}",
                self.nlos_orders.len(),
                self.n_nlos
            )));
        }
        if self.nlos_orders.iter().any(|&o| o == 0) {
            return bad("channel.nlos_orders entries must be at least 1");
        }
        if !(self.angle_spread_rad >= 0.0) {
            return bad("channel.angle_spread_rad must be nonnegative");
        }
        if let Some(k) = self.k_abs_override {
            if !(k >= 0.0) {
                return bad("channel.k_abs_override must be nonnegative");
            }
        }
        for s in &self.surfaces {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn absorption_model(&self) -> Result<AbsorptionModel> {
        if let Some(k) = self.k_abs_override {
            return Ok(AbsorptionModel::Fixed(k));
        }
        match &self.catalog_path {
            Some(path) => Ok(AbsorptionModel::Catalog {
                catalog: absorption::SpectralLineCatalog::from_path(path)?,
                conditions: Default::default(),
            }),
            None => Ok(AbsorptionModel::bundled()),
        }
    }
}

/// A channel matrix together with the rays that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `N_R × N_T` channel matrix.
    pub h: CMat,
    pub clusters: Vec<PathCluster>,
    pub f_hz: f64,
    /// Link distance, when the realization came from a [`ChannelModel`].
    pub d_m: Option<f64>,
    /// Linear transmit and receive gains as applied in the amplitude sum.
    pub gain_tx: f64,
    pub gain_rx: f64,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
}

impl ChannelRealization {
    pub fn n_tx(&self) -> usize {
        self.tx.n_elements
    }

    pub fn n_rx(&self) -> usize {
        self.rx.n_elements
    }
}

/// Channel generator with everything that does not change between trials
/// (geometry, gains, absorption coefficient, surfaces) resolved up front.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub config: ChannelConfig,
    pub k_abs: f64,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub gain_tx: f64,
    pub gain_rx: f64,
    pub surfaces: Vec<SurfaceSpec>,
}

impl ChannelModel {
    pub fn new(config: &ChannelConfig) -> Result<Self> {
        config.validate()?;
        let k_abs = config.absorption_model()?.k_abs(config.f_hz)?;
        Self::with_k_abs(config, k_abs)
    }

    pub fn with_k_abs(config: &ChannelConfig, k_abs: f64) -> Result<Self> {
        config.validate()?;
        let surfaces = if config.surfaces.is_empty() {
            absorption::bundled_materials()
        } else {
            config.surfaces.clone()
        };
        Ok(Self {
            tx: ArrayGeometry::at_frequency(config.n_tx, config.f_hz, config.spacing_in_wavelengths)?,
            rx: ArrayGeometry::at_frequency(config.n_rx, config.f_hz, config.spacing_in_wavelengths)?,
            gain_tx: config.gain_convention.linear(config.gains_db[0]),
            gain_rx: config.gain_convention.linear(config.gains_db[1]),
            k_abs,
            surfaces,
            config: config.clone(),
        })
    }

    pub fn sample_clusters<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<PathCluster>> {
        sample_clusters(&self.config, self.k_abs, &self.surfaces, rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        let clusters = self.sample_clusters(rng)?;
        let mut out = assemble_channel(clusters, &self.tx, &self.rx, self.gain_tx, self.gain_rx)?;
        out.d_m = Some(self.config.d_m);
        Ok(out)
    }
}

fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // negating a draw from [−π, π) gives (−π, π]
    -rng.random_range(-PI..PI)
}

/// Draws the LoS cluster followed by the NLoS clusters.
///
/// Mean angles are uniform on `(0, π)` and ray angles add i.i.d.
/// `N(0, angle_spread²)` offsets. Each bounce of an NLoS cluster picks a
/// surface uniformly from `surfaces` and an incidence angle uniformly on
/// `[0, π/2)`, shared by the rays of that cluster. A bounce that hits total
/// reflection blocks the cluster (zero gain).
pub fn sample_clusters<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    k_abs: f64,
    surfaces: &[SurfaceSpec],
    rng: &mut R,
) -> Result<Vec<PathCluster>> {
    if cfg.n_nlos > 0 && surfaces.is_empty() {
        return Err(Error::Config("NLoS clusters need at least one surface".into()));
    }
    let spread = Normal::new(0.0, cfg.angle_spread_rad).map_err(|e| Error::Config(format!("angle spread: {e}")))?;
    let los_mag = los_gain_magnitude(cfg.f_hz, cfg.d_m, k_abs)?;

    let draw_cluster = |kind: ClusterKind, order: usize, gain_mag: f64, rng: &mut R| {
        let mean_aod = rng.random_range(0.0..PI);
        let mean_aoa = rng.random_range(0.0..PI);
        let rays = (0..cfg.n_ray)
            .map(|_| Ray {
                aod: mean_aod + spread.sample(rng),
                aoa: mean_aoa + spread.sample(rng),
                gain_mag,
                phase: uniform_phase(rng),
            })
            .collect();
        PathCluster {
            kind,
            reflection_order: order,
            mean_aod,
            mean_aoa,
            rays,
        }
    };

    let mut clusters = Vec::with_capacity(1 + cfg.n_nlos);
    clusters.push(draw_cluster(ClusterKind::LoS, 0, los_mag, rng));
    for &order in &cfg.nlos_orders {
        let mut gammas = Vec::with_capacity(order);
        for _ in 0..order {
            let surface = &surfaces[rng.random_range(0..surfaces.len())];
            let theta_in = rng.random_range(0.0..PI / 2.0);
            let gamma = match absorption::reflection_coefficient(surface, cfg.f_hz, theta_in) {
                Ok(r) => r.total,
                Err(Error::TotalReflection { .. }) => 0.0,
                Err(e) => return Err(e),
            };
            gammas.push(gamma);
        }
        let mag = nlos_gain_magnitude(cfg.f_hz, cfg.d_m, k_abs, &gammas)?;
        clusters.push(draw_cluster(ClusterKind::NLoS, order, mag, rng));
    }
    Ok(clusters)
}

fn cluster_sum(clusters: &[&PathCluster], tx: &ArrayGeometry, rx: &ArrayGeometry, gain: f64) -> CMat {
    let mut h = CMat::zeros(rx.n_elements, tx.n_elements);
    for cluster in clusters {
        for ray in &cluster.rays {
            let coeff = c(0.0, ray.phase).exp() * (ray.gain_mag * gain);
            let ar = array_response(rx, ray.aoa) * coeff;
            let at = array_response(tx, ray.aod);
            h += ar * at.adjoint();
        }
    }
    h
}

/// Sums the rays of every cluster into `H`, LoS and NLoS parts scaled
/// separately. `N_ray` is taken from the first cluster of each kind.
pub fn assemble_channel(
    clusters: Vec<PathCluster>,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    gain_tx: f64,
    gain_rx: f64,
) -> Result<ChannelRealization> {
    if clusters.is_empty() {
        return Err(Error::Validation("cannot assemble a channel from zero clusters".into()));
    }
    if clusters.iter().any(|cl| cl.rays.is_empty()) {
        return Err(Error::Validation("every cluster needs at least one ray".into()));
    }
    let nt_nr = (tx.n_elements * rx.n_elements) as f64;
    let gain = gain_tx * gain_rx;
    let (los, nlos): (Vec<&PathCluster>, Vec<&PathCluster>) =
        clusters.iter().partition(|cl| cl.kind == ClusterKind::LoS);

    let mut h = CMat::zeros(rx.n_elements, tx.n_elements);
    if let Some(first) = los.first() {
        let scale = (nt_nr / first.rays.len() as f64).sqrt();
        h += cluster_sum(&los, tx, rx, gain) * c(scale, 0.0);
    }
    if let Some(first) = nlos.first() {
        let scale = (nt_nr / (nlos.len() * first.rays.len()) as f64).sqrt();
        h += cluster_sum(&nlos, tx, rx, gain) * c(scale, 0.0);
    }
    Ok(ChannelRealization {
        h,
        clusters,
        f_hz: C / tx.wavelength_m,
        d_m: None,
        gain_tx,
        gain_rx,
        tx: *tx,
        rx: *rx,
    })
}

/// Mean received power proxy `‖H‖_F²`.
pub fn channel_energy(ch: &ChannelRealization) -> f64 {
    frob_sq(&ch.h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_sq, rank, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom(n: usize) -> ArrayGeometry {
        ArrayGeometry::new(n, 0.5, 1.0).unwrap()
    }

    fn ray(aod: f64, aoa: f64, gain_mag: f64, phase: f64) -> Ray {
        Ray {
            aod,
            aoa,
            gain_mag,
            phase,
        }
    }

    fn cluster(kind: ClusterKind, rays: Vec<Ray>) -> PathCluster {
        PathCluster {
            kind,
            reflection_order: usize::from(kind == ClusterKind::NLoS),
            mean_aod: rays[0].aod,
            mean_aoa: rays[0].aoa,
            rays,
        }
    }

    #[test]
    fn broadside_response_is_flat() {
        let a = array_response(&geom(8), PI / 2.0);
        for z in a.iter() {
            assert!((z.re - 1.0 / 8f64.sqrt()).abs() < 1e-15);
            assert!(z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn endfire_two_element_response() {
        let a = array_response(&geom(2), 0.0);
        let s = 1.0 / 2f64.sqrt();
        assert!((a[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn los_gain_at_300_ghz_10_m() {
        let g = los_gain_magnitude(3e11, 10.0, 0.0).unwrap();
        let expected = (2.997_924_58e8 / (4.0 * PI * 3e11 * 10.0)).powi(2);
        assert!((g * g - expected).abs() / expected < 1e-14);
        assert!((g * g - 6.333e-11).abs() < 1e-13);
    }

    #[test]
    fn inverse_square_and_absorption() {
        let g1 = los_gain_magnitude(3e11, 5.0, 0.0).unwrap();
        let g2 = los_gain_magnitude(3e11, 10.0, 0.0).unwrap();
        assert!(((g2 * g2) / (g1 * g1) - 0.25).abs() < 1e-14);

        let free = los_gain_magnitude(6.2e12, 1.0, 0.0).unwrap();
        let absorbed = los_gain_magnitude(6.2e12, 1.0, 3.1).unwrap();
        let ratio = (absorbed / free).powi(2);
        assert!((ratio - (-3.1f64).exp()).abs() < 1e-15);
        assert!((ratio - 0.0450).abs() < 1e-4);
    }

    #[test]
    fn zero_distance_is_rejected() {
        assert!(matches!(los_gain_magnitude(3e11, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn nlos_gain_product_rule() {
        let los = los_gain_magnitude(3e11, 10.0, 0.002).unwrap();
        let mirror = nlos_gain_magnitude(3e11, 10.0, 0.002, &[1.0]).unwrap();
        assert_eq!(mirror, los);
        let two = nlos_gain_magnitude(3e11, 10.0, 0.002, &[0.5, 0.5]).unwrap();
        assert!(((two / los).powi(2) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn nlos_gain_composes_with_reflection_model() {
        let s = SurfaceSpec {
            name: "wallpaper".into(),
            impedance_ohms: 200.0,
            roughness_sigma_m: 0.13e-3,
        };
        let theta = PI / 4.0;
        let r = absorption::reflection_coefficient(&s, 3e11, theta).unwrap();
        // hand composition
        let theta_r = (theta.sin() * 200.0 / 377.0).asin();
        let fresnel = (200.0 * theta.cos() - 377.0 * theta_r.cos()) / (200.0 * theta.cos() + 377.0 * theta_r.cos());
        let x = 4.0 * PI * 3e11 * 0.13e-3 * theta.cos() / 2.997_924_58e8;
        let gamma = fresnel * (-0.5 * x * x).exp();
        let spread = (2.997_924_58e8 / (4.0 * PI * 3e11 * 10.0)).powi(2);
        let expected = gamma * gamma * spread;
        let got = nlos_gain_magnitude(3e11, 10.0, 0.0, &[r.total]).unwrap();
        assert!((got * got - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn single_ray_channel_is_rank_one_outer_product() {
        let (tx, rx) = (geom(4), geom(3));
        let cl = vec![cluster(ClusterKind::LoS, vec![ray(0.7, 1.9, 1.0, 0.0)])];
        let ch = assemble_channel(cl, &tx, &rx, 1.0, 1.0).unwrap();
        let expected = array_response(&rx, 1.9) * array_response(&tx, 0.7).adjoint() * c(12f64.sqrt(), 0.0);
        assert!(rel_err(&ch.h, &expected) < 1e-14);
        assert_eq!(rank(&ch.h, 1e-10), 1);
    }

    #[test]
    fn two_by_two_hand_expansion() {
        // LoS ray at (φt, φr) = (0, 0) with gain 1, phase 0;
        // NLoS ray at (π/2, π/2) with gain 0.5, phase π/2.
        let (tx, rx) = (geom(2), geom(2));
        let cl = vec![
            cluster(ClusterKind::LoS, vec![ray(0.0, 0.0, 1.0, 0.0)]),
            cluster(ClusterKind::NLoS, vec![ray(PI / 2.0, PI / 2.0, 0.5, PI / 2.0)]),
        ];
        let h = assemble_channel(cl, &tx, &rx, 1.0, 1.0).unwrap().h;
        // LoS: 2 · (1/2)[1,−1][1,−1]^T = [[1,−1],[−1,1]]
        // NLoS: 2 · 0.5j · (1/2)[1,1][1,1]^T = 0.5j · ones
        let expected = CMat::from_row_slice(2, 2, &[c(1.0, 0.5), c(-1.0, 0.5), c(-1.0, 0.5), c(1.0, 0.5)]);
        assert!(rel_err(&h, &expected) < 1e-14);
    }

    #[test]
    fn empty_cluster_list_is_an_error() {
        assert!(assemble_channel(vec![], &geom(2), &geom(2), 1.0, 1.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = ChannelModel::new(&ChannelConfig::default()).unwrap();
        let a = model.sample(&mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = model.sample(&mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.clusters, b.clusters);
        assert_eq!(a.h, b.h);
    }

    #[test]
    fn default_cluster_layout() {
        let model = ChannelModel::new(&ChannelConfig::default()).unwrap();
        let cl = model.sample_clusters(&mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(cl.len(), 5);
        assert_eq!(cl[0].kind, ClusterKind::LoS);
        let orders: Vec<usize> = cl.iter().map(|c| c.reflection_order).collect();
        assert_eq!(orders, vec![0, 1, 1, 1, 2]);
        for c in &cl {
            assert_eq!(c.rays.len(), 1);
            assert!(c.mean_aod > 0.0 && c.mean_aod < PI);
            for r in &c.rays {
                assert!(r.phase > -PI && r.phase <= PI);
                assert!(r.gain_mag >= 0.0);
            }
        }
    }

    #[test]
    fn ray_spread_statistics() {
        let cfg = ChannelConfig {
            n_nlos: 0,
            nlos_orders: vec![],
            n_ray: 100,
            ..Default::default()
        };
        let model = ChannelModel::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut offsets = Vec::new();
        for _ in 0..100 {
            let cl = model.sample_clusters(&mut rng).unwrap();
            offsets.extend(cl[0].rays.iter().map(|r| r.aod - cl[0].mean_aod));
        }
        let n = offsets.len() as f64;
        let mean = offsets.iter().sum::<f64>() / n;
        let var = offsets.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.1).abs() < 0.005, "std = {}", var.sqrt());
    }

    #[test]
    fn unit_norm_responses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = geom(16);
        for _ in 0..1000 {
            let phi = rng.random_range(0.0..PI);
            assert!((norm_sq(&array_response(&g, phi)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_orders_rejected() {
        let cfg = ChannelConfig {
            n_nlos: 2,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
