//! Experiment configuration (TOML or JSON).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::beamspace::BlockBasis;
use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::estimators::BlConfig;

/// Array and training dimensions of one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDims {
    pub n_t: usize,
    pub n_r: usize,
    pub n_rf: usize,
    pub m_t: usize,
    pub m_r: usize,
    pub g_t: usize,
    pub g_r: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    System1,
    System2,
}

impl Preset {
    pub fn dims(self) -> SystemDims {
        match self {
            Preset::System1 => SystemDims {
                n_t: 32,
                n_r: 32,
                n_rf: 8,
                m_t: 24,
                m_r: 24,
                g_t: 36,
                g_r: 36,
            },
            Preset::System2 => SystemDims {
                n_t: 16,
                n_r: 16,
                n_rf: 4,
                m_t: 12,
                m_r: 12,
                g_t: 20,
                g_r: 20,
            },
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "system1" | "i" => Ok(Preset::System1),
            "system2" | "ii" => Ok(Preset::System2),
            _ => Err(Error::Config(format!(
                "unknown preset {s:?} (expected system1 or system2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ls,
    Mmse,
    Omp,
    Bl,
    Mbl,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Ls => "ls",
            EstimatorKind::Mmse => "mmse",
            EstimatorKind::Omp => "omp",
            EstimatorKind::Bl => "bl",
            EstimatorKind::Mbl => "mbl",
        }
    }

    /// Whether the estimator works on beamspace coefficients.
    pub fn is_sparse(self) -> bool {
        matches!(self, EstimatorKind::Omp | EstimatorKind::Bl | EstimatorKind::Mbl)
    }
}

/// ADC resolution: a bit count or unquantized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcBits {
    Finite(u32),
    Inf,
}

impl fmt::Display for AdcBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdcBits::Finite(b) => write!(f, "{b}"),
            AdcBits::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for AdcBits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AdcBits::Finite(b) => s.serialize_u32(*b),
            AdcBits::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for AdcBits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(b) => Ok(AdcBits::Finite(b)),
            Raw::Text(t) if t.eq_ignore_ascii_case("inf") => Ok(AdcBits::Inf),
            Raw::Text(t) => t
                .parse()
                .map(AdcBits::Finite)
                .map_err(|_| serde::de::Error::custom(format!("invalid ADC bits {t:?}"))),
        }
    }
}

/// OMP settings; the stopping threshold defaults to the noise variance of
/// each SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmpSettings {
    pub epsilon_t: Option<f64>,
    pub max_iters: usize,
    pub normalize: bool,
}

impl Default for OmpSettings {
    fn default() -> Self {
        Self {
            epsilon_t: None,
            max_iters: 1000,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment id written to every result row.
    pub name: String,
    /// Named system; ignored when `dims` is given.
    pub preset: Option<Preset>,
    pub dims: Option<SystemDims>,
    /// Channel block. Its `n_tx`/`n_rx` are taken from the system dims.
    pub channel: ChannelConfig,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    /// Index of the first trial, so a long run can be split into pieces.
    pub first_trial: u64,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    /// Measurement vectors per trial for MBL.
    pub mbl_m: usize,
    pub adc_bits: Vec<AdcBits>,
    pub n_streams: usize,
    pub p_t: f64,
    pub ber_symbols: usize,
    /// Emit BCRLB rows in the NMSE sweep.
    pub bcrlb: bool,
    pub omp: OmpSettings,
    pub bl: BlConfig,
    pub block_basis: BlockBasis,
    /// Round the RF training phases to this many bits.
    pub rf_phase_bits: Option<u32>,
    /// Noiseless draws used to calibrate the ADC step and the MMSE prior.
    pub calibration_draws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            preset: None,
            dims: None,
            channel: ChannelConfig::default(),
            snr_db: vec![-10.0, 0.0, 10.0, 20.0],
            trials: 100,
            first_trial: 0,
            seed: 0,
            estimators: vec![
                EstimatorKind::Ls,
                EstimatorKind::Mmse,
                EstimatorKind::Omp,
                EstimatorKind::Bl,
                EstimatorKind::Mbl,
            ],
            mbl_m: 5,
            adc_bits: vec![AdcBits::Inf, AdcBits::Finite(6), AdcBits::Finite(4), AdcBits::Finite(3)],
            n_streams: 2,
            p_t: 1.0,
            ber_symbols: 10_000,
            bcrlb: true,
            omp: OmpSettings::default(),
            bl: BlConfig::default(),
            block_basis: BlockBasis::default(),
            rf_phase_bits: None,
            calibration_draws: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        Self {
            preset: Some(preset),
            ..Default::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Explicit dims, else the preset, else System-II.
    pub fn system(&self) -> SystemDims {
        self.dims
            .unwrap_or_else(|| self.preset.unwrap_or(Preset::System2).dims())
    }

    /// Channel block with the array sizes of [`Self::system`].
    pub fn channel_config(&self) -> ChannelConfig {
        let dims = self.system();
        ChannelConfig {
            n_tx: dims.n_t,
            n_rx: dims.n_r,
            ..self.channel.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = self.system();
        if [d.n_t, d.n_r, d.n_rf, d.m_t, d.m_r, d.g_t, d.g_r].contains(&0) {
            return bad("system dimensions must be positive".into());
        }
        if d.m_t % d.n_rf != 0 || d.m_r % d.n_rf != 0 {
            return bad(format!(
                "M_T = {} and M_R = {} must be multiples of N_RF = {}",
                d.m_t, d.m_r, d.n_rf
            ));
        }
        if d.n_t % d.n_rf != 0 || d.n_r % d.n_rf != 0 {
            return bad(format!(
                "N_T = {} and N_R = {} must be multiples of N_RF = {}",
                d.n_t, d.n_r, d.n_rf
            ));
        }
        if self.snr_db.is_empty() {
            return bad("snr_db must not be empty".into());
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return bad("snr_db entries must be numbers (+inf means noiseless)".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("estimators must not be empty".into());
        }
        if self.mbl_m == 0 {
            return bad("mbl_m must be at least 1".into());
        }
        if self.n_streams == 0 || self.n_streams > d.n_rf {
            return bad(format!("n_streams must be in 1..={} (N_RF)", d.n_rf));
        }
        if !(self.p_t > 0.0) {
            return bad("p_t must be positive".into());
        }
        if self.ber_symbols == 0 {
            return bad("ber_symbols must be at least 1".into());
        }
        if self.calibration_draws == 0 {
            return bad("calibration_draws must be at least 1".into());
        }
        for b in &self.adc_bits {
            if let AdcBits::Finite(n) = b {
                if !(1..=24).contains(n) {
                    return bad(format!("ADC bits must be in 1..=24 or \"inf\", got {n}"));
                }
            }
        }
        if let Some(e) = self.omp.epsilon_t {
            if !(e > 0.0) {
                return bad("omp.epsilon_t must be positive".into());
            }
        }
        if self.omp.max_iters == 0 {
            return bad("omp.max_iters must be at least 1".into());
        }
        self.bl.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.channel_config().validate()
    }
}
