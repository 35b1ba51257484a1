//! Molecular absorption and rough-surface reflection.
//!
//! The absorption coefficient is accumulated line by line over a spectral
//! line catalog: each line contributes
//!
//! ```text
//! k(f) = (p/p0)(T_STP/T) · Q · S · G(f),   Q = (p / R T) · q · N_A
//! ```
//!
//! where `G` is the Van Vleck–Weisskopf shape weighted by the thermal
//! `tanh` prefactor. Frequencies are in Hz throughout; the `tanh` argument
//! therefore uses `h f / (2 k_B T)`. The shape keeps the `100·c` scale of
//! the wavenumber-based formulation, and catalog intensities are expressed
//! in the matching normalization (see the bundled sample catalog).

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants (CODATA exact or recommended values).
pub mod consts {
    /// Speed of light in vacuum, m/s.
    pub const C: f64 = 2.997_924_58e8;
    /// Planck constant, J·s.
    pub const H: f64 = 6.626_070_15e-34;
    /// Boltzmann constant, J/K.
    pub const K_B: f64 = 1.380_649e-23;
    /// Avogadro constant, 1/mol.
    pub const N_A: f64 = 6.022_140_76e23;
    /// Molar gas constant, J/(mol·K).
    pub const R: f64 = 8.314_462_618;
    /// Wave impedance of free space used by the reflection model, Ω.
    pub const Z0: f64 = 377.0;
    /// One standard atmosphere in Pa.
    pub const ATM_PA: f64 = 101_325.0;
    /// Wavenumber (cm⁻¹) to frequency (Hz) conversion factor, `100·c`.
    pub const CM1_TO_HZ: f64 = 100.0 * C;
}

use consts::*;

/// Header of the line-catalog CSV format.
pub const CATALOG_HEADER: [&str; 9] = [
    "gas_id",
    "iso_id",
    "fc0_cm1",
    "delta_cm1_per_atm",
    "S_si",
    "alpha0_air_hz",
    "alpha0_self_hz",
    "gamma_T",
    "q",
];

/// Header of the reflecting-material CSV format.
pub const MATERIAL_HEADER: [&str; 3] = ["name", "Z_ohms", "sigma_m"];

const BUNDLED_CATALOG: &str = include_str!("../data/water_vapor_sample.csv");
const BUNDLED_MATERIALS: &str = include_str!("../data/materials.csv");

/// One absorption line of one isotopologue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub gas_id: String,
    pub isotopologue_id: String,
    /// Zero-pressure resonance frequency, Hz.
    pub fc0_hz: f64,
    /// Linear pressure shift, Hz/atm.
    pub delta_hz_per_atm: f64,
    /// Line intensity in the catalog normalization.
    pub intensity: f64,
    /// Air-broadened half-width at the reference conditions, Hz.
    pub alpha0_air_hz: f64,
    /// Self-broadened half-width at the reference conditions, Hz.
    pub alpha0_self_hz: f64,
    /// Temperature exponent of the half-width.
    pub gamma_t: f64,
    /// Mixing ratio of the parent gas.
    pub mixing_ratio: f64,
}

impl SpectralLine {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc0_hz > 0.0) {
            return Err(Error::Validation(format!(
                "resonance frequency must be positive, got {}",
                self.fc0_hz
            )));
        }
        if !(self.intensity >= 0.0) {
            return Err(Error::Validation(format!(
                "line intensity must be nonnegative, got {}",
                self.intensity
            )));
        }
        if !(0.0..=1.0).contains(&self.mixing_ratio) {
            return Err(Error::Validation(format!(
                "mixing ratio must lie in [0, 1], got {}",
                self.mixing_ratio
            )));
        }
        if !(self.alpha0_air_hz > 0.0 && self.alpha0_self_hz > 0.0) {
            return Err(Error::Validation("broadening half-widths must be positive".into()));
        }
        if !self.gamma_t.is_finite() || !self.delta_hz_per_atm.is_finite() {
            return Err(Error::Validation("non-finite line parameter".into()));
        }
        Ok(())
    }
}

/// Pressure and temperature of the propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumConditions {
    pub pressure_atm: f64,
    pub temperature_k: f64,
    pub reference_pressure_atm: f64,
    pub reference_temperature_k: f64,
    pub t_stp_k: f64,
}

impl Default for MediumConditions {
    /// Office scenario: 1 atm, 296 K, HITRAN reference conditions.
    fn default() -> Self {
        Self {
            pressure_atm: 1.0,
            temperature_k: 296.0,
            reference_pressure_atm: 1.0,
            reference_temperature_k: 296.0,
            t_stp_k: 273.15,
        }
    }
}

impl MediumConditions {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.pressure_atm,
            self.temperature_k,
            self.reference_pressure_atm,
            self.reference_temperature_k,
            self.t_stp_k,
        ];
        if all.iter().all(|&x| x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::Validation(
                "medium pressures and temperatures must be strictly positive".into(),
            ))
        }
    }

    fn pressure_ratio(&self) -> f64 {
        self.pressure_atm / self.reference_pressure_atm
    }

    /// Molecules per m³ of a gas with mixing ratio `q`.
    pub fn number_density(&self, q: f64) -> f64 {
        (self.pressure_atm * ATM_PA / (R * self.temperature_k)) * q * N_A
    }
}

/// A validated collection of spectral lines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralLineCatalog {
    pub lines: Vec<SpectralLine>,
}

fn parse_field(record: &csv::StringRecord, idx: usize, row: usize) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    raw.trim().parse::<f64>().map_err(|e| Error::Parse {
        row,
        column: CATALOG_HEADER[idx].to_string(),
        message: format!("`{raw}`: {e}"),
    })
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            row: 0,
            column: "header".into(),
            message: format!("expected `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

impl SpectralLineCatalog {
    pub fn new(lines: Vec<SpectralLine>) -> Result<Self> {
        for line in &lines {
            line.validate()?;
        }
        Ok(Self { lines })
    }

    /// Parses the catalog CSV. Wavenumber columns (`fc0_cm1`,
    /// `delta_cm1_per_atm`) are converted to Hz by multiplying by `100·c`.
    /// Data rows are numbered from 1 in error messages.
    pub fn from_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                row: 0,
                column: "header".into(),
                message: e.to_string(),
            })?
            .clone();
        check_header(&headers, &CATALOG_HEADER)?;

        let mut lines = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Parse {
                row,
                column: "record".into(),
                message: e.to_string(),
            })?;
            if record.len() != CATALOG_HEADER.len() {
                return Err(Error::Parse {
                    row,
                    column: "record".into(),
                    message: format!("expected {} fields, found {}", CATALOG_HEADER.len(), record.len()),
                });
            }
            let line = SpectralLine {
                gas_id: record[0].to_string(),
                isotopologue_id: record[1].to_string(),
                fc0_hz: parse_field(&record, 2, row)? * CM1_TO_HZ,
                delta_hz_per_atm: parse_field(&record, 3, row)? * CM1_TO_HZ,
                intensity: parse_field(&record, 4, row)?,
                alpha0_air_hz: parse_field(&record, 5, row)?,
                alpha0_self_hz: parse_field(&record, 6, row)?,
                gamma_t: parse_field(&record, 7, row)?,
                mixing_ratio: parse_field(&record, 8, row)?,
            };
            line.validate()
                .map_err(|e| Error::Validation(format!("row {row}: {e}")))?;
            lines.push(line);
        }
        Ok(Self { lines })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Small bundled water-vapor sample with lines near 0.33, 0.56, 6.2 and
    /// 8.0 THz (1 % H₂O by volume).
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED_CATALOG.as_bytes()).expect("bundled catalog is valid")
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

/// Pressure-shifted line center `f_c = f_c0 + δ·p/p0`.
pub fn shifted_center(line: &SpectralLine, cond: &MediumConditions) -> f64 {
    line.fc0_hz + line.delta_hz_per_atm * cond.pressure_ratio()
}

/// Lorentz half-width `α_L = [(1−q)α_air + q α_self](p/p0)(T0/T)^γ`.
pub fn lorentz_halfwidth(line: &SpectralLine, cond: &MediumConditions) -> f64 {
    let q = line.mixing_ratio;
    ((1.0 - q) * line.alpha0_air_hz + q * line.alpha0_self_hz)
        * cond.pressure_ratio()
        * (cond.reference_temperature_k / cond.temperature_k).powf(line.gamma_t)
}

fn check_frequency(f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("frequency must be positive, got {f}")))
    }
}

/// Two-term Van Vleck–Weisskopf profile `F(f)`.
pub fn van_vleck_weisskopf(line: &SpectralLine, cond: &MediumConditions, f: f64) -> Result<f64> {
    check_frequency(f)?;
    let fc = shifted_center(line, cond);
    let a = lorentz_halfwidth(line, cond);
    let sum = 1.0 / ((f - fc).powi(2) + a * a) + 1.0 / ((f + fc).powi(2) + a * a);
    Ok(CM1_TO_HZ * f * a / (PI * fc) * sum)
}

/// Spectral line shape `G(f)`: the Van Vleck–Weisskopf profile weighted by
/// `(f/f_c)·tanh(h f / 2k_BT) / tanh(h f_c / 2k_BT)`.
pub fn line_shape(line: &SpectralLine, cond: &MediumConditions, f: f64) -> Result<f64> {
    let profile = van_vleck_weisskopf(line, cond, f)?;
    let fc = shifted_center(line, cond);
    let thermal = |x: f64| (H * x / (2.0 * K_B * cond.temperature_k)).tanh();
    Ok((f / fc) * thermal(f) / thermal(fc) * profile)
}

/// Absorption coefficient contributed by one line, 1/m.
pub fn line_absorption(line: &SpectralLine, cond: &MediumConditions, f: f64) -> Result<f64> {
    let g = line_shape(line, cond, f)?;
    let q = cond.number_density(line.mixing_ratio);
    Ok(cond.pressure_ratio() * (cond.t_stp_k / cond.temperature_k) * q * line.intensity * g)
}

/// Per-line contributions to `k_abs(f)`, in catalog order.
pub fn k_abs_contributions(catalog: &SpectralLineCatalog, cond: &MediumConditions, f: f64) -> Result<Vec<f64>> {
    check_frequency(f)?;
    catalog
        .lines
        .iter()
        .map(|line| line_absorption(line, cond, f))
        .collect()
}

/// Molecular absorption coefficient `k_abs(f)` in 1/m.
pub fn k_abs(catalog: &SpectralLineCatalog, cond: &MediumConditions, f: f64) -> Result<f64> {
    Ok(k_abs_contributions(catalog, cond, f)?.iter().sum())
}

/// Where the absorption coefficient of an experiment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AbsorptionModel {
    /// Line-by-line sum over a catalog.
    Catalog {
        catalog: SpectralLineCatalog,
        conditions: MediumConditions,
    },
    /// Scalar override, bypassing the catalog.
    Fixed(f64),
}

impl AbsorptionModel {
    pub fn bundled() -> Self {
        AbsorptionModel::Catalog {
            catalog: SpectralLineCatalog::bundled(),
            conditions: MediumConditions::default(),
        }
    }

    pub fn k_abs(&self, f: f64) -> Result<f64> {
        match self {
            AbsorptionModel::Catalog { catalog, conditions } => k_abs(catalog, conditions, f),
            AbsorptionModel::Fixed(k) => {
                check_frequency(f)?;
                Ok(*k)
            }
        }
    }
}

/// A reflecting medium: constant wave impedance and surface roughness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub name: String,
    /// Wave impedance `Z(f)` of the medium, Ω.
    pub impedance_ohms: f64,
    /// Standard deviation of the surface roughness, m.
    pub roughness_sigma_m: f64,
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.roughness_sigma_m >= 0.0) {
            return Err(Error::Validation(format!(
                "surface `{}`: roughness must be nonnegative",
                self.name
            )));
        }
        if !(self.impedance_ohms > 0.0) {
            return Err(Error::Validation(format!(
                "surface `{}`: impedance must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

/// Parses a material CSV with header `name,Z_ohms,sigma_m`.
pub fn load_materials<R: Read>(source: R) -> Result<Vec<SurfaceSpec>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            column: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    check_header(&headers, &MATERIAL_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: "record".into(),
            message: e.to_string(),
        })?;
        let num = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>().map_err(|e| Error::Parse {
                row,
                column: MATERIAL_HEADER[idx].into(),
                message: format!("`{raw}`: {e}"),
            })
        };
        let surface = SurfaceSpec {
            name: record.get(0).unwrap_or("").to_string(),
            impedance_ohms: num(1)?,
            roughness_sigma_m: num(2)?,
        };
        surface.validate()?;
        out.push(surface);
    }
    Ok(out)
}

/// Bundled indoor materials with roughness 0.05, 0.13 and 0.15 mm.
pub fn bundled_materials() -> Vec<SurfaceSpec> {
    load_materials(BUNDLED_MATERIALS.as_bytes()).expect("bundled materials are valid")
}

/// Reflection loss of one bounce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    /// Fresnel coefficient `γ`.
    pub fresnel: f64,
    /// Rayleigh roughness factor `ϱ`.
    pub roughness: f64,
    /// `Γ = γ·ϱ`.
    pub total: f64,
}

/// Rayleigh roughness factor `ϱ = exp(−½(4π f σ cosθ / c)²)`.
pub fn roughness_factor(sigma_m: f64, f: f64, theta_in: f64) -> f64 {
    let x = 4.0 * PI * f * sigma_m * theta_in.cos() / C;
    (-0.5 * x * x).exp()
}

/// Fresnel/Rayleigh reflection coefficient of a rough surface.
///
/// Fails with [`Error::TotalReflection`] when `sin θ_in · Z/Z0` leaves
/// `[−1, 1]`; callers treat such a path as blocked.
pub fn reflection_coefficient(surface: &SurfaceSpec, f: f64, theta_in: f64) -> Result<Reflection> {
    check_frequency(f)?;
    if !(0.0..PI / 2.0).contains(&theta_in) {
        return Err(Error::Domain(format!(
            "incidence angle must lie in [0, π/2), got {theta_in}"
        )));
    }
    let z = surface.impedance_ohms;
    let argument = theta_in.sin() * z / Z0;
    if !(-1.0..=1.0).contains(&argument) {
        return Err(Error::TotalReflection { argument });
    }
    let theta_ref = argument.asin();
    let num = z * theta_in.cos() - Z0 * theta_ref.cos();
    let den = z * theta_in.cos() + Z0 * theta_ref.cos();
    let fresnel = num / den;
    let roughness = roughness_factor(surface.roughness_sigma_m, f, theta_in);
    Ok(Reflection {
        fresnel,
        roughness,
        total: fresnel * roughness,
    })
}

/// Equivalent coefficient of a multi-bounce path: the product of the
/// per-bounce coefficients.
pub fn equivalent_reflection(per_bounce: &[f64]) -> f64 {
    per_bounce.iter().product()
}
