//! Seeded Monte Carlo sweeps.
//!
//! Trial `t` of a run with seed `s` owns the seed `trial_seed(s, t)`. Its
//! channel comes from ChaCha stream 0, the pilot noise of SNR point `i`
//! from stream `1 + i` and the QPSK symbols and noise of the BER loop from
//! stream `1000 + i`. Every SNR point therefore sees the same channel, and
//! every estimator at one SNR point sees the same pilots.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::absorption::AbsorptionModel;
use crate::beamspace::{
    build_dictionary, design_sounding_with, make_grid, noiseless_sounding, sensing_operator, simulate_sounding,
    SensingOperator, SoundingDesign,
};
use crate::channel::{ArrayGeometry, ChannelModel};
use crate::error::{Error, Result};
use crate::estimators::{
    bcrlb_traces, estimate_bl, estimate_mbl, estimate_omp, nmse, LsEstimator, MmseEstimator, OmpConfig,
};
use crate::linalg::{frob_sq, norm_sq, pinv, real, unvec, vec_of, CMat, CVec};
use crate::transceiver::{ase, ber_qpsk, design_digital, design_hybrid, HybridStages};

use super::config::{AdcBits, EstimatorKind, ExperimentConfig, SystemDims};
use super::quantize::{quantize_uniform, step_for_range};
use super::table::{aggregate, Record, ResultTable, TrialOutcome};

const CALIBRATION_TAG: u64 = 0x6361_6c69_6272_6174;
const BER_STREAM_OFFSET: u64 = 1000;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ trial)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `σ² = 10^{−SNR/10}`; `+inf` dB gives a noiseless link.
pub fn noise_var(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Quantities fixed once per run from noiseless draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Mean `‖H‖_F² / (N_T N_R)`; the MMSE baseline uses `R_h = ρ I`.
    pub channel_power: f64,
    /// Mean over draws of the largest `|Re|`/`|Im|` of the noiseless pilots.
    pub pilot_range: f64,
}

impl Calibration {
    /// ADC step spanning `[−range, range]`.
    pub fn adc_step(&self, bits: AdcBits) -> f64 {
        match bits {
            AdcBits::Finite(b) => step_for_range(self.pilot_range, b),
            AdcBits::Inf => 0.0,
        }
    }
}

/// One estimate of the channel; MBL produces one per measurement vector.
struct Estimate {
    h: CMat,
    h_b: Option<CVec>,
}

struct SnrPoint {
    snr_db: f64,
    noise_var: f64,
    r_v: CMat,
    mmse: Option<std::result::Result<MmseEstimator, String>>,
}

/// Everything shared by the trials of one run.
pub struct Setup {
    pub config: ExperimentConfig,
    pub dims: SystemDims,
    pub model: ChannelModel,
    pub design: SoundingDesign,
    pub operator: SensingOperator,
    /// Antenna-domain sensing matrix `Φ` for LS/MMSE.
    pub phi: CMat,
    pub calibration: Calibration,
    ar_pinv: CMat,
    at_pinv_h: CMat,
    ls: Option<LsEstimator>,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dims = config.system();
        let channel = config.channel_config();
        let model = ChannelModel::new(&channel)?;
        let mut design = design_sounding_with(dims.n_t, dims.n_r, dims.n_rf, dims.m_t, dims.m_r, config.block_basis)?;
        if let Some(bits) = config.rf_phase_bits {
            design = design.with_rounded_phases(bits);
        }
        let tx = ArrayGeometry::at_frequency(dims.n_t, channel.f_hz, channel.spacing_in_wavelengths)?;
        let rx = ArrayGeometry::at_frequency(dims.n_r, channel.f_hz, channel.spacing_in_wavelengths)?;
        let a_t = build_dictionary(&make_grid(dims.g_t)?, &tx);
        let a_r = build_dictionary(&make_grid(dims.g_r)?, &rx);
        let operator = sensing_operator(&design, &a_t, &a_r, 1.0)?;
        let phi = design.antenna_sensing();
        let ls = config
            .estimators
            .iter()
            .any(|&k| k == EstimatorKind::Ls)
            .then(|| LsEstimator::new(&phi));
        let mut setup = Self {
            config: config.clone(),
            dims,
            ar_pinv: pinv(&a_r, 1e-10),
            at_pinv_h: pinv(&a_t, 1e-10).adjoint(),
            model,
            design,
            operator,
            phi,
            calibration: Calibration {
                channel_power: 0.0,
                pilot_range: 0.0,
            },
            ls,
        };
        setup.calibration = setup.calibrate()?;
        Ok(setup)
    }

    fn calibrate(&self) -> Result<Calibration> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.config.seed ^ CALIBRATION_TAG));
        let draws = self.config.calibration_draws;
        let (mut power, mut range) = (0.0, 0.0);
        for _ in 0..draws {
            let h = match self.config.channel.seed {
                Some(s) => self.model.sample(&mut ChaCha8Rng::seed_from_u64(s))?.h,
                None => self.model.sample(&mut rng)?.h,
            };
            power += frob_sq(&h) / (h.nrows() * h.ncols()) as f64;
            let y = noiseless_sounding(&h, &self.design);
            range += y.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
        }
        let n = draws as f64;
        Ok(Calibration {
            channel_power: power / n,
            pilot_range: range / n,
        })
    }

    fn channel(&self, seed: u64) -> Result<CMat> {
        let mut rng = match self.config.channel.seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => stream_rng(seed, 0),
        };
        Ok(self.model.sample(&mut rng)?.h)
    }

    /// Minimum-norm beamspace representation `Ψ† vec(H)`.
    pub fn beamspace_projection(&self, h: &CMat) -> CVec {
        vec_of(&(&self.ar_pinv * h * &self.at_pinv_h))
    }

    fn reconstruct(&self, h_b: &CVec) -> CMat {
        let (g_r, g_t) = (self.dims.g_r, self.dims.g_t);
        &self.operator.a_r * unvec(h_b, g_r, g_t) * self.operator.a_t.adjoint()
    }

    fn points(&self, with_mmse: bool) -> Vec<SnrPoint> {
        let wants_mmse = with_mmse && self.config.estimators.contains(&EstimatorKind::Mmse);
        let n = self.dims.n_t * self.dims.n_r;
        self.config
            .snr_db
            .iter()
            .map(|&snr_db| {
                let nv = noise_var(snr_db);
                let r_v = self.design.noise_covariance(nv);
                let mmse = wants_mmse.then(|| {
                    let r_h = CMat::identity(n, n) * real(self.calibration.channel_power);
                    MmseEstimator::new(&self.phi, &r_h, &r_v).map_err(|e| e.to_string())
                });
                SnrPoint {
                    snr_db,
                    noise_var: nv,
                    r_v,
                    mmse,
                }
            })
            .collect()
    }

    fn measurements(&self) -> usize {
        if self.config.estimators.contains(&EstimatorKind::Mbl) {
            self.config.mbl_m
        } else {
            1
        }
    }

    fn soundings(&self, h: &CMat, seed: u64, index: usize, point: &SnrPoint, adc: Option<(AdcBits, f64)>) -> CMat {
        let mut rng = stream_rng(seed, 1 + index as u64);
        let m = self.measurements();
        let mut ys = CMat::zeros(self.dims.m_t * self.dims.m_r, m);
        for col in 0..m {
            let mut y = simulate_sounding(h, &self.design, point.noise_var, &mut rng);
            if let Some((bits, step)) = adc {
                y = quantize_uniform(&y, bits, step);
            }
            ys.set_column(col, &y);
        }
        ys
    }

    fn estimate(&self, kind: EstimatorKind, point: &SnrPoint, ys: &CMat) -> Result<Vec<Estimate>> {
        let y = ys.column(0).into_owned();
        let (n_r, n_t) = (self.dims.n_r, self.dims.n_t);
        let sparse = |h_b: CVec| Estimate {
            h: self.reconstruct(&h_b),
            h_b: Some(h_b),
        };
        match kind {
            EstimatorKind::Ls => {
                let ls = self
                    .ls
                    .as_ref()
                    .ok_or_else(|| Error::Config("LS estimator was not prepared".into()))?;
                Ok(vec![Estimate {
                    h: unvec(&ls.estimate(&y), n_r, n_t),
                    h_b: None,
                }])
            }
            EstimatorKind::Mmse => match &point.mmse {
                Some(Ok(est)) => Ok(vec![Estimate {
                    h: unvec(&est.estimate(&y), n_r, n_t),
                    h_b: None,
                }]),
                Some(Err(msg)) => Err(Error::Rank(msg.clone())),
                None => Err(Error::Config("MMSE estimator was not prepared".into())),
            },
            EstimatorKind::Omp => {
                let eps = self
                    .config
                    .omp
                    .epsilon_t
                    .unwrap_or(point.noise_var)
                    .max(f64::MIN_POSITIVE);
                let cfg = OmpConfig {
                    epsilon_t: eps,
                    max_iters: self.config.omp.max_iters,
                    normalize: self.config.omp.normalize,
                };
                let out = estimate_omp(&y, &self.operator.phi_tilde, &cfg)?;
                Ok(vec![sparse(out.h_b)])
            }
            EstimatorKind::Bl => {
                let out = estimate_bl(&y, &self.operator.structured, &point.r_v, &self.config.bl)?;
                Ok(vec![sparse(out.h_b.column(0).into_owned())])
            }
            EstimatorKind::Mbl => {
                let out = estimate_mbl(ys, &self.operator.structured, &point.r_v, &self.config.bl)?;
                Ok((0..ys.ncols())
                    .map(|c| sparse(out.h_b.column(c).into_owned()))
                    .collect())
            }
        }
    }

    fn nmse_trial(&self, trial: u64, points: &[SnrPoint], adc: Option<(AdcBits, f64)>) -> TrialOutcome {
        let seed = trial_seed(self.config.seed, trial);
        let mut records = Vec::new();
        let h = match self.channel(seed) {
            Ok(h) => h,
            Err(e) => return failed_trial(trial, seed, e, points, &self.config.estimators),
        };
        let h_b = self.beamspace_projection(&h);
        let energy = frob_sq(&h);
        for (i, point) in points.iter().enumerate() {
            let ys = self.soundings(&h, seed, i, point, adc);
            for &kind in &self.config.estimators {
                let name = kind.as_str();
                match self.estimate(kind, point, &ys) {
                    Ok(ests) => {
                        let k = ests.len() as f64;
                        let nm: Result<f64> = ests.iter().map(|e| nmse(&e.h, &h)).sum::<Result<f64>>().map(|s| s / k);
                        records.push(Record::new(name, point.snr_db, "nmse", nm));
                        if kind.is_sparse() {
                            let mse: f64 = ests
                                .iter()
                                .filter_map(|e| e.h_b.as_ref())
                                .map(|hb| norm_sq(&(hb - &h_b)))
                                .sum::<f64>()
                                / k;
                            records.push(Record::new(name, point.snr_db, "mse_beamspace", Ok(mse)));
                        }
                    }
                    Err(e) => {
                        let msg = e.to_string();
                        records.push(failure(name, point.snr_db, "nmse", &msg));
                        if kind.is_sparse() {
                            records.push(failure(name, point.snr_db, "mse_beamspace", &msg));
                        }
                    }
                }
            }
            if self.config.bcrlb && adc.is_none() {
                let gamma: Vec<f64> = h_b.iter().map(|z| z.norm_sqr() + self.config.bl.gamma_floor).collect();
                match bcrlb_traces(&self.operator.structured, &point.r_v, &gamma, &self.operator.psi) {
                    Ok(b) => {
                        records.push(Record::new(
                            "bcrlb",
                            point.snr_db,
                            "nmse",
                            Ok(b.mse_bound_channel / energy),
                        ));
                        records.push(Record::new(
                            "bcrlb",
                            point.snr_db,
                            "mse_beamspace",
                            Ok(b.mse_bound_beamspace),
                        ));
                    }
                    Err(e) => {
                        let msg = e.to_string();
                        records.push(failure("bcrlb", point.snr_db, "nmse", &msg));
                        records.push(failure("bcrlb", point.snr_db, "mse_beamspace", &msg));
                    }
                }
            }
        }
        TrialOutcome { trial, seed, records }
    }

    /// Link designs compared in the ASE and BER sweeps, in row order.
    fn link_designs(
        &self,
        h: &CMat,
        h_b: &CVec,
        seed: u64,
        index: usize,
        point: &SnrPoint,
    ) -> Vec<(String, Result<HybridStages>)> {
        let cfg = &self.config;
        let (n_rf, n_s, p_t, nv) = (self.dims.n_rf, cfg.n_streams, cfg.p_t, point.noise_var);
        let (a_t, a_r) = (&self.operator.a_t, &self.operator.a_r);
        let hybrid =
            |h_est: &CMat, hb_est: &CVec| design_hybrid(h_est, hb_est, a_t, a_r, n_rf, n_s, p_t, nv).map(|d| d.hybrid);
        let mut out = vec![
            ("digital-perfect".to_string(), design_digital(h, n_s, p_t, nv)),
            ("hybrid-perfect".to_string(), hybrid(h, h_b)),
        ];
        let ys = self.soundings(h, seed, index, point, None);
        for &kind in &cfg.estimators {
            let stages = self.estimate(kind, point, &ys).and_then(|ests| {
                let est = &ests[0];
                let hb_est = match &est.h_b {
                    Some(hb) => hb.clone(),
                    None => self.beamspace_projection(&est.h),
                };
                hybrid(&est.h, &hb_est)
            });
            out.push((format!("hybrid-{}", kind.as_str()), stages));
        }
        out
    }

    fn ase_trial(&self, trial: u64, points: &[SnrPoint]) -> TrialOutcome {
        let seed = trial_seed(self.config.seed, trial);
        let mut records = Vec::new();
        let h = match self.channel(seed) {
            Ok(h) => h,
            Err(e) => return failed_trial(trial, seed, e, points, &self.config.estimators),
        };
        let h_b = self.beamspace_projection(&h);
        for (i, point) in points.iter().enumerate() {
            for (name, stages) in self.link_designs(&h, &h_b, seed, i, point) {
                let value = stages.and_then(|s| ase(&h, &s, point.noise_var));
                records.push(Record::new(name, point.snr_db, "ase", value));
            }
        }
        TrialOutcome { trial, seed, records }
    }

    fn ber_trial(&self, trial: u64, points: &[SnrPoint]) -> TrialOutcome {
        let seed = trial_seed(self.config.seed, trial);
        let mut records = Vec::new();
        let h = match self.channel(seed) {
            Ok(h) => h,
            Err(e) => return failed_trial(trial, seed, e, points, &self.config.estimators),
        };
        let h_b = self.beamspace_projection(&h);
        for (i, point) in points.iter().enumerate() {
            for (name, stages) in self.link_designs(&h, &h_b, seed, i, point) {
                let value = stages.and_then(|s| {
                    let mut rng = stream_rng(seed, BER_STREAM_OFFSET + i as u64);
                    ber_qpsk(&h, &s, point.noise_var, self.config.ber_symbols, &mut rng)
                });
                records.push(Record::new(name, point.snr_db, "ber", value));
            }
        }
        TrialOutcome { trial, seed, records }
    }

    fn trial_range(&self) -> std::ops::Range<u64> {
        let first = self.config.first_trial;
        first..first + self.config.trials as u64
    }

    fn table(&self, experiment: &str, outcomes: &[TrialOutcome]) -> ResultTable {
        let mut table = ResultTable {
            rows: aggregate(experiment, self.config.seed, outcomes),
            ..Default::default()
        };
        let meta = &mut table.metadata;
        meta.insert("seed".into(), self.config.seed.to_string());
        meta.insert("first_trial".into(), self.config.first_trial.to_string());
        meta.insert("trials".into(), self.config.trials.to_string());
        meta.insert("k_abs_per_m".into(), self.model.k_abs.to_string());
        meta.insert("mmse_prior_variance".into(), self.calibration.channel_power.to_string());
        meta.insert("pilot_range".into(), self.calibration.pilot_range.to_string());
        table
    }

    /// Per-trial NMSE/MSE records (and BCRLB when enabled), in trial order.
    pub fn nmse_trials(&self) -> Vec<TrialOutcome> {
        let points = self.points(true);
        self.trial_range()
            .into_par_iter()
            .map(|t| self.nmse_trial(t, &points, None))
            .collect()
    }

    pub fn run_nmse_sweep(&self) -> ResultTable {
        self.table(&self.config.name, &self.nmse_trials())
    }

    pub fn ase_trials(&self) -> Vec<TrialOutcome> {
        let points = self.points(true);
        self.trial_range()
            .into_par_iter()
            .map(|t| self.ase_trial(t, &points))
            .collect()
    }

    pub fn run_ase_sweep(&self) -> ResultTable {
        self.table(&self.config.name, &self.ase_trials())
    }

    pub fn run_ber_sweep(&self) -> ResultTable {
        let points = self.points(true);
        let outcomes: Vec<TrialOutcome> = self
            .trial_range()
            .into_par_iter()
            .map(|t| self.ber_trial(t, &points))
            .collect();
        self.table(&self.config.name, &outcomes)
    }

    /// NMSE sweep with quantized pilots, one block of rows per ADC
    /// resolution. Experiment ids are `<name>/adc-<bits>`.
    pub fn run_adc_ablation(&self) -> ResultTable {
        let points = self.points(true);
        let mut out = ResultTable::default();
        for &bits in &self.config.adc_bits {
            let step = self.calibration.adc_step(bits);
            let outcomes: Vec<TrialOutcome> = self
                .trial_range()
                .into_par_iter()
                .map(|t| self.nmse_trial(t, &points, Some((bits, step))))
                .collect();
            let mut table = self.table(&format!("{}/adc-{bits}", self.config.name), &outcomes);
            if let AdcBits::Finite(_) = bits {
                table.metadata.insert(format!("adc_step_{bits}"), step.to_string());
            }
            out.extend(table);
        }
        out
    }
}

fn failure(estimator: &str, snr_db: f64, metric: &'static str, msg: &str) -> Record {
    Record {
        estimator: estimator.to_string(),
        snr_db,
        metric,
        value: Err(msg.to_string()),
    }
}

// A channel draw that fails takes every cell of the trial with it.
fn failed_trial(trial: u64, seed: u64, err: Error, points: &[SnrPoint], estimators: &[EstimatorKind]) -> TrialOutcome {
    let msg = err.to_string();
    let mut records = Vec::new();
    for p in points {
        for k in estimators {
            records.push(failure(k.as_str(), p.snr_db, "nmse", &msg));
        }
    }
    TrialOutcome { trial, seed, records }
}

pub fn run_nmse_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    Ok(Setup::new(config)?.run_nmse_sweep())
}

pub fn run_ase_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    Ok(Setup::new(config)?.run_ase_sweep())
}

pub fn run_ber_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    Ok(Setup::new(config)?.run_ber_sweep())
}

pub fn run_adc_ablation(config: &ExperimentConfig) -> Result<ResultTable> {
    Ok(Setup::new(config)?.run_adc_ablation())
}

/// `k_abs` on `points` frequencies evenly spaced over `[f_min, f_max]`.
pub fn absorption_sweep(model: &AbsorptionModel, f_min: f64, f_max: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if !(f_min > 0.0 && f_max >= f_min) || points == 0 {
        return Err(Error::Config("need 0 < f_min <= f_max and at least one point".into()));
    }
    let step = if points > 1 {
        (f_max - f_min) / (points - 1) as f64
    } else {
        0.0
    };
    (0..points)
        .map(|i| {
            let f = f_min + step * i as f64;
            Ok((f, model.k_abs(f)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            snr_db: vec![0.0, 10.0],
            trials: 2,
            calibration_draws: 5,
            ..Default::default()
        }
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(7, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }

    #[test]
    fn projection_matches_the_dense_pseudoinverse() {
        let setup = Setup::new(&small()).unwrap();
        let h = setup.channel(3).unwrap();
        let dense = pinv(&setup.operator.psi, 1e-10) * vec_of(&h);
        let fast = setup.beamspace_projection(&h);
        assert!((dense - fast).norm() < 1e-9 * h.norm());
    }

    #[test]
    fn nmse_sweep_has_one_row_per_cell() {
        let table = run_nmse_sweep(&small()).unwrap();
        // 5 estimators (3 sparse) plus bcrlb with two metrics, two SNR points
        assert_eq!(table.rows.len(), 2 * (5 + 3 + 2));
        assert!(table.rows.iter().all(|r| r.trials + r.failures == 2));
        assert!(table.metadata.contains_key("pilot_range"));
    }

    #[test]
    fn absorption_sweep_endpoints() {
        let model = AbsorptionModel::Fixed(0.5);
        let rows = absorption_sweep(&model, 1e11, 2e11, 3).unwrap();
        assert_eq!(rows, vec![(1e11, 0.5), (1.5e11, 0.5), (2e11, 0.5)]);
        assert!(absorption_sweep(&model, 2e11, 1e11, 3).is_err());
    }
}
