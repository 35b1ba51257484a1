//! Monte Carlo experiment harness: configs, sweeps and CSV result tables.

pub mod config;
pub mod quantize;
pub mod sweeps;
pub mod table;

pub use config::{AdcBits, EstimatorKind, ExperimentConfig, OmpSettings, Preset, SystemDims};
pub use quantize::{quantize_scalar, quantize_uniform, step_for_range};
pub use sweeps::{
    absorption_sweep, noise_var, run_adc_ablation, run_ase_sweep, run_ber_sweep, run_nmse_sweep, stream_rng,
    trial_seed, Calibration, Setup,
};
pub use table::{aggregate, Record, ResultRow, ResultTable, TrialOutcome, VERSION};
