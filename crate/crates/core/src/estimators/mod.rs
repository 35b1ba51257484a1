//! Channel estimators for `y = Φ̃ h_b + v` and the Bayesian Cramér–Rao
//! benchmark.
//!
//! * [`classical`]: antenna-domain LS and linear MMSE, plus the NMSE metric.
//! * [`omp`]: orthogonal matching pursuit over the beamspace dictionary.
//! * [`sbl`]: sparse Bayesian learning by EM, for one (BL) or several
//!   (MBL) measurement vectors sharing a support.
//! * [`bcrlb`]: Bayesian Fisher information and the resulting MSE bounds.

pub mod bcrlb;
pub mod classical;
pub mod omp;
pub mod sbl;

pub use bcrlb::{bcrlb, bcrlb_traces, oracle_gamma, CrlbResult};
pub use classical::{estimate_ls, estimate_mmse, nmse, LsEstimator, MmseEstimator};
pub use omp::{estimate_omp, OmpConfig, OmpResult};
pub use sbl::{estimate_bl, estimate_mbl, BlConfig, BlIteration, BlOutput, HyperparameterState, InversionPath};
