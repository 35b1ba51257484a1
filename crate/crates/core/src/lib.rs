//! Terahertz MIMO channel simulation, sparse channel estimation and hybrid
//! transceiver design.
//!
//! The crate is organised bottom-up:
//!
//! * [`absorption`]: molecular absorption from a spectral-line catalog and
//!   rough-surface reflection losses.
//! * [`channel`]: clustered LoS/NLoS channel realizations on uniform linear
//!   arrays.
//! * [`beamspace`]: angular dictionaries, the pilot sounding design and the
//!   equivalent sensing operator.
//! * [`estimators`]: LS, MMSE, OMP, sparse Bayesian learning (single and
//!   multiple measurement vectors) and the Bayesian Cramér–Rao bound.
//! * [`transceiver`]: water-filling precoding, hybrid precoder/combiner
//!   design from beamspace CSI, spectral efficiency and QPSK bit error rate.
//! * [`harness`]: seeded Monte Carlo sweeps producing CSV result tables.

pub mod absorption;
pub mod beamspace;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod transceiver;

pub use error::{Error, Result};
