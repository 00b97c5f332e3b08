//! Asymptotic secret key rates for four-state discrete-modulated
//! measurement-device-independent CV-QKD, with and without zero-photon
//! catalysis, plus the optimizers and sweeps built on top of them.
//!
//! The closed-form pipeline lives in [`modulation`], [`catalysis`],
//! [`channel`] and [`keyrate`]. [`optimizer`] searches over the catalysis
//! transmittance and the modulation variance and locates security
//! thresholds. [`fock`] rebuilds the same statistics from a truncated Fock
//! basis as an independent check, and [`sweep`] drives the
//! parameter scans used by the `keyrate` binary.

pub mod catalysis;
pub mod channel;
pub mod error;
pub mod fock;
pub mod keyrate;
pub mod modulation;
pub mod optimizer;
pub mod sweep;

pub use catalysis::{apply_catalysis, success_probability, CatalysisResult};
pub use channel::{equivalent_channel, Case, ChannelScenario, EquivalentChannel, DEFAULT_KAPPA};
pub use error::{Error, Result};
pub use keyrate::{original_key_rate, plob_bound, secret_key_rate, KeyRateResult, TwoModeCovariance};
pub use modulation::{modulation_state, ModulationState};
pub use optimizer::{max_distance, maximize_over_t, maximize_over_v, noise_threshold, Interval, OptimizationOutcome, Protocol, TPolicy, TSearch};
pub use sweep::{run_sweep, Command, Format, SweepConfig, Table};
