//! Simulation and analysis of dynamic double-directional channel sounding at 28 GHz.
//!
//! The crate is organised along the measurement chain:
//!
//! - [`scene`]: time-varying geometry (static facets, moving blockers/scatterers)
//!   and the ground-truth multipath it produces.
//! - [`array`]: steerable beam patterns and the sounding beam grid.
//! - [`waveform`]: the 801-tone low-PAPR sounding signal and calibration response.
//! - [`sounder`]: the beam-swept campaign schedule and per-slot channel synthesis.
//! - [`tensor_io`]: the `DDCS` measurement file.
//! - [`evaluation`]: directional PDPs, MPC extraction, Doppler and time-series statistics.
//! - [`config`], [`presets`], [`cli`]: file formats, the three street scenarios and
//!   the simulate / evaluate / report drivers used by the `ddsounder` binary.
//!
//! Runnable walkthroughs live in `examples/` (`cargo run --release --example <name>`).

pub mod array;
pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod presets;
pub mod scene;
pub mod sounder;
pub mod tensor_io;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};

/// Complex sample type used throughout the synthesis and evaluation chain.
pub type C64 = num_complex::Complex<f64>;
