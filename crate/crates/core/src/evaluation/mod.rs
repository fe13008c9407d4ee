//! Analysis chain from measured tone responses to channel statistics.
//!
//! Per burst: calibrated delay transform per snapshot and pair, power-averaged
//! directional PDPs, an omnidirectional PDP (max over de-embedded pairs), 3D
//! peak search with sidelobe-ghost removal, per-MPC Doppler, path gain, RMS
//! delay spread and circular angle statistics. Across bursts: MPC tracking,
//! fixed vs adaptive excess loss and a hysteresis beam-switching policy.

pub mod beams;
pub mod doppler;
pub mod mpc;
pub mod pdp;
pub mod pipeline;
pub mod stats;

pub use beams::{beam_pair_analysis, beam_switch_strategy, pair_gains, BeamPairAnalysis, SwitchOutcome};
pub use doppler::{doppler_spectrum, estimate_doppler, DopplerSpectrum, ESTIMATOR_PADDING};
pub use mpc::{
    ghost_filter, peak_search_3d, tail_noise, tensor_noise, track_mpcs, Mpc, ThresholdRule, Track, TrackGates, Tracker,
};
pub use pdp::{bin_width, directional_pdp, omni_pdp, DelayWindow, PdpTensor, PdpTransform};
pub use pipeline::{evaluate_tensor, BurstSummary, CampaignReport, EvalConfig, Evaluator};
pub use stats::{angular_stats, circular_stats, path_gain, rms_delay_spread, AngleSide};
