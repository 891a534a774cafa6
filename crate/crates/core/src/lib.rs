//! Simulation laboratory and detection library for zero-delay SCER
//! (Security Code Estimation and Replay) attacks on GNSS signals carrying
//! unpredictable symbols.
//!
//! The crate synthesizes attacked and clean complex-baseband signal windows,
//! computes five partial-correlation spoofing detectors (R1..R5, including an
//! NWPR C/N0 estimator), calibrates Neyman-Pearson detection thresholds, and
//! runs deterministic Monte Carlo campaigns that estimate detection
//! probability versus the number of unpredictable symbols.
//!
//! Modules map onto the processing chain:
//!
//! * [`waveform`] - spreading codes, symbol streams and window synthesis
//! * [`attack`] - the spoofer's symbol estimator and transmitted waveform
//! * [`channel`] - AWGN and two-state land-mobile-satellite fading
//! * [`detector`] - partial correlations and the R1..R5 statistics
//! * [`calibration`] - empirical and closed-form (Rayleigh) thresholds
//! * [`campaign`] - the trial engine, Pd curves and required-symbol search
//! * [`analysis`] - closed-form timing and OSNMA symbol-budget calculators
//!
//! All floating-point math is generic over the [`Scalar`] type (`f32` or
//! `f64`); the `*64` aliases at the crate root are the concrete types most
//! callers want.

pub mod analysis;
pub mod attack;
pub mod calibration;
pub mod campaign;
pub mod channel;
pub mod detector;
pub mod num;
pub mod waveform;

pub use num::Scalar;

/// Concrete `f64` aliases for the main public types.
pub type Scenario64 = waveform::ScenarioConfig<f64>;
pub type Block64 = waveform::ComplexSampleBlock<f64>;
pub type Attack64 = attack::AttackModel<f64>;
pub type Channel64 = channel::ChannelModel<f64>;
pub type Pair64 = detector::PartialCorrelationPair<f64>;
pub type Statistics64 = detector::DetectorStatistics<f64>;
pub type Thresholds64 = calibration::ThresholdSet<f64>;
pub type Trial64 = campaign::TrialResult<f64>;

/// Concrete `f32` aliases.
pub type Scenario32 = waveform::ScenarioConfig<f32>;
pub type Block32 = waveform::ComplexSampleBlock<f32>;
pub type Statistics32 = detector::DetectorStatistics<f32>;
