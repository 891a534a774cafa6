//! Closed-form timing and protocol-budget calculators.
//!
//! Covers the three desk analyses around the detector itself: how long a
//! spoofer needs to estimate an unpredictable symbol reliably, how long it
//! would take to mask the corresponding signal delay against the victim's
//! clock, and how fast the Galileo OSNMA message structure delivers
//! unpredictable symbols to the detector.

mod erf;

pub use erf::{erfc, erfc_inv};

use thiserror::Error;

use crate::num::{db_to_linear, Scalar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    /// Symbol error probability must lie in (0, 0.5): at 0.5 the sign
    /// decision is no better than chance and the required time diverges.
    #[error("symbol error probability {0} outside (0, 0.5)")]
    PeOutOfRange(String),
    #[error("duration {duration_s} s is not a multiple of the {block_period_s} s block period")]
    DurationNotBlockMultiple {
        duration_s: u64,
        block_period_s: u64,
    },
    #[error("invalid OSNMA configuration: {0}")]
    InvalidOsnmaConfig(String),
}

/// Time the spoofer needs to estimate an unpredictable symbol with error
/// probability `pe`, given the C/N0 of the real signal at the spoofer:
/// `t = erfc_inv(2 pe)^2 / cn0_linear`.
pub fn spoofer_decision_time<T: Scalar>(cn0_dbhz: T, pe: T) -> Result<T, AnalysisError> {
    if !(pe > T::zero() && pe < T::from_f64_c(0.5)) {
        return Err(AnalysisError::PeOutOfRange(format!("{pe}")));
    }
    let x = erfc_inv(T::from_f64_c(2.0) * pe);
    Ok(x * x / db_to_linear(cn0_dbhz))
}

/// Error probability of a coherent sign decision after integrating for `t`
/// seconds at the given C/N0: `0.5 erfc(sqrt(cn0_linear * t))`.
///
/// Inverse of [`spoofer_decision_time`]; also the symbol-decision error of
/// the victim-side waveform convention, which makes it a cross-module oracle
/// for the sample-level simulation.
pub fn symbol_error_prob<T: Scalar>(cn0_dbhz: T, t: T) -> T {
    assert!(t >= T::zero(), "integration time must be non-negative");
    T::from_f64_c(0.5) * erfc((db_to_linear(cn0_dbhz) * t).sqrt())
}

/// Time a spoofer needs to smuggle in a signal delay of `delay_s` without
/// exceeding the victim clock's fractional stability: `delay / stability`.
pub fn clock_masking_time<T: Scalar>(delay_s: T, stability: T) -> T {
    assert!(
        delay_s > T::zero() && stability > T::zero(),
        "delay and clock stability must be positive"
    );
    delay_s / stability
}

/// Bundle of the spoofer-timing quantities for one (C/N0, Pe, clock) case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingAnalysis<T> {
    pub cn0_dbhz: T,
    pub pe: T,
    /// Spoofer's required estimation time (seconds).
    pub t_spof: T,
    /// Victim clock fractional stability (dimensionless, e.g. 1e-7).
    pub clock_stability: T,
    /// Time needed to mask a delay of `t_spof` (seconds).
    pub masking_time: T,
}

impl<T: Scalar> TimingAnalysis<T> {
    pub fn new(cn0_dbhz: T, pe: T, clock_stability: T) -> Result<Self, AnalysisError> {
        let t_spof = spoofer_decision_time(cn0_dbhz, pe)?;
        Ok(Self {
            cn0_dbhz,
            pe,
            t_spof,
            clock_stability,
            masking_time: clock_masking_time(t_spof, clock_stability),
        })
    }
}

/// Whether TESLA key bits count toward the unpredictable-symbol budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyAssumption {
    /// Keys treated as predictable: only MAC bits count.
    Predictable,
    /// The first 64 key bits count as unpredictable (the remaining bits are
    /// assumed recoverable by brute force before broadcast).
    First64Unpredictable,
}

/// OSNMA MACK-section layout, as far as the symbol-budget arithmetic needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OsnmaConfig {
    pub mack_blocks_per_30s: u64,
    pub mac_bits: u64,
    pub macs_per_block: u64,
    pub key_bits: u64,
    pub key_assumption: KeyAssumption,
    /// One MACK block every this many seconds.
    pub block_period_s: u64,
}

impl Default for OsnmaConfig {
    /// 2 MACK blocks per 30 s, 20-bit MACs, 4 MACs per block, 96-bit keys.
    fn default() -> Self {
        Self {
            mack_blocks_per_30s: 2,
            mac_bits: 20,
            macs_per_block: 4,
            key_bits: 96,
            key_assumption: KeyAssumption::Predictable,
            block_period_s: 15,
        }
    }
}

impl OsnmaConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.mack_blocks_per_30s == 0
            || self.mac_bits == 0
            || self.macs_per_block == 0
            || self.key_bits == 0
            || self.block_period_s == 0
        {
            return Err(AnalysisError::InvalidOsnmaConfig(
                "all counts must be positive".into(),
            ));
        }
        if self.mack_blocks_per_30s * self.block_period_s != 30 {
            return Err(AnalysisError::InvalidOsnmaConfig(format!(
                "{} blocks of {} s do not tile 30 s",
                self.mack_blocks_per_30s, self.block_period_s
            )));
        }
        if self.key_assumption == KeyAssumption::First64Unpredictable && self.key_bits < 64 {
            return Err(AnalysisError::InvalidOsnmaConfig(format!(
                "first-64 key assumption needs >= 64 key bits, have {}",
                self.key_bits
            )));
        }
        Ok(())
    }

    /// Unpredictable symbols contributed by one MACK block.
    pub fn symbols_per_block(&self) -> u64 {
        let macs = self.macs_per_block * self.mac_bits;
        match self.key_assumption {
            KeyAssumption::Predictable => macs,
            KeyAssumption::First64Unpredictable => macs + 64,
        }
    }
}

/// Unpredictable symbols available in `duration_s` seconds of signal.
/// The duration must be a whole number of block periods.
pub fn osnma_symbol_budget(cfg: &OsnmaConfig, duration_s: u64) -> Result<u64, AnalysisError> {
    cfg.validate()?;
    if !duration_s.is_multiple_of(cfg.block_period_s) {
        return Err(AnalysisError::DurationNotBlockMultiple {
            duration_s,
            block_period_s: cfg.block_period_s,
        });
    }
    Ok(cfg.symbols_per_block() * (duration_s / cfg.block_period_s))
}

/// Smallest multiple of the block period whose symbol budget covers
/// `required_symbols`.
pub fn time_to_detect(required_symbols: u64, cfg: &OsnmaConfig) -> Result<u64, AnalysisError> {
    cfg.validate()?;
    assert!(required_symbols >= 1, "need at least one symbol");
    let per_block = cfg.symbols_per_block();
    let blocks = required_symbols.div_ceil(per_block);
    Ok(blocks * cfg.block_period_s)
}
