//! Spreading codes, symbol streams and complex-baseband window synthesis.
//!
//! Normalization convention used throughout the crate: the noise power
//! spectral density is 1, so the per-sample complex noise variance equals the
//! sample rate and the signal amplitude is `sqrt(cn0_linear)`. With that
//! convention a coherent sum over duration `T` has mean `A*N` and
//! per-component noise deviation `sqrt(N*fs/2)`, so the symbol-decision error
//! is exactly `0.5*erfc(sqrt(cn0_linear*T))` - the same closed form the
//! analysis module exposes, which makes the two testable against each other.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{AttackKind, AttackModel};
use crate::channel::ChannelModel;
use crate::num::{db_to_linear, Scalar};

/// E1B data symbol rate: 250 symbols/s, i.e. one 4 ms code period per symbol.
pub const SYMBOL_RATE_HZ: f64 = 250.0;
/// Duration of one symbol in seconds.
pub const SYMBOL_DURATION_S: f64 = 1.0 / SYMBOL_RATE_HZ;
/// Default complex sample rate: 4 samples per chip, 2 per BOC half-period.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 4.092e6;
/// Chips per code period.
pub const CODE_LENGTH_CHIPS: usize = 4092;
/// Chip rate of the primary code.
pub const CHIP_RATE_HZ: f64 = 1.023e6;
/// BOC(1,1) square-wave subcarrier rate.
pub const BOC_SUBCARRIER_HZ: f64 = 1.023e6;

/// A binary symbol (BPSK sign), constrained to +/-1 by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Scalar>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// sign(x) with sign(0) defined as +1.
    pub fn of<T: Scalar>(x: T) -> Sign {
        if x >= T::zero() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Sign {
        if rng.gen::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Which part of the symbol a window covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowKind {
    Begin,
    End,
}

/// A sub-symbol observation window, in seconds from the symbol start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub start_s: f64,
    pub duration_s: f64,
    pub kind: WindowKind,
}

impl WindowSpec {
    pub fn begin(duration_s: f64) -> Self {
        Self {
            start_s: 0.0,
            duration_s,
            kind: WindowKind::Begin,
        }
    }

    /// End window: finishes exactly at the symbol boundary.
    pub fn end(duration_s: f64) -> Self {
        Self {
            start_s: SYMBOL_DURATION_S - duration_s,
            duration_s,
            kind: WindowKind::End,
        }
    }

    /// First sample index of the window at the given sample rate.
    pub fn start_index(&self, sample_rate_hz: f64) -> usize {
        (self.start_s * sample_rate_hz).round() as usize
    }

    /// Number of samples in the window: `round(duration * fs)`, at least 1.
    pub fn sample_count(&self, sample_rate_hz: f64) -> usize {
        ((self.duration_s * sample_rate_hz).round() as usize).max(1)
    }

    fn within_symbol(&self) -> bool {
        self.start_s >= 0.0 && self.start_s + self.duration_s <= SYMBOL_DURATION_S + 1e-12
    }
}

/// Seeded pseudorandom +/-1 spreading code with a BOC(1,1) subcarrier.
///
/// Stands in for the true E1B memory code; the detectors depend only on the
/// code's unit energy and orthogonality, not the specific sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingCode {
    chips: Vec<i8>,
    pub chip_rate_hz: f64,
    pub boc_subcarrier_hz: f64,
    pub seed: u64,
}

/// Deterministic +/-1 chip sequence from a seed.
pub fn generate_code(seed: u64, length_chips: usize) -> SpreadingCode {
    assert!(length_chips >= 1, "code needs at least one chip");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chips = (0..length_chips)
        .map(|_| if rng.gen::<bool>() { 1i8 } else { -1i8 })
        .collect();
    SpreadingCode {
        chips,
        chip_rate_hz: CHIP_RATE_HZ,
        boc_subcarrier_hz: BOC_SUBCARRIER_HZ,
        seed,
    }
}

impl SpreadingCode {
    pub fn len_chips(&self) -> usize {
        self.chips.len()
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    /// Sample-level code value at sample `n` of the symbol:
    /// chip(n) times the square-wave subcarrier, always +/-1.
    ///
    /// Positions advance by the rate ratio per sample so that integer
    /// sample-per-chip configurations index exactly (0.25 is dyadic at the
    /// default rates).
    pub fn sample(&self, n: usize, sample_rate_hz: f64) -> i8 {
        let chip_pos = n as f64 * (self.chip_rate_hz / sample_rate_hz);
        let chip_idx = chip_pos as usize % self.chips.len();
        let sub_phase = (n as f64 * (self.boc_subcarrier_hz / sample_rate_hz)).fract();
        let sub = if sub_phase < 0.5 { 1i8 } else { -1i8 };
        self.chips[chip_idx] * sub
    }

    /// Sample-level code values over one window.
    pub fn window_samples(&self, window: &WindowSpec, sample_rate_hz: f64) -> Vec<i8> {
        let start = window.start_index(sample_rate_hz);
        let count = window.sample_count(sample_rate_hz);
        (start..start + count)
            .map(|n| self.sample(n, sample_rate_hz))
            .collect()
    }
}

/// A run of data symbols with per-symbol predictability flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub symbols: Vec<Sign>,
    pub predictable: Vec<bool>,
    pub symbol_rate_hz: f64,
}

impl SymbolStream {
    /// Draw `n` unpredictable symbols.
    pub fn unpredictable<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            symbols: (0..n).map(|_| Sign::random(rng)).collect(),
            predictable: vec![false; n],
            symbol_rate_hz: SYMBOL_RATE_HZ,
        }
    }
}

/// Complex baseband samples for one correlation window.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSampleBlock<T> {
    pub samples: Vec<Complex<T>>,
    /// Offset of the first sample within the symbol, seconds.
    pub start_time_s: f64,
    pub symbol_index: usize,
    pub window_kind: WindowKind,
}

impl<T: Scalar> ComplexSampleBlock<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Signal amplitude realizing a C/N0 under the unit-PSD noise convention:
/// `A = sqrt(10^(cn0_dbhz/10))`.
pub fn amplitude_from_cn0<T: Scalar>(cn0_dbhz: T) -> T {
    db_to_linear(cn0_dbhz).sqrt()
}

/// Noiseless real-signal window: `A * gain * b * c(n)` per sample.
///
/// The real signal's carrier phase is fixed to zero (all detectors are
/// invariant to a common rotation, so the tracking reference can be
/// absorbed); residual Doppler is zero for the zero-delay attack geometry.
pub fn synthesize_real_window<T: Scalar>(
    code: &SpreadingCode,
    window: &WindowSpec,
    sample_rate_hz: f64,
    amplitude: T,
    channel_gain: Complex<T>,
    symbol: Sign,
    symbol_index: usize,
) -> ComplexSampleBlock<T> {
    assert!(window.within_symbol(), "window outside symbol bounds");
    let scale = channel_gain * (amplitude * symbol.value::<T>());
    let start = window.start_index(sample_rate_hz);
    let count = window.sample_count(sample_rate_hz);
    let samples = (start..start + count)
        .map(|n| {
            if code.sample(n, sample_rate_hz) > 0 {
                scale
            } else {
                -scale
            }
        })
        .collect();
    ComplexSampleBlock {
        samples,
        start_time_s: window.start_s,
        symbol_index,
        window_kind: window.kind,
    }
}

/// Unit-amplitude local replica of the code over a window (no symbol sign,
/// no noise); every sample is +/-1.
pub fn local_replica<T: Scalar>(
    code: &SpreadingCode,
    window: &WindowSpec,
    sample_rate_hz: f64,
    symbol_index: usize,
) -> ComplexSampleBlock<T> {
    synthesize_real_window(
        code,
        window,
        sample_rate_hz,
        T::one(),
        Complex::new(T::one(), T::zero()),
        Sign::Plus,
        symbol_index,
    )
}

/// Where the "predictable" end-window correlation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndWindowPolicy {
    /// Tail of the same unpredictable symbol (the headline configuration).
    SameSymbolTail,
    /// Tail of a randomly chosen predictable symbol (randomization defense).
    RandomPredictableSymbol,
}

/// Full description of one spoofing scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + num_traits::FromPrimitive"))]
pub struct ScenarioConfig<T> {
    pub sample_rate_hz: T,
    /// C/N0 of the real signal at the user/detector, dB-Hz.
    pub cn0_detector_real_dbhz: T,
    /// C/N0 of the spoofed signal at the user/detector, dB-Hz.
    pub cn0_detector_spoof_dbhz: T,
    /// C/N0 of the real signal at the spoofer, dB-Hz.
    pub cn0_spoofer_real_dbhz: T,
    /// Begin-window duration, seconds.
    pub window_begin_s: T,
    /// End-window duration, seconds.
    pub window_end_s: T,
    /// Number of unpredictable symbols accumulated per trial.
    pub n_symbols: usize,
    pub attack: AttackModel<T>,
    pub channel: ChannelModel<T>,
    pub end_window_policy: EndWindowPolicy,
    pub master_seed: u64,
}

impl<T: Scalar> Default for ScenarioConfig<T> {
    /// Equal-power AWGN baseline: 40/40/40 dB-Hz, 250 us windows.
    fn default() -> Self {
        Self {
            sample_rate_hz: T::from_f64_c(DEFAULT_SAMPLE_RATE_HZ),
            cn0_detector_real_dbhz: T::from_f64_c(40.0),
            cn0_detector_spoof_dbhz: T::from_f64_c(40.0),
            cn0_spoofer_real_dbhz: T::from_f64_c(40.0),
            window_begin_s: T::from_f64_c(250e-6),
            window_end_s: T::from_f64_c(250e-6),
            n_symbols: 110,
            attack: AttackModel::default(),
            channel: ChannelModel::default(),
            end_window_policy: EndWindowPolicy::SameSymbolTail,
            master_seed: 0x5ce2,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("sample_rate_hz must be positive and finite, got {0}")]
    SampleRate(String),
    #[error("{field} must be finite, got {value}")]
    NonFiniteCn0 { field: &'static str, value: String },
    #[error("{field} must be positive, got {value}")]
    WindowNotPositive { field: &'static str, value: String },
    #[error("window_begin_s + window_end_s = {total_s} exceeds the {symbol_s} s symbol")]
    WindowsExceedSymbol { total_s: String, symbol_s: f64 },
    #[error("n_symbols must be >= 1")]
    NoSymbols,
    #[error("attack: {0}")]
    Attack(String),
    #[error("channel: {0}")]
    Channel(String),
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fs = self.sample_rate_hz;
        if !(fs.is_finite() && fs > T::zero()) {
            return Err(ConfigError::SampleRate(format!("{fs}")));
        }
        for (field, v) in [
            ("cn0_detector_real_dbhz", self.cn0_detector_real_dbhz),
            ("cn0_detector_spoof_dbhz", self.cn0_detector_spoof_dbhz),
            ("cn0_spoofer_real_dbhz", self.cn0_spoofer_real_dbhz),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::NonFiniteCn0 {
                    field,
                    value: format!("{v}"),
                });
            }
        }
        for (field, v) in [
            ("window_begin_s", self.window_begin_s),
            ("window_end_s", self.window_end_s),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(ConfigError::WindowNotPositive {
                    field,
                    value: format!("{v}"),
                });
            }
        }
        let total = self.window_begin_s + self.window_end_s;
        if total.to_f64().unwrap_or(f64::INFINITY) > SYMBOL_DURATION_S + 1e-12 {
            return Err(ConfigError::WindowsExceedSymbol {
                total_s: format!("{total}"),
                symbol_s: SYMBOL_DURATION_S,
            });
        }
        if self.n_symbols < 1 {
            return Err(ConfigError::NoSymbols);
        }
        self.attack
            .validate()
            .map_err(|e| ConfigError::Attack(e.to_string()))?;
        self.channel
            .validate()
            .map_err(|e| ConfigError::Channel(e.to_string()))?;
        Ok(())
    }

    pub fn sample_rate_f64(&self) -> f64 {
        self.sample_rate_hz.to_f64().expect("finite sample rate")
    }

    pub fn begin_window(&self) -> WindowSpec {
        WindowSpec::begin(self.window_begin_s.to_f64().expect("finite window"))
    }

    pub fn end_window(&self) -> WindowSpec {
        WindowSpec::end(self.window_end_s.to_f64().expect("finite window"))
    }

    /// Real-signal amplitude `A` at the detector.
    pub fn amplitude_real(&self) -> T {
        amplitude_from_cn0(self.cn0_detector_real_dbhz)
    }

    /// Spoofed-signal amplitude `beta` at the detector.
    pub fn amplitude_spoof(&self) -> T {
        amplitude_from_cn0(self.cn0_detector_spoof_dbhz)
    }

    /// Per-sample complex noise variance at the detector.
    pub fn noise_variance(&self) -> T {
        self.channel.noise_variance(self.sample_rate_hz)
    }

    /// Hypothesis-H0-relevant scenario fingerprint. Attack-side fields and
    /// the master seed deliberately do not contribute: thresholds transfer
    /// across anything that leaves the H0 statistic distribution unchanged.
    pub fn h0_fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_f64(self.sample_rate_f64());
        h.write_f64(self.cn0_detector_real_dbhz.to_f64().unwrap());
        h.write_f64(self.window_begin_s.to_f64().unwrap());
        h.write_f64(self.window_end_s.to_f64().unwrap());
        h.write_u64(self.n_symbols as u64);
        h.write_u64(match self.end_window_policy {
            EndWindowPolicy::SameSymbolTail => 1,
            EndWindowPolicy::RandomPredictableSymbol => 2,
        });
        self.channel.fingerprint_into(&mut h);
        h.finish()
    }

    /// True iff the attack side describes hypothesis H1.
    pub fn has_attack(&self) -> bool {
        self.attack.kind != AttackKind::None
    }

    /// Same scenario with a different accumulated-symbol count.
    pub fn with_n_symbols(&self, n_symbols: usize) -> Self {
        let mut cfg = self.clone();
        cfg.n_symbols = n_symbols;
        cfg
    }
}

/// Minimal FNV-1a 64-bit hasher: deterministic across runs and platforms.
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write_bytes(&v.to_bits().to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}
