//! The spoofer: sample-by-sample estimation of unpredictable symbols and the
//! transmitted waveform for the three zero-delay attack flavors.
//!
//! The spoofer is granted the worst case for the defender: perfect code and
//! carrier wipe-off of its own received signal and zero processing latency.
//! Its running hard decision after `m` samples is
//! `sign(Re{sum_{n<=m} y_s(n) x*(n)})` with `sign(0) := +1`, so the decision
//! error probability after integrating for `t` seconds is exactly
//! `0.5 erfc(sqrt(cn0_linear * t))`.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{spoofer_decision_time, symbol_error_prob};
use crate::num::{db_to_linear, Scalar};
use crate::waveform::{ComplexSampleBlock, Sign, SpreadingCode, WindowSpec, SYMBOL_DURATION_S};

/// How the spoofer fills the start of an unpredictable symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Transmit the running sample-by-sample symbol estimate.
    EstimatedValue,
    /// Transmit a random +/-1 guess until the estimate is reliable.
    RandomValue,
    /// Transmit nothing until the estimate is reliable.
    ZeroValue,
    /// No spoofer: hypothesis H0.
    None,
}

/// Phase of the spoofed carrier relative to the real one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpoofPhasePolicy {
    /// Delta-phi drawn once per trial from U[0, 2pi).
    UniformPerTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackModel<T> {
    pub kind: AttackKind,
    /// Duration of the initial random/zero segment. `None` anchors it to the
    /// time the spoofer needs for a 0.1 error probability at its own C/N0.
    #[serde(default = "default_none")]
    pub guess_duration_s: Option<T>,
    #[serde(default = "default_phase_policy")]
    pub spoof_phase_policy: SpoofPhasePolicy,
}

fn default_phase_policy() -> SpoofPhasePolicy {
    SpoofPhasePolicy::UniformPerTrial
}

fn default_none<T>() -> Option<T> {
    None
}

impl<T: Scalar> Default for AttackModel<T> {
    fn default() -> Self {
        Self {
            kind: AttackKind::EstimatedValue,
            guess_duration_s: None,
            spoof_phase_policy: SpoofPhasePolicy::UniformPerTrial,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("attack kind `none` has no spoofed component (hypothesis H0)")]
    NoSpoofedComponent,
    #[error("guess_duration_s {0} outside (0, 4 ms)")]
    GuessDurationOutOfRange(String),
    #[error("guess duration only applies to random_value/zero_value attacks")]
    GuessDurationNotApplicable,
    #[error("decision trace ({trace} samples) does not cover the window ({window} samples)")]
    TraceTooShort { trace: usize, window: usize },
}

impl<T: Scalar> AttackModel<T> {
    pub fn validate(&self) -> Result<(), AttackError> {
        match self.kind {
            AttackKind::RandomValue | AttackKind::ZeroValue => {
                if let Some(d) = self.guess_duration_s {
                    let d64 = d.to_f64().unwrap_or(f64::NAN);
                    if !(d64 > 0.0 && d64 < SYMBOL_DURATION_S) {
                        return Err(AttackError::GuessDurationOutOfRange(format!("{d}")));
                    }
                }
            }
            AttackKind::EstimatedValue | AttackKind::None => {
                if self.guess_duration_s.is_some() {
                    return Err(AttackError::GuessDurationNotApplicable);
                }
            }
        }
        Ok(())
    }

    /// Resolved guess segment length in samples for random/zero attacks.
    pub fn guess_boundary_samples(&self, cn0_spoofer_real_dbhz: T, sample_rate_hz: T) -> usize {
        let duration = self
            .guess_duration_s
            .map(|d| d.to_f64().unwrap())
            .unwrap_or_else(|| {
                spoofer_decision_time(cn0_spoofer_real_dbhz, T::from_f64_c(0.1))
                    .expect("0.1 is a valid error probability")
                    .to_f64()
                    .unwrap()
            });
        ((duration * sample_rate_hz.to_f64().unwrap()).round() as usize).max(1)
    }
}

/// Per-sample hard decisions of the spoofer over one begin window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpooferDecisionTrace {
    /// `decisions[m-1]` is the decision after accumulating `m` samples;
    /// it depends only on samples `1..=m` (causality).
    pub decisions: Vec<Sign>,
}

impl SpooferDecisionTrace {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }
}

/// Deterministic core of the estimator: decisions from the real parts of the
/// spoofer's code-wiped received samples. Exposed so causality and symmetry
/// are directly testable.
pub fn decisions_from_samples<T: Scalar>(
    true_symbol: Sign,
    amplitude: T,
    noise_re: &[T],
) -> SpooferDecisionTrace {
    let signal = amplitude * true_symbol.value::<T>();
    let mut acc = T::zero();
    let decisions = noise_re
        .iter()
        .map(|&w| {
            acc += signal + w;
            Sign::of(acc)
        })
        .collect();
    SpooferDecisionTrace { decisions }
}

/// Simulate the spoofer's reception of the true symbol at its own C/N0 and
/// return the running hard decision for every prefix length.
///
/// An infinite C/N0 is the noiseless sentinel: every decision equals the
/// true symbol.
pub fn spoofer_estimate_stream<T: Scalar, R: Rng + ?Sized>(
    true_symbol: Sign,
    cn0_spoofer_real_dbhz: T,
    window_samples: usize,
    sample_rate_hz: T,
    rng: &mut R,
) -> SpooferDecisionTrace {
    assert!(window_samples >= 1, "window must hold at least one sample");
    if cn0_spoofer_real_dbhz == T::infinity() {
        return SpooferDecisionTrace {
            decisions: vec![true_symbol; window_samples],
        };
    }
    let amplitude = db_to_linear(cn0_spoofer_real_dbhz).sqrt();
    // Per-component noise deviation sqrt(sigma^2/2) with sigma^2 = fs.
    let noise_sd = (sample_rate_hz / T::from_f64_c(2.0)).sqrt();
    let signal = amplitude * true_symbol.value::<T>();
    let mut acc = T::zero();
    let decisions = (0..window_samples)
        .map(|_| {
            acc += signal + noise_sd * T::standard_normal(rng);
            Sign::of(acc)
        })
        .collect();
    SpooferDecisionTrace { decisions }
}

/// The spoofer's transmitted begin-window samples:
/// `beta * b~(n) * c(n) * e^{j delta_phi}` where `b~` depends on the attack.
///
/// `initial_guess` must be supplied for the random-value attack (one +/-1 per
/// symbol, drawn by the caller) and is ignored otherwise.
#[allow(clippy::too_many_arguments)]
pub fn spoofed_begin_window<T: Scalar>(
    attack: &AttackModel<T>,
    trace: &SpooferDecisionTrace,
    initial_guess: Option<Sign>,
    beta: T,
    delta_phi: T,
    code: &SpreadingCode,
    window: &WindowSpec,
    sample_rate_hz: T,
    cn0_spoofer_real_dbhz: T,
) -> Result<ComplexSampleBlock<T>, AttackError> {
    let fs = sample_rate_hz.to_f64().unwrap();
    let count = window.sample_count(fs);
    let start = window.start_index(fs);
    if trace.len() < count {
        return Err(AttackError::TraceTooShort {
            trace: trace.len(),
            window: count,
        });
    }
    let rotation = Complex::new(delta_phi.cos(), delta_phi.sin()) * beta;
    let zero = Complex::new(T::zero(), T::zero());

    let sample_value = |n: usize, symbol: Sign| -> Complex<T> {
        let c = T::from_f64_c(code.sample(start + n, fs) as f64);
        rotation * (c * symbol.value::<T>())
    };

    let samples: Vec<Complex<T>> = match attack.kind {
        AttackKind::None => return Err(AttackError::NoSpoofedComponent),
        AttackKind::EstimatedValue => (0..count)
            .map(|n| sample_value(n, trace.decisions[n]))
            .collect(),
        AttackKind::RandomValue | AttackKind::ZeroValue => {
            let boundary = attack
                .guess_boundary_samples(cn0_spoofer_real_dbhz, sample_rate_hz)
                .min(count);
            // Decision frozen at the guess boundary.
            let post = trace.decisions[boundary - 1];
            (0..count)
                .map(|n| {
                    if n < boundary {
                        match attack.kind {
                            AttackKind::RandomValue => sample_value(
                                n,
                                initial_guess.expect("random_value attack needs a guess"),
                            ),
                            _ => zero,
                        }
                    } else {
                        sample_value(n, post)
                    }
                })
                .collect()
        }
    };
    Ok(ComplexSampleBlock {
        samples,
        start_time_s: window.start_s,
        symbol_index: 0,
        window_kind: window.kind,
    })
}

/// The symbol the spoofer transmits during the end window.
///
/// By the end-window start the spoofer has integrated for several
/// milliseconds, so instead of simulating those samples the decision flips
/// with the closed-form error probability at `t = end_window_start_s`
/// (below 1e-16 in every tabulated configuration).
pub fn end_window_symbol<T: Scalar, R: Rng + ?Sized>(
    cn0_spoofer_real_dbhz: T,
    end_window_start_s: T,
    true_symbol: Sign,
    rng: &mut R,
) -> Sign {
    let t = end_window_start_s.to_f64().unwrap();
    assert!(
        t > 0.0 && t < SYMBOL_DURATION_S,
        "end window must start inside the symbol"
    );
    let pe = if cn0_spoofer_real_dbhz == T::infinity() {
        T::zero()
    } else {
        symbol_error_prob(cn0_spoofer_real_dbhz, end_window_start_s)
    };
    if T::uniform_01(rng) < pe {
        true_symbol.flip()
    } else {
        true_symbol
    }
}
