//! Propagation effects on the real-signal path: additive white Gaussian
//! noise and an optional two-state land-mobile-satellite fading process.
//!
//! The LMS model is Loo-type: a semi-Markov good/bad state process with
//! exponential dwell times; within a state visit the direct path is a
//! log-normal (shadowed) constant and a Rayleigh diffuse component rides on
//! top, temporally correlated with the coherence time c/(v*fc). The shipped
//! default parameters are an approximation, not ground truth from any
//! measurement campaign; tests against it are qualitative.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;
use crate::waveform::{ComplexSampleBlock, Fnv1a};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT_MPS: f64 = 2.99792458e8;
/// GPS/Galileo L1/E1 carrier, Hz.
pub const L1_CARRIER_HZ: f64 = 1.57542e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    Lms,
}

/// One LMS state: mean direct-path power, shadowing spread and diffuse power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmsStateParams<T> {
    /// Mean direct-path power relative to unfaded LOS, dB.
    pub direct_mean_db: T,
    /// Log-normal shadowing deviation of the direct path, dB.
    pub shadow_std_db: T,
    /// Mean diffuse (multipath) power relative to unfaded LOS, dB.
    pub multipath_db: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + num_traits::FromPrimitive"))]
pub struct LmsParams<T> {
    pub good: LmsStateParams<T>,
    pub bad: LmsStateParams<T>,
    /// Mean dwell time in the good state, seconds.
    pub dwell_good_s: T,
    /// Mean dwell time in the bad state, seconds; zero disables the bad
    /// state entirely (static line-of-sight).
    pub dwell_bad_s: T,
    pub receiver_speed_mps: T,
    #[serde(default = "default_carrier")]
    pub carrier_freq_hz: T,
}

fn default_carrier<T: num_traits::FromPrimitive>() -> T {
    T::from_f64(L1_CARRIER_HZ).expect("carrier frequency representable")
}

impl<T: Scalar> Default for LmsParams<T> {
    /// Approximate two-state parameter set (not paper ground truth):
    /// good state 0 dB direct / 1 dB shadow / -20 dB diffuse, bad state
    /// -12 dB direct / 3 dB shadow / -10 dB diffuse, 3 s / 1 s dwells,
    /// 100 km/h receiver at the L1 carrier.
    fn default() -> Self {
        Self {
            good: LmsStateParams {
                direct_mean_db: T::from_f64_c(0.0),
                shadow_std_db: T::from_f64_c(1.0),
                multipath_db: T::from_f64_c(-20.0),
            },
            bad: LmsStateParams {
                direct_mean_db: T::from_f64_c(-12.0),
                shadow_std_db: T::from_f64_c(3.0),
                multipath_db: T::from_f64_c(-10.0),
            },
            dwell_good_s: T::from_f64_c(3.0),
            dwell_bad_s: T::from_f64_c(1.0),
            receiver_speed_mps: T::from_f64_c(100.0 / 3.6),
            carrier_freq_hz: default_carrier(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + num_traits::FromPrimitive"))]
pub struct ChannelModel<T> {
    pub kind: ChannelKind,
    /// Per-sample complex noise variance; `None` means the unit-PSD default,
    /// i.e. the sample rate.
    #[serde(default = "default_none")]
    pub noise_variance: Option<T>,
    /// Skip noise entirely (test instrumentation for noiseless identities).
    #[serde(default)]
    pub noise_bypass: bool,
    #[serde(default = "default_none")]
    pub lms: Option<LmsParams<T>>,
}

fn default_none<T>() -> Option<T> {
    None
}

impl<T: Scalar> Default for ChannelModel<T> {
    fn default() -> Self {
        Self {
            kind: ChannelKind::Awgn,
            noise_variance: None,
            noise_bypass: false,
            lms: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("noise_variance must be positive and finite, got {0}")]
    NoiseVariance(String),
    #[error("lms channel requires lms parameters")]
    MissingLmsParams,
    #[error("lms: {0}")]
    InvalidLms(String),
}

impl<T: Scalar> ChannelModel<T> {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if let Some(v) = self.noise_variance {
            if !(v.is_finite() && v > T::zero()) {
                return Err(ChannelError::NoiseVariance(format!("{v}")));
            }
        }
        match self.kind {
            ChannelKind::Awgn => Ok(()),
            ChannelKind::Lms => {
                let p = self.lms.as_ref().ok_or(ChannelError::MissingLmsParams)?;
                let pos = |v: T| v.is_finite() && v > T::zero();
                let non_neg = |v: T| v.is_finite() && v >= T::zero();
                if !pos(p.dwell_good_s) {
                    return Err(ChannelError::InvalidLms("dwell_good_s must be > 0".into()));
                }
                if !non_neg(p.dwell_bad_s) {
                    return Err(ChannelError::InvalidLms("dwell_bad_s must be >= 0".into()));
                }
                if !non_neg(p.receiver_speed_mps) {
                    return Err(ChannelError::InvalidLms("speed must be >= 0".into()));
                }
                if !pos(p.carrier_freq_hz) {
                    return Err(ChannelError::InvalidLms("carrier must be > 0".into()));
                }
                for (name, s) in [("good", &p.good), ("bad", &p.bad)] {
                    if s.shadow_std_db < T::zero() {
                        return Err(ChannelError::InvalidLms(format!(
                            "{name}.shadow_std_db must be >= 0"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Resolved per-sample complex noise variance.
    pub fn noise_variance(&self, sample_rate_hz: T) -> T {
        self.noise_variance.unwrap_or(sample_rate_hz)
    }

    pub(crate) fn fingerprint_into(&self, h: &mut Fnv1a) {
        h.write_u64(match self.kind {
            ChannelKind::Awgn => 1,
            ChannelKind::Lms => 2,
        });
        h.write_f64(
            self.noise_variance
                .map(|v| v.to_f64().unwrap())
                .unwrap_or(-1.0),
        );
        h.write_u64(self.noise_bypass as u64);
        if let Some(p) = &self.lms {
            for s in [&p.good, &p.bad] {
                h.write_f64(s.direct_mean_db.to_f64().unwrap());
                h.write_f64(s.shadow_std_db.to_f64().unwrap());
                h.write_f64(s.multipath_db.to_f64().unwrap());
            }
            h.write_f64(p.dwell_good_s.to_f64().unwrap());
            h.write_f64(p.dwell_bad_s.to_f64().unwrap());
            h.write_f64(p.receiver_speed_mps.to_f64().unwrap());
            h.write_f64(p.carrier_freq_hz.to_f64().unwrap());
        }
    }
}

/// Add independent zero-mean circular complex Gaussian noise of total
/// variance `sigma2` per sample (`sigma2/2` per component).
pub fn add_awgn<T: Scalar, R: Rng + ?Sized>(
    mut block: ComplexSampleBlock<T>,
    sigma2: T,
    rng: &mut R,
) -> ComplexSampleBlock<T> {
    add_awgn_in_place(&mut block, sigma2, rng);
    block
}

pub fn add_awgn_in_place<T: Scalar, R: Rng + ?Sized>(
    block: &mut ComplexSampleBlock<T>,
    sigma2: T,
    rng: &mut R,
) {
    assert!(sigma2 > T::zero(), "noise variance must be positive");
    let sd = (sigma2 / T::from_f64_c(2.0)).sqrt();
    for s in &mut block.samples {
        s.re += sd * T::standard_normal(rng);
        s.im += sd * T::standard_normal(rng);
    }
}

/// Channel coherence time `c / (v * fc)`; infinite for a static receiver.
pub fn coherence_time<T: Scalar>(speed_mps: T, carrier_hz: T) -> T {
    if speed_mps == T::zero() {
        return T::infinity();
    }
    assert!(speed_mps > T::zero(), "speed must be non-negative");
    T::from_f64_c(SPEED_OF_LIGHT_MPS) / (speed_mps * carrier_hz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmsState {
    Good,
    Bad,
}

/// Complex channel gain sampled once per requested window time.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsGainSeries<T> {
    pub gains: Vec<Complex<T>>,
    pub states: Vec<LmsState>,
}

/// Sample the LMS gain process at the given (ascending) times.
pub fn lms_gain_at_times<T: Scalar, R: Rng + ?Sized>(
    params: &LmsParams<T>,
    times_s: &[f64],
    rng: &mut R,
) -> LmsGainSeries<T> {
    let tc = coherence_time(params.receiver_speed_mps, params.carrier_freq_hz)
        .to_f64()
        .unwrap();
    let dwell_good = params.dwell_good_s.to_f64().unwrap();
    let dwell_bad = params.dwell_bad_s.to_f64().unwrap();
    let good_only = dwell_bad == 0.0;

    // Initial state from stationary occupancy.
    let mut state = if good_only {
        LmsState::Good
    } else {
        let p_good = dwell_good / (dwell_good + dwell_bad);
        if T::uniform_01(rng).to_f64().unwrap() < p_good {
            LmsState::Good
        } else {
            LmsState::Bad
        }
    };

    let exp_draw = |rng: &mut R, mean: f64| -> f64 {
        let u: f64 = T::uniform_01(rng).to_f64().unwrap();
        -mean * (1.0 - u).ln()
    };
    let draw_direct = |rng: &mut R, state: LmsState, params: &LmsParams<T>| -> T {
        let s = match state {
            LmsState::Good => &params.good,
            LmsState::Bad => &params.bad,
        };
        let db = s.direct_mean_db + s.shadow_std_db * T::standard_normal(rng);
        T::from_f64_c(10.0).powf(db / T::from_f64_c(20.0))
    };

    let mut next_transition = if good_only {
        f64::INFINITY
    } else {
        exp_draw(
            rng,
            match state {
                LmsState::Good => dwell_good,
                LmsState::Bad => dwell_bad,
            },
        )
    };
    let mut direct = draw_direct(rng, state, params);

    // Normalized diffuse process u ~ CN(0,1), AR(1) in time.
    let half = T::from_f64_c(0.5);
    let mut u = Complex::new(
        T::standard_normal(rng) * half.sqrt(),
        T::standard_normal(rng) * half.sqrt(),
    );
    let mut last_t = times_s.first().copied().unwrap_or(0.0);

    let mut gains = Vec::with_capacity(times_s.len());
    let mut states = Vec::with_capacity(times_s.len());
    for &t in times_s {
        debug_assert!(t >= last_t, "times must be ascending");
        // advance the state process
        while t >= next_transition {
            state = match state {
                LmsState::Good => LmsState::Bad,
                LmsState::Bad => LmsState::Good,
            };
            let mean = match state {
                LmsState::Good => dwell_good,
                LmsState::Bad => dwell_bad,
            };
            next_transition += exp_draw(rng, mean);
            direct = draw_direct(rng, state, params);
        }
        // advance the diffuse AR(1) process
        let rho = if tc.is_infinite() {
            T::one()
        } else {
            T::from_f64_c((-(t - last_t) / tc).exp())
        };
        let innov_sd = ((T::one() - rho * rho) * half).sqrt();
        u = Complex::new(
            rho * u.re + innov_sd * T::standard_normal(rng),
            rho * u.im + innov_sd * T::standard_normal(rng),
        );
        last_t = t;

        let mp_power = match state {
            LmsState::Good => params.good.multipath_db,
            LmsState::Bad => params.bad.multipath_db,
        };
        let mp_amp = T::from_f64_c(10.0).powf(mp_power / T::from_f64_c(20.0));
        gains.push(Complex::new(direct + mp_amp * u.re, mp_amp * u.im));
        states.push(state);
    }
    LmsGainSeries { gains, states }
}

/// Gain series with one sample per symbol at the given spacing.
pub fn lms_gain_series<T: Scalar, R: Rng + ?Sized>(
    params: &LmsParams<T>,
    n_symbols: usize,
    symbol_spacing_s: f64,
    rng: &mut R,
) -> LmsGainSeries<T> {
    assert!(n_symbols >= 1);
    let times: Vec<f64> = (0..n_symbols)
        .map(|k| k as f64 * symbol_spacing_s)
        .collect();
    lms_gain_at_times(params, &times, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{ComplexSampleBlock, WindowKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_block(n: usize) -> ComplexSampleBlock<f64> {
        ComplexSampleBlock {
            samples: vec![Complex::new(0.0, 0.0); n],
            start_time_s: 0.0,
            symbol_index: 0,
            window_kind: WindowKind::Begin,
        }
    }

    #[test]
    fn awgn_statistics_on_a_million_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sigma2 = 4.092e6;
        let n = 1_000_000usize;
        let block = add_awgn(zero_block(n), sigma2, &mut rng);

        let mean: Complex<f64> = block.samples.iter().sum::<Complex<f64>>() / n as f64;
        let bound = 4.0 * (sigma2 / n as f64).sqrt();
        assert!(mean.norm() < bound, "mean {} vs bound {bound}", mean.norm());

        let var: f64 = block.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        assert!(
            (var / sigma2 - 1.0).abs() < 0.01,
            "variance ratio {}",
            var / sigma2
        );
    }

    #[test]
    fn awgn_is_circular() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let block = add_awgn(zero_block(n), 2.0, &mut rng);
        let (mut vre, mut vim, mut cross) = (0.0f64, 0.0, 0.0);
        for s in &block.samples {
            vre += s.re * s.re;
            vim += s.im * s.im;
            cross += s.re * s.im;
        }
        // 1%-level two-sided critical value ~2.576 sigma
        let ratio = vre / vim;
        assert!(
            (ratio - 1.0).abs() < 2.576 * 2.0 / (n as f64).sqrt(),
            "component variance ratio {ratio}"
        );
        let corr = cross / (vre * vim).sqrt();
        assert!(
            corr.abs() < 2.576 / (n as f64).sqrt(),
            "re/im correlation {corr}"
        );
    }

    #[test]
    fn noise_bypass_is_the_callers_choice() {
        // the channel model records the bypass; the trial engine honors it
        let ch = ChannelModel::<f64> {
            noise_bypass: true,
            ..ChannelModel::default()
        };
        assert!(ch.validate().is_ok());
        assert!(ch.noise_bypass);
    }

    #[test]
    fn coherence_time_reference_points() {
        // 100 km/h at L1: ~6.85 ms
        let tc = coherence_time(100.0 / 3.6, L1_CARRIER_HZ);
        assert!((tc - 6.850572220741136e-3).abs() < 1e-12, "tc = {tc}");
        // inverse proportionality
        let tc2 = coherence_time(200.0 / 3.6, L1_CARRIER_HZ);
        assert!((tc / tc2 - 2.0).abs() < 1e-12);
        // 300 km/h: shorter than the 4 ms symbol
        let tc3 = coherence_time(300.0 / 3.6, L1_CARRIER_HZ);
        assert!((tc3 - 2.283524073580379e-3).abs() < 1e-12);
        assert!(tc3 < 4e-3);
        // static receiver sentinel
        assert!(coherence_time(0.0, L1_CARRIER_HZ).is_infinite());
    }

    #[test]
    fn lms_degenerate_static_case_is_constant() {
        let params = LmsParams::<f64> {
            good: LmsStateParams {
                direct_mean_db: 0.0,
                shadow_std_db: 0.0,
                multipath_db: -20.0,
            },
            dwell_bad_s: 0.0,
            receiver_speed_mps: 0.0,
            ..LmsParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let series = lms_gain_series(&params, 1000, 4e-3, &mut rng);
        let first = series.gains[0];
        assert!(series.gains.iter().all(|g| (g - first).norm() < 1e-12));
        assert!(series.states.iter().all(|&s| s == LmsState::Good));
    }

    #[test]
    fn lms_good_state_occupancy_matches_renewal_theory() {
        let params = LmsParams::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000usize;
        let series = lms_gain_series(&params, n, 4e-3, &mut rng);
        let good = series
            .states
            .iter()
            .filter(|&&s| s == LmsState::Good)
            .count() as f64
            / n as f64;
        let expected = 3.0 / 4.0;
        assert!(
            (good - expected).abs() < 0.05,
            "good-state fraction {good} vs {expected}"
        );
    }

    #[test]
    fn lms_adjacent_symbols_strongly_correlated_at_100_kmh() {
        let params = LmsParams::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 100_000usize;
        let series = lms_gain_series(&params, n, 4e-3, &mut rng);
        let mean: Complex<f64> = series.gains.iter().sum::<Complex<f64>>() / n as f64;
        let mut num = Complex::new(0.0, 0.0);
        let mut den = 0.0;
        for w in series.gains.windows(2) {
            num += (w[0] - mean) * (w[1] - mean).conj();
        }
        for g in &series.gains {
            den += (g - mean).norm_sqr();
        }
        let corr = num.norm() / den;
        assert!(corr > 0.8, "lag-1 correlation {corr}");
    }

    #[test]
    fn lms_gains_independent_of_noise_stream() {
        // same channel rng stream, different noise consumption
        let params = LmsParams::<f64>::default();
        let mut chan_rng = ChaCha8Rng::seed_from_u64(21);
        let a = lms_gain_series(&params, 100, 4e-3, &mut chan_rng);
        let mut chan_rng = ChaCha8Rng::seed_from_u64(21);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(99);
        let _ = add_awgn(zero_block(512), 1.0, &mut noise_rng);
        let b = lms_gain_series(&params, 100, 4e-3, &mut chan_rng);
        assert_eq!(a, b);
    }

    #[test]
    fn channel_validation() {
        let ok = ChannelModel::<f64>::default();
        assert!(ok.validate().is_ok());
        let bad = ChannelModel::<f64> {
            noise_variance: Some(-1.0),
            ..ChannelModel::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ChannelError::NoiseVariance(_))
        ));
        let bad = ChannelModel::<f64> {
            kind: ChannelKind::Lms,
            lms: None,
            ..ChannelModel::default()
        };
        assert_eq!(bad.validate(), Err(ChannelError::MissingLmsParams));
        let ok = ChannelModel::<f64> {
            kind: ChannelKind::Lms,
            lms: Some(LmsParams::default()),
            ..ChannelModel::default()
        };
        assert!(ok.validate().is_ok());
    }
}
