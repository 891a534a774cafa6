//! Detection thresholds: empirical H0 quantiles for every detector, plus the
//! closed-form Rayleigh threshold for R3.
//!
//! Under H0 the averaged begin/end correlation difference is a zero-mean
//! complex Gaussian, so R3 is Rayleigh with per-component scale
//! `s = sqrt(N * sigma2 / N_b)` and the Pfa inversion has the closed form
//! `gamma = s * sqrt(2 ln(1/pfa))`. The other four statistics are calibrated
//! empirically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::{self, wilson_interval};
use crate::detector::Detector;
use crate::num::Scalar;
use crate::waveform::ScenarioConfig;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("pfa must be in (0, 1), got {0}")]
    InvalidPfa(f64),
    #[error("need at least {required} H0 samples for pfa={pfa} (50/pfa), have {have}")]
    TooFewSamples {
        have: usize,
        required: usize,
        pfa: f64,
    },
    #[error("threshold fingerprint {found:#018x} does not match scenario {expected:#018x}")]
    FingerprintMismatch { expected: u64, found: u64 },
    #[error("threshold file parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("verification needs at least 1000 trials, got {0}")]
    TooFewVerifyTrials(u64),
    #[error("campaign: {0}")]
    Campaign(String),
}

/// Upper empirical quantile: the `ceil((1-pfa)*M)`-th order statistic.
/// The threshold test is "statistic > gamma declares spoofing".
pub fn empirical_threshold<T: Scalar>(
    h0_statistics: &[T],
    pfa: f64,
) -> Result<T, CalibrationError> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(CalibrationError::InvalidPfa(pfa));
    }
    let m = h0_statistics.len();
    let required = (50.0 / pfa).ceil() as usize;
    if m < required {
        return Err(CalibrationError::TooFewSamples {
            have: m,
            required,
            pfa,
        });
    }
    let mut sorted = h0_statistics.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("statistics must not be NaN"));
    // Index such that at most floor(pfa*M) samples exceed the threshold;
    // identical to the ceil((1-pfa)*M)-th order statistic (1-based).
    let exceedances = (pfa * m as f64).floor() as usize;
    Ok(sorted[m - exceedances - 1])
}

/// Per-component standard deviation of the averaged correlation difference
/// under H0 with independent equal-length windows:
/// `s = sqrt(N * sigma2 / N_b)`.
pub fn rayleigh_scale_r3<T: Scalar>(noise_sigma2: T, window_samples: usize, n_symbols: usize) -> T {
    assert!(noise_sigma2 > T::zero() && window_samples >= 1 && n_symbols >= 1);
    (T::from_f64_c(window_samples as f64) * noise_sigma2 / T::from_f64_c(n_symbols as f64)).sqrt()
}

/// Rayleigh quantile inversion: `gamma = s * sqrt(2 ln(1/pfa))`.
pub fn rayleigh_threshold<T: Scalar>(scale: T, pfa: f64) -> T {
    assert!(scale > T::zero());
    assert!(pfa > 0.0 && pfa < 1.0, "pfa must be in (0,1)");
    scale * (T::from_f64_c(2.0) * T::from_f64_c((1.0 / pfa).ln())).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    Empirical,
    Rayleigh,
}

impl ThresholdMethod {
    fn as_str(self) -> &'static str {
        match self {
            ThresholdMethod::Empirical => "empirical",
            ThresholdMethod::Rayleigh => "rayleigh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdEntry<T> {
    pub gamma: T,
    pub method: ThresholdMethod,
}

/// Calibrated per-detector thresholds for one scenario fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet<T> {
    pub target_pfa: f64,
    entries: [Option<ThresholdEntry<T>>; 5],
    pub h0_trial_count: u64,
    pub fingerprint: u64,
}

const THRESHOLD_FILE_HEADER: &str = "scersim-thresholds v1";

impl<T: Scalar> ThresholdSet<T> {
    pub fn new(target_pfa: f64, h0_trial_count: u64, fingerprint: u64) -> Self {
        Self {
            target_pfa,
            entries: [None; 5],
            h0_trial_count,
            fingerprint,
        }
    }

    pub fn set(&mut self, d: Detector, gamma: T, method: ThresholdMethod) {
        assert!(gamma >= T::zero(), "thresholds are non-negative");
        self.entries[d.index()] = Some(ThresholdEntry { gamma, method });
    }

    pub fn get(&self, d: Detector) -> Option<ThresholdEntry<T>> {
        self.entries[d.index()]
    }

    pub fn check_fingerprint(&self, config: &ScenarioConfig<T>) -> Result<(), CalibrationError> {
        let expected = config.h0_fingerprint();
        if self.fingerprint != expected {
            return Err(CalibrationError::FingerprintMismatch {
                expected,
                found: self.fingerprint,
            });
        }
        Ok(())
    }

    /// Versioned human-readable key-value serialization.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(THRESHOLD_FILE_HEADER);
        out.push('\n');
        out.push_str(&format!("fingerprint = {:#018x}\n", self.fingerprint));
        out.push_str(&format!("target_pfa = {}\n", self.target_pfa));
        out.push_str(&format!("h0_trials = {}\n", self.h0_trial_count));
        for d in Detector::ALL {
            if let Some(e) = self.get(d) {
                out.push_str(&format!(
                    "{} = {:e} {}\n",
                    d.name(),
                    e.gamma.to_f64().unwrap(),
                    e.method.as_str()
                ));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CalibrationError> {
        let parse_err = |line: usize, reason: &str| CalibrationError::Parse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty threshold file"))?;
        if header.trim() != THRESHOLD_FILE_HEADER {
            return Err(parse_err(1, "unrecognized header/version"));
        }
        let mut fingerprint = None;
        let mut target_pfa = None;
        let mut h0_trials = None;
        let mut entries: [Option<ThresholdEntry<T>>; 5] = [None; 5];
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "fingerprint" => {
                    let stripped = value.strip_prefix("0x").unwrap_or(value);
                    fingerprint = Some(
                        u64::from_str_radix(stripped, 16)
                            .map_err(|e| parse_err(line_no, &format!("bad fingerprint: {e}")))?,
                    );
                }
                "target_pfa" => {
                    target_pfa = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| parse_err(line_no, &format!("bad pfa: {e}")))?,
                    );
                }
                "h0_trials" => {
                    h0_trials = Some(
                        value
                            .parse::<u64>()
                            .map_err(|e| parse_err(line_no, &format!("bad trial count: {e}")))?,
                    );
                }
                name => {
                    let d = Detector::parse(name)
                        .ok_or_else(|| parse_err(line_no, &format!("unknown key `{name}`")))?;
                    let mut parts = value.split_whitespace();
                    let gamma: f64 = parts
                        .next()
                        .ok_or_else(|| parse_err(line_no, "missing threshold value"))?
                        .parse()
                        .map_err(|e| parse_err(line_no, &format!("bad threshold: {e}")))?;
                    let method = match parts.next() {
                        Some("empirical") => ThresholdMethod::Empirical,
                        Some("rayleigh") => ThresholdMethod::Rayleigh,
                        other => {
                            return Err(parse_err(line_no, &format!("bad method tag {other:?}")))
                        }
                    };
                    if parts.next().is_some() {
                        return Err(parse_err(line_no, "trailing tokens"));
                    }
                    entries[d.index()] = Some(ThresholdEntry {
                        gamma: T::from_f64_c(gamma),
                        method,
                    });
                }
            }
        }
        Ok(Self {
            target_pfa: target_pfa.ok_or_else(|| parse_err(0, "missing target_pfa"))?,
            entries,
            h0_trial_count: h0_trials.ok_or_else(|| parse_err(0, "missing h0_trials"))?,
            fingerprint: fingerprint.ok_or_else(|| parse_err(0, "missing fingerprint"))?,
        })
    }

    /// Parse and enforce the fingerprint against the scenario it will serve.
    pub fn from_text_for_config(
        text: &str,
        config: &ScenarioConfig<T>,
    ) -> Result<Self, CalibrationError> {
        let set = Self::from_text(text)?;
        set.check_fingerprint(config)?;
        Ok(set)
    }
}

/// Empirical false-alarm rate of one detector at its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfaEstimate {
    pub pfa: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

/// Per-detector empirical Pfa report from fresh H0 trials.
#[derive(Debug, Clone, PartialEq)]
pub struct PfaReport {
    pub estimates: [Option<PfaEstimate>; 5],
}

impl PfaReport {
    pub fn get(&self, d: Detector) -> Option<PfaEstimate> {
        self.estimates[d.index()]
    }
}

/// Run fresh H0 trials (a dedicated verification stream, disjoint from the
/// calibration stream) and report the fraction exceeding each threshold.
pub fn verify_pfa<T: Scalar>(
    thresholds: &ThresholdSet<T>,
    config: &ScenarioConfig<T>,
    trials: u64,
) -> Result<PfaReport, CalibrationError> {
    if trials < 1000 {
        return Err(CalibrationError::TooFewVerifyTrials(trials));
    }
    thresholds.check_fingerprint(config)?;
    let stats = campaign::h0_statistics_for_verification(config, trials)
        .map_err(|e| CalibrationError::Campaign(e.to_string()))?;
    let mut estimates = [None; 5];
    for d in Detector::ALL {
        if let Some(entry) = thresholds.get(d) {
            let exceed = stats
                .iter()
                .filter(|s| s.value(d).map(|v| v > entry.gamma).unwrap_or(false))
                .count() as u64;
            let (lo, hi) = wilson_interval(exceed, trials);
            estimates[d.index()] = Some(PfaEstimate {
                pfa: exceed as f64 / trials as f64,
                ci_low: lo,
                ci_high: hi,
                trials,
            });
        }
    }
    Ok(PfaReport { estimates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_threshold_order_statistic_oracle() {
        // 1..=10000 at pfa = 0.02: gamma = 9800, leaving 200 exceedances
        // (the 98th percentile of an evenly spaced sample)
        let values: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        let gamma = empirical_threshold(&values, 0.02).unwrap();
        assert_eq!(gamma, 9800.0);
        assert_eq!(values.iter().filter(|&&v| v > gamma).count(), 200);
        // small-sample variant within the 50/pfa gate: 100 values, pfa 0.5
        let values: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let gamma = empirical_threshold(&values, 0.5).unwrap();
        assert_eq!(gamma, 50.0);
    }

    #[test]
    fn empirical_threshold_pfa_to_one_gives_minimum() {
        let values: Vec<f64> = (1..=200).map(|i| i as f64).collect();
        let gamma = empirical_threshold(&values, 0.999).unwrap();
        assert_eq!(gamma, 1.0);
    }

    #[test]
    fn empirical_threshold_constant_list() {
        let values = vec![3.5f64; 5000];
        let gamma = empirical_threshold(&values, 0.02).unwrap();
        assert_eq!(gamma, 3.5);
        // empirical pfa on the calibration sample itself is 0 (strict >)
        assert_eq!(values.iter().filter(|&&v| v > gamma).count(), 0);
    }

    #[test]
    fn empirical_threshold_sample_size_gate() {
        let values = vec![1.0f64; 100];
        match empirical_threshold(&values, 0.02) {
            Err(CalibrationError::TooFewSamples { required, .. }) => assert_eq!(required, 2500),
            other => panic!("expected TooFewSamples, got {other:?}"),
        }
        assert!(matches!(
            empirical_threshold(&values, 0.0),
            Err(CalibrationError::InvalidPfa(_))
        ));
        assert!(matches!(
            empirical_threshold(&values, 1.0),
            Err(CalibrationError::InvalidPfa(_))
        ));
    }

    #[test]
    fn exceedance_fraction_never_exceeds_pfa() {
        // up to 1/M granularity, on the calibration sample itself
        let mut values: Vec<f64> = (0..4000)
            .map(|i| ((i * 2654435761u64 as usize) % 10007) as f64)
            .collect();
        values.dedup();
        for pfa in [0.05, 0.02, 0.013] {
            if values.len() >= (50.0f64 / pfa).ceil() as usize {
                let gamma = empirical_threshold(&values, pfa).unwrap();
                let frac =
                    values.iter().filter(|&&v| v > gamma).count() as f64 / values.len() as f64;
                assert!(frac <= pfa + 1e-12, "pfa {pfa}: fraction {frac}");
                assert!(frac >= pfa - 1.0 / values.len() as f64 - 1e-12);
            }
        }
    }

    #[test]
    fn threshold_monotone_in_pfa() {
        let values: Vec<f64> = (1..=5000).map(|i| (i as f64).sqrt()).collect();
        let mut prev = f64::INFINITY;
        for pfa in [0.01, 0.02, 0.05, 0.1, 0.5] {
            let gamma = empirical_threshold(&values, pfa).unwrap();
            assert!(gamma <= prev, "gamma must not increase with pfa");
            prev = gamma;
        }
    }

    #[test]
    fn rayleigh_scale_scaling_laws() {
        let s1: f64 = rayleigh_scale_r3(4.092e6, 1023, 100);
        let s4 = rayleigh_scale_r3(4.092e6, 1023, 400);
        assert!((s1 / s4 - 2.0).abs() < 1e-12, "quadrupling N_b halves s");
        let s2 = rayleigh_scale_r3(4.092e6, 2046, 100);
        assert!((s2 / s1 - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_threshold_closed_form() {
        // pfa = e^{-1/2} gives gamma = s
        let s = 3.25f64;
        let gamma = rayleigh_threshold(s, (-0.5f64).exp());
        assert!((gamma - s).abs() < 1e-12);
        // pfa = 0.02: gamma/s = sqrt(2 ln 50)
        let gamma = rayleigh_threshold(1.0f64, 0.02);
        assert!((gamma - 2.797149622536537).abs() < 1e-12);
    }

    #[test]
    fn threshold_set_text_round_trip() {
        let mut set = ThresholdSet::<f64>::new(0.02, 10_000, 0xdeadbeef12345678);
        set.set(Detector::R1, 1.0721, ThresholdMethod::Empirical);
        set.set(Detector::R3, 5123.75, ThresholdMethod::Rayleigh);
        set.set(Detector::R5, 0.0712, ThresholdMethod::Empirical);
        let text = set.to_text();
        let back = ThresholdSet::<f64>::from_text(&text).unwrap();
        assert_eq!(set, back);
        // byte-identical re-serialization
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn threshold_file_rejects_garbage() {
        assert!(ThresholdSet::<f64>::from_text("nonsense v9\n").is_err());
        let text = format!("{THRESHOLD_FILE_HEADER}\nfingerprint = 0x1\ntarget_pfa = 0.02\nh0_trials = 1\nr9 = 1.0 empirical\n");
        assert!(matches!(
            ThresholdSet::<f64>::from_text(&text),
            Err(CalibrationError::Parse { .. })
        ));
        let text = format!("{THRESHOLD_FILE_HEADER}\ntarget_pfa = 0.02\nh0_trials = 1\n");
        assert!(
            ThresholdSet::<f64>::from_text(&text).is_err(),
            "missing fingerprint"
        );
    }

    #[test]
    fn fingerprint_mismatch_detected() {
        let config = ScenarioConfig::<f64>::default();
        let set = ThresholdSet::<f64>::new(0.02, 1000, 0x1234);
        assert!(matches!(
            set.check_fingerprint(&config),
            Err(CalibrationError::FingerprintMismatch { .. })
        ));
        let good = ThresholdSet::<f64>::new(0.02, 1000, config.h0_fingerprint());
        assert!(good.check_fingerprint(&config).is_ok());
    }
}
