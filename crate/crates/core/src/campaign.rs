//! The Monte Carlo engine: end-to-end H0/H1 trials, detection-probability
//! estimation versus the number of unpredictable symbols, and the search for
//! the symbol count reaching a target Pd.
//!
//! Determinism contract: every random quantity in a trial comes from a
//! ChaCha stream keyed by (master seed, lane, stream domain, trial index).
//! Trials are embarrassingly parallel; results are merged by trial index (or
//! by exact integer counts), so campaign outputs depend only on the
//! configuration and seed, never on the worker count or execution order.

use std::collections::HashMap;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::attack::{end_window_symbol, spoofed_begin_window, spoofer_estimate_stream, AttackKind};
use crate::calibration::{
    empirical_threshold, rayleigh_scale_r3, rayleigh_threshold, CalibrationError, ThresholdMethod,
    ThresholdSet,
};
use crate::channel::{add_awgn_in_place, lms_gain_at_times, ChannelKind, LmsGainSeries};
use crate::detector::{
    compute_statistics, partial_correlation, strip_symbol_sign, Detector, DetectorStatistics,
    PartialCorrelationPair, StatContext,
};
use crate::num::Scalar;
use crate::waveform::{
    local_replica, synthesize_real_window, ComplexSampleBlock, ConfigError, EndWindowPolicy,
    ScenarioConfig, Sign, SpreadingCode, WindowSpec, CODE_LENGTH_CHIPS, SYMBOL_DURATION_S,
};

/// Spoofer absent (H0) or present (H1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Independent random-stream families within one scenario.
///
/// Calibration, verification and measurement must never share noise, so each
/// purpose owns a disjoint block of ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    Measure,
    Calibrate,
    Verify,
}

impl StreamDomain {
    fn base(self) -> u64 {
        let tag = match self {
            StreamDomain::Measure => 0u64,
            StreamDomain::Calibrate => 1,
            StreamDomain::Verify => 2,
        };
        tag << 56
    }
}

const MAX_TRIAL_INDEX: u64 = 1 << 56;

// Lane salts: one independent generator per random quantity family.
const LANE_SYMBOLS: u64 = 0x53594d;
const LANE_PHASE: u64 = 0x504841;
const LANE_NOISE: u64 = 0x4e4f49;
const LANE_SPOOFER: u64 = 0x53504f;
const LANE_CHANNEL: u64 = 0x434841;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn lane_rng(master_seed: u64, lane: u64, domain: StreamDomain, trial_index: u64) -> ChaCha8Rng {
    debug_assert!(trial_index < MAX_TRIAL_INDEX);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ lane.rotate_left(17)));
    rng.set_stream(domain.base() | trial_index);
    rng
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("configuration invalid: {0}")]
    Config(#[from] ConfigError),
    #[error("calibration: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("H1 requested but attack kind is `none` (contradictory config)")]
    NotAnAttack,
    #[error("H0 requested but the scenario carries an attack; set attack kind `none` or run H1")]
    UnexpectedAttack,
    #[error("trial index {0} exceeds the 2^56 stream budget")]
    TrialIndexTooLarge(u64),
    #[error("n_b grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("no threshold available for detector {0}")]
    NoThreshold(Detector),
    #[error("closed-form R3 thresholds need an AWGN channel, equal windows and live noise")]
    RayleighNeedsAwgn,
    #[error("target pd must be in (0, 1), got {0}")]
    BadTargetPd(f64),
}

/// One executed trial: statistics, and detections where thresholds exist.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult<T> {
    pub hypothesis: Hypothesis,
    pub statistics: DetectorStatistics<T>,
    /// Per detector: `None` when no threshold was supplied for it; otherwise
    /// `statistic valid && statistic > gamma`.
    pub detections: [Option<bool>; 5],
    pub trial_index: u64,
    /// Spoofed-carrier phase offset drawn for this trial (H1 only).
    pub delta_phi: Option<T>,
}

/// Precomputed per-scenario state shared by all trials (read-only).
pub struct TrialContext<T> {
    config: ScenarioConfig<T>,
    code: SpreadingCode,
    window_beg: WindowSpec,
    window_end: WindowSpec,
    replica_beg: ComplexSampleBlock<T>,
    replica_end: ComplexSampleBlock<T>,
    stat_ctx: StatContext<T>,
    amplitude_real: T,
    amplitude_spoof: T,
    sigma2: T,
    samples_begin: usize,
    end_start_s: T,
    /// Window-center times for the fading process, two per symbol.
    window_times: Vec<f64>,
}

impl<T: Scalar> TrialContext<T> {
    pub fn new(config: &ScenarioConfig<T>) -> Result<Self, CampaignError> {
        config.validate()?;
        let fs = config.sample_rate_f64();
        let code = crate::waveform::generate_code(
            splitmix64(config.master_seed ^ 0xc0de),
            CODE_LENGTH_CHIPS,
        );
        let window_beg = config.begin_window();
        let window_end = config.end_window();
        let replica_beg = local_replica(&code, &window_beg, fs, 0);
        let replica_end = local_replica(&code, &window_end, fs, 0);
        let stat_ctx = StatContext::from_config(config);
        let mut window_times = Vec::with_capacity(2 * config.n_symbols);
        for k in 0..config.n_symbols {
            let t0 = k as f64 * SYMBOL_DURATION_S;
            window_times.push(t0 + window_beg.start_s + window_beg.duration_s / 2.0);
            window_times.push(t0 + window_end.start_s + window_end.duration_s / 2.0);
        }
        Ok(Self {
            config: config.clone(),
            window_beg,
            window_end,
            replica_beg,
            replica_end,
            stat_ctx,
            amplitude_real: config.amplitude_real(),
            amplitude_spoof: config.amplitude_spoof(),
            sigma2: config.noise_variance(),
            samples_begin: stat_ctx.samples_begin,
            end_start_s: T::from_f64_c(window_end.start_s),
            window_times,
            code,
        })
    }

    pub fn config(&self) -> &ScenarioConfig<T> {
        &self.config
    }

    /// Run one trial. All randomness is derived from
    /// (master seed, lane, domain, trial index).
    pub fn run_trial(
        &self,
        hypothesis: Hypothesis,
        domain: StreamDomain,
        trial_index: u64,
        thresholds: Option<&ThresholdSet<T>>,
    ) -> Result<TrialResult<T>, CampaignError> {
        if trial_index >= MAX_TRIAL_INDEX {
            return Err(CampaignError::TrialIndexTooLarge(trial_index));
        }
        if hypothesis == Hypothesis::H1 && !self.config.has_attack() {
            return Err(CampaignError::NotAnAttack);
        }
        let cfg = &self.config;
        let fs = cfg.sample_rate_f64();
        let fs_t = cfg.sample_rate_hz;
        let seed = cfg.master_seed;

        let mut sym_rng = lane_rng(seed, LANE_SYMBOLS, domain, trial_index);
        let mut noise_rng = lane_rng(seed, LANE_NOISE, domain, trial_index);
        let mut spoof_rng = lane_rng(seed, LANE_SPOOFER, domain, trial_index);

        let delta_phi = match hypothesis {
            Hypothesis::H1 => {
                let mut phase_rng = lane_rng(seed, LANE_PHASE, domain, trial_index);
                Some(T::uniform_01(&mut phase_rng) * T::from_f64_c(std::f64::consts::TAU))
            }
            Hypothesis::H0 => None,
        };
        let spoof_rot = delta_phi.map(|p| Complex::new(p.cos(), p.sin()));

        let gains: Option<LmsGainSeries<T>> = match cfg.channel.kind {
            ChannelKind::Awgn => None,
            ChannelKind::Lms => {
                let mut chan_rng = lane_rng(seed, LANE_CHANNEL, domain, trial_index);
                let params = cfg.channel.lms.as_ref().expect("validated lms params");
                Some(lms_gain_at_times(params, &self.window_times, &mut chan_rng))
            }
        };
        let unit = Complex::new(T::one(), T::zero());

        let mut pairs = Vec::with_capacity(cfg.n_symbols);
        for k in 0..cfg.n_symbols {
            let b_k = Sign::random(&mut sym_rng);
            let end_sign = match cfg.end_window_policy {
                EndWindowPolicy::SameSymbolTail => b_k,
                EndWindowPolicy::RandomPredictableSymbol => Sign::random(&mut sym_rng),
            };
            let (g_beg, g_end) = match &gains {
                Some(series) => (series.gains[2 * k], series.gains[2 * k + 1]),
                None => (unit, unit),
            };

            let mut beg = synthesize_real_window(
                &self.code,
                &self.window_beg,
                fs,
                self.amplitude_real,
                g_beg,
                b_k,
                k,
            );
            let mut end = synthesize_real_window(
                &self.code,
                &self.window_end,
                fs,
                self.amplitude_real,
                g_end,
                end_sign,
                k,
            );

            if hypothesis == Hypothesis::H1 {
                let trace = spoofer_estimate_stream(
                    b_k,
                    cfg.cn0_spoofer_real_dbhz,
                    self.samples_begin,
                    fs_t,
                    &mut spoof_rng,
                );
                let guess = match cfg.attack.kind {
                    AttackKind::RandomValue => Some(Sign::random(&mut spoof_rng)),
                    _ => None,
                };
                let spoof = spoofed_begin_window(
                    &cfg.attack,
                    &trace,
                    guess,
                    self.amplitude_spoof,
                    delta_phi.expect("H1 has a phase"),
                    &self.code,
                    &self.window_beg,
                    fs_t,
                    cfg.cn0_spoofer_real_dbhz,
                )
                .expect("H1 attack validated");
                for (s, sp) in beg.samples.iter_mut().zip(&spoof.samples) {
                    *s += sp;
                }

                // During the end window the spoofer replays either its
                // (near-certain) decision on the unpredictable symbol or the
                // predictable symbol it knows outright.
                let end_dec = match cfg.end_window_policy {
                    EndWindowPolicy::RandomPredictableSymbol => end_sign,
                    EndWindowPolicy::SameSymbolTail => end_window_symbol(
                        cfg.cn0_spoofer_real_dbhz,
                        self.end_start_s,
                        b_k,
                        &mut spoof_rng,
                    ),
                };
                let spoof_end = synthesize_real_window(
                    &self.code,
                    &self.window_end,
                    fs,
                    self.amplitude_spoof,
                    spoof_rot.expect("H1 has a phase"),
                    end_dec,
                    k,
                );
                for (s, sp) in end.samples.iter_mut().zip(&spoof_end.samples) {
                    *s += sp;
                }
            }

            if !cfg.channel.noise_bypass {
                add_awgn_in_place(&mut beg, self.sigma2, &mut noise_rng);
                add_awgn_in_place(&mut end, self.sigma2, &mut noise_rng);
            }

            let raw_beg = partial_correlation(&beg, &self.replica_beg).expect("equal lengths");
            let raw_end = partial_correlation(&end, &self.replica_end).expect("equal lengths");
            pairs.push(PartialCorrelationPair::new(
                strip_symbol_sign(raw_beg, b_k),
                strip_symbol_sign(raw_end, end_sign),
                k,
            ));
        }

        let statistics = compute_statistics(&pairs, &self.stat_ctx);
        let mut detections = [None; 5];
        if let Some(ts) = thresholds {
            for d in Detector::ALL {
                if let Some(entry) = ts.get(d) {
                    detections[d.index()] = Some(
                        statistics
                            .value(d)
                            .map(|v| v > entry.gamma)
                            .unwrap_or(false),
                    );
                }
            }
        }
        Ok(TrialResult {
            hypothesis,
            statistics,
            detections,
            trial_index,
            delta_phi,
        })
    }
}

/// One-off trial without context reuse.
pub fn run_trial<T: Scalar>(
    config: &ScenarioConfig<T>,
    hypothesis: Hypothesis,
    trial_index: u64,
    thresholds: Option<&ThresholdSet<T>>,
) -> Result<TrialResult<T>, CampaignError> {
    TrialContext::new(config)?.run_trial(hypothesis, StreamDomain::Measure, trial_index, thresholds)
}

/// Statistics from `trials` independent trials, in trial-index order.
pub fn collect_statistics<T: Scalar>(
    config: &ScenarioConfig<T>,
    hypothesis: Hypothesis,
    domain: StreamDomain,
    trials: u64,
) -> Result<Vec<DetectorStatistics<T>>, CampaignError> {
    let ctx = TrialContext::new(config)?;
    if hypothesis == Hypothesis::H1 && !config.has_attack() {
        return Err(CampaignError::NotAnAttack);
    }
    (0..trials)
        .into_par_iter()
        .map(|i| {
            ctx.run_trial(hypothesis, domain, i, None)
                .map(|t| t.statistics)
        })
        .collect()
}

/// Verification-stream H0 statistics (used by `calibration::verify_pfa`).
pub(crate) fn h0_statistics_for_verification<T: Scalar>(
    config: &ScenarioConfig<T>,
    trials: u64,
) -> Result<Vec<DetectorStatistics<T>>, CampaignError> {
    collect_statistics(config, Hypothesis::H0, StreamDomain::Verify, trials)
}

/// How thresholds for a campaign are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdSpec {
    /// Empirical H0 quantiles for all five detectors.
    Empirical { calibration_trials: u64 },
    /// Closed-form Rayleigh threshold, R3 only (exact under AWGN H0).
    RayleighR3,
}

/// Produce a threshold set for the scenario at the given false-alarm target.
pub fn calibrate_thresholds<T: Scalar>(
    config: &ScenarioConfig<T>,
    pfa: f64,
    spec: ThresholdSpec,
) -> Result<ThresholdSet<T>, CampaignError> {
    config.validate()?;
    let fingerprint = config.h0_fingerprint();
    match spec {
        ThresholdSpec::Empirical { calibration_trials } => {
            let stats = collect_statistics(
                config,
                Hypothesis::H0,
                StreamDomain::Calibrate,
                calibration_trials,
            )?;
            let mut set = ThresholdSet::new(pfa, calibration_trials, fingerprint);
            for d in Detector::ALL {
                let values: Vec<T> = stats.iter().filter_map(|s| s.value(d)).collect();
                let gamma = empirical_threshold(&values, pfa)?;
                set.set(d, gamma, ThresholdMethod::Empirical);
            }
            Ok(set)
        }
        ThresholdSpec::RayleighR3 => {
            let equal_windows = StatContext::from_config(config).equal_windows();
            if config.channel.kind != ChannelKind::Awgn
                || config.channel.noise_bypass
                || !equal_windows
            {
                return Err(CampaignError::RayleighNeedsAwgn);
            }
            let n = config.begin_window().sample_count(config.sample_rate_f64());
            let scale = rayleigh_scale_r3(config.noise_variance(), n, config.n_symbols);
            let mut set = ThresholdSet::new(pfa, 0, fingerprint);
            set.set(
                Detector::R3,
                rayleigh_threshold(scale, pfa),
                ThresholdMethod::Rayleigh,
            );
            Ok(set)
        }
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Detection probability of one detector at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdPoint {
    pub detected: u64,
    pub trials: u64,
    pub pd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Per-detector detection probabilities for one (scenario, N_b).
#[derive(Debug, Clone, PartialEq)]
pub struct PdEstimate {
    pub n_symbols: usize,
    points: [Option<PdPoint>; 5],
}

impl PdEstimate {
    pub fn get(&self, d: Detector) -> Option<PdPoint> {
        self.points[d.index()]
    }
}

/// Fraction of H1 trials detected per detector, with binomial CIs.
///
/// The thresholds must carry the scenario's H0 fingerprint; a scenario whose
/// attack kind is `none` is rejected as contradictory.
pub fn estimate_pd<T: Scalar>(
    config: &ScenarioConfig<T>,
    thresholds: &ThresholdSet<T>,
    trials: u64,
) -> Result<PdEstimate, CampaignError> {
    if !config.has_attack() {
        return Err(CampaignError::NotAnAttack);
    }
    thresholds.check_fingerprint(config)?;
    let ctx = TrialContext::new(config)?;
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| {
            let trial =
                ctx.run_trial(Hypothesis::H1, StreamDomain::Measure, i, Some(thresholds))?;
            let mut c = [0u64; 5];
            for d in Detector::ALL {
                if trial.detections[d.index()] == Some(true) {
                    c[d.index()] = 1;
                }
            }
            Ok::<[u64; 5], CampaignError>(c)
        })
        .try_reduce(
            || [0u64; 5],
            |a, b| {
                Ok([
                    a[0] + b[0],
                    a[1] + b[1],
                    a[2] + b[2],
                    a[3] + b[3],
                    a[4] + b[4],
                ])
            },
        )?;
    let mut points = [None; 5];
    for d in Detector::ALL {
        if thresholds.get(d).is_some() {
            let k = counts[d.index()];
            let (lo, hi) = wilson_interval(k, trials);
            points[d.index()] = Some(PdPoint {
                detected: k,
                trials,
                pd: k as f64 / trials as f64,
                ci_low: lo,
                ci_high: hi,
            });
        }
    }
    Ok(PdEstimate {
        n_symbols: config.n_symbols,
        points,
    })
}

/// One row of a Pd-vs-N_b curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PdCurveRow {
    pub detector: Detector,
    pub n_b: usize,
    pub pd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

/// Campaign output: detection probability versus symbol count.
#[derive(Debug, Clone, PartialEq)]
pub struct PdCurve {
    pub rows: Vec<PdCurveRow>,
    pub trials_per_point: u64,
    pub pfa: f64,
}

impl PdCurve {
    /// CSV with header `detector,n_b,pd,ci_low,ci_high,trials`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("detector,n_b,pd,ci_low,ci_high,trials\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{}\n",
                r.detector, r.n_b, r.pd, r.ci_low, r.ci_high, r.trials
            ));
        }
        out
    }
}

/// Threshold cache across grid points, keyed by the H0 fingerprint (which
/// includes N_b).
pub struct ThresholdCache<T> {
    pfa: f64,
    spec: ThresholdSpec,
    cache: HashMap<u64, ThresholdSet<T>>,
}

impl<T: Scalar> ThresholdCache<T> {
    pub fn new(pfa: f64, spec: ThresholdSpec) -> Self {
        Self {
            pfa,
            spec,
            cache: HashMap::new(),
        }
    }

    pub fn get_or_calibrate(
        &mut self,
        config: &ScenarioConfig<T>,
    ) -> Result<&ThresholdSet<T>, CampaignError> {
        let fp = config.h0_fingerprint();
        if !self.cache.contains_key(&fp) {
            let set = calibrate_thresholds(config, self.pfa, self.spec)?;
            self.cache.insert(fp, set);
        }
        Ok(&self.cache[&fp])
    }
}

/// Estimate Pd at every grid point, recalibrating thresholds per N_b.
pub fn pd_curve<T: Scalar>(
    config: &ScenarioConfig<T>,
    n_b_grid: &[usize],
    trials_per_point: u64,
    pfa: f64,
    spec: ThresholdSpec,
) -> Result<PdCurve, CampaignError> {
    if n_b_grid.is_empty() || n_b_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CampaignError::BadGrid);
    }
    let mut cache = ThresholdCache::new(pfa, spec);
    let mut estimates = Vec::with_capacity(n_b_grid.len());
    for &n_b in n_b_grid {
        let cfg = config.with_n_symbols(n_b);
        let thresholds = cache.get_or_calibrate(&cfg)?;
        estimates.push(estimate_pd(&cfg, thresholds, trials_per_point)?);
    }
    let mut rows = Vec::new();
    for d in Detector::ALL {
        for (i, &n_b) in n_b_grid.iter().enumerate() {
            if let Some(p) = estimates[i].get(d) {
                rows.push(PdCurveRow {
                    detector: d,
                    n_b,
                    pd: p.pd,
                    ci_low: p.ci_low,
                    ci_high: p.ci_high,
                    trials: p.trials,
                });
            }
        }
    }
    Ok(PdCurve {
        rows,
        trials_per_point,
        pfa,
    })
}

/// Search controls for [`required_symbols`].
#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    pub target_pd: f64,
    pub trials_per_point: u64,
    pub pfa: f64,
    /// Largest N_b considered before reporting "not reached".
    pub cap: usize,
    /// Final grid resolution in symbols.
    pub resolution: usize,
    pub threshold_spec: ThresholdSpec,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            target_pd: 0.9,
            trials_per_point: 2000,
            pfa: 0.02,
            cap: 1000,
            resolution: 10,
            threshold_spec: ThresholdSpec::Empirical {
                calibration_trials: 10_000,
            },
        }
    }
}

/// One evaluated point of the required-symbols search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchPoint {
    pub n_b: usize,
    pub pd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

/// Result of the required-symbols search for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct RequiredSymbols {
    pub detector: Detector,
    pub target_pd: f64,
    /// Smallest grid N_b whose Pd CI lower bound reaches the target;
    /// `None` when the cap was reached first.
    pub n_b_required: Option<usize>,
    /// Linear interpolation of the point-estimate crossing, recorded
    /// separately from the grid answer.
    pub interpolated_crossing: Option<f64>,
    pub grid_resolution: usize,
    pub cap: usize,
    /// The search assumes Pd is monotone in N_b.
    pub monotone_assumed: bool,
    pub trace: Vec<SearchPoint>,
}

/// Coarse-to-fine search for the smallest N_b reaching the target Pd.
///
/// A geometric ladder brackets the crossing, then bisection refines it to
/// the grid resolution. Every evaluation calibrates thresholds for its own
/// N_b (cached by fingerprint).
pub fn required_symbols<T: Scalar>(
    config: &ScenarioConfig<T>,
    detector: Detector,
    params: &SearchParams,
) -> Result<RequiredSymbols, CampaignError> {
    if !(params.target_pd > 0.0 && params.target_pd < 1.0) {
        return Err(CampaignError::BadTargetPd(params.target_pd));
    }
    if !config.has_attack() {
        return Err(CampaignError::NotAnAttack);
    }
    let res = params.resolution.max(1);
    let mut cache = ThresholdCache::new(params.pfa, params.threshold_spec);
    let mut trace: Vec<SearchPoint> = Vec::new();

    let eval = |n_b: usize,
                cache: &mut ThresholdCache<T>,
                trace: &mut Vec<SearchPoint>|
     -> Result<SearchPoint, CampaignError> {
        let cfg = config.with_n_symbols(n_b);
        let thresholds = cache.get_or_calibrate(&cfg)?;
        let est = estimate_pd(&cfg, thresholds, params.trials_per_point)?;
        let p = est
            .get(detector)
            .ok_or(CampaignError::NoThreshold(detector))?;
        let point = SearchPoint {
            n_b,
            pd: p.pd,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            trials: p.trials,
        };
        trace.push(point);
        Ok(point)
    };

    // Geometric ladder to bracket the crossing.
    let mut below: Option<SearchPoint> = None;
    let mut above: Option<SearchPoint> = None;
    let mut n_b = res;
    loop {
        let point = eval(n_b, &mut cache, &mut trace)?;
        if point.ci_low >= params.target_pd {
            above = Some(point);
            break;
        }
        below = Some(point);
        if n_b >= params.cap {
            break;
        }
        n_b = (n_b * 4).min(params.cap);
    }

    let Some(first_above) = above else {
        return Ok(RequiredSymbols {
            detector,
            target_pd: params.target_pd,
            n_b_required: None,
            interpolated_crossing: None,
            grid_resolution: res,
            cap: params.cap,
            monotone_assumed: true,
            trace,
        });
    };

    // Bisection between the bracket endpoints on multiples of `res`.
    let mut lo = below.map(|p| p.n_b).unwrap_or(0);
    let mut lo_point = below;
    let mut hi_point = first_above;
    while hi_point.n_b - lo > res {
        let mid = ((lo + hi_point.n_b) / 2) / res * res;
        let mid = if mid <= lo { lo + res } else { mid };
        if mid >= hi_point.n_b {
            break;
        }
        let point = eval(mid, &mut cache, &mut trace)?;
        if point.ci_low >= params.target_pd {
            hi_point = point;
        } else {
            lo = mid;
            lo_point = Some(point);
        }
    }

    let interpolated = lo_point.and_then(|lp| {
        if hi_point.pd > lp.pd {
            Some(
                lp.n_b as f64
                    + (params.target_pd - lp.pd) * (hi_point.n_b - lp.n_b) as f64
                        / (hi_point.pd - lp.pd),
            )
        } else {
            None
        }
    });

    Ok(RequiredSymbols {
        detector,
        target_pd: params.target_pd,
        n_b_required: Some(hi_point.n_b),
        interpolated_crossing: interpolated,
        grid_resolution: res,
        cap: params.cap,
        monotone_assumed: true,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::AttackModel;
    use crate::channel::ChannelModel;

    fn noiseless_config() -> ScenarioConfig<f64> {
        let mut cfg = ScenarioConfig::<f64>::default();
        cfg.channel = ChannelModel {
            noise_bypass: true,
            ..ChannelModel::default()
        };
        cfg.n_symbols = 8;
        cfg
    }

    #[test]
    fn h0_noiseless_identity() {
        let mut cfg = noiseless_config();
        cfg.attack = AttackModel {
            kind: AttackKind::None,
            ..AttackModel::default()
        };
        let trial = run_trial(&cfg, Hypothesis::H0, 0, None).unwrap();
        let s = &trial.statistics;
        assert_eq!(s.r1, Some(1.0));
        assert!(s.r2.unwrap() < 1e-12);
        assert!(s.r3.unwrap() < 1e-6);
        assert_eq!(s.r5, Some(0.0));
        assert!(s.nwpr_beg.saturated && s.nwpr_end.saturated);
        assert!(s.r4.unwrap() < 1e-9);
        assert_eq!(trial.delta_phi, None);
    }

    #[test]
    fn h1_zero_value_attack_with_full_guess_window() {
        // spoofer blanks the whole begin window and hits the end window with
        // beta >> A: R2 -> beta/(A+beta e^{j phi})-ish magnitude, R1 well
        // below 1, both computable exactly with noise bypassed.
        let mut cfg = noiseless_config();
        cfg.cn0_detector_spoof_dbhz = 60.0; // beta = 1000 >> A = 100
        cfg.attack = AttackModel {
            kind: AttackKind::ZeroValue,
            guess_duration_s: Some(260e-6), // > begin window
            ..AttackModel::default()
        };
        let trial = run_trial(&cfg, Hypothesis::H1, 3, None).unwrap();
        let s = &trial.statistics;
        // begin window holds only the real signal; end window real + spoof
        let r1 = s.r1.unwrap();
        assert!(r1 < 0.2, "r1 = {r1}");
        let r2 = s.r2.unwrap();
        assert!((0.8..=1.2).contains(&r2), "r2 = {r2}");
        // R3 magnitude ~ beta per symbol deficit = beta * N / N
        let r3 = s.r3.unwrap();
        let n = 1023.0;
        let beta = 1000.0;
        assert!((r3 - beta * n).abs() / (beta * n) < 1e-9, "r3 = {r3}");
    }

    #[test]
    fn trial_is_bit_identical_across_runs() {
        let mut cfg = ScenarioConfig::<f64>::default();
        cfg.n_symbols = 16;
        let a = run_trial(&cfg, Hypothesis::H1, 11, None).unwrap();
        let b = run_trial(&cfg, Hypothesis::H1, 11, None).unwrap();
        assert_eq!(a, b);
        // different trial index gives different statistics
        let c = run_trial(&cfg, Hypothesis::H1, 12, None).unwrap();
        assert_ne!(a.statistics, c.statistics);
    }

    #[test]
    fn domains_use_disjoint_streams() {
        let mut cfg = ScenarioConfig::<f64>::default();
        cfg.attack.kind = AttackKind::None;
        cfg.n_symbols = 4;
        let ctx = TrialContext::new(&cfg).unwrap();
        let a = ctx
            .run_trial(Hypothesis::H0, StreamDomain::Calibrate, 0, None)
            .unwrap();
        let b = ctx
            .run_trial(Hypothesis::H0, StreamDomain::Verify, 0, None)
            .unwrap();
        assert_ne!(a.statistics, b.statistics);
    }

    #[test]
    fn h1_with_no_attack_is_contradictory() {
        let mut cfg = ScenarioConfig::<f64>::default();
        cfg.attack.kind = AttackKind::None;
        assert!(matches!(
            run_trial(&cfg, Hypothesis::H1, 0, None),
            Err(CampaignError::NotAnAttack)
        ));
        let ts = ThresholdSet::new(0.02, 0, cfg.h0_fingerprint());
        assert!(matches!(
            estimate_pd(&cfg, &ts, 10),
            Err(CampaignError::NotAnAttack)
        ));
    }

    #[test]
    fn estimate_pd_threshold_zero_detects_everything() {
        let mut cfg = ScenarioConfig::<f64>::default();
        cfg.n_symbols = 4;
        let mut ts = ThresholdSet::new(0.02, 0, cfg.h0_fingerprint());
        ts.set(Detector::R3, 0.0, ThresholdMethod::Empirical);
        let est = estimate_pd(&cfg, &ts, 50).unwrap();
        assert_eq!(est.get(Detector::R3).unwrap().pd, 1.0);
        // no thresholds for the others -> no estimates
        assert!(est.get(Detector::R1).is_none());
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let cfg = ScenarioConfig::<f64>::default();
        let ts = ThresholdSet::new(0.02, 0, 0x1111);
        assert!(matches!(
            estimate_pd(&cfg, &ts, 10),
            Err(CampaignError::Calibration(
                CalibrationError::FingerprintMismatch { .. }
            ))
        ));
    }

    #[test]
    fn rayleigh_spec_requires_awgn_and_equal_windows() {
        let mut cfg = ScenarioConfig::<f64>::default();
        cfg.window_end_s = 125e-6;
        assert!(matches!(
            calibrate_thresholds(&cfg, 0.02, ThresholdSpec::RayleighR3),
            Err(CampaignError::RayleighNeedsAwgn)
        ));
    }

    #[test]
    fn grid_validation() {
        let cfg = ScenarioConfig::<f64>::default();
        assert!(matches!(
            pd_curve(&cfg, &[], 10, 0.02, ThresholdSpec::RayleighR3),
            Err(CampaignError::BadGrid)
        ));
        assert!(matches!(
            pd_curve(&cfg, &[10, 10], 10, 0.02, ThresholdSpec::RayleighR3),
            Err(CampaignError::BadGrid)
        ));
    }

    #[test]
    fn singleton_grid_reduces_to_estimate_pd() {
        let mut cfg = ScenarioConfig::<f64>::default();
        cfg.n_symbols = 4;
        let curve = pd_curve(&cfg, &[4], 60, 0.02, ThresholdSpec::RayleighR3).unwrap();
        assert_eq!(curve.rows.len(), 1);
        let ts = calibrate_thresholds(&cfg, 0.02, ThresholdSpec::RayleighR3).unwrap();
        let est = estimate_pd(&cfg, &ts, 60).unwrap();
        assert_eq!(curve.rows[0].pd, est.get(Detector::R3).unwrap().pd);
        assert_eq!(curve.rows[0].n_b, 4);
    }

    #[test]
    fn wilson_interval_sanity() {
        let (lo, hi) = wilson_interval(90, 100);
        assert!(lo < 0.9 && 0.9 < hi);
        assert!(lo > 0.8 && hi < 0.97);
        let (lo, hi) = wilson_interval(0, 100);
        assert!(lo < 1e-12);
        assert!(hi > 0.0 && hi < 0.06);
        let (lo, hi) = wilson_interval(100, 100);
        assert!(lo > 0.94 && hi > 0.999);
    }

    #[test]
    fn csv_schema() {
        let curve = PdCurve {
            rows: vec![PdCurveRow {
                detector: Detector::R3,
                n_b: 110,
                pd: 0.9,
                ci_low: 0.886,
                ci_high: 0.912,
                trials: 2000,
            }],
            trials_per_point: 2000,
            pfa: 0.02,
        };
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("detector,n_b,pd,ci_low,ci_high,trials"));
        assert_eq!(lines.next(), Some("r3,110,0.900000,0.886000,0.912000,2000"));
    }
}
