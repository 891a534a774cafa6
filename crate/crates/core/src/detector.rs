//! Partial correlations over begin/end windows and the five spoofing
//! detection statistics, including the NWPR C/N0 estimator.
//!
//! All statistics are computed from symbol-sign-stripped correlation pairs.
//! Invalid conditions (zero denominators, all-zero inputs, incompatible
//! windows) surface as `None` rather than NaN so that trial bookkeeping can
//! distinguish "not detectable" from "not computable".

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;
use crate::waveform::{ComplexSampleBlock, ScenarioConfig, Sign};

/// The five test statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    R1,
    R2,
    R3,
    R4,
    R5,
}

impl Detector {
    pub const ALL: [Detector; 5] = [
        Detector::R1,
        Detector::R2,
        Detector::R3,
        Detector::R4,
        Detector::R5,
    ];

    pub fn index(self) -> usize {
        match self {
            Detector::R1 => 0,
            Detector::R2 => 1,
            Detector::R3 => 2,
            Detector::R4 => 3,
            Detector::R5 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Detector::R1 => "r1",
            Detector::R2 => "r2",
            Detector::R3 => "r3",
            Detector::R4 => "r4",
            Detector::R5 => "r5",
        }
    }

    pub fn parse(s: &str) -> Option<Detector> {
        match s.to_ascii_lowercase().as_str() {
            "r1" => Some(Detector::R1),
            "r2" => Some(Detector::R2),
            "r3" => Some(Detector::R3),
            "r4" => Some(Detector::R4),
            "r5" => Some(Detector::R5),
            _ => None,
        }
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("block length {block} does not match replica length {replica}")]
    LengthMismatch { block: usize, replica: usize },
}

/// `sum_n block(n) * conj(replica(n))`.
pub fn partial_correlation<T: Scalar>(
    block: &ComplexSampleBlock<T>,
    replica: &ComplexSampleBlock<T>,
) -> Result<Complex<T>, DetectorError> {
    if block.len() != replica.len() {
        return Err(DetectorError::LengthMismatch {
            block: block.len(),
            replica: replica.len(),
        });
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    for (y, x) in block.samples.iter().zip(&replica.samples) {
        acc += y * x.conj();
    }
    Ok(acc)
}

/// Remove the (cryptographically verified) symbol sign: `b_k * raw`.
pub fn strip_symbol_sign<T: Scalar>(raw: Complex<T>, b_k: Sign) -> Complex<T> {
    match b_k {
        Sign::Plus => raw,
        Sign::Minus => -raw,
    }
}

/// The sign-stripped begin/end correlations for one unpredictable symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialCorrelationPair<T> {
    pub b_beg: Complex<T>,
    pub b_end: Complex<T>,
    pub symbol_index: usize,
    pub sign_stripped: bool,
}

impl<T: Scalar> PartialCorrelationPair<T> {
    pub fn new(b_beg: Complex<T>, b_end: Complex<T>, symbol_index: usize) -> Self {
        Self {
            b_beg,
            b_end,
            symbol_index,
            sign_stripped: true,
        }
    }
}

fn sums<T: Scalar>(pairs: &[PartialCorrelationPair<T>]) -> (Complex<T>, Complex<T>) {
    let mut beg = Complex::new(T::zero(), T::zero());
    let mut end = Complex::new(T::zero(), T::zero());
    for p in pairs {
        beg += p.b_beg;
        end += p.b_end;
    }
    (beg, end)
}

fn is_zero<T: Scalar>(c: Complex<T>) -> bool {
    c.re == T::zero() && c.im == T::zero()
}

/// R1 = |sum B_beg / sum B_end|. `None` when the denominator is zero.
pub fn r1<T: Scalar>(pairs: &[PartialCorrelationPair<T>]) -> Option<T> {
    assert!(!pairs.is_empty());
    let (beg, end) = sums(pairs);
    if is_zero(end) {
        return None;
    }
    Some((beg / end).norm())
}

/// R2 = |sum B_beg / sum B_end - 1|. `None` when the denominator is zero.
pub fn r2<T: Scalar>(pairs: &[PartialCorrelationPair<T>]) -> Option<T> {
    assert!(!pairs.is_empty());
    let (beg, end) = sums(pairs);
    if is_zero(end) {
        return None;
    }
    Some((beg / end - Complex::new(T::one(), T::zero())).norm())
}

/// R3 = |mean(B_beg(k) - B_end(k))|. Assumes equal-duration windows.
pub fn r3<T: Scalar>(pairs: &[PartialCorrelationPair<T>]) -> T {
    assert!(!pairs.is_empty());
    let (beg, end) = sums(pairs);
    (beg - end).norm() / T::from_f64_c(pairs.len() as f64)
}

/// NWPR intermediate quantities for one window side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NwprEstimate<T> {
    /// Narrowband power |sum B|^2.
    pub nbp: T,
    /// Wideband power sum |B|^2.
    pub wbp: T,
    /// Power ratio NBP/WBP, clamped into [1+eps, N_b-eps].
    pub np: T,
    /// Estimated C/N0 in dB-Hz; `None` when not computable (all-zero input
    /// or fewer than two values).
    pub cn0_dbhz: Option<T>,
    /// The clamp was engaged (noiseless or zero-signal saturation).
    pub saturated: bool,
}

/// Narrowband/wideband power-ratio C/N0 estimator over block correlations:
/// `NP = |sum B|^2 / sum |B|^2`, `cn0 = 10 log10((NP-1)/((N_b-NP) W))`.
pub fn nwpr_cn0<T: Scalar>(values: &[Complex<T>], window_s: T) -> NwprEstimate<T> {
    assert!(window_s > T::zero(), "window duration must be positive");
    let n_b = T::from_f64_c(values.len() as f64);
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut wbp = T::zero();
    for v in values {
        sum += *v;
        wbp += v.norm_sqr();
    }
    let nbp = sum.norm_sqr();
    if wbp == T::zero() || values.len() < 2 {
        return NwprEstimate {
            nbp,
            wbp,
            np: if wbp == T::zero() {
                T::zero()
            } else {
                T::one()
            },
            cn0_dbhz: None,
            saturated: false,
        };
    }
    let raw_np = nbp / wbp;
    let eps = T::from_f64_c(1e-9);
    let (np, saturated) = if raw_np < T::one() + eps {
        (T::one() + eps, true)
    } else if raw_np > n_b - eps {
        (n_b - eps, true)
    } else {
        (raw_np, false)
    };
    let ratio = (np - T::one()) / (n_b - np) / window_s;
    let ten = T::from_f64_c(10.0);
    NwprEstimate {
        nbp,
        wbp,
        np,
        cn0_dbhz: Some(ten * ratio.log10()),
        saturated,
    }
}

/// R4 = |cn0_hat(begin) - cn0_hat(end)|; `None` if either side is invalid.
pub fn r4<T: Scalar>(
    pairs: &[PartialCorrelationPair<T>],
    window_begin_s: T,
    window_end_s: T,
) -> (Option<T>, NwprEstimate<T>, NwprEstimate<T>) {
    let beg_values: Vec<Complex<T>> = pairs.iter().map(|p| p.b_beg).collect();
    let end_values: Vec<Complex<T>> = pairs.iter().map(|p| p.b_end).collect();
    let beg = nwpr_cn0(&beg_values, window_begin_s);
    let end = nwpr_cn0(&end_values, window_end_s);
    let value = match (beg.cn0_dbhz, end.cn0_dbhz) {
        (Some(b), Some(e)) => Some((b - e).abs()),
        _ => None,
    };
    (value, beg, end)
}

/// R5 = |wrap(psi_beg - psi_end)| from the aggregate-sum phases,
/// wrapped into (-pi, pi] before the absolute value.
pub fn r5<T: Scalar>(pairs: &[PartialCorrelationPair<T>]) -> (Option<T>, Option<T>, Option<T>) {
    let (beg, end) = sums(pairs);
    if is_zero(beg) || is_zero(end) {
        return (None, None, None);
    }
    let psi_beg = beg.im.atan2(beg.re);
    let psi_end = end.im.atan2(end.re);
    let mut d = psi_beg - psi_end;
    let pi = T::PI();
    let two_pi = pi + pi;
    if d > pi {
        d -= two_pi;
    } else if d <= -pi {
        d += two_pi;
    }
    (Some(d.abs()), Some(psi_beg), Some(psi_end))
}

/// All five statistics plus intermediates and validity flags for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorStatistics<T> {
    pub r1: Option<T>,
    pub r2: Option<T>,
    pub r3: Option<T>,
    pub r4: Option<T>,
    pub r5: Option<T>,
    pub psi_beg: Option<T>,
    pub psi_end: Option<T>,
    pub nwpr_beg: NwprEstimate<T>,
    pub nwpr_end: NwprEstimate<T>,
}

impl<T: Scalar> DetectorStatistics<T> {
    pub fn value(&self, d: Detector) -> Option<T> {
        match d {
            Detector::R1 => self.r1,
            Detector::R2 => self.r2,
            Detector::R3 => self.r3,
            Detector::R4 => self.r4,
            Detector::R5 => self.r5,
        }
    }
}

/// Window geometry the statistics need: durations plus sample counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatContext<T> {
    pub window_begin_s: T,
    pub window_end_s: T,
    pub samples_begin: usize,
    pub samples_end: usize,
}

impl<T: Scalar> StatContext<T> {
    pub fn from_config(config: &ScenarioConfig<T>) -> Self {
        let fs = config.sample_rate_f64();
        Self {
            window_begin_s: config.window_begin_s,
            window_end_s: config.window_end_s,
            samples_begin: config.begin_window().sample_count(fs),
            samples_end: config.end_window().sample_count(fs),
        }
    }

    /// R2/R3 compare begin and end sums directly, which only makes sense for
    /// equal window lengths; unequal windows are rejected, not rescaled.
    pub fn equal_windows(&self) -> bool {
        self.samples_begin == self.samples_end
    }
}

/// Compute all five statistics from sign-stripped pairs.
pub fn compute_statistics<T: Scalar>(
    pairs: &[PartialCorrelationPair<T>],
    ctx: &StatContext<T>,
) -> DetectorStatistics<T> {
    assert!(!pairs.is_empty(), "need at least one correlation pair");
    debug_assert!(pairs.iter().all(|p| p.sign_stripped));
    let equal = ctx.equal_windows();
    let r1_v = r1(pairs);
    let r2_v = if equal { r2(pairs) } else { None };
    let r3_v = if equal { Some(r3(pairs)) } else { None };
    let (r4_v, nwpr_beg, nwpr_end) = r4(pairs, ctx.window_begin_s, ctx.window_end_s);
    let (r5_v, psi_beg, psi_end) = r5(pairs);
    DetectorStatistics {
        r1: r1_v,
        r2: r2_v,
        r3: r3_v,
        r4: r4_v,
        r5: r5_v,
        psi_beg,
        psi_end,
        nwpr_beg,
        nwpr_end,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{generate_code, local_replica, WindowSpec, DEFAULT_SAMPLE_RATE_HZ};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn pairs_from(list: &[(Complex<f64>, Complex<f64>)]) -> Vec<PartialCorrelationPair<f64>> {
        list.iter()
            .enumerate()
            .map(|(k, &(b, e))| PartialCorrelationPair::new(b, e, k))
            .collect()
    }

    fn ctx_equal() -> StatContext<f64> {
        StatContext {
            window_begin_s: 250e-6,
            window_end_s: 250e-6,
            samples_begin: 1023,
            samples_end: 1023,
        }
    }

    #[test]
    fn partial_correlation_identities() {
        let code = generate_code(7, 4092);
        let w = WindowSpec::begin(250e-6);
        let replica: ComplexSampleBlock<f64> = local_replica(&code, &w, DEFAULT_SAMPLE_RATE_HZ, 0);
        let n = replica.len() as f64;

        let corr = partial_correlation(&replica, &replica).unwrap();
        assert_eq!(corr, c(n, 0.0));

        let mut negated = replica.clone();
        for s in &mut negated.samples {
            *s = -*s;
        }
        assert_eq!(partial_correlation(&negated, &replica).unwrap(), c(-n, 0.0));

        let theta = 0.7f64;
        let mut rotated = replica.clone();
        let rot = c(theta.cos(), theta.sin());
        for s in &mut rotated.samples {
            *s *= rot;
        }
        let corr = partial_correlation(&rotated, &replica).unwrap();
        assert!((corr - rot * n).norm() < 1e-9);
    }

    #[test]
    fn partial_correlation_length_mismatch() {
        let code = generate_code(7, 4092);
        let a: ComplexSampleBlock<f64> =
            local_replica(&code, &WindowSpec::begin(250e-6), DEFAULT_SAMPLE_RATE_HZ, 0);
        let b: ComplexSampleBlock<f64> =
            local_replica(&code, &WindowSpec::begin(125e-6), DEFAULT_SAMPLE_RATE_HZ, 0);
        assert!(matches!(
            partial_correlation(&a, &b),
            Err(DetectorError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn strip_sign_is_an_involution() {
        let x = c(3.0, 4.0);
        assert_eq!(strip_symbol_sign(x, Sign::Plus), x);
        assert_eq!(strip_symbol_sign(x, Sign::Minus), c(-3.0, -4.0));
        assert_eq!(
            strip_symbol_sign(strip_symbol_sign(x, Sign::Minus), Sign::Minus),
            x
        );
    }

    #[test]
    fn r1_hand_values() {
        let p = pairs_from(&[(c(1.0, 0.0), c(1.0, 0.0))]);
        assert_eq!(r1(&p), Some(1.0));
        let p = pairs_from(&[(c(0.0, 0.0), c(2.0, 1.0))]);
        assert_eq!(r1(&p), Some(0.0));
        // {(2+0j, 1+1j), (0+2j, 1-1j)} -> |(2+2j)/2| = sqrt(2)
        let p = pairs_from(&[(c(2.0, 0.0), c(1.0, 1.0)), (c(0.0, 2.0), c(1.0, -1.0))]);
        assert!((r1(&p).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        // zero denominator -> invalid
        let p = pairs_from(&[(c(1.0, 0.0), c(1.0, 0.0)), (c(1.0, 0.0), c(-1.0, 0.0))]);
        assert_eq!(r1(&p), None);
    }

    #[test]
    fn r2_hand_values() {
        let p = pairs_from(&[(c(5.0, 2.0), c(5.0, 2.0))]);
        assert!(r2(&p).unwrap() < 1e-15);
        let p = pairs_from(&[(c(0.0, 0.0), c(3.0, -1.0))]);
        assert_eq!(r2(&p), Some(1.0));
        // {(2, 1+1j), (2j, 1-1j)} -> |(2+2j)/2 - 1| = |j| = 1
        let p = pairs_from(&[(c(2.0, 0.0), c(1.0, 1.0)), (c(0.0, 2.0), c(1.0, -1.0))]);
        assert!((r2(&p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r3_hand_values() {
        let p = pairs_from(&[(c(7.0, -2.0), c(7.0, -2.0)), (c(1.0, 3.0), c(1.0, 3.0))]);
        assert_eq!(r3(&p), 0.0);
        // single pair (0, 4+3j) -> |-(4+3j)| = 5
        let p = pairs_from(&[(c(0.0, 0.0), c(4.0, 3.0))]);
        assert!((r3(&p) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn nwpr_hand_values() {
        // constant values: NP = N_b, clamped at the ceiling with saturation
        let vals = vec![c(3.0, 1.0); 8];
        let est = nwpr_cn0(&vals, 250e-6);
        assert!(est.saturated);
        assert!((est.np - (8.0 - 1e-9)).abs() < 1e-12);
        assert!(est.cn0_dbhz.is_some());

        // N_b=2, B={1, j}: WBP=2, NBP=|1+j|^2=2, NP=1 -> clamped at floor
        let vals = [c(1.0, 0.0), c(0.0, 1.0)];
        let est = nwpr_cn0(&vals, 250e-6);
        assert!(est.saturated);
        assert!((est.np - (1.0 + 1e-9)).abs() < 1e-12);
        assert!((est.wbp - 2.0).abs() < 1e-12);
        assert!((est.nbp - 2.0).abs() < 1e-12);
        // floor estimate is a very small C/N0
        assert!(est.cn0_dbhz.unwrap() < -50.0);

        // all-zero input -> invalid
        let vals = [c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(nwpr_cn0(&vals, 250e-6).cn0_dbhz, None);
    }

    #[test]
    fn nwpr_estimates_true_cn0_within_a_db() {
        // B(k) = A*N + CN(0, N*sigma2) at 40 dB-Hz, W = 250 us, N_b = 1000
        let fs = DEFAULT_SAMPLE_RATE_HZ;
        let n = 1023.0;
        let a = 100.0;
        let sigma2 = fs;
        let sd = (n * sigma2 / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut mean_est = 0.0;
        let trials = 30;
        for _ in 0..trials {
            let vals: Vec<Complex<f64>> = (0..1000)
                .map(|_| {
                    c(
                        a * n + sd * rng.sample::<f64, _>(rand_distr::StandardNormal),
                        sd * rng.sample::<f64, _>(rand_distr::StandardNormal),
                    )
                })
                .collect();
            let est = nwpr_cn0(&vals, 250e-6).cn0_dbhz.unwrap();
            assert!((est - 40.0).abs() < 1.0, "estimate {est} dB-Hz");
            mean_est += est / trials as f64;
        }
        assert!((mean_est - 40.0).abs() < 0.3, "mean estimate {mean_est}");
    }

    #[test]
    fn r4_hand_values() {
        // identical begin/end lists, equal windows -> 0
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<(Complex<f64>, Complex<f64>)> = (0..64)
            .map(|_| {
                let v = c(rng.gen::<f64>() + 1.0, rng.gen::<f64>());
                (v, v)
            })
            .collect();
        let p = pairs_from(&vals);
        let (v, _, _) = r4(&p, 250e-6, 250e-6);
        assert!(v.unwrap() < 1e-9);

        // begin all zero -> invalid propagates
        let p = pairs_from(&[(c(0.0, 0.0), c(1.0, 0.0)), (c(0.0, 0.0), c(1.0, 0.1))]);
        let (v, beg, _) = r4(&p, 250e-6, 250e-6);
        assert_eq!(v, None);
        assert_eq!(beg.cn0_dbhz, None);
    }

    #[test]
    fn r4_separates_different_cn0_levels() {
        // begin at true 37 dB-Hz, end at true 40 dB-Hz -> ~3 dB apart
        let fs = DEFAULT_SAMPLE_RATE_HZ;
        let n = 1023.0;
        let sd = (n * fs / 2.0).sqrt();
        let a37 = 10f64.powf(3.7 / 2.0);
        let a40 = 100.0;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut draw = |a: f64| {
            c(
                a * n + sd * rng.sample::<f64, _>(rand_distr::StandardNormal),
                sd * rng.sample::<f64, _>(rand_distr::StandardNormal),
            )
        };
        for _ in 0..10 {
            let vals: Vec<(Complex<f64>, Complex<f64>)> =
                (0..1000).map(|_| (draw(a37), draw(a40))).collect();
            let p = pairs_from(&vals);
            let (v, _, _) = r4(&p, 250e-6, 250e-6);
            let v = v.unwrap();
            assert!((v - 3.0).abs() < 1.0, "r4 = {v}");
        }
    }

    #[test]
    fn r5_hand_values() {
        let p = pairs_from(&[(c(2.0, 3.0), c(2.0, 3.0))]);
        assert!(r5(&p).0.unwrap() < 1e-15);
        // sum_beg = 1, sum_end = j -> pi/2
        let p = pairs_from(&[(c(1.0, 0.0), c(0.0, 1.0))]);
        assert!((r5(&p).0.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        // zero aggregate -> invalid
        let p = pairs_from(&[(c(1.0, 0.0), c(1.0, 0.0)), (c(-1.0, 0.0), c(1.0, 0.0))]);
        assert_eq!(r5(&p).0, None);
    }

    #[test]
    fn r5_wrap_keeps_result_in_0_pi() {
        // phases that differ by just over pi wrap back below pi
        let p = pairs_from(&[(
            c((3.0f64).cos() * 2.0, (3.0f64).sin() * 2.0),
            c((-3.0f64).cos(), (-3.0f64).sin()),
        )]);
        let v = r5(&p).0.unwrap();
        assert!(v <= std::f64::consts::PI + 1e-12);
        assert!((v - (2.0 * std::f64::consts::PI - 6.0)).abs() < 1e-9);
    }

    #[test]
    fn noiseless_h0_identity() {
        let an = c(102300.0, 0.0);
        let p: Vec<_> = (0..50)
            .map(|k| PartialCorrelationPair::new(an, an, k))
            .collect();
        let stats = compute_statistics(&p, &ctx_equal());
        assert_eq!(stats.r1, Some(1.0));
        assert!(stats.r2.unwrap() < 1e-15);
        assert_eq!(stats.r3, Some(0.0));
        assert!(stats.nwpr_beg.saturated && stats.nwpr_end.saturated);
        assert!(stats.r4.unwrap() < 1e-12);
        assert_eq!(stats.r5, Some(0.0));
    }

    #[test]
    fn unequal_windows_invalidate_r2_r3_only() {
        let ctx = StatContext {
            window_begin_s: 125e-6,
            window_end_s: 250e-6,
            samples_begin: 512,
            samples_end: 1023,
        };
        let p = pairs_from(&[(c(2.0, 1.0), c(4.0, -1.0)), (c(1.5, 0.5), c(4.2, 0.3))]);
        let stats = compute_statistics(&p, &ctx);
        assert_eq!(stats.r2, None);
        assert_eq!(stats.r3, None);
        assert!(stats.r1.is_some() && stats.r4.is_some() && stats.r5.is_some());
    }

    proptest! {
        /// Common rotation leaves R1, R2, R3, R4, R5 unchanged.
        #[test]
        fn common_rotation_invariance(
            theta in 0.0..std::f64::consts::TAU,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<(Complex<f64>, Complex<f64>)> = (0..16)
                .map(|_| {
                    (
                        c(rng.gen::<f64>() * 4.0 - 2.0 + 3.0, rng.gen::<f64>() * 2.0 - 1.0),
                        c(rng.gen::<f64>() * 4.0 - 2.0 + 3.0, rng.gen::<f64>() * 2.0 - 1.0),
                    )
                })
                .collect();
            let rot = c(theta.cos(), theta.sin());
            let rotated: Vec<_> = vals.iter().map(|&(b, e)| (b * rot, e * rot)).collect();
            let s0 = compute_statistics(&pairs_from(&vals), &ctx_equal());
            let s1 = compute_statistics(&pairs_from(&rotated), &ctx_equal());
            for d in Detector::ALL {
                match (s0.value(d), s1.value(d)) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()),
                        "{d}: {a} vs {b}"),
                    (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
                }
            }
        }

        /// Positive real scaling: R1, R2, R5 unchanged; R3 scales by s;
        /// R4 unchanged (NP is scale-free).
        #[test]
        fn positive_scaling_behavior(
            scale in 0.1f64..50.0,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<(Complex<f64>, Complex<f64>)> = (0..16)
                .map(|_| {
                    (
                        c(rng.gen::<f64>() + 2.0, rng.gen::<f64>()),
                        c(rng.gen::<f64>() + 2.0, rng.gen::<f64>()),
                    )
                })
                .collect();
            let scaled: Vec<_> = vals.iter().map(|&(b, e)| (b * scale, e * scale)).collect();
            let s0 = compute_statistics(&pairs_from(&vals), &ctx_equal());
            let s1 = compute_statistics(&pairs_from(&scaled), &ctx_equal());
            for d in [Detector::R1, Detector::R2, Detector::R5] {
                let (a, b) = (s0.value(d).unwrap(), s1.value(d).unwrap());
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{d}: {a} vs {b}");
            }
            let (a, b) = (s0.r3.unwrap(), s1.r3.unwrap());
            prop_assert!((a * scale - b).abs() < 1e-9 * (1.0 + b.abs()));
            let (a, b) = (s0.r4.unwrap(), s1.r4.unwrap());
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }

        /// Cauchy-Schwarz: NP <= N_b always, equality iff all values equal.
        #[test]
        fn np_respects_cauchy_schwarz(seed in 0u64..2000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2 + (seed as usize % 30);
            let vals: Vec<Complex<f64>> = (0..n)
                .map(|_| c(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0))
                .collect();
            let est = nwpr_cn0(&vals, 250e-6);
            prop_assert!(est.np <= n as f64 - 1e-9 + 1e-12);
            prop_assert!(est.np >= 0.0);
        }
    }
}
