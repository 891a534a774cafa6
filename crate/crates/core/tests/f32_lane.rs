//! The whole pipeline must instantiate at f32 as well as f64: same scenario,
//! same structure, looser numerics.

use scersim::attack::AttackKind;
use scersim::campaign::{run_trial, Hypothesis};
use scersim::detector::Detector;
use scersim::waveform::ScenarioConfig;
use scersim::{Scenario32, Scenario64};

fn scenario32() -> Scenario32 {
    let mut cfg = ScenarioConfig::<f32>::default();
    cfg.n_symbols = 8;
    cfg.master_seed = 321;
    cfg
}

#[test]
fn f32_trials_run_and_track_f64_loosely() {
    let cfg32 = scenario32();
    let t32 = run_trial(&cfg32, Hypothesis::H1, 0, None).unwrap();
    for d in Detector::ALL {
        assert!(t32.statistics.value(d).is_some(), "{d} computable at f32");
    }

    // Same scenario at f64 from the same seed: the statistics are not
    // bit-comparable across precisions, but they live on the same scale.
    let mut cfg64 = Scenario64::default();
    cfg64.n_symbols = 8;
    cfg64.master_seed = 321;
    let t64 = run_trial(&cfg64, Hypothesis::H1, 0, None).unwrap();
    let (a, b) = (
        t32.statistics.r3.unwrap() as f64,
        t64.statistics.r3.unwrap(),
    );
    assert!(a > 0.0 && b > 0.0 && a / b < 50.0 && b / a < 50.0);
}

#[test]
fn f32_noiseless_identity_holds() {
    let mut cfg = scenario32();
    cfg.attack.kind = AttackKind::None;
    cfg.channel.noise_bypass = true;
    let t = run_trial(&cfg, Hypothesis::H0, 0, None).unwrap();
    assert_eq!(t.statistics.r1, Some(1.0f32));
    assert!(t.statistics.r2.unwrap() < 1e-5);
    assert_eq!(t.statistics.r5, Some(0.0));
}

#[test]
fn f32_analysis_functions() {
    let t: f32 = scersim::analysis::spoofer_decision_time(45.0f32, 0.1).unwrap();
    assert!((t - 25.97e-6).abs() < 0.05e-6);
    let pe = scersim::analysis::symbol_error_prob(40.0f32, 271e-6);
    assert!((pe - 0.01).abs() < 1e-3);
}
