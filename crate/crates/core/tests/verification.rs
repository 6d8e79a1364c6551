use hazardlab::compensator::{Engine, GbmKernel};
use hazardlab::markov::{
    validate_generator, DefaultRule, JumpLaw, ModelKind, ModelSpec, ObservationSchedule, RegimeParams, SimConfig,
};
use hazardlab::verification::{
    laplacian_intensity, mc_survival, report_csv, report_json, run_verification, Scenario, VerifySettings,
};
use hazardlab::HazardError;

fn rs_model() -> ModelSpec {
    ModelSpec {
        kind: ModelKind::RegimeSwitching,
        generator: validate_generator(vec![vec![-1.0, 1.0], vec![0.5, -0.5]]).unwrap(),
        regimes: vec![RegimeParams { mu: 0.02, sigma: 0.25 }, RegimeParams { mu: -0.05, sigma: 0.45 }],
        jump_laws: vec![],
        barrier: 0.8,
        x0: 1.0,
        initial_regime: 0,
        default_rule: DefaultRule::Barrier,
    }
}

fn schedule() -> ObservationSchedule {
    ObservationSchedule::uniform(0.25, 2.0, true).unwrap()
}

fn settings(n: usize, seed: u64) -> VerifySettings {
    VerifySettings { n_paths: n, seed, ..VerifySettings::default() }
}

#[test]
fn wrong_regime_volatility_fails_a_regime_bucket() {
    let s = VerifySettings { wrong_regime_sigma: true, ..settings(100_000, 21) };
    let o = run_verification(&rs_model(), &schedule(), &SimConfig::default(), &s).unwrap();
    let orth = o.orthogonality.unwrap();
    assert!(orth.rows.iter().any(|r| !r.pass && r.bucket.as_deref().is_some_and(|b| b.starts_with("regime="))));
    assert!(!o.residual.pass);
}

#[test]
fn true_compensator_passes_every_bucket() {
    let o = run_verification(&rs_model(), &schedule(), &SimConfig::default(), &settings(100_000, 22)).unwrap();
    assert_eq!(o.scenario, Scenario::WindowedBarrier);
    assert!(o.residual.pass);
    assert!(o.orthogonality.unwrap().pass);
}

#[test]
fn downward_bias_also_fails() {
    let s = VerifySettings { bias_factor: 0.8, ..settings(100_000, 23) };
    let o = run_verification(&rs_model(), &schedule(), &SimConfig::default(), &s).unwrap();
    assert!(o.residual.rows.iter().any(|r| r.z.abs() > 3.5));
}

#[test]
fn jump_diffusion_passes_under_every_engine() {
    let mut m = rs_model();
    m.kind = ModelKind::JumpDiffusion;
    m.regimes = vec![RegimeParams { mu: 0.02, sigma: 0.25 }; 2];
    m.jump_laws = vec![JumpLaw::PointMass { z: 0.85 }, JumpLaw::Beta { alpha: 8.0, beta: 1.5 }];
    // the sampled engines integrate the gap numerically per knot; their
    // agreement with the named engine is checked pathwise elsewhere
    for (engine, n) in [(Engine::Named, 10_000), (Engine::Eq5Generic, 2000), (Engine::JyTransform, 2000)] {
        let s = VerifySettings { engine, ..settings(n, 24) };
        let o = run_verification(&m, &schedule(), &SimConfig::default(), &s).unwrap();
        assert!(o.residual.pass, "{engine:?}: {:?}", o.residual.rows);
        assert_eq!(o.residual.skipped_mass, 0.0);
    }
}

#[test]
fn settings_are_checked() {
    let cfg = SimConfig::default();
    let m = rs_model();
    let few = run_verification(&m, &schedule(), &cfg, &settings(999, 1));
    assert!(matches!(few, Err(HazardError::Validation(_))));
    let late = VerifySettings { times: vec![1.0, 3.0], ..settings(1000, 1) };
    assert!(run_verification(&m, &schedule(), &cfg, &late).is_err());
    let unsorted = VerifySettings { times: vec![1.0, 0.5], ..settings(1000, 1) };
    assert!(run_verification(&m, &schedule(), &cfg, &unsorted).is_err());
    let blind = ObservationSchedule::uniform(0.25, 2.0, false).unwrap();
    assert!(run_verification(&m, &blind, &cfg, &settings(1000, 1)).is_err());
}

#[test]
fn survival_edge_cases() {
    let mut m = rs_model();
    m.kind = ModelKind::PlainGbm;
    m.generator = validate_generator(vec![vec![0.0]]).unwrap();
    m.regimes.truncate(1);
    let cfg = SimConfig::default();
    assert_eq!(mc_survival(&m, 0.0, 1000, 1, &cfg).unwrap().probability, 1.0);
    m.barrier = 1.2;
    assert_eq!(mc_survival(&m, 1.0, 1000, 1, &cfg).unwrap().probability, 0.0);
}

#[test]
fn laplacian_vanishes_right_after_an_observation() {
    let k = GbmKernel::new(0.2, -0.8).unwrap();
    assert!(laplacian_intensity(&k, 1e-4, 1e-6).unwrap() < 1e-100);
}

#[test]
fn reports_are_versioned() {
    let o = run_verification(&rs_model(), &schedule(), &SimConfig::default(), &settings(2000, 3)).unwrap();
    let csv = report_csv(&o.residual);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# format_version=1,label=martingale residual"));
    assert_eq!(lines.next().unwrap(), "t,mean,se,z,pass");
    assert_eq!(csv.lines().count(), 2 + 3);
    let json: serde_json::Value = serde_json::from_str(&report_json(&o.residual).unwrap()).unwrap();
    assert_eq!(json["format_version"], 1);
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}
