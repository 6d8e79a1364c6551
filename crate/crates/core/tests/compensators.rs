use hazardlab::compensator::{
    general_compensator_eq5, intensity_deterministic_obs, intensity_jump_diffusion, intensity_regime_switching,
    named_intensity, window_compensator, window_increments, CompensatorPath, DurationLaw, Engine, GbmKernel,
    LocalJumpWindow, ModelKernel, WindowEnd,
};
use hazardlab::levy::{chain_hit_compensator, LevySystemSpec, TargetSet};
use hazardlab::markov::{simulate_chain, validate_generator, DefaultRule, JumpLaw, ModelKind, ModelSpec, RegimeParams};
use hazardlab::verification::map_paths;
use proptest::prelude::*;

fn model(kind: ModelKind, sigma: [f64; 2], laws: Vec<JumpLaw>) -> ModelSpec {
    ModelSpec {
        kind,
        generator: validate_generator(vec![vec![-0.8, 0.8], vec![0.3, -0.3]]).unwrap(),
        regimes: sigma.iter().map(|&s| RegimeParams { mu: 0.1, sigma: s }).collect(),
        jump_laws: laws,
        barrier: 1.0,
        x0: 2.0,
        initial_regime: 0,
        default_rule: DefaultRule::Barrier,
    }
}

fn window(start: f64, len: f64, extra: f64, x: f64, regime: usize, survivor: f64) -> LocalJumpWindow {
    LocalJumpWindow {
        start,
        end: start + len,
        x_start: x,
        regime,
        residual: len + extra,
        survivor,
        end_reason: if extra > 0.0 { WindowEnd::RegimeJump } else { WindowEnd::Observation },
    }
}

#[test]
fn deterministic_observation_reference_point() {
    let gbm = ModelSpec {
        kind: ModelKind::PlainGbm,
        generator: validate_generator(vec![vec![0.0]]).unwrap(),
        regimes: vec![RegimeParams { mu: 0.5, sigma: 1.0 }],
        jump_laws: vec![],
        barrier: 1.0,
        x0: std::f64::consts::E,
        initial_regime: 0,
        default_rule: DefaultRule::Barrier,
    };
    let e = std::f64::consts::E;
    let v = intensity_deterministic_obs(e, &gbm, 1.0).unwrap();
    assert!((v - 0.354_437_452_613_603_4).abs() < 1e-14);
    // doubling |y| lowers the intensity; 0.113129348 from the same quadrature oracle
    let far = intensity_deterministic_obs(e * e, &gbm, 1.0).unwrap();
    assert!((far - 0.113_129_348_225_038_4).abs() < 1e-14);
    assert!(far < v);
}

#[test]
fn identical_regimes_give_label_free_intensities() {
    let m = model(ModelKind::RegimeSwitching, [0.4, 0.4], vec![]);
    let a = intensity_regime_switching(&window(0.0, 1.0, 0.0, 1.7, 0, 1.0), &m, 0.6).unwrap();
    let b = intensity_regime_switching(&window(0.0, 1.0, 0.0, 1.7, 1, 1.0), &m, 0.6).unwrap();
    assert_eq!(a, b);
}

#[test]
fn barrier_landing_jump_term() {
    // σ = 1, η = 0, y = −1; the jump factor e^{-1} lands on the barrier:
    // jump term q·φ(0,1,−1,0)/ψ(0,1,−1) = 0.8 × 0.300926887628
    let mut m = model(ModelKind::JumpDiffusion, [1.0, 1.0], vec![JumpLaw::PointMass { z: 1.0 }; 2]);
    m.regimes = vec![RegimeParams { mu: 0.5, sigma: 1.0 }; 2];
    let w = window(0.0, 1.0, 0.0, std::f64::consts::E, 0, 1.0);
    let base = intensity_jump_diffusion(&w, &m, 1.0).unwrap();
    m.jump_laws[1] = JumpLaw::PointMass { z: (-1.0f64).exp() };
    let with_jump = intensity_jump_diffusion(&w, &m, 1.0).unwrap();
    assert!((with_jump - base - 0.8 * 0.300_926_887_628_163_9).abs() < 1e-12);
}

#[test]
fn engines_agree_on_window_increments() {
    let laws = vec![JumpLaw::PointMass { z: 0.8 }, JumpLaw::Beta { alpha: 3.0, beta: 1.5 }];
    let m = model(ModelKind::JumpDiffusion, [0.3, 0.5], laws);
    let w = window(0.5, 0.75, 0.2, 1.6, 1, 0.7);
    let offsets = [0.1, 0.4, 0.75];
    let (named, _) = window_increments(&m, &w, Engine::Named, 4000, &offsets).unwrap();
    for engine in [Engine::Eq5Generic, Engine::JyTransform] {
        let (v, skipped) = window_increments(&m, &w, engine, 4000, &offsets).unwrap();
        assert_eq!(skipped, 0.0);
        for (a, b) in v.iter().zip(&named) {
            // second-order trapezoid error: about 4e-6 relative at 4000 knots
            assert!((a - b).abs() < 1e-5 * b, "{engine:?}: {a} vs {b}");
        }
    }
}

#[test]
fn chain_hit_compensator_at_default_is_unit_exponential() {
    let q = validate_generator(vec![vec![-0.2, 0.2], vec![0.5, -0.5]]).unwrap();
    let spec = LevySystemSpec::new(q.clone(), TargetSet::Regimes { regimes: vec![0] }).unwrap();
    let a_tau = map_paths(100_000, 8, |_, rng| {
        // long horizon so that every chain hits
        let segs = simulate_chain(&q, 1, 200.0, rng);
        let tau = segs.iter().find(|s| s.regime == 0).map(|s| s.start).unwrap();
        Ok(chain_hit_compensator(&spec, &segs, tau)?.value_at(tau))
    })
    .unwrap();
    let n = a_tau.len() as f64;
    let m = a_tau.iter().sum::<f64>() / n;
    let v = a_tau.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    // Exp(1): sd of the mean 1/√n, of the sample variance √8/√n
    assert!((m - 1.0).abs() <= 4.0 / n.sqrt(), "mean {m}");
    assert!((v - 1.0).abs() <= 4.0 * 8f64.sqrt() / n.sqrt(), "variance {v}");
}

fn random_path(knots: Vec<f64>, density: Vec<f64>, atoms: Vec<(f64, f64)>, stop: f64) -> CompensatorPath {
    let mut k = knots;
    k.sort_by(f64::total_cmp);
    k.dedup();
    let d = density.into_iter().take(k.len()).collect::<Vec<_>>();
    let k = k.into_iter().take(d.len()).collect::<Vec<_>>();
    let first = k[0];
    let last = *k.last().unwrap();
    let atoms =
        atoms.into_iter().map(|(f, m)| (first + f * (last - first), m)).filter(|a| a.0 > first).collect::<Vec<_>>();
    let mut atoms = atoms;
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms.dedup_by(|a, b| a.0 == b.0);
    CompensatorPath::new(k, d, atoms, stop).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn compensator_paths_are_monotone_and_frozen(
        knots in prop::collection::vec(0.0..5.0f64, 2..20),
        density in prop::collection::vec(0.0..3.0f64, 20),
        atoms in prop::collection::vec((0.0..1.0f64, 0.0..0.5f64), 0..4),
        stop in 0.0..6.0f64,
        probes in prop::collection::vec(0.0..7.0f64, 10),
    ) {
        let mut k = knots;
        k.push(0.0);
        let a = random_path(k, density, atoms, stop);
        prop_assert_eq!(a.value_at(0.0), 0.0);
        let mut p = probes;
        p.sort_by(f64::total_cmp);
        for w in p.windows(2) {
            prop_assert!(a.value_at(w[0]) <= a.value_at(w[1]) + 1e-12);
        }
        for &t in &p {
            if t >= stop {
                prop_assert_eq!(a.value_at(t), a.value_at(stop));
            }
        }
    }

    #[test]
    fn survivor_scale_cancels(
        c in 0.01..1.0f64, x in 1.05..3.0f64, len in 0.05..1.5f64, extra in 0.0..1.0f64, jd in any::<bool>(),
    ) {
        let (kind, laws) = if jd {
            (ModelKind::JumpDiffusion, vec![JumpLaw::PointMass { z: 0.8 }, JumpLaw::Beta { alpha: 2.0, beta: 2.0 }])
        } else {
            (ModelKind::RegimeSwitching, vec![])
        };
        let m = model(kind, [0.3, 0.6], laws);
        let w1 = window(0.2, len, extra, x, 0, 1.0);
        let wc = window(0.2, len, extra, x, 0, c);
        let (k, law) = ModelKernel::for_window(&m, &w1).unwrap();
        let a = general_compensator_eq5(&w1, &k, &law, 12).unwrap();
        let b = general_compensator_eq5(&wc, &k, &law, 12).unwrap();
        prop_assert_eq!(a.density, b.density);
        let ja = window_compensator(&m, &w1, Engine::JyTransform, 12).unwrap();
        let jb = window_compensator(&m, &wc, Engine::JyTransform, 12).unwrap();
        for (p, q) in ja.density.iter().zip(&jb.density) {
            prop_assert!((p - q).abs() <= 1e-12 * p.max(1.0));
        }
    }

    #[test]
    fn generic_formula_matches_named_intensity(
        x in 1.05..3.0f64, len in 0.05..1.5f64, extra in 0.0..1.0f64, regime in 0usize..2,
        z in 0.5..1.0f64, alpha in 1.0..6.0f64, jd in any::<bool>(),
    ) {
        let (kind, laws) = if jd {
            (ModelKind::JumpDiffusion, vec![JumpLaw::PointMass { z }, JumpLaw::Beta { alpha, beta: 1.5 }])
        } else {
            (ModelKind::RegimeSwitching, vec![])
        };
        let m = model(kind, [0.3, 0.6], laws);
        let w = window(0.4, len, extra, x, regime, 0.9);
        let (k, law) = ModelKernel::for_window(&m, &w).unwrap();
        let p = general_compensator_eq5(&w, &k, &law, 10).unwrap();
        for (&t, &d) in p.knots.iter().zip(&p.density) {
            prop_assert!((d - named_intensity(&m, &w, t).unwrap()).abs() <= 1e-8);
        }
    }

    #[test]
    fn duration_law_has_unit_mass(rate in 0.0..5.0f64, cap in 0.01..3.0f64) {
        let law = DurationLaw::new(rate, cap);
        prop_assert!((law.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gbm_kernel_intensity_is_nonnegative(eta in -2.0..2.0f64, y in -3.0..-0.05f64, len in 0.05..3.0f64) {
        let k = GbmKernel::new(eta, y).unwrap();
        let w = window(0.0, len, 0.0, 2.0, 0, 1.0);
        let p = general_compensator_eq5(&w, &k, &DurationLaw::new(0.0, len), 16).unwrap();
        prop_assert!(p.density.iter().all(|&d| d >= 0.0));
    }
}
