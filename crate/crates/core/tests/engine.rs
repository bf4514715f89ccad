use opinion_kinetics::engine::{
    empirical_moments, leader_counts, mc_step, replica_rng, run, FamilyKernels, InitialLaw, LeaderFamily, Model,
    OpinionEnsemble, RunSettings,
};
use opinion_kinetics::{
    CompromiseKernel, DiffusionShape, FamilyScaling, LeaderStrategy, Opinion, Penalty, RawScaling, ScaledParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(variance: f64) -> ScaledParams {
    ScaledParams::derive(&RawScaling {
        epsilon: 0.01,
        penalty: Penalty::Kappa(100.0),
        c_f: 1.0,
        follower_variance: variance,
        families: vec![FamilyScaling {
            rho: 0.05,
            c_fl_hat: 0.1,
            c_l_hat: 0.1,
            follower_variance: variance,
            leader_variance: variance,
        }],
    })
    .unwrap()
}

fn model(variance: f64) -> Model {
    Model::new(params(variance), CompromiseKernel::UNIT, DiffusionShape::QuadraticCap, &[FamilyKernels::default()]).unwrap()
}

fn test_1a(n_f: usize, seed: u64) -> OpinionEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_l = leader_counts(n_f, &[0.05]).unwrap()[0];
    OpinionEnsemble::new(
        InitialLaw::Uniform { lo: -1.0, hi: -0.5 }.sample(n_f, &mut rng).unwrap(),
        vec![LeaderFamily {
            leaders: InitialLaw::Normal { mean: 0.5, variance: 0.05 }.sample(n_l, &mut rng).unwrap(),
            mass: 0.05,
            strategy: LeaderStrategy::new(0.5, 0.5).unwrap(),
        }],
    )
    .unwrap()
}

fn settings(horizon: f64) -> RunSettings {
    RunSettings {
        horizon,
        checkpoints: vec![],
        record_every: 1,
        bins: 50,
    }
}

#[test]
fn one_step_follower_drift_matches_mean_equation() {
    let model = model(0.01);
    let ens = test_1a(10_000, 1);
    let m0 = empirical_moments(&ens, 0.0).unwrap();
    let increments: Vec<f64> = (0..200)
        .map(|r| {
            let mut e = ens.clone();
            let tally = mc_step(&mut e, &model, &mut replica_rng(99, r));
            assert_eq!(tally.rejected, 0);
            empirical_moments(&e, 0.0).unwrap().m_f - m0.m_f
        })
        .collect();
    let n = increments.len() as f64;
    let mean = increments.iter().sum::<f64>() / n;
    let sd = (increments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    // dt * (rho / c_FL) * (m_L - m_F) with rho / c_FL = 1 / c_FL_hat = 10.
    let expected = model.plan().dt * 10.0 * (m0.m_l[0] - m0.m_f);
    assert!((mean - expected).abs() <= 3.0 * sd / n.sqrt(), "{mean} vs {expected} (se {})", sd / n.sqrt());
}

#[test]
fn runs_are_deterministic_and_conserve_mass() {
    let model = model(0.01);
    let ens = test_1a(2_001, 3);
    let s = RunSettings {
        horizon: 0.2,
        checkpoints: vec![0.0, 0.1, 0.2],
        record_every: 10,
        bins: 40,
    };
    let a = run(ens.clone(), &model, &s, 5).unwrap();
    let b = run(ens.clone(), &model, &s, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.ensemble.sizes(), ens.sizes());
    assert_eq!(a.checkpoints.len(), 3);
    for c in &a.checkpoints {
        assert!((c.followers.integral() - 1.0).abs() < 1e-12);
        assert!((c.leaders[0].integral() - 0.05).abs() < 1e-12);
    }
    let other = run(ens, &model, &s, 6).unwrap();
    assert_ne!(a.records.last(), other.records.last());
}

#[test]
fn moments_respect_cauchy_schwarz() {
    let out = run(test_1a(5_000, 4), &model(0.01), &settings(0.3), 1).unwrap();
    for r in &out.records {
        let m = &r.moments;
        assert!(m.m_f * m.m_f <= m.e_f + 1e-15 && m.e_f <= 1.0);
        assert!(m.m_l[0] * m.m_l[0] <= m.e_l[0] + 1e-15 && m.e_l[0] <= 1.0);
    }
}

#[test]
fn zero_horizon_returns_initial_moments() {
    let ens = test_1a(100, 5);
    let mut s = settings(0.0);
    s.checkpoints = vec![0.0];
    let out = run(ens.clone(), &model(0.01), &s, 1).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].moments, empirical_moments(&ens, 0.0).unwrap());
    assert_eq!(out.steps, 0);
    assert_eq!(out.ensemble, ens);
    assert_eq!(out.checkpoints.len(), 1);
}

#[test]
fn consensus_at_target_is_invariant() {
    let at = |n: usize| vec![Opinion::new(0.5).unwrap(); n];
    let ens = OpinionEnsemble::new(
        at(101),
        vec![LeaderFamily { leaders: at(11), mass: 0.05, strategy: LeaderStrategy::new(0.5, 0.5).unwrap() }],
    )
    .unwrap();
    let out = run(ens.clone(), &model(0.0), &settings(0.05), 2).unwrap();
    assert_eq!(out.ensemble, ens);
}

#[test]
fn odd_populations_step_without_error() {
    let mut ens = test_1a(1, 6);
    ens.families[0].leaders.truncate(1);
    let out = run(ens, &model(0.01), &settings(0.01), 3).unwrap();
    assert_eq!(out.ensemble.sizes(), (1, vec![1]));
}

#[test]
fn partial_last_step_lands_on_horizon() {
    let out = run(test_1a(100, 7), &model(0.01), &settings(0.0025), 1).unwrap();
    assert_eq!(out.steps, 3);
    assert_eq!(out.records.last().unwrap().moments.t, 0.0025);
}

#[test]
fn dirac_concentration_without_noise() {
    let ens = test_1a(10_000, 8);
    let s = RunSettings {
        horizon: 20.0,
        checkpoints: vec![],
        record_every: 1000,
        bins: 50,
    };
    let out = run(ens, &model(0.0), &s, 8).unwrap();
    let first = &out.records[0].moments;
    let last = &out.records.last().unwrap().moments;
    assert!(last.follower_variance() <= 0.01 * first.follower_variance());
    assert!((last.m_f - 0.5).abs() <= 0.01);
    assert_eq!(out.tally.rejected, 0);
}

#[test]
fn uncertified_runs_reject_instead_of_clamping() {
    let p = params(0.01);
    let loud = FamilyKernels {
        follower_diffusion: DiffusionShape::Constant { level: 1.0 },
        ..FamilyKernels::default()
    };
    assert!(Model::new(p.clone(), CompromiseKernel::UNIT, DiffusionShape::QuadraticCap, &[loud]).is_err());
    let m = Model::new_unchecked(p, CompromiseKernel::UNIT, DiffusionShape::QuadraticCap, &[loud]).unwrap();
    let mut ens = test_1a(2_000, 9);
    for w in ens.followers.iter_mut().take(500) {
        *w = Opinion::MIN;
    }
    let out = run(ens, &m, &settings(0.05), 9).unwrap();
    assert!(out.tally.rejected > 0);
    assert!(out.records.last().unwrap().rejection_fraction > 0.0);
}

#[test]
fn mismatched_ensemble_is_rejected() {
    let mut ens = test_1a(100, 10);
    ens.families[0].mass = 0.1;
    assert!(run(ens, &model(0.01), &settings(0.01), 1).is_err());
    let mut s = settings(0.1);
    s.checkpoints = vec![0.5];
    assert!(run(test_1a(100, 10), &model(0.01), &s, 1).is_err());
}
