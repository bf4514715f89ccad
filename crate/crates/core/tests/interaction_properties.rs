use opinion_kinetics::interactions::{
    bound_certificate, follower_follower, follower_leader, leader_leader, FollowerLeaderRule, LeaderRule,
    NoiseSpec, PeerRule,
};
use opinion_kinetics::params::beta;
use opinion_kinetics::{CompromiseKernel, DiffusionShape, LeaderStrategy, Opinion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opinion<R: Rng>(rng: &mut R) -> Opinion {
    // Hit the endpoints now and then; they are where bounds are tight.
    let x = match rng.random_range(0..20) {
        0 => -1.0,
        1 => 1.0,
        _ => rng.random_range(-1.0..=1.0),
    };
    Opinion::new(x).unwrap()
}

fn kernel<R: Rng>(rng: &mut R, allow_gate: bool) -> CompromiseKernel {
    if allow_gate && rng.random_bool(0.5) {
        CompromiseKernel::bounded_confidence(rng.random_range(0.0..=2.0)).unwrap()
    } else {
        CompromiseKernel::constant(rng.random_range(0.2..=1.0)).unwrap()
    }
}

fn diffusion<R: Rng>(rng: &mut R) -> DiffusionShape {
    match rng.random_range(0..3) {
        0 => DiffusionShape::None,
        1 => DiffusionShape::Constant { level: rng.random_range(0.0..=1.0) },
        _ => DiffusionShape::QuadraticCap,
    }
}

/// Noise whose support is a random fraction of the admissible window.
fn noise_within<R: Rng>(rng: &mut R, window: (f64, f64)) -> NoiseSpec {
    let limit = window.0.min(window.1).min(1.0);
    let support = limit * rng.random_range(0.0..=1.0);
    NoiseSpec::uniform(support * support / 3.0).unwrap()
}

#[test]
fn leader_contraction_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let unit = CompromiseKernel::UNIT;
    for _ in 0..100_000 {
        let alpha = 0.5 * (1.0 - rng.random::<f64>());
        let (w, v) = (opinion(&mut rng), opinion(&mut rng));
        let strategy = LeaderStrategy::new(rng.random(), rng.random_range(-1.0..=1.0)).unwrap();
        let m_f = rng.random_range(-1.0..=1.0);
        let b = beta(alpha, rng.random_range(0.01..100.0));
        let (a, c) = leader_leader(w, v, 0.0, 0.0, &unit, &DiffusionShape::QuadraticCap, alpha, b, m_f, &strategy);
        let lhs = (a - c).abs();
        let rhs = (1.0 - 2.0 * alpha).abs() * (w.get() - v.get()).abs();
        assert!((lhs - rhs).abs() <= 1e-12, "alpha={alpha} w={w} v={v}: {lhs} vs {rhs}");
    }
}

#[test]
fn leader_pair_mean_moves_by_the_control() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let alpha = 0.5 * (1.0 - rng.random::<f64>());
        let r = CompromiseKernel::constant(rng.random_range(0.0..=1.0)).unwrap();
        let (w, v) = (opinion(&mut rng), opinion(&mut rng));
        let strategy = LeaderStrategy::new(rng.random(), rng.random_range(-1.0..=1.0)).unwrap();
        let m_f = rng.random_range(-1.0..=1.0);
        let b = beta(alpha, 10.0);
        let (a, c) = leader_leader(w, v, 0.0, 0.0, &r, &DiffusionShape::QuadraticCap, alpha, b, m_f, &strategy);
        let control = opinion_kinetics::control::feedback_control(&opinion_kinetics::control::ControlInput {
            leader: w,
            partner: v,
            follower_mean: m_f,
            strategy,
            alpha,
            beta: b,
            kernel: r,
        });
        let shift = 0.5 * (a + c) - 0.5 * (w.get() + v.get());
        assert!((shift - control).abs() < 1e-14);
    }
}

#[test]
fn noiseless_follower_rules_stay_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1_000_000 {
        let alpha = 0.5 * (1.0 - rng.random::<f64>());
        let k = kernel(&mut rng, true);
        let d = diffusion(&mut rng);
        let (w, v) = (opinion(&mut rng), opinion(&mut rng));
        let (a, b) = follower_follower(w, v, 0.0, 0.0, &k, &d, alpha);
        assert!(Opinion::checked(a).is_some() && Opinion::checked(b).is_some(), "{w} {v} -> {a} {b}");
        let (x, l) = follower_leader(w, v, 0.0, &k, &d, alpha);
        assert!(Opinion::checked(x).is_some());
        assert_eq!(l, v);
    }
}

#[test]
fn certified_rules_never_leave_the_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut interactions = 0u64;
    while interactions < 10_000_000 {
        let alpha = 0.5 * (1.0 - rng.random::<f64>());
        // beta <= 2 alpha r keeps the control condition satisfiable.
        let leader_kernel = kernel(&mut rng, false);
        let b = beta(alpha, rng.random_range(0.01..1000.0)).min(2.0 * alpha * leader_kernel.min_value());
        let mut peer = PeerRule { kernel: kernel(&mut rng, true), diffusion: diffusion(&mut rng), noise: NoiseSpec::SILENT };
        let mut fl = FollowerLeaderRule { kernel: kernel(&mut rng, true), diffusion: diffusion(&mut rng), noise: NoiseSpec::SILENT };
        let mut ll = LeaderRule { kernel: leader_kernel, diffusion: diffusion(&mut rng), noise: NoiseSpec::SILENT };
        let windows = bound_certificate(&peer, &fl, &ll, alpha, b);
        peer.noise = noise_within(&mut rng, windows.peer_window);
        fl.noise = noise_within(&mut rng, windows.follower_window);
        ll.noise = noise_within(&mut rng, windows.leader_window);
        let cert = bound_certificate(&peer, &fl, &ll, alpha, b);
        assert!(cert.satisfied(), "{:?}", cert.failures());

        let strategy = LeaderStrategy::new(rng.random(), rng.random_range(-1.0..=1.0)).unwrap();
        for _ in 0..1000 {
            let (w, v) = (opinion(&mut rng), opinion(&mut rng));
            let m_f = rng.random_range(-1.0..=1.0);
            let (a, c) = peer.apply(w, v, alpha, &mut rng);
            let x = fl.apply(w, v, alpha, &mut rng);
            let (y, z) = ll.apply(w, v, alpha, b, m_f, &strategy, &mut rng);
            for out in [a, c, x, y, z] {
                assert!(Opinion::checked(out).is_some(), "{out} from {w}, {v} with {cert:?}");
            }
            interactions += 3;
        }
    }
}
