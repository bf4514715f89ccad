//! Moment-ODE oracles for the Monte Carlo simulator.
//!
//! With a symmetric follower kernel, a unit follower-leader kernel and a
//! symmetric leader kernel, the mean opinions obey a closed linear system.
//! Writing `a = alpha * eta_FL~` and `b = beta * eta_L~`:
//!
//! ```text
//! m_F' = a (m_L - m_F)
//! m_L' = b [psi (w_d - m_L) + mu (m_F - m_L)]
//! ```
//!
//! In the quasi-invariant limit `a -> rho / c_FL` and `b -> 4 rho / (c_L kappa)`.
//! Second moments are not closed in general because the noise contributes
//! `integral D^2 f`, so the energy right-hand sides take those integrals as
//! inputs.

use crate::params::{FamilyParams, ScaledParams};
use crate::strategy::LeaderStrategy;
use crate::{Error, Result};

/// Coefficients of the limiting (`epsilon -> 0`) mean system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSystemParams {
    /// `rho / c_FL = 1 / c_FL_hat`.
    pub a_rate: f64,
    /// `4 rho / (c_L kappa) = 4 / (c_L_hat kappa)`.
    pub b_rate: f64,
    pub psi: f64,
    pub target: f64,
}

impl MeanSystemParams {
    pub fn from_scaled(params: &ScaledParams, family: usize, strategy: &LeaderStrategy) -> Self {
        let f = &params.family(family).scaling;
        MeanSystemParams {
            a_rate: 1.0 / f.c_fl_hat,
            b_rate: 4.0 / (f.c_l_hat * params.kappa()),
            psi: strategy.psi(),
            target: strategy.target(),
        }
    }

    pub fn mu(&self) -> f64 {
        1.0 - self.psi
    }
}

pub fn scaled_mean_rhs(m_f: f64, m_l: f64, p: &MeanSystemParams) -> (f64, f64) {
    (
        p.a_rate * (m_l - m_f),
        p.b_rate * (p.psi * (p.target - m_l) + p.mu() * (m_f - m_l)),
    )
}

/// Coefficients of the mean system before the scaling limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreLimitParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta_fl_tilde: f64,
    pub eta_l_tilde: f64,
    pub psi: f64,
    pub target: f64,
}

impl PreLimitParams {
    pub fn from_scaled(params: &ScaledParams, family: usize, strategy: &LeaderStrategy) -> Self {
        let f: &FamilyParams = params.family(family);
        PreLimitParams {
            alpha: params.alpha(),
            beta: params.beta(),
            eta_fl_tilde: f.eta_fl_tilde(),
            eta_l_tilde: f.eta_l_tilde(),
            psi: strategy.psi(),
            target: strategy.target(),
        }
    }

    pub fn mu(&self) -> f64 {
        1.0 - self.psi
    }

    /// `(a, b) = (alpha eta_FL~, beta eta_L~)`.
    pub fn rates(&self) -> (f64, f64) {
        (self.alpha * self.eta_fl_tilde, self.beta * self.eta_l_tilde)
    }
}

pub fn prelimit_mean_rhs(m_f: f64, m_l: f64, p: &PreLimitParams) -> (f64, f64) {
    let (a, b) = p.rates();
    (
        a * (m_l - m_f),
        b * (p.psi * (p.target - m_l) + p.mu() * (m_f - m_l)),
    )
}

/// `(a + b)^2 - 4 psi a b`, evaluated as `(a - b)^2 + 4 mu a b` so that it is
/// nonnegative term by term.
pub fn discriminant(p: &PreLimitParams) -> f64 {
    let (a, b) = p.rates();
    (a - b).powi(2) + 4.0 * p.mu() * a * b
}

/// Eigenvalues `(lambda_1, lambda_2)` with `lambda_2 <= lambda_1 < 0`
/// (for `psi > 0`).
pub fn prelimit_eigenvalues(p: &PreLimitParams) -> (f64, f64) {
    let (a, b) = p.rates();
    let root = discriminant(p).sqrt();
    let fast = -0.5 * (a + b + root);
    // lambda_1 lambda_2 = psi a b; this avoids cancellation in the slow root.
    let slow = if fast != 0.0 { p.psi * a * b / fast } else { 0.0 };
    (slow, fast)
}

/// Exact solution of the pre-limit mean system, as a superposition of two
/// exponential modes relaxing to `(w_d, w_d)`.
///
/// In coordinates `x = m_L - w_d`, `y = m_F - w_d` the eigenvector of mode `i`
/// is `(lambda_i + a, a)`; the mode amplitudes solve the 2x2 system fixed by
/// the initial means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSolution {
    lambda: [f64; 2],
    amplitude: [f64; 2],
    a: f64,
    target: f64,
}

impl MeanSolution {
    pub fn new(m_f0: f64, m_l0: f64, p: &PreLimitParams) -> Result<Self> {
        let (a, b) = p.rates();
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::invalid("rates", format!("a = {a}, b = {b} must be positive")));
        }
        let (l1, l2) = prelimit_eigenvalues(p);
        if (l1 - l2).abs() <= 1e-12 * (a + b) {
            return Err(Error::DegenerateEigenvalues(l1));
        }
        let x0 = m_l0 - p.target;
        let y0 = m_f0 - p.target;
        let c1 = (x0 - y0 * (l2 + a) / a) / (l1 - l2);
        let c2 = y0 / a - c1;
        Ok(MeanSolution {
            lambda: [l1, l2],
            amplitude: [c1, c2],
            a,
            target: p.target,
        })
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.lambda[0], self.lambda[1])
    }

    /// Coefficients `C_1, C_2` of `m_L(t) = C_1 e^{lambda_1 t} + C_2 e^{lambda_2 t} + w_d`.
    pub fn leader_coefficients(&self) -> (f64, f64) {
        (
            self.amplitude[0] * (self.lambda[0] + self.a),
            self.amplitude[1] * (self.lambda[1] + self.a),
        )
    }

    /// `(m_F(t), m_L(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let mut m_l = self.target;
        let mut m_f = self.target;
        for (lambda, c) in self.lambda.iter().zip(self.amplitude) {
            let e = (lambda * t).exp();
            m_l += c * (lambda + self.a) * e;
            m_f += c * self.a * e;
        }
        (m_f, m_l)
    }
}

pub fn analytic_means(t: f64, m_f0: f64, m_l0: f64, p: &PreLimitParams) -> Result<(f64, f64)> {
    if t < 0.0 {
        return Err(Error::invalid("t", format!("{t} < 0")));
    }
    Ok(MeanSolution::new(m_f0, m_l0, p)?.eval(t))
}

/// Rates of one leader family in the coupled mean system used when several
/// families act on the same followers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyMeanRates {
    pub a: f64,
    pub b: f64,
    pub psi: f64,
    pub target: f64,
}

impl From<&PreLimitParams> for FamilyMeanRates {
    fn from(p: &PreLimitParams) -> Self {
        let (a, b) = p.rates();
        FamilyMeanRates { a, b, psi: p.psi, target: p.target }
    }
}

impl From<&MeanSystemParams> for FamilyMeanRates {
    fn from(p: &MeanSystemParams) -> Self {
        FamilyMeanRates {
            a: p.a_rate,
            b: p.b_rate,
            psi: p.psi,
            target: p.target,
        }
    }
}

/// Right-hand side for the state `[m_F, m_L1, ..., m_LM]`.
pub fn coupled_mean_rhs(state: &[f64], families: &[FamilyMeanRates], out: &mut [f64]) {
    let m_f = state[0];
    out[0] = 0.0;
    for (p, fam) in families.iter().enumerate() {
        let m_l = state[p + 1];
        out[0] += fam.a * (m_l - m_f);
        out[p + 1] = fam.b * (fam.psi * (fam.target - m_l) + (1.0 - fam.psi) * (m_f - m_l));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub m_f: f64,
    pub m_l: f64,
    pub e_f: f64,
    pub e_l: f64,
}

/// Noise integrals closing the energy equations: averages of `D^2`,
/// `D-hat^2` over followers and of `D-tilde^2` over leaders.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiffusionIntegrals {
    pub peer: f64,
    pub follower_leader: f64,
    pub leader: f64,
}

/// Constants of the limiting energy equations (unscaled `c`'s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub c_f: f64,
    pub c_fl: f64,
    pub c_l: f64,
    pub rho: f64,
    pub kappa: f64,
    pub follower_variance: f64,
    pub follower_leader_variance: f64,
    pub leader_variance: f64,
    pub psi: f64,
    pub target: f64,
}

impl EnergyParams {
    pub fn from_scaled(params: &ScaledParams, family: usize, strategy: &LeaderStrategy) -> Self {
        let f = &params.family(family).scaling;
        EnergyParams {
            c_f: params.c_f(),
            c_fl: f.c_fl(),
            c_l: f.c_l(),
            rho: f.rho,
            kappa: params.kappa(),
            follower_variance: params.follower_variance(),
            follower_leader_variance: f.follower_variance,
            leader_variance: f.leader_variance,
            psi: strategy.psi(),
            target: strategy.target(),
        }
    }
}

/// `(E_F', E_L')` in the `epsilon -> 0` limit.
pub fn energy_rhs(s: &MomentState, d: &DiffusionIntegrals, p: &EnergyParams) -> (f64, f64) {
    let anchor = p.psi * p.target + (1.0 - p.psi) * s.m_f;
    let fl = p.rho / p.c_fl;
    let ll = p.rho / p.c_l;
    let de_f = -2.0 / p.c_f * (s.e_f - s.m_f * s.m_f)
        + 2.0 * fl * (s.m_f * s.m_l - s.e_f)
        + p.follower_variance / p.c_f * d.peer
        + p.follower_leader_variance * fl * d.follower_leader;
    let de_l = -2.0 * ll * (s.e_l - s.m_l * s.m_l) - 4.0 * ll / p.kappa * (s.e_l + s.m_l * s.m_l)
        + 8.0 * ll / p.kappa * anchor * s.m_l
        + p.leader_variance * ll * d.leader;
    (de_f, de_l)
}

/// Constants of the energy equations at finite `epsilon` (unit kernels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreLimitEnergyParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta_f: f64,
    pub eta_fl_tilde: f64,
    pub eta_l_tilde: f64,
    /// Unscaled noise variances `sigma^2`, `sigma-hat^2`, `sigma-tilde^2`.
    pub peer_noise: f64,
    pub follower_leader_noise: f64,
    pub leader_noise: f64,
    pub psi: f64,
    pub target: f64,
}

impl PreLimitEnergyParams {
    pub fn from_scaled(params: &ScaledParams, family: usize, strategy: &LeaderStrategy) -> Self {
        let f = params.family(family);
        PreLimitEnergyParams {
            alpha: params.alpha(),
            beta: params.beta(),
            eta_f: params.eta_f(),
            eta_fl_tilde: f.eta_fl_tilde(),
            eta_l_tilde: f.eta_l_tilde(),
            peer_noise: params.peer_noise_variance(),
            follower_leader_noise: f.follower_noise_variance,
            leader_noise: f.leader_noise_variance,
            psi: strategy.psi(),
            target: strategy.target(),
        }
    }
}

/// `(E_F', E_L')` at finite `epsilon` for `P = S = R = 1`; exact in
/// expectation for the binary rules.
pub fn prelimit_energy_rhs(s: &MomentState, d: &DiffusionIntegrals, p: &PreLimitEnergyParams) -> (f64, f64) {
    let (a, b) = (p.alpha, p.beta);
    let anchor = p.psi * p.target + (1.0 - p.psi) * s.m_f;
    let de_f = 2.0 * p.eta_f * a * (a - 1.0) * (s.e_f - s.m_f * s.m_f)
        + p.eta_fl_tilde * a * a * (s.e_l + s.e_f - 2.0 * s.m_l * s.m_f)
        + 2.0 * a * p.eta_fl_tilde * (s.m_f * s.m_l - s.e_f)
        + p.eta_f * p.peer_noise * d.peer
        + p.eta_fl_tilde * p.follower_leader_noise * d.follower_leader;
    let de_l = p.eta_l_tilde
        * (2.0 * a * (a - 1.0) * (s.e_l - s.m_l * s.m_l)
            - 0.5 * b * (2.0 - b) * (s.e_l + s.m_l * s.m_l)
            + 2.0 * b * (1.0 - b) * anchor * s.m_l
            + b * b * anchor * anchor
            + p.leader_noise * d.leader);
    (de_f, de_l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has the initial state")
    }
}

/// Classical fixed-step fourth-order Runge-Kutta from `t0` to `t1`.
///
/// The step is `(t1 - t0) / n` with the smallest `n` that keeps it `<= dt`,
/// so the final state lands on `t1` exactly.
pub fn integrate<F>(mut rhs: F, y0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("{dt} must be > 0")));
    }
    if !(t1 >= t0) {
        return Err(Error::invalid("t_span", format!("[{t0}, {t1}] is empty")));
    }
    let span = t1 - t0;
    let steps = if span == 0.0 { 0 } else { ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize };
    let h = if steps == 0 { 0.0 } else { span / steps as f64 };

    let n = y0.len();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut out = Trajectory {
        times: vec![t0],
        states: vec![y.clone()],
    };
    for i in 0..steps {
        let t = t0 + h * i as f64;
        rhs(t, &y, &mut k1);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * h * k1[j];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * h * k2[j];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for j in 0..n {
            tmp[j] = y[j] + h * k3[j];
        }
        rhs(t + h, &tmp, &mut k4);
        for j in 0..n {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.times.push(t0 + h * (i + 1) as f64);
        out.states.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_limit() -> MeanSystemParams {
        MeanSystemParams { a_rate: 10.0, b_rate: 0.4, psi: 0.5, target: 0.5 }
    }

    fn prelimit(eps: f64) -> PreLimitParams {
        let kappa = 100.0;
        PreLimitParams {
            alpha: eps,
            beta: 4.0 * eps / (kappa + 4.0 * eps),
            eta_fl_tilde: 1.0 / (0.1 * eps),
            eta_l_tilde: 1.0 / (0.1 * eps),
            psi: 0.5,
            target: 0.5,
        }
    }

    fn random_prelimit(rng: &mut ChaCha8Rng) -> PreLimitParams {
        PreLimitParams {
            alpha: rng.random_range(1e-3..0.5),
            beta: rng.random_range(1e-5..0.99),
            eta_fl_tilde: rng.random_range(0.1..1e4),
            eta_l_tilde: rng.random_range(0.1..1e4),
            psi: rng.random_range(1e-3..=1.0),
            target: rng.random_range(-1.0..=1.0),
        }
    }

    #[test]
    fn scaled_rhs_examples() {
        let p = reference_limit();
        assert_eq!(scaled_mean_rhs(0.5, 0.5, &p), (0.0, 0.0));
        let (df, dl) = scaled_mean_rhs(-0.75, 0.5, &p);
        assert!((df - 12.5).abs() < 1e-12);
        assert!((dl + 0.25).abs() < 1e-12);
        let q = MeanSystemParams { psi: 1.0, ..p };
        let (_, dl) = scaled_mean_rhs(-0.3, 0.1, &q);
        assert!((dl - 0.4 * (0.5 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn scaled_rhs_reference_values() {
        use crate::params::{FamilyScaling, Penalty, RawScaling};
        let params = ScaledParams::derive(&RawScaling {
            epsilon: 0.01,
            penalty: Penalty::Nu(1.0),
            c_f: 1.0,
            follower_variance: 0.01,
            families: vec![FamilyScaling {
                rho: 0.05,
                c_fl_hat: 0.1,
                c_l_hat: 0.1,
                follower_variance: 0.01,
                leader_variance: 0.01,
            }],
        })
        .unwrap();
        let s = LeaderStrategy::new(0.5, 0.5).unwrap();
        let m = MeanSystemParams::from_scaled(&params, 0, &s);
        assert!((m.a_rate - 10.0).abs() < 1e-12 && (m.b_rate - 0.4).abs() < 1e-12);
        let p = PreLimitParams::from_scaled(&params, 0, &s);
        let (a, b) = p.rates();
        assert!((a - 10.0).abs() < 1e-9);
        assert!((b - 4.0 / (0.1 * 100.04)).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_is_unique() {
        let p = reference_limit();
        // The Jacobian [[-a, a], [b mu, -b]] has determinant a b psi != 0.
        let det = p.a_rate * p.b_rate - p.a_rate * p.b_rate * p.mu();
        assert!(det > 0.0);
        let (df, dl) = scaled_mean_rhs(0.2, 0.2, &p);
        assert!(df == 0.0 && dl != 0.0);
    }

    #[test]
    fn eigenvalue_examples() {
        let p = PreLimitParams {
            alpha: 1.0,
            beta: 1.0,
            eta_fl_tilde: 1.0,
            eta_l_tilde: 1.0,
            psi: 1.0,
            target: 0.0,
        };
        assert_eq!(discriminant(&p), 0.0);
        assert_eq!(prelimit_eigenvalues(&p), (-1.0, -1.0));
        assert!(matches!(MeanSolution::new(0.1, 0.2, &p), Err(Error::DegenerateEigenvalues(_))));

        let mut q = prelimit(0.01);
        q.psi = 1e-9;
        let (slow, fast) = prelimit_eigenvalues(&q);
        assert!(slow < 0.0 && slow > -1e-8);
        assert!(fast < -10.0);
    }

    #[test]
    fn eigenvalues_negative_for_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let p = random_prelimit(&mut rng);
            assert!(discriminant(&p) >= 0.0);
            let (l1, l2) = prelimit_eigenvalues(&p);
            assert!(l1 < 0.0 && l2 < 0.0, "{p:?}");
            let (a, b) = p.rates();
            assert!(((l1 + l2) + (a + b)).abs() < 1e-9 * (a + b));
            assert!((l1 * l2 - p.psi * a * b).abs() < 1e-9 * a * b);
        }
    }

    #[test]
    fn analytic_limits() {
        let p = prelimit(0.01);
        let (f0, l0) = analytic_means(0.0, -0.75, 0.48, &p).unwrap();
        assert!((f0 + 0.75).abs() < 1e-12 && (l0 - 0.48).abs() < 1e-12);
        let (f, l) = analytic_means(1e4, -0.75, 0.48, &p).unwrap();
        assert!((f - 0.5).abs() < 1e-12 && (l - 0.5).abs() < 1e-12);
        assert!(analytic_means(-1.0, 0.0, 0.0, &p).is_err());
        // Populist term off: leaders relax on their own.
        let q = PreLimitParams { psi: 1.0, ..p };
        let (_, l) = analytic_means(2.0, -0.75, 0.1, &q).unwrap();
        let b = q.rates().1;
        assert!((l - (0.5 + (0.1 - 0.5) * (-b * 2.0).exp())).abs() < 1e-12);
    }

    #[test]
    fn analytic_solution_satisfies_ode() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut p = random_prelimit(&mut rng);
            // Rates of order 0.1..10 keep the five-point derivative at ~1e-11.
            p.eta_fl_tilde = rng.random_range(0.1..10.0) / p.alpha;
            p.eta_l_tilde = rng.random_range(0.1..10.0) / p.beta;
            let (f0, l0) = (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            let sol = match MeanSolution::new(f0, l0, &p) {
                Ok(s) => s,
                Err(Error::DegenerateEigenvalues(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let t = rng.random_range(0.01..2.0);
            let h = 1e-4;
            let d = |k: usize| {
                let at = |s: f64| {
                    let v = sol.eval(t + s * h);
                    [v.0, v.1][k]
                };
                (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
            };
            let (f, l) = sol.eval(t);
            let (rf, rl) = prelimit_mean_rhs(f, l, &p);
            assert!((d(0) - rf).abs() < 1e-9, "{p:?} {} {rf}", d(0));
            assert!((d(1) - rl).abs() < 1e-9, "{p:?} {} {rl}", d(1));
        }
    }

    #[test]
    fn leader_coefficients_match_initial_data() {
        let p = prelimit(0.01);
        let sol = MeanSolution::new(-0.75, 0.48, &p).unwrap();
        let (c1, c2) = sol.leader_coefficients();
        assert!((c1 + c2 + 0.5 - 0.48).abs() < 1e-12);
    }

    #[test]
    fn rk4_matches_analytic() {
        let p = prelimit(0.01);
        let sol = MeanSolution::new(-0.75, 0.5, &p).unwrap();
        let run = |dt: f64| {
            let traj = integrate(
                |_, y, out| {
                    let (a, b) = prelimit_mean_rhs(y[0], y[1], &p);
                    out[0] = a;
                    out[1] = b;
                },
                &[-0.75, 0.5],
                0.0,
                1.0,
                dt,
            )
            .unwrap();
            traj.times
                .iter()
                .zip(&traj.states)
                .map(|(&t, y)| {
                    let (f, l) = sol.eval(t);
                    (y[0] - f).abs().max((y[1] - l).abs())
                })
                .fold(0.0, f64::max)
        };
        let fine = run(1e-3);
        assert!(fine <= 1e-8, "{fine}");
        let (e1, e2) = (run(0.02), run(0.01));
        assert!(e1 / e2 >= 8.0, "{e1} {e2}");
    }

    #[test]
    fn rk4_constant_rhs_is_exact() {
        let traj = integrate(|_, _, out| out[0] = 2.5, &[1.0], 0.0, 3.0, 0.1).unwrap();
        assert!((traj.last()[0] - 8.5).abs() < 1e-12);
        assert_eq!(*traj.times.last().unwrap(), 3.0);
        let empty = integrate(|_, _, out| out[0] = 1.0, &[1.0], 2.0, 2.0, 0.1).unwrap();
        assert_eq!(empty.states.len(), 1);
        assert!(integrate(|_, _, _| {}, &[1.0], 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn limit_is_approached_linearly() {
        let lim = reference_limit();
        let (mf, ml) = (-0.4, 0.3);
        let target = scaled_mean_rhs(mf, ml, &lim);
        let gap = |eps: f64| {
            let r = prelimit_mean_rhs(mf, ml, &prelimit(eps));
            ((r.0 - target.0).abs() + (r.1 - target.1).abs()) / (target.0.abs() + target.1.abs())
        };
        let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&e| gap(e)).collect();
        for w in gaps.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 9.0 && ratio < 11.0, "{gaps:?}");
        }
    }

    #[test]
    fn energy_examples() {
        let p = EnergyParams {
            c_f: 1.0,
            c_fl: 0.005,
            c_l: 0.005,
            rho: 0.05,
            kappa: 100.0,
            follower_variance: 0.0,
            follower_leader_variance: 0.0,
            leader_variance: 0.0,
            psi: 0.5,
            target: 0.3,
        };
        let eq = MomentState { m_f: 0.3, m_l: 0.3, e_f: 0.09, e_l: 0.09 };
        let (a, b) = energy_rhs(&eq, &DiffusionIntegrals::default(), &p);
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);

        // Followers alone: only the -(2/c_F)(E_F - m_F^2) contraction remains.
        let lone = EnergyParams { c_fl: 1e300, ..p };
        let s = MomentState { m_f: 0.1, m_l: 0.1, e_f: 0.2, e_l: 0.01 };
        let (a, _) = energy_rhs(&s, &DiffusionIntegrals::default(), &lone);
        assert!((a + 2.0 * (0.2 - 0.01)).abs() < 1e-12);
    }

    #[test]
    fn variance_stays_nonnegative_without_noise() {
        let ep = EnergyParams {
            c_f: 1.0,
            c_fl: 0.005,
            c_l: 0.005,
            rho: 0.05,
            kappa: 100.0,
            follower_variance: 0.0,
            follower_leader_variance: 0.0,
            leader_variance: 0.0,
            psi: 0.5,
            target: 0.5,
        };
        let mp = MeanSystemParams { a_rate: 10.0, b_rate: 0.4, psi: 0.5, target: 0.5 };
        let traj = integrate(
            |_, y, out| {
                let (df, dl) = scaled_mean_rhs(y[0], y[1], &mp);
                let s = MomentState { m_f: y[0], m_l: y[1], e_f: y[2], e_l: y[3] };
                let (ef, el) = energy_rhs(&s, &DiffusionIntegrals::default(), &ep);
                out.copy_from_slice(&[df, dl, ef, el]);
            },
            &[-0.75, 0.5, 0.5833, 0.3],
            0.0,
            20.0,
            1e-3,
        )
        .unwrap();
        for y in &traj.states {
            assert!(y[2] - y[0] * y[0] >= -1e-10);
            assert!(y[3] - y[1] * y[1] >= -1e-10);
        }
        let end = traj.last();
        assert!((end[2] - 0.25).abs() < 0.01 && (end[3] - 0.25).abs() < 0.01);
    }

    #[test]
    fn prelimit_energy_tends_to_limit() {
        let s = MomentState { m_f: -0.2, m_l: 0.4, e_f: 0.3, e_l: 0.2 };
        let d = DiffusionIntegrals { peer: 0.7, follower_leader: 0.7, leader: 0.6 };
        let strategy = LeaderStrategy::new(0.5, 0.5).unwrap();
        let build = |eps: f64| {
            use crate::params::{FamilyScaling, Penalty, RawScaling};
            ScaledParams::derive(&RawScaling {
                epsilon: eps,
                penalty: Penalty::Kappa(100.0),
                c_f: 1.0,
                follower_variance: 0.01,
                families: vec![FamilyScaling {
                    rho: 0.05,
                    c_fl_hat: 0.1,
                    c_l_hat: 0.1,
                    follower_variance: 0.01,
                    leader_variance: 0.01,
                }],
            })
            .unwrap()
        };
        let lim = energy_rhs(&s, &d, &EnergyParams::from_scaled(&build(0.01), 0, &strategy));
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let pre = prelimit_energy_rhs(&s, &d, &PreLimitEnergyParams::from_scaled(&build(eps), 0, &strategy));
            let gap = (pre.0 - lim.0).abs() + (pre.1 - lim.1).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn coupled_system_reduces_to_single_family() {
        let p = prelimit(0.01);
        let rates = [FamilyMeanRates::from(&p)];
        let mut out = [0.0; 2];
        coupled_mean_rhs(&[-0.3, 0.2], &rates, &mut out);
        let (a, b) = prelimit_mean_rhs(-0.3, 0.2, &p);
        assert_eq!(out, [a, b]);
    }
}
