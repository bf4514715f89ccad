//! Instantaneous binary feedback control for a pair of leaders.
//!
//! Over one binary interaction the leaders minimize
//!
//! ```text
//! J(u) = alpha * ( psi/2 * sum_p (w_p' - w_d)^2 + mu/2 * sum_p (w_p' - m_F)^2 + nu u^2 )
//! ```
//!
//! where `w_p'` is the post-interaction opinion of leader `p`. Because the
//! update is affine in `u`, the minimizer has the explicit form returned by
//! [`feedback_control`], with the follower mean frozen at its current value.

use crate::kernel::CompromiseKernel;
use crate::opinion::Opinion;
use crate::strategy::LeaderStrategy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub leader: Opinion,
    pub partner: Opinion,
    pub follower_mean: f64,
    pub strategy: LeaderStrategy,
    pub alpha: f64,
    pub beta: f64,
    pub kernel: CompromiseKernel,
}

/// The increment `2 alpha u` added to both leaders.
#[inline]
pub fn feedback_control(input: &ControlInput) -> f64 {
    let (w, v) = (input.leader.get(), input.partner.get());
    let s = &input.strategy;
    let radical = (w - s.target()) + (v - s.target());
    let populist = (w - input.follower_mean) + (v - input.follower_mean);
    let asym = input.kernel.eval(w, v) - input.kernel.eval(v, w);
    -0.5 * input.beta * (s.psi() * radical + s.mu() * populist)
        - 0.5 * input.alpha * input.beta * asym * (v - w)
}

/// Binary cost of control `u` given the resulting leader opinions.
pub fn binary_cost(
    u: f64,
    after: (f64, f64),
    follower_mean: f64,
    strategy: &LeaderStrategy,
    alpha: f64,
    nu: f64,
) -> f64 {
    let target = strategy.target();
    let radical = (after.0 - target).powi(2) + (after.1 - target).powi(2);
    let populist = (after.0 - follower_mean).powi(2) + (after.1 - follower_mean).powi(2);
    alpha * (0.5 * strategy.psi() * radical + 0.5 * strategy.mu() * populist + nu * u * u)
}

/// Noise-free leader update as a function of the control `u`.
fn controlled_update(input: &ControlInput, u: f64) -> (f64, f64) {
    let (w, v) = (input.leader.get(), input.partner.get());
    let k = &input.kernel;
    let shift = 2.0 * input.alpha * u;
    (
        w + input.alpha * k.eval(w, v) * (v - w) + shift,
        v + input.alpha * k.eval(v, w) * (w - v) + shift,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityCheck {
    /// Closed-form control `u` (not `2 alpha u`).
    pub u_closed: f64,
    /// Grid argmin of the binary cost.
    pub u_grid: f64,
    /// Golden-section refinement of `u_grid` within its neighbouring cells.
    pub u_refined: f64,
    pub spacing: f64,
    pub gap: f64,
    pub refined_gap: f64,
}

/// Brute-force check of the closed form: minimizes [`binary_cost`] composed
/// with the noise-free leader update over a uniform grid on
/// `[-1/alpha, 1/alpha]` (every control that keeps the shift `2 alpha u`
/// within `[-2, 2]`), then refines by golden-section search.
pub fn verify_optimality(input: &ControlInput, nu: f64, resolution: usize) -> Result<OptimalityCheck> {
    if resolution < 1000 {
        return Err(Error::invalid("resolution", format!("{resolution} < 1000")));
    }
    if !(input.alpha > 0.0) || !(nu > 0.0) {
        return Err(Error::invalid("alpha/nu", "must be positive"));
    }
    let cost = |u: f64| {
        binary_cost(
            u,
            controlled_update(input, u),
            input.follower_mean,
            &input.strategy,
            input.alpha,
            nu,
        )
    };

    let half = 1.0 / input.alpha;
    let spacing = 2.0 * half / (resolution - 1) as f64;
    let at = |i: usize| -half + spacing * i as f64;
    let (best, _) = (0..resolution)
        .map(|i| (i, cost(at(i))))
        .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
    if best == 0 || best == resolution - 1 {
        return Err(Error::BracketBoundary(at(best)));
    }

    let u_grid = at(best);
    let u_refined = golden_section(cost, at(best - 1), at(best + 1), 1e-13);
    let u_closed = feedback_control(input) / (2.0 * input.alpha);
    Ok(OptimalityCheck {
        u_closed,
        u_grid,
        u_refined,
        spacing,
        gap: (u_closed - u_grid).abs(),
        refined_gap: (u_closed - u_refined).abs(),
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::beta;
    use proptest::prelude::*;

    fn op(x: f64) -> Opinion {
        Opinion::new(x).unwrap()
    }

    fn input(w: f64, v: f64, m_f: f64, psi: f64, target: f64, alpha: f64, beta: f64) -> ControlInput {
        ControlInput {
            leader: op(w),
            partner: op(v),
            follower_mean: m_f,
            strategy: LeaderStrategy::new(psi, target).unwrap(),
            alpha,
            beta,
            kernel: CompromiseKernel::UNIT,
        }
    }

    /// beta for a raw penalty nu at interaction strength alpha.
    fn beta_raw(alpha: f64, nu: f64) -> f64 {
        4.0 * alpha * alpha / (nu + 4.0 * alpha * alpha)
    }

    #[test]
    fn zero_at_consensus_on_target() {
        let i = input(0.3, 0.3, 0.3, 0.7, 0.3, 0.01, 0.2);
        assert_eq!(feedback_control(&i), 0.0);
    }

    #[test]
    fn vanishes_with_infinite_penalty() {
        let i = input(-0.4, 0.9, 0.1, 0.5, 0.5, 0.01, beta(0.01, 1e300));
        assert!(feedback_control(&i).abs() < 1e-290);
    }

    #[test]
    fn worked_example() {
        // alpha = 0.1, nu = 1, psi = mu = 1/2, w_d = 1, m_F = 0, leaders 0.2 and 0.4.
        let b = beta_raw(0.1, 1.0);
        assert!((b - 0.04 / 1.04).abs() < 1e-16);
        let i = input(0.2, 0.4, 0.0, 0.5, 1.0, 0.1, b);
        let c = feedback_control(&i);
        assert!((c - 0.2 * b).abs() < 1e-16);
        assert!((c - 7.6923e-3).abs() < 1e-7);
        let check = verify_optimality(&i, 1.0, 100_001).unwrap();
        assert!(check.gap <= check.spacing);
        assert!(check.refined_gap < 1e-8, "{check:?}");
    }

    #[test]
    fn cost_examples() {
        let s = LeaderStrategy::new(0.5, 0.3).unwrap();
        assert_eq!(binary_cost(0.0, (0.3, 0.3), 0.3, &s, 0.1, 1.0), 0.0);
        let s = LeaderStrategy::new(1.0, 0.2).unwrap();
        assert!((binary_cost(0.0, (1.2, 0.2), -0.5, &s, 0.1, 1.0) - 0.05).abs() < 1e-15);
        let (a, nu, u) = (0.1, 2.0, 0.3);
        let j1 = binary_cost(u, (0.1, 0.4), 0.0, &s, a, nu);
        let j2 = binary_cost(2.0 * u, (0.1, 0.4), 0.0, &s, a, nu);
        assert!((j2 - j1 - 3.0 * a * nu * u * u).abs() < 1e-15);
    }

    #[test]
    fn grid_minimizer_vanishes_for_huge_penalty() {
        let nu = 1e9;
        let i = input(-0.9, 0.8, 0.4, 0.5, 0.5, 0.01, beta_raw(0.01, nu));
        let check = verify_optimality(&i, nu, 10_001).unwrap();
        assert!(check.u_grid.abs() <= check.spacing);
        assert!(check.u_refined.abs() < 1e-9);
    }

    #[test]
    fn asymmetric_term_vanishes_for_symmetric_kernels() {
        let mut i = input(-0.6, 0.1, 0.2, 0.3, 0.5, 0.01, 0.01);
        let base = feedback_control(&i);
        i.kernel = CompromiseKernel::bounded_confidence(0.5).unwrap();
        assert_eq!(feedback_control(&i), base);
    }

    #[test]
    fn coarse_grid_rejected() {
        let i = input(0.2, 0.4, 0.0, 0.5, 1.0, 0.1, 0.03);
        assert!(verify_optimality(&i, 1.0, 999).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_matches_grid(
            w in -1.0f64..=1.0, v in -1.0f64..=1.0, m in -1.0f64..=1.0,
            psi in 0.0f64..=1.0, target in -1.0f64..=1.0,
            alpha in 0.005f64..0.5, nu in 0.1f64..10.0,
        ) {
            let i = input(w, v, m, psi, target, alpha, beta_raw(alpha, nu));
            let check = verify_optimality(&i, nu, 2001).unwrap();
            prop_assert!(check.gap <= check.spacing);
            prop_assert!(check.refined_gap < 1e-6);
        }

        #[test]
        fn pushes_down_when_above_target(
            w in 0.51f64..=1.0, v in 0.51f64..=1.0, m in -1.0f64..=1.0, beta in 1e-4f64..0.9,
        ) {
            let i = input(w, v, m, 1.0, 0.5, 0.01, beta);
            prop_assert!(feedback_control(&i) < 0.0);
        }

        #[test]
        fn affine_in_state(
            w in -1.0f64..=1.0, v in -1.0f64..=1.0, m in -1.0f64..=1.0, t in -1.0f64..=1.0,
            psi in 0.0f64..=1.0, beta in 1e-4f64..0.9,
        ) {
            let i = input(w, v, m, psi, t, 0.01, beta);
            let expected = -0.5 * beta * (w + v - 2.0 * psi * t - 2.0 * (1.0 - psi) * m);
            prop_assert!((feedback_control(&i) - expected).abs() < 1e-14);
        }
    }
}
