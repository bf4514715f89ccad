//! Binary interaction rules and the bound-preservation certificate.
//!
//! The rules never clamp. They return raw candidates and the caller decides
//! what to do with results that leave `[-1, 1]`; the engine rejects them.

use rand::Rng;

use crate::control::{feedback_control, ControlInput};
use crate::kernel::{CompromiseKernel, DiffusionShape};
use crate::opinion::Opinion;
use crate::strategy::LeaderStrategy;
use crate::{Error, Result};

/// Zero-mean symmetric uniform noise with the given (already scaled) variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    variance: f64,
    half_width: f64,
}

impl NoiseSpec {
    pub const SILENT: NoiseSpec = NoiseSpec {
        variance: 0.0,
        half_width: 0.0,
    };

    pub fn uniform(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::invalid("variance", format!("{variance} must be >= 0")));
        }
        Ok(NoiseSpec {
            variance,
            half_width: (3.0 * variance).sqrt(),
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Samples lie in `[-support, support]`.
    pub fn support(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.half_width == 0.0 {
            return 0.0;
        }
        self.half_width * (2.0 * rng.random::<f64>() - 1.0)
    }
}

/// Follower-follower rule: kernel `P`, diffusion `D`, noise `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerRule {
    pub kernel: CompromiseKernel,
    pub diffusion: DiffusionShape,
    pub noise: NoiseSpec,
}

/// Follower-leader rule: kernel `S`, diffusion `D-hat`, noise `theta-hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerLeaderRule {
    pub kernel: CompromiseKernel,
    pub diffusion: DiffusionShape,
    pub noise: NoiseSpec,
}

/// Leader-leader rule: kernel `R`, diffusion `D-tilde`, noise `theta-tilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderRule {
    pub kernel: CompromiseKernel,
    pub diffusion: DiffusionShape,
    pub noise: NoiseSpec,
}

#[inline]
#[allow(clippy::too_many_arguments)]
pub fn follower_follower(
    w: Opinion,
    v: Opinion,
    theta1: f64,
    theta2: f64,
    kernel: &CompromiseKernel,
    diffusion: &DiffusionShape,
    alpha: f64,
) -> (f64, f64) {
    let (w, v) = (w.get(), v.get());
    (
        w + alpha * kernel.eval(w, v) * (v - w) + theta1 * diffusion.eval(w),
        v + alpha * kernel.eval(v, w) * (w - v) + theta2 * diffusion.eval(v),
    )
}

/// Returns the follower's new opinion and the leader's, which is unchanged.
#[inline]
pub fn follower_leader(
    w: Opinion,
    leader: Opinion,
    theta: f64,
    kernel: &CompromiseKernel,
    diffusion: &DiffusionShape,
    alpha: f64,
) -> (f64, Opinion) {
    let (x, l) = (w.get(), leader.get());
    (
        x + alpha * kernel.eval(x, l) * (l - x) + theta * diffusion.eval(x),
        leader,
    )
}

#[inline]
#[allow(clippy::too_many_arguments)]
pub fn leader_leader(
    w: Opinion,
    v: Opinion,
    theta1: f64,
    theta2: f64,
    kernel: &CompromiseKernel,
    diffusion: &DiffusionShape,
    alpha: f64,
    beta: f64,
    follower_mean: f64,
    strategy: &LeaderStrategy,
) -> (f64, f64) {
    let control = feedback_control(&ControlInput {
        leader: w,
        partner: v,
        follower_mean,
        strategy: *strategy,
        alpha,
        beta,
        kernel: *kernel,
    });
    let (a, b) = (w.get(), v.get());
    (
        a + alpha * kernel.eval(a, b) * (b - a) + control + theta1 * diffusion.eval(a),
        b + alpha * kernel.eval(b, a) * (a - b) + control + theta2 * diffusion.eval(b),
    )
}

impl PeerRule {
    #[inline]
    pub fn apply<R: Rng + ?Sized>(&self, w: Opinion, v: Opinion, alpha: f64, rng: &mut R) -> (f64, f64) {
        let t1 = self.noise.sample(rng);
        let t2 = self.noise.sample(rng);
        follower_follower(w, v, t1, t2, &self.kernel, &self.diffusion, alpha)
    }
}

impl FollowerLeaderRule {
    #[inline]
    pub fn apply<R: Rng + ?Sized>(&self, w: Opinion, leader: Opinion, alpha: f64, rng: &mut R) -> f64 {
        let t = self.noise.sample(rng);
        follower_leader(w, leader, t, &self.kernel, &self.diffusion, alpha).0
    }
}

impl LeaderRule {
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub fn apply<R: Rng + ?Sized>(
        &self,
        w: Opinion,
        v: Opinion,
        alpha: f64,
        beta: f64,
        follower_mean: f64,
        strategy: &LeaderStrategy,
        rng: &mut R,
    ) -> (f64, f64) {
        let t1 = self.noise.sample(rng);
        let t2 = self.noise.sample(rng);
        leader_leader(
            w,
            v,
            t1,
            t2,
            &self.kernel,
            &self.diffusion,
            alpha,
            beta,
            follower_mean,
            strategy,
        )
    }
}

/// Sufficient conditions under which no rule can leave `[-1, 1]`.
///
/// Noise windows are symmetric: a condition holds when the support of the
/// uniform noise fits inside `[-lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCertificate {
    /// `min R` over `I^2`.
    pub r: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub k_minus: f64,
    pub k_plus: f64,
    /// Margins of the peer diffusion `D`, same construction as `K`.
    pub peer_minus: f64,
    pub peer_plus: f64,
    /// Upper end of the leader noise window, `d_plus (1 - alpha R_max - beta/2)`.
    pub leader_window: (f64, f64),
    pub follower_window: (f64, f64),
    pub peer_window: (f64, f64),
    /// `alpha <= 1/2`.
    pub step_ok: bool,
    /// `alpha r >= beta/2`.
    pub control_ok: bool,
    /// `alpha R_max + beta/2 <= 1`.
    pub leader_weights_ok: bool,
    pub leader_noise_ok: bool,
    pub follower_noise_ok: bool,
    pub peer_noise_ok: bool,
}

impl BoundCertificate {
    pub fn satisfied(&self) -> bool {
        self.step_ok
            && self.control_ok
            && self.leader_weights_ok
            && self.leader_noise_ok
            && self.follower_noise_ok
            && self.peer_noise_ok
    }

    /// Names of the failed conditions, empty when satisfied.
    pub fn failures(&self) -> Vec<&'static str> {
        [
            (self.step_ok, "alpha <= 1/2"),
            (self.control_ok, "alpha * min R >= beta / 2"),
            (self.leader_weights_ok, "alpha * max R + beta / 2 <= 1"),
            (self.leader_noise_ok, "leader noise within d_pm window"),
            (self.follower_noise_ok, "follower-leader noise within K_pm window"),
            (self.peer_noise_ok, "follower-follower noise within window"),
        ]
        .into_iter()
        .filter_map(|(ok, name)| (!ok).then_some(name))
        .collect()
    }

    pub fn require(&self) -> Result<()> {
        if self.satisfied() {
            Ok(())
        } else {
            Err(Error::CertificateFailed(self.failures().join("; ")))
        }
    }
}

fn fits(support: f64, window: (f64, f64)) -> bool {
    support <= window.0 && support <= window.1
}

pub fn bound_certificate(
    peer: &PeerRule,
    follower_leader: &FollowerLeaderRule,
    leader: &LeaderRule,
    alpha: f64,
    beta: f64,
) -> BoundCertificate {
    let r = leader.kernel.min_value();
    let r_max = leader.kernel.max_value();
    let (d_plus, d_minus) = leader.diffusion.boundary_margin();
    let (k_plus, k_minus) = follower_leader.diffusion.boundary_margin();
    let (peer_plus, peer_minus) = peer.diffusion.boundary_margin();

    let leader_factor = 1.0 - alpha * r_max - 0.5 * beta;
    let window = |lo: f64, hi: f64, factor: f64| {
        // inf * 0 stays infinite: a vanishing diffusion admits any noise.
        let scale = |m: f64| if m.is_infinite() { f64::INFINITY } else { m * factor };
        (scale(lo), scale(hi))
    };
    let leader_window = window(d_minus, d_plus, leader_factor);
    let follower_window = window(k_minus, k_plus, 1.0 - alpha);
    let peer_window = window(peer_minus, peer_plus, 1.0 - alpha);

    BoundCertificate {
        r,
        d_minus,
        d_plus,
        k_minus,
        k_plus,
        peer_minus,
        peer_plus,
        leader_window,
        follower_window,
        peer_window,
        step_ok: alpha > 0.0 && alpha <= 0.5,
        control_ok: alpha * r >= 0.5 * beta,
        leader_weights_ok: leader_factor >= 0.0,
        leader_noise_ok: fits(leader.noise.support(), leader_window),
        follower_noise_ok: fits(follower_leader.noise.support(), follower_window),
        peer_noise_ok: fits(peer.noise.support(), peer_window),
    }
}
