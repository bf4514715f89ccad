//! Quasi-invariant scaling of the interaction parameters.
//!
//! Everything is expressed in terms of a small parameter `epsilon`:
//! interaction strength `alpha = epsilon`, control penalty `nu = epsilon * kappa`,
//! noise variances `sigma^2 = epsilon * varsigma^2`, and collision rates
//! `eta = 1 / (c * epsilon)`. The control weight then becomes
//! `beta = 4 epsilon / (kappa + 4 epsilon)`.

use crate::{Error, Result};

/// Default mass of a leader family (five per cent of the population).
pub const DEFAULT_FAMILY_MASS: f64 = 0.05;

/// How the control penalty is supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// Raw penalty `nu`; converted to `kappa = nu / epsilon`.
    Nu(f64),
    Kappa(f64),
}

/// Per-family scaled inputs. `c_fl_hat`, `c_l_hat` are the compact constants
/// `c_FL / rho`, `c_L / rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyScaling {
    pub rho: f64,
    pub c_fl_hat: f64,
    pub c_l_hat: f64,
    /// Scaled variance of the follower noise in follower-leader interactions.
    pub follower_variance: f64,
    /// Scaled variance of the leader noise in leader-leader interactions.
    pub leader_variance: f64,
}

impl FamilyScaling {
    pub fn c_fl(&self) -> f64 {
        self.c_fl_hat * self.rho
    }

    pub fn c_l(&self) -> f64 {
        self.c_l_hat * self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawScaling {
    pub epsilon: f64,
    pub penalty: Penalty,
    pub c_f: f64,
    /// Scaled variance of the follower-follower noise.
    pub follower_variance: f64,
    pub families: Vec<FamilyScaling>,
}

/// Derived per-family quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub scaling: FamilyScaling,
    pub eta_fl: f64,
    pub eta_l: f64,
    pub follower_noise_variance: f64,
    pub leader_noise_variance: f64,
}

impl FamilyParams {
    /// `rho * eta_FL`: per-follower rate of meeting this family.
    pub fn eta_fl_tilde(&self) -> f64 {
        self.scaling.rho * self.eta_fl
    }

    /// `rho * eta_L`: per-leader rate of leader-leader meetings.
    pub fn eta_l_tilde(&self) -> f64 {
        self.scaling.rho * self.eta_l
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledParams {
    epsilon: f64,
    kappa: f64,
    c_f: f64,
    follower_variance: f64,
    alpha: f64,
    beta: f64,
    eta_f: f64,
    peer_noise_variance: f64,
    families: Vec<FamilyParams>,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} must be finite and > 0")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} must be finite and >= 0")))
    }
}

impl ScaledParams {
    pub fn derive(raw: &RawScaling) -> Result<Self> {
        positive("epsilon", raw.epsilon)?;
        let kappa = match raw.penalty {
            Penalty::Nu(nu) => {
                positive("nu", nu)?;
                nu / raw.epsilon
            }
            Penalty::Kappa(k) => {
                positive("kappa", k)?;
                k
            }
        };
        positive("c_f", raw.c_f)?;
        non_negative("follower_variance", raw.follower_variance)?;

        let mut total_mass = 0.0;
        let mut families = Vec::with_capacity(raw.families.len());
        for fam in &raw.families {
            if !(fam.rho > 0.0 && fam.rho <= 1.0) {
                return Err(Error::invalid("rho", format!("{} not in (0, 1]", fam.rho)));
            }
            positive("c_fl_hat", fam.c_fl_hat)?;
            positive("c_l_hat", fam.c_l_hat)?;
            non_negative("follower_variance", fam.follower_variance)?;
            non_negative("leader_variance", fam.leader_variance)?;
            total_mass += fam.rho;
            families.push(FamilyParams {
                scaling: *fam,
                eta_fl: 1.0 / (fam.c_fl_hat * fam.rho * raw.epsilon),
                eta_l: 1.0 / (fam.c_l_hat * fam.rho * raw.epsilon),
                follower_noise_variance: raw.epsilon * fam.follower_variance,
                leader_noise_variance: raw.epsilon * fam.leader_variance,
            });
        }
        if total_mass > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "rho",
                format!("family masses sum to {total_mass} > 1"),
            ));
        }

        Ok(ScaledParams {
            epsilon: raw.epsilon,
            kappa,
            c_f: raw.c_f,
            follower_variance: raw.follower_variance,
            alpha: raw.epsilon,
            beta: beta(raw.epsilon, kappa),
            eta_f: 1.0 / (raw.c_f * raw.epsilon),
            peer_noise_variance: raw.epsilon * raw.follower_variance,
            families,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The raw penalty `nu = epsilon * kappa`.
    pub fn nu(&self) -> f64 {
        self.epsilon * self.kappa
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn follower_variance(&self) -> f64 {
        self.follower_variance
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta_f(&self) -> f64 {
        self.eta_f
    }

    pub fn peer_noise_variance(&self) -> f64 {
        self.peer_noise_variance
    }

    pub fn families(&self) -> &[FamilyParams] {
        &self.families
    }

    pub fn family(&self, p: usize) -> &FamilyParams {
        &self.families[p]
    }
}

/// `beta = 4 epsilon / (kappa + 4 epsilon)`, equivalently
/// `4 alpha^2 / (nu + 4 alpha^2)` with `alpha = epsilon`, `nu = epsilon kappa`.
pub fn beta(epsilon: f64, kappa: f64) -> f64 {
    4.0 * epsilon / (kappa + 4.0 * epsilon)
}
