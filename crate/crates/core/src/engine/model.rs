use crate::interactions::{bound_certificate, BoundCertificate, FollowerLeaderRule, LeaderRule, NoiseSpec, PeerRule};
use crate::kernel::{CompromiseKernel, DiffusionShape};
use crate::params::ScaledParams;
use crate::{Error, Result};

use super::step::{plan_step, StepPlan};

/// Kernel and diffusion choices of one leader family: `S`, `D-hat` for its
/// influence on followers, `R`, `D-tilde` among its leaders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyKernels {
    pub follower_kernel: CompromiseKernel,
    pub follower_diffusion: DiffusionShape,
    pub leader_kernel: CompromiseKernel,
    pub leader_diffusion: DiffusionShape,
}

impl Default for FamilyKernels {
    fn default() -> Self {
        FamilyKernels {
            follower_kernel: CompromiseKernel::UNIT,
            follower_diffusion: DiffusionShape::QuadraticCap,
            leader_kernel: CompromiseKernel::UNIT,
            leader_diffusion: DiffusionShape::QuadraticCap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyRules {
    pub follower_leader: FollowerLeaderRule,
    pub leader: LeaderRule,
}

/// Everything the stepper needs besides the ensemble: scaled parameters,
/// the interaction rules with their noise, and the step plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    params: ScaledParams,
    peer: PeerRule,
    families: Vec<FamilyRules>,
    plan: StepPlan,
    certificates: Vec<BoundCertificate>,
}

impl Model {
    /// Builds the rules and requires every family's bound certificate.
    pub fn new(
        params: ScaledParams,
        peer_kernel: CompromiseKernel,
        peer_diffusion: DiffusionShape,
        families: &[FamilyKernels],
    ) -> Result<Self> {
        let model = Self::new_unchecked(params, peer_kernel, peer_diffusion, families)?;
        for (p, cert) in model.certificates.iter().enumerate() {
            cert.require().map_err(|e| match e {
                Error::CertificateFailed(msg) => Error::CertificateFailed(format!("family {}: {msg}", p + 1)),
                other => other,
            })?;
        }
        Ok(model)
    }

    /// Same as [`Model::new`] without requiring the certificates. Runs may
    /// then see rejected interactions.
    pub fn new_unchecked(
        params: ScaledParams,
        peer_kernel: CompromiseKernel,
        peer_diffusion: DiffusionShape,
        families: &[FamilyKernels],
    ) -> Result<Self> {
        if families.len() != params.families().len() {
            return Err(Error::invalid(
                "leaders",
                format!("{} kernel sets for {} families", families.len(), params.families().len()),
            ));
        }
        peer_kernel.validate()?;
        peer_diffusion.validate()?;
        let peer = PeerRule {
            kernel: peer_kernel,
            diffusion: peer_diffusion,
            noise: NoiseSpec::uniform(params.peer_noise_variance())?,
        };
        let mut rules = Vec::with_capacity(families.len());
        let mut certificates = Vec::with_capacity(families.len());
        for (k, fp) in families.iter().zip(params.families()) {
            for kernel in [&k.follower_kernel, &k.leader_kernel] {
                kernel.validate()?;
            }
            for d in [&k.follower_diffusion, &k.leader_diffusion] {
                d.validate()?;
            }
            let r = FamilyRules {
                follower_leader: FollowerLeaderRule {
                    kernel: k.follower_kernel,
                    diffusion: k.follower_diffusion,
                    noise: NoiseSpec::uniform(fp.follower_noise_variance)?,
                },
                leader: LeaderRule {
                    kernel: k.leader_kernel,
                    diffusion: k.leader_diffusion,
                    noise: NoiseSpec::uniform(fp.leader_noise_variance)?,
                },
            };
            certificates.push(bound_certificate(&peer, &r.follower_leader, &r.leader, params.alpha(), params.beta()));
            rules.push(r);
        }
        let plan = plan_step(&params);
        Ok(Model {
            params,
            peer,
            families: rules,
            plan,
            certificates,
        })
    }

    pub fn params(&self) -> &ScaledParams {
        &self.params
    }

    pub fn peer(&self) -> &PeerRule {
        &self.peer
    }

    pub fn families(&self) -> &[FamilyRules] {
        &self.families
    }

    pub fn plan(&self) -> &StepPlan {
        &self.plan
    }

    pub fn certificates(&self) -> &[BoundCertificate] {
        &self.certificates
    }
}
