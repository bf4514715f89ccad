use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::opinion::Opinion;
use crate::params::ScaledParams;

use super::ensemble::OpinionEnsemble;
use super::model::Model;

/// Time step and per-agent interaction probabilities of one Monte Carlo step.
///
/// Per-agent rates are `1 / (c_F eps)`, `1 / (c_FL_hat eps)`, `1 / (c_L_hat eps)`;
/// the step is chosen so that the fastest of them fires with probability 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub dt: f64,
    pub p_ff: f64,
    pub p_fl: Vec<f64>,
    pub p_ll: Vec<f64>,
}

impl StepPlan {
    /// The plan for a shortened step of `fraction * dt`.
    pub fn scaled(&self, fraction: f64) -> StepPlan {
        StepPlan {
            dt: self.dt * fraction,
            p_ff: self.p_ff * fraction,
            p_fl: self.p_fl.iter().map(|p| p * fraction).collect(),
            p_ll: self.p_ll.iter().map(|p| p * fraction).collect(),
        }
    }
}

pub fn plan_step(params: &ScaledParams) -> StepPlan {
    let fams = params.families();
    let fastest = fams
        .iter()
        .flat_map(|f| [f.scaling.c_fl_hat, f.scaling.c_l_hat])
        .fold(params.c_f(), f64::min);
    StepPlan {
        dt: params.epsilon() * fastest,
        p_ff: fastest / params.c_f(),
        p_fl: fams.iter().map(|f| fastest / f.scaling.c_fl_hat).collect(),
        p_ll: fams.iter().map(|f| fastest / f.scaling.c_l_hat).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepTally {
    pub attempted: u64,
    pub rejected: u64,
}

impl StepTally {
    pub fn add(&mut self, other: StepTally) {
        self.attempted += other.attempted;
        self.rejected += other.rejected;
    }

    pub fn rejection_fraction(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.rejected as f64 / self.attempted as f64
        }
    }
}

/// Reusable index buffers for pair sampling.
#[derive(Debug, Clone)]
pub struct Stepper {
    followers: Vec<u32>,
    leaders: Vec<Vec<u32>>,
}

fn indices(n: usize) -> Vec<u32> {
    (0..n as u32).collect()
}

fn binomial<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    if p >= 1.0 {
        n
    } else if p <= 0.0 || n == 0 {
        0
    } else {
        Binomial::new(n as u64, p).expect("p in (0, 1)").sample(rng) as usize
    }
}

/// Moves a uniformly random `k`-subset, in random order, to the front.
fn choose_prefix<R: Rng + ?Sized>(idx: &mut [u32], k: usize, rng: &mut R) {
    let n = idx.len();
    for i in 0..k.min(n.saturating_sub(1)) {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
}

impl Stepper {
    pub fn new(ens: &OpinionEnsemble) -> Self {
        Stepper {
            followers: indices(ens.followers.len()),
            leaders: ens.families.iter().map(|f| indices(f.leaders.len())).collect(),
        }
    }

    /// One step. Pairs are disjoint within a sub-round; drawing the number
    /// of active pairs as `Binomial(n / 2, p)` and then a random set of pairs
    /// has the same law as shuffling everyone and flipping a coin per pair.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        ens: &mut OpinionEnsemble,
        model: &Model,
        plan: &StepPlan,
        rng: &mut R,
    ) -> StepTally {
        let alpha = model.params().alpha();
        let beta = model.params().beta();
        let mut tally = StepTally::default();
        let n_f = ens.followers.len();
        let m_f = ens.followers.iter().map(|w| w.get()).sum::<f64>() / n_f as f64;

        let pairs = binomial(n_f / 2, plan.p_ff, rng);
        choose_prefix(&mut self.followers, 2 * pairs, rng);
        let peer = model.peer();
        for k in 0..pairs {
            let (i, j) = (self.followers[2 * k] as usize, self.followers[2 * k + 1] as usize);
            let (a, b) = peer.apply(ens.followers[i], ens.followers[j], alpha, rng);
            tally.attempted += 1;
            match (Opinion::checked(a), Opinion::checked(b)) {
                (Some(a), Some(b)) => {
                    ens.followers[i] = a;
                    ens.followers[j] = b;
                }
                _ => tally.rejected += 1,
            }
        }

        for (p, fam) in ens.families.iter().enumerate() {
            let rule = &model.families()[p].follower_leader;
            let active = binomial(n_f, plan.p_fl[p], rng);
            if active < n_f {
                choose_prefix(&mut self.followers, active, rng);
            }
            let n_l = fam.leaders.len();
            for &i in &self.followers[..active] {
                let i = i as usize;
                let leader = fam.leaders[rng.random_range(0..n_l)];
                let w = rule.apply(ens.followers[i], leader, alpha, rng);
                tally.attempted += 1;
                match Opinion::checked(w) {
                    Some(w) => ens.followers[i] = w,
                    None => tally.rejected += 1,
                }
            }
        }

        for (p, fam) in ens.families.iter_mut().enumerate() {
            let rule = &model.families()[p].leader;
            let idx = &mut self.leaders[p];
            let pairs = binomial(fam.leaders.len() / 2, plan.p_ll[p], rng);
            choose_prefix(idx, 2 * pairs, rng);
            let strategy = fam.strategy;
            for k in 0..pairs {
                let (i, j) = (idx[2 * k] as usize, idx[2 * k + 1] as usize);
                let (a, b) = rule.apply(fam.leaders[i], fam.leaders[j], alpha, beta, m_f, &strategy, rng);
                tally.attempted += 1;
                match (Opinion::checked(a), Opinion::checked(b)) {
                    (Some(a), Some(b)) => {
                        fam.leaders[i] = a;
                        fam.leaders[j] = b;
                    }
                    _ => tally.rejected += 1,
                }
            }
        }
        tally
    }
}

/// Single step with fresh buffers and the model's own plan.
pub fn mc_step<R: Rng + ?Sized>(ens: &mut OpinionEnsemble, model: &Model, rng: &mut R) -> StepTally {
    Stepper::new(ens).step(ens, model, model.plan(), rng)
}
