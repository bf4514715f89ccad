use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::histogram::Histogram;
use crate::{Error, Result};

use super::ensemble::OpinionEnsemble;
use super::model::Model;
use super::stats::{adaptive_strategy_update, empirical_moments, histogram, EmpiricalMoments, Population};
use super::step::{StepTally, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub horizon: f64,
    /// Times in `[0, horizon]` at which histograms are taken; each is
    /// snapped to the nearest step.
    pub checkpoints: Vec<f64>,
    /// Moments are recorded every this many steps, at checkpoints and at
    /// the end.
    pub record_every: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRecord {
    pub moments: EmpiricalMoments,
    /// Rejected over attempted interactions since the start of the run.
    pub rejection_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// The requested time, not the snapped one.
    pub t: f64,
    pub followers: Histogram,
    pub leaders: Vec<Histogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<MomentRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub tally: StepTally,
    pub steps: usize,
    pub ensemble: OpinionEnsemble,
}

/// Independent stream `replica` of the generator seeded with `seed`.
/// Stream 0 is the generator [`run`] uses.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

pub fn run(ens: OpinionEnsemble, model: &Model, settings: &RunSettings, seed: u64) -> Result<RunOutput> {
    run_with_rng(ens, model, settings, &mut replica_rng(seed, 0))
}

fn check(ens: &OpinionEnsemble, model: &Model, settings: &RunSettings) -> Result<()> {
    let fams = model.params().families();
    if ens.families.len() != fams.len() {
        return Err(Error::invalid(
            "leaders",
            format!("ensemble has {} families, model {}", ens.families.len(), fams.len()),
        ));
    }
    for (p, (fam, fp)) in ens.families.iter().zip(fams).enumerate() {
        if (fam.mass - fp.scaling.rho).abs() > 1e-12 {
            return Err(Error::invalid(
                "rho",
                format!("family {}: ensemble mass {} but model rho {}", p + 1, fam.mass, fp.scaling.rho),
            ));
        }
    }
    if !(settings.horizon >= 0.0 && settings.horizon.is_finite()) {
        return Err(Error::invalid("horizon", format!("{} must be >= 0", settings.horizon)));
    }
    if let Some(&c) = settings.checkpoints.iter().find(|&&c| !(0.0..=settings.horizon).contains(&c)) {
        return Err(Error::invalid("checkpoints", format!("{c} is outside [0, {}]", settings.horizon)));
    }
    if settings.record_every == 0 {
        return Err(Error::invalid("record_every", "must be >= 1"));
    }
    if settings.bins < 2 {
        return Err(Error::invalid("bins", format!("{} < 2", settings.bins)));
    }
    Ok(())
}

/// Runs to `settings.horizon`. If the horizon is not a multiple of the step,
/// the last step is shortened by scaling its probabilities.
pub fn run_with_rng<R: Rng + ?Sized>(
    mut ens: OpinionEnsemble,
    model: &Model,
    settings: &RunSettings,
    rng: &mut R,
) -> Result<RunOutput> {
    check(&ens, model, settings)?;
    let plan = model.plan();
    let dt = plan.dt;
    let ratio = settings.horizon / dt;
    let full = (ratio + 1e-9).floor() as usize;
    let remainder = ratio - full as f64;
    let partial = remainder > 1e-9;
    let total = full + usize::from(partial);
    let last_plan = partial.then(|| plan.scaled(remainder));
    let snapped: Vec<usize> = settings
        .checkpoints
        .iter()
        .map(|&c| if c == settings.horizon { total } else { ((c / dt).round() as usize).min(total) })
        .collect();

    let adaptive: Vec<usize> = (0..ens.families.len())
        .filter(|&p| ens.families[p].strategy.is_adaptive())
        .collect();
    let mut stepper = Stepper::new(&ens);
    let mut tally = StepTally::default();
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();

    for k in 0..=total {
        let t = if k == total { settings.horizon } else { k as f64 * dt };
        for &p in &adaptive {
            ens.families[p].strategy = adaptive_strategy_update(&ens, p)?;
        }
        if k % settings.record_every == 0 || k == total || snapped.contains(&k) {
            records.push(MomentRecord {
                moments: empirical_moments(&ens, t)?,
                rejection_fraction: tally.rejection_fraction(),
            });
        }
        for (i, _) in snapped.iter().enumerate().filter(|(_, &s)| s == k) {
            checkpoints.push(Checkpoint {
                t: settings.checkpoints[i],
                followers: histogram(&ens, Population::Followers, settings.bins)?,
                leaders: (0..ens.families.len())
                    .map(|p| histogram(&ens, Population::Family(p), settings.bins))
                    .collect::<Result<_>>()?,
            });
        }
        if k == total {
            break;
        }
        let this = if k == full { last_plan.as_ref().unwrap_or(plan) } else { plan };
        tally.add(stepper.step(&mut ens, model, this, rng));
    }
    checkpoints.sort_by(|a, b| a.t.total_cmp(&b.t));

    Ok(RunOutput {
        records,
        checkpoints,
        tally,
        steps: total,
        ensemble: ens,
    })
}
