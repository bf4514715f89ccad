//! Monte Carlo simulation of the follower/leader Boltzmann dynamics.
//!
//! Each time step runs three sub-rounds in a fixed order: follower-follower,
//! follower-leader (per family), leader-leader (per family). Interactions
//! whose outcome would leave `[-1, 1]` are rejected and both participants
//! keep their previous opinions.

mod ensemble;
mod model;
mod run;
mod stats;
mod step;

pub use ensemble::{leader_counts, InitialLaw, LeaderFamily, OpinionEnsemble, MAX_DRAWS_PER_SAMPLE};
pub use model::{FamilyKernels, FamilyRules, Model};
pub use run::{replica_rng, run, run_with_rng, Checkpoint, MomentRecord, RunOutput, RunSettings};
pub use stats::{
    adaptive_strategy_update, empirical_moments, histogram, mean_and_energy, window_fraction,
    EmpiricalMoments, Population,
};
pub use step::{mc_step, plan_step, StepPlan, StepTally, Stepper};
