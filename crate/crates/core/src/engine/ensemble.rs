use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::opinion::Opinion;
use crate::strategy::LeaderStrategy;
use crate::{Error, Result};

/// Draw budget per accepted sample when truncating to `[-1, 1]`.
pub const MAX_DRAWS_PER_SAMPLE: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderFamily {
    pub leaders: Vec<Opinion>,
    /// `rho_p`, the mass of the family relative to the followers.
    pub mass: f64,
    pub strategy: LeaderStrategy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionEnsemble {
    pub followers: Vec<Opinion>,
    pub families: Vec<LeaderFamily>,
}

impl OpinionEnsemble {
    pub fn new(followers: Vec<Opinion>, families: Vec<LeaderFamily>) -> Result<Self> {
        if followers.is_empty() {
            return Err(Error::EmptyPopulation("followers".into()));
        }
        for (p, fam) in families.iter().enumerate() {
            if fam.leaders.is_empty() {
                return Err(Error::EmptyPopulation(format!("leader family {}", p + 1)));
            }
            if !(fam.mass > 0.0 && fam.mass <= 1.0) {
                return Err(Error::invalid("rho", format!("{} not in (0, 1]", fam.mass)));
            }
        }
        Ok(OpinionEnsemble { followers, families })
    }

    /// `(N_F, [N_L1, ...])`.
    pub fn sizes(&self) -> (usize, Vec<usize>) {
        (
            self.followers.len(),
            self.families.iter().map(|f| f.leaders.len()).collect(),
        )
    }
}

/// Leader counts under the convention that the families make up the
/// fraction `rho_p` of the whole population:
/// `N_Lp = round(rho_p * N_F / (1 - sum rho))`.
pub fn leader_counts(followers: usize, masses: &[f64]) -> Result<Vec<usize>> {
    let total: f64 = masses.iter().sum();
    if !(total < 1.0) {
        return Err(Error::invalid("rho", format!("family masses sum to {total} >= 1")));
    }
    let everyone = followers as f64 / (1.0 - total);
    Ok(masses
        .iter()
        .map(|&rho| ((rho * everyone).round() as usize).max(1))
        .collect())
}

/// Initial opinion laws. Unbounded laws are truncated to `[-1, 1]` by
/// resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, variance: f64 },
    /// `Gamma(shape, scale) + shift`.
    Gamma { shape: f64, scale: f64, shift: f64 },
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialLaw::Uniform { lo, hi } => {
                if !(-1.0 <= lo && lo <= hi && hi <= 1.0) {
                    return Err(Error::invalid("uniform", format!("[{lo}, {hi}] is not inside [-1, 1]")));
                }
            }
            InitialLaw::Normal { mean, variance } => {
                if !mean.is_finite() || !(variance >= 0.0 && variance.is_finite()) {
                    return Err(Error::invalid("normal", format!("mean {mean}, variance {variance}")));
                }
            }
            InitialLaw::Gamma { shape, scale, shift } => {
                if !(shape > 0.0 && scale > 0.0 && shift.is_finite()) {
                    return Err(Error::invalid("gamma", format!("shape {shape}, scale {scale}, shift {shift}")));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Opinion>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::invalid("n", "at least one sample is required"));
        }
        match *self {
            InitialLaw::Uniform { lo, hi } => Ok((0..n)
                .map(|_| Opinion::checked(lo + (hi - lo) * rng.random::<f64>()).unwrap_or(Opinion::new(hi).unwrap()))
                .collect()),
            InitialLaw::Normal { mean, variance } => {
                let d = Normal::new(mean, variance.sqrt()).map_err(|e| Error::invalid("normal", e.to_string()))?;
                truncated(n, || d.sample(rng))
            }
            InitialLaw::Gamma { shape, scale, shift } => {
                let d = Gamma::new(shape, scale).map_err(|e| Error::invalid("gamma", e.to_string()))?;
                truncated(n, || d.sample(rng) + shift)
            }
        }
    }
}

fn truncated(n: usize, mut draw: impl FnMut() -> f64) -> Result<Vec<Opinion>> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut tries = 0;
        let v = loop {
            if let Some(v) = Opinion::checked(draw()) {
                break v;
            }
            tries += 1;
            if tries >= MAX_DRAWS_PER_SAMPLE {
                return Err(Error::SamplerExhausted(tries));
            }
        };
        out.push(v);
    }
    Ok(out)
}
