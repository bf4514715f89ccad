use crate::histogram::Histogram;
use crate::opinion::Opinion;
use crate::strategy::LeaderStrategy;
use crate::{Error, Result};

use super::ensemble::OpinionEnsemble;

/// Means and energies (second moments) of every population at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    pub t: f64,
    pub m_f: f64,
    pub e_f: f64,
    pub m_l: Vec<f64>,
    pub e_l: Vec<f64>,
    pub psi: Vec<f64>,
}

impl EmpiricalMoments {
    pub fn follower_variance(&self) -> f64 {
        self.e_f - self.m_f * self.m_f
    }
}

/// `(mean w, mean w^2)`.
pub fn mean_and_energy(opinions: &[Opinion]) -> Result<(f64, f64)> {
    if opinions.is_empty() {
        return Err(Error::EmptyPopulation("no opinions to average".into()));
    }
    let n = opinions.len() as f64;
    let (s, s2) = opinions.iter().fold((0.0, 0.0), |(s, s2), w| {
        let w = w.get();
        (s + w, s2 + w * w)
    });
    Ok((s / n, s2 / n))
}

pub fn empirical_moments(ens: &OpinionEnsemble, t: f64) -> Result<EmpiricalMoments> {
    let (m_f, e_f) = mean_and_energy(&ens.followers)?;
    let mut out = EmpiricalMoments {
        t,
        m_f,
        e_f,
        m_l: Vec::with_capacity(ens.families.len()),
        e_l: Vec::with_capacity(ens.families.len()),
        psi: Vec::with_capacity(ens.families.len()),
    };
    for fam in &ens.families {
        let (m, e) = mean_and_energy(&fam.leaders)?;
        out.m_l.push(m);
        out.e_l.push(e);
        out.psi.push(fam.strategy.psi());
    }
    Ok(out)
}

/// Fraction of `opinions` in `[center - half, center + half]`.
pub fn window_fraction(opinions: &[Opinion], center: f64, half: f64) -> f64 {
    if opinions.is_empty() {
        return 0.0;
    }
    let inside = opinions
        .iter()
        .filter(|w| (w.get() - center).abs() <= half)
        .count();
    inside as f64 / opinions.len() as f64
}

/// `psi_p = (frac near w_d + frac near m_Lp) / 2` over the followers.
/// Non-adaptive strategies come back unchanged.
pub fn adaptive_strategy_update(ens: &OpinionEnsemble, family: usize) -> Result<LeaderStrategy> {
    let fam = ens
        .families
        .get(family)
        .ok_or_else(|| Error::invalid("family", format!("no family {family}")))?;
    let Some(win) = fam.strategy.windows() else {
        return Ok(fam.strategy);
    };
    let (m_l, _) = mean_and_energy(&fam.leaders)?;
    let psi = 0.5 * window_fraction(&ens.followers, fam.strategy.target(), win.delta)
        + 0.5 * window_fraction(&ens.followers, m_l, win.delta_bar);
    fam.strategy.with_psi(psi.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    Followers,
    /// Zero-based family index.
    Family(usize),
}

/// Followers integrate to 1, family `p` to `rho_p`.
pub fn histogram(ens: &OpinionEnsemble, population: Population, bins: usize) -> Result<Histogram> {
    let (opinions, mass) = match population {
        Population::Followers => (&ens.followers, 1.0),
        Population::Family(p) => {
            let fam = ens
                .families
                .get(p)
                .ok_or_else(|| Error::invalid("family", format!("no family {p}")))?;
            (&fam.leaders, fam.mass)
        }
    };
    Histogram::from_samples(opinions.iter().map(|w| w.get()), bins, mass)
}
