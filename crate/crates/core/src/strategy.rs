use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Window half-widths of the adaptive strategy: `delta` around the family
/// target, `delta_bar` around the family's current mean opinion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveWindows {
    pub delta: f64,
    pub delta_bar: f64,
}

impl AdaptiveWindows {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("adaptive.delta", self.delta), ("adaptive.delta_bar", self.delta_bar)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("{v} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A leader family's strategy: radical weight `psi` toward `target`, populist
/// weight `mu = 1 - psi` toward the follower mean.
///
/// `mu` is never stored, so `psi + mu == 1` holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderStrategy {
    psi: f64,
    target: f64,
    adaptive: Option<AdaptiveWindows>,
}

impl LeaderStrategy {
    pub fn new(psi: f64, target: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&psi) {
            return Err(Error::invalid("psi", format!("{psi} not in [0, 1]")));
        }
        if !(-1.0..=1.0).contains(&target) {
            return Err(Error::invalid("target", format!("{target} not in [-1, 1]")));
        }
        Ok(LeaderStrategy {
            psi,
            target,
            adaptive: None,
        })
    }

    pub fn adaptive(psi: f64, target: f64, windows: AdaptiveWindows) -> Result<Self> {
        windows.validate()?;
        let mut s = Self::new(psi, target)?;
        s.adaptive = Some(windows);
        Ok(s)
    }

    #[inline]
    pub fn psi(&self) -> f64 {
        self.psi
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        1.0 - self.psi
    }

    #[inline]
    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn windows(&self) -> Option<AdaptiveWindows> {
        self.adaptive
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive.is_some()
    }

    /// Same strategy with a new radical weight; used by the adaptive update.
    pub fn with_psi(&self, psi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&psi) {
            return Err(Error::invalid("psi", format!("{psi} not in [0, 1]")));
        }
        Ok(LeaderStrategy { psi, ..*self })
    }

    /// The weighted attraction point `psi * target + mu * follower_mean`.
    #[inline]
    pub fn anchor(&self, follower_mean: f64) -> f64 {
        self.psi * self.target + self.mu() * follower_mean
    }
}
