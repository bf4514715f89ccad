//! Compromise kernels (P, S, R) and diffusion shapes (D, D-hat, D-tilde).
//!
//! Both are closed enumerations so that the extrema needed by the
//! bound-preservation certificate are known exactly per variant.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Weight in `[0, 1]` of how strongly one agent moves toward another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompromiseKernel {
    Constant { level: f64 },
    /// Indicator of `|a - b| <= threshold`.
    BoundedConfidence { threshold: f64 },
}

impl Default for CompromiseKernel {
    fn default() -> Self {
        CompromiseKernel::UNIT
    }
}

impl CompromiseKernel {
    pub const UNIT: CompromiseKernel = CompromiseKernel::Constant { level: 1.0 };

    pub fn constant(level: f64) -> Result<Self> {
        let k = CompromiseKernel::Constant { level };
        k.validate()?;
        Ok(k)
    }

    pub fn bounded_confidence(threshold: f64) -> Result<Self> {
        let k = CompromiseKernel::BoundedConfidence { threshold };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CompromiseKernel::Constant { level } if !(0.0..=1.0).contains(&level) => Err(
                Error::invalid("kernel.level", format!("{level} not in [0, 1]")),
            ),
            CompromiseKernel::BoundedConfidence { threshold } if !(0.0..=2.0).contains(&threshold) => {
                Err(Error::invalid(
                    "kernel.threshold",
                    format!("{threshold} not in [0, 2]"),
                ))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match *self {
            CompromiseKernel::Constant { level } => level,
            CompromiseKernel::BoundedConfidence { threshold } => {
                if (a - b).abs() <= threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact minimum over `[-1, 1]^2`.
    pub fn min_value(&self) -> f64 {
        match *self {
            CompromiseKernel::Constant { level } => level,
            CompromiseKernel::BoundedConfidence { threshold } => {
                if threshold >= 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact maximum over `[-1, 1]^2`.
    pub fn max_value(&self) -> f64 {
        match *self {
            CompromiseKernel::Constant { level } => level,
            CompromiseKernel::BoundedConfidence { .. } => 1.0,
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(*self, CompromiseKernel::Constant { level } if level == 1.0)
    }
}

/// Local weight in `[0, 1]` applied to the noise of an interaction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionShape {
    None,
    Constant { level: f64 },
    /// `D(w) = 1 - w^2`.
    #[default]
    QuadraticCap,
}

impl DiffusionShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DiffusionShape::Constant { level } if !(level > 0.0 && level <= 1.0) => Err(
                Error::invalid("diffusion.level", format!("{level} not in (0, 1]")),
            ),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            DiffusionShape::None => 0.0,
            DiffusionShape::Constant { level } => level,
            DiffusionShape::QuadraticCap => 1.0 - w * w,
        }
    }

    /// `min over {w in I : D(w) != 0}` of `(1 - w) / D(w)` (upper) or
    /// `(1 + w) / D(w)` (lower). Infinite when `D` vanishes identically.
    ///
    /// These are `d_plus`/`d_minus` (and `K_plus`/`K_minus`) of the bound
    /// certificate. For the quadratic cap, `(1 - w)/(1 - w^2) = 1/(1 + w)`
    /// has infimum `1/2`; constant shapes reach `0` at the opposite endpoint.
    pub fn boundary_margin(&self) -> (f64, f64) {
        match *self {
            DiffusionShape::None => (f64::INFINITY, f64::INFINITY),
            DiffusionShape::Constant { .. } => (0.0, 0.0),
            DiffusionShape::QuadraticCap => (0.5, 0.5),
        }
    }
}
