use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An opinion in the closed interval `[-1, 1]`.
///
/// Interaction rules return raw `f64` candidates; turning a candidate back
/// into an `Opinion` is where out-of-interval results get rejected.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
#[repr(transparent)]
pub struct Opinion(f64);

impl Opinion {
    pub const MIN: Opinion = Opinion(-1.0);
    pub const MAX: Opinion = Opinion(1.0);
    pub const ZERO: Opinion = Opinion(0.0);

    pub fn new(value: f64) -> Result<Self> {
        Self::checked(value).ok_or(Error::OpinionOutOfRange(value))
    }

    /// `None` when `value` is NaN or outside `[-1, 1]`.
    #[inline]
    pub fn checked(value: f64) -> Option<Self> {
        if (-1.0..=1.0).contains(&value) {
            Some(Opinion(value))
        } else {
            None
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Opinion {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Opinion::new(value)
    }
}

impl From<Opinion> for f64 {
    fn from(o: Opinion) -> f64 {
        o.0
    }
}

impl std::fmt::Display for Opinion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
