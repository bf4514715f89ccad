//! Stationary densities of the quasi-invariant limit with unit kernels and
//! `D(w) = 1 - w^2`.
//!
//! Both populations solve `(w_d - w) f = (b/2) d/dw [(1 - w^2)^2 f]`, whose
//! solution is
//!
//! ```text
//! f(w) = a (1 - w^2)^-2 exp(-(2/b) F(w)),
//! F(w) = (w^2 - w_d w) / (2 (1 - w^2)) - (w_d / 2) atanh(w),
//! ```
//!
//! `F` being the antiderivative of `(z - w_d) / (1 - z^2)^2` vanishing at 0.
//! Here `a` normalizes `f` itself (not `(1 - w^2)^2 f`) so that densities
//! compare directly with particle histograms.

use crate::histogram::Histogram;
use crate::quadrature::integrate;
use crate::{Error, Result};

/// Half-width of the excluded boundary layer.
pub const EDGE: f64 = 1e-8;

const ABS_TOL: f64 = 1e-13;
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    Follower,
    Leader,
}

/// `(sigma^2 c_FL + sigma_hat^2 c_F rho) / (c_FL + c_F rho)`.
pub fn b_follower(sigma2: f64, sigma_hat2: f64, c_f: f64, c_fl: f64, rho: f64) -> f64 {
    (sigma2 * c_fl + sigma_hat2 * c_f * rho) / (c_fl + c_f * rho)
}

/// `sigma_tilde^2 rho kappa / (2 c_L (psi + mu))`.
pub fn b_leader(sigma_tilde2: f64, rho: f64, kappa: f64, c_l: f64, psi: f64, mu: f64) -> f64 {
    sigma_tilde2 * rho * kappa / (2.0 * c_l * (psi + mu))
}

/// Antiderivative of `(z - w_d) / (1 - z^2)^2` with `F(0) = 0`.
pub fn drift_potential(w: f64, target: f64) -> f64 {
    (w * w - target * w) / (2.0 * (1.0 - w * w)) - 0.5 * target * w.atanh()
}

fn log_unnormalized(w: f64, target: f64, b: f64) -> f64 {
    -2.0 * (1.0 - w * w).ln() - 2.0 / b * drift_potential(w, target)
}

/// `(1 - w^2)^-2 exp(-(2/b) F(w))`, i.e. the density with `a = 1`.
pub fn steady_unnormalized(w: f64, target: f64, b: f64) -> Result<f64> {
    if !(w.abs() < 1.0) {
        return Err(Error::invalid("w", format!("{w} is not inside (-1, 1)")));
    }
    Ok(log_unnormalized(w, target, b).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyDensity {
    population: Population,
    target: f64,
    b: f64,
    mass: f64,
    /// `ln a`, folded together with the overflow shift.
    log_scale: f64,
}

impl SteadyDensity {
    pub fn normalize(population: Population, target: f64, b: f64, mass: f64) -> Result<Self> {
        if !(target.abs() < 1.0) {
            return Err(Error::invalid("target", format!("{target} is not inside (-1, 1)")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid("b", format!("{b} must be > 0")));
        }
        if !(mass > 0.0 && mass <= 1.0) {
            return Err(Error::invalid("mass", format!("{mass} is not in (0, 1]")));
        }
        // Shift by the largest log value seen on a coarse grid so the
        // integrand stays O(1).
        let shift = (1..4000)
            .map(|i| -1.0 + i as f64 / 2000.0)
            .chain(std::iter::once(target))
            .map(|w| log_unnormalized(w, target, b))
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = -1.0 + EDGE;
        let hi = 1.0 - EDGE;
        let q = integrate(
            |w| (log_unnormalized(w, target, b) - shift).exp(),
            lo,
            hi,
            &[target, -0.99, -0.9, 0.9, 0.99],
            ABS_TOL,
            REL_TOL,
        )?;
        if !(q.value > 0.0 && q.value.is_finite()) {
            return Err(Error::QuadratureDiverged { lo, hi, estimate: q.error });
        }
        Ok(SteadyDensity {
            population,
            target,
            b,
            mass,
            log_scale: mass.ln() - q.value.ln() - shift,
        })
    }

    pub fn population(&self) -> Population {
        self.population
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// The normalization constant `a`.
    pub fn normalization(&self) -> f64 {
        self.log_scale.exp()
    }

    /// Zero outside `(-1, 1)`.
    pub fn density(&self, w: f64) -> f64 {
        if !(w.abs() < 1.0) {
            return 0.0;
        }
        (log_unnormalized(w, self.target, self.b) + self.log_scale).exp()
    }

    /// Mass on `[lo, hi]`, clipped to the integration window.
    pub fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        let lo = lo.max(-1.0 + EDGE);
        let hi = hi.min(1.0 - EDGE);
        if hi <= lo {
            return Ok(0.0);
        }
        Ok(integrate(|w| self.density(w), lo, hi, &[self.target], ABS_TOL, REL_TOL)?.value)
    }

    pub fn cdf(&self, w: f64) -> Result<f64> {
        self.mass_between(-1.0, w)
    }

    /// Point where the cumulative mass reaches `q * mass`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid("q", format!("{q} is not in [0, 1]")));
        }
        let goal = q * self.mass;
        let (mut lo, mut hi) = (-1.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < goal {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn cell_average(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.mass_between(lo, hi)? / (hi - lo))
    }

    /// Upper bound on the mass discarded in the two boundary layers of width
    /// `EDGE`. Valid when the density is monotone there, which holds for
    /// `4 EDGE b < 1 - EDGE - |w_d|`.
    pub fn tail_bound(&self) -> Result<f64> {
        if !(4.0 * EDGE * self.b < 1.0 - EDGE - self.target.abs()) {
            return Err(Error::invalid(
                "b",
                format!("{} too large for a monotone boundary layer", self.b),
            ));
        }
        Ok(EDGE * (self.density(1.0 - EDGE) + self.density(-1.0 + EDGE)))
    }
}

/// `n` nodes `(1 - 1e-4) cos(theta_i)`, ascending and clustered at the ends.
pub fn clustered_grid(n: usize) -> Vec<f64> {
    let r = 1.0 - 1e-4;
    (0..n)
        .map(|i| -r * (std::f64::consts::PI * i as f64 / (n - 1).max(1) as f64).cos())
        .collect()
}

/// `max |(w_d - w) f - (b/2) d/dw[(1 - w^2)^2 f]|` over the interior nodes
/// of `grid`, the derivative taken by the five-point stencil with step equal
/// to the local node spacing.
pub fn residual_of<F: Fn(f64) -> f64>(f: F, target: f64, b: f64, grid: &[f64]) -> f64 {
    let g = |w: f64| (1.0 - w * w).powi(2) * f(w);
    let mut worst: f64 = 0.0;
    for i in 1..grid.len().saturating_sub(1) {
        let w = grid[i];
        let h = (grid[i] - grid[i - 1]).min(grid[i + 1] - grid[i]) / 2.0;
        let dg = (g(w - 2.0 * h) - 8.0 * g(w - h) + 8.0 * g(w + h) - g(w + 2.0 * h)) / (12.0 * h);
        worst = worst.max(((target - w) * f(w) - 0.5 * b * dg).abs());
    }
    worst
}

pub fn stationarity_residual(density: &SteadyDensity, grid: &[f64]) -> f64 {
    residual_of(|w| density.density(w), density.target, density.b, grid)
}

/// `sum |h_i - avg_i f| * width`, with `avg_i f` the exact cell average.
pub fn l1_distance(histogram: &Histogram, density: &SteadyDensity) -> Result<f64> {
    if (histogram.mass() - density.mass()).abs() > 1e-6 {
        return Err(Error::MassMismatch {
            histogram: histogram.mass(),
            density: density.mass(),
        });
    }
    let mut total = 0.0;
    for (i, &h) in histogram.densities().iter().enumerate() {
        let (lo, hi) = histogram.bin_edges(i);
        total += (h - density.cell_average(lo, hi)?).abs();
    }
    Ok(total * histogram.bin_width())
}
