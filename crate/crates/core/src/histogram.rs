use crate::{Error, Result};

/// Equal-width histogram over `[-1, 1]` normalized to a prescribed mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    densities: Vec<f64>,
    mass: f64,
}

impl Histogram {
    /// Builds a histogram of `samples` whose densities integrate to `mass`.
    /// `w = 1` falls in the last bin.
    pub fn from_samples<I>(samples: I, bins: usize, mass: f64) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        if bins < 2 {
            return Err(Error::invalid("bins", format!("{bins} < 2")));
        }
        let width = 2.0 / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut n = 0u64;
        for w in samples {
            let i = (((w + 1.0) / width).floor() as usize).min(bins - 1);
            counts[i] += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyPopulation("histogram of no samples".into()));
        }
        let scale = mass / (n as f64 * width);
        Ok(Histogram {
            densities: counts.iter().map(|&c| c as f64 * scale).collect(),
            mass,
        })
    }

    pub fn from_densities(densities: Vec<f64>, mass: f64) -> Result<Self> {
        if densities.len() < 2 {
            return Err(Error::invalid("bins", format!("{} < 2", densities.len())));
        }
        Ok(Histogram { densities, mass })
    }

    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 / self.bins() as f64
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        (-1.0 + w * i as f64, -1.0 + w * (i + 1) as f64)
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        -1.0 + self.bin_width() * (i as f64 + 0.5)
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    /// Nominal mass the histogram was normalized to.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn integral(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.bin_width()
    }
}
