//! Synthetic regression data: a mixture of Gaussian bumps on `[0, 1]` plus
//! white noise.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::kernels::{Dataset, Points, Split};
use crate::{rng, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub n: usize,
    /// Noise standard deviation.
    pub noise: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

/// Bump parameters `(centers, widths, amplitudes)` for a named preset.
pub fn preset(name: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    Ok(match name {
        "smooth" => (vec![0.3, 0.7], vec![0.05, 0.08], vec![1.0, -0.6]),
        "wavy" => (
            vec![0.15, 0.35, 0.55, 0.75, 0.9],
            vec![0.004, 0.002, 0.006, 0.003, 0.002],
            vec![1.0, -0.8, 1.2, -1.0, 0.7],
        ),
        "very-wavy" => {
            let c: Vec<f64> = (0..12).map(|i| 0.04 + 0.08 * i as f64).collect();
            let w = (0..12).map(|i| 0.0004 + 0.0002 * (i % 3) as f64).collect();
            let a = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -0.9 }).collect();
            (c, w, a)
        }
        _ => return Err(Error::Config(format!("unknown preset '{name}' (smooth, wavy, very-wavy)"))),
    })
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.centers.len();
        if self.widths.len() != k || self.amplitudes.len() != k {
            return Err(Error::Config("centers, widths and amplitudes must have equal lengths".into()));
        }
        if self.centers.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config("bump centers must lie in [0, 1]".into()));
        }
        if self.widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("bump widths must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train fraction must lie in (0, 1)".into()));
        }
        if self.n == 0 || !(self.noise >= 0.0) {
            return Err(Error::Config("need n >= 1 and a nonnegative noise level".into()));
        }
        Ok(())
    }

    /// `f(x) = Σ aⱼ exp(−(x − cⱼ)² / wⱼ)`.
    pub fn mean_function(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.widths)
            .zip(&self.amplitudes)
            .map(|((c, w), a)| a * (-(x - c) * (x - c) / w).exp())
            .sum()
    }

    /// `n` equispaced points on `[0, 1]`, noisy responses and a seeded
    /// uniform train/test split.
    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let x = Points::grid(0.0, 1.0, self.n);
        let mut g = rng::stream(self.seed, 0);
        let y = (0..self.n)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut g);
                self.mean_function(x.row(i)[0]) + self.noise * z
            })
            .collect();
        let mut gs = rng::stream(self.seed, 1);
        let split = (0..self.n)
            .map(|_| if gs.random::<f64>() < self.train_fraction { Split::Train } else { Split::Test })
            .collect();
        Dataset::new(x, y, Some(split))
    }
}
