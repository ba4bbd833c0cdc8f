//! The squared-exponential covariance kernel, point sets and datasets.

use nalgebra::{DMatrix, DVector};

use crate::linalg::SymMatrix;
use crate::{Error, Result};

/// Locations in ℝᵈ, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidShape("points need dimension >= 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidShape(format!(
                "{} values do not split into points of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Points { dim, data })
    }

    /// One-dimensional points.
    pub fn from_1d(xs: &[f64]) -> Self {
        Points { dim: 1, data: xs.to_vec() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("rows of unequal length".into()));
        }
        Points::new(dim, rows.concat())
    }

    /// `n` equispaced points on `[lo, hi]` (inclusive).
    pub fn grid(lo: f64, hi: f64, n: usize) -> Self {
        let xs: Vec<f64> = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        };
        Points::from_1d(&xs)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn select(&self, idx: &[usize]) -> Points {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Points { dim: self.dim, data }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Covariance family. Only the squared exponential is supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    SquaredExponential,
}

/// `k(x, z) = exp(−θ₁‖x − z‖²) / θ₂`, with range θ₁ ≥ 0 and inverse scale θ₂ > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    theta1: f64,
    theta2: f64,
}

fn sq_dist(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl KernelSpec {
    pub fn squared_exponential(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1 >= 0.0) || !theta1.is_finite() {
            return Err(Error::InvalidArgument(format!("range θ₁ = {theta1} must be >= 0")));
        }
        if !(theta2 > 0.0) || !theta2.is_finite() {
            return Err(Error::InvalidArgument(format!("inverse scale θ₂ = {theta2} must be > 0")));
        }
        Ok(KernelSpec { family: KernelFamily::SquaredExponential, theta1, theta2 })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    /// Same range, different inverse scale.
    pub fn with_theta2(&self, theta2: f64) -> Result<Self> {
        Self::squared_exponential(self.theta1, theta2)
    }

    /// Marginal variance `k(x, x)`.
    pub fn variance(&self) -> f64 {
        1.0 / self.theta2
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", x.len(), z.len())));
        }
        Ok(self.eval_unchecked(x, z))
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        (-self.theta1 * sq_dist(x, z)).exp() / self.theta2
    }

    /// Gram matrix `K_{f,f}`.
    pub fn gram(&self, x: &Points) -> Result<SymMatrix> {
        if x.is_empty() {
            return Err(Error::InvalidShape("gram of an empty point set".into()));
        }
        Ok(SymMatrix::from_fn(x.len(), |i, j| {
            if i == j {
                1.0 / self.theta2
            } else {
                self.eval_unchecked(x.row(i), x.row(j))
            }
        }))
    }

    /// `k_{x,f} = (k(x, x₁), …, k(x, xₙ))ᵀ`.
    pub fn cross_cov(&self, x: &[f64], points: &Points) -> Result<DVector<f64>> {
        if x.len() != points.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} against points of dimension {}",
                x.len(),
                points.dim()
            )));
        }
        Ok(DVector::from_iterator(
            points.len(),
            points.iter().map(|p| self.eval_unchecked(x, p)),
        ))
    }

    /// `|a| × |b|` cross-covariance matrix.
    pub fn cross_matrix(&self, a: &Points, b: &Points) -> Result<DMatrix<f64>> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
        }
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| self.eval_unchecked(a.row(i), b.row(j))))
    }
}

/// Role of an observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split '{other}'"))),
        }
    }
}

/// Locations, responses and an optional train/test partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Points,
    pub y: Vec<f64>,
    pub split: Option<Vec<Split>>,
}

impl Dataset {
    pub fn new(x: Points, y: Vec<f64>, split: Option<Vec<Split>>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} locations but {} responses",
                x.len(),
                y.len()
            )));
        }
        if let Some(s) = &split {
            if s.len() != y.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} split labels for {} observations",
                    s.len(),
                    y.len()
                )));
            }
        }
        Ok(Dataset { x, y, split })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn indices_of(&self, want: Split) -> Vec<usize> {
        match &self.split {
            None if want == Split::Train => (0..self.len()).collect(),
            None => vec![],
            Some(s) => s.iter().enumerate().filter(|(_, v)| **v == want).map(|(i, _)| i).collect(),
        }
    }

    /// Training indices; all observations when there is no partition.
    pub fn train_indices(&self) -> Vec<usize> {
        self.indices_of(Split::Train)
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.indices_of(Split::Test)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            split: self.split.as_ref().map(|s| idx.iter().map(|&i| s[i]).collect()),
        }
    }

    pub fn train(&self) -> Dataset {
        self.subset(&self.train_indices())
    }

    pub fn test(&self) -> Dataset {
        self.subset(&self.test_indices())
    }
}
