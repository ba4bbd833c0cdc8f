//! Marginal likelihood, prediction and a Gibbs sampler for the kernel
//! hyperparameters of a low-rank GP regression.
//!
//! Model: `Y = g + e`, `e ~ N(0, τ⁻¹I)`, `g ~ N(0, R(θ₁)/θ₂)` where
//! `R(θ₁) = F Fᵀ + D` is the factored approximation built at `θ₂ = 1`.
//! Priors: `τ ~ Ga(a₁, b₁)`, `θ₂ ~ Ga(a₂, b₂)` (shape/rate) and `θ₁`
//! uniform on a grid. Changing `θ₂` rescales the stored factors, so the
//! projection for each grid point is computed once.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::approx::GpApproximation;
use crate::kernels::{Dataset, KernelSpec, Points};
use crate::linalg::{partial_cholesky, PivotRule, StopRule, SymMatrix, WoodburyInverse};
use crate::sketch::{self, JlDistribution};
use crate::{rng, Error, Result};

/// Gamma distribution in shape/rate form (mean `shape/rate`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaPrior {
    shape: f64,
    rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("Gamma({shape}, {rate}) needs positive finite parameters")));
        }
        Ok(GammaPrior { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// Draw from `Ga(shape + extra_shape, rate + extra_rate)`. An overflowed
    /// rate yields `NaN`, which the sampler reports as a non-finite state.
    fn sample(&self, extra_shape: f64, extra_rate: f64, g: &mut rng::Rng) -> f64 {
        let shape = self.shape + extra_shape;
        let rate = self.rate + extra_rate;
        match Gamma::new(shape, 1.0 / rate) {
            Ok(d) => d.sample(g),
            Err(_) => f64::NAN,
        }
    }
}

/// Priors on `(τ, θ₂, θ₁)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    pub tau: GammaPrior,
    pub theta2: GammaPrior,
    theta1_grid: Vec<f64>,
}

impl PriorSpec {
    pub fn new(tau: GammaPrior, theta2: GammaPrior, theta1_grid: Vec<f64>) -> Result<Self> {
        if theta1_grid.is_empty() {
            return Err(Error::InvalidArgument("θ₁ grid is empty".into()));
        }
        if theta1_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument("θ₁ grid values must be positive".into()));
        }
        if theta1_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("θ₁ grid must be strictly increasing".into()));
        }
        Ok(PriorSpec { tau, theta2, theta1_grid })
    }

    pub fn grid(&self) -> &[f64] {
        &self.theta1_grid
    }

    /// `t` equispaced points `hi·i/t`, `i = 1..=t`, on `(0, hi]`.
    pub fn uniform_grid(hi: f64, t: usize) -> Vec<f64> {
        (1..=t).map(|i| hi * i as f64 / t as f64).collect()
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            tau: GammaPrior { shape: 1.0, rate: 10.0 },
            theta2: GammaPrior { shape: 2.0, rate: 20.0 },
            theta1_grid: PriorSpec::uniform_grid(2.0, 2000),
        }
    }
}

/// Low-rank family used inside the sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproxKind {
    /// Random projection (Nyström sketch).
    Rp,
    /// Uniformly random knots.
    Pp1,
    /// Greedy pivoted-Cholesky knots.
    Pp2,
}

impl std::str::FromStr for ApproxKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rp" => Ok(ApproxKind::Rp),
            "pp1" => Ok(ApproxKind::Pp1),
            "pp2" => Ok(ApproxKind::Pp2),
            _ => Err(Error::Config(format!("unknown method '{s}' (expected rp, pp1 or pp2)"))),
        }
    }
}

impl std::fmt::Display for ApproxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ApproxKind::Rp => "RP",
            ApproxKind::Pp1 => "PP1",
            ApproxKind::Pp2 => "PP2",
        })
    }
}

/// How the rank is chosen at each grid point.
#[derive(Clone, Debug, PartialEq)]
pub enum RankMode {
    FixedRank(usize),
    /// Smallest rank reaching `‖K − Q‖_F < ε` (adaptive range finder for RP).
    TargetError(f64),
    /// One rank per grid point, e.g. to give PP1 the budget RP needed.
    PerGrid(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxConfig {
    pub kind: ApproxKind,
    pub mode: RankMode,
    /// Add the diagonal variance correction (RM / FITC).
    pub corrected: bool,
    /// Lower bound on the diagonal of `R`, keeping it invertible.
    pub nugget: f64,
    /// Probe count for the range finder; defaults to `⌈log₁₀(10n)⌉`.
    pub probes: Option<usize>,
}

impl ApproxConfig {
    pub fn new(kind: ApproxKind, mode: RankMode) -> Self {
        ApproxConfig { kind, mode, corrected: true, nugget: 1e-6, probes: None }
    }
}

/// Builds the approximation of `kernel.gram(x)` for one grid point.
pub fn build_approximation(
    kernel: &KernelSpec,
    x: &Points,
    config: &ApproxConfig,
    grid_index: usize,
    seed: u64,
) -> Result<GpApproximation> {
    let k = kernel.gram(x)?;
    build_from_matrix(kernel, x, &k, config, grid_index, seed)
}

fn build_from_matrix(
    kernel: &KernelSpec,
    x: &Points,
    k: &SymMatrix,
    config: &ApproxConfig,
    grid_index: usize,
    seed: u64,
) -> Result<GpApproximation> {
    let n = x.len();
    let mut g = rng::stream(seed, grid_index as u64);
    let fixed = match &config.mode {
        RankMode::FixedRank(m) => Some(*m),
        RankMode::PerGrid(ranks) => Some(*ranks.get(grid_index).ok_or_else(|| {
            Error::InvalidArgument(format!("no rank given for grid point {grid_index}"))
        })?),
        RankMode::TargetError(_) => None,
    };
    if let Some(m) = fixed {
        if m > n {
            return Err(Error::InvalidShape(format!("rank {m} exceeds n = {n}")));
        }
    }
    match config.kind {
        ApproxKind::Rp => {
            let model = match (&config.mode, fixed) {
                (_, Some(0)) => sketch::nystrom_with_projection(k, sketch::ProjectionMatrix::empty(n, sketch::Provenance::NystromFixedRank))?,
                (_, Some(m)) => sketch::nystrom_fixed_rank_rng(k, m, m, JlDistribution::Gaussian, &mut g)?,
                (RankMode::TargetError(eps), None) => {
                    let r = config.probes.unwrap_or_else(|| sketch::default_probe_count(n));
                    sketch::nystrom_target_error_rng(k, *eps, r, &mut g)?.0
                }
                _ => unreachable!(),
            };
            GpApproximation::from_sketch(kernel, x, model, config.corrected)
        }
        ApproxKind::Pp1 | ApproxKind::Pp2 => {
            let stop = match (&config.mode, fixed) {
                (_, Some(m)) => StopRule::Rank(m),
                (RankMode::TargetError(eps), None) => StopRule::Frobenius(*eps),
                _ => unreachable!(),
            };
            let rule = if config.kind == ApproxKind::Pp2 {
                PivotRule::Greedy
            } else {
                PivotRule::Order(rand::seq::index::sample(&mut g, n, n).into_vec())
            };
            let pc = partial_cholesky(k, &rule, stop);
            GpApproximation::from_partial(kernel, x, &pc, config.corrected)
        }
    }
}

/// Per-grid-point state the sampler needs: `R_c⁻¹` in Woodbury form and
/// its log-determinant.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub theta1: f64,
    pub rank: usize,
    pub r_inv: WoodburyInverse,
}

/// Approximations for every `θ₁` grid value at reference scale `θ₂ = 1`.
/// Full approximations (including the new-location lift) are rebuilt on
/// demand from the same random stream, so they match the sampler's.
#[derive(Clone, Debug)]
pub struct PrecomputedGrid {
    points: Vec<GridPoint>,
    x: Points,
    config: ApproxConfig,
    seed: u64,
}

impl PrecomputedGrid {
    /// Builds every grid point in parallel; point `i` uses stream `i`.
    pub fn build(x: &Points, grid: &[f64], config: &ApproxConfig, seed: u64) -> Result<Self> {
        if let RankMode::PerGrid(r) = &config.mode {
            if r.len() != grid.len() {
                return Err(Error::InvalidArgument(format!("{} ranks for {} grid points", r.len(), grid.len())));
            }
        }
        let points: Vec<Result<GridPoint>> = grid
            .par_iter()
            .enumerate()
            .map(|(i, &c)| {
                let kernel = KernelSpec::squared_exponential(c, 1.0)?;
                let approx = build_approximation(&kernel, x, config, i, seed)?;
                let diag = approx.correction().map(|d| d.max(config.nugget));
                let r_inv = WoodburyInverse::from_factor(approx.model().features(), diag)?;
                Ok(GridPoint { theta1: c, rank: approx.rank(), r_inv })
            })
            .collect();
        Ok(PrecomputedGrid { points: points.into_iter().collect::<Result<_>>()?, x: x.clone(), config: config.clone(), seed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &GridPoint {
        &self.points[i]
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.rank).collect()
    }

    pub fn config(&self) -> &ApproxConfig {
        &self.config
    }

    /// The full approximation at grid point `i` with variance `1/theta2`.
    pub fn approximation(&self, i: usize, theta2: f64) -> Result<GpApproximation> {
        let kernel = KernelSpec::squared_exponential(self.points[i].theta1, 1.0)?;
        build_approximation(&kernel, &self.x, &self.config, i, self.seed)?.rescaled(theta2)
    }

    /// Index of the grid value nearest to `theta1`.
    pub fn nearest(&self, theta1: f64) -> usize {
        let mut best = 0;
        for (i, p) in self.points.iter().enumerate() {
            if (p.theta1 - theta1).abs() < (self.points[best].theta1 - theta1).abs() {
                best = i;
            }
        }
        best
    }
}

/// Sampler settings.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// With the likelihood off every conditional reduces to its prior.
    pub likelihood: bool,
    /// Keep every post-burn-in draw of `g`.
    pub keep_g: bool,
    /// Initial grid index for `θ₁` (defaults to the middle).
    pub init_theta1: Option<usize>,
    pub theta1_update: Theta1Update,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            iterations: 2000,
            burnin: 500,
            seed: 0,
            likelihood: true,
            keep_g: false,
            init_theta1: None,
            theta1_update: Theta1Update::Conditional,
        }
    }
}

/// How `θ₁` is refreshed each sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theta1Update {
    /// Draw from `p(θ₁ | g, θ₂)` after the other three blocks.
    Conditional,
    /// Draw `(θ₁, g)` jointly: `θ₁` from `p(θ₁ | τ, θ₂, Y)` with `g`
    /// integrated out, then `g | θ₁`. Costs one m × m factorization per
    /// grid point per sweep.
    Collapsed,
}

impl std::str::FromStr for Theta1Update {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conditional" => Ok(Theta1Update::Conditional),
            "collapsed" => Ok(Theta1Update::Collapsed),
            _ => Err(Error::Config(format!("unknown theta1 update '{s}' (expected conditional or collapsed)"))),
        }
    }
}

impl std::fmt::Display for Theta1Update {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Theta1Update::Conditional => "conditional",
            Theta1Update::Collapsed => "collapsed",
        })
    }
}

/// Post-burn-in chains.
#[derive(Clone, Debug)]
pub struct PosteriorSamples {
    pub tau: Vec<f64>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub theta1_index: Vec<usize>,
    /// Rank of the approximation at the current `θ₁` state.
    pub rank: Vec<usize>,
    pub g_mean: DVector<f64>,
    pub g_draws: Vec<DVector<f64>>,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn mean_rank(&self) -> f64 {
        self.rank.iter().sum::<usize>() as f64 / self.rank.len().max(1) as f64
    }
}

fn std_normal_vec(n: usize, g: &mut rng::Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(g))
}

/// Draw from `N(0, F Fᵀ + diag(D))`.
fn sample_factored(r_inv: &WoodburyInverse, g: &mut rng::Rng) -> DVector<f64> {
    let f = r_inv.factor();
    let z1 = std_normal_vec(f.ncols(), g);
    let z2 = std_normal_vec(f.nrows(), g);
    f * z1 + z2.zip_map(r_inv.diagonal(), |z, d| z * d.sqrt())
}

/// log-weights `−½ log det R_c − ½ θ₂ gᵀ R_c⁻¹ g` over the grid.
fn theta1_logweights(grid: &PrecomputedGrid, gvec: &DVector<f64>, theta2: f64) -> Result<Vec<f64>> {
    grid.points
        .par_iter()
        .map(|p| Ok(-0.5 * p.r_inv.logdet() - 0.5 * theta2 * p.r_inv.quad_form(gvec)?))
        .collect()
}

/// log-weights `log N(Y; 0, (R_c + sI)/θ₂)` up to a constant, `s = θ₂/τ`.
fn theta1_collapsed_logweights(grid: &PrecomputedGrid, y: &DVector<f64>, theta2: f64, tau: f64) -> Result<Vec<f64>> {
    let s = theta2 / tau;
    grid.points
        .par_iter()
        .map(|p| {
            let w = WoodburyInverse::from_factor(p.r_inv.factor().clone(), p.r_inv.diagonal().add_scalar(s))?;
            Ok(-0.5 * w.logdet() - 0.5 * theta2 * w.quad_form(y)?)
        })
        .collect()
}

fn check_weights(logw: &[f64], it: usize, tau: f64, theta2: f64) -> Result<()> {
    match logw.iter().position(|l| !l.is_finite()) {
        Some(bad) => Err(Error::NonFiniteState {
            iteration: it,
            detail: format!("log-weight of grid point {bad} is {}; τ = {tau}, θ₂ = {theta2}", logw[bad]),
        }),
        None => Ok(()),
    }
}

fn sample_discrete_log(logw: &[f64], g: &mut rng::Rng) -> usize {
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let u = g.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        acc += wi;
        if u < acc {
            return i;
        }
    }
    w.len() - 1
}

/// Gibbs sampler cycling `g`, `τ`, `θ₂`, `θ₁` (or `(θ₁, g)`, `τ`, `θ₂` with
/// [`Theta1Update::Collapsed`]).
///
/// `g` is drawn by conditioning a prior draw (Matheron's rule):
/// `g = f₀ + S(S + τ⁻¹I)⁻¹(Y − f₀ − e)` with `S = R/θ₂`, which needs one
/// Woodbury solve with `R + (θ₂/τ)I`.
pub fn gibbs(
    y: &DVector<f64>,
    priors: &PriorSpec,
    grid: &PrecomputedGrid,
    config: &GibbsConfig,
) -> Result<PosteriorSamples> {
    let n = y.len();
    if grid.len() != priors.grid().len() {
        return Err(Error::InvalidArgument(format!(
            "grid has {} points but the prior lists {}",
            grid.len(),
            priors.grid().len()
        )));
    }
    if config.iterations <= config.burnin {
        return Err(Error::InvalidArgument(format!(
            "iterations ({}) must exceed burn-in ({})",
            config.iterations, config.burnin
        )));
    }
    if grid.points.first().map(|p| p.r_inv.n()) != Some(n) {
        return Err(Error::DimensionMismatch(format!("response of length {n} does not match the grid models")));
    }
    let mut g = rng::seeded(config.seed);
    let mut c = config.init_theta1.unwrap_or(grid.len() / 2).min(grid.len() - 1);
    let mut tau = priors.tau.mean();
    let mut theta2 = priors.theta2.mean();
    let keep = config.iterations - config.burnin;
    let mut out = PosteriorSamples {
        tau: Vec::with_capacity(keep),
        theta1: Vec::with_capacity(keep),
        theta2: Vec::with_capacity(keep),
        theta1_index: Vec::with_capacity(keep),
        rank: Vec::with_capacity(keep),
        g_mean: DVector::zeros(n),
        g_draws: Vec::new(),
        iterations: config.iterations,
        burnin: config.burnin,
        seed: config.seed,
    };

    for it in 0..config.iterations {
        if config.theta1_update == Theta1Update::Collapsed {
            c = if config.likelihood {
                let logw = theta1_collapsed_logweights(grid, y, theta2, tau)?;
                check_weights(&logw, it, tau, theta2)?;
                sample_discrete_log(&logw, &mut g)
            } else {
                g.random_range(0..grid.len())
            };
        }
        let p = &grid.points[c];
        // (i) g | τ, θ₁, θ₂, Y
        let f0 = sample_factored(&p.r_inv, &mut g) / theta2.sqrt();
        let gvec = if config.likelihood {
            let e = std_normal_vec(n, &mut g) / tau.sqrt();
            let s = theta2 / tau;
            let w = WoodburyInverse::from_factor(p.r_inv.factor().clone(), p.r_inv.diagonal().add_scalar(s))?;
            let resid = y - &f0 - e;
            let corr = &resid - w.apply(&resid)? * s;
            f0 + corr
        } else {
            f0
        };
        // (ii) τ | g, Y
        tau = if config.likelihood {
            priors.tau.sample(0.5 * n as f64, 0.5 * (y - &gvec).norm_squared(), &mut g)
        } else {
            priors.tau.sample(0.0, 0.0, &mut g)
        };
        // (iii) θ₂ | g, θ₁
        let quad = p.r_inv.quad_form(&gvec)?;
        theta2 = priors.theta2.sample(0.5 * n as f64, 0.5 * quad, &mut g);
        // (iv) θ₁ | g, θ₂
        if config.theta1_update == Theta1Update::Conditional {
            let logw = theta1_logweights(grid, &gvec, theta2)?;
            check_weights(&logw, it, tau, theta2)?;
            c = sample_discrete_log(&logw, &mut g);
        }

        if !(tau.is_finite() && tau > 0.0 && theta2.is_finite() && theta2 > 0.0) || gvec.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                iteration: it,
                detail: format!("τ = {tau}, θ₂ = {theta2}, θ₁ = {}, max|g| = {}", grid.points[c].theta1, gvec.amax()),
            });
        }
        if it >= config.burnin {
            out.tau.push(tau);
            out.theta2.push(theta2);
            out.theta1.push(grid.points[c].theta1);
            out.theta1_index.push(c);
            out.rank.push(grid.points[c].rank);
            out.g_mean += &gvec;
            if config.keep_g {
                out.g_draws.push(gvec);
            }
        }
    }
    out.g_mean /= keep as f64;
    Ok(out)
}

/// `log N(Y; 0, Q + D_M + τ⁻¹I)` via the factored form.
pub fn marginal_loglik(y: &DVector<f64>, approx: &GpApproximation, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("precision τ = {tau} must be positive")));
    }
    let w = approx.woodbury(1.0 / tau)?;
    let n = y.len() as f64;
    let ll = -0.5 * (w.quad_form(y)? + w.logdet() + n * (2.0 * std::f64::consts::PI).ln());
    if !ll.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    Ok(ll)
}

/// Where to predict.
#[derive(Clone, Debug)]
pub enum PredictTarget {
    /// Indices into the approximation's own locations.
    Split { observed: Vec<usize>, predict: Vec<usize> },
    /// Fresh locations; all of the approximation's locations are observed.
    NewLocations(Points),
}

/// Predictive covariance `W M Wᵀ + diag(D)`.
#[derive(Clone, Debug)]
pub struct PredictiveCov {
    pub features: DMatrix<f64>,
    pub middle: DMatrix<f64>,
    pub diag: DVector<f64>,
}

impl PredictiveCov {
    pub fn variance(&self) -> DVector<f64> {
        let wm = &self.features * &self.middle;
        DVector::from_fn(self.diag.len(), |i, _| wm.row(i).dot(&self.features.row(i)) + self.diag[i])
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut c = &self.features * &self.middle * self.features.transpose();
        for i in 0..self.diag.len() {
            c[(i, i)] += self.diag[i];
        }
        c
    }
}

#[derive(Clone, Debug)]
pub struct Prediction {
    pub mean: DVector<f64>,
    pub cov: PredictiveCov,
}

/// Conditional predictive distribution
/// `N(Q_{p,o}(Q_{o,o} + D + σ²I)⁻¹Y_o, Q_{p,p} + D_p − Q_{p,o}(…)⁻¹Q_{o,p})`.
pub fn predict(approx: &GpApproximation, tau: f64, y_obs: &DVector<f64>, target: &PredictTarget) -> Result<Prediction> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("precision τ = {tau} must be positive")));
    }
    let features = approx.model().features();
    let corr = approx.correction();
    let (f_o, d_o, f_p, d_p) = match target {
        PredictTarget::Split { observed, predict } => (
            features.select_rows(observed),
            corr.select_rows(observed),
            features.select_rows(predict),
            corr.select_rows(predict),
        ),
        PredictTarget::NewLocations(p) => (features, corr, approx.features_at(p)?, approx.correction_at(p)?),
    };
    if f_o.nrows() != y_obs.len() {
        return Err(Error::DimensionMismatch(format!("{} observations for {} observed locations", y_obs.len(), f_o.nrows())));
    }
    let w = WoodburyInverse::from_factor(f_o.clone(), d_o.add_scalar(1.0 / tau))?;
    let alpha = w.apply(y_obs)?;
    let mean = &f_p * (f_o.transpose() * alpha);
    let m = f_o.ncols();
    let sf = w.apply_matrix(&f_o)?;
    let middle = DMatrix::identity(m, m) - f_o.transpose() * sf;
    Ok(Prediction { mean, cov: PredictiveCov { features: f_p, middle: SymMatrix::symmetrized(middle).into_matrix(), diag: d_p } })
}

/// Plug-in prediction at the posterior means of `(τ, θ₂)` and the grid
/// point nearest the posterior mean of `θ₁`.
pub fn plug_in_predict(
    grid: &PrecomputedGrid,
    samples: &PosteriorSamples,
    y_obs: &DVector<f64>,
    at: &Points,
) -> Result<Prediction> {
    let idx = grid.nearest(mean(&samples.theta1));
    let approx = grid.approximation(idx, mean(&samples.theta2))?;
    predict(&approx, mean(&samples.tau), y_obs, &PredictTarget::NewLocations(at.clone()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Mean squared prediction error.
pub fn mspe(pred: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} predictions for {} targets", pred.len(), truth.len())));
    }
    Ok((pred - truth).norm_squared() / pred.len() as f64)
}

/// Minimum chain length accepted by [`ess`].
pub const MIN_CHAIN: usize = 10;

/// Effective sample size `N / (1 + 2Σρ̂_k)` with Geyer's initial positive
/// sequence truncation. A constant chain carries one effective draw.
pub fn ess(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < MIN_CHAIN {
        return Err(Error::ChainTooShort { len: n, min: MIN_CHAIN });
    }
    let mu = mean(chain);
    let centered: Vec<f64> = chain.iter().map(|v| v - mu).collect();
    let c0 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(c0 > 0.0) {
        return Ok(1.0);
    }
    let rho = |k: usize| -> f64 {
        (0..n - k).map(|i| centered[i] * centered[i + k]).sum::<f64>() / n as f64 / c0
    };
    // Γ_m = ρ_{2m} + ρ_{2m+1}, summed while positive.
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let gamma = rho(2 * m) + rho(2 * m + 1);
        if gamma <= 0.0 {
            break;
        }
        sum += gamma;
        m += 1;
    }
    // ΣΓ_m = 1 + Σ_{k≥1}ρ_k, so 1 + 2Σ_{k≥1}ρ_k = 2ΣΓ_m − 1
    let tau_int = (2.0 * sum - 1.0).max(1.0 / n as f64);
    Ok(n as f64 / tau_int)
}

/// Posterior mean, 95% equal-tailed interval and ESS.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSummary {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub ess: f64,
}

pub fn summarize(chain: &[f64]) -> Result<ChainSummary> {
    let e = ess(chain)?;
    let mut s = chain.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(ChainSummary { mean: mean(chain), lower: quantile(&s, 0.025), upper: quantile(&s, 0.975), ess: e })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Convenience: fit on the training split of `data` and score the test split.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub samples: PosteriorSamples,
    pub grid: PrecomputedGrid,
    pub prediction: Option<Prediction>,
    pub test_mspe: Option<f64>,
}

pub fn fit(data: &Dataset, priors: &PriorSpec, approx: &ApproxConfig, config: &GibbsConfig) -> Result<FitResult> {
    let train = data.train();
    let test = data.test();
    let y = DVector::from_column_slice(&train.y);
    let grid = PrecomputedGrid::build(&train.x, priors.grid(), approx, config.seed)?;
    let samples = gibbs(&y, priors, &grid, config)?;
    let (prediction, test_mspe) = if test.is_empty() {
        log::warn!("test split is empty; skipping prediction error");
        (None, None)
    } else {
        let p = plug_in_predict(&grid, &samples, &y, &test.x)?;
        let e = mspe(&p.mean, &DVector::from_column_slice(&test.y))?;
        (Some(p), Some(e))
    };
    Ok(FitResult { samples, grid, prediction, test_mspe })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::KnotSet;
    use crate::linalg::cholesky;

    fn dense_loglik(y: &DVector<f64>, c: &SymMatrix) -> f64 {
        let l = cholesky(c).unwrap();
        let a = l.solve_vec(y);
        -0.5 * (y.dot(&a) + l.logdet() + y.len() as f64 * (2.0 * std::f64::consts::PI).ln())
    }

    fn small_data(n: usize, seed: u64) -> (Points, DVector<f64>) {
        let x = Points::grid(0.0, 1.0, n);
        let mut g = rng::seeded(seed);
        let y = DVector::from_fn(n, |i, _| {
            let t = x.row(i)[0];
            { let z: f64 = StandardNormal.sample(&mut g); (6.0 * t).sin() + 0.1 * z }
        });
        (x, y)
    }

    #[test]
    fn loglik_single_point_zero_cov() {
        let x = Points::from_1d(&[0.0]);
        let kern = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        let approx = build_approximation(&kern, &x, &ApproxConfig { corrected: false, ..ApproxConfig::new(ApproxKind::Rp, RankMode::FixedRank(0)) }, 0, 0).unwrap();
        let y = DVector::from_vec(vec![0.7]);
        let want = -0.5 * (0.49 + (2.0 * std::f64::consts::PI).ln());
        assert!((marginal_loglik(&y, &approx, 1.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn loglik_matches_dense() {
        let (x, y) = small_data(200, 1);
        let kern = KernelSpec::squared_exponential(30.0, 2.0).unwrap();
        let approx = GpApproximation::rp_fixed_rank(&kern, &x, 15, 15, 3, true).unwrap();
        let dense = dense_loglik(&y, &approx.cov_dense().add_diagonal(0.25));
        assert!((marginal_loglik(&y, &approx, 4.0).unwrap() - dense).abs() < 1e-6);
    }

    #[test]
    fn loglik_decreases_with_excess_noise() {
        let (x, y) = small_data(80, 2);
        let kern = KernelSpec::squared_exponential(20.0, 1.0).unwrap();
        let approx = GpApproximation::rp_fixed_rank(&kern, &x, 10, 10, 3, true).unwrap();
        let var = y.norm_squared() / y.len() as f64;
        let mut last = f64::INFINITY;
        for k in 1..6 {
            let s2 = var * (1 << k) as f64;
            let ll = marginal_loglik(&y, &approx, 1.0 / s2).unwrap();
            assert!(ll < last);
            last = ll;
        }
    }

    #[test]
    fn predict_full_rank_matches_textbook() {
        let n = 50;
        let x = Points::grid(0.0, 10.0, n);
        let kern = KernelSpec::squared_exponential(0.5, 1.0).unwrap();
        let mut g = rng::seeded(4);
        let y = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut g));
        let approx = GpApproximation::sor(&kern, &x, &KnotSet::Indices((0..n).collect())).unwrap();
        let xs = Points::from_1d(&[0.35, 4.2, 9.9]);
        let tau = 2.0;
        let pred = predict(&approx, tau, &y, &PredictTarget::NewLocations(xs.clone())).unwrap();

        let k = kern.gram(&x).unwrap().add_diagonal(1.0 / tau);
        let ks = kern.cross_matrix(&xs, &x).unwrap();
        let kss = kern.gram(&xs).unwrap();
        let l = cholesky(&k).unwrap();
        let mean = &ks * l.solve_vec(&y);
        let cov = kss.as_matrix() - &ks * l.solve(&ks.transpose());
        assert!((pred.mean - mean).amax() < 1e-8);
        assert!((pred.cov.dense() - cov).amax() < 1e-8);
    }

    #[test]
    fn predict_large_noise_returns_prior_mean() {
        let (x, y) = small_data(40, 3);
        let kern = KernelSpec::squared_exponential(10.0, 1.0).unwrap();
        let approx = GpApproximation::rp_fixed_rank(&kern, &x, 8, 8, 1, true).unwrap();
        let pred = predict(&approx, 1e-12, &y, &PredictTarget::NewLocations(Points::from_1d(&[0.5]))).unwrap();
        assert!(pred.mean.amax() < 1e-8);
    }

    #[test]
    fn predict_independent_block() {
        // Two clusters far apart: the cross block is numerically zero.
        let x = Points::from_1d(&[0.0, 0.1, 0.2, 50.0, 50.1]);
        let kern = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        let approx = GpApproximation::sor(&kern, &x, &KnotSet::Indices((0..5).collect())).unwrap();
        let y = DVector::from_vec(vec![1.0, -0.5, 0.3]);
        let target = PredictTarget::Split { observed: vec![0, 1, 2], predict: vec![3, 4] };
        let pred = predict(&approx, 3.0, &y, &target).unwrap();
        assert!(pred.mean.amax() < 1e-12);
        let prior = kern.gram(&Points::from_1d(&[50.0, 50.1])).unwrap();
        assert!((pred.cov.dense() - prior.as_matrix()).amax() < 1e-10);
    }

    #[test]
    fn ess_iid_and_ar1() {
        let mut g = rng::seeded(8);
        let iid: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut g)).collect();
        let e = ess(&iid).unwrap();
        assert!((8000.0..=12000.0).contains(&e), "{e}");

        let rho: f64 = 0.9;
        let mut v = 0.0;
        let ar: Vec<f64> = (0..20_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut g);
                v = rho * v + (1.0 - rho * rho).sqrt() * z;
                v
            })
            .collect();
        let ratio = ess(&ar).unwrap() / ar.len() as f64;
        let want = (1.0 - rho) / (1.0 + rho);
        assert!((ratio - want).abs() < 0.5 * want, "{ratio}");
        assert!(matches!(ess(&[1.0; 5]), Err(Error::ChainTooShort { .. })));
        assert_eq!(ess(&[2.0; 50]).unwrap(), 1.0);
    }

    #[test]
    fn mspe_basics() {
        let a = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(mspe(&a, &a).unwrap(), 0.0);
        assert_eq!(mspe(&a, &DVector::from_vec(vec![0.0, 0.0])).unwrap(), 2.5);
    }

    #[test]
    fn summary_interval() {
        let chain: Vec<f64> = (0..1001).map(|i| i as f64).collect();
        let s = summarize(&chain).unwrap();
        assert_eq!(s.mean, 500.0);
        assert!((s.lower - 25.0).abs() < 1e-12 && (s.upper - 975.0).abs() < 1e-12);
    }

    #[test]
    fn priors_validate() {
        assert!(GammaPrior::new(0.0, 1.0).is_err());
        let t = GammaPrior::new(1.0, 1.0).unwrap();
        assert!(PriorSpec::new(t, t, vec![]).is_err());
        assert!(PriorSpec::new(t, t, vec![0.5, 0.5]).is_err());
        assert!(PriorSpec::new(t, t, vec![0.0, 0.5]).is_err());
        let d = PriorSpec::default();
        assert_eq!(d.grid().len(), 2000);
        assert!((d.grid()[1999] - 2.0).abs() < 1e-15 && (d.grid()[0] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn gibbs_deterministic_and_on_grid() {
        let (x, y) = small_data(40, 5);
        let priors = PriorSpec::new(GammaPrior::new(2.0, 0.1).unwrap(), GammaPrior::new(2.0, 2.0).unwrap(), PriorSpec::uniform_grid(40.0, 8)).unwrap();
        let grid = PrecomputedGrid::build(&x, priors.grid(), &ApproxConfig::new(ApproxKind::Rp, RankMode::TargetError(0.1)), 3).unwrap();
        let cfg = GibbsConfig { iterations: 120, burnin: 20, seed: 9, ..Default::default() };
        let a = gibbs(&y, &priors, &grid, &cfg).unwrap();
        let b = gibbs(&y, &priors, &grid, &cfg).unwrap();
        assert_eq!(a.tau, b.tau);
        assert_eq!(a.theta1, b.theta1);
        assert_eq!(a.len(), 100);
        assert!(a.tau.iter().chain(&a.theta2).all(|v| *v > 0.0));
        assert!(a.theta1.iter().all(|t| priors.grid().contains(t)));
    }

    #[test]
    fn grid_rescale_matches_fresh_build() {
        let (x, y) = small_data(60, 6);
        let cfg = ApproxConfig::new(ApproxKind::Rp, RankMode::FixedRank(10));
        let k1 = KernelSpec::squared_exponential(15.0, 1.0).unwrap();
        let k3 = KernelSpec::squared_exponential(15.0, 3.0).unwrap();
        let scaled = build_approximation(&k1, &x, &cfg, 0, 1).unwrap().rescaled(3.0).unwrap();
        let fresh = build_approximation(&k3, &x, &cfg, 0, 1).unwrap();
        let ws = scaled.woodbury(0.2).unwrap();
        let wf = fresh.woodbury(0.2).unwrap();
        assert!((ws.logdet() - wf.logdet()).abs() < 1e-8);
        assert!((ws.quad_form(&y).unwrap() - wf.quad_form(&y).unwrap()).abs() < 1e-8 * wf.quad_form(&y).unwrap());
        assert!((ws.apply(&y).unwrap() - wf.apply(&y).unwrap()).amax() < 1e-8);
    }

    #[test]
    fn per_grid_rank_length_checked() {
        let x = Points::grid(0.0, 1.0, 10);
        let cfg = ApproxConfig::new(ApproxKind::Pp1, RankMode::PerGrid(vec![2]));
        assert!(PrecomputedGrid::build(&x, &[1.0, 2.0], &cfg, 0).is_err());
    }
}
