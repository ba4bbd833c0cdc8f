//! Randomized range finding and Nyström spectral approximation.
//!
//! [`nystrom_fixed_rank`] sketches `K` with a Johnson–Lindenstrauss matrix,
//! takes the dominant left singular subspace of the sketch as the projection
//! `Φ`, and returns the Nyström approximation
//! `K_tr = (ΦK)ᵀ(ΦKΦᵀ)⁻¹(ΦK) = U D² Uᵀ` in factored form.
//! [`adaptive_rangefinder`] instead grows `Φ` one orthonormal row at a time
//! until random probes certify `‖K − ΦᵀΦK‖ < ε`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::linalg::{self, cholesky, eig_sym, frobenius_diff, SymMatrix};
use crate::{rng, Error, Result};

/// Entry distribution of a Johnson–Lindenstrauss matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JlDistribution {
    /// N(0, 1/r)
    Gaussian,
    /// ±1/√r with equal probability
    Rademacher,
}

/// An n × r sketching matrix Ω (stored so that `K Ω` is a plain product).
#[derive(Clone, Debug)]
pub struct JlMatrix {
    pub omega: DMatrix<f64>,
    pub distribution: JlDistribution,
    pub seed: u64,
}

/// Draws an n × r JL matrix with entries scaled by `1/√r`.
pub fn draw_jl(n: usize, r: usize, distribution: JlDistribution, seed: u64) -> Result<JlMatrix> {
    draw_jl_with(n, r, distribution, &mut rng::seeded(seed)).map(|omega| JlMatrix { omega, distribution, seed })
}

fn draw_jl_with(n: usize, r: usize, distribution: JlDistribution, g: &mut rng::Rng) -> Result<DMatrix<f64>> {
    if r == 0 || n < r {
        return Err(Error::InvalidShape(format!("sketch width r = {r} must satisfy 1 <= r <= n = {n}")));
    }
    let scale = 1.0 / (r as f64).sqrt();
    Ok(match distribution {
        JlDistribution::Gaussian => DMatrix::from_fn(n, r, |_, _| {
            let z: f64 = StandardNormal.sample(g);
            z * scale
        }),
        JlDistribution::Rademacher => {
            DMatrix::from_fn(n, r, |_, _| if g.random::<bool>() { scale } else { -scale })
        }
    })
}

/// Where a projection matrix came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    NystromFixedRank,
    Adaptive,
    KnotPermutation,
    EigenvectorOracle,
    Custom,
}

/// An m × n projection `Φ` with unit-norm rows.
#[derive(Clone, Debug)]
pub struct ProjectionMatrix {
    phi: DMatrix<f64>,
    pub provenance: Provenance,
}

impl ProjectionMatrix {
    /// Wraps `phi`, checking that every row has unit norm.
    pub fn new(phi: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        for (i, row) in phi.row_iter().enumerate() {
            if (row.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!("row {i} of the projection does not have unit norm")));
            }
        }
        Ok(ProjectionMatrix { phi, provenance })
    }

    /// Rows of the n × n identity selected by `idx`: the projection that
    /// reduces to conditioning on a knot subset.
    pub fn permutation(n: usize, idx: &[usize]) -> Result<Self> {
        let mut phi = DMatrix::zeros(idx.len(), n);
        for (r, &i) in idx.iter().enumerate() {
            if i >= n {
                return Err(Error::InvalidArgument(format!("knot index {i} out of range for n = {n}")));
            }
            phi[(r, i)] = 1.0;
        }
        Ok(ProjectionMatrix { phi, provenance: Provenance::KnotPermutation })
    }

    /// `Φ = U_mᵀ` from the top-m eigenvectors.
    pub fn from_eigenvectors(eig: &linalg::SpectralPair, m: usize) -> Self {
        ProjectionMatrix {
            phi: eig.vectors.columns(0, m).transpose(),
            provenance: Provenance::EigenvectorOracle,
        }
    }

    pub fn empty(n: usize, provenance: Provenance) -> Self {
        ProjectionMatrix { phi: DMatrix::zeros(0, n), provenance }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    /// `‖ΦΦᵀ − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.rows();
        frobenius_diff(&(&self.phi * self.phi.transpose()), &DMatrix::identity(m, m))
    }
}

/// How cross-covariances at new locations are fed into the model's feature map.
#[derive(Clone, Debug, PartialEq)]
pub enum LiftSource {
    /// `s(x) = k_{f,x}` against every training location.
    AllPoints,
    /// `s(x) = k_{*,x}` against the listed training locations (knots).
    Knots(Vec<usize>),
}

/// `K_tr = U diag(d²) Uᵀ` with `U` column-orthonormal and `d²` nonincreasing,
/// plus an optional diagonal correction `D_M`.
///
/// `lift` maps the source cross-covariance `s(x)` of a new location to its
/// feature vector `w(x) = lift · s(x)`, normalized so that for a training
/// location `x_j`, `w(x_j) = d ⊙ U[j, :]`. Then
/// `q(x, x_j) = Σ_k U[j,k] d_k w_k(x)` and `q(x, z) = w(x)·w(z)`.
#[derive(Clone, Debug)]
pub struct LowRankModel {
    pub u: DMatrix<f64>,
    pub d2: DVector<f64>,
    pub phi: Option<ProjectionMatrix>,
    pub lift: DMatrix<f64>,
    pub source: LiftSource,
    pub correction: Option<DVector<f64>>,
    /// Jitter the small-matrix Cholesky needed, 0 when none.
    pub jitter: f64,
}

impl LowRankModel {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.d2.len()
    }

    /// Dense `U diag(d²) Uᵀ` (without the correction).
    pub fn dense(&self) -> DMatrix<f64> {
        let f = self.features();
        &f * f.transpose()
    }

    /// `U diag(d)`: the training-location features.
    pub fn features(&self) -> DMatrix<f64> {
        let mut f = self.u.clone();
        for (j, v) in self.d2.iter().enumerate() {
            f.column_mut(j).scale_mut(v.sqrt());
        }
        f
    }

    /// `diag(U diag(d²) Uᵀ)`.
    pub fn diag(&self) -> DVector<f64> {
        DVector::from_fn(self.n(), |i, _| {
            (0..self.rank()).map(|k| self.u[(i, k)].powi(2) * self.d2[k]).sum()
        })
    }

    /// Multiplies the represented covariance by `c`.
    pub fn rescale(&mut self, c: f64) {
        self.d2 *= c;
        if let Some(dm) = &mut self.correction {
            *dm *= c;
        }
        // w(x) scales like √c while s(x) scales like c.
        self.lift /= c.sqrt();
    }

    /// Retained-spectrum condition number `d²₁ / d²_m`.
    pub fn retained_condition(&self) -> f64 {
        if self.rank() == 0 {
            return 1.0;
        }
        self.d2[0] / self.d2[self.rank() - 1]
    }
}

/// Builds a [`LowRankModel`] from a factor `F` with `Q = F Fᵀ` by thin SVD
/// `F = U S Wᵀ`. `pre_lift` maps a source vector to the coordinates of `F`;
/// the stored lift becomes `Wᵀ · pre_lift`.
pub(crate) fn model_from_factor(
    f: DMatrix<f64>,
    pre_lift: DMatrix<f64>,
    source: LiftSource,
    phi: Option<ProjectionMatrix>,
    jitter: f64,
) -> LowRankModel {
    let n = f.nrows();
    if f.ncols() == 0 {
        return LowRankModel {
            u: DMatrix::zeros(n, 0),
            d2: DVector::zeros(0),
            phi,
            lift: DMatrix::zeros(0, pre_lift.ncols()),
            source,
            correction: None,
            jitter,
        };
    }
    let svd = f.svd(true, true);
    let u = svd.u.expect("svd requested U");
    let vt = svd.v_t.expect("svd requested Vᵀ");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let smax = s[order[0]];
    let keep: Vec<usize> = order.into_iter().filter(|&k| s[k] > 1e-14 * smax && s[k] > 0.0).collect();
    let u = u.select_columns(&keep);
    let d2 = DVector::from_iterator(keep.len(), keep.iter().map(|&k| s[k] * s[k]));
    let vt = vt.select_rows(&keep);
    let lift = vt * pre_lift;
    LowRankModel { u, d2, phi, lift, source, correction: None, jitter }
}

/// Nyström approximation for a given projection (steps 3–7 of the fixed-rank
/// construction): `K₁ = ΦKΦᵀ = BBᵀ`, `C = KΦᵀB⁻ᵀ = UDVᵀ`, `K_tr = UD²Uᵀ`.
///
/// If `K₁` cannot be factored even with jitter, `Φ` is shrunk to the
/// numerical range of `K₁` and the factorization retried.
pub fn nystrom_with_projection(k: &SymMatrix, phi: ProjectionMatrix) -> Result<LowRankModel> {
    let n = k.n();
    if phi.n() != n {
        return Err(Error::DimensionMismatch(format!("projection has {} columns for a matrix of order {n}", phi.n())));
    }
    if phi.rows() == 0 {
        return Ok(model_from_factor(DMatrix::zeros(n, 0), DMatrix::zeros(0, n), LiftSource::AllPoints, Some(phi), 0.0));
    }
    let kphi_t = k.as_matrix() * phi.matrix().transpose();
    let k1 = SymMatrix::symmetrized(phi.matrix() * &kphi_t);
    let (phi, kphi_t, b) = match cholesky(&k1) {
        Ok(b) => (phi, kphi_t, b),
        Err(Error::NotPositiveDefinite { .. }) => shrink_to_numerical_rank(k, phi, &k1)?,
        Err(e) => return Err(e),
    };
    // Cᵀ = B⁻¹ Φ K
    let ct = b.solve_lower(&kphi_t.transpose());
    let pre_lift = b.solve_lower(phi.matrix());
    Ok(model_from_factor(ct.transpose(), pre_lift, LiftSource::AllPoints, Some(phi), b.jitter()))
}

fn shrink_to_numerical_rank(
    k: &SymMatrix,
    phi: ProjectionMatrix,
    k1: &SymMatrix,
) -> Result<(ProjectionMatrix, DMatrix<f64>, linalg::CholeskyFactor)> {
    let eig = eig_sym(k1)?;
    let top = eig.values[0];
    let keep = eig.values.iter().take_while(|v| **v > 1e-10 * top && **v > 0.0).count();
    if keep == 0 {
        return Err(Error::RankDeficientSketch);
    }
    log::warn!("projected matrix is numerically singular; shrinking rank {} -> {keep}", phi.rows());
    let rot = eig.vectors.columns(0, keep).transpose();
    let new_phi = ProjectionMatrix { phi: rot * phi.matrix(), provenance: phi.provenance };
    let kphi_t = k.as_matrix() * new_phi.matrix().transpose();
    let k1 = SymMatrix::symmetrized(new_phi.matrix() * &kphi_t);
    let b = cholesky(&k1).map_err(|_| Error::RankDeficientSketch)?;
    Ok((new_phi, kphi_t, b))
}

/// Orthonormalizes the rows of `phi` (same row space).
fn orthonormalize_rows(phi: DMatrix<f64>) -> DMatrix<f64> {
    let m = phi.nrows();
    let q = phi.transpose().qr().q();
    q.columns(0, m).transpose()
}

/// Steps 1–2: `Φᵀ` = top-m left singular vectors of `KΩ`, obtained from the
/// r × r eigen-decomposition of `(KΩ)ᵀ(KΩ)`.
fn sketch_projection(k: &SymMatrix, m: usize, omega: &DMatrix<f64>) -> Result<ProjectionMatrix> {
    let y = k.as_matrix() * omega;
    let gram = SymMatrix::symmetrized(y.transpose() * &y);
    let eig = eig_sym(&gram)?;
    let top = eig.values[0].max(0.0);
    let cols: Vec<DVector<f64>> = (0..m)
        .filter(|&j| eig.values[j] > 1e-28 * top && eig.values[j] > 0.0)
        .map(|j| (&y * eig.vectors.column(j)) / eig.values[j].sqrt())
        .collect();
    if cols.is_empty() {
        return Err(Error::RankDeficientSketch);
    }
    let phi_t = DMatrix::from_columns(&cols);
    Ok(ProjectionMatrix {
        phi: orthonormalize_rows(phi_t.transpose()),
        provenance: Provenance::NystromFixedRank,
    })
}

/// Fixed-rank Nyström approximation of `K` with a Gaussian sketch of width
/// `r` (`1 <= m <= r <= n`).
pub fn nystrom_fixed_rank(k: &SymMatrix, m: usize, r: usize, seed: u64) -> Result<LowRankModel> {
    nystrom_fixed_rank_with(k, m, r, JlDistribution::Gaussian, seed)
}

pub fn nystrom_fixed_rank_with(
    k: &SymMatrix,
    m: usize,
    r: usize,
    distribution: JlDistribution,
    seed: u64,
) -> Result<LowRankModel> {
    nystrom_fixed_rank_rng(k, m, r, distribution, &mut rng::seeded(seed))
}

pub(crate) fn nystrom_fixed_rank_rng(
    k: &SymMatrix,
    m: usize,
    r: usize,
    distribution: JlDistribution,
    g: &mut rng::Rng,
) -> Result<LowRankModel> {
    let n = k.n();
    if m == 0 || m > r || r > n {
        return Err(Error::InvalidShape(format!("need 1 <= m ({m}) <= r ({r}) <= n ({n})")));
    }
    let omega = draw_jl_with(n, r, distribution, g)?;
    let phi = sketch_projection(k, m, &omega)?;
    nystrom_with_projection(k, phi)
}

/// `‖K − ΦᵀΦK‖_F`.
pub fn range_residual(k: &SymMatrix, phi: &ProjectionMatrix) -> f64 {
    let pk = phi.matrix() * k.as_matrix();
    frobenius_diff(k.as_matrix(), &(phi.matrix().transpose() * pk))
}

/// Runs `copies` independent fixed-rank sketches (concurrently) and keeps
/// the one with the smallest range residual.
pub fn nystrom_best_of(k: &SymMatrix, m: usize, r: usize, copies: usize, seed: u64) -> Result<LowRankModel> {
    let copies = copies.max(1);
    let runs: Vec<Result<(f64, LowRankModel)>> = (0..copies as u64)
        .into_par_iter()
        .map(|c| {
            let model = nystrom_fixed_rank_rng(k, m, r, JlDistribution::Gaussian, &mut rng::stream(seed, c))?;
            let res = range_residual(k, model.phi.as_ref().expect("sketch models carry Φ"));
            Ok((res, model))
        })
        .collect();
    let mut best: Option<(f64, LowRankModel)> = None;
    for run in runs {
        let (res, model) = run?;
        if best.as_ref().map_or(true, |(b, _)| res < *b) {
            best = Some((res, model));
        }
    }
    Ok(best.expect("at least one copy").1)
}

/// Output of [`adaptive_rangefinder`].
#[derive(Clone, Debug)]
pub struct RangeFinderResult {
    pub phi: ProjectionMatrix,
    /// Set when every direction was used without passing the probe test.
    pub exhausted: bool,
    /// Total Gaussian probes drawn.
    pub probes: usize,
}

/// Default probe count `r` with `n / 10^r <= 0.1`.
pub fn default_probe_count(n: usize) -> usize {
    ((10.0 * n.max(1) as f64).log10().ceil() as usize).max(1)
}

/// Probe threshold `ε√π / (10√2)`.
pub fn probe_threshold(eps: f64) -> f64 {
    eps * std::f64::consts::PI.sqrt() / (10.0 * std::f64::consts::SQRT_2)
}

/// Adaptive range finder: returns `Φ` with orthonormal rows such that
/// `‖K − ΦᵀΦK‖ < ε` with probability at least `1 − n/10^r`.
pub fn adaptive_rangefinder(k: &SymMatrix, eps: f64, r: usize, seed: u64) -> Result<RangeFinderResult> {
    adaptive_rangefinder_rng(k, eps, r, &mut rng::seeded(seed))
}

pub(crate) fn adaptive_rangefinder_rng(
    k: &SymMatrix,
    eps: f64,
    r: usize,
    g: &mut rng::Rng,
) -> Result<RangeFinderResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("target error {eps} must be positive")));
    }
    if r == 0 {
        return Err(Error::InvalidShape("probe count r must be >= 1".into()));
    }
    let n = k.n();
    let km = k.as_matrix();
    let threshold = probe_threshold(eps);
    let probe = |g: &mut rng::Rng| -> DVector<f64> {
        let w = DVector::from_fn(n, |_, _| StandardNormal.sample(g));
        km * w
    };
    let project_out = |v: &mut DVector<f64>, basis: &[DVector<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(v);
                v.axpy(-c, b, 1.0);
            }
        }
    };

    let mut kappa: Vec<DVector<f64>> = (0..r).map(|_| probe(g)).collect();
    let mut probes = r;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut j = 0usize;
    let mut exhausted = false;

    loop {
        let worst = kappa[j..j + r].iter().map(|v| v.norm()).fold(0.0, f64::max);
        if worst < threshold {
            break;
        }
        if j == n {
            exhausted = true;
            break;
        }
        let mut kj = kappa[j].clone();
        project_out(&mut kj, &basis);
        let norm = kj.norm();
        if !(norm > 0.0) {
            exhausted = true;
            break;
        }
        let phi_j = kj / norm;
        basis.push(phi_j.clone());
        j += 1;

        let mut fresh = probe(g);
        probes += 1;
        project_out(&mut fresh, &basis);
        kappa.push(fresh);
        for v in &mut kappa[j..j + r - 1] {
            let c = phi_j.dot(v);
            v.axpy(-c, &phi_j, 1.0);
        }
    }

    let phi = if basis.is_empty() {
        DMatrix::zeros(0, n)
    } else {
        DMatrix::from_rows(&basis.iter().map(|b| b.transpose()).collect::<Vec<_>>())
    };
    if exhausted {
        log::warn!("range finder used all {n} directions without meeting target {eps}");
    }
    Ok(RangeFinderResult { phi: ProjectionMatrix { phi, provenance: Provenance::Adaptive }, exhausted, probes })
}

/// Adaptive range finder followed by the Nyström steps.
pub fn nystrom_target_error(
    k: &SymMatrix,
    eps: f64,
    r: usize,
    seed: u64,
) -> Result<(LowRankModel, RangeFinderResult)> {
    nystrom_target_error_rng(k, eps, r, &mut rng::seeded(seed))
}

pub(crate) fn nystrom_target_error_rng(
    k: &SymMatrix,
    eps: f64,
    r: usize,
    g: &mut rng::Rng,
) -> Result<(LowRankModel, RangeFinderResult)> {
    let found = adaptive_rangefinder_rng(k, eps, r, g)?;
    let model = nystrom_with_projection(k, found.phi.clone())?;
    Ok((model, found))
}

/// Empirical success rates of `‖K − K_tr‖ ≤ (1+ε)‖K − K_m‖_F`.
#[derive(Clone, Copy, Debug)]
pub struct Theorem1Outcome {
    pub trials: usize,
    pub sketch_width: usize,
    /// Left side measured in Frobenius norm.
    pub frobenius_rate: f64,
    /// Left side measured in spectral norm.
    pub spectral_rate: f64,
    pub best_rank_error: f64,
}

/// Monte Carlo check of the fixed-rank guarantee with `r = ⌊m/ε⌋`.
pub fn theorem1_montecarlo(k: &SymMatrix, m: usize, eps: f64, trials: usize, seed: u64) -> Result<Theorem1Outcome> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must lie in (0, 1]")));
    }
    let r = ((m as f64 / eps).floor() as usize).min(k.n());
    theorem1_montecarlo_width(k, m, eps, r, trials, seed)
}

/// Same as [`theorem1_montecarlo`] with an explicit sketch width.
pub fn theorem1_montecarlo_width(
    k: &SymMatrix,
    m: usize,
    eps: f64,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<Theorem1Outcome> {
    let eig = eig_sym(k)?;
    let best = linalg::tail_energy(eig.values.as_slice(), m);
    let floor = 1e-10 * k.frobenius();
    let bound = (1.0 + eps) * best + floor;
    let outcomes: Vec<Result<(bool, bool)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let model = nystrom_fixed_rank_rng(k, m, r, JlDistribution::Gaussian, &mut rng::stream(seed, t))?;
            let resid = k.as_matrix() - model.dense();
            let fro = resid.norm();
            let spec = linalg::spectral_norm_lanczos(&resid, 60);
            Ok((fro <= bound, spec <= bound))
        })
        .collect();
    let mut hits_f = 0usize;
    let mut hits_2 = 0usize;
    for o in outcomes {
        let (f, s) = o?;
        hits_f += f as usize;
        hits_2 += s as usize;
    }
    Ok(Theorem1Outcome {
        trials,
        sketch_width: r,
        frobenius_rate: hits_f as f64 / trials as f64,
        spectral_rate: hits_2 as f64 / trials as f64,
        best_rank_error: best,
    })
}
