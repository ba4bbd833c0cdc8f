//! Diagnostics: Gaussian KL divergence and its bound, condition numbers, and
//! the fixed-rank / target-error benchmark harnesses.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::approx::model_from_partial;
use crate::infer::ApproxKind;
use crate::kernels::{KernelSpec, Points};
use crate::linalg::{
    cholesky, condition_from_values, eig_sym, frobenius_diff, partial_cholesky, spectral_norm_lanczos, tail_energy,
    PivotRule, StopRule, SymMatrix, WoodburyInverse,
};
use crate::sketch::{self, JlDistribution, LowRankModel};
use crate::{rng, Error, Result};

/// Lanczos steps used for spectral norms of residual matrices.
pub const LANCZOS_STEPS: usize = 60;

/// `KL(N(0, Σ₀) ‖ N(0, Σ₁))` with `Σ₁` in factored form.
pub fn kl_gaussians(sigma0: &SymMatrix, sigma1: &WoodburyInverse) -> Result<f64> {
    let n = sigma0.n();
    if sigma1.n() != n {
        return Err(Error::DimensionMismatch(format!("covariances of order {n} and {}", sigma1.n())));
    }
    let l0 = cholesky(sigma0).map_err(|_| Error::SingularCovariance)?;
    let s = sigma1.apply_matrix(sigma0.as_matrix())?;
    let trace = s.trace();
    Ok(0.5 * (trace - n as f64 - l0.logdet() + sigma1.logdet()))
}

/// Same divergence with both covariances dense.
pub fn kl_gaussians_dense(sigma0: &SymMatrix, sigma1: &SymMatrix) -> Result<f64> {
    let n = sigma0.n();
    if sigma1.n() != n {
        return Err(Error::DimensionMismatch(format!("covariances of order {n} and {}", sigma1.n())));
    }
    let l0 = cholesky(sigma0).map_err(|_| Error::SingularCovariance)?;
    let l1 = cholesky(sigma1).map_err(|_| Error::SingularCovariance)?;
    let trace = l1.solve(sigma0.as_matrix()).trace();
    Ok(0.5 * (trace - n as f64 - l0.logdet() + l1.logdet()))
}

/// `{n + (n/σ)²} ε`.
pub fn kl_bound(n: usize, sigma: f64, eps: f64) -> f64 {
    let n = n as f64;
    (n + (n / sigma).powi(2)) * eps
}

/// Condition number of `Q + D_M + τ⁻¹I` from the factored form. The top
/// eigenvalue is bounded by `d²₁ + max D_M + τ⁻¹`; the bottom one is
/// `τ⁻¹ + min D_M` when `Q` has a null space and `τ⁻¹ + d²_n` otherwise.
pub fn condition_of_model(model: &LowRankModel, tau: f64) -> f64 {
    let noise = 1.0 / tau;
    let (dmax, dmin) = match &model.correction {
        Some(d) if !d.is_empty() => (d.max(), d.min()),
        _ => (0.0, 0.0),
    };
    let top = model.d2.iter().cloned().fold(0.0, f64::max) + dmax + noise;
    let bottom = if model.rank() < model.n() || model.rank() == 0 {
        noise + dmin
    } else {
        noise + dmin + model.d2.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    top / bottom
}

/// Condition number of the m × m matrix `ΦKΦᵀ` inverted during construction
/// (`K_{*,*}` for knot models).
pub fn inverted_condition(k: &SymMatrix, model: &LowRankModel) -> Result<f64> {
    let Some(phi) = &model.phi else {
        return Err(Error::InvalidArgument("model carries no projection".into()));
    };
    if phi.rows() == 0 {
        return Ok(1.0);
    }
    let small = SymMatrix::symmetrized(phi.matrix() * k.as_matrix() * phi.matrix().transpose());
    condition_from_values(eig_sym(&small)?.values.as_slice())
}

/// The benchmark kernel matrix: `e^{−(x−y)²}` on `n` equispaced points in `[lo, hi]`.
pub fn grid_kernel_matrix(n: usize, lo: f64, hi: f64) -> SymMatrix {
    KernelSpec::squared_exponential(1.0, 1.0)
        .expect("valid kernel")
        .gram(&Points::grid(lo, hi, n))
        .expect("nonempty grid")
}

/// `E D Eᵀ` with `d_ii = e^{−iλ}` (`i = 1..n`) and `E` a random orthogonal matrix.
pub fn exp_decay_matrix(n: usize, lambda: f64, seed: u64) -> SymMatrix {
    let mut g = rng::seeded(seed);
    let e = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut g)).qr().q();
    let d = DVector::from_fn(n, |i, _| (-lambda * (i + 1) as f64).exp());
    SymMatrix::symmetrized(&e * DMatrix::from_diagonal(&d) * e.transpose())
}

/// Smallest rank `m` with `√(Σ_{i>m} λᵢ²) < ε`.
pub fn optimal_rank(eigenvalues: &[f64], eps: f64) -> usize {
    (0..=eigenvalues.len()).find(|&m| tail_energy(eigenvalues, m) < eps).unwrap_or(eigenvalues.len())
}

/// One fixed-rank study cell.
#[derive(Clone, Debug)]
pub struct ApproxReport {
    pub method: ApproxKind,
    pub rank: usize,
    /// Replicate index; `None` for the deterministic PP2.
    pub replicate: Option<u64>,
    pub frobenius: f64,
    pub spectral: f64,
    /// `d²₁ / d²_m` over the retained spectrum.
    pub cond_retained: f64,
    /// Condition number of the inverted m × m matrix.
    pub cond_inverted: f64,
    pub seconds: f64,
    pub error: Option<String>,
}

impl ApproxReport {
    fn failed(method: ApproxKind, rank: usize, replicate: Option<u64>, e: Error) -> Self {
        ApproxReport {
            method,
            rank,
            replicate,
            frobenius: f64::NAN,
            spectral: f64::NAN,
            cond_retained: f64::NAN,
            cond_inverted: f64::NAN,
            seconds: 0.0,
            error: Some(e.to_string()),
        }
    }
}

fn build_fixed(k: &SymMatrix, method: ApproxKind, m: usize, g: &mut rng::Rng) -> Result<LowRankModel> {
    match method {
        ApproxKind::Rp => sketch::nystrom_fixed_rank_rng(k, m, m, JlDistribution::Gaussian, g),
        ApproxKind::Pp1 => {
            let order = rand::seq::index::sample(g, k.n(), k.n()).into_vec();
            Ok(model_from_partial(&partial_cholesky(k, &PivotRule::Order(order), StopRule::Rank(m))))
        }
        ApproxKind::Pp2 => Ok(model_from_partial(&partial_cholesky(k, &PivotRule::Greedy, StopRule::Rank(m)))),
    }
}

fn fixed_cell(k: &SymMatrix, method: ApproxKind, m: usize, replicate: Option<u64>, seed: u64) -> ApproxReport {
    let mut g = rng::stream(seed, replicate.unwrap_or(0));
    let t0 = Instant::now();
    let built = build_fixed(k, method, m, &mut g);
    let seconds = t0.elapsed().as_secs_f64();
    let model = match built {
        Ok(model) => model,
        Err(e) => return ApproxReport::failed(method, m, replicate, e),
    };
    let resid = k.as_matrix() - model.dense();
    let cond_inverted = inverted_condition(k, &model).unwrap_or(f64::INFINITY);
    ApproxReport {
        method,
        rank: model.rank(),
        replicate,
        frobenius: resid.norm(),
        spectral: spectral_norm_lanczos(&resid, LANCZOS_STEPS),
        cond_retained: model.retained_condition(),
        cond_inverted,
        seconds,
        error: None,
    }
}

/// Builds every (method, rank, replicate) approximation of `k` and records
/// its error norms and condition numbers. Replicate `r` draws from stream
/// `r` of `seed`, so RP and PP1 cells for the same replicate are paired.
/// PP2 is deterministic and runs once per rank.
pub fn fixed_rank_study(
    k: &SymMatrix,
    methods: &[ApproxKind],
    ranks: &[usize],
    replicates: usize,
    seed: u64,
) -> Vec<ApproxReport> {
    let mut cells = Vec::new();
    for &method in methods {
        for &m in ranks {
            if method == ApproxKind::Pp2 {
                cells.push((method, m, None));
            } else {
                cells.extend((0..replicates as u64).map(|r| (method, m, Some(r))));
            }
        }
    }
    cells.into_par_iter().map(|(method, m, rep)| fixed_cell(k, method, m, rep, seed)).collect()
}

/// One target-error study cell.
#[derive(Clone, Debug)]
pub struct TargetErrorReport {
    pub method: ApproxKind,
    pub eps: f64,
    pub replicate: Option<u64>,
    pub rank: usize,
    pub cond_retained: f64,
    pub cond_inverted: f64,
    /// `‖K − Q‖_F` of the returned approximation.
    pub achieved: f64,
    pub exhausted: bool,
    pub seconds: f64,
    pub error: Option<String>,
}

fn target_cell(k: &SymMatrix, method: ApproxKind, eps: f64, replicate: Option<u64>, seed: u64, probes: usize) -> TargetErrorReport {
    let mut g = rng::stream(seed, replicate.unwrap_or(0));
    let t0 = Instant::now();
    let built: Result<(LowRankModel, bool)> = match method {
        ApproxKind::Rp => sketch::nystrom_target_error_rng(k, eps, probes, &mut g).map(|(m, f)| (m, f.exhausted)),
        ApproxKind::Pp1 | ApproxKind::Pp2 => {
            let rule = if method == ApproxKind::Pp2 {
                PivotRule::Greedy
            } else {
                PivotRule::Order(rand::seq::index::sample(&mut g, k.n(), k.n()).into_vec())
            };
            let pc = partial_cholesky(k, &rule, StopRule::Frobenius(eps));
            let exhausted = pc.residual_frobenius >= eps;
            Ok((model_from_partial(&pc), exhausted))
        }
    };
    let seconds = t0.elapsed().as_secs_f64();
    match built {
        Ok((model, exhausted)) => TargetErrorReport {
            method,
            eps,
            replicate,
            rank: model.phi.as_ref().map_or(model.rank(), |p| p.rows()),
            cond_retained: model.retained_condition(),
            cond_inverted: inverted_condition(k, &model).unwrap_or(f64::INFINITY),
            achieved: frobenius_diff(k.as_matrix(), &model.dense()),
            exhausted,
            seconds,
            error: None,
        },
        Err(e) => TargetErrorReport {
            method,
            eps,
            replicate,
            rank: 0,
            cond_retained: f64::NAN,
            cond_inverted: f64::NAN,
            achieved: f64::NAN,
            exhausted: false,
            seconds,
            error: Some(e.to_string()),
        },
    }
}

/// Ranks needed by each method to reach `‖K − Q‖_F < ε`, plus the optimal
/// rank from the exact spectrum.
pub fn target_error_study(
    k: &SymMatrix,
    eps: f64,
    methods: &[ApproxKind],
    replicates: usize,
    seed: u64,
    probes: Option<usize>,
) -> Result<(usize, Vec<TargetErrorReport>)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("target error {eps} must be positive")));
    }
    let optimal = optimal_rank(eig_sym(k)?.values.as_slice(), eps);
    let probes = probes.unwrap_or_else(|| sketch::default_probe_count(k.n()));
    let mut cells = Vec::new();
    for &method in methods {
        if method == ApproxKind::Pp2 {
            cells.push((method, None));
        } else {
            cells.extend((0..replicates as u64).map(|r| (method, Some(r))));
        }
    }
    let rows = cells.into_par_iter().map(|(method, rep)| target_cell(k, method, eps, rep, seed, probes)).collect();
    Ok((optimal, rows))
}

/// Median of the finite values, `NaN` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}
