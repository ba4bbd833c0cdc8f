// Measurements shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rpgp::approx::sor_from_matrix;
use rpgp::cli::synth::{preset, SyntheticSpec};
use rpgp::diag::{kl_bound, kl_gaussians};
use rpgp::infer::{
    ess, gibbs, ApproxConfig, ApproxKind, GammaPrior, GibbsConfig, PrecomputedGrid, PriorSpec, RankMode,
};
use rpgp::kernels::{Dataset, KernelSpec, Points};
use rpgp::linalg::{best_rank_m, cholesky, eig_sym, frobenius_diff, SymMatrix, WoodburyInverse};
use rpgp::sketch::{nystrom_fixed_rank, nystrom_with_projection, ProjectionMatrix};

pub fn se_gram(theta1: f64, x: &Points) -> SymMatrix {
    KernelSpec::squared_exponential(theta1, 1.0).unwrap().gram(x).unwrap()
}

/// `n` uniform points in `[0, 1]^d`.
pub fn random_points(n: usize, d: usize, seed: u64) -> Points {
    let mut g = rpgp::rng::stream(seed, 99);
    Points::new(d, (0..n * d).map(|_| g.random::<f64>()).collect()).unwrap()
}

/// `‖Nyström(top-m eigenvectors) − K_m‖_F / ‖K‖_F`.
pub fn eigen_oracle(k: &SymMatrix, m: usize) -> f64 {
    let eig = eig_sym(k).unwrap();
    let model = nystrom_with_projection(k, ProjectionMatrix::from_eigenvectors(&eig, m)).unwrap();
    frobenius_diff(&model.dense(), best_rank_m(k, m).unwrap().as_matrix()) / k.frobenius()
}

/// `‖Nyström(selection rows) − SoR‖_F / ‖K‖_F`.
pub fn permutation_oracle(k: &SymMatrix, idx: &[usize]) -> f64 {
    let rp = nystrom_with_projection(k, ProjectionMatrix::permutation(k.n(), idx).unwrap()).unwrap();
    let sor = sor_from_matrix(k, idx).unwrap();
    frobenius_diff(&rp.dense(), &sor.dense()) / k.frobenius()
}

/// `‖K_tr − K‖_F / ‖K‖_F` with `m = r = n`.
pub fn full_rank_oracle(k: &SymMatrix, seed: u64) -> f64 {
    let model = nystrom_fixed_rank(k, k.n(), k.n(), seed).unwrap();
    frobenius_diff(&model.dense(), k.as_matrix()) / k.frobenius()
}

/// Relative apply error and absolute log-determinant error of the
/// Woodbury form against dense Cholesky.
pub fn woodbury_oracle(n: usize, m: usize, seed: u64) -> (f64, f64) {
    let mut g = rpgp::rng::seeded(seed);
    let f = DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut g));
    let d = DVector::from_fn(n, |_, _| 0.05 + g.random::<f64>());
    let w = WoodburyInverse::from_factor(f.clone(), d.clone()).unwrap();
    let dense = SymMatrix::symmetrized(&f * f.transpose() + DMatrix::from_diagonal(&d));
    let c = cholesky(&dense).unwrap();
    let v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut g));
    let want = c.solve_vec(&v);
    let apply = (w.apply(&v).unwrap() - &want).norm() / want.norm();
    (apply, (w.logdet() - c.logdet()).abs())
}

/// `‖P² − P‖_F / ‖P‖_F` for `P = KΦᵀ(ΦKΦᵀ)⁻¹Φ`.
pub fn projection_oracle(k: &SymMatrix, m: usize, seed: u64) -> f64 {
    let model = nystrom_fixed_rank(k, m, m, seed).unwrap();
    let phi = model.phi.as_ref().unwrap().matrix();
    let kpt = k.as_matrix() * phi.transpose();
    let p = &kpt * (phi * &kpt).try_inverse().unwrap() * phi;
    frobenius_diff(&(&p * &p), &p) / p.norm()
}

/// One random KL instance: returns `(n, KL, bound)`.
pub fn kl_instance(seed: u64) -> (usize, f64, f64) {
    let mut g = rpgp::rng::stream(seed, 7);
    let n = g.random_range(20..=150);
    let d = g.random_range(1..=3);
    let theta1 = 10f64.powf(g.random_range(-0.5..2.0));
    let sigma = g.random_range(0.1..1.0);
    let m = g.random_range(1..=n.min(30));
    let x = random_points(n, d, seed);
    let k = se_gram(theta1, &x);
    let model = nystrom_fixed_rank(&k, m, m, seed).unwrap();
    let eps = frobenius_diff(k.as_matrix(), &model.dense());
    let q = WoodburyInverse::from_factor(model.features(), DVector::from_element(n, sigma * sigma)).unwrap();
    let kl = kl_gaussians(&k.add_diagonal(sigma * sigma), &q).unwrap();
    (n, kl, kl_bound(n, sigma, eps))
}

/// Fixed-hyperparameter oracle: one `θ₁` grid point and near-point-mass
/// priors on `θ₂` and `τ`, so `E[g | Y] = S(S + τ⁻¹I)⁻¹Y` with `S = R/θ₂`.
/// Returns the largest `|ḡᵢ − oracleᵢ| / SEᵢ`.
pub fn gibbs_oracle_max_z(seed: u64) -> f64 {
    let (theta1, theta2, tau) = (20.0, 2.0, 25.0);
    let n = 60;
    let x = Points::grid(0.0, 1.0, n);
    let mut g = rpgp::rng::stream(seed, 5);
    let y = DVector::from_fn(n, |i, _| {
        let z: f64 = StandardNormal.sample(&mut g);
        (5.0 * x.row(i)[0]).sin() + 0.2 * z
    });
    let point_mass = 1e8;
    let priors = PriorSpec::new(
        GammaPrior::new(point_mass, point_mass / tau).unwrap(),
        GammaPrior::new(point_mass, point_mass / theta2).unwrap(),
        vec![theta1],
    )
    .unwrap();
    let grid = PrecomputedGrid::build(&x, priors.grid(), &ApproxConfig::new(ApproxKind::Rp, RankMode::FixedRank(12)), seed)
        .unwrap();
    let config = GibbsConfig { iterations: 3000, burnin: 500, seed, keep_g: true, ..GibbsConfig::default() };
    let samples = gibbs(&y, &priors, &grid, &config).unwrap();

    let s = SymMatrix::symmetrized(grid.point(0).r_inv.dense_covariance() / theta2);
    let oracle = s.as_matrix() * cholesky(&s.add_diagonal(1.0 / tau)).unwrap().solve_vec(&y);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let chain: Vec<f64> = samples.g_draws.iter().map(|gd| gd[i]).collect();
        let mean = chain.iter().sum::<f64>() / chain.len() as f64;
        let var = chain.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (chain.len() - 1) as f64;
        let se = (var / ess(&chain).unwrap()).sqrt();
        worst = worst.max((mean - oracle[i]).abs() / se);
    }
    worst
}

/// Sampler with the likelihood switched off: the `τ` chain must reproduce
/// its Ga(a₁, b₁) prior. Returns `(posterior mean, prior mean, MC SE)`.
pub fn prior_reproduction(seed: u64) -> (f64, f64, f64) {
    let x = Points::grid(0.0, 1.0, 40);
    let y = DVector::from_fn(40, |i, _| (i as f64 * 0.3).cos());
    let priors =
        PriorSpec::new(GammaPrior::new(1.0, 10.0).unwrap(), GammaPrior::new(2.0, 20.0).unwrap(), PriorSpec::uniform_grid(50.0, 5))
            .unwrap();
    let grid = PrecomputedGrid::build(&x, priors.grid(), &ApproxConfig::new(ApproxKind::Rp, RankMode::FixedRank(8)), seed)
        .unwrap();
    let config = GibbsConfig { iterations: 6000, burnin: 1000, seed, likelihood: false, ..GibbsConfig::default() };
    let s = gibbs(&y, &priors, &grid, &config).unwrap();
    let mean = s.tau.iter().sum::<f64>() / s.tau.len() as f64;
    let var = s.tau.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s.tau.len() - 1) as f64;
    (mean, priors.tau.mean(), (var / ess(&s.tau).unwrap()).sqrt())
}

/// The desk-scale synthetic regression problem: 500 equispaced points,
/// five sharp bumps, noise sd 0.1, 80/20 split.
pub fn wavy_data(seed: u64) -> Dataset {
    let (centers, widths, amplitudes) = preset("wavy").unwrap();
    SyntheticSpec { centers, widths, amplitudes, n: 500, noise: 0.1, train_fraction: 0.8, seed }.generate().unwrap()
}

/// Priors for [`wavy_data`]: the default Gamma hyperpriors and 50 grid
/// points on (0, 500], which covers `1/width` for every bump.
pub fn wavy_priors() -> PriorSpec {
    PriorSpec::new(GammaPrior::new(1.0, 10.0).unwrap(), GammaPrior::new(2.0, 20.0).unwrap(), PriorSpec::uniform_grid(500.0, 50))
        .unwrap()
}
