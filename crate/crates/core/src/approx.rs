//! Low-rank GP prior approximations.
//!
//! * SoR / predictive process: `q(x,z) = k_{x,*}ᵀ K_{*,*}⁻¹ k_{*,z}` for a knot set.
//! * FITC: SoR plus the diagonal variance deficit.
//! * RP: the Nyström approximation for a sketch-derived projection `Φ`.
//! * RM: RP plus the diagonal variance deficit.
//!
//! Every approximation is kept in factored form (`U`, `d²`, `D_M`). Knot
//! choices PP1 (uniform random) and PP2 (greedy pivoted Cholesky) are built
//! directly from the partial Cholesky factor.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;

use crate::kernels::{KernelSpec, Points};
use crate::linalg::{cholesky, partial_cholesky, PartialCholesky, PivotRule, StopRule, SymMatrix, WoodburyInverse};
use crate::sketch::{self, model_from_factor, LiftSource, LowRankModel, ProjectionMatrix};
use crate::{rng, Error, Result};

/// Roundoff allowance before a negative variance deficit is an error.
pub const DEFICIT_TOL: f64 = 1e-10;

/// Knots given either as training indices or as explicit locations.
#[derive(Clone, Debug, PartialEq)]
pub enum KnotSet {
    Indices(Vec<usize>),
    Locations(Points),
}

impl KnotSet {
    /// Validated index knots: nonempty, distinct, `< n`.
    pub fn indices(idx: Vec<usize>, n: usize) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::InvalidShape("knot set must be nonempty".into()));
        }
        let mut seen = vec![false; n];
        for &i in &idx {
            if i >= n {
                return Err(Error::InvalidArgument(format!("knot index {i} out of range for n = {n}")));
            }
            if seen[i] {
                return Err(Error::SingularKnotMatrix);
            }
            seen[i] = true;
        }
        Ok(KnotSet::Indices(idx))
    }

    pub fn len(&self) -> usize {
        match self {
            KnotSet::Indices(i) => i.len(),
            KnotSet::Locations(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Knot locations given the training points.
    pub fn locations(&self, x: &Points) -> Points {
        match self {
            KnotSet::Indices(i) => x.select(i),
            KnotSet::Locations(p) => p.clone(),
        }
    }
}

/// PP1: `m` of `n` indices uniformly without replacement.
pub fn select_knots_random(n: usize, m: usize, seed: u64) -> Result<KnotSet> {
    select_knots_random_rng(n, m, &mut rng::seeded(seed))
}

pub(crate) fn select_knots_random_rng(n: usize, m: usize, g: &mut rng::Rng) -> Result<KnotSet> {
    if m == 0 || m > n {
        return Err(Error::InvalidShape(format!("cannot draw {m} knots from {n} points")));
    }
    Ok(KnotSet::Indices(sample(g, n, m).into_vec()))
}

/// Stopping rule for [`select_knots_pivoted`].
#[derive(Clone, Copy, Debug)]
pub enum KnotBudget {
    Rank(usize),
    /// Add pivots until `‖K − Q‖_F` drops below the tolerance.
    Frobenius(f64),
}

impl From<KnotBudget> for StopRule {
    fn from(b: KnotBudget) -> Self {
        match b {
            KnotBudget::Rank(m) => StopRule::Rank(m),
            KnotBudget::Frobenius(t) => StopRule::Frobenius(t),
        }
    }
}

/// PP2: the pivots of a greedy partial Cholesky factorization.
pub fn select_knots_pivoted(k: &SymMatrix, budget: KnotBudget) -> Result<KnotSet> {
    let pc = partial_cholesky(k, &PivotRule::Greedy, budget.into());
    if pc.rank() == 0 {
        return Err(Error::InvalidShape("pivoted factorization selected no knots".into()));
    }
    Ok(KnotSet::Indices(pc.pivots))
}

/// SoR model from a partial Cholesky factorization `K ≈ LLᵀ`.
///
/// With `L_*` the rows of `L` at the pivots, `L_* L_*ᵀ = K_{*,*}` and
/// `L = K_{f,*} L_*⁻ᵀ`, so the lift for a new location is `L_*⁻¹ k_{*,x}`.
pub fn model_from_partial(pc: &PartialCholesky) -> LowRankModel {
    let n = pc.factor.nrows();
    let k = pc.rank();
    let lstar = pc.factor.select_rows(&pc.pivots);
    let pre_lift = if k == 0 {
        DMatrix::zeros(0, 0)
    } else {
        lstar
            .solve_lower_triangular(&DMatrix::identity(k, k))
            .expect("partial Cholesky pivots are positive")
    };
    let phi = ProjectionMatrix::permutation(n, &pc.pivots).ok();
    model_from_factor(pc.factor.clone(), pre_lift, LiftSource::Knots(pc.pivots.clone()), phi, 0.0)
}

/// SoR model for index knots, working from the matrix alone.
pub fn sor_from_matrix(k: &SymMatrix, knots: &[usize]) -> Result<LowRankModel> {
    let knots = match KnotSet::indices(knots.to_vec(), k.n())? {
        KnotSet::Indices(i) => i,
        KnotSet::Locations(_) => unreachable!(),
    };
    let kfs = k.columns(&knots);
    let kss = k.submatrix(&knots);
    sor_from_blocks(&kfs, &kss, LiftSource::Knots(knots.clone()), ProjectionMatrix::permutation(k.n(), &knots).ok())
}

fn sor_from_blocks(
    kfs: &DMatrix<f64>,
    kss: &SymMatrix,
    source: LiftSource,
    phi: Option<ProjectionMatrix>,
) -> Result<LowRankModel> {
    let l = cholesky(kss).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::SingularKnotMatrix,
        other => other,
    })?;
    // F = K_{f,*} L⁻ᵀ
    let f = l.solve_lower(&kfs.transpose()).transpose();
    let m = kss.n();
    let pre_lift = l.solve_lower(&DMatrix::identity(m, m));
    Ok(model_from_factor(f, pre_lift, source, phi, l.jitter()))
}

/// Dense `Q_{f,f} = K_{f,*} K_{*,*}⁻¹ K_{*,f}`.
pub fn sor_cov(kernel: &KernelSpec, x: &Points, knots: &KnotSet) -> Result<SymMatrix> {
    Ok(rp_cov(GpApproximation::sor(kernel, x, knots)?.model()))
}

/// `k_ii − q_ii`, clipped at zero within [`DEFICIT_TOL`].
pub fn variance_deficit(k_diag: &DVector<f64>, q_diag: &DVector<f64>) -> Result<DVector<f64>> {
    if k_diag.len() != q_diag.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} kernel variances for {} approximate variances",
            k_diag.len(),
            q_diag.len()
        )));
    }
    let mut out = DVector::zeros(k_diag.len());
    for i in 0..k_diag.len() {
        let d = k_diag[i] - q_diag[i];
        if d < -DEFICIT_TOL * k_diag[i].abs().max(1.0) {
            return Err(Error::NegativeVarianceDeficit { index: i, deficit: d });
        }
        out[i] = d.max(0.0);
    }
    Ok(out)
}

/// Attaches `D_M = K_diag − diag(Q)` to a knot model (FITC).
pub fn fitc_correct(mut model: LowRankModel, k_diag: &DVector<f64>) -> Result<LowRankModel> {
    model.correction = Some(variance_deficit(k_diag, &model.diag())?);
    Ok(model)
}

/// Attaches `D_M = K_diag − diag(Q^RP)` to a random-projection model (RM).
pub fn rm_correct(model: LowRankModel, k_diag: &DVector<f64>) -> Result<LowRankModel> {
    fitc_correct(model, k_diag)
}

/// Dense `U diag(d²) Uᵀ`; meant for tests and small diagnostics.
pub fn rp_cov(model: &LowRankModel) -> SymMatrix {
    SymMatrix::symmetrized(model.dense())
}

/// `q(x, x_j)` for every training location `x_j`.
pub fn rp_cross(approx: &GpApproximation, x: &[f64]) -> Result<DVector<f64>> {
    let p = Points::new(x.len(), x.to_vec())?;
    Ok(approx.cross(&p)?.row(0).transpose())
}

/// The four approximation families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Sor,
    Fitc,
    Rp,
    Rm,
}

impl Method {
    pub fn corrected(self) -> bool {
        matches!(self, Method::Fitc | Method::Rm)
    }
}

/// A covariance approximation tied to a kernel and training locations.
#[derive(Clone, Debug)]
pub struct GpApproximation {
    method: Method,
    kernel: KernelSpec,
    train: Points,
    /// Locations the source vector `s(x)` is evaluated against.
    anchors: Points,
    model: LowRankModel,
}

impl GpApproximation {
    fn assemble(method: Method, kernel: &KernelSpec, x: &Points, anchors: Points, mut model: LowRankModel) -> Result<Self> {
        model.correction = None;
        if method.corrected() {
            let k_diag = DVector::from_element(x.len(), kernel.variance());
            model = fitc_correct(model, &k_diag)?;
        }
        Ok(GpApproximation { method, kernel: *kernel, train: x.clone(), anchors, model })
    }

    pub fn sor(kernel: &KernelSpec, x: &Points, knots: &KnotSet) -> Result<Self> {
        Self::knot_model(Method::Sor, kernel, x, knots)
    }

    pub fn fitc(kernel: &KernelSpec, x: &Points, knots: &KnotSet) -> Result<Self> {
        Self::knot_model(Method::Fitc, kernel, x, knots)
    }

    fn knot_model(method: Method, kernel: &KernelSpec, x: &Points, knots: &KnotSet) -> Result<Self> {
        if let KnotSet::Indices(idx) = knots {
            KnotSet::indices(idx.clone(), x.len())?;
        }
        let loc = knots.locations(x);
        if loc.is_empty() {
            return Err(Error::InvalidShape("knot set must be nonempty".into()));
        }
        let kfs = kernel.cross_matrix(x, &loc)?;
        let kss = kernel.gram(&loc)?;
        let (source, phi) = match knots {
            KnotSet::Indices(i) => (LiftSource::Knots(i.clone()), ProjectionMatrix::permutation(x.len(), i).ok()),
            KnotSet::Locations(_) => (LiftSource::Knots(Vec::new()), None),
        };
        let model = sor_from_blocks(&kfs, &kss, source, phi)?;
        Self::assemble(method, kernel, x, loc, model)
    }

    /// SoR/FITC from a partial Cholesky of the training Gram matrix (PP1/PP2).
    pub fn from_partial(kernel: &KernelSpec, x: &Points, pc: &PartialCholesky, corrected: bool) -> Result<Self> {
        let method = if corrected { Method::Fitc } else { Method::Sor };
        let anchors = x.select(&pc.pivots);
        Self::assemble(method, kernel, x, anchors, model_from_partial(pc))
    }

    /// RP (or RM when `corrected`) from a model built on `kernel.gram(x)`.
    pub fn from_sketch(kernel: &KernelSpec, x: &Points, model: LowRankModel, corrected: bool) -> Result<Self> {
        if model.n() != x.len() {
            return Err(Error::DimensionMismatch(format!("model of order {} for {} points", model.n(), x.len())));
        }
        let method = if corrected { Method::Rm } else { Method::Rp };
        Self::assemble(method, kernel, x, x.clone(), model)
    }

    /// Fixed-rank RP/RM.
    pub fn rp_fixed_rank(kernel: &KernelSpec, x: &Points, m: usize, r: usize, seed: u64, corrected: bool) -> Result<Self> {
        let k = kernel.gram(x)?;
        Self::from_sketch(kernel, x, sketch::nystrom_fixed_rank(&k, m, r, seed)?, corrected)
    }

    /// Target-error RP/RM via the adaptive range finder.
    pub fn rp_target_error(kernel: &KernelSpec, x: &Points, eps: f64, r: usize, seed: u64, corrected: bool) -> Result<Self> {
        let k = kernel.gram(x)?;
        let (model, _) = sketch::nystrom_target_error(&k, eps, r, seed)?;
        Self::from_sketch(kernel, x, model, corrected)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn train(&self) -> &Points {
        &self.train
    }

    pub fn model(&self) -> &LowRankModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.train.len()
    }

    pub fn rank(&self) -> usize {
        self.model.rank()
    }

    /// Diagonal correction, zeros for the uncorrected methods.
    pub fn correction(&self) -> DVector<f64> {
        self.model.correction.clone().unwrap_or_else(|| DVector::zeros(self.n()))
    }

    /// Feature vectors `w(x)` as rows (len × rank).
    pub fn features_at(&self, p: &Points) -> Result<DMatrix<f64>> {
        let s = self.kernel.cross_matrix(p, &self.anchors)?;
        Ok(s * self.model.lift.transpose())
    }

    /// `Q(p, X)`: len(p) × n.
    pub fn cross(&self, p: &Points) -> Result<DMatrix<f64>> {
        Ok(self.features_at(p)? * self.model.features().transpose())
    }

    /// Diagonal correction at new locations: `k(x,x) − ‖w(x)‖²` for the
    /// corrected methods, zero otherwise.
    pub fn correction_at(&self, p: &Points) -> Result<DVector<f64>> {
        if !self.method.corrected() {
            return Ok(DVector::zeros(p.len()));
        }
        let w = self.features_at(p)?;
        let q = DVector::from_fn(p.len(), |i, _| w.row(i).norm_squared());
        variance_deficit(&DVector::from_element(p.len(), self.kernel.variance()), &q)
    }

    /// Dense `Q + D_M` over the training locations; intended for tests.
    pub fn cov_dense(&self) -> SymMatrix {
        let mut q = self.model.dense();
        if let Some(dm) = &self.model.correction {
            for i in 0..self.n() {
                q[(i, i)] += dm[i];
            }
        }
        SymMatrix::symmetrized(q)
    }

    /// `(Q + D_M + σ² I)⁻¹` in factored form.
    pub fn woodbury(&self, noise_var: f64) -> Result<WoodburyInverse> {
        if !(noise_var > 0.0) {
            return Err(Error::InvalidArgument(format!("noise variance {noise_var} must be positive")));
        }
        let diag = self.correction().add_scalar(noise_var);
        WoodburyInverse::from_factor(self.model.features(), diag)
    }

    /// Same approximation for a kernel with variance `1/theta2`, obtained by
    /// rescaling rather than re-sketching.
    pub fn rescaled(&self, theta2: f64) -> Result<Self> {
        let kernel = self.kernel.with_theta2(theta2)?;
        let mut model = self.model.clone();
        model.rescale(self.kernel.theta2() / theta2);
        Ok(GpApproximation { method: self.method, kernel, train: self.train.clone(), anchors: self.anchors.clone(), model })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{best_rank_m, eig_sym, frobenius_diff, pivoted_partial_cholesky};
    use crate::sketch::nystrom_with_projection;

    fn se() -> KernelSpec {
        KernelSpec::squared_exponential(1.0, 1.0).unwrap()
    }

    #[test]
    fn all_knots_interpolate() {
        let x = Points::grid(0.0, 3.0, 12);
        let q = sor_cov(&se(), &x, &KnotSet::Indices((0..12).collect())).unwrap();
        let k = se().gram(&x).unwrap();
        assert!(frobenius_diff(q.as_matrix(), k.as_matrix()) < 1e-8 * k.frobenius());
    }

    #[test]
    fn single_knot_rank_one_formula() {
        let x = Points::grid(0.0, 2.0, 5);
        let knot = Points::from_1d(&[0.7]);
        let q = sor_cov(&se(), &x, &KnotSet::Locations(knot.clone())).unwrap();
        let kern = se();
        for i in 0..5 {
            for j in 0..5 {
                let want = kern.eval(x.row(i), &[0.7]).unwrap() * kern.eval(&[0.7], x.row(j)).unwrap()
                    / kern.eval(&[0.7], &[0.7]).unwrap();
                assert!((q.as_matrix()[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_knots_rejected() {
        let x = Points::grid(0.0, 2.0, 5);
        assert!(matches!(sor_cov(&se(), &x, &KnotSet::Indices(vec![1, 1])), Err(Error::SingularKnotMatrix)));
    }

    #[test]
    fn sor_invariant_to_knot_order() {
        let x = Points::grid(0.0, 6.0, 20);
        let a = sor_cov(&se(), &x, &KnotSet::Indices(vec![2, 9, 15])).unwrap();
        let b = sor_cov(&se(), &x, &KnotSet::Indices(vec![15, 2, 9])).unwrap();
        assert!(frobenius_diff(a.as_matrix(), b.as_matrix()) < 1e-10);
    }

    #[test]
    fn fitc_restores_diagonal() {
        let x = Points::grid(0.0, 8.0, 40);
        let f = GpApproximation::fitc(&se(), &x, &KnotSet::Indices(vec![0, 10, 20, 30])).unwrap();
        let c = f.cov_dense();
        for i in 0..40 {
            assert!((c.as_matrix()[(i, i)] - 1.0).abs() < 1e-10);
        }
        let ev = eig_sym(&c).unwrap();
        assert!(ev.values[ev.len() - 1] >= -1e-8 * ev.values[0]);
    }

    #[test]
    fn deficit_zero_when_exact() {
        let d = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(variance_deficit(&d, &d).unwrap(), DVector::zeros(2));
        let bad = DVector::from_vec(vec![1.0, 2.1]);
        assert!(matches!(variance_deficit(&d, &bad), Err(Error::NegativeVarianceDeficit { index: 1, .. })));
    }

    #[test]
    fn rank_one_deficit_by_hand() {
        // 2×2 matrix [[1, a], [a, 1]] with the knot at point 0:
        // q11 = 1, q22 = a², so D_M = (0, 1 − a²).
        let a = (-0.005f64).exp();
        let x = Points::from_1d(&[0.1, 0.2]);
        let kern = KernelSpec::squared_exponential(0.5, 1.0).unwrap();
        let f = GpApproximation::fitc(&kern, &x, &KnotSet::Indices(vec![0])).unwrap();
        let dm = f.correction();
        assert!(dm[0].abs() < 1e-12);
        assert!((dm[1] - (1.0 - a * a)).abs() < 1e-12);
        let c = f.cov_dense();
        assert!((c.as_matrix()[(0, 0)] - 1.0).abs() < 1e-12 && (c.as_matrix()[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sor_underestimates_variance_for_random_knots() {
        let x = Points::grid(0.0, 10.0, 50);
        for seed in 0..100 {
            let knots = select_knots_random(50, 1 + (seed as usize % 10), seed).unwrap();
            let q = GpApproximation::sor(&se(), &x, &knots).unwrap();
            assert!(q.model().diag().iter().all(|v| 1.0 - v >= -1e-10));
        }
    }

    #[test]
    fn random_knots_basic() {
        assert_eq!(select_knots_random(7, 7, 3).unwrap().len(), 7);
        assert_eq!(select_knots_random(30, 5, 3).unwrap(), select_knots_random(30, 5, 3).unwrap());
        assert!(select_knots_random(3, 4, 0).is_err());
    }

    #[test]
    fn random_knots_uniform() {
        let mut counts = [0usize; 10];
        let mut g = rng::seeded(11);
        for _ in 0..10_000 {
            if let KnotSet::Indices(i) = select_knots_random_rng(10, 1, &mut g).unwrap() {
                counts[i[0]] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 1e4 - 0.1).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn pivoted_first_pivot_is_max_diagonal() {
        let k = SymMatrix::new(DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.1, 5.0, 0.2, 0.0, 0.2, 2.0])).unwrap();
        match select_knots_pivoted(&k, KnotBudget::Rank(2)).unwrap() {
            KnotSet::Indices(i) => assert_eq!(i[0], 1),
            _ => unreachable!(),
        }
    }

    #[test]
    fn partial_model_equals_sor_and_factor() {
        let x = Points::grid(0.0, 10.0, 60);
        let k = se().gram(&x).unwrap();
        let pc = pivoted_partial_cholesky(&k, StopRule::Rank(8));
        let via_partial = model_from_partial(&pc).dense();
        let via_sor = sor_from_matrix(&k, &pc.pivots).unwrap().dense();
        assert!(frobenius_diff(&via_partial, &pc.approximation()) < 1e-10);
        assert!(frobenius_diff(&via_sor, &pc.approximation()) < 1e-8);
    }

    #[test]
    fn permutation_projection_reverts_to_sor() {
        let x = Points::grid(0.0, 10.0, 50);
        let k = se().gram(&x).unwrap();
        let knots = vec![3, 17, 29, 41];
        let rp = nystrom_with_projection(&k, ProjectionMatrix::permutation(50, &knots).unwrap()).unwrap();
        let sor = sor_cov(&se(), &x, &KnotSet::Indices(knots)).unwrap();
        assert!(frobenius_diff(&rp.dense(), sor.as_matrix()) < 1e-8 * sor.frobenius());
    }

    #[test]
    fn eigen_projection_is_best_rank() {
        let x = Points::grid(0.0, 10.0, 50);
        let k = se().gram(&x).unwrap();
        let eig = eig_sym(&k).unwrap();
        let rp = nystrom_with_projection(&k, ProjectionMatrix::from_eigenvectors(&eig, 6)).unwrap();
        let best = best_rank_m(&k, 6).unwrap();
        assert!(frobenius_diff(rp_cov(&rp).as_matrix(), best.as_matrix()) < 1e-8 * k.frobenius());
    }

    #[test]
    fn cross_at_training_point_is_column() {
        let x = Points::grid(0.0, 5.0, 30);
        for approx in [
            GpApproximation::rp_fixed_rank(&se(), &x, 6, 6, 2, false).unwrap(),
            GpApproximation::sor(&se(), &x, &KnotSet::Indices(vec![1, 8, 20])).unwrap(),
            GpApproximation::fitc(&se(), &x, &KnotSet::Locations(Points::from_1d(&[0.5, 2.5, 4.5]))).unwrap(),
        ] {
            let q = approx.model().dense();
            for j in [0, 11, 29] {
                let c = rp_cross(&approx, x.row(j)).unwrap();
                assert!((c - q.column(j)).norm() < 1e-8, "{:?}", approx.method());
            }
        }
    }

    #[test]
    fn rm_correction_at_training_points_matches() {
        let x = Points::grid(0.0, 5.0, 30);
        let rm = GpApproximation::rp_fixed_rank(&se(), &x, 5, 5, 9, true).unwrap();
        let at = rm.correction_at(&x).unwrap();
        assert!((at - rm.correction()).norm() < 1e-8);
    }

    #[test]
    fn rp_rank_bounded() {
        let x = Points::grid(0.0, 20.0, 80);
        let rp = GpApproximation::rp_fixed_rank(&se(), &x, 7, 7, 4, false).unwrap();
        let ev = eig_sym(&rp_cov(rp.model())).unwrap();
        assert!(ev.values.iter().skip(7).all(|v| v.abs() < 1e-10 * ev.values[0]));
    }

    #[test]
    fn rescale_equals_rebuild() {
        let x = Points::grid(0.0, 5.0, 25);
        let k2 = KernelSpec::squared_exponential(1.0, 2.0).unwrap();
        let base = GpApproximation::fitc(&se(), &x, &KnotSet::Indices(vec![2, 12, 22])).unwrap();
        let direct = GpApproximation::fitc(&k2, &x, &KnotSet::Indices(vec![2, 12, 22])).unwrap();
        let scaled = base.rescaled(2.0).unwrap();
        assert!(frobenius_diff(scaled.cov_dense().as_matrix(), direct.cov_dense().as_matrix()) < 1e-12);
        let p = Points::from_1d(&[0.3, 4.1]);
        assert!(frobenius_diff(&scaled.cross(&p).unwrap(), &direct.cross(&p).unwrap()) < 1e-12);
    }

    #[test]
    fn woodbury_matches_dense() {
        let x = Points::grid(0.0, 5.0, 40);
        let rm = GpApproximation::rp_fixed_rank(&se(), &x, 6, 6, 1, true).unwrap();
        let w = rm.woodbury(0.3).unwrap();
        let dense = rm.cov_dense().add_diagonal(0.3);
        assert!(frobenius_diff(&w.dense_covariance(), dense.as_matrix()) < 1e-10);
    }
}
