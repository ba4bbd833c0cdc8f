//! Dense symmetric linear algebra: Cholesky factorizations (plain and pivoted
//! partial), symmetric eigen-decomposition, Eckart–Young truncation, norms,
//! condition numbers and the diagonal-plus-low-rank Woodbury solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Relative tolerance for accepting an input as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// A Cholesky pivot below `PIVOT_FLOOR * max(diag)` counts as a breakdown.
pub const PIVOT_FLOOR: f64 = 1e-12;
/// Jitter added on retry, relative to the mean diagonal.
pub const JITTER_SCALE: f64 = 1e-10;
/// Partial Cholesky skips pivots whose residual diagonal is below this
/// fraction of the largest diagonal entry.
pub const PARTIAL_PIVOT_FLOOR: f64 = 1e-10;

/// A real symmetric matrix.
///
/// Construction symmetrizes the input as `(A + Aᵀ)/2` after checking that it
/// is symmetric to [`SYMMETRY_TOL`] relative to its largest entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidShape(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without the tolerance check. Used for matrices that are
    /// symmetric by construction up to accumulated roundoff.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "symmetrized needs a square matrix");
        let mut s = m;
        let n = s.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        SymMatrix(s)
    }

    /// Builds the matrix from its lower triangle; `f(i, j)` is called for `i >= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.0.diagonal()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.0.diagonal().max()
    }

    pub fn mean_diagonal(&self) -> f64 {
        self.0.diagonal().mean()
    }

    /// Principal submatrix on `idx` (rows and columns in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |i, j| self.0[(idx[i], idx[j])])
    }

    /// Columns `idx` of the full matrix (n × |idx|).
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        self.0.select_columns(idx)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// `self + c I`
    pub fn add_diagonal(&self, c: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += c;
        }
        SymMatrix(m)
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix(&self.0 * c)
    }
}

impl AsRef<DMatrix<f64>> for SymMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Frobenius norm of `a - b`.
pub fn frobenius_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Cholesky

/// Lower-triangular factor `L` with `L Lᵀ = A + jitter·I`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Jitter that had to be added to the diagonal (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L X = B`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// Solves `Lᵀ X = B`.
    pub fn solve_upper(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .tr_solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// Solves `(L Lᵀ) X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.solve_lower_vec(b);
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `log det(L Lᵀ)`.
    pub fn logdet(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }
}

/// Cholesky factorization with the crate's jitter policy: if a pivot falls
/// below `1e-12·max(diag)`, retry once with `1e-10·mean(diag)` added to the
/// diagonal, and fail if the retry breaks down too.
pub fn cholesky(a: &SymMatrix) -> Result<CholeskyFactor> {
    let n = a.n();
    if n == 0 {
        return Ok(CholeskyFactor { l: DMatrix::zeros(0, 0), jitter: 0.0 });
    }
    let max_diag = a.max_diagonal();
    if !(max_diag > 0.0) {
        return Err(Error::NotPositiveDefinite { pivot: 0, value: max_diag });
    }
    let floor = PIVOT_FLOOR * max_diag;
    match factor_with_floor(a.as_matrix(), 0.0, floor) {
        Ok(l) => Ok(CholeskyFactor { l, jitter: 0.0 }),
        Err(_) => {
            let jitter = JITTER_SCALE * a.mean_diagonal().abs();
            let l = factor_with_floor(a.as_matrix(), jitter, floor)
                .map_err(|(pivot, value)| Error::NotPositiveDefinite { pivot, value })?;
            log::debug!("cholesky: added jitter {jitter:e}");
            Ok(CholeskyFactor { l, jitter })
        }
    }
}

/// Cholesky without any jitter; breakdown is any pivot `<= floor`.
pub fn cholesky_strict(a: &SymMatrix, floor: f64) -> Result<CholeskyFactor> {
    factor_with_floor(a.as_matrix(), 0.0, floor)
        .map(|l| CholeskyFactor { l, jitter: 0.0 })
        .map_err(|(pivot, value)| Error::NotPositiveDefinite { pivot, value })
}

fn factor_with_floor(
    a: &DMatrix<f64>,
    jitter: f64,
    floor: f64,
) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let n = a.nrows();
    // Upper factor R = Lᵀ stored column-major: column j of R holds row j of L,
    // so the inner products below run over contiguous memory.
    let mut r = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let s = {
            let col = r.column(j);
            let head = col.rows(0, j);
            a[(j, j)] + jitter - head.dot(&head)
        };
        if !(s > floor) {
            return Err((j, s));
        }
        let d = s.sqrt();
        r[(j, j)] = d;
        for i in (j + 1)..n {
            let dot = {
                let ci = r.column(i);
                let cj = r.column(j);
                ci.rows(0, j).dot(&cj.rows(0, j))
            };
            r[(j, i)] = (a[(i, j)] - dot) / d;
        }
    }
    Ok(r.transpose())
}

// ---------------------------------------------------------------------------
// Pivoted partial Cholesky

/// How the next pivot is chosen.
#[derive(Clone, Debug)]
pub enum PivotRule {
    /// Largest residual diagonal, lowest index on ties.
    Greedy,
    /// A prescribed order. Indices whose residual diagonal is numerically zero
    /// are skipped.
    Order(Vec<usize>),
}

/// When a partial factorization terminates.
#[derive(Clone, Copy, Debug)]
pub enum StopRule {
    /// Stop after this many pivots.
    Rank(usize),
    /// Stop once the largest residual diagonal drops below the tolerance.
    MaxResidualDiag(f64),
    /// Stop once `‖A − LLᵀ‖_F` drops below the tolerance.
    Frobenius(f64),
}

/// Result of a partial Cholesky factorization `A ≈ L Lᵀ`.
#[derive(Clone, Debug)]
pub struct PartialCholesky {
    /// Selected indices, in selection order.
    pub pivots: Vec<usize>,
    /// n × k factor.
    pub factor: DMatrix<f64>,
    /// Diagonal of the residual `A − LLᵀ`.
    pub residual_diag: DVector<f64>,
    /// `‖A − LLᵀ‖_F`, tracked incrementally.
    pub residual_frobenius: f64,
}

impl PartialCholesky {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn approximation(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }
}

/// Greedy pivoted partial Cholesky.
pub fn pivoted_partial_cholesky(a: &SymMatrix, stop: StopRule) -> PartialCholesky {
    partial_cholesky(a, &PivotRule::Greedy, stop)
}

/// Partial Cholesky factorization with a configurable pivot rule.
///
/// The Frobenius residual is updated via
/// `‖R − llᵀ‖² = ‖R‖² − 2 lᵀRl + ‖l‖⁴`, which costs one matrix-vector
/// product per step.
pub fn partial_cholesky(a: &SymMatrix, rule: &PivotRule, stop: StopRule) -> PartialCholesky {
    let n = a.n();
    let am = a.as_matrix();
    let mut d = a.diagonal();
    let max_diag0 = if n > 0 { d.max() } else { 0.0 };
    let negligible = PARTIAL_PIVOT_FLOOR * max_diag0.max(0.0);
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let mut res2 = am.norm_squared();
    let mut order_pos = 0usize;

    loop {
        let k = cols.len();
        if k == n {
            break;
        }
        match stop {
            StopRule::Rank(m) if k >= m => break,
            StopRule::MaxResidualDiag(tol) if n == 0 || d.max() < tol => break,
            StopRule::Frobenius(tol) if res2.max(0.0).sqrt() < tol => break,
            _ => {}
        }
        let pivot = match rule {
            PivotRule::Greedy => {
                let mut best: Option<(usize, f64)> = None;
                for (i, &v) in d.iter().enumerate() {
                    if best.map_or(true, |(_, b)| v > b) {
                        best = Some((i, v));
                    }
                }
                match best {
                    Some((i, v)) if v > negligible => Some(i),
                    _ => None,
                }
            }
            PivotRule::Order(seq) => {
                let mut found = None;
                while order_pos < seq.len() {
                    let i = seq[order_pos];
                    order_pos += 1;
                    if i < n && d[i] > negligible && !pivots.contains(&i) {
                        found = Some(i);
                        break;
                    }
                }
                found
            }
        };
        let Some(p) = pivot else { break };

        let mut l = am.column(p).clone_owned();
        for c in &cols {
            l.axpy(-c[p], c, 1.0);
        }
        let scale = d[p].sqrt();
        l /= scale;

        // lᵀ R l with R = A − Σ c cᵀ
        let al = am * &l;
        let mut rl = al.dot(&l);
        for c in &cols {
            let t = c.dot(&l);
            rl -= t * t;
        }
        let ll = l.norm_squared();
        res2 = res2 - 2.0 * rl + ll * ll;

        for i in 0..n {
            d[i] -= l[i] * l[i];
        }
        d[p] = 0.0;
        pivots.push(p);
        cols.push(l);
    }

    let factor = if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    PartialCholesky {
        pivots,
        factor,
        residual_diag: d,
        residual_frobenius: res2.max(0.0).sqrt(),
    }
}

// ---------------------------------------------------------------------------
// Spectral decomposition

/// Eigenvectors (columns) and eigenvalues sorted in nonincreasing order.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl SpectralPair {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Leading `m` eigenpairs.
    pub fn truncate(&self, m: usize) -> SpectralPair {
        SpectralPair {
            vectors: self.vectors.columns(0, m).clone_owned(),
            values: self.values.rows(0, m).clone_owned(),
        }
    }

    /// `U diag(d) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, v) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*v);
        }
        scaled * self.vectors.transpose()
    }
}

/// Symmetric eigen-decomposition (Householder tridiagonalization followed by
/// implicit QR), eigenvalues sorted nonincreasing.
pub fn eig_sym(a: &SymMatrix) -> Result<SpectralPair> {
    let n = a.n();
    let max_iter = 1000 * n.max(1);
    let eig = SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, max_iter)
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = eig.eigenvectors.select_columns(&order);
    Ok(SpectralPair { vectors, values })
}

/// `sqrt(Σ_{i>=m} values[i]²)`: the Frobenius error of the best rank-m
/// approximation given the full spectrum.
pub fn tail_energy(values: &[f64], m: usize) -> f64 {
    values.iter().skip(m).map(|v| v * v).sum::<f64>().sqrt()
}

/// Best rank-m approximation `U_m D_m U_mᵀ` (Eckart–Young).
pub fn best_rank_m(a: &SymMatrix, m: usize) -> Result<SymMatrix> {
    if m == 0 || m > a.n() {
        return Err(Error::InvalidArgument(format!(
            "rank {m} outside 1..={}",
            a.n()
        )));
    }
    let eig = eig_sym(a)?;
    Ok(SymMatrix::symmetrized(eig.truncate(m).reconstruct()))
}

// ---------------------------------------------------------------------------
// Norms and conditioning

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub spectral: f64,
}

/// Frobenius and spectral norm; the spectral norm is the largest absolute
/// eigenvalue from a full eigen-decomposition.
pub fn norms(a: &SymMatrix) -> Result<Norms> {
    let eig = eig_sym(a)?;
    let spectral = eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(Norms { frobenius: a.frobenius(), spectral })
}

/// `λ_max / λ_min` for a positive definite matrix.
pub fn condition_number(a: &SymMatrix) -> Result<f64> {
    let eig = eig_sym(a)?;
    condition_from_values(eig.values.as_slice())
}

/// Condition number from eigenvalues sorted nonincreasing.
pub fn condition_from_values(values: &[f64]) -> Result<f64> {
    let (Some(&hi), Some(&lo)) = (values.first(), values.last()) else {
        return Err(Error::InvalidShape("empty spectrum".into()));
    };
    if !(lo > 0.0) {
        return Err(Error::SingularMatrix { min_eigenvalue: lo });
    }
    Ok(hi / lo)
}

/// Condition number with the smallest eigenvalue clamped at
/// `f64::EPSILON·λ_max`, so numerically singular matrices report roughly the
/// reciprocal machine precision instead of failing.
pub fn condition_number_saturating(a: &SymMatrix) -> Result<f64> {
    let eig = eig_sym(a)?;
    let hi = eig.values[0];
    if !(hi > 0.0) {
        return Err(Error::SingularMatrix { min_eigenvalue: hi });
    }
    let lo = eig.values[eig.len() - 1].max(f64::EPSILON * hi);
    Ok(hi / lo)
}

/// Largest absolute eigenvalue of a symmetric matrix by Lanczos iteration
/// with full reorthogonalization. Runs `min(n, steps)` steps from a fixed
/// pseudo-random start vector, so the result is deterministic.
pub fn spectral_norm_lanczos(a: &DMatrix<f64>, steps: usize) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let k = steps.min(n).max(1);
    let mut rng = crate::rng::seeded(0x1a2c_2c05);
    let mut q = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut alpha = Vec::with_capacity(k);
    let mut beta: Vec<f64> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut w = a * &q;
        let a_j = w.dot(&q);
        alpha.push(a_j);
        basis.push(q.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let b_j = w.norm();
        if basis.len() == k || b_j <= 1e-13 * a_j.abs().max(1e-300) {
            break;
        }
        beta.push(b_j);
        q = w / b_j;
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let vals = SymmetricEigen::new(t).eigenvalues;
    vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Woodbury

/// The inverse of `D + U diag(d²) Uᵀ` for a positive diagonal `D`, held in
/// factored form. With `D = σ²I` this is the noise-plus-low-rank covariance of
/// the marginal GP likelihood.
///
/// Internally `F = U diag(d)` and `M = I + Fᵀ D⁻¹ F` (m × m) so that
/// `Σ⁻¹ = D⁻¹ − D⁻¹ F M⁻¹ Fᵀ D⁻¹` and `log det Σ = Σ log Dᵢ + log det M`.
#[derive(Clone, Debug)]
pub struct WoodburyInverse {
    diag: DVector<f64>,
    factor: DMatrix<f64>,
    inner: CholeskyFactor,
    logdet: f64,
}

impl WoodburyInverse {
    /// `(U diag(d²) Uᵀ + σ² I)⁻¹`.
    pub fn new(u: &DMatrix<f64>, d2: &DVector<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance {sigma2} must be positive")));
        }
        Self::with_diagonal(u, d2, DVector::from_element(u.nrows(), sigma2))
    }

    /// `(U diag(d²) Uᵀ + diag(D))⁻¹`.
    pub fn with_diagonal(u: &DMatrix<f64>, d2: &DVector<f64>, diag: DVector<f64>) -> Result<Self> {
        if u.ncols() != d2.len() {
            return Err(Error::DimensionMismatch(format!(
                "factor has {} columns but {} weights",
                u.ncols(),
                d2.len()
            )));
        }
        if let Some(v) = d2.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("low-rank weight {v} must be nonnegative")));
        }
        let mut f = u.clone();
        for (j, w) in d2.iter().enumerate() {
            f.column_mut(j).scale_mut(w.sqrt());
        }
        Self::from_factor(f, diag)
    }

    /// `(F Fᵀ + diag(D))⁻¹` for an arbitrary n × m factor `F`.
    pub fn from_factor(factor: DMatrix<f64>, diag: DVector<f64>) -> Result<Self> {
        if factor.nrows() != diag.len() {
            return Err(Error::DimensionMismatch(format!(
                "factor has {} rows but diagonal has {} entries",
                factor.nrows(),
                diag.len()
            )));
        }
        if let Some(v) = diag.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("diagonal entry {v} must be positive")));
        }
        let m = factor.ncols();
        let mut scaled = factor.clone();
        for (i, dv) in diag.iter().enumerate() {
            scaled.row_mut(i).scale_mut(1.0 / dv);
        }
        let mut inner = factor.transpose() * &scaled;
        for i in 0..m {
            inner[(i, i)] += 1.0;
        }
        let inner = cholesky(&SymMatrix::symmetrized(inner))?;
        let logdet = diag.iter().map(|v| v.ln()).sum::<f64>() + inner.logdet();
        Ok(WoodburyInverse { diag, factor, inner, logdet })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diag
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {len} for an operator of order {}",
                self.n()
            )));
        }
        Ok(())
    }

    /// `Σ⁻¹ v` in O(nm).
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v.len())?;
        let dv = v.component_div(&self.diag);
        let t = self.factor.tr_mul(&dv);
        let s = self.inner.solve_vec(&t);
        let corr = (&self.factor * s).component_div(&self.diag);
        Ok(dv - corr)
    }

    /// `Σ⁻¹ B` column by column.
    pub fn apply_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_len(b.nrows())?;
        let mut db = b.clone();
        for (i, dv) in self.diag.iter().enumerate() {
            db.row_mut(i).scale_mut(1.0 / dv);
        }
        let t = self.factor.tr_mul(&db);
        let s = self.inner.solve(&t);
        let mut corr = &self.factor * s;
        for (i, dv) in self.diag.iter().enumerate() {
            corr.row_mut(i).scale_mut(1.0 / dv);
        }
        Ok(db - corr)
    }

    /// `Σ v`.
    pub fn forward(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v.len())?;
        let t = self.factor.tr_mul(v);
        Ok(v.component_mul(&self.diag) + &self.factor * t)
    }

    /// `vᵀ Σ⁻¹ v`.
    pub fn quad_form(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_len(v.len())?;
        let dv = v.component_div(&self.diag);
        let t = self.factor.tr_mul(&dv);
        let y = self.inner.solve_lower_vec(&t);
        Ok(v.dot(&dv) - y.norm_squared())
    }

    /// `log det Σ` of the represented covariance (the inverse has the
    /// negated value).
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Dense `Σ`; for tests and small problems.
    pub fn dense_covariance(&self) -> DMatrix<f64> {
        let mut s = &self.factor * self.factor.transpose();
        for i in 0..self.n() {
            s[(i, i)] += self.diag[i];
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::seeded(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn random_pd(n: usize, seed: u64) -> SymMatrix {
        let g = random_matrix(n, n, seed);
        SymMatrix::symmetrized(&g * g.transpose() + DMatrix::identity(n, n) * (n as f64))
    }

    fn k2(off: f64) -> SymMatrix {
        SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, off, off, 1.0])).unwrap()
    }

    fn orthonormal(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        random_matrix(n, m, seed).qr().q()
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SymMatrix::new(m).is_err());
        assert!(SymMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn cholesky_identity() {
        let f = cholesky(&SymMatrix::identity(2)).unwrap();
        assert_eq!(f.l(), &DMatrix::<f64>::identity(2, 2));
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn cholesky_near_singular_two_by_two() {
        let a = k2(0.995);
        let f = cholesky(&a).unwrap();
        assert_eq!(f.jitter(), 0.0);
        assert!(frobenius_diff(&f.reconstruct(), a.as_matrix()) < 1e-12);
    }

    #[test]
    fn cholesky_random_pd_reconstructs() {
        let a = random_pd(20, 3);
        let f = cholesky(&a).unwrap();
        assert!(frobenius_diff(&f.reconstruct(), a.as_matrix()) < 1e-10 * a.frobenius());
    }

    #[test]
    fn cholesky_jitter_then_failure() {
        // exactly singular PSD: the retry with jitter succeeds
        let a = k2(1.0);
        let f = cholesky(&a).unwrap();
        assert!(f.jitter() > 0.0);
        // indefinite: both attempts fail
        let b = k2(2.0);
        assert!(matches!(cholesky(&b), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn pivoted_picks_largest_diagonal() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let pc = pivoted_partial_cholesky(&a, StopRule::Rank(1));
        assert_eq!(pc.pivots, vec![0]);
        let pc = pivoted_partial_cholesky(&a, StopRule::Rank(3));
        assert_eq!(pc.pivots, vec![0, 2, 1]);
    }

    #[test]
    fn pivoted_tie_break_lowest_index() {
        let a = SymMatrix::from_diagonal(&[1.0, 2.0, 2.0]);
        let pc = pivoted_partial_cholesky(&a, StopRule::Rank(1));
        assert_eq!(pc.pivots, vec![1]);
    }

    #[test]
    fn pivoted_stops_at_exact_rank() {
        let g = random_matrix(10, 2, 11);
        let a = SymMatrix::symmetrized(&g * g.transpose());
        let pc = pivoted_partial_cholesky(&a, StopRule::MaxResidualDiag(1e-10));
        assert_eq!(pc.rank(), 2);
        assert!(frobenius_diff(&pc.approximation(), a.as_matrix()) < 1e-10);
    }

    #[test]
    fn pivoted_rank_zero_for_large_tolerance() {
        let a = random_pd(5, 1);
        let pc = pivoted_partial_cholesky(&a, StopRule::MaxResidualDiag(1e9));
        assert_eq!(pc.rank(), 0);
        assert_eq!(pc.factor.ncols(), 0);
    }

    #[test]
    fn pivoted_full_rank_matches_cholesky() {
        let a = random_pd(12, 5);
        let pc = pivoted_partial_cholesky(&a, StopRule::Rank(12));
        let f = cholesky(&a).unwrap();
        assert!(frobenius_diff(&pc.approximation(), &f.reconstruct()) < 1e-10 * a.frobenius());
    }

    #[test]
    fn tracked_frobenius_matches_dense_residual() {
        let g = random_matrix(30, 30, 8);
        let a = SymMatrix::symmetrized(&g * g.transpose());
        for k in [1, 5, 17] {
            let pc = pivoted_partial_cholesky(&a, StopRule::Rank(k));
            let dense = frobenius_diff(a.as_matrix(), &pc.approximation());
            assert_relative_eq!(pc.residual_frobenius, dense, max_relative = 1e-8);
        }
        let order: Vec<usize> = (0..30).rev().collect();
        let pc = partial_cholesky(&a, &PivotRule::Order(order), StopRule::Rank(7));
        assert_eq!(pc.pivots, (23..30).rev().collect::<Vec<_>>());
        let dense = frobenius_diff(a.as_matrix(), &pc.approximation());
        assert_relative_eq!(pc.residual_frobenius, dense, max_relative = 1e-8);
    }

    #[test]
    fn pivoted_error_dominated_by_eckart_young() {
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let a = SymMatrix::from_fn(n, |i, j| (-(xs[i] - xs[j]).powi(2)).exp());
        let pc = pivoted_partial_cholesky(&a, StopRule::Rank(10));
        let err = frobenius_diff(a.as_matrix(), &pc.approximation());
        let eig = eig_sym(&a).unwrap();
        let ey = tail_energy(eig.values.as_slice(), 10);
        assert!(err >= ey - 1e-10, "{err} < {ey}");
    }

    #[test]
    fn eig_diagonal() {
        let e = eig_sym(&SymMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(e.values.as_slice(), &[2.0, 1.0]);
        assert_relative_eq!(e.vectors[(1, 0)].abs(), 1.0);
        assert_relative_eq!(e.vectors[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn eig_two_by_two_kernel() {
        let e = eig_sym(&k2(0.995)).unwrap();
        assert_relative_eq!(e.values[0], 1.995, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 0.005, epsilon = 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_symmetric() {
        let g = random_matrix(50, 50, 2);
        let a = SymMatrix::symmetrized(&g + g.transpose());
        let e = eig_sym(&a).unwrap();
        assert!(frobenius_diff(&e.reconstruct(), a.as_matrix()) < 1e-9 * a.frobenius());
        assert!(e.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let gram = e.vectors.transpose() * &e.vectors;
        assert!(frobenius_diff(&gram, &DMatrix::identity(50, 50)) < 1e-10);
    }

    #[test]
    fn best_rank_cases() {
        let a = random_pd(30, 4);
        assert!(frobenius_diff(best_rank_m(&a, 30).unwrap().as_matrix(), a.as_matrix()) < 1e-9 * a.frobenius());
        let d = SymMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let b = best_rank_m(&d, 1).unwrap();
        assert!(frobenius_diff(b.as_matrix(), SymMatrix::from_diagonal(&[3.0, 0.0, 0.0]).as_matrix()) < 1e-12);
        // Frobenius error equals the eigenvalue tail
        let eig = eig_sym(&a).unwrap();
        for m in [1, 7, 20] {
            let err2 = frobenius_diff(best_rank_m(&a, m).unwrap().as_matrix(), a.as_matrix()).powi(2);
            let tail2 = tail_energy(eig.values.as_slice(), m).powi(2);
            assert_relative_eq!(err2, tail2, max_relative = 1e-8);
        }
        assert!(best_rank_m(&d, 0).is_err());
        assert!(best_rank_m(&d, 4).is_err());
    }

    #[test]
    fn condition_numbers() {
        assert_relative_eq!(condition_number(&SymMatrix::identity(4)).unwrap(), 1.0, epsilon = 1e-12);
        let c = condition_number(&k2(0.995)).unwrap();
        assert_relative_eq!(c, 399.0, max_relative = 1e-9);
        assert!(matches!(
            condition_number(&k2(1.0)),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn norms_of_diagonal() {
        let d = SymMatrix::from_diagonal(&[-3.0, 2.0]);
        let n = norms(&d).unwrap();
        assert_relative_eq!(n.spectral, 3.0, epsilon = 1e-12);
        assert_relative_eq!(n.frobenius, 13f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn lanczos_matches_exact_spectral_norm() {
        let g = random_matrix(120, 40, 9);
        let a = SymMatrix::symmetrized(&g * g.transpose());
        let exact = norms(&a).unwrap().spectral;
        assert_relative_eq!(spectral_norm_lanczos(a.as_matrix(), 80), exact, max_relative = 1e-9);
    }

    #[test]
    fn sensitivity_of_the_inverse() {
        let off = |t: f64| (-t * 0.01f64).exp();
        let k = k2(off(0.5));
        let knew = k2(off(0.75));
        let ki = k.as_matrix().clone().try_inverse().unwrap();
        let kni = knew.as_matrix().clone().try_inverse().unwrap();
        assert!((ki[(0, 0)] - 100.5008).abs() < 1e-3);
        // closed form −a/(1−a²) with a = e^{−0.005}
        assert!((ki[(0, 1)] + 99.99958).abs() < 1e-3);
        assert!((kni[(0, 0)] - 67.1679).abs() < 1e-3);
        assert!((kni[(0, 1)] + 66.6660).abs() < 1e-3);
        assert!((frobenius_diff(k.as_matrix(), knew.as_matrix()) - 0.0035).abs() < 1e-4);
        assert!((frobenius_diff(&ki, &kni) - 66.6665).abs() < 1e-2);
    }

    #[test]
    fn woodbury_pure_noise() {
        let u = orthonormal(6, 2, 1);
        let w = WoodburyInverse::new(&u, &DVector::zeros(2), 0.5).unwrap();
        let v = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let got = w.apply(&v).unwrap();
        assert!((got - &v / 0.5).norm() < 1e-14);
    }

    #[test]
    fn woodbury_identity_factor() {
        let n = 5;
        let (k, s2) = (3.0, 0.25);
        let w = WoodburyInverse::new(&DMatrix::identity(n, n), &DVector::from_element(n, k), s2).unwrap();
        let v = DVector::from_fn(n, |i, _| (i as f64).sin());
        assert!((w.apply(&v).unwrap() - &v / (k + s2)).norm() < 1e-13);
        assert_relative_eq!(w.logdet(), n as f64 * (k + s2).ln(), epsilon = 1e-12);
    }

    #[test]
    fn woodbury_dimension_mismatch() {
        let u = orthonormal(6, 2, 1);
        assert!(matches!(
            WoodburyInverse::new(&u, &DVector::zeros(3), 1.0),
            Err(Error::DimensionMismatch(_))
        ));
        let w = WoodburyInverse::new(&u, &DVector::zeros(2), 1.0).unwrap();
        assert!(w.apply(&DVector::zeros(5)).is_err());
        assert!(WoodburyInverse::new(&u, &DVector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn woodbury_matches_dense_inverse() {
        let (n, m) = (200, 20);
        let u = orthonormal(n, m, 21);
        let mut rng = crate::rng::seeded(5);
        let d2 = DVector::from_fn(m, |_, _| 1.0 + 10.0 * rand::Rng::random::<f64>(&mut rng));
        let s2 = 0.3;
        let w = WoodburyInverse::new(&u, &d2, s2).unwrap();
        let dense = w.dense_covariance();
        let inv = dense.clone().try_inverse().unwrap();
        for t in 0..100 {
            let v = random_matrix(n, 1, 100 + t).column(0).clone_owned();
            let got = w.apply(&v).unwrap();
            let want = &inv * &v;
            assert!((&got - &want).norm() < 1e-8 * want.norm());
            let back = w.forward(&got).unwrap();
            assert!((&back - &v).norm() < 1e-8 * v.norm());
            assert_relative_eq!(w.quad_form(&v).unwrap(), v.dot(&want), max_relative = 1e-8);
        }
        let ld = cholesky(&SymMatrix::symmetrized(dense)).unwrap().logdet();
        assert!((w.logdet() - ld).abs() < 1e-8);
        let b = random_matrix(n, 3, 77);
        assert!((w.apply_matrix(&b).unwrap() - &inv * &b).norm() < 1e-8 * (&inv * &b).norm());
    }

    #[test]
    fn woodbury_general_diagonal() {
        let n = 40;
        let f = random_matrix(n, 4, 3);
        let diag = DVector::from_fn(n, |i, _| 0.1 + i as f64 * 0.05);
        let w = WoodburyInverse::from_factor(f, diag).unwrap();
        let dense = w.dense_covariance();
        let v = random_matrix(n, 1, 4).column(0).clone_owned();
        let want = dense.clone().try_inverse().unwrap() * &v;
        assert!((w.apply(&v).unwrap() - &want).norm() < 1e-9 * want.norm());
        let ld = cholesky(&SymMatrix::symmetrized(dense)).unwrap().logdet();
        assert!((w.logdet() - ld).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn spectral_pair_reconstructs(n in 2usize..25, seed in any::<u64>()) {
                let g = random_matrix(n, n, seed);
                let a = SymMatrix::symmetrized(&g + g.transpose());
                let e = eig_sym(&a).unwrap();
                prop_assert!(frobenius_diff(&e.reconstruct(), a.as_matrix()) < 1e-9 * a.frobenius());
            }

            #[test]
            fn woodbury_round_trip(n in 3usize..60, m in 1usize..4, s2 in 0.01f64..5.0, seed in any::<u64>()) {
                let m = m.min(n);
                let u = orthonormal(n, m, seed);
                let d2 = DVector::from_fn(m, |i, _| 0.5 + i as f64);
                let w = WoodburyInverse::new(&u, &d2, s2).unwrap();
                let v = random_matrix(n, 1, seed ^ 0xff).column(0).clone_owned();
                let back = w.forward(&w.apply(&v).unwrap()).unwrap();
                prop_assert!((&back - &v).norm() < 1e-8 * v.norm());
            }
        }
    }
}
