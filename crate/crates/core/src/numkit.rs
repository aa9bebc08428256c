//! Dense linear-algebra substrate.
//!
//! [`Mat`] wraps a column-major `nalgebra::DMatrix<f64>` and refuses
//! non-finite entries and zero-row shapes at every public constructor.
//! Vectors are plain [`Vector`]s.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Default numerical-rank threshold, relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative Frobenius asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense real matrix, column-major, at least one row, all entries finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat(DMatrix<f64>);

impl Mat {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Mat(m))
    }

    /// Wraps a matrix produced by arithmetic on already-validated inputs.
    pub(crate) fn wrap(m: DMatrix<f64>) -> Self {
        debug_assert!(m.nrows() > 0);
        Mat(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// Builds a matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimMismatch {
                expected: rows,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = columns.iter().flatten().copied().collect();
        Self::from_matrix(DMatrix::from_column_slice(rows, columns.len(), &flat))
    }

    pub fn from_vectors(rows: usize, columns: &[Vector]) -> Result<Self> {
        let cols: Vec<Vec<f64>> = columns.iter().map(|c| c.as_slice().to_vec()).collect();
        Self::from_columns(rows, &cols)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimMismatch {
                expected: ncols,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_matrix(DMatrix::from_row_slice(rows.len(), ncols, &flat))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn column(&self, j: usize) -> Vector {
        self.0.column(j).into_owned()
    }

    pub fn columns(&self) -> impl Iterator<Item = Vector> + '_ {
        self.0.column_iter().map(|c| c.into_owned())
    }

    /// Column lists in the fixture layout (outer index = column).
    pub fn to_column_lists(&self) -> Vec<Vec<f64>> {
        self.0.column_iter().map(|c| c.iter().copied().collect()).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::wrap(self.0.transpose())
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols() != other.rows() {
            return Err(Error::DimMismatch {
                expected: self.cols(),
                got: other.rows(),
            });
        }
        Ok(Mat::wrap(&self.0 * &other.0))
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        if self.cols() != v.len() {
            return Err(Error::DimMismatch {
                expected: self.cols(),
                got: v.len(),
            });
        }
        Ok(&self.0 * v)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `‖A − Aᵀ‖_F / ‖A‖_F`, zero for the zero matrix; infinite if not square.
    pub fn asymmetry(&self) -> f64 {
        if self.rows() != self.cols() {
            return f64::INFINITY;
        }
        let scale = self.0.norm();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.0 - self.0.transpose()).norm() / scale
    }
}

/// `(A + Aᵀ) / 2`.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum of a nonempty matrix")
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Mat {
        let v = self.eigenvectors.as_matrix();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        Mat::wrap(v * d * v.transpose())
    }
}

/// Thin SVD `A = U Σ Vᵀ` with `σ` nonincreasing.
///
/// Backed by faer: nalgebra's bidiagonal SVD loses accuracy (errors near
/// 1e-2) on exactly rank-deficient inputs, which redundant frames produce.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub(crate) fn thin_svd(a: &DMatrix<f64>) -> Svd {
    let svd = to_faer(a).thin_svd().expect("SVD of a finite matrix converges");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    Svd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        sigma: (0..s.nrows()).map(|k| s[k]).collect(),
        v_t: DMatrix::from_fn(v.ncols(), v.nrows(), |i, j| v[(j, i)]),
    }
}

/// Singular values, nonincreasing.
pub(crate) fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("SVD of a finite matrix converges")
}

/// Numerical rank: singular values above `rank_tol × σ_max`.
pub fn numerical_rank(a: &Mat, rank_tol: f64) -> usize {
    if a.cols() == 0 {
        return 0;
    }
    let sv = singular_values(&a.0);
    let smax = sv[0];
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}

/// Orthonormal basis for the column space of `vectors`.
///
/// The span is taken from the SVD (numerical rank at `rank_tol` relative to
/// the largest singular value). The returned basis is canonicalized by
/// pivoted Gram–Schmidt on the columns of the span projector, so an already
/// orthonormal coordinate basis comes back unchanged.
pub fn orthonormalize(vectors: &Mat, rank_tol: f64) -> Result<Mat> {
    if vectors.cols() == 0 {
        return Err(Error::InvalidArgument("orthonormalize needs at least one column".into()));
    }
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rank_tol must be positive, got {rank_tol}")));
    }
    let m = vectors.rows();
    if vectors.0.column_iter().all(|c| c.norm() <= rank_tol) {
        return Err(Error::AllZero);
    }

    let svd = thin_svd(&vectors.0);
    let smax = svd.sigma[0];
    let u = svd.u;
    let keep: Vec<usize> = svd
        .sigma
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rank_tol * smax)
        .map(|(k, _)| k)
        .collect();
    let rank = keep.len();
    let ur = u.select_columns(keep.iter());
    let projector = &ur * ur.transpose();

    let mut residuals: Vec<DVector<f64>> =
        projector.column_iter().map(|c| c.into_owned()).collect();
    let mut used = vec![false; m];
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut pick = None;
        let mut best = -1.0;
        for (k, r) in residuals.iter().enumerate() {
            if used[k] {
                continue;
            }
            let n = r.norm();
            if n > best {
                best = n;
                pick = Some(k);
            }
        }
        let k = pick.expect("rank never exceeds the ambient dimension");
        used[k] = true;
        let mut q = residuals[k].clone();
        // second pass keeps the basis orthonormal to machine precision
        for b in &basis {
            let c = b.dot(&q);
            q.axpy(-c, b, 1.0);
        }
        q /= q.norm();
        for (j, r) in residuals.iter_mut().enumerate() {
            if !used[j] {
                let c = q.dot(r);
                r.axpy(-c, &q, 1.0);
            }
        }
        basis.push(q);
    }
    Ok(Mat::wrap(DMatrix::from_columns(&basis)))
}

/// Full symmetric eigendecomposition, eigenvalues ascending.
pub fn sym_eig(s: &Mat) -> Result<Spectrum> {
    if s.rows() != s.cols() {
        return Err(Error::DimMismatch {
            expected: s.rows(),
            got: s.cols(),
        });
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(symmetrize(&s.0));
    let mut order: Vec<usize> = (0..s.rows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Mat::wrap(eigenvectors),
    })
}

/// Cholesky factorization of a symmetric positive definite matrix, reusable
/// across right-hand sides.
#[derive(Clone, Debug)]
pub struct SpdSolver {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SpdSolver {
    /// Definiteness requires `λ_min > 1e-12 · λ_max`.
    pub fn new(s: &Mat) -> Result<Self> {
        let spec = sym_eig(s)?;
        let (min, max) = (spec.min(), spec.max());
        if !(max > 0.0) || min <= 1e-12 * max {
            return Err(Error::NotPD { min, max });
        }
        let matrix = symmetrize(&s.0);
        let chol = Cholesky::new(matrix.clone()).ok_or(Error::NotPD { min, max })?;
        Ok(SpdSolver { matrix, chol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// One Cholesky solve followed by one step of iterative refinement.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        if b.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        let mut x = self.chol.solve(b);
        let r = b - &self.matrix * &x;
        x += self.chol.solve(&r);
        Ok(x)
    }
}

pub fn solve_spd(s: &Mat, b: &Vector) -> Result<Vector> {
    SpdSolver::new(s)?.solve(b)
}

/// Largest singular value.
pub fn operator_norm(a: &Mat) -> f64 {
    if a.cols() == 0 {
        return 0.0;
    }
    singular_values(&a.0)[0]
}

pub(crate) fn op_norm(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0.0;
    }
    singular_values(a)[0]
}
