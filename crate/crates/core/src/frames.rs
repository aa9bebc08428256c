//! Classical finite frames: analysis/synthesis/frame operators, optimal
//! bounds, canonical duals.
//!
//! A [`Frame`] need not span the ambient space. Bounds, duals and the
//! Parseval test are all taken relative to the span of the vectors, with the
//! pseudo-inverse acting as zero on the orthogonal complement.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numkit::{self, symmetrize, Mat, Vector, DEFAULT_RANK_TOL};

/// Dual validation tolerance for [`least_squares_check`].
pub const DUAL_TOL: f64 = 1e-8;

/// Vectors of a frame stored as the columns of an `M × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    vectors: Mat,
    pub label: Option<String>,
}

/// Optimal bounds over the span.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub span_dim: usize,
}

#[allow(clippy::len_without_is_empty)]
impl Frame {
    pub fn new(vectors: Mat) -> Result<Self> {
        if vectors.cols() == 0 {
            return Err(Error::InvalidArgument("a frame needs at least one vector".into()));
        }
        Ok(Frame {
            vectors,
            label: None,
        })
    }

    pub fn from_columns(ambient_dim: usize, columns: &[Vec<f64>]) -> Result<Self> {
        Frame::new(Mat::from_columns(ambient_dim, columns)?)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn len(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vectors(&self) -> &Mat {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> Vector {
        self.vectors.column(j)
    }

    pub fn scaled(&self, factor: f64) -> Frame {
        Frame {
            vectors: Mat::wrap(self.vectors.as_matrix() * factor),
            label: self.label.clone(),
        }
    }

    fn span_svd(&self) -> Result<SpanSvd> {
        SpanSvd::new(self.vectors.as_matrix())
    }
}

/// Truncated SVD `F = U_r Σ_r V_rᵀ` at the default numerical rank.
pub(crate) struct SpanSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

impl SpanSvd {
    pub(crate) fn new(f: &DMatrix<f64>) -> Result<Self> {
        if f.ncols() == 0 {
            return Err(Error::AllZero);
        }
        let svd = numkit::thin_svd(f);
        let smax = svd.sigma[0];
        if !(smax > 0.0) {
            return Err(Error::AllZero);
        }
        let keep: Vec<usize> = (0..svd.sigma.len())
            .filter(|&k| svd.sigma[k] > DEFAULT_RANK_TOL * smax)
            .collect();
        let u = svd.u.select_columns(keep.iter());
        let v_t = svd.v_t.select_rows(keep.iter());
        let sigma = keep.iter().map(|&k| svd.sigma[k]).collect();
        Ok(SpanSvd { u, sigma, v_t })
    }

    pub(crate) fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub(crate) fn projector(&self) -> DMatrix<f64> {
        &self.u * self.u.transpose()
    }

    /// `U_r Σ_r⁻¹ V_rᵀ`, i.e. the columns `S⁺ f_j`.
    pub(crate) fn canonical_dual(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.sigma.iter().enumerate() {
            us.column_mut(k).scale_mut(1.0 / s);
        }
        us * &self.v_t
    }
}

/// `T_F f = {⟨f, f_i⟩}`.
pub fn analysis(frame: &Frame, f: &Vector) -> Result<Vector> {
    if f.len() != frame.ambient_dim() {
        return Err(Error::DimMismatch {
            expected: frame.ambient_dim(),
            got: f.len(),
        });
    }
    Ok(frame.vectors.as_matrix().tr_mul(f))
}

/// `T_F* c = Σ c_i f_i`.
pub fn synthesis(frame: &Frame, c: &Vector) -> Result<Vector> {
    frame.vectors.apply(c)
}

/// `S_F = F Fᵀ`.
pub fn frame_operator(frame: &Frame) -> Mat {
    let f = frame.vectors.as_matrix();
    Mat::wrap(symmetrize(&(f * f.transpose())))
}

pub fn frame_bounds(frame: &Frame) -> Result<FrameBounds> {
    let svd = frame.span_svd()?;
    // σ² are exactly the nonzero eigenvalues of F Fᵀ
    let lower = svd.sigma.iter().fold(f64::INFINITY, |a, s| a.min(s * s));
    let upper = svd.sigma.iter().fold(0.0f64, |a, s| a.max(s * s));
    Ok(FrameBounds {
        lower,
        upper,
        span_dim: svd.rank(),
    })
}

/// `{S_F⁺ f_i}` with the pseudo-inverse taken on `span(F)`.
pub fn canonical_dual(frame: &Frame) -> Result<Frame> {
    let svd = frame.span_svd()?;
    Ok(Frame {
        vectors: Mat::wrap(svd.canonical_dual()),
        label: frame.label.as_ref().map(|l| format!("{l} (canonical dual)")),
    })
}

/// Orthogonal projector onto `span(F)`.
pub fn span_projector(frame: &Frame) -> Result<Mat> {
    Ok(Mat::wrap(frame.span_svd()?.projector()))
}

/// Whether `S_F` equals the identity on `span(F)` to `tol` in operator norm.
pub fn is_parseval(frame: &Frame, tol: f64) -> bool {
    let Ok(svd) = frame.span_svd() else {
        return false;
    };
    let diff = frame_operator(frame).as_matrix() - svd.projector();
    numkit::op_norm(&diff) <= tol
}

/// Worst-case violation of `f = Σ⟨f, f_i⟩ g_i = Σ⟨f, g_i⟩ f_i` over unit `f`
/// in `span(F)`, measured as operator norms of the restricted residuals.
pub fn dual_residual(frame: &Frame, dual: &Frame) -> Result<f64> {
    if frame.ambient_dim() != dual.ambient_dim() || frame.len() != dual.len() {
        return Err(Error::ShapeMismatch(format!(
            "frame is {}x{}, dual is {}x{}",
            frame.ambient_dim(),
            frame.len(),
            dual.ambient_dim(),
            dual.len()
        )));
    }
    let p = frame.span_svd()?.projector();
    let f = frame.vectors.as_matrix();
    let g = dual.vectors.as_matrix();
    let id = DMatrix::identity(frame.ambient_dim(), frame.ambient_dim());
    let forward = (g * f.transpose() - &id) * &p;
    let backward = (f * g.transpose() - &id) * &p;
    Ok(numkit::op_norm(&forward).max(numkit::op_norm(&backward)))
}

/// Coefficient energies `(Σ|⟨f, S⁺f_i⟩|², Σ|⟨f, g_i⟩|²)` of the canonical dual
/// versus a supplied dual `g`.
pub fn least_squares_check(frame: &Frame, dual: &Frame, f: &Vector) -> Result<(f64, f64)> {
    let residual = dual_residual(frame, dual)?;
    if residual > DUAL_TOL {
        return Err(Error::NotADual(residual));
    }
    let canonical = canonical_dual(frame)?;
    let a = analysis(&canonical, f)?.norm_squared();
    let b = analysis(dual, f)?.norm_squared();
    Ok((a, b))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn std_basis() -> Frame {
        Frame::new(Mat::identity(2).unwrap()).unwrap()
    }

    #[test]
    fn analysis_examples() {
        assert_eq!(analysis(&std_basis(), &v(&[3.0, 5.0])).unwrap(), v(&[3.0, 5.0]));
        let doubled = Frame::from_columns(2, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(analysis(&doubled, &v(&[2.0, 7.0])).unwrap(), v(&[2.0, 2.0]));
        let c = analysis(&mercedes_benz(), &v(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(c, v(&[1.0, -0.5, -0.5]), epsilon = 1e-15);
        assert!(matches!(analysis(&std_basis(), &v(&[1.0])), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn synthesis_examples() {
        assert_eq!(synthesis(&std_basis(), &v(&[3.0, 5.0])).unwrap(), v(&[3.0, 5.0]));
        assert_eq!(synthesis(&mercedes_benz(), &Vector::zeros(3)).unwrap(), Vector::zeros(2));
        let x = synthesis(&mercedes_benz(), &v(&[1.0, -0.5, -0.5])).unwrap();
        assert_abs_diff_eq!(x, v(&[0.0, 1.5]), epsilon = 1e-15);
        assert!(synthesis(&std_basis(), &v(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn frame_operator_examples() {
        assert_eq!(frame_operator(&std_basis()).as_matrix(), &DMatrix::identity(2, 2));
        assert_abs_diff_eq!(
            frame_operator(&mercedes_benz()).into_matrix(),
            DMatrix::identity(2, 2) * 1.5,
            epsilon = 1e-15
        );
        let s = frame_operator(&skew_pair());
        assert_abs_diff_eq!(s.get(0, 0), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(0, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(1, 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn frame_bounds_examples() {
        let b = frame_bounds(&std_basis()).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper, 1.0, epsilon = 1e-14);
        let b = frame_bounds(&mercedes_benz()).unwrap();
        assert_abs_diff_eq!(b.lower, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper, 1.5, epsilon = 1e-14);
        let b = frame_bounds(&skew_pair()).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert_abs_diff_eq!(b.lower, 1.0 - h, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper, 1.0 + h, epsilon = 1e-14);
        assert_eq!(b.span_dim, 2);
        let zero = Frame::new(Mat::zeros(2, 2).unwrap()).unwrap();
        assert_eq!(frame_bounds(&zero), Err(Error::AllZero));
    }

    #[test]
    fn bounds_of_a_frame_sequence_live_on_the_span() {
        let line = Frame::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        let b = frame_bounds(&line).unwrap();
        assert_eq!(b.span_dim, 1);
        assert_abs_diff_eq!(b.lower, 5.0, epsilon = 1e-13);
        assert_abs_diff_eq!(b.upper, 5.0, epsilon = 1e-13);
    }

    #[test]
    fn canonical_dual_examples() {
        let d = canonical_dual(&std_basis()).unwrap();
        assert_abs_diff_eq!(d.vectors().as_matrix(), &DMatrix::identity(2, 2), epsilon = 1e-14);
        let mb = mercedes_benz();
        let d = canonical_dual(&mb).unwrap();
        assert_abs_diff_eq!(
            d.vectors().as_matrix(),
            &(mb.vectors().as_matrix() * (2.0 / 3.0)),
            epsilon = 1e-14
        );
        let doubled = Frame::from_columns(2, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let d = canonical_dual(&doubled).unwrap();
        assert_abs_diff_eq!(d.vector(0), v(&[0.5, 0.0]), epsilon = 1e-14);
        assert_abs_diff_eq!(d.vector(1), v(&[0.5, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn parseval_detection() {
        assert!(is_parseval(&std_basis(), 1e-10));
        assert!(!is_parseval(&mercedes_benz(), 1e-10));
        assert!(is_parseval(&mercedes_benz().scaled((2.0f64 / 3.0).sqrt()), 1e-10));
        assert!(!is_parseval(&skew_pair(), 1e-10));
    }

    #[test]
    fn least_squares_examples() {
        let f = Frame::from_columns(2, &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let canon = canonical_dual(&f).unwrap();
        let (a, b) = least_squares_check(&f, &canon, &v(&[0.3, -2.0])).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);

        let alt = Frame::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (a, b) = least_squares_check(&f, &alt, &v(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-14);

        assert_eq!(least_squares_check(&f, &alt, &Vector::zeros(2)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn least_squares_rejects_non_dual() {
        let f = std_basis();
        let bad = Frame::new(Mat::diag(&[2.0, 1.0]).unwrap()).unwrap();
        assert!(matches!(least_squares_check(&f, &bad, &v(&[1.0, 0.0])), Err(Error::NotADual(_))));
    }
}
