//! Fusion frames `{(W_i, v_i)}` and fusion frame systems (a fusion frame plus
//! a local frame and local dual for every subspace).
//!
//! The fusion frame bounds reported here are the extreme eigenvalues of
//! `S_W = Σ v_i² π_{W_i}`. These are the optimal constants in
//! `C‖f‖² ≤ Σ v_i²‖π_{W_i} f‖² ≤ D‖f‖²`; in operator-norm language they are
//! `‖S_W⁻¹‖⁻¹` and `‖S_W‖`.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frames::{self, Frame};
use crate::numkit::{self, symmetrize, Mat, Vector, DEFAULT_RANK_TOL, SYMMETRY_TOL};

/// Membership tolerance for local frame vectors and fusion coefficients.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// `is_tight` gate: `|D − C| ≤ TIGHT_TOL · D`.
pub const TIGHT_TOL: f64 = 1e-8;
/// `is_frame` gate: `C > FRAME_TOL · D`.
pub const FRAME_TOL: f64 = 1e-10;

/// A subspace of `ℝ^M` held through an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Mat,
    projector: OnceLock<Mat>,
}

impl Subspace {
    /// Span of the columns of `vectors`.
    pub fn from_vectors(vectors: &Mat, rank_tol: f64) -> Result<Self> {
        Ok(Subspace {
            basis: numkit::orthonormalize(vectors, rank_tol)?,
            projector: OnceLock::new(),
        })
    }

    /// Takes `basis` as-is after checking `basisᵀ basis = I` to 1e-10.
    pub fn from_orthonormal(basis: Mat) -> Result<Self> {
        if basis.cols() == 0 {
            return Err(Error::AllZero);
        }
        let b = basis.as_matrix();
        let gram = b.tr_mul(b) - DMatrix::identity(b.ncols(), b.ncols());
        if gram.amax() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal (Gram defect {:e})",
                gram.amax()
            )));
        }
        Ok(Subspace {
            basis,
            projector: OnceLock::new(),
        })
    }

    /// Keeps `basis` when it is already orthonormal, otherwise re-spans it.
    pub fn from_basis_or_span(basis: Mat) -> Result<Self> {
        let b = basis.as_matrix();
        let orthonormal = b.ncols() > 0
            && (b.tr_mul(b) - DMatrix::identity(b.ncols(), b.ncols())).amax() <= 1e-12;
        if orthonormal {
            Subspace::from_orthonormal(basis)
        } else {
            Subspace::from_vectors(&basis, DEFAULT_RANK_TOL)
        }
    }

    pub fn whole(ambient_dim: usize) -> Result<Self> {
        Subspace::from_orthonormal(Mat::identity(ambient_dim)?)
    }

    /// `span{v}`.
    pub fn line(v: &[f64]) -> Result<Self> {
        Subspace::from_vectors(&Mat::from_columns(v.len(), &[v.to_vec()])?, DEFAULT_RANK_TOL)
    }

    /// Coordinate subspace `span{e_k : k ∈ axes}`.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let mut b = DMatrix::zeros(ambient_dim, axes.len());
        for (j, &k) in axes.iter().enumerate() {
            if k >= ambient_dim {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    len: ambient_dim,
                });
            }
            b[(k, j)] = 1.0;
        }
        Subspace::from_orthonormal(Mat::from_matrix(b)?)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// `π_W = U Uᵀ`, computed on first use.
    pub fn projector(&self) -> &Mat {
        self.projector.get_or_init(|| {
            let u = self.basis.as_matrix();
            Mat::wrap(symmetrize(&(u * u.transpose())))
        })
    }

    /// `π_W f` evaluated as `U (Uᵀ f)`.
    pub fn project(&self, f: &Vector) -> Vector {
        let u = self.basis.as_matrix();
        u * u.tr_mul(f)
    }

    /// `‖π_W x − x‖ / ‖x‖`, zero for `x = 0`.
    pub fn relative_distance(&self, x: &Vector) -> f64 {
        let n = x.norm();
        if n == 0.0 {
            0.0
        } else {
            (self.project(x) - x).norm() / n
        }
    }
}

#[derive(Clone, Debug)]
pub struct Component {
    pub subspace: Subspace,
    pub weight: f64,
}

/// Weighted family of subspaces `{(W_i, v_i)}`.
#[derive(Clone, Debug)]
pub struct FusionFrame {
    ambient_dim: usize,
    components: Vec<Component>,
}

impl FusionFrame {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("a fusion frame needs at least one subspace".into()))?;
        let ambient_dim = first.subspace.ambient_dim();
        for (i, c) in components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "weight {i} must be positive and finite, got {}",
                    c.weight
                )));
            }
            if c.subspace.ambient_dim() != ambient_dim {
                return Err(Error::DimMismatch {
                    expected: ambient_dim,
                    got: c.subspace.ambient_dim(),
                });
            }
        }
        Ok(FusionFrame {
            ambient_dim,
            components,
        })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Subspace, f64)>) -> Result<Self> {
        FusionFrame::new(
            pairs
                .into_iter()
                .map(|(subspace, weight)| Component { subspace, weight })
                .collect(),
        )
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// `Σ v_i²`.
    pub fn weight_energy(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.weight).sum()
    }

    /// The same weights on a new list of subspaces.
    pub fn with_subspaces(&self, subspaces: Vec<Subspace>) -> Result<FusionFrame> {
        if subspaces.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} subspaces for {} weights",
                subspaces.len(),
                self.len()
            )));
        }
        FusionFrame::from_pairs(subspaces.into_iter().zip(self.weights()))
    }

    fn check_signal(&self, f: &Vector) -> Result<()> {
        if f.len() != self.ambient_dim {
            return Err(Error::DimMismatch {
                expected: self.ambient_dim,
                got: f.len(),
            });
        }
        Ok(())
    }
}

/// Bounds and structural flags of a fusion frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionBounds {
    pub lower: f64,
    pub upper: f64,
    pub is_frame: bool,
    pub is_tight: bool,
    pub is_parseval: bool,
    pub is_orthonormal_fusion_basis: bool,
}

/// `T_W f = {v_i π_{W_i} f}` together with the weights it was taken with.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionCoefficients {
    pub entries: Vec<Vector>,
    pub weights: Vec<f64>,
}

pub fn subspace_from_vectors(vectors: &Mat, rank_tol: f64) -> Result<Subspace> {
    Subspace::from_vectors(vectors, rank_tol)
}

pub fn fusion_analysis(ff: &FusionFrame, f: &Vector) -> Result<FusionCoefficients> {
    ff.check_signal(f)?;
    let entries = ff
        .components
        .iter()
        .map(|c| c.subspace.project(f) * c.weight)
        .collect();
    Ok(FusionCoefficients {
        entries,
        weights: ff.weights(),
    })
}

/// `T_W* c = Σ v_i c_i`; each `c_i` must lie in `W_i` to 1e-6.
pub fn fusion_synthesis(ff: &FusionFrame, coeffs: &FusionCoefficients) -> Result<Vector> {
    if coeffs.entries.len() != ff.len() {
        return Err(Error::DimMismatch {
            expected: ff.len(),
            got: coeffs.entries.len(),
        });
    }
    let mut out = Vector::zeros(ff.ambient_dim);
    for (i, (c, e)) in ff.components.iter().zip(&coeffs.entries).enumerate() {
        ff.check_signal(e)?;
        let distance = c.subspace.relative_distance(e);
        if distance > 1e-6 {
            return Err(Error::NotInSubspace { index: i, distance });
        }
        out.axpy(c.weight, e, 1.0);
    }
    Ok(out)
}

/// `S_W = Σ v_i² U_i U_iᵀ`, accumulated in component order.
pub fn fusion_operator(ff: &FusionFrame) -> Mat {
    let m = ff.ambient_dim;
    let mut s = DMatrix::zeros(m, m);
    for c in &ff.components {
        let u = c.subspace.basis().as_matrix();
        s += (u * u.transpose()) * (c.weight * c.weight);
    }
    Mat::wrap(symmetrize(&s))
}

/// `S_W f` through per-subspace projections, without forming `S_W`.
pub fn apply_fusion_operator(ff: &FusionFrame, f: &Vector) -> Result<Vector> {
    ff.check_signal(f)?;
    let mut out = Vector::zeros(ff.ambient_dim);
    for c in &ff.components {
        out.axpy(c.weight * c.weight, &c.subspace.project(f), 1.0);
    }
    Ok(out)
}

pub fn fusion_bounds(ff: &FusionFrame) -> FusionBounds {
    let spec = numkit::sym_eig(&fusion_operator(ff)).expect("fusion operator is symmetric");
    let (lower, upper) = (spec.min(), spec.max());
    let is_frame = lower > FRAME_TOL * upper;
    let is_tight = (upper - lower).abs() <= TIGHT_TOL * upper;
    let is_parseval =
        is_tight && (lower - 1.0).abs() <= TIGHT_TOL && (upper - 1.0).abs() <= TIGHT_TOL;
    let total_dim: usize = ff.components.iter().map(|c| c.subspace.dim()).sum();
    let is_orthonormal_fusion_basis =
        is_parseval && total_dim == ff.ambient_dim && pairwise_orthogonal(ff, 1e-9);
    FusionBounds {
        lower,
        upper,
        is_frame,
        is_tight,
        is_parseval,
        is_orthonormal_fusion_basis,
    }
}

/// Every cross product `‖U_iᵀ U_j‖` (i ≠ j) is at most `tol`.
pub fn pairwise_orthogonal(ff: &FusionFrame, tol: f64) -> bool {
    let cs = &ff.components;
    (0..cs.len()).all(|i| {
        (i + 1..cs.len()).all(|j| {
            let cross = cs[i]
                .subspace
                .basis()
                .as_matrix()
                .tr_mul(cs[j].subspace.basis().as_matrix());
            numkit::op_norm(&cross) <= tol
        })
    })
}

/// `Σ v_i² dim W_i / M`. Equals `C` only for tight fusion frames.
pub fn redundancy(ff: &FusionFrame) -> f64 {
    let energy: f64 = ff
        .components
        .iter()
        .map(|c| c.weight * c.weight * c.subspace.dim() as f64)
        .sum();
    energy / ff.ambient_dim as f64
}

/// `{(span{f_i}, ‖f_i‖)}`.
pub fn from_frame(frame: &Frame) -> Result<FusionFrame> {
    let mut components = Vec::with_capacity(frame.len());
    for j in 0..frame.len() {
        let v = frame.vector(j);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector(j));
        }
        let basis = Mat::from_vectors(frame.ambient_dim(), &[v / norm])?;
        components.push(Component {
            subspace: Subspace::from_orthonormal(basis)?,
            weight: norm,
        });
    }
    FusionFrame::new(components)
}

fn check_symmetric_invertible(ff: &FusionFrame, t: &Mat) -> Result<()> {
    let m = ff.ambient_dim;
    if t.rows() != m || t.cols() != m {
        return Err(Error::DimMismatch {
            expected: m,
            got: if t.rows() != m { t.rows() } else { t.cols() },
        });
    }
    let asym = t.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let sv = numkit::singular_values(t.as_matrix());
    if !(sv[sv.len() - 1] > 1e-10 * sv[0]) {
        return Err(Error::Singular);
    }
    Ok(())
}

/// `{(T W_i, v_i)}` for a symmetric invertible `T`; each `T U_i` is re-orthonormalized.
pub fn transform(ff: &FusionFrame, t: &Mat) -> Result<FusionFrame> {
    check_symmetric_invertible(ff, t)?;
    let subspaces = ff
        .components
        .iter()
        .map(|c| {
            let image = t.matmul(c.subspace.basis())?;
            Subspace::from_vectors(&image, DEFAULT_RANK_TOL)
        })
        .collect::<Result<Vec<_>>>()?;
    ff.with_subspaces(subspaces)
}

/// `‖S(TW) − T S_W T⁻¹‖ / ‖S_W‖`, the residual of the conjugation formula
/// for the fusion operator of a transformed fusion frame.
///
/// The formula holds for `T = I` and whenever `T` maps every `W_i` onto
/// itself. It does not hold for general symmetric `T`, not even `T = S_W`:
/// `S(TW)` is always symmetric while `T S_W T⁻¹` need not be.
pub fn transform_residual(ff: &FusionFrame, t: &Mat) -> Result<f64> {
    let moved = transform(ff, t)?;
    let s = fusion_operator(ff);
    let t_inv = t
        .as_matrix()
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular)?;
    let conj = t.as_matrix() * s.as_matrix() * t_inv;
    let diff = fusion_operator(&moved).as_matrix() - conj;
    Ok(numkit::op_norm(&diff) / numkit::operator_norm(&s))
}

/// Common local frame bounds `A = min_i A_i`, `B = max_i B_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalBounds {
    pub lower: f64,
    pub upper: f64,
}

/// A fusion frame with a local frame and a local dual frame for each subspace.
#[derive(Clone, Debug)]
pub struct FusionFrameSystem {
    fusion_frame: FusionFrame,
    local_frames: Vec<Frame>,
    local_duals: Vec<Frame>,
    local_bounds: LocalBounds,
}

impl FusionFrameSystem {
    /// Validates that local frame `i` lies in and spans `W_i` and that each
    /// dual reconstructs on `W_i`. Missing duals default to the canonical
    /// dual within `W_i`.
    pub fn new(
        fusion_frame: FusionFrame,
        local_frames: Vec<Frame>,
        local_duals: Option<Vec<Frame>>,
    ) -> Result<Self> {
        let n = fusion_frame.len();
        if local_frames.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} local frames for {n} subspaces",
                local_frames.len()
            )));
        }
        let local_duals = match local_duals {
            Some(d) => {
                if d.len() != n {
                    return Err(Error::ShapeMismatch(format!(
                        "{} local duals for {n} subspaces",
                        d.len()
                    )));
                }
                d
            }
            None => local_frames
                .iter()
                .map(frames::canonical_dual)
                .collect::<Result<Vec<_>>>()?,
        };

        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        for (i, ((c, frame), dual)) in fusion_frame
            .components
            .iter()
            .zip(&local_frames)
            .zip(&local_duals)
            .enumerate()
        {
            let w = &c.subspace;
            if frame.ambient_dim() != w.ambient_dim() {
                return Err(Error::DimMismatch {
                    expected: w.ambient_dim(),
                    got: frame.ambient_dim(),
                });
            }
            for j in 0..frame.len() {
                let d = w.relative_distance(&frame.vector(j));
                if d > MEMBERSHIP_TOL {
                    return Err(Error::InvalidSystem(format!(
                        "local vector ({i}, {j}) lies outside W_{i} (relative distance {d:e})"
                    )));
                }
            }
            let bounds = frames::frame_bounds(frame).map_err(|_| {
                Error::InvalidSystem(format!("local frame {i} is identically zero"))
            })?;
            let span = frames::span_projector(frame)?;
            let gap = numkit::op_norm(&(span.as_matrix() - w.projector().as_matrix()));
            if bounds.span_dim != w.dim() || gap > 1e-8 {
                return Err(Error::InvalidSystem(format!(
                    "local frame {i} spans a {}-dim space, W_{i} has dim {} (projector gap {gap:e})",
                    bounds.span_dim,
                    w.dim()
                )));
            }
            for j in 0..dual.len().min(frame.len()) {
                let d = w.relative_distance(&dual.vector(j));
                if d > 1e-8 {
                    return Err(Error::InvalidSystem(format!(
                        "local dual vector ({i}, {j}) lies outside W_{i} (relative distance {d:e})"
                    )));
                }
            }
            let residual = frames::dual_residual(frame, dual)?;
            if residual > frames::DUAL_TOL {
                return Err(Error::InvalidSystem(format!(
                    "local dual {i} does not reconstruct on W_{i} (residual {residual:e})"
                )));
            }
            lower = lower.min(bounds.lower);
            upper = upper.max(bounds.upper);
        }

        Ok(FusionFrameSystem {
            fusion_frame,
            local_frames,
            local_duals,
            local_bounds: LocalBounds { lower, upper },
        })
    }

    /// Uses each subspace's orthonormal basis as its (self-dual) local frame.
    pub fn with_orthonormal_locals(fusion_frame: FusionFrame) -> Result<Self> {
        let locals = fusion_frame
            .components
            .iter()
            .map(|c| Frame::new(c.subspace.basis().clone()))
            .collect::<Result<Vec<_>>>()?;
        FusionFrameSystem::new(fusion_frame, locals.clone(), Some(locals))
    }

    pub fn fusion_frame(&self) -> &FusionFrame {
        &self.fusion_frame
    }

    pub fn local_frames(&self) -> &[Frame] {
        &self.local_frames
    }

    pub fn local_duals(&self) -> &[Frame] {
        &self.local_duals
    }

    pub fn local_bounds(&self) -> LocalBounds {
        self.local_bounds
    }

    pub fn ambient_dim(&self) -> usize {
        self.fusion_frame.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.fusion_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fusion_frame.is_empty()
    }

    /// The subsystem on the subspaces `keep` (in that order), with local
    /// frames and duals carried over unchanged.
    pub fn restrict(&self, keep: &[usize]) -> Result<FusionFrameSystem> {
        let n = self.len();
        if let Some(&index) = keep.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
        let components = keep.iter().map(|&i| self.fusion_frame.components[i].clone()).collect();
        let local_frames: Vec<Frame> = keep.iter().map(|&i| self.local_frames[i].clone()).collect();
        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        for frame in &local_frames {
            let b = frames::frame_bounds(frame)?;
            lower = lower.min(b.lower);
            upper = upper.max(b.upper);
        }
        Ok(FusionFrameSystem {
            fusion_frame: FusionFrame::new(components)?,
            local_duals: keep.iter().map(|&i| self.local_duals[i].clone()).collect(),
            local_frames,
            local_bounds: LocalBounds { lower, upper },
        })
    }

    /// `Σ_i |J_i|`.
    pub fn total_local_vectors(&self) -> usize {
        self.local_frames.iter().map(Frame::len).sum()
    }

    /// The global family `{v_i f_ij}` in (i, j) order.
    pub fn flattened(&self) -> Frame {
        self.flatten(&self.local_frames)
    }

    /// `{v_i f̃_ij}` in (i, j) order.
    pub fn flattened_duals(&self) -> Frame {
        self.flatten(&self.local_duals)
    }

    fn flatten(&self, frames: &[Frame]) -> Frame {
        let mut cols = Vec::with_capacity(self.total_local_vectors());
        for (c, f) in self.fusion_frame.components.iter().zip(frames) {
            cols.extend(f.vectors().as_matrix().column_iter().map(|col| col * c.weight));
        }
        let m = DMatrix::from_columns(&cols);
        Frame::new(Mat::wrap(m)).expect("at least one local vector")
    }
}

/// `S_W = Σ v_i² F̃_i F_iᵀ`, symmetrized after accumulation.
pub fn fusion_operator_via_locals(ffs: &FusionFrameSystem) -> Mat {
    let m = ffs.ambient_dim();
    let mut s = DMatrix::zeros(m, m);
    for ((c, frame), dual) in ffs
        .fusion_frame
        .components
        .iter()
        .zip(&ffs.local_frames)
        .zip(&ffs.local_duals)
    {
        s += (dual.vectors().as_matrix() * frame.vectors().as_matrix().transpose())
            * (c.weight * c.weight);
    }
    Mat::wrap(symmetrize(&s))
}

/// Predicted versus measured bounds of the flattened family `{v_i f_ij}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalGlobalBounds {
    /// `(A·C, B·D)`.
    pub predicted: (f64, f64),
    /// Extreme eigenvalues of the frame operator of `{v_i f_ij}` on `ℝ^M`.
    pub actual: (f64, f64),
    /// Fusion bounds implied by the flattened bounds: `(C'/B, D'/A)`.
    pub converse: (f64, f64),
    pub fusion: (f64, f64),
}

impl LocalGlobalBounds {
    /// Whether `actual` sits in the predicted interval with relative slack `tol`.
    pub fn contains(&self, tol: f64) -> bool {
        self.actual.0 >= self.predicted.0 * (1.0 - tol) - tol * self.predicted.1
            && self.actual.1 <= self.predicted.1 * (1.0 + tol)
    }
}

pub fn local_global_bounds(ffs: &FusionFrameSystem) -> LocalGlobalBounds {
    let fb = fusion_bounds(&ffs.fusion_frame);
    let LocalBounds { lower: a, upper: b } = ffs.local_bounds;
    let flat = frames::frame_operator(&ffs.flattened());
    let spec = numkit::sym_eig(&flat).expect("frame operator is symmetric");
    let actual = (spec.min(), spec.max());
    LocalGlobalBounds {
        predicted: (a * fb.lower, b * fb.upper),
        actual,
        converse: (actual.0 / b, actual.1 / a),
        fusion: (fb.lower, fb.upper),
    }
}

/// Splits a frame into (possibly overlapping) index blocks, one subspace per
/// block. Indices are zero-based.
pub fn split_frame(
    frame: &Frame,
    partition: &[Vec<usize>],
    weights: &[f64],
) -> Result<FusionFrameSystem> {
    if partition.is_empty() {
        return Err(Error::InvalidArgument("partition has no blocks".into()));
    }
    if weights.len() != partition.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} blocks",
            weights.len(),
            partition.len()
        )));
    }
    let n = frame.len();
    let mut covered = vec![false; n];
    let mut components = Vec::with_capacity(partition.len());
    let mut locals = Vec::with_capacity(partition.len());
    for (k, (block, &weight)) in partition.iter().zip(weights).enumerate() {
        if block.is_empty() {
            return Err(Error::EmptyBlock(k));
        }
        let mut cols = Vec::with_capacity(block.len());
        for &idx in block {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
            covered[idx] = true;
            cols.push(frame.vector(idx));
        }
        let local = Mat::from_vectors(frame.ambient_dim(), &cols)?;
        components.push(Component {
            subspace: Subspace::from_vectors(&local, DEFAULT_RANK_TOL)?,
            weight,
        });
        locals.push(Frame::new(local)?);
    }
    if let Some(missing) = covered.iter().position(|&c| !c) {
        return Err(Error::InvalidArgument(format!(
            "partition does not cover vector {missing}"
        )));
    }
    FusionFrameSystem::new(FusionFrame::new(components)?, locals, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::fixtures::mercedes_benz;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn e(m: usize, k: usize) -> Subspace {
        Subspace::coordinate(m, &[k]).unwrap()
    }

    fn onb2() -> FusionFrame {
        FusionFrame::from_pairs([(e(2, 0), 1.0), (e(2, 1), 1.0)]).unwrap()
    }

    /// `{(span e₁, 1), (span (1,1)/√2, 1)}`: `S_W = [[1.5, .5], [.5, .5]]`.
    fn skew() -> FusionFrame {
        FusionFrame::from_pairs([(e(2, 0), 1.0), (Subspace::line(&[1.0, 1.0]).unwrap(), 1.0)])
            .unwrap()
    }

    fn tight2() -> FusionFrame {
        FusionFrame::from_pairs([(e(2, 0), 1.0), (e(2, 1), 1.0), (Subspace::whole(2).unwrap(), 1.0)])
            .unwrap()
    }

    fn assert_mat(m: &Mat, rows: &[&[f64]], eps: f64) {
        let expect = Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        assert_abs_diff_eq!(m.as_matrix(), expect.as_matrix(), epsilon = eps);
    }

    #[test]
    fn subspace_projectors() {
        let s = subspace_from_vectors(&Mat::from_columns(2, &[vec![1.0, 0.0]]).unwrap(), 1e-10).unwrap();
        assert_mat(s.projector(), &[&[1.0, 0.0], &[0.0, 0.0]], 1e-15);
        let s = subspace_from_vectors(&Mat::from_columns(2, &[vec![1.0, 1.0]]).unwrap(), 1e-10).unwrap();
        assert_mat(s.projector(), &[&[0.5, 0.5], &[0.5, 0.5]], 1e-15);
        let s = subspace_from_vectors(&Mat::identity(3).unwrap(), 1e-10).unwrap();
        assert_abs_diff_eq!(s.projector().as_matrix(), &DMatrix::identity(3, 3), epsilon = 1e-14);
        let p = s.projector().as_matrix();
        assert_abs_diff_eq!(p * p, p.clone(), epsilon = 1e-14);
    }

    #[test]
    fn fusion_frame_validation() {
        assert!(FusionFrame::new(vec![]).is_err());
        assert!(FusionFrame::from_pairs([(e(2, 0), 0.0)]).is_err());
        assert!(matches!(
            FusionFrame::from_pairs([(e(2, 0), 1.0), (e(3, 0), 1.0)]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn analysis_examples() {
        let c = fusion_analysis(&onb2(), &v(&[3.0, 5.0])).unwrap();
        assert_eq!(c.entries, vec![v(&[3.0, 0.0]), v(&[0.0, 5.0])]);
        let weighted = FusionFrame::from_pairs([(e(2, 0), 2.0), (e(2, 1), 1.0)]).unwrap();
        let c = fusion_analysis(&weighted, &v(&[3.0, 5.0])).unwrap();
        assert_eq!(c.entries, vec![v(&[6.0, 0.0]), v(&[0.0, 5.0])]);
        let c = fusion_analysis(&skew(), &v(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(c.entries[0], v(&[1.0, 0.0]), epsilon = 1e-15);
        assert_abs_diff_eq!(c.entries[1], v(&[0.5, 0.5]), epsilon = 1e-15);
        assert!(fusion_analysis(&onb2(), &v(&[1.0])).is_err());
    }

    #[test]
    fn synthesis_examples() {
        let c = FusionCoefficients {
            entries: vec![v(&[3.0, 0.0]), v(&[0.0, 5.0])],
            weights: vec![1.0, 1.0],
        };
        assert_eq!(fusion_synthesis(&onb2(), &c).unwrap(), v(&[3.0, 5.0]));
        let z = FusionCoefficients {
            entries: vec![Vector::zeros(2), Vector::zeros(2)],
            weights: vec![1.0, 1.0],
        };
        assert_eq!(fusion_synthesis(&onb2(), &z).unwrap(), Vector::zeros(2));
        let f = v(&[0.3, -1.7]);
        let round = fusion_synthesis(&skew(), &fusion_analysis(&skew(), &f).unwrap()).unwrap();
        let direct = fusion_operator(&skew()).apply(&f).unwrap();
        assert_abs_diff_eq!(round, direct, epsilon = 1e-15);
    }

    #[test]
    fn synthesis_rejects_foreign_entries() {
        let bad = FusionCoefficients {
            entries: vec![v(&[0.0, 1.0]), v(&[0.0, 1.0])],
            weights: vec![1.0, 1.0],
        };
        assert!(matches!(
            fusion_synthesis(&onb2(), &bad),
            Err(Error::NotInSubspace { index: 0, .. })
        ));
        let short = FusionCoefficients {
            entries: vec![v(&[1.0, 0.0])],
            weights: vec![1.0],
        };
        assert!(matches!(fusion_synthesis(&onb2(), &short), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn operator_examples() {
        assert_mat(&fusion_operator(&onb2()), &[&[1.0, 0.0], &[0.0, 1.0]], 0.0);
        assert_mat(&fusion_operator(&tight2()), &[&[2.0, 0.0], &[0.0, 2.0]], 1e-15);
        assert_mat(&fusion_operator(&skew()), &[&[1.5, 0.5], &[0.5, 0.5]], 1e-15);
    }

    #[test]
    fn via_locals_examples() {
        let ffs = FusionFrameSystem::with_orthonormal_locals(skew()).unwrap();
        assert_abs_diff_eq!(
            fusion_operator_via_locals(&ffs).as_matrix(),
            fusion_operator(&skew()).as_matrix(),
            epsilon = 1e-15
        );

        let line = FusionFrame::from_pairs([(e(2, 0), 1.0)]).unwrap();
        let local = Frame::from_columns(2, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let ffs = FusionFrameSystem::new(line, vec![local], None).unwrap();
        assert_abs_diff_eq!(ffs.local_duals()[0].vector(0), v(&[0.5, 0.0]), epsilon = 1e-15);
        assert_mat(&fusion_operator_via_locals(&ffs), &[&[1.0, 0.0], &[0.0, 0.0]], 1e-15);
    }

    #[test]
    fn system_rejects_local_vectors_outside_subspace() {
        let line = FusionFrame::from_pairs([(e(2, 0), 1.0)]).unwrap();
        let local = Frame::from_columns(2, &[vec![1.0, 0.1]]).unwrap();
        assert!(matches!(
            FusionFrameSystem::new(line, vec![local], None),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn system_rejects_bad_dual() {
        let ff = FusionFrame::from_pairs([(Subspace::whole(2).unwrap(), 1.0)]).unwrap();
        let local = Frame::new(Mat::identity(2).unwrap()).unwrap();
        let dual = Frame::new(Mat::diag(&[1.0, 2.0]).unwrap()).unwrap();
        assert!(matches!(
            FusionFrameSystem::new(ff, vec![local], Some(vec![dual])),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn bounds_examples() {
        let b = fusion_bounds(&onb2());
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        assert!(b.is_frame && b.is_tight && b.is_parseval && b.is_orthonormal_fusion_basis);

        let b = fusion_bounds(&skew());
        let h = 2f64.sqrt() / 2.0;
        assert_abs_diff_eq!(b.lower, 1.0 - h, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper, 1.0 + h, epsilon = 1e-14);
        assert!(b.is_frame && !b.is_tight && !b.is_orthonormal_fusion_basis);

        let b = fusion_bounds(&FusionFrame::from_pairs([(e(2, 0), 1.0)]).unwrap());
        assert!(b.lower.abs() < 1e-15);
        assert!(!b.is_frame);

        let b = fusion_bounds(&tight2());
        assert!(b.is_tight && !b.is_parseval && !b.is_orthonormal_fusion_basis);
    }

    #[test]
    fn redundancy_examples() {
        assert_abs_diff_eq!(redundancy(&tight2()), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fusion_bounds(&tight2()).lower, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(redundancy(&onb2()), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(redundancy(&skew()), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn local_global_examples() {
        let ffs = FusionFrameSystem::with_orthonormal_locals(onb2()).unwrap();
        let lg = local_global_bounds(&ffs);
        assert_eq!(lg.predicted, (1.0, 1.0));
        assert_abs_diff_eq!(lg.actual.0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lg.actual.1, 1.0, epsilon = 1e-14);

        let ffs = FusionFrameSystem::with_orthonormal_locals(skew()).unwrap();
        let lg = local_global_bounds(&ffs);
        assert_abs_diff_eq!(lg.actual.0, lg.fusion.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lg.actual.1, lg.fusion.1, epsilon = 1e-12);
        assert!(lg.contains(1e-9));
    }

    #[test]
    fn from_frame_examples() {
        let ff = from_frame(&Frame::new(Mat::identity(2).unwrap()).unwrap()).unwrap();
        assert!(fusion_bounds(&ff).is_orthonormal_fusion_basis);

        let ff = from_frame(&mercedes_benz()).unwrap();
        assert_eq!(ff.len(), 3);
        for c in ff.components() {
            assert_eq!(c.subspace.dim(), 1);
            assert_abs_diff_eq!(c.weight, 1.0, epsilon = 1e-15);
        }
        assert_mat(&fusion_operator(&ff), &[&[1.5, 0.0], &[0.0, 1.5]], 1e-15);

        let ff = from_frame(&Frame::from_columns(2, &[vec![2.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(ff.components()[0].weight, 2.0);
        assert_mat(&fusion_operator(&ff), &[&[4.0, 0.0], &[0.0, 0.0]], 0.0);

        let zero = Frame::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(from_frame(&zero), Err(Error::ZeroVector(1))));
    }

    #[test]
    fn transform_identity_is_noop() {
        let ff = skew();
        let moved = transform(&ff, &Mat::identity(2).unwrap()).unwrap();
        assert_abs_diff_eq!(
            fusion_operator(&moved).as_matrix(),
            fusion_operator(&ff).as_matrix(),
            epsilon = 1e-15
        );
        assert!(transform_residual(&ff, &Mat::identity(2).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn transform_by_fusion_operator_does_not_reproduce_it() {
        // S_W e1 = (1.5, .5) and S_W (1,1) = (2, 1):
        // (1/10)[[9,3],[3,1]] + (1/5)[[4,2],[2,1]] = [[1.7,.7],[.7,.3]]
        let ff = skew();
        let s = fusion_operator(&ff);
        let moved = transform(&ff, &s).unwrap();
        assert_mat(&fusion_operator(&moved), &[&[1.7, 0.7], &[0.7, 0.3]], 1e-14);
        assert!(transform_residual(&ff, &s).unwrap() > 0.1);
        // still a fusion frame
        assert!(fusion_bounds(&moved).is_frame);
    }

    #[test]
    fn transform_rejects_bad_operators() {
        let ff = skew();
        let asym = Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(transform(&ff, &asym), Err(Error::NotSymmetric(_))));
        assert_eq!(transform(&ff, &Mat::diag(&[1.0, 0.0]).unwrap()).unwrap_err(), Error::Singular);
    }

    #[test]
    fn split_examples() {
        let basis4 = Frame::new(Mat::identity(4).unwrap()).unwrap();
        let ffs = split_frame(&basis4, &[vec![0, 1], vec![2, 3]], &[1.0, 1.0]).unwrap();
        assert!(ffs.fusion_frame().components().iter().all(|c| c.subspace.dim() == 2));
        assert!(fusion_bounds(ffs.fusion_frame()).is_orthonormal_fusion_basis);

        let ffs = split_frame(&mercedes_benz(), &[vec![0, 1], vec![1, 2]], &[1.0, 1.0]).unwrap();
        assert!(ffs.fusion_frame().components().iter().all(|c| c.subspace.dim() == 2));
        assert_mat(&fusion_operator(ffs.fusion_frame()), &[&[2.0, 0.0], &[0.0, 2.0]], 1e-14);

        let ffs = split_frame(&mercedes_benz(), &[vec![0], vec![1], vec![2]], &[1.0; 3]).unwrap();
        let reference = from_frame(&mercedes_benz()).unwrap();
        assert_abs_diff_eq!(
            fusion_operator(ffs.fusion_frame()).as_matrix(),
            fusion_operator(&reference).as_matrix(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn split_errors() {
        let mb = mercedes_benz();
        assert_eq!(split_frame(&mb, &[vec![0, 1, 2], vec![]], &[1.0, 1.0]).unwrap_err(), Error::EmptyBlock(1));
        assert_eq!(
            split_frame(&mb, &[vec![0, 1, 7]], &[1.0]).unwrap_err(),
            Error::IndexOutOfRange { index: 7, len: 3 }
        );
        assert!(split_frame(&mb, &[vec![0, 1]], &[1.0]).is_err());
    }
}
