//! Distributed fusion and reconstruction.
//!
//! Three routes recover a signal from a fusion frame system:
//!
//! * local fusion: every subspace first rebuilds `π_{W_i} f` from its own
//!   measurements with its local dual, then the fusion centre applies
//!   `S_W⁻¹` once per subspace;
//! * fused global dual: the vectors `S_W⁻¹ v_i f̃_ij` are precomputed off-line
//!   and the signal is a single dual-frame expansion with no solve at
//!   reconstruction time;
//! * the iterative frame algorithm `f_n = f_{n−1} + 2/(C+D) S_W (f − f_{n−1})`,
//!   which only needs `S_W f`, i.e. the fusion coefficients.
//!
//! `S_W⁻¹` is never formed; each application is a Cholesky back-solve and is
//! counted in the [`ReconReport`].

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{self, Frame};
use crate::fusion::{
    self, fusion_bounds, fusion_operator, FusionBounds, FusionCoefficients, FusionFrame,
    FusionFrameSystem,
};
use crate::numkit::{self, Mat, SpdSolver, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LocalFusion,
    FusedDual,
    Iterative,
    Centralized,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::LocalFusion => "local-fusion",
            Method::FusedDual => "fused-dual",
            Method::Iterative => "iterative",
            Method::Centralized => "centralized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One step of the iterative algorithm. `bound` is the certified relative
/// error `((D−C)/(D+C))ⁿ`; `actual_error` is `‖f − f_n‖/‖f‖` when a
/// reference signal was supplied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub bound: f64,
    pub actual_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconReport {
    pub estimate: Vector,
    pub method: Method,
    /// `‖f̂ − f‖ / ‖f‖` against a reference, when one was attached.
    pub residual: Option<f64>,
    pub trace: Option<Vec<TraceRow>>,
    /// `S_W⁻¹` applications performed while reconstructing.
    pub online_inverse_applications: usize,
    /// `S_W⁻¹` applications performed ahead of time (fused duals).
    pub offline_inverse_applications: usize,
    pub duals_precomputed: bool,
}

impl ReconReport {
    fn new(estimate: Vector, method: Method) -> Self {
        ReconReport {
            estimate,
            method,
            residual: None,
            trace: None,
            online_inverse_applications: 0,
            offline_inverse_applications: 0,
            duals_precomputed: false,
        }
    }

    /// Records the relative error against `reference`.
    pub fn with_reference(mut self, reference: &Vector) -> Self {
        self.residual = Some(relative_error(&self.estimate, reference));
        self
    }
}

/// `‖x − reference‖ / ‖reference‖`, or the absolute error for a zero reference.
pub fn relative_error(x: &Vector, reference: &Vector) -> f64 {
    let scale = reference.norm();
    let err = (x - reference).norm();
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Sensor-level scalars `c_i = {⟨f, f_ij⟩}_j`, one list per subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMeasurements {
    pub coeffs: Vec<Vector>,
}

impl LocalMeasurements {
    pub fn measure(ffs: &FusionFrameSystem, f: &Vector) -> Result<Self> {
        let coeffs = ffs
            .local_frames()
            .iter()
            .map(|frame| frames::analysis(frame, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalMeasurements { coeffs })
    }

    pub fn zeros(ffs: &FusionFrameSystem) -> Self {
        LocalMeasurements {
            coeffs: ffs.local_frames().iter().map(|f| Vector::zeros(f.len())).collect(),
        }
    }

    fn check(&self, ffs: &FusionFrameSystem) -> Result<()> {
        if self.coeffs.len() != ffs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} measurement lists for {} subspaces",
                self.coeffs.len(),
                ffs.len()
            )));
        }
        for (i, (c, frame)) in self.coeffs.iter().zip(ffs.local_frames()).enumerate() {
            if c.len() != frame.len() {
                return Err(Error::ShapeMismatch(format!(
                    "subspace {i}: {} measurements for {} local vectors",
                    c.len(),
                    frame.len()
                )));
            }
        }
        Ok(())
    }
}

/// Bounds of `ff`, or `NotAFrame` when the lower bound is numerically zero.
pub fn require_frame(ff: &FusionFrame) -> Result<FusionBounds> {
    let b = fusion_bounds(ff);
    if !b.is_frame {
        return Err(Error::NotAFrame {
            lower: b.lower,
            upper: b.upper,
        });
    }
    Ok(b)
}

fn fusion_solver(ff: &FusionFrame) -> Result<SpdSolver> {
    require_frame(ff)?;
    SpdSolver::new(&fusion_operator(ff)).map_err(|e| match e {
        Error::NotPD { min, max } => Error::NotAFrame {
            lower: min,
            upper: max,
        },
        other => other,
    })
}

/// `f = S_W⁻¹ Σ v_i c_i` for fusion coefficients `c_i = v_i π_{W_i} f`.
pub fn reconstruct_exact(ff: &FusionFrame, coeffs: &FusionCoefficients) -> Result<Vector> {
    let solver = fusion_solver(ff)?;
    solver.solve(&fusion::fusion_synthesis(ff, coeffs)?)
}

/// `f = Σ v_i² S_W⁻¹ (Σ_j ⟨f, f_ij⟩ f̃_ij)`: one solve per subspace.
pub fn reconstruct_local_fusion(
    ffs: &FusionFrameSystem,
    m: &LocalMeasurements,
) -> Result<ReconReport> {
    m.check(ffs)?;
    let solver = fusion_solver(ffs.fusion_frame())?;
    let mut estimate = Vector::zeros(ffs.ambient_dim());
    let mut applications = 0;
    for ((c, dual), coeffs) in ffs
        .fusion_frame()
        .components()
        .iter()
        .zip(ffs.local_duals())
        .zip(&m.coeffs)
    {
        let local = frames::synthesis(dual, coeffs)?;
        let fused = solver.solve(&local)?;
        applications += 1;
        estimate.axpy(c.weight * c.weight, &fused, 1.0);
    }
    let mut report = ReconReport::new(estimate, Method::LocalFusion);
    report.online_inverse_applications = applications;
    Ok(report)
}

/// Precomputed global duals `{S_W⁻¹ v_i f̃_ij}` and the weights needed to use
/// them with raw local measurements.
#[derive(Clone, Debug)]
pub struct FusedDual {
    duals: Frame,
    column_weights: Vec<f64>,
    offline_applications: usize,
}

impl FusedDual {
    pub fn precompute(ffs: &FusionFrameSystem) -> Result<Self> {
        let solver = fusion_solver(ffs.fusion_frame())?;
        let mut cols = Vec::with_capacity(ffs.total_local_vectors());
        let mut column_weights = Vec::with_capacity(ffs.total_local_vectors());
        for (c, dual) in ffs.fusion_frame().components().iter().zip(ffs.local_duals()) {
            for j in 0..dual.len() {
                cols.push(solver.solve(&(dual.vector(j) * c.weight))?);
                column_weights.push(c.weight);
            }
        }
        let offline_applications = cols.len();
        Ok(FusedDual {
            duals: Frame::new(Mat::from_vectors(ffs.ambient_dim(), &cols)?)?,
            column_weights,
            offline_applications,
        })
    }

    pub fn duals(&self) -> &Frame {
        &self.duals
    }

    pub fn offline_applications(&self) -> usize {
        self.offline_applications
    }

    /// `f = Σ_ij v_i ⟨f, f_ij⟩ (S_W⁻¹ v_i f̃_ij)`.
    pub fn reconstruct(&self, ffs: &FusionFrameSystem, m: &LocalMeasurements) -> Result<ReconReport> {
        m.check(ffs)?;
        if self.column_weights.len() != ffs.total_local_vectors() {
            return Err(Error::ShapeMismatch("fused duals belong to another system".into()));
        }
        let flat: Vec<f64> = m
            .coeffs
            .iter()
            .flat_map(|c| c.iter().copied())
            .zip(&self.column_weights)
            .map(|(c, w)| c * w)
            .collect();
        let estimate = frames::synthesis(&self.duals, &Vector::from_vec(flat))?;
        let mut report = ReconReport::new(estimate, Method::FusedDual);
        report.offline_inverse_applications = self.offline_applications;
        report.duals_precomputed = true;
        Ok(report)
    }
}

/// The flattened family `{S_W⁻¹ v_i f̃_ij}`, a dual frame of `{v_i f_ij}`.
pub fn fused_global_dual(ffs: &FusionFrameSystem) -> Result<Frame> {
    Ok(FusedDual::precompute(ffs)?.duals)
}

/// Worst-case reconstruction defect of the pair `({v_i f_ij}, {S_W⁻¹ v_i f̃_ij})`
/// in both orders, as operator norms `‖V Gᵀ − I‖`, `‖G Vᵀ − I‖`.
pub fn fused_dual_residual(ffs: &FusionFrameSystem) -> Result<f64> {
    let g = fused_global_dual(ffs)?;
    frames::dual_residual(&ffs.flattened(), &g)
}

pub fn reconstruct_fused_dual(
    ffs: &FusionFrameSystem,
    m: &LocalMeasurements,
) -> Result<ReconReport> {
    FusedDual::precompute(ffs)?.reconstruct(ffs, m)
}

/// Centralized reconstruction with the canonical dual `{S_F⁻¹ v_i f_ij}` of
/// the flattened frame.
pub fn reconstruct_centralized(
    ffs: &FusionFrameSystem,
    m: &LocalMeasurements,
) -> Result<ReconReport> {
    m.check(ffs)?;
    require_frame(ffs.fusion_frame())?;
    let flat = ffs.flattened();
    let canonical = frames::canonical_dual(&flat)?;
    let weighted: Vec<f64> = ffs
        .fusion_frame()
        .components()
        .iter()
        .zip(&m.coeffs)
        .flat_map(|(c, coeffs)| coeffs.iter().map(move |x| x * c.weight))
        .collect();
    let estimate = frames::synthesis(&canonical, &Vector::from_vec(weighted))?;
    Ok(ReconReport::new(estimate, Method::Centralized))
}

/// Runs the frame algorithm from `f₀ = 0` using only `S_W f` (obtained from
/// the coefficients) and applications of `S_W`. Stops after `n_max` steps or
/// as soon as the certified bound drops to `tol`.
pub fn reconstruct_iterative(
    ff: &FusionFrame,
    coeffs: &FusionCoefficients,
    n_max: usize,
    tol: f64,
    reference: Option<&Vector>,
) -> Result<ReconReport> {
    let b = require_frame(ff)?;
    let ratio = ((b.upper - b.lower) / (b.upper + b.lower)).max(0.0);
    let step = 2.0 / (b.lower + b.upper);
    let target = fusion::fusion_synthesis(ff, coeffs)?;

    let actual = |x: &Vector| reference.map(|r| relative_error(x, r));
    let mut estimate = Vector::zeros(ff.ambient_dim());
    let mut trace = vec![TraceRow {
        n: 0,
        bound: 1.0,
        actual_error: actual(&estimate),
    }];
    for n in 1..=n_max {
        if trace[n - 1].bound <= tol {
            break;
        }
        let applied = fusion::apply_fusion_operator(ff, &estimate)?;
        estimate.axpy(step, &(&target - applied), 1.0);
        trace.push(TraceRow {
            n,
            bound: ratio.powi(n as i32),
            actual_error: actual(&estimate),
        });
    }

    let mut report = ReconReport::new(estimate, Method::Iterative);
    report.trace = Some(trace);
    if let Some(r) = reference {
        report = report.with_reference(r);
    }
    Ok(report)
}

/// `‖Σ ⟨f, v_i f̃_ij⟩ S_W⁻¹ v_i f_ij − f‖` maximized over unit `f`, i.e. the
/// operator norm of `S_W⁻¹ V Ṽᵀ − I`.
pub fn dual_relation_check(ffs: &FusionFrameSystem) -> Result<f64> {
    let solver = fusion_solver(ffs.fusion_frame())?;
    let v = ffs.flattened();
    let vt = ffs.flattened_duals();
    let mut h = DMatrix::zeros(ffs.ambient_dim(), v.len());
    for j in 0..v.len() {
        h.set_column(j, &solver.solve(&v.vector(j))?);
    }
    let m = ffs.ambient_dim();
    let defect = h * vt.vectors().as_matrix().transpose() - DMatrix::identity(m, m);
    Ok(numkit::op_norm(&defect))
}

/// Largest relative column distance between the distributed duals
/// `{S_W⁻¹ v_i S_{F_i}⁺ f_ij}` and the centralized canonical duals
/// `{S_F⁻¹ v_i f_ij}` of the flattened frame.
pub fn canonical_dual_gap(ffs: &FusionFrameSystem) -> Result<f64> {
    let sw = fusion_solver(ffs.fusion_frame())?;
    let flat = ffs.flattened();
    let sf = SpdSolver::new(&frames::frame_operator(&flat)).map_err(|_| {
        let b = fusion_bounds(ffs.fusion_frame());
        Error::NotAFrame {
            lower: b.lower,
            upper: b.upper,
        }
    })?;
    let mut gap = 0.0f64;
    let mut col = 0;
    for (c, local) in ffs.fusion_frame().components().iter().zip(ffs.local_frames()) {
        let local_canonical = frames::canonical_dual(local)?;
        for j in 0..local.len() {
            let distributed = sw.solve(&(local_canonical.vector(j) * c.weight))?;
            let centralized = sf.solve(&flat.vector(col))?;
            col += 1;
            let scale = centralized.norm();
            let d = (&distributed - &centralized).norm();
            gap = gap.max(if scale > 0.0 { d / scale } else { d });
        }
    }
    Ok(gap)
}

/// How the fusion centre treats subspaces whose measurements went missing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropoutMode {
    /// Zeroed measurements fused with the original `S_W`.
    Undetected,
    /// `S_W` rebuilt over the surviving subspaces.
    Detected,
}

impl DropoutMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DropoutMode::Undetected => "undetected",
            DropoutMode::Detected => "detected",
        }
    }
}

/// Local-fusion reconstruction after the subspaces flagged in `dropped`
/// failed. Detected failures can leave a non-frame, reported as `NotAFrame`.
pub fn reconstruct_with_dropout(
    ffs: &FusionFrameSystem,
    m: &LocalMeasurements,
    dropped: &[bool],
    mode: DropoutMode,
) -> Result<ReconReport> {
    m.check(ffs)?;
    if dropped.len() != ffs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} dropout flags for {} subspaces",
            dropped.len(),
            ffs.len()
        )));
    }
    match mode {
        DropoutMode::Undetected => {
            let zeroed = LocalMeasurements {
                coeffs: m
                    .coeffs
                    .iter()
                    .zip(dropped)
                    .map(|(c, &d)| if d { Vector::zeros(c.len()) } else { c.clone() })
                    .collect(),
            };
            reconstruct_local_fusion(ffs, &zeroed)
        }
        DropoutMode::Detected => {
            let keep: Vec<usize> = (0..ffs.len()).filter(|&i| !dropped[i]).collect();
            if keep.is_empty() {
                return Err(Error::NotAFrame {
                    lower: 0.0,
                    upper: 0.0,
                });
            }
            let survivors = ffs.restrict(&keep)?;
            let kept = LocalMeasurements {
                coeffs: keep.iter().map(|&i| m.coeffs[i].clone()).collect(),
            };
            reconstruct_local_fusion(&survivors, &kept)
        }
    }
}
