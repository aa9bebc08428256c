//! Robustness of fusion frames under perturbation of the subspaces or of the
//! local frames.
//!
//! Two notions are measured:
//!
//! * subspaces `W`, `W̃` are a `(λ₁, λ₂, ε)`-perturbation when
//!   `‖(π_W − π_W̃) f‖ ≤ λ₁‖π_W f‖ + λ₂‖π_W̃ f‖ + ε‖f‖` for every `f`;
//! * frames `F`, `F̃` are a `(λ₁, λ₂)`-perturbation when
//!   `‖Σ aᵢ(fᵢ − f̃ᵢ)‖ ≤ λ₁‖Σ aᵢ fᵢ‖ + λ₂‖Σ aᵢ f̃ᵢ‖` for every `a`.
//!
//! The smallest admissible constants are sup-problems over a sphere. Each
//! is reported twice: a sampled projected-ascent estimate (may undershoot)
//! and a certified value that always satisfies the definition. Containment
//! checks use the certified value.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::fusion::{fusion_bounds, FusionFrame, FusionFrameSystem, Subspace};
use crate::numkit::{self, Mat, Vector, DEFAULT_RANK_TOL};
use crate::sampling::{self, SeededRng};

const ASCENT_STEPS: usize = 50;
const ASCENT_STEP: f64 = 0.1;
/// Relative slack for the containment flag.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// `(λ₁, λ₂, ε)` for a whole fusion frame and whether the defining
/// inequality survived a sampled check on each component.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubspacePerturbation {
    pub lambda1: f64,
    pub lambda2: f64,
    pub epsilon: f64,
    pub verified: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FramePerturbation {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// A sampled estimate and a certified upper value for the same constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub certified: f64,
}

fn check_lambdas(lambda1: f64, lambda2: f64) -> Result<()> {
    for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(0.0..1.0).contains(&l) {
            return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {l}")));
        }
    }
    Ok(())
}

/// Maximizes `value` over the unit sphere from each start, moving along the
/// tangential part of `gradient` and renormalizing after every step.
fn sphere_ascent(
    starts: impl IntoIterator<Item = Vector>,
    value: impl Fn(&Vector) -> f64,
    gradient: impl Fn(&Vector) -> Vector,
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for start in starts {
        let norm = start.norm();
        if !(norm > 0.0) {
            continue;
        }
        let mut x = start / norm;
        best = best.max(value(&x));
        for _ in 0..ASCENT_STEPS {
            let g = gradient(&x);
            let tangent = &g - &x * g.dot(&x);
            let next = &x + tangent * ASCENT_STEP;
            let n = next.norm();
            if !(n > 0.0) || !n.is_finite() {
                break;
            }
            x = next / n;
            best = best.max(value(&x));
        }
    }
    best
}

/// `u / ‖u‖`, or zero when `u = 0`.
fn unit_or_zero(u: Vector) -> Vector {
    let n = u.norm();
    if n > 0.0 {
        u / n
    } else {
        u
    }
}

/// Estimates the smallest `ε` for which `(W, W̃)` is a `(λ₁, λ₂, ε)`-perturbation.
///
/// `certified` is `‖π_W − π_W̃‖`, which is admissible for every `λ ≥ 0`.
pub fn subspace_epsilon(
    w: &Subspace,
    wt: &Subspace,
    lambda1: f64,
    lambda2: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if w.ambient_dim() != wt.ambient_dim() {
        return Err(Error::DimMismatch {
            expected: w.ambient_dim(),
            got: wt.ambient_dim(),
        });
    }
    check_lambdas(lambda1, lambda2)?;
    let p = w.projector().as_matrix();
    let q = wt.projector().as_matrix();
    let d = p - q;
    let certified = numkit::op_norm(&d);
    let m = w.ambient_dim();

    let value = |f: &Vector| (&d * f).norm() - lambda1 * (p * f).norm() - lambda2 * (q * f).norm();
    let gradient = |f: &Vector| {
        let df = &d * f;
        let mut g = &d * unit_or_zero(df);
        g -= unit_or_zero(p * f) * lambda1;
        g -= unit_or_zero(q * f) * lambda2;
        g
    };

    let mut rng = sampling::seeded(seed);
    let mut starts: Vec<Vector> = (0..samples).map(|_| sampling::unit_vector(&mut rng, m)).collect();
    // the top eigenvector of π_W − π_W̃ maximizes the λ = 0 functional
    let spec = numkit::sym_eig(&Mat::wrap(numkit::symmetrize(&d)))?;
    let top = if spec.max().abs() >= spec.min().abs() {
        spec.eigenvalues.len() - 1
    } else {
        0
    };
    starts.push(spec.eigenvectors.column(top));

    let estimate = sphere_ascent(starts, value, gradient).max(0.0);
    Ok(Estimate {
        estimate: estimate.min(certified),
        certified,
    })
}

/// The impossibility of a perturbation with `ε = 0`, as a falsifiable check:
/// a numerically zero `ε̂` must come with numerically equal projections.
pub fn no_perturbation_of_projection_check(
    w: &Subspace,
    wt: &Subspace,
    lambda1: f64,
    lambda2: f64,
    samples: usize,
    seed: u64,
) -> bool {
    match subspace_epsilon(w, wt, lambda1, lambda2, samples, seed) {
        Ok(e) => e.estimate > 1e-10 || e.certified <= 1e-8,
        Err(_) => false,
    }
}

impl SubspacePerturbation {
    /// Certifies `ff` → `perturbed` with `ε = max_i ‖π_{W_i} − π_{W̃_i}‖`
    /// and records whether the inequality held on `samples` random vectors
    /// for each component.
    pub fn certify(
        ff: &FusionFrame,
        perturbed: &FusionFrame,
        lambda1: f64,
        lambda2: f64,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        check_lambdas(lambda1, lambda2)?;
        if ff.len() != perturbed.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} subspaces against {} perturbed subspaces",
                ff.len(),
                perturbed.len()
            )));
        }
        let pairs: Vec<_> = ff.components().iter().zip(perturbed.components()).collect();
        let mut epsilon = 0.0f64;
        for (a, b) in &pairs {
            if a.subspace.ambient_dim() != b.subspace.ambient_dim() {
                return Err(Error::DimMismatch {
                    expected: a.subspace.ambient_dim(),
                    got: b.subspace.ambient_dim(),
                });
            }
            let d = a.subspace.projector().as_matrix() - b.subspace.projector().as_matrix();
            epsilon = epsilon.max(numkit::op_norm(&d));
        }
        let mut rng = sampling::seeded(seed);
        let m = ff.ambient_dim();
        let verified = pairs
            .iter()
            .map(|(a, b)| {
                (0..samples).all(|_| {
                    let f = sampling::unit_vector(&mut rng, m);
                    let pf = a.subspace.project(&f);
                    let qf = b.subspace.project(&f);
                    let lhs = (&pf - &qf).norm();
                    lhs <= lambda1 * pf.norm() + lambda2 * qf.norm() + epsilon + 1e-12
                })
            })
            .collect();
        Ok(SubspacePerturbation {
            lambda1,
            lambda2,
            epsilon,
            verified,
        })
    }
}

/// Bounds of `{(W̃_i, v_i)}` guaranteed for a `(λ₁, λ₂, ε)`-perturbation of
/// the fusion frame `ff`:
/// `[((1−λ₁)√C − ε√Σv²)/(1+λ₂)]²` and `[(√D(1+λ₁) + ε√Σv²)/(1−λ₂)]²`.
pub fn predicted_bounds_subspace(
    ff: &FusionFrame,
    lambda1: f64,
    lambda2: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    check_lambdas(lambda1, lambda2)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let b = fusion_bounds(ff);
    let spread = epsilon * ff.weight_energy().sqrt();
    let margin = (1.0 - lambda1) * b.lower.sqrt() - spread;
    if !(margin > 0.0) {
        return Err(Error::HypothesisViolated { margin });
    }
    let lower = (margin / (1.0 + lambda2)).powi(2);
    let upper = ((b.upper.sqrt() * (1.0 + lambda1) + spread) / (1.0 - lambda2)).powi(2);
    Ok((lower, upper))
}

fn check_same_shape(f: &Frame, ft: &Frame) -> Result<()> {
    if f.ambient_dim() != ft.ambient_dim() || f.len() != ft.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} frame against {}x{} frame",
            f.ambient_dim(),
            f.len(),
            ft.ambient_dim(),
            ft.len()
        )));
    }
    Ok(())
}

/// Smallest singular value of the synthesis map `a ↦ Σ aᵢ fᵢ`, zero when it
/// has a kernel.
fn synthesis_floor(f: &DMatrix<f64>) -> f64 {
    let sv = numkit::singular_values(f);
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > DEFAULT_RANK_TOL * smax).count();
    if smax == 0.0 || rank < f.ncols() {
        0.0
    } else {
        sv[sv.len() - 1]
    }
}

/// Estimates the smallest symmetric `λ` with `(F, F̃)` a `(λ, λ)`-perturbation,
/// `λ̂ = sup_a ‖(F − F̃)a‖ / (‖Fa‖ + ‖F̃a‖)`.
///
/// `certified` is `‖F − F̃‖ / (σ_min(F) + σ_min(F̃))`. It is conservative
/// and infinite as soon as both synthesis maps have a kernel while `F ≠ F̃`.
pub fn frame_perturbation_lambda(f: &Frame, ft: &Frame, samples: usize, seed: u64) -> Result<Estimate> {
    check_same_shape(f, ft)?;
    let a_mat = f.vectors().as_matrix();
    let b_mat = ft.vectors().as_matrix();
    let e = a_mat - b_mat;
    let e_norm = numkit::op_norm(&e);
    if e_norm == 0.0 {
        return Ok(Estimate {
            estimate: 0.0,
            certified: 0.0,
        });
    }
    let floor = synthesis_floor(a_mat) + synthesis_floor(b_mat);
    let certified = if floor > 0.0 { e_norm / floor } else { f64::INFINITY };

    // below this the quotient is rounding noise of a common kernel direction
    let negligible = 1e-10 * (numkit::op_norm(a_mat) + numkit::op_norm(b_mat));
    let ratio = |a: &Vector| {
        let den = (a_mat * a).norm() + (b_mat * a).norm();
        if den > negligible * a.norm() {
            (&e * a).norm() / den
        } else {
            0.0
        }
    };
    let gradient = |a: &Vector| {
        let ea = &e * a;
        let fa = a_mat * a;
        let fta = b_mat * a;
        let num = ea.norm();
        let den = fa.norm() + fta.norm();
        if !(den > negligible * a.norm()) {
            return Vector::zeros(a.len());
        }
        let d_num = e.tr_mul(&unit_or_zero(ea));
        let d_den = a_mat.tr_mul(&unit_or_zero(fa)) + b_mat.tr_mul(&unit_or_zero(fta));
        d_num / den - d_den * (num / (den * den))
    };

    let n = f.len();
    let mut rng = sampling::seeded(seed);
    let mut starts: Vec<Vector> = (0..samples).map(|_| sampling::unit_vector(&mut rng, n)).collect();
    // directions where the denominators are smallest or the numerator largest
    for g in [a_mat.tr_mul(a_mat), b_mat.tr_mul(b_mat)] {
        let spec = numkit::sym_eig(&Mat::wrap(numkit::symmetrize(&g)))?;
        starts.push(spec.eigenvectors.column(0));
    }
    let spec = numkit::sym_eig(&Mat::wrap(numkit::symmetrize(&e.tr_mul(&e))))?;
    starts.push(spec.eigenvectors.column(n - 1));

    let estimate = sphere_ascent(starts, ratio, gradient).max(0.0);
    Ok(Estimate { estimate, certified })
}

/// `κ = (1−λ₁)/(1+λ₂) − λ₁(1+λ₂)/(1−λ₁) − λ₂`.
pub fn kappa(lambda1: f64, lambda2: f64) -> f64 {
    (1.0 - lambda1) / (1.0 + lambda2) - lambda1 * (1.0 + lambda2) / (1.0 - lambda1) - lambda2
}

/// Observed consequences of a `(λ₁, λ₂)`-perturbation of frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Equivalence {
    /// Extremes of `‖Fa‖ / ‖F̃a‖` over the sampled coefficient vectors.
    pub ratio_low: f64,
    pub ratio_high: f64,
    /// `[(1−λ₁)/(1+λ₂), (1+λ₂)/(1−λ₁)]`.
    pub envelope: (f64, f64),
    pub dim_equal: bool,
    /// `min ‖π_W π_W̃ f‖ / ‖π_W̃ f‖` over the sampled `f`.
    pub iso_const: f64,
    /// The same minimum over all of `W̃`.
    pub iso_const_exact: f64,
    pub kappa: f64,
}

impl Equivalence {
    pub fn ratios_within_envelope(&self, tol: f64) -> bool {
        self.ratio_low >= self.envelope.0 * (1.0 - tol) && self.ratio_high <= self.envelope.1 * (1.0 + tol)
    }

    /// `iso_const ≥ κ`, vacuous when `κ ≤ 0`.
    pub fn isomorphism_holds(&self, tol: f64) -> bool {
        self.kappa <= 0.0 || (self.iso_const >= self.kappa - tol && self.iso_const_exact >= self.kappa - tol)
    }
}

pub fn equivalence_check(
    f: &Frame,
    ft: &Frame,
    lambda1: f64,
    lambda2: f64,
    samples: usize,
    seed: u64,
) -> Result<Equivalence> {
    check_lambdas(lambda1, lambda2)?;
    let measured = frame_perturbation_lambda(f, ft, samples, seed)?.estimate;
    if measured > lambda1.max(lambda2) + 1e-9 {
        return Err(Error::NotAPerturbation {
            lambda1,
            lambda2,
            measured,
        });
    }
    let a_mat = f.vectors().as_matrix();
    let b_mat = ft.vectors().as_matrix();
    let mut rng = sampling::seeded_stream(seed, 1);

    let mut ratio_low = f64::INFINITY;
    let mut ratio_high = 0.0f64;
    for _ in 0..samples {
        let a = sampling::gaussian_vector(&mut rng, f.len());
        let (x, y) = ((a_mat * &a).norm(), (b_mat * &a).norm());
        if y > 0.0 {
            ratio_low = ratio_low.min(x / y);
            ratio_high = ratio_high.max(x / y);
        }
    }
    if ratio_high == 0.0 {
        ratio_low = 1.0;
        ratio_high = 1.0;
    }

    let w = Subspace::from_vectors(f.vectors(), DEFAULT_RANK_TOL)?;
    let wt = Subspace::from_vectors(ft.vectors(), DEFAULT_RANK_TOL)?;
    let m = f.ambient_dim();
    let mut iso_const = f64::INFINITY;
    for _ in 0..samples {
        let g = wt.project(&sampling::gaussian_vector(&mut rng, m));
        let n = g.norm();
        if n > 1e-12 {
            iso_const = iso_const.min(w.project(&g).norm() / n);
        }
    }
    let cross = w.basis().as_matrix().tr_mul(wt.basis().as_matrix());
    let gram = cross.tr_mul(&cross);
    let iso_const_exact = numkit::sym_eig(&Mat::wrap(numkit::symmetrize(&gram)))?.min().max(0.0).sqrt();
    if !iso_const.is_finite() {
        iso_const = iso_const_exact;
    }

    Ok(Equivalence {
        ratio_low,
        ratio_high,
        envelope: ((1.0 - lambda1) / (1.0 + lambda2), (1.0 + lambda2) / (1.0 - lambda1)),
        dim_equal: w.dim() == wt.dim(),
        iso_const,
        iso_const_exact,
        kappa: kappa(lambda1, lambda2),
    })
}

/// Guaranteed bounds after a `(λ₁, λ₂)`-perturbation of every local frame:
/// `ε = √(2(1−κ))`, `[√C − ε√Σv²]²`, `[√D + ε√Σv²]²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalPrediction {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn predicted_bounds_local(ffs: &FusionFrameSystem, lambda1: f64, lambda2: f64) -> Result<LocalPrediction> {
    check_lambdas(lambda1, lambda2)?;
    let epsilon = (2.0 * (1.0 - kappa(lambda1, lambda2))).max(0.0).sqrt();
    let b = fusion_bounds(ffs.fusion_frame());
    let spread = epsilon * ffs.fusion_frame().weight_energy().sqrt();
    let margin = b.lower.sqrt() - spread;
    if !(margin > 0.0) {
        return Err(Error::HypothesisViolated { margin });
    }
    Ok(LocalPrediction {
        epsilon,
        lower: margin * margin,
        upper: (b.upper.sqrt() + spread).powi(2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbMode {
    SubspaceRotate,
    LocalFrameJitter,
}

impl PerturbMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PerturbMode::SubspaceRotate => "subspace-rotate",
            PerturbMode::LocalFrameJitter => "local-frame-jitter",
        }
    }
}

impl fmt::Display for PerturbMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subspace-rotate" => Ok(PerturbMode::SubspaceRotate),
            "local-frame-jitter" => Ok(PerturbMode::LocalFrameJitter),
            other => Err(Error::InvalidArgument(format!(
                "unknown perturbation mode {other:?} (expected subspace-rotate or local-frame-jitter)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub mode: PerturbMode,
    pub noise_scale: f64,
    /// Certified ε (rotation) or λ (jitter).
    pub measured: f64,
    pub hypothesis_pass: bool,
    pub predicted_lower: Option<f64>,
    pub predicted_upper: Option<f64>,
    pub actual_lower: f64,
    pub actual_upper: f64,
    /// Only meaningful when the hypothesis passed.
    pub contained: Option<bool>,
}

/// A trial dropped because jitter changed the numerical rank of a local frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscardedTrial {
    pub trial: usize,
    pub subspace: usize,
    pub rank_before: usize,
    pub rank_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub rows: Vec<TrialRow>,
    pub discarded: Vec<DiscardedTrial>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationSummary {
    pub trials: usize,
    pub discarded: usize,
    pub hypothesis_passed: usize,
    pub contained: usize,
    /// `contained / hypothesis_passed`; absent when no trial passed the gate.
    pub containment_rate: Option<f64>,
}

impl PerturbationReport {
    pub fn summary(&self) -> PerturbationSummary {
        let passed = self.rows.iter().filter(|r| r.hypothesis_pass).count();
        let contained = self.rows.iter().filter(|r| r.contained == Some(true)).count();
        PerturbationSummary {
            trials: self.rows.len() + self.discarded.len(),
            discarded: self.discarded.len(),
            hypothesis_passed: passed,
            contained,
            containment_rate: (passed > 0).then(|| contained as f64 / passed as f64),
        }
    }
}

/// Rotates `w` by a random angle in `[0, max_angle]` inside the plane of a
/// random unit `u ∈ W` and a random unit `w⊥ ⊥ W`. Whole-space subspaces are
/// returned unchanged.
pub fn rotate_subspace(w: &Subspace, max_angle: f64, rng: &mut SeededRng) -> Result<Subspace> {
    let m = w.ambient_dim();
    if w.dim() == m || max_angle == 0.0 {
        return Ok(w.clone());
    }
    let basis = w.basis().as_matrix();
    let u = unit_or_zero(basis * sampling::unit_vector(rng, w.dim()));
    let perp = loop {
        let g = sampling::gaussian_vector(rng, m);
        let r = &g - w.project(&g);
        if r.norm() > 1e-8 * g.norm() {
            // second pass keeps it orthogonal to working precision
            let r = &r - w.project(&r);
            break unit_or_zero(r);
        }
    };
    let theta = max_angle * rand::Rng::random::<f64>(rng);
    let (s, c) = theta.sin_cos();
    let rot = DMatrix::identity(m, m)
        + (&u * u.transpose() + &perp * perp.transpose()) * (c - 1.0)
        + (&perp * u.transpose() - &u * perp.transpose()) * s;
    Subspace::from_basis_or_span(Mat::from_matrix(rot * basis)?)
}

fn contained(pred: (f64, f64), actual: (f64, f64)) -> bool {
    actual.0 >= pred.0 * (1.0 - CONTAINMENT_TOL) && actual.1 <= pred.1 * (1.0 + CONTAINMENT_TOL)
}

/// Replays the perturbation theorems on `trials` random perturbations of
/// `ffs`. Trial `t` draws from stream `t` of `seed`.
pub fn perturbation_experiment(
    ffs: &FusionFrameSystem,
    noise_scale: f64,
    mode: PerturbMode,
    trials: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    if !(noise_scale >= 0.0) || !noise_scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise scale must be finite and >= 0, got {noise_scale}"
        )));
    }
    let mut report = PerturbationReport {
        rows: Vec::with_capacity(trials),
        discarded: Vec::new(),
    };
    let ff = ffs.fusion_frame();
    for trial in 0..trials {
        let mut rng = sampling::seeded_stream(seed, trial as u64);
        let (perturbed, measured, prediction) = match mode {
            PerturbMode::SubspaceRotate => {
                let subspaces = ff
                    .components()
                    .iter()
                    .map(|c| rotate_subspace(&c.subspace, noise_scale, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                let perturbed = ff.with_subspaces(subspaces)?;
                let eps = SubspacePerturbation::certify(ff, &perturbed, 0.0, 0.0, 0, 0)?.epsilon;
                let prediction = predicted_bounds_subspace(ff, 0.0, 0.0, eps);
                (perturbed, eps, prediction)
            }
            PerturbMode::LocalFrameJitter => {
                let mut subspaces = Vec::with_capacity(ff.len());
                let mut lambda = 0.0f64;
                let mut dropped = None;
                for (i, frame) in ffs.local_frames().iter().enumerate() {
                    let noise = sampling::gaussian_matrix(&mut rng, frame.ambient_dim(), frame.len());
                    let jittered = Frame::new(Mat::from_matrix(frame.vectors().as_matrix() + noise * noise_scale)?)?;
                    let before = numkit::numerical_rank(frame.vectors(), DEFAULT_RANK_TOL);
                    let after = numkit::numerical_rank(jittered.vectors(), DEFAULT_RANK_TOL);
                    if before != after {
                        dropped.get_or_insert(DiscardedTrial {
                            trial,
                            subspace: i,
                            rank_before: before,
                            rank_after: after,
                        });
                        continue;
                    }
                    lambda = lambda.max(frame_perturbation_lambda(frame, &jittered, 0, 0)?.certified);
                    subspaces.push(Subspace::from_vectors(jittered.vectors(), DEFAULT_RANK_TOL)?);
                }
                if let Some(d) = dropped {
                    report.discarded.push(d);
                    continue;
                }
                let perturbed = ff.with_subspaces(subspaces)?;
                let prediction = if lambda < 1.0 {
                    predicted_bounds_local(ffs, lambda, lambda).map(|p| (p.lower, p.upper))
                } else {
                    Err(Error::HypothesisViolated { margin: f64::NEG_INFINITY })
                };
                (perturbed, lambda, prediction)
            }
        };
        let b = fusion_bounds(&perturbed);
        let actual = (b.lower, b.upper);
        let row = match prediction {
            Ok(pred) => TrialRow {
                trial,
                mode,
                noise_scale,
                measured,
                hypothesis_pass: true,
                predicted_lower: Some(pred.0),
                predicted_upper: Some(pred.1),
                actual_lower: actual.0,
                actual_upper: actual.1,
                contained: Some(contained(pred, actual)),
            },
            Err(Error::HypothesisViolated { .. }) => TrialRow {
                trial,
                mode,
                noise_scale,
                measured,
                hypothesis_pass: false,
                predicted_lower: None,
                predicted_upper: None,
                actual_lower: actual.0,
                actual_upper: actual.1,
                contained: None,
            },
            Err(e) => return Err(e),
        };
        report.rows.push(row);
    }
    Ok(report)
}
