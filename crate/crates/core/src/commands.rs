//! Experiment drivers behind the command-line tool. Each returns the full
//! text of its output so callers decide where it goes; the same inputs and
//! seed always give byte-identical text.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixture::Fixture;
use crate::fusion::{
    fusion_analysis, fusion_bounds, fusion_operator, fusion_operator_via_locals, local_global_bounds,
    redundancy, FusionFrameSystem,
};
use crate::generate::{self, RandomSpec};
use crate::numkit::{self, Vector};
use crate::perturb::{self, PerturbMode, PerturbationSummary};
use crate::recon::{self, DropoutMode, FusedDual, LocalMeasurements, Method, ReconReport};
use crate::sampling;

/// Decimal rendering used in every CSV: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer does not fail");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

fn write_row<I, S>(w: &mut csv::Writer<Vec<u8>>, row: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).expect("in-memory writer does not fail");
}

#[derive(Clone, Debug, PartialEq)]
pub enum GenerateKind {
    Random(RandomSpec),
    /// Gaussian frame of `vectors` vectors split into `blocks` overlapping blocks.
    Split {
        ambient_dim: usize,
        vectors: usize,
        blocks: usize,
        overlap: usize,
    },
    /// Coordinate blocks of `ℝ^M`.
    Orthonormal { ambient_dim: usize, blocks: usize },
}

/// Fixture JSON for a generated system.
pub fn cmd_generate(kind: &GenerateKind, seed: u64) -> Result<String> {
    let ffs = match kind {
        GenerateKind::Random(spec) => generate::random_system(spec, seed)?,
        GenerateKind::Split {
            ambient_dim,
            vectors,
            blocks,
            overlap,
        } => generate::split_system(*ambient_dim, *vectors, *blocks, *overlap, seed)?,
        GenerateKind::Orthonormal { ambient_dim, blocks } => generate::orthonormal_system(*ambient_dim, *blocks)?,
    };
    Ok(Fixture::from_system(&ffs).to_json())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub ambient_dim: usize,
    pub subspaces: usize,
    pub lower: f64,
    pub upper: f64,
    pub is_frame: bool,
    pub is_tight: bool,
    pub is_parseval: bool,
    pub is_orthonormal_fusion_basis: bool,
    pub redundancy: f64,
    pub local_lower: f64,
    pub local_upper: f64,
    pub predicted_flattened_lower: f64,
    pub predicted_flattened_upper: f64,
    pub actual_flattened_lower: f64,
    pub actual_flattened_upper: f64,
    pub flattened_within_predicted: bool,
    pub operator_agreement_residual: f64,
}

pub fn check(ffs: &FusionFrameSystem) -> CheckReport {
    let ff = ffs.fusion_frame();
    let b = fusion_bounds(ff);
    let local = ffs.local_bounds();
    let lg = local_global_bounds(ffs);
    let agreement = numkit::op_norm(
        &(fusion_operator(ff).as_matrix() - fusion_operator_via_locals(ffs).as_matrix()),
    );
    CheckReport {
        ambient_dim: ffs.ambient_dim(),
        subspaces: ffs.len(),
        lower: b.lower,
        upper: b.upper,
        is_frame: b.is_frame,
        is_tight: b.is_tight,
        is_parseval: b.is_parseval,
        is_orthonormal_fusion_basis: b.is_orthonormal_fusion_basis,
        redundancy: redundancy(ff),
        local_lower: local.lower,
        local_upper: local.upper,
        predicted_flattened_lower: lg.predicted.0,
        predicted_flattened_upper: lg.predicted.1,
        actual_flattened_lower: lg.actual.0,
        actual_flattened_upper: lg.actual.1,
        flattened_within_predicted: lg.contains(1e-9),
        operator_agreement_residual: agreement,
    }
}

/// JSON check report. A system that is not a frame still gets its report;
/// the error carries the bounds for the caller's exit status.
pub fn cmd_check(ffs: &FusionFrameSystem) -> (String, Result<()>) {
    let report = check(ffs);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    let status = if report.is_frame {
        Ok(())
    } else {
        Err(Error::NotAFrame {
            lower: report.lower,
            upper: report.upper,
        })
    };
    (text, status)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconConfig {
    pub seed: u64,
    /// Signal to reconstruct; drawn uniformly from the unit sphere when absent.
    pub signal: Option<Vec<f64>>,
    /// Standard deviation of Gaussian noise on each local coefficient.
    pub sigma: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub timings: bool,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            seed: 0,
            signal: None,
            sigma: 0.0,
            max_iterations: 1000,
            tolerance: 1e-12,
            timings: false,
        }
    }
}

pub const RECON_HEADER: [&str; 8] = [
    "row",
    "method",
    "n",
    "residual",
    "bound",
    "online_inverse_applications",
    "offline_inverse_applications",
    "wall_time_s",
];

fn signal_for(ffs: &FusionFrameSystem, cfg: &ReconConfig) -> Result<Vector> {
    let m = ffs.ambient_dim();
    match &cfg.signal {
        Some(v) if v.len() != m => Err(Error::DimMismatch {
            expected: m,
            got: v.len(),
        }),
        Some(v) => Ok(Vector::from_column_slice(v)),
        None => Ok(sampling::unit_vector(&mut sampling::seeded(cfg.seed), m)),
    }
}

fn add_noise(m: &LocalMeasurements, sigma: f64, rng: &mut sampling::SeededRng) -> LocalMeasurements {
    if sigma == 0.0 {
        return m.clone();
    }
    LocalMeasurements {
        coeffs: m
            .coeffs
            .iter()
            .map(|c| c + sampling::gaussian_vector(rng, c.len()) * sigma)
            .collect(),
    }
}

/// Runs every reconstruction route on one signal. Rows: one per method,
/// then the iterative trace.
pub fn cmd_recon(ffs: &FusionFrameSystem, cfg: &ReconConfig) -> Result<String> {
    recon::require_frame(ffs.fusion_frame())?;
    let f = signal_for(ffs, cfg)?;
    let mut rng = sampling::seeded_stream(cfg.seed, 1);
    let clean = LocalMeasurements::measure(ffs, &f)?;
    let m = add_noise(&clean, cfg.sigma, &mut rng);

    let timed = |run: &dyn Fn() -> Result<ReconReport>| -> Result<(ReconReport, f64)> {
        let start = Instant::now();
        let r = run()?;
        Ok((r.with_reference(&f), start.elapsed().as_secs_f64()))
    };
    let mut reports = vec![
        timed(&|| recon::reconstruct_local_fusion(ffs, &m))?,
        timed(&|| FusedDual::precompute(ffs)?.reconstruct(ffs, &m))?,
    ];
    // the iterative route starts from fusion coefficients v_i π_i f, rebuilt
    // locally from the (possibly noisy) measurements
    let coeffs = if cfg.sigma == 0.0 {
        fusion_analysis(ffs.fusion_frame(), &f)?
    } else {
        local_fusion_coefficients(ffs, &m)?
    };
    reports.push(timed(&|| {
        recon::reconstruct_iterative(ffs.fusion_frame(), &coeffs, cfg.max_iterations, cfg.tolerance, Some(&f))
    })?);
    reports.push(timed(&|| recon::reconstruct_centralized(ffs, &m))?);

    let mut w = csv_writer();
    write_row(&mut w, RECON_HEADER);
    for (r, secs) in &reports {
        let (n, bound) = match &r.trace {
            Some(t) => {
                let last = t.last().expect("trace has the n = 0 row");
                (last.n.to_string(), fmt_f64(last.bound))
            }
            None => (String::new(), String::new()),
        };
        write_row(
            &mut w,
            [
                "method".to_string(),
                r.method.to_string(),
                n,
                fmt_opt(r.residual),
                bound,
                r.online_inverse_applications.to_string(),
                r.offline_inverse_applications.to_string(),
                if cfg.timings { fmt_f64(*secs) } else { String::new() },
            ],
        );
    }
    let iterative = reports.iter().find(|(r, _)| r.method == Method::Iterative).expect("iterative ran");
    for row in iterative.0.trace.as_deref().unwrap_or_default() {
        write_row(
            &mut w,
            [
                "trace".to_string(),
                Method::Iterative.to_string(),
                row.n.to_string(),
                fmt_opt(row.actual_error),
                fmt_f64(row.bound),
                String::new(),
                String::new(),
                String::new(),
            ],
        );
    }
    Ok(finish(w))
}

/// `v_i F̃_i c_i`, the fusion coefficients implied by local measurements.
fn local_fusion_coefficients(
    ffs: &FusionFrameSystem,
    m: &LocalMeasurements,
) -> Result<crate::fusion::FusionCoefficients> {
    let mut entries = Vec::with_capacity(ffs.len());
    for ((c, dual), coeffs) in ffs.fusion_frame().components().iter().zip(ffs.local_duals()).zip(&m.coeffs) {
        let local = crate::frames::synthesis(dual, coeffs)?;
        // project so that noise stays inside W_i
        entries.push(c.subspace.project(&local) * c.weight);
    }
    Ok(crate::fusion::FusionCoefficients {
        entries,
        weights: ffs.fusion_frame().weights(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbConfig {
    pub seed: u64,
    pub noise_scale: f64,
    pub mode: PerturbMode,
    pub trials: usize,
}

pub const PERTURB_HEADER: [&str; 10] = [
    "trial",
    "mode",
    "noise_scale",
    "measured",
    "hypothesis_pass",
    "predicted_lower",
    "predicted_upper",
    "actual_lower",
    "actual_upper",
    "contained",
];

/// Per-trial CSV and the containment summary.
pub fn cmd_perturb(ffs: &FusionFrameSystem, cfg: &PerturbConfig) -> Result<(String, PerturbationSummary)> {
    let report = perturb::perturbation_experiment(ffs, cfg.noise_scale, cfg.mode, cfg.trials, cfg.seed)?;
    let mut w = csv_writer();
    write_row(&mut w, PERTURB_HEADER);
    for r in &report.rows {
        write_row(
            &mut w,
            [
                r.trial.to_string(),
                r.mode.to_string(),
                fmt_f64(r.noise_scale),
                fmt_f64(r.measured),
                r.hypothesis_pass.to_string(),
                fmt_opt(r.predicted_lower),
                fmt_opt(r.predicted_upper),
                fmt_f64(r.actual_lower),
                fmt_f64(r.actual_upper),
                r.contained.map(|c| c.to_string()).unwrap_or_default(),
            ],
        );
    }
    Ok((finish(w), report.summary()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateConfig {
    pub seed: u64,
    pub sigmas: Vec<f64>,
    pub dropouts: Vec<f64>,
    pub trials: usize,
}

pub const SIMULATE_HEADER: [&str; 8] = [
    "sigma",
    "dropout",
    "mode",
    "trials",
    "failures",
    "mean_error",
    "median_error",
    "max_error",
];

/// One grid cell of the sensor-network simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationCell {
    pub sigma: f64,
    pub dropout: f64,
    pub mode: DropoutMode,
    pub trials: usize,
    /// Trials where the surviving subspaces no longer formed a fusion frame.
    pub failures: usize,
    pub mean_error: Option<f64>,
    pub median_error: Option<f64>,
    pub max_error: Option<f64>,
}

/// Trial `t` of every cell draws from stream `t` of the seed, so cells
/// share signals and noise patterns and differ only in their parameters.
pub fn simulate(ffs: &FusionFrameSystem, cfg: &SimulateConfig) -> Result<Vec<SimulationCell>> {
    recon::require_frame(ffs.fusion_frame())?;
    for &s in &cfg.sigmas {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {s}")));
        }
    }
    for &p in &cfg.dropouts {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("dropout must lie in [0, 1], got {p}")));
        }
    }
    let m = ffs.ambient_dim();
    let mut cells = Vec::new();
    for &sigma in &cfg.sigmas {
        for &dropout in &cfg.dropouts {
            for mode in [DropoutMode::Undetected, DropoutMode::Detected] {
                let mut errors = Vec::with_capacity(cfg.trials);
                let mut failures = 0;
                for t in 0..cfg.trials {
                    let mut rng = sampling::seeded_stream(cfg.seed, t as u64);
                    let f = sampling::unit_vector(&mut rng, m);
                    let clean = LocalMeasurements::measure(ffs, &f)?;
                    let noisy = add_noise(&clean, sigma, &mut rng);
                    let dropped: Vec<bool> = (0..ffs.len())
                        .map(|_| rand::Rng::random::<f64>(&mut rng) < dropout)
                        .collect();
                    match recon::reconstruct_with_dropout(ffs, &noisy, &dropped, mode) {
                        Ok(r) => errors.push(recon::relative_error(&r.estimate, &f)),
                        Err(Error::NotAFrame { .. }) => failures += 1,
                        Err(e) => return Err(e),
                    }
                }
                let (mean, median, max) = summarize(&mut errors);
                cells.push(SimulationCell {
                    sigma,
                    dropout,
                    mode,
                    trials: cfg.trials,
                    failures,
                    mean_error: mean,
                    median_error: median,
                    max_error: max,
                });
            }
        }
    }
    Ok(cells)
}

fn summarize(errors: &mut [f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    if errors.is_empty() {
        return (None, None, None);
    }
    let n = errors.len();
    let mean = errors.iter().sum::<f64>() / n as f64;
    errors.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        errors[n / 2]
    } else {
        0.5 * (errors[n / 2 - 1] + errors[n / 2])
    };
    (Some(mean), Some(median), Some(errors[n - 1]))
}

pub fn cmd_simulate(ffs: &FusionFrameSystem, cfg: &SimulateConfig) -> Result<String> {
    let cells = simulate(ffs, cfg)?;
    let mut w = csv_writer();
    write_row(&mut w, SIMULATE_HEADER);
    for c in &cells {
        write_row(
            &mut w,
            [
                fmt_f64(c.sigma),
                fmt_f64(c.dropout),
                c.mode.as_str().to_string(),
                c.trials.to_string(),
                c.failures.to_string(),
                fmt_opt(c.mean_error),
                fmt_opt(c.median_error),
                fmt_opt(c.max_error),
            ],
        );
    }
    Ok(finish(w))
}
